//! Maximum bolt span as a function of housing thickness.
//!
//! `spancal v1` files hold one `thickness span` pair per line.

use std::fmt::Write as _;

use thiserror::Error;

use crate::ingest::text::{decode_utf8, expect_header, tokenize, SyntaxError};

pub const MIN_THICKNESS: f64 = 1.0;
pub const MAX_THICKNESS: f64 = 5.0;
/// Measured span limit at the anchor thickness.
pub const ANCHOR: (f64, f64) = (3.0, 27.0);
const ANCHOR_TOLERANCE: f64 = 1e-6;
const DEFAULT_SLOPE: f64 = ANCHOR.1 / ANCHOR.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("calibration syntax error: {0}")]
    Syntax(#[from] SyntaxError),
    #[error("calibration table is empty")]
    Empty,
    #[error("thickness {0} mm is outside [1, 5] mm")]
    ThicknessOutOfRange(f64),
    #[error("span {0} mm must be positive")]
    NonPositiveSpan(f64),
    #[error("thickness values must be strictly increasing")]
    NotSorted,
    #[error("span must not decrease with thickness")]
    NotMonotone,
    #[error("table gives {found} mm at 3 mm, expected 27 mm")]
    AnchorMismatch { found: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpanError {
    #[error("thickness {thickness} mm is outside the calibrated range [{min}, {max}] mm")]
    OutOfCalibratedRange { thickness: f64, min: f64, max: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpanCalibration {
    points: Vec<(f64, f64)>,
    calibrated: bool,
}

impl SpanCalibration {
    /// Validated table of (thickness, span) points.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, CalibrationError> {
        if points.is_empty() {
            return Err(CalibrationError::Empty);
        }
        for &(t, s) in &points {
            if !(MIN_THICKNESS..=MAX_THICKNESS).contains(&t) {
                return Err(CalibrationError::ThicknessOutOfRange(t));
            }
            if !(s.is_finite() && s > 0.0) {
                return Err(CalibrationError::NonPositiveSpan(s));
            }
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(CalibrationError::NotSorted);
            }
            if w[1].1 < w[0].1 {
                return Err(CalibrationError::NotMonotone);
            }
        }
        let cal = Self { points, calibrated: true };
        if let Ok(found) = cal.interpolate(ANCHOR.0) {
            if (found - ANCHOR.1).abs() > ANCHOR_TOLERANCE {
                return Err(CalibrationError::AnchorMismatch { found });
            }
        }
        Ok(cal)
    }

    /// Linear model through the anchor, sampled every 0.5 mm over [1, 5].
    /// Flagged as uncalibrated.
    pub fn default_model() -> Self {
        let points = (0..=8)
            .map(|i| {
                let t = MIN_THICKNESS + 0.5 * i as f64;
                (t, DEFAULT_SLOPE * t)
            })
            .collect();
        Self { points, calibrated: false }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// False for the built-in linear model.
    pub fn is_calibrated(&self) -> bool {
        self.calibrated
    }

    pub fn status(&self) -> &'static str {
        if self.calibrated {
            "CALIBRATED"
        } else {
            "UNCALIBRATED (default linear model)"
        }
    }

    fn interpolate(&self, t: f64) -> Result<f64, SpanError> {
        let (t0, s0) = self.points[0];
        let (tn, sn) = *self.points.last().expect("non-empty");
        if !t.is_finite() || t < t0 || !(MIN_THICKNESS..=MAX_THICKNESS).contains(&t) {
            return Err(SpanError::OutOfCalibratedRange { thickness: t, min: t0.max(MIN_THICKNESS), max: MAX_THICKNESS });
        }
        if t <= t0 {
            return Ok(s0);
        }
        if t >= tn {
            return Ok(sn);
        }
        let i = self.points.partition_point(|p| p.0 <= t);
        let (ta, sa) = self.points[i - 1];
        let (tb, sb) = self.points[i];
        if t == ta {
            return Ok(sa);
        }
        Ok(sa + (sb - sa) * (t - ta) / (tb - ta))
    }
}

impl Default for SpanCalibration {
    fn default() -> Self {
        Self::default_model()
    }
}

/// Largest bolt separation that still keeps every contact between the
/// bolts pressed. Piecewise-linear in the table; clamps above the last
/// point and refuses thicknesses below the first.
pub fn max_span(thickness: f64, cal: &SpanCalibration) -> Result<f64, SpanError> {
    cal.interpolate(thickness)
}

pub fn parse_calibration(bytes: &[u8]) -> Result<SpanCalibration, CalibrationError> {
    let src = decode_utf8(bytes)?;
    let lines = tokenize(src)?;
    let body = expect_header(&lines, "spancal", 1)?;
    let mut points = Vec::new();
    for line in body {
        if line.tokens.len() != 2 {
            return Err(SyntaxError::at(line, "expected `thickness span`").into());
        }
        points.push((line.number_at(0)?, line.number_at(1)?));
    }
    SpanCalibration::new(points)
}

pub fn serialize_calibration(cal: &SpanCalibration) -> String {
    let mut out = String::from("spancal v1\n");
    for (t, s) in cal.points() {
        let _ = writeln!(out, "{t} {s}");
    }
    out
}
