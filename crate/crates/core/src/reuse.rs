//! Component reuse between design revisions and housing cycle counting.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::Path;

use thiserror::Error;

use crate::ingest::text::{decode_utf8, expect_header, tokenize, Quoted, SyntaxError};
use crate::model::BoardDesign;

/// Assembly cycles a tab housing survives before contacts degrade.
pub const CYCLE_LIMIT: u32 = 7;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReuseError {
    #[error("components without part numbers: {}", .0.join(", "))]
    MissingPartNumbers(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackageMismatch {
    pub part_number: String,
    pub old_packages: Vec<String>,
    pub new_packages: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReuseReport {
    /// Part number -> reusable count.
    pub matched: BTreeMap<String, usize>,
    pub only_in_old: BTreeMap<String, usize>,
    pub only_in_new: BTreeMap<String, usize>,
    /// Shared part numbers whose packages differ; these are not matched.
    pub package_mismatches: Vec<PackageMismatch>,
    pub new_total: usize,
}

impl ReuseReport {
    pub fn matched_total(&self) -> usize {
        self.matched.values().sum()
    }

    /// Reusable share of the new BOM; 0 for an empty new BOM.
    pub fn reusable_fraction(&self) -> f64 {
        if self.new_total == 0 {
            0.0
        } else {
            self.matched_total() as f64 / self.new_total as f64
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "reusable: {}/{} ({:.0}%)",
            self.matched_total(),
            self.new_total,
            100.0 * self.reusable_fraction()
        );
        for (title, map) in [("matched", &self.matched), ("only in old", &self.only_in_old), ("only in new", &self.only_in_new)] {
            if map.is_empty() {
                continue;
            }
            let _ = writeln!(s, "{title}:");
            for (part, n) in map {
                let _ = writeln!(s, "  {part} x{n}");
            }
        }
        for m in &self.package_mismatches {
            let _ = writeln!(
                s,
                "package mismatch: {} is {} in old, {} in new",
                m.part_number,
                m.old_packages.join("/"),
                m.new_packages.join("/")
            );
        }
        s
    }

    pub fn render_tsv(&self) -> String {
        let mut s = String::from("part\tmatched\tonly_old\tonly_new\n");
        let mut parts: Vec<&String> =
            self.matched.keys().chain(self.only_in_old.keys()).chain(self.only_in_new.keys()).collect();
        parts.sort();
        parts.dedup();
        for p in parts {
            let get = |m: &BTreeMap<String, usize>| m.get(p).copied().unwrap_or(0);
            let _ = writeln!(s, "{p}\t{}\t{}\t{}", get(&self.matched), get(&self.only_in_old), get(&self.only_in_new));
        }
        let _ = writeln!(s, "total\t{}\t\t{}", self.matched_total(), self.new_total);
        s
    }
}

/// part number -> (count, packages)
fn bom(board: &BoardDesign, missing: &mut Vec<String>) -> BTreeMap<String, (usize, Vec<String>)> {
    let mut out: BTreeMap<String, (usize, Vec<String>)> = BTreeMap::new();
    for c in &board.components {
        if c.part_number.trim().is_empty() {
            missing.push(c.ref_des.clone());
            continue;
        }
        let e = out.entry(c.part_number.clone()).or_default();
        e.0 += 1;
        if !e.1.contains(&c.package.name) {
            e.1.push(c.package.name.clone());
        }
    }
    for (_, pkgs) in out.values_mut() {
        pkgs.sort();
    }
    out
}

/// Multiset intersection of the two BOMs keyed by part number.
pub fn diff_reuse(old: &BoardDesign, new: &BoardDesign) -> Result<ReuseReport, ReuseError> {
    let mut missing = Vec::new();
    let a = bom(old, &mut missing);
    let b = bom(new, &mut missing);
    if !missing.is_empty() {
        missing.sort();
        missing.dedup();
        return Err(ReuseError::MissingPartNumbers(missing));
    }
    let mut report = ReuseReport { new_total: b.values().map(|(n, _)| n).sum(), ..Default::default() };
    for (part, (na, pa)) in &a {
        match b.get(part) {
            Some((nb, pb)) if pa == pb => {
                report.matched.insert(part.clone(), *na.min(nb));
                if na > nb {
                    report.only_in_old.insert(part.clone(), na - nb);
                }
            }
            Some((_, pb)) => {
                report.package_mismatches.push(PackageMismatch {
                    part_number: part.clone(),
                    old_packages: pa.clone(),
                    new_packages: pb.clone(),
                });
                report.only_in_old.insert(part.clone(), *na);
            }
            None => {
                report.only_in_old.insert(part.clone(), *na);
            }
        }
    }
    for (part, (nb, _)) in &b {
        let used = report.matched.get(part).copied().unwrap_or(0);
        if nb > &used {
            report.only_in_new.insert(part.clone(), nb - used);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DurabilityWarning {
    pub housing: String,
    pub count: u32,
}

impl std::fmt::Display for DurabilityWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "housing {} has been assembled {} times (limit {CYCLE_LIMIT}); print a new housing",
            self.housing, self.count
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CycleLedger {
    counts: BTreeMap<String, u32>,
}

impl CycleLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self, housing: &str) -> u32 {
        self.counts.get(housing).copied().unwrap_or(0)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, u32)> {
        self.counts.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn needs_replacement(&self, housing: &str) -> bool {
        self.count(housing) >= CYCLE_LIMIT
    }

    /// Increments the count; warns once the count reaches the limit.
    pub fn record_cycle(&mut self, housing: &str) -> Option<DurabilityWarning> {
        let c = self.counts.entry(housing.to_string()).or_insert(0);
        *c = c.saturating_add(1);
        (*c >= CYCLE_LIMIT).then(|| DurabilityWarning { housing: housing.to_string(), count: *c })
    }
}

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("ledger syntax error: {0}")]
    Syntax(#[from] SyntaxError),
    #[error("ledger I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub fn parse_ledger(bytes: &[u8]) -> Result<CycleLedger, SyntaxError> {
    let src = decode_utf8(bytes)?;
    let lines = tokenize(src)?;
    let body = expect_header(&lines, "reuse-ledger", 1)?;
    let mut ledger = CycleLedger::new();
    for line in body {
        if line.tokens.len() != 2 {
            return Err(SyntaxError::at(line, "expected `housing count`"));
        }
        let count: u32 = line.tokens[1]
            .parse()
            .map_err(|_| SyntaxError::at(line, "count must be a non-negative integer"))?;
        if ledger.counts.insert(line.tokens[0].clone(), count).is_some() {
            return Err(SyntaxError::at(line, format!("housing {} listed twice", line.tokens[0])));
        }
    }
    Ok(ledger)
}

pub fn serialize_ledger(ledger: &CycleLedger) -> String {
    let mut out = String::from("reuse-ledger v1\n");
    for (h, n) in ledger.entries() {
        let _ = writeln!(out, "{} {n}", Quoted(h));
    }
    out
}

pub fn load_ledger(path: &Path) -> Result<CycleLedger, LedgerError> {
    if !path.exists() {
        return Ok(CycleLedger::new());
    }
    let file = File::open(path)?;
    file.lock_shared()?;
    let mut bytes = Vec::new();
    (&file).read_to_end(&mut bytes)?;
    Ok(parse_ledger(&bytes)?)
}

pub fn save_ledger(ledger: &CycleLedger, path: &Path) -> Result<(), LedgerError> {
    let mut file = OpenOptions::new().create(true).truncate(false).write(true).open(path)?;
    file.lock()?;
    file.set_len(0)?;
    file.write_all(serialize_ledger(ledger).as_bytes())?;
    file.sync_all()?;
    Ok(())
}

/// Load, increment and save under one exclusive lock.
pub fn record_cycle_in_file(path: &Path, housing: &str) -> Result<(u32, Option<DurabilityWarning>), LedgerError> {
    let mut file = OpenOptions::new().create(true).truncate(false).read(true).write(true).open(path)?;
    file.lock()?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)?;
    let mut ledger = if bytes.is_empty() { CycleLedger::new() } else { parse_ledger(&bytes)? };
    let warning = ledger.record_cycle(housing);
    file.seek(SeekFrom::Start(0))?;
    file.set_len(0)?;
    file.write_all(serialize_ledger(&ledger).as_bytes())?;
    file.sync_all()?;
    Ok((ledger.count(housing), warning))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn warning_at_seven() {
        let mut l = CycleLedger::new();
        for i in 1..=6 {
            assert_eq!(l.record_cycle("H"), None, "cycle {i}");
        }
        assert_eq!(l.record_cycle("H"), Some(DurabilityWarning { housing: "H".into(), count: 7 }));
        assert!(l.record_cycle("H").is_some());
        assert_eq!(l.count("other"), 0);
    }

    #[test]
    fn ledger_text_roundtrip() {
        let mut l = CycleLedger::new();
        l.record_cycle("timer housing");
        l.record_cycle("b");
        l.record_cycle("b");
        assert_eq!(parse_ledger(serialize_ledger(&l).as_bytes()).unwrap(), l);
        assert!(parse_ledger(b"reuse-ledger v1\nx -1\n").is_err());
        assert!(parse_ledger(b"reuse-ledger v1\nx 1\nx 2\n").is_err());
    }
}
