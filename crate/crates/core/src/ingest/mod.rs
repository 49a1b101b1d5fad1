//! Board and library ingestion.

pub mod kicad;
pub mod library;
pub mod native;
pub mod sexpr;
pub mod text;

use thiserror::Error;

use crate::geom::{GeometryError, Point2, Polygon2};
use crate::model::{BoardDesign, ModelError};

pub use library::{default_library, load_library, parse_library, save_library, serialize_library, LibraryError, LibraryFile};
pub use text::SyntaxError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoardFormat {
    /// `boardspec v1`.
    Native,
    /// KiCad `.kicad_pcb` subset.
    KiCad,
}

impl BoardFormat {
    /// Picks the format from a file extension; anything but `.kicad_pcb`
    /// is native.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("kicad_pcb") => BoardFormat::KiCad,
            _ => BoardFormat::Native,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IngestError {
    #[error("syntax error: {0}")]
    Syntax(#[from] SyntaxError),
    #[error("component {ref_des}: package `{name}` is not in the library")]
    UnknownPackage { ref_des: String, name: String },
    #[error("board has no outline")]
    MissingOutline,
    #[error("degenerate outline: {0}")]
    DegenerateOutline(String),
    #[error("component {0} is on the bottom side; only top-side parts are supported")]
    BottomSideComponent(String),
    #[error("invalid board: {0}")]
    Model(#[from] ModelError),
}

impl From<GeometryError> for IngestError {
    fn from(e: GeometryError) -> Self {
        IngestError::DegenerateOutline(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedBoard {
    pub board: BoardDesign,
    /// Non-fatal notes such as skipped sections or approximated arcs.
    pub warnings: Vec<String>,
}

pub(crate) fn assemble_outline(outer: Vec<Point2>, cutouts: Vec<Vec<Point2>>) -> Result<Polygon2, IngestError> {
    Ok(Polygon2::new(outer, cutouts)?)
}

pub fn parse_board(bytes: &[u8], format: BoardFormat, lib: &LibraryFile) -> Result<ParsedBoard, IngestError> {
    match format {
        BoardFormat::Native => native::parse_native(bytes, lib),
        BoardFormat::KiCad => kicad::parse_kicad(bytes, lib),
    }
}

/// Native serialization; the inverse of [`parse_board`] with
/// [`BoardFormat::Native`].
pub fn serialize_board(board: &BoardDesign) -> String {
    native::serialize_native(board)
}
