#![allow(dead_code)]

use std::path::PathBuf;

use housingforge::ingest::{default_library, parse_board, parse_library, BoardFormat, LibraryFile};
use housingforge::model::BoardDesign;

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn library() -> LibraryFile {
    let mut lib = default_library();
    let extra = std::fs::read(fixture_dir().join("parts.packlib")).unwrap();
    lib.merge(parse_library(&extra).unwrap());
    lib
}

pub fn load(name: &str) -> BoardDesign {
    let bytes = std::fs::read(fixture_dir().join(format!("{name}.board"))).unwrap();
    parse_board(&bytes, BoardFormat::Native, &library()).unwrap().board
}

pub const VALIDATION: [&str; 5] = [
    "validation-soic8",
    "validation-tssop14",
    "validation-tqfp32",
    "validation-qfn20",
    "validation-ufbga15",
];

pub mod cover;
pub mod fuzz;
pub mod oracle;

/// Stems of every `.board` fixture, sorted.
pub fn board_fixtures() -> Vec<String> {
    let mut out: Vec<String> = std::fs::read_dir(fixture_dir())
        .unwrap()
        .filter_map(|e| {
            let p = e.unwrap().path();
            (p.extension()? == "board").then(|| p.file_stem().unwrap().to_string_lossy().into_owned())
        })
        .collect();
    out.sort();
    out
}
