//! Parser fuzzing: every reader must return `Ok` or a typed error on any
//! input, and whatever it accepts must survive a serialize round-trip.

use housingforge::bolts::{parse_calibration, parse_plan, serialize_calibration, serialize_plan};
use housingforge::ingest::{parse_board, parse_library, serialize_board, serialize_library, BoardFormat, LibraryFile};
use housingforge::reuse::{parse_ledger, serialize_ledger};
use rand::Rng;

/// Feeds `bytes` to every parser. Panics (the failure signal) only when an
/// accepted input does not round-trip.
pub fn exercise(bytes: &[u8], lib: &LibraryFile) {
    if let Ok(parsed) = parse_board(bytes, BoardFormat::Native, lib) {
        let text = serialize_board(&parsed.board);
        let again = parse_board(text.as_bytes(), BoardFormat::Native, lib).expect("serialized board parses");
        assert_eq!(again.board, parsed.board);
    }
    if let Ok(parsed) = parse_board(bytes, BoardFormat::KiCad, lib) {
        parsed.board.validate().expect("accepted KiCad board is valid");
    }
    if let Ok(l) = parse_library(bytes) {
        assert_eq!(parse_library(serialize_library(&l).as_bytes()).expect("serialized library parses"), l);
    }
    if let Ok(p) = parse_plan(bytes) {
        assert_eq!(parse_plan(serialize_plan(&p).as_bytes()).expect("serialized plan parses"), p);
    }
    if let Ok(c) = parse_calibration(bytes) {
        assert_eq!(parse_calibration(serialize_calibration(&c).as_bytes()).expect("serialized table parses"), c);
    }
    if let Ok(l) = parse_ledger(bytes) {
        assert_eq!(parse_ledger(serialize_ledger(&l).as_bytes()).expect("serialized ledger parses"), l);
    }
}

const TOKENS: &[&[u8]] = &[
    b"\n", b" ", b"\"", b"#", b"(", b")", b"-", b".", b"0", b"1e308", b"-0", b"NaN", b"inf", b"\xff", b"\xe2\x82",
    b"vertex", b"outline", b"cutout", b"component", b"package", b"pad", b"net", b"at", b"rotation", b"hole",
    b"cover", b"span", b"pair", b"shared", b"ic", b"footprint", b"layer", b"\"F.Cu\"", b"gr_line", b"start", b"end",
    b"class", b"body", b"bolt", b"prism", b"through", b"alias", b"boardspec v1", b"packlib v1", b"boltplan v1",
    b"spancal v1", b"reuse-ledger v1",
];

/// One random structural edit of `src`.
pub fn mutate<R: Rng>(src: &[u8], rng: &mut R) -> Vec<u8> {
    let mut out = src.to_vec();
    for _ in 0..rng.random_range(1..=4) {
        let at = if out.is_empty() { 0 } else { rng.random_range(0..=out.len()) };
        match rng.random_range(0..6) {
            0 if at < out.len() => out[at] = rng.random(),
            1 => {
                let tok = TOKENS[rng.random_range(0..TOKENS.len())];
                out.splice(at..at, tok.iter().copied());
            }
            2 if at < out.len() => {
                let end = (at + rng.random_range(1..32)).min(out.len());
                out.drain(at..end);
            }
            3 if at < out.len() => {
                let end = (at + rng.random_range(1..64)).min(out.len());
                let chunk: Vec<u8> = out[at..end].to_vec();
                let to = rng.random_range(0..=out.len());
                out.splice(to..to, chunk);
            }
            4 => {
                let n = rng.random_range(1..200);
                out.splice(at..at, std::iter::repeat_n(b'(', n));
            }
            _ => {
                let digits = format!("{}", rng.random::<f64>() * 10f64.powi(rng.random_range(-12..12)));
                out.splice(at..at, digits.into_bytes());
            }
        }
    }
    out
}

/// Seed corpus: every fixture file plus serialized built-ins.
pub fn corpus(lib: &LibraryFile) -> Vec<Vec<u8>> {
    // Past crash inputs seed the mutator too.
    let crashes = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/corpus");
    let mut out: Vec<Vec<u8>> = [super::fixture_dir(), crashes]
        .iter()
        .flat_map(|d| std::fs::read_dir(d).unwrap())
        .map(|e| std::fs::read(e.unwrap().path()).unwrap())
        .collect();
    out.push(serialize_library(lib).into_bytes());
    out.push(serialize_calibration(&Default::default()).into_bytes());
    out.push(b"reuse-ledger v1\ntimer 3\n\"a b\" 7\n".to_vec());
    let board = super::load("timer");
    let plan = housingforge::bolts::plan_bolts(&board, 3.0, &Default::default(), &Default::default()).unwrap();
    out.push(serialize_plan(&plan).into_bytes());
    out.sort();
    out
}
