//! Readers and writers for every external data format.
//!
//! - fixation logs, caption scores, category tables and lexicons: unquoted CSV
//! - transcripts: JSON lines
//! - semantic masks and binary masks: binary PGM (`P5`)
//! - foveation inputs/outputs: binary PPM (`P6`)
//! - float grid stacks: FGRID (see `docs/fgrid.md`)

mod fgrid;
mod pnm;
mod text;

use thiserror::Error;

pub use fgrid::{read_fgrid, write_fgrid, FGRID_HEADER_LEN, FGRID_MAGIC};
pub use pnm::{parse_mask, parse_pgm, parse_ppm, write_mask, write_pgm, write_ppm, GrayImage};
pub use text::{
    parse_category_table, parse_fixation_log, parse_lexicon, parse_scores, parse_transcripts, write_category_table,
    write_fixation_log, write_scores, write_transcripts, FIXATION_HEADER, SCORES_HEADER,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IngestError {
    #[error("input is not valid UTF-8")]
    InvalidUtf8,
    #[error("malformed header, expected `{expected}`")]
    MalformedHeader { expected: &'static str },
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("malformed JSON line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("noun order is not strictly increasing from 1 on line {0}")]
    NonIncreasingOrder(usize),
    #[error("image `{0}` appears more than once")]
    DuplicateImage(String),
    #[error("duplicate key `{0}`")]
    DuplicateKey(String),
    #[error("missing FG01 magic")]
    BadMagic,
    #[error("truncated header")]
    TruncatedHeader,
    #[error("payload is {actual} bytes, header declares {expected}")]
    TruncatedPayload { expected: u64, actual: u64 },
    #[error("stack has a zero dimension")]
    EmptyStack,
    #[error("non-finite value at element {0}")]
    NonFiniteValue(usize),
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("malformed image: {0}")]
    MalformedImage(String),
    #[error("pixel value {0} is not a known category")]
    UnknownCategory(u32),
}

/// Identifiers in CSV files are restricted so no quoting is ever needed.
pub fn is_valid_id(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}
