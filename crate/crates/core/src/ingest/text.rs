use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::Deserialize;

use super::{is_valid_id, IngestError};
use crate::domain::{Category, CategoryKind, CategoryTable, Fixation, Noun, Transcript};

pub const FIXATION_HEADER: &str = "subject_id,image_id,t_start_ms,t_end_ms,x_px,y_px";
pub const SCORES_HEADER: &str = "image_id,score";
const CATEGORY_HEADER: &str = "category_id,name,kind";
const LEXICON_HEADER: &str = "word,category_id";

fn utf8(bytes: &[u8]) -> Result<&str, IngestError> {
    std::str::from_utf8(bytes).map_err(|_| IngestError::InvalidUtf8)
}

/// Yields `(1-based line number, line)` with `\r` stripped, skipping blank lines.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split('\n')
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.trim().is_empty())
}

fn row_err(line: usize, reason: impl Into<String>) -> IngestError {
    IngestError::MalformedRow { line, reason: reason.into() }
}

fn split_row(line_no: usize, line: &str, arity: usize) -> Result<Vec<&str>, IngestError> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != arity {
        return Err(row_err(line_no, format!("expected {arity} fields, found {}", fields.len())));
    }
    Ok(fields)
}

fn id_field(line_no: usize, s: &str, what: &str) -> Result<String, IngestError> {
    if !is_valid_id(s) {
        return Err(row_err(line_no, format!("invalid {what} `{s}`")));
    }
    Ok(s.to_string())
}

fn real_field(line_no: usize, s: &str, what: &str) -> Result<f64, IngestError> {
    match s.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(row_err(line_no, format!("non-numeric {what} `{s}`"))),
    }
}

fn expect_header<'a>(
    it: &mut impl Iterator<Item = (usize, &'a str)>,
    expected: &'static str,
) -> Result<(), IngestError> {
    match it.next() {
        Some((_, h)) if h.trim() == expected => Ok(()),
        _ => Err(IngestError::MalformedHeader { expected }),
    }
}

/// Parses a fixation log. Records are returned in file order.
pub fn parse_fixation_log(bytes: &[u8]) -> Result<Vec<Fixation>, IngestError> {
    let mut it = lines(utf8(bytes)?);
    expect_header(&mut it, FIXATION_HEADER)?;
    it.map(|(n, line)| {
        let f = split_row(n, line, 6)?;
        Ok(Fixation {
            subject_id: id_field(n, f[0], "subject_id")?,
            image_id: id_field(n, f[1], "image_id")?,
            t_start: real_field(n, f[2], "t_start_ms")?,
            t_end: real_field(n, f[3], "t_end_ms")?,
            x: real_field(n, f[4], "x_px")?,
            y: real_field(n, f[5], "y_px")?,
        })
    })
    .collect()
}

pub fn write_fixation_log(records: &[Fixation]) -> Vec<u8> {
    let mut out = String::from(FIXATION_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(out, "{},{},{},{},{},{}", r.subject_id, r.image_id, r.t_start, r.t_end, r.x, r.y);
    }
    out.into_bytes()
}

/// Parses per-image scores. The `image_id,score` header is optional.
pub fn parse_scores(bytes: &[u8]) -> Result<BTreeMap<String, f64>, IngestError> {
    let mut out = BTreeMap::new();
    for (n, line) in lines(utf8(bytes)?) {
        if line.trim() == SCORES_HEADER {
            if out.is_empty() {
                continue;
            }
            return Err(row_err(n, "header repeated inside body"));
        }
        let f = split_row(n, line, 2)?;
        let id = id_field(n, f[0], "image_id")?;
        let score = real_field(n, f[1], "score")?;
        if out.insert(id.clone(), score).is_some() {
            return Err(IngestError::DuplicateImage(id));
        }
    }
    Ok(out)
}

pub fn write_scores(scores: &BTreeMap<String, f64>) -> Vec<u8> {
    let mut out = String::from(SCORES_HEADER);
    out.push('\n');
    for (id, s) in scores {
        let _ = writeln!(out, "{id},{s}");
    }
    out.into_bytes()
}

/// Parses a category table with header `category_id,name,kind`.
pub fn parse_category_table(bytes: &[u8]) -> Result<CategoryTable, IngestError> {
    let mut it = lines(utf8(bytes)?);
    expect_header(&mut it, CATEGORY_HEADER)?;
    let mut cats = Vec::new();
    for (n, line) in it {
        let f = split_row(n, line, 3)?;
        let id: u32 = f[0].trim().parse().map_err(|_| row_err(n, format!("bad category_id `{}`", f[0])))?;
        let kind: CategoryKind = f[2].trim().parse().map_err(|e: String| row_err(n, e))?;
        cats.push(Category { id, name: f[1].trim().to_string(), kind });
    }
    CategoryTable::new(cats).map_err(|e| row_err(0, e.to_string()))
}

pub fn write_category_table(table: &CategoryTable) -> Vec<u8> {
    let mut out = String::from(CATEGORY_HEADER);
    out.push('\n');
    for c in table.iter() {
        let kind = match c.kind {
            CategoryKind::Object => "object",
            CategoryKind::Background => "background",
        };
        let _ = writeln!(out, "{},{},{}", c.id, c.name, kind);
    }
    out.into_bytes()
}

/// Parses a noun lexicon with header `word,category_id`.
pub fn parse_lexicon(bytes: &[u8]) -> Result<HashMap<String, u32>, IngestError> {
    let mut it = lines(utf8(bytes)?);
    expect_header(&mut it, LEXICON_HEADER)?;
    let mut out = HashMap::new();
    for (n, line) in it {
        let f = split_row(n, line, 2)?;
        let word = f[0].trim().to_string();
        let id: u32 = f[1].trim().parse().map_err(|_| row_err(n, format!("bad category_id `{}`", f[1])))?;
        if out.insert(word.clone(), id).is_some() {
            return Err(IngestError::DuplicateKey(word));
        }
    }
    Ok(out)
}

#[derive(Deserialize)]
struct TranscriptLine {
    subject_id: String,
    image_id: String,
    text: String,
    nouns: Vec<NounLine>,
}

#[derive(Deserialize)]
struct NounLine {
    word: String,
    order: u32,
    category_id: Option<u32>,
}

/// Parses one transcript JSON object per line.
pub fn parse_transcripts(bytes: &[u8]) -> Result<Vec<Transcript>, IngestError> {
    let mut out = Vec::new();
    for (n, line) in lines(utf8(bytes)?) {
        let raw: TranscriptLine =
            serde_json::from_str(line).map_err(|e| IngestError::MalformedLine { line: n, reason: e.to_string() })?;
        let mut prev = 0;
        for noun in &raw.nouns {
            if noun.order <= prev {
                return Err(IngestError::NonIncreasingOrder(n));
            }
            prev = noun.order;
        }
        out.push(Transcript {
            subject_id: raw.subject_id,
            image_id: raw.image_id,
            text: raw.text,
            nouns: raw
                .nouns
                .into_iter()
                .map(|x| Noun { word: x.word, order: x.order, category_id: x.category_id })
                .collect(),
        });
    }
    Ok(out)
}

pub fn write_transcripts(transcripts: &[Transcript]) -> Vec<u8> {
    let mut out = String::new();
    for t in transcripts {
        // Transcript serialization cannot fail: only strings and integers.
        out.push_str(&serde_json::to_string(t).expect("transcript serializes"));
        out.push('\n');
    }
    out.into_bytes()
}
