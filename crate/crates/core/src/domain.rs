//! Shared domain types: fixations, gaze sessions, semantic masks,
//! transcripts, plus session validation and noun resolution.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::Pixel;

/// Captioning fixations that start at or after this offset are excluded
/// from the `cap3s` condition.
pub const CAP3S_CUTOFF_MS: f64 = 3000.0;

/// One fixation event. Times are milliseconds from stimulus onset,
/// positions are pixels with `x` the column and `y` the row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixation {
    pub subject_id: String,
    pub image_id: String,
    pub t_start: f64,
    pub t_end: f64,
    pub x: f64,
    pub y: f64,
}

impl Fixation {
    /// Duration in milliseconds.
    pub fn duration_ms(&self) -> f64 {
        self.t_end - self.t_start
    }

    /// The pixel containing this fixation. Only meaningful once the
    /// fixation has passed [`validate_session`].
    pub fn pixel(&self) -> Pixel {
        Pixel::new(self.x.max(0.0).floor() as usize, self.y.max(0.0).floor() as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Free,
    Cap3s,
    Cap,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::Free, Task::Cap3s, Task::Cap];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Free => "free",
            Task::Cap3s => "cap3s",
            Task::Cap => "cap",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "free" => Ok(Task::Free),
            "cap3s" => Ok(Task::Cap3s),
            "cap" => Ok(Task::Cap),
            other => Err(format!("unknown task `{other}` (expected free, cap3s or cap)")),
        }
    }
}

/// All fixations of one subject on one image under one task.
#[derive(Debug, Clone, PartialEq)]
pub struct GazeSession {
    pub subject_id: String,
    pub image_id: String,
    pub task: Task,
    pub fixations: Vec<Fixation>,
}

impl GazeSession {
    pub fn pixels(&self) -> Vec<Pixel> {
        self.fixations.iter().map(Fixation::pixel).collect()
    }

    /// The `cap3s` view of a captioning session: fixations starting
    /// before the three-second cutoff.
    pub fn first_three_seconds(&self) -> GazeSession {
        GazeSession {
            subject_id: self.subject_id.clone(),
            image_id: self.image_id.clone(),
            task: Task::Cap3s,
            fixations: self.fixations.iter().filter(|f| f.t_start < CAP3S_CUTOFF_MS).cloned().collect(),
        }
    }
}

/// Groups fixation records into sessions keyed by `(image_id, subject_id)`.
/// Fixations keep their file order inside each session.
pub fn group_sessions(records: &[Fixation], task: Task) -> Vec<GazeSession> {
    let mut groups: BTreeMap<(&str, &str), Vec<Fixation>> = BTreeMap::new();
    for r in records {
        groups.entry((r.image_id.as_str(), r.subject_id.as_str())).or_default().push(r.clone());
    }
    groups
        .into_iter()
        .map(|((image, subject), fixations)| GazeSession {
            subject_id: subject.to_string(),
            image_id: image.to_string(),
            task,
            fixations,
        })
        .collect()
}

/// A broken session invariant. `index` is the 0-based position of the
/// offending fixation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    OutOfBounds { index: usize },
    NegativeStart { index: usize },
    EndBeforeStart { index: usize },
    NonFinite { index: usize },
    Unordered { index: usize },
    ForeignRecord { index: usize },
    AfterCap3sCutoff { index: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OutOfBounds { index } => write!(f, "out of bounds @index {index}"),
            Violation::NegativeStart { index } => write!(f, "t_start < 0 @index {index}"),
            Violation::EndBeforeStart { index } => write!(f, "t_end < t_start @index {index}"),
            Violation::NonFinite { index } => write!(f, "non-finite field @index {index}"),
            Violation::Unordered { index } => write!(f, "not ordered by t_start @index {index}"),
            Violation::ForeignRecord { index } => {
                write!(f, "subject or image differs from session @index {index}")
            }
            Violation::AfterCap3sCutoff { index } => {
                write!(f, "cap3s fixation starts at or after 3000 ms @index {index}")
            }
        }
    }
}

/// Checks every fixation invariant of `session` against an image of
/// `width × height` pixels. An empty result means the session is valid.
pub fn validate_session(session: &GazeSession, width: usize, height: usize) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut prev_start = f64::NEG_INFINITY;
    for (index, f) in session.fixations.iter().enumerate() {
        if f.subject_id != session.subject_id || f.image_id != session.image_id {
            out.push(Violation::ForeignRecord { index });
        }
        if ![f.t_start, f.t_end, f.x, f.y].iter().all(|v| v.is_finite()) {
            out.push(Violation::NonFinite { index });
            continue;
        }
        if f.x < 0.0 || f.y < 0.0 || f.x >= width as f64 || f.y >= height as f64 {
            out.push(Violation::OutOfBounds { index });
        }
        if f.t_start < 0.0 {
            out.push(Violation::NegativeStart { index });
        }
        if f.t_end < f.t_start {
            out.push(Violation::EndBeforeStart { index });
        }
        if f.t_start < prev_start {
            out.push(Violation::Unordered { index });
        }
        if session.task == Task::Cap3s && f.t_start >= CAP3S_CUTOFF_MS {
            out.push(Violation::AfterCap3sCutoff { index });
        }
        prev_start = f.t_start;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CategoryKind {
    Object,
    Background,
}

impl FromStr for CategoryKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "object" => Ok(CategoryKind::Object),
            "background" => Ok(CategoryKind::Background),
            other => Err(format!("unknown category kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub id: u32,
    pub name: String,
    pub kind: CategoryKind,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CategoryTableError {
    #[error("category id 0 is reserved for unlabeled pixels")]
    ReservedId,
    #[error("duplicate category id {0}")]
    DuplicateId(u32),
}

/// Category ids (> 0) with their names and object/background kind.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CategoryTable {
    entries: BTreeMap<u32, Category>,
}

impl CategoryTable {
    pub fn new(categories: impl IntoIterator<Item = Category>) -> Result<Self, CategoryTableError> {
        let mut entries = BTreeMap::new();
        for c in categories {
            if c.id == 0 {
                return Err(CategoryTableError::ReservedId);
            }
            let id = c.id;
            if entries.insert(id, c).is_some() {
                return Err(CategoryTableError::DuplicateId(id));
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, id: u32) -> Option<&Category> {
        self.entries.get(&id)
    }

    pub fn kind(&self, id: u32) -> Option<CategoryKind> {
        self.get(id).map(|c| c.kind)
    }

    pub fn contains(&self, id: u32) -> bool {
        self.entries.contains_key(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Category> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Per-pixel category ids; 0 marks unlabeled pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticMask {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u32>,
}

impl SemanticMask {
    pub fn label(&self, p: Pixel) -> u32 {
        self.labels[p.y * self.width + p.x]
    }

    pub fn contains(&self, p: Pixel) -> bool {
        p.x < self.width && p.y < self.height
    }

    /// Distinct nonzero categories present, ascending.
    pub fn categories(&self) -> Vec<u32> {
        let mut seen: Vec<u32> = self.labels.iter().copied().filter(|&l| l != 0).collect();
        seen.sort_unstable();
        seen.dedup();
        seen
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Noun {
    pub word: String,
    pub order: u32,
    pub category_id: Option<u32>,
}

/// A subject's spoken description of one image with its tagged nouns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub subject_id: String,
    pub image_id: String,
    pub text: String,
    pub nouns: Vec<Noun>,
}

impl Transcript {
    /// Categories mentioned anywhere in the transcript.
    pub fn described_categories(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.nouns.iter().filter_map(|n| n.category_id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

/// Sets every noun's category from `lexicon`; words missing from the
/// lexicon become unannotated. Noun order is preserved.
pub fn resolve_nouns(transcript: &Transcript, lexicon: &HashMap<String, u32>) -> Transcript {
    Transcript {
        nouns: transcript
            .nouns
            .iter()
            .map(|n| Noun { word: n.word.clone(), order: n.order, category_id: lexicon.get(&n.word).copied() })
            .collect(),
        ..transcript.clone()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LocationSetError {
    #[error("a fixation location set needs at least one location")]
    Empty,
}

/// Ordered fixated locations produced by winner-take-all selection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FixationLocationSet(Vec<Pixel>);

impl FixationLocationSet {
    pub fn new(locations: Vec<Pixel>) -> Result<Self, LocationSetError> {
        if locations.is_empty() {
            return Err(LocationSetError::Empty);
        }
        Ok(Self(locations))
    }

    pub fn locations(&self) -> &[Pixel] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}
