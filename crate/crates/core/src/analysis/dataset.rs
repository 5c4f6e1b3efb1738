use std::collections::BTreeMap;

use crate::domain::{validate_session, CategoryTable, GazeSession, SemanticMask, Task, Transcript};

use super::AnalysisError;

/// Gaze data for one image: its size and sessions grouped by task.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGaze {
    pub width: usize,
    pub height: usize,
    pub sessions: BTreeMap<Task, Vec<GazeSession>>,
}

/// Validated gaze sessions keyed by image id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GazeCorpus {
    pub images: BTreeMap<String, ImageGaze>,
}

impl GazeCorpus {
    /// Indexes `sessions` by image, validating every one against the size
    /// reported by `dims`. Sessions of one `(image, subject, task)` must be
    /// unique.
    pub fn build(
        sessions: impl IntoIterator<Item = GazeSession>,
        dims: impl Fn(&str) -> Option<(usize, usize)>,
    ) -> Result<Self, AnalysisError> {
        let mut images: BTreeMap<String, ImageGaze> = BTreeMap::new();
        for s in sessions {
            let (width, height) = dims(&s.image_id).ok_or_else(|| AnalysisError::MissingDims(s.image_id.clone()))?;
            let violations = validate_session(&s, width, height);
            if !violations.is_empty() {
                return Err(AnalysisError::InvalidSession {
                    image: s.image_id.clone(),
                    subject: s.subject_id.clone(),
                    violations: violations.iter().map(ToString::to_string).collect(),
                });
            }
            let entry = images.entry(s.image_id.clone()).or_insert_with(|| ImageGaze {
                width,
                height,
                sessions: BTreeMap::new(),
            });
            let list = entry.sessions.entry(s.task).or_default();
            if list.iter().any(|o| o.subject_id == s.subject_id) {
                return Err(AnalysisError::DuplicateSession {
                    image: s.image_id.clone(),
                    subject: s.subject_id.clone(),
                    task: s.task,
                });
            }
            list.push(s);
        }
        for img in images.values_mut() {
            for list in img.sessions.values_mut() {
                list.sort_by(|a, b| a.subject_id.cmp(&b.subject_id));
            }
        }
        Ok(Self { images })
    }

    /// Adds the `cap3s` view of every `cap` session.
    pub fn with_cap3s(mut self) -> Self {
        for img in self.images.values_mut() {
            if let Some(cap) = img.sessions.get(&Task::Cap) {
                let cut: Vec<_> = cap.iter().map(GazeSession::first_three_seconds).collect();
                img.sessions.insert(Task::Cap3s, cut);
            }
        }
        self
    }

    pub fn tasks(&self) -> Vec<Task> {
        let mut t: Vec<Task> = self.images.values().flat_map(|i| i.sessions.keys().copied()).collect();
        t.sort();
        t.dedup();
        t
    }

    /// `(image_id, session)` pairs for one task in image then subject order.
    pub fn sessions(&self, task: Task) -> impl Iterator<Item = (&str, &GazeSession)> {
        self.images
            .iter()
            .flat_map(move |(id, img)| img.sessions.get(&task).into_iter().flatten().map(move |s| (id.as_str(), s)))
    }
}

/// Which transcripts define "described" for a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DescriptionSource {
    /// The transcript of the same subject on the same image.
    #[default]
    SameSubject,
    /// Every transcript recorded for the image.
    Pooled,
}

/// Everything the description/fixation statistics need.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub table: CategoryTable,
    pub corpus: GazeCorpus,
    pub masks: BTreeMap<String, SemanticMask>,
    /// Keyed by `(image_id, subject_id)`.
    pub transcripts: BTreeMap<(String, String), Transcript>,
}

impl Dataset {
    /// Validates sessions against mask sizes and checks that every mask
    /// label is a known category.
    pub fn new(
        table: CategoryTable,
        masks: BTreeMap<String, SemanticMask>,
        sessions: impl IntoIterator<Item = GazeSession>,
        transcripts: impl IntoIterator<Item = Transcript>,
    ) -> Result<Self, AnalysisError> {
        for mask in masks.values() {
            if let Some(&bad) = mask.labels.iter().find(|&&l| l != 0 && !table.contains(l)) {
                return Err(AnalysisError::UnknownCategory(bad));
            }
        }
        let corpus = GazeCorpus::build(sessions, |id| masks.get(id).map(|m| (m.width, m.height)))?;
        let mut by_key = BTreeMap::new();
        for t in transcripts {
            let key = (t.image_id.clone(), t.subject_id.clone());
            if by_key.contains_key(&key) {
                let (image, subject) = key;
                return Err(AnalysisError::DuplicateTranscript { image, subject });
            }
            by_key.insert(key, t);
        }
        Ok(Self { table, corpus, masks, transcripts: by_key })
    }

    /// Transcripts that define what `subject` described on `image`.
    pub fn describing(
        &self,
        image: &str,
        subject: &str,
        source: DescriptionSource,
    ) -> Result<Vec<&Transcript>, AnalysisError> {
        match source {
            DescriptionSource::SameSubject => self
                .transcripts
                .get(&(image.to_string(), subject.to_string()))
                .map(|t| vec![t])
                .ok_or_else(|| AnalysisError::MissingTranscript { image: image.into(), subject: subject.into() }),
            DescriptionSource::Pooled => {
                let all: Vec<&Transcript> = self
                    .transcripts
                    .range((image.to_string(), String::new())..)
                    .take_while(|((i, _), _)| i == image)
                    .map(|(_, t)| t)
                    .collect();
                if all.is_empty() {
                    return Err(AnalysisError::MissingTranscript { image: image.into(), subject: subject.into() });
                }
                Ok(all)
            }
        }
    }

    pub fn mask(&self, image: &str) -> Result<&SemanticMask, AnalysisError> {
        self.masks.get(image).ok_or_else(|| AnalysisError::MissingMask(image.into()))
    }
}
