use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use crate::analysis::{Dataset, GazeCorpus};
use crate::domain::{group_sessions, resolve_nouns, GazeSession, Task};
use crate::grid::FloatGridStack;
use crate::ingest::{
    parse_category_table, parse_fixation_log, parse_lexicon, parse_mask, parse_pgm, parse_transcripts, read_fgrid,
};

use super::{CliError, DescribedArgs, GazeInput, ImageSize, TaskPath};

pub fn data_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

pub fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| data_err(path, e))
}

pub fn fgrid(path: &Path) -> Result<FloatGridStack, CliError> {
    read_fgrid(&read(path)?).map_err(|e| data_err(path, e))
}

/// `<dir>/<image_id>.<ext>`
pub fn image_file(dir: &Path, image: &str, ext: &str) -> PathBuf {
    dir.join(format!("{image}.{ext}"))
}

/// Reads every log into sessions, one task per log.
pub fn sessions(logs: &[TaskPath]) -> Result<Vec<GazeSession>, CliError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for tp in logs {
        if !seen.insert(tp.task) {
            return Err(CliError::Usage(format!("task {} given more than once", tp.task)));
        }
        let records = parse_fixation_log(&read(&tp.path)?).map_err(|e| data_err(&tp.path, e))?;
        out.extend(group_sessions(&records, tp.task));
    }
    Ok(out)
}

fn image_ids(sessions: &[GazeSession]) -> BTreeSet<String> {
    sessions.iter().map(|s| s.image_id.clone()).collect()
}

/// `(width, height)` per image id.
pub type Dims = HashMap<String, (usize, usize)>;

/// Image sizes from masks, falling back to a shared size.
pub fn dims(sessions: &[GazeSession], masks: Option<&Path>, size: Option<ImageSize>) -> Result<Option<Dims>, CliError> {
    if let Some(dir) = masks {
        let mut out = HashMap::new();
        for id in image_ids(sessions) {
            let path = image_file(dir, &id, "pgm");
            let img = parse_pgm(&read(&path)?).map_err(|e| data_err(&path, e))?;
            out.insert(id, (img.width, img.height));
        }
        return Ok(Some(out));
    }
    Ok(size.map(|s| image_ids(sessions).into_iter().map(|id| (id, (s.width, s.height))).collect()))
}

fn with_cap3s(corpus: GazeCorpus, logs: &[TaskPath]) -> GazeCorpus {
    let has = |t: Task| logs.iter().any(|l| l.task == t);
    if has(Task::Cap) && !has(Task::Cap3s) {
        corpus.with_cap3s()
    } else {
        corpus
    }
}

/// Validated corpus; image sizes come from `--masks`, `--image-size` or
/// finally `fallback`.
pub fn corpus(
    gaze: &GazeInput,
    fallback: Option<&HashMap<String, (usize, usize)>>,
    keep: impl Fn(&str) -> bool,
) -> Result<GazeCorpus, CliError> {
    let all: Vec<GazeSession> = sessions(&gaze.fixations)?.into_iter().filter(|s| keep(&s.image_id)).collect();
    corpus_from(all, &gaze.fixations, gaze.masks.as_deref(), gaze.image_size, fallback)
}

pub fn corpus_from(
    sessions: Vec<GazeSession>,
    logs: &[TaskPath],
    masks: Option<&Path>,
    size: Option<ImageSize>,
    fallback: Option<&HashMap<String, (usize, usize)>>,
) -> Result<GazeCorpus, CliError> {
    let dims = match dims(&sessions, masks, size)? {
        Some(d) => d,
        None => fallback
            .cloned()
            .ok_or_else(|| CliError::Usage("image sizes unknown: give --masks or --image-size".into()))?,
    };
    let corpus = GazeCorpus::build(sessions, |id| dims.get(id).copied()).map_err(|e| CliError::Data(e.to_string()))?;
    Ok(with_cap3s(corpus, logs))
}

/// Category table, masks, transcripts and sessions as one dataset.
pub fn dataset(args: &DescribedArgs) -> Result<Dataset, CliError> {
    let table = parse_category_table(&read(&args.categories)?).map_err(|e| data_err(&args.categories, e))?;
    let sessions = sessions(&args.fixations)?;
    let mut masks = BTreeMap::new();
    for id in image_ids(&sessions) {
        let path = image_file(&args.masks, &id, "pgm");
        masks.insert(id, parse_mask(&read(&path)?, &table).map_err(|e| data_err(&path, e))?);
    }
    let transcripts = transcripts(&args.transcripts, args.lexicon.as_deref())?;
    let mut ds = Dataset::new(table, masks, sessions, transcripts).map_err(|e| CliError::Data(e.to_string()))?;
    ds.corpus = with_cap3s(ds.corpus, &args.fixations);
    Ok(ds)
}

pub fn transcripts(path: &Path, lexicon: Option<&Path>) -> Result<Vec<crate::domain::Transcript>, CliError> {
    let ts = parse_transcripts(&read(path)?).map_err(|e| data_err(path, e))?;
    let Some(lp) = lexicon else { return Ok(ts) };
    let lex = parse_lexicon(&read(lp)?).map_err(|e| data_err(lp, e))?;
    Ok(ts.iter().map(|t| resolve_nouns(t, &lex)).collect())
}
