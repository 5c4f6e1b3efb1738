use rayon::prelude::*;
use serde::Serialize;

use crate::domain::Task;
use crate::grid::Pixel;
use crate::metrics::auc_judd;
use crate::salmap::fixations_to_salmap;

use super::dataset::{GazeCorpus, ImageGaze};
use super::AnalysisError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IocCell {
    pub left_out: Task,
    pub reference: Task,
    /// `None` when no left-out session had fixations.
    pub value: Option<f64>,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IocReport {
    pub tasks: Vec<Task>,
    /// Row = left-out task, column = reference task.
    pub matrix: Vec<Vec<Option<f64>>>,
    pub cells: Vec<IocCell>,
    pub per_image: Vec<IocImage>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IocImage {
    pub image_id: String,
    /// `(left_out, reference, subject, auc)`
    pub scores: Vec<(Task, Task, String, f64)>,
}

fn image_scores(
    image_id: &str,
    img: &ImageGaze,
    tasks: &[Task],
    sigma: f64,
) -> Result<Vec<(Task, Task, String, f64)>, AnalysisError> {
    let mut out = Vec::new();
    for &left in tasks {
        let Some(left_sessions) = img.sessions.get(&left) else { continue };
        for &reference in tasks {
            let Some(ref_sessions) = img.sessions.get(&reference) else { continue };
            for s in left_sessions {
                if s.fixations.is_empty() {
                    continue;
                }
                let others: Vec<Pixel> =
                    ref_sessions.iter().filter(|r| r.subject_id != s.subject_id).flat_map(|r| r.pixels()).collect();
                if others.is_empty() {
                    return Err(AnalysisError::TooFewSubjects { image: image_id.to_string(), task: reference });
                }
                let map = fixations_to_salmap(&others, img.width, img.height, sigma)?;
                let auc = auc_judd(&map, &s.pixels())?;
                out.push((left, reference, s.subject_id.clone(), auc));
            }
        }
    }
    Ok(out)
}

/// Cross-task inter-observer congruency. Each subject's fixations in the
/// left-out task are scored by AUC-Judd against a map built from every
/// other subject's fixations in the reference task; the cell is the mean
/// over all `(image, subject)` pairs. Images are processed in parallel on
/// the current rayon pool and reduced in image-id order.
pub fn ioc_matrix(corpus: &GazeCorpus, sigma: f64) -> Result<IocReport, AnalysisError> {
    let tasks = corpus.tasks();
    let images: Vec<(&String, &ImageGaze)> = corpus.images.iter().collect();
    let per_image: Vec<IocImage> = images
        .par_iter()
        .map(|(id, img)| Ok(IocImage { image_id: id.to_string(), scores: image_scores(id, img, &tasks, sigma)? }))
        .collect::<Result<_, AnalysisError>>()?;

    let n = tasks.len();
    let mut sums = vec![vec![0.0; n]; n];
    let mut counts = vec![vec![0usize; n]; n];
    let pos = |t: Task| tasks.iter().position(|&x| x == t).expect("task listed");
    for img in &per_image {
        for (l, r, _, auc) in &img.scores {
            sums[pos(*l)][pos(*r)] += auc;
            counts[pos(*l)][pos(*r)] += 1;
        }
    }
    let matrix: Vec<Vec<Option<f64>>> = (0..n)
        .map(|i| (0..n).map(|j| (counts[i][j] > 0).then(|| sums[i][j] / counts[i][j] as f64)).collect())
        .collect();
    let cells = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| IocCell { left_out: tasks[i], reference: tasks[j], value: matrix[i][j], samples: counts[i][j] })
        .collect();
    Ok(IocReport { tasks, matrix, cells, per_image })
}
