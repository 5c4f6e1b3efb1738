use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::analysis::{
    aggregate_agreement, allocation_table, congruency_correlation, describe_fixate_probs, encoder_agreement,
    fixation_duration_stats, ioc_matrix, noun_order_allocation, unannotated_noun_tally, AgreementResult, GazeCorpus,
    RegionClass, TableOptions,
};
use crate::attend::{foveate, wta_select};
use crate::domain::{validate_session, Task};
use crate::grid::{FloatGridStack, Grid, Pixel, SaliencyMap};
use crate::ingest::{parse_ppm, parse_scores, write_fgrid, write_pgm, write_ppm, write_scores};
use crate::metrics::{auc_judd, nss, shuffled_auc};
use crate::report::fmt_num;
use crate::salmap::{average_map, fixations_to_salmap};
use crate::temporal::{bin_fixations, dtw_distance, AttentionSequence, DtwResult};

use super::load::{self, data_err, image_file};
use super::*;

pub fn dispatch(command: &Command) -> Result<Outcome, CliError> {
    match command {
        Command::Validate(a) => validate(a),
        Command::Salmap(a) => salmap(a),
        Command::Avgmap(a) => avgmap(a),
        Command::Metrics(a) => metrics(a),
        Command::Ioc(a) => ioc(a),
        Command::Alloc(a) => alloc(a),
        Command::Nounorder(a) => nounorder(a),
        Command::Durations(a) => durations(a),
        Command::Probs(a) => probs(a),
        Command::Unannotated(a) => unannotated(a),
        Command::Agreement(a) => agreement(a),
        Command::Dtw(a) => dtw(a),
        Command::Correlate(a) => correlate(a),
        Command::Wta(a) => wta(a),
        Command::Foveate(a) => foveate_cmd(a),
    }
}

fn outcome(results: impl Serialize, summary: String, artifacts: Vec<(String, Vec<u8>)>) -> Outcome {
    Outcome { results: serde_json::to_value(results).expect("results serialize"), summary, artifacts, failed: false }
}

fn data(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, fmt_num)
}

fn mean(xs: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (s, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

/// Max-scaled 8-bit rendering of a grid.
fn grid_pgm(g: &Grid) -> Vec<u8> {
    let max = g.values().iter().copied().fold(0.0, f64::max);
    let data: Vec<u8> = g
        .values()
        .iter()
        .map(|&v| if max > 0.0 { (v / max * 255.0).round().clamp(0.0, 255.0) as u8 } else { 0 })
        .collect();
    write_pgm(g.width(), g.height(), &data)
}

fn map_artifacts(stem: &str, g: &Grid) -> [(String, Vec<u8>); 2] {
    let stack = FloatGridStack::from_grids(std::slice::from_ref(g)).expect("nonempty grid");
    [(format!("{stem}.fgrid"), write_fgrid(&stack)), (format!("{stem}.pgm"), grid_pgm(g))]
}

/// Pools every session's fixations on one image for one task.
fn image_pixels(corpus: &GazeCorpus, image: &str, task: Task) -> Vec<Pixel> {
    corpus.images[image].sessions.get(&task).into_iter().flatten().flat_map(|s| s.pixels()).collect()
}

fn validate(a: &ValidateArgs) -> Result<Outcome, CliError> {
    let sessions = load::sessions(&a.gaze.fixations)?;
    let dims = load::dims(&sessions, a.gaze.masks.as_deref(), a.gaze.image_size)?
        .ok_or_else(|| CliError::Usage("image sizes unknown: give --masks or --image-size".into()))?;
    let mut invalid = Vec::new();
    for s in &sessions {
        let (w, h) = dims[&s.image_id];
        let v = validate_session(s, w, h);
        if !v.is_empty() {
            invalid.push(json!({
                "task": s.task,
                "image_id": s.image_id,
                "subject_id": s.subject_id,
                "violations": v.iter().map(ToString::to_string).collect::<Vec<_>>(),
            }));
        }
    }
    let fixations: usize = sessions.iter().map(|s| s.fixations.len()).sum();
    let summary = format!("validate: {} sessions, {fixations} fixations, {} invalid", sessions.len(), invalid.len());
    let failed = !invalid.is_empty();
    let results = json!({ "sessions": sessions.len(), "fixations": fixations, "invalid": invalid });
    Ok(Outcome { failed, ..outcome(results, summary, Vec::new()) })
}

fn salmap(a: &SalmapArgs) -> Result<Outcome, CliError> {
    let corpus = load::corpus(&a.gaze, None, |id| a.image.as_deref().is_none_or(|x| x == id))?;
    let jobs: Vec<(Task, &String)> = corpus
        .images
        .iter()
        .flat_map(|(id, img)| img.sessions.keys().map(move |&t| (t, id)))
        .filter(|(t, _)| a.task.is_none_or(|x| x == *t))
        .collect();
    let rendered: Vec<Option<(serde_json::Value, SaliencyMap)>> = jobs
        .par_iter()
        .map(|&(task, id)| {
            let img = &corpus.images[id.as_str()];
            let px = image_pixels(&corpus, id, task);
            if px.is_empty() {
                return Ok(None);
            }
            let map = fixations_to_salmap(&px, img.width, img.height, a.sigma_px).map_err(data)?;
            let row = json!({
                "task": task, "image_id": id, "width": img.width, "height": img.height,
                "fixations": px.len(), "subjects": img.sessions[&task].len(),
            });
            Ok(Some((row, map)))
        })
        .collect::<Result<_, CliError>>()?;
    let mut rows = Vec::new();
    let mut artifacts = Vec::new();
    for ((task, id), r) in jobs.iter().zip(rendered) {
        if let Some((row, map)) = r {
            artifacts.extend(map_artifacts(&format!("salmap_{task}_{id}"), &map));
            rows.push(row);
        }
    }
    let summary = format!("salmap: {} maps (sigma {} px)", rows.len(), fmt_num(a.sigma_px));
    Ok(outcome(json!({ "maps": rows }), summary, artifacts))
}

fn center_of_mass(g: &Grid) -> (f64, f64) {
    let total = g.sum();
    let (mut cx, mut cy) = (0.0, 0.0);
    for (i, v) in g.values().iter().enumerate() {
        let p = g.pixel_at(i);
        cx += v * p.x as f64;
        cy += v * p.y as f64;
    }
    (cx / total, cy / total)
}

fn avgmap(a: &AvgmapArgs) -> Result<Outcome, CliError> {
    let corpus = load::corpus(&a.gaze, None, |_| true)?;
    let (cw, ch) = match a.canvas {
        Some(c) => (c.width, c.height),
        None => {
            let first = corpus.images.values().next().ok_or_else(|| CliError::Data("no fixations".into()))?;
            (first.width, first.height)
        }
    };
    let mut rows = Vec::new();
    let mut artifacts = Vec::new();
    for task in corpus.tasks() {
        let ids: Vec<&String> = corpus.images.keys().collect();
        let maps: Vec<Option<SaliencyMap>> = ids
            .par_iter()
            .map(|id| {
                let img = &corpus.images[id.as_str()];
                let px = image_pixels(&corpus, id, task);
                if px.is_empty() {
                    return Ok(None);
                }
                let m = fixations_to_salmap(&px, img.width, img.height, a.sigma_px).map_err(data)?;
                if m.dims() == (cw, ch) {
                    return Ok(Some(m));
                }
                SaliencyMap::normalize(m.resize_bilinear(cw, ch)).map(Some).map_err(data)
            })
            .collect::<Result<_, CliError>>()?;
        let maps: Vec<SaliencyMap> = maps.into_iter().flatten().collect();
        if maps.is_empty() {
            continue;
        }
        let avg = average_map(&maps).map_err(data)?;
        let (cx, cy) = center_of_mass(&avg);
        artifacts.extend(map_artifacts(&format!("avgmap_{task}"), &avg));
        rows.push(json!({
            "task": task, "images": maps.len(), "width": cw, "height": ch,
            "center_of_mass": { "x": cx, "y": cy },
        }));
    }
    let summary = format!("avgmap: {} task maps on a {cw}x{ch} canvas", rows.len());
    Ok(outcome(json!({ "tasks": rows }), summary, artifacts))
}

/// Reads `<dir>/<image>.fgrid` for every image of the logs that has one.
fn stacks_for(
    logs: &[TaskPath],
    dir: &std::path::Path,
) -> Result<(BTreeMap<String, FloatGridStack>, Vec<String>), CliError> {
    let sessions = load::sessions(logs)?;
    let ids: std::collections::BTreeSet<&str> = sessions.iter().map(|s| s.image_id.as_str()).collect();
    let mut found = BTreeMap::new();
    let mut missing = Vec::new();
    for id in ids {
        let path = image_file(dir, id, "fgrid");
        if path.exists() {
            found.insert(id.to_string(), load::fgrid(&path)?);
        } else {
            missing.push(id.to_string());
        }
    }
    Ok((found, missing))
}

fn stack_dims(stacks: &BTreeMap<String, FloatGridStack>) -> HashMap<String, (usize, usize)> {
    stacks.iter().map(|(id, s)| (id.clone(), (s.width(), s.height()))).collect()
}

#[derive(Serialize)]
struct ImageMetrics {
    image_id: String,
    fixations: usize,
    nss: f64,
    auc_judd: f64,
    /// `None` without negatives from other images.
    sauc: Option<f64>,
}

fn metrics(a: &MetricsArgs) -> Result<Outcome, CliError> {
    let (maps, missing) = stacks_for(&a.gaze.fixations, &a.maps)?;
    let corpus = load::corpus(&a.gaze, Some(&stack_dims(&maps)), |id| maps.contains_key(id))?;
    let ids: Vec<&String> = maps.keys().filter(|id| corpus.images.contains_key(id.as_str())).collect();
    let fix: BTreeMap<&str, Vec<Pixel>> =
        ids.iter().map(|id| (id.as_str(), image_pixels(&corpus, id, a.task))).collect();
    let per_image: Vec<Option<ImageMetrics>> = ids
        .par_iter()
        .map(|id| {
            let img = &corpus.images[id.as_str()];
            let px = &fix[id.as_str()];
            if px.is_empty() {
                return Ok(None);
            }
            let mut map = maps[id.as_str()].grid(0);
            if map.dims() != (img.width, img.height) {
                map = map.resize_bilinear(img.width, img.height);
            }
            let ctx = |e: crate::metrics::MetricError| CliError::Data(format!("image `{id}`: {e}"));
            let pool: Vec<Pixel> = fix
                .iter()
                .filter(|(other, _)| *other != id)
                .flat_map(|(_, p)| p.iter().copied())
                .filter(|&p| map.contains(p))
                .collect();
            let sauc = if pool.is_empty() {
                None
            } else {
                Some(shuffled_auc(&map, px, &pool, a.n_splits, a.common.seed).map_err(ctx)?)
            };
            Ok(Some(ImageMetrics {
                image_id: id.to_string(),
                fixations: px.len(),
                nss: nss(&map, px).map_err(ctx)?,
                auc_judd: auc_judd(&map, px).map_err(ctx)?,
                sauc,
            }))
        })
        .collect::<Result<_, CliError>>()?;
    let per_image: Vec<ImageMetrics> = per_image.into_iter().flatten().collect();
    let aggregate = json!({
        "images": per_image.len(),
        "nss": mean(per_image.iter().map(|m| m.nss)),
        "auc_judd": mean(per_image.iter().map(|m| m.auc_judd)),
        "sauc": mean(per_image.iter().filter_map(|m| m.sauc)),
    });
    let mut csv = String::from("image_id,nss,auc_judd,sauc\n");
    for m in &per_image {
        let _ = writeln!(csv, "{},{},{},{}", m.image_id, fmt_num(m.nss), fmt_num(m.auc_judd), opt(m.sauc));
    }
    let nss_scores: BTreeMap<String, f64> = per_image.iter().map(|m| (m.image_id.clone(), m.nss)).collect();
    let summary = format!(
        "metrics: {} images, NSS {}, AUC-Judd {}, s-AUC {}",
        per_image.len(),
        opt(aggregate["nss"].as_f64()),
        opt(aggregate["auc_judd"].as_f64()),
        opt(aggregate["sauc"].as_f64()),
    );
    let artifacts =
        vec![("metrics.csv".into(), csv.into_bytes()), ("consistency_nss.csv".into(), write_scores(&nss_scores))];
    Ok(outcome(
        json!({ "task": a.task, "per_image": per_image, "aggregate": aggregate, "missing_maps": missing }),
        summary,
        artifacts,
    ))
}

fn ioc(a: &IocArgs) -> Result<Outcome, CliError> {
    let corpus = load::corpus(&a.gaze, None, |_| true)?;
    let report = ioc_matrix(&corpus, a.sigma_px).map_err(data)?;
    let mut csv = String::from("left_out");
    for t in &report.tasks {
        let _ = write!(csv, ",{t}");
    }
    csv.push('\n');
    for (t, row) in report.tasks.iter().zip(&report.matrix) {
        csv.push_str(t.as_str());
        for v in row {
            let _ = write!(csv, ",{}", opt(*v));
        }
        csv.push('\n');
    }
    let diag: Vec<String> =
        report.tasks.iter().enumerate().map(|(i, t)| format!("{t}/{t} {}", opt(report.matrix[i][i]))).collect();
    let summary = format!("ioc: {} images, {}", corpus.images.len(), diag.join(", "));
    Ok(outcome(&report, summary, vec![("ioc.csv".into(), csv.into_bytes())]))
}

fn table_options(d: &DescribedArgs) -> TableOptions {
    TableOptions {
        description: d.description.into(),
        weighting: d.weighting.into(),
        dilation_px: d.dilation_px,
        max_order: d.max_order,
    }
}

fn alloc(a: &DescribedArgs) -> Result<Outcome, CliError> {
    let ds = load::dataset(a)?;
    let report = allocation_table(&ds, &ds.corpus.tasks(), &table_options(a)).map_err(data)?;
    let mut csv = String::from("task,sessions");
    for c in RegionClass::ALL {
        let _ = write!(csv, ",{}", serde_json::to_value(c).expect("class name").as_str().expect("string"));
    }
    csv.push('\n');
    let mut parts = Vec::new();
    for row in &report.rows {
        let _ = write!(csv, "{},{}", row.task, row.sessions);
        for v in row.ratios.as_array() {
            let _ = write!(csv, ",{}", fmt_num(v));
        }
        csv.push('\n');
        let r = row.ratios.as_array().map(fmt_num);
        parts.push(format!("{} ({})", row.task, r.join(", ")));
    }
    let summary = format!("alloc: {}", parts.join("; "));
    Ok(outcome(&report, summary, vec![("alloc.csv".into(), csv.into_bytes())]))
}

fn nounorder(a: &TaskDescribedArgs) -> Result<Outcome, CliError> {
    let ds = load::dataset(&a.described)?;
    let report = noun_order_allocation(&ds, a.task, &table_options(&a.described)).map_err(data)?;
    let mut csv = String::from("order,value,sessions\n");
    for (k, (v, n)) in report.values.iter().zip(&report.counts).enumerate() {
        let _ = writeln!(csv, "{},{},{n}", k + 1, opt(*v));
    }
    let vals: Vec<String> = report.values.iter().map(|v| v.map_or("-".into(), fmt_num)).collect();
    let summary = format!("nounorder: {} ({})", a.task, vals.join(", "));
    Ok(outcome(&report, summary, vec![("nounorder.csv".into(), csv.into_bytes())]))
}

fn durations(a: &TaskDescribedArgs) -> Result<Outcome, CliError> {
    let ds = load::dataset(&a.described)?;
    let stats = fixation_duration_stats(&ds, a.task, &table_options(&a.described)).map_err(data)?;
    let csv = format!(
        "class,mean_s,sessions\ndescribed_object,{},{}\nnon_described_object,{},{}\n",
        opt(stats.described_object_s),
        stats.sessions_described,
        opt(stats.non_described_object_s),
        stats.sessions_non_described
    );
    let show = |x: Option<f64>| x.map_or("n/a".into(), |v| format!("{} s", fmt_num(v)));
    let summary = format!(
        "durations: {} described {}, non-described {}",
        a.task,
        show(stats.described_object_s),
        show(stats.non_described_object_s)
    );
    Ok(outcome(&stats, summary, vec![("durations.csv".into(), csv.into_bytes())]))
}

fn probs(a: &TaskDescribedArgs) -> Result<Outcome, CliError> {
    let ds = load::dataset(&a.described)?;
    let p = describe_fixate_probs(&ds, a.task, &table_options(&a.described)).map_err(data)?;
    let csv = format!(
        "quantity,value\np_desc_given_fix,{}\np_fix_given_desc,{}\n",
        opt(p.p_desc_given_fix),
        opt(p.p_fix_given_desc)
    );
    let summary = format!(
        "probs: {} p(desc|fix) {}, p(fix|desc) {} over {} objects",
        a.task,
        p.p_desc_given_fix.map_or("n/a".into(), fmt_num),
        p.p_fix_given_desc.map_or("n/a".into(), fmt_num),
        p.objects
    );
    Ok(outcome(&p, summary, vec![("probs.csv".into(), csv.into_bytes())]))
}

fn unannotated(a: &UnannotatedArgs) -> Result<Outcome, CliError> {
    let ts = load::transcripts(&a.transcripts, a.lexicon.as_deref())?;
    let tally = unannotated_noun_tally(&ts);
    let mut csv = String::from("word,count\n");
    for (w, c) in &tally {
        let _ = writeln!(csv, "{w},{c}");
    }
    let summary = format!(
        "unannotated: {} distinct nouns, {} mentions",
        tally.len(),
        tally.iter().map(|(_, c)| c).sum::<usize>()
    );
    let rows: Vec<_> = tally.iter().map(|(w, c)| json!({ "word": w, "count": c })).collect();
    Ok(outcome(
        json!({ "transcripts": ts.len(), "tally": rows }),
        summary,
        vec![("unannotated.csv".into(), csv.into_bytes())],
    ))
}

#[derive(Serialize)]
struct ImageAgreement {
    image_id: String,
    #[serde(flatten)]
    result: AgreementResult,
}

fn agreement(a: &AgreementArgs) -> Result<Outcome, CliError> {
    let (stacks, missing) = stacks_for(&a.gaze.fixations, &a.activations)?;
    let corpus = load::corpus(&a.gaze, None, |id| stacks.contains_key(id))?;
    let ids: Vec<&String> = stacks.keys().filter(|id| corpus.images.contains_key(id.as_str())).collect();
    let per_image: Vec<Option<ImageAgreement>> = ids
        .par_iter()
        .map(|id| {
            let img = &corpus.images[id.as_str()];
            let px = image_pixels(&corpus, id, a.task);
            if px.is_empty() {
                return Ok(None);
            }
            let human = fixations_to_salmap(&px, img.width, img.height, a.sigma_px).map_err(data)?;
            let result = encoder_agreement(&human, &stacks[id.as_str()], a.percent, a.threshold)
                .map_err(|e| CliError::Data(format!("image `{id}`: {e}")))?;
            Ok(Some(ImageAgreement { image_id: id.to_string(), result }))
        })
        .collect::<Result<_, CliError>>()?;
    let per_image: Vec<ImageAgreement> = per_image.into_iter().flatten().collect();
    let aggregate = aggregate_agreement(per_image.iter().map(|p| &p.result));
    let mut csv = String::from("image_id,region,size,best_nss,best_grid,attended\n");
    for p in &per_image {
        for r in &p.result.regions {
            let grid = r.best_grid.map_or(String::new(), |g| g.to_string());
            let _ = writeln!(csv, "{},{},{},{},{grid},{}", p.image_id, r.label, r.size, opt(r.best_nss), r.attended);
        }
    }
    let summary = format!(
        "agreement: {} images, {} regions, attended {}, mean best NSS {}",
        aggregate.images,
        aggregate.regions,
        fmt_num(aggregate.attended_fraction),
        opt(aggregate.mean_best_nss)
    );
    Ok(outcome(
        json!({ "task": a.task, "per_image": per_image, "aggregate": aggregate, "missing_activations": missing }),
        summary,
        vec![("agreement.csv".into(), csv.into_bytes())],
    ))
}

/// Machine frames resampled to `w × h` and renormalized.
fn machine_sequence(stack: &FloatGridStack, w: usize, h: usize) -> Result<AttentionSequence, CliError> {
    let frames = stack
        .grids()
        .enumerate()
        .map(|(i, g)| {
            let g = if g.dims() == (w, h) { g } else { g.resize_bilinear(w, h) };
            SaliencyMap::normalize(g).map_err(|e| CliError::Data(format!("machine frame {i}: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let n = frames.len();
    AttentionSequence::new(frames, (0..n).collect()).map_err(data)
}

fn dtw_csv_path(r: &DtwResult) -> String {
    let mut csv = String::from("step,human_frame,machine_frame,cost\n");
    for (k, ((i, j), c)) in r.path.iter().zip(&r.costs).enumerate() {
        let _ = writeln!(csv, "{k},{i},{j},{}", fmt_num(*c));
    }
    csv
}

#[derive(Serialize)]
struct SessionDtw {
    image_id: String,
    subject_id: String,
    human_frames: usize,
    machine_frames: usize,
    distance: f64,
    path_len: usize,
}

fn dtw(a: &DtwArgs) -> Result<Outcome, CliError> {
    let norm = a.normalization.into();
    if let Some(hp) = &a.human {
        let human = AttentionSequence::from_stack(&load::fgrid(hp)?).map_err(|e| data_err(hp, e))?;
        let (w, h) = human.dims();
        let machine = machine_sequence(&load::fgrid(&a.machine)?, w, h)?;
        let r = dtw_distance(&human, &machine, norm).map_err(data)?;
        let summary = format!("dtw: distance {} over {} aligned pairs", fmt_num(r.distance), r.path.len());
        let csv = dtw_csv_path(&r);
        return Ok(outcome(&r, summary, vec![("dtw.csv".into(), csv.into_bytes())]));
    }

    let (stacks, missing) = stacks_for(&a.fixations, &a.machine)?;
    let sessions = load::sessions(&a.fixations)?.into_iter().filter(|s| stacks.contains_key(&s.image_id)).collect();
    let corpus =
        load::corpus_from(sessions, &a.fixations, a.masks.as_deref(), a.image_size, Some(&stack_dims(&stacks)))?;
    let ids: Vec<&String> = stacks.keys().filter(|id| corpus.images.contains_key(id.as_str())).collect();
    let per_image: Vec<Vec<SessionDtw>> = ids
        .par_iter()
        .map(|id| {
            let img = &corpus.images[id.as_str()];
            let machine = machine_sequence(&stacks[id.as_str()], img.width, img.height)?;
            let mut rows = Vec::new();
            for s in img.sessions.get(&a.task).into_iter().flatten() {
                if s.fixations.is_empty() {
                    continue;
                }
                let ctx = |e: crate::temporal::TemporalError| {
                    CliError::Data(format!("image `{id}` subject `{}`: {e}", s.subject_id))
                };
                let human = bin_fixations(s, a.bin_ms, a.sigma_px, img.width, img.height).map_err(ctx)?;
                let r = dtw_distance(&human, &machine, norm).map_err(ctx)?;
                rows.push(SessionDtw {
                    image_id: id.to_string(),
                    subject_id: s.subject_id.clone(),
                    human_frames: human.len(),
                    machine_frames: machine.len(),
                    distance: r.distance,
                    path_len: r.path.len(),
                });
            }
            Ok(rows)
        })
        .collect::<Result<_, CliError>>()?;

    let per_image_mean: BTreeMap<String, f64> = ids
        .iter()
        .zip(&per_image)
        .filter_map(|(id, rows)| mean(rows.iter().map(|r| r.distance)).map(|m| (id.to_string(), m)))
        .collect();
    let sessions: Vec<SessionDtw> = per_image.into_iter().flatten().collect();
    let mut csv = String::from("image_id,subject_id,distance,path_len\n");
    for r in &sessions {
        let _ = writeln!(csv, "{},{},{},{}", r.image_id, r.subject_id, fmt_num(r.distance), r.path_len);
    }
    let aggregate = json!({
        "images": per_image_mean.len(),
        "sessions": sessions.len(),
        "mean_distance": mean(per_image_mean.values().copied()),
    });
    let summary = format!(
        "dtw: {} sessions on {} images, mean distance {}",
        sessions.len(),
        per_image_mean.len(),
        opt(aggregate["mean_distance"].as_f64())
    );
    let artifacts =
        vec![("dtw.csv".into(), csv.into_bytes()), ("consistency_dtw.csv".into(), write_scores(&per_image_mean))];
    Ok(outcome(
        json!({
            "task": a.task, "per_session": sessions, "per_image": per_image_mean,
            "aggregate": aggregate, "missing_sequences": missing,
        }),
        summary,
        artifacts,
    ))
}

fn correlate(a: &CorrelateArgs) -> Result<Outcome, CliError> {
    let c = parse_scores(&load::read(&a.consistency)?).map_err(|e| data_err(&a.consistency, e))?;
    let s = parse_scores(&load::read(&a.scores)?).map_err(|e| data_err(&a.scores, e))?;
    let r = congruency_correlation(&c, &s).map_err(data)?;
    let summary = format!("correlate: Spearman rho {} over {} images", fmt_num(r.rho), r.n);
    Ok(outcome(&r, summary, Vec::new()))
}

fn wta(a: &WtaArgs) -> Result<Outcome, CliError> {
    let stack = load::fgrid(&a.map)?;
    if a.grid >= stack.count() {
        return Err(CliError::Usage(format!("--grid {} but the stack holds {} grids", a.grid, stack.count())));
    }
    let map = stack.grid(a.grid);
    let set = wta_select(&map, a.count, a.radius_px, a.floor).map_err(data)?;
    let mut csv = String::from("rank,x,y,value\n");
    let mut rows = Vec::new();
    for (k, &p) in set.locations().iter().enumerate() {
        let v = map.get(p);
        let _ = writeln!(csv, "{},{},{},{}", k + 1, p.x, p.y, fmt_num(v));
        rows.push(json!({ "x": p.x, "y": p.y, "value": v }));
    }
    let summary = format!("wta: {} locations selected", rows.len());
    Ok(outcome(
        json!({ "width": map.width(), "height": map.height(), "locations": rows }),
        summary,
        vec![("wta.csv".into(), csv.into_bytes())],
    ))
}

fn foveate_cmd(a: &FoveateArgs) -> Result<Outcome, CliError> {
    let img = parse_ppm(&load::read(&a.image)?).map_err(|e| data_err(&a.image, e))?;
    let out = foveate(&img, Pixel::new(a.center.x, a.center.y), a.levels, a.r0_px).map_err(data)?;
    let summary = format!("foveate: {}x{} around ({}, {})", out.width, out.height, a.center.x, a.center.y);
    Ok(outcome(
        json!({ "width": out.width, "height": out.height, "artifact": "foveate.ppm" }),
        summary,
        vec![("foveate.ppm".into(), write_ppm(&out))],
    ))
}
