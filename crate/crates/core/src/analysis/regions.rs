//! Described/non-described object/background statistics.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::domain::{CategoryKind, CategoryTable, Fixation, GazeSession, SemanticMask, Task, Transcript};
use crate::grid::Pixel;
use crate::salmap::BinaryMask;

use super::dataset::{Dataset, DescriptionSource};
use super::AnalysisError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionClass {
    DescribedObject,
    NonDescribedObject,
    DescribedBackground,
    NonDescribedBackground,
}

impl RegionClass {
    pub const ALL: [RegionClass; 4] = [
        RegionClass::DescribedObject,
        RegionClass::NonDescribedObject,
        RegionClass::DescribedBackground,
        RegionClass::NonDescribedBackground,
    ];

    fn slot(self) -> usize {
        self as usize
    }
}

/// Per-pixel class of an image for one describing subject.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionPartition {
    pub width: usize,
    pub height: usize,
    pub classes: Vec<RegionClass>,
}

impl RegionPartition {
    pub fn class_at(&self, p: Pixel) -> RegionClass {
        self.classes[p.y * self.width + p.x]
    }

    pub fn class_mask(&self, class: RegionClass) -> BinaryMask {
        BinaryMask { width: self.width, height: self.height, bits: self.classes.iter().map(|&c| c == class).collect() }
    }
}

/// Classifies every pixel of `mask` by category kind and by whether any of
/// `transcripts` mentions its category. Unlabeled pixels are
/// non-described background.
pub fn partition_regions(
    mask: &SemanticMask,
    table: &CategoryTable,
    transcripts: &[&Transcript],
) -> Result<RegionPartition, AnalysisError> {
    let described: BTreeSet<u32> = transcripts.iter().flat_map(|t| t.described_categories()).collect();
    let mut lookup: HashMap<u32, RegionClass> = HashMap::new();
    let mut classes = Vec::with_capacity(mask.labels.len());
    for &label in &mask.labels {
        if label == 0 {
            classes.push(RegionClass::NonDescribedBackground);
            continue;
        }
        let class = match lookup.get(&label) {
            Some(&c) => c,
            None => {
                let kind = table.kind(label).ok_or(AnalysisError::UnknownCategory(label))?;
                let c = match (kind, described.contains(&label)) {
                    (CategoryKind::Object, true) => RegionClass::DescribedObject,
                    (CategoryKind::Object, false) => RegionClass::NonDescribedObject,
                    (CategoryKind::Background, true) => RegionClass::DescribedBackground,
                    (CategoryKind::Background, false) => RegionClass::NonDescribedBackground,
                };
                lookup.insert(label, c);
                c
            }
        };
        classes.push(class);
    }
    Ok(RegionPartition { width: mask.width, height: mask.height, classes })
}

/// Fraction of fixations whose pixel lies in `region`.
pub fn attention_ratio(fixations: &[Pixel], region: &BinaryMask) -> Result<f64, AnalysisError> {
    if fixations.is_empty() {
        return Err(AnalysisError::EmptyFixations);
    }
    let inside = fixations.iter().filter(|&&p| region.get(p)).count();
    Ok(inside as f64 / fixations.len() as f64)
}

/// Whether allocation ratios count fixations or sum their durations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    #[default]
    Count,
    Duration,
}

impl Weighting {
    fn weight(self, f: &Fixation) -> f64 {
        match self {
            Weighting::Count => 1.0,
            Weighting::Duration => f.duration_ms(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TableOptions {
    pub description: DescriptionSource,
    pub weighting: Weighting,
    /// Radius in pixels by which object masks grow before deciding whether
    /// an object was fixated.
    pub dilation_px: usize,
    pub max_order: usize,
}

impl Default for TableOptions {
    fn default() -> Self {
        Self { description: DescriptionSource::SameSubject, weighting: Weighting::Count, dilation_px: 0, max_order: 5 }
    }
}

/// Weighted share of `session`'s fixations landing on pixels for which
/// `hit` holds. `None` when the session carries no weight.
fn weighted_share(session: &GazeSession, weighting: Weighting, hit: impl Fn(Pixel) -> bool) -> Option<f64> {
    let mut total = 0.0;
    let mut inside = 0.0;
    for f in &session.fixations {
        let w = weighting.weight(f);
        total += w;
        if hit(f.pixel()) {
            inside += w;
        }
    }
    (total > 0.0).then(|| inside / total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassRatios {
    pub described_object: f64,
    pub non_described_object: f64,
    pub described_background: f64,
    pub non_described_background: f64,
}

impl ClassRatios {
    fn from_array(v: [f64; 4]) -> Self {
        Self {
            described_object: v[0],
            non_described_object: v[1],
            described_background: v[2],
            non_described_background: v[3],
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.described_object, self.non_described_object, self.described_background, self.non_described_background]
    }

    pub fn sum(&self) -> f64 {
        self.as_array().iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionAllocation {
    pub image_id: String,
    pub subject_id: String,
    pub task: Task,
    pub fixations: usize,
    pub ratios: ClassRatios,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationRow {
    pub task: Task,
    pub sessions: usize,
    pub ratios: ClassRatios,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationReport {
    pub rows: Vec<AllocationRow>,
    pub per_session: Vec<SessionAllocation>,
}

fn session_allocation(
    ds: &Dataset,
    image: &str,
    s: &GazeSession,
    opts: &TableOptions,
) -> Result<Option<ClassRatios>, AnalysisError> {
    let mask = ds.mask(image)?;
    let transcripts = ds.describing(image, &s.subject_id, opts.description)?;
    let partition = partition_regions(mask, &ds.table, &transcripts)?;
    let mut acc = [0.0; 4];
    let mut total = 0.0;
    for f in &s.fixations {
        let w = opts.weighting.weight(f);
        acc[partition.class_at(f.pixel()).slot()] += w;
        total += w;
    }
    if total <= 0.0 {
        return Ok(None);
    }
    Ok(Some(ClassRatios::from_array(acc.map(|v| v / total))))
}

/// Mean attention allocation over the four region classes, one row per
/// task, macro-averaged over `(image, subject)` sessions. Sessions without
/// fixations are skipped.
pub fn allocation_table(ds: &Dataset, tasks: &[Task], opts: &TableOptions) -> Result<AllocationReport, AnalysisError> {
    let mut rows = Vec::new();
    let mut per_session = Vec::new();
    for &task in tasks {
        let mut sum = [0.0; 4];
        let mut n = 0usize;
        for (image, s) in ds.corpus.sessions(task) {
            let Some(r) = session_allocation(ds, image, s, opts)? else { continue };
            for (acc, v) in sum.iter_mut().zip(r.as_array()) {
                *acc += v;
            }
            n += 1;
            per_session.push(SessionAllocation {
                image_id: image.to_string(),
                subject_id: s.subject_id.clone(),
                task,
                fixations: s.fixations.len(),
                ratios: r,
            });
        }
        if n == 0 {
            continue;
        }
        rows.push(AllocationRow { task, sessions: n, ratios: ClassRatios::from_array(sum.map(|v| v / n as f64)) });
    }
    Ok(AllocationReport { rows, per_session })
}

/// Object categories in first-mention order, restricted to objects present
/// in the mask; repeated mentions of a category keep the first position.
pub fn described_object_order(
    transcript: &Transcript,
    mask_categories: &BTreeSet<u32>,
    table: &CategoryTable,
) -> Vec<u32> {
    let mut nouns: Vec<_> = transcript.nouns.iter().collect();
    nouns.sort_by_key(|n| n.order);
    let mut out: Vec<u32> = Vec::new();
    for n in nouns {
        if let Some(c) = n.category_id {
            if table.kind(c) == Some(CategoryKind::Object) && mask_categories.contains(&c) && !out.contains(&c) {
                out.push(c);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NounOrderEntry {
    pub image_id: String,
    pub subject_id: String,
    pub transcript_subject: String,
    /// `(order, category_id, ratio)` for each described object up to `max_order`.
    pub orders: Vec<(usize, u32, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NounOrderReport {
    pub task: Task,
    pub max_order: usize,
    /// Mean ratio for orders `1..=max_order`; `None` where no session has
    /// an object at that order.
    pub values: Vec<Option<f64>>,
    pub counts: Vec<usize>,
    pub per_session: Vec<NounOrderEntry>,
}

/// Attention allocated to the object described `k`-th, averaged over the
/// sessions that have a `k`-th described object in the mask.
pub fn noun_order_allocation(ds: &Dataset, task: Task, opts: &TableOptions) -> Result<NounOrderReport, AnalysisError> {
    let max = opts.max_order;
    let mut sums = vec![0.0; max];
    let mut counts = vec![0usize; max];
    let mut per_session = Vec::new();
    for (image, s) in ds.corpus.sessions(task) {
        let mask = ds.mask(image)?;
        let present: BTreeSet<u32> = mask.categories().into_iter().collect();
        for t in ds.describing(image, &s.subject_id, opts.description)? {
            let order = described_object_order(t, &present, &ds.table);
            let mut orders = Vec::new();
            for (k, &cat) in order.iter().take(max).enumerate() {
                let Some(r) = weighted_share(s, opts.weighting, |p| mask.label(p) == cat) else { break };
                sums[k] += r;
                counts[k] += 1;
                orders.push((k + 1, cat, r));
            }
            per_session.push(NounOrderEntry {
                image_id: image.to_string(),
                subject_id: s.subject_id.clone(),
                transcript_subject: t.subject_id.clone(),
                orders,
            });
        }
    }
    let values = sums.iter().zip(&counts).map(|(&s, &c)| (c > 0).then(|| s / c as f64)).collect();
    Ok(NounOrderReport { task, max_order: max, values, counts, per_session })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DurationStats {
    pub task: Task,
    /// Mean fixation duration (s) on described objects; `None` if no
    /// fixation landed on one.
    pub described_object_s: Option<f64>,
    pub non_described_object_s: Option<f64>,
    pub sessions_described: usize,
    pub sessions_non_described: usize,
}

impl DurationStats {
    pub fn described(&self) -> Result<f64, AnalysisError> {
        self.described_object_s.ok_or(AnalysisError::EmptyClass("described object"))
    }

    pub fn non_described(&self) -> Result<f64, AnalysisError> {
        self.non_described_object_s.ok_or(AnalysisError::EmptyClass("non-described object"))
    }
}

/// Mean fixation duration on described vs non-described objects. Each
/// session contributes its own mean; sessions are averaged unweighted.
pub fn fixation_duration_stats(ds: &Dataset, task: Task, opts: &TableOptions) -> Result<DurationStats, AnalysisError> {
    let (mut d_sum, mut d_n, mut nd_sum, mut nd_n) = (0.0, 0usize, 0.0, 0usize);
    for (image, s) in ds.corpus.sessions(task) {
        let mask = ds.mask(image)?;
        let transcripts = ds.describing(image, &s.subject_id, opts.description)?;
        let partition = partition_regions(mask, &ds.table, &transcripts)?;
        let (mut ds_, mut dn, mut ns, mut nn) = (0.0, 0usize, 0.0, 0usize);
        for f in &s.fixations {
            match partition.class_at(f.pixel()) {
                RegionClass::DescribedObject => {
                    ds_ += f.duration_ms();
                    dn += 1;
                }
                RegionClass::NonDescribedObject => {
                    ns += f.duration_ms();
                    nn += 1;
                }
                _ => {}
            }
        }
        if dn > 0 {
            d_sum += ds_ / dn as f64 / 1000.0;
            d_n += 1;
        }
        if nn > 0 {
            nd_sum += ns / nn as f64 / 1000.0;
            nd_n += 1;
        }
    }
    Ok(DurationStats {
        task,
        described_object_s: (d_n > 0).then(|| d_sum / d_n as f64),
        non_described_object_s: (nd_n > 0).then(|| nd_sum / nd_n as f64),
        sessions_described: d_n,
        sessions_non_described: nd_n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DescribeFixateProbs {
    pub task: Task,
    /// Objects (`image`, `category`, `subject`) present in the masks.
    pub objects: usize,
    pub fixated: usize,
    pub described: usize,
    pub fixated_and_described: usize,
    /// `None` when no object was fixated.
    pub p_desc_given_fix: Option<f64>,
    /// `None` when no present object was described.
    pub p_fix_given_desc: Option<f64>,
}

impl DescribeFixateProbs {
    pub fn desc_given_fix(&self) -> Result<f64, AnalysisError> {
        self.p_desc_given_fix.ok_or(AnalysisError::EmptyDenominator("fixated objects"))
    }

    pub fn fix_given_desc(&self) -> Result<f64, AnalysisError> {
        self.p_fix_given_desc.ok_or(AnalysisError::EmptyDenominator("described objects"))
    }
}

/// Categories whose pixels lie within `radius` of some fixation.
fn fixated_categories(mask: &SemanticMask, fixations: &[Fixation], radius: usize) -> BTreeSet<u32> {
    let mut out = BTreeSet::new();
    let r2 = (radius * radius) as f64;
    for f in fixations {
        let p = f.pixel();
        for y in p.y.saturating_sub(radius)..=(p.y + radius).min(mask.height - 1) {
            for x in p.x.saturating_sub(radius)..=(p.x + radius).min(mask.width - 1) {
                let q = Pixel::new(x, y);
                if p.dist2(q) <= r2 {
                    let l = mask.label(q);
                    if l != 0 {
                        out.insert(l);
                    }
                }
            }
        }
    }
    out
}

/// `p(described | fixated)` and `p(fixated | described)` over objects,
/// counting every `(image, category, subject)` triple once.
pub fn describe_fixate_probs(
    ds: &Dataset,
    task: Task,
    opts: &TableOptions,
) -> Result<DescribeFixateProbs, AnalysisError> {
    let (mut objects, mut fixated, mut described, mut both) = (0, 0, 0, 0);
    for (image, s) in ds.corpus.sessions(task) {
        let mask = ds.mask(image)?;
        let transcripts = ds.describing(image, &s.subject_id, opts.description)?;
        let said: BTreeSet<u32> = transcripts.iter().flat_map(|t| t.described_categories()).collect();
        let seen = fixated_categories(mask, &s.fixations, opts.dilation_px);
        for c in mask.categories() {
            if ds.table.kind(c) != Some(CategoryKind::Object) {
                continue;
            }
            objects += 1;
            let f = seen.contains(&c);
            let d = said.contains(&c);
            fixated += f as usize;
            described += d as usize;
            both += (f && d) as usize;
        }
    }
    Ok(DescribeFixateProbs {
        task,
        objects,
        fixated,
        described,
        fixated_and_described: both,
        p_desc_given_fix: (fixated > 0).then(|| both as f64 / fixated as f64),
        p_fix_given_desc: (described > 0).then(|| both as f64 / described as f64),
    })
}

/// Counts nouns without a mask category, most frequent first (ties by word).
pub fn unannotated_noun_tally<'a>(transcripts: impl IntoIterator<Item = &'a Transcript>) -> Vec<(String, usize)> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in transcripts {
        for n in &t.nouns {
            if n.category_id.is_none() {
                *counts.entry(n.word.as_str()).or_default() += 1;
            }
        }
    }
    let mut out: Vec<(String, usize)> = counts.into_iter().map(|(w, c)| (w.to_string(), c)).collect();
    out.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}
