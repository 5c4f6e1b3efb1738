//! Synthetic corpus with planted fixations and descriptions. Expected
//! table values are computed from the plan, never from library code.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use gazekit::analysis::Dataset;
use gazekit::domain::{
    Category, CategoryKind, CategoryTable, Fixation, GazeSession, Noun, SemanticMask, Task, Transcript,
};
use gazekit::ingest::{write_category_table, write_fixation_log, write_mask, write_transcripts};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const W: usize = 40;
pub const H: usize = 30;
pub const SKY: u32 = 10;
pub const GRASS: u32 = 11;
const NAMES: [(u32, &str); 6] = [(1, "person"), (2, "dog"), (3, "car"), (4, "bench"), (SKY, "sky"), (GRASS, "grass")];
pub const SUBJECTS: [&str; 3] = ["s1", "s2", "s3"];

/// Pixel rectangle `(x0, y0, x1, y1)`, half-open.
type Rect = (usize, usize, usize, usize);

fn rect(label: u32) -> Rect {
    match label {
        SKY => (0, 0, W, 8),
        GRASS => (0, 22, W, H),
        0 => (0, 19, W, 22),
        k => {
            let x0 = 1 + 10 * (k as usize - 1);
            (x0, 10, x0 + 8, 18)
        }
    }
}

fn name(label: u32) -> &'static str {
    NAMES.iter().find(|(id, _)| *id == label).unwrap().1
}

/// One planted fixation: the label of the rectangle it was aimed at.
#[derive(Debug, Clone)]
pub struct Planted {
    pub target: u32,
    pub t_start: f64,
    pub duration: f64,
}

#[derive(Debug, Clone)]
pub struct Plan {
    pub image: String,
    pub subject: String,
    pub task: Task,
    pub fixations: Vec<Planted>,
}

pub struct Synth {
    pub table: CategoryTable,
    pub masks: BTreeMap<String, SemanticMask>,
    pub sessions: Vec<GazeSession>,
    pub transcripts: Vec<Transcript>,
    pub plans: Vec<Plan>,
    /// Described labels per `(image, subject)` in first-mention order,
    /// including labels absent from the mask.
    pub mentions: BTreeMap<(String, String), Vec<u32>>,
}

pub fn present(image_index: usize) -> Vec<u32> {
    let mut v = vec![1, 2, 3];
    if image_index.is_multiple_of(2) {
        v.push(4);
    }
    v
}

fn build_mask(image_index: usize) -> SemanticMask {
    let mut labels = vec![0u32; W * H];
    let mut paint = |l: u32| {
        let (x0, y0, x1, y1) = rect(l);
        for y in y0..y1 {
            for x in x0..x1 {
                labels[y * W + x] = l;
            }
        }
    };
    paint(SKY);
    paint(GRASS);
    for l in present(image_index) {
        paint(l);
    }
    SemanticMask { width: W, height: H, labels }
}

impl Synth {
    pub fn new(images: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table = CategoryTable::new(NAMES.iter().map(|&(id, n)| Category {
            id,
            name: n.to_string(),
            kind: if id >= SKY { CategoryKind::Background } else { CategoryKind::Object },
        }))
        .unwrap();
        let mut masks = BTreeMap::new();
        let mut sessions = Vec::new();
        let mut transcripts = Vec::new();
        let mut plans = Vec::new();
        let mut mentions = BTreeMap::new();
        for i in 0..images {
            let id = format!("img{i:02}");
            masks.insert(id.clone(), build_mask(i));
            let here = present(i);
            for subject in SUBJECTS {
                let mut said: Vec<u32> = here.iter().copied().filter(|_| rng.random_bool(0.6)).collect();
                for k in (1..said.len()).rev() {
                    let j = rng.random_range(0..=k);
                    said.swap(k, j);
                }
                if i % 2 == 1 && rng.random_bool(0.5) {
                    let at = rng.random_range(0..=said.len());
                    said.insert(at, 4);
                }
                for bg in [SKY, GRASS] {
                    if rng.random_bool(0.4) {
                        let at = rng.random_range(0..=said.len());
                        said.insert(at, bg);
                    }
                }
                let mut words: Vec<(String, Option<u32>)> =
                    said.iter().map(|&l| (name(l).to_string(), Some(l))).collect();
                if let Some(&first) = said.first() {
                    words.push((name(first).to_string(), Some(first)));
                }
                if rng.random_bool(0.4) {
                    let at = rng.random_range(0..=words.len());
                    words.insert(at, ("camera".into(), None));
                }
                if rng.random_bool(0.2) {
                    words.push(("light".into(), None));
                }
                let text = words.iter().map(|w| w.0.as_str()).collect::<Vec<_>>().join(" ");
                let mut order = 0;
                let nouns = words
                    .into_iter()
                    .map(|(word, category_id)| {
                        order += 1 + rng.random_range(0..3);
                        Noun { word, order, category_id }
                    })
                    .collect();
                transcripts.push(Transcript { subject_id: subject.into(), image_id: id.clone(), text, nouns });
                mentions.insert((id.clone(), subject.to_string()), said.clone());

                for task in [Task::Free, Task::Cap] {
                    let n = if task == Task::Cap { rng.random_range(10..16) } else { rng.random_range(6..12) };
                    let mut targets: Vec<u32> = Vec::new();
                    for &l in &here {
                        let weight = if said.contains(&l) { 3 } else { 1 };
                        targets.extend(std::iter::repeat_n(l, weight));
                    }
                    targets.extend([SKY, GRASS, 0]);
                    let mut t = 0.0;
                    let mut planted = Vec::new();
                    let mut records = Vec::new();
                    for _ in 0..n {
                        let target = targets[rng.random_range(0..targets.len())];
                        let duration = rng.random_range(100..=600) as f64;
                        let (x0, y0, x1, y1) = rect(target);
                        let (x, y) = (rng.random_range(x0..x1), rng.random_range(y0..y1));
                        records.push(Fixation {
                            subject_id: subject.into(),
                            image_id: id.clone(),
                            t_start: t,
                            t_end: t + duration,
                            x: x as f64 + 0.5,
                            y: y as f64 + 0.5,
                        });
                        planted.push(Planted { target, t_start: t, duration });
                        t += duration + 20.0;
                    }
                    sessions.push(GazeSession {
                        subject_id: subject.into(),
                        image_id: id.clone(),
                        task,
                        fixations: records,
                    });
                    plans.push(Plan { image: id.clone(), subject: subject.into(), task, fixations: planted });
                }
            }
        }
        Self { table, masks, sessions, transcripts, plans, mentions }
    }

    pub fn dataset(&self) -> Dataset {
        let mut ds =
            Dataset::new(self.table.clone(), self.masks.clone(), self.sessions.clone(), self.transcripts.clone())
                .unwrap();
        ds.corpus = ds.corpus.with_cap3s();
        ds
    }

    /// Plans for one task; `cap3s` keeps captioning fixations that start
    /// before three seconds.
    pub fn plans(&self, task: Task) -> Vec<Plan> {
        let src = if task == Task::Cap3s { Task::Cap } else { task };
        self.plans
            .iter()
            .filter(|p| p.task == src)
            .map(|p| Plan {
                task,
                fixations: p.fixations.iter().filter(|f| task != Task::Cap3s || f.t_start < 3000.0).cloned().collect(),
                ..p.clone()
            })
            .collect()
    }

    fn said(&self, p: &Plan) -> &Vec<u32> {
        &self.mentions[&(p.image.clone(), p.subject.clone())]
    }

    /// Slot 0..4: described object, non-described object, described
    /// background, non-described background.
    fn slot(&self, p: &Plan, target: u32) -> usize {
        let described = self.said(p).contains(&target);
        match (target, described) {
            (0, _) => 3,
            (SKY | GRASS, true) => 2,
            (SKY | GRASS, false) => 3,
            (_, true) => 0,
            (_, false) => 1,
        }
    }

    pub fn expected_allocation(&self, task: Task, by_duration: bool) -> [f64; 4] {
        let mut sum = [0.0; 4];
        let mut n = 0.0;
        for p in self.plans(task) {
            let mut acc = [0.0; 4];
            for f in &p.fixations {
                acc[self.slot(&p, f.target)] += if by_duration { f.duration } else { 1.0 };
            }
            let total: f64 = acc.iter().sum();
            if total == 0.0 {
                continue;
            }
            for k in 0..4 {
                sum[k] += acc[k] / total;
            }
            n += 1.0;
        }
        sum.map(|v| v / n)
    }

    pub fn expected_noun_order(&self, task: Task, max: usize) -> Vec<Option<f64>> {
        let mut sums = vec![0.0; max];
        let mut counts = vec![0usize; max];
        for p in self.plans(task) {
            if p.fixations.is_empty() {
                continue;
            }
            let idx: usize = p.image[3..].parse().unwrap();
            let here = present(idx);
            let order: Vec<u32> = self.said(&p).iter().copied().filter(|l| here.contains(l)).collect();
            for (k, &l) in order.iter().take(max).enumerate() {
                let hits = p.fixations.iter().filter(|f| f.target == l).count();
                sums[k] += hits as f64 / p.fixations.len() as f64;
                counts[k] += 1;
            }
        }
        sums.iter().zip(&counts).map(|(s, &c)| (c > 0).then(|| s / c as f64)).collect()
    }

    /// Session-mean durations (s) on described and non-described objects,
    /// averaged over sessions that have such fixations.
    pub fn expected_durations(&self, task: Task) -> (Option<f64>, Option<f64>) {
        let mut acc = [(0.0, 0usize); 2];
        for p in self.plans(task) {
            for (slot, a) in acc.iter_mut().enumerate() {
                let d: Vec<f64> =
                    p.fixations.iter().filter(|f| self.slot(&p, f.target) == slot).map(|f| f.duration).collect();
                if !d.is_empty() {
                    a.0 += d.iter().sum::<f64>() / d.len() as f64 / 1000.0;
                    a.1 += 1;
                }
            }
        }
        let mean = |(s, n): (f64, usize)| (n > 0).then(|| s / n as f64);
        (mean(acc[0]), mean(acc[1]))
    }

    /// `(p(described | fixated), p(fixated | described))` over present
    /// objects per session.
    pub fn expected_probs(&self, task: Task) -> (f64, f64) {
        let (mut fix, mut desc, mut both) = (0usize, 0usize, 0usize);
        for p in self.plans(task) {
            let idx: usize = p.image[3..].parse().unwrap();
            let seen: BTreeSet<u32> = p.fixations.iter().map(|f| f.target).collect();
            for l in present(idx) {
                let f = seen.contains(&l);
                let d = self.said(&p).contains(&l);
                fix += f as usize;
                desc += d as usize;
                both += (f && d) as usize;
            }
        }
        (both as f64 / fix as f64, both as f64 / desc as f64)
    }

    /// Writes `categories.csv`, `masks/<id>.pgm`, `free.csv`, `cap.csv`
    /// and `transcripts.jsonl`.
    pub fn write_to(&self, dir: &Path) {
        std::fs::create_dir_all(dir.join("masks")).unwrap();
        std::fs::write(dir.join("categories.csv"), write_category_table(&self.table)).unwrap();
        for (id, m) in &self.masks {
            std::fs::write(dir.join("masks").join(format!("{id}.pgm")), write_mask(m)).unwrap();
        }
        for (task, file) in [(Task::Free, "free.csv"), (Task::Cap, "cap.csv")] {
            let records: Vec<Fixation> =
                self.sessions.iter().filter(|s| s.task == task).flat_map(|s| s.fixations.clone()).collect();
            std::fs::write(dir.join(file), write_fixation_log(&records)).unwrap();
        }
        std::fs::write(dir.join("transcripts.jsonl"), write_transcripts(&self.transcripts)).unwrap();
    }
}
