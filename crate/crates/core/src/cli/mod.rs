//! Command-line front end: argument definitions, config-file merging and
//! report/artifact output.

mod commands;
mod load;

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Serialize, Serializer};

use crate::analysis::{DescriptionSource, Weighting, DEFAULT_NSS_THRESHOLD, DEFAULT_TOP_PERCENT};
use crate::domain::Task;
use crate::report::Report;
use crate::temporal::PathNormalization;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "gazekit", version, about = "Gaze, saliency and caption-attention analytics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(untagged)]
pub enum Command {
    /// Check fixation logs against image bounds and time order.
    Validate(ValidateArgs),
    /// Render one Gaussian saliency map per image and task.
    Salmap(SalmapArgs),
    /// Average the per-image saliency maps of each task.
    Avgmap(AvgmapArgs),
    /// Score model saliency maps against human fixations (NSS, AUC-Judd, s-AUC).
    Metrics(MetricsArgs),
    /// Cross-task inter-observer congruency (AUC-Judd).
    Ioc(IocArgs),
    /// Attention allocation over described/non-described objects and background.
    Alloc(DescribedArgs),
    /// Attention on objects by the order in which they are described.
    Nounorder(TaskDescribedArgs),
    /// Mean fixation duration on described and non-described objects.
    Durations(TaskDescribedArgs),
    /// Probability of describing a fixated object and of fixating a described one.
    Probs(TaskDescribedArgs),
    /// Tally nouns that have no mask category.
    Unannotated(UnannotatedArgs),
    /// Share of human-attended regions that a CNN layer also attends.
    Agreement(AgreementArgs),
    /// DTW distance between human and machine attention sequences.
    Dtw(DtwArgs),
    /// Spearman correlation between per-image consistency and caption scores.
    Correlate(CorrelateArgs),
    /// Winner-take-all fixation selection with inhibition of return.
    Wta(WtaArgs),
    /// Foveate an image around a fixation.
    Foveate(FoveateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate(_) => "validate",
            Command::Salmap(_) => "salmap",
            Command::Avgmap(_) => "avgmap",
            Command::Metrics(_) => "metrics",
            Command::Ioc(_) => "ioc",
            Command::Alloc(_) => "alloc",
            Command::Nounorder(_) => "nounorder",
            Command::Durations(_) => "durations",
            Command::Probs(_) => "probs",
            Command::Unannotated(_) => "unannotated",
            Command::Agreement(_) => "agreement",
            Command::Dtw(_) => "dtw",
            Command::Correlate(_) => "correlate",
            Command::Wta(_) => "wta",
            Command::Foveate(_) => "foveate",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Validate(a) => &a.common,
            Command::Salmap(a) => &a.common,
            Command::Avgmap(a) => &a.common,
            Command::Metrics(a) => &a.common,
            Command::Ioc(a) => &a.common,
            Command::Alloc(a) => &a.common,
            Command::Nounorder(a) | Command::Durations(a) | Command::Probs(a) => &a.described.common,
            Command::Unannotated(a) => &a.common,
            Command::Agreement(a) => &a.common,
            Command::Dtw(a) => &a.common,
            Command::Correlate(a) => &a.common,
            Command::Wta(a) => &a.common,
            Command::Foveate(a) => &a.common,
        }
    }
}

/// Options shared by every command. Only `seed` is echoed in reports: the
/// output location, worker count and config path do not affect results.
#[derive(Args, Debug, Clone, Serialize)]
pub struct Common {
    /// Flat `key=value` file of long-flag defaults; command-line flags win.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Directory receiving `<command>.json` and any artifacts.
    #[arg(long, value_name = "DIR", default_value = "gazekit-out")]
    #[serde(skip)]
    pub out_dir: PathBuf,
    /// Worker threads (0 = one per core).
    #[arg(long, value_name = "N", default_value_t = 0)]
    #[serde(skip)]
    pub parallelism: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// A fixation log bound to its task, written `TASK=PATH`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskPath {
    pub task: Task,
    pub path: PathBuf,
}

impl FromStr for TaskPath {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (task, path) = s.split_once('=').ok_or_else(|| format!("expected TASK=PATH, got `{s}`"))?;
        if path.is_empty() {
            return Err("empty path".into());
        }
        Ok(TaskPath { task: task.parse()?, path: path.into() })
    }
}

impl fmt::Display for TaskPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.task, self.path.display())
    }
}

impl Serialize for TaskPath {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ImageSize {
    pub width: usize,
    pub height: usize,
}

impl FromStr for ImageSize {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (w, h) = s.split_once('x').ok_or_else(|| format!("expected WIDTHxHEIGHT, got `{s}`"))?;
        let parse = |v: &str| v.parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(|| format!("bad size `{s}`"));
        Ok(ImageSize { width: parse(w)?, height: parse(h)? })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PointArg {
    pub x: usize,
    pub y: usize,
}

impl FromStr for PointArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (x, y) = s.split_once(',').ok_or_else(|| format!("expected X,Y, got `{s}`"))?;
        let parse = |v: &str| v.trim().parse::<usize>().map_err(|_| format!("bad coordinate `{s}`"));
        Ok(PointArg { x: parse(x)?, y: parse(y)? })
    }
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(format!("expected a positive number, got `{s}`")),
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
        _ => Err(format!("expected a non-negative number, got `{s}`")),
    }
}

fn percent(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v < 100.0 => Ok(v),
        _ => Err(format!("expected a percentage in (0, 100), got `{s}`")),
    }
}

fn finite(s: &str) -> Result<f64, String> {
    s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| format!("expected a finite number, got `{s}`"))
}

fn positive_count(s: &str) -> Result<usize, String> {
    s.parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(|| format!("expected a positive integer, got `{s}`"))
}

/// Fixation logs plus where image sizes come from.
#[derive(Args, Debug, Clone, Serialize)]
pub struct GazeInput {
    /// Fixation log for one task as TASK=PATH (repeatable). A `cap` log
    /// also yields the `cap3s` view unless one is given explicitly.
    #[arg(long = "fixations", value_name = "TASK=PATH", required = true)]
    pub fixations: Vec<TaskPath>,
    /// Directory of `<image_id>.pgm` masks; their sizes are the image sizes.
    #[arg(long, value_name = "DIR")]
    pub masks: Option<PathBuf>,
    /// Size shared by all images, used when no mask directory is given.
    #[arg(long, value_name = "WxH")]
    pub image_size: Option<ImageSize>,
}

#[derive(Args, Debug, Serialize)]
pub struct ValidateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub gaze: GazeInput,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct SalmapArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub gaze: GazeInput,
    #[arg(long, value_parser = positive, default_value_t = crate::salmap::DEFAULT_SIGMA_PX)]
    pub sigma_px: f64,
    /// Only render this image.
    #[arg(long, value_name = "ID")]
    pub image: Option<String>,
    /// Only render this task.
    #[arg(long)]
    pub task: Option<Task>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct AvgmapArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub gaze: GazeInput,
    #[arg(long, value_parser = positive, default_value_t = crate::salmap::DEFAULT_SIGMA_PX)]
    pub sigma_px: f64,
    /// Common canvas; maps of other sizes are resampled to it. Defaults to
    /// the size of the first image.
    #[arg(long, value_name = "WxH")]
    pub canvas: Option<ImageSize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct MetricsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub gaze: GazeInput,
    /// Directory of `<image_id>.fgrid` model maps (first grid is used).
    #[arg(long, value_name = "DIR")]
    pub maps: PathBuf,
    #[arg(long, default_value = "free")]
    pub task: Task,
    #[arg(long, value_parser = positive_count, default_value_t = crate::metrics::DEFAULT_SAUC_SPLITS)]
    pub n_splits: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct IocArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub gaze: GazeInput,
    #[arg(long, value_parser = positive, default_value_t = crate::salmap::DEFAULT_SIGMA_PX)]
    pub sigma_px: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DescriptionArg {
    SameSubject,
    Pooled,
}

impl From<DescriptionArg> for DescriptionSource {
    fn from(d: DescriptionArg) -> Self {
        match d {
            DescriptionArg::SameSubject => DescriptionSource::SameSubject,
            DescriptionArg::Pooled => DescriptionSource::Pooled,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightingArg {
    Count,
    Duration,
}

impl From<WeightingArg> for Weighting {
    fn from(w: WeightingArg) -> Self {
        match w {
            WeightingArg::Count => Weighting::Count,
            WeightingArg::Duration => Weighting::Duration,
        }
    }
}

fn ser_description<S: Serializer>(d: &DescriptionArg, s: S) -> Result<S::Ok, S::Error> {
    DescriptionSource::from(*d).serialize(s)
}

fn ser_weighting<S: Serializer>(w: &WeightingArg, s: S) -> Result<S::Ok, S::Error> {
    Weighting::from(*w).serialize(s)
}

/// Inputs of the description/fixation statistics.
#[derive(Args, Debug, Serialize)]
pub struct DescribedArgs {
    /// Fixation log for one task as TASK=PATH (repeatable).
    #[arg(long = "fixations", value_name = "TASK=PATH", required = true)]
    pub fixations: Vec<TaskPath>,
    /// Directory of `<image_id>.pgm` semantic masks.
    #[arg(long, value_name = "DIR")]
    pub masks: PathBuf,
    /// Category table CSV `category_id,name,kind`.
    #[arg(long, value_name = "FILE")]
    pub categories: PathBuf,
    /// Transcripts as JSON lines.
    #[arg(long, value_name = "FILE")]
    pub transcripts: PathBuf,
    /// Optional lexicon CSV `word,category_id`; when given, noun categories
    /// are re-resolved through it.
    #[arg(long, value_name = "FILE")]
    pub lexicon: Option<PathBuf>,
    /// Which transcripts define what a subject described.
    #[arg(long, value_enum, default_value = "same-subject")]
    #[serde(serialize_with = "ser_description")]
    pub description: DescriptionArg,
    /// Count fixations or sum their durations.
    #[arg(long, value_enum, default_value = "count")]
    #[serde(serialize_with = "ser_weighting")]
    pub weighting: WeightingArg,
    /// Growth (px) of object masks when deciding whether an object was fixated.
    #[arg(long, default_value_t = 0)]
    pub dilation_px: usize,
    #[arg(long, value_parser = positive_count, default_value_t = 5)]
    pub max_order: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct TaskDescribedArgs {
    #[arg(long, default_value = "cap")]
    pub task: Task,
    #[command(flatten)]
    #[serde(flatten)]
    pub described: DescribedArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct UnannotatedArgs {
    #[arg(long, value_name = "FILE")]
    pub transcripts: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub lexicon: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct AgreementArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub gaze: GazeInput,
    /// Directory of `<image_id>.fgrid` activation stacks.
    #[arg(long, value_name = "DIR")]
    pub activations: PathBuf,
    #[arg(long, default_value = "free")]
    pub task: Task,
    #[arg(long, value_parser = positive, default_value_t = crate::salmap::DEFAULT_SIGMA_PX)]
    pub sigma_px: f64,
    #[arg(long, value_parser = percent, default_value_t = DEFAULT_TOP_PERCENT)]
    pub percent: f64,
    /// NSS a region must exceed to count as attended.
    #[arg(long, value_parser = positive, default_value_t = DEFAULT_NSS_THRESHOLD)]
    pub threshold: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormalizationArg {
    AlignedPairs,
    Steps,
}

impl From<NormalizationArg> for PathNormalization {
    fn from(n: NormalizationArg) -> Self {
        match n {
            NormalizationArg::AlignedPairs => PathNormalization::AlignedPairs,
            NormalizationArg::Steps => PathNormalization::Steps,
        }
    }
}

fn ser_normalization<S: Serializer>(n: &NormalizationArg, s: S) -> Result<S::Ok, S::Error> {
    PathNormalization::from(*n).serialize(s)
}

#[derive(Args, Debug, Serialize)]
pub struct DtwArgs {
    /// Machine attention: an FGRID sequence, or a directory of
    /// `<image_id>.fgrid` sequences when comparing against fixations.
    #[arg(long, value_name = "PATH")]
    pub machine: PathBuf,
    /// Human attention as an FGRID sequence (single-pair mode).
    #[arg(long, value_name = "FILE", conflicts_with = "fixations")]
    pub human: Option<PathBuf>,
    /// Fixation log as TASK=PATH; human sequences are binned from it.
    #[arg(long = "fixations", value_name = "TASK=PATH", required_unless_present = "human")]
    pub fixations: Vec<TaskPath>,
    #[arg(long, value_name = "DIR")]
    pub masks: Option<PathBuf>,
    #[arg(long, value_name = "WxH")]
    pub image_size: Option<ImageSize>,
    #[arg(long, default_value = "cap")]
    pub task: Task,
    #[arg(long, value_parser = positive, default_value_t = crate::temporal::DEFAULT_BIN_MS)]
    pub bin_ms: f64,
    #[arg(long, value_parser = positive, default_value_t = crate::salmap::DEFAULT_SIGMA_PX)]
    pub sigma_px: f64,
    #[arg(long, value_enum, default_value = "aligned-pairs")]
    #[serde(serialize_with = "ser_normalization")]
    pub normalization: NormalizationArg,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct CorrelateArgs {
    /// Per-image consistency as `image_id,score` CSV.
    #[arg(long, value_name = "FILE")]
    pub consistency: PathBuf,
    /// Per-image caption scores as `image_id,score` CSV.
    #[arg(long, value_name = "FILE")]
    pub scores: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct WtaArgs {
    /// FGRID holding the saliency map.
    #[arg(long, value_name = "FILE")]
    pub map: PathBuf,
    /// Which grid of the stack to use.
    #[arg(long, default_value_t = 0)]
    pub grid: usize,
    #[arg(long, value_parser = positive_count, default_value_t = crate::attend::DEFAULT_WTA_COUNT)]
    pub count: usize,
    #[arg(long, value_parser = non_negative, default_value_t = crate::attend::DEFAULT_SUPPRESS_RADIUS_PX)]
    pub radius_px: f64,
    /// Selection stops once the best remaining value is at most this.
    #[arg(long, value_parser = finite, default_value_t = 0.0)]
    pub floor: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct FoveateArgs {
    /// Binary PPM input.
    #[arg(long, value_name = "FILE")]
    pub image: PathBuf,
    #[arg(long, value_name = "X,Y")]
    pub center: PointArg,
    #[arg(long, value_parser = positive_count, default_value_t = crate::attend::DEFAULT_FOVEA_LEVELS)]
    pub levels: usize,
    #[arg(long, value_parser = positive, default_value_t = crate::attend::DEFAULT_FOVEA_R0_PX)]
    pub r0_px: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

/// What a command produced: report results, a one-line summary and named
/// artifact files.
pub struct Outcome {
    pub results: serde_json::Value,
    pub summary: String,
    pub artifacts: Vec<(String, Vec<u8>)>,
    /// Exit with [`EXIT_DATA`] after writing everything.
    pub failed: bool,
}

/// Reads a flat `key=value` config file. Blank lines and `#` comments are
/// skipped; a key may repeat for repeatable flags.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("config line {}: expected key=value", i + 1))?;
        let k = k.trim().trim_start_matches("--");
        if k.is_empty() || k == "config" {
            return Err(format!("config line {}: invalid key `{k}`", i + 1));
        }
        out.push((k.replace('_', "-"), v.trim().to_string()));
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

/// Appends config-file entries for every flag not given on the command line.
fn merge_config(mut args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let Some(path) = config_path(&args) else { return Ok(args) };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let given: Vec<String> = args
        .iter()
        .filter_map(|a| a.to_str())
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a).to_string())
        .collect();
    for (k, v) in parse_config(&text)? {
        if !given.contains(&k) {
            args.push(format!("--{k}={v}").into());
        }
    }
    Ok(args)
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code. The summary line goes to `stdout`,
/// diagnostics to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match merge_config(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(&cli.command) {
        Ok(code) => {
            code.1.lines().for_each(|l| {
                let _ = writeln!(stdout, "{l}");
            });
            code.0
        }
        Err(CliError::Usage(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            EXIT_USAGE
        }
        Err(CliError::Data(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            EXIT_DATA
        }
    }
}

fn execute(command: &Command) -> Result<(i32, String), CliError> {
    let common = command.common();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.parallelism)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} workers: {e}", common.parallelism)))?;
    let outcome = pool.install(|| commands::dispatch(command))?;
    write_outputs(&common.out_dir, command, &outcome)?;
    let code = if outcome.failed { EXIT_DATA } else { EXIT_OK };
    Ok((code, outcome.summary))
}

fn write_outputs(dir: &Path, command: &Command, outcome: &Outcome) -> Result<(), CliError> {
    let io = |p: &Path, e: std::io::Error| CliError::Data(format!("{}: {e}", p.display()));
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let report = Report::new(command.name(), command, &outcome.results);
    let path = dir.join(format!("{}.json", command.name()));
    std::fs::write(&path, report.to_json()).map_err(|e| io(&path, e))?;
    for (name, bytes) in &outcome.artifacts {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| io(&path, e))?;
    }
    Ok(())
}
