//! The `chromatag` command line: `generate`, `detect`, `synth`, `eval` and
//! `bench`.
//!
//! Exit codes are 0 on success, 1 when some inputs failed and 2 on usage or
//! configuration errors. Settings resolve as built-in defaults, then the
//! `--config` JSON file, then flags.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use image::RgbImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{
    build_signature_table, filter_family, min_rotational_hamming, parse_family_file, TagFamily,
};
use crate::colorspace::LabLookup;
use crate::detector::{Detection, Detector, DetectorParams, FrameResult, StageArray};
use crate::error::Error;
use crate::eval::{
    adiff_histogram, bin_recall, bin_recall_joint, corner_error_cdf, match_frame, metrics_for_preset,
    timing_report, write_csv, BinAxis, FrameOutcome, GroundTruth, HistogramMode, Metrics,
    MetricsRow, TimingReport,
};
use crate::geometry::{Point2, Quad};
use crate::synth::{
    bundled_backgrounds_dir, load_backgrounds, plan_sweep, render_plan, ManifestRecord, SweepSpec,
};
use crate::taggen::{render_tag, validate_palette, TagPalette};

pub const DETECTIONS_SCHEMA: &str = "chromatag.detections.v1";
pub const TAG_SCHEMA: &str = "chromatag.tag.v1";

/// Everything a run can be configured with. Unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub detector: DetectorParams,
    pub palette: TagPalette,
    /// Hex code list; the built-in 16h5 family when absent.
    pub family_file: Option<PathBuf>,
    pub sweep: SweepSpec,
    /// Overrides `sweep.seed` when set.
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    /// Background photographs for `synth`; the bundled set when absent.
    pub backgrounds_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn family(&self) -> Result<TagFamily, Error> {
        let Some(path) = &self.family_file else {
            return Ok(TagFamily::tag16h5());
        };
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        let raw = parse_family_file(&text)?;
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("custom");
        let mut family = filter_family(name, &raw, 0)?;
        family.min_hamming = min_rotational_hamming(&family.codes).unwrap_or(0);
        Ok(family)
    }
}

#[derive(Debug, Parser)]
#[command(name = "chromatag", version, about = "Colored fiducial tags: generate, synthesize, detect, evaluate")]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render one tag to PNG or binary PPM with a JSON sidecar.
    Generate(GenerateArgs),
    /// Detect tags and print one JSON line per image.
    Detect(DetectArgs),
    /// Render a synthetic sweep with a manifest.
    Synth(SynthArgs),
    /// Score detections against a manifest and write CSV reports.
    Eval(EvalArgs),
    /// Time the detector over a set of images.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub id: usize,
    #[arg(long, default_value_t = 0)]
    pub rotation: u8,
    #[arg(long, default_value_t = 16)]
    pub px_per_cell: u32,
    /// Output file; `.png` or `.ppm`.
    #[arg(long, short)]
    pub out: PathBuf,
}

/// Detector overrides; unset flags keep the config or default value.
#[derive(Debug, Args, Default, Clone)]
pub struct DetectorFlags {
    /// Grid step N [default 4]
    #[arg(long)]
    pub step: Option<u32>,
    /// Seed threshold on the A rise [default 25]
    #[arg(long)]
    pub a_diff_thresh: Option<i32>,
    /// Successive pixels per border, M [default 3]
    #[arg(long)]
    pub successive: Option<u32>,
    /// Border crossing threshold [default 5]
    #[arg(long)]
    pub border_thresh: Option<i32>,
    /// Polygon convergence ratio [default 0.98]
    #[arg(long)]
    pub conv_thresh: Option<f64>,
    /// [default 10]
    #[arg(long)]
    pub max_center_iters: Option<u32>,
    /// [default 64]
    #[arg(long)]
    pub max_polygon_scans: Option<u32>,
    /// Corner patch radius per unit edge length [default 0.1]
    #[arg(long)]
    pub patch_scale: Option<f64>,
    /// [default 15]
    #[arg(long)]
    pub min_decode_contrast: Option<i32>,
}

impl DetectorFlags {
    pub fn apply(&self, p: &mut DetectorParams) {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { p.$f = v; } )* };
        }
        set!(
            step,
            a_diff_thresh,
            successive,
            border_thresh,
            conv_thresh,
            max_center_iters,
            max_polygon_scans,
            patch_scale,
            min_decode_contrast
        );
    }
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[command(flatten)]
    pub params: DetectorFlags,
    #[arg(required = true)]
    pub images: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory [config output_dir]
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub ids_per_cell: Option<usize>,
    /// Mosaic and demosaic every frame.
    #[arg(long)]
    pub bayer: bool,
    /// Background photo directory [config backgrounds_dir, else bundled]
    #[arg(long)]
    pub backgrounds: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// JSON lines written by `detect`.
    #[arg(long)]
    pub detections: PathBuf,
    /// Manifest written by `synth`.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Report directory [config output_dir]
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    pub iou: f64,
    #[arg(long, value_delimiter = ',', default_value = "15,25,35,45,55,65,75,85,95,105,115,125,135,145,155,165")]
    pub size_edges: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "-5,5,15,25,35,45,55,65,75,85")]
    pub angle_edges: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,10")]
    pub radii: Vec<f64>,
    /// Grid step for the A-difference histogram.
    #[arg(long, default_value_t = 4)]
    pub histogram_step: u32,
    /// Also histogram every sample of these tagless photographs.
    #[arg(long)]
    pub background_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub params: DetectorFlags,
    #[arg(long, default_value_t = 10)]
    pub repeats: u32,
    /// Write timing CSVs here.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Image files or directories.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
}

/// Per-stage values keyed by stage name.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageMap<T> {
    #[serde(rename = "FindADiff")]
    pub find_a_diff: T,
    #[serde(rename = "InitialScan")]
    pub initial_scan: T,
    #[serde(rename = "BuildPolygon")]
    pub build_polygon: T,
    #[serde(rename = "PolyToQuad")]
    pub poly_to_quad: T,
    #[serde(rename = "Decode")]
    pub decode: T,
}

impl<T: Copy> StageMap<T> {
    pub fn from_array(a: StageArray<T>) -> Self {
        Self {
            find_a_diff: a[0],
            initial_scan: a[1],
            build_polygon: a[2],
            poly_to_quad: a[3],
            decode: a[4],
        }
    }

    pub fn to_array(&self) -> StageArray<T> {
        [
            self.find_a_diff,
            self.initial_scan,
            self.build_polygon,
            self.poly_to_quad,
            self.decode,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionJson {
    pub id: usize,
    pub rotation: u8,
    pub corners: [[f64; 2]; 4],
    pub center: [f64; 2],
}

impl From<&Detection> for DetectionJson {
    fn from(d: &Detection) -> Self {
        Self {
            id: d.id,
            rotation: d.rotation,
            corners: d.quad.corners.map(Point2::to_array),
            center: d.center.to_array(),
        }
    }
}

impl DetectionJson {
    pub fn to_detection(&self) -> Result<Detection, Error> {
        Ok(Detection {
            id: self.id,
            rotation: self.rotation,
            quad: Quad::new(self.corners.map(Point2::from))?,
            center: Point2::from(self.center),
        })
    }
}

/// One line of `detect` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRecord {
    pub schema: String,
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub detections: Vec<DetectionJson>,
    pub seeds: u32,
    pub stage_times_us: StageMap<f64>,
    pub stage_failures: StageMap<u32>,
    #[serde(default)]
    pub stage_entries: StageMap<u32>,
    pub frame_time_us: f64,
}

impl FrameRecord {
    pub fn new(path: &str, r: &FrameResult) -> Self {
        Self {
            schema: DETECTIONS_SCHEMA.into(),
            path: path.into(),
            error: None,
            detections: r.detections.iter().map(DetectionJson::from).collect(),
            seeds: r.seeds,
            stage_times_us: StageMap::from_array(r.stage_times.map(|t| t.as_secs_f64() * 1e6)),
            stage_failures: StageMap::from_array(r.stage_failures),
            stage_entries: StageMap::from_array(r.stage_entries),
            frame_time_us: r.frame_time.as_secs_f64() * 1e6,
        }
    }

    pub fn failed(path: &str, error: String) -> Self {
        Self {
            schema: DETECTIONS_SCHEMA.into(),
            path: path.into(),
            error: Some(error),
            detections: Vec::new(),
            seeds: 0,
            stage_times_us: StageMap::default(),
            stage_failures: StageMap::default(),
            stage_entries: StageMap::default(),
            frame_time_us: 0.0,
        }
    }

    pub fn to_frame_result(&self) -> Result<FrameResult, Error> {
        let dur = |us: f64| Duration::from_secs_f64(us.max(0.0) / 1e6);
        Ok(FrameResult {
            detections: self
                .detections
                .iter()
                .map(DetectionJson::to_detection)
                .collect::<Result<_, _>>()?,
            stage_times: self.stage_times_us.to_array().map(dur),
            stage_failures: self.stage_failures.to_array(),
            stage_entries: self.stage_entries.to_array(),
            seeds: self.seeds,
            frame_time: dur(self.frame_time_us),
        })
    }
}

/// Sidecar written next to a generated tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagSidecar {
    pub schema: String,
    pub family: String,
    pub id: usize,
    pub rotation: u8,
    pub px_per_cell: u32,
    pub corners: [[f64; 2]; 4],
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(m: impl std::fmt::Display) -> Self {
        Self {
            code: 2,
            message: m.to_string(),
        }
    }

    fn partial(m: impl std::fmt::Display) -> Self {
        Self {
            code: 1,
            message: m.to_string(),
        }
    }
}

type CmdResult = Result<i32, Failure>;

/// Parse `args` (program name first) and run the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn execute(cli: Cli) -> CmdResult {
    let config = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(Failure::usage)?,
        None => RunConfig::default(),
    };
    if let Err(v) = validate_palette(&config.palette) {
        for v in v {
            log::warn!("palette constraint violated: {v}");
        }
    }
    match cli.command {
        Command::Generate(a) => cmd_generate(&config, &a),
        Command::Detect(a) => cmd_detect(&config, &a),
        Command::Synth(a) => cmd_synth(&config, &a),
        Command::Eval(a) => cmd_eval(&config, &a),
        Command::Bench(a) => cmd_bench(&config, &a),
    }
}

/// PNG, or binary PPM (P6) for a `.ppm` extension.
pub fn save_rgb(img: &RgbImage, path: &Path) -> image::ImageResult<()> {
    let is_ppm = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("ppm"));
    if !is_ppm {
        return img.save(path);
    }
    use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
    use image::ImageEncoder;
    let f = File::create(path).map_err(image::ImageError::IoError)?;
    PnmEncoder::new(BufWriter::new(f))
        .with_subtype(PnmSubtype::Pixmap(SampleEncoding::Binary))
        .write_image(img.as_raw(), img.width(), img.height(), image::ExtendedColorType::Rgb8)
}

fn save_image(img: &RgbImage, path: &Path) -> Result<(), Failure> {
    save_rgb(img, path).map_err(|e| Failure::partial(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::partial(format!("{}: {e}", path.display())))
}

fn create_dir(path: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(path).map_err(|e| Failure::partial(format!("{}: {e}", path.display())))
}

fn image_format_ok(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "ppm"))
}

fn cmd_generate(config: &RunConfig, a: &GenerateArgs) -> CmdResult {
    if !image_format_ok(&a.out) {
        return Err(Failure::usage("output must end in .png or .ppm"));
    }
    let family = config.family().map_err(Failure::usage)?;
    let tag = render_tag(&family, a.id, a.rotation, a.px_per_cell, &config.palette)
        .map_err(Failure::usage)?;
    save_image(&tag.image, &a.out)?;
    let sidecar = TagSidecar {
        schema: TAG_SCHEMA.into(),
        family: family.name.clone(),
        id: tag.id,
        rotation: tag.rotation,
        px_per_cell: tag.px_per_cell,
        corners: tag.corners.corners.map(Point2::to_array),
    };
    let mut w = create(&a.out.with_extension("json"))?;
    serde_json::to_writer_pretty(&mut w, &sidecar).map_err(Failure::partial)?;
    writeln!(w).and_then(|_| w.flush()).map_err(Failure::partial)?;
    Ok(0)
}

fn detector_from(config: &RunConfig, flags: &DetectorFlags) -> Result<Detector, Failure> {
    let mut params = config.detector;
    flags.apply(&mut params);
    let family = config.family().map_err(Failure::usage)?;
    Detector::new(params, build_signature_table(&family)).map_err(Failure::usage)
}

fn cmd_detect(config: &RunConfig, a: &DetectArgs) -> CmdResult {
    let detector = detector_from(config, &a.params)?;
    let records: Vec<FrameRecord> = a
        .images
        .par_iter()
        .map(|p| {
            let name = p.to_string_lossy();
            match image::open(p) {
                Ok(img) => FrameRecord::new(&name, &detector.detect(&img.to_rgb8())),
                Err(e) => FrameRecord::failed(&name, e.to_string()),
            }
        })
        .collect();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for r in &records {
        serde_json::to_writer(&mut out, r).map_err(Failure::partial)?;
        writeln!(out).map_err(Failure::partial)?;
    }
    out.flush().map_err(Failure::partial)?;
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("{failed} of {} images could not be read", records.len());
        return Ok(1);
    }
    Ok(0)
}

fn cmd_synth(config: &RunConfig, a: &SynthArgs) -> CmdResult {
    let out = a
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .ok_or_else(|| Failure::usage("synth needs --out or output_dir in the config"))?;
    let mut spec = config.sweep.clone();
    if let Some(s) = a.seed.or(config.seed) {
        spec.seed = s;
    }
    if let Some(n) = a.ids_per_cell {
        spec.ids_per_cell = n;
    }
    spec.bayer |= a.bayer;
    let bg_dir = a
        .backgrounds
        .clone()
        .or_else(|| config.backgrounds_dir.clone())
        .unwrap_or_else(bundled_backgrounds_dir);
    let backgrounds = load_backgrounds(&bg_dir).map_err(Failure::usage)?;
    if backgrounds.is_empty() {
        return Err(Failure::usage(format!("no background images in {}", bg_dir.display())));
    }
    let family = config.family().map_err(Failure::usage)?;
    let plans = plan_sweep(&spec, family.len(), backgrounds.len()).map_err(Failure::usage)?;

    let frames_dir = out.join("frames");
    create_dir(&frames_dir)?;
    let records: Vec<Result<ManifestRecord, String>> = plans
        .par_iter()
        .map(|plan| {
            let frame = render_plan(plan, &family, &config.palette, &backgrounds, &spec)
                .map_err(|e| format!("frame {}: {e}", plan.index))?;
            let rel = format!("frames/frame_{:05}.png", plan.index);
            frame
                .image
                .save(out.join(&rel))
                .map_err(|e| format!("{rel}: {e}"))?;
            Ok(ManifestRecord::new(&frame, &rel))
        })
        .collect();

    let mut w = create(&out.join("manifest.jsonl"))?;
    let mut failed = 0;
    for r in &records {
        match r {
            Ok(rec) => {
                serde_json::to_writer(&mut w, rec).map_err(Failure::partial)?;
                writeln!(w).map_err(Failure::partial)?;
            }
            Err(e) => {
                log::error!("{e}");
                failed += 1;
            }
        }
    }
    w.flush().map_err(Failure::partial)?;
    let mut w = create(&out.join("sweep.json"))?;
    serde_json::to_writer_pretty(&mut w, &spec).map_err(Failure::partial)?;
    writeln!(w).and_then(|_| w.flush()).map_err(Failure::partial)?;
    log::info!("wrote {} frames to {}", records.len() - failed, out.display());
    Ok(if failed > 0 { 1 } else { 0 })
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, Failure> {
    let f = File::open(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| Failure::usage(format!("{} line {}: {e}", path.display(), n + 1)))?,
        );
    }
    Ok(out)
}

/// Manifest entries grouped by frame, in manifest order.
fn group_manifest(records: Vec<ManifestRecord>) -> Vec<(String, Vec<ManifestRecord>)> {
    let mut order: Vec<(String, Vec<ManifestRecord>)> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for r in records {
        match index.get(&r.path) {
            Some(&i) => order[i].1.push(r),
            None => {
                index.insert(r.path.clone(), order.len());
                order.push((r.path.clone(), vec![r]));
            }
        }
    }
    order
}

fn cmd_eval(config: &RunConfig, a: &EvalArgs) -> CmdResult {
    let out = a
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .ok_or_else(|| Failure::usage("eval needs --out or output_dir in the config"))?;
    let records: Vec<FrameRecord> = read_jsonl(&a.detections)?;
    let manifest: Vec<ManifestRecord> = read_jsonl(&a.manifest)?;
    let frames = group_manifest(manifest);

    // pair each manifest frame with the detection record for the same file
    let mut by_name: HashMap<String, Vec<usize>> = HashMap::new();
    for (i, r) in records.iter().enumerate() {
        let name = Path::new(&r.path).file_name().map(|n| n.to_string_lossy().into_owned());
        by_name.entry(name.unwrap_or_default()).or_default().push(i);
    }
    let mut used = vec![false; records.len()];
    let mut paired = Vec::with_capacity(frames.len());
    for (path, gts) in &frames {
        let rel = Path::new(path);
        let name = rel.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let hit = by_name
            .get(&name)
            .and_then(|c| c.iter().copied().find(|&i| !used[i] && Path::new(&records[i].path).ends_with(rel)));
        let Some(i) = hit else {
            return Err(Failure::usage(format!("no detection record for manifest frame {path}")));
        };
        used[i] = true;
        if let Some(e) = &records[i].error {
            return Err(Failure::usage(format!("detection failed for {path}: {e}")));
        }
        paired.push((i, gts));
    }
    if let Some(i) = used.iter().position(|u| !u) {
        return Err(Failure::usage(format!(
            "detection record {} has no manifest frame",
            records[i].path
        )));
    }

    let mut outcomes = Vec::new();
    let mut corner_pairs = Vec::new();
    let mut results = Vec::new();
    let mut masks = Vec::new();
    for (i, gts) in &paired {
        let r = records[*i].to_frame_result().map_err(Failure::usage)?;
        let gt: Vec<GroundTruth> = gts
            .iter()
            .map(|g| g.quad().map(|quad| GroundTruth { id: g.id, quad }))
            .collect::<Result<_, _>>()
            .map_err(Failure::usage)?;
        let m = match_frame(&r.detections, &gt, a.iou);
        for p in &m.pairs {
            corner_pairs.push((r.detections[p.det].quad, gt[p.gt].quad));
        }
        outcomes.push(FrameOutcome {
            tag_size: gts[0].tag_size,
            viewing_angle: gts[0].viewing_angle,
            preset: gts[0].preset.clone(),
            metrics: m.metrics,
        });
        masks.push(gt[0].quad);
        results.push(r);
    }

    create_dir(&out)?;
    let csv = |name: &str| create(&out.join(name));
    let total: Metrics = outcomes.iter().map(|o| o.metrics).sum();
    let mut rows = vec![MetricsRow::new("all", &total)];
    let mut presets: Vec<&str> = outcomes.iter().map(|o| o.preset.as_str()).collect();
    presets.sort_unstable();
    presets.dedup();
    for p in presets {
        rows.push(MetricsRow::new(p, &metrics_for_preset(&outcomes, p)));
    }
    write_csv(csv("metrics.csv")?, &rows).map_err(Failure::partial)?;
    for (axis, edges, file) in [
        (BinAxis::TagSize, &a.size_edges, "recall_tag_size.csv"),
        (BinAxis::ViewingAngle, &a.angle_edges, "recall_viewing_angle.csv"),
    ] {
        let b = bin_recall(&outcomes, axis, edges).map_err(Failure::usage)?;
        write_csv(csv(file)?, &b.rows()).map_err(Failure::partial)?;
    }
    let joint = bin_recall_joint(&outcomes, &a.size_edges, &a.angle_edges).map_err(Failure::usage)?;
    write_csv(csv("recall_joint.csv")?, &joint.rows()).map_err(Failure::partial)?;
    let cdf = corner_error_cdf(&corner_pairs, &a.radii);
    write_csv(csv("corner_cdf.csv")?, &cdf.rows()).map_err(Failure::partial)?;
    let timing = timing_report(&results);
    write_csv(csv("timing_fps.csv")?, &timing.fps_rows()).map_err(Failure::partial)?;
    write_csv(csv("timing_stages.csv")?, &timing.stage_rows()).map_err(Failure::partial)?;

    let mut code = 0;
    let base = a.manifest.parent().unwrap_or(Path::new("."));
    let images: Result<Vec<RgbImage>, String> = frames
        .iter()
        .map(|(p, _)| {
            image::open(base.join(p))
                .map(|i| i.to_rgb8())
                .map_err(|e| format!("{p}: {e}"))
        })
        .collect();
    let lab = LabLookup::default();
    match images {
        Ok(images) => {
            let h = adiff_histogram(&images, HistogramMode::TagRegionMax, Some(&masks), a.histogram_step, &lab)
                .map_err(Failure::usage)?;
            write_csv(csv("adiff_tag.csv")?, &h.rows(1)).map_err(Failure::partial)?;
        }
        Err(e) => {
            log::error!("skipping tag histogram: {e}");
            code = 1;
        }
    }
    if let Some(dir) = &a.background_dir {
        let bgs = load_backgrounds(dir).map_err(Failure::usage)?;
        let h = adiff_histogram(&bgs, HistogramMode::BackgroundAll, None, a.histogram_step, &lab)
            .map_err(Failure::usage)?;
        write_csv(csv("adiff_background.csv")?, &h.rows(1)).map_err(Failure::partial)?;
    }

    for r in &rows {
        println!(
            "{:<8} tp {:>6} fp {:>6} fn {:>6} precision {} recall {}",
            r.subset,
            r.tp,
            r.fp,
            r.fn_,
            fmt_opt(r.precision, 4),
            fmt_opt(r.recall, 4)
        );
    }
    if let Some(f) = cdf.radii.iter().position(|&r| r == 3.0) {
        println!("corners within 3 px: {}", fmt_opt(cdf.fractions[f], 4));
    }
    Ok(code)
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "undefined".into(), |v| format!("{v:.digits$}"))
}

fn collect_images(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, Failure> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut v: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| {
                    f.extension()
                        .and_then(|e| e.to_str())
                        .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "ppm" | "jpg" | "jpeg"))
                })
                .collect();
            v.sort();
            out.extend(v);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

/// Print a timing report in the layout of the FPS and per-stage tables.
pub fn print_timing(t: &TimingReport, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "frames              {:>8}", t.all.frames)?;
    writeln!(w, "median frame        {:>8} ms", fmt_opt(t.median_frame_ms, 3))?;
    writeln!(w, "mean frame          {:>8} ms", fmt_opt(t.all.mean_ms, 3))?;
    for (name, s) in [
        ("all", &t.all),
        (">0 detections", &t.with_detections),
        ("0 detections", &t.without_detections),
    ] {
        writeln!(w, "FPS {:<15} {:>8}  ({} frames)", name, fmt_opt(s.fps, 1), s.frames)?;
    }
    writeln!(w, "{:<14} {:>10} {:>8} {:>10}", "stage", "mean ms", "seeds", "frames %")?;
    for r in t.stage_rows() {
        writeln!(
            w,
            "{:<14} {:>10} {:>8} {:>10}",
            r.stage,
            fmt_opt(r.mean_ms, 4),
            r.seed_failures,
            fmt_opt(r.frame_failure_pct, 1)
        )?;
    }
    Ok(())
}

fn cmd_bench(config: &RunConfig, a: &BenchArgs) -> CmdResult {
    if a.repeats == 0 {
        return Err(Failure::usage("--repeats must be at least 1"));
    }
    let detector = detector_from(config, &a.params)?;
    let paths = collect_images(&a.inputs)?;
    if paths.is_empty() {
        return Err(Failure::usage("no input images"));
    }
    let images: Vec<RgbImage> = paths
        .iter()
        .map(|p| {
            image::open(p)
                .map(|i| i.to_rgb8())
                .map_err(|e| Failure::partial(format!("{}: {e}", p.display())))
        })
        .collect::<Result<_, _>>()?;
    // warm-up fills the LAB table and caches
    for img in &images {
        detector.detect(img);
    }
    let start = Instant::now();
    let mut results = Vec::with_capacity(images.len() * a.repeats as usize);
    for _ in 0..a.repeats {
        for img in &images {
            results.push(detector.detect(img));
        }
    }
    log::info!("benchmark wall time {:?}", start.elapsed());
    let report = timing_report(&results);
    print_timing(&report, std::io::stdout().lock()).map_err(Failure::partial)?;
    if let Some(dir) = &a.out {
        create_dir(dir)?;
        write_csv(create(&dir.join("timing_fps.csv"))?, &report.fps_rows()).map_err(Failure::partial)?;
        write_csv(create(&dir.join("timing_stages.csv"))?, &report.stage_rows())
            .map_err(Failure::partial)?;
    }
    Ok(0)
}
