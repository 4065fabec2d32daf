//! Image and batch scoring.
//!
//! Per image: optional low-pass denoise, Otsu binarization, border
//! following, debris filters, then either BPR skeletons with the centromere
//! rules or PCA reconstruction-error calls on masked crops. The patch is
//! accepted only when the chromosome count lies in the configured window;
//! in PCA mode the count is checked again after non-analysable crops are
//! dropped. Failures become rejected reports instead of errors.

mod clock;
mod config;
mod overlay;
mod truth;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{CountWindow, DenoiseConfig, Mode, PcaConfig, PipelineConfig, ReportConfig, SegmentConfig, DEFAULT_CONFIG_TOML};
pub use overlay::render_overlay;
pub use truth::{load_truth, match_calls, TruthMatch};

use clock::Instant;
use crate::bpr::{Component, Skeleton};
use crate::centromere::{self, CallClass, CallDiagnostics, ChromosomeCall};
use crate::denoise;
use crate::geometry::{self, ContourStats, FilterOutcome, GeometryError};
use crate::metrics::ConfusionMatrix;
use crate::pca::{self, PcaClassifier, PcaError};
use crate::raster::{self, GrayImage, Rect};
use crate::segmentation::{self, BinaryMask, Point};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no images in {0}")]
    EmptyBatch(PathBuf),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("PCA mode requires pca.model")]
    MissingModel,
    #[error("model {path}: {source}")]
    Model { path: PathBuf, source: PcaError },
    #[error("report serialization: {0}")]
    Serialize(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReasonCode {
    CountOutOfRange,
    IoError,
    NonAnalysable,
    NoContours,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    Accepted,
    Rejected { reason: ReasonCode, detail: String },
}

impl Verdict {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Verdict::Accepted)
    }
}

/// One classified chromosome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallRecord {
    #[serde(flatten)]
    pub call: ChromosomeCall,
    pub bbox: Rect,
    pub stats: ContourStats,
}

/// A contour dropped by the debris filters; `violations` lists filter numbers
/// 1 to 5, and is empty for components too small to measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Removal {
    pub contour: usize,
    pub bbox: Rect,
    pub violations: Vec<u8>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub denoise_ms: f64,
    pub segment_ms: f64,
    pub filter_ms: f64,
    pub classify_ms: f64,
}

/// Pixel geometry kept for overlays; not serialized.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CallGeometry {
    pub outline: Vec<Point>,
    pub skeleton: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageReport {
    pub id: String,
    pub verdict: Verdict,
    pub chromosome_count: usize,
    pub dc_count: usize,
    pub threshold: Option<u8>,
    pub tl: Option<f64>,
    pub calls: Vec<CallRecord>,
    pub removed: Vec<Removal>,
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<StageTimings>,
    #[serde(skip)]
    pub geometry: Vec<CallGeometry>,
}

impl ImageReport {
    fn rejected(id: &str, reason: ReasonCode, detail: String) -> Self {
        Self {
            id: id.to_string(),
            verdict: Verdict::Rejected { reason, detail },
            chromosome_count: 0,
            dc_count: 0,
            threshold: None,
            tl: None,
            calls: Vec::new(),
            removed: Vec::new(),
            warnings: Vec::new(),
            timings: None,
            geometry: Vec::new(),
        }
    }

    fn reject(&mut self, reason: ReasonCode, detail: String) {
        self.verdict = Verdict::Rejected { reason, detail };
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Classifiers used in PCA mode.
#[derive(Debug, Clone, Default)]
pub struct PcaModels {
    pub mc_dc: Option<PcaClassifier>,
    pub analysable: Option<PcaClassifier>,
}

impl PcaModels {
    pub fn load(cfg: &PcaConfig) -> Result<Self, PipelineError> {
        let load = |p: &PathBuf| {
            PcaClassifier::load(p).map_err(|source| PipelineError::Model {
                path: p.clone(),
                source,
            })
        };
        Ok(Self {
            mc_dc: cfg.model.as_ref().map(load).transpose()?,
            analysable: cfg.analysable_model.as_ref().map(load).transpose()?,
        })
    }
}

/// Everything `score_image` needs besides the image.
#[derive(Debug, Clone)]
pub struct Scorer {
    pub config: PipelineConfig,
    pub models: PcaModels,
}

impl Scorer {
    pub fn new(config: PipelineConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        let models = if config.mode == Mode::Pca {
            let m = PcaModels::load(&config.pca)?;
            if m.mc_dc.is_none() {
                return Err(PipelineError::MissingModel);
            }
            m
        } else {
            PcaModels::default()
        };
        Ok(Self { config, models })
    }

    pub fn with_models(config: PipelineConfig, models: PcaModels) -> Result<Self, PipelineError> {
        config.validate()?;
        if config.mode == Mode::Pca && models.mc_dc.is_none() {
            return Err(PipelineError::MissingModel);
        }
        Ok(Self { config, models })
    }

    pub fn score_image(&self, id: &str, img: &GrayImage) -> ImageReport {
        score_image_with(id, img, &self.config, &self.models)
    }
}

/// A chromosome candidate that survived the debris filters.
#[derive(Debug, Clone)]
pub struct Survivor {
    pub contour: usize,
    pub bbox: Rect,
    pub component: Component,
    pub stats: ContourStats,
    pub skeleton: Option<Skeleton>,
    pub outline: Vec<Point>,
}

/// Segmentation and debris filtering shared by both modes.
pub struct Segmented {
    pub threshold: u8,
    pub mask: BinaryMask,
    pub survivors: Vec<Survivor>,
    pub removed: Vec<Removal>,
}

pub fn segment_and_filter(img: &GrayImage, cfg: &PipelineConfig) -> Result<(Segmented, [f64; 3]), String> {
    let t0 = Instant::now();
    let work = if cfg.denoise.enabled {
        denoise::lowpass_denoise(img, cfg.denoise.cutoff_fraction).map_err(|e| e.to_string())?
    } else {
        img.clone()
    };
    let t1 = Instant::now();
    let hist = work.histogram();
    let level = segmentation::otsu_threshold_from_histogram(&hist);
    let mask = segmentation::binarize_with(&work, level, cfg.segment.polarity());
    let contours = segmentation::find_contours(&mask);
    let t2 = Instant::now();

    let mut measured = Vec::new();
    let mut removed = Vec::new();
    for (index, c) in contours.iter().enumerate().filter(|(_, c)| c.is_outer()) {
        let component = Component::extract(c, &mask).map_err(|e| e.to_string())?;
        match geometry::measure_component(&component, &cfg.bpr) {
            Ok(m) => measured.push((index, component, m)),
            Err(GeometryError::DegenerateContour(_)) => removed.push(Removal {
                contour: index,
                bbox: c.bbox,
                violations: Vec::new(),
            }),
            Err(e) => return Err(e.to_string()),
        }
    }
    let stats: Vec<ContourStats> = measured.iter().map(|(_, _, m)| m.stats).collect();
    let outcomes: Vec<FilterOutcome> = geometry::evaluate_filters(&stats, &cfg.filters);
    let mut survivors = Vec::new();
    for ((index, component, m), outcome) in measured.into_iter().zip(outcomes) {
        let c = &contours[index];
        if outcome.kept() {
            survivors.push(Survivor {
                contour: index,
                bbox: c.bbox,
                component,
                stats: m.stats,
                skeleton: m.skeleton,
                outline: c.points.clone(),
            });
        } else {
            removed.push(Removal {
                contour: index,
                bbox: c.bbox,
                violations: outcome.violations,
            });
        }
    }
    removed.sort_by_key(|r| r.contour);
    let t3 = Instant::now();
    let ms = |a: Instant, b: Instant| b.ms_since(a);
    Ok((
        Segmented {
            threshold: level,
            mask,
            survivors,
            removed,
        },
        [ms(t0, t1), ms(t1, t2), ms(t2, t3)],
    ))
}

/// Crop of one component from `img`, pixels outside the component set to white.
pub fn masked_crop(img: &GrayImage, s: &Survivor) -> GrayImage {
    let b = s.bbox;
    GrayImage::from_fn(b.w, b.h, |x, y| {
        let p = Point::new((b.x + x) as i32, (b.y + y) as i32);
        if s.component.contains(p) {
            img.get(b.x + x, b.y + y)
        } else {
            255
        }
    })
}

/// Masked crops of every chromosome that survives segmentation and filtering.
pub fn chromosome_crops(img: &GrayImage, cfg: &PipelineConfig) -> Result<Vec<(Rect, GrayImage)>, String> {
    let (seg, _) = segment_and_filter(img, cfg)?;
    Ok(seg.survivors.iter().map(|s| (s.bbox, masked_crop(img, s))).collect())
}

fn bpr_call(s: &Survivor, cfg: &PipelineConfig, tl: f64) -> ChromosomeCall {
    match &s.skeleton {
        Some(sk) => centromere::call_chromosome(s.contour, sk, &cfg.centromere, tl).expect("grown skeletons are nonempty"),
        None => {
            let deepest = s
                .component
                .pixels()
                .fold((f64::NEG_INFINITY, Point::new(0, 0)), |best, p| {
                    let d = s.component.depth(p);
                    if d > best.0 { (d, p) } else { best }
                })
                .1;
            ChromosomeCall {
                contour: s.contour,
                centromeres: vec![deepest],
                class: CallClass::Mc,
                diagnostics: CallDiagnostics {
                    s1: 2.0 * s.component.depth(deepest),
                    s2: None,
                    ratio: None,
                    tl,
                    fallback: true,
                },
            }
        }
    }
}

fn pca_call(s: &Survivor, class: CallClass, tl: f64) -> ChromosomeCall {
    ChromosomeCall {
        contour: s.contour,
        centromeres: Vec::new(),
        class,
        diagnostics: CallDiagnostics {
            s1: 0.0,
            s2: None,
            ratio: None,
            tl,
            fallback: false,
        },
    }
}

pub fn score_image_with(id: &str, img: &GrayImage, cfg: &PipelineConfig, models: &PcaModels) -> ImageReport {
    let (mut seg, times) = match segment_and_filter(img, cfg) {
        Ok(r) => r,
        Err(e) => return ImageReport::rejected(id, ReasonCode::NoContours, e),
    };
    let mut report = ImageReport::rejected(id, ReasonCode::NoContours, String::new());
    report.verdict = Verdict::Accepted;
    report.threshold = Some(seg.threshold);
    report.removed = std::mem::take(&mut seg.removed);
    let t_classify = Instant::now();

    if seg.survivors.is_empty() {
        report.reject(ReasonCode::NoContours, "no chromosome contours after filtering".into());
    }
    let lengths: Vec<f64> = seg
        .survivors
        .iter()
        .filter(|s| s.skeleton.is_some())
        .map(|s| s.stats.length)
        .collect();
    let tl = centromere::average_chromosome_length(&lengths).ok().map(|m| cfg.centromere.tl(m));
    report.tl = tl;
    let count = seg.survivors.len();
    report.chromosome_count = count;
    if report.verdict.is_accepted() && !cfg.count.contains(count) {
        report.reject(
            ReasonCode::CountOutOfRange,
            format!("{count} chromosomes outside [{}, {}]", cfg.count.min, cfg.count.max),
        );
    }

    if report.verdict.is_accepted() {
        let tl_value = tl.unwrap_or(0.0);
        let mut calls = Vec::new();
        match cfg.mode {
            Mode::Bpr => {
                for s in &seg.survivors {
                    calls.push((s, bpr_call(s, cfg, tl_value)));
                }
            }
            Mode::Pca => {
                let mut kept = Vec::new();
                for s in &seg.survivors {
                    match pca::image_to_vector(&masked_crop(img, s), pca::CROP_SIDE) {
                        Ok(v) => kept.push((s, v)),
                        Err(e) => report.warnings.push(format!("contour {}: {e}", s.contour)),
                    }
                }
                match &models.analysable {
                    Some(a) => kept.retain(|(s, v)| match a.classify(v) {
                        Ok(c) => c.label == cfg.pca.analysable_label,
                        Err(e) => {
                            report.warnings.push(format!("contour {}: {e}", s.contour));
                            false
                        }
                    }),
                    None => report.warnings.push("analysable model absent; rejection stage skipped".into()),
                }
                report.chromosome_count = kept.len();
                if !cfg.count.contains(kept.len()) {
                    report.reject(
                        ReasonCode::NonAnalysable,
                        format!("{} analysable chromosomes outside [{}, {}]", kept.len(), cfg.count.min, cfg.count.max),
                    );
                } else if let Some(clf) = &models.mc_dc {
                    for (s, v) in kept {
                        match clf.classify(&v) {
                            Ok(c) => {
                                let class = if c.label == cfg.pca.dc_label { CallClass::Dc } else { CallClass::Mc };
                                calls.push((s, pca_call(s, class, tl_value)));
                            }
                            Err(e) => report.warnings.push(format!("contour {}: {e}", s.contour)),
                        }
                    }
                } else {
                    report.warnings.push("no MC/DC model loaded".into());
                }
            }
        }
        for (s, call) in calls {
            report.geometry.push(CallGeometry {
                outline: s.outline.clone(),
                skeleton: s.skeleton.as_ref().map(|k| k.points.iter().map(|p| p.p).collect()).unwrap_or_default(),
            });
            report.calls.push(CallRecord {
                call,
                bbox: s.bbox,
                stats: s.stats,
            });
        }
        report.dc_count = report.calls.iter().filter(|c| c.call.class == CallClass::Dc).count();
    }
    if cfg.report.include_timings {
        report.timings = Some(StageTimings {
            denoise_ms: times[0],
            segment_ms: times[1],
            filter_ms: times[2],
            classify_ms: Instant::now().ms_since(t_classify),
        });
    }
    report
}

/// Load and score one file; read failures become `io_error` rejections.
pub fn score_path(scorer: &Scorer, path: &Path) -> ImageReport {
    let id = image_id(path);
    match raster::load_image(path) {
        Ok(img) => scorer.score_image(&id, &img),
        Err(e) => ImageReport::rejected(&id, ReasonCode::IoError, e.to_string()),
    }
}

pub fn image_id(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Image files (`.pgm`, `.png`) directly inside `dir`, sorted by file name.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p
                    .extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "pgm" | "png"))
        })
        .collect();
    paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(paths)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub images: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub chromosomes: usize,
    pub dc_total: usize,
    /// Dicentrics per accepted cell.
    pub dc_frequency: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confusion: Option<ConfusionMatrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchReport {
    pub images: Vec<ImageReport>,
    pub confusion: Option<ConfusionMatrix>,
}

impl BatchReport {
    pub fn summary(&self) -> BatchSummary {
        let accepted: Vec<&ImageReport> = self.images.iter().filter(|r| r.verdict.is_accepted()).collect();
        let dc_total = accepted.iter().map(|r| r.dc_count).sum();
        BatchSummary {
            images: self.images.len(),
            accepted: accepted.len(),
            rejected: self.images.len() - accepted.len(),
            chromosomes: accepted.iter().map(|r| r.calls.len()).sum(),
            dc_total,
            dc_frequency: (!accepted.is_empty()).then(|| dc_total as f64 / accepted.len() as f64),
            confusion: self.confusion,
        }
    }

    /// One JSON line per image followed by a summary line.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.images {
            out.push_str(&r.to_json_line());
            out.push('\n');
        }
        out.push_str(&serde_json::to_string(&serde_json::json!({ "summary": self.summary() })).expect("summary serializes"));
        out.push('\n');
        out
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BatchOptions {
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

pub fn score_batch(dir: &Path, scorer: &Scorer, opts: &BatchOptions) -> Result<BatchReport, PipelineError> {
    let paths = list_images(dir)?;
    if paths.is_empty() {
        return Err(PipelineError::EmptyBatch(dir.to_path_buf()));
    }
    Ok(BatchReport {
        images: score_paths(&paths, scorer, opts),
        confusion: None,
    })
}

/// Score files in parallel; results keep the order of `paths`.
pub fn score_paths(paths: &[PathBuf], scorer: &Scorer, opts: &BatchOptions) -> Vec<ImageReport> {
    let run = || paths.par_iter().map(|p| score_path(scorer, p)).collect::<Vec<_>>();
    match opts.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map(|pool| pool.install(run))
            .unwrap_or_else(|_| paths.iter().map(|p| score_path(scorer, p)).collect()),
        None => run(),
    }
}
