//! wasm-bindgen bindings behind `www/index.html`.
//!
//! A [`Demo`] holds one synthetic scene with its ground truth. The page
//! asks for three views of it: the raw scene, a denoise and threshold
//! preview, and a scored overlay. Every view is an RGBA buffer sized
//! `width() * height() * 4`, ready for `ImageData`.

use dicentric::pipeline::{match_calls, render_overlay, ImageReport, PipelineConfig, Scorer};
use dicentric::segmentation::{binarize_with, otsu_threshold};
use dicentric::synth::{generate_scene, SceneLabel, SceneSpec};
use dicentric::{denoise, CallClass, GrayImage, Rect};
use wasm_bindgen::prelude::*;

const MC_RGB: [u8; 3] = [20, 150, 170];
const DC_RGB: [u8; 3] = [220, 40, 40];
const WRONG_RGB: [u8; 3] = [245, 160, 0];
const MASK_RGB: [u8; 3] = [40, 90, 200];

#[wasm_bindgen]
pub struct Demo {
    image: GrayImage,
    label: SceneLabel,
    report: Option<ImageReport>,
}

#[wasm_bindgen]
impl Demo {
    /// Generate a scene. Fails on impossible layouts (too many objects for
    /// the canvas).
    #[wasm_bindgen(constructor)]
    pub fn new(width: usize, height: usize, mc: usize, dc: usize, debris: usize, seed: u32) -> Result<Demo, String> {
        let spec = SceneSpec {
            width,
            height,
            mc,
            dc,
            debris,
            nuclei: 0,
            ..SceneSpec::default()
        };
        let (image, label) = generate_scene(&spec, seed as u64).map_err(|e| e.to_string())?;
        Ok(Self { image, label, report: None })
    }

    pub fn width(&self) -> usize {
        self.image.width()
    }

    pub fn height(&self) -> usize {
        self.image.height()
    }

    pub fn scene_rgba(&self) -> Vec<u8> {
        gray_to_rgba(&self.image)
    }

    /// Low-pass filtered scene with the Otsu foreground tinted blue.
    /// A cutoff of 0 disables the filter.
    pub fn threshold_rgba(&self, cutoff_fraction: f64) -> Result<Vec<u8>, String> {
        let work = if cutoff_fraction > 0.0 {
            denoise::lowpass_denoise(&self.image, cutoff_fraction).map_err(|e| e.to_string())?
        } else {
            self.image.clone()
        };
        let cfg = PipelineConfig::default();
        let mask = binarize_with(&work, otsu_threshold(&work), cfg.segment.polarity());
        let mut out = gray_to_rgba(&work);
        for y in 0..work.height() {
            for x in 0..work.width() {
                if mask.get(x, y) {
                    let i = 4 * (y * work.width() + x);
                    for c in 0..3 {
                        out[i + c] = ((out[i + c] as u16 + 2 * MASK_RGB[c] as u16) / 3) as u8;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Score the scene and return a JSON summary with the verdict, the
    /// call counts and the confusion matrix against ground truth.
    pub fn score(&mut self, t: f64, ratio_threshold: f64, cutoff_fraction: f64) -> Result<String, String> {
        let mut cfg = PipelineConfig::default();
        cfg.bpr.t = t;
        cfg.centromere.ratio_threshold = ratio_threshold;
        cfg.denoise.enabled = cutoff_fraction > 0.0;
        if cfg.denoise.enabled {
            cfg.denoise.cutoff_fraction = cutoff_fraction;
        }
        // the demo scenes are smaller than a full metaphase
        cfg.count.min = 1;
        cfg.count.max = usize::MAX;
        let scorer = Scorer::new(cfg).map_err(|e| e.to_string())?;
        let report = scorer.score_image("demo", &self.image);
        let m = match_calls(&report, &self.label);
        let summary = serde_json::json!({
            "verdict": report.verdict,
            "threshold": report.threshold,
            "chromosomes": report.chromosome_count,
            "dc_calls": report.dc_count,
            "removed": report.removed.len(),
            "truth_dc": self.label.counts.dc,
            "truth_mc": self.label.counts.mc,
            "confusion": m.confusion,
            "accuracy": m.confusion.accuracy(),
            "recall": m.confusion.recall(),
            "specificity": m.confusion.specificity(),
        });
        self.report = Some(report);
        Ok(summary.to_string())
    }

    /// Overlay of the last [`Demo::score`] run. Boxes are teal for MC
    /// calls, red for DC calls and orange where the call disagrees with
    /// ground truth. Before any scoring this is the plain scene.
    pub fn overlay_rgba(&self) -> Vec<u8> {
        let Some(report) = &self.report else {
            return self.scene_rgba();
        };
        let mut out = gray_to_rgba(&render_overlay(&self.image, report));
        for rec in &report.calls {
            let truth = self
                .label
                .objects
                .iter()
                .filter(|o| o.kind.is_chromosome())
                .max_by(|a, b| a.bbox.iou(&rec.bbox).total_cmp(&b.bbox.iou(&rec.bbox)));
            let wrong = truth.is_some_and(|o| (o.kind.expected_centromeres() == 2) != (rec.call.class == CallClass::Dc));
            let rgb = match (wrong, rec.call.class) {
                (true, _) => WRONG_RGB,
                (false, CallClass::Dc) => DC_RGB,
                (false, CallClass::Mc) => MC_RGB,
            };
            draw_box(&mut out, self.image.width(), self.image.height(), rec.bbox, rgb);
        }
        out
    }
}

fn gray_to_rgba(img: &GrayImage) -> Vec<u8> {
    img.data().iter().flat_map(|&v| [v, v, v, 255]).collect()
}

/// One-pixel frame just outside `r`, clipped to the canvas.
fn draw_box(rgba: &mut [u8], w: usize, h: usize, r: Rect, rgb: [u8; 3]) {
    let (x0, y0) = (r.x as i64 - 1, r.y as i64 - 1);
    let (x1, y1) = (r.right() as i64, r.bottom() as i64);
    let mut put = |x: i64, y: i64| {
        if x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h {
            let i = 4 * (y as usize * w + x as usize);
            rgba[i..i + 3].copy_from_slice(&rgb);
        }
    };
    for x in x0..=x1 {
        put(x, y0);
        put(x, y1);
    }
    for y in y0..=y1 {
        put(x0, y);
        put(x1, y);
    }
}
