//! Labeled synthetic metaphase scenes.
//!
//! Chromosomes are rendered as a disc swept along a straight or circular-arc
//! centreline, with Gaussian constrictions (waists) marking centromeres. The
//! sprites are placed without overlap on a white canvas and every placement
//! is recorded in a [`SceneLabel`]. A sprite pool loaded from disk (crop plus
//! mask pairs) can be used instead of parametric sprites.

use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::{self, GrayImage, ImageFormat, RasterError, Rect};
use crate::segmentation::BinaryMask;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid sprite parameters: {0}")]
    InvalidParams(String),
    #[error("could not place sprite {index} after {attempts} attempts")]
    PlacementOverflow { index: usize, attempts: usize },
    #[error("gamma must be positive, got {0}")]
    InvalidGamma(f64),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error("label serialization: {0}")]
    Serialize(#[from] serde_json::Error),
    #[error("sprite pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpriteKind {
    Mc,
    Dc,
    Debris,
    Nucleus,
}

impl SpriteKind {
    /// Class id written to the detector label file.
    pub fn class_id(self) -> u8 {
        match self {
            SpriteKind::Mc => 0,
            SpriteKind::Dc => 1,
            SpriteKind::Debris => 2,
            SpriteKind::Nucleus => 3,
        }
    }

    pub fn expected_centromeres(self) -> usize {
        match self {
            SpriteKind::Mc => 1,
            SpriteKind::Dc => 2,
            _ => 0,
        }
    }

    pub fn is_chromosome(self) -> bool {
        matches!(self, SpriteKind::Mc | SpriteKind::Dc)
    }
}

/// One renderable object; centromere coordinates are in sprite pixels.
#[derive(Debug, Clone)]
pub struct Sprite {
    pub raster: GrayImage,
    pub mask: BinaryMask,
    pub kind: SpriteKind,
    pub centromeres: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChromosomeShapeParams {
    /// Centreline length in pixels.
    pub length: f64,
    pub half_width: f64,
    /// Total bend of the centreline in radians; 0 is straight.
    pub curvature: f64,
    /// Waist centres as fractions of the centreline, in (0.1, 0.9).
    pub waists: Vec<f64>,
    /// Relative constriction at each waist, in (0, 1).
    pub waist_depth: f64,
    /// Gaussian sigma of the constriction along the centreline, pixels.
    pub waist_sigma: f64,
    /// Darkest (core) and lightest (rim) body intensity.
    pub intensity: (u8, u8),
    /// Orientation of the centreline in radians (0 = +x).
    pub angle: f64,
}

impl ChromosomeShapeParams {
    pub fn straight(length: f64, half_width: f64, waists: Vec<f64>, waist_depth: f64) -> Self {
        Self {
            length,
            half_width,
            curvature: 0.0,
            waists,
            waist_depth,
            waist_sigma: 0.6 * half_width,
            intensity: (40, 90),
            angle: 0.0,
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidParams(m.to_string()));
        if !(self.length >= 2.0 && self.length.is_finite()) {
            return bad("length must be >= 2");
        }
        if !(self.half_width >= 1.0 && self.half_width.is_finite()) {
            return bad("half width must be >= 1");
        }
        if !self.curvature.is_finite() || self.curvature.abs() > std::f64::consts::PI {
            return bad("curvature must be within [-pi, pi]");
        }
        if self.waists.is_empty() || self.waists.len() > 2 {
            return bad("one or two waists required");
        }
        if self.waists.iter().any(|&w| !(w > 0.1 && w < 0.9)) {
            return bad("waist positions must lie in (0.1, 0.9)");
        }
        if !(self.waist_depth > 0.0 && self.waist_depth < 1.0) {
            return bad("waist depth must lie in (0, 1)");
        }
        if !(self.waist_sigma > 0.0) {
            return bad("waist sigma must be positive");
        }
        if self.intensity.0 > self.intensity.1 || self.intensity.1 == 255 {
            return bad("intensity range must be ordered and below 255");
        }
        Ok(())
    }

    fn kind(&self) -> SpriteKind {
        if self.waists.len() == 2 {
            SpriteKind::Dc
        } else {
            SpriteKind::Mc
        }
    }
}

const SAMPLE_STEP: f64 = 0.25;

struct DiscSweep {
    centres: Vec<(f64, f64)>,
    radii: Vec<f64>,
}

fn sweep_chromosome(p: &ChromosomeShapeParams) -> (DiscSweep, Vec<(f64, f64)>) {
    // straight shapes snap length and waists to whole pixels so that equal
    // waists rasterize identically
    let straight = p.curvature == 0.0;
    let length = if straight { p.length.round() } else { p.length };
    let waist_s: Vec<f64> = p
        .waists
        .iter()
        .map(|&f| if straight { (f * length).round() } else { f * length })
        .collect();
    let radius_of_curve = if straight { f64::INFINITY } else { length / p.curvature };
    let (ca, sa) = (p.angle.cos(), p.angle.sin());
    let at = |s: f64| -> (f64, f64) {
        let (x, y) = if straight {
            (s, 0.0)
        } else {
            let phi = s / radius_of_curve;
            (radius_of_curve * phi.sin(), radius_of_curve * (1.0 - phi.cos()))
        };
        (x * ca - y * sa, x * sa + y * ca)
    };
    let samples = (length / SAMPLE_STEP).round() as usize;
    let mut centres = Vec::with_capacity(samples + 1);
    let mut radii = Vec::with_capacity(samples + 1);
    for k in 0..=samples {
        let s = k as f64 * SAMPLE_STEP;
        let dip = waist_s
            .iter()
            .map(|&w| (-(s - w).powi(2) / (2.0 * p.waist_sigma * p.waist_sigma)).exp())
            .fold(0.0, f64::max);
        centres.push(at(s));
        radii.push(p.half_width * (1.0 - p.waist_depth * dip));
    }
    let waists = waist_s.iter().map(|&s| at(s)).collect();
    (DiscSweep { centres, radii }, waists)
}

/// Rasterize a disc sweep; returns raster, mask and the integer offset that
/// maps shape coordinates to sprite pixels.
fn render_sweep(sweep: &DiscSweep, intensity: (u8, u8), margin: i64) -> (GrayImage, BinaryMask, (i64, i64)) {
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for (&(cx, cy), &r) in sweep.centres.iter().zip(&sweep.radii) {
        x0 = x0.min(cx - r);
        y0 = y0.min(cy - r);
        x1 = x1.max(cx + r);
        y1 = y1.max(cy + r);
    }
    let ox = x0.floor() as i64 - margin;
    let oy = y0.floor() as i64 - margin;
    let w = (x1.ceil() as i64 + margin - ox + 1) as usize;
    let h = (y1.ceil() as i64 + margin - oy + 1) as usize;
    // normalized distance to the centreline, minimum over covering discs
    let mut norm = vec![f64::INFINITY; w * h];
    for (&(cx, cy), &r) in sweep.centres.iter().zip(&sweep.radii) {
        let (lx, ly) = (cx - ox as f64, cy - oy as f64);
        let xa = (lx - r).floor().max(0.0) as usize;
        let xb = ((lx + r).ceil() as usize).min(w - 1);
        let ya = (ly - r).floor().max(0.0) as usize;
        let yb = ((ly + r).ceil() as usize).min(h - 1);
        for y in ya..=yb {
            for x in xa..=xb {
                let d2 = (x as f64 - lx).powi(2) + (y as f64 - ly).powi(2);
                if d2 <= r * r {
                    let n = d2.sqrt() / r;
                    let slot = &mut norm[y * w + x];
                    if n < *slot {
                        *slot = n;
                    }
                }
            }
        }
    }
    let (lo, hi) = (intensity.0 as f64, intensity.1 as f64);
    let mask = BinaryMask::from_fn(w, h, |x, y| norm[y * w + x].is_finite());
    let raster = GrayImage::from_fn(w, h, |x, y| {
        let n = norm[y * w + x];
        if n.is_finite() {
            (lo + (hi - lo) * n * n).round() as u8
        } else {
            255
        }
    });
    (raster, mask, (ox, oy))
}

pub fn generate_sprite(params: &ChromosomeShapeParams) -> Result<Sprite, SynthError> {
    params.validate()?;
    let (sweep, waists) = sweep_chromosome(params);
    let (raster, mask, (ox, oy)) = render_sweep(&sweep, params.intensity, 2);
    Ok(Sprite {
        raster,
        mask,
        kind: params.kind(),
        centromeres: waists
            .into_iter()
            .map(|(x, y)| [x - ox as f64, y - oy as f64])
            .collect(),
    })
}

/// Filled disc with no centromeres.
pub fn generate_nucleus(radius: f64, intensity: u8) -> Result<Sprite, SynthError> {
    if !(radius >= 1.0 && radius.is_finite()) {
        return Err(SynthError::InvalidParams("nucleus radius must be >= 1".into()));
    }
    let sweep = DiscSweep {
        centres: vec![(0.0, 0.0)],
        radii: vec![radius],
    };
    let (raster, mask, _) = render_sweep(&sweep, (intensity, intensity), 2);
    Ok(Sprite {
        raster,
        mask,
        kind: SpriteKind::Nucleus,
        centromeres: Vec::new(),
    })
}

/// Small elliptical speck.
pub fn generate_debris<R: Rng>(rng: &mut R, max_radius: f64) -> Result<Sprite, SynthError> {
    if !(max_radius >= 1.0) {
        return Err(SynthError::InvalidParams("debris radius must be >= 1".into()));
    }
    let a = rng.random_range(1.0..=max_radius);
    let b = rng.random_range(1.0..=max_radius);
    let theta: f64 = rng.random_range(0.0..std::f64::consts::PI);
    let intensity: u8 = rng.random_range(30..120);
    let (ct, st) = (theta.cos(), theta.sin());
    let ext = a.max(b).ceil() as i64 + 2;
    let size = (2 * ext + 1) as usize;
    let inside = |x: usize, y: usize| {
        let (dx, dy) = (x as f64 - ext as f64, y as f64 - ext as f64);
        let (u, v) = (dx * ct + dy * st, -dx * st + dy * ct);
        (u / a).powi(2) + (v / b).powi(2) <= 1.0
    };
    let mask = BinaryMask::from_fn(size, size, inside);
    let raster = GrayImage::from_fn(size, size, |x, y| if inside(x, y) { intensity } else { 255 });
    Ok(Sprite {
        raster,
        mask,
        kind: SpriteKind::Debris,
        centromeres: Vec::new(),
    })
}

/// Ranges sampled when building random scenes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpriteProfile {
    pub mc_length: (f64, f64),
    pub dc_length: (f64, f64),
    pub half_width: (f64, f64),
    pub waist_depth: (f64, f64),
    /// Maximum absolute centreline bend, radians.
    pub max_curvature: f64,
    pub debris_max_radius: f64,
    pub nucleus_radius: (f64, f64),
    /// Render at arbitrary angles instead of quarter turns and flips.
    pub free_rotation: bool,
}

impl Default for SpriteProfile {
    fn default() -> Self {
        Self {
            mc_length: (40.0, 80.0),
            dc_length: (70.0, 110.0),
            half_width: (4.5, 6.5),
            waist_depth: (0.4, 0.55),
            max_curvature: 0.0,
            debris_max_radius: 2.0,
            nucleus_radius: (45.0, 60.0),
            free_rotation: false,
        }
    }
}

impl SpriteProfile {
    pub fn random_chromosome<R: Rng>(&self, kind: SpriteKind, rng: &mut R) -> ChromosomeShapeParams {
        let range = |rng: &mut R, (lo, hi): (f64, f64)| if hi > lo { rng.random_range(lo..hi) } else { lo };
        let (length, waists) = match kind {
            SpriteKind::Dc => (
                range(rng, self.dc_length),
                vec![rng.random_range(0.2..0.33), rng.random_range(0.67..0.8)],
            ),
            _ => (range(rng, self.mc_length), vec![rng.random_range(0.3..0.7)]),
        };
        let half_width = range(rng, self.half_width);
        let curvature = if self.max_curvature > 0.0 {
            rng.random_range(-self.max_curvature..self.max_curvature)
        } else {
            0.0
        };
        let angle = if self.free_rotation {
            rng.random_range(0.0..std::f64::consts::TAU)
        } else {
            0.0
        };
        let core: u8 = rng.random_range(30..60);
        ChromosomeShapeParams {
            length,
            half_width,
            curvature,
            waists,
            waist_depth: range(rng, self.waist_depth),
            waist_sigma: 0.6 * half_width,
            intensity: (core, core + 45),
            angle,
        }
    }

    pub fn random_sprite<R: Rng>(&self, kind: SpriteKind, rng: &mut R) -> Result<Sprite, SynthError> {
        match kind {
            SpriteKind::Mc | SpriteKind::Dc => generate_sprite(&self.random_chromosome(kind, rng)),
            SpriteKind::Debris => generate_debris(rng, self.debris_max_radius),
            SpriteKind::Nucleus => {
                let r = rng.random_range(self.nucleus_radius.0..=self.nucleus_radius.1);
                generate_nucleus(r, rng.random_range(70..110))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectLabel {
    pub kind: SpriteKind,
    pub bbox: Rect,
    /// Canvas coordinates.
    pub centromeres: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindCounts {
    pub mc: usize,
    pub dc: usize,
    pub debris: usize,
    pub nucleus: usize,
}

impl KindCounts {
    pub fn chromosomes(&self) -> usize {
        self.mc + self.dc
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneLabel {
    pub width: usize,
    pub height: usize,
    pub objects: Vec<ObjectLabel>,
    pub counts: KindCounts,
}

impl SceneLabel {
    /// Detector label lines: `class cx cy w h`, all normalized to [0, 1].
    pub fn to_detector_lines(&self) -> String {
        let (w, h) = (self.width as f64, self.height as f64);
        let mut s = String::new();
        for o in &self.objects {
            let b = o.bbox;
            s.push_str(&format!(
                "{} {:.6} {:.6} {:.6} {:.6}\n",
                o.kind.class_id(),
                (b.x as f64 + b.w as f64 / 2.0) / w,
                (b.y as f64 + b.h as f64 / 2.0) / h,
                b.w as f64 / w,
                b.h as f64 / h
            ));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Orientation {
    pub quarter_turns: u8,
    pub flip_h: bool,
}

fn orient_sprite(s: &Sprite, o: Orientation) -> Sprite {
    let mut raster = s.raster.clone();
    let mut mask = s.mask.clone();
    let mut cents = s.centromeres.clone();
    if o.flip_h {
        let w = raster.width() as f64;
        raster = raster.flip_horizontal();
        mask = BinaryMask::from_fn(mask.width(), mask.height(), |x, y| s.mask.get(mask.width() - 1 - x, y));
        for c in &mut cents {
            c[0] = w - 1.0 - c[0];
        }
    }
    for _ in 0..o.quarter_turns % 4 {
        let h = raster.height() as f64;
        raster = raster.rotate90();
        mask = mask.rotate90();
        for c in &mut cents {
            *c = [h - 1.0 - c[1], c[0]];
        }
    }
    Sprite {
        raster,
        mask,
        kind: s.kind,
        centromeres: cents,
    }
}

/// Placement rules for [`compose_scene`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    /// Minimum background gap between any two masks and the canvas edge.
    pub min_gap: usize,
    pub attempts: usize,
    /// Quarter turns and horizontal flips.
    pub random_orientation: bool,
}

impl Default for Placement {
    fn default() -> Self {
        Self {
            min_gap: 6,
            attempts: 500,
            random_orientation: true,
        }
    }
}

pub fn compose_scene<R: Rng>(
    sprites: &[Sprite],
    canvas_w: usize,
    canvas_h: usize,
    rng: &mut R,
    placement: &Placement,
) -> Result<(GrayImage, SceneLabel), SynthError> {
    let gap = placement.min_gap.max(2) as i64;
    let mut canvas = GrayImage::new(canvas_w, canvas_h, 255);
    let mut blocked = BinaryMask::new(canvas_w, canvas_h);
    let mut objects = Vec::with_capacity(sprites.len());
    let mut counts = KindCounts::default();
    for (index, sprite) in sprites.iter().enumerate() {
        let orientation = if placement.random_orientation {
            Orientation {
                quarter_turns: rng.random_range(0..4),
                flip_h: rng.random(),
            }
        } else {
            Orientation {
                quarter_turns: 0,
                flip_h: false,
            }
        };
        let s = orient_sprite(sprite, orientation);
        let tight = mask_bbox(&s.mask).ok_or_else(|| SynthError::InvalidParams(format!("sprite {index} has an empty mask")))?;
        let (tw, th) = (tight.w as i64, tight.h as i64);
        let (cw, ch) = (canvas_w as i64, canvas_h as i64);
        if tw + 2 * gap > cw || th + 2 * gap > ch {
            return Err(SynthError::PlacementOverflow { index, attempts: 0 });
        }
        let mut placed = None;
        for _ in 0..placement.attempts {
            let px = rng.random_range(gap..=cw - gap - tw);
            let py = rng.random_range(gap..=ch - gap - th);
            let dx = px - tight.x as i64;
            let dy = py - tight.y as i64;
            let clear = (tight.y..tight.bottom()).all(|y| {
                (tight.x..tight.right()).all(|x| !s.mask.get(x, y) || !blocked.get((x as i64 + dx) as usize, (y as i64 + dy) as usize))
            });
            if clear {
                placed = Some((dx, dy));
                break;
            }
        }
        let (dx, dy) = placed.ok_or(SynthError::PlacementOverflow {
            index,
            attempts: placement.attempts,
        })?;
        for y in tight.y..tight.bottom() {
            for x in tight.x..tight.right() {
                if !s.mask.get(x, y) {
                    continue;
                }
                let (gx, gy) = ((x as i64 + dx) as usize, (y as i64 + dy) as usize);
                canvas.set(gx, gy, s.raster.get(x, y));
                let g = gap as usize;
                for by in gy.saturating_sub(g)..=(gy + g).min(canvas_h - 1) {
                    for bx in gx.saturating_sub(g)..=(gx + g).min(canvas_w - 1) {
                        blocked.set(bx, by, true);
                    }
                }
            }
        }
        match s.kind {
            SpriteKind::Mc => counts.mc += 1,
            SpriteKind::Dc => counts.dc += 1,
            SpriteKind::Debris => counts.debris += 1,
            SpriteKind::Nucleus => counts.nucleus += 1,
        }
        objects.push(ObjectLabel {
            kind: s.kind,
            bbox: Rect::new((tight.x as i64 + dx) as usize, (tight.y as i64 + dy) as usize, tight.w, tight.h),
            centromeres: s.centromeres.iter().map(|c| [c[0] + dx as f64, c[1] + dy as f64]).collect(),
        });
    }
    Ok((
        canvas,
        SceneLabel {
            width: canvas_w,
            height: canvas_h,
            objects,
            counts,
        },
    ))
}

pub(crate) fn mask_bbox(mask: &BinaryMask) -> Option<Rect> {
    let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            if mask.get(x, y) {
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x);
                y1 = y1.max(y);
            }
        }
    }
    (x0 != usize::MAX).then(|| Rect::new(x0, y0, x1 - x0 + 1, y1 - y0 + 1))
}

/// Flips, then the gamma curve `v -> 255 (v / 255)^gamma`, rounded.
pub fn augment(img: &GrayImage, flip_h: bool, flip_v: bool, gamma: f64) -> Result<GrayImage, SynthError> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(SynthError::InvalidGamma(gamma));
    }
    let mut out = img.clone();
    if flip_h {
        out = out.flip_horizontal();
    }
    if flip_v {
        out = out.flip_vertical();
    }
    let lut = gamma_lut(gamma);
    for v in out.data_mut() {
        *v = lut[*v as usize];
    }
    Ok(out)
}

pub fn gamma_lut(gamma: f64) -> [u8; 256] {
    let mut lut = [0u8; 256];
    for (v, slot) in lut.iter_mut().enumerate() {
        *slot = (255.0 * (v as f64 / 255.0).powf(gamma)).round() as u8;
    }
    lut
}

/// Random flip and gamma, the augmentation used for class balancing.
pub fn random_augment<R: Rng>(img: &GrayImage, gamma_range: (f64, f64), rng: &mut R) -> GrayImage {
    let gamma = rng.random_range(gamma_range.0..=gamma_range.1);
    augment(img, rng.random(), rng.random(), gamma).expect("gamma range is positive")
}

/// Contents of one random scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub mc: usize,
    pub dc: usize,
    pub debris: usize,
    pub nuclei: usize,
    pub noise_sigma: f64,
    pub profile: SpriteProfile,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            width: 1024,
            height: 1280,
            mc: 44,
            dc: 2,
            debris: 4,
            nuclei: 1,
            noise_sigma: 0.0,
            profile: SpriteProfile::default(),
        }
    }
}

/// Build and compose a scene deterministically from `seed`. Nuclei are
/// placed first so that large objects find room.
pub fn generate_scene(spec: &SceneSpec, seed: u64) -> Result<(GrayImage, SceneLabel), SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kinds = Vec::new();
    kinds.extend(std::iter::repeat_n(SpriteKind::Nucleus, spec.nuclei));
    let mut chromosomes: Vec<SpriteKind> = std::iter::repeat_n(SpriteKind::Mc, spec.mc)
        .chain(std::iter::repeat_n(SpriteKind::Dc, spec.dc))
        .collect();
    // interleave DCs among MCs so placement order carries no class signal
    for i in (1..chromosomes.len()).rev() {
        let j = rng.random_range(0..=i);
        chromosomes.swap(i, j);
    }
    kinds.extend(chromosomes);
    kinds.extend(std::iter::repeat_n(SpriteKind::Debris, spec.debris));
    let sprites = kinds
        .iter()
        .map(|&k| spec.profile.random_sprite(k, &mut rng))
        .collect::<Result<Vec<_>, _>>()?;
    let placement = Placement {
        random_orientation: !spec.profile.free_rotation,
        ..Placement::default()
    };
    let (mut img, label) = compose_scene(&sprites, spec.width, spec.height, &mut rng, &placement)?;
    if spec.noise_sigma > 0.0 {
        add_gaussian_noise(&mut img, spec.noise_sigma, &mut rng);
    }
    Ok((img, label))
}

pub fn add_gaussian_noise<R: Rng>(img: &mut GrayImage, sigma: f64, rng: &mut R) {
    let normal = Normal::new(0.0, sigma).expect("sigma is finite and positive");
    for v in img.data_mut() {
        *v = (*v as f64 + normal.sample(rng)).round().clamp(0.0, 255.0) as u8;
    }
}

/// Write `NNNN.pgm`, `NNNN.txt` (detector labels) and `NNNN.json` (full label).
pub fn write_scene(dir: &Path, index: usize, img: &GrayImage, label: &SceneLabel) -> Result<(), SynthError> {
    let stem = format!("{index:04}");
    raster::save_image(img, dir.join(format!("{stem}.pgm")), ImageFormat::Pgm)?;
    std::fs::write(dir.join(format!("{stem}.txt")), label.to_detector_lines()).map_err(RasterError::from)?;
    std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(label)?).map_err(RasterError::from)?;
    Ok(())
}

/// Load a sprite pool: every `<name>.pgm|png` with a sibling `<name>.mask.pgm|png`
/// (nonzero = object) becomes a sprite of `kind`.
pub fn load_sprite_pool(dir: &Path, kind: SpriteKind) -> Result<Vec<Sprite>, SynthError> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| SynthError::Pool(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            !name.contains(".mask.") && matches!(p.extension().and_then(|e| e.to_str()), Some("pgm" | "png"))
        })
        .collect();
    entries.sort();
    let mut pool = Vec::new();
    for path in entries {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("pgm");
        let mask_path = path.with_file_name(format!("{stem}.mask.{ext}"));
        let raster = raster::load_image(&path)?;
        let mask_img = raster::load_image(&mask_path)
            .map_err(|e| SynthError::Pool(format!("{}: {e}", mask_path.display())))?;
        if (mask_img.width(), mask_img.height()) != (raster.width(), raster.height()) {
            return Err(SynthError::Pool(format!("{} mask size mismatch", path.display())));
        }
        let mask = BinaryMask::from_fn(raster.width(), raster.height(), |x, y| mask_img.get(x, y) != 0);
        pool.push(Sprite {
            raster,
            mask,
            kind,
            centromeres: Vec::new(),
        });
    }
    Ok(pool)
}
