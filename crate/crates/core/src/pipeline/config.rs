use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bpr::BprParams;
use crate::centromere::CentromereParams;
use crate::geometry::FilterThresholds;
use crate::segmentation::Polarity;

use super::PipelineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Bpr,
    Pca,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bpr" => Ok(Mode::Bpr),
            "pca" => Ok(Mode::Pca),
            other => Err(format!("unknown mode {other:?}, expected bpr or pca")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DenoiseConfig {
    pub enabled: bool,
    pub cutoff_fraction: f64,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            cutoff_fraction: 0.35,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentConfig {
    /// Treat bright pixels as foreground.
    pub invert: bool,
}

impl SegmentConfig {
    pub fn polarity(&self) -> Polarity {
        if self.invert {
            Polarity::LightObjects
        } else {
            Polarity::DarkObjects
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PcaConfig {
    /// MC/DC classifier file.
    pub model: Option<PathBuf>,
    /// Analysable/non-analysable classifier file; the stage is skipped when absent.
    pub analysable_model: Option<PathBuf>,
    /// Label of the dicentric class in `model`.
    pub dc_label: String,
    /// Label of the accepted class in `analysable_model`.
    pub analysable_label: String,
    /// Components kept when training; `None` is `min(64, n - 1)`.
    pub k: Option<usize>,
}

impl Default for PcaConfig {
    fn default() -> Self {
        Self {
            model: None,
            analysable_model: None,
            dc_label: "dc".into(),
            analysable_label: "analysable".into(),
            k: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CountWindow {
    pub min: usize,
    pub max: usize,
}

impl Default for CountWindow {
    fn default() -> Self {
        Self { min: 40, max: 46 }
    }
}

impl CountWindow {
    pub fn contains(&self, n: usize) -> bool {
        n >= self.min && n <= self.max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    /// Wall-clock stage timings make reports run-dependent, so they are off by default.
    pub include_timings: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub mode: Mode,
    pub denoise: DenoiseConfig,
    pub segment: SegmentConfig,
    pub filters: FilterThresholds,
    pub bpr: BprParams,
    pub centromere: CentromereParams,
    pub pca: PcaConfig,
    pub count: CountWindow,
    pub report: ReportConfig,
}

/// Annotated default configuration.
pub const DEFAULT_CONFIG_TOML: &str = r#"# Scoring mode: "bpr" (skeleton and centromere rules) or "pca".
mode = "bpr"

[denoise]
enabled = true
# Brick-wall low-pass radius as a fraction of the largest radial frequency.
# The source method names no value; 0.35 is an engineering default.
cutoff_fraction = 0.35

[segment]
# false: foreground is intensity <= Otsu level (dark chromosomes on a light field).
invert = false

# Debris filters: inclusive [lo, hi] bands on per-image ratios.
# Engineering defaults tuned on synthetic scenes, not published values.
[filters]
area = { lo = 0.2, hi = 6.0 }          # area / median area
mean_width = { lo = 0.4, hi = 3.0 }    # mean width / median mean width
median_width = { lo = 0.4, hi = 3.0 }  # median width / median median width
max_width = { lo = 0.4, hi = 3.0 }     # max width / median max width
aspect = { lo = 0.02, hi = 0.9 }       # bbox short side / long side

[bpr]
# Skeletal-point threshold on the bending potential ratio; the published
# working band is 0.5 to 1.5 and 1.0 is its midpoint.
t = 1.0
max_component_pixels = 250000

[centromere]
# A point qualifies when dist(p,q1) + dist(p,q2) - dist(q1,q2) < slack.
# Published as 0.1 without a unit; read as pixels.
collinearity_slack = 0.1
# "absolute" (pixels) or "relative" (fraction of dist(p, q1)).
slack_mode = "absolute"
# tl = tl_fraction x mean skeleton length of the image (published: about 10%).
tl_fraction = 0.1
# Dicentric when s(p2) / s(p1) <= ratio_threshold (published: 1.05, empirical).
ratio_threshold = 1.05

[pca]
# model = "models/mcdc.pca"
# analysable_model = "models/analysable.pca"
dc_label = "dc"
analysable_label = "analysable"

# A patch is analysable when its chromosome count lies in [min, max]
# (a normal human metaphase has about 46).
[count]
min = 40
max = 46

[report]
include_timings = false
"#;

impl PipelineConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, PipelineError> {
        let cfg: Self = toml::from_str(s).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        // model paths are relative to the config file
        if let Some(dir) = path.parent() {
            for p in [&mut cfg.pca.model, &mut cfg.pca.analysable_model].into_iter().flatten() {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let err = |m: String| Err(PipelineError::Config(m));
        let c = self.denoise.cutoff_fraction;
        if !(c > 0.0 && c <= 1.0) {
            return err(format!("denoise.cutoff_fraction = {c} outside (0, 1]"));
        }
        self.filters.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        self.bpr.validate().map_err(|e| PipelineError::Config(format!("bpr: {e}")))?;
        self.centromere
            .validate()
            .map_err(|e| PipelineError::Config(format!("centromere: {e}")))?;
        if self.count.min > self.count.max {
            return err(format!("count window [{}, {}] is empty", self.count.min, self.count.max));
        }
        if self.pca.k == Some(0) {
            return err("pca.k must be at least 1".into());
        }
        Ok(())
    }
}
