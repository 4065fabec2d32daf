//! Centromere candidates and the MC/DC decision.
//!
//! For a skeletal point `p` with ruling points `q1` and `q2`, the width sum
//! is `s(p) = dist(p, q1) + dist(p, q2)`. A point qualifies when `p` lies on
//! the segment `q1 q2` up to the collinearity slack, i.e. when
//! `s(p) - dist(q1, q2) < slack`. The first candidate `p1` is the qualifying
//! point with the smallest width sum. The second candidate `p2` is the
//! smallest remaining qualifying point farther than `tl` from `p1`.
//! A chromosome is dicentric when `p2` exists and `s(p2) / s(p1)` does not
//! exceed the ratio threshold.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bpr::{Skeleton, SkeletonPoint};
use crate::segmentation::Point;

#[derive(Debug, Error, PartialEq)]
pub enum CentromereError {
    #[error("no skeletons to average")]
    NoSkeletons,
    #[error("skeleton is empty")]
    EmptySkeleton,
    #[error("no skeletal point satisfies the collinearity condition")]
    NoCandidate,
    #[error("invalid centromere parameter: {0}")]
    InvalidParams(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlackMode {
    /// Slack in pixels.
    #[default]
    Absolute,
    /// Slack as a fraction of `dist(p, q1)`.
    Relative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CentromereParams {
    pub collinearity_slack: f64,
    pub slack_mode: SlackMode,
    pub tl_fraction: f64,
    pub ratio_threshold: f64,
}

impl Default for CentromereParams {
    fn default() -> Self {
        Self {
            collinearity_slack: 0.1,
            slack_mode: SlackMode::Absolute,
            tl_fraction: 0.1,
            ratio_threshold: 1.05,
        }
    }
}

impl CentromereParams {
    pub fn validate(&self) -> Result<(), CentromereError> {
        if !(self.collinearity_slack > 0.0 && self.collinearity_slack.is_finite()) {
            return Err(CentromereError::InvalidParams("collinearity_slack must be positive"));
        }
        if !(self.tl_fraction > 0.0 && self.tl_fraction.is_finite()) {
            return Err(CentromereError::InvalidParams("tl_fraction must be positive"));
        }
        if !(self.ratio_threshold > 1.0 && self.ratio_threshold.is_finite()) {
            return Err(CentromereError::InvalidParams("ratio_threshold must exceed 1"));
        }
        Ok(())
    }

    fn qualifies(&self, sp: &SkeletonPoint) -> bool {
        let slack = match self.slack_mode {
            SlackMode::Absolute => self.collinearity_slack,
            SlackMode::Relative => self.collinearity_slack * sp.width,
        };
        sp.collinearity_gap() < slack
    }

    /// Minimum centromere separation for an image with this mean length.
    pub fn tl(&self, average_length: f64) -> f64 {
        self.tl_fraction * average_length
    }
}

/// Mean skeleton path length.
pub fn average_chromosome_length(lengths: &[f64]) -> Result<f64, CentromereError> {
    if lengths.is_empty() {
        return Err(CentromereError::NoSkeletons);
    }
    Ok(lengths.iter().sum::<f64>() / lengths.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub point: Point,
    pub width_sum: f64,
}

impl Candidate {
    fn of(sp: &SkeletonPoint) -> Self {
        Self {
            point: sp.p,
            width_sum: sp.width_sum(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidates {
    pub p1: Candidate,
    pub p2: Option<Candidate>,
    /// `p1` is the global minimum width sum because nothing qualified.
    pub fallback: bool,
}

fn argmin<'a>(points: impl Iterator<Item = &'a SkeletonPoint>) -> Option<&'a SkeletonPoint> {
    // first in raster order among equal sums
    points.fold(None, |best: Option<&SkeletonPoint>, sp| match best {
        Some(b) if b.width_sum() <= sp.width_sum() => Some(b),
        _ => Some(sp),
    })
}

pub fn find_candidates(skeleton: &Skeleton, params: &CentromereParams, tl: f64) -> Result<Candidates, CentromereError> {
    if skeleton.is_empty() {
        return Err(CentromereError::EmptySkeleton);
    }
    let p1 = argmin(skeleton.points.iter().filter(|sp| params.qualifies(sp))).ok_or(CentromereError::NoCandidate)?;
    let p2 = argmin(
        skeleton
            .points
            .iter()
            .filter(|sp| params.qualifies(sp) && sp.p.dist(p1.p) > tl),
    );
    Ok(Candidates {
        p1: Candidate::of(p1),
        p2: p2.map(Candidate::of),
        fallback: false,
    })
}

/// As [`find_candidates`], but an image without qualifying points falls back
/// to the global minimum width sum and an MC call.
pub fn find_candidates_or_fallback(skeleton: &Skeleton, params: &CentromereParams, tl: f64) -> Result<Candidates, CentromereError> {
    match find_candidates(skeleton, params, tl) {
        Err(CentromereError::NoCandidate) => {
            let p1 = argmin(skeleton.points.iter()).expect("skeleton is nonempty");
            Ok(Candidates {
                p1: Candidate::of(p1),
                p2: None,
                fallback: true,
            })
        }
        other => other,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CallClass {
    Mc,
    Dc,
}

pub fn classify(p1: &Candidate, p2: Option<&Candidate>, params: &CentromereParams) -> CallClass {
    match p2 {
        Some(p2) if ratio(p1, p2) <= params.ratio_threshold => CallClass::Dc,
        _ => CallClass::Mc,
    }
}

fn ratio(p1: &Candidate, p2: &Candidate) -> f64 {
    if p1.width_sum == 0.0 {
        f64::INFINITY
    } else {
        p2.width_sum / p1.width_sum
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallDiagnostics {
    pub s1: f64,
    pub s2: Option<f64>,
    pub ratio: Option<f64>,
    pub tl: f64,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChromosomeCall {
    pub contour: usize,
    pub centromeres: Vec<Point>,
    pub class: CallClass,
    pub diagnostics: CallDiagnostics,
}

pub fn call_chromosome(
    contour: usize,
    skeleton: &Skeleton,
    params: &CentromereParams,
    tl: f64,
) -> Result<ChromosomeCall, CentromereError> {
    let c = find_candidates_or_fallback(skeleton, params, tl)?;
    let class = classify(&c.p1, c.p2.as_ref(), params);
    let centromeres = match (class, c.p2) {
        (CallClass::Dc, Some(p2)) => vec![c.p1.point, p2.point],
        _ => vec![c.p1.point],
    };
    Ok(ChromosomeCall {
        contour,
        centromeres,
        class,
        diagnostics: CallDiagnostics {
            s1: c.p1.width_sum,
            s2: c.p2.map(|p| p.width_sum),
            ratio: c.p2.map(|p2| ratio(&c.p1, &p2)),
            tl,
            fallback: c.fallback,
        },
    })
}
