//! Confusion matrix with DC as the positive class, and the derived metrics.
//!
//! Every metric returns `None` when its denominator is zero.

use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::centromere::CallClass;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("{calls} calls but {truths} truths")]
    LengthMismatch { calls: usize, truths: usize },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

fn frac(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl ConfusionMatrix {
    pub fn new(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        Self { tp, tn, fp, fn_ }
    }

    pub fn accumulate(calls: &[CallClass], truths: &[CallClass]) -> Result<Self, MetricsError> {
        if calls.len() != truths.len() {
            return Err(MetricsError::LengthMismatch {
                calls: calls.len(),
                truths: truths.len(),
            });
        }
        let mut cm = Self::default();
        for (&c, &t) in calls.iter().zip(truths) {
            cm.record(c, t);
        }
        Ok(cm)
    }

    pub fn record(&mut self, call: CallClass, truth: CallClass) {
        match (call, truth) {
            (CallClass::Dc, CallClass::Dc) => self.tp += 1,
            (CallClass::Mc, CallClass::Mc) => self.tn += 1,
            (CallClass::Dc, CallClass::Mc) => self.fp += 1,
            (CallClass::Mc, CallClass::Dc) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn accuracy(&self) -> Option<f64> {
        frac(self.tp + self.tn, self.total())
    }

    pub fn precision(&self) -> Option<f64> {
        frac(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> Option<f64> {
        frac(self.tp, self.tp + self.fn_)
    }

    pub fn specificity(&self) -> Option<f64> {
        frac(self.tn, self.tn + self.fp)
    }

    /// Matthews correlation coefficient.
    pub fn mcc(&self) -> Option<f64> {
        let (tp, tn, fp, fn_) = (self.tp as f64, self.tn as f64, self.fp as f64, self.fn_ as f64);
        let den = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
        (den > 0.0).then(|| (tp * tn - fp * fn_) / den.sqrt())
    }

    /// The same counts with MC taken as positive.
    pub fn swapped(&self) -> Self {
        Self {
            tp: self.tn,
            tn: self.tp,
            fp: self.fn_,
            fn_: self.fp,
        }
    }

    pub fn summary(&self) -> MetricSummary {
        MetricSummary {
            matrix: *self,
            accuracy: self.accuracy(),
            precision: self.precision(),
            recall: self.recall(),
            specificity: self.specificity(),
            mcc: self.mcc(),
        }
    }
}

impl Add for ConfusionMatrix {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self::new(self.tp + o.tp, self.tn + o.tn, self.fp + o.fp, self.fn_ + o.fn_)
    }
}

impl AddAssign for ConfusionMatrix {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl std::iter::Sum for ConfusionMatrix {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub matrix: ConfusionMatrix,
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub specificity: Option<f64>,
    pub mcc: Option<f64>,
}

impl std::fmt::Display for MetricSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let m = self.matrix;
        writeln!(f, "tp {}  tn {}  fp {}  fn {}", m.tp, m.tn, m.fp, m.fn_)?;
        let pct = |v: Option<f64>| v.map_or("undefined".to_string(), |v| format!("{:.2}%", 100.0 * v));
        writeln!(f, "accuracy     {}", pct(self.accuracy))?;
        writeln!(f, "precision    {}", pct(self.precision))?;
        writeln!(f, "recall       {}", pct(self.recall))?;
        writeln!(f, "specificity  {}", pct(self.specificity))?;
        write!(f, "mcc          {}", self.mcc.map_or("undefined".to_string(), |v| format!("{v:.4}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use CallClass::{Dc, Mc};

    #[test]
    fn fixture_matrix() {
        let cm = ConfusionMatrix::new(1350, 1480, 20, 150);
        assert!((cm.accuracy().unwrap() - 2830.0 / 3000.0).abs() < 1e-15);
        assert!((cm.precision().unwrap() - 1350.0 / 1370.0).abs() < 1e-15);
        assert_eq!(cm.recall(), Some(0.9));
        assert!((cm.specificity().unwrap() - 1480.0 / 1500.0).abs() < 1e-15);
        let mcc = (1350.0 * 1480.0 - 20.0 * 150.0) / (1370.0f64 * 1500.0 * 1500.0 * 1630.0).sqrt();
        assert!((cm.mcc().unwrap() - mcc).abs() < 1e-15);
    }

    #[test]
    fn perfect_and_degenerate() {
        let cm = ConfusionMatrix::accumulate(&[Dc, Mc, Dc, Mc], &[Dc, Mc, Dc, Mc]).unwrap();
        assert_eq!((cm.fp, cm.fn_), (0, 0));
        assert_eq!(cm.mcc(), Some(1.0));
        assert_eq!(cm.accuracy(), Some(1.0));

        let always = ConfusionMatrix::accumulate(&[Dc; 4], &[Dc, Mc, Dc, Mc]).unwrap();
        assert_eq!(always.accuracy(), Some(0.5));
        assert_eq!(always.recall(), Some(1.0));
        assert_eq!(always.specificity(), Some(0.0));
        assert_eq!(always.mcc(), None);

        assert_eq!(ConfusionMatrix::default().accuracy(), None);
        assert_eq!(
            ConfusionMatrix::accumulate(&[Dc], &[]),
            Err(MetricsError::LengthMismatch { calls: 1, truths: 0 })
        );
    }

    #[test]
    fn inverted_predictions_swap_cells() {
        let truths = [Dc, Dc, Mc, Mc, Mc, Dc];
        let correct = ConfusionMatrix::accumulate(&truths, &truths).unwrap();
        let flipped: Vec<CallClass> = truths.iter().map(|&t| if t == Dc { Mc } else { Dc }).collect();
        let inverted = ConfusionMatrix::accumulate(&flipped, &truths).unwrap();
        assert_eq!((inverted.fn_, inverted.fp), (correct.tp, correct.tn));
    }

    fn class() -> impl Strategy<Value = CallClass> {
        prop_oneof![Just(Dc), Just(Mc)]
    }

    proptest! {
        #[test]
        fn matches_counting_oracle(pairs in proptest::collection::vec((class(), class()), 0..1000)) {
            let (calls, truths): (Vec<_>, Vec<_>) = pairs.iter().copied().unzip();
            let cm = ConfusionMatrix::accumulate(&calls, &truths).unwrap();
            let count = |c, t| pairs.iter().filter(|&&p| p == (c, t)).count() as u64;
            prop_assert_eq!(cm, ConfusionMatrix::new(count(Dc, Dc), count(Mc, Mc), count(Dc, Mc), count(Mc, Dc)));
        }

        #[test]
        fn mcc_bounded_and_swap_symmetric(tp in 0u64..500, tn in 0u64..500, fp in 0u64..500, fn_ in 0u64..500) {
            let cm = ConfusionMatrix::new(tp, tn, fp, fn_);
            let sw = cm.swapped();
            if let Some(m) = cm.mcc() {
                prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&m));
                prop_assert!((sw.mcc().unwrap() - m).abs() < 1e-12);
                if m == 1.0 {
                    prop_assert!(fp == 0 && fn_ == 0);
                }
            }
            prop_assert_eq!(cm.accuracy(), sw.accuracy());
            prop_assert_eq!(cm.recall(), sw.specificity());
            prop_assert_eq!(sw.precision(), frac(tn, tn + fn_));
        }

        #[test]
        fn merge_is_associative(a in any::<[u16; 4]>(), b in any::<[u16; 4]>(), c in any::<[u16; 4]>()) {
            let m = |v: [u16; 4]| ConfusionMatrix::new(v[0] as u64, v[1] as u64, v[2] as u64, v[3] as u64);
            prop_assert_eq!((m(a) + m(b)) + m(c), m(a) + (m(b) + m(c)));
        }
    }
}
