//! Otsu's between-class-variance threshold.
//!
//! For a split at level `t` (class 0 is `v <= t`) with `n0` pixels summing to
//! `s0`, out of `n` pixels summing to `s`, the between-class variance is
//! `(s0 n - n0 s)^2 / (n^2 n0 (n - n0))`. The common factor `n^2` is dropped
//! and candidates are compared exactly as fractions, so plateaus (levels that
//! fall between occupied bins) tie exactly and the lowest level wins.
//! A split with an empty class scores zero.

use crate::raster::GrayImage;

pub fn otsu_threshold(img: &GrayImage) -> u8 {
    otsu_threshold_from_histogram(&img.histogram())
}

/// Above this pixel count the exact fraction no longer fits in 128 bits.
const EXACT_LIMIT: u64 = 1 << 28;

pub fn otsu_threshold_from_histogram(hist: &[u64; 256]) -> u8 {
    let n: u64 = hist.iter().sum();
    let s: u64 = hist.iter().enumerate().map(|(v, &c)| v as u64 * c).sum();
    if n >= EXACT_LIMIT {
        return otsu_float(hist, n, s);
    }
    let mut best = Score::zero();
    let mut best_level = 0u8;
    let (mut n0, mut s0) = (0u64, 0u64);
    for (t, &c) in hist.iter().enumerate() {
        n0 += c;
        s0 += t as u64 * c;
        let score = Score::at(n0, s0, n, s);
        if score.greater_than(&best) {
            best = score;
            best_level = t as u8;
        }
    }
    best_level
}

#[derive(Clone, Copy)]
struct Score {
    num: u128,
    den: u64,
}

impl Score {
    fn zero() -> Self {
        Score { num: 0, den: 1 }
    }

    fn at(n0: u64, s0: u64, n: u64, s: u64) -> Self {
        if n0 == 0 || n0 == n {
            return Self::zero();
        }
        let diff = (s0 as i128 * n as i128 - n0 as i128 * s as i128).unsigned_abs();
        Score {
            num: diff * diff,
            den: n0 * (n - n0),
        }
    }

    fn greater_than(&self, other: &Score) -> bool {
        mul_wide(self.num, other.den) > mul_wide(other.num, self.den)
    }
}

/// Full 256-bit product as `(high, low)` halves.
fn mul_wide(a: u128, b: u64) -> (u128, u128) {
    let b = b as u128;
    let lo = (a & u64::MAX as u128) * b;
    let hi = (a >> 64) * b;
    let (low, carry) = lo.overflowing_add(hi << 64);
    ((hi >> 64) + carry as u128, low)
}

fn otsu_float(hist: &[u64; 256], n: u64, s: u64) -> u8 {
    let (n, s) = (n as f64, s as f64);
    let (mut n0, mut s0) = (0f64, 0f64);
    let mut best = 0f64;
    let mut best_level = 0u8;
    for (t, &c) in hist.iter().enumerate() {
        n0 += c as f64;
        s0 += t as f64 * c as f64;
        if n0 == 0.0 || n0 == n {
            continue;
        }
        let d = s0 * n - n0 * s;
        let score = d * d / (n0 * (n - n0));
        if score > best {
            best = score;
            best_level = t as u8;
        }
    }
    best_level
}
