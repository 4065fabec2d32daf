//! Exact Euclidean distance transform (Felzenszwalb-Huttenlocher lower envelope).

use crate::segmentation::BinaryMask;

/// Squared Euclidean distance from every pixel to the nearest background
/// pixel; pixels beyond the mask border count as background.
pub fn edt_squared(mask: &BinaryMask) -> Vec<f64> {
    let (w, h) = (mask.width(), mask.height());
    let (pw, ph) = (w + 2, h + 2);
    // larger than any attainable squared distance, small enough to stay exact
    let inf = ((pw + ph) * (pw + ph)) as f64;
    let mut grid = vec![0.0; pw * ph];
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) {
                grid[(y + 1) * pw + x + 1] = inf;
            }
        }
    }
    let mut line = vec![0.0; pw.max(ph)];
    let mut out = vec![0.0; pw.max(ph)];
    let mut env = Envelope::new(pw.max(ph));
    for x in 0..pw {
        for y in 0..ph {
            line[y] = grid[y * pw + x];
        }
        env.transform(&line[..ph], &mut out[..ph]);
        for y in 0..ph {
            grid[y * pw + x] = out[y];
        }
    }
    for y in 0..ph {
        let row = &mut grid[y * pw..(y + 1) * pw];
        line[..pw].copy_from_slice(row);
        env.transform(&line[..pw], &mut out[..pw]);
        row.copy_from_slice(&out[..pw]);
    }
    let mut result = Vec::with_capacity(w * h);
    for y in 0..h {
        result.extend_from_slice(&grid[(y + 1) * pw + 1..(y + 1) * pw + 1 + w]);
    }
    result
}

struct Envelope {
    v: Vec<usize>,
    z: Vec<f64>,
}

impl Envelope {
    fn new(n: usize) -> Self {
        Self {
            v: vec![0; n],
            z: vec![0.0; n + 1],
        }
    }

    /// 1-D squared distance transform of sampled function `f`.
    fn transform(&mut self, f: &[f64], d: &mut [f64]) {
        let n = f.len();
        let (v, z) = (&mut self.v, &mut self.z);
        let mut k = 0usize;
        v[0] = 0;
        z[0] = f64::NEG_INFINITY;
        z[1] = f64::INFINITY;
        for q in 1..n {
            let intersect = |p: usize| {
                ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64))
            };
            let mut s = intersect(v[k]);
            while s <= z[k] {
                k -= 1;
                s = intersect(v[k]);
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
        }
        k = 0;
        for (q, dq) in d.iter_mut().enumerate().take(n) {
            while z[k + 1] < q as f64 {
                k += 1;
            }
            let p = v[k];
            let diff = q as f64 - p as f64;
            *dq = diff * diff + f[p];
        }
    }
}
