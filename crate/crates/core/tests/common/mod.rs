#![allow(dead_code)]

use std::collections::VecDeque;

use dicentric::segmentation::{BinaryMask, Point};
use rand::Rng;

/// Exhaustive Otsu: textbook `w0 w1 (mu0 - mu1)^2` as an exact fraction,
/// lowest level on ties. Valid for histograms of at most 50 000 pixels.
pub fn brute_otsu(hist: &[u64; 256]) -> u8 {
    let n: u64 = hist.iter().sum();
    assert!(n <= 50_000);
    let s: u64 = hist.iter().enumerate().map(|(v, &c)| v as u64 * c).sum();
    let mut best: (u128, u128) = (0, 1);
    let mut level = 0u8;
    for t in 0..256usize {
        let n0: u64 = hist[..=t].iter().sum();
        let s0: u64 = hist[..=t].iter().enumerate().map(|(v, &c)| v as u64 * c).sum();
        let (n1, s1) = (n - n0, s - s0);
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let d = (s0 as i128 * n1 as i128 - s1 as i128 * n0 as i128).unsigned_abs();
        let cand = (d * d, n0 as u128 * n1 as u128);
        if cand.0 * best.1 > best.0 * cand.1 {
            best = cand;
            level = t as u8;
        }
    }
    level
}

pub fn random_histogram<R: Rng>(rng: &mut R) -> [u64; 256] {
    let mut h = [0u64; 256];
    match rng.random_range(0..4) {
        0 => {
            for c in h.iter_mut() {
                *c = rng.random_range(0..150);
            }
        }
        1 => {
            for _ in 0..rng.random_range(1..6) {
                h[rng.random_range(0..256)] += rng.random_range(1..5000);
            }
        }
        2 => {
            let (a, b) = (rng.random_range(0..128), rng.random_range(128..256));
            for (v, c) in h.iter_mut().enumerate() {
                let da = (v as f64 - a as f64) / 12.0;
                let db = (v as f64 - b as f64) / 20.0;
                *c = (120.0 * (-da * da).exp() + 80.0 * (-db * db).exp()) as u64;
            }
        }
        _ => {
            let v = rng.random_range(0..256);
            h[v] = rng.random_range(1..1000);
            if rng.random_bool(0.5) {
                h[(v + rng.random_range(1..256)) % 256] = h[v];
            }
        }
    }
    h
}

/// 8-connected foreground components by breadth-first flood fill, each as a
/// raster-ordered pixel list, components in order of their first pixel.
pub fn flood_components(mask: &BinaryMask) -> Vec<Vec<Point>> {
    let (w, h) = (mask.width(), mask.height());
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) || seen[y * w + x] {
                continue;
            }
            let mut comp = Vec::new();
            let mut q = VecDeque::from([(x, y)]);
            seen[y * w + x] = true;
            while let Some((cx, cy)) = q.pop_front() {
                comp.push(Point::new(cx as i32, cy as i32));
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let (nx, ny) = (cx as i64 + dx, cy as i64 + dy);
                        if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                            continue;
                        }
                        let (nx, ny) = (nx as usize, ny as usize);
                        if mask.get(nx, ny) && !seen[ny * w + nx] {
                            seen[ny * w + nx] = true;
                            q.push_back((nx, ny));
                        }
                    }
                }
            }
            comp.sort_by_key(|p| (p.y, p.x));
            out.push(comp);
        }
    }
    out
}

/// A component plus every pixel it encloses: whatever the 4-connected
/// background flood from outside the image cannot reach.
pub fn filled(component: &[Point], w: usize, h: usize) -> Vec<Point> {
    let (pw, ph) = (w + 2, h + 2);
    let mut wall = vec![false; pw * ph];
    for p in component {
        wall[(p.y as usize + 1) * pw + p.x as usize + 1] = true;
    }
    let mut outside = vec![false; pw * ph];
    let mut q = VecDeque::from([(0usize, 0usize)]);
    outside[0] = true;
    while let Some((x, y)) = q.pop_front() {
        for (dx, dy) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            if nx < 0 || ny < 0 || nx >= pw as i64 || ny >= ph as i64 {
                continue;
            }
            let i = ny as usize * pw + nx as usize;
            if !wall[i] && !outside[i] {
                outside[i] = true;
                q.push_back((nx as usize, ny as usize));
            }
        }
    }
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !outside[(y + 1) * pw + x + 1] {
                out.push(Point::new(x as i32, y as i32));
            }
        }
    }
    out
}

pub fn random_mask<R: Rng>(rng: &mut R, max_side: usize) -> BinaryMask {
    let w = rng.random_range(1..=max_side);
    let h = rng.random_range(1..=max_side);
    let density = rng.random_range(0.05..0.95);
    match rng.random_range(0..3) {
        0 => BinaryMask::from_fn(w, h, |_, _| rng.random_bool(density)),
        1 => {
            // blobs with holes
            let blobs: Vec<(f64, f64, f64)> = (0..rng.random_range(1..6))
                .map(|_| {
                    (
                        rng.random_range(0.0..w as f64),
                        rng.random_range(0.0..h as f64),
                        rng.random_range(1.0..(max_side as f64 / 3.0)),
                    )
                })
                .collect();
            BinaryMask::from_fn(w, h, |x, y| {
                blobs.iter().any(|&(cx, cy, r)| {
                    let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
                    d <= r && d >= r * 0.5
                })
            })
        }
        _ => {
            let mut m = BinaryMask::from_fn(w, h, |_, _| false);
            for _ in 0..rng.random_range(1..8) {
                let (x0, y0) = (rng.random_range(0..w), rng.random_range(0..h));
                let (x1, y1) = (rng.random_range(x0..w), rng.random_range(y0..h));
                let fill = rng.random_bool(0.7);
                for y in y0..=y1 {
                    for x in x0..=x1 {
                        m.set(x, y, fill);
                    }
                }
            }
            m
        }
    }
}

/// Exhaustive nearest-boundary scan, lowest index on ties.
pub fn nearest_index(p: Point, boundary: &[Point]) -> usize {
    let mut best = (i64::MAX, 0);
    for (i, q) in boundary.iter().enumerate() {
        let d = p.dist2(*q);
        if d < best.0 {
            best = (d, i);
        }
    }
    best.1
}

/// Straight horizontal capsule of half-width `r` between centres `(x0, y)`
/// and `(x1, y)`, on a canvas with a margin of at least 3 px. The axis sits
/// `y_offset` below a pixel row.
pub fn capsule_mask(len: f64, r: f64, y_offset: f64) -> (BinaryMask, (f64, f64, f64)) {
    let w = (len + 2.0 * r + 6.0).ceil() as usize;
    let h = (2.0 * r + 8.0).ceil() as usize;
    let (x0, x1, y) = (r + 3.0, r + 3.0 + len, (r + 3.0).ceil() + y_offset);
    let mask = BinaryMask::from_fn(w, h, |x, yy| {
        let (px, py) = (x as f64, yy as f64);
        let cx = px.clamp(x0, x1);
        (px - cx).powi(2) + (py - y).powi(2) <= r * r
    });
    (mask, (x0, x1, y))
}
