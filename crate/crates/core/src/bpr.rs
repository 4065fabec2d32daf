//! Skeleton growing by the bending potential ratio.
//!
//! For an interior pixel `p` with ruling point `q1` (its nearest point on the
//! outer contour) and `q2` (the ruling point of one of its 8-neighbours),
//!
//! ```text
//! eps(p, q1, q2) = tan(theta / 2) * sqrt(len(q1, q2)^2 / dist(q1, q2)^2 - 1)
//! ```
//!
//! where `theta` is the angle `q1-p-q2`, `len` is the shorter of the two
//! contour arcs between `q1` and `q2` (axial steps weigh 1, diagonal steps
//! `sqrt 2`) and `dist` is the chord. `p` is skeletal when `eps > t`.
//!
//! Growth starts at the deepest interior pixel and repeatedly admits any
//! interior 8-neighbour of the current skeleton for which some admitted
//! neighbour supplies a `q2` with `eps > t`, until nothing changes. The
//! admitted set is the reachability closure from the seed and does not
//! depend on visiting order.
//!
//! A pixel may have several nearest contour points at exactly the same
//! distance. The predicate takes the maximum over all such ties for both
//! `q1` and `q2`, which keeps the grown set equivariant under the
//! symmetries of the pixel grid.

use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distance::edt_squared;
use crate::raster::Rect;
use crate::segmentation::{BinaryMask, Contour, Point};

#[derive(Debug, Error, PartialEq)]
pub enum BprError {
    #[error("component has no interior pixels")]
    EmptyInterior,
    #[error("contour is not an outer border of a component in this mask")]
    NotAComponent,
    #[error("threshold t = {0} outside (0, 10)")]
    InvalidThreshold(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BprParams {
    /// Skeletal-point threshold on the bending potential ratio.
    pub t: f64,
    /// Components larger than this are not skeletonized.
    pub max_component_pixels: usize,
}

impl Default for BprParams {
    fn default() -> Self {
        Self {
            t: 1.0,
            max_component_pixels: 250_000,
        }
    }
}

impl BprParams {
    pub fn validate(&self) -> Result<(), BprError> {
        if self.t > 0.0 && self.t < 10.0 {
            Ok(())
        } else {
            Err(BprError::InvalidThreshold(self.t))
        }
    }
}

/// Bending potential ratio at `p` for ruling points `q1`, `q2` joined by a
/// contour arc of length `arc_len`.
///
/// Returns `+inf` when `p` lies strictly between `q1` and `q2` on their chord
/// (`theta = pi`), and `0` when the radicand is not positive or the ruling
/// points coincide.
pub fn bpr_value(p: Point, q1: Point, q2: Point, arc_len: f64) -> f64 {
    if q1 == q2 {
        return 0.0;
    }
    let (ax, ay) = ((q1.x - p.x) as i64, (q1.y - p.y) as i64);
    let (bx, by) = ((q2.x - p.x) as i64, (q2.y - p.y) as i64);
    let cross = ax * by - ay * bx;
    let dot = ax * bx + ay * by;
    let chord2 = q1.dist2(q2) as f64;
    let radicand = arc_len * arc_len / chord2 - 1.0;
    if radicand <= 0.0 {
        return 0.0;
    }
    if cross == 0 && dot < 0 {
        return f64::INFINITY;
    }
    let norms = (((ax * ax + ay * ay) * (bx * bx + by * by)) as f64).sqrt();
    let denom = norms + dot as f64;
    if denom <= 0.0 {
        return f64::INFINITY;
    }
    (cross.abs() as f64 / denom) * radicand.sqrt()
}

/// Index of the contour point nearest to `p`; ties go to the lowest index.
pub fn ruling_point(p: Point, contour: &Contour) -> usize {
    let mut best = (i64::MAX, 0usize);
    for (i, q) in contour.points.iter().enumerate() {
        let d = p.dist2(*q);
        if d < best.0 {
            best = (d, i);
        }
    }
    best.1
}

/// Cumulative arc lengths along a closed contour walk, kept as exact counts
/// of axial and diagonal steps so that the length of an arc does not depend
/// on where the walk starts.
#[derive(Debug, Clone)]
pub struct ArcLengths {
    cum: Vec<(u32, u32)>,
    total: (u32, u32),
}

fn steps_len((axial, diagonal): (u32, u32)) -> f64 {
    axial as f64 + diagonal as f64 * std::f64::consts::SQRT_2
}

impl ArcLengths {
    pub fn new(points: &[Point]) -> Self {
        let step = |a: Point, b: Point| match (a.x != b.x, a.y != b.y) {
            (true, true) => (0, 1),
            (false, false) => (0, 0),
            _ => (1, 0),
        };
        let add = |(a, d): (u32, u32), (sa, sd): (u32, u32)| (a + sa, d + sd);
        let mut cum = Vec::with_capacity(points.len());
        let mut acc = (0, 0);
        for (i, &p) in points.iter().enumerate() {
            if i > 0 {
                acc = add(acc, step(points[i - 1], p));
            }
            cum.push(acc);
        }
        let total = match points {
            [] | [_] => (0, 0),
            _ => add(acc, step(points[points.len() - 1], points[0])),
        };
        Self { cum, total }
    }

    /// Shorter of the two arcs between contour indices `i` and `j`.
    pub fn between(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = if i <= j { (self.cum[i], self.cum[j]) } else { (self.cum[j], self.cum[i]) };
        let forward = (hi.0 - lo.0, hi.1 - lo.1);
        let back = (self.total.0 - forward.0, self.total.1 - forward.1);
        steps_len(forward).min(steps_len(back))
    }

    pub fn total(&self) -> f64 {
        steps_len(self.total)
    }
}

/// Geometry of one foreground component, in a local frame around its bbox.
#[derive(Debug, Clone)]
pub struct Component {
    /// Global position of local pixel (0, 0).
    pub origin: Point,
    pub width: usize,
    pub height: usize,
    /// Local membership mask.
    pub mask: BinaryMask,
    pub pixel_count: usize,
    /// Squared distance to the nearest background pixel, local raster order.
    pub depth2: Vec<f64>,
    pub contour: Vec<Point>,
    pub arcs: ArcLengths,
}

impl Component {
    /// Extract the 8-connected component of `mask` bounded by `contour`.
    pub fn extract(contour: &Contour, mask: &BinaryMask) -> Result<Self, BprError> {
        let start = *contour.points.first().ok_or(BprError::NotAComponent)?;
        if !mask.get_signed(start.x as i64, start.y as i64) {
            return Err(BprError::NotAComponent);
        }
        let bbox: Rect = contour.bbox;
        let (w, h) = (bbox.w, bbox.h);
        let origin = Point::new(bbox.x as i32, bbox.y as i32);
        let mut local = BinaryMask::new(w, h);
        let mut queue = VecDeque::from([start]);
        let to_local = |p: Point| ((p.x - origin.x) as usize, (p.y - origin.y) as usize);
        let (lx, ly) = to_local(start);
        local.set(lx, ly, true);
        let mut count = 0;
        while let Some(p) = queue.pop_front() {
            count += 1;
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let q = Point::new(p.x + dx, p.y + dy);
                    if q == p || !mask.get_signed(q.x as i64, q.y as i64) {
                        continue;
                    }
                    if !bbox.contains(q.x as usize, q.y as usize) {
                        return Err(BprError::NotAComponent);
                    }
                    let (qx, qy) = to_local(q);
                    if !local.get(qx, qy) {
                        local.set(qx, qy, true);
                        queue.push_back(q);
                    }
                }
            }
        }
        let depth2 = edt_squared(&local);
        Ok(Self {
            origin,
            width: w,
            height: h,
            mask: local,
            pixel_count: count,
            depth2,
            contour: contour.points.clone(),
            arcs: ArcLengths::new(&contour.points),
        })
    }

    #[inline]
    fn local_index(&self, p: Point) -> Option<usize> {
        let (x, y) = (p.x - self.origin.x, p.y - self.origin.y);
        (x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height)
            .then(|| y as usize * self.width + x as usize)
    }

    pub fn contains(&self, p: Point) -> bool {
        self.local_index(p).is_some_and(|i| self.mask.data()[i])
    }

    /// Distance from `p` to the nearest background pixel.
    pub fn depth(&self, p: Point) -> f64 {
        self.local_index(p).map_or(0.0, |i| self.depth2[i].sqrt())
    }

    /// Member whose 4-neighbours are all members.
    pub fn is_interior(&self, p: Point) -> bool {
        self.contains(p)
            && [(1, 0), (-1, 0), (0, 1), (0, -1)]
                .iter()
                .all(|&(dx, dy)| self.contains(Point::new(p.x + dx, p.y + dy)))
    }

    pub fn pixels(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.height).flat_map(move |y| {
            (0..self.width)
                .filter(move |&x| self.mask.get(x, y))
                .map(move |x| Point::new(self.origin.x + x as i32, self.origin.y + y as i32))
        })
    }

    pub fn interior_pixels(&self) -> impl Iterator<Item = Point> + '_ {
        self.pixels().filter(|&p| self.is_interior(p))
    }

    /// Every contour index at the minimum distance from `p`, ascending.
    pub fn ruling_ties(&self, p: Point) -> (i64, Vec<u32>) {
        let mut best = i64::MAX;
        let mut ties = Vec::new();
        for (i, q) in self.contour.iter().enumerate() {
            let d = p.dist2(*q);
            if d < best {
                best = d;
                ties.clear();
                ties.push(i as u32);
            } else if d == best {
                ties.push(i as u32);
            }
        }
        (best, ties)
    }

    /// Deepest interior pixel, first in raster order among equals.
    pub fn seed(&self) -> Option<Point> {
        let mut best: Option<(f64, Point)> = None;
        for p in self.interior_pixels() {
            let d = self.depth2[self.local_index(p).unwrap()];
            if best.is_none_or(|(bd, _)| d > bd) {
                best = Some((d, p));
            }
        }
        best.map(|(_, p)| p)
    }

    fn epsilon(&self, p: Point, i: u32, j: u32) -> f64 {
        let (i, j) = (i as usize, j as usize);
        bpr_value(p, self.contour[i], self.contour[j], self.arcs.between(i, j))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkeletonPoint {
    pub p: Point,
    /// Ruling point of `p`.
    pub q1: Point,
    /// Ruling point of the skeletal neighbour giving the largest ratio.
    pub q2: Point,
    /// `dist(p, q1)`.
    pub width: f64,
    pub epsilon: f64,
}

impl SkeletonPoint {
    /// `dist(p, q1) + dist(p, q2)`.
    pub fn width_sum(&self) -> f64 {
        self.p.dist(self.q1) + self.p.dist(self.q2)
    }

    /// How far `p` is from the segment `q1 q2`: `width_sum - dist(q1, q2)`.
    pub fn collinearity_gap(&self) -> f64 {
        self.width_sum() - self.q1.dist(self.q2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skeleton {
    /// Skeletal points in raster order.
    pub points: Vec<SkeletonPoint>,
    pub seed: Point,
}

impl Skeleton {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, p: Point) -> bool {
        self.points.binary_search_by(|s| raster_key(s.p).cmp(&raster_key(p))).is_ok()
    }

    /// 8-connectivity of the point set.
    pub fn is_connected(&self) -> bool {
        let pts: Vec<Point> = self.points.iter().map(|s| s.p).collect();
        point_set_connected(&pts)
    }

    /// Longest geodesic path through the skeleton (axial steps 1, diagonal
    /// `sqrt 2`), found by a double sweep from the seed.
    pub fn path_length(&self) -> f64 {
        let pts: Vec<Point> = self.points.iter().map(|s| s.p).collect();
        geodesic_diameter(&pts)
    }
}

fn raster_key(p: Point) -> (i32, i32) {
    (p.y, p.x)
}

pub(crate) fn point_set_connected(points: &[Point]) -> bool {
    if points.is_empty() {
        return true;
    }
    let set: std::collections::HashSet<Point> = points.iter().copied().collect();
    let mut seen = std::collections::HashSet::from([points[0]]);
    let mut queue = VecDeque::from([points[0]]);
    while let Some(p) = queue.pop_front() {
        for n in neighbours8(p) {
            if set.contains(&n) && seen.insert(n) {
                queue.push_back(n);
            }
        }
    }
    seen.len() == set.len()
}

/// Weighted eccentricity sweep: farthest point from an arbitrary start, then
/// the farthest distance from that point.
pub(crate) fn geodesic_diameter(points: &[Point]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let index: std::collections::HashMap<Point, usize> =
        points.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let sweep = |start: usize| -> (usize, f64) {
        let mut dist = vec![f64::INFINITY; points.len()];
        let mut heap = BinaryHeap::new();
        dist[start] = 0.0;
        heap.push(HeapItem(0.0, start));
        while let Some(HeapItem(d, i)) = heap.pop() {
            if d > dist[i] {
                continue;
            }
            let p = points[i];
            for n in neighbours8(p) {
                if let Some(&j) = index.get(&n) {
                    let step = if n.x != p.x && n.y != p.y { std::f64::consts::SQRT_2 } else { 1.0 };
                    if d + step < dist[j] {
                        dist[j] = d + step;
                        heap.push(HeapItem(d + step, j));
                    }
                }
            }
        }
        let mut far = (start, 0.0);
        for (i, &d) in dist.iter().enumerate() {
            if d.is_finite() && d > far.1 {
                far = (i, d);
            }
        }
        far
    };
    let (a, _) = sweep(0);
    sweep(a).1
}

#[derive(PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    // min-heap on distance, index as tie-break
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

pub(crate) fn neighbours8(p: Point) -> impl Iterator<Item = Point> {
    const OFFSETS: [(i32, i32); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];
    OFFSETS.into_iter().map(move |(dx, dy)| Point::new(p.x + dx, p.y + dy))
}

/// Grow the skeleton of the component bounded by `contour`.
pub fn grow_skeleton(contour: &Contour, mask: &BinaryMask, params: &BprParams) -> Result<Skeleton, BprError> {
    params.validate()?;
    let component = Component::extract(contour, mask)?;
    grow_in_component(&component, params)
}

pub fn grow_in_component(c: &Component, params: &BprParams) -> Result<Skeleton, BprError> {
    let seed = c.seed().ok_or(BprError::EmptyInterior)?;
    let n = c.width * c.height;
    let idx = |p: Point| c.local_index(p).expect("point inside component bbox");

    // ruling ties for every interior pixel
    let mut ties: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut ruling_dist2 = vec![0i64; n];
    for p in c.interior_pixels() {
        let (d, t) = c.ruling_ties(p);
        ties[idx(p)] = t;
        ruling_dist2[idx(p)] = d;
    }

    // equal ratios prefer the smaller width sum, then the longer chord, so the
    // stored pair does not depend on contour indexing
    let better = |p: Point, a: (f64, u32, u32), b: (f64, u32, u32)| -> bool {
        if a.0 != b.0 {
            return a.0 > b.0;
        }
        let key = |(_, i, j): (f64, u32, u32)| {
            let (q1, q2) = (c.contour[i as usize], c.contour[j as usize]);
            (p.dist(q1) + p.dist(q2), q1.dist2(q2))
        };
        let ((sa, ca), (sb, cb)) = (key(a), key(b));
        sa < sb || (sa == sb && ca > cb)
    };
    let best_over = |p: Point, neighbour: Point| -> (f64, u32, u32) {
        let mut best = (f64::NEG_INFINITY, 0, 0);
        for &i in &ties[idx(p)] {
            for &j in &ties[idx(neighbour)] {
                let cand = (c.epsilon(p, i, j), i, j);
                if best.0 == f64::NEG_INFINITY || better(p, cand, best) {
                    best = cand;
                }
            }
        }
        best
    };

    let mut admitted = vec![false; n];
    admitted[idx(seed)] = true;
    let mut queue: VecDeque<Point> = neighbours8(seed).filter(|&q| c.is_interior(q)).collect();
    while let Some(p) = queue.pop_front() {
        if admitted[idx(p)] {
            continue;
        }
        let admit = neighbours8(p)
            .filter(|&q| c.contains(q) && admitted[idx(q)])
            .any(|q| best_over(p, q).0 > params.t);
        if admit {
            admitted[idx(p)] = true;
            queue.extend(neighbours8(p).filter(|&q| c.is_interior(q) && !admitted[idx(q)]));
        }
    }

    let mut points = Vec::new();
    for p in c.interior_pixels() {
        if !admitted[idx(p)] {
            continue;
        }
        let mut best = (f64::NEG_INFINITY, ties[idx(p)][0], ties[idx(p)][0]);
        for q in neighbours8(p).filter(|&q| c.contains(q) && admitted[idx(q)]) {
            let cand = best_over(p, q);
            if best.0 == f64::NEG_INFINITY || better(p, cand, best) {
                best = cand;
            }
        }
        let (eps, i, j) = best;
        points.push(SkeletonPoint {
            p,
            q1: c.contour[i as usize],
            q2: c.contour[j as usize],
            width: (ruling_dist2[idx(p)] as f64).sqrt(),
            epsilon: eps.max(0.0),
        });
    }
    Ok(Skeleton { points, seed })
}
