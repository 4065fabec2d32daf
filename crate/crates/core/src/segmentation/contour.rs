//! Suzuki-Abe border following.
//!
//! Foreground is 8-connected and background 4-connected. The raster scan
//! discovers borders in raster order; every outer border corresponds to one
//! foreground component and every hole border to one enclosed background
//! region. While scanning, each foreground pixel is also assigned to its
//! component: border pixels take the component of the border that marked
//! them, interior pixels inherit from their left neighbour.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::BinaryMask;
use crate::raster::Rect;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point {
    pub x: i32,
    pub y: i32,
}

impl Point {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn dist2(self, o: Point) -> i64 {
        let dx = (self.x - o.x) as i64;
        let dy = (self.y - o.y) as i64;
        dx * dx + dy * dy
    }

    pub fn dist(self, o: Point) -> f64 {
        (self.dist2(o) as f64).sqrt()
    }

    pub fn is_8_adjacent(self, o: Point) -> bool {
        self != o && (self.x - o.x).abs() <= 1 && (self.y - o.y).abs() <= 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContourKind {
    Outer,
    Hole,
}

/// Closed boundary of one component (outer) or one enclosed background region (hole).
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    /// Boundary pixels in tracing order; consecutive points (and last to
    /// first) are 8-adjacent. Pixels on one-pixel-wide parts repeat.
    pub points: Vec<Point>,
    pub kind: ContourKind,
    /// Pixels enclosed by the border. For an outer border this is the
    /// component with its holes filled; for a hole border it is the hole
    /// region together with anything nested inside it.
    pub area: usize,
    pub bbox: Rect,
    /// Index of the immediately enclosing contour, `None` at top level.
    pub parent: Option<usize>,
}

impl Contour {
    pub fn perimeter(&self) -> usize {
        self.points.len()
    }

    pub fn is_outer(&self) -> bool {
        self.kind == ContourKind::Outer
    }
}

/// Contours plus the per-pixel component assignment made during the scan.
#[derive(Debug, Clone)]
pub struct Tracing {
    pub contours: Vec<Contour>,
    width: usize,
    /// 0 for background, otherwise outer contour index + 1.
    labels: Vec<u32>,
}

impl Tracing {
    /// Outer contour that owns pixel `(x, y)`, if it is foreground.
    pub fn component_of(&self, x: usize, y: usize) -> Option<usize> {
        match self.labels[y * self.width + x] {
            0 => None,
            l => Some(l as usize - 1),
        }
    }

    /// Foreground pixels of the component bounded by outer contour `idx`, in raster order.
    pub fn component_pixels(&self, idx: usize) -> Vec<Point> {
        let want = idx as u32 + 1;
        let bbox = self.contours[idx].bbox;
        let mut out = Vec::new();
        for y in bbox.y..bbox.bottom() {
            for x in bbox.x..bbox.right() {
                if self.labels[y * self.width + x] == want {
                    out.push(Point::new(x as i32, y as i32));
                }
            }
        }
        out
    }

    pub fn outer_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.contours
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_outer())
            .map(|(i, _)| i)
    }
}

pub fn find_contours(mask: &BinaryMask) -> Vec<Contour> {
    trace_borders(mask).contours
}

// Clockwise on screen (y grows downwards), starting west.
const DIRS: [(i64, i64); 8] = [
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
];
const EAST: usize = 4;

fn dir_index(dx: i64, dy: i64) -> usize {
    DIRS.iter()
        .position(|&d| d == (dx, dy))
        .expect("points are 8-neighbours")
}

struct Border {
    kind: ContourKind,
    parent_nbd: i32,
    points: Vec<Point>,
    start: (usize, usize),
}

pub fn trace_borders(mask: &BinaryMask) -> Tracing {
    let (w, h) = (mask.width(), mask.height());
    let pw = w + 2;
    let ph = h + 2;
    let mut f = vec![0i32; pw * ph];
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) {
                f[(y + 1) * pw + x + 1] = 1;
            }
        }
    }
    let at = |x: usize, y: usize| y * pw + x;

    // border number 1 is the frame, which behaves as a hole border
    let mut borders: Vec<Border> = vec![Border {
        kind: ContourKind::Hole,
        parent_nbd: 0,
        points: Vec::new(),
        start: (0, 0),
    }];
    let mut labels = vec![0u32; pw * ph];
    // outer border nbd -> component label (assigned later as contour index + 1)
    let mut component_of_nbd: Vec<i32> = vec![0];

    for y in 1..=h {
        let mut lnbd: i32 = 1;
        for x in 1..=w {
            let v = f[at(x, y)];
            if v == 0 {
                continue;
            }
            let mut start = None;
            if v == 1 && f[at(x - 1, y)] == 0 {
                start = Some((ContourKind::Outer, (x - 1, y)));
            } else if v >= 1 && f[at(x + 1, y)] == 0 {
                if v > 1 {
                    lnbd = v;
                }
                start = Some((ContourKind::Hole, (x + 1, y)));
            }
            if let Some((kind, from)) = start {
                let nbd = borders.len() as i32 + 1;
                let prev = &borders[(lnbd - 1) as usize];
                let parent_nbd = match (kind, prev.kind) {
                    (ContourKind::Outer, ContourKind::Hole) | (ContourKind::Hole, ContourKind::Outer) => lnbd,
                    _ => prev.parent_nbd,
                };
                let points = follow(&mut f, pw, (x, y), from, nbd);
                borders.push(Border {
                    kind,
                    parent_nbd,
                    points,
                    start: (x, y),
                });
                let owner = match kind {
                    ContourKind::Outer => nbd,
                    ContourKind::Hole => component_of_nbd[parent_nbd as usize - 1],
                };
                component_of_nbd.push(owner);
            }
            let marked = f[at(x, y)];
            labels[at(x, y)] = if marked.abs() >= 2 {
                component_of_nbd[marked.unsigned_abs() as usize - 1] as u32
            } else {
                labels[at(x - 1, y)]
            };
            if marked != 1 {
                lnbd = marked.abs();
            }
        }
    }

    // renumber: border nbd (>= 2) -> contour index nbd - 2
    let n_contours = borders.len() - 1;
    let parent_of = |b: &Border| (b.parent_nbd >= 2).then(|| b.parent_nbd as usize - 2);

    // foreground component sizes
    let mut comp_size = vec![0usize; n_contours];
    let mut out_labels = vec![0u32; w * h];
    for y in 0..h {
        for x in 0..w {
            let l = labels[at(x + 1, y + 1)];
            if l != 0 {
                let idx = l as usize - 2;
                comp_size[idx] += 1;
                out_labels[y * w + x] = idx as u32 + 1;
            }
        }
    }

    // background regions (4-connected) over the padded grid; region 0 holds the frame
    let hole_sizes = background_region_sizes(&f, pw, ph);
    let mut region_size = vec![0usize; n_contours];
    for (i, b) in borders.iter().enumerate().skip(1) {
        if b.kind == ContourKind::Hole {
            let (sx, sy) = b.start;
            let r = hole_sizes.0[at(sx + 1, sy)];
            region_size[i - 1] = hole_sizes.1[r as usize];
        }
    }

    let mut contours: Vec<Contour> = borders
        .iter()
        .skip(1)
        .enumerate()
        .map(|(i, b)| {
            let own = match b.kind {
                ContourKind::Outer => comp_size[i],
                ContourKind::Hole => region_size[i],
            };
            Contour {
                points: b.points.clone(),
                kind: b.kind,
                area: own,
                bbox: bounding_rect(&b.points),
                parent: parent_of(b),
            }
        })
        .collect();

    // enclosed area accumulates children; children always follow their parent
    for i in (0..contours.len()).rev() {
        if let Some(p) = contours[i].parent {
            let a = contours[i].area;
            contours[p].area += a;
        }
    }

    Tracing {
        contours,
        width: w,
        labels: out_labels,
    }
}

/// Trace one border starting at `start`, whose zero neighbour is `from`.
fn follow(f: &mut [i32], pw: usize, start: (usize, usize), from: (usize, usize), nbd: i32) -> Vec<Point> {
    let at = |(x, y): (usize, usize)| y * pw + x;
    let step = |(x, y): (usize, usize), d: usize| {
        let (dx, dy) = DIRS[d];
        ((x as i64 + dx) as usize, (y as i64 + dy) as usize)
    };
    let to_point = |(x, y): (usize, usize)| Point::new(x as i32 - 1, y as i32 - 1);

    // 3.1: clockwise from `from` for the first nonzero neighbour
    let d0 = dir_index(from.0 as i64 - start.0 as i64, from.1 as i64 - start.1 as i64);
    let first = (0..8)
        .map(|k| (d0 + k) % 8)
        .find(|&d| f[at(step(start, d))] != 0);
    let Some(d1) = first else {
        f[at(start)] = -nbd;
        return vec![to_point(start)];
    };
    let p1 = step(start, d1);
    let mut p2 = p1;
    let mut p3 = start;
    let mut points = Vec::new();
    loop {
        points.push(to_point(p3));
        // 3.3: counterclockwise from the element after p2
        let d2 = dir_index(p2.0 as i64 - p3.0 as i64, p2.1 as i64 - p3.1 as i64);
        let mut east_zero_examined = false;
        let mut p4 = p3;
        for k in 1..=8 {
            let d = (d2 + 8 - k) % 8;
            let q = step(p3, d);
            if f[at(q)] != 0 {
                p4 = q;
                break;
            }
            if d == EAST {
                east_zero_examined = true;
            }
        }
        // 3.4
        if east_zero_examined {
            f[at(p3)] = -nbd;
        } else if f[at(p3)] == 1 {
            f[at(p3)] = nbd;
        }
        // 3.5
        if p4 == start && p3 == p1 {
            break;
        }
        p2 = p3;
        p3 = p4;
    }
    points
}

/// 4-connected background labels on the padded grid and per-region sizes
/// counted over unpadded pixels only.
fn background_region_sizes(f: &[i32], pw: usize, ph: usize) -> (Vec<u32>, Vec<usize>) {
    let mut region = vec![u32::MAX; pw * ph];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for seed in 0..pw * ph {
        if f[seed] != 0 || region[seed] != u32::MAX {
            continue;
        }
        let id = sizes.len() as u32;
        let mut size = 0usize;
        region[seed] = id;
        queue.push_back(seed);
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % pw, i / pw);
            if x >= 1 && y >= 1 && x <= pw - 2 && y <= ph - 2 {
                size += 1;
            }
            let mut visit = |j: usize| {
                if f[j] == 0 && region[j] == u32::MAX {
                    region[j] = id;
                    queue.push_back(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < pw {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - pw);
            }
            if y + 1 < ph {
                visit(i + pw);
            }
        }
        sizes.push(size);
    }
    (region, sizes)
}

fn bounding_rect(points: &[Point]) -> Rect {
    let (mut x0, mut y0, mut x1, mut y1) = (i32::MAX, i32::MAX, i32::MIN, i32::MIN);
    for p in points {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    Rect::new(
        x0 as usize,
        y0 as usize,
        (x1 - x0 + 1) as usize,
        (y1 - y0 + 1) as usize,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask_from(rows: &[&str]) -> BinaryMask {
        BinaryMask::from_fn(rows[0].len(), rows.len(), |x, y| rows[y].as_bytes()[x] == b'#')
    }

    #[test]
    fn empty_mask_has_no_contours() {
        assert!(find_contours(&BinaryMask::new(6, 4)).is_empty());
    }

    #[test]
    fn filled_square() {
        let m = BinaryMask::from_fn(9, 9, |x, y| (2..7).contains(&x) && (2..7).contains(&y));
        let cs = find_contours(&m);
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].kind, ContourKind::Outer);
        assert_eq!(cs[0].area, 25);
        assert_eq!(cs[0].perimeter(), 16);
        assert_eq!(cs[0].bbox, Rect::new(2, 2, 5, 5));
    }

    #[test]
    fn ring_has_hole_with_parent() {
        let m = mask_from(&[
            ".....", //
            ".###.", //
            ".#.#.", //
            ".###.", //
            ".....",
        ]);
        let t = trace_borders(&m);
        assert_eq!(t.contours.len(), 2);
        assert_eq!(t.contours[0].kind, ContourKind::Outer);
        assert_eq!(t.contours[0].area, 9);
        assert_eq!(t.contours[1].kind, ContourKind::Hole);
        assert_eq!(t.contours[1].area, 1);
        assert_eq!(t.contours[1].parent, Some(0));
        assert_eq!(t.component_pixels(0).len(), 8);
    }

    #[test]
    fn diagonal_pixels_are_one_component() {
        let m = mask_from(&["#..", ".#.", "..#"]);
        let cs = find_contours(&m);
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].area, 3);
        for w in cs[0].points.windows(2) {
            assert!(w[0].is_8_adjacent(w[1]));
        }
    }

    #[test]
    fn touching_frame_and_single_pixel() {
        let m = mask_from(&["#..#", "....", "##.."]);
        let cs = find_contours(&m);
        assert_eq!(cs.len(), 3);
        assert_eq!(cs[0].points, vec![Point::new(0, 0)]);
        assert_eq!(cs[1].points, vec![Point::new(3, 0)]);
        assert_eq!(cs[2].area, 2);
    }

    #[test]
    fn nested_component_inside_hole() {
        let m = mask_from(&[
            "#######",
            "#.....#",
            "#.###.#",
            "#.#.#.#",
            "#.###.#",
            "#.....#",
            "#######",
        ]);
        let t = trace_borders(&m);
        let kinds: Vec<_> = t.contours.iter().map(|c| c.kind).collect();
        assert_eq!(
            kinds,
            vec![ContourKind::Outer, ContourKind::Hole, ContourKind::Outer, ContourKind::Hole]
        );
        assert_eq!(t.contours[2].parent, Some(1));
        assert_eq!(t.contours[0].area, 49);
        let fg = m.count() as i64;
        let signed: i64 = t
            .contours
            .iter()
            .map(|c| if c.is_outer() { c.area as i64 } else { -(c.area as i64) })
            .sum();
        assert_eq!(signed, fg);
    }
}
