//! Topological border following on binary images (8-connectivity).
//!
//! Every border between a foreground component and the background is traced
//! once: outer borders surround a component, hole borders line the inside of
//! a component around an enclosed background region.

use serde::{Deserialize, Serialize};

use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BorderKind {
    Outer,
    Hole,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Border {
    pub kind: BorderKind,
    /// Pixel coordinates `(x, y)` in tracing order.
    pub points: Vec<(u32, u32)>,
}

// Clockwise on screen (y pointing down), starting east.
const DIRS: [(isize, isize); 8] = [
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
];

fn dir_index(dr: isize, dc: isize) -> usize {
    DIRS.iter()
        .position(|&d| d == (dr, dc))
        .expect("pixels are 8-neighbors")
}

/// Traces all outer and hole borders of the nonzero pixels in `image`.
pub fn find_borders(image: &Grid<u8>) -> Vec<Border> {
    let (w, h) = (image.width(), image.height());
    if w == 0 || h == 0 {
        return Vec::new();
    }
    // One pixel of zero padding keeps every neighbor lookup in range.
    let pw = w + 2;
    let ph = h + 2;
    let mut f = vec![0i32; pw * ph];
    for (x, y, &v) in image.iter_cells() {
        if v != 0 {
            f[(y + 1) * pw + x + 1] = 1;
        }
    }
    let at = |r: usize, c: usize| r * pw + c;
    let step = |r: usize, c: usize, d: usize| {
        (
            (r as isize + DIRS[d].0) as usize,
            (c as isize + DIRS[d].1) as usize,
        )
    };

    let mut borders = Vec::new();
    let mut nbd = 1i32;
    for i in 1..ph - 1 {
        for j in 1..pw - 1 {
            let v = f[at(i, j)];
            if v == 0 {
                continue;
            }
            let start = if v == 1 && f[at(i, j - 1)] == 0 {
                Some((BorderKind::Outer, (i, j - 1)))
            } else if v >= 1 && f[at(i, j + 1)] == 0 {
                Some((BorderKind::Hole, (i, j + 1)))
            } else {
                None
            };
            let Some((kind, (r2, c2))) = start else {
                continue;
            };
            nbd += 1;
            let mut points = Vec::new();

            // Clockwise search for the first nonzero neighbor.
            let d0 = dir_index(r2 as isize - i as isize, c2 as isize - j as isize);
            let first = (0..8)
                .map(|k| (d0 + k) % 8)
                .find(|&d| {
                    let (r, c) = step(i, j, d);
                    f[at(r, c)] != 0
                });
            let Some(d1) = first else {
                f[at(i, j)] = -nbd;
                points.push(((j - 1) as u32, (i - 1) as u32));
                borders.push(Border { kind, points });
                continue;
            };
            let p1 = step(i, j, d1);
            let mut p2 = p1;
            let mut p3 = (i, j);
            loop {
                // Counterclockwise search starting just after p2.
                let d2 = dir_index(
                    p2.0 as isize - p3.0 as isize,
                    p2.1 as isize - p3.1 as isize,
                );
                let mut east_zero = false;
                let mut p4 = p2;
                for k in 1..=8 {
                    let d = (d2 + 8 - k) % 8;
                    let (r, c) = step(p3.0, p3.1, d);
                    if f[at(r, c)] != 0 {
                        p4 = (r, c);
                        break;
                    }
                    if d == 0 {
                        east_zero = true;
                    }
                }
                let idx = at(p3.0, p3.1);
                if east_zero {
                    f[idx] = -nbd;
                } else if f[idx] == 1 {
                    f[idx] = nbd;
                }
                points.push(((p3.1 - 1) as u32, (p3.0 - 1) as u32));
                if p4 == (i, j) && p3 == p1 {
                    break;
                }
                p2 = p3;
                p3 = p4;
            }
            borders.push(Border { kind, points });
        }
    }
    borders
}
