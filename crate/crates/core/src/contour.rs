//! Zero level set extraction by marching squares over `[-1, 1]^2`.

use std::collections::HashMap;

use crate::decoder::{DiskDecoder, Disks};
use crate::error::{Error, Result};
use crate::io::CsvTable;
use crate::types::Vec2;

/// Lower and upper bound of the square scene domain.
pub const DOMAIN: (f64, f64) = (-1.0, 1.0);

#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub points: Vec<Vec2>,
    /// Closed polylines repeat no vertex; the last connects to the first.
    pub closed: bool,
}

impl Polyline {
    pub fn segments(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.points.len();
        let count = if self.closed { n } else { n.saturating_sub(1) };
        (0..count).map(move |i| (self.points[i], self.points[(i + 1) % n]))
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| dist(a, b)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Contour {
    pub polylines: Vec<Polyline>,
}

impl Contour {
    pub fn is_empty(&self) -> bool {
        self.polylines.is_empty()
    }

    pub fn vertex_count(&self) -> usize {
        self.polylines.iter().map(|p| p.points.len()).sum()
    }

    pub fn length(&self) -> f64 {
        self.polylines.iter().map(Polyline::length).sum()
    }

    /// `n` points spaced uniformly in arc length over all polylines.
    pub fn sample_uniform(&self, n: usize) -> Vec<Vec2> {
        let total = self.length();
        if n == 0 || total <= 0.0 {
            return Vec::new();
        }
        let step = total / n as f64;
        let mut out = Vec::with_capacity(n);
        let mut next = 0.5 * step;
        let mut walked = 0.0;
        for (a, b) in self.polylines.iter().flat_map(Polyline::segments) {
            let len = dist(a, b);
            while next < walked + len && out.len() < n {
                let t = (next - walked) / len;
                out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
                next += step;
            }
            walked += len;
        }
        out
    }
}

fn dist(a: Vec2, b: Vec2) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Edge identity on the grid: (vertical?, i, j).
type EdgeKey = (bool, usize, usize);

/// Marching-squares contour of any scalar field sampled on a regular grid.
pub fn marching_squares<F: Fn(Vec2) -> f64>(field: F, resolution: usize) -> Result<Contour> {
    if resolution < 16 {
        return Err(Error::InvalidArgument(format!(
            "grid resolution must be at least 16, got {resolution}"
        )));
    }
    let n = resolution;
    let (lo, hi) = DOMAIN;
    let h = (hi - lo) / n as f64;
    let node = |i: usize, j: usize| [lo + i as f64 * h, lo + j as f64 * h];
    let mut vals = vec![0.0; (n + 1) * (n + 1)];
    for j in 0..=n {
        for i in 0..=n {
            vals[j * (n + 1) + i] = field(node(i, j));
        }
    }
    let v = |i: usize, j: usize| vals[j * (n + 1) + i];
    let inside = |x: f64| x < 0.0;

    // crossing point on each edge
    let mut points: HashMap<EdgeKey, Vec2> = HashMap::new();
    let mut crossing = |key: EdgeKey| -> Vec2 {
        *points.entry(key).or_insert_with(|| {
            let (vert, i, j) = key;
            let (a, b) = if vert { ((i, j), (i, j + 1)) } else { ((i, j), (i + 1, j)) };
            let (fa, fb) = (v(a.0, a.1), v(b.0, b.1));
            let t = (fa / (fa - fb)).clamp(0.0, 1.0);
            let (pa, pb) = (node(a.0, a.1), node(b.0, b.1));
            [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]
        })
    };

    let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let c = [v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1)];
            let edges: [EdgeKey; 4] = [(false, i, j), (true, i + 1, j), (false, i, j + 1), (true, i, j)];
            let crossed: Vec<usize> = (0..4)
                .filter(|&e| inside(c[e]) != inside(c[(e + 1) % 4]))
                .collect();
            match crossed.len() {
                0 => {}
                2 => segments.push((edges[crossed[0]], edges[crossed[1]])),
                _ => {
                    // saddle: decide connectivity from the cell-center average
                    let center_in = inside(0.25 * c.iter().sum::<f64>());
                    let corner0_in = inside(c[0]);
                    if center_in == corner0_in {
                        segments.push((edges[0], edges[1]));
                        segments.push((edges[2], edges[3]));
                    } else {
                        segments.push((edges[3], edges[0]));
                        segments.push((edges[1], edges[2]));
                    }
                }
            }
        }
    }

    let mut by_edge: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (s, (a, b)) in segments.iter().enumerate() {
        by_edge.entry(*a).or_default().push(s);
        by_edge.entry(*b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut polylines = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (a, b) = segments[start];
        let mut chain = vec![a, b];
        // extend forward from b, then backward from a
        for forward in [true, false] {
            loop {
                let end = if forward { *chain.last().unwrap() } else { chain[0] };
                let next = by_edge[&end].iter().copied().find(|s| !used[*s]);
                let Some(s) = next else { break };
                used[s] = true;
                let (p, q) = segments[s];
                let other = if p == end { q } else { p };
                if forward {
                    chain.push(other);
                } else {
                    chain.insert(0, other);
                }
            }
        }
        let closed = chain.len() > 2 && chain[0] == *chain.last().unwrap();
        if closed {
            chain.pop();
        }
        polylines.push(Polyline {
            points: chain.into_iter().map(&mut crossing).collect(),
            closed,
        });
    }
    Ok(Contour { polylines })
}

/// Orient each polyline so the interior (negative side) lies on its left.
fn orient(contour: &mut Contour, grad: impl Fn(Vec2) -> Vec2) {
    for poly in &mut contour.polylines {
        let mut score = 0.0;
        for (a, b) in poly.segments() {
            let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            let g = grad(mid);
            let left = [-(b[1] - a[1]), b[0] - a[0]];
            score += left[0] * g[0] + left[1] * g[1];
        }
        if score > 0.0 {
            poly.points.reverse();
        }
    }
}

/// Zero level set of the decoded field at the given grid resolution.
pub fn extract_contour(decoder: &DiskDecoder, z: &[f64], resolution: usize) -> Result<Contour> {
    let disks = decoder.disks(z)?;
    extract_disks_contour(&disks, resolution)
}

pub fn extract_disks_contour(disks: &Disks, resolution: usize) -> Result<Contour> {
    let mut c = marching_squares(|x| disks.value(x), resolution)?;
    orient(&mut c, |x| disks.value_grad_x(x).1);
    Ok(c)
}

/// Unit outward normal `grad_x D / |grad_x D|` at each point.
pub fn field_normals(disks: &Disks, points: &[Vec2]) -> Result<Vec<Vec2>> {
    points
        .iter()
        .map(|&x| {
            let g = disks.value_grad_x(x).1;
            let n = (g[0] * g[0] + g[1] * g[1]).sqrt();
            if !(n > 1e-12) {
                return Err(Error::DegenerateGradient { x: x[0], y: x[1] });
            }
            Ok([g[0] / n, g[1] / n])
        })
        .collect()
}

/// Per-vertex unit normals, one list per polyline.
pub fn contour_normals(decoder: &DiskDecoder, z: &[f64], contour: &Contour) -> Result<Vec<Vec<Vec2>>> {
    let disks = decoder.disks(z)?;
    contour
        .polylines
        .iter()
        .map(|p| field_normals(&disks, &p.points))
        .collect()
}

/// `polyline, vertex, x, y, nx, ny` rows.
pub fn contour_csv(contour: &Contour, normals: &[Vec<Vec2>]) -> CsvTable {
    let mut t = CsvTable::new("contour", &["polyline", "vertex", "x", "y", "nx", "ny"]);
    for (pi, (poly, ns)) in contour.polylines.iter().zip(normals).enumerate() {
        for (vi, (p, n)) in poly.points.iter().zip(ns).enumerate() {
            let mut row = vec![pi.to_string(), vi.to_string()];
            row.extend([p[0], p[1], n[0], n[1]].iter().map(|x| crate::io::fmt_real(*x)));
            t.push(row);
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoder::DEFAULT_TAU;

    fn disk_decoder(disks: &[(Vec2, f64)]) -> (DiskDecoder, Vec<f64>) {
        let dec = DiskDecoder::unwhitened(disks.len(), DEFAULT_TAU).unwrap();
        let z = dec.latent_from_disks(disks).unwrap().into_vec();
        (dec, z)
    }

    #[test]
    fn circle_vertices_lie_on_circle() {
        let (dec, z) = disk_decoder(&[([0.0, 0.0], 0.5)]);
        let c = extract_contour(&dec, &z, 256).unwrap();
        assert_eq!(c.polylines.len(), 1);
        assert!(c.polylines[0].closed);
        for p in &c.polylines[0].points {
            assert!(((p[0] * p[0] + p[1] * p[1]).sqrt() - 0.5).abs() <= 0.01);
        }
        assert!((c.length() - std::f64::consts::PI).abs() < 0.01);
    }

    #[test]
    fn vertices_within_cell_diagonal() {
        let (dec, z) = disk_decoder(&[([-0.3, 0.1], 0.35), ([0.25, -0.1], 0.3)]);
        let c = extract_contour(&dec, &z, 32).unwrap();
        let diag = 2.0 / 32.0 * 2f64.sqrt();
        for p in c.polylines.iter().flat_map(|p| &p.points) {
            assert!(dec.decode(&z, *p).unwrap().abs() <= diag);
        }
    }

    #[test]
    fn empty_and_disjoint() {
        let c = marching_squares(|_| 1.0, 32).unwrap();
        assert!(c.is_empty());
        assert!(marching_squares(|_| 1.0, 8).is_err());
        let (dec, z) = disk_decoder(&[([-0.5, 0.0], 0.2), ([0.5, 0.0], 0.2)]);
        let c = extract_contour(&dec, &z, 128).unwrap();
        assert_eq!(c.polylines.len(), 2);
        assert!(c.polylines.iter().all(|p| p.closed));
    }

    #[test]
    fn outward_normals_and_orientation() {
        let (dec, z) = disk_decoder(&[([0.1, -0.2], 0.4)]);
        let c = extract_contour(&dec, &z, 128).unwrap();
        let normals = contour_normals(&dec, &z, &c).unwrap();
        for (p, n) in c.polylines[0].points.iter().zip(&normals[0]) {
            let r = [p[0] - 0.1, p[1] + 0.2];
            let rn = (r[0] * r[0] + r[1] * r[1]).sqrt();
            let cos = (r[0] * n[0] + r[1] * n[1]) / rn;
            assert!(cos.min(1.0).acos().to_degrees() <= 0.5);
            assert!(((n[0] * n[0] + n[1] * n[1]).sqrt() - 1.0).abs() < 1e-12);
        }
        // counter-clockwise outer boundary: positive signed area
        let pts = &c.polylines[0].points;
        let area: f64 = (0..pts.len())
            .map(|i| {
                let (a, b) = (pts[i], pts[(i + 1) % pts.len()]);
                a[0] * b[1] - b[0] * a[1]
            })
            .sum::<f64>()
            / 2.0;
        assert!(area > 0.0);
    }

    #[test]
    fn arc_length_sampling() {
        let (dec, z) = disk_decoder(&[([0.0, 0.0], 0.5)]);
        let c = extract_contour(&dec, &z, 128).unwrap();
        let pts = c.sample_uniform(2000);
        assert_eq!(pts.len(), 2000);
        let gaps: Vec<f64> = pts.windows(2).map(|w| dist(w[0], w[1])).collect();
        let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
        assert!(gaps.iter().all(|g| (g - mean).abs() < 0.2 * mean));
    }
}
