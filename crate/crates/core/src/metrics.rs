//! Chamfer distance and Chamfer angle between 2D point sets.
//!
//! Nearest neighbours are found with a uniform bucket grid; ties are broken
//! toward the lower index so the accelerated search returns exactly the same
//! correspondences as the quadratic scan.

use crate::error::{Error, Result};
use crate::types::Vec2;

/// Reported Chamfer distances are scaled by this factor.
pub const CD_SCALE: f64 = 100.0;

fn d2(a: Vec2, b: Vec2) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Bucket grid over a point set for exact nearest-neighbour queries.
#[derive(Debug, Clone)]
pub struct NearestIndex<'a> {
    points: &'a [Vec2],
    origin: Vec2,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl<'a> NearestIndex<'a> {
    pub fn new(points: &'a [Vec2]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("point set"));
        }
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in points {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
        let per_side = (points.len() as f64).sqrt().ceil().max(1.0);
        let cell = extent / per_side;
        let nx = ((hi[0] - lo[0]) / cell) as usize + 1;
        let ny = ((hi[1] - lo[1]) / cell) as usize + 1;
        let mut buckets = vec![Vec::new(); nx * ny];
        let mut idx = Self {
            points,
            origin: lo,
            cell,
            nx,
            ny,
            buckets: Vec::new(),
        };
        for (i, p) in points.iter().enumerate() {
            let (cx, cy) = idx.cell_of(*p);
            buckets[cy * nx + cx].push(i);
        }
        idx.buckets = buckets;
        Ok(idx)
    }

    fn cell_of(&self, p: Vec2) -> (usize, usize) {
        let cx = ((p[0] - self.origin[0]) / self.cell).floor().clamp(0.0, (self.nx - 1) as f64) as usize;
        let cy = ((p[1] - self.origin[1]) / self.cell).floor().clamp(0.0, (self.ny - 1) as f64) as usize;
        (cx, cy)
    }

    /// Index and squared distance of the nearest point to `q`.
    pub fn nearest(&self, q: Vec2) -> (usize, f64) {
        let (cx, cy) = self.cell_of(q);
        let mut best = (usize::MAX, f64::INFINITY);
        let max_ring = self.nx.max(self.ny);
        for ring in 0..=max_ring {
            let (x0, x1) = (cx as isize - ring as isize, cx as isize + ring as isize);
            let (y0, y1) = (cy as isize - ring as isize, cy as isize + ring as isize);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let on_ring = y == y0 || y == y1 || x == x0 || x == x1;
                    if !on_ring || x < 0 || y < 0 || x >= self.nx as isize || y >= self.ny as isize {
                        continue;
                    }
                    for &i in &self.buckets[y as usize * self.nx + x as usize] {
                        let d = d2(q, self.points[i]);
                        if d < best.1 || (d == best.1 && i < best.0) {
                            best = (i, d);
                        }
                    }
                }
            }
            // Anything outside the searched block is at least `ring * cell`
            // away along one axis from q's cell boundary.
            if best.0 != usize::MAX {
                let reach = ring as f64 * self.cell;
                let gap = [
                    q[0] - (self.origin[0] + cx as f64 * self.cell),
                    self.origin[0] + (cx + 1) as f64 * self.cell - q[0],
                    q[1] - (self.origin[1] + cy as f64 * self.cell),
                    self.origin[1] + (cy + 1) as f64 * self.cell - q[1],
                ];
                let margin = reach + gap.iter().cloned().fold(f64::INFINITY, f64::min).max(0.0);
                if margin * margin > best.1 {
                    break;
                }
            }
        }
        best
    }
}

fn nearest_brute(points: &[Vec2], q: Vec2) -> (usize, f64) {
    let mut best = (usize::MAX, f64::INFINITY);
    for (i, p) in points.iter().enumerate() {
        let d = d2(q, *p);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn correspondences(from: &[Vec2], to: &[Vec2], brute: bool) -> Result<Vec<(usize, f64)>> {
    if from.is_empty() || to.is_empty() {
        return Err(Error::Empty("point set"));
    }
    if brute {
        return Ok(from.iter().map(|q| nearest_brute(to, *q)).collect());
    }
    let index = NearestIndex::new(to)?;
    Ok(from.iter().map(|q| index.nearest(*q)).collect())
}

fn chamfer_distance_impl(a: &[Vec2], b: &[Vec2], brute: bool) -> Result<f64> {
    let ab = correspondences(a, b, brute)?;
    let ba = correspondences(b, a, brute)?;
    let mean = |c: &[(usize, f64)]| c.iter().map(|(_, d)| d.sqrt()).sum::<f64>() / c.len() as f64;
    Ok(0.5 * (mean(&ab) + mean(&ba)) * CD_SCALE)
}

/// Symmetric mean nearest-neighbour distance, times 100.
pub fn chamfer_distance(a: &[Vec2], b: &[Vec2]) -> Result<f64> {
    chamfer_distance_impl(a, b, false)
}

/// Quadratic-time reference for [`chamfer_distance`].
pub fn chamfer_distance_brute(a: &[Vec2], b: &[Vec2]) -> Result<f64> {
    chamfer_distance_impl(a, b, true)
}

fn angle_deg(n: Vec2, m: Vec2) -> f64 {
    (n[0] * m[0] + n[1] * m[1]).abs().min(1.0).acos().to_degrees()
}

fn chamfer_angle_impl(a: &[Vec2], na: &[Vec2], b: &[Vec2], nb: &[Vec2], brute: bool) -> Result<f64> {
    if na.len() != a.len() || nb.len() != b.len() {
        return Err(Error::InvalidArgument("normals must match points".into()));
    }
    let ab = correspondences(a, b, brute)?;
    let ba = correspondences(b, a, brute)?;
    let fwd = ab.iter().enumerate().map(|(i, (j, _))| angle_deg(na[i], nb[*j])).sum::<f64>() / a.len() as f64;
    let bwd = ba.iter().enumerate().map(|(j, (i, _))| angle_deg(nb[j], na[*i])).sum::<f64>() / b.len() as f64;
    Ok(0.5 * (fwd + bwd))
}

/// Mean normal angle in degrees at the Chamfer correspondences, ignoring
/// normal orientation.
pub fn chamfer_angle(a: &[Vec2], na: &[Vec2], b: &[Vec2], nb: &[Vec2]) -> Result<f64> {
    chamfer_angle_impl(a, na, b, nb, false)
}

/// Quadratic-time reference for [`chamfer_angle`].
pub fn chamfer_angle_brute(a: &[Vec2], na: &[Vec2], b: &[Vec2], nb: &[Vec2]) -> Result<f64> {
    chamfer_angle_impl(a, na, b, nb, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_values() {
        assert_eq!(chamfer_distance(&[[0.0, 0.0]], &[[0.1, 0.0]]).unwrap(), 10.0);
        let a = [[0.0, 0.0], [1.0, 0.5]];
        assert_eq!(chamfer_distance(&a, &a).unwrap(), 0.0);
        assert!(chamfer_distance(&a, &[]).is_err());
    }

    #[test]
    fn rotated_normals() {
        let pts: Vec<Vec2> = (0..10).map(|i| [i as f64 * 0.1, 0.0]).collect();
        let n1 = vec![[0.0, 1.0]; 10];
        let t = 30f64.to_radians();
        let n2 = vec![[-t.sin(), t.cos()]; 10];
        assert!((chamfer_angle(&pts, &n1, &pts, &n2).unwrap() - 30.0).abs() < 1e-9);
        assert_eq!(chamfer_angle(&pts, &n1, &pts, &n1).unwrap(), 0.0);
        let flipped = vec![[0.0, -1.0]; 10];
        assert_eq!(chamfer_angle(&pts, &n1, &pts, &flipped).unwrap(), 0.0);
    }

    #[test]
    fn duplicate_points_tie_break() {
        let b = [[0.5, 0.5], [0.5, 0.5], [0.2, 0.1]];
        let idx = NearestIndex::new(&b).unwrap();
        assert_eq!(idx.nearest([0.6, 0.6]).0, 0);
        assert_eq!(nearest_brute(&b, [0.6, 0.6]).0, 0);
    }
}
