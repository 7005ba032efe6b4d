//! Shared domain values: latents and 2D point clouds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec2 = [f64; 2];

#[inline]
pub fn sub2(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn dot2(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm2(a: Vec2) -> f64 {
    a[0].hypot(a[1])
}

/// A whitened latent vector parametrizing one shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Latent(Vec<f64>);

impl Latent {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("latent"));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite latent entry {bad}")));
        }
        Ok(Self(values))
    }

    pub fn zeros(d: usize) -> Self {
        Self(vec![0.0; d.max(1)])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl AsRef<[f64]> for Latent {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Measurement points in `[-1, 1]^2`, optionally with unit normals.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PointCloud2 {
    points: Vec<Vec2>,
    normals: Option<Vec<Vec2>>,
}

impl PointCloud2 {
    pub fn new(points: Vec<Vec2>) -> Result<Self> {
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite point".into()));
        }
        Ok(Self {
            points,
            normals: None,
        })
    }

    pub fn with_normals(points: Vec<Vec2>, normals: Vec<Vec2>) -> Result<Self> {
        if normals.len() != points.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: normals.len(),
            });
        }
        if let Some(n) = normals.iter().find(|n| (norm2(**n) - 1.0).abs() > 1e-9) {
            return Err(Error::InvalidArgument(format!(
                "normal ({}, {}) is not unit length",
                n[0], n[1]
            )));
        }
        let mut cloud = Self::new(points)?;
        cloud.normals = Some(normals);
        Ok(cloud)
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn normals(&self) -> Option<&[Vec2]> {
        self.normals.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn latent_rejects_non_finite_and_empty() {
        assert!(Latent::new(vec![]).is_err());
        assert!(Latent::new(vec![1.0, f64::NAN]).is_err());
        assert_eq!(Latent::new(vec![3.0, 4.0]).unwrap().norm(), 5.0);
    }

    #[test]
    fn cloud_checks_normals() {
        let pts = vec![[0.0, 0.0], [0.5, 0.5]];
        assert!(PointCloud2::with_normals(pts.clone(), vec![[1.0, 0.0]]).is_err());
        assert!(PointCloud2::with_normals(pts.clone(), vec![[1.0, 0.0], [0.5, 0.0]]).is_err());
        let c = PointCloud2::with_normals(pts, vec![[1.0, 0.0], [0.0, -1.0]]).unwrap();
        assert_eq!(c.len(), 2);
        assert!(c.normals().is_some());
    }
}
