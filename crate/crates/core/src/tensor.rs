//! Static dipole polarizability α⁰_{μν}.

use std::ops::{Add, Mul};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Frame;

const SYMMETRY_TOL: f64 = 1e-12;

pub type Matrix3 = [[f64; 3]; 3];

/// Real symmetric 3×3 polarizability in volume units, tagged with the frame
/// its components refer to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolarizabilityTensor {
    components: Matrix3,
    frame: Frame,
}

impl PolarizabilityTensor {
    /// Components in the general (lab) frame. Asymmetry above 1e-12 of the
    /// largest entry is rejected; the accepted matrix is symmetrized.
    pub fn new(components: Matrix3) -> Result<Self> {
        let scale = components
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        if components.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Validation("polarizability has non-finite entries".into()));
        }
        let mut sym = components;
        for i in 0..3 {
            for j in (i + 1)..3 {
                let (a, b) = (components[i][j], components[j][i]);
                if (a - b).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::Validation(format!(
                        "polarizability not symmetric: α[{i}][{j}] = {a}, α[{j}][{i}] = {b}"
                    )));
                }
                let m = 0.5 * (a + b);
                sym[i][j] = m;
                sym[j][i] = m;
            }
        }
        Ok(Self {
            components: sym,
            frame: Frame::General,
        })
    }

    pub fn isotropic(alpha: f64) -> Self {
        Self::diagonal(alpha, alpha, alpha)
    }

    pub fn diagonal(xx: f64, yy: f64, zz: f64) -> Self {
        Self {
            components: [[xx, 0.0, 0.0], [0.0, yy, 0.0], [0.0, 0.0, zz]],
            frame: Frame::General,
        }
    }

    pub fn with_frame(mut self, frame: Frame) -> Self {
        self.frame = frame;
        self
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn components(&self) -> &Matrix3 {
        &self.components
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.components[i][j]
    }

    /// α_⊥ = α_xx + α_yy.
    pub fn perp(&self) -> f64 {
        self.components[0][0] + self.components[1][1]
    }

    pub fn zz(&self) -> f64 {
        self.components[2][2]
    }

    /// α_xx − α_yy.
    pub fn in_plane_anisotropy(&self) -> f64 {
        self.components[0][0] - self.components[1][1]
    }

    /// (α_zx, α_zy).
    pub fn zi(&self) -> [f64; 2] {
        [self.components[2][0], self.components[2][1]]
    }

    /// In-plane block α_ij, i, j ∈ {x, y}.
    pub fn in_plane(&self) -> [[f64; 2]; 2] {
        let c = &self.components;
        [[c[0][0], c[0][1]], [c[1][0], c[1][1]]]
    }

    /// Largest absolute entry.
    pub fn norm_max(&self) -> f64 {
        self.components
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_isotropic(&self) -> bool {
        let c = &self.components;
        let tol = SYMMETRY_TOL * self.norm_max();
        let off = [c[0][1], c[0][2], c[1][2]];
        off.iter().all(|v| v.abs() <= tol)
            && (c[0][0] - c[1][1]).abs() <= tol
            && (c[0][0] - c[2][2]).abs() <= tol
    }

    /// R·α·Rᵀ. The frame tag is kept.
    pub fn transformed(&self, r: &Matrix3) -> Self {
        let a = &self.components;
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let mut s = 0.0;
                for k in 0..3 {
                    for l in 0..3 {
                        s += r[i][k] * a[k][l] * r[j][l];
                    }
                }
                *v = s;
            }
        }
        for i in 0..3 {
            for j in (i + 1)..3 {
                let m = 0.5 * (out[i][j] + out[j][i]);
                out[i][j] = m;
                out[j][i] = m;
            }
        }
        Self {
            components: out,
            frame: self.frame,
        }
    }

    /// Components in axes rotated by `angle` about z: Rz(θ)ᵀ·α·Rz(θ).
    pub fn in_rotated_axes(&self, angle: f64) -> Self {
        self.transformed(&rotation_z(-angle))
    }
}

pub fn rotation_z(angle: f64) -> Matrix3 {
    let (s, c) = angle.sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

pub fn rotation_y(angle: f64) -> Matrix3 {
    let (s, c) = angle.sin_cos();
    [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]]
}

pub fn mat_mul(a: &Matrix3, b: &Matrix3) -> Matrix3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

impl Add for PolarizabilityTensor {
    type Output = PolarizabilityTensor;

    fn add(self, rhs: Self) -> Self {
        let mut c = self.components;
        for (row, rrow) in c.iter_mut().zip(rhs.components.iter()) {
            for (v, r) in row.iter_mut().zip(rrow) {
                *v += r;
            }
        }
        Self {
            components: c,
            frame: self.frame,
        }
    }
}

impl Mul<f64> for PolarizabilityTensor {
    type Output = PolarizabilityTensor;

    fn mul(self, k: f64) -> Self {
        let mut c = self.components;
        c.iter_mut().flatten().for_each(|v| *v *= k);
        Self {
            components: c,
            frame: self.frame,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_asymmetry() {
        let m = [[1.0, 0.2, 0.0], [0.1, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(matches!(PolarizabilityTensor::new(m), Err(Error::Validation(_))));
        let nearly = [[1.0, 0.2, 0.0], [0.2 + 1e-14, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(PolarizabilityTensor::new(nearly).is_ok());
    }

    #[test]
    fn derived_components() {
        let a = PolarizabilityTensor::new([[3.0, 0.5, 0.25], [0.5, 2.0, -0.5], [0.25, -0.5, 1.0]])
            .unwrap();
        assert_eq!(a.perp(), 5.0);
        assert_eq!(a.in_plane_anisotropy(), 1.0);
        assert_eq!(a.zi(), [0.25, -0.5]);
        assert!(!a.is_isotropic());
        assert!(PolarizabilityTensor::isotropic(2.0).is_isotropic());
    }

    #[test]
    fn rotation_preserves_invariants() {
        let a = PolarizabilityTensor::new([[3.0, 0.5, 0.25], [0.5, 2.0, -0.5], [0.25, -0.5, 1.0]])
            .unwrap();
        let r = mat_mul(&rotation_z(0.7), &rotation_y(-1.1));
        let b = a.transformed(&r);
        let tr = |t: &PolarizabilityTensor| t.get(0, 0) + t.get(1, 1) + t.get(2, 2);
        assert!((tr(&a) - tr(&b)).abs() < 1e-14);
        let back = b.in_rotated_axes(0.0).transformed(&[
            [r[0][0], r[1][0], r[2][0]],
            [r[0][1], r[1][1], r[2][1]],
            [r[0][2], r[1][2], r[2][2]],
        ]);
        for i in 0..3 {
            for j in 0..3 {
                assert!((back.get(i, j) - a.get(i, j)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn quarter_turn_swaps_axes() {
        let a = PolarizabilityTensor::diagonal(3.0, 1.0, 2.0).in_rotated_axes(std::f64::consts::FRAC_PI_2);
        assert!((a.get(0, 0) - 1.0).abs() < 1e-15);
        assert!((a.get(1, 1) - 3.0).abs() < 1e-15);
        assert_eq!(a.zz(), 2.0);
    }
}
