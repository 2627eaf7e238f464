//! Local surface data at the particle's foot point.
//!
//! The surface is z = H(x, y) with the particle at the origin and ∇H = 0
//! there. Curvatures are stored as 1/R, so a flat direction is 0 rather than
//! an infinite radius. Positive curvature means the surface bends away from
//! the particle.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tensor::PolarizabilityTensor;

/// Which axes the derivative data refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    General,
    /// In-plane axes along the principal curvature directions: the Hessian
    /// is diagonal, diag(1/R1, 1/R2).
    Principal,
}

/// Finite-difference error estimates attached to grid-derived geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StencilEstimate {
    pub hessian: [[f64; 2]; 2],
    pub grad_lap: [f64; 2],
    /// |∇H| at the foot point from the same stencils.
    pub slope: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalGeometry {
    d: f64,
    hessian: [[f64; 2]; 2],
    grad_lap: [f64; 2],
    frame: Frame,
    principal_angle: f64,
    stencil: Option<StencilEstimate>,
}

fn check_d(d: f64) -> Result<()> {
    if d > 0.0 && d.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            function: "LocalGeometry",
            value: d,
            expected: "separation d > 0",
        })
    }
}

fn check_finite(what: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Validation(format!("{what} has non-finite entries")))
    }
}

impl LocalGeometry {
    /// General-frame data: raw Hessian ∂i∂jH (1/length) and ∂_i∇²H
    /// (1/length²).
    pub fn general(d: f64, hessian: [[f64; 2]; 2], grad_lap: [f64; 2]) -> Result<Self> {
        check_d(d)?;
        check_finite("hessian", &[hessian[0][0], hessian[0][1], hessian[1][0], hessian[1][1]])?;
        check_finite("grad_lap", &grad_lap)?;
        let scale = hessian.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        if (hessian[0][1] - hessian[1][0]).abs() > 1e-12 * scale {
            return Err(Error::Validation("hessian not symmetric".into()));
        }
        let off = 0.5 * (hessian[0][1] + hessian[1][0]);
        Ok(Self {
            d,
            hessian: [[hessian[0][0], off], [off, hessian[1][1]]],
            grad_lap,
            frame: Frame::General,
            principal_angle: 0.0,
            stencil: None,
        })
    }

    /// Principal-frame data from curvatures κ1 = 1/R1, κ2 = 1/R2 and
    /// the gradient ∂_i(1/R1 + 1/R2).
    pub fn principal(d: f64, kappa1: f64, kappa2: f64, grad_lap: [f64; 2]) -> Result<Self> {
        check_d(d)?;
        check_finite("curvature", &[kappa1, kappa2])?;
        check_finite("grad_lap", &grad_lap)?;
        Ok(Self {
            d,
            hessian: [[kappa1, 0.0], [0.0, kappa2]],
            grad_lap,
            frame: Frame::Principal,
            principal_angle: 0.0,
            stencil: None,
        })
    }

    /// Like [`principal`](Self::principal) but from signed radii; infinite
    /// radii are flat directions.
    pub fn from_radii(d: f64, r1: f64, r2: f64, grad_lap: [f64; 2]) -> Result<Self> {
        let inv = |r: f64| -> Result<f64> {
            if r.is_infinite() {
                Ok(0.0)
            } else if r == 0.0 || r.is_nan() {
                Err(Error::Domain {
                    function: "LocalGeometry::from_radii",
                    value: r,
                    expected: "nonzero radius (use infinity for flat)",
                })
            } else {
                Ok(1.0 / r)
            }
        };
        Self::principal(d, inv(r1)?, inv(r2)?, grad_lap)
    }

    pub fn flat(d: f64) -> Result<Self> {
        Self::principal(d, 0.0, 0.0, [0.0, 0.0])
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn hessian(&self) -> [[f64; 2]; 2] {
        self.hessian
    }

    pub fn grad_lap(&self) -> [f64; 2] {
        self.grad_lap
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    /// Angle of the principal x-axis in the original frame (radians); zero
    /// unless produced by [`to_principal_frame`].
    pub fn principal_angle(&self) -> f64 {
        self.principal_angle
    }

    pub fn stencil_estimate(&self) -> Option<&StencilEstimate> {
        self.stencil.as_ref()
    }

    /// d·∂i∂jH.
    pub fn reduced_hessian(&self) -> [[f64; 2]; 2] {
        let h = self.hessian;
        let d = self.d;
        [[d * h[0][0], d * h[0][1]], [d * h[1][0], d * h[1][1]]]
    }

    /// d²·∂_i∇²H.
    pub fn reduced_grad_lap(&self) -> [f64; 2] {
        let d2 = self.d * self.d;
        [d2 * self.grad_lap[0], d2 * self.grad_lap[1]]
    }

    pub fn laplacian(&self) -> f64 {
        self.hessian[0][0] + self.hessian[1][1]
    }

    /// Eigenvalues (κ1, κ2) of the Hessian with κ1 ≥ κ2. In the principal
    /// frame the diagonal is returned as stored.
    pub fn principal_curvatures(&self) -> (f64, f64) {
        match self.frame {
            Frame::Principal => (self.hessian[0][0], self.hessian[1][1]),
            Frame::General => symmetric_eigen(self.hessian).0,
        }
    }

    /// (d/R1, d/R2).
    pub fn d_over_r(&self) -> (f64, f64) {
        let (k1, k2) = self.principal_curvatures();
        (self.d * k1, self.d * k2)
    }

    pub fn with_separation(mut self, d: f64) -> Result<Self> {
        check_d(d)?;
        self.d = d;
        Ok(self)
    }
}

/// Eigenvalues (κ1 ≥ κ2) and the angle θ of the κ1 eigenvector,
/// (cos θ, sin θ). Umbilic points give θ = 0.
fn symmetric_eigen(h: [[f64; 2]; 2]) -> ((f64, f64), f64) {
    let (a, b, c) = (h[0][0], h[0][1], h[1][1]);
    if b == 0.0 {
        return if a >= c {
            ((a, c), 0.0)
        } else {
            ((c, a), std::f64::consts::FRAC_PI_2)
        };
    }
    let mean = 0.5 * (a + c);
    let half_diff = 0.5 * (a - c);
    let radius = half_diff.hypot(b);
    let theta = 0.5 * b.atan2(half_diff);
    ((mean + radius, mean - radius), theta)
}

/// Rotates geometry and polarizability into the principal frame.
///
/// The new x-axis is the direction of the larger curvature, so
/// 1/R1 ≥ 1/R2. Returns the rotation angle of the new x-axis measured in the
/// old frame. Principal-frame input passes through unchanged.
pub fn to_principal_frame(
    geom: &LocalGeometry,
    alpha: &PolarizabilityTensor,
) -> Result<(LocalGeometry, PolarizabilityTensor, f64)> {
    if geom.frame == Frame::Principal {
        return Ok((*geom, *alpha, 0.0));
    }
    if alpha.frame() != Frame::General && !alpha.is_isotropic() {
        return Err(Error::Validation(
            "polarizability is not expressed in the geometry's frame".into(),
        ));
    }
    let ((k1, k2), theta) = symmetric_eigen(geom.hessian);
    let (s, c) = theta.sin_cos();
    let g = geom.grad_lap;
    let grad = [c * g[0] + s * g[1], -s * g[0] + c * g[1]];
    let rotated_alpha = if theta == 0.0 {
        *alpha
    } else if theta == std::f64::consts::FRAC_PI_2 {
        swap_xy(alpha)
    } else {
        alpha.in_rotated_axes(theta)
    };
    let grad = if theta == std::f64::consts::FRAC_PI_2 {
        [g[1], -g[0]]
    } else {
        grad
    };
    let out = LocalGeometry {
        d: geom.d,
        hessian: [[k1, 0.0], [0.0, k2]],
        grad_lap: grad,
        frame: Frame::Principal,
        principal_angle: geom.principal_angle + theta,
        stencil: geom.stencil,
    };
    Ok((out, rotated_alpha.with_frame(Frame::Principal), theta))
}

/// Exact quarter turn: x' = y, y' = −x.
fn swap_xy(alpha: &PolarizabilityTensor) -> PolarizabilityTensor {
    let a = alpha.components();
    let perm = [1usize, 0, 2];
    let sign = [1.0, -1.0, 1.0];
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = sign[i] * sign[j] * a[perm[i]][perm[j]];
        }
    }
    PolarizabilityTensor::new(m)
        .expect("permutation keeps symmetry")
        .with_frame(alpha.frame())
}

/// Height data on a square grid. `values[row][col]` is H at
/// x = (col − foot.1)·spacing, y = (row − foot.0)·spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightGrid {
    pub spacing: f64,
    pub values: Vec<Vec<f64>>,
    pub foot: (usize, usize),
}

impl HeightGrid {
    /// Samples `f(x, y)` on a (2n+1)×(2n+1) grid centred on the foot point.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(spacing: f64, half_width: usize, f: F) -> Self {
        let n = half_width as isize;
        let values = (-n..=n)
            .map(|i| {
                (-n..=n)
                    .map(|j| f(j as f64 * spacing, i as f64 * spacing))
                    .collect()
            })
            .collect();
        Self {
            spacing,
            values,
            foot: (half_width, half_width),
        }
    }

    /// Grid centred on its middle node; rows and columns must be odd.
    pub fn centred(spacing: f64, values: Vec<Vec<f64>>) -> Result<Self> {
        let rows = values.len();
        let cols = values.first().map_or(0, Vec::len);
        if rows % 2 == 0 || cols % 2 == 0 {
            return Err(Error::Stencil(format!(
                "grid {rows}×{cols} has no centre node; use odd dimensions"
            )));
        }
        Ok(Self {
            spacing,
            values,
            foot: (rows / 2, cols / 2),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileKind {
    Plane,
    /// Sphere of radius R touching the foot point from below.
    Sphere { radius: f64 },
    /// Cylinder of radius R whose axis makes `axis_angle` with x.
    Cylinder { radius: f64, axis_angle: f64 },
    /// H = A(1 − cos(2πu/period)), u the coordinate along `angle`.
    Corrugation { amplitude: f64, period: f64, angle: f64 },
    /// Σ c_ij x^i y^j with i + j ≤ 4; the constant term is ignored.
    Polynomial(BTreeMap<(u8, u8), f64>),
    Grid(HeightGrid),
}

/// Surface shape, all lengths in one unit.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceProfile {
    pub kind: ProfileKind,
}

impl SurfaceProfile {
    pub fn new(kind: ProfileKind) -> Self {
        Self { kind }
    }

    pub fn plane() -> Self {
        Self::new(ProfileKind::Plane)
    }

    pub fn sphere(radius: f64) -> Self {
        Self::new(ProfileKind::Sphere { radius })
    }

    pub fn cylinder(radius: f64, axis_angle: f64) -> Self {
        Self::new(ProfileKind::Cylinder { radius, axis_angle })
    }

    pub fn polynomial<I: IntoIterator<Item = ((u8, u8), f64)>>(terms: I) -> Self {
        Self::new(ProfileKind::Polynomial(terms.into_iter().collect()))
    }

    pub fn grid(grid: HeightGrid) -> Self {
        Self::new(ProfileKind::Grid(grid))
    }

    /// H(x, y) relative to the foot point, for the analytic kinds.
    pub fn height(&self, x: f64, y: f64) -> Option<f64> {
        match &self.kind {
            ProfileKind::Plane => Some(0.0),
            ProfileKind::Sphere { radius } => {
                let r2 = x * x + y * y;
                Some(r2 / (radius + (radius * radius - r2).sqrt()))
            }
            ProfileKind::Cylinder { radius, axis_angle } => {
                let u = -x * axis_angle.sin() + y * axis_angle.cos();
                Some(u * u / (radius + (radius * radius - u * u).sqrt()))
            }
            ProfileKind::Corrugation { amplitude, period, angle } => {
                let k = 2.0 * std::f64::consts::PI / period;
                let u = x * angle.cos() + y * angle.sin();
                Some(amplitude * (1.0 - (k * u).cos()))
            }
            ProfileKind::Polynomial(c) => Some(
                c.iter()
                    .filter(|(&(i, j), _)| i + j > 0)
                    .map(|(&(i, j), v)| v * x.powi(i as i32) * y.powi(j as i32))
                    .sum(),
            ),
            ProfileKind::Grid(_) => None,
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Validation(format!("{name} must be positive, got {v}")))
            }
        };
        match &self.kind {
            ProfileKind::Plane => Ok(()),
            ProfileKind::Sphere { radius } => positive("sphere radius", *radius),
            ProfileKind::Cylinder { radius, axis_angle } => {
                positive("cylinder radius", *radius)?;
                check_finite("axis angle", &[*axis_angle])
            }
            ProfileKind::Corrugation { amplitude, period, angle } => {
                positive("corrugation period", *period)?;
                check_finite("corrugation", &[*amplitude, *angle])
            }
            ProfileKind::Polynomial(c) => {
                for (&(i, j), v) in c {
                    if i + j > 4 {
                        return Err(Error::Validation(format!(
                            "polynomial term x^{i} y^{j} exceeds total degree 4"
                        )));
                    }
                    check_finite("polynomial coefficient", &[*v])?;
                    if i + j == 1 && *v != 0.0 {
                        return Err(Error::Validation(
                            "polynomial has a linear term; the foot point needs ∇H = 0".into(),
                        ));
                    }
                }
                Ok(())
            }
            ProfileKind::Grid(g) => positive("grid spacing", g.spacing),
        }
    }
}

/// Derivative data at the foot point (exact for analytic kinds, finite
/// differences for grids). The result is in the general frame.
pub fn local_geometry_from_profile(profile: &SurfaceProfile, d: f64) -> Result<LocalGeometry> {
    profile.validate()?;
    let (hessian, grad_lap, stencil) = match &profile.kind {
        ProfileKind::Plane => ([[0.0; 2]; 2], [0.0; 2], None),
        ProfileKind::Sphere { radius } => {
            let k = 1.0 / radius;
            ([[k, 0.0], [0.0, k]], [0.0; 2], None)
        }
        ProfileKind::Cylinder { radius, axis_angle } => {
            let (s, c) = axis_angle.sin_cos();
            let n = [-s, c];
            let k = 1.0 / radius;
            (
                [[k * n[0] * n[0], k * n[0] * n[1]], [k * n[1] * n[0], k * n[1] * n[1]]],
                [0.0; 2],
                None,
            )
        }
        ProfileKind::Corrugation { amplitude, period, angle } => {
            let k = 2.0 * std::f64::consts::PI / period;
            let (s, c) = angle.sin_cos();
            let a = amplitude * k * k;
            ([[a * c * c, a * c * s], [a * s * c, a * s * s]], [0.0; 2], None)
        }
        ProfileKind::Polynomial(coeffs) => {
            let c = |i: u8, j: u8| coeffs.get(&(i, j)).copied().unwrap_or(0.0);
            (
                [[2.0 * c(2, 0), c(1, 1)], [c(1, 1), 2.0 * c(0, 2)]],
                [6.0 * c(3, 0) + 2.0 * c(1, 2), 2.0 * c(2, 1) + 6.0 * c(0, 3)],
                None,
            )
        }
        ProfileKind::Grid(grid) => {
            let (h, g, est) = grid_derivatives(grid)?;
            (h, g, Some(est))
        }
    };
    let mut geom = LocalGeometry::general(d, hessian, grad_lap)?;
    geom.stencil = stencil;
    Ok(geom)
}

const GRID_REACH: usize = 3;
const MAX_FOOT_SLOPE: f64 = 1e-3;

// Symmetric stencil weights over offsets −3..=3.
const D1_O4: [f64; 7] = [0.0, 1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0, 0.0];
const D1_O6: [f64; 7] = [
    -1.0 / 60.0,
    9.0 / 60.0,
    -45.0 / 60.0,
    0.0,
    45.0 / 60.0,
    -9.0 / 60.0,
    1.0 / 60.0,
];
const D1_O2: [f64; 7] = [0.0, 0.0, -0.5, 0.0, 0.5, 0.0, 0.0];
const D2_O2: [f64; 7] = [0.0, 0.0, 1.0, -2.0, 1.0, 0.0, 0.0];
const D2_O4: [f64; 7] = [
    0.0,
    -1.0 / 12.0,
    16.0 / 12.0,
    -30.0 / 12.0,
    16.0 / 12.0,
    -1.0 / 12.0,
    0.0,
];
const D2_O6: [f64; 7] = [
    2.0 / 180.0,
    -27.0 / 180.0,
    270.0 / 180.0,
    -490.0 / 180.0,
    270.0 / 180.0,
    -27.0 / 180.0,
    2.0 / 180.0,
];
const D0: [f64; 7] = [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
const D3_O2: [f64; 7] = [0.0, -0.5, 1.0, 0.0, -1.0, 0.5, 0.0];
const D3_O4: [f64; 7] = [
    1.0 / 8.0,
    -1.0,
    13.0 / 8.0,
    0.0,
    -13.0 / 8.0,
    1.0,
    -1.0 / 8.0,
];

type Deriv = ([[f64; 2]; 2], [f64; 2], StencilEstimate);

/// ∂i∂jH at fourth order and ∂_i∇²H at second order; error estimates are
/// differences against the next-higher-order stencils.
fn grid_derivatives(grid: &HeightGrid) -> Result<Deriv> {
    let rows = grid.values.len();
    let cols = grid.values.first().map_or(0, Vec::len);
    if grid.values.iter().any(|r| r.len() != cols) {
        return Err(Error::Validation("height grid rows have unequal length".into()));
    }
    if grid.values.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Validation("height grid contains non-finite values".into()));
    }
    let (fi, fj) = grid.foot;
    if fi < GRID_REACH || fj < GRID_REACH || fi + GRID_REACH >= rows || fj + GRID_REACH >= cols {
        return Err(Error::Stencil(format!(
            "foot node ({fi},{fj}) of a {rows}×{cols} grid needs {GRID_REACH} neighbours on every side"
        )));
    }
    let h = grid.spacing;
    // wy acts along rows (y), wx along columns (x)
    let apply = |wx: &[f64; 7], wy: &[f64; 7]| -> f64 {
        let mut s = 0.0;
        for (a, cy) in wy.iter().enumerate() {
            if *cy == 0.0 {
                continue;
            }
            let row = &grid.values[fi + a - GRID_REACH];
            for (b, cx) in wx.iter().enumerate() {
                if *cx != 0.0 {
                    s += cy * cx * row[fj + b - GRID_REACH];
                }
            }
        }
        s
    };
    let h2 = h * h;
    let h3 = h2 * h;

    let hxx = apply(&D2_O4, &D0) / h2;
    let hyy = apply(&D0, &D2_O4) / h2;
    let hxy = apply(&D1_O4, &D1_O4) / h2;
    let hessian = [[hxx, hxy], [hxy, hyy]];
    let hessian_hi = [
        [apply(&D2_O6, &D0) / h2, apply(&D1_O6, &D1_O6) / h2],
        [apply(&D1_O6, &D1_O6) / h2, apply(&D0, &D2_O6) / h2],
    ];

    let gx = (apply(&D3_O2, &D0) + apply(&D1_O2, &D2_O2)) / h3;
    let gy = (apply(&D0, &D3_O2) + apply(&D2_O2, &D1_O2)) / h3;
    let gx_hi = (apply(&D3_O4, &D0) + apply(&D1_O4, &D2_O4)) / h3;
    let gy_hi = (apply(&D0, &D3_O4) + apply(&D2_O4, &D1_O4)) / h3;

    let slope = (apply(&D1_O4, &D0) / h).hypot(apply(&D0, &D1_O4) / h);
    if slope > MAX_FOOT_SLOPE {
        return Err(Error::Validation(format!(
            "surface slope {slope:e} at the foot node; it is not a closest point"
        )));
    }
    let mut herr = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            herr[i][j] = (hessian[i][j] - hessian_hi[i][j]).abs();
        }
    }
    let est = StencilEstimate {
        hessian: herr,
        grad_lap: [(gx - gx_hi).abs(), (gy - gy_hi).abs()],
        slope,
    };
    Ok((hessian, [gx, gy], est))
}
