//! Closed-form shallow water and shallow water moment systems.
//!
//! Conserved variables are `(h, h u_m, h alpha_1, ..., h alpha_N)` stored in a
//! fixed `[f64; 4]`; entries beyond [`ModelId::n_vars`] are always zero.
//! Every model is written as
//!
//! ```text
//! d_t U + d_x F(U) = B(U) d_x U + S(U, x),   S = -g h b'(x) e_m - (nu / lambda) P(U)
//! ```
//!
//! with system matrix `A = dF/dU - B`.

use std::fmt;

use nalgebra::{DMatrix, Matrix4};

use crate::error::{Error, Result};

pub const MAX_VARS: usize = 4;
pub const MAX_MOMENTS: usize = 2;

pub type Vars = [f64; MAX_VARS];
pub type Mat = [[f64; MAX_VARS]; MAX_VARS];

pub const ZERO_VARS: Vars = [0.0; MAX_VARS];
pub const ZERO_MAT: Mat = [[0.0; MAX_VARS]; MAX_VARS];

/// Physical constants of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub g: f64,
    /// Kinematic viscosity.
    pub nu: f64,
    /// Slip length.
    pub lambda_slip: f64,
    pub friction_enabled: bool,
}

impl PhysicalParams {
    pub fn frictionless(g: f64) -> Self {
        Self { g, nu: 0.0, lambda_slip: 1.0, friction_enabled: false }
    }

    pub fn with_friction(g: f64, nu: f64, lambda_slip: f64) -> Self {
        Self { g, nu, lambda_slip, friction_enabled: true }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g > 0.0) {
            return Err(Error::InvalidInput(format!("gravity must be positive, got {}", self.g)));
        }
        if self.friction_enabled && (self.nu < 0.0 || !(self.lambda_slip > 0.0)) {
            return Err(Error::InvalidInput(format!(
                "friction needs nu >= 0 and lambda > 0 (nu = {}, lambda = {})",
                self.nu, self.lambda_slip
            )));
        }
        Ok(())
    }

    /// Prefactor `nu / lambda` of the friction vector, zero when disabled.
    pub fn friction_factor(&self) -> f64 {
        if self.friction_enabled {
            self.nu / self.lambda_slip
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelId {
    Swe,
    Swme1,
    Swme2,
    Hswme2,
    Swlme2,
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "swe" => Ok(ModelId::Swe),
            "swme1" => Ok(ModelId::Swme1),
            "swme2" => Ok(ModelId::Swme2),
            "hswme2" => Ok(ModelId::Hswme2),
            "swlme2" => Ok(ModelId::Swlme2),
            other => Err(Error::Config(format!("unknown model '{other}'"))),
        }
    }
}

/// Height, mean velocity and velocity moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimitiveState {
    pub h: f64,
    pub u: f64,
    pub alpha: [f64; MAX_MOMENTS],
}

impl PrimitiveState {
    pub fn new(h: f64, u: f64, alpha: &[f64]) -> Self {
        let mut a = [0.0; MAX_MOMENTS];
        a[..alpha.len()].copy_from_slice(alpha);
        Self { h, u, alpha: a }
    }

    /// Component-wise arithmetic mean of two states.
    pub fn mean(&self, other: &Self) -> Self {
        Self {
            h: 0.5 * (self.h + other.h),
            u: 0.5 * (self.u + other.u),
            alpha: [0.5 * (self.alpha[0] + other.alpha[0]), 0.5 * (self.alpha[1] + other.alpha[1])],
        }
    }
}

/// Vertical velocity `u(zeta) = u_m + sum_k alpha_k phi_k(zeta)` with the
/// scaled Legendre basis `phi_1 = 1 - 2 zeta`, `phi_2 = 6 zeta^2 - 6 zeta + 1`.
pub fn velocity_profile(w: &PrimitiveState, zeta: f64) -> f64 {
    let phi1 = 1.0 - 2.0 * zeta;
    let phi2 = 6.0 * zeta * zeta - 6.0 * zeta + 1.0;
    w.u + w.alpha[0] * phi1 + w.alpha[1] * phi2
}

impl ModelId {
    pub const ALL: [ModelId; 5] = [ModelId::Swe, ModelId::Swme1, ModelId::Swme2, ModelId::Hswme2, ModelId::Swlme2];

    pub fn name(self) -> &'static str {
        match self {
            ModelId::Swe => "SWE",
            ModelId::Swme1 => "SWME1",
            ModelId::Swme2 => "SWME2",
            ModelId::Hswme2 => "HSWME2",
            ModelId::Swlme2 => "SWLME2",
        }
    }

    pub fn n_moments(self) -> usize {
        match self {
            ModelId::Swe => 0,
            ModelId::Swme1 => 1,
            _ => 2,
        }
    }

    pub fn n_vars(self) -> usize {
        self.n_moments() + 2
    }

    /// True when the eigenstructure is available in closed form.
    pub fn has_left_eigensystem(self) -> bool {
        matches!(self, ModelId::Swe | ModelId::Swme1)
    }

    pub fn to_primitive(self, u: &Vars) -> Result<PrimitiveState> {
        let h = u[0];
        if !(h > 0.0) {
            return Err(Error::NonPositiveHeight { cell: 0, h });
        }
        let mut alpha = [0.0; MAX_MOMENTS];
        for (k, a) in alpha.iter_mut().enumerate().take(self.n_moments()) {
            *a = u[2 + k] / h;
        }
        Ok(PrimitiveState { h, u: u[1] / h, alpha })
    }

    pub fn to_conserved(self, w: &PrimitiveState) -> Vars {
        let mut u = ZERO_VARS;
        u[0] = w.h;
        u[1] = w.h * w.u;
        for k in 0..self.n_moments() {
            u[2 + k] = w.h * w.alpha[k];
        }
        u
    }

    /// Conservative flux `F(U)`.
    pub fn flux(self, w: &PrimitiveState, g: f64) -> Vars {
        let PrimitiveState { h, u, alpha } = *w;
        let [a1, a2] = alpha;
        let hydro = h * u * u + 0.5 * g * h * h;
        let mut f = ZERO_VARS;
        f[0] = h * u;
        match self {
            ModelId::Swe => {
                f[1] = hydro;
            }
            ModelId::Swme1 => {
                f[1] = hydro + h * a1 * a1 / 3.0;
                f[2] = 2.0 * h * u * a1;
            }
            ModelId::Swme2 => {
                f[1] = hydro + h * a1 * a1 / 3.0 + h * a2 * a2 / 5.0;
                f[2] = 2.0 * h * u * a1 + 0.8 * h * a1 * a2;
                f[3] = 2.0 * h * u * a2 + 2.0 / 3.0 * h * a1 * a1 + 2.0 / 7.0 * h * a2 * a2;
            }
            ModelId::Hswme2 => {
                f[1] = hydro + h * a1 * a1 / 3.0;
                f[2] = 2.0 * h * u * a1;
                f[3] = 2.0 / 3.0 * h * a1 * a1;
            }
            ModelId::Swlme2 => {
                f[1] = hydro + h * a1 * a1 / 3.0 + h * a2 * a2 / 5.0;
                f[2] = 2.0 * h * u * a1;
                f[3] = 2.0 * h * u * a2;
            }
        }
        f
    }

    /// Matrix `B(U)` of the non-conservative products; only the moment block
    /// is populated.
    pub fn noncons_matrix(self, w: &PrimitiveState) -> Mat {
        let PrimitiveState { u, alpha, .. } = *w;
        let [a1, a2] = alpha;
        let mut b = ZERO_MAT;
        match self {
            ModelId::Swe => {}
            ModelId::Swme1 => b[2][2] = u,
            ModelId::Swme2 => {
                b[2][2] = u - a2 / 5.0;
                b[2][3] = a1 / 5.0;
                b[3][2] = a1;
                b[3][3] = u + a2 / 7.0;
            }
            ModelId::Hswme2 => {
                b[2][2] = u;
                b[2][3] = -0.6 * a1;
                b[3][2] = a1;
                b[3][3] = -u;
            }
            ModelId::Swlme2 => {
                b[2][2] = u;
                b[3][3] = u;
            }
        }
        b
    }

    /// Friction vector `P(U)` (without the `nu / lambda` prefactor).
    pub fn friction_vector(self, w: &PrimitiveState, p: &PhysicalParams) -> Vars {
        let PrimitiveState { h, u, alpha } = *w;
        let [a1, a2] = alpha;
        let lam = p.lambda_slip;
        let mut out = ZERO_VARS;
        match self.n_moments() {
            0 => out[1] = u,
            1 => {
                out[1] = u + a1;
                out[2] = 3.0 * (u + a1 + 4.0 * lam / h * a1);
            }
            _ => {
                let s = u + a1 + a2;
                out[1] = s;
                out[2] = 3.0 * (s + 4.0 * lam / h * a1);
                out[3] = 5.0 * (s + 12.0 * lam / h * a2);
            }
        }
        out
    }

    /// Source `S = -g h b' e_m - (nu / lambda) P`.
    pub fn source(self, w: &PrimitiveState, db_dx: f64, p: &PhysicalParams) -> Vars {
        let fr = p.friction_factor();
        let mut s = ZERO_VARS;
        if fr != 0.0 {
            let pv = self.friction_vector(w, p);
            for k in 0..self.n_vars() {
                s[k] = -fr * pv[k];
            }
        }
        s[1] -= p.g * w.h * db_dx;
        s
    }

    /// Closed-form system matrix `A = dF/dU - B`.
    pub fn system_matrix(self, w: &PrimitiveState, g: f64) -> Mat {
        let PrimitiveState { h, u, alpha } = *w;
        let [a1, a2] = alpha;
        let mut a = ZERO_MAT;
        a[0][1] = 1.0;
        a[1][1] = 2.0 * u;
        match self {
            ModelId::Swe => {
                a[1][0] = g * h - u * u;
            }
            ModelId::Swme1 => {
                a[1][0] = -u * u + g * h - a1 * a1 / 3.0;
                a[1][2] = 2.0 * a1 / 3.0;
                a[2] = [-2.0 * u * a1, 2.0 * a1, u, 0.0];
            }
            ModelId::Swme2 => {
                a[1][0] = -u * u + g * h - a1 * a1 / 3.0 - a2 * a2 / 5.0;
                a[1][2] = 2.0 * a1 / 3.0;
                a[1][3] = 0.4 * a2;
                a[2] = [-2.0 * u * a1 - 0.8 * a1 * a2, 2.0 * a1, u + a2, 0.6 * a1];
                a[3] = [
                    -2.0 * u * a2 - 2.0 / 3.0 * a1 * a1 - 2.0 / 7.0 * a2 * a2,
                    2.0 * a2,
                    a1 / 3.0,
                    u + 3.0 * a2 / 7.0,
                ];
            }
            ModelId::Hswme2 => {
                a[1][0] = -u * u + g * h - a1 * a1 / 3.0;
                a[1][2] = 2.0 * a1 / 3.0;
                a[2] = [-2.0 * u * a1, 2.0 * a1, u, 0.6 * a1];
                a[3] = [-2.0 / 3.0 * a1 * a1, 0.0, a1 / 3.0, u];
            }
            ModelId::Swlme2 => {
                a[1][0] = -u * u + g * h - a1 * a1 / 3.0 - a2 * a2 / 5.0;
                a[1][2] = 2.0 * a1 / 3.0;
                a[1][3] = 0.4 * a2;
                a[2] = [-2.0 * u * a1, 2.0 * a1, u, 0.0];
                a[3] = [-2.0 * u * a2, 2.0 * a2, 0.0, u];
            }
        }
        a
    }

    /// Eigenvalues of the system matrix in descending order (first
    /// `n_vars` entries are meaningful).
    pub fn eigenvalues(self, w: &PrimitiveState, g: f64) -> Result<Vars> {
        if !(w.h > 0.0) {
            return Err(Error::NonPositiveHeight { cell: 0, h: w.h });
        }
        let PrimitiveState { h, u, alpha } = *w;
        let [a1, a2] = alpha;
        let mut ev = ZERO_VARS;
        match self {
            ModelId::Swe => {
                let c = (g * h).sqrt();
                ev[0] = u + c;
                ev[1] = u - c;
            }
            ModelId::Swme1 => {
                let c = (g * h + a1 * a1).sqrt();
                ev[0] = u + c;
                ev[1] = u;
                ev[2] = u - c;
            }
            ModelId::Hswme2 => {
                let c = (g * h + a1 * a1).sqrt();
                let s = (a1 * a1 / 5.0).sqrt();
                ev = [u + c, u + s, u - s, u - c];
            }
            ModelId::Swlme2 => {
                let c = (g * h + a1 * a1 + 0.6 * a2 * a2).sqrt();
                ev = [u + c, u, u, u - c];
            }
            ModelId::Swme2 => {
                let vals = numeric_real_eigenvalues(&self.system_matrix(w, g), 4)
                    .ok_or(Error::Hyperbolicity { state: *w })?;
                ev.copy_from_slice(&vals[..4]);
            }
        }
        Ok(ev)
    }

    /// Largest absolute eigenvalue.
    pub fn spectral_radius(self, w: &PrimitiveState, g: f64) -> Result<f64> {
        let ev = self.eigenvalues(w, g)?;
        let m = self.n_vars();
        Ok(ev[0].abs().max(ev[m - 1].abs()))
    }

    /// Left eigenvectors `L`, their inverse `R = L^{-1}` and the eigenvalues,
    /// ordered as [`ModelId::eigenvalues`], so that `L A R = diag(lambda)`.
    pub fn left_eigensystem(self, w: &PrimitiveState, g: f64) -> Result<Eigensystem> {
        let ev = self.eigenvalues(w, g)?;
        let PrimitiveState { h, u, alpha } = *w;
        let mut r = ZERO_MAT;
        match self {
            ModelId::Swe => {
                // columns (1, lambda)
                r[0][0] = 1.0;
                r[1][0] = ev[0];
                r[0][1] = 1.0;
                r[1][1] = ev[1];
            }
            ModelId::Swme1 => {
                let a1 = alpha[0];
                for (col, lam) in [(0, ev[0]), (2, ev[2])] {
                    r[0][col] = 1.0;
                    r[1][col] = lam;
                    r[2][col] = 2.0 * a1;
                }
                // contact wave with speed u_m
                r[0][1] = 2.0 * a1;
                r[1][1] = 2.0 * a1 * u;
                r[2][1] = a1 * a1 - 3.0 * g * h;
            }
            _ => return Err(Error::Unsupported { model: self, what: "a closed-form eigensystem" }),
        }
        let n = self.n_vars();
        let l = invert(&r, n).ok_or(Error::DegenerateState)?;
        Ok(Eigensystem { left: l, right: r, values: ev, n })
    }
}

/// Eigen-decomposition `A = R diag(values) L`.
#[derive(Debug, Clone, Copy)]
pub struct Eigensystem {
    pub left: Mat,
    pub right: Mat,
    pub values: Vars,
    pub n: usize,
}

/// Real eigenvalues (descending) of the leading `n x n` block, or `None`
/// if any eigenvalue has a non-negligible imaginary part.
pub fn numeric_real_eigenvalues(a: &Mat, n: usize) -> Option<Vars> {
    let vals: Vec<(f64, f64)> = if n == MAX_VARS {
        Matrix4::from_fn(|i, j| a[i][j]).complex_eigenvalues().iter().map(|c| (c.re, c.im)).collect()
    } else {
        DMatrix::from_fn(n, n, |i, j| a[i][j]).complex_eigenvalues().iter().map(|c| (c.re, c.im)).collect()
    };
    let scale = (0..n).flat_map(|i| (0..n).map(move |j| a[i][j].abs())).fold(1.0f64, f64::max);
    let mut out = ZERO_VARS;
    for (k, &(re, im)) in vals.iter().enumerate() {
        if im.abs() > 1e-9 * scale {
            return None;
        }
        out[k] = re;
    }
    out[..n].sort_by(|x, y| y.total_cmp(x));
    Some(out)
}

/// Gauss–Jordan inverse of the leading `n x n` block.
pub fn invert(a: &Mat, n: usize) -> Option<Mat> {
    let mut m = *a;
    let mut inv = ZERO_MAT;
    for (i, row) in inv.iter_mut().enumerate().take(n) {
        row[i] = 1.0;
    }
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        inv.swap(col, piv);
        let d = 1.0 / m[col][col];
        for k in 0..n {
            m[col][k] *= d;
            inv[col][k] *= d;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = m[row][col];
            if f == 0.0 {
                continue;
            }
            for k in 0..n {
                m[row][k] -= f * m[col][k];
                inv[row][k] -= f * inv[col][k];
            }
        }
    }
    Some(inv)
}

#[inline]
pub fn mat_vec(a: &Mat, x: &Vars, n: usize) -> Vars {
    let mut y = ZERO_VARS;
    for i in 0..n {
        let mut s = 0.0;
        for j in 0..n {
            s += a[i][j] * x[j];
        }
        y[i] = s;
    }
    y
}

pub fn mat_mul(a: &Mat, b: &Mat, n: usize) -> Mat {
    let mut c = ZERO_MAT;
    for i in 0..n {
        for j in 0..n {
            c[i][j] = (0..n).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}
