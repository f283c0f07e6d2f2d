//! Analytic equilibria: the lake at rest and the moving equilibria of SWME1
//! (which include the SWE ones for a vanishing moment).
//!
//! A moving SWME1 equilibrium keeps `hu_m = C0`, `alpha_1 / h = C1` and the
//! head `u_m^2 / (2g) + h + b + alpha_1^2 / (2g) = E` constant, so the height
//! solves the quartic
//!
//! ```text
//! (C1^2 / 2g) h^4 + h^3 + (b - E) h^2 + C0^2 / 2g = 0.
//! ```

use crate::bathymetry::Bathymetry;
use crate::error::{Error, Result};
use crate::mesh_state::{Mesh, StateField};
use crate::models::{ModelId, PrimitiveState, ZERO_VARS};
use crate::quadrature::QuadratureTable;

/// Lake at rest `h = eta0 - b`, zero momenta, averaged with `table`'s rule
/// on every storage row.
pub fn lake_at_rest(mesh: &Mesh, bathy: &Bathymetry, eta0: f64, model: ModelId, table: &QuadratureTable) -> Result<StateField> {
    let mut s = StateField::zeros(mesh, model.n_vars());
    for (j, row) in s.rows_mut().iter_mut().enumerate() {
        let c = mesh.center(j);
        for x in table.physical_nodes(c) {
            let b = bathy.eval(x);
            if !(eta0 > b) {
                return Err(Error::InvalidInput(format!("free surface {eta0} is not above the bottom {b} at x = {x}")));
            }
        }
        *row = ZERO_VARS;
        row[0] = table.average(c, |x| eta0 - bathy.eval(x));
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Supercritical,
    Subcritical,
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "supercritical" => Ok(Regime::Supercritical),
            "subcritical" => Ok(Regime::Subcritical),
            other => Err(Error::Config(format!("unknown regime '{other}'"))),
        }
    }
}

/// Constants of a SWME1 moving equilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumConstants {
    /// Discharge `h u_m`.
    pub c0: f64,
    /// `alpha_1 / h`.
    pub c1: f64,
    /// Head in length units.
    pub e: f64,
}

impl EquilibriumConstants {
    /// Constants anchored at a station with height `h`, bottom `b`,
    /// discharge `hu` and first moment `h alpha_1`.
    pub fn anchored(h: f64, b: f64, hu: f64, h_alpha1: f64, g: f64) -> Result<Self> {
        if !(h > 0.0) || !(g > 0.0) {
            return Err(Error::InvalidInput(format!("anchor needs h > 0 and g > 0 (h = {h}, g = {g})")));
        }
        let c0 = hu;
        let a1 = h_alpha1 / h;
        let c1 = a1 / h;
        let e = c0 * c0 / (2.0 * g * h * h) + h + b + c1 * c1 * h * h / (2.0 * g);
        Ok(Self { c0, c1, e })
    }

    pub fn quartic(&self, h: f64, b: f64, g: f64) -> f64 {
        let a4 = self.c1 * self.c1 / (2.0 * g);
        let a0 = self.c0 * self.c0 / (2.0 * g);
        (((a4 * h + 1.0) * h + (b - self.e)) * h) * h + a0
    }

    pub fn quartic_derivative(&self, h: f64, b: f64, g: f64) -> f64 {
        let a4 = self.c1 * self.c1 / (2.0 * g);
        ((4.0 * a4 * h + 3.0) * h + 2.0 * (b - self.e)) * h
    }

    pub fn state_at(&self, h: f64) -> PrimitiveState {
        PrimitiveState::new(h, self.c0 / h, &[self.c1 * h])
    }
}

const SCAN_LO: f64 = 1e-6;
const SCAN_INTERVALS: usize = 4000;

/// All positive roots of the quartic in `(1e-6, h_max)`, ascending.
pub fn quartic_roots(b: f64, consts: &EquilibriumConstants, g: f64, h_max: f64) -> Vec<f64> {
    let f = |h: f64| consts.quartic(h, b, g);
    let mut roots = Vec::new();
    let ratio = (h_max / SCAN_LO).powf(1.0 / SCAN_INTERVALS as f64);
    let mut a = SCAN_LO;
    let mut fa = f(a);
    for _ in 0..SCAN_INTERVALS {
        let bb = a * ratio;
        let fb = f(bb);
        if fa == 0.0 {
            roots.push(a);
        } else if fa * fb < 0.0 {
            roots.push(refine(consts, b, g, a, bb));
        }
        a = bb;
        fa = fb;
    }
    roots
}

/// Safeguarded Newton iteration on a sign-change bracket.
fn refine(consts: &EquilibriumConstants, b: f64, g: f64, mut lo: f64, mut hi: f64) -> f64 {
    let f = |h: f64| consts.quartic(h, b, g);
    let flo = f(lo);
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = f(x);
        if fx == 0.0 {
            return x;
        }
        if (fx < 0.0) == (flo < 0.0) {
            lo = x;
        } else {
            hi = x;
        }
        let d = consts.quartic_derivative(x, b, g);
        let newton = x - fx / d;
        let next = if d != 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - x).abs() <= 1e-16 * x.abs() || hi - lo <= 4.0 * f64::EPSILON * x.abs() {
            return next;
        }
        x = next;
    }
    x
}

/// Root of the quartic nearest `guess`.
pub fn swme1_exact_height(b: f64, consts: &EquilibriumConstants, g: f64, guess: f64) -> Result<f64> {
    let roots = quartic_roots(b, consts, g, 4.0 * guess.max(SCAN_LO));
    nearest(&roots, guess).ok_or_else(|| Error::Root { x: f64::NAN, reason: format!("no positive root near {guess} for b = {b}") })
}

fn nearest(roots: &[f64], guess: f64) -> Option<f64> {
    roots.iter().copied().min_by(|a, b| (a - guess).abs().total_cmp(&(b - guess).abs()))
}

/// Exact SWME1 equilibrium at the given points, continued node by node from
/// the first one where the branch is picked by `regime`.
pub fn swme1_exact_at(
    xs: &[f64],
    bathy: &Bathymetry,
    consts: &EquilibriumConstants,
    g: f64,
    regime: Regime,
    h_scale: f64,
) -> Result<Vec<PrimitiveState>> {
    let mut out = Vec::with_capacity(xs.len());
    let mut prev: Option<f64> = None;
    for &x in xs {
        let b = bathy.eval(x);
        let h = match prev {
            None => {
                let roots = quartic_roots(b, consts, g, 4.0 * h_scale);
                let pick = match regime {
                    Regime::Supercritical => roots.first(),
                    Regime::Subcritical => roots.last(),
                };
                *pick.ok_or_else(|| Error::Root { x, reason: "no positive root".into() })?
            }
            Some(p) => {
                let roots = quartic_roots(b, consts, g, 4.0 * h_scale.max(p));
                nearest(&roots, p).ok_or_else(|| Error::Root { x, reason: "branch lost".into() })?
            }
        };
        let res = consts.quartic(h, b, g);
        if res.abs() > 1e-12 {
            return Err(Error::Root { x, reason: format!("residual {res:e}") });
        }
        prev = Some(h);
        out.push(consts.state_at(h));
    }
    Ok(out)
}

/// Cell averages (with `table`'s rule) of the exact SWME1 equilibrium on
/// every storage row. `h_scale` bounds the root search to `4 h_scale`.
pub fn swme1_exact_profile(
    mesh: &Mesh,
    bathy: &Bathymetry,
    consts: &EquilibriumConstants,
    g: f64,
    regime: Regime,
    h_scale: f64,
    table: &QuadratureTable,
) -> Result<StateField> {
    let xs: Vec<f64> = (0..mesh.n_total()).flat_map(|j| table.physical_nodes(mesh.center(j)).collect::<Vec<_>>()).collect();
    let states = swme1_exact_at(&xs, bathy, consts, g, regime, h_scale)?;
    let nq = table.n_nodes();
    let mut s = StateField::zeros(mesh, 3);
    for (j, row) in s.rows_mut().iter_mut().enumerate() {
        let mut avg = ZERO_VARS;
        for q in 0..nq {
            let u = ModelId::Swme1.to_conserved(&states[j * nq + q]);
            for k in 0..3 {
                avg[k] += table.weights()[q] * u[k];
            }
        }
        *row = avg;
    }
    Ok(s)
}

/// Invariants of a moving equilibrium at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Invariants {
    pub discharge: f64,
    /// `u_m^2 / 2 + g (h + b) + alpha_1^2 / 2 (+ 3/10 alpha_2^2)`.
    pub head: f64,
    /// `alpha_k / h`.
    pub ratios: [f64; 2],
}

/// Evaluates the equilibrium invariants on the interior of `state`, read as
/// point values at the cell centres.
pub fn equilibrium_invariants(state: &StateField, mesh: &Mesh, model: ModelId, bathy: &Bathymetry, g: f64) -> Result<Vec<Invariants>> {
    if !matches!(model, ModelId::Swe | ModelId::Swme1 | ModelId::Swlme2) {
        return Err(Error::Unsupported { model, what: "closed-form equilibrium invariants" });
    }
    state
        .interior()
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let w = model.to_primitive(row).map_err(|e| e.at_cell(i))?;
            let b = bathy.eval(mesh.center(i + mesh.n_ghost));
            let [a1, a2] = w.alpha;
            let head = 0.5 * w.u * w.u + g * (w.h + b) + 0.5 * a1 * a1 + 0.3 * a2 * a2;
            Ok(Invariants { discharge: w.h * w.u, head, ratios: [a1 / w.h, a2 / w.h] })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::Order;
    use proptest::prelude::*;

    const G: f64 = 9.812;

    fn super_consts() -> EquilibriumConstants {
        EquilibriumConstants::anchored(2.0, 0.0, 24.0, -0.5, G).unwrap()
    }

    /// Pure bisection on a scan bracket, written independently.
    fn bisect_root(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Vec<f64> {
        let mut out = Vec::new();
        let step = (hi - lo) / n as f64;
        for k in 0..n {
            let (mut a, mut b) = (lo + k as f64 * step, lo + (k + 1) as f64 * step);
            if f(a) * f(b) < 0.0 {
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if f(a) * f(m) <= 0.0 {
                        b = m;
                    } else {
                        a = m;
                    }
                }
                out.push(0.5 * (a + b));
            }
        }
        out
    }

    /// Real roots of `h^3 + (b - E) h^2 + k = 0` by the trigonometric method.
    fn cubic_roots(p2: f64, p0: f64) -> Vec<f64> {
        // x^3 + a x^2 + c with a = p2, c = p0; depressed via x = t - a/3
        let a = p2;
        let p = -a * a / 3.0;
        let q = 2.0 * a * a * a / 27.0 + p0;
        let mut roots = Vec::new();
        let disc = -(4.0 * p * p * p + 27.0 * q * q);
        if disc > 0.0 {
            let m = 2.0 * (-p / 3.0).sqrt();
            let theta = (3.0 * q / (p * m)).acos() / 3.0;
            for k in 0..3 {
                roots.push(m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() - a / 3.0);
            }
        }
        roots.sort_by(f64::total_cmp);
        roots
    }

    #[test]
    fn anchor_is_a_root() {
        let c = super_consts();
        assert!(c.quartic(2.0, 0.0, G).abs() < 1e-12);
        let h = swme1_exact_height(0.0, &c, G, 2.0).unwrap();
        assert!((h - 2.0).abs() < 1e-13);
    }

    #[test]
    fn crest_root_matches_bisection() {
        let c = super_consts();
        let b = Bathymetry::Bump.eval(13.0);
        let h = swme1_exact_height(b, &c, G, 2.0).unwrap();
        let oracle = bisect_root(|h| c.quartic(h, b, G), 1e-6, 10.0, 10_000);
        // the supercritical branch is the smallest positive root
        let smallest = oracle[0];
        assert!((h - smallest).abs() < 1e-10, "{h} vs {oracle:?}");
        assert!(c.quartic(h, b, G).abs() <= 1e-12);
    }

    #[test]
    fn swe_limit_matches_cubic() {
        let b = 0.03;
        for c1 in [0.0, 1e-6] {
            let c = EquilibriumConstants { c0: 4.42, c1, e: 2.0 + 4.42f64.powi(2) / (2.0 * G * 4.0) };
            let cubic = cubic_roots(b - c.e, c.c0 * c.c0 / (2.0 * G));
            let positive: Vec<f64> = cubic.into_iter().filter(|r| *r > 0.0).collect();
            for r in positive {
                let h = swme1_exact_height(b, &c, G, r).unwrap();
                assert!((h - r).abs() <= 1e-8, "c1={c1}: {h} vs {r}");
            }
        }
    }

    #[test]
    fn flat_bottom_profile_is_constant() {
        let mesh = Mesh::new(0.0, 25.0, 20).unwrap();
        let table = QuadratureTable::new(Order::Five, mesh.dx).unwrap();
        let c = super_consts();
        let s = swme1_exact_profile(&mesh, &Bathymetry::Flat(0.0), &c, G, Regime::Supercritical, 2.0, &table).unwrap();
        for row in s.rows() {
            assert!((row[0] - 2.0).abs() < 1e-13);
            assert!((row[1] - 24.0).abs() < 1e-12);
            assert!((row[2] + 0.5).abs() < 1e-13);
        }
    }

    #[test]
    fn regimes_choose_branches() {
        let c = super_consts();
        let xs: Vec<f64> = (0..=250).map(|k| k as f64 * 0.1).collect();
        let sup = swme1_exact_at(&xs, &Bathymetry::Bump, &c, G, Regime::Supercritical, 2.0).unwrap();
        assert!((sup[0].h - 2.0).abs() < 1e-12);
        let b: Vec<f64> = xs.iter().map(|&x| Bathymetry::Bump.eval(x)).collect();
        for k in 1..xs.len() {
            // continuity along the branch
            assert!((sup[k].h - sup[k - 1].h).abs() <= 20.0 * (b[k] - b[k - 1]).abs() + 1e-12);
            // supercritical everywhere
            assert!(sup[k].u.abs() > (G * sup[k].h + sup[k].alpha[0].powi(2)).sqrt());
        }
        let sub_c = EquilibriumConstants::anchored(2.0, 0.0, 4.42, 0.1, G).unwrap();
        let sub = swme1_exact_at(&xs, &Bathymetry::Bump, &sub_c, G, Regime::Subcritical, 2.0).unwrap();
        assert!((sub[0].h - 2.0).abs() < 1e-12);
        assert!((sub.last().unwrap().h - 2.0).abs() < 1e-12);
        for s in &sub {
            assert!(s.u.abs() < (G * s.h).sqrt());
        }
    }

    #[test]
    fn invariants_constant_on_exact_profile() {
        let mesh = Mesh::new(0.0, 25.0, 50).unwrap();
        let c = super_consts();
        let xs: Vec<f64> = mesh.interior().map(|j| mesh.center(j)).collect();
        let states = swme1_exact_at(&xs, &Bathymetry::Bump, &c, G, Regime::Supercritical, 2.0).unwrap();
        let mut s = StateField::zeros(&mesh, 3);
        for (row, w) in s.interior_mut().iter_mut().zip(&states) {
            *row = ModelId::Swme1.to_conserved(w);
        }
        let inv = equilibrium_invariants(&s, &mesh, ModelId::Swme1, &Bathymetry::Bump, G).unwrap();
        for v in &inv {
            assert!((v.discharge - 24.0).abs() < 1e-11);
            assert!((v.head - G * c.e).abs() < 1e-11 * G * c.e);
            assert!((v.ratios[0] - c.c1).abs() < 1e-11);
        }
        assert!(equilibrium_invariants(&s, &mesh, ModelId::Swme2, &Bathymetry::Bump, G).is_err());
    }

    #[test]
    fn lake_at_rest_initializer() {
        let mesh = Mesh::new(0.0, 25.0, 40).unwrap();
        let table = QuadratureTable::new(Order::Three, mesh.dx).unwrap();
        let s = lake_at_rest(&mesh, &Bathymetry::Flat(0.0), 1.0, ModelId::Swme1, &table).unwrap();
        assert!(s.rows().iter().all(|r| (r[0] - 1.0).abs() < 1e-15 && r[1] == 0.0));
        let s = lake_at_rest(&mesh, &Bathymetry::Bump, 1.0, ModelId::Swme1, &table).unwrap();
        // exact averages of eta0 - b by fine midpoint integration
        for j in mesh.interior() {
            let c = mesh.center(j);
            let n = 2000;
            let fine: f64 = (0..n)
                .map(|k| 1.0 - Bathymetry::Bump.eval(c - 0.5 * mesh.dx + (k as f64 + 0.5) * mesh.dx / n as f64))
                .sum::<f64>()
                / n as f64;
            assert!((s.rows()[j][0] - fine).abs() < 1e-3 * mesh.dx.powi(4));
        }
        let inv = equilibrium_invariants(&s, &mesh, ModelId::Swme1, &Bathymetry::Flat(0.0), 1.0);
        assert!(inv.is_ok());
        assert!(lake_at_rest(&mesh, &Bathymetry::Flat(2.0), 1.0, ModelId::Swe, &table).is_err());
    }

    proptest! {
        #[test]
        fn production_roots_match_bisection(b in -0.1f64..0.1, hu in 0.5f64..30.0, ha in -1.0f64..1.0, h in 0.5f64..3.0) {
            let c = EquilibriumConstants::anchored(h, 0.0, hu, ha, G).unwrap();
            let prod = quartic_roots(b, &c, G, 4.0 * h);
            let oracle = bisect_root(|x| c.quartic(x, b, G), 1e-6, 4.0 * h, 20_000);
            prop_assume!(prod.len() == oracle.len());
            for (p, o) in prod.iter().zip(&oracle) {
                prop_assert!((p - o).abs() <= 1e-10 * o.max(1.0));
                prop_assert!(c.quartic(*p, b, G).abs() <= 1e-12 * (1.0 + c.e * p * p));
            }
        }
    }
}
