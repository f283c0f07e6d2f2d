//! Bottom topography and its cell averages.

use std::fmt;
use std::sync::Arc;

use crate::mesh_state::Mesh;
use crate::quadrature::QuadratureTable;

/// Bottom elevation `b(x)`.
#[derive(Clone)]
pub enum Bathymetry {
    Flat(f64),
    /// `0.05 sin(x - 12.5) exp(1 - (x - 12.5)^2)`.
    Bump,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Bathymetry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bathymetry::Flat(c) => write!(f, "Flat({c})"),
            Bathymetry::Bump => f.write_str("Bump"),
            Bathymetry::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl Default for Bathymetry {
    fn default() -> Self {
        Bathymetry::Bump
    }
}

impl Bathymetry {
    pub fn custom<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        Bathymetry::Custom(Arc::new(f))
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Bathymetry::Flat(c) => *c,
            Bathymetry::Bump => {
                let s = x - 12.5;
                0.05 * s.sin() * (1.0 - s * s).exp()
            }
            Bathymetry::Custom(f) => f(x),
        }
    }
}

/// Cell averages of `b` on every storage row, computed with the Gauss rule
/// of the scheme.
pub fn cell_averages(bathy: &Bathymetry, mesh: &Mesh, quad: &QuadratureTable) -> Vec<f64> {
    (0..mesh.n_total()).map(|j| quad.average(mesh.center(j), |x| bathy.eval(x))).collect()
}
