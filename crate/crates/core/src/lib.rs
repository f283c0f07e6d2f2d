//! Fully well-balanced global-flux finite-volume schemes for the shallow
//! water equations and shallow water moment models in one dimension.
//!
//! The crate is organised bottom-up:
//!
//! * [`quadrature`] and [`weno`] provide Gauss tables and WENO reconstruction
//!   at arbitrary points of a cell;
//! * [`models`] holds the closed-form fluxes, non-conservative matrices,
//!   friction and eigenstructure of every model;
//! * [`global_flux`] integrates sources and non-conservative products into
//!   the global flux and [`solver`] advances the semi-discrete system;
//! * [`steady_reference`] and [`experiments`] build exact equilibria and
//!   run the numerical studies.

pub mod bathymetry;
pub mod error;
pub mod experiments;
pub mod global_flux;
pub mod mesh_state;
pub mod models;
pub mod poly;
pub mod quadrature;
pub mod solver;
pub mod steady_reference;
pub mod weno;

pub use bathymetry::Bathymetry;
pub use error::{Error, Result};
pub use mesh_state::{BoundaryKind, BoundarySpec, Mesh, StateField};
pub use models::{ModelId, PhysicalParams, PrimitiveState, Vars};
pub use quadrature::{Order, QuadratureTable};
