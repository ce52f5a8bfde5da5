//! Circle-packed triangulations, their Dubejko edge weights and the random
//! walks those weights define.
//!
//! The walk on circle centres with conductance `|e†|/|e|` (dual edge over
//! primal edge) is a martingale. This crate builds packings, computes the
//! weights, reduces and solves the resulting networks, simulates walks and
//! checks the related energy, integral and 3D statements numerically.
//!
//! Modules:
//! - [`geometry`]: circles, incircles, Descartes placement, vertex polygons
//! - [`packing`]: packings, validation, builders, chain refinement, files
//! - [`network`]: weighted networks, censoring, harmonic solves, test functions
//! - [`walk`]: seeded walks, escape estimates, coupling experiments
//! - [`harmonic`]: disc and polygon integral inequalities
//! - [`sphere3d`]: sphere packings and their tangent-plane cells
//! - [`cli`], [`report`]: the `cpwalk` command and its JSON reports
//!
//! Runnable tours live in `examples/`:
//!
//! ```text
//! cargo run --example hexagonal_weights
//! cargo run --example flower_tightness
//! cargo run --example martingale
//! cargo run --example refine_chain
//! cargo run --example network_reduction
//! cargo run --release --example coupling
//! cargo run --release --example recurrence_scaling -- plot.svg
//! cargo run --release --example energy_certificates
//! cargo run --example affine_harmonic
//! cargo run --release --example integration_lemmas
//! cargo run --release --example sphere_cells
//! cargo run --release --example escape_probability
//! ```
//!
//! ```
//! use cpwalk::{network::dubejko_weights, packing::build_hexagonal, VertexId};
//!
//! let net = dubejko_weights(&build_hexagonal(2, 1.0).unwrap()).unwrap();
//! let c = net.weight(VertexId(0), VertexId(1));
//! assert!((c - 1.0 / 3f64.sqrt()).abs() < 1e-12);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod geometry;
pub mod harmonic;
pub mod network;
pub mod packing;
pub mod report;
pub mod sphere3d;
pub mod walk;

use std::fmt;

use serde::{Deserialize, Serialize};

/// Identifier of a circle, sphere or network vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub u64);

impl From<u64> for VertexId {
    fn from(v: u64) -> Self {
        VertexId(v)
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}
