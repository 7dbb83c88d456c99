//! Eddy currents in a coaxial cable: P1 finite elements for the axial magnetic
//! vector potential in a cross-section, driven by a PWM wire current and
//! shielded by a conducting, possibly saturating steel tube.

mod assembly;
mod material;
mod mesh;
mod pwm;
mod system;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sparse::SparseError;

pub use assembly::{
    assemble_mass, assemble_source, assemble_stiffness, assemble_stiffness_jacobian, element_flux_density,
    element_laplacian, source_shape,
};
pub use material::{BhCurve, MaterialMap, ReluctivityModel, ReluctivitySpline, MU0};
pub use mesh::{generate_coax_mesh, CoaxGeometry, ElementGeometry, Mesh2D, Region};
pub use pwm::{pwm_excitation, Excitation};
pub use system::{
    backward_euler_step, make_propagator, DiscreteSystem, EddyPropagator, NewtonOptions, NonlinearSolver,
    SourceHandling, StepOutcome,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EddyError {
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("mesh file: {0}")]
    MeshFormat(String),
    #[error("material: {0}")]
    Material(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("state has {got} entries, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("nonlinear solve did not converge after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

/// Everything needed to build a [`DiscreteSystem`] for the cable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EddyConfig {
    pub geometry: CoaxGeometry,
    pub nonlinear: bool,
    /// Shield conductivity in S/m.
    pub sigma: f64,
    pub lz: f64,
    pub source: Excitation,
    /// Two-column `B H` table; the built-in steel curve when absent.
    pub bh_table: Option<String>,
}

impl Default for EddyConfig {
    fn default() -> Self {
        Self {
            geometry: CoaxGeometry::default(),
            nonlinear: true,
            sigma: 1e7,
            lz: 1.0,
            source: Excitation::default(),
            bh_table: None,
        }
    }
}

impl EddyConfig {
    pub fn bh_curve(&self) -> Result<BhCurve, EddyError> {
        match &self.bh_table {
            None => Ok(BhCurve::steel()),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| EddyError::Material(format!("cannot read '{path}': {e}")))?;
                BhCurve::parse(&text)
            }
        }
    }

    pub fn build(&self) -> Result<DiscreteSystem, EddyError> {
        let curve = self.bh_curve()?;
        let materials = if self.nonlinear {
            MaterialMap::nonlinear(self.sigma, &curve)?
        } else {
            MaterialMap::linearized(self.sigma, &curve)?
        };
        DiscreteSystem::new(self.geometry.mesh()?, materials, self.source, self.geometry.r0, self.lz)
    }
}
