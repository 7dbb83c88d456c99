use serde::Serialize;

use crate::parallel::WorkModel;

/// Residual and work history of one MGRIT solve.
///
/// Entry `k` of each per-iteration vector describes iteration `k + 1`:
/// the residual is measured after that iteration's coarse-grid correction
/// and the relaxation that follows it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRecord {
    /// Residual of the relaxed initial guess, before any correction.
    pub initial_residual: f64,
    pub residual_norms: Vec<f64>,
    /// Level-0 propagator applications per iteration.
    pub fine_phi: Vec<u64>,
    /// Applications of all coarser propagators per iteration.
    pub coarse_phi: Vec<u64>,
    pub wall_seconds: Vec<f64>,
    pub converged: bool,
    pub work: WorkModel,
}

#[derive(Serialize)]
struct Row {
    iteration: usize,
    residual_norm: f64,
    fine_phi_count: u64,
    coarse_phi_count: u64,
    wall_seconds: f64,
}

impl ConvergenceRecord {
    pub fn iterations(&self) -> usize {
        self.residual_norms.len()
    }

    pub fn final_residual(&self) -> f64 {
        self.residual_norms.last().copied().unwrap_or(self.initial_residual)
    }

    /// Ratios `r_{k+1} / r_k` of consecutive residual norms (iteration 0 is
    /// the initial residual).
    pub fn reduction_factors(&self) -> Vec<f64> {
        let mut all = vec![self.initial_residual];
        all.extend(&self.residual_norms);
        all.windows(2).map(|w| w[1] / w[0]).collect()
    }

    /// CSV with columns `iteration, residual_norm, fine_phi_count,
    /// coarse_phi_count, wall_seconds`. Row 0 holds the initial residual and
    /// the setup work.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let setup = self.work.setup.per_level();
        w.serialize(Row {
            iteration: 0,
            residual_norm: self.initial_residual,
            fine_phi_count: setup[0],
            coarse_phi_count: setup[1..].iter().sum(),
            wall_seconds: 0.0,
        })?;
        for k in 0..self.iterations() {
            w.serialize(Row {
                iteration: k + 1,
                residual_norm: self.residual_norms[k],
                fine_phi_count: self.fine_phi[k],
                coarse_phi_count: self.coarse_phi[k],
                wall_seconds: self.wall_seconds[k],
            })?;
        }
        w.flush()?;
        Ok(())
    }
}
