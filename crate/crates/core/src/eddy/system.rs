use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use super::assembly::{assemble_mass, element_flux_density, element_laplacian, source_shape};
use super::material::MaterialMap;
use super::mesh::{ElementGeometry, Mesh2D};
use super::pwm::Excitation;
use super::EddyError;
use crate::propagator::{Propagator, StepError};
use crate::space_time::Forcing;
use crate::sparse::{factorize, Factorization, SparseMatrix};
use crate::time_grid::{TemporalGrid, TemporalHierarchy};

/// Semi-discrete system `M u' + K(u) u = j(t)` with `u = 0` on the outer boundary.
///
/// Element geometry and the matrix sparsity pattern are computed once; the
/// nonlinear matrices are then filled by scattering element blocks into it.
#[derive(Debug, Clone)]
pub struct DiscreteSystem {
    mesh: Mesh2D,
    materials: MaterialMap,
    excitation: Excitation,
    lz: f64,
    mass: SparseMatrix,
    source_shape: Vec<f64>,
    fixed: Vec<bool>,
    geometry: Vec<ElementGeometry>,
    laplacians: Vec<[[f64; 3]; 3]>,
    pattern: SparseMatrix,
    scatter: Vec<[usize; 9]>,
    mass_values: Vec<f64>,
    /// Storage slots overwritten by the boundary elimination, with their new value.
    dirichlet_slots: Vec<(usize, f64)>,
}

impl DiscreteSystem {
    pub fn new(
        mesh: Mesh2D,
        materials: MaterialMap,
        excitation: Excitation,
        r0: f64,
        lz: f64,
    ) -> Result<Self, EddyError> {
        if !(lz > 0.0 && lz.is_finite()) {
            return Err(EddyError::Config(format!("lz must be positive, got {lz}")));
        }
        if materials.sigma.iter().any(|&s| !(s >= 0.0)) || materials.sigma[0] != 0.0 || materials.sigma[1] != 0.0 {
            return Err(EddyError::Config(
                "conductivity must be nonnegative and vanish in wire and insulator".into(),
            ));
        }
        excitation.validate().map_err(EddyError::Config)?;
        let n = mesh.num_nodes();
        let mass = assemble_mass(&mesh, &materials, lz);
        let source_shape = source_shape(&mesh, r0, lz);
        let fixed = mesh.boundary_mask();
        let geometry: Vec<_> = (0..mesh.num_triangles()).map(|e| mesh.geometry(e)).collect();
        let laplacians = geometry.iter().map(element_laplacian).collect();

        let trip: Vec<_> = mesh
            .triangles
            .iter()
            .flat_map(|t| (0..9).map(move |k| (t[k / 3], t[k % 3], 0.0)))
            .chain((0..n).map(|i| (i, i, 0.0)))
            .collect();
        let pattern = SparseMatrix::from_triplets(n, n, &trip);
        let scatter = mesh
            .triangles
            .iter()
            .map(|t| std::array::from_fn(|k| pattern.position(t[k / 3], t[k % 3]).expect("in pattern")))
            .collect();
        let mut mass_values = vec![0.0; pattern.nnz()];
        for (i, j, v) in mass.iter() {
            mass_values[pattern.position(i, j).expect("mass pattern is a subset")] = v;
        }
        let dirichlet_slots = pattern
            .iter()
            .enumerate()
            .filter(|(_, (i, j, _))| fixed[*i] || fixed[*j])
            .map(|(k, (i, j, _))| (k, if i == j { 1.0 } else { 0.0 }))
            .collect();
        Ok(Self {
            mesh,
            materials,
            excitation,
            lz,
            mass,
            source_shape,
            fixed,
            geometry,
            laplacians,
            pattern,
            scatter,
            mass_values,
            dirichlet_slots,
        })
    }

    pub fn n_dof(&self) -> usize {
        self.mesh.num_nodes()
    }

    pub fn mesh(&self) -> &Mesh2D {
        &self.mesh
    }

    pub fn materials(&self) -> &MaterialMap {
        &self.materials
    }

    pub fn excitation(&self) -> &Excitation {
        &self.excitation
    }

    pub fn lz(&self) -> f64 {
        self.lz
    }

    pub fn is_linear(&self) -> bool {
        self.materials.is_linear()
    }

    pub fn mass(&self) -> &SparseMatrix {
        &self.mass
    }

    pub fn dirichlet(&self) -> &[bool] {
        &self.fixed
    }

    /// `(nu, dnu/dB, B)` on element `e` for the potential `u`.
    fn element_law(&self, e: usize, ue: [f64; 3]) -> (f64, f64, f64) {
        let law = self.materials.reluctivity(self.mesh.regions[e]);
        if law.is_linear() {
            return (law.nu(0.0), 0.0, 0.0);
        }
        let b = element_flux_density(&self.geometry[e], ue, self.lz);
        let (nu, dnu) = law.eval(b);
        (nu, dnu, b)
    }

    /// Stored values of `K(u)` (or of its derivative) on the shared pattern.
    fn stiffness_values(&self, u: &[f64], jacobian: bool) -> Vec<f64> {
        assert_eq!(u.len(), self.n_dof());
        let lz2 = self.lz * self.lz;
        let mut vals = vec![0.0; self.pattern.nnz()];
        for (e, t) in self.mesh.triangles.iter().enumerate() {
            let ue = t.map(|k| u[k]);
            let (nu, dnu, b) = self.element_law(e, ue);
            let s = &self.laplacians[e];
            let slots = &self.scatter[e];
            for k in 0..9 {
                vals[slots[k]] += nu / lz2 * s[k / 3][k % 3];
            }
            if jacobian && dnu != 0.0 && b > 0.0 {
                let su: [f64; 3] = std::array::from_fn(|i| (0..3).map(|j| s[i][j] * ue[j]).sum());
                let c = dnu / (b * self.geometry[e].area * lz2 * lz2);
                for k in 0..9 {
                    vals[slots[k]] += c * su[k / 3] * su[k % 3];
                }
            }
        }
        vals
    }

    pub fn stiffness(&self, u: &[f64]) -> SparseMatrix {
        self.pattern.with_values(self.stiffness_values(u, false))
    }

    pub fn stiffness_jacobian(&self, u: &[f64]) -> SparseMatrix {
        self.pattern.with_values(self.stiffness_values(u, true))
    }

    /// `K(u) u`, element by element.
    pub fn apply_stiffness(&self, u: &[f64]) -> Vec<f64> {
        let lz2 = self.lz * self.lz;
        let mut out = vec![0.0; self.n_dof()];
        for (e, t) in self.mesh.triangles.iter().enumerate() {
            let ue = t.map(|k| u[k]);
            let (nu, _, _) = self.element_law(e, ue);
            let s = &self.laplacians[e];
            for i in 0..3 {
                out[t[i]] += nu / lz2 * (s[i][0] * ue[0] + s[i][1] * ue[1] + s[i][2] * ue[2]);
            }
        }
        out
    }

    /// `M/dt + K(u)`, or `M/dt` plus the stiffness derivative when `jacobian`
    /// is set, with the boundary eliminated.
    pub fn step_matrix(&self, dt: f64, u: &[f64], jacobian: bool) -> SparseMatrix {
        let mut vals = self.stiffness_values(u, jacobian);
        for (v, m) in vals.iter_mut().zip(&self.mass_values) {
            *v += m / dt;
        }
        for &(k, v) in &self.dirichlet_slots {
            vals[k] = v;
        }
        self.pattern.with_values(vals)
    }

    pub fn source(&self, t: f64) -> Vec<f64> {
        let f = self.excitation.current(t);
        self.source_shape.iter().map(|s| f * s).collect()
    }

    /// Magnetic energy `u^T K(u) u / 2`.
    pub fn energy(&self, u: &[f64]) -> f64 {
        let ku = self.apply_stiffness(u);
        0.5 * u.iter().zip(&ku).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Right-hand side `M u_prev / dt + j(t_new)` with boundary rows cleared.
    pub fn step_rhs(&self, dt: f64, t_new: f64, u_prev: &[f64]) -> Vec<f64> {
        let mu = self.mass.spmv(u_prev).expect("state dimension checked by caller");
        let j = self.source(t_new);
        mu.iter()
            .zip(&j)
            .zip(&self.fixed)
            .map(|((m, s), &fix)| if fix { 0.0 } else { m / dt + s })
            .collect()
    }

    /// Backward-Euler residual `(M/dt + K(u)) u - rhs`; boundary rows hold `u_i`.
    pub fn step_residual(&self, dt: f64, rhs: &[f64], u: &[f64]) -> Vec<f64> {
        let mu = self.mass.spmv(u).expect("state dimension checked by caller");
        let ku = self.apply_stiffness(u);
        (0..u.len())
            .map(|i| {
                if self.fixed[i] {
                    u[i]
                } else {
                    mu[i] / dt + ku[i] - rhs[i]
                }
            })
            .collect()
    }

    /// `M/dt + K` for a constant-reluctivity system, boundary eliminated.
    pub fn linear_step_matrix(&self, dt: f64) -> SparseMatrix {
        self.step_matrix(dt, &vec![0.0; self.n_dof()], false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NonlinearSolver {
    Newton,
    /// Fixed-point iteration with the reluctivity frozen at the current iterate.
    /// Stalls in deep saturation, where the reluctivity grows quickly with B.
    Picard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NewtonOptions {
    pub solver: NonlinearSolver,
    pub rel_tol: f64,
    pub max_iters: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            solver: NonlinearSolver::Newton,
            rel_tol: 1e-10,
            max_iters: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub u: Vec<f64>,
    pub iterations: usize,
    /// Final residual norm relative to the initial one or the right-hand side.
    pub relative_residual: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// One backward-Euler step `(M/dt + K(u)) u = M u_prev / dt + j(t_new)`.
pub fn backward_euler_step(
    system: &DiscreteSystem,
    dt: f64,
    t_new: f64,
    u_prev: &[f64],
    opts: &NewtonOptions,
) -> Result<StepOutcome, EddyError> {
    if u_prev.len() != system.n_dof() {
        return Err(EddyError::Dimension {
            expected: system.n_dof(),
            got: u_prev.len(),
        });
    }
    if !(dt > 0.0) {
        return Err(EddyError::Config(format!("time step must be positive, got {dt}")));
    }
    let rhs = system.step_rhs(dt, t_new, u_prev);
    let mut u: Vec<f64> = u_prev
        .iter()
        .zip(system.dirichlet())
        .map(|(&v, &fix)| if fix { 0.0 } else { v })
        .collect();
    let mut res = system.step_residual(dt, &rhs, &u);
    let mut res_norm = norm(&res);
    let scale = norm(&rhs).max(res_norm);

    let mut iterations = 0;
    while res_norm > opts.rel_tol * scale {
        if iterations == opts.max_iters {
            return Err(EddyError::NoConvergence {
                iterations,
                residual: res_norm / scale,
            });
        }
        iterations += 1;
        match opts.solver {
            NonlinearSolver::Newton => {
                let jac = system.step_matrix(dt, &u, true);
                let delta = factorize(&jac)?.solve(&res)?;
                // backtrack if the full step increases the residual
                let mut lambda = 1.0;
                loop {
                    let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a - lambda * d).collect();
                    let trial_res = system.step_residual(dt, &rhs, &trial);
                    let trial_norm = norm(&trial_res);
                    if trial_norm < res_norm || lambda < 1e-3 {
                        u = trial;
                        res = trial_res;
                        res_norm = trial_norm;
                        break;
                    }
                    lambda *= 0.5;
                }
            }
            NonlinearSolver::Picard => {
                let a = system.step_matrix(dt, &u, false);
                u = factorize(&a)?.solve(&rhs)?;
                res = system.step_residual(dt, &rhs, &u);
                res_norm = norm(&res);
            }
        }
    }
    let relative_residual = if scale > 0.0 { res_norm / scale } else { 0.0 };
    Ok(StepOutcome {
        u,
        iterations,
        relative_residual,
    })
}

/// Where the wire current enters the time-stepping equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceHandling {
    /// Each step evaluates `j(t_new)` itself; the MGRIT forcing is zero.
    #[default]
    Internal,
    /// Steps are homogeneous and the source enters as additive forcing
    /// `g_i = (M/dt + K)^{-1} j(t_i)`. Only valid for constant reluctivity.
    Additive,
}

/// Backward-Euler propagator for one level of a time hierarchy.
#[derive(Debug)]
pub struct EddyPropagator<'a> {
    system: &'a DiscreteSystem,
    dt: f64,
    newton: NewtonOptions,
    source: SourceHandling,
    linear: Option<Factorization>,
    steps: AtomicU64,
    nonlinear_iterations: AtomicU64,
}

impl<'a> EddyPropagator<'a> {
    pub fn new(
        system: &'a DiscreteSystem,
        dt: f64,
        newton: NewtonOptions,
        source: SourceHandling,
    ) -> Result<Self, EddyError> {
        let linear = if system.is_linear() {
            Some(factorize(&system.linear_step_matrix(dt))?)
        } else {
            if source == SourceHandling::Additive {
                return Err(EddyError::Config(
                    "additive source handling needs a constant reluctivity".into(),
                ));
            }
            None
        };
        Ok(Self {
            system,
            dt,
            newton,
            source,
            linear,
            steps: AtomicU64::new(0),
            nonlinear_iterations: AtomicU64::new(0),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> u64 {
        self.steps.load(Ordering::Relaxed)
    }

    pub fn nonlinear_iterations(&self) -> u64 {
        self.nonlinear_iterations.load(Ordering::Relaxed)
    }

    /// Additive forcing on `grid` matching [`SourceHandling::Additive`].
    pub fn forcing(&self, grid: &TemporalGrid) -> Result<Forcing, EddyError> {
        let lu = match (&self.linear, self.source) {
            (Some(lu), SourceHandling::Additive) => lu,
            _ => return Ok(Forcing::Zero),
        };
        let n = self.system.n_dof();
        let mut points = vec![vec![0.0; n]];
        for i in 1..=grid.num_intervals {
            let mut j = self.system.source(grid.time(i));
            for (v, &fix) in j.iter_mut().zip(self.system.dirichlet()) {
                if fix {
                    *v = 0.0;
                }
            }
            lu.solve_in_place(&mut j);
            points.push(j);
        }
        Ok(Forcing::Points(points))
    }

    fn apply(&self, t_new: f64, dt: f64, u: &[f64]) -> Result<Vec<f64>, EddyError> {
        match &self.linear {
            Some(lu) if dt == self.dt => {
                let mut rhs = match self.source {
                    SourceHandling::Internal => self.system.step_rhs(dt, t_new, u),
                    SourceHandling::Additive => {
                        let mu = self.system.mass().spmv(u)?;
                        mu.iter()
                            .zip(self.system.dirichlet())
                            .map(|(m, &fix)| if fix { 0.0 } else { m / dt })
                            .collect()
                    }
                };
                lu.solve_in_place(&mut rhs);
                self.nonlinear_iterations.fetch_add(1, Ordering::Relaxed);
                Ok(rhs)
            }
            Some(_) => Err(EddyError::Config(format!(
                "propagator set up for dt = {} was asked for dt = {dt}",
                self.dt
            ))),
            None => {
                let out = backward_euler_step(self.system, dt, t_new, u, &self.newton)?;
                self.nonlinear_iterations
                    .fetch_add(out.iterations as u64, Ordering::Relaxed);
                Ok(out.u)
            }
        }
    }
}

impl Propagator for EddyPropagator<'_> {
    fn state_dim(&self) -> usize {
        self.system.n_dof()
    }

    fn step(&self, _level: usize, t_from: f64, dt: f64, u: &[f64]) -> Result<Vec<f64>, StepError> {
        if u.len() != self.system.n_dof() {
            return Err(StepError::Dimension {
                expected: self.system.n_dof(),
                got: u.len(),
            });
        }
        self.steps.fetch_add(1, Ordering::Relaxed);
        self.apply(t_from + dt, dt, u).map_err(|e| match e {
            EddyError::NoConvergence { iterations, residual } => StepError::NoConvergence { iterations, residual },
            other => StepError::Singular(other.to_string()),
        })
    }
}

/// One rediscretized propagator per level, with step `m^l dt` on level `l`.
pub fn make_propagator<'a>(
    system: &'a DiscreteSystem,
    hierarchy: &TemporalHierarchy,
    newton: NewtonOptions,
    source: SourceHandling,
) -> Result<Vec<EddyPropagator<'a>>, EddyError> {
    hierarchy
        .grids()
        .iter()
        .map(|g| EddyPropagator::new(system, g.dt, newton, source))
        .collect()
}
