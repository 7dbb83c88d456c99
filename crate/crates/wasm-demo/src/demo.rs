//! Plain-Rust versions of the exported operations, testable off the browser.

use eddy_pint::eddy::{make_propagator, pwm_excitation, CoaxGeometry, EddyConfig, NewtonOptions, SourceHandling};
use eddy_pint::parallel::estimate_speedup;
use eddy_pint::{build_hierarchy, Dahlquist, Forcing, Mgrit, MgritOptions, Propagator, Relaxation};

/// `samples` evenly spaced values of the PWM signal on `[0, t_end]`.
pub fn pwm_samples(period: f64, teeth: u32, t_end: f64, samples: usize) -> Vec<f64> {
    (0..samples)
        .map(|i| pwm_excitation(sample_time(t_end, samples, i), period, teeth))
        .collect()
}

fn sample_time(t_end: f64, samples: usize, i: usize) -> f64 {
    if samples < 2 {
        0.0
    } else {
        t_end * i as f64 / (samples - 1) as f64
    }
}

/// Centred moving average of the PWM signal over `window_teeth` switching
/// cycles, each window integrated with 64 midpoint samples per tooth.
pub fn pwm_moving_average(period: f64, teeth: u32, window_teeth: u32, t_end: f64, samples: usize) -> Vec<f64> {
    let window = window_teeth.max(1) as f64 * period / teeth.max(1) as f64;
    let n = 64 * window_teeth.max(1) as usize;
    (0..samples)
        .map(|i| {
            let a = sample_time(t_end, samples, i) - 0.5 * window;
            (0..n)
                .map(|s| pwm_excitation(a + (s as f64 + 0.5) * window / n as f64, period, teeth))
                .sum::<f64>()
                / n as f64
        })
        .collect()
}

fn hierarchy_and_options(
    t_end: f64,
    nt: usize,
    factors: &[usize],
    fcf: bool,
) -> Result<(eddy_pint::TemporalHierarchy, MgritOptions), String> {
    let h = build_hierarchy(0.0, t_end, nt, factors).map_err(|e| e.to_string())?;
    let opts = MgritOptions {
        relaxation: Some(if fcf { Relaxation::FCF } else { Relaxation::F }),
        max_iters: 40,
        ..MgritOptions::default()
    };
    Ok((h, opts))
}

/// Small coax model: one period of the default PWM current on a coarse mesh.
pub fn demo_eddy_config() -> EddyConfig {
    EddyConfig {
        geometry: CoaxGeometry {
            layers: [2, 2, 2],
            angular_divisions: 12,
            ..CoaxGeometry::default()
        },
        ..EddyConfig::default()
    }
}

/// Result of a demo MGRIT solve.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    /// Initial residual followed by one entry per iteration.
    pub residuals: Vec<f64>,
    /// `(workers, estimated speedup)` for workers 1, 2, 4, ..., `max_workers`.
    pub speedup: Vec<(usize, f64)>,
    pub converged: bool,
}

/// Runs MGRIT on `"dahlquist"` (lambda = -1 on [0, 4] with a sine source) or
/// `"eddy"` (nonlinear coax over one 20 ms period).
pub fn mgrit_history(
    problem: &str,
    nt: usize,
    factors: &[usize],
    fcf: bool,
    max_workers: usize,
) -> Result<History, String> {
    let (residuals, converged, work) = match problem {
        "dahlquist" => {
            let (h, opts) = hierarchy_and_options(4.0, nt, factors, fcf)?;
            let p = Dahlquist::new(-1.0, 1.0);
            let dt = h.finest().dt;
            let g = Forcing::from_fn(h.finest(), |t| vec![dt * (3.0 * t).sin()]);
            let (_, rec) = Mgrit::uniform(&h, &p, opts)
                .map_err(|e| e.to_string())?
                .solve(&p.initial_state(), &g)
                .map_err(|e| e.to_string())?;
            (history(&rec), rec.converged, rec.work)
        }
        "eddy" => {
            let sys = demo_eddy_config().build().map_err(|e| e.to_string())?;
            let (h, opts) = hierarchy_and_options(0.02, nt, factors, fcf)?;
            let props = make_propagator(&sys, &h, NewtonOptions::default(), SourceHandling::Internal)
                .map_err(|e| e.to_string())?;
            let dyn_props: Vec<&dyn Propagator> = props.iter().map(|p| p as &dyn Propagator).collect();
            let (_, rec) = Mgrit::new(&h, dyn_props, opts)
                .map_err(|e| e.to_string())?
                .solve(&vec![0.0; sys.n_dof()], &Forcing::Zero)
                .map_err(|e| e.to_string())?;
            (history(&rec), rec.converged, rec.work)
        }
        other => return Err(format!("unknown problem '{other}', expected 'dahlquist' or 'eddy'")),
    };
    let iters = residuals.len().saturating_sub(1).max(1);
    let speedup = std::iter::successors(Some(1usize), |p| p.checked_mul(2))
        .take_while(|&p| p <= max_workers.max(1))
        .map(|p| (p, estimate_speedup(&work, p, iters)))
        .collect();
    Ok(History {
        residuals,
        speedup,
        converged,
    })
}

fn history(rec: &eddy_pint::ConvergenceRecord) -> Vec<f64> {
    let mut r = vec![rec.initial_residual];
    r.extend(&rec.residual_norms);
    r
}
