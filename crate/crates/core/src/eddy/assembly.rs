//! P1 finite-element assembly for the z-component of the magnetic vector potential.

use std::f64::consts::PI;

use super::material::MaterialMap;
use super::mesh::{ElementGeometry, Mesh2D, Region};
use super::pwm::Excitation;
use crate::sparse::SparseMatrix;

/// `area * grad N_i . grad N_j`.
pub fn element_laplacian(g: &ElementGeometry) -> [[f64; 3]; 3] {
    let mut s = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            s[i][j] = g.area * (g.grads[i][0] * g.grads[j][0] + g.grads[i][1] * g.grads[j][1]);
        }
    }
    s
}

/// Flux density magnitude on one element, `|sum_i u_i grad N_i| / lz`.
pub fn element_flux_density(g: &ElementGeometry, ue: [f64; 3], lz: f64) -> f64 {
    let bx: f64 = (0..3).map(|i| ue[i] * g.grads[i][0]).sum();
    let by: f64 = (0..3).map(|i| ue[i] * g.grads[i][1]).sum();
    bx.hypot(by) / lz
}

fn push_block(trip: &mut Vec<(usize, usize, f64)>, nodes: [usize; 3], block: &[[f64; 3]; 3]) {
    for i in 0..3 {
        for j in 0..3 {
            trip.push((nodes[i], nodes[j], block[i][j]));
        }
    }
}

pub fn assemble_mass(mesh: &Mesh2D, materials: &MaterialMap, lz: f64) -> SparseMatrix {
    let n = mesh.num_nodes();
    let mut trip = Vec::new();
    for (e, &nodes) in mesh.triangles.iter().enumerate() {
        let sigma = materials.sigma(mesh.regions[e]);
        if sigma == 0.0 {
            continue;
        }
        let c = sigma * mesh.geometry(e).area / (12.0 * lz * lz);
        let block = [[2.0 * c, c, c], [c, 2.0 * c, c], [c, c, 2.0 * c]];
        push_block(&mut trip, nodes, &block);
    }
    SparseMatrix::from_triplets(n, n, &trip)
}

fn stiffness_impl(mesh: &Mesh2D, materials: &MaterialMap, u: &[f64], lz: f64, jacobian: bool) -> SparseMatrix {
    assert_eq!(u.len(), mesh.num_nodes());
    let n = mesh.num_nodes();
    let mut trip = Vec::with_capacity(9 * mesh.num_triangles());
    for (e, &nodes) in mesh.triangles.iter().enumerate() {
        let g = mesh.geometry(e);
        let s = element_laplacian(&g);
        let ue = nodes.map(|k| u[k]);
        let law = materials.reluctivity(mesh.regions[e]);
        let b = if law.is_linear() {
            0.0
        } else {
            element_flux_density(&g, ue, lz)
        };
        let (nu, dnu) = law.eval(b);
        let mut block = s.map(|row| row.map(|v| nu * v / (lz * lz)));
        if jacobian && dnu != 0.0 && b > 0.0 {
            // d/du [nu(B) S u] adds nu'(B) (S u)(S u)^T / (B area lz^4)
            let su: [f64; 3] = std::array::from_fn(|i| (0..3).map(|j| s[i][j] * ue[j]).sum());
            let c = dnu / (b * g.area * lz.powi(4));
            for i in 0..3 {
                for j in 0..3 {
                    block[i][j] += c * su[i] * su[j];
                }
            }
        }
        push_block(&mut trip, nodes, &block);
    }
    SparseMatrix::from_triplets(n, n, &trip)
}

/// Stiffness `K_nu(u)` with the reluctivity evaluated at the element flux densities of `u`.
pub fn assemble_stiffness(mesh: &Mesh2D, materials: &MaterialMap, u: &[f64], lz: f64) -> SparseMatrix {
    stiffness_impl(mesh, materials, u, lz, false)
}

/// Derivative of `u -> K_nu(u) u`, including the differential-reluctivity term.
pub fn assemble_stiffness_jacobian(mesh: &Mesh2D, materials: &MaterialMap, u: &[f64], lz: f64) -> SparseMatrix {
    stiffness_impl(mesh, materials, u, lz, true)
}

/// `int_{wire} N_i / (pi r0^2 lz)` per node; multiply by the wire current to get the source vector.
pub fn source_shape(mesh: &Mesh2D, r0: f64, lz: f64) -> Vec<f64> {
    let mut j = vec![0.0; mesh.num_nodes()];
    let scale = 1.0 / (PI * r0 * r0 * lz);
    for (e, nodes) in mesh.triangles.iter().enumerate() {
        if mesh.regions[e] != Region::Wire {
            continue;
        }
        let share = mesh.geometry(e).area / 3.0 * scale;
        for &k in nodes {
            j[k] += share;
        }
    }
    j
}

pub fn assemble_source(mesh: &Mesh2D, src: &Excitation, r0: f64, t: f64, lz: f64) -> Vec<f64> {
    let f = src.current(t);
    source_shape(mesh, r0, lz).into_iter().map(|s| f * s).collect()
}
