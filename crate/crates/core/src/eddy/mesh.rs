//! Structured triangulation of the coaxial cable cross-section.
//!
//! Node 0 sits at the centre; every further ring carries `angular_divisions`
//! equally spaced nodes. The innermost band is a fan around the centre and each
//! band between two rings is split into two triangles per angular sector.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::EddyError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    /// Inner conductor carrying the source current.
    Wire,
    Insulator,
    /// Conducting, possibly nonlinear, outer tube.
    Shield,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::Wire, Region::Insulator, Region::Shield];

    pub fn tag(self) -> usize {
        match self {
            Region::Wire => 0,
            Region::Insulator => 1,
            Region::Shield => 2,
        }
    }

    pub fn from_tag(tag: usize) -> Option<Self> {
        Region::ALL.get(tag).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoaxGeometry {
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
    /// Radial layers in wire, insulator and shield.
    pub layers: [usize; 3],
    pub angular_divisions: usize,
}

impl Default for CoaxGeometry {
    fn default() -> Self {
        Self {
            r0: 1e-3,
            r1: 2e-3,
            r2: 3e-3,
            layers: [3, 3, 4],
            angular_divisions: 30,
        }
    }
}

impl CoaxGeometry {
    pub fn mesh(&self) -> Result<Mesh2D, EddyError> {
        generate_coax_mesh(self.r0, self.r1, self.r2, self.layers, self.angular_divisions)
    }

    pub fn num_nodes(&self) -> usize {
        1 + self.layers.iter().sum::<usize>() * self.angular_divisions
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh2D {
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub regions: Vec<Region>,
    /// Nodes on the outer circle, where the potential is fixed to zero.
    pub boundary: Vec<usize>,
}

/// Area and barycentric gradients of one P1 triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry {
    pub area: f64,
    pub grads: [[f64; 2]; 3],
}

impl ElementGeometry {
    pub fn new(p: [[f64; 2]; 3]) -> Self {
        let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
        let mut grads = [[0.0; 2]; 3];
        for i in 0..3 {
            let j = (i + 1) % 3;
            let k = (i + 2) % 3;
            grads[i] = [(p[j][1] - p[k][1]) / det, (p[k][0] - p[j][0]) / det];
        }
        Self { area: 0.5 * det, grads }
    }
}

impl Mesh2D {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self, e: usize) -> [[f64; 2]; 3] {
        self.triangles[e].map(|n| self.nodes[n])
    }

    pub fn geometry(&self, e: usize) -> ElementGeometry {
        ElementGeometry::new(self.vertices(e))
    }

    pub fn region_area(&self, region: Region) -> f64 {
        (0..self.num_triangles())
            .filter(|&e| self.regions[e] == region)
            .map(|e| self.geometry(e).area)
            .sum()
    }

    pub fn boundary_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.num_nodes()];
        for &b in &self.boundary {
            mask[b] = true;
        }
        mask
    }

    /// Number of distinct edges.
    pub fn num_edges(&self) -> usize {
        let mut edges: Vec<(usize, usize)> = self
            .triangles
            .iter()
            .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])])
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges.len()
    }

    /// Plain-text form:
    ///
    /// ```text
    /// # coax-mesh v1
    /// nodes <N>
    /// <x> <y>                 (N lines, metres)
    /// triangles <T>
    /// <a> <b> <c> <region>    (T lines, 0-based nodes, region 0 wire / 1 insulator / 2 shield)
    /// boundary <B>
    /// <node>                  (B lines)
    /// ```
    pub fn to_text(&self) -> String {
        let mut s = String::from("# coax-mesh v1\n");
        let _ = writeln!(s, "nodes {}", self.nodes.len());
        for p in &self.nodes {
            let _ = writeln!(s, "{:.17e} {:.17e}", p[0], p[1]);
        }
        let _ = writeln!(s, "triangles {}", self.triangles.len());
        for (t, r) in self.triangles.iter().zip(&self.regions) {
            let _ = writeln!(s, "{} {} {} {}", t[0], t[1], t[2], r.tag());
        }
        let _ = writeln!(s, "boundary {}", self.boundary.len());
        for b in &self.boundary {
            let _ = writeln!(s, "{b}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Mesh2D, EddyError> {
        let bad = |msg: String| EddyError::MeshFormat(msg);
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));

        fn numbers<T: std::str::FromStr>(line: Option<&str>, n: usize, what: &str) -> Result<Vec<T>, EddyError> {
            let line = line.ok_or_else(|| EddyError::MeshFormat(format!("unexpected end of file in {what}")))?;
            let vals: Result<Vec<T>, _> = line.split_whitespace().map(str::parse).collect();
            match vals {
                Ok(v) if v.len() == n => Ok(v),
                _ => Err(EddyError::MeshFormat(format!("malformed {what} line '{line}'"))),
            }
        }
        fn header(line: Option<&str>, name: &str) -> Result<usize, EddyError> {
            let line = line.ok_or_else(|| EddyError::MeshFormat(format!("missing '{name}' header")))?;
            let mut it = line.split_whitespace();
            if it.next() != Some(name) {
                return Err(EddyError::MeshFormat(format!(
                    "expected '{name} <count>', got '{line}'"
                )));
            }
            it.next()
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| EddyError::MeshFormat(format!("bad count in '{line}'")))
        }

        let n_nodes = header(lines.next(), "nodes")?;
        let mut nodes = Vec::with_capacity(n_nodes);
        for _ in 0..n_nodes {
            let v: Vec<f64> = numbers(lines.next(), 2, "node")?;
            nodes.push([v[0], v[1]]);
        }
        let n_tri = header(lines.next(), "triangles")?;
        let mut triangles = Vec::with_capacity(n_tri);
        let mut regions = Vec::with_capacity(n_tri);
        for _ in 0..n_tri {
            let v: Vec<usize> = numbers(lines.next(), 4, "triangle")?;
            if v[..3].iter().any(|&n| n >= n_nodes) {
                return Err(bad(format!("triangle references missing node: {v:?}")));
            }
            triangles.push([v[0], v[1], v[2]]);
            regions.push(Region::from_tag(v[3]).ok_or_else(|| bad(format!("unknown region tag {}", v[3])))?);
        }
        let n_b = header(lines.next(), "boundary")?;
        let mut boundary = Vec::with_capacity(n_b);
        for _ in 0..n_b {
            let v: Vec<usize> = numbers(lines.next(), 1, "boundary")?;
            if v[0] >= n_nodes {
                return Err(bad(format!("boundary node {} out of range", v[0])));
            }
            boundary.push(v[0]);
        }
        Ok(Mesh2D {
            nodes,
            triangles,
            regions,
            boundary,
        })
    }
}

pub fn generate_coax_mesh(
    r0: f64,
    r1: f64,
    r2: f64,
    layers: [usize; 3],
    angular_divisions: usize,
) -> Result<Mesh2D, EddyError> {
    if !(0.0 < r0 && r0 < r1 && r1 < r2) || !r2.is_finite() {
        return Err(EddyError::Geometry(format!(
            "radii must satisfy 0 < r0 < r1 < r2, got {r0}, {r1}, {r2}"
        )));
    }
    if angular_divisions < 8 {
        return Err(EddyError::Geometry(format!(
            "need at least 8 angular divisions, got {angular_divisions}"
        )));
    }
    if layers.contains(&0) {
        return Err(EddyError::Geometry(
            "every region needs at least one radial layer".into(),
        ));
    }

    let mut radii = Vec::new();
    let mut ring_region = Vec::new();
    for (k, (&inner, &outer)) in [0.0, r0, r1].iter().zip(&[r0, r1, r2]).enumerate() {
        for l in 1..=layers[k] {
            radii.push(inner + (outer - inner) * l as f64 / layers[k] as f64);
            ring_region.push(Region::ALL[k]);
        }
    }

    let n = angular_divisions;
    let mut nodes = vec![[0.0, 0.0]];
    for &r in &radii {
        for a in 0..n {
            let th = 2.0 * PI * a as f64 / n as f64;
            nodes.push([r * th.cos(), r * th.sin()]);
        }
    }
    let ring = |k: usize, a: usize| 1 + k * n + (a % n);

    let mut triangles = Vec::new();
    let mut regions = Vec::new();
    for a in 0..n {
        triangles.push([0, ring(0, a), ring(0, a + 1)]);
        regions.push(ring_region[0]);
    }
    for k in 0..radii.len() - 1 {
        for a in 0..n {
            let (p00, p01) = (ring(k, a), ring(k, a + 1));
            let (p10, p11) = (ring(k + 1, a), ring(k + 1, a + 1));
            // alternate the diagonal so the mesh has no preferred direction
            let pair = if a % 2 == 0 {
                [[p00, p10, p11], [p00, p11, p01]]
            } else {
                [[p00, p10, p01], [p01, p10, p11]]
            };
            for t in pair {
                triangles.push(t);
                regions.push(ring_region[k + 1]);
            }
        }
    }
    for t in triangles.iter_mut() {
        if ElementGeometry::new(t.map(|i| nodes[i])).area < 0.0 {
            t.swap(1, 2);
        }
    }
    let last = radii.len() - 1;
    let boundary = (0..n).map(|a| ring(last, a)).collect();
    Ok(Mesh2D {
        nodes,
        triangles,
        regions,
        boundary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn areas_close_to_annuli() {
        let m = generate_coax_mesh(1e-3, 2e-3, 3e-3, [2, 2, 2], 16).unwrap();
        let exact = [PI * 1e-6, PI * (4e-6 - 1e-6), PI * (9e-6 - 4e-6)];
        for (r, e) in Region::ALL.iter().zip(exact) {
            let a = m.region_area(*r);
            assert!((a - e).abs() / e < 0.05, "{r:?}: {a} vs {e}");
        }
    }

    #[test]
    fn topology_of_a_disk() {
        for (layers, n) in [([2, 2, 2], 16), ([1, 1, 1], 8), ([3, 3, 4], 30)] {
            let m = generate_coax_mesh(1e-3, 2e-3, 3e-3, layers, n).unwrap();
            let euler = m.num_nodes() as i64 - m.num_edges() as i64 + m.num_triangles() as i64;
            assert_eq!(euler, 1);
            assert_eq!(m.boundary.len(), n);
            for &b in &m.boundary {
                let r = m.nodes[b][0].hypot(m.nodes[b][1]);
                assert!((r - 3e-3).abs() < 1e-15);
            }
            for e in 0..m.num_triangles() {
                assert!(m.geometry(e).area > 0.0);
            }
        }
    }

    #[test]
    fn default_desk_mesh_size() {
        let g = CoaxGeometry::default();
        let m = g.mesh().unwrap();
        assert_eq!(m.num_nodes(), g.num_nodes());
        assert_eq!(m.num_nodes(), 301);
    }

    #[test]
    fn rejects_invalid_geometry() {
        assert!(generate_coax_mesh(2e-3, 1e-3, 3e-3, [1, 1, 1], 16).is_err());
        assert!(generate_coax_mesh(0.0, 1e-3, 3e-3, [1, 1, 1], 16).is_err());
        assert!(generate_coax_mesh(1e-3, 2e-3, 3e-3, [1, 1, 1], 6).is_err());
        assert!(generate_coax_mesh(1e-3, 2e-3, 3e-3, [1, 0, 1], 16).is_err());
    }

    #[test]
    fn element_gradients_sum_to_zero() {
        let g = ElementGeometry::new([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(g.area, 0.5);
        assert_eq!(g.grads, [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn text_round_trip() {
        let m = generate_coax_mesh(1e-3, 2e-3, 3e-3, [1, 2, 1], 12).unwrap();
        let back = Mesh2D::from_text(&m.to_text()).unwrap();
        assert_eq!(back, m);
        assert!(Mesh2D::from_text("nodes 1\n0 0\ntriangles 1\n0 0 5 1\nboundary 0\n").is_err());
        assert!(Mesh2D::from_text("nodes 2\n0 0\n").is_err());
    }
}
