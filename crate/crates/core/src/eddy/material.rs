use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::mesh::Region;
use super::EddyError;

/// Vacuum permeability in H/m.
pub const MU0: f64 = 4e-7 * PI;

/// Sampled magnetization curve, `B` in tesla and `H` in A/m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BhCurve {
    pub b: Vec<f64>,
    pub h: Vec<f64>,
}

const STEEL_BH: [(f64, f64); 18] = [
    (0.0, 0.0),
    (0.2, 30.0),
    (0.4, 60.0),
    (0.6, 90.0),
    (0.8, 125.0),
    (1.0, 170.0),
    (1.1, 210.0),
    (1.2, 270.0),
    (1.3, 380.0),
    (1.4, 600.0),
    (1.5, 1100.0),
    (1.6, 2200.0),
    (1.7, 4500.0),
    (1.8, 9000.0),
    (1.9, 18000.0),
    (2.0, 36000.0),
    (2.1, 70000.0),
    (2.2, 130000.0),
];

impl BhCurve {
    /// A soft-steel curve with relative permeability around 5000 at low field
    /// and saturation setting in above 1.4 T.
    pub fn steel() -> Self {
        Self {
            b: STEEL_BH.iter().map(|p| p.0).collect(),
            h: STEEL_BH.iter().map(|p| p.1).collect(),
        }
    }

    /// Two whitespace-separated columns `B H` per line; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, EddyError> {
        let mut b = Vec::new();
        let mut h = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<f64> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|_| EddyError::Material(format!("cannot parse B-H line '{line}'")))?;
            if cols.len() != 2 {
                return Err(EddyError::Material(format!("expected two columns in '{line}'")));
            }
            b.push(cols[0]);
            h.push(cols[1]);
        }
        Ok(Self { b, h })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# B [T]  H [A/m]\n");
        for (b, h) in self.b.iter().zip(&self.h) {
            let _ = writeln!(s, "{b} {h}");
        }
        s
    }
}

/// Monotone piecewise-cubic reluctivity `nu(B)` through the samples `H/B`.
///
/// Slopes follow the Fritsch-Carlson/Butland rule, which keeps the
/// interpolant monotone and continuously differentiable. Below the first
/// positive sample the reluctivity is constant; beyond the last sample it is
/// extended linearly and capped at the vacuum value.
#[derive(Debug, Clone, PartialEq)]
pub struct ReluctivitySpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl ReluctivitySpline {
    pub fn from_curve(curve: &BhCurve) -> Result<Self, EddyError> {
        let err = |m: String| Err(EddyError::Material(m));
        if curve.b.len() != curve.h.len() {
            return err("B and H columns differ in length".into());
        }
        let mut knots = Vec::new();
        let mut values = Vec::new();
        for (&b, &h) in curve.b.iter().zip(&curve.h) {
            if !(b.is_finite() && h.is_finite()) || b < 0.0 || h < 0.0 {
                return err(format!("invalid sample ({b}, {h})"));
            }
            if b == 0.0 {
                continue;
            }
            if knots.last().is_some_and(|&prev| b <= prev) {
                return err("B samples must be strictly increasing".into());
            }
            knots.push(b);
            values.push(h / b);
        }
        if knots.len() < 2 {
            return err("need at least two samples with B > 0".into());
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return err("H/B must be nondecreasing in B".into());
        }
        // flat continuation to B = 0
        knots.insert(0, 0.0);
        values.insert(0, values[0]);

        let n = knots.len();
        let hs: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
        let del: Vec<f64> = (0..n - 1).map(|k| (values[k + 1] - values[k]) / hs[k]).collect();
        let mut slopes = vec![0.0; n];
        for k in 1..n - 1 {
            if del[k - 1] * del[k] > 0.0 {
                let w1 = 2.0 * hs[k] + hs[k - 1];
                let w2 = hs[k] + 2.0 * hs[k - 1];
                slopes[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
            }
        }
        slopes[n - 1] = if n > 2 {
            edge_slope(hs[n - 2], hs[n - 3], del[n - 2], del[n - 3])
        } else {
            del[0]
        };
        Ok(Self { knots, values, slopes })
    }

    pub fn steel() -> Self {
        Self::from_curve(&BhCurve::steel()).expect("built-in curve is valid")
    }

    pub fn nu(&self, b: f64) -> f64 {
        self.eval(b).0
    }

    pub fn dnu_db(&self, b: f64) -> f64 {
        self.eval(b).1
    }

    /// `(nu(B), dnu/dB)`.
    pub fn eval(&self, b: f64) -> (f64, f64) {
        let b = b.abs();
        let n = self.knots.len();
        let cap = 1.0 / MU0;
        if b >= self.knots[n - 1] {
            let v = self.values[n - 1] + self.slopes[n - 1] * (b - self.knots[n - 1]);
            return if v >= cap { (cap, 0.0) } else { (v, self.slopes[n - 1]) };
        }
        let k = self.knots.partition_point(|&x| x <= b) - 1;
        let h = self.knots[k + 1] - self.knots[k];
        let s = (b - self.knots[k]) / h;
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (d0, d1) = (self.slopes[k] * h, self.slopes[k + 1] * h);
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let v = h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1;
        let dv =
            (6.0 * s * (s - 1.0) * (y0 - y1) + (3.0 * s * s - 4.0 * s + 1.0) * d0 + (3.0 * s * s - 2.0 * s) * d1) / h;
        (v.min(cap), dv)
    }
}

fn edge_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() || del0 == 0.0 {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReluctivityModel {
    Constant(f64),
    Spline(ReluctivitySpline),
}

impl ReluctivityModel {
    pub fn eval(&self, b: f64) -> (f64, f64) {
        match self {
            ReluctivityModel::Constant(nu) => (*nu, 0.0),
            ReluctivityModel::Spline(s) => s.eval(b),
        }
    }

    pub fn nu(&self, b: f64) -> f64 {
        self.eval(b).0
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, ReluctivityModel::Constant(_))
    }
}

/// Conductivity and reluctivity per region.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialMap {
    pub sigma: [f64; 3],
    pub reluctivity: [ReluctivityModel; 3],
}

impl MaterialMap {
    /// Non-conducting vacuum in wire and insulator, conducting shield with the
    /// given magnetic law.
    pub fn shielded(shield_sigma: f64, shield: ReluctivityModel) -> Self {
        let air = ReluctivityModel::Constant(1.0 / MU0);
        Self {
            sigma: [0.0, 0.0, shield_sigma],
            reluctivity: [air.clone(), air, shield],
        }
    }

    /// Steel shield with the nonlinear curve.
    pub fn nonlinear(shield_sigma: f64, curve: &BhCurve) -> Result<Self, EddyError> {
        Ok(Self::shielded(
            shield_sigma,
            ReluctivityModel::Spline(ReluctivitySpline::from_curve(curve)?),
        ))
    }

    /// Steel shield with its reluctivity frozen at the low-field value.
    pub fn linearized(shield_sigma: f64, curve: &BhCurve) -> Result<Self, EddyError> {
        let nu = ReluctivitySpline::from_curve(curve)?.nu(0.0);
        Ok(Self::shielded(shield_sigma, ReluctivityModel::Constant(nu)))
    }

    pub fn sigma(&self, r: Region) -> f64 {
        self.sigma[r.tag()]
    }

    pub fn reluctivity(&self, r: Region) -> &ReluctivityModel {
        &self.reluctivity[r.tag()]
    }

    pub fn is_linear(&self) -> bool {
        self.reluctivity.iter().all(ReluctivityModel::is_linear)
    }
}
