use super::{require_beta, CurvePoint, HillChart, RatedValues, TurbineKind};
use crate::error::{Error, Result};

/// One strictly increasing axis of a tabulated surface.
#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    nodes: Vec<f64>,
}

impl GridAxis {
    pub fn new(name: &str, nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::Curves(format!(
                "{name} grid needs at least 2 nodes, got {}",
                nodes.len()
            )));
        }
        if nodes.iter().any(|v| !v.is_finite()) {
            return Err(Error::Curves(format!(
                "{name} grid contains non-finite values"
            )));
        }
        if let Some(w) = nodes.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::Curves(format!(
                "{name} grid must be strictly increasing ({} followed by {})",
                w[0], w[1]
            )));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.nodes[0]
    }

    pub fn max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.min() && x <= self.max()
    }

    /// Cell index `k` with `x` in `[x_k, x_{k+1}]`. A value sitting on an
    /// interior node belongs to the cell above it.
    fn cell(&self, x: f64) -> usize {
        let k = self.nodes.partition_point(|&g| g <= x);
        k.saturating_sub(1).min(self.nodes.len() - 2)
    }

    /// Cell index and local coordinate in `[0, 1]`.
    fn locate(&self, x: f64) -> (usize, f64) {
        let k = self.cell(x);
        let (lo, hi) = (self.nodes[k], self.nodes[k + 1]);
        (k, (x - lo) / (hi - lo))
    }

    fn same_cell(&self, a: f64, b: f64) -> bool {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let k = self.cell(lo);
        hi <= self.nodes[k + 1]
    }
}

/// Tabulated `W_H`/`W_B` surfaces on a rectangular grid with multilinear
/// interpolation. Values are stored row-major with theta outermost, then y,
/// then beta (Kaplan).
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicCurveSet {
    kind: TurbineKind,
    theta: GridAxis,
    y: GridAxis,
    beta: Option<GridAxis>,
    wh: Vec<f64>,
    wb: Vec<f64>,
    rated: RatedValues,
}

impl CharacteristicCurveSet {
    pub fn new(
        kind: TurbineKind,
        theta: Vec<f64>,
        y: Vec<f64>,
        beta: Option<Vec<f64>>,
        wh: Vec<f64>,
        wb: Vec<f64>,
        rated: RatedValues,
    ) -> Result<Self> {
        rated.validate()?;
        let theta = GridAxis::new("theta", theta)?;
        let y = GridAxis::new("y", y)?;
        let beta = match (kind, beta) {
            (TurbineKind::Kaplan, Some(b)) => Some(GridAxis::new("beta", b)?),
            (TurbineKind::Kaplan, None) => {
                return Err(Error::Curves("Kaplan curves need a beta grid".into()))
            }
            (TurbineKind::Francis, Some(_)) => {
                return Err(Error::Curves(
                    "Francis curves must not carry a beta grid".into(),
                ))
            }
            (TurbineKind::Francis, None) => None,
        };
        let expected = theta.len() * y.len() * beta.as_ref().map_or(1, GridAxis::len);
        for (name, v) in [("WH", &wh), ("WB", &wb)] {
            if v.len() != expected {
                return Err(Error::Curves(format!(
                    "{name} has {} values but the grid has {expected} nodes",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Curves(format!("{name} contains non-finite values")));
            }
        }
        if let Some(i) = wh.iter().position(|&v| v <= 0.0) {
            return Err(Error::Curves(format!(
                "WH must be positive on the whole grid (node {i} has {})",
                wh[i]
            )));
        }
        Ok(Self {
            kind,
            theta,
            y,
            beta,
            wh,
            wb,
            rated,
        })
    }

    pub fn theta_axis(&self) -> &GridAxis {
        &self.theta
    }

    pub fn y_axis(&self) -> &GridAxis {
        &self.y
    }

    pub fn beta_axis(&self) -> Option<&GridAxis> {
        self.beta.as_ref()
    }

    pub fn wh_values(&self) -> &[f64] {
        &self.wh
    }

    pub fn wb_values(&self) -> &[f64] {
        &self.wb
    }

    fn nb(&self) -> usize {
        self.beta.as_ref().map_or(1, GridAxis::len)
    }

    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.y.len() + j) * self.nb() + k
    }

    fn check(&self, theta: f64, y: f64, beta: Option<f64>) -> Result<Option<f64>> {
        let beta = require_beta(self.kind, beta)?;
        let inside = self.theta.contains(theta)
            && self.y.contains(y)
            && match (&self.beta, beta) {
                (Some(ax), Some(b)) => ax.contains(b),
                _ => true,
            };
        if inside {
            Ok(beta)
        } else {
            Err(Error::OutOfDomain { theta, y, beta })
        }
    }

    fn interp(&self, values: &[f64], theta: f64, y: f64, beta: Option<f64>) -> f64 {
        let (i, ti) = self.theta.locate(theta);
        let (j, tj) = self.y.locate(y);
        match (&self.beta, beta) {
            (Some(ax), Some(b)) => {
                let (k, tk) = ax.locate(b);
                let plane = |kk: usize| {
                    let v00 = values[self.index(i, j, kk)];
                    let v01 = values[self.index(i, j + 1, kk)];
                    let v10 = values[self.index(i + 1, j, kk)];
                    let v11 = values[self.index(i + 1, j + 1, kk)];
                    bilerp(v00, v01, v10, v11, ti, tj)
                };
                lerp(plane(k), plane(k + 1), tk)
            }
            _ => {
                let v00 = values[self.index(i, j, 0)];
                let v01 = values[self.index(i, j + 1, 0)];
                let v10 = values[self.index(i + 1, j, 0)];
                let v11 = values[self.index(i + 1, j + 1, 0)];
                bilerp(v00, v01, v10, v11, ti, tj)
            }
        }
    }
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    // exact at t = 0 and t = 1
    (1.0 - t) * a + t * b
}

#[inline]
fn bilerp(v00: f64, v01: f64, v10: f64, v11: f64, ti: f64, tj: f64) -> f64 {
    lerp(lerp(v00, v01, tj), lerp(v10, v11, tj), ti)
}

impl HillChart for CharacteristicCurveSet {
    fn kind(&self) -> TurbineKind {
        self.kind
    }

    fn rated(&self) -> &RatedValues {
        &self.rated
    }

    fn wh(&self, theta: f64, y: f64, beta: Option<f64>) -> Result<f64> {
        let beta = self.check(theta, y, beta)?;
        Ok(self.interp(&self.wh, theta, y, beta))
    }

    fn wb(&self, theta: f64, y: f64, beta: Option<f64>) -> Result<f64> {
        let beta = self.check(theta, y, beta)?;
        Ok(self.interp(&self.wb, theta, y, beta))
    }

    fn same_cell(&self, a: CurvePoint, b: CurvePoint) -> bool {
        let beta_same = match (&self.beta, a.beta, b.beta) {
            (Some(ax), Some(ba), Some(bb)) => ax.same_cell(ba, bb),
            _ => true,
        };
        self.theta.same_cell(a.theta, b.theta) && self.y.same_cell(a.y, b.y) && beta_same
    }
}
