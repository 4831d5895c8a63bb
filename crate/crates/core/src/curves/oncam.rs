use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Blade-pitch coordination law `beta = f(y)` of a double-regulated turbine,
/// interpolated piecewise-linearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawOnCam", into = "RawOnCam")]
pub struct OnCamTable {
    y_points: Vec<f64>,
    beta_points: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawOnCam {
    y: Vec<f64>,
    beta: Vec<f64>,
}

impl TryFrom<RawOnCam> for OnCamTable {
    type Error = Error;

    fn try_from(raw: RawOnCam) -> Result<Self> {
        OnCamTable::new(raw.y, raw.beta)
    }
}

impl From<OnCamTable> for RawOnCam {
    fn from(t: OnCamTable) -> Self {
        RawOnCam {
            y: t.y_points,
            beta: t.beta_points,
        }
    }
}

impl OnCamTable {
    pub fn new(y_points: Vec<f64>, beta_points: Vec<f64>) -> Result<Self> {
        if y_points.len() != beta_points.len() {
            return Err(Error::Config(format!(
                "on-cam table: {} y points but {} beta points",
                y_points.len(),
                beta_points.len()
            )));
        }
        if y_points.len() < 2 {
            return Err(Error::Config("on-cam table needs at least 2 points".into()));
        }
        if y_points.iter().chain(&beta_points).any(|v| !v.is_finite()) {
            return Err(Error::Config(
                "on-cam table contains non-finite values".into(),
            ));
        }
        if y_points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "on-cam y points must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            y_points,
            beta_points,
        })
    }

    pub fn y_points(&self) -> &[f64] {
        &self.y_points
    }

    pub fn beta_points(&self) -> &[f64] {
        &self.beta_points
    }

    pub fn y_range(&self) -> (f64, f64) {
        (self.y_points[0], self.y_points[self.y_points.len() - 1])
    }

    pub fn beta(&self, y: f64) -> Result<f64> {
        let (lo, hi) = self.y_range();
        if !(y >= lo && y <= hi) {
            return Err(Error::Domain(format!(
                "guide-vane opening {y} outside the on-cam table [{lo}, {hi}]"
            )));
        }
        let k = self
            .y_points
            .partition_point(|&p| p <= y)
            .saturating_sub(1)
            .min(self.y_points.len() - 2);
        let (y0, y1) = (self.y_points[k], self.y_points[k + 1]);
        let (b0, b1) = (self.beta_points[k], self.beta_points[k + 1]);
        let t = (y - y0) / (y1 - y0);
        Ok((1.0 - t) * b0 + t * b1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn knots_and_midpoints() {
        let t = OnCamTable::new(vec![0.0, 0.5, 1.0], vec![0.1, 0.2, 0.4]).unwrap();
        assert_eq!(t.beta(0.5).unwrap(), 0.2);
        assert_eq!(t.beta(1.0).unwrap(), 0.4);
        assert_eq!(t.beta(0.0).unwrap(), 0.1);
        assert!((t.beta(0.75).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_is_an_error() {
        let t = OnCamTable::new(vec![0.1, 1.0], vec![0.1, 0.9]).unwrap();
        assert!(matches!(t.beta(0.05), Err(Error::Domain(_))));
        assert!(t.beta(1.01).is_err());
    }

    #[test]
    fn rejects_malformed_tables() {
        assert!(OnCamTable::new(vec![0.0], vec![0.0]).is_err());
        assert!(OnCamTable::new(vec![0.0, 1.0], vec![0.0]).is_err());
        assert!(OnCamTable::new(vec![0.0, 0.0], vec![0.1, 0.2]).is_err());
    }

    /// Independent re-implementation: scan segments linearly.
    fn reference(ys: &[f64], bs: &[f64], y: f64) -> f64 {
        for i in 0..ys.len() - 1 {
            if y <= ys[i + 1] {
                return bs[i] + (bs[i + 1] - bs[i]) * (y - ys[i]) / (ys[i + 1] - ys[i]);
            }
        }
        unreachable!()
    }

    #[test]
    fn dense_sweep_matches_reference() {
        let ys = vec![0.0, 0.15, 0.3, 0.55, 0.8, 1.0];
        let bs = vec![0.05, 0.1, 0.32, 0.5, 0.71, 0.9];
        let t = OnCamTable::new(ys.clone(), bs.clone()).unwrap();
        for i in 0..=10_000 {
            let y = i as f64 / 10_000.0;
            assert!((t.beta(y).unwrap() - reference(&ys, &bs, y)).abs() < 1e-12);
        }
    }
}
