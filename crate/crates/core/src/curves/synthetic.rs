use serde::{Deserialize, Serialize};

use super::{
    require_beta, CharacteristicCurveSet, HillChart, RatedValues, TurbineKind, TurbineState,
};
use crate::error::{Error, Result};

/// Bounding box on which the closed-form surfaces are declared valid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDomain {
    pub theta: [f64; 2],
    pub y: [f64; 2],
    #[serde(default)]
    pub beta: Option<[f64; 2]>,
}

/// Deterministic closed-form hill chart.
///
/// With per-unit discharge `q`, speed `n` and an effective opening
/// `s = (y/y_bep)^(1-w) * ((beta+b0)/(beta_bep+b0))^w` (`w = 0` for Francis):
///
/// ```text
/// H_t / H_bep = a(s) q^2 + b n^2           a(s) = (1 - b) / s^2
/// T_t / T_n   = alpha(s) q^2 - gamma q n   alpha(s) = (1 + gamma) / s^p
/// ```
///
/// which in polar form reads
///
/// ```text
/// W_H = a sin^2(theta) + b cos^2(theta)
/// W_B = sin(theta) (alpha sin(theta) - gamma cos(theta))
/// ```
///
/// At the best efficiency point (`theta = pi/4`, `s = 1`) both surfaces equal
/// one half, so head and torque reproduce `H_bep` and `T_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCurves {
    pub kind: TurbineKind,
    pub rated: RatedValues,
    /// Guide-vane opening at the best efficiency point (pu).
    pub y_bep: f64,
    /// Blade pitch at the best efficiency point (pu), Kaplan only.
    #[serde(default)]
    pub beta_bep: Option<f64>,
    /// Speed contribution to the head, `b` in (0, 1).
    pub head_speed: f64,
    /// Speed coefficient of the torque, `gamma` > 0.
    pub torque_speed: f64,
    /// Opening exponent `p` of the torque coefficient.
    pub torque_opening_exp: f64,
    /// Share `w` of the blade pitch in the effective opening, Kaplan only.
    #[serde(default)]
    pub pitch_weight: f64,
    /// Offset `b0` keeping the pitch factor positive at zero pitch.
    #[serde(default)]
    pub pitch_offset: f64,
    pub domain: SyntheticDomain,
}

/// Closed-form partial derivatives of turbine head and torque in physical
/// units (per m³/s, per rpm, per pu).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AnalyticPartials {
    pub dh_dq: f64,
    pub dh_dn: f64,
    pub dh_dy: f64,
    pub dh_dbeta: f64,
    pub dt_dq: f64,
    pub dt_dn: f64,
    pub dt_dy: f64,
    pub dt_dbeta: f64,
}

impl SyntheticCurves {
    pub fn validate(&self) -> Result<()> {
        self.rated.validate()?;
        let bad = |m: String| Err(Error::Curves(m));
        if !(self.y_bep > 0.0) {
            return bad(format!("y_bep must be positive, got {}", self.y_bep));
        }
        if !(self.head_speed > 0.0 && self.head_speed < 1.0) {
            return bad(format!(
                "head_speed must lie in (0, 1), got {}",
                self.head_speed
            ));
        }
        if !(self.torque_speed > 0.0) {
            return bad(format!(
                "torque_speed must be positive, got {}",
                self.torque_speed
            ));
        }
        if !self.torque_opening_exp.is_finite() {
            return bad("torque_opening_exp must be finite".into());
        }
        let d = &self.domain;
        for (name, r) in [("theta", d.theta), ("y", d.y)] {
            if !(r[0] < r[1]) {
                return bad(format!("{name} domain must be increasing, got {r:?}"));
            }
        }
        if !(d.y[0] > 0.0) {
            return bad("y domain must stay above zero".into());
        }
        match self.kind {
            TurbineKind::Francis => {
                if self.beta_bep.is_some() || d.beta.is_some() {
                    return bad("Francis curves take no blade pitch".into());
                }
            }
            TurbineKind::Kaplan => {
                let (Some(bb), Some(br)) = (self.beta_bep, d.beta) else {
                    return bad("Kaplan curves need beta_bep and a beta domain".into());
                };
                if !(br[0] < br[1]) {
                    return bad(format!("beta domain must be increasing, got {br:?}"));
                }
                if !(br[0] + self.pitch_offset > 0.0 && bb + self.pitch_offset > 0.0) {
                    return bad("beta + pitch_offset must stay positive".into());
                }
                if !(0.0..=1.0).contains(&self.pitch_weight) {
                    return bad(format!(
                        "pitch_weight must lie in [0, 1], got {}",
                        self.pitch_weight
                    ));
                }
            }
        }
        Ok(())
    }

    fn check(&self, theta: f64, y: f64, beta: Option<f64>) -> Result<Option<f64>> {
        let beta = require_beta(self.kind, beta)?;
        let d = &self.domain;
        let inside = (d.theta[0]..=d.theta[1]).contains(&theta)
            && (d.y[0]..=d.y[1]).contains(&y)
            && match (d.beta, beta) {
                (Some(r), Some(b)) => (r[0]..=r[1]).contains(&b),
                _ => true,
            };
        if inside {
            Ok(beta)
        } else {
            Err(Error::OutOfDomain { theta, y, beta })
        }
    }

    /// Effective opening and its partials with respect to y and beta.
    fn opening(&self, y: f64, beta: Option<f64>) -> (f64, f64, f64) {
        match (self.kind, beta, self.beta_bep) {
            (TurbineKind::Kaplan, Some(b), Some(bb)) => {
                let w = self.pitch_weight;
                let bp = b + self.pitch_offset;
                let s = (y / self.y_bep).powf(1.0 - w) * (bp / (bb + self.pitch_offset)).powf(w);
                (s, s * (1.0 - w) / y, s * w / bp)
            }
            _ => {
                let s = y / self.y_bep;
                (s, 1.0 / self.y_bep, 0.0)
            }
        }
    }

    fn coefficients(&self, y: f64, beta: Option<f64>) -> (f64, f64) {
        let (s, _, _) = self.opening(y, beta);
        (
            (1.0 - self.head_speed) / (s * s),
            (1.0 + self.torque_speed) / s.powf(self.torque_opening_exp),
        )
    }

    fn surfaces(&self, theta: f64, y: f64, beta: Option<f64>) -> (f64, f64) {
        let (a, alpha) = self.coefficients(y, beta);
        let (sn, cs) = theta.sin_cos();
        (
            a * sn * sn + self.head_speed * cs * cs,
            sn * (alpha * sn - self.torque_speed * cs),
        )
    }

    /// Closed-form head (m) straight from the physical-variable expression.
    pub fn analytic_head(&self, op: TurbineState) -> Result<f64> {
        let (p, _) = op.polar(&self.rated)?;
        self.check(p.theta, op.y, op.beta)?;
        let (a, _) = self.coefficients(op.y, op.beta);
        let q = op.q / self.rated.q_bep;
        let n = op.n / self.rated.n_bep;
        Ok(self.rated.h_bep * (a * q * q + self.head_speed * n * n))
    }

    /// Closed-form torque (N·m) straight from the physical-variable expression.
    pub fn analytic_torque(&self, op: TurbineState) -> Result<f64> {
        let (p, _) = op.polar(&self.rated)?;
        self.check(p.theta, op.y, op.beta)?;
        let (_, alpha) = self.coefficients(op.y, op.beta);
        let q = op.q / self.rated.q_bep;
        let n = op.n / self.rated.n_bep;
        Ok(self.rated.t_n * (alpha * q * q - self.torque_speed * q * n))
    }

    /// Exact partial derivatives of head and torque.
    pub fn analytic_partials(&self, op: TurbineState) -> Result<AnalyticPartials> {
        let (p, _) = op.polar(&self.rated)?;
        self.check(p.theta, op.y, op.beta)?;
        let r = &self.rated;
        let (s, ds_dy, ds_db) = self.opening(op.y, op.beta);
        let (a, alpha) = self.coefficients(op.y, op.beta);
        let q = op.q / r.q_bep;
        let n = op.n / r.n_bep;
        let b = self.head_speed;
        let g = self.torque_speed;
        let da_ds = -2.0 * a / s;
        let dalpha_ds = -self.torque_opening_exp * alpha / s;
        Ok(AnalyticPartials {
            dh_dq: r.h_bep * 2.0 * a * q / r.q_bep,
            dh_dn: r.h_bep * 2.0 * b * n / r.n_bep,
            dh_dy: r.h_bep * q * q * da_ds * ds_dy,
            dh_dbeta: r.h_bep * q * q * da_ds * ds_db,
            dt_dq: r.t_n * (2.0 * alpha * q - g * n) / r.q_bep,
            dt_dn: -r.t_n * g * q / r.n_bep,
            dt_dy: r.t_n * q * q * dalpha_ds * ds_dy,
            dt_dbeta: r.t_n * q * q * dalpha_ds * ds_db,
        })
    }

    /// Sample the surfaces on a rectangular grid.
    pub fn tabulate(
        &self,
        theta: &[f64],
        y: &[f64],
        beta: Option<&[f64]>,
    ) -> Result<CharacteristicCurveSet> {
        let betas: Vec<Option<f64>> = match beta {
            Some(b) => b.iter().copied().map(Some).collect(),
            None => vec![None],
        };
        let n = theta.len() * y.len() * betas.len();
        let mut wh = Vec::with_capacity(n);
        let mut wb = Vec::with_capacity(n);
        for &t in theta {
            for &yy in y {
                for &b in &betas {
                    let (h, tq) = self.w(t, yy, b)?;
                    wh.push(h);
                    wb.push(tq);
                }
            }
        }
        CharacteristicCurveSet::new(
            self.kind,
            theta.to_vec(),
            y.to_vec(),
            beta.map(<[f64]>::to_vec),
            wh,
            wb,
            self.rated,
        )
    }

    /// Tabulate with `points` evenly spaced nodes per axis over the domain.
    pub fn tabulate_uniform(&self, points: [usize; 3]) -> Result<CharacteristicCurveSet> {
        let d = &self.domain;
        let theta = linspace(d.theta[0], d.theta[1], points[0]);
        let y = linspace(d.y[0], d.y[1], points[1]);
        let beta = d.beta.map(|r| linspace(r[0], r[1], points[2]));
        self.tabulate(&theta, &y, beta.as_deref())
    }
}

pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

impl HillChart for SyntheticCurves {
    fn kind(&self) -> TurbineKind {
        self.kind
    }

    fn rated(&self) -> &RatedValues {
        &self.rated
    }

    fn wh(&self, theta: f64, y: f64, beta: Option<f64>) -> Result<f64> {
        let beta = self.check(theta, y, beta)?;
        Ok(self.surfaces(theta, y, beta).0)
    }

    fn wb(&self, theta: f64, y: f64, beta: Option<f64>) -> Result<f64> {
        let beta = self.check(theta, y, beta)?;
        Ok(self.surfaces(theta, y, beta).1)
    }

    fn w(&self, theta: f64, y: f64, beta: Option<f64>) -> Result<(f64, f64)> {
        let beta = self.check(theta, y, beta)?;
        Ok(self.surfaces(theta, y, beta))
    }
}
