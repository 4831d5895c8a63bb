//! Turbine characteristic curves in polar form.
//!
//! Hill charts are stored as two dimensionless surfaces over the polar angle
//! `theta = atan2(Q/Q_bep, N/N_bep)` and the controllable openings:
//!
//! ```text
//! W_H(theta, y[, beta]) = (H_t / H_bep) / ((Q/Q_bep)^2 + (N/N_bep)^2)
//! W_B(theta, y[, beta]) = (T_t / T_n)   / ((Q/Q_bep)^2 + (N/N_bep)^2)
//! ```
//!
//! Inverting these gives the turbine head and torque as functions of the
//! discharge, the rotational speed (rpm) and the openings. Any surface
//! implementing [`HillChart`] can drive the plant model: tabulated grids
//! ([`CharacteristicCurveSet`]), the closed-form [`SyntheticCurves`], or
//! test-only surfaces.

mod csv_io;
mod grid;
mod oncam;
mod synthetic;

pub use csv_io::{read_curve_csv, write_curve_csv};
pub use grid::{CharacteristicCurveSet, GridAxis};
pub use oncam::OnCamTable;
pub use synthetic::{AnalyticPartials, SyntheticCurves, SyntheticDomain};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TurbineKind {
    Francis,
    Kaplan,
}

impl TurbineKind {
    pub fn has_blade_pitch(self) -> bool {
        matches!(self, TurbineKind::Kaplan)
    }
}

impl std::fmt::Display for TurbineKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TurbineKind::Francis => f.write_str("francis"),
            TurbineKind::Kaplan => f.write_str("kaplan"),
        }
    }
}

/// Reference values used for per-unit scaling of the hill chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatedValues {
    /// Discharge at the best efficiency point (m³/s).
    pub q_bep: f64,
    /// Rotational speed at the best efficiency point (rpm).
    pub n_bep: f64,
    /// Turbine head at the best efficiency point (m).
    pub h_bep: f64,
    /// Nominal torque (N·m).
    pub t_n: f64,
    /// Nominal head (m).
    pub h_n: f64,
    /// Runner reference diameter (m).
    pub d_n: f64,
}

impl RatedValues {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("q_bep", self.q_bep),
            ("n_bep", self.n_bep),
            ("h_bep", self.h_bep),
            ("t_n", self.t_n),
            ("h_n", self.h_n),
            ("d_n", self.d_n),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!(
                    "rated value {name} must be strictly positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Similarity-scaled turbine quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitVariables {
    pub n11: f64,
    pub q11: f64,
    pub t11: f64,
}

/// Unit speed, discharge and torque factors for a runner of diameter `d_n`.
pub fn unit_variables(q_t: f64, n: f64, h_t: f64, d_n: f64, t_t: f64) -> Result<UnitVariables> {
    if !(h_t > 0.0) {
        return Err(Error::Domain(format!(
            "unit variables need a positive head, got {h_t}"
        )));
    }
    if !(d_n > 0.0) {
        return Err(Error::Domain(format!(
            "runner diameter must be positive, got {d_n}"
        )));
    }
    let sqrt_h = h_t.sqrt();
    Ok(UnitVariables {
        n11: n * d_n / sqrt_h,
        q11: q_t / (d_n * d_n * sqrt_h),
        t11: t_t / (d_n * d_n * h_t),
    })
}

/// Polar angle of the per-unit (discharge, speed) pair, in (-π, π].
pub fn polar_angle(q_norm: f64, n_norm: f64) -> Result<f64> {
    if q_norm == 0.0 && n_norm == 0.0 {
        return Err(Error::DegenerateOrigin);
    }
    Ok(q_norm.atan2(n_norm))
}

/// A pair of polar characteristic surfaces.
pub trait HillChart: Send + Sync {
    fn kind(&self) -> TurbineKind;

    fn rated(&self) -> &RatedValues;

    /// Head surface `W_H`. Kaplan surfaces require `beta`; Francis ignores it.
    fn wh(&self, theta: f64, y: f64, beta: Option<f64>) -> Result<f64>;

    /// Torque surface `W_B`.
    fn wb(&self, theta: f64, y: f64, beta: Option<f64>) -> Result<f64>;

    /// Both surfaces at once.
    fn w(&self, theta: f64, y: f64, beta: Option<f64>) -> Result<(f64, f64)> {
        Ok((self.wh(theta, y, beta)?, self.wb(theta, y, beta)?))
    }

    /// Whether two query points lie in one interpolation cell, i.e. the
    /// surfaces are smooth on the segment joining them. Analytic surfaces
    /// are smooth everywhere.
    fn same_cell(&self, _a: CurvePoint, _b: CurvePoint) -> bool {
        true
    }
}

/// A query point in surface coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub theta: f64,
    pub y: f64,
    pub beta: Option<f64>,
}

/// Turbine operating condition in physical units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurbineState {
    /// Discharge (m³/s).
    pub q: f64,
    /// Rotational speed (rpm).
    pub n: f64,
    /// Guide-vane opening (pu).
    pub y: f64,
    /// Blade pitch (pu), Kaplan only.
    pub beta: Option<f64>,
}

impl TurbineState {
    pub fn new(q: f64, n: f64, y: f64, beta: Option<f64>) -> Self {
        Self { q, n, y, beta }
    }

    /// Polar coordinates and the quadratic scale factor `(q/q_bep)^2 + (n/n_bep)^2`.
    pub fn polar(&self, rated: &RatedValues) -> Result<(CurvePoint, f64)> {
        let qn = self.q / rated.q_bep;
        let nn = self.n / rated.n_bep;
        let theta = polar_angle(qn, nn)?;
        Ok((
            CurvePoint {
                theta,
                y: self.y,
                beta: self.beta,
            },
            qn * qn + nn * nn,
        ))
    }
}

/// Turbine head (m) obtained by inverting the `W_H` surface.
pub fn turbine_head<C: HillChart + ?Sized>(curves: &C, op: TurbineState) -> Result<f64> {
    let rated = curves.rated();
    let (p, r2) = op.polar(rated)?;
    Ok(rated.h_bep * curves.wh(p.theta, p.y, p.beta)? * r2)
}

/// Turbine torque (N·m) obtained by inverting the `W_B` surface.
pub fn turbine_torque<C: HillChart + ?Sized>(curves: &C, op: TurbineState) -> Result<f64> {
    let rated = curves.rated();
    let (p, r2) = op.polar(rated)?;
    Ok(rated.t_n * curves.wb(p.theta, p.y, p.beta)? * r2)
}

/// Head and torque with a single surface lookup.
pub fn turbine_head_torque<C: HillChart + ?Sized>(
    curves: &C,
    op: TurbineState,
) -> Result<(f64, f64)> {
    let rated = curves.rated();
    let (p, r2) = op.polar(rated)?;
    let (wh, wb) = curves.w(p.theta, p.y, p.beta)?;
    Ok((rated.h_bep * wh * r2, rated.t_n * wb * r2))
}

/// Either a tabulated or a closed-form curve source, as selected by a plant
/// configuration.
#[derive(Debug, Clone)]
pub enum Curves {
    Tabulated(CharacteristicCurveSet),
    Synthetic(SyntheticCurves),
}

impl HillChart for Curves {
    fn kind(&self) -> TurbineKind {
        match self {
            Curves::Tabulated(c) => c.kind(),
            Curves::Synthetic(c) => c.kind(),
        }
    }

    fn rated(&self) -> &RatedValues {
        match self {
            Curves::Tabulated(c) => c.rated(),
            Curves::Synthetic(c) => c.rated(),
        }
    }

    fn wh(&self, theta: f64, y: f64, beta: Option<f64>) -> Result<f64> {
        match self {
            Curves::Tabulated(c) => c.wh(theta, y, beta),
            Curves::Synthetic(c) => c.wh(theta, y, beta),
        }
    }

    fn wb(&self, theta: f64, y: f64, beta: Option<f64>) -> Result<f64> {
        match self {
            Curves::Tabulated(c) => c.wb(theta, y, beta),
            Curves::Synthetic(c) => c.wb(theta, y, beta),
        }
    }

    fn w(&self, theta: f64, y: f64, beta: Option<f64>) -> Result<(f64, f64)> {
        match self {
            Curves::Tabulated(c) => c.w(theta, y, beta),
            Curves::Synthetic(c) => c.w(theta, y, beta),
        }
    }

    fn same_cell(&self, a: CurvePoint, b: CurvePoint) -> bool {
        match self {
            Curves::Tabulated(c) => c.same_cell(a, b),
            Curves::Synthetic(c) => c.same_cell(a, b),
        }
    }
}

pub(crate) fn require_beta(kind: TurbineKind, beta: Option<f64>) -> Result<Option<f64>> {
    match (kind, beta) {
        (TurbineKind::Kaplan, None) => Err(Error::Domain(
            "Kaplan surfaces need a blade pitch".to_string(),
        )),
        (TurbineKind::Kaplan, b) => Ok(b),
        (TurbineKind::Francis, _) => Ok(None),
    }
}
