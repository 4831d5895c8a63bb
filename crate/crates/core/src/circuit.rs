//! Equivalent-circuit model of penstock, turbine and rotor.
//!
//! The penstock of length `l` is split into `n` identical elements of length
//! `dx = l/n`. Each element carries a capacitor (mid-element head
//! `h_{i+1/2}`) between two half-inductors of `L/2` and two half-resistors of
//! `R/2`. Adjacent half-elements share one discharge branch, so the chain has
//! `n + 1` discharge branches:
//!
//! ```text
//! H_r --[L/2]-- h_1 --[L]-- h_2 -- ... -- h_n --[L/2]-- (H_t + H_d)
//!        Q_1          Q_2                       Q_{n+1} = Q_t
//! ```
//!
//! The terminal branches couple with `2/L`, interior branches with `1/L`,
//! and every branch is damped by `R(Q_i)/L`. For `n = 1` this is the
//! single-element circuit with state `[Q_1, Q_t, h, omega]`.
//!
//! The state vector layout is `[Q_1 .. Q_{n+1}, h_1 .. h_n, omega]` with
//! discharges in m³/s, heads in m and angular speed in rad/s; conversion to
//! rpm happens only at the hill-chart interface.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::curves::{
    turbine_head_torque, HillChart, OnCamTable, RatedValues, TurbineKind, TurbineState,
};
use crate::error::{Error, Result};

/// rad/s -> rpm
pub const RAD_S_TO_RPM: f64 = 60.0 / (2.0 * std::f64::consts::PI);

/// Physical and rated parameters of one plant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlantConfig {
    pub name: String,
    pub kind: TurbineKind,
    /// Reservoir head `H_r` (m).
    pub reservoir_head: f64,
    /// Downstream head `H_d` (m).
    pub downstream_head: f64,
    /// Penstock length `l` (m).
    pub length: f64,
    /// Number of penstock elements `n`.
    pub elements: usize,
    /// Pipe diameter `D` (m).
    pub diameter: f64,
    /// Pipe cross-section `A` (m²).
    pub area: f64,
    /// Darcy-Weisbach friction coefficient `lambda`.
    pub friction: f64,
    /// Wave speed `a` (m/s).
    pub wave_speed: f64,
    /// Gravity `g` (m/s²).
    pub gravity: f64,
    /// Rotating inertia `J` (kg·m²).
    pub inertia: f64,
    pub rated: RatedValues,
    /// Guide-vane operating range `[y_min, y_max]` (pu).
    pub y_range: [f64; 2],
    /// Synchronous speed used for operating points (rpm).
    pub sync_speed: f64,
    pub on_cam: Option<OnCamTable>,
}

impl PlantConfig {
    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(m));
        if self.elements < 1 {
            return err(format!("n ≥ 1 required (elements = {})", self.elements));
        }
        let positive = [
            ("reservoir_head", self.reservoir_head),
            ("length", self.length),
            ("diameter", self.diameter),
            ("area", self.area),
            ("wave_speed", self.wave_speed),
            ("gravity", self.gravity),
            ("inertia", self.inertia),
            ("sync_speed", self.sync_speed),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return err(format!("{name} must be strictly positive, got {v}"));
            }
        }
        if !(self.friction.is_finite() && self.friction >= 0.0) {
            return err(format!(
                "friction must be non-negative, got {}",
                self.friction
            ));
        }
        if !(self.downstream_head.is_finite() && self.downstream_head >= 0.0) {
            return err(format!(
                "downstream_head must be non-negative, got {}",
                self.downstream_head
            ));
        }
        if !(self.reservoir_head - self.downstream_head > 0.0) {
            return err(format!(
                "net head H_r - H_d must be positive, got {}",
                self.reservoir_head - self.downstream_head
            ));
        }
        let [lo, hi] = self.y_range;
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return err(format!("0 ≤ y_min < y_max ≤ 1 required, got [{lo}, {hi}]"));
        }
        self.rated.validate()?;
        match (self.kind, &self.on_cam) {
            (TurbineKind::Kaplan, None) => return err("Kaplan plants need an on-cam table".into()),
            (TurbineKind::Kaplan, Some(t)) => {
                let (a, b) = t.y_range();
                if a > lo || b < hi {
                    return err(format!(
                        "on-cam table [{a}, {b}] does not cover the operating range [{lo}, {hi}]"
                    ));
                }
            }
            (TurbineKind::Francis, Some(_)) => {
                return err("Francis plants take no on-cam table".into())
            }
            (TurbineKind::Francis, None) => {}
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        self.length / self.elements as f64
    }

    pub fn net_head(&self) -> f64 {
        self.reservoir_head - self.downstream_head
    }

    pub fn layout(&self) -> StateLayout {
        StateLayout::new(self.elements)
    }

    /// Inductance of one element, `L = dx/(g A)`.
    pub fn inductance(&self) -> f64 {
        self.dx() / (self.gravity * self.area)
    }

    /// Capacitance of one element, `C = g A dx / a²`.
    pub fn capacitance(&self) -> f64 {
        self.gravity * self.area * self.dx() / (self.wave_speed * self.wave_speed)
    }

    /// `R(Q) = friction_factor * |Q|`.
    pub fn friction_factor(&self) -> f64 {
        self.friction * self.dx() / (2.0 * self.gravity * self.diameter * self.area * self.area)
    }

    /// Blade pitch for an opening, following the on-cam law (Kaplan only).
    pub fn on_cam_beta(&self, y: f64) -> Result<Option<f64>> {
        match &self.on_cam {
            Some(t) => t.beta(y).map(Some),
            None => Ok(None),
        }
    }

    /// Head drop over the whole penstock at a uniform discharge.
    pub fn static_losses(&self, q: f64) -> f64 {
        self.elements as f64 * self.friction_factor() * q.abs() * q
    }

    pub fn sync_omega(&self) -> f64 {
        self.sync_speed / RAD_S_TO_RPM
    }
}

/// Hydroacoustic resistance, inductance and capacitance of one element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RlcParams {
    pub r: f64,
    pub l: f64,
    pub c: f64,
    pub dx: f64,
}

pub fn rlc_params(cfg: &PlantConfig, q: f64) -> RlcParams {
    RlcParams {
        r: cfg.friction_factor() * q.abs(),
        l: cfg.inductance(),
        c: cfg.capacitance(),
        dx: cfg.dx(),
    }
}

/// Index map of the `2n + 2` state vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateLayout {
    n: usize,
}

impl StateLayout {
    pub fn new(elements: usize) -> Self {
        Self { n: elements }
    }

    pub fn elements(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n + 2
    }

    /// Index of discharge branch `i` (0-based, `0..=n`).
    pub fn q(&self, i: usize) -> usize {
        i
    }

    /// Index of mid-element head `j` (0-based, `0..n`).
    pub fn h(&self, j: usize) -> usize {
        self.n + 1 + j
    }

    pub fn turbine_q(&self) -> usize {
        self.n
    }

    pub fn omega(&self) -> usize {
        2 * self.n + 1
    }

    pub fn heads<'a>(&self, x: &'a [f64]) -> &'a [f64] {
        &x[self.n + 1..2 * self.n + 1]
    }

    pub fn discharges<'a>(&self, x: &'a [f64]) -> &'a [f64] {
        &x[..self.n + 1]
    }

    /// Whether branch `i` is a terminal (half-element) branch.
    pub fn is_terminal(&self, i: usize) -> bool {
        i == 0 || i == self.n
    }

    /// Inductance of branch `i` in units of the element inductance `L`.
    pub fn branch_inductance(&self, i: usize) -> f64 {
        if self.is_terminal(i) {
            0.5
        } else {
            1.0
        }
    }

    /// Arithmetic mean of the mid-element heads.
    pub fn head_avg(&self, x: &[f64]) -> f64 {
        let h = self.heads(x);
        h.iter().sum::<f64>() / h.len() as f64
    }

    pub fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// Exogenous inputs of the nonlinear plant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantInput {
    /// Guide-vane opening (pu).
    pub y: f64,
    /// Blade pitch (pu), Kaplan only.
    pub beta: Option<f64>,
    /// Electrical torque (N·m).
    pub t_el: f64,
}

/// How the branch resistances are evaluated.
#[derive(Debug, Clone, Copy)]
pub enum Friction<'a> {
    /// `R(Q_i)` at the instantaneous discharge.
    Instantaneous,
    /// Resistances frozen per branch.
    Frozen(&'a [f64]),
}

/// State matrix `A(x)` of the hydraulic circuit (turbine enters through `B u`).
pub fn assemble_a(cfg: &PlantConfig, x: &[f64]) -> Result<DMatrix<f64>> {
    let lay = cfg.layout();
    lay.check(x)?;
    let k = cfg.friction_factor();
    let r: Vec<f64> = lay.discharges(x).iter().map(|q| k * q.abs()).collect();
    Ok(assemble_a_with(cfg, &r))
}

/// State matrix with explicitly given branch resistances.
pub fn assemble_a_with(cfg: &PlantConfig, r: &[f64]) -> DMatrix<f64> {
    let lay = cfg.layout();
    let n = lay.elements();
    let l = cfg.inductance();
    let c = cfg.capacitance();
    let mut a = DMatrix::zeros(lay.dim(), lay.dim());
    for i in 0..=n {
        a[(lay.q(i), lay.q(i))] = -r[i] / l;
        let g = 1.0 / (lay.branch_inductance(i) * l);
        if i > 0 {
            a[(lay.q(i), lay.h(i - 1))] = g;
        }
        if i < n {
            a[(lay.q(i), lay.h(i))] = -g;
        }
    }
    for j in 0..n {
        a[(lay.h(j), lay.q(j))] = 1.0 / c;
        a[(lay.h(j), lay.q(j + 1))] = -1.0 / c;
    }
    a
}

/// Input matrix `B` for `u = [H_r, H_t + H_d, T_t - T_el]`.
pub fn assemble_b(cfg: &PlantConfig) -> DMatrix<f64> {
    let lay = cfg.layout();
    let l = cfg.inductance();
    let mut b = DMatrix::zeros(lay.dim(), 3);
    b[(lay.q(0), 0)] = 2.0 / l;
    b[(lay.turbine_q(), 1)] = -2.0 / l;
    b[(lay.omega(), 2)] = 1.0 / cfg.inertia;
    b
}

/// Turbine operating condition read off a state vector.
pub fn turbine_state(cfg: &PlantConfig, x: &[f64], input: &PlantInput) -> TurbineState {
    let lay = cfg.layout();
    TurbineState::new(
        x[lay.turbine_q()],
        x[lay.omega()] * RAD_S_TO_RPM,
        input.y,
        input.beta,
    )
}

/// Nonlinear right-hand side `dx/dt = A(x) x + B u(Q_t, N, y)`.
pub fn nonlinear_rhs<C: HillChart + ?Sized>(
    cfg: &PlantConfig,
    curves: &C,
    x: &[f64],
    input: &PlantInput,
) -> Result<Vec<f64>> {
    let mut dx = vec![0.0; x.len()];
    rhs_into(cfg, curves, x, input, Friction::Instantaneous, &mut dx)?;
    Ok(dx)
}

/// Right-hand side with the branch resistances frozen at given values.
pub fn nonlinear_rhs_frozen<C: HillChart + ?Sized>(
    cfg: &PlantConfig,
    curves: &C,
    x: &[f64],
    input: &PlantInput,
    r: &[f64],
) -> Result<Vec<f64>> {
    let mut dx = vec![0.0; x.len()];
    rhs_into(cfg, curves, x, input, Friction::Frozen(r), &mut dx)?;
    Ok(dx)
}

/// In-place right-hand side; returns turbine head and torque.
pub fn rhs_into<C: HillChart + ?Sized>(
    cfg: &PlantConfig,
    curves: &C,
    x: &[f64],
    input: &PlantInput,
    friction: Friction<'_>,
    dx: &mut [f64],
) -> Result<(f64, f64)> {
    let lay = cfg.layout();
    lay.check(x)?;
    let n = lay.elements();
    let (h_t, t_t) = turbine_head_torque(curves, turbine_state(cfg, x, input))?;
    hydraulic_rhs(cfg, x, h_t, friction, dx);
    dx[lay.omega()] = (t_t - input.t_el) / cfg.inertia;
    debug_assert_eq!(dx.len(), 2 * n + 2);
    Ok((h_t, t_t))
}

/// Hydraulic rows given the turbine head; leaves the speed row untouched.
pub(crate) fn hydraulic_rhs(
    cfg: &PlantConfig,
    x: &[f64],
    h_t: f64,
    friction: Friction<'_>,
    dx: &mut [f64],
) {
    let lay = cfg.layout();
    let n = lay.elements();
    let inv_l = 1.0 / cfg.inductance();
    let inv_c = 1.0 / cfg.capacitance();
    let k = cfg.friction_factor();
    let q = lay.discharges(x);
    let h = lay.heads(x);
    for i in 0..=n {
        let upstream = if i == 0 { cfg.reservoir_head } else { h[i - 1] };
        let downstream = if i == n {
            h_t + cfg.downstream_head
        } else {
            h[i]
        };
        let r = match friction {
            Friction::Instantaneous => k * q[i].abs(),
            Friction::Frozen(r) => r[i],
        };
        let g = if lay.is_terminal(i) { 2.0 } else { 1.0 };
        dx[lay.q(i)] = g * inv_l * (upstream - downstream) - r * inv_l * q[i];
    }
    for j in 0..n {
        dx[lay.h(j)] = inv_c * (q[j] - q[j + 1]);
    }
}
