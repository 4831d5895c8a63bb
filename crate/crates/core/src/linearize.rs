//! Linear time-invariant models around an operating point.
//!
//! The hydroacoustic resistances are frozen at their operating-point values,
//! which makes the circuit part linear. Turbine head and torque are replaced
//! by first-order Taylor expansions whose partials come from central
//! differences on the hill chart:
//!
//! ```text
//! H_t ≈ dH_Q Q_t + dH_N N + dH_y y [+ dH_b beta] + c_H
//! T_t ≈ dT_Q Q_t + dT_N N + dT_y y [+ dT_b beta] + c_T
//! ```
//!
//! Substituting into `dx/dt = A x + B u` yields `dx/dt = Ã x + B̃ ũ` with
//! `ũ = [H_r, y, c_H + H_d, c_T - T_el]` (Francis) or
//! `ũ = [H_r, y, beta, c_H + H_d, c_T - T_el]` (Kaplan, `c` including the
//! `-d_b beta_0` terms). Speed enters the hill chart in rpm; the conversion
//! from the rad/s state lives in the speed column of `Ã`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::circuit::{
    assemble_a_with, assemble_b, nonlinear_rhs, PlantConfig, PlantInput, StateLayout, RAD_S_TO_RPM,
};
use crate::curves::{turbine_head_torque, CurvePoint, HillChart, TurbineKind, TurbineState};
use crate::error::{Error, Result};
use crate::sim::{rate_norm, OperatingPoint};

/// Equilibrium tolerance (normalized, 1/s) accepted by the linearizers.
pub const EQUILIBRIUM_TOL: f64 = 1e-8;

/// Central difference `(f(x0 + eps) - f(x0 - eps)) / (2 eps)`.
pub fn central_diff<F>(mut f: F, x0: f64, eps: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(eps > 0.0) {
        return Err(Error::Domain(format!(
            "finite-difference step must be positive, got {eps}"
        )));
    }
    let plus = f(x0 + eps).map_err(|e| probe_err("x", x0 + eps, e))?;
    let minus = f(x0 - eps).map_err(|e| probe_err("x", x0 - eps, e))?;
    Ok((plus - minus) / (2.0 * eps))
}

fn probe_err(variable: &'static str, at: f64, e: Error) -> Error {
    Error::Probe {
        variable,
        at,
        source: Box::new(e),
    }
}

/// Finite-difference steps in physical units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Steps {
    /// Discharge step (m³/s).
    pub q: f64,
    /// Speed step (rpm).
    pub n: f64,
    /// Guide-vane step (pu).
    pub y: f64,
    /// Blade-pitch step (pu).
    pub beta: f64,
}

impl Steps {
    /// `1e-3 Q_bep`, `1e-3 N_bep`, `1e-3` pu.
    pub fn default_for(cfg: &PlantConfig) -> Self {
        Self {
            q: 1e-3 * cfg.rated.q_bep,
            n: 1e-3 * cfg.rated.n_bep,
            y: 1e-3,
            beta: 1e-3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("q", self.q),
            ("n", self.n),
            ("y", self.y),
            ("beta", self.beta),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!(
                    "finite-difference step {name} must be positive"
                )));
            }
        }
        Ok(())
    }
}

/// Which stencil produced a partial derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stencil {
    Central,
    Forward,
    Backward,
}

/// One partial derivative of head and torque with respect to a variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Partial {
    pub head: f64,
    pub torque: f64,
    pub eps: f64,
    pub stencil: Stencil,
}

/// Partials of turbine head and torque at an operating point. Units: per
/// m³/s, per rpm, per pu.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeBundle {
    pub q: Partial,
    pub n: Partial,
    pub y: Partial,
    pub beta: Option<Partial>,
}

impl DerivativeBundle {
    pub fn dh_dq(&self) -> f64 {
        self.q.head
    }
    pub fn dh_dn(&self) -> f64 {
        self.n.head
    }
    pub fn dh_dy(&self) -> f64 {
        self.y.head
    }
    pub fn dh_dbeta(&self) -> f64 {
        self.beta.map_or(0.0, |p| p.head)
    }
    pub fn dt_dq(&self) -> f64 {
        self.q.torque
    }
    pub fn dt_dn(&self) -> f64 {
        self.n.torque
    }
    pub fn dt_dy(&self) -> f64 {
        self.y.torque
    }
    pub fn dt_dbeta(&self) -> f64 {
        self.beta.map_or(0.0, |p| p.torque)
    }
}

#[derive(Clone, Copy)]
enum Var {
    Q,
    N,
    Y,
    Beta,
}

impl Var {
    fn name(self) -> &'static str {
        match self {
            Var::Q => "Q",
            Var::N => "N",
            Var::Y => "y",
            Var::Beta => "beta",
        }
    }

    fn get(self, s: &TurbineState) -> f64 {
        match self {
            Var::Q => s.q,
            Var::N => s.n,
            Var::Y => s.y,
            Var::Beta => s.beta.unwrap_or(0.0),
        }
    }

    fn with(self, mut s: TurbineState, v: f64) -> TurbineState {
        match self {
            Var::Q => s.q = v,
            Var::N => s.n = v,
            Var::Y => s.y = v,
            Var::Beta => s.beta = Some(v),
        }
        s
    }
}

fn point<C: HillChart + ?Sized>(curves: &C, s: &TurbineState) -> Result<CurvePoint> {
    Ok(s.polar(curves.rated())?.0)
}

/// Differentiate head and torque with respect to one variable, holding the
/// others fixed. Central differences are used when both probes share the
/// interpolation cell of the operating point's segment; otherwise a one-sided
/// stencil inside one cell. If no stencil works the step is shrunk tenfold once.
fn partial<C: HillChart + ?Sized>(
    curves: &C,
    at: TurbineState,
    var: Var,
    eps: f64,
) -> Result<Partial> {
    let x0 = var.get(&at);
    let center = point(curves, &at)?;
    let (h0, t0) = turbine_head_torque(curves, at)?;
    let mut last_err = None;
    for e in [eps, eps / 10.0] {
        let sp = var.with(at, x0 + e);
        let sm = var.with(at, x0 - e);
        let plus = point(curves, &sp).and_then(|p| Ok((p, turbine_head_torque(curves, sp)?)));
        let minus = point(curves, &sm).and_then(|p| Ok((p, turbine_head_torque(curves, sm)?)));
        match (&plus, &minus) {
            (Ok((pp, (hp, tp))), Ok((pm, (hm, tm)))) if curves.same_cell(*pm, *pp) => {
                return Ok(Partial {
                    head: (hp - hm) / (2.0 * e),
                    torque: (tp - tm) / (2.0 * e),
                    eps: e,
                    stencil: Stencil::Central,
                });
            }
            _ => {}
        }
        if let Ok((pp, (hp, tp))) = &plus {
            if curves.same_cell(center, *pp) {
                return Ok(Partial {
                    head: (hp - h0) / e,
                    torque: (tp - t0) / e,
                    eps: e,
                    stencil: Stencil::Forward,
                });
            }
        }
        if let Ok((pm, (hm, tm))) = &minus {
            if curves.same_cell(center, *pm) {
                return Ok(Partial {
                    head: (h0 - hm) / e,
                    torque: (t0 - tm) / e,
                    eps: e,
                    stencil: Stencil::Backward,
                });
            }
        }
        last_err = plus.err().or(minus.err()).map(|err| (x0 + e, err));
    }
    let (at_v, source) = last_err.unwrap_or((
        x0,
        Error::Domain("probes straddle interpolation cells on both sides".into()),
    ));
    Err(probe_err(var.name(), at_v, source))
}

/// Numerical partials of head and torque at the operating point.
pub fn derivative_bundle<C: HillChart + ?Sized>(
    curves: &C,
    at: TurbineState,
    steps: &Steps,
) -> Result<DerivativeBundle> {
    steps.validate()?;
    let beta = if curves.kind().has_blade_pitch() {
        if at.beta.is_none() {
            return Err(Error::Domain(
                "Kaplan operating point needs a blade pitch".into(),
            ));
        }
        Some(partial(curves, at, Var::Beta, steps.beta)?)
    } else {
        None
    };
    Ok(DerivativeBundle {
        q: partial(curves, at, Var::Q, steps.q)?,
        n: partial(curves, at, Var::N, steps.n)?,
        y: partial(curves, at, Var::Y, steps.y)?,
        beta,
    })
}

/// Sparse row storage used by the LTI right-hand side.
#[derive(Debug, Clone, PartialEq, Default)]
struct SparseRows {
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseRows {
    fn from_dense(m: &DMatrix<f64>) -> Self {
        let rows = (0..m.nrows())
            .map(|i| {
                (0..m.ncols())
                    .filter(|&j| m[(i, j)] != 0.0)
                    .map(|j| (j, m[(i, j)]))
                    .collect()
            })
            .collect();
        Self { rows }
    }
}

/// LTI plant `dx/dt = Ã x + B̃ ũ` together with its construction data.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearStateSpace {
    pub kind: TurbineKind,
    pub a_tilde: DMatrix<f64>,
    pub b_tilde: DMatrix<f64>,
    /// Known term of the head expansion (includes `-dH_b beta0` for Kaplan).
    pub c_h: f64,
    /// Known term of the torque expansion (includes `-dT_b beta0` for Kaplan).
    pub c_t: f64,
    pub op: OperatingPoint,
    pub derivs: DerivativeBundle,
    /// Branch resistances frozen at the operating point.
    pub frozen_r: Vec<f64>,
    layout: StateLayout,
    a_sparse: SparseRows,
    b_sparse: SparseRows,
}

impl LinearStateSpace {
    pub fn dim(&self) -> usize {
        self.a_tilde.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b_tilde.ncols()
    }

    pub fn layout(&self) -> StateLayout {
        self.layout
    }

    /// Names of the entries of `ũ`.
    pub fn input_names(&self) -> &'static [&'static str] {
        match self.kind {
            TurbineKind::Francis => &["H_r", "y", "c_H + H_d", "c_T - T_el"],
            TurbineKind::Kaplan => &["H_r", "y", "beta", "c_H + H_d", "c_T - T_el"],
        }
    }

    /// Build `ũ` from physical inputs.
    pub fn input_vector(&self, cfg: &PlantConfig, input: &PlantInput) -> Vec<f64> {
        let mut u = vec![cfg.reservoir_head, input.y];
        if self.kind.has_blade_pitch() {
            u.push(input.beta.unwrap_or(self.op.beta0.unwrap_or(0.0)));
        }
        u.push(self.c_h + cfg.downstream_head);
        u.push(self.c_t - input.t_el);
        u
    }

    /// `ũ` at the operating point.
    pub fn input_at_op(&self, cfg: &PlantConfig) -> Vec<f64> {
        self.input_vector(cfg, &self.op.input())
    }

    fn openings(&self, u: &[f64]) -> (f64, f64) {
        let beta = if self.kind.has_blade_pitch() {
            u[2]
        } else {
            0.0
        };
        (u[1], beta)
    }

    /// First-order estimate of the turbine head for state `x` and input `ũ`.
    pub fn head_estimate(&self, x: &[f64], u: &[f64]) -> f64 {
        let (y, beta) = self.openings(u);
        let d = &self.derivs;
        d.dh_dq() * x[self.layout.turbine_q()]
            + d.dh_dn() * RAD_S_TO_RPM * x[self.layout.omega()]
            + d.dh_dy() * y
            + d.dh_dbeta() * beta
            + self.c_h
    }

    /// First-order estimate of the turbine torque.
    pub fn torque_estimate(&self, x: &[f64], u: &[f64]) -> f64 {
        let (y, beta) = self.openings(u);
        let d = &self.derivs;
        d.dt_dq() * x[self.layout.turbine_q()]
            + d.dt_dn() * RAD_S_TO_RPM * x[self.layout.omega()]
            + d.dt_dy() * y
            + d.dt_dbeta() * beta
            + self.c_t
    }

    /// `dx = Ã x + B̃ u` using sparse rows.
    pub fn rhs_into(&self, x: &[f64], u: &[f64], dx: &mut [f64]) {
        for (i, out) in dx.iter_mut().enumerate() {
            let mut s = 0.0;
            for &(j, v) in &self.a_sparse.rows[i] {
                s += v * x[j];
            }
            for &(j, v) in &self.b_sparse.rows[i] {
                s += v * u[j];
            }
            *out = s;
        }
    }

    pub fn rhs(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let mut dx = vec![0.0; x.len()];
        self.rhs_into(x, u, &mut dx);
        dx
    }

    /// JSON export for downstream controller design.
    pub fn to_json(&self, cfg: &PlantConfig) -> serde_json::Value {
        let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            (0..m.nrows())
                .map(|i| m.row(i).iter().copied().collect())
                .collect()
        };
        serde_json::json!({
            "plant": cfg.name,
            "kind": self.kind,
            "state_layout": state_names(self.layout),
            "input_layout": self.input_names(),
            "a_tilde": rows(&self.a_tilde),
            "b_tilde": rows(&self.b_tilde),
            "c_h": self.c_h,
            "c_t": self.c_t,
            "u_tilde_at_op": self.input_at_op(cfg),
            "operating_point": self.op,
            "derivatives": self.derivs,
            "frozen_resistance": self.frozen_r,
        })
    }
}

/// Human-readable names of the state entries.
pub fn state_names(layout: StateLayout) -> Vec<String> {
    let n = layout.elements();
    let mut v: Vec<String> = (1..=n + 1).map(|i| format!("Q_{i}")).collect();
    v.extend((1..=n).map(|i| format!("h_{i}")));
    v.push("omega".into());
    v
}

fn check_equilibrium<C: HillChart + ?Sized>(
    cfg: &PlantConfig,
    curves: &C,
    op: &OperatingPoint,
) -> Result<()> {
    let dx = nonlinear_rhs(cfg, curves, &op.x0, &op.input())?;
    let residual = rate_norm(cfg, &dx);
    if residual > EQUILIBRIUM_TOL {
        return Err(Error::NotEquilibrium { residual });
    }
    Ok(())
}

fn build<C: HillChart + ?Sized>(
    cfg: &PlantConfig,
    curves: &C,
    op: &OperatingPoint,
    steps: &Steps,
    kind: TurbineKind,
) -> Result<LinearStateSpace> {
    cfg.layout().check(&op.x0)?;
    check_equilibrium(cfg, curves, op)?;
    let derivs = derivative_bundle(curves, op.turbine(), steps)?;
    let lay = cfg.layout();
    let k = cfg.friction_factor();
    let frozen_r: Vec<f64> = lay.discharges(&op.x0).iter().map(|q| k * q.abs()).collect();

    let a = assemble_a_with(cfg, &frozen_r);
    let b = assemble_b(cfg);
    let (b1, b2, b3) = (b.column(0), b.column(1), b.column(2));

    // B2 [dH_Q dH_N] M + B3 [dT_Q dT_N] M, with M picking (Q_t, N) and N = RAD_S_TO_RPM * omega
    let mut m = DMatrix::zeros(2, lay.dim());
    m[(0, lay.turbine_q())] = 1.0;
    m[(1, lay.omega())] = RAD_S_TO_RPM;
    let dh = DMatrix::from_row_slice(1, 2, &[derivs.dh_dq(), derivs.dh_dn()]);
    let dt = DMatrix::from_row_slice(1, 2, &[derivs.dt_dq(), derivs.dt_dn()]);
    let a_tilde = &a + b2 * (&dh * &m) + b3 * (&dt * &m);

    let y_col: DVector<f64> = b2 * derivs.dh_dy() + b3 * derivs.dt_dy();
    let mut cols: Vec<DVector<f64>> = vec![b1.into_owned(), y_col];
    if kind.has_blade_pitch() {
        cols.push(b2 * derivs.dh_dbeta() + b3 * derivs.dt_dbeta());
    }
    cols.push(b2.into_owned());
    cols.push(b3.into_owned());
    let b_tilde = DMatrix::from_columns(&cols);

    let beta0 = op.beta0.unwrap_or(0.0);
    let c_h = op.h_t0
        - derivs.dh_dq() * op.q_t0
        - derivs.dh_dn() * op.n0
        - derivs.dh_dy() * op.y0
        - derivs.dh_dbeta() * beta0;
    let c_t = op.t_t0
        - derivs.dt_dq() * op.q_t0
        - derivs.dt_dn() * op.n0
        - derivs.dt_dy() * op.y0
        - derivs.dt_dbeta() * beta0;

    Ok(LinearStateSpace {
        kind,
        a_sparse: SparseRows::from_dense(&a_tilde),
        b_sparse: SparseRows::from_dense(&b_tilde),
        a_tilde,
        b_tilde,
        c_h,
        c_t,
        op: op.clone(),
        derivs,
        frozen_r,
        layout: lay,
    })
}

/// Francis linearization with input `ũ = [H_r, y, c_H + H_d, c_T - T_el]`.
pub fn linearize_francis<C: HillChart + ?Sized>(
    cfg: &PlantConfig,
    curves: &C,
    op: &OperatingPoint,
    steps: &Steps,
) -> Result<LinearStateSpace> {
    if curves.kind() != TurbineKind::Francis {
        return Err(Error::Domain(
            "Francis linearization needs Francis curves".into(),
        ));
    }
    build(cfg, curves, op, steps, TurbineKind::Francis)
}

/// Kaplan linearization with input `ũ = [H_r, y, beta, c'_H + H_d, c'_T - T_el]`.
pub fn linearize_kaplan<C: HillChart + ?Sized>(
    cfg: &PlantConfig,
    curves: &C,
    op: &OperatingPoint,
    steps: &Steps,
) -> Result<LinearStateSpace> {
    if curves.kind() != TurbineKind::Kaplan {
        return Err(Error::Domain(
            "Kaplan linearization needs Kaplan curves".into(),
        ));
    }
    if op.beta0.is_none() {
        return Err(Error::Domain(
            "Kaplan operating point needs a blade pitch".into(),
        ));
    }
    build(cfg, curves, op, steps, TurbineKind::Kaplan)
}

/// Dispatch on the turbine kind of the curves.
pub fn linearize<C: HillChart + ?Sized>(
    cfg: &PlantConfig,
    curves: &C,
    op: &OperatingPoint,
    steps: &Steps,
) -> Result<LinearStateSpace> {
    match curves.kind() {
        TurbineKind::Francis => linearize_francis(cfg, curves, op, steps),
        TurbineKind::Kaplan => linearize_kaplan(cfg, curves, op, steps),
    }
}
