use serde::Serialize;

use super::rate_norm;
use crate::circuit::{nonlinear_rhs, PlantConfig, PlantInput, RAD_S_TO_RPM};
use crate::curves::{turbine_head, turbine_head_torque, HillChart, TurbineState};
use crate::error::{Error, Result};

const MAX_ITER: usize = 100;
const RESIDUAL_TOL: f64 = 1e-9;

/// Steady operating point used as the linearization point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatingPoint {
    /// Guide-vane opening (pu).
    pub y0: f64,
    /// Blade pitch (pu), Kaplan only.
    pub beta0: Option<f64>,
    /// Rotational speed (rpm).
    pub n0: f64,
    /// Turbine discharge (m³/s).
    pub q_t0: f64,
    /// Equilibrium state.
    pub x0: Vec<f64>,
    /// Turbine head (m).
    pub h_t0: f64,
    /// Turbine torque (N·m); also the electrical torque holding the equilibrium.
    pub t_t0: f64,
}

impl OperatingPoint {
    /// Inputs holding the plant at this point (`T_el = T_t0`).
    pub fn input(&self) -> PlantInput {
        PlantInput {
            y: self.y0,
            beta: self.beta0,
            t_el: self.t_t0,
        }
    }

    pub fn turbine(&self) -> TurbineState {
        TurbineState::new(self.q_t0, self.n0, self.y0, self.beta0)
    }

    /// Normalized residual `||f(x0)||_inf` of the nonlinear model.
    pub fn residual<C: HillChart + ?Sized>(&self, cfg: &PlantConfig, curves: &C) -> Result<f64> {
        let dx = nonlinear_rhs(cfg, curves, &self.x0, &self.input())?;
        Ok(rate_norm(cfg, &dx))
    }
}

/// Static balance `H_r - H_d - losses(Q) - H_t(Q, N, y)` at uniform discharge.
pub fn static_balance<C: HillChart + ?Sized>(
    cfg: &PlantConfig,
    curves: &C,
    q: f64,
    n_rpm: f64,
    y: f64,
    beta: Option<f64>,
) -> Result<f64> {
    let h_t = turbine_head(curves, TurbineState::new(q, n_rpm, y, beta))?;
    Ok(cfg.net_head() - cfg.static_losses(q) - h_t)
}

/// Steady state at opening `y` and speed `n_target` (rpm): uniform discharge
/// solving the static balance, heads following the friction gradient, and the
/// electrical torque equal to the turbine torque.
///
/// The discharge is found by Newton iteration safeguarded with a bracket
/// (steps leaving the bracket fall back to bisection).
pub fn find_equilibrium<C: HillChart + ?Sized>(
    cfg: &PlantConfig,
    curves: &C,
    y: f64,
    beta: Option<f64>,
    n_target: f64,
) -> Result<OperatingPoint> {
    cfg.validate()?;
    if !(n_target > 0.0) {
        return Err(Error::Domain(format!(
            "target speed must be positive, got {n_target}"
        )));
    }
    let [y_lo, y_hi] = cfg.y_range;
    if !(y >= y_lo - 1e-12 && y <= y_hi + 1e-12) {
        return Err(Error::Domain(format!(
            "opening {y} outside the operating range [{y_lo}, {y_hi}]"
        )));
    }
    let beta = match (cfg.kind.has_blade_pitch(), beta) {
        (true, Some(b)) => Some(b),
        (true, None) => cfg.on_cam_beta(y)?,
        (false, _) => None,
    };
    let g = |q: f64| static_balance(cfg, curves, q, n_target, y, beta);
    let infeasible = |why: String| Error::Infeasible(format!("y = {y}: {why}"));

    let g0 =
        g(0.0).map_err(|e| infeasible(format!("zero-discharge balance not evaluable ({e})")))?;
    if g0 <= 0.0 {
        return Err(infeasible(format!(
            "turbine head at zero discharge already exceeds the net head (balance {g0:.4})"
        )));
    }
    // expand until the balance changes sign
    let mut lo = 0.0;
    let mut hi = cfg.rated.q_bep * y.max(0.05);
    loop {
        let v = g(hi).map_err(|e| infeasible(format!("no root inside the curve domain ({e})")))?;
        if v < 0.0 {
            break;
        }
        lo = hi;
        hi *= 2.0;
        if hi > 1e3 * cfg.rated.q_bep {
            return Err(infeasible("no sign change of the static balance".into()));
        }
    }

    let scale = cfg.net_head();
    let mut q = 0.5 * (lo + hi);
    let mut residual = f64::INFINITY;
    let mut converged = false;
    for _ in 0..MAX_ITER {
        let v = g(q)?;
        residual = v.abs() / scale;
        if v > 0.0 {
            lo = q;
        } else {
            hi = q;
        }
        if residual <= 1e-15 || (hi - lo) <= 1e-15 * q.abs().max(1.0) {
            converged = true;
            break;
        }
        let h = 1e-6 * cfg.rated.q_bep;
        let slope = (g(q + h)? - g(q - h)?) / (2.0 * h);
        let mut next = q - v / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - q).abs() <= 1e-14 * q.abs().max(1.0) {
            q = next;
            converged = true;
            break;
        }
        q = next;
    }
    if !converged {
        return Err(Error::NonConvergence {
            iterations: MAX_ITER,
            residual,
        });
    }

    let lay = cfg.layout();
    let n = lay.elements();
    let r = cfg.friction_factor() * q.abs();
    let mut x0 = vec![0.0; lay.dim()];
    for i in 0..=n {
        x0[lay.q(i)] = q;
    }
    let mut h = cfg.reservoir_head - 0.5 * r * q;
    for j in 0..n {
        x0[lay.h(j)] = h;
        h -= r * q;
    }
    x0[lay.omega()] = n_target / RAD_S_TO_RPM;
    let (h_t0, t_t0) = turbine_head_torque(curves, TurbineState::new(q, n_target, y, beta))?;
    let op = OperatingPoint {
        y0: y,
        beta0: beta,
        n0: n_target,
        q_t0: q,
        x0,
        h_t0,
        t_t0,
    };
    let res = op.residual(cfg, curves)?;
    if res > RESIDUAL_TOL {
        return Err(Error::NonConvergence {
            iterations: MAX_ITER,
            residual: res,
        });
    }
    Ok(op)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::tests::{francis_cfg, francis_curves};

    #[test]
    fn lossless_balance_uses_full_net_head() {
        let mut cfg = francis_cfg(4);
        cfg.friction = 0.0;
        let curves = francis_curves(&cfg);
        let op = find_equilibrium(&cfg, &curves, 0.7, None, cfg.sync_speed).unwrap();
        assert!((op.h_t0 - cfg.net_head()).abs() < 1e-10 * cfg.net_head());
    }

    #[test]
    fn residual_is_tiny() {
        let cfg = francis_cfg(20);
        let curves = francis_curves(&cfg);
        for i in 0..9 {
            let y = 0.2 + 0.1 * i as f64;
            let op = find_equilibrium(&cfg, &curves, y, None, cfg.sync_speed).unwrap();
            assert!(op.residual(&cfg, &curves).unwrap() <= 1e-9);
            assert_eq!(op.x0.len(), 42);
        }
    }

    #[test]
    fn infeasible_when_speed_head_exceeds_net_head() {
        let cfg = francis_cfg(2);
        let curves = francis_curves(&cfg);
        // b n^2 H_bep > net head at twice the synchronous speed
        let err = find_equilibrium(&cfg, &curves, 0.5, None, 2.0 * cfg.sync_speed).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)), "{err}");
    }

    #[test]
    fn rejects_out_of_range_opening() {
        let cfg = francis_cfg(2);
        let curves = francis_curves(&cfg);
        assert!(find_equilibrium(&cfg, &curves, 0.1, None, cfg.sync_speed).is_err());
        assert!(find_equilibrium(&cfg, &curves, 0.5, None, 0.0).is_err());
    }
}
