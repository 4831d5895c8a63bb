//! Time-domain integration of the nonlinear and linear plant models, plus
//! equilibrium solving for operating-point construction.

mod equilibrium;
mod rk4;

pub use equilibrium::{find_equilibrium, static_balance, OperatingPoint};
pub use rk4::Rk4;

use std::io::Write;

use crate::circuit::{rhs_into, turbine_state, Friction, PlantConfig, PlantInput, StateLayout};
use crate::curves::{turbine_head_torque, HillChart};
use crate::error::{Error, Result};
use crate::linearize::LinearStateSpace;

/// Fixed-step RK4 settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    /// Integration step (s).
    pub dt: f64,
    /// Horizon (s).
    pub t_end: f64,
    /// Record every `record_every` steps.
    pub record_every: usize,
    /// Keep full state vectors in the trajectory.
    pub record_states: bool,
}

impl SimOptions {
    /// Default step `min(1e-3, 0.2 dx/a)`.
    pub fn default_dt(cfg: &PlantConfig) -> f64 {
        (0.2 * cfg.dx() / cfg.wave_speed).min(1e-3)
    }

    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            record_every: 1,
            record_states: true,
        }
    }

    pub fn record_every(mut self, k: usize) -> Self {
        self.record_every = k.max(1);
        self
    }

    pub fn record_states(mut self, yes: bool) -> Self {
        self.record_states = yes;
        self
    }

    /// Check the step against the wave-resolution bound `dt <= 0.5 dx/a`.
    pub fn validate(&self, cfg: &PlantConfig) -> Result<()> {
        let bound = 0.5 * cfg.dx() / cfg.wave_speed;
        if !(self.dt > 0.0) || self.dt > bound * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "dt = {} must lie in (0, {bound:.6}] (0.5 dx/a)",
                self.dt
            )));
        }
        if !(self.t_end >= self.dt) {
            return Err(Error::Config(format!(
                "t_end = {} must be at least dt = {}",
                self.t_end, self.dt
            )));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// Number of recorded samples, `floor(steps / record_every) + 1`.
    pub fn samples(&self) -> usize {
        self.steps() / self.record_every + 1
    }
}

/// Recorded simulation output.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub t: Vec<f64>,
    /// Full states per sample; empty when states are not recorded.
    pub states: Vec<Vec<f64>>,
    /// Turbine head (m).
    pub h_t: Vec<f64>,
    /// Turbine torque (N·m).
    pub t_t: Vec<f64>,
    /// Mean of the mid-element heads (m).
    pub head_avg: Vec<f64>,
    /// Normalized `||dx/dt||_inf` (1/s) at each sample.
    pub rate: Vec<f64>,
    pub final_state: Vec<f64>,
}

impl Trajectory {
    fn with_capacity(n: usize, states: bool) -> Self {
        Self {
            t: Vec::with_capacity(n),
            states: if states {
                Vec::with_capacity(n)
            } else {
                Vec::new()
            },
            h_t: Vec::with_capacity(n),
            t_t: Vec::with_capacity(n),
            head_avg: Vec::with_capacity(n),
            rate: Vec::with_capacity(n),
            final_state: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// CSV with columns `t,Q_1..Q_{n+1},h_1..h_n,omega,H_t,T_t,head_avg`.
    pub fn write_csv<W: Write>(&self, layout: StateLayout, writer: W) -> Result<()> {
        if self.states.len() != self.t.len() {
            return Err(Error::Misaligned(
                "trajectory export needs recorded states".into(),
            ));
        }
        let n = layout.elements();
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        header.extend((1..=n + 1).map(|i| format!("Q_{i}")));
        header.extend((1..=n).map(|i| format!("h_{i}")));
        header.extend(["omega", "H_t", "T_t", "head_avg"].map(String::from));
        w.write_record(&header)?;
        for k in 0..self.t.len() {
            let mut rec = Vec::with_capacity(header.len());
            rec.push(fmt(self.t[k]));
            rec.extend(self.states[k].iter().map(|v| fmt(*v)));
            rec.push(fmt(self.h_t[k]));
            rec.push(fmt(self.t_t[k]));
            rec.push(fmt(self.head_avg[k]));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn fmt(v: f64) -> String {
    format!("{v:.12e}")
}

/// Time-varying plant inputs.
pub trait InputSchedule: Sync {
    fn input(&self, t: f64) -> PlantInput;
}

impl<F: Fn(f64) -> PlantInput + Sync> InputSchedule for F {
    fn input(&self, t: f64) -> PlantInput {
        self(t)
    }
}

/// Ideal step between two input sets at `t_step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    pub before: PlantInput,
    pub after: PlantInput,
    pub t_step: f64,
}

impl InputSchedule for StepSchedule {
    fn input(&self, t: f64) -> PlantInput {
        if t >= self.t_step {
            self.after
        } else {
            self.before
        }
    }
}

/// Normalized infinity norm of a state derivative: discharges by `Q_bep`,
/// heads by `H_n`, speed by the synchronous speed.
pub fn rate_norm(cfg: &PlantConfig, dx: &[f64]) -> f64 {
    let lay = cfg.layout();
    let n = lay.elements();
    let mut m = 0.0f64;
    for i in 0..=n {
        m = m.max(dx[lay.q(i)].abs() / cfg.rated.q_bep);
    }
    for j in 0..n {
        m = m.max(dx[lay.h(j)].abs() / cfg.rated.h_n);
    }
    m.max(dx[lay.omega()].abs() / cfg.sync_omega())
}

/// Integrate the nonlinear model with fixed-step RK4.
pub fn simulate_nonlinear<C: HillChart + ?Sized, S: InputSchedule + ?Sized>(
    cfg: &PlantConfig,
    curves: &C,
    x_init: &[f64],
    schedule: &S,
    opts: &SimOptions,
) -> Result<Trajectory> {
    opts.validate(cfg)?;
    let lay = cfg.layout();
    lay.check(x_init)?;
    let mut traj = Trajectory::with_capacity(opts.samples(), opts.record_states);
    let mut rk = Rk4::new(lay.dim());
    let mut x = x_init.to_vec();
    let steps = opts.steps();

    let mut rhs = |t: f64, x: &[f64], dx: &mut [f64]| -> Result<()> {
        let input = schedule.input(t);
        rhs_into(cfg, curves, x, &input, Friction::Instantaneous, dx)
            .map(|_| ())
            .map_err(|e| Error::SimulationDomainExit {
                t,
                state: x.to_vec(),
                source: Box::new(e),
            })
    };

    for k in 0..=steps {
        let t = k as f64 * opts.dt;
        let record = k % opts.record_every == 0;
        if record || k < steps {
            rk.eval_k1(&mut rhs, t, &x)?;
        }
        if record {
            let input = schedule.input(t);
            let (h_t, t_t) =
                turbine_head_torque(curves, turbine_state(cfg, &x, &input)).map_err(|e| {
                    Error::SimulationDomainExit {
                        t,
                        state: x.clone(),
                        source: Box::new(e),
                    }
                })?;
            traj.t.push(t);
            traj.h_t.push(h_t);
            traj.t_t.push(t_t);
            traj.head_avg.push(lay.head_avg(&x));
            traj.rate.push(rate_norm(cfg, rk.k1()));
            if opts.record_states {
                traj.states.push(x.clone());
            }
        }
        if k < steps {
            rk.finish_step(&mut rhs, t, &mut x, opts.dt)?;
        }
    }
    traj.final_state = x;
    Ok(traj)
}

/// Integrate the LTI model `dx/dt = Ã x + B̃ ũ(t)` with fixed-step RK4.
/// Head and torque are reconstructed from the first-order Taylor expressions.
pub fn simulate_linear<U>(
    lin: &LinearStateSpace,
    cfg: &PlantConfig,
    x_init: &[f64],
    u_tilde: U,
    opts: &SimOptions,
) -> Result<Trajectory>
where
    U: Fn(f64) -> Vec<f64>,
{
    opts.validate(cfg)?;
    let lay = cfg.layout();
    lay.check(x_init)?;
    if lin.dim() != lay.dim() {
        return Err(Error::Dimension {
            expected: lay.dim(),
            got: lin.dim(),
        });
    }
    let k_in = lin.inputs();
    let mut traj = Trajectory::with_capacity(opts.samples(), opts.record_states);
    let mut rk = Rk4::new(lay.dim());
    let mut x = x_init.to_vec();
    let steps = opts.steps();

    let mut rhs = |t: f64, x: &[f64], dx: &mut [f64]| -> Result<()> {
        let u = u_tilde(t);
        if u.len() != k_in {
            return Err(Error::Dimension {
                expected: k_in,
                got: u.len(),
            });
        }
        lin.rhs_into(x, &u, dx);
        Ok(())
    };

    for k in 0..=steps {
        let t = k as f64 * opts.dt;
        let record = k % opts.record_every == 0;
        if record || k < steps {
            rk.eval_k1(&mut rhs, t, &x)?;
        }
        if record {
            let u = u_tilde(t);
            traj.t.push(t);
            traj.h_t.push(lin.head_estimate(&x, &u));
            traj.t_t.push(lin.torque_estimate(&x, &u));
            traj.head_avg.push(lay.head_avg(&x));
            traj.rate.push(rate_norm(cfg, rk.k1()));
            if opts.record_states {
                traj.states.push(x.clone());
            }
        }
        if k < steps {
            rk.finish_step(&mut rhs, t, &mut x, opts.dt)?;
        }
    }
    traj.final_state = x;
    Ok(traj)
}
