use thiserror::Error;

/// Errors produced by the plant model, linearization and benchmark layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("polar angle undefined at the origin (discharge and speed both zero)")]
    DegenerateOrigin,

    #[error("query (theta={theta:.6}, y={y:.6}{}) outside the curve domain", fmt_beta(*.beta))]
    OutOfDomain {
        theta: f64,
        y: f64,
        beta: Option<f64>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid curve set: {0}")]
    Curves(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("infeasible operating point: {0}")]
    Infeasible(String),

    #[error("equilibrium solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("operating point is not an equilibrium (normalized residual {residual:.3e})")]
    NotEquilibrium { residual: f64 },

    #[error("finite-difference probe at {variable} = {at:.6} failed: {source}")]
    Probe {
        variable: &'static str,
        at: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("simulation left the model domain at t = {t:.4} s: {source}")]
    SimulationDomainExit {
        t: f64,
        state: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("misaligned series: {0}")]
    Misaligned(String),

    #[error("empty window [{start}, {end}]")]
    EmptyWindow { start: f64, end: f64 },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

fn fmt_beta(beta: Option<f64>) -> String {
    match beta {
        Some(b) => format!(", beta={b:.6}"),
        None => String::new(),
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
