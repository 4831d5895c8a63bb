//! Plant configuration files (TOML).
//!
//! ```toml
//! name = "francis-medium-head"
//! kind = "francis"                 # or "kaplan"
//!
//! [hydraulics]
//! reservoir_head = 100.0           # H_r (m)
//! downstream_head = 10.0           # H_d (m)
//! length = 500.0                   # l (m)
//! elements = 20                    # n
//! diameter = 5.0                   # D (m)
//! area = 19.6                      # A (m²), optional: defaults to pi D²/4
//! friction = 0.012                 # Darcy-Weisbach lambda
//! wave_speed = 1200.0              # a (m/s)
//! gravity = 9.81                   # optional
//!
//! [machine]
//! inertia = 2.5e5                  # J (kg m²)
//! sync_speed = 500.0               # rpm, optional: defaults to n_bep
//!
//! [rated]
//! q_bep = 105.0
//! n_bep = 500.0
//! h_bep = 88.2
//! t_n = 1.6e6
//! h_n = 90.0
//! d_n = 3.2
//!
//! [operation]
//! y_range = [0.2, 1.0]
//!
//! [curves]
//! source = "synthetic"             # closed-form surfaces, or "csv"
//! y_bep = 0.8
//! head_speed = 0.4
//! torque_speed = 1.5
//! torque_opening_exp = 1.0
//! theta = [-0.6, 1.65]
//! y = [0.05, 1.2]
//! # beta_bep, pitch_weight, pitch_offset, beta = [lo, hi] for Kaplan
//! # tabulate = [nodes_theta, nodes_y(, nodes_beta)] samples onto a grid
//!
//! # [curves]
//! # source = "csv"
//! # path = "curves.csv"            # relative to the config file
//!
//! [on_cam]                         # Kaplan only
//! y = [0.0, 1.0]
//! beta = [0.0, 1.0]
//!
//! [linearize]                      # optional finite-difference steps
//! eps_q = 0.105
//! eps_n = 0.5
//! eps_y = 1e-3
//! eps_beta = 1e-3
//!
//! [bench]                          # optional
//! head_signal = "average"          # or "turbine"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::circuit::PlantConfig;
use crate::curves::{
    read_curve_csv, Curves, HillChart, OnCamTable, RatedValues, SyntheticCurves, SyntheticDomain,
    TurbineKind,
};
use crate::error::{Error, Result};
use crate::linearize::Steps;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlantFile {
    name: String,
    kind: TurbineKind,
    hydraulics: Hydraulics,
    machine: Machine,
    rated: RatedValues,
    operation: Operation,
    curves: CurveSource,
    #[serde(default)]
    on_cam: Option<OnCamTable>,
    #[serde(default)]
    linearize: Option<StepFile>,
    #[serde(default)]
    bench: Option<BenchFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Hydraulics {
    reservoir_head: f64,
    downstream_head: f64,
    length: f64,
    elements: i64,
    diameter: f64,
    #[serde(default)]
    area: Option<f64>,
    friction: f64,
    wave_speed: f64,
    #[serde(default = "default_gravity")]
    gravity: f64,
}

fn default_gravity() -> f64 {
    9.81
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Machine {
    inertia: f64,
    #[serde(default)]
    sync_speed: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Operation {
    y_range: [f64; 2],
}

#[derive(Debug, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
enum CurveSource {
    Synthetic {
        y_bep: f64,
        #[serde(default)]
        beta_bep: Option<f64>,
        head_speed: f64,
        torque_speed: f64,
        torque_opening_exp: f64,
        #[serde(default)]
        pitch_weight: f64,
        #[serde(default)]
        pitch_offset: f64,
        theta: [f64; 2],
        y: [f64; 2],
        #[serde(default)]
        beta: Option<[f64; 2]>,
        #[serde(default)]
        tabulate: Option<Vec<usize>>,
    },
    Csv {
        path: PathBuf,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StepFile {
    eps_q: Option<f64>,
    eps_n: Option<f64>,
    eps_y: Option<f64>,
    eps_beta: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BenchFile {
    head_signal: Option<HeadSignal>,
}

/// Head signal compared in the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadSignal {
    /// Spatially averaged penstock head.
    Average,
    /// Head at the turbine.
    Turbine,
}

/// A fully loaded and validated plant.
#[derive(Debug, Clone)]
pub struct Plant {
    pub config: PlantConfig,
    pub curves: Curves,
    pub steps: Steps,
    pub head_signal: HeadSignal,
}

/// Bundled example plants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BundledPlant {
    /// Medium-head Francis unit, 90 m net head, 500 m penstock, n = 20.
    Francis,
    /// Low-head Kaplan unit, 15 m net head, n = 8.
    Kaplan,
}

pub const FRANCIS_TOML: &str = include_str!("../configs/francis.toml");
pub const KAPLAN_TOML: &str = include_str!("../configs/kaplan.toml");

impl BundledPlant {
    pub fn source(self) -> &'static str {
        match self {
            BundledPlant::Francis => FRANCIS_TOML,
            BundledPlant::Kaplan => KAPLAN_TOML,
        }
    }

    pub fn load(self) -> Plant {
        parse_plant(self.source(), None).expect("bundled configuration is valid")
    }
}

impl std::str::FromStr for BundledPlant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "francis" => Ok(BundledPlant::Francis),
            "kaplan" => Ok(BundledPlant::Kaplan),
            other => Err(Error::Config(format!("unknown bundled plant '{other}'"))),
        }
    }
}

/// Load and validate a configuration file. Relative curve paths resolve
/// against the file's directory.
pub fn load_plant(path: &Path) -> Result<Plant> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_plant(&text, path.parent())
}

pub fn parse_plant(text: &str, base_dir: Option<&Path>) -> Result<Plant> {
    let file: PlantFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if file.hydraulics.elements < 1 {
        return Err(Error::Config(format!(
            "hydraulics.elements: n ≥ 1 required, got {}",
            file.hydraulics.elements
        )));
    }
    let h = &file.hydraulics;
    let area = h
        .area
        .unwrap_or(std::f64::consts::PI * h.diameter * h.diameter / 4.0);
    let config = PlantConfig {
        name: file.name.clone(),
        kind: file.kind,
        reservoir_head: h.reservoir_head,
        downstream_head: h.downstream_head,
        length: h.length,
        elements: h.elements as usize,
        diameter: h.diameter,
        area,
        friction: h.friction,
        wave_speed: h.wave_speed,
        gravity: h.gravity,
        inertia: file.machine.inertia,
        rated: file.rated,
        y_range: file.operation.y_range,
        sync_speed: file.machine.sync_speed.unwrap_or(file.rated.n_bep),
        on_cam: file.on_cam.clone(),
    };
    config.validate()?;

    let curves = match file.curves {
        CurveSource::Synthetic {
            y_bep,
            beta_bep,
            head_speed,
            torque_speed,
            torque_opening_exp,
            pitch_weight,
            pitch_offset,
            theta,
            y,
            beta,
            tabulate,
        } => {
            let syn = SyntheticCurves {
                kind: file.kind,
                rated: file.rated,
                y_bep,
                beta_bep,
                head_speed,
                torque_speed,
                torque_opening_exp,
                pitch_weight,
                pitch_offset,
                domain: SyntheticDomain { theta, y, beta },
            };
            syn.validate()?;
            match tabulate {
                None => Curves::Synthetic(syn),
                Some(nodes) => {
                    let want = if file.kind.has_blade_pitch() { 3 } else { 2 };
                    if nodes.len() != want {
                        return Err(Error::Config(format!(
                            "curves.tabulate needs {want} node counts, got {}",
                            nodes.len()
                        )));
                    }
                    if nodes.iter().any(|&k| k < 2) {
                        return Err(Error::Config(
                            "curves.tabulate node counts must be ≥ 2".into(),
                        ));
                    }
                    let pts = [nodes[0], nodes[1], nodes.get(2).copied().unwrap_or(2)];
                    Curves::Tabulated(syn.tabulate_uniform(pts)?)
                }
            }
        }
        CurveSource::Csv { path } => {
            let full = match base_dir {
                Some(dir) if path.is_relative() => dir.join(&path),
                _ => path.clone(),
            };
            let f = std::fs::File::open(&full)
                .map_err(|e| Error::Io(format!("curve file {}: {e}", full.display())))?;
            let set = read_curve_csv(f, file.rated)?;
            if set.kind() != file.kind {
                return Err(Error::Config(format!(
                    "curve file {} is a {} set but the plant is {}",
                    full.display(),
                    set.kind(),
                    file.kind
                )));
            }
            Curves::Tabulated(set)
        }
    };

    let mut steps = Steps::default_for(&config);
    if let Some(s) = file.linearize {
        steps.q = s.eps_q.unwrap_or(steps.q);
        steps.n = s.eps_n.unwrap_or(steps.n);
        steps.y = s.eps_y.unwrap_or(steps.y);
        steps.beta = s.eps_beta.unwrap_or(steps.beta);
    }
    steps.validate()?;

    let head_signal = file
        .bench
        .and_then(|b| b.head_signal)
        .unwrap_or(match file.kind {
            TurbineKind::Francis => HeadSignal::Average,
            TurbineKind::Kaplan => HeadSignal::Turbine,
        });

    Ok(Plant {
        config,
        curves,
        steps,
        head_signal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_configs_load() {
        let f = BundledPlant::Francis.load();
        assert_eq!(f.config.elements, 20);
        assert_eq!(f.config.layout().dim(), 42);
        assert!((f.config.net_head() - 90.0).abs() < 1e-12);
        assert!((f.config.length - 500.0).abs() < 1e-12);
        assert_eq!(f.head_signal, HeadSignal::Average);

        let k = BundledPlant::Kaplan.load();
        assert_eq!(k.config.elements, 8);
        assert!((k.config.net_head() - 15.0).abs() < 1e-12);
        assert_eq!(k.curves.kind(), TurbineKind::Kaplan);
        assert_eq!(k.head_signal, HeadSignal::Turbine);
    }

    #[test]
    fn zero_elements_rejected() {
        let text = FRANCIS_TOML.replace("elements = 20", "elements = 0");
        let err = parse_plant(&text, None).unwrap_err();
        assert!(err.to_string().contains("n ≥ 1"), "{err}");
    }

    #[test]
    fn parse_errors_carry_location() {
        let text = FRANCIS_TOML.replace("friction = 0.012", "friction = \"lots\"");
        let err = parse_plant(&text, None).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("friction") && msg.contains("line"), "{msg}");
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = FRANCIS_TOML.replace("friction = 0.012", "friction = 0.012\nfriktion = 1.0");
        assert!(parse_plant(&text, None).is_err());
    }

    #[test]
    fn tabulate_option_builds_grid() {
        let text = FRANCIS_TOML.replace(
            "source = \"synthetic\"",
            "source = \"synthetic\"\ntabulate = [50, 30]",
        );
        let p = parse_plant(&text, None).unwrap();
        assert!(matches!(p.curves, Curves::Tabulated(_)));
    }
}
