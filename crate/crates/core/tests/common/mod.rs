#![allow(dead_code)]

use hydrolin::config::{parse_plant, FRANCIS_TOML, KAPLAN_TOML};
use hydrolin::curves::SyntheticCurves;
use hydrolin::{Curves, Plant};

/// Bundled Francis plant with `n` penstock elements.
pub fn francis(n: usize) -> Plant {
    let text = FRANCIS_TOML.replace("elements = 20", &format!("elements = {n}"));
    parse_plant(&text, None).unwrap()
}

pub fn kaplan(n: usize) -> Plant {
    let text = KAPLAN_TOML.replace("elements = 8", &format!("elements = {n}"));
    parse_plant(&text, None).unwrap()
}

pub fn synthetic(p: &Plant) -> &SyntheticCurves {
    match &p.curves {
        Curves::Synthetic(s) => s,
        Curves::Tabulated(_) => panic!("bundled plants use synthetic curves"),
    }
}

pub fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |a, b| a.max(b.abs()))
}
