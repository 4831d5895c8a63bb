//! Curve CSV format: header `theta,y[,beta],WH,WB`, one row per grid node,
//! theta outermost. Angles in radians, openings in pu.

use std::io::{Read, Write};

use super::{CharacteristicCurveSet, RatedValues, TurbineKind};
use crate::error::{Error, Result};

/// Load a tabulated curve set and validate that the rows form a complete
/// rectangular grid in row-major order.
pub fn read_curve_csv<R: Read>(reader: R, rated: RatedValues) -> Result<CharacteristicCurveSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let kind = match header
        .iter()
        .map(String::as_str)
        .collect::<Vec<_>>()
        .as_slice()
    {
        ["theta", "y", "WH", "WB"] => TurbineKind::Francis,
        ["theta", "y", "beta", "WH", "WB"] => TurbineKind::Kaplan,
        _ => {
            return Err(Error::Curves(format!(
                "unexpected curve CSV header {header:?}; expected theta,y[,beta],WH,WB"
            )))
        }
    };
    let width = header.len();

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != width {
            return Err(Error::Curves(format!(
                "line {line}: expected {width} fields, got {}",
                rec.len()
            )));
        }
        let row = rec
            .iter()
            .enumerate()
            .map(|(c, f)| {
                f.parse::<f64>()
                    .map_err(|e| Error::Curves(format!("line {line}, column {}: {e}", header[c])))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Curves("curve CSV has no data rows".into()));
    }

    let coord_cols = width - 2;
    let axes: Vec<Vec<f64>> = (0..coord_cols).map(|c| unique_in_order(&rows, c)).collect();
    let expected: usize = axes.iter().map(Vec::len).product();
    if rows.len() != expected {
        return Err(Error::Curves(format!(
            "non-rectangular grid: {} rows but axes of sizes {:?} need {expected}",
            rows.len(),
            axes.iter().map(Vec::len).collect::<Vec<_>>()
        )));
    }
    // row-major order check, theta outermost
    let mut idx = vec![0usize; coord_cols];
    for (r, row) in rows.iter().enumerate() {
        for c in 0..coord_cols {
            if row[c] != axes[c][idx[c]] {
                return Err(Error::Curves(format!(
                    "non-rectangular grid: line {} has {}={} where {} was expected",
                    r + 2,
                    header[c],
                    row[c],
                    axes[c][idx[c]]
                )));
            }
        }
        for c in (0..coord_cols).rev() {
            idx[c] += 1;
            if idx[c] < axes[c].len() {
                break;
            }
            idx[c] = 0;
        }
    }

    let wh = rows.iter().map(|r| r[coord_cols]).collect();
    let wb = rows.iter().map(|r| r[coord_cols + 1]).collect();
    let mut axes = axes.into_iter();
    let theta = axes.next().unwrap_or_default();
    let y = axes.next().unwrap_or_default();
    let beta = axes.next();
    CharacteristicCurveSet::new(kind, theta, y, beta, wh, wb, rated)
}

fn unique_in_order(rows: &[Vec<f64>], col: usize) -> Vec<f64> {
    let mut vals: Vec<f64> = rows.iter().map(|r| r[col]).collect();
    vals.sort_by(f64::total_cmp);
    vals.dedup();
    vals
}

pub fn write_curve_csv<W: Write>(curves: &CharacteristicCurveSet, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let betas: Vec<Option<f64>> = match curves.beta_axis() {
        Some(ax) => {
            w.write_record(["theta", "y", "beta", "WH", "WB"])?;
            ax.nodes().iter().copied().map(Some).collect()
        }
        None => {
            w.write_record(["theta", "y", "WH", "WB"])?;
            vec![None]
        }
    };
    let mut i = 0;
    for &t in curves.theta_axis().nodes() {
        for &y in curves.y_axis().nodes() {
            for &b in &betas {
                let mut rec = vec![fmt(t), fmt(y)];
                if let Some(b) = b {
                    rec.push(fmt(b));
                }
                rec.push(fmt(curves.wh_values()[i]));
                rec.push(fmt(curves.wb_values()[i]));
                w.write_record(&rec)?;
                i += 1;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Shortest representation that round-trips exactly.
fn fmt(v: f64) -> String {
    format!("{v:?}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::HillChart;

    fn rated() -> RatedValues {
        RatedValues {
            q_bep: 1.0,
            n_bep: 1.0,
            h_bep: 1.0,
            t_n: 1.0,
            h_n: 1.0,
            d_n: 1.0,
        }
    }

    const FRANCIS: &str =
        "theta,y,WH,WB\n0.0,0.2,1.0,0.1\n0.0,0.8,1.5,0.2\n1.0,0.2,2.0,0.3\n1.0,0.8,2.5,0.4\n";

    #[test]
    fn loads_francis_grid() {
        let c = read_curve_csv(FRANCIS.as_bytes(), rated()).unwrap();
        assert_eq!(c.kind(), TurbineKind::Francis);
        assert_eq!(c.wh(1.0, 0.8, None).unwrap(), 2.5);
        assert_eq!(c.wb(0.0, 0.8, None).unwrap(), 0.2);
    }

    #[test]
    fn rejects_missing_row() {
        let mut lines: Vec<&str> = FRANCIS.lines().collect();
        lines.remove(2);
        let text = lines.join("\n");
        let err = read_curve_csv(text.as_bytes(), rated()).unwrap_err();
        assert!(err.to_string().contains("non-rectangular grid"), "{err}");
    }

    #[test]
    fn rejects_wrong_order() {
        let text = "theta,y,WH,WB\n0.0,0.2,1,0\n1.0,0.2,1,0\n0.0,0.8,1,0\n1.0,0.8,1,0\n";
        let err = read_curve_csv(text.as_bytes(), rated()).unwrap_err();
        assert!(err.to_string().contains("non-rectangular grid"), "{err}");
    }

    #[test]
    fn rejects_bad_header_and_values() {
        assert!(read_curve_csv("a,b,c\n1,2,3\n".as_bytes(), rated()).is_err());
        let err = read_curve_csv("theta,y,WH,WB\n0,0,x,1\n".as_bytes(), rated()).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn kaplan_round_trip() {
        let wh: Vec<f64> = (1..=8).map(|v| v as f64 * 0.1).collect();
        let c = CharacteristicCurveSet::new(
            TurbineKind::Kaplan,
            vec![0.1, 0.7],
            vec![0.2, 1.0],
            Some(vec![0.0, 0.5]),
            wh.clone(),
            wh.iter().map(|v| v - 0.3).collect(),
            rated(),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_curve_csv(&c, &mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("theta,y,beta,WH,WB\n"));
        let back = read_curve_csv(buf.as_slice(), rated()).unwrap();
        assert_eq!(back, c);
    }
}
