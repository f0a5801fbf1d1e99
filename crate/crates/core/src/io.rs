//! CSV import/export. Floats are written with 17 significant digits so that
//! writing and re-reading is lossless and repeated runs are byte-identical.

use crate::error::{Error, Result};
use crate::prm::PrmRealization;
use crate::skorokhod::PiecewiseConstPath;
use crate::stochint::GridPath;

/// Fixed-width scientific form with 17 significant digits (f64 round-trips).
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// `time,mark` rows, one per atom.
pub fn realization_to_csv(eta: &PrmRealization) -> String {
    let mut out = String::from("time,mark\n");
    for &(t, z) in eta.atoms() {
        out.push_str(&format_float(t));
        out.push(',');
        out.push_str(&eta.space().marks[z]);
        out.push('\n');
    }
    out
}

/// `t,v1,...,vd` rows, one per node.
pub fn path_to_csv(path: &GridPath) -> String {
    let d = path.dim();
    let mut out = String::from("t");
    for i in 1..=d {
        out.push_str(&format!(",v{i}"));
    }
    out.push('\n');
    for (t, v) in path.times().iter().zip(path.values()) {
        out.push_str(&format_float(*t));
        for x in v {
            out.push(',');
            out.push_str(&format_float(*x));
        }
        out.push('\n');
    }
    out
}

/// `path,t,v1,...,vd` rows; each labelled group is one step path whose first
/// sample must sit at `t = 0`. All paths share the given horizon (default 1);
/// samples beyond it are rejected.
pub fn read_step_paths(
    text: &str,
    horizon: Option<f64>,
) -> Result<Vec<(String, PiecewiseConstPath)>> {
    let horizon = horizon.unwrap_or(1.0);
    if !(horizon > 0.0) {
        return Err(Error::invalid("horizon must be positive"));
    }
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::invalid("empty path CSV"))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 3 || cols[0] != "path" || cols[1] != "t" {
        return Err(Error::invalid(
            "path CSV header must be path,t,v1,...,vd",
        ));
    }
    let d = cols.len() - 2;

    let mut order: Vec<String> = Vec::new();
    let mut samples: std::collections::HashMap<String, Vec<(f64, Vec<f64>)>> =
        std::collections::HashMap::new();
    for (ln, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != d + 2 {
            return Err(Error::invalid(format!(
                "row {} has {} fields, expected {}",
                ln + 2,
                fields.len(),
                d + 2
            )));
        }
        let id = fields[0].to_string();
        let t: f64 = fields[1]
            .parse()
            .map_err(|_| Error::invalid(format!("bad time {:?}", fields[1])))?;
        if t > horizon {
            return Err(Error::invalid(format!(
                "sample time {t} beyond the horizon {horizon}"
            )));
        }
        let mut v = Vec::with_capacity(d);
        for f in &fields[2..] {
            v.push(
                f.parse::<f64>()
                    .map_err(|_| Error::invalid(format!("bad value {f:?}")))?,
            );
        }
        if !samples.contains_key(&id) {
            order.push(id.clone());
        }
        samples.entry(id).or_default().push((t, v));
    }
    if order.is_empty() {
        return Err(Error::invalid("path CSV has no rows"));
    }

    let mut out = Vec::with_capacity(order.len());
    for id in order {
        let mut rows = samples.remove(&id).unwrap();
        rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        if rows[0].0 != 0.0 {
            return Err(Error::invalid(format!(
                "path {id:?} must start with a t = 0 sample"
            )));
        }
        let initial = rows[0].1.clone();
        let jumps = rows.into_iter().skip(1).collect();
        out.push((id, PiecewiseConstPath::new(horizon, initial, jumps)?));
    }
    Ok(out)
}

/// Square matrix CSV with row/column labels.
pub fn matrix_to_csv(labels: &[String], matrix: &[Vec<f64>]) -> String {
    let mut out = String::from("path");
    for l in labels {
        out.push(',');
        out.push_str(l);
    }
    out.push('\n');
    for (l, row) in labels.iter().zip(matrix) {
        out.push_str(l);
        for x in row {
            out.push(',');
            out.push_str(&format_float(*x));
        }
        out.push('\n');
    }
    out
}
