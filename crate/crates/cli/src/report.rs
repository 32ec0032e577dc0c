//! Deterministic run reports.
//!
//! Every command emits one JSON document with alphabetically sorted keys and
//! nothing time-, path-, or machine-dependent inside, so reruns with the same
//! arguments and seed are byte identical. CSV columns are printed with 12
//! significant digits in exponent form, which round-trips through any strtod.

use std::fs;
use std::path::Path;

use gto_core::gaussian::Squeezing;
use gto_core::optimizer::MeasurementClass;
use gto_core::{Error, Result};
use serde_json::{json, Value};

pub fn sig(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn xi_csv(xi: Squeezing) -> String {
    match xi {
        Squeezing::Zero => "0".into(),
        Squeezing::Infinite => "inf".into(),
        Squeezing::Finite(x) => sig(x),
    }
}

/// Class name for reports, plus the measured quadrature when there is one.
pub fn class_fields(class: &MeasurementClass) -> (&'static str, Option<f64>) {
    match class {
        MeasurementClass::Heterodyne => ("heterodyne", None),
        MeasurementClass::SqueezedHeterodyne => ("squeezed-heterodyne", None),
        MeasurementClass::Homodyne { quadrature_phase } => ("homodyne", Some(*quadrature_phase)),
        MeasurementClass::Unconstrained => ("unconstrained", None),
    }
}

pub fn emit(
    command: &str,
    parameters: Value,
    results: Value,
    seed: u64,
    out: Option<&Path>,
) -> Result<()> {
    let report = json!({
        "command": command,
        "parameters": parameters,
        "results": results,
        "seed": seed,
        "version": env!("CARGO_PKG_VERSION"),
    });
    let mut text = serde_json::to_string_pretty(&report).expect("reports are plain JSON values");
    text.push('\n');
    match out {
        Some(path) => fs::write(path, &text)
            .map_err(|e| Error::BadInput(format!("cannot write `{}`: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn write_csv(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<()> {
    let mut text = String::with_capacity(header.len() + 1 + rows.len() * 16 * 8);
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::BadInput(format!("cannot write `{}`: {e}", path.display())))
}
