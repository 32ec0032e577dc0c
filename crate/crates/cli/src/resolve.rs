//! Turns command-line shorthand into library values: channel states, input
//! states, and the run seed.

use std::env;
use std::fs;

use gto_core::gaussian::{
    build_symmetric_channel, example_channel_1, example_channel_2, InputState, ThreeModeState,
};
use gto_core::nalgebra::{Complex, Matrix2};
use gto_core::oracle::DEFAULT_SEED;
use gto_core::{Error, Result};

/// `example1`, `example2`, `symmetric:q=<variance>`, or a path to a state
/// JSON file (blocks A..F plus optional displacement).
pub fn state(spec: &str) -> Result<ThreeModeState> {
    match spec {
        "example1" => Ok(example_channel_1()),
        "example2" => Ok(example_channel_2()),
        _ => {
            if let Some(rest) = spec.strip_prefix("symmetric:") {
                let q = rest.strip_prefix("q=").ok_or_else(|| {
                    Error::BadInput(format!("expected symmetric:q=<variance>, got `{spec}`"))
                })?;
                let q: f64 = q.parse().map_err(|_| {
                    Error::BadInput(format!("variance in `{spec}` is not a number"))
                })?;
                build_symmetric_channel(q)
            } else {
                let text = fs::read_to_string(spec)
                    .map_err(|e| Error::BadInput(format!("cannot read state `{spec}`: {e}")))?;
                ThreeModeState::from_json(&text)
            }
        }
    }
}

#[derive(serde::Deserialize)]
struct InputFile {
    v_in: [[f64; 2]; 2],
    #[serde(default)]
    amplitude: Option<[f64; 2]>,
}

/// `coherent`, `squeezed:<xi>,<phi>`, or a path to a JSON file with a `v_in`
/// matrix and an optional complex `amplitude` pair.
pub fn input(spec: &str) -> Result<InputState> {
    if spec == "coherent" {
        return Ok(InputState::coherent(Complex::new(0.0, 0.0)));
    }
    if let Some(rest) = spec.strip_prefix("squeezed:") {
        let (xi, phi) = rest.split_once(',').ok_or_else(|| {
            Error::BadInput(format!("expected squeezed:<xi>,<phi>, got `{spec}`"))
        })?;
        let xi: f64 = xi
            .trim()
            .parse()
            .map_err(|_| Error::BadInput(format!("squeezing in `{spec}` is not a number")))?;
        let phi: f64 = phi
            .trim()
            .parse()
            .map_err(|_| Error::BadInput(format!("phase in `{spec}` is not a number")))?;
        return InputState::squeezed(xi, phi, Complex::new(0.0, 0.0));
    }
    let text = fs::read_to_string(spec)
        .map_err(|e| Error::BadInput(format!("cannot read input `{spec}`: {e}")))?;
    let parsed: InputFile = serde_json::from_str(&text).map_err(|e| Error::Json {
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;
    let m = parsed.v_in;
    let amp = parsed.amplitude.unwrap_or([0.0, 0.0]);
    InputState::new(
        Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1]),
        Complex::new(amp[0], amp[1]),
    )
}

/// Seed from `GTO_SEED` (decimal or 0x-prefixed hex), defaulting to the
/// library's frozen seed. Every report records the value that was used.
pub fn seed() -> Result<u64> {
    let Some(text) = env::var_os("GTO_SEED") else {
        return Ok(DEFAULT_SEED);
    };
    let text = text.to_string_lossy();
    let t = text.trim();
    let parsed = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => t.parse(),
    };
    parsed.map_err(|_| {
        Error::BadInput(format!(
            "GTO_SEED must be a decimal or 0x-prefixed integer, got `{t}`"
        ))
    })
}
