//! `gto` — teleportation fidelities through three-mode Gaussian channels and
//! the third-party measurement that maximizes them.
//!
//! Every subcommand prints a single JSON report (sorted keys, no timestamps)
//! so that two runs with the same arguments and seed are byte identical;
//! `--out` redirects it to a file and wall-clock time goes to stderr only.
//! Exit codes: 0 success, 1 a verdict or reproduction failed, 2 bad usage or
//! malformed input.

mod report;
mod resolve;
mod targets;

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use gto_core::fidelity::{conditional_fidelity, fidelity_tr};
use gto_core::gaussian::{build_symmetric_channel, MeasurementSpec, Squeezing};
use gto_core::optimizer::{assisted_fidelity_symmetric, build_context, optimize, phase_profile};
use gto_core::{Error, Result};
use serde_json::{json, Value};

const STATE_HELP: &str =
    "Channel state: a JSON file, `example1`, `example2`, or `symmetric:q=<variance>`";
const INPUT_HELP: &str =
    "Input state: `coherent`, `squeezed:<xi>,<phi>`, or a JSON file with `v_in`";

#[derive(Parser)]
#[command(
    name = "gto",
    version,
    about = "Teleportation fidelity through three-mode Gaussian channels, \
             and the local measurement of the leftover mode that maximizes it"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check that a state is physical and whether the teleporting pair is
    /// separable; exits 1 when the state is not physical
    Check {
        #[arg(long, help = STATE_HELP)]
        state: String,
        /// Eigenvalue tolerance of both verdicts
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Write the JSON report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Teleportation fidelity for one fixed measurement of the third mode
    Fidelity {
        #[arg(long, help = STATE_HELP)]
        state: String,
        #[arg(long, default_value = "coherent", help = INPUT_HELP)]
        input: String,
        /// Squeezing factor of the measurement: a positive number, `0`, or `inf`
        #[arg(long)]
        xi: String,
        /// Orientation of the measurement in radians
        #[arg(long, default_value_t = 0.0)]
        phi: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Globally optimal measurement of the third mode
    Optimize {
        #[arg(long, help = STATE_HELP)]
        state: String,
        #[arg(long, default_value = "coherent", help = INPUT_HELP)]
        input: String,
        /// Resolution of the sign-pattern scan over directions
        #[arg(long, default_value_t = 1024)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bare vs optimally assisted fidelity across the symmetric channel family
    SweepQ {
        #[arg(long, default_value_t = 0.5)]
        q_min: f64,
        #[arg(long, default_value_t = 50.0)]
        q_max: f64,
        /// Number of log-spaced sample variances
        #[arg(long, default_value_t = 100)]
        n: usize,
        /// Also write the rows to a CSV file
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-direction optimum: sign pattern, best squeezing, boundary fidelity
    SweepPhi {
        #[arg(long, help = STATE_HELP)]
        state: String,
        #[arg(long, default_value = "coherent", help = INPUT_HELP)]
        input: String,
        /// Number of directions sampled uniformly over [0, pi)
        #[arg(long, default_value_t = 256)]
        n: usize,
        /// Also write the rows to a CSV file
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run the frozen verification targets; exits 1 when any of them fails
    Reproduce {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let started = Instant::now();
    let cli = Cli::parse();
    let code = match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::NoConvergence { .. } => 1,
                _ => 2,
            }
        }
    };
    eprintln!("elapsed: {:.3}s", started.elapsed().as_secs_f64());
    ExitCode::from(code)
}

fn run(cmd: Cmd) -> Result<u8> {
    let seed = resolve::seed()?;
    match cmd {
        Cmd::Check { state, tol, out } => check(&state, tol, seed, out.as_deref()),
        Cmd::Fidelity {
            state,
            input,
            xi,
            phi,
            out,
        } => fidelity(&state, &input, &xi, phi, seed, out.as_deref()),
        Cmd::Optimize {
            state,
            input,
            grid,
            out,
        } => run_optimize(&state, &input, grid, seed, out.as_deref()),
        Cmd::SweepQ {
            q_min,
            q_max,
            n,
            csv,
            out,
        } => sweep_q(q_min, q_max, n, seed, csv.as_deref(), out.as_deref()),
        Cmd::SweepPhi {
            state,
            input,
            n,
            csv,
            out,
        } => sweep_phi(&state, &input, n, seed, csv.as_deref(), out.as_deref()),
        Cmd::Reproduce { out } => reproduce(seed, out.as_deref()),
    }
}

fn check(state_spec: &str, tol: f64, seed: u64, out: Option<&Path>) -> Result<u8> {
    let state = resolve::state(state_spec)?;
    let genuine = state.is_genuine(tol);
    // separability is only defined for a physical pair, so it is reported
    // as null when the state itself already failed
    let separable = if genuine.passed {
        let v = state.partial_trace_third().is_separable(tol)?;
        json!({ "min_eig": v.min_eig, "passed": v.passed })
    } else {
        Value::Null
    };
    let results = json!({
        "genuine": { "min_eig": genuine.min_eig, "passed": genuine.passed },
        "reduced_pair_separable": separable,
    });
    report::emit(
        "check",
        json!({ "state": state_spec, "tol": tol }),
        results,
        seed,
        out,
    )?;
    Ok(if genuine.passed { 0 } else { 1 })
}

fn fidelity(
    state_spec: &str,
    input_spec: &str,
    xi_text: &str,
    phi: f64,
    seed: u64,
    out: Option<&Path>,
) -> Result<u8> {
    let state = resolve::state(state_spec)?;
    let input = resolve::input(input_spec)?;
    let xi: Squeezing = xi_text.parse()?;
    let spec = MeasurementSpec::new(xi, phi)?;
    let conditioned = conditional_fidelity(&state, &input, &spec)?;
    let bare = fidelity_tr(&state.partial_trace_third(), &input)?;
    let results = json!({
        "bare_fidelity": bare.fidelity,
        "det_gamma": conditioned.gamma.det(),
        "fidelity": conditioned.fidelity,
        "gain": conditioned.fidelity - bare.fidelity,
    });
    report::emit(
        "fidelity",
        json!({
            "input": input_spec,
            "phi": phi,
            "state": state_spec,
            "xi": xi.to_string(),
        }),
        results,
        seed,
        out,
    )?;
    Ok(0)
}

fn run_optimize(
    state_spec: &str,
    input_spec: &str,
    grid: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<u8> {
    let state = resolve::state(state_spec)?;
    let input = resolve::input(input_spec)?;
    let found = optimize(&state, &input, grid)?;
    let (class, quadrature_phase) = report::class_fields(&found.class);
    let candidates: Vec<Value> = found
        .candidates
        .iter()
        .map(|c| {
            json!({
                "fidelity": c.fidelity,
                "origin": c.origin,
                "phi": c.phi,
                "xi": c.xi.to_string(),
            })
        })
        .collect();
    let results = json!({
        "bare_fidelity": found.bare_fidelity,
        "candidates": candidates,
        "class": class,
        "fidelity": found.fidelity,
        "gain": found.fidelity - found.bare_fidelity,
        "phi": found.phi,
        "quadrature_phase": quadrature_phase,
        "xi": found.xi.to_string(),
    });
    report::emit(
        "optimize",
        json!({ "grid": grid, "input": input_spec, "state": state_spec }),
        results,
        seed,
        out,
    )?;
    Ok(0)
}

fn sweep_q(
    q_min: f64,
    q_max: f64,
    n: usize,
    seed: u64,
    csv: Option<&Path>,
    out: Option<&Path>,
) -> Result<u8> {
    if !(0.5..).contains(&q_min) || q_max < q_min || n < 2 {
        return Err(Error::BadInput(format!(
            "need 0.5 <= q_min <= q_max and n >= 2, got q_min={q_min}, q_max={q_max}, n={n}"
        )));
    }
    let input = resolve::input("coherent")?;
    let mut rows = Vec::with_capacity(n);
    let mut json_rows = Vec::with_capacity(n);
    let (lo, hi) = (q_min.ln(), q_max.ln());
    for i in 0..n {
        let q = (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp();
        let state = build_symmetric_channel(q)?;
        let ctx = build_context(&state, &input)?;
        let gamma = ctx.gamma_at(0.0);
        let bare = ctx.bare_gamma().fidelity();
        let assisted = assisted_fidelity_symmetric(q)?;
        rows.push(vec![
            report::sig(q),
            report::sig(gamma),
            report::sig(bare),
            report::sig(assisted),
        ]);
        json_rows.push(json!([q, gamma, bare, assisted]));
    }
    if let Some(path) = csv {
        report::write_csv(path, "q,gamma,F_tr,F_assisted", &rows)?;
    }
    let results = json!({
        "columns": ["q", "gamma", "F_tr", "F_assisted"],
        "rows": json_rows,
    });
    report::emit(
        "sweep-q",
        json!({ "n": n, "q_max": q_max, "q_min": q_min }),
        results,
        seed,
        out,
    )?;
    Ok(0)
}

fn sweep_phi(
    state_spec: &str,
    input_spec: &str,
    n: usize,
    seed: u64,
    csv: Option<&Path>,
    out: Option<&Path>,
) -> Result<u8> {
    if n < 2 {
        return Err(Error::BadInput(format!("need n >= 2 directions, got {n}")));
    }
    let state = resolve::state(state_spec)?;
    let input = resolve::input(input_spec)?;
    let ctx = build_context(&state, &input)?;
    let mut rows = Vec::with_capacity(n);
    let mut json_rows = Vec::with_capacity(n);
    for i in 0..n {
        let phi = PI * i as f64 / n as f64;
        let prof = phase_profile(&ctx, phi)?;
        let f_zero = ctx.fidelity(Squeezing::Zero, phi)?;
        rows.push(vec![
            report::sig(phi),
            report::sig(prof.gamma),
            report::sig(prof.gamma_shift),
            (prof.p as u8).to_string(),
            report::xi_csv(prof.xi_bar),
            report::sig(prof.f_tilde),
            report::sig(f_zero),
        ]);
        json_rows.push(json!([
            phi,
            prof.gamma,
            prof.gamma_shift,
            prof.p,
            prof.xi_bar.to_string(),
            prof.f_tilde,
            f_zero,
        ]));
    }
    if let Some(path) = csv {
        report::write_csv(path, "phi,gamma,gamma_shift,p,xi_bar,F_tilde,F_zero", &rows)?;
    }
    let results = json!({
        "columns": ["phi", "gamma", "gamma_shift", "p", "xi_bar", "F_tilde", "F_zero"],
        "rows": json_rows,
    });
    report::emit(
        "sweep-phi",
        json!({ "input": input_spec, "n": n, "state": state_spec }),
        results,
        seed,
        out,
    )?;
    Ok(0)
}

fn reproduce(seed: u64, out: Option<&Path>) -> Result<u8> {
    let outcomes = targets::run_all(seed)?;
    let all_passed = outcomes.iter().all(|t| t.passed);
    let list: Vec<Value> = outcomes
        .into_iter()
        .map(|t| json!({ "detail": t.detail, "name": t.name, "passed": t.passed }))
        .collect();
    report::emit(
        "reproduce",
        json!({ "targets": list.len() }),
        json!({ "all_passed": all_passed, "targets": list }),
        seed,
        out,
    )?;
    Ok(if all_passed { 0 } else { 1 })
}
