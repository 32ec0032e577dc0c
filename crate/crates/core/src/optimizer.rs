//! Search for the local Gaussian measurement of the third mode that
//! maximizes the pair's teleportation fidelity.
//!
//! Every pure single-mode measurement is a squeezing magnitude `xi` and a
//! direction `phi`. Over `xi` at fixed `phi`, the conditioned `det Gamma`
//! is a Moebius function of `xi`, so its derivative sign is carried by the
//! quadratic
//!
//! ```text
//! P(xi) = gamma(phi - pi/2) xi^2 - 2 omega(phi) xi - gamma(phi),
//! ```
//!
//! built from two scalar indicators of the channel geometry:
//!
//! ```text
//! gamma(phi) = u_x k_x(phi) + u_y k_y(phi),
//! omega(phi) = (k_x(phi) k_y(phi - pi/2) - k_y(phi) k_x(phi - pi/2)) / 2,
//! k_x(phi)   = phivec^T U phivec,   U = Sigma Omega Gamma Omega^T Sigma^T,
//! k_y(phi)   = phivec^T C phivec,   phivec = (sin phi, cos phi),
//! u_x        = det C + 1/4,
//! u_y        = (det Sigma)^2 - tr(Omega C Omega^T U).
//! ```
//!
//! Where both `gamma(phi) < 0` and `gamma(phi - pi/2) < 0` the fidelity has
//! an interior maximum at the positive root `xi_minus` of `P`; elsewhere the
//! supremum sits on a homodyne boundary (`xi -> 0` or `xi -> inf`). The
//! optimizer walks the finitely many phase regions this sign pattern cuts
//! out of `[0, pi)`, collects the candidate maxima of each, and keeps the
//! best.

use crate::error::{Error, Result};
use crate::fidelity::{gamma_tr, sigma_of, GammaMatrix};
use crate::gaussian::{canonical_phase, omega, InputState, Squeezing, ThreeModeState};
use nalgebra::{Matrix2, Vector2};
use std::f64::consts::{FRAC_PI_2, PI};

/// Everything the phase scan needs, precomputed from one channel + input.
#[derive(Clone, Debug)]
pub struct OptimizerContext {
    gamma: GammaMatrix,
    sigma: Matrix2<f64>,
    u_mat: Matrix2<f64>,
    u_vec: Vector2<f64>,
    c: Matrix2<f64>,
    scale: f64,
}

/// Precomputes the scan quantities. Fails when the bare pair cannot
/// teleport at all (its Gamma is not positive definite).
pub fn build_context(state: &ThreeModeState, input: &InputState) -> Result<OptimizerContext> {
    let gamma = gamma_tr(&state.partial_trace_third(), input)?;
    let sigma = sigma_of(state);
    let om = omega();
    let u_mat = sigma * om * gamma.matrix() * om.transpose() * sigma.transpose();
    let c = *state.cc();
    let u_vec = Vector2::new(
        c.determinant() + 0.25,
        sigma.determinant().powi(2) - (u_mat * om * c * om.transpose()).trace(),
    );
    Ok(OptimizerContext {
        gamma,
        sigma,
        u_mat,
        u_vec,
        c,
        scale: 1.0 + state.matrix().amax(),
    })
}

impl OptimizerContext {
    pub fn bare_gamma(&self) -> &GammaMatrix {
        &self.gamma
    }

    pub fn sigma(&self) -> &Matrix2<f64> {
        &self.sigma
    }

    /// Quadratic-form pair `(k_x, k_y)` at direction `phi`.
    pub fn k(&self, phi: f64) -> Vector2<f64> {
        let v = Vector2::new(phi.sin(), phi.cos());
        Vector2::new((v.transpose() * self.u_mat * v)[0], (v.transpose() * self.c * v)[0])
    }

    pub fn gamma_at(&self, phi: f64) -> f64 {
        self.u_vec.dot(&self.k(phi))
    }

    pub fn omega_at(&self, phi: f64) -> f64 {
        let k0 = self.k(phi);
        let ks = self.k(phi - FRAC_PI_2);
        0.5 * (k0.x * ks.y - k0.y * ks.x)
    }

    /// True where the optimal squeezing is finite (interior maximum).
    pub fn p(&self, phi: f64) -> bool {
        self.gamma_at(phi) < 0.0 && self.gamma_at(phi - FRAC_PI_2) < 0.0
    }

    /// Positive root of `P(xi)`; the best finite squeezing at `phi` when
    /// `p(phi)` holds. `None` when `P` has no positive root.
    pub fn xi_minus(&self, phi: f64) -> Option<f64> {
        let g0 = self.gamma_at(phi);
        let gs = self.gamma_at(phi - FRAC_PI_2);
        let w = self.omega_at(phi);
        let disc = w * w + gs * g0;
        if disc < 0.0 {
            return None;
        }
        let s = disc.sqrt();
        // two algebraically equal forms; pick the one that avoids
        // cancellation between w and s
        let xi = if w > 0.0 {
            -g0 / (w + s)
        } else if gs != 0.0 {
            (w - s) / gs
        } else {
            return None;
        };
        (xi.is_finite() && xi > 0.0).then_some(xi)
    }

    /// Conditioned fidelity as a function of the measurement alone; agrees
    /// with the full conditional-state route but costs only a few scalar
    /// operations, which is what makes the dense phase scan cheap.
    pub fn fidelity(&self, xi: Squeezing, phi: f64) -> Result<f64> {
        let arg = match xi {
            Squeezing::Zero => {
                let k = self.k(phi);
                self.gamma.det() - k.x / k.y
            }
            Squeezing::Infinite => {
                let k = self.k(phi - FRAC_PI_2);
                self.gamma.det() - k.x / k.y
            }
            Squeezing::Finite(x) => {
                let k0 = self.k(phi);
                let ks = self.k(phi - FRAC_PI_2);
                let num = -self.u_vec.y + 0.5 * x * ks.x + 0.5 / x * k0.x;
                let den = self.u_vec.x + 0.5 * x * ks.y + 0.5 / x * k0.y;
                self.gamma.det() - num / den
            }
        };
        // NaN (a 0/0 from degenerate inputs) must be rejected too
        if arg <= 0.0 || arg.is_nan() {
            return Err(Error::NonPhysical(format!(
                "conditioned det Gamma = {arg:.3e} must stay positive"
            )));
        }
        Ok(1.0 / arg.sqrt())
    }

    /// `tau = U Omega C Omega^T`; its anisotropy locates the stationary
    /// directions of the homodyne fidelity.
    pub fn tau(&self) -> Matrix2<f64> {
        let om = omega();
        self.u_mat * om * self.c * om.transpose()
    }

    /// True when the fidelity does not depend on `phi` at all (`U` and `C`
    /// are proportional, e.g. for the permutation-symmetric channels).
    pub fn is_phase_independent(&self) -> bool {
        let t = self.tau();
        let aniso = (t[(0, 0)] - t[(1, 1)]).powi(2) + (t[(0, 1)] + t[(1, 0)]).powi(2);
        let tol = 1e-10 * (1.0 + t.amax());
        aniso <= tol * tol
    }

    /// True when the third mode is uncorrelated with the pair, so no
    /// measurement on it can change the fidelity.
    pub fn degenerate(&self) -> bool {
        self.sigma.amax() <= 1e-12 * self.scale
    }
}

/// Per-direction optimum of the squeezing, with the indicators that chose it.
#[derive(Clone, Copy, Debug)]
pub struct PhaseProfile {
    pub phi: f64,
    pub kx: f64,
    pub ky: f64,
    pub gamma: f64,
    /// `gamma(phi - pi/2)`.
    pub gamma_shift: f64,
    pub omega: f64,
    /// Interior-maximum flag; both gammas negative.
    pub p: bool,
    pub xi_bar: Squeezing,
    /// Fidelity of the branch the sign pattern names: the interior maximum
    /// where `p` holds, the `xi -> 0` boundary elsewhere.
    pub f_tilde: f64,
    /// Best fidelity over all squeezings at this direction.
    pub fidelity: f64,
}

/// Optimum over `xi` at fixed direction `phi`.
pub fn phase_profile(ctx: &OptimizerContext, phi: f64) -> Result<PhaseProfile> {
    let k = ctx.k(phi);
    let g0 = ctx.gamma_at(phi);
    let gs = ctx.gamma_at(phi - FRAC_PI_2);
    let w = ctx.omega_at(phi);
    let p = g0 < 0.0 && gs < 0.0;
    let (xi_bar, f_tilde, fidelity) = if p {
        match ctx.xi_minus(phi) {
            Some(x) => {
                let f = ctx.fidelity(Squeezing::Finite(x), phi)?;
                (Squeezing::Finite(x), f, f)
            }
            // root pushed past any float: the xi -> inf boundary is the limit
            None => {
                let f = ctx.fidelity(Squeezing::Infinite, phi)?;
                (Squeezing::Infinite, f, f)
            }
        }
    } else {
        let f0 = ctx.fidelity(Squeezing::Zero, phi)?;
        let fi = ctx.fidelity(Squeezing::Infinite, phi)?;
        if fi > f0 {
            (Squeezing::Infinite, f0, fi)
        } else {
            (Squeezing::Zero, f0, f0)
        }
    };
    Ok(PhaseProfile {
        phi,
        kx: k.x,
        ky: k.y,
        gamma: g0,
        gamma_shift: gs,
        omega: w,
        p,
        xi_bar,
        f_tilde,
        fidelity,
    })
}

/// Stationary directions of the homodyne (`xi -> 0`) fidelity.
#[derive(Clone, Debug, PartialEq)]
pub enum StationaryPhases {
    /// `k_x / k_y` is constant; every direction is stationary.
    PhaseIndependent,
    /// The distinct stationary directions in `[0, pi)`.
    Phases(Vec<f64>),
}

/// Solves `d/dphi (k_x / k_y) = 0` in closed form via the generalized
/// eigendirections of the pencil `(U, C)`, expressed through `tau`.
pub fn homodyne_stationary_phases(ctx: &OptimizerContext) -> StationaryPhases {
    let t = ctx.tau();
    let d = t[(0, 0)] - t[(1, 1)];
    let s = t[(0, 1)] + t[(1, 0)];
    let denom = d * d + s * s;
    let tol = 1e-10 * (1.0 + t.amax());
    if denom <= tol * tol {
        return StationaryPhases::PhaseIndependent;
    }
    // tr^2 - 4 det of tau, guaranteed nonnegative because the pencil is
    // symmetric-definite; clamp roundoff
    let root = (d * d + 4.0 * t[(0, 1)] * t[(1, 0)]).max(0.0).sqrt();
    let mut phases = Vec::with_capacity(4);
    for sign in [1.0, -1.0] {
        let v = ((t[(0, 1)].powi(2) - t[(1, 0)].powi(2) + sign * d * root) / denom)
            .clamp(-1.0, 1.0);
        let half = 0.5 * v.acos();
        phases.push(canonical_phase(half));
        phases.push(canonical_phase(PI - half));
    }
    phases.sort_by(f64::total_cmp);
    phases.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    StationaryPhases::Phases(phases)
}

/// Directions in `[0, pi)` where the sign pattern of
/// `(gamma(phi), gamma(phi - pi/2))` changes, located by scanning `grid`
/// points and bisecting each bracketed crossing.
pub fn p_region_borders(ctx: &OptimizerContext, grid: usize) -> Vec<f64> {
    let n = grid.max(64);
    let b = |phi: f64| ctx.gamma_at(phi).max(ctx.gamma_at(phi - FRAC_PI_2));
    let mut borders = Vec::new();
    for i in 0..n {
        let lo = PI * i as f64 / n as f64;
        let hi = PI * (i + 1) as f64 / n as f64;
        let (blo, bhi) = (b(lo), b(hi));
        if blo == 0.0 {
            borders.push(lo);
        } else if blo * bhi < 0.0 {
            borders.push(bisect_zero(&b, lo, hi, blo));
        }
    }
    borders.sort_by(f64::total_cmp);
    borders.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    borders
}

fn bisect_zero<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, mut flo: f64) -> f64 {
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

const INV_GOLDEN: f64 = 0.618_033_988_749_894_9;

fn golden_max<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64) -> f64 {
    let mut x1 = hi - INV_GOLDEN * (hi - lo);
    let mut x2 = lo + INV_GOLDEN * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > 1e-12 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_GOLDEN * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_GOLDEN * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

/// One evaluated measurement the search considered.
#[derive(Clone, Copy, Debug)]
pub struct Candidate {
    pub phi: f64,
    pub xi: Squeezing,
    pub fidelity: f64,
    /// Which part of the search produced it.
    pub origin: &'static str,
}

/// What kind of measurement the optimum turned out to be.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MeasurementClass {
    /// Unit squeezing: projection onto coherent states.
    Heterodyne,
    /// Finite non-unit squeezing.
    SqueezedHeterodyne,
    /// A squeezing limit: projection onto a single quadrature, the one at
    /// angle `quadrature_phase` from the x axis.
    Homodyne { quadrature_phase: f64 },
    /// The third mode is uncorrelated with the pair; every measurement
    /// (or none) gives the same fidelity.
    Unconstrained,
}

#[derive(Clone, Debug)]
pub struct OptimizationResult {
    pub xi: Squeezing,
    pub phi: f64,
    pub fidelity: f64,
    /// Fidelity with the third mode simply discarded.
    pub bare_fidelity: f64,
    pub class: MeasurementClass,
    /// The structured candidates that were compared (dense-grid points are
    /// folded into the comparison but not recorded).
    pub candidates: Vec<Candidate>,
}

/// Prefer higher fidelity; within a 1e-9 tie, prefer the smaller direction,
/// so that symmetric channels deterministically report `phi = 0`.
fn consider(best: &mut Option<Candidate>, c: Candidate) {
    if !c.fidelity.is_finite() {
        return;
    }
    match best {
        None => *best = Some(c),
        Some(b) => {
            if c.fidelity > b.fidelity + 1e-9
                || (c.fidelity > b.fidelity - 1e-9 && c.phi < b.phi - 1e-12)
            {
                *best = Some(c);
            }
        }
    }
}

/// Maximal arcs of the `phi` circle (period `pi`) where `p` holds, given the
/// sorted borders. Arcs that wrap are returned with `hi = lo_next + pi`.
fn p_one_regions(ctx: &OptimizerContext, borders: &[f64]) -> Vec<(f64, f64)> {
    if borders.is_empty() {
        return if ctx.p(0.0) { vec![(0.0, PI)] } else { Vec::new() };
    }
    let mut regions = Vec::new();
    for i in 0..borders.len() {
        let lo = borders[i];
        let hi = if i + 1 < borders.len() {
            borders[i + 1]
        } else {
            borders[0] + PI
        };
        if ctx.p(0.5 * (lo + hi)) {
            regions.push((lo, hi));
        }
    }
    regions
}

/// Globally optimal pure Gaussian measurement of the third mode.
///
/// `phase_grid` controls the density of the sign-pattern scan (it is clamped
/// below at 64); the candidates themselves are refined to ~1e-12 in `phi`,
/// so the grid only needs to be fine enough to bracket every region.
pub fn optimize(
    state: &ThreeModeState,
    input: &InputState,
    phase_grid: usize,
) -> Result<OptimizationResult> {
    let verdict = state.is_genuine(EIG_CHECK_TOL);
    if !verdict.passed {
        return Err(Error::NonPhysical(format!(
            "state is not a physical three-mode state (min eigenvalue {:+.3e})",
            verdict.min_eig
        )));
    }
    let ctx = build_context(state, input)?;
    let bare = ctx.gamma.fidelity();
    if ctx.degenerate() {
        return Ok(OptimizationResult {
            xi: Squeezing::Zero,
            phi: 0.0,
            fidelity: bare,
            bare_fidelity: bare,
            class: MeasurementClass::Unconstrained,
            candidates: Vec::new(),
        });
    }

    let n = phase_grid.max(64);
    let mut best: Option<Candidate> = None;
    let mut candidates = Vec::new();
    let keep = |best: &mut Option<Candidate>, list: &mut Vec<Candidate>, c: Candidate| {
        list.push(c);
        consider(best, c);
    };

    // dense scan: folds every grid direction into the comparison
    for i in 0..n {
        let phi = PI * i as f64 / n as f64;
        if let Ok(prof) = phase_profile(&ctx, phi) {
            consider(
                &mut best,
                Candidate {
                    phi,
                    xi: prof.xi_bar,
                    fidelity: prof.fidelity,
                    origin: "grid",
                },
            );
        }
    }

    // stationary directions of both homodyne boundaries
    if let StationaryPhases::Phases(phases) = homodyne_stationary_phases(&ctx) {
        for p0 in phases {
            for phi in [p0, canonical_phase(p0 + FRAC_PI_2)] {
                if let Ok(prof) = phase_profile(&ctx, phi) {
                    keep(
                        &mut best,
                        &mut candidates,
                        Candidate {
                            phi,
                            xi: prof.xi_bar,
                            fidelity: prof.fidelity,
                            origin: "stationary",
                        },
                    );
                }
            }
        }
    }

    // region borders: both squeezing limits exactly at the border, plus the
    // finite-squeezing profile nudged to either side
    let borders = p_region_borders(&ctx, n);
    for &b in &borders {
        for xi in [Squeezing::Zero, Squeezing::Infinite] {
            if let Ok(f) = ctx.fidelity(xi, b) {
                keep(
                    &mut best,
                    &mut candidates,
                    Candidate {
                        phi: b,
                        xi,
                        fidelity: f,
                        origin: "border",
                    },
                );
            }
        }
        for nudge in [-1e-9, 1e-9] {
            let phi = canonical_phase(b + nudge);
            if let Ok(prof) = phase_profile(&ctx, phi) {
                keep(
                    &mut best,
                    &mut candidates,
                    Candidate {
                        phi,
                        xi: prof.xi_bar,
                        fidelity: prof.fidelity,
                        origin: "border",
                    },
                );
            }
        }
    }

    // interior maxima: golden-section refinement inside each p region,
    // seeded by a coarse scan of the region
    for (lo, hi) in p_one_regions(&ctx, &borders) {
        let lo = lo + 1e-11;
        let hi = hi - 1e-11;
        if hi <= lo {
            continue;
        }
        let score = |phi: f64| {
            phase_profile(&ctx, phi)
                .map(|p| p.fidelity)
                .unwrap_or(f64::NEG_INFINITY)
        };
        let m = 256;
        let step = (hi - lo) / m as f64;
        let mut best_j = 0;
        let mut best_f = f64::NEG_INFINITY;
        for j in 0..m {
            let f = score(lo + (j as f64 + 0.5) * step);
            if f > best_f {
                best_f = f;
                best_j = j;
            }
        }
        let wl = (lo + (best_j as f64 - 0.5) * step).max(lo);
        let wh = (lo + (best_j as f64 + 1.5) * step).min(hi);
        let phi = canonical_phase(golden_max(&score, wl, wh));
        if let Ok(prof) = phase_profile(&ctx, phi) {
            keep(
                &mut best,
                &mut candidates,
                Candidate {
                    phi,
                    xi: prof.xi_bar,
                    fidelity: prof.fidelity,
                    origin: "golden",
                },
            );
        }
    }

    let mut best = best
        .ok_or_else(|| Error::NonPhysical("no admissible measurement was found".into()))?;
    if let Squeezing::Finite(x) = best.xi {
        // the permutation-symmetric optimum is exactly heterodyne; land on it
        if (x - 1.0).abs() < 1e-9 {
            best.xi = Squeezing::Finite(1.0);
        }
    }
    let class = match best.xi {
        Squeezing::Finite(1.0) => MeasurementClass::Heterodyne,
        Squeezing::Finite(_) => MeasurementClass::SqueezedHeterodyne,
        Squeezing::Zero => MeasurementClass::Homodyne {
            quadrature_phase: canonical_phase(best.phi + FRAC_PI_2),
        },
        Squeezing::Infinite => MeasurementClass::Homodyne {
            quadrature_phase: canonical_phase(best.phi),
        },
    };
    Ok(OptimizationResult {
        xi: best.xi,
        phi: best.phi,
        fidelity: best.fidelity,
        bare_fidelity: bare,
        class,
        candidates,
    })
}

const EIG_CHECK_TOL: f64 = 1e-9;

/// Closed form of the optimal assisted fidelity for the permutation-symmetric
/// channel family, whose optimum is always heterodyne.
pub fn assisted_fidelity_symmetric(q: f64) -> Result<f64> {
    if !q.is_finite() || q < 0.5 {
        return Err(Error::Domain(format!("q = {q} must be at least 0.5")));
    }
    let s = 0.5 * (q + 1.0);
    let t = 0.5 * q;
    let w = 0.5 * ((2.0 * q - 1.0) * (q + 1.0)).sqrt();
    let h = 1.0 + q + s - 2.0 * w;
    let lever = (w - t) * (w - t);
    let arg = h * h - lever * ((2.0 * s + 1.0) * h - lever) / ((s + 0.5) * (s + 0.5));
    Ok(1.0 / arg.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fidelity::{conditional_fidelity, fidelity_tr};
    use crate::gaussian::{
        build_example_channel, build_symmetric_channel, example_channel_1, example_channel_2,
        MeasurementSpec,
    };
    use crate::oracle::{random_genuine_channel, DEFAULT_SEED};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use nalgebra::{Complex, Matrix2, Vector6};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn coherent() -> InputState {
        InputState::coherent(Complex::new(0.0, 0.0))
    }

    fn ctx_of(state: &ThreeModeState) -> OptimizerContext {
        build_context(state, &coherent()).unwrap()
    }

    #[test]
    fn scan_quantities_frozen_first_example() {
        let ctx = ctx_of(&example_channel_1());
        assert_relative_eq!(ctx.u_mat[(0, 0)], 359.888291, max_relative = 1e-9);
        assert_relative_eq!(ctx.u_mat[(1, 1)], 1232.464475, max_relative = 1e-9);
        assert_abs_diff_eq!(ctx.u_mat[(0, 1)], 0.0, epsilon = 1e-9);
        assert_relative_eq!(ctx.u_vec.x, 231.29, max_relative = 1e-12);
        assert_relative_eq!(ctx.u_vec.y, -18931.09975159, max_relative = 1e-9);
        assert_relative_eq!(ctx.gamma_at(0.0), -2696.0078014181736, max_relative = 1e-9);
        assert_relative_eq!(
            ctx.gamma_at(-FRAC_PI_2),
            -204514.15339877817,
            max_relative = 1e-9
        );
        assert_relative_eq!(ctx.omega_at(0.0), 6631.5789984, max_relative = 1e-9);
        assert!(ctx.p(0.0) && ctx.p(1.0) && ctx.p(2.5));
    }

    #[test]
    fn gamma_profile_frozen_second_example() {
        // gamma(phi) = -0.664737 + 0.853470 cos(2 phi)
        let ctx = ctx_of(&example_channel_2());
        assert_relative_eq!(
            ctx.gamma_at(std::f64::consts::FRAC_PI_4),
            -0.6647367616310599,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            ctx.gamma_at(0.0) - ctx.gamma_at(std::f64::consts::FRAC_PI_4),
            0.853469937216,
            max_relative = 1e-8
        );
        for (phi, expect) in [
            (0.1, false),
            (0.5, true),
            (1.0, true),
            (1.6, false),
            (2.0, true),
            (2.9, false),
        ] {
            assert_eq!(ctx.p(phi), expect, "p({phi})");
        }
    }

    #[test]
    fn optimal_squeezing_is_heterodyne_for_symmetric_channels() {
        for q in [0.5, 0.8, 1.0, 2.0, 10.0, 50.0] {
            let ctx = ctx_of(&build_symmetric_channel(q).unwrap());
            assert!(ctx.is_phase_independent(), "q = {q}");
            assert!(ctx.p(0.7), "q = {q}");
            assert_abs_diff_eq!(ctx.xi_minus(0.7).unwrap(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn optimal_squeezing_frozen_first_example() {
        let ctx = ctx_of(&example_channel_1());
        assert_relative_eq!(
            ctx.xi_minus(0.0).unwrap(),
            0.08688008848646182,
            max_relative = 1e-9
        );
    }

    #[test]
    fn stationary_phases_second_example_are_the_axes() {
        let ctx = ctx_of(&example_channel_2());
        match homodyne_stationary_phases(&ctx) {
            StationaryPhases::Phases(ps) => {
                assert_eq!(ps.len(), 2);
                assert_abs_diff_eq!(ps[0], 0.0, epsilon = 1e-9);
                assert_abs_diff_eq!(ps[1], FRAC_PI_2, epsilon = 1e-9);
            }
            other => panic!("expected two stationary phases, got {other:?}"),
        }
    }

    #[test]
    fn stationary_phases_diagonal_coupling() {
        // zero pair-to-third cross block on the second mode keeps tau diagonal
        let state = build_example_channel(10.15, 5.52, 15.2, 0.0, 12.3, 6.96).unwrap();
        let ctx = ctx_of(&state);
        let t = ctx.tau();
        assert_abs_diff_eq!(t[(0, 1)], 0.0, epsilon = 1e-9);
        assert!(t[(0, 0)] > t[(1, 1)]);
        match homodyne_stationary_phases(&ctx) {
            StationaryPhases::Phases(ps) => {
                assert_eq!(ps.len(), 2);
                assert_abs_diff_eq!(ps[0], 0.0, epsilon = 1e-9);
                assert_abs_diff_eq!(ps[1], FRAC_PI_2, epsilon = 1e-9);
            }
            other => panic!("expected two stationary phases, got {other:?}"),
        }
    }

    #[test]
    fn borders_frozen_second_example() {
        let ctx = ctx_of(&example_channel_2());
        let borders = p_region_borders(&ctx, 1024);
        let phi1 = 0.3389721298603381;
        let expected = [phi1, FRAC_PI_2 - phi1, FRAC_PI_2 + phi1, PI - phi1];
        assert_eq!(borders.len(), 4);
        for (b, e) in borders.iter().zip(expected) {
            assert_abs_diff_eq!(*b, e, epsilon = 1e-9);
        }
        let regions = p_one_regions(&ctx, &borders);
        assert_eq!(regions.len(), 2);
    }

    #[test]
    fn optimize_first_example_squeezed_heterodyne() {
        let res = optimize(&example_channel_1(), &coherent(), 1024).unwrap();
        assert_eq!(res.class, MeasurementClass::SqueezedHeterodyne);
        assert_abs_diff_eq!(res.phi, 0.0, epsilon = 1e-9);
        match res.xi {
            Squeezing::Finite(x) => {
                assert_abs_diff_eq!(x, 0.08688008848646182, epsilon = 1e-6)
            }
            other => panic!("expected finite squeezing, got {other:?}"),
        }
        assert_abs_diff_eq!(res.fidelity, 0.619851467517812, epsilon = 1e-9);
        assert_abs_diff_eq!(res.bare_fidelity, 0.10902947342379074, epsilon = 1e-12);
    }

    #[test]
    fn optimize_second_example_homodyne() {
        let res = optimize(&example_channel_2(), &coherent(), 1024).unwrap();
        assert_eq!(res.xi, Squeezing::Zero);
        assert_abs_diff_eq!(res.phi, 0.0, epsilon = 1e-12);
        assert_eq!(
            res.class,
            MeasurementClass::Homodyne {
                quadrature_phase: res.phi + FRAC_PI_2
            }
        );
        assert_abs_diff_eq!(res.fidelity, 0.5265506281199429, epsilon = 1e-9);
    }

    #[test]
    fn optimize_symmetric_channels_heterodyne() {
        for q in [0.5, 1.0, 2.0, 10.0] {
            let res = optimize(&build_symmetric_channel(q).unwrap(), &coherent(), 1024).unwrap();
            assert_eq!(res.class, MeasurementClass::Heterodyne, "q = {q}");
            assert_eq!(res.xi, Squeezing::Finite(1.0), "q = {q}");
            assert_abs_diff_eq!(res.phi, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(
                res.fidelity,
                assisted_fidelity_symmetric(q).unwrap(),
                epsilon = 1e-9
            );
            assert!(res.fidelity >= res.bare_fidelity - 1e-12);
        }
    }

    #[test]
    fn optimize_uncoupled_third_mode_is_unconstrained() {
        let pair = build_symmetric_channel(2.0).unwrap().partial_trace_third();
        let state = ThreeModeState::new(
            *pair.aa(),
            *pair.ab(),
            Matrix2::zeros(),
            *pair.bb(),
            Matrix2::zeros(),
            Matrix2::identity() * 0.5,
            Vector6::zeros(),
        )
        .unwrap();
        let res = optimize(&state, &coherent(), 1024).unwrap();
        assert_eq!(res.class, MeasurementClass::Unconstrained);
        let bare = fidelity_tr(&pair, &coherent()).unwrap().fidelity;
        assert_eq!(res.fidelity, bare);
        assert!(res.candidates.is_empty());
    }

    #[test]
    fn optimize_rejects_unphysical_states() {
        let state = ThreeModeState::from_matrix(
            &(nalgebra::Matrix6::identity() * 0.1),
            Vector6::zeros(),
        )
        .unwrap();
        assert!(optimize(&state, &coherent(), 1024).is_err());
    }

    #[test]
    fn closed_form_symmetric_fidelity_frozen() {
        assert_abs_diff_eq!(
            assisted_fidelity_symmetric(0.5).unwrap(),
            0.45454545454545453,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            assisted_fidelity_symmetric(1.0).unwrap(),
            0.6421819973935455,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            assisted_fidelity_symmetric(2.0).unwrap(),
            8.0 / 11.0,
            epsilon = 1e-12
        );
        assert!(assisted_fidelity_symmetric(0.49).is_err());
    }

    /// `P(xi)`, the sign carrier of the squeezing derivative.
    fn sign_poly(ctx: &OptimizerContext, phi: f64, xi: f64) -> f64 {
        ctx.gamma_at(phi - FRAC_PI_2) * xi * xi - 2.0 * ctx.omega_at(phi) * xi
            - ctx.gamma_at(phi)
    }

    #[test]
    fn xi_minus_is_a_root_of_the_sign_polynomial() {
        let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
        let mut seen = 0;
        while seen < 40 {
            let state = random_genuine_channel(&mut rng);
            let ctx = ctx_of(&state);
            for k in 0..8 {
                let phi = PI * k as f64 / 8.0;
                if !ctx.p(phi) {
                    continue;
                }
                seen += 1;
                let xi = ctx.xi_minus(phi).unwrap();
                let scale = ctx.gamma_at(phi - FRAC_PI_2).abs() * xi * xi
                    + 2.0 * ctx.omega_at(phi).abs() * xi
                    + ctx.gamma_at(phi).abs();
                assert!(
                    sign_poly(&ctx, phi, xi).abs() <= 1e-8 * scale,
                    "P(xi_minus) = {:.3e} at scale {:.3e}",
                    sign_poly(&ctx, phi, xi),
                    scale
                );
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(96))]

        #[test]
        fn assisting_never_hurts_symmetric(q in 0.5f64..40.0) {
            let state = build_symmetric_channel(q).unwrap();
            let bare = fidelity_tr(&state.partial_trace_third(), &coherent()).unwrap().fidelity;
            let assisted = assisted_fidelity_symmetric(q).unwrap();
            prop_assert!(assisted >= bare - 1e-12);
        }

        #[test]
        fn scan_fidelity_matches_conditional_state_route(
            seed in 0u64..512,
            log_xi in -2.5f64..2.5,
            phi in 0.0f64..PI,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let state = random_genuine_channel(&mut rng);
            let ctx = ctx_of(&state);
            let xi = log_xi.exp();
            let via_scan = ctx.fidelity(Squeezing::Finite(xi), phi).unwrap();
            let spec = MeasurementSpec::new(Squeezing::Finite(xi), phi).unwrap();
            let via_state = conditional_fidelity(&state, &coherent(), &spec).unwrap().fidelity;
            prop_assert!(
                (via_scan - via_state).abs() <= 1e-10,
                "scan {via_scan} vs state {via_state}"
            );
        }

        #[test]
        fn inverting_the_squeezing_rotates_the_phase(
            seed in 0u64..512,
            log_xi in -2.5f64..2.5,
            phi in 0.0f64..PI,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let state = random_genuine_channel(&mut rng);
            let ctx = ctx_of(&state);
            let xi = log_xi.exp();
            let a = ctx.fidelity(Squeezing::Finite(xi), phi).unwrap();
            let b = ctx.fidelity(Squeezing::Finite(1.0 / xi), phi + FRAC_PI_2).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }

        #[test]
        fn sign_polynomial_carries_the_squeezing_derivative(
            seed in 0u64..512,
            log_xi in -1.5f64..1.5,
            phi in 0.0f64..PI,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let state = random_genuine_channel(&mut rng);
            let ctx = ctx_of(&state);
            let xi = log_xi.exp();
            let k0 = ctx.k(phi);
            let ks = ctx.k(phi - FRAC_PI_2);
            let den = ctx.u_vec.x + 0.5 * xi * ks.y + 0.5 / xi * k0.y;
            let f = ctx.fidelity(Squeezing::Finite(xi), phi).unwrap();
            let predicted = f.powi(3) / (4.0 * den * den * xi * xi) * sign_poly(&ctx, phi, xi);
            let h = 1e-5;
            let fp = ctx.fidelity(Squeezing::Finite(xi * (1.0 + h)), phi).unwrap();
            let fm = ctx.fidelity(Squeezing::Finite(xi * (1.0 - h)), phi).unwrap();
            let fd = (fp - fm) / (2.0 * xi * h);
            prop_assert!(
                (fd - predicted).abs() <= 1e-3 * fd.abs().max(predicted.abs()) + 1e-6,
                "finite difference {fd:.6e} vs closed form {predicted:.6e}"
            );
        }

        #[test]
        fn interior_maximum_dominates_where_p_holds(
            seed in 0u64..512,
            phi in 0.0f64..PI,
            log_xi in -3.0f64..3.0,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let state = random_genuine_channel(&mut rng);
            let ctx = ctx_of(&state);
            let prof = phase_profile(&ctx, phi).unwrap();
            let f_at = ctx.fidelity(Squeezing::Finite(log_xi.exp()), phi).unwrap();
            prop_assert!(prof.fidelity >= f_at - 1e-10);
            let f0 = ctx.fidelity(Squeezing::Zero, phi).unwrap();
            let fi = ctx.fidelity(Squeezing::Infinite, phi).unwrap();
            prop_assert!(prof.fidelity >= f0.max(fi) - 1e-10);
        }
    }
}
