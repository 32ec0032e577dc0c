//! Teleportation fidelity through a shared two-mode Gaussian state, bare or
//! conditioned on a Gaussian measurement of a third mode.
//!
//! For a pure input with correlation matrix `V_in`, the fidelity of the
//! standard continuous-variable teleportation protocol is
//! `F = 1/sqrt(det Gamma)` with
//!
//! ```text
//! Gamma = 2 V_in + R aa R + bb - R ab - ab^T R,    R = diag(1, -1).
//! ```
//!
//! Measuring the third mode with a pure squeezed state of correlation matrix
//! `V0` updates the pair's correlation matrix by a Schur-complement-like
//! subtraction built from
//!
//! ```text
//! M = (1/g) Omega [2 (det V0 + 1/4) V0 + 4 det V0 C] Omega^T,
//! g = 4 det V0 det C + 2 (det V0 + 1/4) tr(V0 Omega C Omega^T)
//!     + (det V0 + 1/4)^2,
//! ```
//!
//! where `C` is the third mode's own block. The conditioned Gamma is the
//! rank-style update `Gamma - Sigma^T M Sigma` with `Sigma = ac^T R - bc^T`,
//! independent of the measurement outcome; outcomes only shift first moments.

use crate::error::{Error, Result};
use crate::gaussian::{
    momentum_flip, omega, InputState, MeasurementSpec, Squeezing, ThreeModeState, TwoModeState,
};
use nalgebra::{Matrix2, Vector2, Vector4};
use std::f64::consts::FRAC_PI_2;

/// Symmetric positive definite 2x2 matrix whose determinant sets a fidelity.
#[derive(Clone, Copy, Debug)]
pub struct GammaMatrix {
    m: Matrix2<f64>,
    det: f64,
}

impl GammaMatrix {
    pub fn new(m: Matrix2<f64>) -> Result<Self> {
        let scale = 1f64.max(m.amax());
        if m.iter().any(|x| !x.is_finite()) || (m[(0, 1)] - m[(1, 0)]).abs() > 1e-9 * scale {
            return Err(Error::NotSymmetric("Gamma"));
        }
        let det = m.determinant();
        if m[(0, 0)] <= 0.0 || det <= 0.0 {
            return Err(Error::NonPhysical(format!(
                "Gamma must be positive definite (diag {:.3e}, det {:.3e})",
                m[(0, 0)],
                det
            )));
        }
        Ok(GammaMatrix { m, det })
    }

    pub fn matrix(&self) -> &Matrix2<f64> {
        &self.m
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    /// `1/sqrt(det)`.
    pub fn fidelity(&self) -> f64 {
        1.0 / self.det.sqrt()
    }
}

/// Result of a fidelity computation, with the Gamma it came from and the
/// measurement that conditioned it, if any.
#[derive(Clone, Copy, Debug)]
pub struct FidelityReport {
    pub fidelity: f64,
    pub gamma: GammaMatrix,
    pub measurement: Option<MeasurementSpec>,
}

/// Gamma of the bare pair (no measurement on the third mode).
pub fn gamma_tr(reduced: &TwoModeState, input: &InputState) -> Result<GammaMatrix> {
    let r = momentum_flip();
    let m = 2.0 * input.cm() + r * reduced.aa() * r + reduced.bb()
        - r * reduced.ab()
        - reduced.ab().transpose() * r;
    GammaMatrix::new(m)
}

/// Fidelity of the bare pair.
pub fn fidelity_tr(reduced: &TwoModeState, input: &InputState) -> Result<FidelityReport> {
    let gamma = gamma_tr(reduced, input)?;
    Ok(FidelityReport {
        fidelity: gamma.fidelity(),
        gamma,
        measurement: None,
    })
}

/// Kernel of the conditional update, with its normalization `g`.
#[derive(Clone, Copy, Debug)]
pub struct MeasurementMatrix {
    pub matrix: Matrix2<f64>,
    /// `g > 0` for any physical third-mode block paired with a valid
    /// measurement state.
    pub normalization: f64,
}

/// `M` and `g` for measurement state `v0` against third-mode block `c`.
pub fn measurement_matrix(v0: &Matrix2<f64>, c: &Matrix2<f64>) -> Result<MeasurementMatrix> {
    let om = omega();
    let dv = v0.determinant();
    let half_sum = dv + 0.25;
    let g = 4.0 * dv * c.determinant() + 2.0 * half_sum * (v0 * om * c * om.transpose()).trace()
        + half_sum * half_sum;
    if !g.is_finite() || g <= 0.0 {
        return Err(Error::NonPhysical(format!(
            "normalization g = {g:.3e} must be positive; the third-mode block is not physical"
        )));
    }
    let core = 2.0 * half_sum * v0 + 4.0 * dv * c;
    Ok(MeasurementMatrix {
        matrix: om * core * om.transpose() / g,
        normalization: g,
    })
}

/// `Sigma = ac^T R - bc^T`, the lever arm of the third mode on the pair.
pub(crate) fn sigma_of(state: &ThreeModeState) -> Matrix2<f64> {
    state.ac().transpose() * momentum_flip() - state.bc().transpose()
}

/// Correlation matrix of the pair conditioned on measuring the third mode,
/// including the conditional displacement for the given outcome amplitude.
/// Only finite squeezing has a conditional state in closed form.
pub fn conditional_cm(state: &ThreeModeState, spec: &MeasurementSpec) -> Result<TwoModeState> {
    let v0 = spec.covariance()?;
    let mm = measurement_matrix(&v0, state.cc())?;
    let m = mm.matrix;
    let e = state.ac();
    let d = state.bc();
    let aa = state.aa() - e * m * e.transpose();
    let ab = state.ab() - e * m * d.transpose();
    let bb = state.bb() - d * m * d.transpose();
    TwoModeState::new(aa, ab, bb, conditional_displacement(state, spec)?)
}

/// First moments of the pair after the measurement: the unmeasured modes are
/// dragged toward the outcome by the same kernel `M` that narrows the
/// correlations.
pub fn conditional_displacement(state: &ThreeModeState, spec: &MeasurementSpec) -> Result<Vector4<f64>> {
    let v0 = spec.covariance()?;
    let mm = measurement_matrix(&v0, state.cc())?;
    let delta = spec.displacement() - state.displacement_third();
    let pull_a = state.ac() * mm.matrix * delta;
    let pull_b = state.bc() * mm.matrix * delta;
    let d = state.displacement();
    Ok(Vector4::new(
        d[0] + pull_a[0],
        d[1] + pull_a[1],
        d[2] + pull_b[0],
        d[3] + pull_b[1],
    ))
}

/// Probability density of the measurement outcome encoded in `spec`
/// (its amplitude, relative to the third mode's own displacement):
///
/// ```text
/// P0 = exp(-(1/2) delta^T K^{-1} delta) / sqrt(g),
/// K  = 2 C + V0 + V0 / (4 det V0),     delta = d0 - dc.
/// ```
///
/// Undefined in the homodyne limits, where the outcome set is continuous and
/// the density collapses.
pub fn outcome_probability(state: &ThreeModeState, spec: &MeasurementSpec) -> Result<f64> {
    let v0 = spec.covariance()?;
    let mm = measurement_matrix(&v0, state.cc())?;
    let k = 2.0 * state.cc() + v0 + v0 / (4.0 * v0.determinant());
    let delta = spec.displacement() - state.displacement_third();
    let det_k = k.determinant();
    if det_k <= 0.0 {
        return Err(Error::NonPhysical(
            "outcome kernel must be positive definite".into(),
        ));
    }
    // 2x2 inverse applied to delta
    let y = Matrix2::new(k[(1, 1)], -k[(0, 1)], -k[(1, 0)], k[(0, 0)]) * delta / det_k;
    Ok((-0.5 * delta.dot(&y)).exp() / mm.normalization.sqrt())
}

/// Fidelity of the pair conditioned on the measurement. Finite squeezing goes
/// through the conditional Gamma; the homodyne limits use the closed forms of
/// the `xi -> 0` and `xi -> inf` boundaries, which exist even though the
/// conditional correlation matrix itself diverges.
pub fn conditional_fidelity(
    state: &ThreeModeState,
    input: &InputState,
    spec: &MeasurementSpec,
) -> Result<FidelityReport> {
    let gamma = match spec.xi() {
        Squeezing::Finite(_) => {
            let v0 = spec.covariance()?;
            let mm = measurement_matrix(&v0, state.cc())?;
            let sigma = sigma_of(state);
            let bare = gamma_tr(&state.partial_trace_third(), input)?;
            GammaMatrix::new(bare.matrix() - sigma.transpose() * mm.matrix * sigma)?
        }
        Squeezing::Zero => homodyne_gamma(state, input, spec.phi())?,
        Squeezing::Infinite => homodyne_gamma(state, input, spec.phi() - FRAC_PI_2)?,
    };
    Ok(FidelityReport {
        fidelity: gamma.fidelity(),
        gamma,
        measurement: Some(*spec),
    })
}

/// Homodyne boundary of the conditional Gamma at squeezed direction `phi`:
/// `det Gamma` drops by the quadrature ratio
/// `(f^T Gamma_bare f) / (phivec^T C phivec)` with `f = Omega^T Sigma^T phivec`.
/// Returned as a diagonal surrogate carrying the right determinant, since the
/// limit matrix itself is direction-degenerate.
fn homodyne_gamma(state: &ThreeModeState, input: &InputState, phi: f64) -> Result<GammaMatrix> {
    let bare = gamma_tr(&state.partial_trace_third(), input)?;
    let phivec = Vector2::new(phi.sin(), phi.cos());
    let f = omega().transpose() * sigma_of(state).transpose() * phivec;
    let kx = (f.transpose() * bare.matrix() * f)[(0, 0)];
    let ky = (phivec.transpose() * state.cc() * phivec)[(0, 0)];
    if ky <= 0.0 {
        return Err(Error::NonPhysical(format!(
            "third-mode quadrature variance {ky:.3e} must be positive"
        )));
    }
    let det = bare.det() - kx / ky;
    if det <= 0.0 {
        return Err(Error::NonPhysical(format!(
            "conditioned det Gamma = {det:.3e} must stay positive"
        )));
    }
    GammaMatrix::new(Matrix2::new(det.sqrt(), 0.0, 0.0, det.sqrt()))
}
