//! Gaussian states of one, two and three bosonic modes in the correlation
//! matrix picture.
//!
//! Conventions used throughout the crate:
//! * phase-space ordering is `(x_a, p_a, x_b, p_b, x_c, p_c)`;
//! * the vacuum correlation matrix is `I/2`;
//! * a state is described by its characteristic function
//!   `exp(-eta^T V eta + i d^T eta)`, so second moments carry no extra 1/2.
//!
//! Physicality of an n-mode correlation matrix V is the Hermitian condition
//! `V - (i/2) J >= 0` with J the symplectic form; separability of a two-mode
//! state is the same condition after partial transposition of the second
//! mode, `J -> diag(Omega, -Omega)`.

use crate::error::{Error, Result};
use nalgebra::{Complex, DMatrix, Matrix2, Matrix4, Matrix6, Vector2, Vector4, Vector6};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

/// Default tolerance on spectral positivity verdicts.
pub const EIG_TOL: f64 = 1e-9;

/// Single-mode symplectic form `[[0, -1], [1, 0]]`.
pub fn omega() -> Matrix2<f64> {
    Matrix2::new(0.0, -1.0, 1.0, 0.0)
}

/// Symplectic form of `n_modes` modes: block-diagonal copies of [`omega`].
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        j[(2 * k, 2 * k + 1)] = -1.0;
        j[(2 * k + 1, 2 * k)] = 1.0;
    }
    j
}

/// Momentum flip `diag(1, -1)`; single-mode partial transpose.
pub(crate) fn momentum_flip() -> Matrix2<f64> {
    Matrix2::new(1.0, 0.0, 0.0, -1.0)
}

/// Two-mode form with the second mode partially transposed.
fn ppt_form() -> DMatrix<f64> {
    let mut j = symplectic_form(2);
    j[(2, 3)] = 1.0;
    j[(3, 2)] = -1.0;
    j
}

/// Smallest eigenvalue of the Hermitian matrix `V - (i/2) J`.
///
/// Works on the real symmetric embedding `[[V, J/2], [-J/2, V]]`, whose
/// spectrum is that of `V - (i/2) J` with doubled multiplicities.
fn herm_min_eig(v: &DMatrix<f64>, j: &DMatrix<f64>) -> f64 {
    let n = v.nrows();
    let mut emb = DMatrix::zeros(2 * n, 2 * n);
    emb.view_mut((0, 0), (n, n)).copy_from(v);
    emb.view_mut((n, n), (n, n)).copy_from(v);
    emb.view_mut((0, n), (n, n)).copy_from(&(j * 0.5));
    emb.view_mut((n, 0), (n, n)).copy_from(&(j * -0.5));
    emb.symmetric_eigenvalues().min()
}

/// Outcome of a spectral positivity test.
#[derive(Clone, Copy, Debug)]
pub struct EigenVerdict {
    pub passed: bool,
    /// Smallest eigenvalue of the tested Hermitian form.
    pub min_eig: f64,
}

impl EigenVerdict {
    fn at(min_eig: f64, tol: f64) -> Self {
        EigenVerdict {
            passed: min_eig >= -tol,
            min_eig,
        }
    }
}

fn check_block(m: &Matrix2<f64>, what: &'static str, symmetric: bool) -> Result<()> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite(what));
    }
    if symmetric {
        let scale = 1f64.max(m.amax());
        if (m[(0, 1)] - m[(1, 0)]).abs() > 1e-12 * scale {
            return Err(Error::NotSymmetric(what));
        }
    }
    Ok(())
}

/// Squeezing factor `xi = exp(2r)` of a measured mode, with the homodyne
/// limits kept symbolic so they are never approximated by a large number.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Squeezing {
    /// Homodyne limit `xi -> 0`; measures the quadrature `X(phi + pi/2)`.
    Zero,
    /// Strictly positive, finite squeezing. `1.0` is heterodyne.
    Finite(f64),
    /// Homodyne limit `xi -> +inf`; measures the quadrature `X(phi)`.
    Infinite,
}

impl Squeezing {
    pub fn finite(xi: f64) -> Result<Self> {
        if xi.is_finite() && xi > 0.0 {
            Ok(Squeezing::Finite(xi))
        } else {
            Err(Error::Domain(format!(
                "squeezing factor must be in (0, inf), got {xi}"
            )))
        }
    }

    /// Maps `0.0` and `f64::INFINITY` to the symbolic limits.
    pub fn from_value(xi: f64) -> Result<Self> {
        if xi == 0.0 {
            Ok(Squeezing::Zero)
        } else if xi == f64::INFINITY {
            Ok(Squeezing::Infinite)
        } else {
            Squeezing::finite(xi)
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Squeezing::Finite(x) => Some(*x),
            _ => None,
        }
    }

    pub fn is_homodyne(&self) -> bool {
        matches!(self, Squeezing::Zero | Squeezing::Infinite)
    }
}

impl fmt::Display for Squeezing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Squeezing::Zero => write!(f, "0"),
            Squeezing::Finite(x) => write!(f, "{x}"),
            Squeezing::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for Squeezing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "+inf" | "infinity" => Ok(Squeezing::Infinite),
            t => {
                let x: f64 = t
                    .parse()
                    .map_err(|_| Error::BadInput(format!("cannot parse squeezing factor {s:?}")))?;
                Squeezing::from_value(x)
            }
        }
    }
}

/// Folds a phase into the canonical interval `[0, pi)`.
///
/// The measured state is invariant under `phi -> phi + pi`, so phases are a
/// half-turn circle; an input of exactly `pi` maps to `0`.
pub fn canonical_phase(phi: f64) -> f64 {
    let p = phi.rem_euclid(PI);
    if p >= PI {
        0.0
    } else {
        p
    }
}

/// Correlation matrix of the pure squeezed state with squeezing `xi = exp(2r)`
/// and orientation `phi`:
///
/// ```text
/// 1/2 [ xi sin^2(phi) + cos^2(phi)/xi     (xi - 1/xi) cos(phi) sin(phi) ]
///     [ (xi - 1/xi) cos(phi) sin(phi)     xi cos^2(phi) + sin^2(phi)/xi ]
/// ```
///
/// Determinant is identically 1/4 (purity). Periodic in `phi` with period pi,
/// and `V0(xi, phi) = V0(1/xi, phi + pi/2)`.
pub fn squeezed_cm(xi: f64, phi: f64) -> Result<Matrix2<f64>> {
    if !xi.is_finite() || xi <= 0.0 {
        return Err(Error::Domain(format!(
            "squeezing factor must be in (0, inf), got {xi}"
        )));
    }
    if !phi.is_finite() {
        return Err(Error::Domain("phase must be finite".into()));
    }
    let (s, c) = phi.sin_cos();
    let off = (xi - 1.0 / xi) * c * s;
    Ok(0.5
        * Matrix2::new(
            xi * s * s + c * c / xi,
            off,
            off,
            xi * c * c + s * s / xi,
        ))
}

/// Pure squeezed single-mode measurement, optionally displaced.
///
/// The measurement operator is the projector on the squeezed state with
/// correlation matrix [`squeezed_cm`]`(xi, phi)` displaced by the complex
/// amplitude `mu`; `xi` may be a symbolic homodyne limit.
#[derive(Clone, Copy, Debug)]
pub struct MeasurementSpec {
    xi: Squeezing,
    phi: f64,
    amplitude: Complex<f64>,
}

impl MeasurementSpec {
    pub fn new(xi: Squeezing, phi: f64) -> Result<Self> {
        if !phi.is_finite() {
            return Err(Error::Domain("phase must be finite".into()));
        }
        Ok(MeasurementSpec {
            xi,
            phi: canonical_phase(phi),
            amplitude: Complex::new(0.0, 0.0),
        })
    }

    /// Heterodyne detection: xi = 1, any orientation.
    pub fn heterodyne() -> Self {
        MeasurementSpec {
            xi: Squeezing::Finite(1.0),
            phi: 0.0,
            amplitude: Complex::new(0.0, 0.0),
        }
    }

    pub fn with_amplitude(mut self, mu: Complex<f64>) -> Self {
        self.amplitude = mu;
        self
    }

    pub fn xi(&self) -> Squeezing {
        self.xi
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn amplitude(&self) -> Complex<f64> {
        self.amplitude
    }

    /// Displacement vector of the measured state, `d0 = 2 (Re mu, Im mu)`.
    pub fn displacement(&self) -> Vector2<f64> {
        Vector2::new(2.0 * self.amplitude.re, 2.0 * self.amplitude.im)
    }

    /// Correlation matrix of the measured state; errors in a homodyne limit,
    /// which has no finite correlation matrix.
    pub fn covariance(&self) -> Result<Matrix2<f64>> {
        match self.xi {
            Squeezing::Finite(x) => squeezed_cm(x, self.phi),
            _ => Err(Error::HomodyneLimit),
        }
    }
}

/// Pure single-mode input to be teleported.
#[derive(Clone, Copy, Debug)]
pub struct InputState {
    v_in: Matrix2<f64>,
    amplitude: Complex<f64>,
}

impl InputState {
    /// Requires a symmetric, positive definite `v_in` with `det = 1/4`.
    pub fn new(v_in: Matrix2<f64>, amplitude: Complex<f64>) -> Result<Self> {
        check_block(&v_in, "input correlation matrix", true)?;
        let det = v_in.determinant();
        if v_in[(0, 0)] <= 0.0 || det <= 0.0 {
            return Err(Error::NonPhysical(
                "input correlation matrix must be positive definite".into(),
            ));
        }
        if (det - 0.25).abs() > EIG_TOL {
            return Err(Error::NonPhysical(format!(
                "input must be pure: det V_in = {det}, expected 1/4"
            )));
        }
        Ok(InputState { v_in, amplitude })
    }

    pub fn coherent(amplitude: Complex<f64>) -> Self {
        InputState {
            v_in: Matrix2::identity() * 0.5,
            amplitude,
        }
    }

    pub fn squeezed(xi: f64, phi: f64, amplitude: Complex<f64>) -> Result<Self> {
        Ok(InputState {
            v_in: squeezed_cm(xi, phi)?,
            amplitude,
        })
    }

    pub fn cm(&self) -> &Matrix2<f64> {
        &self.v_in
    }

    pub fn amplitude(&self) -> Complex<f64> {
        self.amplitude
    }
}

/// Two-mode Gaussian state held by the sender/receiver pair.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoModeState {
    aa: Matrix2<f64>,
    bb: Matrix2<f64>,
    ab: Matrix2<f64>,
    displacement: Vector4<f64>,
}

impl TwoModeState {
    pub fn new(
        aa: Matrix2<f64>,
        ab: Matrix2<f64>,
        bb: Matrix2<f64>,
        displacement: Vector4<f64>,
    ) -> Result<Self> {
        check_block(&aa, "block aa", true)?;
        check_block(&bb, "block bb", true)?;
        check_block(&ab, "block ab", false)?;
        if displacement.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("displacement"));
        }
        Ok(TwoModeState {
            aa,
            bb,
            ab,
            displacement,
        })
    }

    pub fn aa(&self) -> &Matrix2<f64> {
        &self.aa
    }

    pub fn bb(&self) -> &Matrix2<f64> {
        &self.bb
    }

    pub fn ab(&self) -> &Matrix2<f64> {
        &self.ab
    }

    pub fn displacement(&self) -> &Vector4<f64> {
        &self.displacement
    }

    pub fn matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::zeros();
        m.fixed_view_mut::<2, 2>(0, 0).copy_from(&self.aa);
        m.fixed_view_mut::<2, 2>(0, 2).copy_from(&self.ab);
        m.fixed_view_mut::<2, 2>(2, 0).copy_from(&self.ab.transpose());
        m.fixed_view_mut::<2, 2>(2, 2).copy_from(&self.bb);
        m
    }

    /// Physicality test `V - (i/2) J >= -tol`.
    pub fn is_physical(&self, tol: f64) -> EigenVerdict {
        let v = DMatrix::from_fn(4, 4, |r, c| self.matrix()[(r, c)]);
        EigenVerdict::at(herm_min_eig(&v, &symplectic_form(2)), tol)
    }

    /// Separability by partial transposition; errors when the state itself is
    /// not physical, in which case the test is meaningless.
    pub fn is_separable(&self, tol: f64) -> Result<EigenVerdict> {
        let phys = self.is_physical(tol);
        if !phys.passed {
            return Err(Error::NonPhysical(format!(
                "separability asked of a non-physical state (min eig {:.3e})",
                phys.min_eig
            )));
        }
        let v = DMatrix::from_fn(4, 4, |r, c| self.matrix()[(r, c)]);
        Ok(EigenVerdict::at(herm_min_eig(&v, &ppt_form()), tol))
    }
}

/// Three-mode Gaussian channel: the sender/receiver pair plus a third mode
/// that can be measured to assist the teleportation.
///
/// Block layout of the 6x6 correlation matrix (rows/cols ordered a, b, c):
///
/// ```text
/// [ aa   ab   ac ]
/// [ ab^T bb   bc ]
/// [ ac^T bc^T cc ]
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct ThreeModeState {
    aa: Matrix2<f64>,
    bb: Matrix2<f64>,
    cc: Matrix2<f64>,
    ab: Matrix2<f64>,
    ac: Matrix2<f64>,
    bc: Matrix2<f64>,
    displacement: Vector6<f64>,
}

impl ThreeModeState {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        aa: Matrix2<f64>,
        ab: Matrix2<f64>,
        ac: Matrix2<f64>,
        bb: Matrix2<f64>,
        bc: Matrix2<f64>,
        cc: Matrix2<f64>,
        displacement: Vector6<f64>,
    ) -> Result<Self> {
        check_block(&aa, "block aa", true)?;
        check_block(&bb, "block bb", true)?;
        check_block(&cc, "block cc", true)?;
        check_block(&ab, "block ab", false)?;
        check_block(&ac, "block ac", false)?;
        check_block(&bc, "block bc", false)?;
        if displacement.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("displacement"));
        }
        Ok(ThreeModeState {
            aa,
            bb,
            cc,
            ab,
            ac,
            bc,
            displacement,
        })
    }

    /// Splits a full 6x6 correlation matrix into blocks; the matrix must be
    /// symmetric.
    pub fn from_matrix(v: &Matrix6<f64>, displacement: Vector6<f64>) -> Result<Self> {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("correlation matrix"));
        }
        let scale = 1f64.max(v.amax());
        for r in 0..6 {
            for c in (r + 1)..6 {
                if (v[(r, c)] - v[(c, r)]).abs() > 1e-12 * scale {
                    return Err(Error::NotSymmetric("correlation matrix"));
                }
            }
        }
        let block = |r, c| Matrix2::new(v[(r, c)], v[(r, c + 1)], v[(r + 1, c)], v[(r + 1, c + 1)]);
        ThreeModeState::new(
            block(0, 0),
            block(0, 2),
            block(0, 4),
            block(2, 2),
            block(2, 4),
            block(4, 4),
            displacement,
        )
    }

    pub fn aa(&self) -> &Matrix2<f64> {
        &self.aa
    }

    pub fn bb(&self) -> &Matrix2<f64> {
        &self.bb
    }

    pub fn cc(&self) -> &Matrix2<f64> {
        &self.cc
    }

    pub fn ab(&self) -> &Matrix2<f64> {
        &self.ab
    }

    pub fn ac(&self) -> &Matrix2<f64> {
        &self.ac
    }

    pub fn bc(&self) -> &Matrix2<f64> {
        &self.bc
    }

    pub fn displacement(&self) -> &Vector6<f64> {
        &self.displacement
    }

    /// Displacement restricted to the third mode.
    pub fn displacement_third(&self) -> Vector2<f64> {
        Vector2::new(self.displacement[4], self.displacement[5])
    }

    pub fn matrix(&self) -> Matrix6<f64> {
        let mut m = Matrix6::zeros();
        m.fixed_view_mut::<2, 2>(0, 0).copy_from(&self.aa);
        m.fixed_view_mut::<2, 2>(0, 2).copy_from(&self.ab);
        m.fixed_view_mut::<2, 2>(0, 4).copy_from(&self.ac);
        m.fixed_view_mut::<2, 2>(2, 0).copy_from(&self.ab.transpose());
        m.fixed_view_mut::<2, 2>(2, 2).copy_from(&self.bb);
        m.fixed_view_mut::<2, 2>(2, 4).copy_from(&self.bc);
        m.fixed_view_mut::<2, 2>(4, 0).copy_from(&self.ac.transpose());
        m.fixed_view_mut::<2, 2>(4, 2).copy_from(&self.bc.transpose());
        m.fixed_view_mut::<2, 2>(4, 4).copy_from(&self.cc);
        m
    }

    /// Genuineness (three-mode physicality): `V - (i/2) J >= -tol`.
    pub fn is_genuine(&self, tol: f64) -> EigenVerdict {
        let m = self.matrix();
        let v = DMatrix::from_fn(6, 6, |r, c| m[(r, c)]);
        EigenVerdict::at(herm_min_eig(&v, &symplectic_form(3)), tol)
    }

    /// Discards the third mode.
    pub fn partial_trace_third(&self) -> TwoModeState {
        TwoModeState {
            aa: self.aa,
            bb: self.bb,
            ab: self.ab,
            displacement: Vector4::new(
                self.displacement[0],
                self.displacement[1],
                self.displacement[2],
                self.displacement[3],
            ),
        }
    }

    pub fn to_json(&self) -> String {
        let two = |m: &Matrix2<f64>| [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]];
        let file = StateFile {
            blocks: BlockSet {
                a: two(&self.aa),
                b: two(&self.bb),
                c: two(&self.cc),
                d: two(&self.bc),
                e: two(&self.ac),
                f: two(&self.ab),
            },
            displacement: Some([
                self.displacement[0],
                self.displacement[1],
                self.displacement[2],
                self.displacement[3],
                self.displacement[4],
                self.displacement[5],
            ]),
        };
        // field order is already alphabetical, so derived serialization is
        // deterministic with sorted keys
        serde_json::to_string_pretty(&file).expect("state serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: StateFile = serde_json::from_str(text).map_err(|e| Error::Json {
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        })?;
        let mat = |m: &[[f64; 2]; 2]| Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1]);
        let d = file.displacement.unwrap_or([0.0; 6]);
        ThreeModeState::new(
            mat(&file.blocks.a),
            mat(&file.blocks.f),
            mat(&file.blocks.e),
            mat(&file.blocks.b),
            mat(&file.blocks.d),
            mat(&file.blocks.c),
            Vector6::from_row_slice(&d),
        )
    }
}

/// On-disk state schema. Block names follow the conventional letters for the
/// six 2x2 blocks of a three-mode correlation matrix: A, B, C on the diagonal
/// (modes a, b, c) and F = ab, E = ac, D = bc off the diagonal. Matrices are
/// row-major.
#[derive(Serialize, Deserialize)]
struct StateFile {
    blocks: BlockSet,
    #[serde(default)]
    displacement: Option<[f64; 6]>,
}

#[derive(Serialize, Deserialize)]
struct BlockSet {
    #[serde(rename = "A")]
    a: [[f64; 2]; 2],
    #[serde(rename = "B")]
    b: [[f64; 2]; 2],
    #[serde(rename = "C")]
    c: [[f64; 2]; 2],
    #[serde(rename = "D")]
    d: [[f64; 2]; 2],
    #[serde(rename = "E")]
    e: [[f64; 2]; 2],
    #[serde(rename = "F")]
    f: [[f64; 2]; 2],
}

/// One-parameter family of fully symmetric three-mode channels:
///
/// ```text
/// aa = q I,   bb = cc = (q+1)/2 I,   bc = q/2 I,
/// ab = ac = sqrt((2q-1)(q+1))/2 diag(1, -1)
/// ```
///
/// Genuine for every `q >= 1/2`; below that the cross coupling turns complex.
pub fn build_symmetric_channel(q: f64) -> Result<ThreeModeState> {
    if !q.is_finite() || q < 0.5 {
        return Err(Error::Domain(format!(
            "symmetric channel needs q >= 1/2, got {q}"
        )));
    }
    let s = 0.5 * (q + 1.0);
    let t = 0.5 * q;
    let w = 0.5 * ((2.0 * q - 1.0) * (q + 1.0)).sqrt();
    let i = Matrix2::identity();
    let r = momentum_flip();
    ThreeModeState::new(q * i, w * r, w * r, s * i, t * i, s * i, Vector6::zeros())
}

/// Six-parameter channel with scalar diagonal blocks and reflection-type
/// couplings to the third mode:
///
/// ```text
/// aa = a I,  bb = b I,  cc = c I,  ab = f I,
/// ac = e diag(1, -1),   bc = d diag(1, -1)
/// ```
///
/// Genuineness depends on the parameters and must be checked by the caller.
pub fn build_example_channel(a: f64, b: f64, c: f64, d: f64, e: f64, f: f64) -> Result<ThreeModeState> {
    let i = Matrix2::identity();
    let r = momentum_flip();
    ThreeModeState::new(a * i, f * i, e * r, b * i, d * r, c * i, Vector6::zeros())
}

/// First sample channel: hot, strongly coupled, with a separable reduced
/// pair. The assisted optimum sits at a strongly squeezed heterodyne.
pub fn example_channel_1() -> ThreeModeState {
    build_example_channel(10.15, 5.52, 15.2, 8.87, 12.3, 6.96).expect("finite parameters")
}

/// Second sample channel: weakly coupled, with a phase landscape that splits
/// into homodyne and squeezed-heterodyne regions. The assisted optimum is a
/// plain homodyne detection.
pub fn example_channel_2() -> ThreeModeState {
    build_example_channel(0.55, 0.89, 0.94, 0.74, 0.249, 0.12).expect("finite parameters")
}
