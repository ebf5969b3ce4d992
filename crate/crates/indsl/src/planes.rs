//! Pointwise tests: is an oriented `m`-plane, or an implicitly defined level
//! set, Lagrangian / special Lagrangian in `C_k^m`?
//!
//! A plane is Lagrangian when the symplectic form vanishes on it and the
//! induced metric is non-degenerate. On a Lagrangian plane the holomorphic
//! volume form `dz_1 ∧ … ∧ dz_m` has unit modulus once the frame volume is
//! divided out; the plane (or its orientation flip) is special exactly when
//! that phase is real.
//!
//! Implicit level sets `{f_1 = … = f_m = 0}` are tested through their
//! metric gradients: the pairwise symplectic brackets must vanish and the
//! gradient Gram matrix must stay non-degenerate, and specialness reduces to
//! a reality condition on `det(∂f_j/∂z̄_l)` whose real/imaginary split
//! depends on the parity of `m`. The frame built from `J ∇^g f_i` provides an
//! independent plane-level route, and every report carries both results.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{complex_det, Frame, HermitianForm};
use crate::par;

/// Tolerances for the plane-level tests.
#[derive(Debug, Clone, Copy)]
pub struct PlaneTols {
    /// Absolute bound on the symplectic form over normalised vector pairs.
    pub omega_tol: f64,
    /// Threshold on the normalised Gram determinant below which the plane is
    /// reported degenerate.
    pub degeneracy_tol: f64,
    /// Bound on `|Im phase|` for the special verdict.
    pub phase_tol: f64,
}

impl Default for PlaneTols {
    fn default() -> Self {
        Self {
            omega_tol: 1e-9,
            degeneracy_tol: 1e-10,
            phase_tol: 1e-9,
        }
    }
}

/// Outcome of the Lagrangian test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LagrangianVerdict {
    Lagrangian,
    NotLagrangian,
    Degenerate,
}

/// Outcome of the special test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SpecialVerdict {
    /// This orientation has phase `+1`.
    SpecialHere,
    /// The orientation-reversed plane is special (phase `-1`).
    SpecialFlipped,
    NotSpecial,
    Degenerate,
}

/// Result of [`is_special_plane`].
#[derive(Debug, Clone, Serialize)]
pub struct SpecialCheck {
    pub lagrangian: LagrangianVerdict,
    pub verdict: SpecialVerdict,
    /// Normalised phase (unit modulus on Lagrangian planes).
    pub phase_re: f64,
    pub phase_im: f64,
}

fn normalized_columns(frame: &Frame) -> DMatrix<f64> {
    let mut cols = frame.columns().clone();
    for mut c in cols.column_iter_mut() {
        let n = c.norm();
        if n > 0.0 {
            c /= n;
        }
    }
    cols
}

/// Lagrangian test for an oriented `m`-plane.
///
/// Vectors are normalised before testing so the tolerances are scale-free.
/// A Gram determinant below threshold dominates any symplectic verdict.
pub fn is_lagrangian_plane(
    frame: &Frame,
    form: &HermitianForm,
    tols: &PlaneTols,
) -> Result<LagrangianVerdict> {
    if frame.m() != form.complex_dim() {
        return Err(Error::DimensionMismatch(format!(
            "frame dimension {} vs form dimension {}",
            frame.m(),
            form.complex_dim()
        )));
    }
    let cols = normalized_columns(frame);
    let gram = form.ambient_metric().gram(&cols)?;
    let det = gram.determinant();
    if det.abs() < tols.degeneracy_tol {
        return Ok(LagrangianVerdict::Degenerate);
    }
    let m = frame.m();
    let mut max_omega = 0.0_f64;
    for a in 0..m {
        for b in (a + 1)..m {
            let va = DVector::from_column_slice(cols.column(a).as_slice());
            let vb = DVector::from_column_slice(cols.column(b).as_slice());
            max_omega = max_omega.max(form.omega(&va, &vb)?.abs());
        }
    }
    if max_omega < tols.omega_tol {
        Ok(LagrangianVerdict::Lagrangian)
    } else {
        Ok(LagrangianVerdict::NotLagrangian)
    }
}

/// Evaluate `dz_1 ∧ … ∧ dz_m` on the frame, normalised by the frame's metric
/// volume so that Lagrangian frames give unit-modulus values, with the
/// orientation sign applied.
pub fn dz_phase(frame: &Frame, form: &HermitianForm) -> Result<Complex64> {
    if frame.m() != form.complex_dim() {
        return Err(Error::DimensionMismatch(format!(
            "frame dimension {} vs form dimension {}",
            frame.m(),
            form.complex_dim()
        )));
    }
    let gram = frame.gram(&form.ambient_metric())?;
    let det_gram = gram.determinant();
    // Scale-free degeneracy guard: compare against the normalised Gram.
    let cols = normalized_columns(frame);
    let det_unit = form.ambient_metric().gram(&cols)?.determinant();
    if det_unit.abs() < 1e-12 {
        return Err(Error::Degenerate(format!(
            "frame Gram determinant {det_unit:.3e} below threshold"
        )));
    }
    let raw = complex_det(&frame.complex_matrix());
    Ok(raw * (frame.orientation() as f64) / det_gram.abs().sqrt())
}

/// Special-plane test: Lagrangian plus a real phase.
pub fn is_special_plane(
    frame: &Frame,
    form: &HermitianForm,
    tols: &PlaneTols,
) -> Result<SpecialCheck> {
    let lagrangian = is_lagrangian_plane(frame, form, tols)?;
    if lagrangian == LagrangianVerdict::Degenerate {
        return Ok(SpecialCheck {
            lagrangian,
            verdict: SpecialVerdict::Degenerate,
            phase_re: f64::NAN,
            phase_im: f64::NAN,
        });
    }
    let phase = dz_phase(frame, form)?;
    let verdict = if lagrangian == LagrangianVerdict::Lagrangian && phase.im.abs() < tols.phase_tol
    {
        if phase.re > 0.0 {
            SpecialVerdict::SpecialHere
        } else {
            SpecialVerdict::SpecialFlipped
        }
    } else {
        SpecialVerdict::NotSpecial
    };
    Ok(SpecialCheck {
        lagrangian,
        verdict,
        phase_re: phase.re,
        phase_im: phase.im,
    })
}

// ---------------------------------------------------------------------------
// Phase reports along families of planes
// ---------------------------------------------------------------------------

/// Verdict for a family of phases sampled along a submanifold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum PhaseVerdict {
    /// Constant phase `+1` (up to orientation sign reported separately).
    Special,
    /// Constant phase `e^{-iθ}` with the given `θ`.
    ThetaSpecial { theta: f64 },
    /// Phase varies across the samples.
    NotSpecial,
    /// No non-degenerate samples.
    Degenerate,
}

/// Phases of a family of tangent planes with a constancy analysis.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseReport {
    /// Unit phases per accepted sample, `(re, im)`.
    pub phases: Vec<(f64, f64)>,
    /// Largest distance from a sample phase to the fitted mean phase.
    pub max_deviation: f64,
    /// Angle of the fitted mean phase; the family is `θ`-special for
    /// `θ = -angle` when the deviation is small.
    pub mean_angle: f64,
    pub verdict: PhaseVerdict,
    /// Indices of rejected samples with the reason.
    pub excluded: Vec<(usize, String)>,
    /// Tolerance used for constancy and reality.
    pub tol: f64,
}

impl PhaseReport {
    /// Summarise a list of per-sample phases.
    pub fn from_phases(
        phases: Vec<(f64, f64)>,
        excluded: Vec<(usize, String)>,
        tol: f64,
    ) -> Self {
        if phases.is_empty() {
            return Self {
                phases,
                max_deviation: f64::NAN,
                mean_angle: f64::NAN,
                verdict: PhaseVerdict::Degenerate,
                excluded,
                tol,
            };
        }
        let mut sum = Complex64::new(0.0, 0.0);
        for (re, im) in &phases {
            sum += Complex64::new(*re, *im);
        }
        let mean = sum / sum.norm().max(1e-300);
        let max_deviation = phases
            .iter()
            .map(|(re, im)| (Complex64::new(*re, *im) - mean).norm())
            .fold(0.0_f64, f64::max);
        let mean_angle = mean.im.atan2(mean.re);
        let verdict = if max_deviation > tol {
            PhaseVerdict::NotSpecial
        } else if mean.im.abs() < tol && mean.re > 0.0 {
            PhaseVerdict::Special
        } else {
            PhaseVerdict::ThetaSpecial { theta: -mean_angle }
        };
        Self {
            phases,
            max_deviation,
            mean_angle,
            verdict,
            excluded,
            tol,
        }
    }
}

// ---------------------------------------------------------------------------
// Implicit systems
// ---------------------------------------------------------------------------

/// One real-valued function on `R^{2m}` exposing Wirtinger derivatives.
pub struct ImplicitFunction {
    value: Box<dyn Fn(&DVector<f64>) -> f64 + Sync + Send>,
    /// Analytic `∂f/∂z_l`, length `m`; finite differences when absent.
    wirtinger: Option<Box<dyn Fn(&DVector<f64>) -> DVector<Complex64> + Sync + Send>>,
}

impl ImplicitFunction {
    pub fn new(value: impl Fn(&DVector<f64>) -> f64 + Sync + Send + 'static) -> Self {
        Self {
            value: Box::new(value),
            wirtinger: None,
        }
    }

    pub fn with_wirtinger(
        value: impl Fn(&DVector<f64>) -> f64 + Sync + Send + 'static,
        wirtinger: impl Fn(&DVector<f64>) -> DVector<Complex64> + Sync + Send + 'static,
    ) -> Self {
        Self {
            value: Box::new(value),
            wirtinger: Some(Box::new(wirtinger)),
        }
    }

    pub fn value(&self, z: &DVector<f64>) -> f64 {
        (self.value)(z)
    }
}

/// A system of `m` real functions cutting out an `m`-dimensional level set in
/// `C_k^m`.
pub struct ImplicitSystem {
    form: HermitianForm,
    functions: Vec<ImplicitFunction>,
    fd_step: f64,
}

impl ImplicitSystem {
    pub fn new(form: HermitianForm, functions: Vec<ImplicitFunction>) -> Result<Self> {
        if functions.len() != form.complex_dim() {
            return Err(Error::DimensionMismatch(format!(
                "need {} functions, got {}",
                form.complex_dim(),
                functions.len()
            )));
        }
        Ok(Self {
            form,
            functions,
            fd_step: 1e-6,
        })
    }

    pub fn form(&self) -> &HermitianForm {
        &self.form
    }

    pub fn m(&self) -> usize {
        self.functions.len()
    }

    pub fn values(&self, z: &DVector<f64>) -> Vec<f64> {
        self.functions.iter().map(|f| f.value(z)).collect()
    }

    /// `∂f_i/∂z_l` for function `i`, analytic when supplied, otherwise by
    /// central differences: `∂f/∂z = (∂f/∂x - i ∂f/∂y)/2`.
    pub fn wirtinger(&self, i: usize, z: &DVector<f64>) -> DVector<Complex64> {
        let m = self.m();
        if let Some(w) = &self.functions[i].wirtinger {
            return w(z);
        }
        let h = self.fd_step * (1.0 + z.norm());
        let f = &self.functions[i];
        DVector::from_fn(m, |l, _| {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[l] += h;
            zm[l] -= h;
            let dfdx = (f.value(&zp) - f.value(&zm)) / (2.0 * h);
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[m + l] += h;
            zm[m + l] -= h;
            let dfdy = (f.value(&zp) - f.value(&zm)) / (2.0 * h);
            Complex64::new(dfdx / 2.0, -dfdy / 2.0)
        })
    }

    /// Matrix `W` with `W[(i, l)] = ∂f_i/∂z̄_l = conj(∂f_i/∂z_l)`.
    pub fn zbar_matrix(&self, z: &DVector<f64>) -> DMatrix<Complex64> {
        let m = self.m();
        let rows: Vec<DVector<Complex64>> =
            (0..m).map(|i| self.wirtinger(i, z).map(|c| c.conj())).collect();
        DMatrix::from_fn(m, m, |i, l| rows[i][l])
    }

    /// Real differential `df_i` as a `2m`-vector `(∂f/∂x, ∂f/∂y)`.
    pub fn real_gradient(&self, i: usize, z: &DVector<f64>) -> DVector<f64> {
        let m = self.m();
        let w = self.wirtinger(i, z);
        let mut out = DVector::zeros(2 * m);
        for l in 0..m {
            out[l] = 2.0 * w[l].re;
            out[m + l] = -2.0 * w[l].im;
        }
        out
    }

    /// Metric gradient `∇^g f_i` (the differential with signs applied).
    pub fn metric_gradient(&self, i: usize, z: &DVector<f64>) -> DVector<f64> {
        let m = self.m();
        let mut g = self.real_gradient(i, z);
        for l in 0..m {
            let e = self.form.eps(l);
            g[l] *= e;
            g[m + l] *= e;
        }
        g
    }

    /// Tangent frame of the level set spanned by `J ∇^g f_i`; in complex
    /// components the `i`-th vector is `2 i ε_l ∂f_i/∂z̄_l`.
    pub fn tangent_frame(&self, z: &DVector<f64>) -> Result<Frame> {
        let m = self.m();
        let mut cols = DMatrix::zeros(2 * m, m);
        for i in 0..m {
            let grad = self.metric_gradient(i, z);
            let jg = self.form.j_apply(&grad)?;
            cols.set_column(i, &jg);
        }
        Frame::new(cols, 1)
    }
}

/// Per-point record of the implicit Lagrangian test.
#[derive(Debug, Clone, Serialize)]
pub struct ImplicitPointReport {
    pub point: Vec<f64>,
    /// Largest pairwise symplectic bracket, normalised by gradient norms.
    pub max_bracket: f64,
    /// Normalised Gram determinant of the metric gradients.
    pub gram_det: f64,
    /// Reality residual of `det(∂f_i/∂z̄_l)` (imaginary part for even `m`,
    /// real part for odd `m`), normalised by the determinant modulus.
    pub parity_residual: Option<f64>,
    /// Determinant of the Wirtinger matrix.
    pub det: Option<(f64, f64)>,
    /// Phase of the `J ∇^g f` frame.
    pub frame_phase: Option<(f64, f64)>,
    /// Whether the determinant route and the frame route agree.
    pub routes_agree: Option<bool>,
    pub pass: bool,
}

/// Aggregated implicit-test report.
#[derive(Debug, Clone, Serialize)]
pub struct ImplicitReport {
    pub points: Vec<ImplicitPointReport>,
    pub pass: bool,
    pub bracket_tol: f64,
    pub gram_tol: f64,
    pub parity_tol: f64,
    pub on_set_tol: f64,
}

/// Tolerances for the implicit-system checks.
#[derive(Debug, Clone, Copy)]
pub struct ImplicitTols {
    pub bracket_tol: f64,
    pub gram_tol: f64,
    pub parity_tol: f64,
    /// Maximum `|f_i|` allowed for a sample to count as on the zero set.
    pub on_set_tol: f64,
}

impl Default for ImplicitTols {
    fn default() -> Self {
        Self {
            bracket_tol: 1e-9,
            gram_tol: 1e-10,
            parity_tol: 1e-8,
            on_set_tol: 1e-8,
        }
    }
}

fn check_point(
    sys: &ImplicitSystem,
    z: &DVector<f64>,
    tols: &ImplicitTols,
    special: bool,
) -> Result<ImplicitPointReport> {
    let m = sys.m();
    let vals = sys.values(z);
    let off = vals.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if off > tols.on_set_tol {
        return Err(Error::InvalidInput(format!(
            "point is off the zero set: max |f_i| = {off:.3e}"
        )));
    }

    let grads: Vec<DVector<f64>> = (0..m).map(|i| sys.metric_gradient(i, z)).collect();
    let norms: Vec<f64> = grads.iter().map(|g| g.norm()).collect();
    if norms.iter().any(|n| *n < 1e-300) {
        return Err(Error::Degenerate("vanishing differential".into()));
    }

    // Independence of the differentials.
    let jac = DMatrix::from_fn(m, 2 * m, |i, c| grads[i][c] / norms[i]);
    let svals = jac.svd(false, false).singular_values;
    let smin = svals.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin < 1e-8 {
        return Err(Error::Degenerate(format!(
            "dependent differentials: smallest singular value {smin:.3e}"
        )));
    }

    let mut max_bracket = 0.0_f64;
    for i in 0..m {
        for j in (i + 1)..m {
            let b = sys.form.omega(&grads[i], &grads[j])?;
            max_bracket = max_bracket.max(b.abs() / (norms[i] * norms[j]));
        }
    }

    let mut gram = DMatrix::zeros(m, m);
    let gmetric = sys.form.ambient_metric();
    for i in 0..m {
        for j in 0..m {
            gram[(i, j)] = gmetric.eval(&grads[i], &grads[j])? / (norms[i] * norms[j]);
        }
    }
    let gram_det = gram.determinant();

    let mut report = ImplicitPointReport {
        point: z.iter().cloned().collect(),
        max_bracket,
        gram_det,
        parity_residual: None,
        det: None,
        frame_phase: None,
        routes_agree: None,
        pass: max_bracket < tols.bracket_tol && gram_det.abs() > tols.gram_tol,
    };

    if special {
        let w = sys.zbar_matrix(z);
        let det = complex_det(&w);
        let modulus = det.norm();
        if modulus < tols.gram_tol {
            return Err(Error::Degenerate(format!(
                "Wirtinger determinant modulus {modulus:.3e} below threshold"
            )));
        }
        // Even m: determinant must be real; odd m: purely imaginary.
        let parity_residual = if m % 2 == 0 {
            det.im.abs() / modulus
        } else {
            det.re.abs() / modulus
        };
        let det_pass = parity_residual < tols.parity_tol;

        // Independent route: phase of the gradient frame.
        let frame = sys.tangent_frame(z)?;
        let plane_tols = PlaneTols {
            omega_tol: tols.bracket_tol.max(1e-9) * 10.0,
            degeneracy_tol: tols.gram_tol,
            phase_tol: tols.parity_tol,
        };
        let check = is_special_plane(&frame, &sys.form, &plane_tols)?;
        let frame_pass = matches!(
            check.verdict,
            SpecialVerdict::SpecialHere | SpecialVerdict::SpecialFlipped
        );

        report.parity_residual = Some(parity_residual);
        report.det = Some((det.re, det.im));
        report.frame_phase = Some((check.phase_re, check.phase_im));
        report.routes_agree = Some(det_pass == frame_pass);
        report.pass = report.pass && det_pass && frame_pass;
    }

    Ok(report)
}

/// Evaluate the pairwise symplectic brackets and the gradient Gram
/// determinant at each sample point of the zero set.
pub fn implicit_lagrangian_check(
    sys: &ImplicitSystem,
    points: &[DVector<f64>],
    tols: &ImplicitTols,
) -> Result<ImplicitReport> {
    let reports: Vec<Result<ImplicitPointReport>> =
        par::map_indexed(points.len(), |i| check_point(sys, &points[i], tols, false));
    let points = reports.into_iter().collect::<Result<Vec<_>>>()?;
    let pass = points.iter().all(|p| p.pass);
    Ok(ImplicitReport {
        points,
        pass,
        bracket_tol: tols.bracket_tol,
        gram_tol: tols.gram_tol,
        parity_tol: tols.parity_tol,
        on_set_tol: tols.on_set_tol,
    })
}

/// Specialness test for an implicit Lagrangian level set, combining the
/// parity rule on `det(∂f_i/∂z̄_l)` with the plane-level phase of the
/// gradient frame. Disagreements between the two routes are surfaced in the
/// report instead of being resolved silently.
pub fn implicit_special_check(
    sys: &ImplicitSystem,
    points: &[DVector<f64>],
    tols: &ImplicitTols,
) -> Result<ImplicitReport> {
    let reports: Vec<Result<ImplicitPointReport>> =
        par::map_indexed(points.len(), |i| check_point(sys, &points[i], tols, true));
    let points = reports.into_iter().collect::<Result<Vec<_>>>()?;
    let pass = points.iter().all(|p| p.pass);
    Ok(ImplicitReport {
        points,
        pass,
        bracket_tol: tols.bracket_tol,
        gram_tol: tols.gram_tol,
        parity_tol: tols.parity_tol,
        on_set_tol: tols.on_set_tol,
    })
}
