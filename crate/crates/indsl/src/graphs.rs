//! Potential-function graphs in `C_k^m`.
//!
//! The gradient graph of a potential `u` — the set `(x, f(x))` with
//! `f = (∇u) I_{k,m}` — is automatically Lagrangian; it is special exactly
//! when `Im det(I + i Hess(u) I_{k,m}) = 0`, with nondegeneracy given by
//! `|det| ≠ 0`. For `m = 2, k = 1` the condition is the one-dimensional wave
//! equation `u_{x_1 x_1} = u_{x_2 x_2}`, solved by `u = F(x_1+x_2) +
//! G(x_1-x_2)` with nondegeneracy `4F''G'' + 1 ≠ 0`, and the induced metric
//! on such graphs is conformally flat. The linearised operator at any `u` is
//! second order with coefficient matrix `(-1)^k Re(adj(I_{k,m} + i Hess u))`,
//! which has index `k` wherever nondegeneracy holds.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{complex_adjugate, complex_det, Frame, SignatureMetric};

type ScalarMap = Arc<dyn Fn(&[f64]) -> f64 + Sync + Send>;
type GradMap = Arc<dyn Fn(&[f64]) -> DVector<f64> + Sync + Send>;
type HessMap = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Sync + Send>;

/// A scalar field exposing value, gradient and Hessian, either analytically
/// or through central finite differences with step `fd_step · (1 + |x|)`.
#[derive(Clone)]
pub struct PotentialField {
    dim: usize,
    value: ScalarMap,
    grad: Option<GradMap>,
    hess: Option<HessMap>,
    fd_step: f64,
}

impl PotentialField {
    /// Finite-difference potential from a value map.
    pub fn from_fn(dim: usize, value: impl Fn(&[f64]) -> f64 + Sync + Send + 'static) -> Self {
        Self {
            dim,
            value: Arc::new(value),
            grad: None,
            hess: None,
            fd_step: 1e-4,
        }
    }

    /// Potential with analytic gradient and Hessian.
    pub fn analytic(
        dim: usize,
        value: impl Fn(&[f64]) -> f64 + Sync + Send + 'static,
        grad: impl Fn(&[f64]) -> DVector<f64> + Sync + Send + 'static,
        hess: impl Fn(&[f64]) -> DMatrix<f64> + Sync + Send + 'static,
    ) -> Self {
        Self {
            dim,
            value: Arc::new(value),
            grad: Some(Arc::new(grad)),
            hess: Some(Arc::new(hess)),
            fd_step: 1e-4,
        }
    }

    /// The zero potential.
    pub fn zero(dim: usize) -> Self {
        Self::analytic(
            dim,
            |_| 0.0,
            move |x| DVector::zeros(x.len()),
            move |x| DMatrix::zeros(x.len(), x.len()),
        )
    }

    /// Quadratic `u = Σ c_j x_j^2 / 2`.
    pub fn quadratic(coeffs: Vec<f64>) -> Self {
        let dim = coeffs.len();
        let c1 = coeffs.clone();
        let c2 = coeffs.clone();
        Self::analytic(
            dim,
            move |x| {
                x.iter()
                    .zip(coeffs.iter())
                    .map(|(xi, ci)| 0.5 * ci * xi * xi)
                    .sum()
            },
            move |x| DVector::from_fn(x.len(), |j, _| c1[j] * x[j]),
            move |_| DMatrix::from_diagonal(&DVector::from_vec(c2.clone())),
        )
    }

    pub fn with_fd_step(mut self, step: f64) -> Self {
        self.fd_step = step;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_analytic(&self) -> bool {
        self.hess.is_some()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    fn step_at(&self, x: &[f64]) -> f64 {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.fd_step * (1.0 + norm)
    }

    pub fn gradient(&self, x: &[f64]) -> DVector<f64> {
        if let Some(g) = &self.grad {
            return g(x);
        }
        let h = self.step_at(x);
        let mut xp = x.to_vec();
        DVector::from_fn(self.dim, |j, _| {
            let orig = xp[j];
            xp[j] = orig + h;
            let fp = self.value(&xp);
            xp[j] = orig - h;
            let fm = self.value(&xp);
            xp[j] = orig;
            (fp - fm) / (2.0 * h)
        })
    }

    pub fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        if let Some(hmap) = &self.hess {
            return hmap(x);
        }
        let h = self.step_at(x);
        let n = self.dim;
        let mut out = DMatrix::zeros(n, n);
        if self.grad.is_some() {
            // Differentiate the analytic gradient.
            let mut xp = x.to_vec();
            for j in 0..n {
                let orig = xp[j];
                xp[j] = orig + h;
                let gp = self.gradient(&xp);
                xp[j] = orig - h;
                let gm = self.gradient(&xp);
                xp[j] = orig;
                let col = (gp - gm) / (2.0 * h);
                out.set_column(j, &col);
            }
            return (out.clone() + out.transpose()) * 0.5;
        }
        let f0 = self.value(x);
        let mut xt = x.to_vec();
        for i in 0..n {
            let oi = xt[i];
            xt[i] = oi + h;
            let fp = self.value(&xt);
            xt[i] = oi - h;
            let fm = self.value(&xt);
            xt[i] = oi;
            out[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
            for j in (i + 1)..n {
                let oj = xt[j];
                xt[i] = oi + h;
                xt[j] = oj + h;
                let fpp = self.value(&xt);
                xt[j] = oj - h;
                let fpm = self.value(&xt);
                xt[i] = oi - h;
                let fmm = self.value(&xt);
                xt[j] = oj + h;
                let fmp = self.value(&xt);
                xt[i] = oi;
                xt[j] = oj;
                let v = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// One-variable curves for the wave family
// ---------------------------------------------------------------------------

/// A twice-differentiable function of one variable.
#[derive(Clone)]
pub enum Curve {
    Zero,
    /// Polynomial with ascending coefficients.
    Poly(Vec<f64>),
    Spline(NaturalCubicSpline),
}

impl Curve {
    pub fn poly(coeffs: &[f64]) -> Self {
        Curve::Poly(coeffs.to_vec())
    }

    pub fn value(&self, s: f64) -> f64 {
        match self {
            Curve::Zero => 0.0,
            Curve::Poly(c) => c.iter().rev().fold(0.0, |acc, ci| acc * s + ci),
            Curve::Spline(sp) => sp.value(s),
        }
    }

    pub fn d1(&self, s: f64) -> f64 {
        match self {
            Curve::Zero => 0.0,
            Curve::Poly(c) => {
                let mut acc = 0.0;
                for (i, ci) in c.iter().enumerate().skip(1).rev() {
                    acc = acc * s + (i as f64) * ci;
                }
                acc
            }
            Curve::Spline(sp) => sp.d1(s),
        }
    }

    pub fn d2(&self, s: f64) -> f64 {
        match self {
            Curve::Zero => 0.0,
            Curve::Poly(c) => {
                let mut acc = 0.0;
                for (i, ci) in c.iter().enumerate().skip(2).rev() {
                    acc = acc * s + (i * (i - 1)) as f64 * ci;
                }
                acc
            }
            Curve::Spline(sp) => sp.d2(s),
        }
    }
}

/// Natural cubic spline through given knots, extended linearly beyond the
/// ends (so the second derivative is continuous and compactly supported).
#[derive(Clone, Debug)]
pub struct NaturalCubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivatives at the knots (zero at both ends).
    m2: Vec<f64>,
}

impl NaturalCubicSpline {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 3 || ys.len() != n {
            return Err(Error::InvalidInput(
                "spline needs at least 3 knots with matching values".into(),
            ));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("spline knots must be increasing".into()));
        }
        // Thomas solve of the natural-spline tridiagonal system.
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 1..n - 1 {
            diag[i] = (h[i - 1] + h[i]) / 3.0;
            upper[i] = h[i] / 6.0;
            rhs[i] = (ys[i + 1] - ys[i]) / h[i] - (ys[i] - ys[i - 1]) / h[i - 1];
        }
        let mut m2 = vec![0.0; n];
        if n > 2 {
            let mut c = vec![0.0; n];
            let mut d = vec![0.0; n];
            c[1] = upper[1] / diag[1];
            d[1] = rhs[1] / diag[1];
            for i in 2..n - 1 {
                let lower = h[i - 1] / 6.0;
                let denom = diag[i] - lower * c[i - 1];
                c[i] = upper[i] / denom;
                d[i] = (rhs[i] - lower * d[i - 1]) / denom;
            }
            for i in (1..n - 1).rev() {
                m2[i] = d[i] - c[i] * m2[i + 1];
            }
        }
        Ok(Self { xs, ys, m2 })
    }

    fn segment(&self, s: f64) -> usize {
        let n = self.xs.len();
        match self.xs.binary_search_by(|x| x.partial_cmp(&s).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    pub fn value(&self, s: f64) -> f64 {
        let n = self.xs.len();
        if s <= self.xs[0] {
            return self.ys[0] + self.edge_slope(0) * (s - self.xs[0]);
        }
        if s >= self.xs[n - 1] {
            return self.ys[n - 1] + self.edge_slope(n - 1) * (s - self.xs[n - 1]);
        }
        let i = self.segment(s);
        let h = self.xs[i + 1] - self.xs[i];
        let a = self.xs[i + 1] - s;
        let b = s - self.xs[i];
        self.m2[i] * a * a * a / (6.0 * h)
            + self.m2[i + 1] * b * b * b / (6.0 * h)
            + (self.ys[i] / h - self.m2[i] * h / 6.0) * a
            + (self.ys[i + 1] / h - self.m2[i + 1] * h / 6.0) * b
    }

    fn edge_slope(&self, knot: usize) -> f64 {
        let n = self.xs.len();
        if knot == 0 {
            let h = self.xs[1] - self.xs[0];
            (self.ys[1] - self.ys[0]) / h - h * (2.0 * self.m2[0] + self.m2[1]) / 6.0
        } else {
            let h = self.xs[n - 1] - self.xs[n - 2];
            (self.ys[n - 1] - self.ys[n - 2]) / h + h * (self.m2[n - 2] + 2.0 * self.m2[n - 1]) / 6.0
        }
    }

    pub fn d1(&self, s: f64) -> f64 {
        let n = self.xs.len();
        if s <= self.xs[0] {
            return self.edge_slope(0);
        }
        if s >= self.xs[n - 1] {
            return self.edge_slope(n - 1);
        }
        let i = self.segment(s);
        let h = self.xs[i + 1] - self.xs[i];
        let a = self.xs[i + 1] - s;
        let b = s - self.xs[i];
        -self.m2[i] * a * a / (2.0 * h)
            + self.m2[i + 1] * b * b / (2.0 * h)
            + (self.ys[i + 1] - self.ys[i]) / h
            - (self.m2[i + 1] - self.m2[i]) * h / 6.0
    }

    pub fn d2(&self, s: f64) -> f64 {
        let n = self.xs.len();
        if s <= self.xs[0] || s >= self.xs[n - 1] {
            return 0.0;
        }
        let i = self.segment(s);
        let h = self.xs[i + 1] - self.xs[i];
        let a = self.xs[i + 1] - s;
        let b = s - self.xs[i];
        self.m2[i] * a / h + self.m2[i + 1] * b / h
    }

    /// Largest `|f''|` over the knots (where the piecewise-linear second
    /// derivative attains its extrema).
    pub fn max_d2(&self) -> f64 {
        self.m2.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }
}

/// The two travelling-wave profiles of a wave-family potential
/// `u = f(x_1 + x_2) + g(x_1 - x_2)`.
#[derive(Clone)]
pub struct WavePair {
    pub f: Curve,
    pub g: Curve,
}

impl WavePair {
    pub fn new(f: Curve, g: Curve) -> Self {
        Self { f, g }
    }

    /// Random spline pair scaled so `max|f''| · max|g''|` stays below
    /// `product_bound`, keeping the whole graph nondegenerate.
    pub fn random_spline<R: rand::Rng>(rng: &mut R, product_bound: f64) -> Self {
        let each = (product_bound.min(0.24)).sqrt() * 0.95;
        let make = |rng: &mut R| {
            let n = 9;
            let xs: Vec<f64> = (0..n).map(|i| -6.0 + 1.5 * i as f64).collect();
            let ys: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
            let sp = NaturalCubicSpline::new(xs.clone(), ys).unwrap();
            let bound = sp.max_d2().max(1e-9);
            let scaled: Vec<f64> = sp.ys.iter().map(|y| y * each / bound).collect();
            Curve::Spline(NaturalCubicSpline::new(xs, scaled).unwrap())
        };
        Self {
            f: make(rng),
            g: make(rng),
        }
    }

    /// Degeneracy indicator `4 f''(x_1+x_2) g''(x_1-x_2) + 1` at a point.
    pub fn validity(&self, x: &[f64]) -> f64 {
        4.0 * self.f.d2(x[0] + x[1]) * self.g.d2(x[0] - x[1]) + 1.0
    }
}

/// Build the `m = 2` potential `u = f(x_1+x_2) + g(x_1-x_2)` with analytic
/// derivatives. The Hessian satisfies the wave equation identically; the
/// per-point nondegeneracy flag is [`WavePair::validity`].
pub fn wave_potential(pair: &WavePair) -> PotentialField {
    let p1 = pair.clone();
    let p2 = pair.clone();
    let p3 = pair.clone();
    PotentialField::analytic(
        2,
        move |x| p1.f.value(x[0] + x[1]) + p1.g.value(x[0] - x[1]),
        move |x| {
            let fp = p2.f.d1(x[0] + x[1]);
            let gp = p2.g.d1(x[0] - x[1]);
            DVector::from_vec(vec![fp + gp, fp - gp])
        },
        move |x| {
            let fpp = p3.f.d2(x[0] + x[1]);
            let gpp = p3.g.d2(x[0] - x[1]);
            DMatrix::from_row_slice(2, 2, &[fpp + gpp, fpp - gpp, fpp - gpp, fpp + gpp])
        },
    )
}

// ---------------------------------------------------------------------------
// Residual, frames, conformal factor, linearisation
// ---------------------------------------------------------------------------

/// Value of the special Lagrangian residual at a point.
#[derive(Debug, Clone, Copy)]
pub struct SlResidual {
    /// `Im det(I + i Hess(u) I_{k,m})`; zero exactly on solutions.
    pub residual: f64,
    /// The full determinant; its modulus is the nondegeneracy indicator.
    pub det: Complex64,
}

fn check_km(dim: usize, k: usize) -> Result<()> {
    if k > dim {
        return Err(Error::InvalidInput(format!(
            "index {k} exceeds dimension {dim}"
        )));
    }
    Ok(())
}

fn graph_matrix(u: &PotentialField, k: usize, x: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if x.len() != u.dim() {
        return Err(Error::DimensionMismatch(format!(
            "point length {} vs potential dimension {}",
            x.len(),
            u.dim()
        )));
    }
    check_km(u.dim(), k)?;
    let h = u.hessian(x);
    let scale = h.amax().max(1.0);
    if (&h - h.transpose()).amax() > 1e-6 * scale {
        return Err(Error::InvalidInput(
            "Hessian is not symmetric; the map is not a gradient".into(),
        ));
    }
    let sig = SignatureMetric::new(k, u.dim()).signature_matrix();
    Ok((h, sig))
}

/// `Im det(I + i Hess(u)(x) I_{k,m})` together with the full determinant.
pub fn sl_residual(u: &PotentialField, k: usize, x: &[f64]) -> Result<SlResidual> {
    let (h, sig) = graph_matrix(u, k, x)?;
    let m = u.dim();
    let hs = &h * &sig;
    let a = DMatrix::from_fn(m, m, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        Complex64::new(id, hs[(i, j)])
    });
    let det = complex_det(&a);
    Ok(SlResidual {
        residual: det.im,
        det,
    })
}

/// Tangent frame of the gradient graph at `x`: columns `(e_j, ∂f/∂x_j)` with
/// `f = (∇u) I_{k,m}`.
pub fn graph_frame(u: &PotentialField, k: usize, x: &[f64]) -> Result<Frame> {
    let (h, sig) = graph_matrix(u, k, x)?;
    let m = u.dim();
    let jac = &sig * &h;
    let mut cols = DMatrix::zeros(2 * m, m);
    for j in 0..m {
        cols[(j, j)] = 1.0;
        for i in 0..m {
            cols[(m + i, j)] = jac[(i, j)];
        }
    }
    Frame::new(cols, 1)
}

/// Conformal factor of a wave-family graph: the induced metric is
/// `λ (-dx_1^2 + dx_2^2)` with `λ = 1 - u_{x_1x_2}^2 + u_{x_2x_2}^2`, and the
/// off-diagonal entry (returned for verification) cancels identically.
pub fn conformal_factor(u: &PotentialField, x: &[f64]) -> Result<(f64, f64)> {
    if u.dim() != 2 {
        return Err(Error::InvalidInput("conformal factor needs m = 2".into()));
    }
    let h = u.hessian(x);
    let scale = h.amax().max(1.0);
    if (h[(0, 0)] - h[(1, 1)]).abs() > 1e-8 * scale {
        return Err(Error::InvalidInput(format!(
            "potential does not satisfy the wave equation at the point: residual {:.3e}",
            h[(0, 0)] - h[(1, 1)]
        )));
    }
    let lambda = 1.0 - h[(0, 1)] * h[(0, 1)] + h[(1, 1)] * h[(1, 1)];
    let offdiag = -h[(0, 1)] * h[(0, 0)] + h[(0, 1)] * h[(1, 1)];
    Ok((lambda, offdiag))
}

/// Coefficient matrix of the linearised operator at `u`:
/// `(-1)^k Re(adj(I_{k,m} + i Hess u))`, acting as
/// `L_u(v) = tr(a · Hess v)`. Symmetric with index `k` at nondegenerate
/// points.
pub fn linearization(u: &PotentialField, k: usize, x: &[f64]) -> Result<DMatrix<f64>> {
    let (h, sig) = graph_matrix(u, k, x)?;
    let m = u.dim();
    let a = DMatrix::from_fn(m, m, |i, j| Complex64::new(sig[(i, j)], h[(i, j)]));
    let det = complex_det(&a);
    if det.norm() < 1e-8 {
        return Err(Error::Degenerate(format!(
            "graph is degenerate: |det| = {:.3e}",
            det.norm()
        )));
    }
    let adj = complex_adjugate(&a);
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    let re = DMatrix::from_fn(m, m, |i, j| sign * adj[(i, j)].re);
    Ok((re.clone() + re.transpose()) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::signature_of;
    use crate::planes::{is_special_plane, PlaneTols, SpecialVerdict};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn quarter_square_pair() -> WavePair {
        // u = (x1 + x2)^2 / 4
        WavePair::new(Curve::poly(&[0.0, 0.0, 0.25]), Curve::Zero)
    }

    #[test]
    fn residual_of_zero_potential() {
        let u = PotentialField::zero(3);
        let r = sl_residual(&u, 1, &[0.2, -0.1, 0.4]).unwrap();
        assert_eq!(r.residual, 0.0);
        assert_relative_eq!(r.det.re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn residual_of_wave_graphs() {
        let u = wave_potential(&quarter_square_pair());
        let r = sl_residual(&u, 1, &[0.7, -1.3]).unwrap();
        assert_relative_eq!(r.residual, 0.0, epsilon = 1e-13);
        assert_relative_eq!(r.det.re, 1.0, epsilon = 1e-13);

        // u = x1 x2: wave solution but degenerate everywhere.
        let pair = WavePair::new(Curve::poly(&[0.0, 0.0, 0.25]), Curve::poly(&[0.0, 0.0, -0.25]));
        let u = wave_potential(&pair);
        let r = sl_residual(&u, 1, &[0.3, 0.9]).unwrap();
        assert_relative_eq!(r.residual, 0.0, epsilon = 1e-13);
        assert_relative_eq!(r.det.norm(), 0.0, epsilon = 1e-13);
        assert_relative_eq!(pair.validity(&[0.3, 0.9]), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn wave_validity_examples() {
        let pair = quarter_square_pair();
        assert_relative_eq!(pair.validity(&[1.0, 2.0]), 1.0, epsilon = 1e-14);
        let trivial = WavePair::new(Curve::Zero, Curve::Zero);
        assert_relative_eq!(trivial.validity(&[0.0, 0.0]), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn graph_frame_columns() {
        let u = PotentialField::zero(3);
        let f = graph_frame(&u, 1, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(f.columns(), Frame::standard(3).columns());

        // u = (x1+x2)^2/4: f = (-u_{x1}, u_{x2}).
        let u = wave_potential(&quarter_square_pair());
        let f = graph_frame(&u, 1, &[1.0, 0.5]).unwrap();
        let c0 = f.column(0);
        assert_relative_eq!(c0[0], 1.0);
        assert_relative_eq!(c0[1], 0.0);
        assert_relative_eq!(c0[2], -0.5, epsilon = 1e-12); // -u_{x1 x1}
        assert_relative_eq!(c0[3], 0.5, epsilon = 1e-12); // u_{x2 x1}

        // Quadratic potential: y-block of the frame is diag(ε_j c_j).
        let u = PotentialField::quadratic(vec![0.3, -0.2, 0.7]);
        let f = graph_frame(&u, 1, &[1.0, 1.0, 1.0]).unwrap();
        assert_relative_eq!(f.columns()[(3, 0)], -0.3, epsilon = 1e-12);
        assert_relative_eq!(f.columns()[(4, 1)], -0.2, epsilon = 1e-12);
        assert_relative_eq!(f.columns()[(5, 2)], 0.7, epsilon = 1e-12);
    }

    #[test]
    fn wave_graph_frames_are_special() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let form = crate::linalg::HermitianForm::new(1, 2);
        let tols = PlaneTols::default();
        for _ in 0..10 {
            let pair = WavePair::random_spline(&mut rng, 0.2);
            let u = wave_potential(&pair);
            for _ in 0..20 {
                let x = [rng.gen::<f64>() * 10.0 - 5.0, rng.gen::<f64>() * 10.0 - 5.0];
                let r = sl_residual(&u, 1, &x).unwrap();
                assert!(r.residual.abs() < 1e-9, "residual {:.3e}", r.residual);
                assert!(pair.validity(&x) > 0.2);
                let frame = graph_frame(&u, 1, &x).unwrap();
                let check = is_special_plane(&frame, &form, &tols).unwrap();
                assert!(
                    matches!(
                        check.verdict,
                        SpecialVerdict::SpecialHere | SpecialVerdict::SpecialFlipped
                    ),
                    "phase ({}, {})",
                    check.phase_re,
                    check.phase_im
                );
            }
        }
    }

    #[test]
    fn conformal_factor_examples() {
        let u = PotentialField::zero(2);
        let (lambda, off) = conformal_factor(&u, &[0.0, 0.0]).unwrap();
        assert_relative_eq!(lambda, 1.0);
        assert_relative_eq!(off, 0.0);

        let u = wave_potential(&quarter_square_pair());
        let (lambda, off) = conformal_factor(&u, &[1.0, -0.3]).unwrap();
        assert_relative_eq!(lambda, 1.0, epsilon = 1e-12);
        assert_relative_eq!(off, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn conformal_factor_nontrivial_regression() {
        // F = s^2/4 and G = t^2/4: an independent Gram computation of the
        // graph frame gives induced metric 2(-dx1^2 + dx2^2), so λ = 2.
        let pair = WavePair::new(Curve::poly(&[0.0, 0.0, 0.25]), Curve::poly(&[0.0, 0.0, 0.25]));
        let u = wave_potential(&pair);
        let x = [0.4, -1.1];
        let (lambda, off) = conformal_factor(&u, &x).unwrap();
        assert_relative_eq!(off, 0.0, epsilon = 1e-12);
        assert_relative_eq!(lambda, 2.0, epsilon = 1e-12);

        let frame = graph_frame(&u, 1, &x).unwrap();
        let gram = frame
            .gram(&crate::linalg::SignatureMetric::ambient(1, 2))
            .unwrap();
        assert_relative_eq!(gram[(0, 0)], -lambda, epsilon = 1e-12);
        assert_relative_eq!(gram[(1, 1)], lambda, epsilon = 1e-12);
        assert_relative_eq!(gram[(0, 1)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn conformal_factor_rejects_non_wave() {
        let u = PotentialField::quadratic(vec![1.0, 0.0]);
        assert!(conformal_factor(&u, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn linearization_at_zero_potential() {
        let u = PotentialField::zero(3);
        let a = linearization(&u, 1, &[0.0, 0.0, 0.0]).unwrap();
        let want = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 1.0, 1.0]));
        assert!((a - want).amax() < 1e-12);

        let u = PotentialField::zero(4);
        let a = linearization(&u, 2, &[0.0; 4]).unwrap();
        let want = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -1.0, 1.0, 1.0]));
        assert!((a - want).amax() < 1e-12);
        assert_eq!(signature_of(&linearization(&u, 2, &[0.0; 4]).unwrap()).unwrap(), (2, 0, 2));
    }

    #[test]
    fn linearization_matches_diagonal_formula_on_commuting_hessian() {
        // u = c (x2^2 - x3^2)/2 solves the equation for k = 1, m = 3 and its
        // Hessian commutes with the signature matrix; the eigenvalue formula
        // gives diag(-(1+c^2), 1, 1).
        let c = 0.6;
        let u = PotentialField::quadratic(vec![0.0, c, -c]);
        let a = linearization(&u, 1, &[0.0; 3]).unwrap();
        let want =
            DMatrix::from_diagonal(&DVector::from_vec(vec![-(1.0 + c * c), 1.0, 1.0]));
        assert!((a - want).amax() < 1e-12);
    }

    #[test]
    fn linearization_is_residual_derivative() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for (k, m) in [(1usize, 3usize), (1, 2), (2, 4)] {
            for _ in 0..10 {
                let mut hu = DMatrix::from_fn(m, m, |_, _| 0.3 * (rng.gen::<f64>() * 2.0 - 1.0));
                hu = (&hu + hu.transpose()) * 0.5;
                let mut hv = DMatrix::from_fn(m, m, |_, _| rng.gen::<f64>() * 2.0 - 1.0);
                hv = (&hv + hv.transpose()) * 0.5;
                let hu2 = hu.clone();
                let u = PotentialField::analytic(
                    m,
                    move |_| 0.0,
                    {
                        let hu = hu.clone();
                        move |x| &hu * DVector::from_column_slice(x)
                    },
                    move |_| hu2.clone(),
                );
                let x = vec![0.0; m];
                let a = linearization(&u, k, &x).unwrap();
                let lin: f64 = (0..m)
                    .flat_map(|i| (0..m).map(move |j| (i, j)))
                    .map(|(i, j)| a[(i, j)] * hv[(i, j)])
                    .sum();

                // Finite difference of the residual along Hess v.
                let t = 1e-6;
                let make_u = |hm: DMatrix<f64>| {
                    PotentialField::analytic(
                        m,
                        move |_| 0.0,
                        {
                            let hm = hm.clone();
                            move |x| &hm * DVector::from_column_slice(x)
                        },
                        {
                            let hm = hm.clone();
                            move |_| hm.clone()
                        },
                    )
                };
                let up = make_u(u.hessian(&x) + hv.clone() * t);
                let um = make_u(u.hessian(&x) - hv.clone() * t);
                let fd = (sl_residual(&up, k, &x).unwrap().residual
                    - sl_residual(&um, k, &x).unwrap().residual)
                    / (2.0 * t);
                assert!(
                    (fd - lin).abs() < 1e-6 * (1.0 + lin.abs()),
                    "k={k}, m={m}: fd {fd} vs lin {lin}"
                );
            }
        }
    }

    #[test]
    fn linearization_signature_for_small_hessians() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for (k, m) in [(1usize, 3usize), (2, 4)] {
            for _ in 0..25 {
                let mut h = DMatrix::from_fn(m, m, |_, _| rng.gen::<f64>() * 2.0 - 1.0);
                h = (&h + h.transpose()) * 0.5;
                let norm = h.norm();
                if norm > 0.5 {
                    h *= 0.45 / norm;
                }
                let h2 = h.clone();
                let u = PotentialField::analytic(
                    m,
                    move |_| 0.0,
                    {
                        let h = h.clone();
                        move |x| &h * DVector::from_column_slice(x)
                    },
                    move |_| h2.clone(),
                );
                let a = linearization(&u, k, &[0.0; 6][..m].to_vec().as_slice()).unwrap();
                assert_eq!(signature_of(&a).unwrap(), (k, 0, m - k));
            }
        }
    }

    #[test]
    fn residual_invariant_under_affine_shift() {
        let pair = quarter_square_pair();
        let u = wave_potential(&pair);
        let pair2 = pair.clone();
        let shifted = PotentialField::from_fn(2, move |x| {
            wave_potential(&pair2).value(x) + 3.0 + 2.0 * x[0] - 0.7 * x[1]
        });
        for x in [[0.3, 0.4], [-1.0, 2.0]] {
            let a = sl_residual(&u, 1, &x).unwrap();
            let b = sl_residual(&shifted, 1, &x).unwrap();
            assert_relative_eq!(a.residual, b.residual, epsilon = 1e-7);
            assert_relative_eq!(a.det.re, b.det.re, epsilon = 1e-6);
        }
    }

    #[test]
    fn fd_hessian_matches_analytic() {
        let pair = quarter_square_pair();
        let analytic = wave_potential(&pair);
        let pair2 = pair.clone();
        let fd = PotentialField::from_fn(2, move |x| {
            pair2.f.value(x[0] + x[1]) + pair2.g.value(x[0] - x[1])
        });
        let x = [0.8, -0.2];
        let ha = analytic.hessian(&x);
        let hf = fd.hessian(&x);
        assert!((ha - hf).amax() < 1e-6);
        let ga = analytic.gradient(&x);
        let gf = fd.gradient(&x);
        assert!((ga - gf).amax() < 1e-8);
    }

    #[test]
    fn spline_interpolates_and_is_smooth() {
        let xs: Vec<f64> = (0..7).map(|i| i as f64).collect();
        let ys = vec![0.0, 1.0, -0.5, 0.3, 0.8, -0.2, 0.1];
        let sp = NaturalCubicSpline::new(xs.clone(), ys.clone()).unwrap();
        for (x, y) in xs.iter().zip(ys.iter()) {
            assert_relative_eq!(sp.value(*x), *y, epsilon = 1e-12);
        }
        // Continuity of value, first and second derivative across a knot.
        let eps = 1e-7;
        for knot in &xs[1..xs.len() - 1] {
            assert_relative_eq!(sp.value(knot - eps), sp.value(knot + eps), epsilon = 1e-5);
            assert_relative_eq!(sp.d1(knot - eps), sp.d1(knot + eps), epsilon = 1e-5);
            assert_relative_eq!(sp.d2(knot - eps), sp.d2(knot + eps), epsilon = 1e-4);
        }
        // Natural ends: second derivative fades to zero, linear outside.
        assert_relative_eq!(sp.d2(-3.0), 0.0);
        assert_relative_eq!(sp.d2(11.0), 0.0);
        let slope = sp.d1(6.0);
        assert_relative_eq!(sp.value(8.0), sp.value(6.0) + 2.0 * slope, epsilon = 1e-12);
    }
}
