//! Pseudo-Euclidean and pseudo-Hermitian linear algebra.
//!
//! Everything downstream fixes the coordinate order `(x_1..x_m, y_1..y_m)` on
//! `R^{2m} ≅ C^m` with `z_j = x_j + i y_j`. The complex structure `J` maps
//! `x_j ↦ y_j`, `y_j ↦ -x_j`, the symplectic form is
//! `omega(v, w) = Σ_j ε_j (v_{x_j} w_{y_j} - v_{y_j} w_{x_j})` and the ambient
//! real metric carries the sign `ε_j` on both the `x_j` and `y_j` axes, where
//! `ε_j = -1` for `j ≤ k` and `+1` otherwise.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{DiagonalizationFailure, Error, Result};

/// Default relative threshold below which Gram determinants and eigenvalues
/// are treated as zero.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-10;

fn check_dim(expected: usize, got: usize, what: &str) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch(format!(
            "{what}: expected {expected}, got {got}"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Signature metrics
// ---------------------------------------------------------------------------

/// A flat metric `Σ_j s_j dx_j^2` with signs `s_j ∈ {-1, +1}`.
///
/// [`SignatureMetric::new`] puts all negative signs first (the standard
/// index-`n` form on `R^N`); [`SignatureMetric::ambient`] produces the real
/// metric of `C_k^m` in `(x_1..x_m, y_1..y_m)` order, whose negative axes are
/// `x_1..x_k, y_1..y_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignatureMetric {
    signs: Vec<f64>,
}

impl SignatureMetric {
    /// Index-`index` metric on `R^dim` with the timelike axes first.
    pub fn new(index: usize, dim: usize) -> Self {
        assert!(index <= dim, "index must not exceed dimension");
        assert!(dim > 0, "dimension must be positive");
        let signs = (0..dim).map(|j| if j < index { -1.0 } else { 1.0 }).collect();
        Self { signs }
    }

    /// Real metric of `C_k^m` on `R^{2m}` in `(x, y)` coordinate order.
    pub fn ambient(k: usize, m: usize) -> Self {
        assert!(k <= m, "index must not exceed complex dimension");
        assert!(m > 0, "complex dimension must be positive");
        let eps = |j: usize| if j < k { -1.0 } else { 1.0 };
        let mut signs = Vec::with_capacity(2 * m);
        for j in 0..m {
            signs.push(eps(j));
        }
        for j in 0..m {
            signs.push(eps(j));
        }
        Self { signs }
    }

    pub fn dim(&self) -> usize {
        self.signs.len()
    }

    /// Number of negative axes.
    pub fn index(&self) -> usize {
        self.signs.iter().filter(|s| **s < 0.0).count()
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    /// Diagonal matrix of the signs.
    pub fn signature_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_vec(self.signs.clone()))
    }

    /// Evaluate the metric on a pair of vectors.
    pub fn eval(&self, v: &DVector<f64>, w: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), v.len(), "metric argument v")?;
        check_dim(self.dim(), w.len(), "metric argument w")?;
        Ok(self
            .signs
            .iter()
            .zip(v.iter().zip(w.iter()))
            .map(|(s, (a, b))| s * a * b)
            .sum())
    }

    /// Gram matrix `C^T diag(s) C` of a set of column vectors.
    pub fn gram(&self, columns: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_dim(self.dim(), columns.nrows(), "gram column length")?;
        let mut scaled = columns.clone();
        for (i, s) in self.signs.iter().enumerate() {
            for j in 0..columns.ncols() {
                scaled[(i, j)] *= s;
            }
        }
        Ok(columns.transpose() * scaled)
    }
}

/// Evaluate a signature metric on two vectors.
pub fn metric_eval(metric: &SignatureMetric, v: &DVector<f64>, w: &DVector<f64>) -> Result<f64> {
    metric.eval(v, w)
}

// ---------------------------------------------------------------------------
// The pseudo-Hermitian form of C_k^m
// ---------------------------------------------------------------------------

/// The pseudo-Hermitian form `h = Σ_j ε_j dz_j dz̄_j` of index `k` on `C^m`,
/// together with its real part (the ambient metric), its imaginary part (the
/// symplectic form, `h = g - iω`) and the complex structure `J`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianForm {
    k: usize,
    m: usize,
}

impl HermitianForm {
    pub fn new(k: usize, m: usize) -> Self {
        assert!(k <= m, "index must not exceed complex dimension");
        assert!(m > 0, "complex dimension must be positive");
        Self { k, m }
    }

    pub fn index(&self) -> usize {
        self.k
    }

    pub fn complex_dim(&self) -> usize {
        self.m
    }

    pub fn real_dim(&self) -> usize {
        2 * self.m
    }

    /// Timelike/spacelike sign of the `j`-th complex axis (0-based).
    pub fn eps(&self, j: usize) -> f64 {
        if j < self.k {
            -1.0
        } else {
            1.0
        }
    }

    /// The real ambient metric (index `2k` on `R^{2m}`).
    pub fn ambient_metric(&self) -> SignatureMetric {
        SignatureMetric::ambient(self.k, self.m)
    }

    /// The signature matrix `diag(-I_k, I_{m-k})` acting on `C^m`.
    pub fn signature_matrix(&self) -> SignatureMetric {
        SignatureMetric::new(self.k, self.m)
    }

    /// Symplectic form `ω(v, w) = Σ_j ε_j (v_{x_j} w_{y_j} - v_{y_j} w_{x_j})`.
    pub fn omega(&self, v: &DVector<f64>, w: &DVector<f64>) -> Result<f64> {
        check_dim(self.real_dim(), v.len(), "omega argument v")?;
        check_dim(self.real_dim(), w.len(), "omega argument w")?;
        let m = self.m;
        let mut total = 0.0;
        for j in 0..m {
            total += self.eps(j) * (v[j] * w[m + j] - v[m + j] * w[j]);
        }
        Ok(total)
    }

    /// Full Hermitian value `h(v, w) = Σ_j ε_j v_j conj(w_j)`.
    pub fn hermitian(&self, v: &DVector<f64>, w: &DVector<f64>) -> Result<Complex64> {
        check_dim(self.real_dim(), v.len(), "hermitian argument v")?;
        check_dim(self.real_dim(), w.len(), "hermitian argument w")?;
        let m = self.m;
        let mut total = Complex64::new(0.0, 0.0);
        for j in 0..m {
            let vj = Complex64::new(v[j], v[m + j]);
            let wj = Complex64::new(w[j], w[m + j]);
            total += self.eps(j) * vj * wj.conj();
        }
        Ok(total)
    }

    /// Apply the complex structure: `(x, y) ↦ (-y, x)`.
    pub fn j_apply(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.real_dim(), v.len(), "J argument")?;
        let m = self.m;
        let mut out = DVector::zeros(2 * m);
        for j in 0..m {
            out[j] = -v[m + j];
            out[m + j] = v[j];
        }
        Ok(out)
    }

    /// View a real `2m`-vector as a complex `m`-vector.
    pub fn complexify(&self, v: &DVector<f64>) -> Result<DVector<Complex64>> {
        check_dim(self.real_dim(), v.len(), "complexify argument")?;
        let m = self.m;
        Ok(DVector::from_fn(m, |j, _| Complex64::new(v[j], v[m + j])))
    }

    /// Real `2m`-vector of a complex `m`-vector.
    pub fn realify(&self, z: &DVector<Complex64>) -> Result<DVector<f64>> {
        check_dim(self.m, z.len(), "realify argument")?;
        let m = self.m;
        let mut out = DVector::zeros(2 * m);
        for j in 0..m {
            out[j] = z[j].re;
            out[m + j] = z[j].im;
        }
        Ok(out)
    }
}

/// Evaluate the symplectic form of `form` on two real `2m`-vectors.
pub fn omega_eval(form: &HermitianForm, v: &DVector<f64>, w: &DVector<f64>) -> Result<f64> {
    form.omega(v, w)
}

// ---------------------------------------------------------------------------
// Oriented frames
// ---------------------------------------------------------------------------

/// An ordered list of `m` vectors in `R^{2m}` spanning an oriented `m`-plane.
#[derive(Debug, Clone)]
pub struct Frame {
    columns: DMatrix<f64>,
    orientation: i8,
}

impl Frame {
    /// Build a frame from a `2m × m` column matrix and an orientation sign.
    pub fn new(columns: DMatrix<f64>, orientation: i8) -> Result<Self> {
        if columns.nrows() != 2 * columns.ncols() || columns.ncols() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "frame must be 2m x m, got {} x {}",
                columns.nrows(),
                columns.ncols()
            )));
        }
        if orientation != 1 && orientation != -1 {
            return Err(Error::InvalidInput("orientation must be +1 or -1".into()));
        }
        Ok(Self { columns, orientation })
    }

    /// The standard real `m`-plane `span(∂x_1, …, ∂x_m)` with `+` orientation.
    pub fn standard(m: usize) -> Self {
        let mut columns = DMatrix::zeros(2 * m, m);
        for j in 0..m {
            columns[(j, j)] = 1.0;
        }
        Self { columns, orientation: 1 }
    }

    pub fn m(&self) -> usize {
        self.columns.ncols()
    }

    pub fn columns(&self) -> &DMatrix<f64> {
        &self.columns
    }

    pub fn orientation(&self) -> i8 {
        self.orientation
    }

    pub fn column(&self, j: usize) -> DVector<f64> {
        DVector::from_column_slice(self.columns.column(j).as_slice())
    }

    /// Same plane with reversed orientation.
    pub fn flipped(&self) -> Self {
        Self {
            columns: self.columns.clone(),
            orientation: -self.orientation,
        }
    }

    /// Gram matrix of the frame under a `2m`-dimensional signature metric.
    pub fn gram(&self, metric: &SignatureMetric) -> Result<DMatrix<f64>> {
        metric.gram(&self.columns)
    }

    /// The `m × m` complex matrix whose column `j` holds `x_j + i y_j`
    /// components of the `j`-th frame vector.
    pub fn complex_matrix(&self) -> DMatrix<Complex64> {
        let m = self.m();
        DMatrix::from_fn(m, m, |l, j| {
            Complex64::new(self.columns[(l, j)], self.columns[(m + l, j)])
        })
    }

    /// Apply a real `m × m` matrix diagonally: `(x, y) ↦ (Ax, Ay)` per column.
    pub fn transform_diagonal(&self, a: &DMatrix<f64>) -> Result<Self> {
        let m = self.m();
        check_dim(m, a.nrows(), "diagonal action rows")?;
        check_dim(m, a.ncols(), "diagonal action cols")?;
        let mut columns = DMatrix::zeros(2 * m, m);
        for j in 0..m {
            let x = a * self.columns.view((0, j), (m, 1));
            let y = a * self.columns.view((m, j), (m, 1));
            columns.view_mut((0, j), (m, 1)).copy_from(&x);
            columns.view_mut((m, j), (m, 1)).copy_from(&y);
        }
        Ok(Self {
            columns,
            orientation: self.orientation,
        })
    }
}

// ---------------------------------------------------------------------------
// Determinants and signatures
// ---------------------------------------------------------------------------

/// Complex determinant via LU with partial pivoting. Singular input gives 0.
pub fn complex_det(a: &DMatrix<Complex64>) -> Complex64 {
    assert_eq!(a.nrows(), a.ncols(), "determinant needs a square matrix");
    a.clone().lu().determinant()
}

/// Adjugate (transposed cofactor matrix), so `A · adj(A) = det(A) · I`.
pub fn complex_adjugate(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "adjugate needs a square matrix");
    if n == 1 {
        return DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
    }
    let mut adj = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let minor = a.clone().remove_row(i).remove_column(j);
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            adj[(j, i)] = sign * complex_det(&minor);
        }
    }
    adj
}

/// Eigenvalue sign counts `(negatives, zeros, positives)` of a symmetric
/// matrix.
pub fn signature_of(a: &DMatrix<f64>) -> Result<(usize, usize, usize)> {
    signature_of_with(a, DEFAULT_DEGENERACY_TOL, 1e-8)
}

/// [`signature_of`] with explicit zero threshold (relative to the largest
/// eigenvalue magnitude) and symmetry tolerance.
pub fn signature_of_with(
    a: &DMatrix<f64>,
    zero_tol: f64,
    sym_tol: f64,
) -> Result<(usize, usize, usize)> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "signature needs a square matrix, got {} x {}",
            a.nrows(),
            a.ncols()
        )));
    }
    let scale = a.amax().max(1.0);
    let asym = (a - a.transpose()).amax();
    if asym > sym_tol * scale {
        return Err(Error::InvalidInput(format!(
            "matrix is not symmetric: |A - A^T| = {asym:.3e}"
        )));
    }
    let sym = (a + a.transpose()) * 0.5;
    let eigs = sym.symmetric_eigenvalues();
    let emax = eigs.iter().fold(0.0_f64, |acc, e| acc.max(e.abs()));
    let thresh = zero_tol * emax.max(1e-300);
    let mut counts = (0usize, 0usize, 0usize);
    for e in eigs.iter() {
        if e.abs() <= thresh {
            counts.1 += 1;
        } else if *e < 0.0 {
            counts.0 += 1;
        } else {
            counts.2 += 1;
        }
    }
    Ok(counts)
}

// ---------------------------------------------------------------------------
// Lorentz-orthonormal eigenbases
// ---------------------------------------------------------------------------

/// A basis diagonalising an operator, orthonormal up to signs for an
/// indefinite metric: `g(b_i, b_j) = signs[i] δ_ij` and `A b_i = λ_i b_i`.
#[derive(Debug, Clone)]
pub struct LorentzEigen {
    pub eigenvalues: Vec<f64>,
    /// Basis vectors as columns.
    pub basis: DMatrix<f64>,
    pub signs: Vec<f64>,
}

/// Diagonalise an operator that is self-adjoint with respect to an indefinite
/// metric, producing a Lorentz-orthonormal eigenbasis when one exists.
///
/// Self-adjointness (`G A` symmetric, `G` the signature matrix) is required.
/// Unlike the definite case this can genuinely fail: the spectrum may be
/// complex or an eigenvalue defective, and both cases are reported as
/// structured failures rather than patched over.
pub fn metric_diagonalize(
    a: &DMatrix<f64>,
    metric: &SignatureMetric,
    tol: f64,
) -> Result<LorentzEigen> {
    let n = metric.dim();
    check_dim(n, a.nrows(), "operator rows")?;
    check_dim(n, a.ncols(), "operator cols")?;
    let g = metric.signature_matrix();
    let ga = &g * a;
    let scale = a.amax().max(1.0);
    if (&ga - ga.transpose()).amax() > 1e-8 * scale {
        return Err(Error::InvalidInput(
            "operator is not self-adjoint for the metric".into(),
        ));
    }

    let eigs = a.clone().complex_eigenvalues();
    if eigs.iter().any(|e| e.im.abs() > tol.max(1e-9) * scale) {
        return Err(Error::Diagonalization(DiagonalizationFailure::ComplexSpectrum));
    }
    let mut reals: Vec<f64> = eigs.iter().map(|e| e.re).collect();
    reals.sort_by(|x, y| x.partial_cmp(y).unwrap());

    // Cluster numerically equal eigenvalues.
    let cluster_tol = 1e-7 * scale;
    let mut clusters: Vec<(f64, usize)> = Vec::new();
    for v in reals {
        match clusters.last_mut() {
            Some((c, mult)) if (v - *c).abs() <= cluster_tol => {
                *c = (*c * (*mult as f64) + v) / (*mult as f64 + 1.0);
                *mult += 1;
            }
            _ => clusters.push((v, 1)),
        }
    }

    let mut basis = DMatrix::zeros(n, n);
    let mut eigenvalues = Vec::with_capacity(n);
    let mut signs = Vec::with_capacity(n);
    let mut col = 0usize;
    for (lambda, mult) in clusters {
        let shifted = a - DMatrix::identity(n, n) * lambda;
        let svd = shifted.svd(true, true);
        let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
        let rank_tol = (tol.max(1e-9) * smax.max(1.0)).max(1e-12);
        let v_t = svd.v_t.as_ref().expect("svd requested with V^T");
        let mut space: Vec<DVector<f64>> = Vec::new();
        for (i, s) in svd.singular_values.iter().enumerate() {
            if *s <= rank_tol {
                space.push(DVector::from_row_slice(v_t.row(i).transpose().as_slice()));
            }
        }
        if space.len() < mult {
            return Err(Error::Diagonalization(DiagonalizationFailure::NonSemisimple));
        }
        let w = DMatrix::from_columns(&space);
        let gram = metric.gram(&w)?;
        let norm = lorentz_normalize(&gram, tol).map_err(|_| {
            Error::Diagonalization(DiagonalizationFailure::DegenerateEigenspace)
        })?;
        let vectors = &w * &norm.coeffs;
        for (i, s) in norm.signs.iter().enumerate() {
            basis.set_column(col, &vectors.column(i));
            eigenvalues.push(lambda);
            signs.push(*s);
            col += 1;
        }
    }
    debug_assert_eq!(col, n);
    Ok(LorentzEigen {
        eigenvalues,
        basis,
        signs,
    })
}

/// Coefficients turning a basis with the given Gram matrix into a Lorentz
/// basis: `C^T G C = diag(signs)`, timelike vectors first.
#[derive(Debug, Clone)]
pub struct LorentzCoeffs {
    pub coeffs: DMatrix<f64>,
    pub signs: Vec<f64>,
}

/// Lorentz-normalise a (possibly indefinite) non-degenerate Gram matrix.
pub fn lorentz_normalize(gram: &DMatrix<f64>, tol: f64) -> Result<LorentzCoeffs> {
    let n = gram.nrows();
    check_dim(n, gram.ncols(), "gram must be square")?;
    let sym = (gram + gram.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let emax = eig.eigenvalues.amax().max(1e-300);
    let mut order: Vec<usize> = (0..n).collect();
    // Timelike directions first, then by eigenvalue magnitude for stability.
    order.sort_by(|&i, &j| {
        let si = eig.eigenvalues[i] >= 0.0;
        let sj = eig.eigenvalues[j] >= 0.0;
        si.cmp(&sj).then(
            eig.eigenvalues[i]
                .partial_cmp(&eig.eigenvalues[j])
                .unwrap(),
        )
    });
    let mut coeffs = DMatrix::zeros(n, n);
    let mut signs = Vec::with_capacity(n);
    for (out_idx, &i) in order.iter().enumerate() {
        let d = eig.eigenvalues[i];
        if d.abs() <= tol * emax {
            return Err(Error::Degenerate(format!(
                "gram eigenvalue {d:.3e} below threshold"
            )));
        }
        let scale = 1.0 / d.abs().sqrt();
        coeffs.set_column(out_idx, &(eig.eigenvectors.column(i) * scale));
        signs.push(d.signum());
    }
    Ok(LorentzCoeffs { coeffs, signs })
}

// ---------------------------------------------------------------------------
// Random isometries (used throughout the tests and by invariance checks)
// ---------------------------------------------------------------------------

/// Random element of the identity component of the real isometry group of the
/// metric, `exp(G S)` with `S` skew-symmetric of the given scale.
pub fn random_indefinite_orthogonal<R: rand::Rng>(
    metric: &SignatureMetric,
    scale: f64,
    rng: &mut R,
) -> DMatrix<f64> {
    let n = metric.dim();
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = scale * (rng.gen::<f64>() * 2.0 - 1.0);
            s[(i, j)] = v;
            s[(j, i)] = -v;
        }
    }
    (metric.signature_matrix() * s).exp()
}

/// Random pseudo-unitary matrix preserving the index-`k` Hermitian form on
/// `C^m`, `exp(I_{k,m} C)` with `C` anti-Hermitian of the given scale.
pub fn random_indefinite_unitary<R: rand::Rng>(
    k: usize,
    m: usize,
    scale: f64,
    rng: &mut R,
) -> DMatrix<Complex64> {
    let mut c = DMatrix::zeros(m, m);
    for i in 0..m {
        c[(i, i)] = Complex64::new(0.0, scale * (rng.gen::<f64>() * 2.0 - 1.0));
        for j in (i + 1)..m {
            let v = Complex64::new(
                scale * (rng.gen::<f64>() * 2.0 - 1.0),
                scale * (rng.gen::<f64>() * 2.0 - 1.0),
            );
            c[(i, j)] = v;
            c[(j, i)] = -v.conj();
        }
    }
    let sig = SignatureMetric::new(k, m)
        .signature_matrix()
        .map(|x| Complex64::new(x, 0.0));
    (sig * c).exp()
}
