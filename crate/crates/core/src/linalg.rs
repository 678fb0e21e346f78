//! Dense complex-matrix kernels.
//!
//! Everything the relaying protocol needs reduces to Gram matrices of wide
//! or tall channel matrices, so the module is built around a Hermitian
//! Cholesky factorization rather than a general decomposition. Pseudo-inverses
//! solve against the Gram factor, log-determinants read its diagonal, and the
//! condition estimate used to reject ill-posed draws comes from the same
//! diagonal.

use std::fmt;
use std::ops::{Index, IndexMut, Mul};
use std::sync::OnceLock;

use num_complex::Complex64;
use thiserror::Error;

/// Failures raised by the dense kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("shape error in {op}: got {rows}x{cols}")]
    Shape { op: &'static str, rows: usize, cols: usize },
    #[error("Gram matrix is numerically singular (condition estimate {condition:e})")]
    SingularGram { condition: f64 },
    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("matrix has an eigenvalue below the tolerated floor")]
    NegativeEigenvalue,
    #[error("invalid matrix: {0}")]
    Invalid(String),
}

/// Tolerances shared by every kernel in this module.
///
/// One record is installed process-wide; [`NumericPolicy::global`] returns the
/// defaults when nothing has been installed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericPolicy {
    /// Relative tolerance for algebraic identities such as `A·A⁺ = I`.
    pub identity_tolerance: f64,
    /// Maximum `|g_ij − conj(g_ji)|`, relative to the largest entry.
    pub hermitian_tolerance: f64,
    /// Eigenvalues down to `-eigenvalue_floor` are treated as zero.
    pub eigenvalue_floor: f64,
    /// Largest accepted Gram condition number estimate.
    pub condition_threshold: f64,
}

impl Default for NumericPolicy {
    fn default() -> Self {
        Self {
            identity_tolerance: 1e-10,
            hermitian_tolerance: 1e-10,
            eigenvalue_floor: 1e-10,
            condition_threshold: 1e12,
        }
    }
}

static POLICY: OnceLock<NumericPolicy> = OnceLock::new();

impl NumericPolicy {
    pub fn global() -> &'static NumericPolicy {
        POLICY.get_or_init(NumericPolicy::default)
    }

    /// Installs `self` as the process-wide policy. Fails (returning the
    /// rejected record) once a policy has been installed or read.
    pub fn install(self) -> Result<(), NumericPolicy> {
        POLICY.set(self)
    }
}

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::Invalid(format!(
                "dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(LinalgError::Invalid(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LinalgError::Invalid("non-finite entry".into()));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from real entries given row by row.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(LinalgError::Invalid("ragged rows".into()));
        }
        let data = rows
            .iter()
            .flat_map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)))
            .collect();
        Self::new(rows.len(), cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.shape(), other.shape(), "shape mismatch in sub");
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Squared Euclidean norm of each column.
    pub fn column_norms_sqr(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (acc, z) in out.iter_mut().zip(self.row(i)) {
                *acc += z.norm_sqr();
            }
        }
        out
    }

    /// Squared Euclidean norm of each row.
    pub fn row_norms_sqr(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|z| z.norm_sqr()).sum())
            .collect()
    }

    /// Largest `|a_ij − conj(a_ji)|`; infinite for non-square input.
    pub fn hermitian_deviation(&self) -> f64 {
        if self.rows != self.cols {
            return f64::INFINITY;
        }
        let mut dev = 0.0_f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// `A·Aᴴ`, exploiting Hermitian symmetry.
    pub fn gram_rows(&self) -> Self {
        let n = self.rows;
        let mut g = Self::zeros(n, n);
        for i in 0..n {
            let ri = self.row(i);
            for j in 0..=i {
                let v = dot_conj(ri, self.row(j));
                g[(i, j)] = v;
                g[(j, i)] = v.conj();
            }
        }
        g
    }

    /// `Aᴴ·A`, accumulated as a sum of row outer products.
    pub fn gram_cols(&self) -> Self {
        let n = self.cols;
        let mut g = Self::zeros(n, n);
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..n {
                let ci = row[i].conj();
                let out = &mut g.data[i * n..(i + 1) * n];
                for (o, &z) in out.iter_mut().zip(row) {
                    *o += ci * z;
                }
            }
        }
        g
    }

    /// `selfᴴ · rhs` without forming the adjoint.
    pub fn adjoint_matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.rows, rhs.rows, "shape mismatch in adjoint_matmul");
        let m = rhs.cols;
        let mut out = Self::zeros(self.cols, m);
        for r in 0..self.rows {
            let b = rhs.row(r);
            for (i, a) in self.row(r).iter().enumerate() {
                let a = a.conj();
                for (d, &z) in out.data[i * m..(i + 1) * m].iter_mut().zip(b) {
                    *d += a * z;
                }
            }
        }
        out
    }

    /// `self · v` for a column vector `v`.
    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.cols, "shape mismatch in mul_vec");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `selfᴴ · v` without forming the adjoint.
    pub fn adjoint_mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.rows, "shape mismatch in adjoint_mul_vec");
        let mut out = vec![Complex64::new(0.0, 0.0); self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a.conj() * vi;
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(
            self.cols, rhs.rows,
            "shape mismatch in matmul: {}x{} * {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = Self::zeros(self.rows, rhs.cols);
        let m = rhs.cols;
        for i in 0..self.rows {
            let dst = &mut out.data[i * m..(i + 1) * m];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for (d, &b) in dst.iter_mut().zip(rhs.row(k)) {
                    *d += a * b;
                }
            }
        }
        out
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            write!(f, "  ")?;
            for z in self.row(i).iter().take(8) {
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// `Σ a_k · conj(b_k)` with four independent accumulators.
fn dot_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let mut acc = [Complex64::new(0.0, 0.0); 4];
    let (a4, b4) = (a.chunks_exact(4), b.chunks_exact(4));
    let mut tail = Complex64::new(0.0, 0.0);
    for (x, y) in a4.remainder().iter().zip(b4.remainder()) {
        tail += x * y.conj();
    }
    for (x, y) in a4.zip(b4) {
        for l in 0..4 {
            acc[l] += x[l] * y[l].conj();
        }
    }
    acc[0] + acc[1] + acc[2] + acc[3] + tail
}

/// Lower-triangular factor `L` of a Hermitian positive-definite `A = L·Lᴴ`.
#[derive(Clone, Debug)]
pub struct Cholesky {
    l: ComplexMatrix,
}

impl Cholesky {
    /// Factors `a`, reading only its lower triangle. Fails on any
    /// non-positive pivot.
    pub fn factor(a: &ComplexMatrix) -> Result<Self, LinalgError> {
        let (n, m) = a.shape();
        if n != m {
            return Err(LinalgError::Shape {
                op: "cholesky",
                rows: n,
                cols: m,
            });
        }
        let mut l = ComplexMatrix::zeros(n, n);
        for j in 0..n {
            let lj = &l.data[j * n..j * n + j];
            let d = a[(j, j)].re - lj.iter().map(|z| z.norm_sqr()).sum::<f64>();
            if !(d > 0.0) || !d.is_finite() {
                return Err(LinalgError::SingularGram {
                    condition: f64::INFINITY,
                });
            }
            let pivot = d.sqrt();
            l[(j, j)] = Complex64::new(pivot, 0.0);
            for i in j + 1..n {
                let s = dot_conj(&l.data[i * n..i * n + j], &l.data[j * n..j * n + j]);
                l[(i, j)] = (a[(i, j)] - s) / pivot;
            }
        }
        Ok(Self { l })
    }

    /// Factors `a` and rejects it when the condition estimate exceeds
    /// `threshold`.
    pub fn factor_checked(a: &ComplexMatrix, threshold: f64) -> Result<Self, LinalgError> {
        let chol = Self::factor(a)?;
        let condition = chol.condition_estimate();
        if condition > threshold {
            return Err(LinalgError::SingularGram { condition });
        }
        Ok(chol)
    }

    pub fn dim(&self) -> usize {
        self.l.rows
    }

    pub fn lower(&self) -> &ComplexMatrix {
        &self.l
    }

    /// `(max l_ii / min l_ii)²`, a cheap lower bound on the 2-norm condition
    /// number of the factored matrix.
    pub fn condition_estimate(&self) -> f64 {
        let diag = (0..self.dim()).map(|i| self.l[(i, i)].re);
        let (lo, hi) = diag.fold((f64::INFINITY, 0.0_f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
        (hi / lo).powi(2)
    }

    /// Factor of `conj(A)`, which is `conj(L)`.
    pub fn conj(&self) -> Self {
        Self { l: self.l.conj() }
    }

    /// Natural log of `det(A)`.
    pub fn ln_det(&self) -> f64 {
        2.0 * (0..self.dim()).map(|i| self.l[(i, i)].re.ln()).sum::<f64>()
    }

    /// Solves `A·X = B`.
    pub fn solve(&self, b: &ComplexMatrix) -> ComplexMatrix {
        let n = self.dim();
        assert_eq!(b.rows, n, "shape mismatch in cholesky solve");
        let m = b.cols;
        let mut x = b.clone();
        // L·Y = B
        for i in 0..n {
            let (done, rest) = x.data.split_at_mut(i * m);
            let xi = &mut rest[..m];
            for k in 0..i {
                let lik = self.l[(i, k)];
                for (d, &y) in xi.iter_mut().zip(&done[k * m..(k + 1) * m]) {
                    *d -= lik * y;
                }
            }
            let inv = 1.0 / self.l[(i, i)].re;
            xi.iter_mut().for_each(|d| *d *= inv);
        }
        // Lᴴ·X = Y
        for i in (0..n).rev() {
            let (head, tail) = x.data.split_at_mut((i + 1) * m);
            let xi = &mut head[i * m..];
            for k in i + 1..n {
                let lki = self.l[(k, i)].conj();
                for (d, &y) in xi.iter_mut().zip(&tail[(k - i - 1) * m..(k - i) * m]) {
                    *d -= lki * y;
                }
            }
            let inv = 1.0 / self.l[(i, i)].re;
            xi.iter_mut().for_each(|d| *d *= inv);
        }
        x
    }

    pub fn inverse(&self) -> ComplexMatrix {
        self.solve(&ComplexMatrix::identity(self.dim()))
    }

    /// `tr(A⁻¹) = ‖L⁻¹‖²_F`.
    pub fn inverse_trace(&self) -> f64 {
        let n = self.dim();
        let mut total = 0.0;
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            // Column j of L⁻¹ by forward substitution; entries above j vanish.
            col.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            for i in j..n {
                let mut s = if i == j {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                for (k, c) in col.iter().enumerate().take(i).skip(j) {
                    s -= self.l[(i, k)] * c;
                }
                col[i] = s / self.l[(i, i)].re;
                total += col[i].norm_sqr();
            }
        }
        total
    }
}

fn gram_factor(gram: &ComplexMatrix) -> Result<Cholesky, LinalgError> {
    Cholesky::factor_checked(gram, NumericPolicy::global().condition_threshold)
}

/// `Aᴴ(AAᴴ)⁻¹` for a wide, full-row-rank `A`.
pub fn right_pseudo_inverse(a: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    if a.rows > a.cols {
        return Err(LinalgError::Shape {
            op: "right_pseudo_inverse",
            rows: a.rows,
            cols: a.cols,
        });
    }
    let chol = gram_factor(&a.gram_rows())?;
    Ok(chol.solve(a).adjoint())
}

/// `(AᴴA)⁻¹Aᴴ` for a tall, full-column-rank `A`.
pub fn left_pseudo_inverse(a: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    if a.rows < a.cols {
        return Err(LinalgError::Shape {
            op: "left_pseudo_inverse",
            rows: a.rows,
            cols: a.cols,
        });
    }
    let chol = gram_factor(&a.gram_cols())?;
    Ok(chol.solve(&a.adjoint()))
}

/// The dagger operator: right form for wide (and square) input, left form
/// for tall input.
pub fn pseudo_inverse(a: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    if a.rows <= a.cols {
        right_pseudo_inverse(a)
    } else {
        left_pseudo_inverse(a)
    }
}

/// `log₂ det(I + scale·G)` for Hermitian positive-semidefinite `G`.
pub fn log_det_capacity(g: &ComplexMatrix, scale: f64) -> Result<f64, LinalgError> {
    let (n, m) = g.shape();
    if n != m {
        return Err(LinalgError::Shape {
            op: "log_det_capacity",
            rows: n,
            cols: m,
        });
    }
    if !(scale >= 0.0) || !scale.is_finite() {
        return Err(LinalgError::Invalid(format!("scale must be >= 0, got {scale}")));
    }
    let policy = NumericPolicy::global();
    let magnitude = g.max_abs().max(1.0);
    let deviation = g.hermitian_deviation();
    if deviation > policy.hermitian_tolerance * magnitude {
        return Err(LinalgError::NotHermitian { deviation });
    }

    // G + floor·I is positive definite exactly when every eigenvalue of G
    // exceeds -floor.
    let mut shifted = g.clone();
    for i in 0..n {
        shifted[(i, i)] += policy.eigenvalue_floor;
    }
    Cholesky::factor(&shifted).map_err(|_| LinalgError::NegativeEigenvalue)?;

    let mut a = g.scale(scale);
    for i in 0..n {
        a[(i, i)] += 1.0;
    }
    let chol = Cholesky::factor(&a).map_err(|_| LinalgError::NegativeEigenvalue)?;
    Ok((chol.ln_det() / std::f64::consts::LN_2).max(0.0))
}

/// `tr[(AAᴴ)⁻¹]` or `tr[(AᴴA)⁻¹]`, whichever Gram is smaller.
pub fn trace_of_inverse_gram(a: &ComplexMatrix) -> Result<f64, LinalgError> {
    let gram = if a.rows <= a.cols { a.gram_rows() } else { a.gram_cols() };
    Ok(gram_factor(&gram)?.inverse_trace())
}
