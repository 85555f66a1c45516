//! Dense symmetric-positive-definite linear algebra: Cholesky factorization,
//! triangular solves, cached log-determinants, and rank-1 factor updates.
//!
//! Everything here is sized for the dense n-by-n covariance matrices of a GP
//! likelihood (n in the hundreds). Failure to factor is a recoverable value,
//! not an abort: MCMC proposal rejection depends on it.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    /// The k-th pivot (1-based) was not strictly positive. For covariance
    /// matrices this signals a proposal the caller should reject.
    #[error("matrix not positive definite at pivot {0}")]
    NotPositiveDefinite(usize),
}

/// Dense symmetric matrix, full row-major storage.
///
/// Symmetry is maintained by construction: the only mutating entry points
/// write both `(i, j)` and `(j, i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Build from a function of `(i, j)`; `f` is evaluated once per pair with
    /// `j <= i` and mirrored, so the result is symmetric exactly.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let v = f(i, j);
                m.data[i * n + j] = v;
                m.data[j * n + i] = v;
            }
        }
        m
    }

    /// Build from explicit entries (row-major). The input must already be
    /// symmetric to within `1e-12` relative tolerance; it is symmetrized.
    pub fn from_rows(n: usize, rows: &[f64]) -> Self {
        assert_eq!(rows.len(), n * n, "entry count must be n*n");
        for i in 0..n {
            for j in 0..i {
                let a = rows[i * n + j];
                let b = rows[j * n + i];
                let scale = a.abs().max(b.abs()).max(1.0);
                assert!(
                    (a - b).abs() <= 1e-12 * scale,
                    "input not symmetric at ({i},{j}): {a} vs {b}"
                );
            }
        }
        Self::from_fn(n, |i, j| 0.5 * (rows[i * n + j] + rows[j * n + i]))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Set entry `(i, j)` and its mirror.
    #[inline]
    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

/// Lower-triangular Cholesky factor with its log-determinant cached.
///
/// Stored column-major so the factorization, triangular solves, and rank-1
/// updates all walk contiguous memory.
#[derive(Debug, Clone, PartialEq)]
pub struct CholFactor {
    n: usize,
    /// Column-major lower-triangular; entries above the diagonal are zero.
    l: Vec<f64>,
    logdet: f64,
}

impl CholFactor {
    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    /// log det(L Lᵀ) = 2 Σ log L_kk.
    #[inline]
    pub fn logdet(&self) -> f64 {
        self.logdet
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.l[j * self.n + i]
    }

    /// Rebuild L·Lᵀ (test and oracle use).
    pub fn reconstruct(&self) -> SymMatrix {
        let n = self.n;
        SymMatrix::from_fn(n, |i, j| {
            (0..=j.min(i)).map(|k| self.get(i, k) * self.get(j, k)).sum()
        })
    }

    fn recompute_logdet(&mut self) {
        self.logdet = 2.0
            * (0..self.n)
                .map(|k| self.l[k * self.n + k].ln())
                .sum::<f64>();
    }
}

// Four accumulators break the serial FP dependency chain; this dot product
// sits inside the O(n³) factorization loop.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (xa, xb) in (&mut ca).zip(&mut cb) {
        acc[0] += xa[0] * xb[0];
        acc[1] += xa[1] * xb[1];
        acc[2] += xa[2] * xb[2];
        acc[3] += xa[3] * xb[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        s += x * y;
    }
    s
}

/// Cholesky factorization `a = L Lᵀ` (right-looking, column-oriented).
///
/// Returns `NotPositiveDefinite(k)` (1-based pivot) as a value when a pivot
/// is not strictly positive, so callers can treat near-singular covariance
/// matrices as rejectable proposals.
pub fn cholesky(a: &SymMatrix) -> Result<CholFactor, LinalgError> {
    let n = a.dim();
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        for i in j..n {
            l[j * n + i] = a.get(i, j);
        }
    }
    for k in 0..n {
        let akk = l[k * n + k];
        if akk <= 0.0 || !akk.is_finite() {
            return Err(LinalgError::NotPositiveDefinite(k + 1));
        }
        let pivot = akk.sqrt();
        l[k * n + k] = pivot;
        let inv = 1.0 / pivot;
        for i in k + 1..n {
            l[k * n + i] *= inv;
        }
        // Trailing update: column j loses col_k[j] * col_k[j..].
        for j in k + 1..n {
            let (head, tail) = l.split_at_mut(j * n);
            let col_k = &head[k * n + j..k * n + n];
            let f = col_k[0];
            if f != 0.0 {
                let col_j = &mut tail[j..n];
                for (x, y) in col_j.iter_mut().zip(col_k) {
                    *x -= f * *y;
                }
            }
        }
    }
    let mut f = CholFactor { n, l, logdet: 0.0 };
    f.recompute_logdet();
    Ok(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateSign {
    /// Factor `L Lᵀ + v vᵀ`.
    Update,
    /// Factor `L Lᵀ − v vᵀ`; fails if positivity would be lost.
    Downdate,
}

/// Rank-1 update/downdate of a Cholesky factor in O(n²).
pub fn rank1_update(f: &CholFactor, v: &[f64], sign: UpdateSign) -> Result<CholFactor, LinalgError> {
    let n = f.n;
    assert_eq!(v.len(), n, "update vector length must match dimension");
    let mut l = f.l.clone();
    let mut x = v.to_vec();
    for k in 0..n {
        let lkk = l[k * n + k];
        let r2 = match sign {
            UpdateSign::Update => lkk * lkk + x[k] * x[k],
            UpdateSign::Downdate => lkk * lkk - x[k] * x[k],
        };
        if r2 <= 0.0 || !r2.is_finite() {
            return Err(LinalgError::NotPositiveDefinite(k + 1));
        }
        let r = r2.sqrt();
        let c = r / lkk;
        let s = x[k] / lkk;
        l[k * n + k] = r;
        let col = &mut l[k * n + k + 1..k * n + n];
        let xs = &mut x[k + 1..n];
        match sign {
            UpdateSign::Update => {
                for (lv, xv) in col.iter_mut().zip(xs.iter_mut()) {
                    *lv = (*lv + s * *xv) / c;
                    *xv = c * *xv - s * *lv;
                }
            }
            UpdateSign::Downdate => {
                for (lv, xv) in col.iter_mut().zip(xs.iter_mut()) {
                    *lv = (*lv - s * *xv) / c;
                    *xv = c * *xv - s * *lv;
                }
            }
        }
    }
    let mut out = CholFactor { n, l, logdet: 0.0 };
    out.recompute_logdet();
    Ok(out)
}

/// Solve `(L Lᵀ) x = b` by forward then backward substitution.
pub fn solve_chol(f: &CholFactor, b: &[f64]) -> Vec<f64> {
    let mut x = solve_lower(f, b);
    let n = f.n;
    // Lᵀ x = y, backward; column i of L is row i of Lᵀ.
    for i in (0..n).rev() {
        let s = dot(&f.l[i * n + i + 1..i * n + n], &x[i + 1..n]);
        x[i] = (x[i] - s) / f.l[i * n + i];
    }
    x
}

/// Solve `L x = b` (forward substitution, column-oriented).
pub fn solve_lower(f: &CholFactor, b: &[f64]) -> Vec<f64> {
    let n = f.n;
    assert_eq!(b.len(), n, "rhs length must match dimension");
    let mut x = b.to_vec();
    for j in 0..n {
        let xj = x[j] / f.l[j * n + j];
        x[j] = xj;
        let col = &f.l[j * n + j + 1..j * n + n];
        let rest = &mut x[j + 1..n];
        for (r, c) in rest.iter_mut().zip(col) {
            *r -= c * xj;
        }
    }
    x
}

/// `L x` for a lower-triangular factor (column accumulation).
pub fn mul_lower(f: &CholFactor, x: &[f64]) -> Vec<f64> {
    let n = f.n;
    assert_eq!(x.len(), n, "vector length must match dimension");
    let mut y = vec![0.0; n];
    for j in 0..n {
        let xj = x[j];
        if xj != 0.0 {
            let col = &f.l[j * n + j..j * n + n];
            for (yv, c) in y[j..n].iter_mut().zip(col) {
                *yv += c * xj;
            }
        }
    }
    y
}

/// Quadratic form `bᵀ (L Lᵀ)⁻¹ b = ‖L⁻¹ b‖²`.
pub fn quad_form_inv(f: &CholFactor, b: &[f64]) -> f64 {
    let u = solve_lower(f, b);
    dot(&u, &u)
}
