//! Minimal dense complex linear algebra for tall-thin channel matrices.
//!
//! Channel and precoding matrices are M x K with M (antennas) much larger
//! than K (users), so everything here is column-major: a per-user column is
//! one contiguous slice.

use num_complex::Complex64;

/// Column-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    /// Build from column slices; all columns must share one length.
    pub fn from_columns(columns: &[Vec<Complex64>]) -> Self {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        assert!(
            columns.iter().all(|c| c.len() == rows),
            "ragged column lengths"
        );
        let mut data = Vec::with_capacity(rows * cols);
        for c in columns {
            data.extend_from_slice(c);
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn col(&self, j: usize) -> &[Complex64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [Complex64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[j * self.rows + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[j * self.rows + i] = v;
    }

    /// Two columns of the same matrix, mutably (`a < b` required).
    fn col_pair_mut(&mut self, a: usize, b: usize) -> (&mut [Complex64], &mut [Complex64]) {
        debug_assert!(a < b);
        let (lo, hi) = self.data.split_at_mut(b * self.rows);
        (
            &mut lo[a * self.rows..(a + 1) * self.rows],
            &mut hi[..self.rows],
        )
    }
}

/// Hermitian inner product `sum_i conj(a_i) * b_i`.
pub fn dot_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        acc += x.conj() * y;
    }
    acc
}

pub fn norm_sq(v: &[Complex64]) -> f64 {
    v.iter().map(Complex64::norm_sqr).sum()
}

pub fn norm(v: &[Complex64]) -> f64 {
    norm_sq(v).sqrt()
}

/// `y += alpha * x`.
pub fn axpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(v: &mut [Complex64], s: f64) {
    for x in v {
        *x *= s;
    }
}

/// Thin QR factorization `A = Q R` via modified Gram-Schmidt with one
/// reorthogonalization pass. `Q` is rows x cols with orthonormal columns,
/// `R` is cols x cols upper triangular with non-negative real diagonal.
///
/// An exactly dependent column yields `R[j][j] = 0` and a zero `Q` column;
/// callers detect rank deficiency from the diagonal of `R`.
pub fn qr_thin(a: &CMat) -> (CMat, CMat) {
    let (m, k) = (a.rows(), a.cols());
    assert!(m >= k, "qr_thin expects a tall matrix ({m} x {k})");
    let mut q = a.clone();
    let mut r = CMat::zeros(k, k);
    for j in 0..k {
        for _pass in 0..2 {
            for i in 0..j {
                let (qi, qj) = q.col_pair_mut(i, j);
                let rij = dot_conj(qi, qj);
                axpy(-rij, qi, qj);
                let acc = r.get(i, j) + rij;
                r.set(i, j, acc);
            }
        }
        let nrm = norm(q.col(j));
        r.set(j, j, Complex64::new(nrm, 0.0));
        if nrm > 0.0 {
            scale(q.col_mut(j), 1.0 / nrm);
        }
    }
    (q, r)
}

/// Solve `R^H x = e_k` by forward substitution (`R` upper triangular, so its
/// conjugate transpose is lower triangular). Panics on a zero diagonal; the
/// caller is expected to have rejected rank-deficient `R` first.
pub fn solve_conj_transpose_unit_rhs(r: &CMat, k: usize) -> Vec<Complex64> {
    let n = r.cols();
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        let rhs = if i == k {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
        let mut acc = rhs;
        for (j, xj) in x.iter().enumerate().take(i) {
            acc -= r.get(j, i).conj() * xj;
        }
        let diag = r.get(i, i).conj();
        assert!(diag.norm_sqr() > 0.0, "singular triangular factor");
        x[i] = acc / diag;
    }
    x
}

/// `A * x` for column-major `A` and a dense vector.
pub fn mat_vec(a: &CMat, x: &[Complex64]) -> Vec<Complex64> {
    debug_assert_eq!(a.cols(), x.len());
    let mut out = vec![Complex64::new(0.0, 0.0); a.rows()];
    for (j, xj) in x.iter().enumerate() {
        axpy(*xj, a.col(j), &mut out);
    }
    out
}
