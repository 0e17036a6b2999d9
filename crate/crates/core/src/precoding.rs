//! Unit-norm linear precoders built from (estimated or true) channels.
//!
//! Both schemes fix the receiver-side convention: the effective gain of the
//! link from the BS to user k through precoder column t is `g_k^H w_t`.
//!
//! * MR points each column along the user's own channel: `w_k = g_k / ||g_k||`,
//!   so `g_k^H w_k = ||g_k||` with perfect CSI.
//! * ZF takes the columns of `G (G^H G)^{-1}` (normalized), which nulls every
//!   cross gain: `g_t^H w_k = 0` for `t != k`.

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

/// Relative rank threshold: the estimated channel matrix is declared
/// rank deficient when the smallest QR diagonal falls below this times the
/// largest.
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Mr,
    Zf,
}

impl Scheme {
    pub fn label(self) -> &'static str {
        match self {
            Scheme::Mr => "mr",
            Scheme::Zf => "zf",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// M x K matrix of unit-norm precoding columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Precoder {
    pub w: CMat,
    pub scheme: Scheme,
}

/// Maximum-ratio precoder: each column is the normalized channel column.
pub fn mr_precoder(g_hat: &CMat) -> Result<Precoder> {
    let mut w = g_hat.clone();
    for j in 0..w.cols() {
        let nrm_sq = linalg::norm_sq(w.col(j));
        if !(nrm_sq > f64::MIN_POSITIVE) {
            return Err(Error::DegenerateChannel(format!(
                "user {j} has a (near-)zero channel estimate; MR direction undefined"
            )));
        }
        linalg::scale(w.col_mut(j), 1.0 / nrm_sq.sqrt());
    }
    Ok(Precoder {
        w,
        scheme: Scheme::Mr,
    })
}

/// Zero-forcing precoder: normalized columns of `Ghat (Ghat^H Ghat)^{-1}`,
/// computed through a thin QR factorization rather than an explicit normal
/// matrix inverse (`Ghat = QR` gives `Ghat (Ghat^H Ghat)^{-1} = Q R^{-H}`).
pub fn zf_precoder(g_hat: &CMat) -> Result<Precoder> {
    let (m, k) = (g_hat.rows(), g_hat.cols());
    if m < k {
        return Err(Error::InvalidArgument(format!(
            "zero forcing needs at least as many antennas as users, got M = {m}, K = {k}"
        )));
    }
    let (q, r) = linalg::qr_thin(g_hat);
    let diag: Vec<f64> = (0..k).map(|j| r.get(j, j).re).collect();
    let largest = diag.iter().cloned().fold(0.0, f64::max);
    let smallest = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(smallest > RANK_TOLERANCE * largest) {
        return Err(Error::SingularMatrix(format!(
            "channel matrix is numerically rank deficient (M = {m}, K = {k}, \
             diagonal ratio {:.3e} below {RANK_TOLERANCE:.0e})",
            if largest > 0.0 { smallest / largest } else { 0.0 }
        )));
    }
    let mut w = CMat::zeros(m, k);
    for j in 0..k {
        let x = linalg::solve_conj_transpose_unit_rhs(&r, j);
        let col = linalg::mat_vec(&q, &x);
        let nrm = linalg::norm(&col);
        let dst = w.col_mut(j);
        dst.copy_from_slice(&col);
        linalg::scale(dst, 1.0 / nrm);
    }
    Ok(Precoder {
        w,
        scheme: Scheme::Zf,
    })
}

/// Dispatch on the scheme tag.
pub fn build_precoder(scheme: Scheme, g_hat: &CMat) -> Result<Precoder> {
    match scheme {
        Scheme::Mr => mr_precoder(g_hat),
        Scheme::Zf => zf_precoder(g_hat),
    }
}
