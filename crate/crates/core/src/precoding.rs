//! Regularized zero-forcing precoding, power normalization and rates.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FclaError, Result};
use crate::linalg::{frobenius_sq, identity, solve, CMat};

/// Regularized zero-forcing precoder `Hᴴ(HHᴴ + αI_K)⁻¹`.
///
/// Uses the smaller of the two Gram systems: the `K × K` user Gram when
/// `K ≤ n`, otherwise the equivalent antenna form `(HᴴH + αI_n)⁻¹Hᴴ`.
pub fn rzf(h: &CMat, alpha: f64) -> Result<CMat> {
    if h.nrows() <= h.ncols() {
        rzf_user_gram(h, alpha)
    } else {
        rzf_antenna_gram(h, alpha)
    }
}

/// `Hᴴ(HHᴴ + αI_K)⁻¹`, computed as `Xᴴ` with `(HHᴴ + αI)X = H`.
pub fn rzf_user_gram(h: &CMat, alpha: f64) -> Result<CMat> {
    check_alpha(alpha)?;
    let k = h.nrows();
    let gram = h * h.adjoint() + identity(k) * Complex64::from(alpha);
    Ok(solve(&gram, h)?.adjoint())
}

/// `(HᴴH + αI_n)⁻¹Hᴴ`.
pub fn rzf_antenna_gram(h: &CMat, alpha: f64) -> Result<CMat> {
    check_alpha(alpha)?;
    let n = h.ncols();
    let hh = h.adjoint();
    let gram = &hh * h + identity(n) * Complex64::from(alpha);
    solve(&gram, &hh)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha >= 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(FclaError::InvalidConfig(format!(
            "regularization must be finite and non-negative, got {alpha}"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinearPrecoder {
    Mrt,
    Zf,
    Mmse,
}

/// Classical members of the RZF family.
pub fn rzf_special(h: &CMat, mode: LinearPrecoder, noise_var: f64) -> Result<CMat> {
    match mode {
        LinearPrecoder::Mrt => Ok(h.adjoint()),
        LinearPrecoder::Zf => rzf(h, 0.0),
        LinearPrecoder::Mmse => rzf(h, noise_var),
    }
}

/// Scales every column to power `P / K`, so the total power is `P`.
pub fn normalize_columns(f: &CMat, power: f64) -> Result<CMat> {
    let k = f.ncols();
    let target = (power / k as f64).sqrt();
    let mut out = f.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(FclaError::ZeroColumn(j));
        }
        col *= Complex64::from(target / norm);
    }
    Ok(out)
}

/// Like [`normalize_columns`], but columns that are exactly zero (users
/// whose channel row vanishes) stay zero instead of raising an error. The
/// total power is then `P` times the fraction of nonzero columns.
pub fn normalize_nonzero_columns(f: &CMat, power: f64) -> CMat {
    let target = (power / f.ncols() as f64).sqrt();
    let mut out = f.clone();
    for mut col in out.column_iter_mut() {
        let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 && norm.is_finite() {
            col *= Complex64::from(target / norm);
        }
    }
    out
}

/// Per-user SINR and achievable rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub sinr: Vec<f64>,
    /// Per-user rate in bits per channel use.
    pub rates: Vec<f64>,
    pub sum_rate: f64,
}

/// SINR of each user when row `k` of `h` is user `k`'s channel and column
/// `k` of `f` its beamformer.
pub fn sinr(h: &CMat, f: &CMat, noise_var: f64) -> Result<RateReport> {
    if h.ncols() != f.nrows() || h.nrows() != f.ncols() {
        return Err(FclaError::DimensionMismatch(format!(
            "channel {}x{} vs precoder {}x{}",
            h.nrows(),
            h.ncols(),
            f.nrows(),
            f.ncols()
        )));
    }
    let gains = h * f;
    let k = h.nrows();
    let sinr: Vec<f64> = (0..k)
        .map(|u| {
            let row = gains.row(u);
            let signal = row[u].norm_sqr();
            let interference: f64 = row.iter().map(|z| z.norm_sqr()).sum::<f64>() - signal;
            signal / (interference.max(0.0) + noise_var)
        })
        .collect();
    let rates: Vec<f64> = sinr.iter().map(|s| (1.0 + s).log2()).collect();
    let sum_rate = rates.iter().sum();
    Ok(RateReport {
        sinr,
        rates,
        sum_rate,
    })
}

/// `‖I_K − HF‖²_F + α‖F‖²_F`.
pub fn rzf_objective(h: &CMat, f: &CMat, alpha: f64) -> f64 {
    let residual = identity(h.nrows()) - h * f;
    frobenius_sq(&residual) + alpha * frobenius_sq(f)
}
