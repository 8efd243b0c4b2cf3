//! R-matrix-valued Lax pair of the spinless Calogero-Moser model on
//! `Mat(M) (x) Mat(N)^{(x)M}`, the `Mat(M)` factor outermost.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rmatrix::RMatrixFamily;
use crate::specfun::Flavor;
use crate::tensor::{embed_pair, ComplexMatrix};

/// Largest `N^M` accepted.
pub const CM_SIZE_LIMIT: usize = 256;

#[derive(Clone, Debug)]
pub struct CmLaxPair {
    pub l: ComplexMatrix,
    /// `M - nu 1 (x) F0`.
    pub mbar: ComplexMatrix,
    /// `F0 = sum_{b > c} F0_bc(q_bc)` on `Mat(N)^{(x)M}`.
    pub f0: ComplexMatrix,
}

fn site_dims(fam: &RMatrixFamily, m: usize) -> Result<Vec<usize>> {
    let n = fam.n();
    let size = (0..m).try_fold(1usize, |acc, _| acc.checked_mul(n)).unwrap_or(usize::MAX);
    if size > CM_SIZE_LIMIT {
        return Err(Error::ScaleExceeded {
            size,
            limit: CM_SIZE_LIMIT,
        });
    }
    Ok(vec![n; m])
}

fn check_lengths(q: &[Complex64], p: &[Complex64]) -> Result<usize> {
    if q.len() != p.len() || q.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "q has {} and p has {} entries",
            q.len(),
            p.len()
        )));
    }
    Ok(q.len())
}

pub fn cm_rmx_lax(
    q: &[Complex64],
    p: &[Complex64],
    nu: Complex64,
    fam: &RMatrixFamily,
    z: Complex64,
) -> Result<CmLaxPair> {
    let m = check_lengths(q, p)?;
    let dims = site_dims(fam, m)?;
    let d: usize = dims.iter().product();
    let on = |op: ComplexMatrix, a: usize, b: usize| embed_pair(&op, &dims, a, b);

    let mut f0 = ComplexMatrix::zeros(d);
    let mut dsum = vec![ComplexMatrix::zeros(d); m];
    for a in 0..m {
        for c in 0..m {
            if a != c {
                let t = on(fam.f0(q[a] - q[c])?.into_mat(), a, c);
                dsum[a] -= &t;
                if a > c {
                    f0 += &t;
                }
            }
        }
    }
    let mut l = ComplexMatrix::zeros(m * d);
    let mut mbar = ComplexMatrix::zeros(m * d);
    for a in 0..m {
        for b in 0..m {
            if a == b {
                l.set_block(d, a, a, &ComplexMatrix::identity(d).scale(p[a]));
                mbar.set_block(d, a, a, &dsum[a].scale(nu));
            } else {
                let r = on(fam.r_matrix(z, q[a] - q[b])?.into_mat(), a, b);
                let f = on(fam.f_matrix(z, q[a] - q[b])?.into_mat(), a, b);
                l.set_block(d, a, b, &r.scale(nu));
                mbar.set_block(d, a, b, &f.scale(nu));
            }
        }
    }
    Ok(CmLaxPair { l, mbar, f0 })
}

/// Max entrywise residual of `{H, L} + [nu F0, L] = [L, Mbar]` relative to
/// the largest entry of `[L, Mbar]`, with
/// `H = sum p^2 / 2 - nu^2 sum_{a<c} wp(q_ac)` and canonical brackets only.
pub fn cm_rmx_residual(
    q: &[Complex64],
    p: &[Complex64],
    nu: Complex64,
    fam: &RMatrixFamily,
    z: Complex64,
) -> Result<f64> {
    let m = check_lengths(q, p)?;
    let pair = cm_rmx_lax(q, p, nu, fam, z)?;
    let d = pair.f0.dim();
    let fl = fam.flavor();
    let mut lhs = ComplexMatrix::zeros(m * d);
    let dims = vec![fam.n(); m];
    for a in 0..m {
        // -dH/dq_a = nu^2 sum_c wp'(q_ac)
        let mut force = Complex64::new(0.0, 0.0);
        for c in (0..m).filter(|&c| c != a) {
            force += fl.de2(q[a] - q[c])?;
        }
        lhs.set_block(d, a, a, &ComplexMatrix::identity(d).scale(nu * nu * force));
        for b in (0..m).filter(|&b| b != a) {
            let f = embed_pair(fam.f_matrix(z, q[a] - q[b])?.mat(), &dims, a, b);
            lhs.set_block(d, a, b, &f.scale(nu * (p[a] - p[b])));
        }
    }
    let big_f0 = crate::tensor::kron(&ComplexMatrix::identity(m), &pair.f0).scale(nu);
    lhs += &big_f0.commutator(&pair.l);
    let rhs = pair.l.commutator(&pair.mbar);
    let s = rhs.max_abs();
    let diff = (&lhs - &rhs).max_abs();
    Ok(if s == 0.0 { diff } else { diff / s })
}

/// Scalar Calogero-Moser Lax pair: `L_ab = p_a d_ab + nu (1 - d_ab) phi(z, q_ab)`,
/// `M_ab = nu d_ab sum_c E2(q_ac) + nu (1 - d_ab) f(z, q_ab)`.
pub fn krichever_lax(
    q: &[Complex64],
    p: &[Complex64],
    nu: Complex64,
    fl: &Flavor,
    z: Complex64,
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let m = check_lengths(q, p)?;
    let mut l = ComplexMatrix::zeros(m);
    let mut mm = ComplexMatrix::zeros(m);
    for a in 0..m {
        for b in 0..m {
            if a == b {
                l[(a, a)] = p[a];
                let mut d = Complex64::new(0.0, 0.0);
                for c in (0..m).filter(|&c| c != a) {
                    d += fl.e2(q[a] - q[c])?;
                }
                mm[(a, a)] = nu * d;
            } else {
                l[(a, b)] = nu * fl.phi(z, q[a] - q[b])?;
                mm[(a, b)] = nu * fl.f(z, q[a] - q[b])?;
            }
        }
    }
    Ok((l, mm))
}
