//! Classical exchange relation on `Mat(M)^2 (x) Mat(N)^2`.
//!
//! Factor order is `(1', 2', 1, 2)`: the two `Mat(M)` factors outermost. The
//! flat index of `(i, k, a, e)` is `((i*M + k)*N + a)*N + e`.

use num_complex::Complex64;

use super::{lax_l, off_kernel, off_kernel_dq, PhaseState, CONSTRAINT_TOL};
use crate::error::Result;
use crate::tensor::{embed_pair, permute_factors, ComplexMatrix, TwoSiteOperator};

fn idx(m: usize, n: usize, i: usize, k: usize, a: usize, e: usize) -> usize {
    ((i * m + k) * n + a) * n + e
}

fn place(out: &mut ComplexMatrix, m: usize, n: usize, i: usize, j: usize, t: &TwoSiteOperator) {
    // E_ij (x) E_ji (x) T
    for a in 0..n {
        for e in 0..n {
            for c in 0..n {
                for g in 0..n {
                    out[(idx(m, n, i, j, a, e), idx(m, n, j, i, c, g))] = t.coeff(a, c, e, g);
                }
            }
        }
    }
}

/// `sum_i E_ii (x) E_ii (x) r(z-w) + sum_{i != j} E_ij (x) E_ji (x) R^{z-w}(q_ij) P`.
pub fn classical_r_big(st: &PhaseState, z: Complex64, w: Complex64) -> Result<ComplexMatrix> {
    let fam = st.family();
    let (m, n) = (st.m(), st.n());
    let mut out = ComplexMatrix::zeros(m * m * n * n);
    let r = fam.r(z - w)?;
    for i in 0..m {
        for j in 0..m {
            if i == j {
                place(&mut out, m, n, i, i, &r);
            } else {
                place(&mut out, m, n, i, j, &off_kernel(fam, z - w, st.q()[i] - st.q()[j])?);
            }
        }
    }
    Ok(out)
}

/// `d/dq_k` of [`classical_r_big`].
pub fn classical_r_big_dq(st: &PhaseState, z: Complex64, w: Complex64, k: usize) -> Result<ComplexMatrix> {
    let fam = st.family();
    let (m, n) = (st.m(), st.n());
    let mut out = ComplexMatrix::zeros(m * m * n * n);
    for i in 0..m {
        for j in 0..m {
            if i != j && (k == i || k == j) {
                let sign = if k == i { 1.0 } else { -1.0 };
                let t = off_kernel_dq(fam, z - w, st.q()[i] - st.q()[j])?;
                place(&mut out, m, n, i, j, &(&t * Complex64::new(sign, 0.0)));
            }
        }
    }
    Ok(out)
}

/// Exchanges `1' <-> 2'` and `1 <-> 2`.
pub fn swap_primed_pairs(x: &ComplexMatrix, m: usize, n: usize) -> ComplexMatrix {
    permute_factors(x, &[m, m, n, n], &[1, 0, 3, 2])
}

/// `{L_1'1(z), L_2'2(w)}` entrywise: entry `((i,k,a,e), (j,l,c,g))` is
/// `{L(z)_{(i,a),(j,c)}, L(w)_{(k,e),(l,g)}}`.
pub fn lax_lax_bracket(st: &PhaseState, z: Complex64, w: Complex64) -> Result<ComplexMatrix> {
    let fam = st.family();
    let (m, n) = (st.m(), st.n());
    let q = st.q();
    let kernel = |x: Complex64, i: usize, j: usize| -> Result<TwoSiteOperator> {
        if i == j {
            fam.r(x)
        } else {
            off_kernel(fam, x, q[i] - q[j])
        }
    };
    let mut kz = Vec::with_capacity(m * m);
    let mut kw = Vec::with_capacity(m * m);
    // q-derivative blocks tr_2(S^ij F^x(q_ij) P); zero on the diagonal.
    let mut gz = Vec::with_capacity(m * m);
    let mut gw = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            kz.push(kernel(z, i, j)?);
            kw.push(kernel(w, i, j)?);
            if i == j {
                gz.push(ComplexMatrix::zeros(n));
                gw.push(ComplexMatrix::zeros(n));
            } else {
                let s = st.spin().block(i, j);
                gz.push(off_kernel_dq(fam, z, q[i] - q[j])?.contract_2(&s));
                gw.push(off_kernel_dq(fam, w, q[i] - q[j])?.contract_2(&s));
            }
        }
    }
    let sb = st.spin().blocks();
    let mut out = ComplexMatrix::zeros(m * m * n * n);
    for i in 0..m {
        for j in 0..m {
            let kzij = &kz[i * m + j];
            for k in 0..m {
                for l in 0..m {
                    let kwkl = &kw[k * m + l];
                    for a in 0..n {
                        for c in 0..n {
                            for e in 0..n {
                                for g in 0..n {
                                    let mut v = Complex64::new(0.0, 0.0);
                                    if i == l {
                                        let s = &sb[k][j];
                                        for b in 0..n {
                                            for d in 0..n {
                                                let x = kzij.coeff(a, c, b, d);
                                                if x == Complex64::new(0.0, 0.0) {
                                                    continue;
                                                }
                                                for h in 0..n {
                                                    v += x * kwkl.coeff(e, g, d, h) * s[(h, b)];
                                                }
                                            }
                                        }
                                    }
                                    if k == j {
                                        let s = &sb[i][l];
                                        for b in 0..n {
                                            for d in 0..n {
                                                let x = kzij.coeff(a, c, b, d);
                                                if x == Complex64::new(0.0, 0.0) {
                                                    continue;
                                                }
                                                for f in 0..n {
                                                    v -= x * kwkl.coeff(e, g, f, b) * s[(d, f)];
                                                }
                                            }
                                        }
                                    }
                                    // {p_i, q_m} = delta_im
                                    if i == j && a == c && k != l && (i == k || i == l) {
                                        let sign = if i == k { 1.0 } else { -1.0 };
                                        v += gw[k * m + l][(e, g)] * sign;
                                    }
                                    if k == l && e == g && i != j && (k == i || k == j) {
                                        let sign = if k == i { 1.0 } else { -1.0 };
                                        v -= gz[i * m + j][(a, c)] * sign;
                                    }
                                    out[(idx(m, n, i, k, a, e), idx(m, n, j, l, c, g))] = v;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Max entrywise residual of
/// `{L_1'1(z), L_2'2(w)} = [L_1'1(z), r] - [L_2'2(w), r_2'1'21(w, z)] - sum_k tr(S^kk) d_k r`
/// relative to the largest bracket entry.
pub fn exchange_residual(st: &PhaseState, z: Complex64, w: Complex64) -> Result<f64> {
    st.spin().check_equal_traces(CONSTRAINT_TOL)?;
    let (m, n) = (st.m(), st.n());
    let dims = [m, m, n, n];
    let lhs = lax_lax_bracket(st, z, w)?;
    let r = classical_r_big(st, z, w)?;
    let r21 = swap_primed_pairs(&classical_r_big(st, w, z)?, m, n);
    let lz = embed_pair(&lax_l(st, z)?, &dims, 0, 2);
    let lw = embed_pair(&lax_l(st, w)?, &dims, 1, 3);
    let mut rhs = lz.commutator(&r) - lw.commutator(&r21);
    for k in 0..m {
        let tr = st.spin().block(k, k).trace();
        rhs -= &classical_r_big_dq(st, z, w, k)?.scale(tr);
    }
    let s = lhs.max_abs();
    let d = (&lhs - &rhs).max_abs();
    Ok(if s == 0.0 { d } else { d / s })
}
