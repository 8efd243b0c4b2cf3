//! Interacting tops: phase space, Lax pair, Hamiltonian and flows.
//!
//! Block `(i, j)` of every `NM x NM` object sits at rows `i*N..(i+1)*N`.
//! Off-diagonal blocks use `R^z(q_ij) P`, diagonal blocks `R^{z,(0)} P = r(z)`.

mod cm;
mod exchange;
mod spin;

pub use cm::{cm_rmx_lax, cm_rmx_residual, krichever_lax, CmLaxPair, CM_SIZE_LIMIT};
pub use exchange::{classical_r_big, classical_r_big_dq, exchange_residual, lax_lax_bracket, swap_primed_pairs};
pub use spin::{spin_general, spin_rank1, SpinConfig};

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rmatrix::RMatrixFamily;
use crate::rng::SampleRng;
use crate::specfun::SAMPLE_MARGIN;
use crate::tensor::{ComplexMatrix, TwoSiteOperator};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
/// Relative tolerance on `tr S^{ii} = tr S^{jj}` before flows are refused.
pub const CONSTRAINT_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct PhaseState {
    family: Arc<RMatrixFamily>,
    q: Vec<Complex64>,
    p: Vec<Complex64>,
    spin: SpinConfig,
}

impl PhaseState {
    /// Fails with `PoleProximity` if some `q_i - q_j` sits on a pole.
    pub fn new(
        family: Arc<RMatrixFamily>,
        q: Vec<Complex64>,
        p: Vec<Complex64>,
        spin: SpinConfig,
    ) -> Result<Self> {
        let m = spin.m();
        if q.len() != m || p.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "q has {}, p has {} entries, spin has M = {m}",
                q.len(),
                p.len()
            )));
        }
        if spin.n() != family.n() {
            return Err(Error::DimensionMismatch(format!(
                "spin blocks are {}x{}, family has N = {}",
                spin.n(),
                spin.n(),
                family.n()
            )));
        }
        for i in 0..m {
            for j in i + 1..m {
                family.flavor().guard(q[i] - q[j])?;
            }
        }
        Ok(Self { family, q, p, spin })
    }

    pub fn family(&self) -> &RMatrixFamily {
        &self.family
    }

    pub fn family_arc(&self) -> &Arc<RMatrixFamily> {
        &self.family
    }

    pub fn q(&self) -> &[Complex64] {
        &self.q
    }

    pub fn p(&self) -> &[Complex64] {
        &self.p
    }

    pub fn spin(&self) -> &SpinConfig {
        &self.spin
    }

    pub fn m(&self) -> usize {
        self.spin.m()
    }

    pub fn n(&self) -> usize {
        self.spin.n()
    }

    fn block(&self, i: usize, j: usize) -> ComplexMatrix {
        self.spin.block(i, j)
    }

    /// `self + h * v`, with the pole guard re-checked.
    pub fn step(&self, v: &PhaseVelocity, h: Complex64) -> Result<Self> {
        let q = self.q.iter().zip(&v.dq).map(|(a, b)| a + h * b).collect();
        let p = self.p.iter().zip(&v.dp).map(|(a, b)| a + h * b).collect();
        let big = self.spin.big() + &v.ds.scale(h);
        Self::new(self.family.clone(), q, p, self.spin.with_big(big))
    }
}

/// Time derivative of every phase coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseVelocity {
    pub dq: Vec<Complex64>,
    pub dp: Vec<Complex64>,
    pub ds: ComplexMatrix,
}

impl PhaseVelocity {
    /// Largest entry difference relative to the largest entry of `self`.
    pub fn rel_diff(&self, other: &Self) -> f64 {
        let d = self
            .dq
            .iter()
            .zip(&other.dq)
            .chain(self.dp.iter().zip(&other.dp))
            .map(|(a, b)| (a - b).norm())
            .fold((&self.ds - &other.ds).max_abs(), f64::max);
        let s = self
            .dq
            .iter()
            .chain(&self.dp)
            .map(|a| a.norm())
            .fold(self.ds.max_abs(), f64::max);
        if s == 0.0 {
            d
        } else {
            d / s
        }
    }
}

#[derive(Clone, Debug)]
pub struct LaxPair {
    pub l: ComplexMatrix,
    pub m: ComplexMatrix,
    pub z: Complex64,
}

fn off_kernel(fam: &RMatrixFamily, z: Complex64, q: Complex64) -> Result<TwoSiteOperator> {
    Ok(fam.r_matrix(z, q)?.times_p())
}

fn off_kernel_dq(fam: &RMatrixFamily, z: Complex64, q: Complex64) -> Result<TwoSiteOperator> {
    Ok(fam.f_matrix(z, q)?.times_p())
}

fn assemble(
    st: &PhaseState,
    mut blk: impl FnMut(usize, usize) -> Result<ComplexMatrix>,
) -> Result<ComplexMatrix> {
    let (m, n) = (st.m(), st.n());
    let mut out = ComplexMatrix::zeros(n * m);
    for i in 0..m {
        for j in 0..m {
            out.set_block(n, i, j, &blk(i, j)?);
        }
    }
    Ok(out)
}

/// Lax matrix with `p` and `S` replaced by the given values. `L` is affine in
/// `(p, S)`, so this also evaluates its differential along a velocity.
fn lax_l_with(st: &PhaseState, p: &[Complex64], spin: &ComplexMatrix, z: Complex64) -> Result<ComplexMatrix> {
    let fam = st.family();
    let n = st.n();
    let r = fam.r(z)?;
    assemble(st, |i, j| {
        let s = spin.block(n, i, j);
        if i == j {
            Ok(&r.contract_2(&s) + &ComplexMatrix::identity(n).scale(p[i]))
        } else {
            Ok(off_kernel(fam, z, st.q[i] - st.q[j])?.contract_2(&s))
        }
    })
}

/// `L(z)`.
pub fn lax_l(st: &PhaseState, z: Complex64) -> Result<ComplexMatrix> {
    lax_l_with(st, &st.p, st.spin.big(), z)
}

/// `M(z)`.
pub fn lax_m(st: &PhaseState, z: Complex64) -> Result<ComplexMatrix> {
    let fam = st.family();
    let mz = fam.m(z)?;
    assemble(st, |i, j| {
        let s = st.block(i, j);
        if i == j {
            Ok(mz.contract_2(&s))
        } else {
            Ok(off_kernel_dq(fam, z, st.q[i] - st.q[j])?.contract_2(&s))
        }
    })
}

pub fn lax_pair(st: &PhaseState, z: Complex64) -> Result<LaxPair> {
    Ok(LaxPair {
        l: lax_l(st, z)?,
        m: lax_m(st, z)?,
        z,
    })
}

/// `U(S^ij, S^ji, q) = tr_12(F0_21(q) P_12 S^ij_1 S^ji_2)`.
pub fn potential_u(fam: &RMatrixFamily, sij: &ComplexMatrix, sji: &ComplexMatrix, q: Complex64) -> Result<Complex64> {
    Ok(fam.f0(q)?.p_times().bilinear(sij, sji))
}

/// `V(S^ii, S^jj, q) = tr_12(F0_12(q) S^ii_1 S^jj_2)`.
pub fn potential_v(fam: &RMatrixFamily, sii: &ComplexMatrix, sjj: &ComplexMatrix, q: Complex64) -> Result<Complex64> {
    Ok(fam.f0(q)?.bilinear(sii, sjj))
}

/// `J(S) = tr_2(m_12(0) S_2)`.
pub fn inertia_j(fam: &RMatrixFamily, s: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(fam.m(ZERO)?.contract_2(s))
}

/// `1/2 tr(S J(S))`.
pub fn top_h(fam: &RMatrixFamily, s: &ComplexMatrix) -> Result<Complex64> {
    Ok((s * &inertia_j(fam, s)?).trace() * 0.5)
}

pub fn hamiltonian(st: &PhaseState) -> Result<Complex64> {
    let fam = st.family();
    let m = st.m();
    let mut h: Complex64 = st.p.iter().map(|p| p * p).sum::<Complex64>() * 0.5;
    for i in 0..m {
        h += top_h(fam, &st.block(i, i))?;
    }
    for i in 0..m {
        for j in i + 1..m {
            h += potential_u(fam, &st.block(i, j), &st.block(j, i), st.q[i] - st.q[j])?;
        }
    }
    Ok(h)
}

/// Analytic gradients: `(dH/dS_{XY}` as an `NM x NM` matrix, `dH/dq_i)`.
pub fn hamiltonian_gradients(st: &PhaseState) -> Result<(ComplexMatrix, Vec<Complex64>)> {
    let fam = st.family();
    let (m, n) = (st.m(), st.n());
    let mut gs = ComplexMatrix::zeros(n * m);
    let mut gq = vec![ZERO; m];
    let m0 = fam.m(ZERO)?;
    for i in 0..m {
        let s = st.block(i, i);
        let (a, b) = m0.bilinear_grad(&s, &s);
        let g = (a + b).scale(Complex64::new(0.5, 0.0));
        gs.set_block(n, i, i, &g);
    }
    for i in 0..m {
        for j in i + 1..m {
            let q = st.q[i] - st.q[j];
            let (sij, sji) = (st.block(i, j), st.block(j, i));
            let (a, b) = fam.f0(q)?.p_times().bilinear_grad(&sij, &sji);
            gs.set_block(n, i, j, &(gs.block(n, i, j) + a));
            gs.set_block(n, j, i, &(gs.block(n, j, i) + b));
            let v = fam.f0_dz(q)?.p_times().bilinear(&sij, &sji);
            gq[i] += v;
            gq[j] -= v;
        }
    }
    Ok((gs, gq))
}

/// `{H, .}` on every coordinate from the linear spin bracket
/// `{S_XY, S_ZW} = S_ZY d_XW - S_XW d_ZY` and `{p_i, q_j} = d_ij`:
/// `dS = [S, (dH/dS)^T]`, `dq = p`, `dp = -dH/dq`.
pub fn bracket_flow(st: &PhaseState) -> Result<PhaseVelocity> {
    st.spin.check_equal_traces(CONSTRAINT_TOL)?;
    let (gs, gq) = hamiltonian_gradients(st)?;
    let gt = gs.transpose();
    let s = st.spin.big();
    Ok(PhaseVelocity {
        dq: st.p.clone(),
        dp: gq.iter().map(|g| -g).collect(),
        ds: s.commutator(&gt),
    })
}

/// Phase-space coordinate or Lax entry for [`bracket`].
#[derive(Clone, Copy, Debug)]
pub enum Observable {
    Q(usize),
    P(usize),
    /// Entry `(row, col)` of the big spin matrix.
    Spin(usize, usize),
    /// Entry `(row, col)` of `L(z)`.
    Lax { z: Complex64, row: usize, col: usize },
}

/// `{H, observable}`.
pub fn bracket(st: &PhaseState, obs: Observable) -> Result<Complex64> {
    let v = bracket_flow(st)?;
    Ok(match obs {
        Observable::Q(i) => v.dq[i],
        Observable::P(i) => v.dp[i],
        Observable::Spin(r, c) => v.ds[(r, c)],
        Observable::Lax { z, row, col } => lax_bracket_from(st, &v, z)?[(row, col)],
    })
}

fn lax_bracket_from(st: &PhaseState, v: &PhaseVelocity, z: Complex64) -> Result<ComplexMatrix> {
    let fam = st.family();
    let (m, n) = (st.m(), st.n());
    let mut out = lax_l_with(st, &v.dp, &v.ds, z)?;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                let k = off_kernel_dq(fam, z, st.q[i] - st.q[j])?.contract_2(&st.block(i, j));
                let b = out.block(n, i, j) + k.scale(v.dq[i] - v.dq[j]);
                out.set_block(n, i, j, &b);
            }
        }
    }
    Ok(out)
}

/// `{H, L(z)}` by the chain rule through the bracket oracle.
pub fn lax_bracket(st: &PhaseState, z: Complex64) -> Result<ComplexMatrix> {
    let v = bracket_flow(st)?;
    lax_bracket_from(st, &v, z)
}

/// `max |{H, L(z)} - [L(z), M(z)]| / max |[L, M]|`.
pub fn lax_residual(st: &PhaseState, z: Complex64) -> Result<f64> {
    let lhs = lax_bracket(st, z)?;
    let pair = lax_pair(st, z)?;
    let rhs = pair.l.commutator(&pair.m);
    let s = rhs.max_abs();
    let d = (&lhs - &rhs).max_abs();
    Ok(if s == 0.0 { d } else { d / s })
}

/// How diagonal spin blocks are updated by [`eom_rhs_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiagonalForm {
    General,
    /// `[S^ii, J(S^ii)] + sum_k [S^ii, tr_2(F0_12(q_ik) S^kk_2)]`, valid for
    /// rank-1 spins only.
    Commutator,
}

/// Equations of motion in the explicit block form.
pub fn eom_rhs(st: &PhaseState) -> Result<PhaseVelocity> {
    eom_rhs_with(st, DiagonalForm::General)
}

pub fn eom_rhs_with(st: &PhaseState, form: DiagonalForm) -> Result<PhaseVelocity> {
    st.spin.check_equal_traces(CONSTRAINT_TOL)?;
    if form == DiagonalForm::Commutator && !st.spin.is_rank1() {
        return Err(Error::invalid("form", "the commutator form needs a rank-1 spin"));
    }
    let fam = st.family();
    let (m, n) = (st.m(), st.n());
    let q = &st.q;
    let s: Vec<Vec<ComplexMatrix>> = st.spin.blocks();
    let m0 = fam.m(ZERO)?;
    let j_of = |x: &ComplexMatrix| m0.contract_2(x);
    // F0(q) P and P F0(q) for every ordered pair.
    let mut f0p = vec![vec![None; m]; m];
    let mut pf0 = vec![vec![None; m]; m];
    for i in 0..m {
        for k in 0..m {
            if i != k {
                let f = fam.f0(q[i] - q[k])?;
                f0p[i][k] = Some(f.times_p());
                pf0[i][k] = Some(f.p_times());
            }
        }
    }
    let a = |x: &ComplexMatrix, i: usize, k: usize| f0p[i][k].as_ref().expect("i != k").contract_2(x);

    let mut ds = ComplexMatrix::zeros(n * m);
    for i in 0..m {
        for j in 0..m {
            let b = if i != j {
                let mut b = &s[i][i] * &a(&s[i][j], i, j) - &j_of(&s[i][i]) * &s[i][j];
                b -= &(&a(&s[i][j], i, j) * &s[j][j]);
                b += &(&s[i][j] * &j_of(&s[j][j]));
                for k in (0..m).filter(|&k| k != i && k != j) {
                    b += &(&s[i][k] * &a(&s[k][j], k, j));
                    b -= &(&a(&s[i][k], i, k) * &s[k][j]);
                }
                b
            } else {
                let mut b = s[i][i].commutator(&j_of(&s[i][i]));
                for k in (0..m).filter(|&k| k != i) {
                    match form {
                        DiagonalForm::General => {
                            let pf = pf0[i][k].as_ref().expect("i != k");
                            b += &(&s[i][k] * &pf.contract_2(&s[k][i]));
                            b -= &(&a(&s[i][k], i, k) * &s[k][i]);
                        }
                        DiagonalForm::Commutator => {
                            let t = fam.f0(q[i] - q[k])?.contract_2(&s[k][k]);
                            b += &s[i][i].commutator(&t);
                        }
                    }
                }
                b
            };
            ds.set_block(n, i, j, &b);
        }
    }
    let mut dp = vec![ZERO; m];
    for i in 0..m {
        for k in (0..m).filter(|&k| k != i) {
            dp[i] -= fam.f0_dz(q[i] - q[k])?.p_times().bilinear(&s[i][k], &s[k][i]);
        }
    }
    Ok(PhaseVelocity {
        dq: st.p.clone(),
        dp,
        ds,
    })
}

/// Seed offset separating the position/momentum stream from the spin stream.
const PHASE_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

/// `m` positions whose pairwise differences clear the sampling margin.
pub fn random_positions(fam: &RMatrixFamily, m: usize, rng: &mut SampleRng) -> Vec<Complex64> {
    let fl = fam.flavor();
    loop {
        let q: Vec<Complex64> = (0..m).map(|_| fl.sample_point(rng)).collect();
        let ok = (0..m).all(|i| (i + 1..m).all(|j| fl.guard_eps(q[i] - q[j], SAMPLE_MARGIN).is_ok()));
        if ok {
            return q;
        }
    }
}

/// Random constrained state: spin from `seed`, positions and momenta from a
/// second stream derived from it.
pub fn random_state(
    fam: Arc<RMatrixFamily>,
    m: usize,
    nu: Complex64,
    seed: u64,
    rank1: bool,
) -> Result<PhaseState> {
    let n = fam.n();
    let spin = if rank1 {
        spin_rank1(m, n, nu, seed)?
    } else {
        spin_general(m, n, nu, seed)?
    };
    let mut rng = SampleRng::new(seed ^ PHASE_STREAM);
    let q = random_positions(&fam, m, &mut rng);
    let p = (0..m).map(|_| rng.centered(0.5)).collect();
    PhaseState::new(fam, q, p, spin)
}

/// `tr(L(z)^2) / (2N) - H`. Constant along the flow; reported, not removed.
pub fn generating_offset(st: &PhaseState, z: Complex64) -> Result<Complex64> {
    let l = lax_l(st, z)?;
    Ok((&l * &l).trace() / (2.0 * st.n() as f64) - hamiltonian(st)?)
}

#[cfg(test)]
mod tests;
