use std::sync::Arc;

use num_complex::Complex64;

use super::*;
use crate::specfun::{Flavor, SectorIndex};
use crate::tensor::{permutation_p, sin_basis_t, sin_basis_t_inv};

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

const NU: Complex64 = Complex64::new(0.7, 0.1);

fn families() -> Vec<Arc<RMatrixFamily>> {
    vec![
        Arc::new(RMatrixFamily::yang(1).unwrap()),
        Arc::new(RMatrixFamily::yang(2).unwrap()),
        Arc::new(RMatrixFamily::eleven_vertex()),
        Arc::new(RMatrixFamily::six_vertex_xxz()),
        Arc::new(RMatrixFamily::seven_vertex(cx(0.7, 0.2))),
        Arc::new(RMatrixFamily::baxter_belavin(1, cx(0.0, 1.0)).unwrap()),
        Arc::new(RMatrixFamily::baxter_belavin(2, cx(0.0, 1.0)).unwrap()),
        Arc::new(RMatrixFamily::baxter_belavin(3, cx(0.0, 1.0)).unwrap()),
    ]
}

fn spectral(fam: &RMatrixFamily, k: usize) -> Complex64 {
    let pts = [cx(0.31, 0.17), cx(0.43, -0.12), cx(0.22, 0.41)];
    let z = pts[k % pts.len()];
    assert!(fam.pole_free(z));
    z
}

fn rel(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    (a - b).max_abs() / b.max_abs().max(1e-300)
}

#[test]
fn single_site_lax_is_the_top() {
    for fam in families() {
        let st = random_state(fam.clone(), 1, NU, 3, false).unwrap();
        let z = spectral(&fam, 0);
        let l = lax_l(&st, z).unwrap();
        let n = fam.n();
        let expect = fam.r(z).unwrap().contract_2(st.spin().big()) + ComplexMatrix::identity(n).scale(st.p()[0]);
        assert!(rel(&l, &expect) < 1e-14);
    }
}

#[test]
fn scalar_reduction_is_spin_calogero() {
    let flavors = [
        (Arc::new(RMatrixFamily::yang(1).unwrap()), Flavor::rational()),
        (Arc::new(RMatrixFamily::baxter_belavin(1, cx(0.1, 0.9)).unwrap()), Flavor::elliptic(cx(0.1, 0.9)).unwrap()),
    ];
    for (fam, fl) in flavors {
        let st = random_state(fam.clone(), 3, NU, 8, false).unwrap();
        let z = cx(0.27, 0.13);
        let l = lax_l(&st, z).unwrap();
        let s = st.spin().big();
        let q = st.q();
        let expect = ComplexMatrix::from_fn(3, |i, j| {
            if i == j {
                st.p()[i] + s[(i, i)] * fl.e1(z).unwrap()
            } else {
                s[(i, j)] * fl.phi(z, q[i] - q[j]).unwrap()
            }
        });
        assert!(rel(&l, &expect) < 1e-12);
    }
}

#[test]
fn yang_scalar_offdiagonal_entry() {
    let fam = Arc::new(RMatrixFamily::yang(1).unwrap());
    let st = random_state(fam, 2, NU, 2, false).unwrap();
    let z = cx(0.5, 0.2);
    let l = lax_l(&st, z).unwrap();
    let q = st.q()[0] - st.q()[1];
    let expect = st.spin().big()[(0, 1)] * (z.inv() + q.inv());
    assert!((l[(0, 1)] - expect).norm() < 1e-13 * expect.norm());
}

/// Coefficient of `T_a` in `s`, using `tr(T_a T_a^{-1}) = N`.
fn coeff(s: &ComplexMatrix, a: SectorIndex) -> Complex64 {
    (s * &sin_basis_t_inv(a)).trace() / a.n as f64
}

#[test]
fn elliptic_lax_matches_explicit_sector_form() {
    let tau = cx(0.0, 1.0);
    let fl = Flavor::elliptic(tau).unwrap();
    for n in [2usize, 3] {
        let fam = Arc::new(RMatrixFamily::baxter_belavin(n, tau).unwrap());
        let st = random_state(fam.clone(), 2, NU, 4, false).unwrap();
        let z = cx(0.31, 0.17);
        let l = lax_l(&st, z).unwrap();
        let mm = lax_m(&st, z).unwrap();
        let nf = n as f64;
        let e1 = fl.e1(z).unwrap();
        let mut expect_l = ComplexMatrix::zeros(2 * n);
        let mut expect_m = ComplexMatrix::zeros(2 * n);
        for i in 0..2 {
            for j in 0..2 {
                let s = st.spin().block(i, j);
                let mut bl = ComplexMatrix::zeros(n);
                let mut bm = ComplexMatrix::zeros(n);
                for a in SectorIndex::all(n) {
                    let c = coeff(&s, a);
                    let t = sin_basis_t(a);
                    if i == j {
                        if a.is_zero() {
                            bl += &t.scale(c * e1 + st.p()[i]);
                            let w = (e1 * e1 - fl.wp(z).unwrap()) / (2.0 * nf);
                            bm += &t.scale(c * w);
                        } else {
                            let u = a.omega(tau);
                            bl += &t.scale(c * fl.sector_phi(a, z, ZERO).unwrap());
                            bm += &t.scale(c * fl.f(z, u).unwrap() * fl.sector_phi(a, z, ZERO).unwrap() / fl.phi(z, u).unwrap() / nf);
                        }
                    } else {
                        let u = st.q()[i] - st.q()[j];
                        bl += &t.scale(c * fl.sector_phi(a, z, u / nf).unwrap());
                        bm += &t.scale(c * fl.sector_f(a, z, u / nf).unwrap() / nf);
                    }
                }
                expect_l.set_block(n, i, j, &bl);
                expect_m.set_block(n, i, j, &bm);
            }
        }
        assert!(rel(&l, &expect_l) < 1e-12, "L n={n}");
        assert!(rel(&mm, &expect_m) < 1e-12, "M n={n}");
    }
}

#[test]
fn scalar_hamiltonian_example() {
    let fam = Arc::new(RMatrixFamily::yang(1).unwrap());
    let one = cx(1.0, 0.0);
    let spin = SpinConfig::from_big(2, 1, ComplexMatrix::from_fn(2, |_, _| one)).unwrap();
    let st = PhaseState::new(fam, vec![ZERO, cx(2.0, 0.0)], vec![ZERO, ZERO], spin).unwrap();
    let h = hamiltonian(&st).unwrap();
    assert!((h - cx(-0.25, 0.0)).norm() < 1e-15);
}

#[test]
fn single_site_hamiltonian_is_kinetic_plus_top() {
    for fam in families() {
        let st = random_state(fam.clone(), 1, NU, 5, false).unwrap();
        let s = st.spin().big();
        let expect = st.p()[0] * st.p()[0] * 0.5 + fam.m(ZERO).unwrap().bilinear(s, s) * 0.5;
        assert!((hamiltonian(&st).unwrap() - expect).norm() < 1e-14);
        assert!((top_h(&fam, s).unwrap() * 2.0 - fam.m(ZERO).unwrap().bilinear(s, s)).norm() < 1e-14);
    }
}

#[test]
fn elliptic_hamiltonian_matches_sector_sum() {
    // H = p^2/2 - 1/2 sum_{a != 0} S^ii_a S~^ii_a E2(w_a)
    //     - 1/2 sum_{i != j} sum_a S^ij_a S~^ji_a E2(w_a + q_ij / N) + c tr(S^ii)^2 / (6 N^2)
    // with S~_a the coefficient along T_a^{-1}.
    let tau = cx(0.0, 1.0);
    let fl = Flavor::elliptic(tau).unwrap();
    for n in [2usize, 3] {
        let fam = Arc::new(RMatrixFamily::baxter_belavin(n, tau).unwrap());
        let st = random_state(fam.clone(), 3, NU, 6, false).unwrap();
        let nf = n as f64;
        let m = 3;
        let dual = |s: &ComplexMatrix, a: SectorIndex| (s * &sin_basis_t(a)).trace() / nf;
        let mut h: Complex64 = st.p().iter().map(|p| p * p * 0.5).sum();
        for i in 0..m {
            let s = st.spin().block(i, i);
            h += fl.e1_cubic() * s.trace() * s.trace() / (6.0 * nf * nf);
            for a in SectorIndex::all(n).filter(|a| !a.is_zero()) {
                h -= 0.5 * coeff(&s, a) * dual(&s, a) * fl.e2(a.omega(tau)).unwrap();
            }
        }
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    let (sij, sji) = (st.spin().block(i, j), st.spin().block(j, i));
                    let u = a_shift(st.q()[i] - st.q()[j], nf);
                    for a in SectorIndex::all(n) {
                        h -= 0.5 * coeff(&sij, a) * dual(&sji, a) * fl.e2(a.omega(tau) + u).unwrap();
                    }
                }
            }
        }
        let got = hamiltonian(&st).unwrap();
        assert!((got - h).norm() < 1e-12 * h.norm().max(1.0), "n={n}: {got} vs {h}");
    }
}

fn a_shift(q: Complex64, nf: f64) -> Complex64 {
    q / nf
}

#[test]
fn yang_interaction_is_trace_form_under_rank1() {
    let fam = Arc::new(RMatrixFamily::yang(2).unwrap());
    let st = random_state(fam.clone(), 2, NU, 12, true).unwrap();
    let q = st.q()[0] - st.q()[1];
    let b = |i, j| st.spin().block(i, j);
    let u = potential_u(&fam, &b(0, 1), &b(1, 0), q).unwrap();
    let expect = -(&b(0, 0) * &b(1, 1)).trace() / (q * q);
    assert!((u - expect).norm() < 1e-13 * expect.norm());
    let kinetic: Complex64 = st.p().iter().map(|p| p * p * 0.5).sum();
    assert!((hamiltonian(&st).unwrap() - kinetic - u).norm() < 1e-13);
}

#[test]
fn rank1_potentials_agree() {
    for fam in families() {
        for seed in 0..3 {
            let st = random_state(fam.clone(), 2, NU, seed, true).unwrap();
            let b = |i, j| st.spin().block(i, j);
            let q = st.q()[0] - st.q()[1];
            let u = potential_u(&fam, &b(0, 1), &b(1, 0), q).unwrap();
            let v = potential_v(&fam, &b(0, 0), &b(1, 1), q).unwrap();
            assert!((u - v).norm() < 1e-12 * u.norm().max(1.0), "{}", fam.short_name());
        }
    }
}

#[test]
fn seven_vertex_potential_v_explicit() {
    let c = cx(0.7, 0.2);
    let fam = RMatrixFamily::seven_vertex(c);
    let st = random_state(Arc::new(fam.clone()), 2, NU, 1, false).unwrap();
    let (a, b) = (st.spin().block(0, 0), st.spin().block(1, 1));
    let q = cx(0.4, 0.3);
    let (sh, ch) = (q.sinh(), q.cosh());
    let expect = -(a[(0, 0)] * b[(0, 0)] + a[(1, 1)] * b[(1, 1)]) / (sh * sh)
        - ch / (sh * sh) * (a[(0, 1)] * b[(1, 0)] + a[(1, 0)] * b[(0, 1)])
        + c * ch * a[(0, 1)] * b[(0, 1)];
    let v = potential_v(&fam, &a, &b, q).unwrap();
    assert!((v - expect).norm() < 1e-13 * expect.norm());
}

#[test]
fn eleven_vertex_top_hamiltonian() {
    let fam = RMatrixFamily::eleven_vertex();
    let s = ComplexMatrix::from_fn(2, |i, j| cx(0.3 + i as f64, 0.2 * j as f64 - 0.1));
    let expect = s[(0, 1)] * (s[(1, 1)] - s[(0, 0)]);
    assert!((top_h(&fam, &s).unwrap() - expect).norm() < 1e-15);
}

#[test]
fn single_site_flow_is_euler_top() {
    for fam in families() {
        let st = random_state(fam.clone(), 1, NU, 9, false).unwrap();
        let v = eom_rhs(&st).unwrap();
        let s = st.spin().big();
        let expect = s.commutator(&inertia_j(&fam, s).unwrap());
        assert!((&v.ds - &expect).max_abs() < 1e-14);
        assert_eq!(v.dp[0], ZERO);
    }
}

#[test]
fn scalar_flow_matches_spin_calogero() {
    let fam = Arc::new(RMatrixFamily::yang(1).unwrap());
    let fl = Flavor::rational();
    let st = random_state(fam, 3, NU, 10, false).unwrap();
    let v = eom_rhs(&st).unwrap();
    let s = st.spin().big();
    let q = st.q();
    for i in 0..3 {
        assert!(v.ds[(i, i)].norm() < 1e-14);
        for j in (0..3).filter(|&j| j != i) {
            let mut expect = ZERO;
            for k in (0..3).filter(|&k| k != i && k != j) {
                expect += s[(i, k)] * s[(k, j)] * (fl.wp(q[i] - q[k]).unwrap() - fl.wp(q[k] - q[j]).unwrap());
            }
            assert!((v.ds[(i, j)] - expect).norm() < 1e-11 * expect.norm().max(1.0));
        }
    }
}

#[test]
fn explicit_equations_match_bracket_oracle() {
    for fam in families() {
        for m in [2usize, 3] {
            for rank1 in [false, true] {
                let st = random_state(fam.clone(), m, NU, 20 + m as u64, rank1).unwrap();
                let a = eom_rhs(&st).unwrap();
                let b = bracket_flow(&st).unwrap();
                let d = a.rel_diff(&b);
                assert!(d < 1e-10, "{} m={m} rank1={rank1}: {d:e}", fam.short_name());
            }
        }
    }
}

#[test]
fn rank1_commutator_form_agrees() {
    for fam in families() {
        for m in [2usize, 3] {
            let st = random_state(fam.clone(), m, NU, 40, true).unwrap();
            let a = eom_rhs_with(&st, DiagonalForm::General).unwrap();
            let b = eom_rhs_with(&st, DiagonalForm::Commutator).unwrap();
            assert!(a.rel_diff(&b) < 1e-11, "{} m={m}: {:e}", fam.short_name(), a.rel_diff(&b));
        }
    }
    let general = random_state(families()[1].clone(), 2, NU, 1, false).unwrap();
    assert!(eom_rhs_with(&general, DiagonalForm::Commutator).is_err());
}

#[test]
fn bracket_elementary_values() {
    for fam in families() {
        let st = random_state(fam.clone(), 3, NU, 31, false).unwrap();
        let n = fam.n();
        for i in 0..3 {
            assert_eq!(bracket(&st, Observable::Q(i)).unwrap(), st.p()[i]);
            let v = bracket_flow(&st).unwrap();
            let dtr = v.ds.block(n, i, i).trace();
            assert!(dtr.norm() < 1e-11, "{} {dtr}", fam.short_name());
        }
    }
}

#[test]
fn casimirs_are_stationary() {
    for fam in families() {
        let st = random_state(fam.clone(), 3, NU, 32, false).unwrap();
        let v = eom_rhs(&st).unwrap();
        let s = st.spin().big();
        let mut pow = ComplexMatrix::identity(s.dim());
        for k in 1..=3 {
            // d/dt tr S^k = k tr(S^{k-1} dS)
            let d = (&pow * &v.ds).trace() * k as f64;
            let scale = s.pow(k as u32).max_abs().max(1.0) * v.ds.max_abs();
            assert!(d.norm() < 1e-10 * scale.max(1.0), "{} k={k}: {d}", fam.short_name());
            pow = &pow * s;
        }
    }
}

#[test]
fn lax_equation_holds() {
    for fam in families() {
        for m in [2usize, 3] {
            for seed in 0..2 {
                let st = random_state(fam.clone(), m, NU, 50 + seed, seed == 1).unwrap();
                for k in 0..3 {
                    let z = spectral(&fam, k);
                    let r = lax_residual(&st, z).unwrap();
                    assert!(r < 1e-9, "{} m={m}: {r:e}", fam.short_name());
                    let direct = bracket(&st, Observable::Lax { z, row: 0, col: 1 }).unwrap();
                    let pair = lax_pair(&st, z).unwrap();
                    let lm = pair.l.commutator(&pair.m);
                    assert!((direct - lm[(0, 1)]).norm() < 1e-9 * lm.max_abs());
                }
            }
        }
    }
}

#[test]
fn off_constraint_flows_are_refused() {
    let fam = families()[1].clone();
    let st = random_state(fam.clone(), 2, NU, 3, false).unwrap();
    let mut big = st.spin().big().clone();
    big[(2, 2)] += cx(1e-3, 0.0);
    let bad = PhaseState::new(fam, st.q().to_vec(), st.p().to_vec(), st.spin().with_big(big)).unwrap();
    assert!(matches!(eom_rhs(&bad), Err(Error::ConstraintViolation { .. })));
    assert!(matches!(bracket_flow(&bad), Err(Error::ConstraintViolation { .. })));
}

#[test]
fn colliding_positions_are_rejected() {
    let fam = families()[1].clone();
    let spin = spin_general(2, 2, NU, 1).unwrap();
    let q = vec![cx(0.3, 0.1), cx(0.3, 0.1)];
    assert!(matches!(
        PhaseState::new(fam, q, vec![ZERO, ZERO], spin),
        Err(Error::PoleProximity { .. })
    ));
}

#[test]
fn r_big_single_site_is_top_r() {
    for fam in families() {
        let st = random_state(fam.clone(), 1, NU, 2, false).unwrap();
        let (z, w) = (cx(0.41, 0.2), cx(-0.1, 0.05));
        let big = classical_r_big(&st, z, w).unwrap();
        assert!(rel(&big, fam.r(z - w).unwrap().mat()) < 1e-15);
    }
}

#[test]
fn r_big_scalar_is_spin_calogero_r() {
    let fl = Flavor::rational();
    let fam = Arc::new(RMatrixFamily::yang(1).unwrap());
    let st = random_state(fam, 3, NU, 2, false).unwrap();
    let (z, w) = (cx(0.41, 0.2), cx(-0.1, 0.05));
    let big = classical_r_big(&st, z, w).unwrap();
    let q = st.q();
    for i in 0..3 {
        for k in 0..3 {
            for j in 0..3 {
                for l in 0..3 {
                    let expect = if i == j && k == l && i == k {
                        fl.e1(z - w).unwrap()
                    } else if i != j && k == j && l == i {
                        fl.phi(z - w, q[i] - q[j]).unwrap()
                    } else {
                        ZERO
                    };
                    assert!((big[(i * 3 + k, j * 3 + l)] - expect).norm() < 1e-13);
                }
            }
        }
    }
}

#[test]
fn r_big_yang_hand_assembled() {
    let fam = Arc::new(RMatrixFamily::yang(2).unwrap());
    let st = random_state(fam, 2, NU, 2, false).unwrap();
    let (z, w) = (cx(0.41, 0.2), cx(-0.1, 0.05));
    let x = z - w;
    let q = st.q()[0] - st.q()[1];
    let p = permutation_p(2).into_mat();
    let id = ComplexMatrix::identity(4);
    let e = |i, j| ComplexMatrix::unit(2, i, j);
    let kron = crate::tensor::kron;
    // R^x(q) P = P / x + 1 / q for Yang.
    let off = |q: Complex64| &p.scale(x.inv()) + &id.scale(q.inv());
    let expect = kron(&kron(&e(0, 0), &e(0, 0)), &p.scale(x.inv()))
        + kron(&kron(&e(1, 1), &e(1, 1)), &p.scale(x.inv()))
        + kron(&kron(&e(0, 1), &e(1, 0)), &off(q))
        + kron(&kron(&e(1, 0), &e(0, 1)), &off(-q));
    let big = classical_r_big(&st, z, w).unwrap();
    assert!(rel(&big, &expect) < 1e-14);
}

#[test]
fn exchange_relation_holds() {
    for fam in families() {
        for m in [1usize, 2, 3] {
            if fam.n() == 3 && m == 3 {
                continue;
            }
            let st = random_state(fam.clone(), m, NU, 70 + m as u64, false).unwrap();
            let (z, w) = (spectral(&fam, 0), spectral(&fam, 1));
            let r = exchange_residual(&st, z, w).unwrap();
            assert!(r < 1e-9, "{} m={m}: {r:e}", fam.short_name());
        }
    }
}

#[test]
fn cm_scalar_case_is_krichever() {
    for (fam, fl) in [
        (RMatrixFamily::yang(1).unwrap(), Flavor::rational()),
        (RMatrixFamily::baxter_belavin(1, cx(0.0, 1.0)).unwrap(), Flavor::elliptic(cx(0.0, 1.0)).unwrap()),
    ] {
        let mut rng = SampleRng::new(4);
        let q = random_positions(&fam, 3, &mut rng);
        let p: Vec<Complex64> = (0..3).map(|_| rng.centered(0.5)).collect();
        let nu = cx(0.6, -0.2);
        let z = cx(0.3, 0.2);
        let pair = cm_rmx_lax(&q, &p, nu, &fam, z).unwrap();
        let (l, m) = krichever_lax(&q, &p, nu, &fl, z).unwrap();
        assert!(rel(&pair.l, &l) < 1e-13);
        // The dropped `nu 1 (x) F0` term is central when N = 1.
        assert!(rel(&pair.mbar, &m) < 1e-12);
        let res = cm_rmx_residual(&q, &p, nu, &fam, z).unwrap();
        assert!(res < 1e-11, "{res:e}");
    }
}

#[test]
fn cm_matrix_valued_residuals() {
    for fam in families() {
        for m in [2usize, 3] {
            let mut rng = SampleRng::new(7 + m as u64);
            let q = random_positions(&fam, m, &mut rng);
            let p: Vec<Complex64> = (0..m).map(|_| rng.centered(0.5)).collect();
            let res = cm_rmx_residual(&q, &p, cx(0.6, -0.2), &fam, spectral(&fam, 2)).unwrap();
            assert!(res < 1e-9, "{} m={m}: {res:e}", fam.short_name());
        }
    }
}

#[test]
fn cm_size_guard() {
    let fam = RMatrixFamily::yang(3).unwrap();
    let q: Vec<Complex64> = (0..6).map(|k| cx(k as f64 * 0.3, 0.0)).collect();
    let p = vec![ZERO; 6];
    assert!(matches!(
        cm_rmx_lax(&q, &p, cx(1.0, 0.0), &fam, cx(0.2, 0.1)),
        Err(Error::ScaleExceeded { size: 729, limit: 256 })
    ));
}

#[test]
fn cm_f0_is_identity_in_the_outer_factor() {
    let fam = RMatrixFamily::yang(2).unwrap();
    let q = vec![cx(0.0, 0.0), cx(0.5, 0.1), cx(0.9, -0.2)];
    let p = vec![ZERO; 3];
    let pair = cm_rmx_lax(&q, &p, cx(1.0, 0.0), &fam, cx(0.2, 0.1)).unwrap();
    let d = pair.f0.dim();
    let outer = crate::tensor::kron(&ComplexMatrix::identity(3), &pair.f0);
    for a in 0..3 {
        for b in 0..3 {
            let e = crate::tensor::kron(&ComplexMatrix::unit(3, a, b), &ComplexMatrix::identity(d));
            assert!(outer.commutator(&e).max_abs() < 1e-15);
        }
    }
}

#[test]
fn generating_offset_is_conserved() {
    for fam in families() {
        let st = random_state(fam.clone(), 2, NU, 80, false).unwrap();
        let z = spectral(&fam, 0);
        let v = bracket_flow(&st).unwrap();
        let l = lax_l(&st, z).unwrap();
        let dl = lax_bracket(&st, z).unwrap();
        // d/dt tr L^2 / 2N = tr(L dL) / N and dH/dt = 0.
        let d = (&l * &dl).trace() / st.n() as f64;
        assert!(d.norm() < 1e-9 * l.max_abs() * dl.max_abs().max(1.0), "{}", fam.short_name());
        assert!(generating_offset(&st, z).unwrap().is_finite());
        let _ = v;
    }
}
