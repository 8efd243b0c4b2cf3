use std::sync::Arc;

use intops::model::{bracket_flow, eom_rhs, potential_u, potential_v, random_state};
use intops::rmatrix::RMatrixFamily;
use intops::specfun::{Flavor, SectorIndex, SAMPLE_MARGIN};
use intops::tensor::{kron, permutation_p, sin_basis_t, ComplexMatrix, TwoSiteOperator};
use intops::Complex64;
use proptest::prelude::*;

fn cx() -> impl Strategy<Value = Complex64> {
    (-0.5f64..1.0, -0.4f64..0.6).prop_map(|(a, b)| Complex64::new(a, b))
}

fn matrix(n: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n)
        .prop_map(move |v| ComplexMatrix::from_fn(n, |i, j| Complex64::new(v[i * n + j].0, v[i * n + j].1)))
}

fn flavors() -> Vec<Flavor> {
    vec![
        Flavor::rational(),
        Flavor::trigonometric(),
        Flavor::elliptic(Complex64::new(0.0, 1.0)).unwrap(),
        Flavor::elliptic(Complex64::new(0.3, 0.8)).unwrap(),
    ]
}

fn families() -> Vec<RMatrixFamily> {
    vec![
        RMatrixFamily::yang(2).unwrap(),
        RMatrixFamily::eleven_vertex(),
        RMatrixFamily::six_vertex_xxz(),
        RMatrixFamily::seven_vertex(Complex64::new(0.7, 0.2)),
        RMatrixFamily::baxter_belavin(2, Complex64::new(0.0, 1.0)).unwrap(),
    ]
}

fn clear(fl: &Flavor, pts: &[Complex64]) -> bool {
    pts.iter().all(|&p| fl.guard_eps(p, SAMPLE_MARGIN).is_ok())
}

fn rel(res: Complex64, terms: &[Complex64]) -> f64 {
    res.norm() / terms.iter().map(|t| t.norm()).fold(f64::MIN_POSITIVE, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn kronecker_symmetric_and_unitary(eta in cx(), z in cx()) {
        for fl in flavors() {
            prop_assume!(clear(&fl, &[eta, z, eta + z, eta - z]));
            let (a, b) = (fl.phi(eta, z).unwrap(), fl.phi(z, eta).unwrap());
            prop_assert!(rel(a - b, &[a]) < 1e-12);
            let lhs = a * fl.phi(eta, -z).unwrap();
            let rhs = fl.wp(eta).unwrap() - fl.wp(z).unwrap();
            prop_assert!(rel(lhs - rhs, &[lhs, fl.wp(eta).unwrap(), fl.wp(z).unwrap()]) < 1e-10);
        }
    }

    #[test]
    fn fay_identity(z in cx(), q in cx(), w in cx(), u in cx()) {
        for fl in flavors() {
            prop_assume!(clear(&fl, &[z, q, w, u, z - w, q + u]));
            let t1 = fl.phi(z, q).unwrap() * fl.phi(w, u).unwrap();
            let t2 = fl.phi(z - w, q).unwrap() * fl.phi(w, q + u).unwrap();
            let t3 = fl.phi(w - z, u).unwrap() * fl.phi(z, q + u).unwrap();
            prop_assert!(rel(t1 - t2 - t3, &[t1, t2, t3]) < 1e-10);
        }
    }

    #[test]
    fn f_is_the_derivative_of_phi(z in cx(), u in cx()) {
        for fl in flavors() {
            prop_assume!(clear(&fl, &[z, u, z + u]));
            let h = 1e-3;
            let d = |h: f64| {
                let hh = Complex64::new(h, 0.0);
                (fl.phi(z, u + hh).unwrap() - fl.phi(z, u - hh).unwrap()) / (2.0 * h)
            };
            let fd = (d(h / 2.0) * 4.0 - d(h)) / 3.0;
            let f = fl.f(z, u).unwrap();
            prop_assert!(rel(f - fd, &[f]) < 1e-7);
        }
    }

    #[test]
    fn e2_lattice_sum(q in cx()) {
        let tau = Complex64::new(0.0, 1.0);
        let fl = Flavor::elliptic(tau).unwrap();
        for n in [2usize, 3] {
            let nf = n as f64;
            let pts: Vec<Complex64> = SectorIndex::all(n).map(|a| a.omega(tau) + q).collect();
            prop_assume!(clear(&fl, &pts) && clear(&fl, &[q * nf]));
            let terms: Vec<Complex64> = pts.iter().map(|&p| fl.e2(p).unwrap()).collect();
            let lhs: Complex64 = terms.iter().sum();
            let rhs = fl.e2(q * nf).unwrap() * nf * nf;
            prop_assert!(rel(lhs - rhs, &[rhs]) < 1e-9);
        }
    }

    #[test]
    fn partial_traces_of_kron(a in matrix(3), b in matrix(3)) {
        let op = TwoSiteOperator::from_kron(&a, &b);
        let t1 = op.partial_trace_1();
        let t2 = op.partial_trace_2();
        prop_assert!((&t1 - &b.scale(a.trace())).max_abs() < 1e-13);
        prop_assert!((&t2 - &a.scale(b.trace())).max_abs() < 1e-13);
        let flat = kron(&a, &b);
        prop_assert_eq!(op.mat(), &flat);
    }

    #[test]
    fn right_multiplication_by_p_swaps_column_indices(a in matrix(4)) {
        let op = TwoSiteOperator::new(2, a);
        let ap = op.times_p();
        for i in 0..2 { for j in 0..2 { for k in 0..2 { for l in 0..2 {
            prop_assert_eq!(ap.coeff(i, j, k, l), op.coeff(i, l, k, j));
        }}}}
    }

    #[test]
    fn skew_symmetry_and_unitarity(h in cx(), z in cx()) {
        for fam in families() {
            let fl = fam.flavor();
            prop_assume!(clear(fl, &[h, z, h + z, h - z]));
            let r = fam.r_matrix(h, z).unwrap();
            let r21 = fam.r_matrix(-h, -z).unwrap().swapped();
            let d = (r.mat() + r21.mat()).max_abs() / r.mat().max_abs();
            prop_assert!(d < 1e-10, "{} skew {d:e}", fam.short_name());
            let u = r.mat() * fam.r_matrix(h, -z).unwrap().swapped().mat();
            let s = u[(0, 0)];
            let off = (&u - &ComplexMatrix::identity(4).scale(s)).max_abs() / u.max_abs();
            prop_assert!(off < 1e-10, "{} unitarity {off:e}", fam.short_name());
            let expect = fl.wp(h).unwrap() - fl.wp(z).unwrap();
            prop_assert!(rel(s - expect, &[s, fl.wp(h).unwrap(), fl.wp(z).unwrap()]) < 1e-9);
        }
    }

    #[test]
    fn rank1_potentials_coincide(seed in 0u64..1_000_000) {
        for fam in families() {
            let st = random_state(Arc::new(fam.clone()), 2, Complex64::new(1.0, 0.0), seed, true).unwrap();
            let b = |i, j| st.spin().block(i, j);
            let q = st.q()[0] - st.q()[1];
            let u = potential_u(&fam, &b(0, 1), &b(1, 0), q).unwrap();
            let v = potential_v(&fam, &b(0, 0), &b(1, 1), q).unwrap();
            prop_assert!(rel(u - v, &[u]) < 1e-12, "{}", fam.short_name());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn flows_agree_and_keep_traces(seed in 0u64..1_000_000, rank1 in any::<bool>()) {
        for fam in families() {
            let st = random_state(Arc::new(fam.clone()), 3, Complex64::new(0.8, 0.3), seed, rank1).unwrap();
            let a = eom_rhs(&st).unwrap();
            let b = bracket_flow(&st).unwrap();
            prop_assert!(a.rel_diff(&b) < 1e-10, "{}", fam.short_name());
            let n = fam.n();
            for i in 0..3 {
                prop_assert!(a.ds.block(n, i, i).trace().norm() < 1e-11);
            }
            let s = st.spin().big();
            let s2 = s * s;
            for (k, pow) in [(2.0, s.clone()), (3.0, s2)] {
                let d = (&pow * &a.ds).trace() * k;
                prop_assert!(d.norm() < 1e-10 * (1.0 + pow.max_abs() * a.ds.max_abs()));
            }
        }
    }
}

#[test]
fn permutation_squares_to_identity() {
    for n in 1..5 {
        let p = permutation_p(n);
        assert_eq!(p.mat() * p.mat(), ComplexMatrix::identity(n * n));
    }
}

#[test]
fn sin_basis_trace_pairing() {
    for n in 2..5usize {
        for a in SectorIndex::all(n) {
            for b in SectorIndex::all(n) {
                let t = (&sin_basis_t(a) * &sin_basis_t(b)).trace();
                let dual = (a.a1 + b.a1) % n == 0 && (a.a2 + b.a2) % n == 0;
                // T_a T_{-a} equals 1 up to a root-of-unity phase.
                if dual {
                    assert!((t.norm() - n as f64).abs() < 1e-12);
                } else {
                    assert!(t.norm() < 1e-12);
                }
            }
        }
    }
}
