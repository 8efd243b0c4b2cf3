//! Randomized certification of the R-matrix properties and the identities
//! derived from them.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use super::RMatrixFamily;
use crate::rng::SampleRng;
use crate::specfun::SAMPLE_MARGIN;
use crate::tensor::{embed3, permutation_p, ComplexMatrix, TwoSiteOperator};

/// Tolerance on the expansion order defect `max(0, 2 - log2 ratio)`; it
/// corresponds to a halving ratio of 3.5.
pub const ORDER_DEFECT_TOL: f64 = 0.192_645_077_942_396_4;

const EXPANSION_HBAR: f64 = 1e-2;
/// Remainders below this fraction of `||R||` are roundoff: the expansion is
/// exact at that order.
const EXPANSION_FLOOR: f64 = 1e-12;
const R1_STEP: f64 = 2e-2;

#[derive(Clone, Debug, Serialize)]
pub struct PropertyResult {
    pub max_residual: f64,
    pub samples: usize,
    pub tol: f64,
    pub pass: bool,
}

/// Measured tilde-function normalizations. Recorded, never asserted.
#[derive(Clone, Debug, Default, Serialize)]
pub struct MeasuredNormalization {
    /// `(hbar, z, tr_1 R^hbar(z) / 1)` at the first sample.
    pub phi_tilde_sample: Option<[[f64; 2]; 3]>,
    /// Largest relative deviation of the measured `phi~(z, hbar)` from
    /// `phi(z, hbar / N)`.
    pub phi_tilde_vs_phi_hbar_over_n: f64,
    /// Largest relative deviation of `tr_1 r(z)` from `E1(z)`.
    pub e1_tilde_vs_e1: f64,
    /// Largest relative deviation of `-tr_1 F0(z)` from `E2(z)`.
    pub e2_tilde_vs_e2: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FamilyParams {
    pub c: Option<[f64; 2]>,
    pub tau: Option<[f64; 2]>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificationReport {
    pub family: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub params: FamilyParams,
    pub seed: u64,
    pub properties: BTreeMap<String, PropertyResult>,
    pub measured: MeasuredNormalization,
    pub pass: bool,
}

impl CertificationReport {
    pub fn get(&self, name: &str) -> Option<&PropertyResult> {
        self.properties.get(name)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.properties
            .iter()
            .filter(|(_, p)| !p.pass)
            .map(|(k, _)| k.as_str())
            .collect()
    }
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

/// `||sum_k s_k M_k|| / max_k ||M_k||`.
fn residual(terms: &[(f64, &ComplexMatrix)]) -> f64 {
    let mut acc = ComplexMatrix::zeros(terms[0].1.dim());
    let mut scale: f64 = 0.0;
    for (s, m) in terms {
        acc += &m.scale(Complex64::new(*s, 0.0));
        scale = scale.max(m.frobenius_norm());
    }
    let d = acc.frobenius_norm();
    let v = if scale == 0.0 { d } else { d / scale };
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

fn rel_scalar(a: Complex64, b: Complex64) -> f64 {
    let s = a.norm().max(b.norm());
    if s == 0.0 {
        0.0
    } else {
        (a - b).norm() / s
    }
}

struct Tracker {
    rows: BTreeMap<String, (f64, usize, f64)>,
    tol: f64,
}

impl Tracker {
    fn record_with_tol(&mut self, name: &str, value: f64, tol: f64) {
        let value = if value.is_nan() { f64::INFINITY } else { value };
        let e = self.rows.entry(name.to_string()).or_insert((0.0, 0, tol));
        e.0 = e.0.max(value);
        e.1 += 1;
    }

    fn record(&mut self, name: &str, value: f64) {
        self.record_with_tol(name, value, self.tol);
    }

    /// Failures to evaluate count as infinite residuals.
    fn record_res(&mut self, name: &str, value: crate::Result<f64>) {
        self.record(name, value.unwrap_or(f64::INFINITY));
    }
}

struct Sample {
    h: Complex64,
    e: Complex64,
    x: Complex64,
    y: Complex64,
    z: Complex64,
    w: Complex64,
}

fn draw(fam: &RMatrixFamily, rng: &mut SampleRng) -> Sample {
    let fl = fam.flavor();
    loop {
        let mut p = [Complex64::new(0.0, 0.0); 6];
        for v in p.iter_mut() {
            *v = fl.sample_point(rng);
        }
        let [h, e, x, y, z, w] = p;
        let combos = [h, e, h - e, x, y, x + y, z, w, z + w];
        if combos.iter().all(|c| fl.guard_eps(*c, SAMPLE_MARGIN).is_ok()) {
            return Sample { h, e, x, y, z, w };
        }
    }
}

/// Runs every check at `n_samples` random points. Evaluation failures are
/// reported as infinite residuals, never as errors.
pub fn certify(fam: &RMatrixFamily, n_samples: usize, seed: u64, tol: f64) -> CertificationReport {
    let mut rng = SampleRng::new(seed);
    let mut t = Tracker {
        rows: BTreeMap::new(),
        tol,
    };
    let mut measured = MeasuredNormalization::default();
    let n = fam.n();
    let id = ComplexMatrix::identity(n * n);

    // r^(1) extracted from the odd part of r(z) - P/z; shared by every sample.
    t.record_res("r1_equals_m0p", r1_check(fam));

    for _ in 0..n_samples.max(1) {
        let s = draw(fam, &mut rng);
        t.record_res("aybe", aybe(fam, &s));
        t.record_res("skew_symmetry", (|| {
            let a = fam.r_matrix(s.h, s.z)?;
            let b = fam.r_matrix(-s.h, -s.z)?.p_times().times_p();
            Ok(residual(&[(1.0, a.mat()), (1.0, b.mat())]))
        })());
        match unitarity(fam, &s, &id) {
            Ok((scalar, value)) => {
                t.record("unitarity_scalar", scalar);
                t.record("unitarity_value", value);
            }
            Err(_) => {
                t.record("unitarity_scalar", f64::INFINITY);
                t.record("unitarity_value", f64::INFINITY);
            }
        }
        t.record_res("fourier_symmetry", (|| {
            let a = fam.r_matrix(s.h, s.z)?.times_p();
            let b = fam.r_matrix(s.z, s.h)?;
            Ok(residual(&[(1.0, a.mat()), (-1.0, b.mat())]))
        })());
        let defect = expansion_defect(fam, s.z).unwrap_or(f64::INFINITY);
        t.record_with_tol("classical_expansion_order", defect, ORDER_DEFECT_TOL);
        t.record_res("trace_property", trace_property(fam, &s, &mut measured));
        t.record_res("mixed_identity", mixed(fam, &s));
        t.record_res("mixed_identity_x0", mixed_x0(fam, &s));
        t.record_res("mixed_identity_y0", mixed_y0(fam, &s));
        t.record_res("coinciding_arguments", coinciding(fam, &s));
        t.record_res("product_identity", product(fam, &s));
        t.record_res("product_identity_derivative", product_derivative(fam, &s));
        t.record_res("half_cybe", half_cybe(fam, &s));
        t.record_res("half_cybe_w0", half_cybe_w0(fam, &s));
        t.record_res("classical_skew", (|| {
            let r = fam.r(s.z)?;
            let rm = fam.r(-s.z)?.swapped();
            let m = fam.m(s.z)?;
            let mm = fam.m(-s.z)?.swapped();
            // r^(0) is measured against the leading Laurent coefficient P.
            let r0 = fam.r0();
            let r0p = r0.times_p();
            let r0s = r0.swapped();
            let p = permutation_p(n).into_mat();
            Ok(residual(&[(1.0, r.mat()), (1.0, rm.mat())])
                .max(residual(&[(1.0, m.mat()), (-1.0, mm.mat())]))
                .max(residual(&[(1.0, r0.mat()), (1.0, r0s.mat()), (0.0, &p)]))
                .max(residual(&[(1.0, r0.mat()), (-1.0, r0p.mat()), (0.0, &p)])))
        })());
    }

    let properties: BTreeMap<String, PropertyResult> = t
        .rows
        .into_iter()
        .map(|(k, (v, cnt, tol))| {
            (
                k,
                PropertyResult {
                    max_residual: v,
                    samples: cnt,
                    tol,
                    pass: v <= tol,
                },
            )
        })
        .collect();
    let pass = properties.values().all(|p| p.pass);
    CertificationReport {
        family: fam.short_name().to_string(),
        n,
        params: FamilyParams {
            c: matches!(fam.kind(), super::FamilyKind::SevenVertex).then(|| pair(fam.deformation())),
            tau: fam.tau().map(pair),
        },
        seed,
        properties,
        measured,
        pass,
    }
}

fn aybe(fam: &RMatrixFamily, s: &Sample) -> crate::Result<f64> {
    let (h, e) = (s.h, s.e);
    let (q12, q23) = (s.x, s.y);
    let q13 = q12 + q23;
    let lhs = embed3(&fam.r_matrix(h, q12)?, 0, 1) * embed3(&fam.r_matrix(e, q23)?, 1, 2);
    let t1 = embed3(&fam.r_matrix(e, q13)?, 0, 2) * embed3(&fam.r_matrix(h - e, q12)?, 0, 1);
    let t2 = embed3(&fam.r_matrix(e - h, q23)?, 1, 2) * embed3(&fam.r_matrix(h, q13)?, 0, 2);
    Ok(residual(&[(1.0, &lhs), (-1.0, &t1), (-1.0, &t2)]))
}

/// `(off-identity part, |f - (wp(hbar) - wp(z))|)`, both relative.
fn unitarity(fam: &RMatrixFamily, s: &Sample, id: &ComplexMatrix) -> crate::Result<(f64, f64)> {
    let a = fam.r_matrix(s.h, s.z)?;
    let b = fam.r_matrix(s.h, -s.z)?.swapped();
    let prod = a.mat() * b.mat();
    let f = prod.trace() / id.dim() as f64;
    let scalar = residual(&[(1.0, &prod), (-1.0, &id.scale(f))]);
    let fl = fam.flavor();
    let (wh, wz) = (fl.wp(s.h)?, fl.wp(s.z)?);
    let expect = wh - wz;
    let scale = f.norm().max(wh.norm()).max(wz.norm());
    Ok((scalar, (f - expect).norm() / scale))
}

fn expansion_defect(fam: &RMatrixFamily, z: Complex64) -> crate::Result<f64> {
    let id = ComplexMatrix::identity(fam.n() * fam.n());
    let r = fam.r(z)?;
    let m = fam.m(z)?;
    let rem = |h: f64| -> crate::Result<(f64, f64)> {
        let hc = Complex64::new(h, 0.0);
        let big = fam.r_matrix(hc, z)?;
        let d = big.mat() - &id.scale(hc.inv()) - r.mat() - &m.mat().scale(hc);
        Ok((d.frobenius_norm(), big.mat().frobenius_norm()))
    };
    let (r1, norm1) = rem(EXPANSION_HBAR)?;
    let (r2, _) = rem(EXPANSION_HBAR / 2.0)?;
    if r1 <= EXPANSION_FLOOR * norm1 || r2 == 0.0 {
        return Ok(0.0);
    }
    Ok((2.0 - (r1 / r2).log2()).max(0.0))
}

fn trace_property(fam: &RMatrixFamily, s: &Sample, meas: &mut MeasuredNormalization) -> crate::Result<f64> {
    let n = fam.n();
    let nf = n as f64;
    let id = ComplexMatrix::identity(n);
    let rm = fam.r_matrix(s.h, s.z)?;
    let t1 = rm.partial_trace_1();
    let t2 = rm.partial_trace_2();
    let phi_t = t1.trace() / nf;
    let res = residual(&[(1.0, &t1), (-1.0, &id.scale(phi_t))])
        .max(residual(&[(1.0, &t2), (-1.0, &id.scale(phi_t))]));

    let fl = fam.flavor();
    if meas.phi_tilde_sample.is_none() {
        meas.phi_tilde_sample = Some([pair(s.h), pair(s.z), pair(phi_t)]);
    }
    let phi_ref = fl.phi(s.z, s.h / nf)?;
    meas.phi_tilde_vs_phi_hbar_over_n = meas.phi_tilde_vs_phi_hbar_over_n.max(rel_scalar(phi_t, phi_ref));
    let e1_t = fam.r(s.z)?.partial_trace_1().trace() / nf;
    meas.e1_tilde_vs_e1 = meas.e1_tilde_vs_e1.max(rel_scalar(e1_t, fl.e1(s.z)?));
    let e2_t = -fam.f0(s.z)?.partial_trace_1().trace() / nf;
    meas.e2_tilde_vs_e2 = meas.e2_tilde_vs_e2.max(rel_scalar(e2_t, fl.e2(s.z)?));
    Ok(res)
}

fn e3(op: &TwoSiteOperator, a: usize, b: usize) -> ComplexMatrix {
    embed3(op, a, b)
}

fn mixed(fam: &RMatrixFamily, s: &Sample) -> crate::Result<f64> {
    let (z, x, y) = (s.z, s.x, s.y);
    let a = e3(&fam.r_matrix(z, x)?, 0, 1) * e3(&fam.f_matrix(z, y)?, 1, 2);
    let b = e3(&fam.f_matrix(z, x)?, 0, 1) * e3(&fam.r_matrix(z, y)?, 1, 2);
    let r13 = e3(&fam.r_matrix(z, x + y)?, 0, 2);
    let c = e3(&fam.f0(y)?, 1, 2) * &r13;
    let d = &r13 * e3(&fam.f0(x)?, 0, 1);
    Ok(residual(&[(1.0, &a), (-1.0, &b), (-1.0, &c), (1.0, &d)]))
}

fn mixed_x0(fam: &RMatrixFamily, s: &Sample) -> crate::Result<f64> {
    let (z, x) = (s.z, s.x);
    let r13 = e3(&fam.r_matrix(z, x)?, 0, 2);
    let a = e3(&fam.r_matrix(z, x)?, 0, 1) * e3(&fam.rz1(z)?, 1, 2);
    let b = e3(&fam.f_matrix(z, x)?, 0, 1) * e3(&fam.rz0(z)?, 1, 2);
    let c = e3(&fam.r1()?, 1, 2) * &r13;
    let d = &r13 * e3(&fam.f0(x)?, 0, 1);
    let p23 = e3(&permutation_p(fam.n()), 1, 2);
    let e = (&p23 * e3(&fam.f_matrix_dz(z, x)?, 0, 2)).scale(Complex64::new(0.5, 0.0));
    Ok(residual(&[(1.0, &a), (-1.0, &b), (-1.0, &c), (1.0, &d), (1.0, &e)]))
}

fn mixed_y0(fam: &RMatrixFamily, s: &Sample) -> crate::Result<f64> {
    let (z, y) = (s.z, s.y);
    let r13 = e3(&fam.r_matrix(z, y)?, 0, 2);
    let a = e3(&fam.rz0(z)?, 0, 1) * e3(&fam.f_matrix(z, y)?, 1, 2);
    let b = e3(&fam.rz1(z)?, 0, 1) * e3(&fam.r_matrix(z, y)?, 1, 2);
    let c = e3(&fam.f0(y)?, 1, 2) * &r13;
    let d = &r13 * e3(&fam.r1()?, 0, 1);
    let p12 = e3(&permutation_p(fam.n()), 0, 1);
    let e = (e3(&fam.f_matrix_dz(z, y)?, 0, 2) * &p12).scale(Complex64::new(0.5, 0.0));
    Ok(residual(&[(1.0, &a), (-1.0, &b), (-1.0, &c), (1.0, &d), (-1.0, &e)]))
}

fn coinciding(fam: &RMatrixFamily, s: &Sample) -> crate::Result<f64> {
    let (z, x, y) = (s.z, s.x, s.y);
    let lhs = e3(&fam.r_matrix(z, x)?, 0, 1) * e3(&fam.r_matrix(z, y)?, 1, 2);
    let r13 = e3(&fam.r_matrix(z, x + y)?, 0, 2);
    let a = &r13 * e3(&fam.r(x)?, 0, 1);
    let b = e3(&fam.r(y)?, 1, 2) * &r13;
    let c = e3(&fam.r_matrix_dhbar(z, x + y)?, 0, 2);
    Ok(residual(&[(1.0, &lhs), (-1.0, &a), (-1.0, &b), (1.0, &c)]))
}

fn product(fam: &RMatrixFamily, s: &Sample) -> crate::Result<f64> {
    let (z, q) = (s.z, s.x);
    let p13 = e3(&permutation_p(fam.n()), 0, 2);
    let lhs = e3(&fam.r_matrix(z, q)?, 0, 1) * e3(&fam.r_matrix(z, -q)?, 1, 2);
    let r13 = e3(&fam.r(z)?, 0, 2);
    let r32 = e3(&fam.r(q)?, 2, 1);
    let a = (&r13 * &r32) * &p13;
    let b = (&r32 * &r13) * &p13;
    let c = e3(&fam.f0(z)?, 0, 2) * &p13;
    let d = e3(&fam.f0(q)?, 2, 1) * &p13;
    Ok(residual(&[(1.0, &lhs), (-1.0, &a), (1.0, &b), (1.0, &c), (-1.0, &d)]))
}

fn product_derivative(fam: &RMatrixFamily, s: &Sample) -> crate::Result<f64> {
    let (z, q) = (s.z, s.x);
    let p13 = e3(&permutation_p(fam.n()), 0, 2);
    let a = e3(&fam.r_matrix(z, q)?, 0, 1) * e3(&fam.f_matrix(z, -q)?, 1, 2);
    let b = e3(&fam.f_matrix(z, q)?, 0, 1) * e3(&fam.r_matrix(z, -q)?, 1, 2);
    let f32 = e3(&fam.f0(q)?, 2, 1);
    let r13 = e3(&fam.r(z)?, 0, 2);
    let c = (&f32 * &r13) * &p13;
    let d = (&r13 * &f32) * &p13;
    let e = e3(&fam.f0_dz(q)?, 2, 1) * &p13;
    Ok(residual(&[(1.0, &a), (-1.0, &b), (-1.0, &c), (1.0, &d), (1.0, &e)]))
}

fn half_cybe(fam: &RMatrixFamily, s: &Sample) -> crate::Result<f64> {
    let (z, w) = (s.z, s.w);
    let r12 = e3(&fam.r(z)?, 0, 1);
    let r13 = e3(&fam.r(z + w)?, 0, 2);
    let r23 = e3(&fam.r(w)?, 1, 2);
    let a = &r12 * &r13;
    let b = &r23 * &r12;
    let c = &r13 * &r23;
    let m12 = e3(&fam.m(z)?, 0, 1);
    let m23 = e3(&fam.m(w)?, 1, 2);
    let m13 = e3(&fam.m(z + w)?, 0, 2);
    Ok(residual(&[(1.0, &a), (-1.0, &b), (1.0, &c), (-1.0, &m12), (-1.0, &m23), (-1.0, &m13)]))
}

fn half_cybe_w0(fam: &RMatrixFamily, s: &Sample) -> crate::Result<f64> {
    let z = s.z;
    let r12 = e3(&fam.r(z)?, 0, 1);
    let r13 = e3(&fam.r(z)?, 0, 2);
    let r0 = e3(&fam.r0(), 1, 2);
    let p23 = e3(&permutation_p(fam.n()), 1, 2);
    let lhs = &r12 * &r13;
    let a = &r0 * &r12;
    let b = &r13 * &r0;
    let c = e3(&fam.f0(z)?, 0, 2) * &p23;
    let m12 = e3(&fam.m(z)?, 0, 1);
    let m23 = e3(&fam.m(Complex64::new(0.0, 0.0))?, 1, 2);
    let m13 = e3(&fam.m(z)?, 0, 2);
    Ok(residual(&[
        (1.0, &lhs),
        (-1.0, &a),
        (1.0, &b),
        (1.0, &c),
        (-1.0, &m12),
        (-1.0, &m23),
        (-1.0, &m13),
    ]))
}

/// `r^(1)` from `[(r(z) - r(-z))/2 - P/z] / z`, Richardson-extrapolated in
/// `z^2`, against `m(0) P`.
fn r1_check(fam: &RMatrixFamily) -> crate::Result<f64> {
    let p = permutation_p(fam.n()).into_mat();
    let g = |h: f64| -> crate::Result<ComplexMatrix> {
        let hc = Complex64::new(h, 0.0);
        let odd = (fam.r(hc)?.into_mat() - fam.r(-hc)?.into_mat()).scale(Complex64::new(0.5, 0.0));
        Ok((odd - p.scale(hc.inv())).scale(hc.inv()))
    };
    let a = g(R1_STEP)?;
    let b = g(R1_STEP / 2.0)?;
    let c = g(R1_STEP / 4.0)?;
    let third = Complex64::new(1.0 / 3.0, 0.0);
    let ab = (b.scale(Complex64::new(4.0, 0.0)) - &a).scale(third);
    let bc = (c.scale(Complex64::new(4.0, 0.0)) - &b).scale(third);
    let est = (bc.scale(Complex64::new(16.0, 0.0)) - ab).scale(Complex64::new(1.0 / 15.0, 0.0));
    let r1 = fam.r1()?;
    let scale = r1.mat().frobenius_norm().max(p.frobenius_norm());
    Ok((&est - r1.mat()).frobenius_norm() / scale)
}
