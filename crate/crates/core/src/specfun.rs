//! Kronecker function, Eisenstein functions and the Weierstrass function in
//! rational, trigonometric and elliptic flavors.
//!
//! The odd theta function is
//! `theta(z) = sum_k exp(pi i tau (k+1/2)^2 + 2 pi i (z+1/2)(k+1/2))`.
//! Pairing `k` with `-k-1` gives the sine series
//! `theta(z) = -2 sum_{k>=0} (-1)^k exp(pi i tau (k+1/2)^2) sin((2k+1) pi z)`,
//! which is what gets summed: it has no cancellation near `z = 0`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::SampleRng;

pub const DEFAULT_TRUNC_TOL: f64 = 1e-16;
pub const THETA_CAP: usize = 200;
pub const MIN_IM_TAU: f64 = 0.05;
pub const POLE_EPS: f64 = 1e-6;
/// Minimum pole distance for randomly drawn arguments.
pub const SAMPLE_MARGIN: f64 = 0.05;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FlavorKind {
    Rational,
    Trigonometric,
    Elliptic,
}

/// A flavor of scalar functions. Elliptic flavors cache `theta'(0)` and
/// `theta'''(0)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Flavor {
    kind: FlavorKind,
    tau: Complex64,
    trunc_tol: f64,
    theta1: Complex64,
    theta3: Complex64,
}

/// `a = (a1, a2)` in `Z_N x Z_N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SectorIndex {
    pub a1: usize,
    pub a2: usize,
    pub n: usize,
}

impl SectorIndex {
    /// Reduces both components mod `n`.
    pub fn new(a1: i64, a2: i64, n: usize) -> Self {
        assert!(n >= 1, "sector index needs N >= 1");
        let m = n as i64;
        Self {
            a1: a1.rem_euclid(m) as usize,
            a2: a2.rem_euclid(m) as usize,
            n,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.a1 == 0 && self.a2 == 0
    }

    /// All `N^2` indices, `a1` major.
    pub fn all(n: usize) -> impl Iterator<Item = SectorIndex> {
        (0..n).flat_map(move |a1| (0..n).map(move |a2| SectorIndex { a1, a2, n }))
    }

    /// `omega_a = (a1 + a2 tau) / N`.
    pub fn omega(&self, tau: Complex64) -> Complex64 {
        (c(self.a1 as f64) + tau * self.a2 as f64) / self.n as f64
    }
}

/// Theta and its first three derivatives at `z`.
pub fn theta_derivs(z: Complex64, tau: Complex64, trunc_tol: f64) -> Result<[Complex64; 4]> {
    if !(tau.im >= MIN_IM_TAU) {
        return Err(Error::BadModulus {
            tau,
            min_im: MIN_IM_TAU,
        });
    }
    let mut acc = [Complex64::new(0.0, 0.0); 4];
    let mut mag = [0.0f64; 4];
    // Terms grow until roughly k ~ |Im z| / Im tau; never stop before that.
    let k_peak = (z.im.abs() / tau.im).ceil() as usize + 1;
    for k in 0..=THETA_CAP {
        let h = k as f64 + 0.5;
        let s = 2.0 * h * PI;
        let sign = if k % 2 == 0 { -2.0 } else { 2.0 };
        let phase = I * PI * tau * (h * h);
        let sz = z * s;
        let (qs, qc) = if sz.im.abs() < 300.0 {
            let q = phase.exp();
            (q * sz.sin(), q * sz.cos())
        } else {
            let ep = (phase + I * sz).exp();
            let em = (phase - I * sz).exp();
            ((ep - em) / (2.0 * I), (ep + em) * 0.5)
        };
        let t = [
            qs * sign,
            qc * (sign * s),
            qs * (-sign * s * s),
            qc * (-sign * s * s * s),
        ];
        let mut done = k >= k_peak;
        for n in 0..4 {
            acc[n] += t[n];
            mag[n] += t[n].norm();
            if t[n].norm() > trunc_tol * mag[n] {
                done = false;
            }
        }
        if done {
            return Ok(acc);
        }
    }
    Err(Error::NonConvergent { z, cap: THETA_CAP })
}

/// Odd theta function at default truncation.
pub fn theta(z: Complex64, tau: Complex64) -> Result<Complex64> {
    Ok(theta_derivs(z, tau, DEFAULT_TRUNC_TOL)?[0])
}

/// `n`-th derivative of theta (`n <= 3`).
pub fn theta_derivative(z: Complex64, tau: Complex64, n: usize) -> Result<Complex64> {
    assert!(n <= 3, "theta derivatives are provided up to order 3");
    Ok(theta_derivs(z, tau, DEFAULT_TRUNC_TOL)?[n])
}

impl Flavor {
    pub fn rational() -> Self {
        Self {
            kind: FlavorKind::Rational,
            tau: Complex64::new(0.0, 0.0),
            trunc_tol: DEFAULT_TRUNC_TOL,
            theta1: c(1.0),
            theta3: c(0.0),
        }
    }

    pub fn trigonometric() -> Self {
        Self {
            kind: FlavorKind::Trigonometric,
            ..Self::rational()
        }
    }

    pub fn elliptic(tau: Complex64) -> Result<Self> {
        Self::elliptic_with_tol(tau, DEFAULT_TRUNC_TOL)
    }

    /// `trunc_tol` must lie in (0, 1e-8].
    pub fn elliptic_with_tol(tau: Complex64, trunc_tol: f64) -> Result<Self> {
        if !(trunc_tol > 0.0 && trunc_tol <= 1e-8) {
            return Err(Error::invalid("trunc_tol", "must lie in (0, 1e-8]"));
        }
        let d = theta_derivs(c(0.0), tau, trunc_tol)?;
        Ok(Self {
            kind: FlavorKind::Elliptic,
            tau,
            trunc_tol,
            theta1: d[1],
            theta3: d[3],
        })
    }

    pub fn kind(&self) -> FlavorKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            FlavorKind::Rational => "rational",
            FlavorKind::Trigonometric => "trigonometric",
            FlavorKind::Elliptic => "elliptic",
        }
    }

    /// `Some(tau)` for the elliptic flavor.
    pub fn tau(&self) -> Option<Complex64> {
        (self.kind == FlavorKind::Elliptic).then_some(self.tau)
    }

    /// `c` in `E1(z) = 1/z + c z / 3 + O(z^3)`; also `wp = E2 + c / 3`.
    pub fn e1_cubic(&self) -> Complex64 {
        match self.kind {
            FlavorKind::Rational => c(0.0),
            FlavorKind::Trigonometric => c(1.0),
            FlavorKind::Elliptic => self.theta3 / self.theta1,
        }
    }

    /// Distance from `z` to the nearest pole.
    pub fn pole_distance(&self, z: Complex64) -> f64 {
        match self.kind {
            FlavorKind::Rational => z.norm(),
            FlavorKind::Trigonometric => {
                let k = (z.im / PI).round();
                (z - I * (k * PI)).norm()
            }
            FlavorKind::Elliptic => {
                let tau = self.tau;
                let n2 = (z.im / tau.im).round();
                let w = z - tau * n2;
                let n1 = w.re.round();
                let w = w - n1;
                let mut best = f64::INFINITY;
                for m1 in -1..=1 {
                    for m2 in -1..=1 {
                        best = best.min((w + m1 as f64 + tau * m2 as f64).norm());
                    }
                }
                best
            }
        }
    }

    pub fn guard(&self, z: Complex64) -> Result<()> {
        self.guard_eps(z, POLE_EPS)
    }

    pub fn guard_eps(&self, z: Complex64, eps: f64) -> Result<()> {
        let d = self.pole_distance(z);
        if d > eps && z.is_finite() {
            Ok(())
        } else {
            Err(Error::PoleProximity { arg: z, distance: d })
        }
    }

    fn theta4(&self, z: Complex64) -> Result<[Complex64; 4]> {
        theta_derivs(z, self.tau, self.trunc_tol)
    }

    /// Kronecker function `phi(eta, z)`. Only `eta` and `z` are guarded:
    /// `eta + z` on the lattice is a zero of `phi`, not a pole.
    pub fn phi(&self, eta: Complex64, z: Complex64) -> Result<Complex64> {
        self.guard(eta)?;
        self.guard(z)?;
        Ok(match self.kind {
            FlavorKind::Rational => eta.inv() + z.inv(),
            FlavorKind::Trigonometric => eta.tanh().inv() + z.tanh().inv(),
            FlavorKind::Elliptic => {
                let a = self.theta4(eta + z)?[0];
                let b = self.theta4(eta)?[0];
                let d = self.theta4(z)?[0];
                self.theta1 * a / (b * d)
            }
        })
    }

    /// First Eisenstein function.
    pub fn e1(&self, z: Complex64) -> Result<Complex64> {
        self.guard(z)?;
        Ok(match self.kind {
            FlavorKind::Rational => z.inv(),
            FlavorKind::Trigonometric => z.tanh().inv(),
            FlavorKind::Elliptic => {
                let t = self.theta4(z)?;
                t[1] / t[0]
            }
        })
    }

    /// Second Eisenstein function `-E1'`.
    pub fn e2(&self, z: Complex64) -> Result<Complex64> {
        self.guard(z)?;
        Ok(match self.kind {
            FlavorKind::Rational => (z * z).inv(),
            FlavorKind::Trigonometric => {
                let s = z.sinh();
                (s * s).inv()
            }
            FlavorKind::Elliptic => {
                let t = self.theta4(z)?;
                let e1 = t[1] / t[0];
                e1 * e1 - t[2] / t[0]
            }
        })
    }

    /// `E2'(z)`.
    pub fn de2(&self, z: Complex64) -> Result<Complex64> {
        self.guard(z)?;
        Ok(match self.kind {
            FlavorKind::Rational => -2.0 * (z * z * z).inv(),
            FlavorKind::Trigonometric => {
                let s = z.sinh();
                -2.0 * z.cosh() / (s * s * s)
            }
            FlavorKind::Elliptic => {
                let t = self.theta4(z)?;
                let e1 = t[1] / t[0];
                let e2 = e1 * e1 - t[2] / t[0];
                -2.0 * e1 * e2 - t[3] / t[0] + t[2] * t[1] / (t[0] * t[0])
            }
        })
    }

    /// Weierstrass function `E2 + c/3`. For the trigonometric flavor this is
    /// `1/sinh^2 + 1/3`, the constant that makes the local expansion of `phi`
    /// hold; differences of `wp` are unaffected by it.
    pub fn wp(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.e2(z)? + self.e1_cubic() / 3.0)
    }

    /// `f(z, q) = d/dq phi(z, q)` in closed form.
    pub fn f(&self, z: Complex64, q: Complex64) -> Result<Complex64> {
        let p = self.phi(z, q)?;
        Ok(p * (self.e1(z + q)? - self.e1(q)?))
    }

    /// `d/d eta phi(eta, z)`.
    pub fn phi_d1(&self, eta: Complex64, z: Complex64) -> Result<Complex64> {
        self.f(z, eta)
    }

    /// `d^2/d eta^2 phi(eta, z)`.
    pub fn phi_d11(&self, eta: Complex64, z: Complex64) -> Result<Complex64> {
        let p = self.phi(eta, z)?;
        let d = self.e1(eta + z)? - self.e1(eta)?;
        Ok(p * (d * d - self.e2(eta + z)? + self.e2(eta)?))
    }

    fn require_elliptic(&self) -> Result<()> {
        if self.kind == FlavorKind::Elliptic {
            Ok(())
        } else {
            Err(Error::invalid("flavor", "sector functions need the elliptic flavor"))
        }
    }

    fn sector_exp(&self, a: SectorIndex, z: Complex64) -> Complex64 {
        (2.0 * PI * I * (a.a2 as f64) * z / a.n as f64).exp()
    }

    /// `phi_a(z, omega_a + u) = exp(2 pi i a2 z / N) phi(z, omega_a + u)`.
    pub fn sector_phi(&self, a: SectorIndex, z: Complex64, u: Complex64) -> Result<Complex64> {
        self.require_elliptic()?;
        Ok(self.sector_exp(a, z) * self.phi(z, a.omega(self.tau) + u)?)
    }

    /// `f_a(z, omega_a + u) = exp(2 pi i a2 z / N) f(z, omega_a + u)`.
    pub fn sector_f(&self, a: SectorIndex, z: Complex64, u: Complex64) -> Result<Complex64> {
        self.require_elliptic()?;
        Ok(self.sector_exp(a, z) * self.f(z, a.omega(self.tau) + u)?)
    }

    /// `d/dz phi_a(z, omega_a + u)`, including the prefactor term.
    pub fn sector_phi_dz(&self, a: SectorIndex, z: Complex64, u: Complex64) -> Result<Complex64> {
        self.require_elliptic()?;
        let w = a.omega(self.tau) + u;
        let k = 2.0 * PI * I * (a.a2 as f64) / a.n as f64;
        Ok(self.sector_exp(a, z) * (k * self.phi(z, w)? + self.phi_d1(z, w)?))
    }

    /// `d^2/dz^2 phi_a(z, omega_a + u)`.
    pub fn sector_phi_dzz(&self, a: SectorIndex, z: Complex64, u: Complex64) -> Result<Complex64> {
        self.require_elliptic()?;
        let w = a.omega(self.tau) + u;
        let k = 2.0 * PI * I * (a.a2 as f64) / a.n as f64;
        let v = k * k * self.phi(z, w)? + 2.0 * k * self.phi_d1(z, w)? + self.phi_d11(z, w)?;
        Ok(self.sector_exp(a, z) * v)
    }

    /// A random point: the unit box for rational/trigonometric flavors,
    /// the fundamental cell for the elliptic one.
    pub fn sample_point(&self, rng: &mut SampleRng) -> Complex64 {
        match self.kind {
            FlavorKind::Elliptic => rng.cell_point(self.tau),
            _ => rng.box_point(),
        }
    }
}

/// `exp(pi i (b1 a2 - b2 a1) / N)`.
pub fn kappa(a: SectorIndex, b: SectorIndex) -> Complex64 {
    let e = b.a1 as f64 * a.a2 as f64 - b.a2 as f64 * a.a1 as f64;
    (I * PI * e / a.n as f64).exp()
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityResidual {
    pub name: String,
    pub max_residual: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalarIdentityReport {
    pub flavor: &'static str,
    pub tau: Option<[f64; 2]>,
    pub seed: u64,
    pub residuals: Vec<IdentityResidual>,
}

impl ScalarIdentityReport {
    pub fn get(&self, name: &str) -> Option<&IdentityResidual> {
        self.residuals.iter().find(|r| r.name == name)
    }

    pub fn worst(&self) -> f64 {
        self.residuals
            .iter()
            .map(|r| r.max_residual)
            .fold(0.0, f64::max)
    }
}

/// `|res| / max |term|`.
pub fn rel_residual(res: Complex64, terms: &[Complex64]) -> f64 {
    let scale = terms.iter().map(|t| t.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        res.norm()
    } else {
        res.norm() / scale
    }
}

struct Tracker {
    rows: Vec<IdentityResidual>,
}

impl Tracker {
    fn record(&mut self, name: &str, value: f64) {
        let value = if value.is_nan() { f64::INFINITY } else { value };
        if let Some(r) = self.rows.iter_mut().find(|r| r.name == name) {
            r.max_residual = r.max_residual.max(value);
            r.samples += 1;
        } else {
            self.rows.push(IdentityResidual {
                name: name.to_string(),
                max_residual: value,
                samples: 1,
            });
        }
    }
}

/// Draws `k` points whose listed combinations all clear `SAMPLE_MARGIN`.
fn draw<const K: usize>(
    fl: &Flavor,
    rng: &mut SampleRng,
    combos: impl Fn(&[Complex64; K]) -> Vec<Complex64>,
) -> [Complex64; K] {
    loop {
        let mut pts = [Complex64::new(0.0, 0.0); K];
        for p in pts.iter_mut() {
            *p = fl.sample_point(rng);
        }
        if combos(&pts)
            .iter()
            .all(|z| fl.guard_eps(*z, SAMPLE_MARGIN).is_ok())
        {
            return pts;
        }
    }
}

const LAURENT_POINTS: usize = 8;

/// Coefficients of `z^-1, z^0, z^1` in the Laurent series of `g` at 0, from
/// `LAURENT_POINTS` evaluations on the circle `|z| = r` (discrete Cauchy
/// integral; aliasing enters at order `r^LAURENT_POINTS`).
fn laurent_coeffs(
    g: impl Fn(Complex64) -> Result<Complex64>,
    r: f64,
    theta: f64,
) -> Result<[Complex64; 3]> {
    let mut a = [Complex64::new(0.0, 0.0); 3];
    for k in 0..LAURENT_POINTS {
        let z = Complex64::from_polar(r, theta + 2.0 * PI * k as f64 / LAURENT_POINTS as f64);
        let v = g(z)?;
        a[0] += v * z;
        a[1] += v;
        a[2] += v / z;
    }
    Ok(a.map(|x| x / LAURENT_POINTS as f64))
}

/// Size of the truncated-series mismatch `sum (a_n - expect_n) z^n` at
/// `|z| = r`, relative to the largest series term there.
fn coeff_residual(a: &[Complex64; 3], expect: &[Complex64; 3], r: f64) -> f64 {
    let w = [1.0 / r, 1.0, r];
    let scale = expect
        .iter()
        .zip(w)
        .map(|(e, w)| e.norm() * w)
        .fold(0.0, f64::max);
    a.iter()
        .zip(expect)
        .zip(w)
        .map(|((x, e), w)| (x - e).norm() * w / scale)
        .fold(0.0, f64::max)
}

/// Symmetric Richardson extrapolation of `g(h)` to `h = 0`, where
/// `g(h) = g(0) + O(h^2)` is even.
fn richardson_even(g: impl Fn(f64) -> Complex64, h: f64) -> Complex64 {
    let a = g(h);
    let b = g(h / 2.0);
    let c = g(h / 4.0);
    let ab = (4.0 * b - a) / 3.0;
    let bc = (4.0 * c - b) / 3.0;
    (16.0 * bc - ab) / 15.0
}

/// Residuals of the scalar identities at `n_samples` random points. Elliptic
/// flavors also get the sector identities for N = 2 and N = 3.
pub fn scalar_identity_report(fl: &Flavor, n_samples: usize, seed: u64) -> ScalarIdentityReport {
    let mut rng = SampleRng::new(seed);
    let mut tr = Tracker { rows: Vec::new() };
    let big = |r: Result<f64>| r.unwrap_or(f64::INFINITY);
    for _ in 0..n_samples {
        let [z, q, w, u] = draw(fl, &mut rng, |p: &[Complex64; 4]| {
            let [z, q, w, u] = *p;
            vec![z, q, w, u, z - w, q + u, z + q, w + u, z + w, z + q + u, w + q + u, z + w + q]
        });
        tr.record(
            "symmetry",
            big((|| Ok(rel_residual(fl.phi(z, q)? - fl.phi(q, z)?, &[fl.phi(z, q)?])))()),
        );
        tr.record(
            "fay",
            big((|| {
                let a = fl.phi(z, q)? * fl.phi(w, u)?;
                let b = fl.phi(z - w, q)? * fl.phi(w, q + u)?;
                let d = fl.phi(w - z, u)? * fl.phi(z, q + u)?;
                Ok(rel_residual(a - b - d, &[a, b, d]))
            })()),
        );
        // (z, x, y) = (z, q, u)
        tr.record(
            "wp_difference",
            big((|| {
                let a = fl.phi(z, q)? * fl.f(z, u)?;
                let b = fl.phi(z, u)? * fl.f(z, q)?;
                let d = fl.phi(z, q + u)? * (fl.wp(q)? - fl.wp(u)?);
                Ok(rel_residual(a - b - d, &[a, b, d]))
            })()),
        );
        // (eta, z) = (z, q)
        tr.record(
            "unitarity",
            big((|| {
                let a = fl.phi(z, q)? * fl.phi(z, -q)?;
                let b = fl.wp(z)? - fl.wp(q)?;
                let d = fl.e2(z)? - fl.e2(q)?;
                Ok(rel_residual(a - b, &[a, b]).max(rel_residual(a - d, &[a, d])))
            })()),
        );
        tr.record(
            "e1_sum",
            big((|| {
                let a = fl.phi(z, q)? * fl.phi(w, q)?;
                let s = fl.phi(z + w, q)?;
                let e = fl.e1(z)? + fl.e1(w)?;
                let b = s * (e + fl.e1(q)? - fl.e1(z + w + q)?);
                let d = s * e - fl.f(z + w, q)?;
                Ok(rel_residual(a - b, &[a, b]).max(rel_residual(a - d, &[a, s * e, d])))
            })()),
        );
        let theta = 2.0 * PI * rng.uniform();
        // Laurent coefficients a_{-1}, a_0, a_1 from points on |z| = 1e-3.
        tr.record(
            "phi_expansion",
            big((|| {
                let a = laurent_coeffs(|h| fl.phi(h, u), 1e-3, theta)?;
                let e = fl.e1(u)?;
                let expect = [c(1.0), e, (e * e - fl.wp(u)?) / 2.0];
                Ok(coeff_residual(&a, &expect, 1e-3))
            })()),
        );
        tr.record(
            "e1_expansion",
            big((|| {
                let a = laurent_coeffs(|h| fl.e1(h), 1e-3, theta)?;
                let expect = [c(1.0), c(0.0), fl.e1_cubic() / 3.0];
                Ok(coeff_residual(&a, &expect, 1e-3))
            })()),
        );
        tr.record(
            "f_at_zero",
            big((|| {
                let dir = Complex64::from_polar(1.0, theta);
                let g = |s: f64| {
                    let hh = dir * s;
                    (fl.f(hh, u).unwrap_or(Complex64::new(f64::NAN, 0.0))
                        + fl.f(-hh, u).unwrap_or(Complex64::new(f64::NAN, 0.0)))
                        * 0.5
                };
                let lim = richardson_even(g, 2e-3);
                let e = fl.e2(u)?;
                Ok(rel_residual(lim + e, &[e]))
            })()),
        );
    }
    if fl.kind == FlavorKind::Elliptic {
        for n in [2usize, 3] {
            sector_identities(fl, n, n_samples, &mut rng, &mut tr);
        }
    }
    ScalarIdentityReport {
        flavor: fl.name(),
        tau: fl.tau().map(|t| [t.re, t.im]),
        seed,
        residuals: tr.rows,
    }
}

fn sector_identities(fl: &Flavor, n: usize, samples: usize, rng: &mut SampleRng, tr: &mut Tracker) {
    let tau = fl.tau;
    let nf = n as f64;
    let omegas: Vec<(SectorIndex, Complex64)> =
        SectorIndex::all(n).map(|a| (a, a.omega(tau))).collect();
    let big = |r: Result<f64>| r.unwrap_or(f64::INFINITY);
    let fourier = format!("sector_fourier_sum_n{n}");
    let lattice = format!("e2_lattice_sum_n{n}");
    let weighted = format!("e2_kappa_sum_n{n}");
    let converse = format!("e2_converse_n{n}");
    for _ in 0..samples {
        let [hb, z, q] = draw(fl, rng, |p: &[Complex64; 3]| {
            let [hb, z, q] = *p;
            let mut v = vec![hb * nf, q * nf, z, q, hb, z + hb * nf];
            for (_, w) in &omegas {
                v.push(*w + z / nf);
                v.push(*w + q);
                v.push(*w + q / nf);
                v.push(*w + z / nf + hb * nf);
                v.push(*w + q * nf);
                v.push(*w + hb);
                v.push(*w + hb + z);
            }
            v
        });
        for &(g, wg) in &omegas {
            tr.record(
                &fourier,
                big((|| {
                    let mut terms = Vec::new();
                    let mut s = Complex64::new(0.0, 0.0);
                    for &(a, _) in &omegas {
                        let k = kappa(a, g);
                        let t = k * k * fl.sector_phi(a, hb * nf, z / nf)? / nf;
                        s += t;
                        terms.push(t);
                    }
                    let rhs = fl.sector_phi(g, z, hb)?;
                    terms.push(rhs);
                    Ok(rel_residual(s - rhs, &terms))
                })()),
            );
            tr.record(
                &converse,
                big((|| {
                    let mut terms = Vec::new();
                    let e2q = fl.e2(q)?;
                    let mut s = -e2q;
                    terms.push(e2q);
                    for &(a, _) in &omegas {
                        if a.is_zero() {
                            continue;
                        }
                        let k = kappa(a, g);
                        let t = k * k * fl.sector_phi_dz(a, q, Complex64::new(0.0, 0.0))?;
                        s += t;
                        terms.push(t);
                    }
                    let rhs = -fl.e2(wg + q / nf)?;
                    terms.push(rhs);
                    Ok(rel_residual(s - rhs, &terms))
                })()),
            );
            if g.is_zero() {
                tr.record(
                    &lattice,
                    big((|| {
                        let mut terms = Vec::new();
                        let mut s = Complex64::new(0.0, 0.0);
                        for &(_, w) in &omegas {
                            let t = fl.e2(w + q)?;
                            s += t;
                            terms.push(t);
                        }
                        let rhs = fl.e2(q * nf)? * (nf * nf);
                        terms.push(rhs);
                        Ok(rel_residual(s - rhs, &terms))
                    })()),
                );
            } else {
                tr.record(
                    &weighted,
                    big((|| {
                        let mut terms = Vec::new();
                        let mut s = Complex64::new(0.0, 0.0);
                        for &(a, w) in &omegas {
                            let k = kappa(a, g);
                            let t = k * k * fl.e2(w + q)?;
                            s += t;
                            terms.push(t);
                        }
                        let rhs = -(nf * nf)
                            * fl.sector_phi_dz(g, q * nf, Complex64::new(0.0, 0.0))?;
                        terms.push(rhs);
                        Ok(rel_residual(s - rhs, &terms))
                    })()),
                );
            }
        }
    }
}
