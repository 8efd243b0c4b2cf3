//! Quantum R-matrix families `R^hbar_12(z)` and their classical data.
//!
//! Every family satisfies `R^hbar(z) = 1/hbar + r(z) + hbar m(z) + O(hbar^2)`.
//! Derivatives are closed forms; nothing here differentiates numerically.

mod certify;

pub use certify::{certify, CertificationReport, MeasuredNormalization, PropertyResult, ORDER_DEFECT_TOL};

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::specfun::{Flavor, SectorIndex, POLE_EPS};
use crate::tensor::{kron, permutation_p, sin_basis_t, sin_basis_t_inv, ComplexMatrix, TwoSiteOperator};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FamilyKind {
    YangXXX,
    ElevenVertex,
    SixVertexXXZ,
    SevenVertex,
    BaxterBelavin,
}

#[derive(Clone, Debug)]
pub struct RMatrixFamily {
    kind: FamilyKind,
    n: usize,
    c: Complex64,
    flavor: Flavor,
    /// `(a, T_a (x) T_a^{-1})` for the Baxter-Belavin sums.
    sectors: Vec<(SectorIndex, ComplexMatrix)>,
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// 4x4 operator from rows.
fn m4(rows: [[Complex64; 4]; 4]) -> TwoSiteOperator {
    TwoSiteOperator::new(2, ComplexMatrix::from_fn(4, |i, j| rows[i][j]))
}

fn coth(z: Complex64) -> Complex64 {
    z.tanh().inv()
}

fn csch(z: Complex64) -> Complex64 {
    z.sinh().inv()
}

impl RMatrixFamily {
    /// Yang's `1/hbar + P/z` on `Mat(N)^2`.
    pub fn yang(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("N", "must be >= 1"));
        }
        Ok(Self::base(FamilyKind::YangXXX, n, ZERO, Flavor::rational()))
    }

    pub fn eleven_vertex() -> Self {
        Self::base(FamilyKind::ElevenVertex, 2, ZERO, Flavor::rational())
    }

    pub fn six_vertex_xxz() -> Self {
        Self::base(FamilyKind::SixVertexXXZ, 2, ZERO, Flavor::trigonometric())
    }

    pub fn seven_vertex(c: Complex64) -> Self {
        Self::base(FamilyKind::SevenVertex, 2, c, Flavor::trigonometric())
    }

    /// Normalized Baxter-Belavin R-matrix; `N = 1` is the scalar Kronecker
    /// function `phi(z, hbar)`.
    pub fn baxter_belavin(n: usize, tau: Complex64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("N", "must be >= 1"));
        }
        let flavor = Flavor::elliptic(tau)?;
        let mut fam = Self::base(FamilyKind::BaxterBelavin, n, ZERO, flavor);
        fam.sectors = SectorIndex::all(n)
            .map(|a| (a, kron(&sin_basis_t(a), &sin_basis_t_inv(a))))
            .collect();
        Ok(fam)
    }

    fn base(kind: FamilyKind, n: usize, c: Complex64, flavor: Flavor) -> Self {
        Self {
            kind,
            n,
            c,
            flavor,
            sectors: Vec::new(),
        }
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Deformation constant of the 7-vertex family (zero otherwise).
    pub fn deformation(&self) -> Complex64 {
        self.c
    }

    pub fn tau(&self) -> Option<Complex64> {
        self.flavor.tau()
    }

    /// Scalar flavor this family degenerates to at `N = 1` and whose `wp`
    /// enters the unitarity scalar.
    pub fn flavor(&self) -> &Flavor {
        &self.flavor
    }

    /// Short name as used on the command line.
    pub fn short_name(&self) -> &'static str {
        match self.kind {
            FamilyKind::YangXXX => "xxx",
            FamilyKind::ElevenVertex => "11v",
            FamilyKind::SixVertexXXZ => "xxz",
            FamilyKind::SevenVertex => "7v",
            FamilyKind::BaxterBelavin => "bb",
        }
    }

    fn guard(&self, z: Complex64) -> Result<()> {
        self.flavor.guard(z)
    }

    fn identity(&self) -> ComplexMatrix {
        ComplexMatrix::identity(self.n * self.n)
    }

    fn perm(&self) -> ComplexMatrix {
        permutation_p(self.n).into_mat()
    }

    fn op(&self, m: ComplexMatrix) -> TwoSiteOperator {
        TwoSiteOperator::new(self.n, m)
    }

    /// `sum_a coeff(a) T_a (x) T_a^{-1}` over `a != 0` when `skip_zero`.
    fn sector_sum(
        &self,
        skip_zero: bool,
        mut coeff: impl FnMut(SectorIndex) -> Result<Complex64>,
    ) -> Result<ComplexMatrix> {
        let mut out = ComplexMatrix::zeros(self.n * self.n);
        for (a, tt) in &self.sectors {
            if skip_zero && a.is_zero() {
                continue;
            }
            let k = coeff(*a)?;
            out += &tt.scale(k);
        }
        Ok(out)
    }

    /// `R^hbar_12(z)`.
    pub fn r_matrix(&self, hbar: Complex64, z: Complex64) -> Result<TwoSiteOperator> {
        self.guard(hbar)?;
        self.guard(z)?;
        let (h, cc) = (hbar, self.c);
        Ok(match self.kind {
            FamilyKind::YangXXX => self.op(&self.identity().scale(h.inv()) + &self.perm().scale(z.inv())),
            FamilyKind::ElevenVertex => {
                let a = h.inv() + z.inv();
                let s = h + z;
                let corner = -(h * h * h + 2.0 * z * h * h + 2.0 * h * z * z + z * z * z);
                m4([
                    [a, ZERO, ZERO, ZERO],
                    [-s, h.inv(), z.inv(), ZERO],
                    [-s, z.inv(), h.inv(), ZERO],
                    [corner, s, s, a],
                ])
            }
            FamilyKind::SixVertexXXZ | FamilyKind::SevenVertex => {
                let a = coth(z) + coth(h);
                m4([
                    [a, ZERO, ZERO, ZERO],
                    [ZERO, csch(h), csch(z), ZERO],
                    [ZERO, csch(z), csch(h), ZERO],
                    [cc * (z + h).sinh(), ZERO, ZERO, a],
                ])
            }
            FamilyKind::BaxterBelavin => {
                let nf = self.n as f64;
                let fl = self.flavor;
                self.op(self.sector_sum(false, |a| Ok(fl.sector_phi(a, z, h / nf)? / nf))?)
            }
        })
    }

    /// `F^hbar_12(z) = d/dz R^hbar_12(z)`.
    pub fn f_matrix(&self, hbar: Complex64, z: Complex64) -> Result<TwoSiteOperator> {
        self.guard(hbar)?;
        self.guard(z)?;
        let (h, cc) = (hbar, self.c);
        Ok(match self.kind {
            FamilyKind::YangXXX => self.op(self.perm().scale(-(z * z).inv())),
            FamilyKind::ElevenVertex => {
                let d = -(z * z).inv();
                let one = c(1.0);
                let corner = -(2.0 * h * h + 4.0 * h * z + 3.0 * z * z);
                m4([
                    [d, ZERO, ZERO, ZERO],
                    [-one, ZERO, d, ZERO],
                    [-one, d, ZERO, ZERO],
                    [corner, one, one, d],
                ])
            }
            FamilyKind::SixVertexXXZ | FamilyKind::SevenVertex => {
                let s = csch(z);
                let d = -s * s;
                let o = -z.cosh() * s * s;
                m4([
                    [d, ZERO, ZERO, ZERO],
                    [ZERO, ZERO, o, ZERO],
                    [ZERO, o, ZERO, ZERO],
                    [cc * (z + h).cosh(), ZERO, ZERO, d],
                ])
            }
            FamilyKind::BaxterBelavin => {
                let nf = self.n as f64;
                let fl = self.flavor;
                self.op(self.sector_sum(false, |a| Ok(fl.sector_phi_dz(a, z, h / nf)? / nf))?)
            }
        })
    }

    /// `d^2/dz^2 R^hbar_12(z)`.
    pub fn f_matrix_dz(&self, hbar: Complex64, z: Complex64) -> Result<TwoSiteOperator> {
        self.guard(hbar)?;
        self.guard(z)?;
        let (h, cc) = (hbar, self.c);
        Ok(match self.kind {
            FamilyKind::YangXXX => self.op(self.perm().scale(2.0 * (z * z * z).inv())),
            FamilyKind::ElevenVertex => {
                let d = 2.0 * (z * z * z).inv();
                m4([
                    [d, ZERO, ZERO, ZERO],
                    [ZERO, ZERO, d, ZERO],
                    [ZERO, d, ZERO, ZERO],
                    [-(4.0 * h + 6.0 * z), ZERO, ZERO, d],
                ])
            }
            FamilyKind::SixVertexXXZ | FamilyKind::SevenVertex => {
                let s = csch(z);
                let ch = z.cosh();
                let d = 2.0 * ch * s * s * s;
                let o = (ch * ch + 1.0) * s * s * s;
                m4([
                    [d, ZERO, ZERO, ZERO],
                    [ZERO, ZERO, o, ZERO],
                    [ZERO, o, ZERO, ZERO],
                    [cc * (z + h).sinh(), ZERO, ZERO, d],
                ])
            }
            FamilyKind::BaxterBelavin => {
                let nf = self.n as f64;
                let fl = self.flavor;
                self.op(self.sector_sum(false, |a| Ok(fl.sector_phi_dzz(a, z, h / nf)? / nf))?)
            }
        })
    }

    /// `d/dhbar R^hbar_12(z)`.
    pub fn r_matrix_dhbar(&self, hbar: Complex64, z: Complex64) -> Result<TwoSiteOperator> {
        self.guard(hbar)?;
        self.guard(z)?;
        let (h, cc) = (hbar, self.c);
        Ok(match self.kind {
            FamilyKind::YangXXX => self.op(self.identity().scale(-(h * h).inv())),
            FamilyKind::ElevenVertex => {
                let d = -(h * h).inv();
                let one = c(1.0);
                let corner = -(3.0 * h * h + 4.0 * z * h + 2.0 * z * z);
                m4([
                    [d, ZERO, ZERO, ZERO],
                    [-one, d, ZERO, ZERO],
                    [-one, ZERO, d, ZERO],
                    [corner, one, one, d],
                ])
            }
            FamilyKind::SixVertexXXZ | FamilyKind::SevenVertex => {
                let s = csch(h);
                let d = -s * s;
                let o = -h.cosh() * s * s;
                m4([
                    [d, ZERO, ZERO, ZERO],
                    [ZERO, o, ZERO, ZERO],
                    [ZERO, ZERO, o, ZERO],
                    [cc * (z + h).cosh(), ZERO, ZERO, d],
                ])
            }
            FamilyKind::BaxterBelavin => {
                let nf = self.n as f64;
                let fl = self.flavor;
                self.op(self.sector_sum(false, |a| Ok(fl.sector_f(a, z, h / nf)? / (nf * nf)))?)
            }
        })
    }

    /// Classical r-matrix `r_12(z)`.
    pub fn r(&self, z: Complex64) -> Result<TwoSiteOperator> {
        self.guard(z)?;
        let cc = self.c;
        Ok(match self.kind {
            FamilyKind::YangXXX => self.op(self.perm().scale(z.inv())),
            FamilyKind::ElevenVertex => {
                let w = z.inv();
                m4([
                    [w, ZERO, ZERO, ZERO],
                    [-z, ZERO, w, ZERO],
                    [-z, w, ZERO, ZERO],
                    [-z * z * z, z, z, w],
                ])
            }
            FamilyKind::SixVertexXXZ | FamilyKind::SevenVertex => {
                let a = coth(z);
                let s = csch(z);
                m4([
                    [a, ZERO, ZERO, ZERO],
                    [ZERO, ZERO, s, ZERO],
                    [ZERO, s, ZERO, ZERO],
                    [cc * z.sinh(), ZERO, ZERO, a],
                ])
            }
            FamilyKind::BaxterBelavin => {
                let nf = self.n as f64;
                let fl = self.flavor;
                let mut m = self.identity().scale(fl.e1(z)? / nf);
                m += &self.sector_sum(true, |a| Ok(fl.sector_phi(a, z, ZERO)? / nf))?;
                self.op(m)
            }
        })
    }

    /// `F^0_12(z) = r_12'(z)`.
    pub fn f0(&self, z: Complex64) -> Result<TwoSiteOperator> {
        self.guard(z)?;
        let cc = self.c;
        Ok(match self.kind {
            FamilyKind::YangXXX => self.op(self.perm().scale(-(z * z).inv())),
            FamilyKind::ElevenVertex => {
                let d = -(z * z).inv();
                let one = c(1.0);
                m4([
                    [d, ZERO, ZERO, ZERO],
                    [-one, ZERO, d, ZERO],
                    [-one, d, ZERO, ZERO],
                    [-3.0 * z * z, one, one, d],
                ])
            }
            FamilyKind::SixVertexXXZ | FamilyKind::SevenVertex => {
                let s = csch(z);
                let d = -s * s;
                let o = -z.cosh() * s * s;
                m4([
                    [d, ZERO, ZERO, ZERO],
                    [ZERO, ZERO, o, ZERO],
                    [ZERO, o, ZERO, ZERO],
                    [cc * z.cosh(), ZERO, ZERO, d],
                ])
            }
            FamilyKind::BaxterBelavin => {
                let nf = self.n as f64;
                let fl = self.flavor;
                let mut m = self.identity().scale(-fl.e2(z)? / nf);
                m += &self.sector_sum(true, |a| Ok(fl.sector_phi_dz(a, z, ZERO)? / nf))?;
                self.op(m)
            }
        })
    }

    /// `r_12''(z)`.
    pub fn f0_dz(&self, z: Complex64) -> Result<TwoSiteOperator> {
        self.guard(z)?;
        let cc = self.c;
        Ok(match self.kind {
            FamilyKind::YangXXX => self.op(self.perm().scale(2.0 * (z * z * z).inv())),
            FamilyKind::ElevenVertex => {
                let d = 2.0 * (z * z * z).inv();
                m4([
                    [d, ZERO, ZERO, ZERO],
                    [ZERO, ZERO, d, ZERO],
                    [ZERO, d, ZERO, ZERO],
                    [-6.0 * z, ZERO, ZERO, d],
                ])
            }
            FamilyKind::SixVertexXXZ | FamilyKind::SevenVertex => {
                let s = csch(z);
                let ch = z.cosh();
                let d = 2.0 * ch * s * s * s;
                let o = (ch * ch + 1.0) * s * s * s;
                m4([
                    [d, ZERO, ZERO, ZERO],
                    [ZERO, ZERO, o, ZERO],
                    [ZERO, o, ZERO, ZERO],
                    [cc * z.sinh(), ZERO, ZERO, d],
                ])
            }
            FamilyKind::BaxterBelavin => {
                let nf = self.n as f64;
                let fl = self.flavor;
                let mut m = self.identity().scale(-fl.de2(z)? / nf);
                m += &self.sector_sum(true, |a| Ok(fl.sector_phi_dzz(a, z, ZERO)? / nf))?;
                self.op(m)
            }
        })
    }

    /// `m_12(z)`, the `hbar^1` coefficient. Regular at `z = 0`.
    pub fn m(&self, z: Complex64) -> Result<TwoSiteOperator> {
        let cc = self.c;
        Ok(match self.kind {
            FamilyKind::YangXXX => TwoSiteOperator::zeros(self.n),
            FamilyKind::ElevenVertex => {
                let one = c(1.0);
                m4([
                    [ZERO; 4],
                    [-one, ZERO, ZERO, ZERO],
                    [-one, ZERO, ZERO, ZERO],
                    [-2.0 * z * z, one, one, ZERO],
                ])
            }
            FamilyKind::SixVertexXXZ | FamilyKind::SevenVertex => {
                let d = c(1.0 / 3.0);
                let o = c(-1.0 / 6.0);
                m4([
                    [d, ZERO, ZERO, ZERO],
                    [ZERO, o, ZERO, ZERO],
                    [ZERO, ZERO, o, ZERO],
                    [cc * z.cosh(), ZERO, ZERO, d],
                ])
            }
            FamilyKind::BaxterBelavin => {
                let nf = self.n as f64;
                let fl = self.flavor;
                let n2 = nf * nf;
                if z == ZERO {
                    // E1^2 - wp -> 2c/3 and f(0, u) = -E2(u).
                    let mut m = self.identity().scale(fl.e1_cubic() / (3.0 * n2));
                    let tau = fl.tau().expect("elliptic");
                    m += &self.sector_sum(true, |a| Ok(-fl.e2(a.omega(tau))? / n2))?;
                    self.op(m)
                } else {
                    fl.guard(z)?;
                    let e1 = fl.e1(z)?;
                    let mut m = self.identity().scale((e1 * e1 - fl.wp(z)?) / (2.0 * n2));
                    m += &self.sector_sum(true, |a| Ok(fl.sector_f(a, z, ZERO)? / n2))?;
                    self.op(m)
                }
            }
        })
    }

    /// `r^(0)`: constant term of `r(z) - P/z` at `z = 0`.
    pub fn r0(&self) -> TwoSiteOperator {
        match self.kind {
            FamilyKind::BaxterBelavin => {
                let nf = self.n as f64;
                let fl = self.flavor;
                let tau = fl.tau().expect("elliptic");
                let m = self
                    .sector_sum(true, |a| {
                        let k = 2.0 * PI * I * (a.a2 as f64) / nf;
                        Ok((fl.e1(a.omega(tau))? + k) / nf)
                    })
                    .expect("omega_a is never a lattice point for a != 0");
                self.op(m)
            }
            _ => TwoSiteOperator::zeros(self.n),
        }
    }

    /// `r^(1) = m(0) P`.
    pub fn r1(&self) -> Result<TwoSiteOperator> {
        Ok(self.m(ZERO)?.times_p())
    }

    /// `R^{z,(0)} = r(z) P`.
    pub fn rz0(&self, z: Complex64) -> Result<TwoSiteOperator> {
        Ok(self.r(z)?.times_p())
    }

    /// `R^{z,(1)} = m(z) P`.
    pub fn rz1(&self, z: Complex64) -> Result<TwoSiteOperator> {
        Ok(self.m(z)?.times_p())
    }

    /// Whether `z` clears the pole guard.
    pub fn pole_free(&self, z: Complex64) -> bool {
        self.flavor.pole_distance(z) > POLE_EPS
    }
}
