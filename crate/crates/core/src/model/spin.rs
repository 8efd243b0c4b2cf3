use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rng::SampleRng;
use crate::tensor::ComplexMatrix;

/// Half side of the box spin entries are drawn from.
const SPIN_BOX_HALF: f64 = 0.5;
const RANK1_MIN_PAIRING: f64 = 1e-8;
const RANK1_REDRAWS: usize = 10;

/// The `NM x NM` spin matrix, block `(i, j)` being `S^{ij}` in `Mat(N)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinConfig {
    m: usize,
    n: usize,
    big: ComplexMatrix,
    /// `(xi^i, eta^i)` per site when built as `S^{ij}_{ab} = xi^i_a eta^j_b`.
    generators: Option<(Vec<Vec<Complex64>>, Vec<Vec<Complex64>>)>,
}

impl SpinConfig {
    pub fn from_big(m: usize, n: usize, big: ComplexMatrix) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::invalid("M, N", "must be >= 1"));
        }
        if big.dim() != m * n {
            return Err(Error::DimensionMismatch(format!(
                "spin matrix has dim {}, expected N*M = {}",
                big.dim(),
                m * n
            )));
        }
        Ok(Self {
            m,
            n,
            big,
            generators: None,
        })
    }

    pub fn from_blocks(blocks: &[Vec<ComplexMatrix>]) -> Result<Self> {
        let m = blocks.len();
        let n = blocks.first().and_then(|r| r.first()).map(|b| b.dim()).unwrap_or(0);
        if blocks.iter().any(|r| r.len() != m || r.iter().any(|b| b.dim() != n)) {
            return Err(Error::DimensionMismatch("blocks must form an M x M grid of N x N".into()));
        }
        let mut big = ComplexMatrix::zeros(n * m);
        for (i, row) in blocks.iter().enumerate() {
            for (j, b) in row.iter().enumerate() {
                big.set_block(n, i, j, b);
            }
        }
        Self::from_big(m, n, big)
    }

    /// Rank-1 spin from generator vectors, `S^{ij}_{ab} = xi^i_a eta^j_b`.
    pub fn from_generators(xi: Vec<Vec<Complex64>>, eta: Vec<Vec<Complex64>>) -> Result<Self> {
        let m = xi.len();
        let n = xi.first().map(|v| v.len()).unwrap_or(0);
        if eta.len() != m || xi.iter().chain(&eta).any(|v| v.len() != n) {
            return Err(Error::DimensionMismatch("xi and eta must be M vectors of length N".into()));
        }
        let big = ComplexMatrix::from_fn(n * m, |r, c| xi[r / n][r % n] * eta[c / n][c % n]);
        let mut s = Self::from_big(m, n, big)?;
        s.generators = Some((xi, eta));
        Ok(s)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn big(&self) -> &ComplexMatrix {
        &self.big
    }

    pub fn into_big(self) -> ComplexMatrix {
        self.big
    }

    pub fn block(&self, i: usize, j: usize) -> ComplexMatrix {
        self.big.block(self.n, i, j)
    }

    pub fn blocks(&self) -> Vec<Vec<ComplexMatrix>> {
        (0..self.m)
            .map(|i| (0..self.m).map(|j| self.block(i, j)).collect())
            .collect()
    }

    pub fn generators(&self) -> Option<(&[Vec<Complex64>], &[Vec<Complex64>])> {
        self.generators.as_ref().map(|(x, e)| (x.as_slice(), e.as_slice()))
    }

    pub fn is_rank1(&self) -> bool {
        self.generators.is_some()
    }

    /// `max_i |tr S^{ii} - nu|`.
    pub fn constraint_deviation(&self, nu: Complex64) -> f64 {
        (0..self.m)
            .map(|i| (self.block(i, i).trace() - nu).norm())
            .fold(0.0, f64::max)
    }

    pub fn on_constraints(&self, nu: Complex64) -> bool {
        self.constraint_deviation(nu) <= 1e-12 * nu.norm().max(1.0)
    }

    /// `tr S^{11}`, the common trace on the constraint surface.
    pub fn nu(&self) -> Complex64 {
        self.block(0, 0).trace()
    }

    /// `ConstraintViolation` naming the worst site if the diagonal traces
    /// differ from each other by more than `tol` (relative to `max(|nu|, 1)`).
    pub fn check_equal_traces(&self, tol: f64) -> Result<()> {
        let nu = self.nu();
        let scale = nu.norm().max(1.0);
        let mut worst = (0, 0.0);
        for i in 0..self.m {
            let d = (self.block(i, i).trace() - nu).norm() / scale;
            if d > worst.1 {
                worst = (i, d);
            }
        }
        if worst.1 > tol {
            return Err(Error::ConstraintViolation {
                site: worst.0,
                deviation: worst.1,
            });
        }
        Ok(())
    }

    /// Same spin with a new big matrix; generators are dropped since the
    /// result need not be rank 1.
    pub fn with_big(&self, big: ComplexMatrix) -> Self {
        Self {
            m: self.m,
            n: self.n,
            big,
            generators: None,
        }
    }
}

fn check_dims(m: usize, n: usize) -> Result<()> {
    if m == 0 || n == 0 {
        return Err(Error::invalid("M, N", "must be >= 1"));
    }
    Ok(())
}

/// Rank-1 spin with `tr S^{ii} = nu` for every site.
pub fn spin_rank1(m: usize, n: usize, nu: Complex64, seed: u64) -> Result<SpinConfig> {
    check_dims(m, n)?;
    if nu == Complex64::new(0.0, 0.0) {
        return Err(Error::invalid("nu", "must be nonzero for rank-1 spins"));
    }
    let mut rng = SampleRng::new(seed);
    let mut xi = Vec::with_capacity(m);
    let mut eta = Vec::with_capacity(m);
    for site in 0..m {
        let mut ok = false;
        for _ in 0..RANK1_REDRAWS {
            let x: Vec<Complex64> = (0..n).map(|_| rng.centered(SPIN_BOX_HALF)).collect();
            let e: Vec<Complex64> = (0..n).map(|_| rng.centered(SPIN_BOX_HALF)).collect();
            let pairing: Complex64 = x.iter().zip(&e).map(|(a, b)| a * b).sum();
            if pairing.norm() < RANK1_MIN_PAIRING {
                continue;
            }
            let k = nu / pairing;
            xi.push(x.into_iter().map(|v| v * k).collect());
            eta.push(e);
            ok = true;
            break;
        }
        if !ok {
            return Err(Error::DegenerateDraw(format!(
                "xi.eta below {RANK1_MIN_PAIRING:e} at site {site} after {RANK1_REDRAWS} draws"
            )));
        }
    }
    SpinConfig::from_generators(xi, eta)
}

/// Generic spin with the diagonal blocks shifted onto `tr S^{ii} = nu`.
pub fn spin_general(m: usize, n: usize, nu: Complex64, seed: u64) -> Result<SpinConfig> {
    check_dims(m, n)?;
    let mut rng = SampleRng::new(seed);
    let mut big = ComplexMatrix::from_fn(n * m, |_, _| rng.centered(SPIN_BOX_HALF));
    for i in 0..m {
        let tr = big.block(n, i, i).trace();
        let shift = (nu - tr) / n as f64;
        for a in 0..n {
            big[(i * n + a, i * n + a)] += shift;
        }
    }
    SpinConfig::from_big(m, n, big)
}
