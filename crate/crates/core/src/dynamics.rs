//! RK4 integration of the interacting-tops flow with monitored invariants.

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{eom_rhs, hamiltonian, lax_l, lax_residual, PhaseState, PhaseVelocity};
use crate::tensor::ComplexMatrix;

/// `|tr S^ii - nu|` above which integration is aborted.
pub const DRIFT_ABORT: f64 = 1e-6;

/// Relative drift at or below which an invariant counts as exactly kept by
/// the scheme (RK4 preserves linear invariants up to round-off).
pub const DRIFT_FLOOR: f64 = 1e-12;

/// Accepted range of `drift(dt) / drift(dt / 2)` for a fourth-order scheme.
pub const ORDER4_RATIO: (f64, f64) = (8.0, 32.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Scheme {
    Rk4,
}

#[derive(Clone, Debug, Serialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub steps: usize,
    pub scheme: Scheme,
    pub monitor_z: Vec<Complex64>,
    pub monitor_every: usize,
}

impl IntegratorConfig {
    pub fn new(dt: f64, steps: usize, monitor_z: Vec<Complex64>, monitor_every: usize) -> Result<Self> {
        let cfg = Self {
            dt,
            steps,
            scheme: Scheme::Rk4,
            monitor_z,
            monitor_every,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid("dt", "must be a positive finite number"));
        }
        if self.steps == 0 {
            return Err(Error::invalid("steps", "must be >= 1"));
        }
        if self.monitor_every == 0 {
            return Err(Error::invalid("monitor_every", "must be >= 1"));
        }
        if !(self.dt * self.steps as f64).is_finite() {
            return Err(Error::invalid("dt", "dt * steps overflows"));
        }
        Ok(())
    }
}

/// One monitored sample.
#[derive(Clone, Debug, Serialize)]
pub struct MonitorRow {
    pub step: usize,
    pub t: f64,
    pub q: Vec<Complex64>,
    pub p: Vec<Complex64>,
    pub hamiltonian: Complex64,
    /// `trace_l[s][k - 1] = tr L(z_s)^k`.
    pub trace_l: Vec<[Complex64; 3]>,
    /// `tr S^k`, `k = 1..3`.
    pub casimirs: [Complex64; 3],
    pub lax_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrajectoryRecord {
    pub m: usize,
    pub n: usize,
    pub monitor_z: Vec<Complex64>,
    pub rows: Vec<MonitorRow>,
}

fn traces(x: &ComplexMatrix) -> [Complex64; 3] {
    let x2 = x * x;
    let x3 = &x2 * x;
    [x.trace(), x2.trace(), x3.trace()]
}

fn monitor(st: &PhaseState, step: usize, t: f64, zs: &[Complex64]) -> Result<MonitorRow> {
    let mut trace_l = Vec::with_capacity(zs.len());
    let mut lax_res: f64 = 0.0;
    for &z in zs {
        trace_l.push(traces(&lax_l(st, z)?));
        lax_res = lax_res.max(lax_residual(st, z)?);
    }
    Ok(MonitorRow {
        step,
        t,
        q: st.q().to_vec(),
        p: st.p().to_vec(),
        hamiltonian: hamiltonian(st)?,
        trace_l,
        casimirs: traces(st.spin().big()),
        lax_residual: lax_res,
    })
}

fn combine(k: [&PhaseVelocity; 4]) -> PhaseVelocity {
    let w = [1.0 / 6.0, 2.0 / 6.0, 2.0 / 6.0, 1.0 / 6.0];
    let mix = |f: &dyn Fn(&PhaseVelocity) -> &Vec<Complex64>| -> Vec<Complex64> {
        (0..f(k[0]).len())
            .map(|i| (0..4).map(|s| f(k[s])[i] * w[s]).sum())
            .collect()
    };
    let mut ds = k[0].ds.scale(Complex64::new(w[0], 0.0));
    for s in 1..4 {
        ds += &k[s].ds.scale(Complex64::new(w[s], 0.0));
    }
    PhaseVelocity {
        dq: mix(&|v| &v.dq),
        dp: mix(&|v| &v.dp),
        ds,
    }
}

fn rk4_step(st: &PhaseState, dt: f64) -> Result<PhaseState> {
    let h = Complex64::new(dt, 0.0);
    let half = Complex64::new(dt / 2.0, 0.0);
    let k1 = eom_rhs(st)?;
    let k2 = eom_rhs(&st.step(&k1, half)?)?;
    let k3 = eom_rhs(&st.step(&k2, half)?)?;
    let k4 = eom_rhs(&st.step(&k3, h)?)?;
    st.step(&combine([&k1, &k2, &k3, &k4]), h)
}

/// Classical RK4 on `(q, p, S)` with `eom_rhs` as the vector field.
///
/// Pole-guard failures after the start are reported as
/// `PoleDuringIntegration` with the step being taken.
pub fn integrate(state0: &PhaseState, cfg: &IntegratorConfig) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    let nu = state0.spin().nu();
    state0.spin().check_equal_traces(crate::model::CONSTRAINT_TOL)?;
    let mut rows = Vec::with_capacity(cfg.steps / cfg.monitor_every + 1);
    rows.push(monitor(state0, 0, 0.0, &cfg.monitor_z)?);
    let mut st = state0.clone();
    for step in 1..=cfg.steps {
        let wrap = |e: Error| match e {
            Error::PoleProximity { .. } => Error::PoleDuringIntegration {
                step,
                source: Box::new(e),
            },
            other => other,
        };
        st = rk4_step(&st, cfg.dt).map_err(wrap)?;
        let drift = st.spin().constraint_deviation(nu);
        if drift > DRIFT_ABORT || !drift.is_finite() {
            return Err(Error::ConstraintDrift { step, drift });
        }
        if step % cfg.monitor_every == 0 {
            rows.push(monitor(&st, step, step as f64 * cfg.dt, &cfg.monitor_z).map_err(wrap)?);
        }
    }
    Ok(TrajectoryRecord {
        m: state0.m(),
        n: state0.n(),
        monitor_z: cfg.monitor_z.clone(),
        rows,
    })
}

/// Largest `|x(t) - x(0)|` over the record, relative to the largest `|x(t)|`.
fn drift_of(rows: &[MonitorRow], f: impl Fn(&MonitorRow) -> Complex64) -> f64 {
    let x0 = f(&rows[0]);
    let (mut d, mut s) = (0.0f64, 0.0f64);
    for r in rows {
        let x = f(r);
        d = d.max((x - x0).norm());
        s = s.max(x.norm());
    }
    if s == 0.0 {
        d
    } else {
        d / s
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct DriftReport {
    pub hamiltonian: f64,
    /// `trace_l[s][k - 1]`: drift of `tr L(z_s)^k`.
    pub trace_l: Vec<[f64; 3]>,
    pub casimirs: [f64; 3],
    pub max_lax_residual: f64,
}

impl DriftReport {
    /// Every drift, labelled, in a fixed order.
    pub fn labelled(&self) -> Vec<(String, f64)> {
        let mut out = vec![("H".to_string(), self.hamiltonian)];
        for (s, row) in self.trace_l.iter().enumerate() {
            for (k, d) in row.iter().enumerate() {
                out.push((format!("tr L^{}(z{})", k + 1, s), *d));
            }
        }
        for (k, d) in self.casimirs.iter().enumerate() {
            out.push((format!("tr S^{}", k + 1), *d));
        }
        out
    }
}

pub fn isospectrality_report(rec: &TrajectoryRecord) -> Result<DriftReport> {
    if rec.rows.is_empty() {
        return Err(Error::invalid("record", "has no rows"));
    }
    let rows = &rec.rows;
    let trace_l = (0..rec.monitor_z.len())
        .map(|s| [0, 1, 2].map(|k| drift_of(rows, |r| r.trace_l[s][k])))
        .collect();
    Ok(DriftReport {
        hamiltonian: drift_of(rows, |r| r.hamiltonian),
        trace_l,
        casimirs: [0, 1, 2].map(|k| drift_of(rows, |r| r.casimirs[k])),
        max_lax_residual: rows.iter().map(|r| r.lax_residual).fold(0.0, f64::max),
    })
}

/// Outcome of comparing the drift of one invariant at `dt` and `dt / 2`.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct OrderCheck {
    pub name: String,
    pub coarse: f64,
    pub fine: f64,
    /// `None` when both drifts sit at the round-off floor.
    pub ratio: Option<f64>,
    pub pass: bool,
}

/// Pairs up the drifts of two reports taken at `dt` and `dt / 2`.
pub fn order_checks(coarse: &DriftReport, fine: &DriftReport) -> Vec<OrderCheck> {
    coarse
        .labelled()
        .into_iter()
        .zip(fine.labelled())
        .map(|((name, c), (_, f))| {
            if c <= DRIFT_FLOOR && f <= DRIFT_FLOOR {
                OrderCheck {
                    name,
                    coarse: c,
                    fine: f,
                    ratio: None,
                    pass: true,
                }
            } else {
                let r = c / f;
                OrderCheck {
                    name,
                    coarse: c,
                    fine: f,
                    ratio: Some(r),
                    pass: r >= ORDER4_RATIO.0 && r <= ORDER4_RATIO.1,
                }
            }
        })
        .collect()
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV with a header row; floats carry 17 significant digits.
pub fn write_csv<W: Write>(rec: &TrajectoryRecord, out: &mut W) -> std::io::Result<()> {
    let mut head = vec!["t".to_string()];
    let cx_cols = |head: &mut Vec<String>, name: String| {
        head.push(format!("re_{name}"));
        head.push(format!("im_{name}"));
    };
    for i in 0..rec.m {
        cx_cols(&mut head, format!("q{i}"));
    }
    for i in 0..rec.m {
        cx_cols(&mut head, format!("p{i}"));
    }
    cx_cols(&mut head, "H".into());
    for s in 0..rec.monitor_z.len() {
        for k in 1..=3 {
            cx_cols(&mut head, format!("trL{k}_z{s}"));
        }
    }
    for k in 1..=3 {
        cx_cols(&mut head, format!("trS{k}"));
    }
    head.push("lax_residual".into());
    writeln!(out, "{}", head.join(","))?;
    for r in &rec.rows {
        let mut cols = vec![fmt(r.t)];
        let mut push = |z: Complex64| {
            cols.push(fmt(z.re));
            cols.push(fmt(z.im));
        };
        r.q.iter().chain(&r.p).for_each(|&z| push(z));
        push(r.hamiltonian);
        for tl in &r.trace_l {
            tl.iter().for_each(|&z| push(z));
        }
        r.casimirs.iter().for_each(|&z| push(z));
        cols.push(fmt(r.lax_residual));
        writeln!(out, "{}", cols.join(","))?;
    }
    Ok(())
}
