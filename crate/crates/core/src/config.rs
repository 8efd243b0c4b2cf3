//! Model configuration JSON and family construction from names.
//!
//! Schema: `{family, N, M, tau?, C?, nu, spin_mode, seed, q0?, p0?}` with
//! complex numbers as `[re, im]`. `nu` may also be a per-site list, which
//! must be constant.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::model::{random_positions, spin_general, spin_rank1, PhaseState};
use crate::rmatrix::RMatrixFamily;
use crate::rng::SampleRng;

/// Seed offset for positions and momenta drawn for a config.
const CONFIG_PHASE_STREAM: u64 = 0x5851_f42d_4c95_7f2d;

const FAMILIES: &str = "xxx, 11v, xxz, 7v, bb";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpinMode {
    Rank1,
    General,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelConfig {
    pub family: String,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "ser_opt_cx")]
    pub tau: Option<Complex64>,
    #[serde(rename = "C", skip_serializing_if = "Option::is_none", serialize_with = "ser_opt_cx")]
    pub c: Option<Complex64>,
    #[serde(serialize_with = "ser_cx")]
    pub nu: Complex64,
    pub spin_mode: SpinMode,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "ser_opt_cxs")]
    pub q0: Option<Vec<Complex64>>,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "ser_opt_cxs")]
    pub p0: Option<Vec<Complex64>>,
}

fn ser_cx<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

fn ser_opt_cx<S: serde::Serializer>(z: &Option<Complex64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    z.map(|z| [z.re, z.im]).serialize(s)
}

fn ser_opt_cxs<S: serde::Serializer>(z: &Option<Vec<Complex64>>, s: S) -> std::result::Result<S::Ok, S::Error> {
    z.as_ref()
        .map(|v| v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>())
        .serialize(s)
}

fn cx_from(field: &str, v: &Value) -> Result<Complex64> {
    let bad = || Error::invalid(field, "expected a complex number [re, im]");
    let a = v.as_array().ok_or_else(bad)?;
    if a.len() != 2 {
        return Err(bad());
    }
    let re = a[0].as_f64().ok_or_else(bad)?;
    let im = a[1].as_f64().ok_or_else(bad)?;
    if !(re.is_finite() && im.is_finite()) {
        return Err(bad());
    }
    Ok(Complex64::new(re, im))
}

fn cx_list(field: &str, v: &Value) -> Result<Vec<Complex64>> {
    let a = v
        .as_array()
        .ok_or_else(|| Error::invalid(field, "expected a list of [re, im] pairs"))?;
    a.iter().map(|x| cx_from(field, x)).collect()
}

fn uint(obj: &Map<String, Value>, field: &str) -> Result<u64> {
    obj.get(field)
        .ok_or_else(|| Error::invalid(field, "missing"))?
        .as_u64()
        .ok_or_else(|| Error::invalid(field, "expected a non-negative integer"))
}

/// Parses `"RE,IM"`.
pub fn parse_cx(s: &str) -> std::result::Result<Complex64, String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("`{s}` is not of the form RE,IM"))?;
    let re: f64 = a.trim().parse().map_err(|_| format!("bad real part in `{s}`"))?;
    let im: f64 = b.trim().parse().map_err(|_| format!("bad imaginary part in `{s}`"))?;
    Ok(Complex64::new(re, im))
}

/// Parses `"RE,IM;RE,IM;..."`.
pub fn parse_cx_list(s: &str) -> std::result::Result<Vec<Complex64>, String> {
    s.split(';').filter(|t| !t.trim().is_empty()).map(parse_cx).collect()
}

/// Builds a family from its short name. `n` is required for `xxx` and `bb`
/// and must be 2 (or absent) for the fixed-size families; `tau` is required
/// for `bb` and `c` for `7v`.
pub fn family_from(
    name: &str,
    n: Option<usize>,
    tau: Option<Complex64>,
    c: Option<Complex64>,
) -> Result<RMatrixFamily> {
    let fixed2 = |n: Option<usize>| match n {
        None | Some(2) => Ok(()),
        Some(k) => Err(Error::invalid("N", format!("family {name} has N = 2, got {k}"))),
    };
    let need_n = || n.ok_or_else(|| Error::invalid("N", format!("required for family {name}")));
    match name {
        "xxx" => RMatrixFamily::yang(need_n()?),
        "11v" => fixed2(n).map(|_| RMatrixFamily::eleven_vertex()),
        "xxz" => fixed2(n).map(|_| RMatrixFamily::six_vertex_xxz()),
        "7v" => {
            fixed2(n)?;
            let c = c.ok_or_else(|| Error::invalid("C", "required for family 7v"))?;
            Ok(RMatrixFamily::seven_vertex(c))
        }
        "bb" => {
            let tau = tau.ok_or_else(|| Error::invalid("tau", "required for family bb"))?;
            RMatrixFamily::baxter_belavin(need_n()?, tau)
        }
        other => Err(Error::invalid("family", format!("unknown family `{other}`, expected one of {FAMILIES}"))),
    }
}

impl ModelConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::invalid("config", format!("not valid JSON: {e}")))?;
        Self::from_value(&v)
    }

    pub fn from_value(v: &Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::invalid("config", "expected a JSON object"))?;
        const KNOWN: [&str; 10] = ["family", "N", "M", "tau", "C", "nu", "spin_mode", "seed", "q0", "p0"];
        if let Some(k) = obj.keys().find(|k| !KNOWN.contains(&k.as_str())) {
            return Err(Error::invalid(k, "unknown field"));
        }
        let family = obj
            .get("family")
            .ok_or_else(|| Error::invalid("family", "missing"))?
            .as_str()
            .ok_or_else(|| Error::invalid("family", "expected a string"))?
            .to_string();
        let n = uint(obj, "N")? as usize;
        let m = uint(obj, "M")? as usize;
        if n == 0 {
            return Err(Error::invalid("N", "must be >= 1"));
        }
        if m == 0 {
            return Err(Error::invalid("M", "must be >= 1"));
        }
        let tau = obj.get("tau").map(|t| cx_from("tau", t)).transpose()?;
        let c = obj.get("C").map(|t| cx_from("C", t)).transpose()?;
        let nu_v = obj.get("nu").ok_or_else(|| Error::invalid("nu", "missing"))?;
        let nu = match nu_v.as_array().and_then(|a| a.first()).map(Value::is_array) {
            Some(true) => {
                let list = cx_list("nu", nu_v)?;
                if list.len() != m {
                    return Err(Error::invalid("nu", format!("per-site list has {} entries, M = {m}", list.len())));
                }
                let nu = list[0];
                if list.iter().any(|x| *x != nu) {
                    return Err(Error::invalid(
                        "nu",
                        "per-site values differ; the Lax equation holds only on the constraint surface tr S^ii = nu for one common nu",
                    ));
                }
                nu
            }
            _ => cx_from("nu", nu_v)?,
        };
        let spin_mode = match obj.get("spin_mode").and_then(Value::as_str) {
            Some("rank1") => SpinMode::Rank1,
            Some("general") => SpinMode::General,
            _ => return Err(Error::invalid("spin_mode", "expected \"rank1\" or \"general\"")),
        };
        let seed = uint(obj, "seed")?;
        let q0 = obj.get("q0").map(|x| cx_list("q0", x)).transpose()?;
        let p0 = obj.get("p0").map(|x| cx_list("p0", x)).transpose()?;
        for (name, v) in [("q0", &q0), ("p0", &p0)] {
            if let Some(v) = v {
                if v.len() != m {
                    return Err(Error::invalid(name, format!("has {} entries, M = {m}", v.len())));
                }
            }
        }
        let cfg = Self {
            family,
            n,
            m,
            tau,
            c,
            nu,
            spin_mode,
            seed,
            q0,
            p0,
        };
        cfg.family()?;
        Ok(cfg)
    }

    pub fn family(&self) -> Result<RMatrixFamily> {
        family_from(&self.family, Some(self.n), self.tau, self.c)
    }

    /// Spin from `seed`; positions and momenta from `q0`/`p0` or a second
    /// stream of the same seed.
    pub fn build_state(&self) -> Result<PhaseState> {
        let fam = Arc::new(self.family()?);
        let spin = match self.spin_mode {
            SpinMode::Rank1 => spin_rank1(self.m, self.n, self.nu, self.seed)?,
            SpinMode::General => spin_general(self.m, self.n, self.nu, self.seed)?,
        };
        let mut rng = SampleRng::new(self.seed ^ CONFIG_PHASE_STREAM);
        let q = match &self.q0 {
            Some(q) => q.clone(),
            None => random_positions(&fam, self.m, &mut rng),
        };
        let p = match &self.p0 {
            Some(p) => p.clone(),
            None => (0..self.m).map(|_| rng.centered(0.5)).collect(),
        };
        PhaseState::new(fam, q, p, spin).map_err(|e| match e {
            Error::PoleProximity { .. } => Error::invalid("q0", format!("positions collide: {e}")),
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> Value {
        serde_json::json!({
            "family": "xxx", "N": 2, "M": 2, "nu": [1.0, 0.0],
            "spin_mode": "general", "seed": 7
        })
    }

    fn field_of(e: Error) -> String {
        match e {
            Error::InvalidParameter { field, .. } => field,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parses_minimal() {
        let c = ModelConfig::from_value(&base()).unwrap();
        assert_eq!((c.n, c.m, c.seed), (2, 2, 7));
        let st = c.build_state().unwrap();
        assert!(st.spin().on_constraints(Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn same_seed_same_state() {
        let c = ModelConfig::from_value(&base()).unwrap();
        let (a, b) = (c.build_state().unwrap(), c.build_state().unwrap());
        assert_eq!(a.q(), b.q());
        assert_eq!(a.spin().big(), b.spin().big());
    }

    #[test]
    fn errors_name_the_field() {
        let cases: Vec<(&str, Value)> = vec![
            ("family", serde_json::json!("nope")),
            ("N", serde_json::json!(-1)),
            ("M", serde_json::json!(0)),
            ("nu", serde_json::json!([[1.0, 0.0], [2.0, 0.0]])),
            ("nu", serde_json::json!("one")),
            ("spin_mode", serde_json::json!("full")),
            ("seed", serde_json::json!(1.5)),
            ("q0", serde_json::json!([[0.0, 0.0]])),
            ("q0", serde_json::json!([[0.3, 0.0], [0.3, 0.0]])),
        ];
        for (field, val) in cases {
            let mut v = base();
            v[field] = val;
            let r = ModelConfig::from_value(&v).and_then(|c| c.build_state().map(|_| c));
            assert_eq!(field_of(r.unwrap_err()), field);
        }
        let mut v = base();
        v["extra"] = serde_json::json!(1);
        assert_eq!(field_of(ModelConfig::from_value(&v).unwrap_err()), "extra");
        let mut v = base();
        v.as_object_mut().unwrap().remove("seed");
        assert_eq!(field_of(ModelConfig::from_value(&v).unwrap_err()), "seed");
    }

    #[test]
    fn per_site_nu() {
        let mut v = base();
        v["nu"] = serde_json::json!([[0.5, 0.1], [0.5, 0.1]]);
        assert_eq!(ModelConfig::from_value(&v).unwrap().nu, Complex64::new(0.5, 0.1));
    }

    #[test]
    fn family_requirements() {
        assert_eq!(field_of(family_from("bb", Some(2), None, None).unwrap_err()), "tau");
        assert_eq!(field_of(family_from("7v", None, None, None).unwrap_err()), "C");
        assert_eq!(field_of(family_from("11v", Some(3), None, None).unwrap_err()), "N");
        assert_eq!(field_of(family_from("xxx", None, None, None).unwrap_err()), "N");
        assert!(family_from("7v", None, None, Some(Complex64::new(0.7, 0.2))).is_ok());
    }

    #[test]
    fn complex_flags() {
        assert_eq!(parse_cx("-0.5,2").unwrap(), Complex64::new(-0.5, 2.0));
        assert!(parse_cx("1").is_err());
        assert_eq!(parse_cx_list("0.1,0.2;0.3,-0.4").unwrap().len(), 2);
    }

    #[test]
    fn echo_round_trips() {
        let c = ModelConfig::from_value(&base()).unwrap();
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(ModelConfig::from_value(&v).unwrap(), c);
    }
}
