//! String-keyed construction of families from JSON parameters.
//!
//! | key                    | parameters                                                          |
//! |------------------------|---------------------------------------------------------------------|
//! | `alpha-wiener`         | `alpha`, `T`                                                        |
//! | `general-alpha-wiener` | `alpha` (expr), `T`, optional `alpha_at_T`, `deltas: [d1, d2]`      |
//! | `ou-bridge`            | `q`, `sigma` (expr or number), `a`, `b`, `T`                        |
//! | `f-wiener`             | `distribution`: `uniform` (`T`), `power` (`alpha`, `T`), `exponential` (`rate`, `t_max`), `custom` (`f`, `F`, `T` or `"inf"`, `t_max`) |
//! | `weighted`             | `w` (expr, default 1), `bridge` (bool), `t_max`                    |
//! | `zero-area`, `glued`   | none                                                                |
//! | `custom`               | `phi`, `psi`, `sigma` (expr), `T` (number or `"inf"`), `xi`, `t_max` |

use std::sync::Arc;

use serde_json::{Map, Value};

use super::{
    alpha_wiener_spec, counterexample_kernel, f_wiener_spec, general_alpha_spec,
    ou_bridge_kernel, weighted_spec, AlphaWienerParams, CounterexampleKind, FWienerParams, Family,
    GeneralAlphaParams, OuBridgeParams, WeightParams,
};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::process::{build_time_change, CovarianceKernel, Func, Horizon, ProcessSpec, DEFAULT_QUAD_TOL};

pub const FAMILY_KEYS: [&str; 8] = [
    "alpha-wiener",
    "general-alpha-wiener",
    "ou-bridge",
    "f-wiener",
    "weighted",
    "zero-area",
    "glued",
    "custom",
];

/// A function of `t` given as a JSON number or expression string, with its
/// value when it is constant and its source text.
pub fn parse_func(v: &Value) -> Result<(Func, Option<f64>, String)> {
    match v {
        Value::Number(n) => {
            let c = n.as_f64().ok_or_else(|| Error::Invalid(format!("bad number {n}")))?;
            Ok((Arc::new(move |_| c), Some(c), n.to_string()))
        }
        Value::String(s) => {
            let e = Expr::parse(s)?;
            let src = e.source().to_string();
            let constant = e.is_constant().then(|| e.eval(0.0));
            Ok((e.into_func(), constant, src))
        }
        other => Err(Error::Invalid(format!("expected a number or expression string, got {other}"))),
    }
}

struct Params<'a> {
    family: &'a str,
    map: Map<String, Value>,
}

impl<'a> Params<'a> {
    fn new(family: &'a str, v: &Value, allowed: &[&str]) -> Result<Self> {
        let map = match v {
            Value::Null => Map::new(),
            Value::Object(m) => m.clone(),
            other => return Err(Error::Invalid(format!("parameters must be a JSON object, got {other}"))),
        };
        for key in map.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(Error::Invalid(format!(
                    "unknown parameter '{key}' for {family}; expected one of {allowed:?}"
                )));
            }
        }
        Ok(Params { family, map })
    }

    fn get(&self, key: &str) -> Option<&Value> {
        self.map.get(key)
    }

    fn num(&self, key: &str) -> Result<f64> {
        self.num_or(key, None)
    }

    fn num_or(&self, key: &str, default: Option<f64>) -> Result<f64> {
        match self.get(key) {
            Some(Value::Number(n)) => Ok(n.as_f64().unwrap_or(f64::NAN)),
            Some(other) => Err(Error::Invalid(format!("{}: '{key}' must be a number, got {other}", self.family))),
            None => default.ok_or_else(|| Error::Invalid(format!("{}: missing parameter '{key}'", self.family))),
        }
    }

    fn func(&self, key: &str, default: Option<f64>) -> Result<(Func, Option<f64>, String)> {
        match (self.get(key), default) {
            (Some(v), _) => parse_func(v),
            (None, Some(c)) => Ok((Arc::new(move |_| c), Some(c), c.to_string())),
            (None, None) => Err(Error::Invalid(format!("{}: missing parameter '{key}'", self.family))),
        }
    }

    fn horizon(&self) -> Result<Horizon> {
        match self.get("T") {
            Some(Value::String(s)) if s == "inf" => {
                Ok(Horizon::Infinite { probe_max: self.num_or("t_max", Some(10.0))? })
            }
            _ => Ok(Horizon::finite(self.num("T")?)),
        }
    }
}

/// Builds the family registered under `name` from JSON parameters. Unknown
/// parameter keys are rejected.
pub fn build_family(name: &str, params: &Value) -> Result<Family> {
    match name {
        "alpha-wiener" => {
            let p = Params::new(name, params, &["alpha", "T"])?;
            alpha_wiener_spec(&AlphaWienerParams { alpha: p.num("alpha")?, t_end: p.num("T")? })
        }
        "general-alpha-wiener" => {
            let p = Params::new(name, params, &["alpha", "T", "alpha_at_T", "deltas"])?;
            let (alpha_fn, _, _) = p.func("alpha", None)?;
            let alpha_at_t = match p.get("alpha_at_T") {
                Some(_) => Some(p.num("alpha_at_T")?),
                None => None,
            };
            let deltas = match p.get("deltas") {
                None => None,
                Some(Value::Array(a)) if a.len() == 2 => {
                    let d: Vec<f64> = a.iter().filter_map(Value::as_f64).collect();
                    if d.len() != 2 {
                        return Err(Error::Invalid("deltas must be two numbers".into()));
                    }
                    Some((d[0], d[1]))
                }
                Some(other) => return Err(Error::Invalid(format!("deltas must be [d1, d2], got {other}"))),
            };
            general_alpha_spec(&GeneralAlphaParams { alpha_fn, t_end: p.num("T")?, alpha_at_t, deltas })
        }
        "ou-bridge" => {
            let p = Params::new(name, params, &["q", "sigma", "a", "b", "T"])?;
            let (q_fn, qc, _) = p.func("q", Some(0.0))?;
            let (sigma_fn, sc, _) = p.func("sigma", Some(1.0))?;
            let (a, b, t_end) = (p.num_or("a", Some(0.0))?, p.num_or("b", Some(0.0))?, p.num("T")?);
            let op = match (qc, sc) {
                (Some(q), Some(s)) => OuBridgeParams::constant(q, s, a, b, t_end),
                _ => OuBridgeParams::general(q_fn, sigma_fn, a, b, t_end),
            };
            ou_bridge_kernel(&op)
        }
        "f-wiener" => {
            let p = Params::new(name, params, &["distribution", "T", "alpha", "rate", "f", "F", "t_max"])?;
            let dist = match p.get("distribution") {
                None => "uniform",
                Some(Value::String(s)) => s.as_str(),
                Some(other) => return Err(Error::Invalid(format!("distribution must be a string, got {other}"))),
            };
            let fp = match dist {
                "uniform" => FWienerParams::uniform(p.num_or("T", Some(1.0))?),
                "power" => FWienerParams::power(p.num("alpha")?, p.num_or("T", Some(1.0))?),
                "exponential" => {
                    FWienerParams::exponential(p.num_or("rate", Some(1.0))?, p.num_or("t_max", Some(10.0))?)
                }
                "custom" => {
                    let (f, _, fs) = p.func("f", None)?;
                    let (cdf, _, cs) = p.func("F", None)?;
                    let mut fp = FWienerParams::new(f, cdf, p.horizon()?);
                    fp.label = format!("f-wiener(f={fs}, F={cs})");
                    fp
                }
                other => {
                    return Err(Error::Invalid(format!(
                        "unknown distribution '{other}'; expected uniform, power, exponential or custom"
                    )))
                }
            };
            if let Horizon::Finite { t } = fp.horizon {
                if !(t.is_finite() && t > 0.0) {
                    return Err(Error::Invalid(format!("T must be positive, got {t}")));
                }
            }
            f_wiener_spec(&fp)
        }
        "weighted" => {
            let p = Params::new(name, params, &["w", "bridge", "t_max"])?;
            let (w, _, src) = p.func("w", Some(1.0))?;
            let bridge = match p.get("bridge") {
                None => false,
                Some(Value::Bool(b)) => *b,
                Some(other) => return Err(Error::Invalid(format!("bridge must be a boolean, got {other}"))),
            };
            let mut wp = WeightParams::new(w, bridge);
            wp.probe_max = p.num_or("t_max", Some(10.0))?;
            wp.label = format!("w={src}");
            weighted_spec(&wp)
        }
        "zero-area" | "glued" => {
            Params::new(name, params, &[])?;
            let kind = if name == "zero-area" { CounterexampleKind::ZeroArea } else { CounterexampleKind::Glued };
            Ok(Family {
                name: name.into(),
                spec: None,
                kernel: counterexample_kernel(kind).kernel,
                maps: None,
                epsilon: None,
                bound_limit: None,
                closed_form: true,
                general_bound: None,
            })
        }
        "custom" => {
            let p = Params::new(name, params, &["phi", "psi", "sigma", "T", "xi", "t_max"])?;
            let (phi, _, ps) = p.func("phi", None)?;
            let (psi, _, _) = p.func("psi", Some(0.0))?;
            let (sigma, _, ss) = p.func("sigma", None)?;
            let spec = ProcessSpec::new(
                format!("custom(phi={ps}, sigma={ss})"),
                p.horizon()?,
                phi,
                psi,
                sigma,
                p.num_or("xi", Some(0.0))?,
            )?;
            let maps = build_time_change(&spec, DEFAULT_QUAD_TOL)?;
            let kernel = CovarianceKernel::from_spec(&spec, &maps);
            Ok(Family {
                name: name.into(),
                spec: Some(spec),
                kernel,
                maps: Some(maps),
                epsilon: None,
                bound_limit: None,
                closed_form: false,
                general_bound: None,
            })
        }
        other => Err(Error::Invalid(format!(
            "unknown family '{other}'; expected one of {}",
            FAMILY_KEYS.join(", ")
        ))),
    }
}
