//! Experiment configuration files (JSON, rationals as `"num/den"`).
//!
//! ```json
//! {
//!   "subcarriers": [{"n": 1, "k": 1}, {"n": 1, "k": 3}],
//!   "p": "1/2",
//!   "scheme": "symmetric",
//!   "N_B": 5000, "blocks": 20, "trials": 10, "seed": 1
//! }
//! ```
//!
//! Exactly one of `subcarriers`, `gains` (`[{"gD": .., "gI": ..}]`) or
//! `betas` must be present. `distribution` may replace `p` for LD configs.

use std::path::Path;

use serde_json::Value;

use crate::channel::SubcarrierConfig;
use crate::error::ConfigError;
use crate::gn::GnSubcarrier;
use crate::harness::SchemeSpec;
use crate::scalar::{is_unit_interval, rat, rational_from_json, Rational};
use crate::schemes::SchemeTarget;
use crate::state::JointStateDistribution;

#[derive(Clone, Debug, PartialEq)]
pub enum Channels {
    Ld(Vec<SubcarrierConfig>),
    Gn(Vec<GnSubcarrier>),
    Betas(Vec<Rational>),
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub channels: Channels,
    /// One or more probabilities; several only make sense for sweeps.
    pub p: Vec<Rational>,
    pub distribution: Option<JointStateDistribution>,
    pub target: SchemeTarget,
    pub block_len: usize,
    pub blocks: usize,
    pub trials: usize,
    pub seed: u64,
    /// Relative tolerance of the simulate verdict.
    pub tolerance: Rational,
    /// Statistical margin for the region check; default 1% of `Σn`.
    pub margin: Option<Rational>,
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

fn count(obj: &serde_json::Map<String, Value>, key: &str, default: u64) -> Result<u64, ConfigError> {
    match obj.get(key) {
        None => Ok(default),
        Some(v) => match v.as_u64() {
            Some(x) => Ok(x),
            None => Err(invalid(format!("`{key}` must be a non-negative integer"))),
        },
    }
}

fn positive(obj: &serde_json::Map<String, Value>, key: &str, default: u64) -> Result<usize, ConfigError> {
    let v = count(obj, key, default)?;
    if v == 0 {
        return Err(invalid(format!("`{key}` must be positive")));
    }
    Ok(v as usize)
}

fn gain(obj: &Value, key: &str) -> Result<f64, ConfigError> {
    match obj.get(key) {
        Some(Value::Number(n)) => n.as_f64().ok_or_else(|| invalid(format!("bad `{key}`"))),
        Some(v @ Value::String(_)) => Ok(crate::scalar::Scalar::to_f64(&rational_from_json(v)?)),
        _ => Err(invalid(format!("gain entry needs `{key}`"))),
    }
}

impl ExperimentConfig {
    pub fn from_json(v: &Value) -> Result<Self, ConfigError> {
        let obj = v.as_object().ok_or_else(|| invalid("config must be a JSON object"))?;
        let present: Vec<&str> = ["subcarriers", "gains", "betas"]
            .into_iter()
            .filter(|k| obj.contains_key(*k))
            .collect();
        if present.len() != 1 {
            return Err(invalid(format!(
                "exactly one of subcarriers, gains, betas is required, found {present:?}"
            )));
        }
        let list = |key: &str| -> Result<&Vec<Value>, ConfigError> {
            let l = obj[key].as_array().ok_or_else(|| invalid(format!("`{key}` must be an array")))?;
            if l.is_empty() {
                return Err(invalid(format!("`{key}` is empty")));
            }
            Ok(l)
        };
        let channels = match present[0] {
            "subcarriers" => {
                let mut cfgs = Vec::new();
                for s in list("subcarriers")? {
                    let n = s.get("n").and_then(Value::as_u64);
                    let k = s.get("k").and_then(Value::as_u64);
                    let (Some(n), Some(k)) = (n, k) else {
                        return Err(invalid("subcarrier entries need integer `n` and `k`"));
                    };
                    cfgs.push(SubcarrierConfig::checked(n as usize, k as usize).map_err(invalid)?);
                }
                Channels::Ld(cfgs)
            }
            "gains" => {
                let mut gains = Vec::new();
                for g in list("gains")? {
                    gains.push(GnSubcarrier::new(gain(g, "gD")?, gain(g, "gI")?).map_err(invalid)?);
                }
                Channels::Gn(gains)
            }
            _ => {
                let mut betas = Vec::new();
                for b in list("betas")? {
                    let b = rational_from_json(b)?;
                    if b < rat(0, 1) {
                        return Err(invalid("betas must be non-negative"));
                    }
                    betas.push(b);
                }
                Channels::Betas(betas)
            }
        };
        let m = match &channels {
            Channels::Ld(c) => c.len(),
            Channels::Gn(g) => g.len(),
            Channels::Betas(b) => b.len(),
        };
        let distribution = match obj.get("distribution") {
            Some(d) => {
                let d = JointStateDistribution::from_json(d)?;
                if d.m() != m {
                    return Err(invalid(format!("distribution has M = {}, config has {m} subcarriers", d.m())));
                }
                Some(d)
            }
            None => None,
        };
        let mut p = match obj.get("p") {
            Some(Value::Array(ps)) => ps.iter().map(rational_from_json).collect::<Result<Vec<_>, _>>()?,
            Some(v) => vec![rational_from_json(v)?],
            None => Vec::new(),
        };
        if let Some(d) = &distribution {
            if p.is_empty() {
                p.push(d.p().clone());
            } else if p.len() != 1 || &p[0] != d.p() {
                return Err(invalid("`p` disagrees with the distribution's marginal"));
            }
        }
        if p.is_empty() {
            return Err(invalid("`p` or `distribution` is required"));
        }
        if let Some(bad) = p.iter().find(|p| !is_unit_interval(p)) {
            return Err(invalid(format!("p = {bad} outside [0, 1]")));
        }
        let target = match obj.get("scheme") {
            None => SchemeTarget::Symmetric,
            Some(Value::String(s)) => s.parse().map_err(invalid)?,
            Some(_) => return Err(invalid("`scheme` must be a string")),
        };
        let tolerance = match obj.get("tolerance") {
            Some(t) => rational_from_json(t)?,
            None => rat(3, 100),
        };
        let margin = obj.get("margin").map(rational_from_json).transpose()?;
        Ok(ExperimentConfig {
            channels,
            p,
            distribution,
            target,
            block_len: positive(obj, "N_B", 1000)?,
            blocks: positive(obj, "blocks", 10)?,
            trials: positive(obj, "trials", 10)?,
            seed: count(obj, "seed", 0)?,
            tolerance,
            margin,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&serde_json::from_str(&text)?)
    }

    /// The single probability of a non-sweep command.
    pub fn single_p(&self) -> Result<&Rational, ConfigError> {
        match self.p.as_slice() {
            [p] => Ok(p),
            _ => Err(invalid("this command takes a single `p`")),
        }
    }

    pub fn distribution_for(&self, m: usize) -> Result<JointStateDistribution, ConfigError> {
        match &self.distribution {
            Some(d) => Ok(d.clone()),
            None => Ok(JointStateDistribution::make_iid(m, self.single_p()?.clone())),
        }
    }

    /// The simulation described by an LD config.
    pub fn scheme_spec(&self) -> Result<SchemeSpec, ConfigError> {
        let Channels::Ld(cfgs) = &self.channels else {
            return Err(invalid("simulation needs `subcarriers`"));
        };
        let dist = self.distribution_for(cfgs.len())?;
        let spec = match (self.target, cfgs.as_slice()) {
            (SchemeTarget::Symmetric, [c]) if self.distribution.is_none() => {
                SchemeSpec::single(c.n(), c.k(), dist.p().clone(), self.block_len, self.blocks)
            }
            (SchemeTarget::Symmetric, _) => SchemeSpec::Multicarrier {
                cfgs: cfgs.clone(),
                dist,
                block_len: self.block_len,
                blocks: self.blocks,
            },
            (target, _) => SchemeSpec::Corner {
                cfgs: cfgs.clone(),
                dist,
                target,
                block_len: self.block_len,
                blocks: self.blocks,
            },
        };
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn toy_config() {
        let c = ExperimentConfig::from_json(&json!({
            "subcarriers": [{"n": 1, "k": 1}, {"n": 1, "k": 3}],
            "p": "1/2", "N_B": 500, "blocks": 4, "trials": 2, "seed": 3
        }))
        .unwrap();
        assert_eq!(c.single_p().unwrap(), &rat(1, 2));
        let spec = c.scheme_spec().unwrap();
        assert_eq!(spec.name(), "multicarrier");
        assert_eq!(spec.blocks(), (500, 4));
    }

    #[test]
    fn single_carrier_picks_regime() {
        let c = ExperimentConfig::from_json(&json!({"subcarriers": [{"n": 1, "k": 3}], "p": 0.5})).unwrap();
        assert_eq!(c.scheme_spec().unwrap().name(), "bursty-relay");
        let c = ExperimentConfig::from_json(&json!({"subcarriers": [{"n": 2, "k": 1}], "p": "1/2", "scheme": "q1"})).unwrap();
        assert_eq!(c.scheme_spec().unwrap().name(), "corner-Q1");
    }

    #[test]
    fn rejects_malformed_configs() {
        let cases = [
            json!({"p": "1/2"}),
            json!({"subcarriers": [{"n": 1, "k": 1}], "betas": ["1"], "p": "1/2"}),
            json!({"subcarriers": [{"n": 0, "k": 1}], "p": "1/2"}),
            json!({"subcarriers": [{"n": 1, "k": 1}], "p": "3/2"}),
            json!({"subcarriers": [{"n": 1, "k": 1}]}),
            json!({"subcarriers": [{"n": 1, "k": 1}], "p": "1/2", "trials": 0}),
            json!({"subcarriers": [{"n": 1, "k": 1}], "p": "1/2", "scheme": "X9"}),
            json!({"subcarriers": [{"n": 1, "k": 1}], "distribution": {"kind": "iid", "M": 2, "p": "1/2"}}),
            json!([1, 2]),
        ];
        for c in cases {
            assert!(ExperimentConfig::from_json(&c).is_err(), "{c}");
        }
    }

    #[test]
    fn distribution_supplies_p() {
        let c = ExperimentConfig::from_json(&json!({
            "subcarriers": [{"n": 1, "k": 1}, {"n": 1, "k": 3}],
            "distribution": {"kind": "identical", "M": 2, "p": "1/2"}
        }))
        .unwrap();
        assert_eq!(c.p, vec![rat(1, 2)]);
        let spec = c.scheme_spec().unwrap();
        assert_eq!(spec.distribution().kind().as_str(), "identical");
    }

    #[test]
    fn gains_and_betas() {
        let g = ExperimentConfig::from_json(&json!({"gains": [{"gD": 100.0, "gI": "10"}], "p": "1/4"})).unwrap();
        assert!(matches!(g.channels, Channels::Gn(ref v) if v.len() == 1));
        let b = ExperimentConfig::from_json(&json!({"betas": ["3"], "p": ["0", "1/2", "1"]})).unwrap();
        assert_eq!(b.p.len(), 3);
        assert!(b.single_p().is_err());
    }
}
