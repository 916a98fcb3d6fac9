//! Experiment configuration files and their content digest.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::filtration::WeightFiltration;
use crate::lie_core::{value_to_q, NilpotentAlgebra};
use crate::measures::MeasureSpec;
use crate::walk_sim::{measure_drift, WalkConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Builtin name or an inline algebra object.
    pub algebra: Value,
    /// Filtration drift; defaults to the mean of the measure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<Vec<Value>>,
    pub measure: Value,
    pub experiment: String,
    #[serde(default)]
    pub params: Value,
    #[serde(default)]
    pub seed: u64,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N", default)]
    pub n_grid: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// SHA-256 of the compact JSON with object keys sorted at every level.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(canonical(&self.to_json()).as_bytes()))
    }

    pub fn build_algebra(&self) -> Result<NilpotentAlgebra> {
        match &self.algebra {
            Value::String(name) => NilpotentAlgebra::builtin(name),
            v @ Value::Object(_) => NilpotentAlgebra::from_json_value(v),
            _ => Err(Error::Parse(
                "'algebra' must be a builtin name or an object".into(),
            )),
        }
    }

    pub fn build_measure(&self) -> Result<MeasureSpec> {
        MeasureSpec::from_json(&self.measure)
    }

    pub fn build_filtration(
        &self,
        alg: NilpotentAlgebra,
        measure: &MeasureSpec,
    ) -> Result<WeightFiltration> {
        let drift = match &self.drift {
            Some(d) => d.iter().map(value_to_q).collect::<Result<Vec<_>>>()?,
            None => measure_drift(measure)?,
        };
        WeightFiltration::new(Arc::new(alg), &drift)
    }

    /// Walk configuration at the first grid size.
    pub fn walk_config(&self) -> Result<WalkConfig> {
        let alg = self.build_algebra()?;
        let measure = self.build_measure()?;
        let f = self.build_filtration(alg, &measure)?;
        let n = *self
            .n_grid
            .first()
            .ok_or_else(|| Error::InvalidArgument("config needs a non-empty 'N' grid".into()))?;
        WalkConfig::with_filtration(Arc::new(f), Arc::new(measure), n, self.m, self.seed)
    }

    pub fn param(&self, key: &str) -> Option<&Value> {
        self.params.get(key)
    }

    pub fn param_f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.param(key) {
            None => Ok(default),
            Some(v) => v
                .as_f64()
                .ok_or_else(|| Error::Parse(format!("param '{key}' must be a number"))),
        }
    }

    pub fn param_usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.param(key) {
            None => Ok(default),
            Some(v) => v.as_u64().map(|x| x as usize).ok_or_else(|| {
                Error::Parse(format!("param '{key}' must be a non-negative integer"))
            }),
        }
    }

    pub fn param_vec(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.param(key) {
            None => Ok(None),
            Some(Value::Array(a)) => a
                .iter()
                .map(|x| {
                    x.as_f64()
                        .ok_or_else(|| Error::Parse(format!("param '{key}' must hold numbers")))
                })
                .collect::<Result<_>>()
                .map(Some),
            Some(_) => Err(Error::Parse(format!("param '{key}' must be an array"))),
        }
    }
}

fn canonical(v: &Value) -> String {
    match v {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            let body: Vec<String> = keys
                .iter()
                .map(|k| format!("{}:{}", Value::String((*k).clone()), canonical(&map[*k])))
                .collect();
            format!("{{{}}}", body.join(","))
        }
        Value::Array(a) => format!(
            "[{}]",
            a.iter().map(canonical).collect::<Vec<_>>().join(",")
        ),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = r#"{"algebra":"heisenberg3","measure":{"kind":"gaussian_layers","cov":[[1,0,0],[0,1,0],[0,0,1]]},
        "experiment":"llt","params":{"side":1.0,"estimator":"conditional"},"seed":7,"M":5000,"N":[16,32]}"#;

    #[test]
    fn round_trip_and_digest() {
        let c = ExperimentConfig::from_json_str(TEXT).unwrap();
        let again = ExperimentConfig::from_json_str(&c.to_json().to_string()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.digest(), again.digest());
        assert_eq!(c.digest().len(), 64);
        let reordered = r#"{"N":[16,32],"M":5000,"seed":7,"params":{"estimator":"conditional","side":1.0},"experiment":"llt",
            "measure":{"cov":[[1,0,0],[0,1,0],[0,0,1]],"kind":"gaussian_layers"},"algebra":"heisenberg3"}"#;
        assert_eq!(
            ExperimentConfig::from_json_str(reordered).unwrap().digest(),
            c.digest()
        );
        let mut other = c.clone();
        other.seed = 8;
        assert_ne!(other.digest(), c.digest());
    }

    #[test]
    fn builds_walk() {
        let c = ExperimentConfig::from_json_str(TEXT).unwrap();
        let w = c.walk_config().unwrap();
        assert_eq!((w.n, w.m, w.seed, w.hom_dim()), (16, 5000, 7, 4));
        assert_eq!(c.param_f64("side", 2.0).unwrap(), 1.0);
        assert_eq!(c.param_usize("missing", 3).unwrap(), 3);
        assert!(c.param_f64("estimator", 0.0).is_err());
    }

    #[test]
    fn explicit_drift() {
        let mut c = ExperimentConfig::from_json_str(TEXT).unwrap();
        c.drift = Some(vec![Value::from(1), Value::from(0), Value::from(0)]);
        let alg = c.build_algebra().unwrap();
        let m = c.build_measure().unwrap();
        assert_eq!(c.build_filtration(alg, &m).unwrap().hom_dim(), 5);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            ExperimentConfig::from_json_str("{"),
            Err(Error::Parse(_))
        ));
        assert!(ExperimentConfig::from_json_str(
            r#"{"algebra":"heisenberg3","measure":{},"experiment":"x","M":1,"bogus":1}"#
        )
        .is_err());
        let c = ExperimentConfig::from_json_str(
            r#"{"algebra":"nope","measure":{"kind":"product","laws":[]},"experiment":"x","M":1}"#,
        )
        .unwrap();
        assert!(c.build_algebra().is_err());
        assert!(c.walk_config().is_err());
    }
}
