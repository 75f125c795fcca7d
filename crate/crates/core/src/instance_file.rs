//! The JSON instance file: `{"type": ..., "params": {...}, "delta": [...]}`.
//!
//! Probabilities may be JSON numbers or strings such as `"5/162"` or
//! `"0.125"`; both are read exactly. QM angles are in degrees.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{
    BellLocalParams, BellRealParams, DeterministicInstance, DetectorProbs, GenericParams, ModelInstance, QmAngles,
};
use crate::scalar::{parse_rational, Rational, Scalar};

/// A number read exactly from either a JSON number or a string.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactNumber(pub Rational);

impl<'de> Deserialize<'de> for ExactNumber {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(serde_json::Number),
            Text(String),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Number(n) => n.to_string(),
            Raw::Text(s) => s,
        };
        parse_rational(&text).map(ExactNumber).map_err(serde::de::Error::custom)
    }
}

fn exact<const N: usize>(v: [ExactNumber; N]) -> [Rational; N] {
    v.map(|n| n.0)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct QmRaw {
    theta1: Option<ExactNumber>,
    theta2: ExactNumber,
    theta3: ExactNumber,
    theta4: ExactNumber,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RhoRaw {
    rho: [ExactNumber; 16],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LocalRaw {
    alpha: [ExactNumber; 4],
    beta: [ExactNumber; 4],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GammaRaw {
    gamma: [ExactNumber; 16],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SelectionRaw {
    selection: [usize; 4],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EmptyRaw {}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileRaw {
    #[serde(rename = "type")]
    kind: String,
    #[serde(default)]
    params: Option<serde_json::Value>,
    delta: Option<[ExactNumber; 4]>,
}

fn params<T: serde::de::DeserializeOwned>(kind: &str, value: Option<serde_json::Value>) -> Result<T> {
    let value = value.unwrap_or_else(|| serde_json::Value::Object(Default::default()));
    serde_json::from_value(value).map_err(|e| Error::Instance(format!("{kind} params: {e}")))
}

/// A parsed, validated instance file.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSpec {
    pub instance: ModelInstance<Rational>,
    pub delta: DetectorProbs<Rational>,
}

impl InstanceSpec {
    /// γ in exact arithmetic. QM probabilities come from floating-point
    /// trigonometry and are converted exactly from those floats.
    pub fn gamma_exact(&self) -> GenericParams<Rational> {
        self.instance.to_generic()
    }

    pub fn gamma_f64(&self) -> GenericParams<f64> {
        match &self.instance {
            ModelInstance::Qm(a) => crate::model::qm_gamma(a),
            other => other.to_generic().to_f64(),
        }
    }

    pub fn delta_f64(&self) -> DetectorProbs<f64> {
        DetectorProbs::new(self.delta.as_array().clone().map(|d| d.to_f64())).expect("converted from a valid delta")
    }

    pub fn is_qm(&self) -> bool {
        matches!(self.instance, ModelInstance::Qm(_))
    }
}

pub fn parse_instance(text: &str) -> Result<InstanceSpec> {
    let raw: FileRaw = serde_json::from_str(text).map_err(|e| Error::Instance(e.to_string()))?;
    let kind = raw.kind.as_str();
    let instance = match kind {
        "qm" => {
            let q: QmRaw = params(kind, raw.params)?;
            let deg = |n: ExactNumber| n.0.to_f64();
            let (t2, t3, t4) = (deg(q.theta2), deg(q.theta3), deg(q.theta4));
            let angles = match q.theta1 {
                Some(t1) => QmAngles::from_degrees_checked(deg(t1), t2, t3, t4)?,
                None => QmAngles::from_degrees(t2, t3, t4)?,
            };
            ModelInstance::Qm(angles)
        }
        "bellreal" => {
            let r: RhoRaw = params(kind, raw.params)?;
            ModelInstance::BellReal(BellRealParams::new(exact(r.rho))?)
        }
        "belllocal" => {
            let l: LocalRaw = params(kind, raw.params)?;
            ModelInstance::BellLocal(BellLocalParams::new(exact(l.alpha), exact(l.beta))?)
        }
        "generic" => {
            let g: GammaRaw = params(kind, raw.params)?;
            ModelInstance::Generic(GenericParams::new(exact(g.gamma))?)
        }
        "minimal" => {
            let _: EmptyRaw = params(kind, raw.params)?;
            ModelInstance::Minimal
        }
        "deterministic" => {
            let d: SelectionRaw = params(kind, raw.params)?;
            ModelInstance::Deterministic(DeterministicInstance::new(d.selection)?)
        }
        other => {
            return Err(Error::Instance(format!(
                "unknown type `{other}`, expected qm, bellreal, belllocal, generic, minimal or deterministic"
            )))
        }
    };
    let delta = match raw.delta {
        Some(d) => DetectorProbs::new(exact(d))?,
        None => DetectorProbs::uniform(),
    };
    Ok(InstanceSpec { instance, delta })
}
