use std::fmt::Display;

use serde_json::{json, Value};

use eprb::census::{
    is_measurement_predictable, is_outcome_predictable, matching_patterns, measurement_patterns, outcome_patterns,
};
use eprb::fine::bell_real_preimage;
use eprb::locality::{delta_sensitivity, locality_report, well_definedness};
use eprb::model::{
    chsh_satisfied, correlations, first_chsh_violation, s_functions, tsirelson_report, DetectorProbs, GenericParams,
};
use eprb::qm::qm_characterize;
use eprb::Scalar;

/// Exact values print as strings, floats as JSON numbers.
fn num<T: Scalar + Display>(v: &T) -> Value {
    if T::EXACT {
        Value::String(v.to_string())
    } else {
        json!(v.to_f64())
    }
}

fn nums<T: Scalar + Display>(v: &[T]) -> Value {
    Value::Array(v.iter().map(num).collect())
}

pub fn classify<T: Scalar + Display>(gamma: &GenericParams<T>, delta: &DetectorProbs<T>, tol: f64) -> Value {
    let c = correlations(gamma);
    let s = s_functions(&c);
    let violation = first_chsh_violation(&c, tol).map(|(k, v)| json!({ "k": k, "s": num(&v) }));
    let qm = match qm_characterize(gamma, tol) {
        Ok(angles) => json!({ "achievable": true, "angles_deg": angles.all_degrees() }),
        Err(reason) => json!({ "achievable": false, "reason": reason }),
    };
    let preimage = bell_real_preimage(gamma);
    json!({
        "arithmetic": if T::EXACT { "exact" } else { "float" },
        "delta": nums(delta.as_array()),
        "gamma": nums(gamma.as_array()),
        "correlations": nums(c.as_array()),
        "s": nums(s.as_array()),
        "chsh": { "satisfied": chsh_satisfied(&c, tol), "first_violation": violation },
        "tsirelson_violations": tsirelson_report(&c, tol),
        "locality": locality_report(gamma, delta, tol),
        "well_definedness": well_definedness(gamma),
        "delta_sensitive": delta_sensitivity(gamma, tol),
        "predictability": {
            "outcome": is_outcome_predictable(gamma, tol),
            "outcome_patterns": matching_patterns(&outcome_patterns(), gamma, tol),
            "measurement": is_measurement_predictable(gamma, tol),
            "measurement_patterns": matching_patterns(&measurement_patterns(), gamma, tol),
        },
        "bell_real": {
            "achievable": preimage.is_some(),
            "rho": preimage.map(|r| nums(r.as_array())),
        },
        "qm": qm,
    })
}
