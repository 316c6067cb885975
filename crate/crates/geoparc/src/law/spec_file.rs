//! JSON law files.
//!
//! ```json
//! {"family": "geometric", "alpha": 0.2}
//! {"family": "custom", "coeffs": [0.5, 0.2, 0.3]}
//! {"family": "stable", "alpha": 2.5, "rho": 1.5, "C": -0.2, "P": [0.71, 0.1, 0.2]}
//! ```
//!
//! For the stable family `alpha` is the singular exponent. Keys that the
//! named family does not use are rejected.

use serde_json::Value;

use super::ArrivalLaw;
use crate::error::{Error, Result};

pub fn law_from_json_str(text: &str) -> Result<ArrivalLaw> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| Error::Io(format!("law file: {e}")))?;
    law_from_json(&value)
}

pub fn law_from_json(value: &Value) -> Result<ArrivalLaw> {
    let obj = value
        .as_object()
        .ok_or_else(|| Error::BadParam("law file must be a JSON object".into()))?;
    let family = obj
        .get("family")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::BadParam("law file needs a string \"family\" key".into()))?;

    let allowed: &[&str] = match family {
        "binary" | "geometric" | "poisson" => &["family", "alpha"],
        "custom" => &["family", "coeffs"],
        "stable" => &["family", "alpha", "rho", "C", "P"],
        other => return Err(Error::BadParam(format!("unknown family {other:?}"))),
    };
    for key in obj.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(Error::BadParam(format!(
                "key {key:?} is not used by the {family} family"
            )));
        }
    }
    let number = |key: &str| -> Result<f64> {
        obj.get(key)
            .and_then(Value::as_f64)
            .ok_or_else(|| Error::BadParam(format!("{family} family needs a numeric {key:?} key")))
    };
    let array = |key: &str| -> Result<Vec<f64>> {
        obj.get(key)
            .and_then(Value::as_array)
            .ok_or_else(|| Error::BadParam(format!("{family} family needs an array {key:?} key")))?
            .iter()
            .map(|v| {
                v.as_f64()
                    .ok_or_else(|| Error::BadParam(format!("non-numeric entry in {key:?}")))
            })
            .collect()
    };

    match family {
        "binary" => ArrivalLaw::binary(number("alpha")?),
        "geometric" => ArrivalLaw::geometric(number("alpha")?),
        "poisson" => ArrivalLaw::poisson(number("alpha")?),
        "custom" => ArrivalLaw::custom(&array("coeffs")?),
        "stable" => ArrivalLaw::stable(array("P")?, number("C")?, number("rho")?, number("alpha")?),
        _ => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_each_family() {
        let geo = law_from_json_str(r#"{"family": "geometric", "alpha": 0.2}"#).unwrap();
        assert_eq!(geo.family().name(), "geometric");
        let cus = law_from_json_str(r#"{"family": "custom", "coeffs": [0.5, 0.2, 0.3]}"#).unwrap();
        assert_eq!(cus.max_arrival(), Some(2));
    }

    #[test]
    fn rejects_unused_keys() {
        let err =
            law_from_json_str(r#"{"family": "poisson", "alpha": 0.3, "rho": 2.0}"#).unwrap_err();
        assert!(matches!(err, Error::BadParam(_)), "{err}");
    }

    #[test]
    fn rejects_missing_and_unknown() {
        assert!(law_from_json_str(r#"{"family": "poisson"}"#).is_err());
        assert!(law_from_json_str(r#"{"family": "zeta", "alpha": 1.0}"#).is_err());
    }
}
