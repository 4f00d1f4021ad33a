//! Built-in classifiers selectable by name.
//!
//! | name                       | dim       | rule                                    |
//! |----------------------------|-----------|-----------------------------------------|
//! | `threshold1d`              | 1         | label 1 iff `x0 > threshold`            |
//! | `halfplane2d`              | 2         | label 1 iff `x0 > threshold`            |
//! | `paper_filter_bank`        | 2         | four-prototype filter bank, `mode`      |
//! | `mean_threshold`           | any       | label 1 iff mean coordinate > threshold |
//! | `linear:w=..;b=..;act=..`  | len(w)    | `b + act(w . x) > 0`                    |

use boundkit::filterdemo::{FilterBank, ScoringMode};
use boundkit::{Activation, DecisionFunction, HalfSpace, LinearFeatureClassifier, MeanThreshold};

use crate::config::parse_value;
use crate::CliError;

pub struct ClassifierSpec<'a> {
    pub name: &'a str,
    pub mode: ScoringMode,
    pub threshold: f64,
    /// Dimension for classifiers that accept any.
    pub dim: usize,
}

pub fn build(spec: &ClassifierSpec<'_>) -> Result<Box<dyn DecisionFunction>, CliError> {
    let f: Box<dyn DecisionFunction> = match spec.name {
        "threshold1d" => Box::new(HalfSpace::threshold_1d(spec.threshold)),
        "halfplane2d" => Box::new(HalfSpace::half_plane_2d(spec.threshold)),
        "paper_filter_bank" => Box::new(FilterBank::paper().with_mode(spec.mode)),
        "mean_threshold" => {
            if spec.dim == 0 {
                return Err(CliError::config(
                    "invalid value for 'dim': must be positive",
                ));
            }
            Box::new(MeanThreshold {
                dim: spec.dim,
                threshold: spec.threshold,
            })
        }
        other => match other.strip_prefix("linear:") {
            Some(body) => Box::new(parse_linear(body)?),
            None => {
                return Err(CliError::config(format!(
                    "invalid value for 'classifier': unknown classifier `{other}`"
                )))
            }
        },
    };
    Ok(f)
}

/// Parses `w=1,-2;b=0.5;act=tanh`. `b` defaults to 0, `act` to identity.
fn parse_linear(body: &str) -> Result<LinearFeatureClassifier, CliError> {
    let mut weights = None;
    let mut bias = 0.0;
    let mut act = Activation::Identity;
    for part in body.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| {
            CliError::config(format!(
                "invalid value for 'classifier': linear part `{part}` is not key=value"
            ))
        })?;
        match k.trim() {
            "w" => {
                weights = Some(
                    v.split(',')
                        .map(|s| parse_value::<f64>("classifier", s.trim()))
                        .collect::<Result<Vec<_>, _>>()?,
                )
            }
            "b" => bias = parse_value("classifier", v.trim())?,
            "act" => act = parse_value("classifier", v.trim())?,
            other => {
                return Err(CliError::config(format!(
                    "invalid value for 'classifier': unknown linear key `{other}`"
                )))
            }
        }
    }
    let weights = weights.ok_or_else(|| {
        CliError::config("invalid value for 'classifier': linear classifier needs w=...")
    })?;
    LinearFeatureClassifier::on_coordinates(weights, bias, act)
        .map_err(|e| CliError::config(format!("invalid value for 'classifier': {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(name: &str) -> ClassifierSpec<'_> {
        ClassifierSpec {
            name,
            mode: ScoringMode::L1Distance,
            threshold: 0.5,
            dim: 4,
        }
    }

    #[test]
    fn every_name_builds() {
        assert_eq!(build(&spec("threshold1d")).unwrap().dim(), 1);
        assert_eq!(build(&spec("halfplane2d")).unwrap().dim(), 2);
        assert_eq!(build(&spec("paper_filter_bank")).unwrap().labels(), 4);
        assert_eq!(build(&spec("mean_threshold")).unwrap().dim(), 4);
        let lin = build(&spec("linear:w=1,-1;b=0.25;act=tanh")).unwrap();
        assert_eq!(lin.dim(), 2);
        assert_eq!(lin.label_of(&[0.5, 0.5]), 1);
        assert_eq!(lin.label_of(&[0.0, 1.0]), 0);
    }

    #[test]
    fn bad_specs_fail() {
        for name in [
            "nope",
            "linear:",
            "linear:w=a",
            "linear:w=1;act=relu",
            "linear:q=1",
        ] {
            let err = build(&spec(name)).err().unwrap();
            assert!(err.to_string().contains("'classifier'"), "{name}: {err}");
        }
    }
}
