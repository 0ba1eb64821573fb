use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// JSON description `{"name": ..., "params": {...}}` of a built-in model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub enum ModelSpec {
    PHarmonic { p: f64 },
    MinimalSurface { cap: Option<f64> },
    SubsonicGas { gamma: f64 },
    MaximalLorentz { cap: f64 },
    Valtorta { seed: u64 },
    Conjugate(Box<ModelSpec>),
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    name: String,
    #[serde(default)]
    params: Map<String, Value>,
}

fn num(params: &Map<String, Value>, key: &str, name: &str) -> Result<f64, String> {
    params
        .get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| format!("model {name} needs numeric parameter '{key}'"))
}

impl TryFrom<RawSpec> for ModelSpec {
    type Error = String;

    fn try_from(raw: RawSpec) -> Result<Self, String> {
        let p = &raw.params;
        let name = raw.name.as_str();
        Ok(match name {
            "p_harmonic" => ModelSpec::PHarmonic { p: num(p, "p", name)? },
            "minimal_surface" => ModelSpec::MinimalSurface {
                cap: match p.get("cap") {
                    None | Some(Value::Null) => None,
                    Some(_) => Some(num(p, "cap", name)?),
                },
            },
            "subsonic_gas" => ModelSpec::SubsonicGas {
                gamma: num(p, "gamma", name)?,
            },
            "maximal_lorentz" => ModelSpec::MaximalLorentz {
                cap: num(p, "cap", name)?,
            },
            "valtorta" => ModelSpec::Valtorta {
                seed: match p.get("seed") {
                    None => 0,
                    Some(v) => v
                        .as_u64()
                        .ok_or_else(|| "valtorta seed must be a non-negative integer".to_string())?,
                },
            },
            "conjugate" => {
                let of = p
                    .get("of")
                    .cloned()
                    .ok_or_else(|| "conjugate model needs parameter 'of'".to_string())?;
                let inner: ModelSpec = serde_json::from_value(of).map_err(|e| e.to_string())?;
                ModelSpec::Conjugate(Box::new(inner))
            }
            other => return Err(format!("unknown model '{other}'")),
        })
    }
}

impl From<ModelSpec> for RawSpec {
    fn from(spec: ModelSpec) -> Self {
        let mut params = Map::new();
        let name = match spec {
            ModelSpec::PHarmonic { p } => {
                params.insert("p".into(), p.into());
                "p_harmonic"
            }
            ModelSpec::MinimalSurface { cap } => {
                if let Some(c) = cap {
                    params.insert("cap".into(), c.into());
                }
                "minimal_surface"
            }
            ModelSpec::SubsonicGas { gamma } => {
                params.insert("gamma".into(), gamma.into());
                "subsonic_gas"
            }
            ModelSpec::MaximalLorentz { cap } => {
                params.insert("cap".into(), cap.into());
                "maximal_lorentz"
            }
            ModelSpec::Valtorta { seed } => {
                params.insert("seed".into(), seed.into());
                "valtorta"
            }
            ModelSpec::Conjugate(inner) => {
                params.insert("of".into(), serde_json::to_value(*inner).unwrap_or(Value::Null));
                "conjugate"
            }
        };
        RawSpec {
            name: name.into(),
            params,
        }
    }
}
