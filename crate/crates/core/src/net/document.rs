use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Activation, Layer, Network};
use crate::error::{Error, Result};
use crate::exact;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum NumericMode {
    #[default]
    #[serde(rename = "float64")]
    Float64,
    #[serde(rename = "dyadic", alias = "dyadic-exact")]
    Dyadic,
}

impl FromStr for NumericMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "float64" => Ok(Self::Float64),
            "dyadic" | "dyadic-exact" => Ok(Self::Dyadic),
            other => Err(Error::InvalidParameter(format!("unknown numeric mode {other:?}"))),
        }
    }
}

impl fmt::Display for NumericMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Float64 => "float64",
            Self::Dyadic => "dyadic",
        })
    }
}

/// A weight entry: a JSON number, or an exact `"p/q"` string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum Scalar {
    Num(f64),
    Frac(String),
}

impl Scalar {
    fn encode(v: f64, mode: NumericMode) -> Self {
        match mode {
            NumericMode::Float64 => Scalar::Num(v),
            NumericMode::Dyadic => {
                let q = exact::from_f64(v).expect("finite weight");
                Scalar::Frac(exact::format_fraction(&q))
            }
        }
    }

    fn decode(&self) -> Result<f64> {
        match self {
            Scalar::Num(v) => Ok(*v),
            Scalar::Frac(s) => exact::dyadic_to_f64(&exact::parse_fraction(s)?),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerDocument {
    weights: Vec<Vec<Scalar>>,
    bias: Vec<Scalar>,
    activations: Vec<Activation>,
}

/// On-disk JSON form of a [`Network`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDocument {
    pub version: u32,
    pub dx: usize,
    pub dy: usize,
    pub numeric: NumericMode,
    pub layers: Vec<LayerDocument>,
}

impl NetworkDocument {
    pub fn from_network(net: &Network, numeric: NumericMode) -> Self {
        let layers = net
            .layers()
            .iter()
            .map(|l| LayerDocument {
                weights: l
                    .weights
                    .iter()
                    .map(|r| r.iter().map(|v| Scalar::encode(*v, numeric)).collect())
                    .collect(),
                bias: l.bias.iter().map(|v| Scalar::encode(*v, numeric)).collect(),
                activations: l.activations.clone(),
            })
            .collect();
        Self { version: 1, dx: net.dx(), dy: net.dy(), numeric, layers }
    }

    pub fn to_network(&self) -> Result<Network> {
        if self.version != 1 {
            return Err(Error::Schema(format!("unsupported version {}", self.version)));
        }
        let mut layers = Vec::with_capacity(self.layers.len());
        for (i, l) in self.layers.iter().enumerate() {
            let decode_all = |xs: &[Scalar]| -> Result<Vec<f64>> {
                xs.iter()
                    .map(|s| {
                        let v = s.decode()?;
                        if v.is_finite() {
                            Ok(v)
                        } else {
                            Err(Error::NonFiniteWeight { layer: i })
                        }
                    })
                    .collect()
            };
            let weights = l.weights.iter().map(|r| decode_all(r)).collect::<Result<Vec<_>>>()?;
            let bias = decode_all(&l.bias)?;
            if bias.len() != weights.len() || l.activations.len() != bias.len() {
                return Err(Error::Schema(format!(
                    "layer {i}: {} weight rows, {} biases, {} activations",
                    weights.len(),
                    bias.len(),
                    l.activations.len()
                )));
            }
            layers.push(Layer::new(weights, bias, l.activations.clone()));
        }
        let net = Network::new(self.dx, layers).map_err(|e| Error::Schema(e.to_string()))?;
        if net.dy() != self.dy {
            return Err(Error::Schema(format!("declared dy {} but layers give {}", self.dy, net.dy())));
        }
        Ok(net)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("document serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Schema(e.to_string()))
    }
}

impl Network {
    pub fn to_json(&self, numeric: NumericMode) -> String {
        NetworkDocument::from_network(self, numeric).to_json()
    }

    pub fn from_json(s: &str) -> Result<Network> {
        NetworkDocument::from_json(s)?.to_network()
    }

    pub fn save(&self, path: impl AsRef<Path>, numeric: NumericMode) -> Result<()> {
        std::fs::write(path, self.to_json(numeric) + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Network, NumericMode)> {
        let doc = NetworkDocument::from_json(&std::fs::read_to_string(path)?)?;
        Ok((doc.to_network()?, doc.numeric))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quarter_net() -> Network {
        Network::new(
            1,
            vec![
                Layer::new(vec![vec![0.25]], vec![-0.1], vec![Activation::Relu]),
                Layer::affine(vec![vec![3.0]], vec![1.0 / 3.0]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn float_round_trip_is_byte_identical() {
        let net = quarter_net();
        let s1 = net.to_json(NumericMode::Float64);
        let back = Network::from_json(&s1).unwrap();
        assert_eq!(back, net);
        assert_eq!(back.to_json(NumericMode::Float64), s1);
    }

    #[test]
    fn dyadic_strings() {
        let net = quarter_net();
        let s = net.to_json(NumericMode::Dyadic);
        assert!(s.contains("\"1/4\""));
        assert!(s.contains("\"numeric\":\"dyadic\""));
        let back = Network::from_json(&s).unwrap();
        assert_eq!(back.layers()[0].weights[0][0], 0.25);
        assert_eq!(back, net);
    }

    #[test]
    fn rejects_bad_documents() {
        let mismatched = r#"{"version":1,"dx":1,"dy":1,"numeric":"float64","layers":[
            {"weights":[[1.0]],"bias":[0.0,1.0],"activations":["id"]}]}"#;
        assert!(matches!(Network::from_json(mismatched), Err(Error::Schema(_))));
        let third = r#"{"version":1,"dx":1,"dy":1,"numeric":"dyadic","layers":[
            {"weights":[["1/3"]],"bias":["0"],"activations":["id"]}]}"#;
        assert!(matches!(Network::from_json(third), Err(Error::NonDyadic(_))));
        let wrong_dy = r#"{"version":1,"dx":1,"dy":2,"numeric":"float64","layers":[
            {"weights":[[1.0]],"bias":[0.0],"activations":["id"]}]}"#;
        assert!(Network::from_json(wrong_dy).is_err());
        let bad_tag = r#"{"version":1,"dx":1,"dy":1,"numeric":"float64","layers":[
            {"weights":[[1.0]],"bias":[0.0],"activations":["tanh"]}]}"#;
        assert!(Network::from_json(bad_tag).is_err());
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("dyadic-exact".parse::<NumericMode>().unwrap(), NumericMode::Dyadic);
        assert!("f32".parse::<NumericMode>().is_err());
    }
}
