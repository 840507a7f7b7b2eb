use serde::{Deserialize, Serialize};

use super::Mlp;
use crate::error::{Error, Result};

pub const MLP_FORMAT: &str = "constellation-mlp";
pub const MLP_FORMAT_VERSION: u32 = 1;

/// On-disk layout of a network: layer sizes, then one row-major weight block
/// per layer, then one bias vector per layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpCheckpoint {
    pub format: String,
    pub version: u32,
    pub layer_sizes: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl From<Mlp> for MlpCheckpoint {
    fn from(net: Mlp) -> Self {
        Self {
            format: MLP_FORMAT.to_string(),
            version: MLP_FORMAT_VERSION,
            layer_sizes: net.layer_sizes,
            weights: net.weights,
            biases: net.biases,
        }
    }
}

impl TryFrom<MlpCheckpoint> for Mlp {
    type Error = String;

    fn try_from(c: MlpCheckpoint) -> std::result::Result<Self, String> {
        if c.format != MLP_FORMAT {
            return Err(format!("unknown network format {:?}", c.format));
        }
        if c.version != MLP_FORMAT_VERSION {
            return Err(format!("unsupported network format version {}", c.version));
        }
        Mlp::from_parts(c.layer_sizes, c.weights, c.biases)
    }
}

impl Mlp {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("network serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_shape_errors_and_foreign_formats() {
        let net = Mlp::he_uniform(&[3, 4, 2], &mut ChaCha8Rng::seed_from_u64(1));
        let mut v: serde_json::Value = serde_json::from_str(&net.to_json()).unwrap();
        v["weights"][0].as_array_mut().unwrap().pop();
        assert!(Mlp::from_json(&v.to_string()).is_err());

        let mut v: serde_json::Value = serde_json::from_str(&net.to_json()).unwrap();
        v["format"] = "other".into();
        assert!(Mlp::from_json(&v.to_string()).is_err());

        let mut v: serde_json::Value = serde_json::from_str(&net.to_json()).unwrap();
        v["version"] = 9.into();
        assert!(Mlp::from_json(&v.to_string()).is_err());

        assert!(Mlp::from_json("{").is_err());
    }

    #[test]
    fn layout_is_sizes_weights_biases() {
        let net = Mlp::from_parts(vec![2, 1], vec![vec![0.5, -0.25]], vec![vec![1.0]]).unwrap();
        assert_eq!(
            net.to_json(),
            r#"{"format":"constellation-mlp","version":1,"layer_sizes":[2,1],"weights":[[0.5,-0.25]],"biases":[[1.0]]}"#
        );
    }

    proptest! {
        #[test]
        fn json_round_trip_is_bit_exact(seed in any::<u64>(), scale in -1e6..1e6f64) {
            let mut net = Mlp::he_uniform(&[5, 7, 3], &mut ChaCha8Rng::seed_from_u64(seed));
            net.params_mut().for_each(|p| *p *= scale);
            let back = Mlp::from_json(&net.to_json()).unwrap();
            for (a, b) in net.clone().params_mut().zip(back.clone().params_mut()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
