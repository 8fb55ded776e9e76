use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DetectionClass;

/// Seeded detector and depth imperfection model. Missing classes have rate 0.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    pub fp_rate: BTreeMap<DetectionClass, f64>,
    pub fn_rate: BTreeMap<DetectionClass, f64>,
    pub bbox_jitter_sigma: f64,
    pub depth_noise_sigma: f64,
    pub seed: u64,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3))
}

impl NoiseModel {
    pub fn noiseless(seed: u64) -> Self {
        NoiseModel {
            seed,
            ..Default::default()
        }
    }

    pub fn fp(&self, c: DetectionClass) -> f64 {
        self.fp_rate.get(&c).copied().unwrap_or(0.0)
    }

    pub fn fn_(&self, c: DetectionClass) -> f64 {
        self.fn_rate.get(&c).copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, rates) in [("fp_rate", &self.fp_rate), ("fn_rate", &self.fn_rate)] {
            for (c, r) in rates {
                if !(0.0..=1.0).contains(r) {
                    return Err(format!("{name}[{}] = {r} is outside [0, 1]", c.as_str()));
                }
            }
        }
        if self.bbox_jitter_sigma < 0.0 || self.depth_noise_sigma < 0.0 {
            return Err("noise sigmas must be non-negative".into());
        }
        Ok(())
    }

    /// Independent stream per (seed, agent, tick); frames do not depend on call order.
    pub fn frame_rng(&self, agent_id: &str, tick: u64) -> ChaCha8Rng {
        let s = splitmix(splitmix(self.seed ^ fnv1a(agent_id)) ^ tick);
        ChaCha8Rng::seed_from_u64(s)
    }
}
