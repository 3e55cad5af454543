use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{DesignRow, MeasureKind, MeasureRecord};
use crate::stimuli::Condition;
use crate::surprisal::Unit;

/// Generative settings for a synthetic factorial data set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Simulation {
    /// Intercept, S, G, A, S:G, S:A, G:A, S:G:A.
    pub coefficients: [f64; 8],
    pub n_items: u64,
    /// Residual SD per observation.
    pub noise_sd: f64,
    /// SD of a per-item random intercept.
    pub item_sd: f64,
    pub seed: u64,
}

impl Simulation {
    /// One record per item and cell, item ids starting at 1.
    pub fn records(&self, measure: MeasureKind) -> Vec<MeasureRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let noise = Normal::new(0.0, self.noise_sd).expect("finite noise SD");
        let item = Normal::new(0.0, self.item_sd).expect("finite item SD");
        let mut out = Vec::with_capacity(self.n_items as usize * 8);
        for item_id in 1..=self.n_items {
            let offset = item.sample(&mut rng);
            for condition in Condition::ALL {
                let x = DesignRow { value: 0.0, item_id, condition }.full();
                let mean: f64 = x.iter().zip(&self.coefficients).map(|(a, b)| a * b).sum();
                out.push(MeasureRecord {
                    language: "sim".into(),
                    item_id,
                    condition,
                    measure,
                    value: mean + offset + noise.sample(&mut rng),
                    model_id: "simulated".into(),
                    layer: None,
                    unit: Unit::Bits,
                });
            }
        }
        out
    }
}
