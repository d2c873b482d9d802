use serde::{Deserialize, Serialize};

use crate::error::{NnError, Result};
use crate::network::Weights;
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(NnError::InvalidArgument(format!(
                "bad Adam settings: {self:?}"
            )))
        }
    }
}

/// Bias-corrected Adam with per-element first and second moments.
#[derive(Debug, Clone)]
pub struct Adam<F> {
    cfg: AdamConfig,
    m: Weights<F>,
    v: Weights<F>,
    step: u32,
}

impl<F: Real> Adam<F> {
    pub fn new(cfg: AdamConfig, like: &Weights<F>) -> Result<Self> {
        cfg.validate()?;
        Ok(Adam {
            cfg,
            m: like.zeros_like(),
            v: like.zeros_like(),
            step: 0,
        })
    }

    pub fn steps_taken(&self) -> u32 {
        self.step
    }

    pub fn update(&mut self, w: &mut Weights<F>, g: &Weights<F>) {
        self.step += 1;
        let b1 = F::lit(self.cfg.beta1);
        let b2 = F::lit(self.cfg.beta2);
        let one = F::one();
        let c1 = one - F::lit(self.cfg.beta1.powi(self.step as i32));
        let c2 = one - F::lit(self.cfg.beta2.powi(self.step as i32));
        let lr = F::lit(self.cfg.learning_rate);
        let eps = F::lit(self.cfg.epsilon);
        for (((p, gr), m), v) in w
            .tensors_mut()
            .zip(g.tensors())
            .zip(self.m.tensors_mut())
            .zip(self.v.tensors_mut())
        {
            ndarray::Zip::from(p)
                .and(gr)
                .and(m)
                .and(v)
                .for_each(|p, &g, m, v| {
                    *m = b1 * *m + (one - b1) * g;
                    *v = b2 * *v + (one - b2) * g * g;
                    let mh = *m / c1;
                    let vh = *v / c2;
                    *p = *p - lr * mh / (vh.sqrt() + eps);
                });
        }
    }
}
