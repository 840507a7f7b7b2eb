use serde::{Deserialize, Serialize};

/// Running per-feature mean and variance used to standardize network
/// inputs. Outputs are clipped to `±clip`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationNormalizer {
    count: f64,
    mean: Vec<f64>,
    var: Vec<f64>,
    clip: f64,
}

const PRIOR_COUNT: f64 = 1e-4;
const VAR_FLOOR: f64 = 1e-8;

impl ObservationNormalizer {
    /// Starts from mean 0, variance 1 with negligible weight.
    pub fn new(width: usize, clip: f64) -> Self {
        assert!(clip > 0.0, "clip must be positive");
        Self {
            count: PRIOR_COUNT,
            mean: vec![0.0; width],
            var: vec![1.0; width],
            clip,
        }
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn count(&self) -> f64 {
        self.count
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn variance(&self) -> &[f64] {
        &self.var
    }

    /// Folds one sample into the running moments (Chan et al. merge with a
    /// batch of one).
    pub fn update(&mut self, x: &[f64]) {
        assert_eq!(x.len(), self.width(), "normalizer width mismatch");
        let total = self.count + 1.0;
        for ((m, v), &xi) in self.mean.iter_mut().zip(&mut self.var).zip(x) {
            let delta = xi - *m;
            *m += delta / total;
            *v = (*v * self.count + delta * delta * self.count / total) / total;
        }
        self.count = total;
    }

    pub fn normalize_into(&self, x: &[f64], out: &mut Vec<f64>) {
        assert_eq!(x.len(), self.width(), "normalizer width mismatch");
        out.extend(
            x.iter()
                .zip(&self.mean)
                .zip(&self.var)
                .map(|((&xi, m), v)| ((xi - m) / (v + VAR_FLOOR).sqrt()).clamp(-self.clip, self.clip)),
        );
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(x.len());
        self.normalize_into(x, &mut out);
        out
    }

    pub fn is_valid(&self) -> bool {
        self.count > 0.0
            && self.count.is_finite()
            && self.clip > 0.0
            && self.mean.len() == self.var.len()
            && self.mean.iter().all(|m| m.is_finite())
            && self.var.iter().all(|v| v.is_finite() && *v >= 0.0)
    }
}
