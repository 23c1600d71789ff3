use serde::{Deserialize, Serialize};

/// Truncated Fourier series in the polar angle.
///
/// `cosine[k - 1]` and `sine[k - 1]` multiply `cos(kθ)` and `sin(kθ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierSeries {
    pub mean: f64,
    #[serde(default, rename = "cos")]
    pub cosine: Vec<f64>,
    #[serde(default, rename = "sin")]
    pub sine: Vec<f64>,
}

impl FourierSeries {
    pub fn constant(mean: f64) -> Self {
        FourierSeries {
            mean,
            cosine: Vec::new(),
            sine: Vec::new(),
        }
    }

    pub fn new(mean: f64, cosine: Vec<f64>, sine: Vec<f64>) -> Self {
        FourierSeries { mean, cosine, sine }
    }

    pub fn evaluate(&self, theta: f64) -> f64 {
        let mut value = self.mean;
        for (k, c) in self.cosine.iter().enumerate() {
            if *c != 0.0 {
                value += c * ((k + 1) as f64 * theta).cos();
            }
        }
        for (k, s) in self.sine.iter().enumerate() {
            if *s != 0.0 {
                value += s * ((k + 1) as f64 * theta).sin();
            }
        }
        value
    }

    pub fn is_finite(&self) -> bool {
        self.mean.is_finite() && self.cosine.iter().chain(&self.sine).all(|c| c.is_finite())
    }
}

/// Boundary curve `r(θ)` of the annular region.
pub type PolarCurve = FourierSeries;
