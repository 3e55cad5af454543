use attraction_core::model::ModelError;
use ndarray::{s, Array1, Array2, Array3, Axis};

use crate::weights::Weights;

pub struct LayerNorm {
    weight: Array1<f32>,
    bias: Array1<f32>,
    eps: f32,
}

impl LayerNorm {
    /// Accepts both `weight`/`bias` and the older `gamma`/`beta` names.
    pub fn load(w: &Weights, base: &str, eps: f32) -> Result<Self, ModelError> {
        Ok(Self {
            weight: w.vector(&[&format!("{base}.weight"), &format!("{base}.gamma")])?,
            bias: w.vector(&[&format!("{base}.bias"), &format!("{base}.beta")])?,
            eps,
        })
    }

    pub fn forward(&self, x: &Array2<f32>) -> Array2<f32> {
        let mut out = x.clone();
        for mut row in out.rows_mut() {
            let n = row.len() as f32;
            let mean = row.sum() / n;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f32>() / n;
            let inv = 1.0 / (var + self.eps).sqrt();
            for ((v, g), b) in row.iter_mut().zip(&self.weight).zip(&self.bias) {
                *v = (*v - mean) * inv * g + b;
            }
        }
        out
    }
}

/// `x · W + b` with `W` stored input-major.
pub struct Linear {
    weight: Array2<f32>,
    bias: Array1<f32>,
}

impl Linear {
    /// Weight stored as `[in, out]` (GPT-2 `Conv1D`).
    pub fn load_in_out(w: &Weights, base: &str) -> Result<Self, ModelError> {
        Ok(Self { weight: w.matrix(&[&format!("{base}.weight")])?, bias: w.vector(&[&format!("{base}.bias")])? })
    }

    /// Weight stored as `[out, in]` (`torch.nn.Linear`).
    pub fn load_out_in(w: &Weights, base: &str) -> Result<Self, ModelError> {
        let weight = w.matrix(&[&format!("{base}.weight")])?.t().as_standard_layout().to_owned();
        Ok(Self { weight, bias: w.vector(&[&format!("{base}.bias")])? })
    }

    pub fn out_features(&self) -> usize {
        self.weight.ncols()
    }

    pub fn forward(&self, x: &Array2<f32>) -> Array2<f32> {
        x.dot(&self.weight) + &self.bias
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    /// Exact, via the error function.
    Gelu,
    /// Tanh approximation.
    GeluTanh,
    Relu,
}

impl Activation {
    pub fn parse(name: &str) -> Result<Self, ModelError> {
        match name {
            "gelu" => Ok(Self::Gelu),
            "gelu_new" | "gelu_pytorch_tanh" | "gelu_fast" => Ok(Self::GeluTanh),
            "relu" => Ok(Self::Relu),
            other => Err(ModelError::Config(format!("unsupported activation {other:?}"))),
        }
    }

    pub fn apply(self, x: &mut Array2<f32>) {
        match self {
            Self::Gelu => x.mapv_inplace(|v| 0.5 * v * (1.0 + libm::erff(v / std::f32::consts::SQRT_2))),
            Self::GeluTanh => {
                let c = (2.0 / std::f32::consts::PI).sqrt();
                x.mapv_inplace(|v| 0.5 * v * (1.0 + (c * (v + 0.044715 * v * v * v)).tanh()))
            }
            Self::Relu => x.mapv_inplace(|v| v.max(0.0)),
        }
    }
}

/// Scaled dot-product attention over `heads` heads. Returns the merged
/// context `[T, E]` and the attention probabilities `[H, T, T]`.
pub fn multi_head_attention(
    q: &Array2<f32>,
    k: &Array2<f32>,
    v: &Array2<f32>,
    heads: usize,
    causal: bool,
) -> (Array2<f32>, Array3<f32>) {
    let (t, e) = q.dim();
    let d = e / heads;
    let scale = 1.0 / (d as f32).sqrt();
    let mut context = Array2::zeros((t, e));
    let mut probs = Array3::zeros((heads, t, t));
    for h in 0..heads {
        let cols = s![.., h * d..(h + 1) * d];
        let (qh, kh, vh) = (q.slice(cols), k.slice(cols), v.slice(cols));
        let mut scores = qh.dot(&kh.t()) * scale;
        for (i, mut row) in scores.axis_iter_mut(Axis(0)).enumerate() {
            if causal {
                row.slice_mut(s![i + 1..]).fill(f32::NEG_INFINITY);
            }
            let max = row.iter().copied().fold(f32::NEG_INFINITY, f32::max);
            row.mapv_inplace(|x| (x - max).exp());
            let sum = row.sum();
            row /= sum;
        }
        context.slice_mut(cols).assign(&scores.dot(&vh));
        probs.slice_mut(s![h, .., ..]).assign(&scores);
    }
    (context, probs)
}

/// Log-softmax of `logits` at `index`, accumulated in f64.
pub fn log_prob_at(logits: ndarray::ArrayView1<f32>, index: usize) -> f64 {
    let max = logits.iter().copied().fold(f32::NEG_INFINITY, f32::max) as f64;
    let lse = logits.iter().map(|&x| (x as f64 - max).exp()).sum::<f64>().ln() + max;
    logits[index] as f64 - lse
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn gelu_reference_points() {
        let mut x = array![[-1.0f32, 0.0, 1.0, 3.0]];
        Activation::Gelu.apply(&mut x);
        // 0.5·x·(1 + erf(x/√2))
        for (got, want) in x.iter().zip([-0.158_655_25, 0.0, 0.841_344_7, 2.995_950_3]) {
            assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        }
        let mut y = array![[1.0f32]];
        Activation::GeluTanh.apply(&mut y);
        assert!((y[[0, 0]] - 0.841_192).abs() < 1e-5);
    }

    #[test]
    fn causal_rows_ignore_the_future() {
        let q = Array2::from_shape_fn((3, 4), |(i, j)| (i + j) as f32 * 0.1);
        let (_, p) = multi_head_attention(&q, &q, &q, 2, true);
        for h in 0..2 {
            assert_eq!(p[[h, 0, 0]], 1.0);
            assert_eq!(p[[h, 1, 2]], 0.0);
            for i in 0..3 {
                assert!((p.slice(s![h, i, ..]).sum() - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn log_softmax_of_equal_logits() {
        let logits = array![2.0f32, 2.0, 2.0, 2.0];
        assert!((0..4).all(|i| (log_prob_at(logits.view(), i) - 0.25f64.ln()).abs() < 1e-12));
    }
}
