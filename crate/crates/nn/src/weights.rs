use std::collections::HashMap;
use std::path::Path;

use attraction_core::model::ModelError;
use half::{bf16, f16};
use ndarray::{Array1, Array2};
use safetensors::{Dtype, SafeTensors};

/// Float tensors of one checkpoint, converted to f32.
pub struct Weights {
    model_id: String,
    tensors: HashMap<String, (Vec<usize>, Vec<f32>)>,
    prefixes: &'static [&'static str],
}

fn to_f32(dtype: Dtype, bytes: &[u8]) -> Option<Vec<f32>> {
    Some(match dtype {
        Dtype::F32 => bytes.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])).collect(),
        Dtype::F64 => {
            bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")) as f32).collect()
        }
        Dtype::F16 => bytes.chunks_exact(2).map(|b| f16::from_le_bytes([b[0], b[1]]).to_f32()).collect(),
        Dtype::BF16 => bytes.chunks_exact(2).map(|b| bf16::from_le_bytes([b[0], b[1]]).to_f32()).collect(),
        _ => return None,
    })
}

impl Weights {
    /// Reads `model.safetensors`. Tensor names are looked up with each of
    /// `prefixes` prepended in turn, covering checkpoints saved with or
    /// without their task head wrapper.
    pub fn load(model_id: &str, path: &Path, prefixes: &'static [&'static str]) -> Result<Self, ModelError> {
        let bytes = std::fs::read(path).map_err(|e| load_error(model_id, format!("{}: {e}", path.display())))?;
        Self::from_bytes(model_id, &bytes, prefixes)
    }

    pub fn from_bytes(model_id: &str, bytes: &[u8], prefixes: &'static [&'static str]) -> Result<Self, ModelError> {
        let st = SafeTensors::deserialize(bytes).map_err(|e| load_error(model_id, e.to_string()))?;
        let mut tensors = HashMap::new();
        for (name, view) in st.tensors() {
            // integer buffers (position ids, masks) are not weights
            if let Some(data) = to_f32(view.dtype(), view.data()) {
                tensors.insert(name, (view.shape().to_vec(), data));
            }
        }
        Ok(Self { model_id: model_id.to_string(), tensors, prefixes })
    }

    fn find(&self, names: &[&str]) -> Result<&(Vec<usize>, Vec<f32>), ModelError> {
        for name in names {
            for prefix in self.prefixes {
                if let Some(t) = self.tensors.get(&format!("{prefix}{name}")) {
                    return Ok(t);
                }
            }
        }
        Err(load_error(&self.model_id, format!("missing tensor {}", names.join(" / "))))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.find(&[name]).is_ok()
    }

    /// First of `names` present, as a matrix.
    pub fn matrix(&self, names: &[&str]) -> Result<Array2<f32>, ModelError> {
        let (shape, data) = self.find(names)?;
        let [rows, cols] = shape[..] else {
            return Err(load_error(&self.model_id, format!("{} has shape {shape:?}, expected 2-D", names[0])));
        };
        Ok(Array2::from_shape_vec((rows, cols), data.clone()).expect("shape matches data"))
    }

    pub fn vector(&self, names: &[&str]) -> Result<Array1<f32>, ModelError> {
        let (shape, data) = self.find(names)?;
        if shape.len() != 1 {
            return Err(load_error(&self.model_id, format!("{} has shape {shape:?}, expected 1-D", names[0])));
        }
        Ok(Array1::from_vec(data.clone()))
    }
}

pub(crate) fn load_error(model_id: &str, message: impl Into<String>) -> ModelError {
    ModelError::Load { model_id: model_id.to_string(), message: message.into() }
}
