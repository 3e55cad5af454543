//! BERT style encoder, run only as far as the last layer's attention.

use std::path::Path;

use attraction_core::model::{check_context, Adapter, AttentionLm, AttentionTensor, ModelError, TokenizedSentence};
use ndarray::Array2;
use serde::Deserialize;

use crate::ops::{multi_head_attention, Activation, LayerNorm, Linear};
use crate::tokenizer::HfTokenizer;
use crate::weights::{load_error, Weights};

#[derive(Clone, Debug, Deserialize)]
pub struct BertConfig {
    pub hidden_size: usize,
    pub num_attention_heads: usize,
    pub num_hidden_layers: usize,
    pub max_position_embeddings: usize,
    pub vocab_size: usize,
    #[serde(default = "default_eps")]
    pub layer_norm_eps: f32,
    #[serde(default = "default_activation")]
    pub hidden_act: String,
}

fn default_eps() -> f32 {
    1e-12
}

fn default_activation() -> String {
    "gelu".into()
}

struct Layer {
    query: Linear,
    key: Linear,
    value: Linear,
    attn_out: Linear,
    attn_norm: LayerNorm,
    intermediate: Linear,
    output: Linear,
    output_norm: LayerNorm,
}

pub struct Bert {
    id: String,
    config: BertConfig,
    max_tokens: usize,
    activation: Activation,
    tokenizer: HfTokenizer,
    word: Array2<f32>,
    position: Array2<f32>,
    token_type: Option<Array2<f32>>,
    embed_norm: LayerNorm,
    layers: Vec<Layer>,
}

const PREFIXES: &[&str] = &["", "bert.", "model.", "roberta."];

impl Bert {
    pub fn load(id: &str, dir: &Path, max_tokens: usize) -> Result<Self, ModelError> {
        let config: BertConfig = crate::read_config(id, &dir.join("config.json"))?;
        let tokenizer = HfTokenizer::load(&dir.join("tokenizer.json"))?;
        let weights = Weights::load(id, &dir.join("model.safetensors"), PREFIXES)?;
        Self::from_parts(id, config, tokenizer, &weights, max_tokens)
    }

    pub fn from_parts(
        id: &str,
        config: BertConfig,
        tokenizer: HfTokenizer,
        w: &Weights,
        max_tokens: usize,
    ) -> Result<Self, ModelError> {
        let (e, heads) = (config.hidden_size, config.num_attention_heads);
        if heads == 0 || e % heads != 0 {
            return Err(ModelError::Config(format!("{id}: hidden_size {e} not divisible by {heads} heads")));
        }
        let eps = config.layer_norm_eps;
        let layers = (0..config.num_hidden_layers)
            .map(|i| {
                let b = format!("encoder.layer.{i}");
                Ok(Layer {
                    query: Linear::load_out_in(w, &format!("{b}.attention.self.query"))?,
                    key: Linear::load_out_in(w, &format!("{b}.attention.self.key"))?,
                    value: Linear::load_out_in(w, &format!("{b}.attention.self.value"))?,
                    attn_out: Linear::load_out_in(w, &format!("{b}.attention.output.dense"))?,
                    attn_norm: LayerNorm::load(w, &format!("{b}.attention.output.LayerNorm"), eps)?,
                    intermediate: Linear::load_out_in(w, &format!("{b}.intermediate.dense"))?,
                    output: Linear::load_out_in(w, &format!("{b}.output.dense"))?,
                    output_norm: LayerNorm::load(w, &format!("{b}.output.LayerNorm"), eps)?,
                })
            })
            .collect::<Result<Vec<_>, ModelError>>()?;
        let word = w.matrix(&["embeddings.word_embeddings.weight"])?;
        if word.dim() != (config.vocab_size, e) {
            return Err(load_error(id, format!("word embeddings have shape {:?}", word.dim())));
        }
        let token_type = if w.contains("embeddings.token_type_embeddings.weight") {
            Some(w.matrix(&["embeddings.token_type_embeddings.weight"])?)
        } else {
            None
        };
        Ok(Self {
            id: id.to_string(),
            max_tokens: max_tokens.min(config.max_position_embeddings),
            activation: Activation::parse(&config.hidden_act)?,
            tokenizer,
            word,
            position: w.matrix(&["embeddings.position_embeddings.weight"])?,
            token_type,
            embed_norm: LayerNorm::load(w, "embeddings.LayerNorm", eps)?,
            layers,
            config,
        })
    }

    /// Attention probabilities of every layer for one unpadded sequence.
    pub fn attention_for_ids(&self, ids: &[u32]) -> Result<AttentionTensor, ModelError> {
        let (t, e) = (ids.len(), self.config.hidden_size);
        let heads = self.config.num_attention_heads;
        let mut x = Array2::zeros((t, e));
        for (i, &id) in ids.iter().enumerate() {
            let id = id as usize;
            if id >= self.config.vocab_size {
                return Err(ModelError::Tokenizer(format!("token id {id} outside vocabulary")));
            }
            let mut row = &self.word.row(id) + &self.position.row(i);
            if let Some(tt) = &self.token_type {
                row += &tt.row(0);
            }
            x.row_mut(i).assign(&row);
        }
        x = self.embed_norm.forward(&x);

        let mut data = Vec::with_capacity(self.layers.len() * heads * t * t);
        for (n, layer) in self.layers.iter().enumerate() {
            let (ctx, probs) = multi_head_attention(
                &layer.query.forward(&x),
                &layer.key.forward(&x),
                &layer.value.forward(&x),
                heads,
                false,
            );
            data.extend(probs.iter().map(|&p| f64::from(p)));
            if n + 1 == self.layers.len() {
                break;
            }
            x = layer.attn_norm.forward(&(layer.attn_out.forward(&ctx) + &x));
            let mut h = layer.intermediate.forward(&x);
            self.activation.apply(&mut h);
            x = layer.output_norm.forward(&(layer.output.forward(&h) + &x));
        }
        AttentionTensor::new(self.layers.len(), heads, t, data)
    }
}

impl Adapter for Bert {
    fn model_id(&self) -> &str {
        &self.id
    }

    fn max_tokens(&self) -> usize {
        self.max_tokens
    }

    fn tokenize(&self, text: &str) -> Result<TokenizedSentence, ModelError> {
        let (_, sentence) = self.tokenizer.encode(text, true)?;
        check_context(self, sentence.len())?;
        Ok(sentence)
    }
}

impl AttentionLm for Bert {
    fn num_layers(&self) -> usize {
        self.layers.len()
    }

    fn attention(&self, text: &str) -> Result<(TokenizedSentence, AttentionTensor), ModelError> {
        let (ids, sentence) = self.tokenizer.encode(text, true)?;
        check_context(self, ids.len())?;
        let attn = self.attention_for_ids(&ids)?;
        Ok((sentence, attn))
    }
}
