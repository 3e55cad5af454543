//! GPT-2 style decoder: learned positions, pre-norm blocks, tied output
//! embedding.

use std::path::Path;

use attraction_core::model::{check_context, Adapter, CausalLm, LogProbSequence, ModelError, TokenizedSentence};
use attraction_core::span::CharSpan;
use ndarray::{s, Array2, Axis};
use serde::Deserialize;

use crate::ops::{log_prob_at, multi_head_attention, Activation, LayerNorm, Linear};
use crate::tokenizer::HfTokenizer;
use crate::weights::{load_error, Weights};

#[derive(Clone, Debug, Deserialize)]
pub struct Gpt2Config {
    pub n_embd: usize,
    pub n_head: usize,
    pub n_layer: usize,
    pub n_positions: usize,
    pub vocab_size: usize,
    #[serde(default = "default_eps")]
    pub layer_norm_epsilon: f32,
    #[serde(default = "default_activation")]
    pub activation_function: String,
    #[serde(default)]
    pub bos_token_id: Option<u32>,
    #[serde(default)]
    pub eos_token_id: Option<u32>,
}

fn default_eps() -> f32 {
    1e-5
}

fn default_activation() -> String {
    "gelu_new".into()
}

struct Block {
    ln_1: LayerNorm,
    c_attn: Linear,
    attn_proj: Linear,
    ln_2: LayerNorm,
    c_fc: Linear,
    mlp_proj: Linear,
}

pub struct Gpt2 {
    id: String,
    config: Gpt2Config,
    max_tokens: usize,
    activation: Activation,
    tokenizer: HfTokenizer,
    bos: (u32, String),
    wte: Array2<f32>,
    wpe: Array2<f32>,
    blocks: Vec<Block>,
    ln_f: LayerNorm,
}

const PREFIXES: &[&str] = &["", "transformer.", "model."];

impl Gpt2 {
    /// Loads `config.json`, `model.safetensors` and `tokenizer.json` from `dir`.
    pub fn load(id: &str, dir: &Path, max_tokens: usize) -> Result<Self, ModelError> {
        let config: Gpt2Config = crate::read_config(id, &dir.join("config.json"))?;
        let tokenizer = HfTokenizer::load(&dir.join("tokenizer.json"))?;
        let weights = Weights::load(id, &dir.join("model.safetensors"), PREFIXES)?;
        Self::from_parts(id, config, tokenizer, &weights, max_tokens)
    }

    pub fn from_parts(
        id: &str,
        config: Gpt2Config,
        tokenizer: HfTokenizer,
        w: &Weights,
        max_tokens: usize,
    ) -> Result<Self, ModelError> {
        if config.n_head == 0 || !config.n_embd.is_multiple_of(config.n_head) {
            return Err(ModelError::Config(format!(
                "{id}: n_embd {} not divisible by n_head {}",
                config.n_embd, config.n_head
            )));
        }
        let eps = config.layer_norm_epsilon;
        let blocks = (0..config.n_layer)
            .map(|i| {
                let b = format!("h.{i}");
                Ok(Block {
                    ln_1: LayerNorm::load(w, &format!("{b}.ln_1"), eps)?,
                    c_attn: Linear::load_in_out(w, &format!("{b}.attn.c_attn"))?,
                    attn_proj: Linear::load_in_out(w, &format!("{b}.attn.c_proj"))?,
                    ln_2: LayerNorm::load(w, &format!("{b}.ln_2"), eps)?,
                    c_fc: Linear::load_in_out(w, &format!("{b}.mlp.c_fc"))?,
                    mlp_proj: Linear::load_in_out(w, &format!("{b}.mlp.c_proj"))?,
                })
            })
            .collect::<Result<Vec<_>, ModelError>>()?;
        for b in &blocks {
            if b.c_attn.out_features() != 3 * config.n_embd {
                return Err(load_error(id, "c_attn width does not match 3 * n_embd"));
            }
        }
        let bos_id = config
            .bos_token_id
            .or(config.eos_token_id)
            .or_else(|| tokenizer.token_to_id("<|endoftext|>"))
            .ok_or_else(|| ModelError::Config(format!("{id}: no beginning-of-sequence token")))?;
        let bos_token = tokenizer.id_to_token(bos_id).unwrap_or_else(|| format!("<{bos_id}>"));
        let wte = w.matrix(&["wte.weight"])?;
        if wte.dim() != (config.vocab_size, config.n_embd) {
            return Err(load_error(id, format!("wte has shape {:?}", wte.dim())));
        }
        Ok(Self {
            id: id.to_string(),
            max_tokens: max_tokens.min(config.n_positions),
            activation: Activation::parse(&config.activation_function)?,
            tokenizer,
            bos: (bos_id, bos_token),
            wpe: w.matrix(&["wpe.weight"])?,
            wte,
            blocks,
            ln_f: LayerNorm::load(w, "ln_f", eps)?,
            config,
        })
    }

    fn encode(&self, text: &str) -> Result<(Vec<u32>, TokenizedSentence), ModelError> {
        let (ids, body) = self.tokenizer.encode(text, false)?;
        let mut sentence = TokenizedSentence::default();
        sentence.push(self.bos.1.clone(), CharSpan::empty_at(0), true);
        for i in 0..body.len() {
            sentence.push(body.tokens[i].clone(), body.offsets[i], body.special_mask[i]);
        }
        let mut all = vec![self.bos.0];
        all.extend(ids);
        Ok((all, sentence))
    }

    /// Final hidden states, `[T, n_embd]`.
    pub fn hidden_states(&self, ids: &[u32]) -> Result<Array2<f32>, ModelError> {
        let e = self.config.n_embd;
        let mut x = Array2::zeros((ids.len(), e));
        for (t, &id) in ids.iter().enumerate() {
            let id = id as usize;
            if id >= self.config.vocab_size {
                return Err(ModelError::Tokenizer(format!("token id {id} outside vocabulary")));
            }
            x.row_mut(t).assign(&(&self.wte.row(id) + &self.wpe.row(t)));
        }
        for b in &self.blocks {
            let qkv = b.c_attn.forward(&b.ln_1.forward(&x));
            let (q, k, v) = (qkv.slice(s![.., ..e]), qkv.slice(s![.., e..2 * e]), qkv.slice(s![.., 2 * e..]));
            let (ctx, _) = multi_head_attention(&q.to_owned(), &k.to_owned(), &v.to_owned(), self.config.n_head, true);
            x += &b.attn_proj.forward(&ctx);
            let mut h = b.c_fc.forward(&b.ln_2.forward(&x));
            self.activation.apply(&mut h);
            x += &b.mlp_proj.forward(&h);
        }
        Ok(self.ln_f.forward(&x))
    }
}

impl Adapter for Gpt2 {
    fn model_id(&self) -> &str {
        &self.id
    }

    fn max_tokens(&self) -> usize {
        self.max_tokens
    }

    fn tokenize(&self, text: &str) -> Result<TokenizedSentence, ModelError> {
        let (_, sentence) = self.encode(text)?;
        check_context(self, sentence.len())?;
        Ok(sentence)
    }
}

impl CausalLm for Gpt2 {
    fn log_probs(&self, text: &str) -> Result<(TokenizedSentence, LogProbSequence), ModelError> {
        let (ids, sentence) = self.encode(text)?;
        check_context(self, ids.len())?;
        let hidden = self.hidden_states(&ids)?;
        // Only rows 0..T-1 predict an observed next token.
        let rows = hidden.slice(s![..ids.len() - 1, ..]);
        let logits = rows.dot(&self.wte.t());
        let mut values = vec![None];
        for (i, row) in logits.axis_iter(Axis(0)).enumerate() {
            let next = i + 1;
            values.push(if sentence.special_mask[next] { None } else { Some(log_prob_at(row, ids[next] as usize)) });
        }
        Ok((sentence, LogProbSequence { values }))
    }
}
