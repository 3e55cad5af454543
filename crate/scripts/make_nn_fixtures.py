"""Builds tiny random GPT-2 and BERT checkpoints plus reference outputs.

The Rust forward passes in crates/nn are checked against these. Run from the
repository root:

    python3 scripts/make_nn_fixtures.py
"""

import json
import pathlib

import torch
from tokenizers import Tokenizer, decoders, models, normalizers, pre_tokenizers, processors, trainers
from transformers import BertConfig, BertModel, GPT2Config, GPT2LMHeadModel

OUT = pathlib.Path("crates/nn/tests/fixtures")

CORPUS = [
    "The keys to the cabinet are on the table.",
    "The statue in the elves' gardens is old.",
    "The authors of the book were famous.",
    "Der Schlüssel zu den Schränken war verloren.",
    "Die Lehrerin der Kinder lachte gegen die Wand.",
    "Ключ от шкафов был потерян на кухне.",
    "Дорога через поля была длинной.",
    "Teknisyenlerin eğitmeni koştu.",
    "Öğrencilerin hocası geldiler.",
]

SENTENCES = [
    "The keys to the cabinet are on the table.",
    "Der Schlüssel zu den Schränken war verloren.",
    "Ключ от шкафов был потерян.",
    "Teknisyenlerin eğitmeni koştu.",
    "Çağ ğüş ßø zebra!",
]


def gpt2_tokenizer():
    tok = Tokenizer(models.BPE())
    tok.pre_tokenizer = pre_tokenizers.ByteLevel(add_prefix_space=False)
    tok.decoder = decoders.ByteLevel()
    tok.post_processor = processors.ByteLevel(trim_offsets=False)
    trainer = trainers.BpeTrainer(
        vocab_size=400,
        special_tokens=["<|endoftext|>"],
        initial_alphabet=pre_tokenizers.ByteLevel.alphabet(),
    )
    tok.train_from_iterator(CORPUS * 4, trainer)
    return tok


def bert_tokenizer():
    tok = Tokenizer(models.WordPiece(unk_token="[UNK]"))
    tok.normalizer = normalizers.BertNormalizer(lowercase=False, strip_accents=False)
    tok.pre_tokenizer = pre_tokenizers.BertPreTokenizer()
    trainer = trainers.WordPieceTrainer(
        vocab_size=300, special_tokens=["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    )
    tok.train_from_iterator(CORPUS * 4, trainer)
    cls, sep = tok.token_to_id("[CLS]"), tok.token_to_id("[SEP]")
    tok.post_processor = processors.TemplateProcessing(
        single="[CLS] $A [SEP]", special_tokens=[("[CLS]", cls), ("[SEP]", sep)]
    )
    tok.decoder = decoders.WordPiece()
    return tok


def gpt2():
    tok = gpt2_tokenizer()
    eot = tok.token_to_id("<|endoftext|>")
    config = GPT2Config(
        vocab_size=tok.get_vocab_size(),
        n_positions=64,
        n_embd=32,
        n_layer=2,
        n_head=4,
        bos_token_id=eot,
        eos_token_id=eot,
        initializer_range=0.2,
    )
    torch.manual_seed(0)
    model = GPT2LMHeadModel(config).eval()
    out = OUT / "tiny-gpt2"
    out.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out, safe_serialization=True)
    tok.save(str(out / "tokenizer.json"))

    cases = []
    for text in SENTENCES:
        enc = tok.encode(text, add_special_tokens=False)
        ids = [eot] + enc.ids
        with torch.no_grad():
            logits = model(torch.tensor([ids])).logits[0]
        lp = torch.log_softmax(logits.double(), dim=-1)
        values = [None] + [lp[i - 1, ids[i]].item() for i in range(1, len(ids))]
        cases.append({"text": text, "ids": ids, "offsets": [list(o) for o in enc.offsets], "log_probs": values})
    (out / "expected.json").write_text(json.dumps(cases, ensure_ascii=False, indent=1))


def bert():
    tok = bert_tokenizer()
    config = BertConfig(
        vocab_size=tok.get_vocab_size(),
        hidden_size=32,
        num_hidden_layers=3,
        num_attention_heads=4,
        intermediate_size=64,
        max_position_embeddings=64,
        initializer_range=0.2,
        attn_implementation="eager",
    )
    torch.manual_seed(1)
    model = BertModel(config, add_pooling_layer=False).eval()
    out = OUT / "tiny-bert"
    out.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out, safe_serialization=True)
    tok.save(str(out / "tokenizer.json"))

    cases = []
    for text in SENTENCES:
        enc = tok.encode(text)
        with torch.no_grad():
            res = model(torch.tensor([enc.ids]), output_attentions=True)
        attn = [a[0].tolist() for a in res.attentions]
        cases.append({"text": text, "ids": enc.ids, "offsets": [list(o) for o in enc.offsets], "attentions": attn})
    (out / "expected.json").write_text(json.dumps(cases, ensure_ascii=False))


if __name__ == "__main__":
    gpt2()
    bert()
