#!/usr/bin/env python3
"""Converts a Hugging Face checkpoint into the directory layout the Rust
loader reads: config.json, model.safetensors and tokenizer.json.

    python scripts/export_checkpoint.py gpt2 "$ATTRACTION_MODELS_DIR/gpt2"

The source may be a hub id or a local directory.
"""

import argparse
import json
import pathlib

import torch
from safetensors.torch import save_file
from transformers import AutoConfig, AutoModel, AutoTokenizer, GPT2LMHeadModel


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("source")
    ap.add_argument("dest", type=pathlib.Path)
    args = ap.parse_args()

    config = AutoConfig.from_pretrained(args.source)
    if config.model_type == "gpt2":
        model = GPT2LMHeadModel.from_pretrained(args.source, torch_dtype=torch.float32)
    elif config.model_type == "bert":
        model = AutoModel.from_pretrained(args.source, torch_dtype=torch.float32, add_pooling_layer=False)
    else:
        raise SystemExit(f"unsupported architecture {config.model_type!r}; expected gpt2 or bert")
    tokenizer = AutoTokenizer.from_pretrained(args.source, use_fast=True)
    if not tokenizer.is_fast:
        raise SystemExit("no fast tokenizer available for this checkpoint")

    args.dest.mkdir(parents=True, exist_ok=True)
    # tied weights share storage; safetensors needs independent tensors
    state = {k: v.detach().contiguous().clone() for k, v in model.state_dict().items()}
    save_file(state, str(args.dest / "model.safetensors"))
    with open(args.dest / "config.json", "w", encoding="utf-8") as f:
        json.dump(config.to_dict(), f, indent=2, sort_keys=True)
    tokenizer.backend_tokenizer.save(str(args.dest / "tokenizer.json"))
    print(f"wrote {args.dest}")


if __name__ == "__main__":
    main()
