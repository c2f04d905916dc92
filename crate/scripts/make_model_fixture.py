"""Builds a tiny randomly initialized GPT-2 with `transformers`, converts it,
and records its hidden states on a padded batch as the forward-pass oracle.

Usage: python scripts/make_model_fixture.py crates/core/tests/fixtures/model
"""
import json
import os
import sys

import torch
from transformers import GPT2Config, GPT2Model

sys.path.insert(0, os.path.dirname(__file__))
from convert_gpt2 import convert_model  # noqa: E402


def main(out_dir):
    os.makedirs(out_dir, exist_ok=True)
    torch.manual_seed(20240611)
    hf = GPT2Config(
        vocab_size=256,
        n_positions=64,
        n_embd=16,
        n_layer=2,
        n_head=2,
        n_inner=64,
        activation_function="gelu_new",
        layer_norm_epsilon=1e-5,
        bos_token_id=255,
        eos_token_id=255,
        resid_pdrop=0.0,
        embd_pdrop=0.0,
        attn_pdrop=0.0,
    )
    model = GPT2Model(hf).eval()
    # Push LayerNorm affine terms and biases away from their trivial
    # initial values so every tensor influences the output.
    with torch.no_grad():
        for name, p in model.named_parameters():
            if "ln" in name or name.endswith("bias"):
                p.add_(0.1 * torch.randn_like(p))
    convert_model(model, os.path.join(out_dir, "tiny_gpt2.ckpt"))

    seqs = [[72, 101, 108, 108, 111, 32, 119, 111, 114, 108, 100], [3, 250, 17, 99]]
    seq = max(map(len, seqs))
    pad = 255
    ids = torch.tensor([s + [pad] * (seq - len(s)) for s in seqs])
    mask = torch.tensor([[1] * len(s) + [0] * (seq - len(s)) for s in seqs])
    with torch.no_grad():
        hidden = model(input_ids=ids, attention_mask=mask).last_hidden_state
    golden = {
        "token_ids": ids.tolist(),
        "attention_mask": mask.tolist(),
        "pad_id": pad,
        "hidden": [[hidden[b, t].tolist() for t in range(len(s))] for b, s in enumerate(seqs)],
    }
    with open(os.path.join(out_dir, "golden.json"), "w") as f:
        json.dump(golden, f)
    print(f"wrote fixture to {out_dir}")


if __name__ == "__main__":
    main(sys.argv[1])
