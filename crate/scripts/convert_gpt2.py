"""Converts Hugging Face GPT-2 weights into the gptft checkpoint container.

The converted file holds the backbone only (no classification head); the
`train` command initializes a head when it loads it. The language-model
output matrix is dropped.

Usage: python scripts/convert_gpt2.py <model-dir-or-name> <out.ckpt> [--n-classes C]
"""
import argparse
import json
import struct

import numpy as np

MAGIC = b"GPT2CKPT"
VERSION = 1


def config_from_hf(hf, n_classes=2):
    return {
        "vocab_size": hf.vocab_size,
        "max_positions": hf.n_positions,
        "n_layers": hf.n_layer,
        "n_heads": hf.n_head,
        "d_model": hf.n_embd,
        "d_ff": hf.n_inner or 4 * hf.n_embd,
        "layer_norm_eps": hf.layer_norm_epsilon,
        "n_classes": n_classes,
        "dropout_rate": 0.0,
    }


def tensor_map(n_layers):
    """(checkpoint name, HF state-dict key) pairs in canonical order.

    HF stores its projections as Conv1D modules with [in, out] weights,
    which is already the layout the forward pass multiplies by.
    """
    pairs = [("token_embedding", "wte.weight"), ("position_embedding", "wpe.weight")]
    for i in range(n_layers):
        for ours, theirs in [
            ("ln1.gamma", "ln_1.weight"),
            ("ln1.beta", "ln_1.bias"),
            ("attn.qkv.weight", "attn.c_attn.weight"),
            ("attn.qkv.bias", "attn.c_attn.bias"),
            ("attn.proj.weight", "attn.c_proj.weight"),
            ("attn.proj.bias", "attn.c_proj.bias"),
            ("ln2.gamma", "ln_2.weight"),
            ("ln2.beta", "ln_2.bias"),
            ("mlp.fc.weight", "mlp.c_fc.weight"),
            ("mlp.fc.bias", "mlp.c_fc.bias"),
            ("mlp.out.weight", "mlp.c_proj.weight"),
            ("mlp.out.bias", "mlp.c_proj.bias"),
        ]:
            pairs.append((f"blocks.{i}.{ours}", f"h.{i}.{theirs}"))
    pairs += [("final_ln.gamma", "ln_f.weight"), ("final_ln.beta", "ln_f.bias")]
    return pairs


def write_checkpoint(path, config, tensors):
    """`tensors` is a list of (name, float32 ndarray) in canonical order."""
    index, offset = [], 0
    for name, array in tensors:
        index.append({"name": name, "shape": list(array.shape), "offset": offset, "dtype": "f32"})
        offset += 4 * array.size
    meta = json.dumps({"config": config, "tensors": index}, separators=(",", ":")).encode()
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<Q", len(meta)))
        f.write(meta)
        for _, array in tensors:
            f.write(np.ascontiguousarray(array, dtype="<f4").tobytes())


def convert_model(model, path, n_classes=2):
    """Writes a transformers GPT2Model / GPT2LMHeadModel to `path`."""
    state = {k.removeprefix("transformer."): v for k, v in model.state_dict().items()}
    config = config_from_hf(model.config, n_classes)
    tensors = [
        (ours, state[theirs].detach().cpu().float().numpy())
        for ours, theirs in tensor_map(config["n_layers"])
    ]
    write_checkpoint(path, config, tensors)
    return config


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("model", help="local directory or hub name of a GPT-2 model")
    parser.add_argument("out", help="output checkpoint path")
    parser.add_argument("--n-classes", type=int, default=2)
    args = parser.parse_args()

    from transformers import GPT2Model

    model = GPT2Model.from_pretrained(args.model)
    config = convert_model(model, args.out, args.n_classes)
    total = sum(p.numel() for p in model.parameters())
    print(f"wrote {args.out}: {config['n_layers']} blocks, d_model {config['d_model']}, {total} backbone parameters")


if __name__ == "__main__":
    main()
