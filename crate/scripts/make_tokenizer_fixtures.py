"""Builds the small byte-level BPE fixture and its golden encodings.

The vocabulary is trained with the `tokenizers` library; golden encodings
come from two independent references that must agree: the `tokenizers`
ByteLevel BPE pipeline and a transcription of the original GPT-2
`encoder.py` algorithm using the `regex` module.

Usage: python scripts/make_tokenizer_fixtures.py crates/core/tests/fixtures/tokenizer
"""
import json
import os
import random
import sys

import regex
from tokenizers import Tokenizer, decoders, models, pre_tokenizers, trainers

CORPUS = [
    "No evidence of pneumonia.",
    "Findings possibly representing pneumonia in the right lower lobe.",
    "There is a small left pleural effusion. Heart size is normal.",
    "Mild cardiomegaly with pulmonary edema; no pneumothorax.",
    "IMPRESSION: No acute cardiopulmonary process.",
    "The endotracheal tube terminates 4 cm above the carina.",
    "Hello world! It's a test, isn't it? We've seen 1234 cases.",
    "Lungs are clear. No focal consolidation, effusion, or pneumothorax.",
    "Atelectasis at the left base, cannot exclude infection.",
    "Comparison is made to the prior study from 2019-03-14.",
]

SENTENCES = [
    "Hello world",
    "No evidence of pneumonia.",
    "Findings possibly representing pneumonia.",
    "No pleural effusion. Right lower lobe pneumonia.",
    "It's 12:30 and we've got   3 spaces\n\nand newlines ",
    "Émigré café — naïve ☃ résumé",
    "",
]


def bytes_to_unicode():
    bs = list(range(ord("!"), ord("~") + 1)) + list(range(ord("¡"), ord("¬") + 1)) + list(range(ord("®"), ord("ÿ") + 1))
    cs = bs[:]
    n = 0
    for b in range(256):
        if b not in bs:
            bs.append(b)
            cs.append(256 + n)
            n += 1
    return dict(zip(bs, map(chr, cs)))


class ReferenceEncoder:
    """Transcription of the GPT-2 reference encoder."""

    pat = regex.compile(r"""'s|'t|'re|'ve|'m|'ll|'d| ?\p{L}+| ?\p{N}+| ?[^\s\p{L}\p{N}]+|\s+(?!\S)|\s+""")

    def __init__(self, encoder, merges):
        self.encoder = encoder
        self.ranks = {tuple(m): i for i, m in enumerate(merges)}
        self.byte_encoder = bytes_to_unicode()

    def bpe(self, token):
        word = list(token)
        while len(word) > 1:
            pairs = {(word[i], word[i + 1]) for i in range(len(word) - 1)}
            best = min(pairs, key=lambda p: self.ranks.get(p, float("inf")))
            if best not in self.ranks:
                break
            first, second = best
            out, i = [], 0
            while i < len(word):
                if i < len(word) - 1 and word[i] == first and word[i + 1] == second:
                    out.append(first + second)
                    i += 2
                else:
                    out.append(word[i])
                    i += 1
            word = out
        return word

    def encode(self, text):
        ids = []
        for piece in regex.findall(self.pat, text):
            piece = "".join(self.byte_encoder[b] for b in piece.encode("utf-8"))
            ids.extend(self.encoder[t] for t in self.bpe(piece))
        return ids


def main(out_dir):
    os.makedirs(out_dir, exist_ok=True)
    rng = random.Random(7)
    words = " ".join(CORPUS).split()
    corpus = CORPUS + [" ".join(rng.choice(words) for _ in range(12)) for _ in range(400)]

    tok = Tokenizer(models.BPE())
    tok.pre_tokenizer = pre_tokenizers.ByteLevel(add_prefix_space=False)
    tok.decoder = decoders.ByteLevel()
    trainer = trainers.BpeTrainer(
        vocab_size=600,
        special_tokens=["<|endoftext|>"],
        initial_alphabet=pre_tokenizers.ByteLevel.alphabet(),
        show_progress=False,
    )
    tok.train_from_iterator(corpus, trainer)
    tok.model.save(out_dir)  # writes vocab.json and merges.txt

    with open(os.path.join(out_dir, "vocab.json")) as f:
        encoder = json.load(f)
    with open(os.path.join(out_dir, "merges.txt")) as f:
        merges = [l.rstrip("\n").split(" ") for l in f if l.strip() and not l.startswith("#version")]
    # Reload so the golden ids come from the saved files, not the trainer.
    hf = Tokenizer(models.BPE.from_file(os.path.join(out_dir, "vocab.json"), os.path.join(out_dir, "merges.txt")))
    hf.pre_tokenizer = pre_tokenizers.ByteLevel(add_prefix_space=False)
    hf.decoder = decoders.ByteLevel()
    ref = ReferenceEncoder(encoder, merges)

    golden = []
    for s in SENTENCES:
        a = hf.encode(s).ids if s else []
        b = ref.encode(s)
        assert a == b, (s, a, b)
        golden.append({"text": s, "ids": a})

    batch_texts = SENTENCES[:5]
    max_len = 8
    pad = encoder["<|endoftext|>"]
    rows = [ref.encode(s)[:max_len] for s in batch_texts]
    batch = {
        "texts": batch_texts,
        "max_len": max_len,
        "pad_id": pad,
        "token_ids": [r + [pad] * (max_len - len(r)) for r in rows],
        "attention_mask": [[1] * len(r) + [0] * (max_len - len(r)) for r in rows],
        "last_index": [len(r) - 1 for r in rows],
    }
    with open(os.path.join(out_dir, "golden.json"), "w") as f:
        json.dump({"encodings": golden, "batch": batch}, f, indent=1, ensure_ascii=False)
        f.write("\n")


if __name__ == "__main__":
    main(sys.argv[1])
