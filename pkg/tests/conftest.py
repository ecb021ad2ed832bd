"""Shared fixtures and oracle helpers."""

from __future__ import annotations

import numpy as np
import pytest

from mtpipe.corpus import Corpus
from mtpipe.decoder.models import CharVocab, ToyCipherModel, cipher_text_fn, rotation_cipher
from mtpipe.rng import GOLDEN, MASK64, SplitMix64, mix64


@pytest.fixture
def vi_texts() -> list[str]:
    return [
        "xin chao the gioi hom nay",
        "toi thich lap trinh may tinh",
        "hom nay troi dep qua",
        "ngay mai chung ta di hoc",
    ]


@pytest.fixture
def cipher_setup(vi_texts):
    """(vocab, cipher map, noiseless model, text-level cipher fn) over vi_texts."""
    vocab = CharVocab.from_texts(vi_texts)
    cipher = rotation_cipher(vocab)
    model = ToyCipherModel(len(vocab), vocab.EOS, cipher, eps=0.0)
    return vocab, cipher, model, cipher_text_fn(vocab, cipher)


class SeededConditionalModel:
    """Random but fully deterministic prefix-conditional logits, for oracles."""

    def __init__(self, n_vocab: int, eos: int, seed: int):
        self.n_vocab = n_vocab
        self.eos = eos
        self.seed = seed

    def vocab_size(self) -> int:
        return self.n_vocab

    def eos_id(self) -> int:
        return self.eos

    def next_logits(self, src, prefix):
        key = mix64(self.seed ^ mix64(len(src) + 1))
        for tok in src:
            key = mix64((key + tok * GOLDEN) & MASK64)
        for tok in prefix:
            key = mix64((key ^ (tok + 3)) & MASK64)
        rng = SplitMix64(key)
        return np.array([rng.next_float() * 8.0 - 4.0 for _ in range(self.n_vocab)])


class TableModel:
    """Hand-set logits per generated prefix; unlisted prefixes favour EOS."""

    def __init__(self, n_vocab: int, eos: int, table: dict[tuple, list[float]]):
        self.n_vocab = n_vocab
        self.eos = eos
        self.table = {tuple(k): np.asarray(v, dtype=float) for k, v in table.items()}

    def vocab_size(self) -> int:
        return self.n_vocab

    def eos_id(self) -> int:
        return self.eos

    def next_logits(self, src, prefix):
        key = tuple(prefix)
        if key in self.table:
            return self.table[key]
        logits = np.full(self.n_vocab, -50.0)
        logits[self.eos] = 0.0
        return logits


def log_softmax_ref(logits) -> np.ndarray:
    """Independent log-softmax for oracles (plain formula, float64)."""
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max()
    return shifted - np.log(np.exp(shifted).sum())


def enumerate_hypotheses(model, src, max_len: int) -> list[tuple[tuple[int, ...], float]]:
    """Brute-force list of every possible decode outcome and its score.

    A sequence ends at EOS (recorded like any token) or at max_len tokens.
    """
    eos = model.eos_id()
    out: list[tuple[tuple[int, ...], float]] = []

    def rec(prefix: list[int], score: float) -> None:
        ls = log_softmax_ref(model.next_logits(src, prefix))
        for tok in range(model.vocab_size()):
            tok_score = score + float(ls[tok])
            seq = prefix + [tok]
            if tok == eos or len(seq) == max_len:
                out.append((tuple(seq), tok_score))
            else:
                rec(seq, tok_score)

    rec([], 0.0)
    out.sort(key=lambda item: (-item[1], item[0]))
    return out


def corpus_from(texts, policy=None) -> Corpus:
    if policy is None:
        return Corpus.from_texts(texts)
    return Corpus.from_texts(texts, policy)
