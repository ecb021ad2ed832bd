"""Greedy, beam, and top-k sampling decoders.

Conventions shared by all three:
  * a hypothesis ends when EOS is chosen (EOS is recorded like any token)
    or when max_len tokens have been generated (flagged truncated);
  * scores are sums of the model's full-distribution log-softmax at each
    chosen token, so re-scoring a token sequence reproduces the score;
  * equal logits are broken towards the lower token id, which makes
    argmax, beam expansion, and the top-k support set deterministic.

Top-k sampling restricts each step to the k highest-logit tokens,
renormalizes via softmax over that set, and samples from it; the recorded
per-step rank is the chosen token's 1-based position in the descending
logit order.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..rng import SplitMix64


@dataclass(frozen=True)
class Hypothesis:
    """Decoder output: tokens, cumulative log-probability, per-step ranks."""

    tokens: tuple[int, ...]
    score: float
    ranks: tuple[int, ...]
    truncated: bool = False

    def __post_init__(self) -> None:
        if len(self.tokens) != len(self.ranks):
            raise ValueError("ranks must align with tokens")

    def surface_tokens(self, eos: int) -> tuple[int, ...]:
        """Tokens without the terminating EOS."""
        if self.tokens and self.tokens[-1] == eos:
            return self.tokens[:-1]
        return self.tokens


def _step_logits(model, src: Sequence[int], prefix: Sequence[int]) -> np.ndarray:
    logits = np.asarray(model.next_logits(src, prefix), dtype=np.float64)
    if logits.shape != (model.vocab_size(),):
        raise ValueError(f"model returned logits of shape {logits.shape}, expected ({model.vocab_size()},)")
    if not np.all(np.isfinite(logits)):
        raise ValueError("model returned non-finite logits")
    return logits


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max()
    return shifted - np.log(np.exp(shifted).sum())


def _descending_order(logits: np.ndarray) -> np.ndarray:
    # Stable sort on -logits resolves ties towards the lower token id.
    return np.argsort(-logits, kind="stable")


def score_tokens(model, src: Sequence[int], tokens: Sequence[int]) -> float:
    """Independent re-scoring: sum of log-softmax of each token in sequence."""
    total = 0.0
    prefix: list[int] = []
    for tok in tokens:
        ls = _log_softmax(_step_logits(model, src, prefix))
        total += float(ls[tok])
        prefix.append(tok)
    return total


def decode_greedy(model, src: Sequence[int], max_len: int) -> Hypothesis:
    """Pick the argmax token each step; every recorded rank is 1."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    tokens: list[int] = []
    ranks: list[int] = []
    score = 0.0
    eos = model.eos_id()
    for _ in range(max_len):
        logits = _step_logits(model, src, tokens)
        ls = _log_softmax(logits)
        tok = int(_descending_order(logits)[0])
        tokens.append(tok)
        ranks.append(1)
        score += float(ls[tok])
        if tok == eos:
            return Hypothesis(tuple(tokens), score, tuple(ranks), truncated=False)
    return Hypothesis(tuple(tokens), score, tuple(ranks), truncated=True)


def decode_topk_sample(model, src: Sequence[int], k: int, seed: int, max_len: int) -> Hypothesis:
    """Sample each step from the renormalized top-k of the distribution.

    Deterministic for a fixed (model, src, k, seed). k = 1 reduces to
    greedy. EOS competes for the top-k set like any other token.
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > model.vocab_size():
        warnings.warn(f"k={k} exceeds vocab size {model.vocab_size()}; clamping", stacklevel=2)
        k = model.vocab_size()
    rng = SplitMix64(seed)
    tokens: list[int] = []
    ranks: list[int] = []
    score = 0.0
    eos = model.eos_id()
    for _ in range(max_len):
        logits = _step_logits(model, src, tokens)
        ls = _log_softmax(logits)
        top = _descending_order(logits)[:k]
        weights = np.exp(ls[top] - ls[top].max())
        probs = weights / weights.sum()
        u = rng.next_float()
        acc = 0.0
        choice = k - 1
        for j, p in enumerate(probs):
            acc += float(p)
            if u < acc:
                choice = j
                break
        tok = int(top[choice])
        tokens.append(tok)
        ranks.append(choice + 1)
        score += float(ls[tok])
        if tok == eos:
            return Hypothesis(tuple(tokens), score, tuple(ranks), truncated=False)
    return Hypothesis(tuple(tokens), score, tuple(ranks), truncated=True)


@dataclass(frozen=True)
class _Beam:
    tokens: tuple[int, ...]
    ranks: tuple[int, ...]
    score: float


def decode_beam(model, src: Sequence[int], beam: int, max_len: int) -> list[Hypothesis]:
    """Length-unnormalized beam search; returns up to `beam` hypotheses
    sorted by score descending. beam = 1 is token-identical to greedy."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    if beam < 1:
        raise ValueError("beam must be >= 1")
    eos = model.eos_id()
    active: list[_Beam] = [_Beam((), (), 0.0)]
    finished: list[Hypothesis] = []
    for _ in range(max_len):
        candidates: list[tuple[float, int, int, int]] = []  # (score, token, beam idx, rank)
        for bi, b in enumerate(active):
            logits = _step_logits(model, src, b.tokens)
            ls = _log_softmax(logits)
            order = _descending_order(logits)
            for pos, tok in enumerate(order):
                candidates.append((b.score + float(ls[tok]), int(tok), bi, pos + 1))
        candidates.sort(key=lambda c: (-c[0], c[1], c[2]))
        next_active: list[_Beam] = []
        for cand_score, tok, bi, rank in candidates[:beam]:
            parent = active[bi]
            extended = _Beam(parent.tokens + (tok,), parent.ranks + (rank,), cand_score)
            if tok == eos:
                finished.append(Hypothesis(extended.tokens, extended.score, extended.ranks, truncated=False))
            else:
                next_active.append(extended)
        active = next_active
        if not active:
            break
    finished.extend(Hypothesis(b.tokens, b.score, b.ranks, truncated=True) for b in active)
    finished.sort(key=lambda h: (-h.score, h.tokens))
    return finished[:beam]
