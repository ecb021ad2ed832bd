"""Corpus-level BLEU with brevity penalty and exponential smoothing.

Scores are comparable only within this toolkit: the built-in zh and vi
tokenizers below are fixed here rather than reimplementing an external
tool, which is enough for the relative deltas the pipeline reports.

Tokenization:
  zh: every CJK codepoint is its own token, punctuation codepoints
      (Unicode category P*) are their own tokens, remaining runs split on
      whitespace;
  vi: split on whitespace, then peel leading/trailing punctuation off each
      token (interior punctuation such as 1/12/2021 stays attached).

Scoring: clipped n-gram matches up to n = 4 aggregated over the corpus,
single reference. Smoothing: starting from s = 1, each order with zero
matches but a nonzero candidate count doubles s and scores
p_n = 1 / (s * candidates_n). An order with no candidate n-grams at all
(every hypothesis shorter than n tokens) makes the score 0. BP is
min(1, exp(1 - ref_len / sys_len)), and 0 if sys_len = 0.
"""

from __future__ import annotations

import math
import unicodedata
from collections import Counter
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Sequence

from .corpus import is_cjk_char
from .errors import DataError

NGRAM_ORDER = 4


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize_for_bleu(text: str, lang: str) -> list[str]:
    """Language-specific BLEU tokenization; case is preserved."""
    if lang == "zh":
        tokens: list[str] = []
        run: list[str] = []
        for ch in text:
            if is_cjk_char(ch) or _is_punct(ch):
                if run:
                    tokens.extend("".join(run).split())
                    run = []
                tokens.append(ch)
            else:
                run.append(ch)
        if run:
            tokens.extend("".join(run).split())
        return tokens
    if lang == "vi":
        tokens = []
        for word in text.split():
            head: list[str] = []
            while word and _is_punct(word[0]):
                head.append(word[0])
                word = word[1:]
            tail: list[str] = []
            while word and _is_punct(word[-1]):
                tail.append(word[-1])
                word = word[:-1]
            tokens.extend(head)
            if word:
                tokens.append(word)
            tokens.extend(reversed(tail))
        return tokens
    raise ValueError(f"unsupported language {lang!r} (expected 'zh' or 'vi')")


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


@dataclass(frozen=True)
class BleuScore:
    """Corpus BLEU in [0, 100] plus its sufficient statistics."""

    bleu: float
    precisions: tuple[float, float, float, float]
    bp: float
    sys_len: int
    ref_len: int

    def rounded(self) -> float:
        """Reporting value: half-up to one decimal."""
        return float(Decimal(repr(self.bleu)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))

    def as_dict(self) -> dict:
        return {
            "bleu": self.rounded(),
            "bleu_unrounded": self.bleu,
            "precisions": list(self.precisions),
            "bp": self.bp,
            "sys_len": self.sys_len,
            "ref_len": self.ref_len,
        }


def corpus_stats(hyps: Sequence[str], refs: Sequence[str], lang: str) -> tuple[list[int], list[int], int, int]:
    """Aggregate clipped match and candidate counts; these are additive
    across corpora, so scoring a concatenation equals combining stats."""
    if len(hyps) != len(refs):
        raise DataError(f"hypothesis/reference length mismatch: {len(hyps)} vs {len(refs)}")
    if not hyps:
        raise DataError("cannot score an empty corpus")
    correct = [0] * NGRAM_ORDER
    total = [0] * NGRAM_ORDER
    sys_len = 0
    ref_len = 0
    for hyp, ref in zip(hyps, refs):
        hyp_tokens = tokenize_for_bleu(hyp, lang)
        ref_tokens = tokenize_for_bleu(ref, lang)
        sys_len += len(hyp_tokens)
        ref_len += len(ref_tokens)
        for n in range(1, NGRAM_ORDER + 1):
            hyp_counts = _ngrams(hyp_tokens, n)
            if not hyp_counts:
                continue
            ref_counts = _ngrams(ref_tokens, n)
            total[n - 1] += sum(hyp_counts.values())
            correct[n - 1] += sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())
    return correct, total, sys_len, ref_len


def score_from_stats(correct: Sequence[int], total: Sequence[int], sys_len: int, ref_len: int) -> BleuScore:
    precisions = [0.0] * NGRAM_ORDER
    smooth = 1
    degenerate = False
    for n in range(1, NGRAM_ORDER + 1):
        if total[n - 1] == 0:
            degenerate = True  # no candidate n-grams at this order at all
        elif correct[n - 1] == 0:
            smooth *= 2
            precisions[n - 1] = 1.0 / (smooth * total[n - 1])
        else:
            precisions[n - 1] = correct[n - 1] / total[n - 1]
    if sys_len == 0:
        bp = 0.0
    elif sys_len >= ref_len:
        bp = 1.0
    else:
        bp = math.exp(1.0 - ref_len / sys_len)
    if degenerate or bp == 0.0:
        bleu = 0.0
    else:
        bleu = 100.0 * bp * math.exp(sum(math.log(p) for p in precisions) / NGRAM_ORDER)
    return BleuScore(bleu, tuple(precisions), bp, sys_len, ref_len)


def corpus_bleu(hyps: Sequence[str], refs: Sequence[str], lang: str) -> BleuScore:
    """Single-reference corpus BLEU over aligned hypothesis/reference lists."""
    return score_from_stats(*corpus_stats(hyps, refs, lang))
