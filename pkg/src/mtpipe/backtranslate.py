"""Backtranslation pipeline: translate monolingual text, filter the pairs.

The monolingual corpus is the authentic target side; the backend
translates it into synthetic sources (one attempt per sentence, each with
its own derived seed, so output does not depend on batching). Pairs then
pass a configurable filter; every dropped pair is counted under the first
matching reason, in this order: empty, len_window, len_ratio, src_eq_tgt.
The report satisfies n_pairs + sum(drops) + n_failures = n_input.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

from .corpus import Corpus, CorpusStats, Pair, ParallelCorpus, TokenizationPolicy, compute_stats
from .rng import stream_seed

DROP_REASONS = ("empty", "len_window", "len_ratio", "src_eq_tgt")


@dataclass(frozen=True)
class PairFilter:
    """Accept/reject rules for synthetic pairs.

    min_len/max_len bound the token count of both sides (max_len = None
    leaves the window open above); max_len_ratio bounds len(src)/len(tgt)
    in both directions.
    """

    min_len: int = 1
    max_len: int | None = None
    max_len_ratio: float = 1.5
    drop_empty: bool = True
    drop_src_eq_tgt: bool = True
    src_policy: TokenizationPolicy = TokenizationPolicy.WHITESPACE
    tgt_policy: TokenizationPolicy = TokenizationPolicy.WHITESPACE

    def __post_init__(self) -> None:
        if self.max_len_ratio < 1.0:
            raise ValueError("max_len_ratio must be >= 1")
        if self.min_len < 0 or (self.max_len is not None and self.max_len < self.min_len):
            raise ValueError("need 0 <= min_len <= max_len")

    def rejection_reason(self, src: str, tgt: str) -> str | None:
        src_len = len(self.src_policy.tokenize(src))
        tgt_len = len(self.tgt_policy.tokenize(tgt))
        if self.drop_empty and (src_len == 0 or tgt_len == 0):
            return "empty"
        for length in (src_len, tgt_len):
            if length < self.min_len or (self.max_len is not None and length > self.max_len):
                return "len_window"
        if src_len > 0 and tgt_len > 0:
            ratio = src_len / tgt_len
            if ratio > self.max_len_ratio or 1.0 / ratio > self.max_len_ratio:
                return "len_ratio"
        if self.drop_src_eq_tgt and src == tgt:
            return "src_eq_tgt"
        return None


@dataclass(frozen=True)
class BTReport:
    """Pipeline outcome: counts, drop histogram, and per-side statistics."""

    n_input: int
    n_pairs: int
    n_failures: int
    drops: dict[str, int]
    failures: tuple[tuple[int, str], ...]
    src_stats: CorpusStats
    tgt_stats: CorpusStats
    k: int
    seed: int
    mode: str
    model_id: str

    def consistent(self) -> bool:
        return self.n_pairs + sum(self.drops.values()) + self.n_failures == self.n_input

    def as_dict(self) -> dict:
        return {
            "n_input": self.n_input,
            "n_pairs": self.n_pairs,
            "n_failures": self.n_failures,
            "drops": dict(self.drops),
            "failures": [list(f) for f in self.failures],
            "src_stats": self.src_stats.as_dict(),
            "tgt_stats": self.tgt_stats.as_dict(),
            "k": self.k,
            "seed": self.seed,
            "mode": self.mode,
            "model_id": self.model_id,
        }


def run_backtranslation(
    mono: Corpus,
    backend,
    k: int,
    seed: int,
    pf: PairFilter,
    mode: str = "sample_topk",
) -> tuple[ParallelCorpus, BTReport]:
    """Translate every monolingual sentence and assemble filtered pairs.

    Sentence i uses stream_seed(seed, i), i counted over the corpus in
    order, so two runs with the same inputs produce identical output
    regardless of how translation requests were batched or interleaved.
    """
    texts = mono.texts()
    seeds = [stream_seed(seed, i) for i in range(len(texts))]
    results = backend.translate_batch(texts, mode, k, seeds)
    model_id = getattr(backend, "model_id", "unknown")

    pairs: list[Pair] = []
    drops = {reason: 0 for reason in DROP_REASONS}
    failures: list[tuple[int, str]] = []
    for i, result in enumerate(results):
        if not result.ok:
            failures.append((i, result.error))
            continue
        src, tgt = result.text, texts[i]
        reason = pf.rejection_reason(src, tgt)
        if reason is not None:
            drops[reason] += 1
            continue
        pairs.append(
            Pair(src, tgt, origin="synthetic", provenance=(("seed", seeds[i]), ("model", model_id), ("k", k)))
        )

    synthetic = ParallelCorpus(pairs)
    report = BTReport(
        n_input=len(texts),
        n_pairs=len(pairs),
        n_failures=len(failures),
        drops=drops,
        failures=tuple(failures),
        src_stats=compute_stats(Corpus.from_texts(synthetic.src_texts(), pf.src_policy)),
        tgt_stats=compute_stats(Corpus.from_texts(synthetic.tgt_texts(), pf.tgt_policy)),
        k=k,
        seed=seed,
        mode=mode,
        model_id=model_id,
    )
    return synthetic, report


def merge_corpora(bitext: ParallelCorpus, synthetic: ParallelCorpus, upsample_bitext: int = 1) -> ParallelCorpus:
    """bitext repeated upsample_bitext times, then the synthetic pairs."""
    if upsample_bitext < 1:
        raise ValueError("upsample_bitext must be >= 1")
    pairs = list(bitext.pairs) * upsample_bitext + list(synthetic.pairs)
    return ParallelCorpus(pairs)


def origin_runs(pc: ParallelCorpus) -> list[list]:
    """Run-length encoding of per-pair origin tags, for sidecar manifests."""
    runs: list[list] = []
    for pair in pc:
        if runs and runs[-1][0] == pair.origin:
            runs[-1][1] += 1
        else:
            runs.append([pair.origin, 1])
    return runs


def checksum_texts(texts: list[str]) -> str:
    digest = hashlib.sha256()
    for t in texts:
        digest.update(t.encode("utf-8"))
        digest.update(b"\n")
    return digest.hexdigest()


def bt_manifest(synthetic: ParallelCorpus, report: BTReport) -> dict:
    """Machine-readable record of a backtranslation run."""
    return {
        "report": report.as_dict(),
        "checksums": {
            "src": checksum_texts(synthetic.src_texts()),
            "tgt": checksum_texts(synthetic.tgt_texts()),
        },
        "origins": origin_runs(synthetic),
    }


def write_bt_manifest(path: str, synthetic: ParallelCorpus, report: BTReport) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(bt_manifest(synthetic, report), fh, ensure_ascii=False, indent=2)
        fh.write("\n")
