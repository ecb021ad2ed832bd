"""Corpus loading, tokenization for statistics, filtering, sampling, dedup.

Corpus files are UTF-8 plain text, LF-terminated, one sentence per line.
Blank and whitespace-only lines are dropped at load time and counted in
the load report. Parallel corpora are two aligned files with equal line
counts, validated at load.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import CorpusFormatError, ParallelMismatchError
from .rng import SplitMix64

# CJK blocks treated as one-token-per-codepoint under the char_cjk policy.
_CJK_RANGES = ((0x4E00, 0x9FFF), (0x3400, 0x4DBF))


def is_cjk_char(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _CJK_RANGES)


class TokenizationPolicy(enum.Enum):
    """How sentences are tokenized for counting and filtering.

    char_cjk: every CJK codepoint is its own token; the remaining runs are
    split on whitespace (the Chinese convention: each character one token).
    whitespace: split on Unicode whitespace only (the Vietnamese convention).
    """

    CHAR_CJK = "char_cjk"
    WHITESPACE = "whitespace"

    def tokenize(self, text: str) -> list[str]:
        if self is TokenizationPolicy.WHITESPACE:
            return text.split()
        tokens: list[str] = []
        run: list[str] = []
        for ch in text:
            if is_cjk_char(ch):
                if run:
                    tokens.extend("".join(run).split())
                    run = []
                tokens.append(ch)
            else:
                run.append(ch)
        if run:
            tokens.extend("".join(run).split())
        return tokens


def policy_for_lang(lang: str) -> TokenizationPolicy:
    """zh counts characters, everything else splits on whitespace."""
    return TokenizationPolicy.CHAR_CJK if lang == "zh" else TokenizationPolicy.WHITESPACE


@dataclass(frozen=True, slots=True)
class Sentence:
    """One corpus line. index is the 0-based line position in the source file."""

    text: str
    index: int


@dataclass(frozen=True, slots=True)
class LoadReport:
    n_lines: int
    n_sentences: int
    n_blank: int

    def as_dict(self) -> dict:
        return {"n_lines": self.n_lines, "n_sentences": self.n_sentences, "n_blank": self.n_blank}


@dataclass(frozen=True, slots=True)
class CorpusStats:
    """Sentence count, distinct-token count and mean sentence length.

    avg_len keeps full precision; integer rounding happens only when a
    report table is rendered.
    """

    n_sents: int
    vocab_size: int
    avg_len: float

    def as_dict(self) -> dict:
        return {"n_sents": self.n_sents, "vocab_size": self.vocab_size, "avg_len": self.avg_len}


@dataclass(frozen=True, slots=True)
class FilterReport:
    n_input: int
    n_kept: int
    n_dropped: int
    coverage: float

    def as_dict(self) -> dict:
        return {
            "n_input": self.n_input,
            "n_kept": self.n_kept,
            "n_dropped": self.n_dropped,
            "coverage": self.coverage,
        }


@dataclass(frozen=True, slots=True)
class LengthFilter:
    """Keep sentences whose token count falls in [min_len, max_len] inclusive."""

    min_len: int = 10
    max_len: int = 60
    policy: TokenizationPolicy = TokenizationPolicy.WHITESPACE

    def __post_init__(self) -> None:
        if not (1 <= self.min_len <= self.max_len):
            raise ValueError(f"need 1 <= min_len <= max_len, got [{self.min_len}, {self.max_len}]")


class Corpus:
    """Immutable ordered collection of sentences with a tokenization policy."""

    __slots__ = ("sentences", "policy", "load_report")

    def __init__(
        self,
        sentences: Iterable[Sentence],
        policy: TokenizationPolicy = TokenizationPolicy.WHITESPACE,
        load_report: LoadReport | None = None,
    ):
        self.sentences = tuple(sentences)
        self.policy = policy
        self.load_report = load_report

    @classmethod
    def from_texts(cls, texts: Iterable[str], policy: TokenizationPolicy = TokenizationPolicy.WHITESPACE) -> "Corpus":
        return cls((Sentence(t, i) for i, t in enumerate(texts)), policy)

    def texts(self) -> list[str]:
        return [s.text for s in self.sentences]

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self) -> Iterator[Sentence]:
        return iter(self.sentences)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Corpus):
            return NotImplemented
        return self.sentences == other.sentences and self.policy == other.policy

    def __repr__(self) -> str:
        return f"Corpus(n={len(self.sentences)}, policy={self.policy.value})"


def load_corpus(path: str, policy: TokenizationPolicy = TokenizationPolicy.WHITESPACE) -> Corpus:
    """Load one sentence per line; invalid UTF-8 is reported with its line number."""
    with open(path, "rb") as fh:
        raw = fh.read()
    sentences: list[Sentence] = []
    n_blank = 0
    lines = raw.split(b"\n")
    if lines and lines[-1] == b"":
        lines.pop()  # trailing LF, not an empty sentence
    for i, line in enumerate(lines):
        try:
            text = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CorpusFormatError(f"{path}: line {i + 1}: invalid UTF-8 ({exc.reason})") from exc
        text = text.rstrip("\r")
        if not text.strip():
            n_blank += 1
            continue
        sentences.append(Sentence(text, i))
    report = LoadReport(n_lines=len(lines), n_sentences=len(sentences), n_blank=n_blank)
    return Corpus(sentences, policy, report)


def write_corpus(corpus: Corpus, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for s in corpus:
            fh.write(s.text)
            fh.write("\n")


def compute_stats(corpus: Corpus, policy: TokenizationPolicy | None = None) -> CorpusStats:
    """Count sentences, distinct tokens and mean token count under `policy`."""
    pol = policy or corpus.policy
    vocab: set[str] = set()
    total_tokens = 0
    for s in corpus:
        toks = pol.tokenize(s.text)
        total_tokens += len(toks)
        vocab.update(toks)
    n = len(corpus)
    return CorpusStats(n_sents=n, vocab_size=len(vocab), avg_len=(total_tokens / n if n else 0.0))


def filter_by_length(corpus: Corpus, f: LengthFilter) -> tuple[Corpus, FilterReport]:
    """Keep sentences with token counts in the filter window (inclusive)."""
    kept = [s for s in corpus if f.min_len <= len(f.policy.tokenize(s.text)) <= f.max_len]
    n = len(corpus)
    coverage = len(kept) / n if n else 1.0
    report = FilterReport(n_input=n, n_kept=len(kept), n_dropped=n - len(kept), coverage=coverage)
    return Corpus(kept, corpus.policy), report


def sample_uniform(corpus: Corpus, n: int, seed: int) -> Corpus:
    """Uniform sample without replacement, preserving original relative order.

    Deterministic for a fixed seed on every platform (see mtpipe.rng).
    Indices are selected first and then gathered, so the result does not
    depend on how the corpus might be sharded for parallel work.
    """
    if n > len(corpus):
        raise ValueError(f"cannot sample {n} sentences from a corpus of {len(corpus)}")
    rng = SplitMix64(seed)
    idx = rng.sample_indices(len(corpus), n)
    return Corpus((corpus.sentences[i] for i in idx), corpus.policy)


def dedup(corpus: Corpus) -> tuple[Corpus, int]:
    """Drop exact-string duplicates, keeping the first occurrence."""
    seen: set[str] = set()
    kept: list[Sentence] = []
    for s in corpus:
        if s.text in seen:
            continue
        seen.add(s.text)
        kept.append(s)
    return Corpus(kept, corpus.policy), len(corpus) - len(kept)


@dataclass(frozen=True, slots=True)
class Pair:
    """One parallel sentence pair; synthetic pairs carry their provenance."""

    src: str
    tgt: str
    origin: str = "bitext"
    provenance: tuple[tuple[str, object], ...] = ()

    def provenance_dict(self) -> dict:
        return dict(self.provenance)


class ParallelCorpus:
    """Aligned (src, tgt) sentence pairs."""

    __slots__ = ("pairs",)

    def __init__(self, pairs: Iterable[Pair]):
        self.pairs = tuple(pairs)

    @classmethod
    def from_texts(cls, srcs: Iterable[str], tgts: Iterable[str], origin: str = "bitext") -> "ParallelCorpus":
        srcs = list(srcs)
        tgts = list(tgts)
        if len(srcs) != len(tgts):
            raise ParallelMismatchError(f"side lengths differ: {len(srcs)} vs {len(tgts)}")
        return cls(Pair(s, t, origin) for s, t in zip(srcs, tgts))

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[Pair]:
        return iter(self.pairs)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ParallelCorpus):
            return NotImplemented
        return self.pairs == other.pairs

    def src_texts(self) -> list[str]:
        return [p.src for p in self.pairs]

    def tgt_texts(self) -> list[str]:
        return [p.tgt for p in self.pairs]


def load_parallel(src_path: str, tgt_path: str) -> tuple[ParallelCorpus, int]:
    """Load an aligned pair of files. Returns the corpus and the count of
    pairs dropped because either side was blank (dropping both sides keeps
    the alignment intact). Unequal line counts are an error."""
    src = load_corpus(src_path)
    tgt = load_corpus(tgt_path)
    n_src = src.load_report.n_lines if src.load_report else len(src)
    n_tgt = tgt.load_report.n_lines if tgt.load_report else len(tgt)
    if n_src != n_tgt:
        raise ParallelMismatchError(f"{src_path} has {n_src} lines but {tgt_path} has {n_tgt}")
    by_index_src = {s.index: s.text for s in src}
    by_index_tgt = {s.index: s.text for s in tgt}
    pairs = []
    dropped = 0
    for i in range(n_src):
        if i in by_index_src and i in by_index_tgt:
            pairs.append(Pair(by_index_src[i], by_index_tgt[i]))
        else:
            dropped += 1
    return ParallelCorpus(pairs), dropped


def write_parallel(pc: ParallelCorpus, src_path: str, tgt_path: str) -> None:
    with open(src_path, "w", encoding="utf-8", newline="\n") as fs, open(
        tgt_path, "w", encoding="utf-8", newline="\n"
    ) as ft:
        for p in pc:
            fs.write(p.src)
            fs.write("\n")
            ft.write(p.tgt)
            ft.write("\n")
