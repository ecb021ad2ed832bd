import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mtpipe.corpus import (
    Corpus,
    LengthFilter,
    TokenizationPolicy,
    compute_stats,
    dedup,
    filter_by_length,
    load_corpus,
    load_parallel,
    policy_for_lang,
    sample_uniform,
    write_corpus,
)
from mtpipe.errors import CorpusFormatError, ParallelMismatchError

WS = TokenizationPolicy.WHITESPACE
CJK = TokenizationPolicy.CHAR_CJK


def write_lines(path, lines, newline="\n"):
    path.write_bytes(newline.join(lines).encode("utf-8") + newline.encode())
    return str(path)


class TestLoad:
    def test_blank_lines_dropped_and_counted(self, tmp_path):
        path = write_lines(tmp_path / "c.txt", ["a b", "", "c"])
        corpus = load_corpus(path)
        assert corpus.texts() == ["a b", "c"]
        assert corpus.load_report.n_blank == 1
        assert corpus.load_report.n_sentences == 2
        assert [s.index for s in corpus] == [0, 2]

    def test_whitespace_only_line_is_blank(self, tmp_path):
        path = write_lines(tmp_path / "c.txt", ["a", "   ", "b"])
        corpus = load_corpus(path)
        assert corpus.texts() == ["a", "b"]
        assert corpus.load_report.n_blank == 1

    def test_empty_file(self, tmp_path):
        path = tmp_path / "e.txt"
        path.write_bytes(b"")
        assert len(load_corpus(str(path))) == 0

    def test_chinese_order_preserved(self, tmp_path):
        lines = ["你好世界", "今天天气", "机器翻译"]
        path = write_lines(tmp_path / "zh.txt", lines)
        assert load_corpus(path, CJK).texts() == lines

    def test_carriage_returns_stripped(self, tmp_path):
        path = tmp_path / "crlf.txt"
        path.write_bytes(b"a b\r\nc d\r\n")
        assert load_corpus(str(path)).texts() == ["a b", "c d"]

    def test_invalid_utf8_reports_line(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_bytes(b"ok line\n\xff\xfe broken\nmore\n")
        with pytest.raises(CorpusFormatError, match="line 2"):
            load_corpus(str(path))

    def test_missing_file(self):
        with pytest.raises(FileNotFoundError):
            load_corpus("/nonexistent/corpus.txt")

    def test_write_round_trip(self, tmp_path):
        corpus = Corpus.from_texts(["một hai", "ba bốn"])
        out = tmp_path / "o.txt"
        write_corpus(corpus, str(out))
        assert load_corpus(str(out)).texts() == corpus.texts()


class TestTokenization:
    def test_whitespace(self):
        assert WS.tokenize("xin  chào\tthế giới") == ["xin", "chào", "thế", "giới"]

    def test_char_cjk_splits_codepoints(self):
        assert CJK.tokenize("你好") == ["你", "好"]

    def test_char_cjk_mixed(self):
        assert CJK.tokenize("GDP增长3.5个百分点") == ["GDP", "增", "长", "3.5", "个", "百", "分", "点"]

    def test_char_cjk_extension_a_block(self):
        assert CJK.tokenize("㐀a㐁") == ["㐀", "a", "㐁"]

    def test_policy_for_lang(self):
        assert policy_for_lang("zh") is CJK
        assert policy_for_lang("vi") is WS

    @given(st.text(alphabet=st.characters(min_codepoint=0x4E00, max_codepoint=0x9FFF), min_size=0, max_size=40))
    def test_pure_cjk_token_count_is_codepoint_count(self, text):
        assert len(CJK.tokenize(text)) == len(text)


class TestStats:
    def test_hand_counted(self):
        stats = compute_stats(Corpus.from_texts(["a b a", "b c"]), WS)
        assert (stats.n_sents, stats.vocab_size, stats.avg_len) == (2, 3, 2.5)

    def test_cjk_hand_counted(self):
        stats = compute_stats(Corpus.from_texts(["你好"]), CJK)
        assert (stats.n_sents, stats.vocab_size, stats.avg_len) == (1, 2, 2.0)

    def test_empty(self):
        stats = compute_stats(Corpus.from_texts([]), WS)
        assert (stats.n_sents, stats.vocab_size, stats.avg_len) == (0, 0, 0.0)

    @given(st.lists(st.text(alphabet="ab c", min_size=1, max_size=10), min_size=1, max_size=20), st.randoms())
    @settings(max_examples=50)
    def test_vocab_invariant_under_reorder(self, texts, rnd):
        shuffled = texts[:]
        rnd.shuffle(shuffled)
        a = compute_stats(Corpus.from_texts(texts), WS)
        b = compute_stats(Corpus.from_texts(shuffled), WS)
        assert a.vocab_size == b.vocab_size
        assert a.avg_len == pytest.approx(b.avg_len)


def corpus_of_lengths(lengths):
    return Corpus.from_texts([" ".join(["w"] * n) for n in lengths])


class TestLengthFilter:
    def test_boundaries_inclusive(self):
        kept, report = filter_by_length(corpus_of_lengths([5, 10, 60, 61]), LengthFilter(10, 60, WS))
        assert [len(t.split()) for t in kept.texts()] == [10, 60]
        assert (report.n_kept, report.n_dropped) == (2, 2)

    def test_full_coverage(self):
        kept, report = filter_by_length(corpus_of_lengths([30] * 7), LengthFilter(10, 60, WS))
        assert report.coverage == 1.0
        assert len(kept) == 7

    def test_uniform_coverage_fraction(self):
        # lengths 9..61: 53 sentences, 51 inside [10, 60]
        _, report = filter_by_length(corpus_of_lengths(range(9, 62)), LengthFilter(10, 60, WS))
        assert report.coverage == pytest.approx(51 / 53)

    def test_idempotent(self):
        corpus = corpus_of_lengths([3, 10, 25, 60, 61, 100])
        f = LengthFilter(10, 60, WS)
        once, _ = filter_by_length(corpus, f)
        twice, report = filter_by_length(once, f)
        assert twice == once
        assert report.n_dropped == 0

    def test_invalid_bounds(self):
        with pytest.raises(ValueError):
            LengthFilter(10, 5, WS)
        with pytest.raises(ValueError):
            LengthFilter(0, 5, WS)


class TestSample:
    def test_full_sample_is_identity(self):
        corpus = Corpus.from_texts([f"s{i}" for i in range(20)])
        for seed in (0, 1, 12345):
            assert sample_uniform(corpus, len(corpus), seed) == corpus

    def test_deterministic(self):
        corpus = Corpus.from_texts([f"s{i}" for i in range(100)])
        a = sample_uniform(corpus, 10, seed=7)
        b = sample_uniform(corpus, 10, seed=7)
        assert a == b
        assert sample_uniform(corpus, 10, seed=8) != a

    def test_preserves_relative_order(self):
        corpus = Corpus.from_texts([f"s{i}" for i in range(50)])
        sampled = sample_uniform(corpus, 12, seed=3)
        indices = [s.index for s in sampled]
        assert indices == sorted(indices)

    def test_oversample_rejected(self):
        with pytest.raises(ValueError):
            sample_uniform(Corpus.from_texts(["a"]), 2, seed=0)

    def test_binomial_frequencies(self):
        # choose 1 of 10, 10,000 trials: each item within 3 sigma of 1,000
        corpus = Corpus.from_texts([str(i) for i in range(10)])
        trials = 10_000
        counts = [0] * 10
        for t in range(trials):
            picked = sample_uniform(corpus, 1, seed=t)
            counts[int(picked.texts()[0])] += 1
        sigma = math.sqrt(trials * 0.1 * 0.9)
        for c in counts:
            assert abs(c - 1000) < 3 * sigma


class TestDedup:
    def test_basic(self):
        kept, removed = dedup(Corpus.from_texts(["a", "b", "a"]))
        assert kept.texts() == ["a", "b"]
        assert removed == 1

    def test_all_distinct(self):
        corpus = Corpus.from_texts(["a", "b", "c"])
        kept, removed = dedup(corpus)
        assert kept == corpus and removed == 0

    def test_all_same(self):
        kept, removed = dedup(Corpus.from_texts(["x", "x", "x"]))
        assert kept.texts() == ["x"] and removed == 2


class TestParallel:
    def test_load_aligned(self, tmp_path):
        src = write_lines(tmp_path / "s.txt", ["s1", "s2"])
        tgt = write_lines(tmp_path / "t.txt", ["t1", "t2"])
        pc, dropped = load_parallel(src, tgt)
        assert [(p.src, p.tgt) for p in pc] == [("s1", "t1"), ("s2", "t2")]
        assert dropped == 0

    def test_unequal_counts_rejected(self, tmp_path):
        src = write_lines(tmp_path / "s.txt", ["s1", "s2"])
        tgt = write_lines(tmp_path / "t.txt", ["t1"])
        with pytest.raises(ParallelMismatchError):
            load_parallel(src, tgt)

    def test_blank_pair_dropped_together(self, tmp_path):
        src = write_lines(tmp_path / "s.txt", ["s1", "", "s3"])
        tgt = write_lines(tmp_path / "t.txt", ["t1", "t2", "t3"])
        pc, dropped = load_parallel(src, tgt)
        assert [(p.src, p.tgt) for p in pc] == [("s1", "t1"), ("s3", "t3")]
        assert dropped == 1
