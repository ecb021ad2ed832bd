"""Pipeline orchestration: run configured stages in order, emit a manifest.

Stage order is fixed: stats, filter, sample, backtranslate, merge, prune,
score, postedit; the config's `stages` list selects which of them run.
The pipeline fails fast on the first stage error and removes that stage's
partial outputs before propagating.
"""

from __future__ import annotations

import os
from typing import Callable

from .backtranslate import PairFilter, merge_corpora, run_backtranslation, write_bt_manifest, origin_runs
from .bleu import corpus_bleu
from .config import KNOWN_STAGES, PipelineConfig, render_config
from .corpus import (
    Corpus,
    LengthFilter,
    ParallelCorpus,
    compute_stats,
    filter_by_length,
    load_corpus,
    load_parallel,
    policy_for_lang,
    sample_uniform,
    write_corpus,
    write_parallel,
)
from .decoder.backend import ModelBackend, RemoteBackend
from .decoder.models import CharVocab, ToyCipherModel, rotation_cipher
from .errors import ConfigError, DataError, StageError
from .manifest import RunManifest, write_manifest
from .modelstore import prune_embeddings, read_checkpoint, write_checkpoint
from .postedit import correct_lines
from .subword import corpus_vocab, load_model, save_model


def _require(path: str, what: str) -> str:
    if not path:
        raise ConfigError(f"config field '{what}' is required for this stage")
    if not os.path.exists(path):
        raise DataError(f"{what}: file not found: {path}")
    return path


def make_backend(spec: str, reference_texts: list[str]):
    """Build a translation backend from its config string.

    "cipher" (optionally "cipher:eps=0.3") is the bundled deterministic
    character-rotation model over the characters of the given texts;
    "tcp://host:port" connects to a wire-protocol server.
    """
    if spec == "cipher" or spec.startswith("cipher:"):
        eps = 0.0
        if spec.startswith("cipher:"):
            option = spec[len("cipher:"):]
            if not option.startswith("eps="):
                raise ConfigError(f"unknown cipher option {option!r}")
            eps = float(option[4:])
        vocab = CharVocab.from_texts(reference_texts)
        model = ToyCipherModel(len(vocab), vocab.EOS, rotation_cipher(vocab), eps=eps)
        return ModelBackend(model, vocab, model_id=spec)
    if spec.startswith("tcp://"):
        host, _, port = spec[len("tcp://"):].partition(":")
        if not host or not port.isdigit():
            raise ConfigError(f"backend spec {spec!r} must be tcp://host:port")
        return RemoteBackend(host, int(port))
    raise ConfigError(f"unknown backend {spec!r} (expected 'cipher' or 'tcp://host:port')")


class _Run:
    def __init__(self, cfg: PipelineConfig, workdir: str):
        self.cfg = cfg
        self.workdir = workdir
        self.manifest = RunManifest(config_text=render_config(cfg))
        self.mono_current: str = cfg.mono  # latest monolingual artifact
        self.synthetic: ParallelCorpus | None = None

    def out(self, name: str, created: list[str]) -> str:
        path = os.path.join(self.workdir, name)
        created.append(path)
        return path

    # ---- stages ----------------------------------------------------

    def stage_stats(self, created: list[str]) -> None:
        cfg = self.cfg
        rows = []
        for name, path, lang in (
            (f"bitext ({cfg.src_lang})", cfg.bitext_src, cfg.src_lang),
            (f"bitext ({cfg.tgt_lang})", cfg.bitext_tgt, cfg.tgt_lang),
            (f"mono ({cfg.tgt_lang})", cfg.mono, cfg.tgt_lang),
        ):
            if not path:
                continue
            _require(path, "data path")
            self.manifest.record_input(path)
            corpus = load_corpus(path, policy_for_lang(lang))
            stats = compute_stats(corpus)
            rows.append({"name": name, **stats.as_dict()})
        if not rows:
            raise ConfigError("stats stage needs at least one of bitext_src, bitext_tgt, mono")
        self.manifest.stages["stats"] = rows

    def stage_filter(self, created: list[str]) -> None:
        cfg = self.cfg
        path = _require(self.mono_current, "mono")
        self.manifest.record_input(path)
        corpus = load_corpus(path, policy_for_lang(cfg.tgt_lang))
        flt = LengthFilter(cfg.min_len, cfg.max_len, policy_for_lang(cfg.tgt_lang))
        kept, report = filter_by_length(corpus, flt)
        out_path = self.out("mono.filtered.txt", created)
        write_corpus(kept, out_path)
        self.manifest.record_output(out_path)
        self.manifest.stages["filter"] = report.as_dict()
        self.mono_current = out_path

    def stage_sample(self, created: list[str]) -> None:
        cfg = self.cfg
        if cfg.sample_size < 1:
            raise ConfigError("sample stage needs sample_size >= 1")
        path = _require(self.mono_current, "mono")
        corpus = load_corpus(path, policy_for_lang(cfg.tgt_lang))
        sampled = sample_uniform(corpus, cfg.sample_size, cfg.sample_seed)
        out_path = self.out("mono.sampled.txt", created)
        write_corpus(sampled, out_path)
        self.manifest.record_output(out_path)
        self.manifest.stages["sample"] = {"n": len(sampled), "seed": cfg.sample_seed}
        self.mono_current = out_path

    def stage_backtranslate(self, created: list[str]) -> None:
        cfg = self.cfg
        path = _require(self.mono_current, "mono")
        mono = load_corpus(path, policy_for_lang(cfg.tgt_lang))
        backend = make_backend(cfg.backend, mono.texts())
        pf = PairFilter(
            min_len=cfg.pf_min_len,
            max_len=cfg.pf_max_len if cfg.pf_max_len > 0 else None,
            max_len_ratio=cfg.pf_max_len_ratio,
            drop_empty=cfg.pf_drop_empty,
            drop_src_eq_tgt=cfg.pf_drop_src_eq_tgt,
            src_policy=policy_for_lang(cfg.src_lang),
            tgt_policy=policy_for_lang(cfg.tgt_lang),
        )
        synthetic, report = run_backtranslation(mono, backend, cfg.k, cfg.seed, pf)
        src_path = self.out("synthetic.src.txt", created)
        tgt_path = self.out("synthetic.tgt.txt", created)
        manifest_path = self.out("backtranslation.json", created)
        write_parallel(synthetic, src_path, tgt_path)
        write_bt_manifest(manifest_path, synthetic, report)
        for p in (src_path, tgt_path, manifest_path):
            self.manifest.record_output(p)
        self.manifest.stages["backtranslate"] = {"report": report.as_dict()}
        self.synthetic = synthetic

    def stage_merge(self, created: list[str]) -> None:
        cfg = self.cfg
        _require(cfg.bitext_src, "bitext_src")
        _require(cfg.bitext_tgt, "bitext_tgt")
        self.manifest.record_input(cfg.bitext_src)
        self.manifest.record_input(cfg.bitext_tgt)
        bitext, _ = load_parallel(cfg.bitext_src, cfg.bitext_tgt)
        if self.synthetic is None:
            raise ConfigError("merge stage needs the backtranslate stage earlier in the run")
        merged = merge_corpora(bitext, self.synthetic, cfg.upsample_bitext)
        src_path = self.out("train.src.txt", created)
        tgt_path = self.out("train.tgt.txt", created)
        write_parallel(merged, src_path, tgt_path)
        self.manifest.record_output(src_path)
        self.manifest.record_output(tgt_path)
        self.manifest.stages["merge"] = {
            "n_pairs": len(merged),
            "upsample_bitext": cfg.upsample_bitext,
            "origins": origin_runs(merged),
        }

    def stage_prune(self, created: list[str]) -> None:
        cfg = self.cfg
        ckpt_path = _require(cfg.checkpoint, "checkpoint")
        spm_path = _require(cfg.spm_model, "spm_model")
        self.manifest.record_input(ckpt_path)
        self.manifest.record_input(spm_path)
        merges, vocab = load_model(spm_path)
        corpora = []
        for path, lang in ((cfg.bitext_src, cfg.src_lang), (cfg.bitext_tgt, cfg.tgt_lang)):
            if path:
                _require(path, "bitext path")
                corpora.append(load_corpus(path, policy_for_lang(lang)))
        if self.mono_current and os.path.exists(self.mono_current):
            corpora.append(load_corpus(self.mono_current, policy_for_lang(cfg.tgt_lang)))
        if not corpora:
            raise ConfigError("prune stage needs at least one corpus to define the kept vocabulary")
        keep = corpus_vocab(corpora, merges, vocab)
        ckpt = read_checkpoint(ckpt_path)
        pruned, pruned_vocab, report = prune_embeddings(ckpt, cfg.embed_name, vocab, keep)
        out_ckpt = self.out("pruned.mtck", created)
        out_vocab = self.out("pruned.subword", created)
        write_checkpoint(pruned, out_ckpt)
        save_model(merges, pruned_vocab, out_vocab)
        self.manifest.record_output(out_ckpt)
        self.manifest.record_output(out_vocab)
        self.manifest.stages["prune"] = report.as_dict()

    def stage_score(self, created: list[str]) -> None:
        cfg = self.cfg
        row: dict = {"system": "system", "valid": None, "test": None}
        scored = False
        for column, hyp_path, ref_path in (
            ("valid", cfg.valid_hyp, cfg.valid_ref),
            ("test", cfg.test_hyp, cfg.test_ref),
        ):
            if not hyp_path and not ref_path:
                continue
            _require(hyp_path, f"{column}_hyp")
            _require(ref_path, f"{column}_ref")
            self.manifest.record_input(hyp_path)
            self.manifest.record_input(ref_path)
            hyps = load_corpus(hyp_path).texts()
            refs = load_corpus(ref_path).texts()
            score = corpus_bleu(hyps, refs, cfg.tgt_lang)
            row[column] = score.rounded()
            row[f"{column}_detail"] = score.as_dict()
            scored = True
        if not scored:
            raise ConfigError("score stage needs valid_hyp/valid_ref or test_hyp/test_ref")
        self.manifest.stages["score"] = [row]

    def stage_postedit(self, created: list[str]) -> None:
        cfg = self.cfg
        src_path = _require(cfg.eval_src, "eval_src")
        hyp_path = _require(cfg.test_hyp, "test_hyp")
        self.manifest.record_input(src_path)
        self.manifest.record_input(hyp_path)
        src_lines = load_corpus(src_path).texts()
        hyp_lines = load_corpus(hyp_path).texts()
        corrected, rows = correct_lines(src_lines, hyp_lines, direction=f"{cfg.src_lang}-{cfg.tgt_lang}")
        out_path = self.out("test.hyp.postedited.txt", created)
        write_corpus(Corpus.from_texts(corrected), out_path)
        self.manifest.record_output(out_path)
        self.manifest.stages["postedit"] = {"n_lines": len(corrected), "n_edits": sum(
            1 for r in rows if not r["reason"].startswith("ambiguous")
        ), "edits": rows}


def run_pipeline(cfg: PipelineConfig, workdir: str | None = None) -> RunManifest:
    """Execute the configured stages and write workdir/manifest.json."""
    workdir = workdir or cfg.workdir
    os.makedirs(workdir, exist_ok=True)
    run = _Run(cfg, workdir)
    stage_fns: dict[str, Callable[[list[str]], None]] = {
        "stats": run.stage_stats,
        "filter": run.stage_filter,
        "sample": run.stage_sample,
        "backtranslate": run.stage_backtranslate,
        "merge": run.stage_merge,
        "prune": run.stage_prune,
        "score": run.stage_score,
        "postedit": run.stage_postedit,
    }
    for stage in KNOWN_STAGES:
        if stage not in cfg.stages:
            continue
        created: list[str] = []
        try:
            stage_fns[stage](created)
        except Exception as exc:
            for path in created:
                if os.path.exists(path):
                    os.unlink(path)
            if isinstance(exc, StageError):
                raise
            raise StageError(stage, exc) from exc
    manifest_path = os.path.join(workdir, "manifest.json")
    write_manifest(run.manifest, manifest_path)
    return run.manifest
