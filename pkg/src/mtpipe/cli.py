"""Command-line interface: every pipeline stage as a subcommand.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 backend
error. The config path for `pipeline run` may also come from the
MTPIPE_CONFIG environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .backtranslate import PairFilter, run_backtranslation, write_bt_manifest
from .bleu import corpus_bleu
from .config import PipelineConfig, load_config, save_config
from .corpus import (
    Corpus,
    LengthFilter,
    TokenizationPolicy,
    compute_stats,
    dedup,
    filter_by_length,
    load_corpus,
    policy_for_lang,
    sample_uniform,
    write_corpus,
    write_parallel,
)
from .errors import MTPipeError, UsageError
from .manifest import read_manifest
from .modelstore import average_checkpoints, checkpoint_summary, prune_embeddings, read_checkpoint, write_checkpoint
from .pipeline import make_backend, run_pipeline
from .postedit import DEFAULT_RULES, Rules, correct_lines
from .reports import render_kv, report_table
from .subword import corpus_vocab, encode, load_model, save_model, train_bpe


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage errors, not argparse's 2
        raise UsageError(f"{self.prog}: {message}")


def _policy_arg(value: str) -> TokenizationPolicy:
    try:
        return TokenizationPolicy(value)
    except ValueError:
        raise UsageError(f"unknown policy {value!r} (expected char_cjk or whitespace)")


def _emit_report(data: dict, as_json: bool) -> None:
    if as_json:
        print(json.dumps(data, ensure_ascii=False, indent=2))
    else:
        for line in render_kv(data):
            print(line)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mtpipe", description=__doc__)
    parser.add_argument("--version", action="version", version=f"mtpipe {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", parents=[], help="corpus statistics (#sents, #vocab, avg len)")
    p.add_argument("--input", required=True)
    p.add_argument("--policy", type=_policy_arg, default=TokenizationPolicy.WHITESPACE)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("filter", help="keep sentences inside a token-length window")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--min-len", type=int, default=10)
    p.add_argument("--max-len", type=int, default=60)
    p.add_argument("--policy", type=_policy_arg, default=TokenizationPolicy.WHITESPACE)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("sample", help="uniform sample without replacement")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)

    p = sub.add_parser("dedup", help="drop exact duplicate sentences")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)

    spm = sub.add_parser("spm", help="subword model operations").add_subparsers(dest="spm_command", required=True)
    p = spm.add_parser("train", help="train a BPE model")
    p.add_argument("--input", required=True)
    p.add_argument("--merges", type=int, required=True)
    p.add_argument("--model", required=True)
    p = spm.add_parser("encode", help="encode text to token ids, one line of ids per sentence")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p = spm.add_parser("vocab", help="token ids used by one or more corpora")
    p.add_argument("--model", required=True)
    p.add_argument("--input", nargs="+", required=True)
    p.add_argument("--output", required=True)

    ckpt = sub.add_parser("ckpt", help="checkpoint operations").add_subparsers(dest="ckpt_command", required=True)
    p = ckpt.add_parser("avg", help="average the last N checkpoints by step")
    p.add_argument("checkpoints", nargs="+")
    p.add_argument("--n-last", type=int, default=5)
    p.add_argument("--output", required=True)
    p = ckpt.add_parser("prune", help="prune embedding rows to a kept vocabulary")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--embed-name", required=True)
    p.add_argument("--model", required=True, help="subword model defining the full vocabulary")
    p.add_argument("--keep", required=True, help="file of kept token ids, one per line")
    p.add_argument("--output", required=True)
    p.add_argument("--vocab-output", required=True, help="pruned subword model path")
    p.add_argument("--remap-output", default="", help="optional old->new id table (JSON)")
    p = ckpt.add_parser("inspect", help="print tensor names, shapes and checksums")
    p.add_argument("checkpoint")

    p = sub.add_parser("bt", help="backtranslation").add_subparsers(dest="bt_command", required=True)
    run = p.add_parser("run", help="translate a monolingual corpus and filter pairs")
    run.add_argument("--mono", required=True)
    run.add_argument("--backend", required=True, help="'cipher', 'cipher:eps=F', or tcp://host:port")
    run.add_argument("--k", type=int, default=5)
    run.add_argument("--seed", type=int, required=True)
    run.add_argument("--mode", choices=("greedy", "beam", "sample_topk"), default="sample_topk")
    run.add_argument("--out-dir", required=True)
    run.add_argument("--src-lang", default="zh")
    run.add_argument("--tgt-lang", default="vi")
    run.add_argument("--pf-min-len", type=int, default=1)
    run.add_argument("--pf-max-len", type=int, default=0, help="0 = unbounded")
    run.add_argument("--pf-max-len-ratio", type=float, default=1.5)
    run.add_argument("--keep-empty", action="store_true")
    run.add_argument("--keep-src-eq-tgt", action="store_true")

    p = sub.add_parser("postedit", help="numeric/date post-editing").add_subparsers(
        dest="postedit_command", required=True
    )
    run = p.add_parser("run", help="correct numeric/date values in a translation file")
    run.add_argument("--src", required=True)
    run.add_argument("--hyp", required=True)
    run.add_argument("--output", required=True)
    run.add_argument("--report", default="", help="optional JSON edit report path")
    run.add_argument("--direction", choices=("zh-vi", "vi-zh"), default="zh-vi")
    run.add_argument("--rules", default="", help="optional JSON rules file with magnitude words")

    p = sub.add_parser("score", help="corpus BLEU")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--lang", choices=("zh", "vi"), required=True)
    p.add_argument("--json", action="store_true")

    pipe = sub.add_parser("pipeline", help="configured multi-stage runs").add_subparsers(
        dest="pipeline_command", required=True
    )
    p = pipe.add_parser("run", help="run the stages enabled in a config file")
    p.add_argument("--config", default="", help="config path (or set MTPIPE_CONFIG)")
    p.add_argument("--workdir", default="", help="override the config's workdir")
    p = pipe.add_parser("init-config", help="write a default config file")
    p.add_argument("path")
    p = pipe.add_parser("report", help="render a table from a run manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--table", choices=("data_stats", "synthetic_stats", "results"), required=True)

    return parser


def _cmd_stats(args) -> int:
    stats = compute_stats(load_corpus(args.input, args.policy))
    _emit_report(stats.as_dict(), args.json)
    return 0


def _cmd_filter(args) -> int:
    corpus = load_corpus(args.input, args.policy)
    kept, report = filter_by_length(corpus, LengthFilter(args.min_len, args.max_len, args.policy))
    write_corpus(kept, args.output)
    _emit_report(report.as_dict(), args.json)
    return 0


def _cmd_sample(args) -> int:
    corpus = load_corpus(args.input)
    write_corpus(sample_uniform(corpus, args.n, args.seed), args.output)
    return 0


def _cmd_dedup(args) -> int:
    corpus = load_corpus(args.input)
    kept, removed = dedup(corpus)
    write_corpus(kept, args.output)
    print(f"removed={removed}")
    return 0


def _cmd_spm(args) -> int:
    if args.spm_command == "train":
        corpus = load_corpus(args.input)
        merges, vocab = train_bpe(corpus, args.merges)
        save_model(merges, vocab, args.model)
        print(f"merges={len(merges.merges)} vocab={len(vocab)}")
        return 0
    merges, vocab = load_model(args.model)
    if args.spm_command == "encode":
        corpus = load_corpus(args.input)
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            for sent in corpus:
                fh.write(" ".join(str(i) for i in encode(sent.text, merges, vocab)) + "\n")
        return 0
    corpora = [load_corpus(path) for path in args.input]
    ids = corpus_vocab(corpora, merges, vocab)
    with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
        for i in sorted(ids):
            fh.write(f"{i}\n")
    print(f"vocab_ids={len(ids)}")
    return 0


def _cmd_ckpt(args) -> int:
    if args.ckpt_command == "avg":
        averaged = average_checkpoints(args.checkpoints, args.n_last)
        write_checkpoint(averaged, args.output)
        print(f"step={averaged.step} tensors={len(averaged.tensors)}")
        return 0
    if args.ckpt_command == "prune":
        merges, vocab = load_model(args.model)
        with open(args.keep, encoding="utf-8") as fh:
            keep = {int(line) for line in fh if line.strip()}
        ckpt = read_checkpoint(args.checkpoint)
        pruned, pruned_vocab, report = prune_embeddings(ckpt, args.embed_name, vocab, keep)
        write_checkpoint(pruned, args.output)
        save_model(merges, pruned_vocab, args.vocab_output)
        if args.remap_output:
            with open(args.remap_output, "w", encoding="utf-8", newline="\n") as fh:
                json.dump({str(k): v for k, v in sorted(report.remap.items())}, fh, indent=2)
                fh.write("\n")
        _emit_report(report.as_dict(), as_json=False)
        return 0
    ckpt = read_checkpoint(args.checkpoint)
    print(f"step={ckpt.step} format_version={ckpt.format_version}")
    for row in checkpoint_summary(ckpt):
        shape = "x".join(str(e) for e in row["shape"])
        print(f"{row['name']}  shape={shape}  sha256={row['sha256']}")
    return 0


def _cmd_bt(args) -> int:
    mono = load_corpus(args.mono, policy_for_lang(args.tgt_lang))
    backend = make_backend(args.backend, mono.texts())
    pf = PairFilter(
        min_len=args.pf_min_len,
        max_len=args.pf_max_len if args.pf_max_len > 0 else None,
        max_len_ratio=args.pf_max_len_ratio,
        drop_empty=not args.keep_empty,
        drop_src_eq_tgt=not args.keep_src_eq_tgt,
        src_policy=policy_for_lang(args.src_lang),
        tgt_policy=policy_for_lang(args.tgt_lang),
    )
    synthetic, report = run_backtranslation(mono, backend, args.k, args.seed, pf, mode=args.mode)
    os.makedirs(args.out_dir, exist_ok=True)
    write_parallel(synthetic, os.path.join(args.out_dir, "synthetic.src.txt"), os.path.join(args.out_dir, "synthetic.tgt.txt"))
    write_bt_manifest(os.path.join(args.out_dir, "backtranslation.json"), synthetic, report)
    _emit_report(report.as_dict(), as_json=False)
    return 0


def _cmd_postedit(args) -> int:
    rules = Rules.from_file(args.rules) if args.rules else DEFAULT_RULES
    src_lines = load_corpus(args.src).texts()
    hyp_lines = load_corpus(args.hyp).texts()
    corrected, rows = correct_lines(src_lines, hyp_lines, direction=args.direction, rules=rules)
    write_corpus(Corpus.from_texts(corrected), args.output)
    if args.report:
        with open(args.report, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(rows, fh, ensure_ascii=False, indent=2)
            fh.write("\n")
    for row in rows:
        print(f"line {row['line']} [{row['span'][0]},{row['span'][1]}) '{row['before']}' -> '{row['after']}' ({row['reason']})")
    return 0


def _cmd_score(args) -> int:
    hyps = load_corpus(args.hyp).texts()
    refs = load_corpus(args.ref).texts()
    score = corpus_bleu(hyps, refs, args.lang)
    _emit_report(score.as_dict(), args.json)
    return 0


def _cmd_pipeline(args) -> int:
    if args.pipeline_command == "init-config":
        save_config(PipelineConfig(), args.path)
        print(f"wrote {args.path}")
        return 0
    if args.pipeline_command == "report":
        manifest = read_manifest(args.manifest)
        print(report_table(manifest.as_dict(), args.table))
        return 0
    config_path = args.config or os.environ.get("MTPIPE_CONFIG", "")
    if not config_path:
        raise UsageError("pipeline run needs --config or MTPIPE_CONFIG")
    cfg = load_config(config_path)
    manifest = run_pipeline(cfg, workdir=args.workdir or None)
    print(f"stages={','.join(manifest.stages)} workdir={args.workdir or cfg.workdir}")
    return 0


_DISPATCH = {
    "stats": _cmd_stats,
    "filter": _cmd_filter,
    "sample": _cmd_sample,
    "dedup": _cmd_dedup,
    "spm": _cmd_spm,
    "ckpt": _cmd_ckpt,
    "bt": _cmd_bt,
    "postedit": _cmd_postedit,
    "score": _cmd_score,
    "pipeline": _cmd_pipeline,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _DISPATCH[args.command](args)
    except MTPipeError as exc:
        print(f"mtpipe: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"mtpipe: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"mtpipe: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
