"""Command-line entry point: ``plot2api <subcommand> ...``.

Exit codes: 0 success, 1 input/config error, 2 usage error, 3 training
aborted on a non-finite loss.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import report as reporting
from .dataset import class_frequency_report, format_frequency_table, load_manifest, stratified_split
from .errors import InvalidConfig, MissingFile, Plot2ApiError, UsageError
from .inference import DEFAULT_K, recommend
from .metrics import ApReport, format_reports
from .model import ModelConfig
from .plotgen import CorpusSpec, generate_corpus
from .semantics import build_api_semantics, load_embeddings, provenance_records
from .trainer import (
    Checkpoint,
    TrainConfig,
    TrainingHistory,
    alpha_sweep,
    cross_family_evaluate,
    desk_profile,
    evaluate,
    load_run_config,
    paper_profile,
    train,
)

log = logging.getLogger("plot2api")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _emit(records):
    for rec in records:
        print(json.dumps(rec))


def _configs(args, num_apis):
    profile = desk_profile if args.profile == "desk" else paper_profile
    model_cfg, train_cfg = profile(num_apis)
    if args.config:
        m, t = load_run_config(args.config)
        model_cfg = ModelConfig.from_dict({**model_cfg.to_dict(), **m, "num_apis": num_apis})
        base = train_cfg.to_dict()
        if "augment" in t:
            aug = {**base["augment"], **t.pop("augment")}
            aug["erase"] = {**base["augment"]["erase"], **aug.get("erase", {})}
            base["augment"] = aug
        train_cfg = TrainConfig.from_dict({**base, **t})
    if args.seed is not None:
        model_cfg = replace(model_cfg, seed=args.seed)
        train_cfg = replace(train_cfg, seed=args.seed)
    if getattr(args, "epochs", None):
        train_cfg = replace(train_cfg, epochs=args.epochs)
    return model_cfg, train_cfg


def _semantics(args, vocab, dim):
    table = load_embeddings(args.embeddings) if args.embeddings else None
    return build_api_semantics(vocab, table, dim=dim)


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def cmd_gen_corpus(args):
    spec = CorpusSpec.from_file(args.spec)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    if args.family:
        spec = spec.in_family(args.family)
    manifest = generate_corpus(spec, args.out)
    print(format_frequency_table(class_frequency_report(manifest)))
    print(f"wrote {manifest.n} samples to {args.out}")


def cmd_train(args):
    manifest = load_manifest(args.manifest, args.vocab)
    eval_set = None
    if args.eval_manifest:
        eval_set = load_manifest(args.eval_manifest, args.vocab)
    elif args.split:
        manifest, eval_set = stratified_split(manifest, args.split, args.split_seed)
    model_cfg, train_cfg = _configs(args, len(manifest.vocabulary))
    semantics = _semantics(args, manifest.vocabulary, model_cfg.embedding_dim)
    result = train(model_cfg, train_cfg, manifest, eval_set, semantics)
    out = _out_dir(args.out)
    result.final.save(out / "final.pt")
    if result.best is not None:
        result.best.save(out / "best.pt")
    result.history.write_jsonl(out / "history.jsonl")
    reporting.write_csv(provenance_records(semantics), out / "semantics_provenance.csv")
    if eval_set is not None:
        rep = evaluate(result.final, eval_set)
        _write_json(rep.to_dict(), out / "eval_report.json")
        print(format_reports({"final": rep}))
    last = result.history.steps[-1]
    print(f"steps={len(result.history.steps)} l_vis={last['l_vis']:.4f} l_sem={last['l_sem']:.4f} "
          f"total={last['total']:.4f} checkpoint={out / 'final.pt'}")


def cmd_evaluate(args):
    ckpt = Checkpoint.load(args.checkpoint)
    rep = evaluate(ckpt, load_manifest(args.manifest, args.vocab))
    print(format_reports({Path(args.checkpoint).stem: rep}))
    if args.out:
        _write_json(rep.to_dict(), args.out)


def _sweep_file(results, xlabel):
    return {"kind": "sweep", "xlabel": xlabel, "results": {str(k): v.to_dict() for k, v in results.items()}}


def cmd_alpha_sweep(args):
    dataset = load_manifest(args.manifest, args.vocab)
    model_cfg, train_cfg = _configs(args, len(dataset.vocabulary))
    semantics = _semantics(args, dataset.vocabulary, model_cfg.embedding_dim)
    out = _out_dir(args.out)
    kw = dict(test_fraction=args.test_fraction, split_seed=args.split_seed, semantics=semantics)
    settings = {"on": [True], "off": [False], "both": [False, True]}[args.augment]
    tables = {}
    for enabled in settings:
        cfg = replace(train_cfg, augment=replace(train_cfg.augment, enabled=enabled))
        results = alpha_sweep(model_cfg, cfg, dataset, args.alphas, **kw)
        tag = "da" if enabled else "plain"
        _write_json(_sweep_file(results, "alpha"), out / f"sweep_{tag}.json")
        reporting.write_sweep(results, out, stem=f"sweep_{tag}")
        tables.update({f"alpha={a:g}{' +DA' if enabled else ''}": r for a, r in results.items()})
    reporting.write_ap_reports(tables, out, stem="sweep_ap")
    print(format_reports(tables))


def _parse_map(text):
    pairs = {}
    for item in text.split(","):
        src, sep, dst = item.partition("=")
        if not sep or not src.strip() or not dst.strip():
            raise UsageError(f"bad --map entry {item!r}; expected src=dst")
        pairs[src.strip()] = dst.strip()
    return pairs


def cmd_cross_eval(args):
    ckpt = Checkpoint.load(args.checkpoint)
    rep = cross_family_evaluate(ckpt, load_manifest(args.manifest, args.vocab), _parse_map(args.map))
    print(format_reports({"cross": rep}))
    if args.out:
        _write_json(rep.to_dict(), args.out)


def cmd_recommend(args):
    result = recommend(Checkpoint.load(args.checkpoint), args.image, args.k)
    _emit({**r, "fingerprint": result.fingerprint} for r in result.records())


def cmd_report(args):
    out = _out_dir(args.out)
    written = []
    if args.history:
        written += reporting.write_history(TrainingHistory.read_jsonl(args.history), out)
    reports = {}
    for item in args.ap_report or []:
        label, sep, path = item.rpartition("=")
        path = Path(path)
        if not path.is_file():
            raise MissingFile(f"report not found: {path}")
        reports[label if sep else path.stem] = ApReport.from_dict(json.loads(path.read_text()))
    if reports:
        written += reporting.write_ap_reports(reports, out)
        print(format_reports(reports))
    for path in args.sweep or []:
        path = Path(path)
        if not path.is_file():
            raise MissingFile(f"sweep file not found: {path}")
        d = json.loads(path.read_text())
        if d.get("kind") != "sweep":
            raise InvalidConfig(f"{path} is not a sweep file")
        res = {}
        for k, v in d["results"].items():
            try:
                key = float(k)
            except ValueError:
                key = k
            res[key] = ApReport.from_dict(v)
        written += reporting.write_sweep(res, out, stem=path.stem, xlabel=d.get("xlabel", "setting"))
        print(format_reports({f"{d.get('xlabel', '')}={k}": v for k, v in res.items()}))
    if args.manifest:
        if not args.vocab:
            raise UsageError("--manifest needs --vocab")
        freq = class_frequency_report(load_manifest(args.manifest, args.vocab))
        written += reporting.write_frequency(freq, out)
        print(format_frequency_table(freq))
    if not written:
        raise UsageError("report: nothing to do; pass --history, --ap-report, --sweep or --manifest")
    for p in written:
        print(f"wrote {p}")


def cmd_serve(args):
    from .service import serve
    serve(Checkpoint.load(args.checkpoint), args.bind, args.max_bytes)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="plot2api", description="Recommend plotting APIs from chart images.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser, required=True)

    def run_opts(sp):
        sp.add_argument("--manifest", required=True)
        sp.add_argument("--vocab", required=True)
        sp.add_argument("--config", help="JSON file with 'model' and 'train' sections")
        sp.add_argument("--profile", choices=("desk", "paper"), default="desk")
        sp.add_argument("--embeddings", help="word-embedding text file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--epochs", type=int)
        sp.add_argument("--out", required=True)

    sp = sub.add_parser("gen-corpus", help="render a synthetic corpus")
    sp.add_argument("--spec", required=True, help="corpus spec JSON")
    sp.add_argument("--out", required=True)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--family", choices=("A", "B"))
    sp.set_defaults(func=cmd_gen_corpus)

    sp = sub.add_parser("train", help="train a model")
    run_opts(sp)
    sp.add_argument("--eval-manifest")
    sp.add_argument("--split", type=float, help="hold out this fraction for evaluation")
    sp.add_argument("--split-seed", type=int, default=0)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("evaluate", help="per-API AP and mAP of a checkpoint")
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--vocab", required=True)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("alpha-sweep", help="train/evaluate once per alpha")
    run_opts(sp)
    sp.add_argument("--alphas", type=float, nargs="+", required=True)
    sp.add_argument("--augment", choices=("on", "off", "both"), default="off")
    sp.add_argument("--test-fraction", type=float, default=0.2)
    sp.add_argument("--split-seed", type=int, default=0)
    sp.set_defaults(func=cmd_alpha_sweep)

    sp = sub.add_parser("cross-eval", help="evaluate on another style family")
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--vocab", required=True)
    sp.add_argument("--map", required=True, help="src=dst pairs, comma separated")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_cross_eval)

    sp = sub.add_parser("recommend", help="top-k APIs for one image")
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--image", required=True)
    sp.add_argument("--k", type=int, default=DEFAULT_K)
    sp.set_defaults(func=cmd_recommend)

    sp = sub.add_parser("report", help="figures and CSV tables from run outputs")
    sp.add_argument("--out", required=True)
    sp.add_argument("--history")
    sp.add_argument("--ap-report", action="append", metavar="[LABEL=]PATH")
    sp.add_argument("--sweep", action="append")
    sp.add_argument("--manifest")
    sp.add_argument("--vocab")
    sp.set_defaults(func=cmd_report)

    sp = sub.add_parser("serve", help="run the inference service")
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--bind", default=os.environ.get("PLOT2API_BIND", "127.0.0.1:8000"))
    sp.add_argument("--max-bytes", type=int, default=int(os.environ.get("PLOT2API_MAX_BYTES", 8 * 1024 * 1024)))
    sp.set_defaults(func=cmd_serve)
    return p


def cli_main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        args.func(args)
    except Plot2ApiError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
