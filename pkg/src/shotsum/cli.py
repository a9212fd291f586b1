"""Command-line entry point.

Subcommands: train, eval, summarize, gradcheck, trace, synth, params.
Exit codes: 0 success, 1 failed check or run, 2 usage error, 3 invalid
configuration, 4 missing input. Every artifact records the sha256
fingerprint of the effective configuration.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import checkpoint as ckpt
from . import data_io
from .config import CONFIG_REGISTRY, ConfigError, RunConfig, apply_overrides, parse_config_file
from .evaluation import EvalReport, run_cv
from .model import build_params, count_params, forward_model, param_shapes
from .nn import ParamSet, focal_loss, grad_check
from .shotconv import (
    ScaleConfig,
    format_propagation_report,
    propagation_pairs,
    trace_propagation,
)
from .summarize import record_segmentation, summarize_scores
from .train import train_model

log = logging.getLogger("shotsum")

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_BAD_CONFIG = 3
EXIT_MISSING_INPUT = 4

# Small dimensions for the self-contained gradient check; token captions
# keep the query/key projections on a live gradient path (a single
# pooled caption key makes their gradients identically zero).
GRADCHECK_PRESET = {
    "model.frame_dim": "8", "model.audio_dim": "4", "model.caption_dim": "6",
    "model.heads": "2", "model.layers": "2", "model.shot_counts": "2,4,6",
    "model.pad_ratio": "0.25", "model.channel_multiplier": "2",
    "model.filters_per_branch": "1", "model.head_hidden": "16",
    "model.caption_mode": "tokens",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shotsum",
        description="Shot-aware multimodal video summarization toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, desc in (
            ("train", "train a model on a dataset container"),
            ("eval", "cross-validated evaluation with the configured split policy"),
            ("summarize", "write per-video summaries using a trained checkpoint"),
            ("gradcheck", "finite-difference gradient check of the full model"),
            ("trace", "empirical information-propagation report"),
            ("synth", "write a synthetic dataset container"),
            ("params", "parameter count breakdown for the configured model")):
        p = sub.add_parser(name, help=desc)
        p.add_argument("--config", help="key=value configuration file")
        p.add_argument("--data", action="append", default=[],
                       help="dataset container (repeatable for eval)")
        p.add_argument("--out", help="output directory (synth: output file)")
        p.add_argument("--seed", type=int, help="override train.seed")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one configuration key (repeatable)")
        p.add_argument("--workers", type=int, default=1,
                       help="parallel folds for eval")
        if name == "summarize":
            p.add_argument("--checkpoint",
                           help="trained checkpoint (default: <out>/final.ckpt)")
    return parser


def load_config(args) -> RunConfig:
    cfg = parse_config_file(args.config) if args.config else RunConfig()
    apply_overrides(cfg, args.set)
    if args.seed is not None:
        cfg.values["train.seed"] = args.seed
    return cfg


def _require_out(args) -> Path:
    if not args.out:
        raise ConfigError("--out is required for this command")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _require_data(args) -> list[Path]:
    if not args.data:
        raise FileNotFoundError("--data is required for this command")
    paths = [Path(p) for p in args.data]
    for p in paths:
        if not p.exists():
            raise FileNotFoundError(f"dataset container not found: {p}")
    return paths


def _write_config_artifacts(out: Path, cfg: RunConfig) -> None:
    text = cfg.canonical_text() + f"# fingerprint={cfg.fingerprint()}\n"
    (out / "config.txt").write_text(text)


def cmd_synth(args, cfg: RunConfig) -> int:
    if not args.out:
        raise ConfigError("--out is required: path of the container to write")
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    ids = data_io.make_synthetic_container(
        out_path, videos=cfg["synth.videos"], t=cfg["synth.frames"],
        n=cfg["model.frame_dim"], m=cfg["model.audio_dim"],
        k=cfg["synth.captions"], u=cfg["synth.users"],
        seed=cfg["train.seed"], caption_dim=cfg["model.caption_dim"])
    log.info("wrote %d videos to %s", len(ids), out_path)
    return EXIT_OK


def cmd_train(args, cfg: RunConfig) -> int:
    out = _require_out(args)
    data = _require_data(args)[0]
    records = list(data_io.load_container(data).values())
    params, history = train_model(
        records, cfg.model(), cfg.train(), eval_mode=cfg["eval.mode"],
        budget_ratio=cfg["summary.budget_ratio"], max_segments=cfg["summary.max_segments"],
        penalty_weight=cfg["summary.penalty_weight"], checkpoint_dir=out,
        config_fingerprint=cfg.fingerprint())
    ckpt.save_checkpoint(out / "final.ckpt", params.state_arrays())
    (out / "history.csv").write_text(history.to_csv())
    _write_config_artifacts(out, cfg)
    uncovered = history.uncovered()
    if uncovered and history.epochs:
        log.warning("parameters with no nonzero gradient all run: %s", uncovered)
    final = history.epochs[-1] if history.epochs else None
    if final:
        log.info("trained %d epochs: loss %.6f, train F %.4f",
                 final.epoch, final.loss, final.train_f)
    return EXIT_OK


def cmd_eval(args, cfg: RunConfig) -> int:
    out = _require_out(args)
    paths = _require_data(args)
    dataset_ids = {p.stem: data_io.list_video_ids(p) for p in paths}
    records = {}
    for p in paths:
        for vid, rec in data_io.load_container(p).items():
            records[data_io.qualify(p.stem, vid)] = rec
    target = cfg["split.target"] or paths[0].stem
    plan = data_io.make_splits(dataset_ids, target, cfg["split.policy"],
                               cfg["split.folds"], cfg["train.seed"])
    (out / "splits.txt").write_text(plan.to_text())

    model_cfg, train_cfg = cfg.model(), cfg.train()

    def run_fold(fold_idx: int) -> EvalReport:
        sub_plan = data_io.SplitPlan(plan.policy, plan.target, plan.seed,
                                     folds=(plan.folds[fold_idx],))
        return run_cv(records, sub_plan, model_cfg, train_cfg, mode=cfg["eval.mode"],
                      budget_ratio=cfg["summary.budget_ratio"],
                      max_segments=cfg["summary.max_segments"],
                      penalty_weight=cfg["summary.penalty_weight"],
                      config_fingerprint=cfg.fingerprint())

    report = EvalReport(policy=plan.policy, mode=cfg["eval.mode"],
                        config_fingerprint=cfg.fingerprint())
    if args.workers > 1:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            partials = list(pool.map(run_fold, range(len(plan.folds))))
    else:
        partials = [run_fold(i) for i in range(len(plan.folds))]
    for fold_idx, partial in enumerate(partials):
        fold = partial.folds[0]
        fold.fold = fold_idx
        report.folds.append(fold)
    (out / "report.csv").write_text(report.to_csv())
    (out / "report.txt").write_text(report.to_text())
    _write_config_artifacts(out, cfg)
    print(report.to_text())
    return EXIT_OK


def cmd_summarize(args, cfg: RunConfig) -> int:
    out = _require_out(args)
    data = _require_data(args)[0]
    ckpt_path = Path(args.checkpoint) if args.checkpoint else out / "final.ckpt"
    if not ckpt_path.exists():
        raise FileNotFoundError(f"checkpoint not found: {ckpt_path}")
    params = ParamSet.from_arrays(ckpt.load_checkpoint(ckpt_path))
    records = data_io.load_container(data)
    model_cfg = cfg.model()
    if model_cfg.infer_dims and records:
        first = next(iter(records.values()))
        model_cfg = model_cfg.with_dims(first.frame_feats.shape[1],
                                        first.audio_feats.shape[1],
                                        first.caption_sent_embeds.shape[1])
    for vid, rec in records.items():
        seg = record_segmentation(rec, cfg["summary.max_segments"],
                                  cfg["summary.penalty_weight"])
        acts = forward_model(rec.frame_feats.astype(np.float64),
                             rec.audio_feats.astype(np.float64),
                             rec.caption_sent_embeds.astype(np.float64),
                             params, model_cfg)
        summary, seg_scores = summarize_scores(acts.scores.data.reshape(-1), seg,
                                               rec.picks, cfg["summary.budget_ratio"])
        payload = summary.to_json(seg, seg_scores,
                                  extra={"video_id": vid,
                                         "config_fingerprint": cfg.fingerprint()})
        (out / f"{vid}.summary.json").write_text(payload + "\n")
    _write_config_artifacts(out, cfg)
    log.info("wrote %d summaries to %s", len(records), out)
    return EXIT_OK


def cmd_gradcheck(args, cfg: RunConfig, used_model_overrides: bool) -> int:
    if not used_model_overrides:
        for key, value in GRADCHECK_PRESET.items():
            cfg.set_value(key, value)
    model_cfg = cfg.model()
    if model_cfg.infer_dims:
        model_cfg = model_cfg.with_dims(model_cfg.frame_dim, model_cfg.audio_dim,
                                        model_cfg.caption_dim)
    rec = data_io.make_synthetic_record(
        seed=cfg["train.seed"], t=cfg["gradcheck.frames"], n=model_cfg.frame_dim,
        m=model_cfg.audio_dim, k=3, u=2, caption_dim=model_cfg.caption_dim)
    params = build_params(model_cfg, np.random.default_rng(cfg["train.seed"]))
    frames = rec.frame_feats.astype(np.float64)
    audio = rec.audio_feats.astype(np.float64)
    captions = rec.caption_sent_embeds.astype(np.float64)
    labels = rec.labels.reshape(-1, 1)

    def loss_fn():
        acts = forward_model(frames, audio, captions, params, model_cfg)
        return focal_loss(acts.scores, labels, alpha=cfg["train.alpha"],
                          gamma=cfg["train.gamma"])

    report = grad_check(loss_fn, params, max_coords_per_param=cfg["gradcheck.coords"],
                        seed=cfg["train.seed"])
    lines = [f"gradient check: max rel err {report.max_rel_err:.3e} "
             f"over {report.checked_coords} coordinates"]
    for name in sorted(report.per_param, key=report.per_param.get, reverse=True)[:10]:
        lines.append(f"  {name:<28} {report.per_param[name]:.3e}")
    if report.zero_grad_params:
        lines.append("  zero-gradient tensors: " + ", ".join(report.zero_grad_params))
    lines.append("PASS" if report.passed else "FAIL")
    text = "\n".join(lines)
    print(text)
    if args.out:
        out = _require_out(args)
        (out / "gradcheck.txt").write_text(text + "\n")
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def cmd_trace(args, cfg: RunConfig) -> int:
    t = cfg["trace.frames"]
    shots = cfg["trace.shots"]
    layers = cfg["trace.layers"]
    scales = [ScaleConfig(shot_count=shots, pad_ratio=cfg["model.pad_ratio"] or 0.25,
                          channel_multiplier=2)]
    masks = {src: trace_propagation(t, src, scales, layers, seed=cfg["train.seed"])
             for src in range(t)}
    text = format_propagation_report(masks, t)
    print(text)
    if args.out:
        out = _require_out(args)
        (out / "propagation.txt").write_text(text + "\n")
        pairs = [{"source": src, "influenced": frames}
                 for src, frames in propagation_pairs(masks)]
        (out / "propagation.json").write_text(json.dumps(pairs, indent=2) + "\n")
    return EXIT_OK


def cmd_params(args, cfg: RunConfig) -> int:
    model_cfg = cfg.model()
    total, breakdown = count_params(model_cfg)
    print(f"{'group':<10} {'parameters':>14}")
    for group in sorted(breakdown):
        print(f"{group:<10} {breakdown[group]:>14,}")
    print(f"{'total':<10} {total:>14,}")
    if args.out:
        out = _require_out(args)
        rows = [f"{name},{'x'.join(map(str, shape)) or '1'}"
                for name, shape in param_shapes(model_cfg)]
        (out / "params.csv").write_text("name,shape\n" + "\n".join(rows) + "\n")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        used_model_overrides = bool(args.config) or any(
            item.split("=", 1)[0].strip().startswith("model.") for item in args.set)
        if args.command == "synth":
            return cmd_synth(args, cfg)
        if args.command == "train":
            return cmd_train(args, cfg)
        if args.command == "eval":
            return cmd_eval(args, cfg)
        if args.command == "summarize":
            return cmd_summarize(args, cfg)
        if args.command == "gradcheck":
            return cmd_gradcheck(args, cfg, used_model_overrides)
        if args.command == "trace":
            return cmd_trace(args, cfg)
        if args.command == "params":
            return cmd_params(args, cfg)
        parser.error(f"unknown command {args.command!r}")
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_BAD_CONFIG
    except (FileNotFoundError, data_io.VideoNotFoundError) as exc:
        log.error("missing input: %s", exc)
        return EXIT_MISSING_INPUT
    except (data_io.ContainerFormatError, ckpt.CheckpointFormatError) as exc:
        log.error("bad input file: %s", exc)
        return EXIT_CHECK_FAILED
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
