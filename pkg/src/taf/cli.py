"""Command-line driver: ``taf <subcommand> ...``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric error.
"""
from __future__ import annotations

import argparse
import configparser
import hashlib
import itertools
import logging
import sys
from pathlib import Path

import numpy as np

from . import keyframes as kfm
from .classifier import checkpoint
from .classifier.gradcheck import gradient_check
from .classifier.training import evaluate, split_by_signer, train
from .colorize import TafTensor, flip_horizontal, read_taf
from .errors import DataError, NumericError, ParameterError, TafError
from .pipeline import PipelineConfig, load_frames, corpus_entries, detect_keyframes, extract_corpus, load_dataset
from .pngio import to_uint8, write_gray, write_rgb
from .skeleton_io import parse_sequence
from .synth import SynthSpec, generate_dataset, read_meta

log = logging.getLogger("taf")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

# flag -> PipelineConfig field
PIPELINE_FLAGS = {
    "scheme": "scheme", "channels": "channels", "kf_method": "kf_method", "kf_k": "kf_k", "kf_tau": "kf_tau",
    "static": "static", "sequential": "sequential", "sigma": "sigma", "seed": "seed",
}


class UsageError(TafError):
    pass


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="INI config file; explicit flags override it")
    p.add_argument("--scheme", choices=("baseline", "hue"))
    p.add_argument("--channels", type=int, metavar="C", help="temporal channels C")
    p.add_argument("--kf-method", choices=("none", "hs_heu", "ent_dc", "hs_dc"))
    p.add_argument("--kf-k", type=int, metavar="K", help="fixed keyframe count")
    p.add_argument("--kf-tau", type=float, metavar="TAU", help="variable-length speed threshold")
    p.add_argument("--static", choices=("none", "keyframe", "keyshot"))
    p.add_argument("--sequential", action="store_true", default=None)
    p.add_argument("--sigma", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, default=1)


def pipeline_config(args) -> PipelineConfig:
    config = PipelineConfig.load(args.config) if getattr(args, "config", None) else PipelineConfig()
    changes = {field: getattr(args, flag) for flag, field in PIPELINE_FLAGS.items()
               if getattr(args, flag, None) is not None}
    if "kf_tau" in changes:
        changes.setdefault("kf_k", None)
    for name in ("epochs", "lr"):
        if getattr(args, name, None) is not None:
            changes[name] = getattr(args, name)
    return config.replace(**changes)


def _held_out(args, corpus: Path) -> int:
    if getattr(args, "held_out", None) is not None:
        return args.held_out
    meta = corpus / "manifest_meta.txt"
    if not meta.exists():
        raise DataError(f"{corpus}: no manifest_meta.txt; pass --held-out")
    return int(read_meta(meta)["held_out_signer"])


# --------------------------------------------------------------------------
# subcommands

def cmd_synth(args) -> int:
    spec = SynthSpec(num_classes=args.classes, signers=args.signers, reps=args.reps, holds=args.holds,
                     noise=args.noise, seed=args.seed, corpus=args.corpus, held_out=args.held_out)
    generate_dataset(spec, args.out, frames=not args.no_frames, jobs=args.jobs)
    print(f"wrote {spec.num_classes * spec.signers * spec.reps} sequences to {args.out}")
    return EXIT_OK


def cmd_extract(args) -> int:
    config = pipeline_config(args)
    failures = extract_corpus(args.corpus, args.out, config, jobs=args.jobs)
    (Path(args.out) / "config.ini").write_text(config.to_text())
    total = len(corpus_entries(args.corpus))
    print(f"extracted {total - len(failures)}/{total} tensors with {config.input_channels} channels")
    return EXIT_DATA if failures else EXIT_OK


def cmd_keyframes(args) -> int:
    config = pipeline_config(args)
    if config.kf_method == "none":
        raise UsageError("choose a keyframe method with --kf-method")
    entries, failed = [], 0
    for e in corpus_entries(args.corpus):
        try:
            seq = parse_sequence(e.skeleton)
            frames = load_frames(e.frames) if config.kf_method == kfm.ENT_DC else None
            entries.append((e.video_id, detect_keyframes(seq, config, frames)))
        except TafError as exc:
            failed += 1
            log.error("%s: %s", e.video_id, exc)
    kfm.write_report(args.report, entries)
    print(f"wrote {len(entries)} keyframe sets to {args.report}")
    return EXIT_DATA if failed else EXIT_OK


def _train_cell(config: PipelineConfig, data, held_out: int):
    train_set, val_set = split_by_signer(data, held_out)
    model_config = config.model_config(int(data.y.max()) + 1)
    params, report = train(train_set, model_config, config.epochs, config.lr, val_set=val_set,
                           stop_train_acc=config.stop_train_acc)
    return params, model_config, report, val_set


def cmd_train(args) -> int:
    config = pipeline_config(args)
    corpus = Path(args.corpus)
    data = load_dataset(args.tafs, corpus)
    _check_channels(config, data)
    params, model_config, report, _ = _train_cell(config, data, _held_out(args, corpus))
    checkpoint.save(args.checkpoint, params, model_config)
    text = report.to_text()
    if args.report:
        Path(args.report).write_text(text)
    sys.stdout.write(text)
    print(f"checksum {report.checksum:08x} wall {report.wall_clock:.1f}s")
    return EXIT_OK


def _check_channels(config: PipelineConfig, data) -> None:
    if data.x.shape[1] != config.input_channels:
        raise DataError(f"tensors have {data.x.shape[1]} channels, config implies {config.input_channels}")


def cmd_eval(args) -> int:
    params, model_config = checkpoint.load(args.checkpoint)
    corpus = Path(args.corpus)
    data = load_dataset(args.tafs, corpus)
    if args.all:
        subset = data
    else:
        _, subset = split_by_signer(data, _held_out(args, corpus))
    top1, top5 = evaluate(params, model_config, subset)
    print(f"accuracy {top1:.4f} top5 {top5:.4f} n {len(subset)}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    result = gradient_check(seed=args.seed or 0)
    for name, err in result.per_tensor.items():
        print(f"{name} {err:.3e}")
    print(f"max {result.max_rel_error:.3e} redraws {result.redraws} seconds {result.seconds:.1f}")
    if not result.passed(args.tol):
        raise NumericError(f"gradient check failed: {result.max_rel_error:.3e} >= {args.tol:g}", layer="gradcheck")
    return EXIT_OK


# ------------------------------------------------------------------ ablation

def parse_grid(text: str, base: PipelineConfig | None = None) -> list[tuple[str, PipelineConfig]]:
    """Cells of an ablation grid file.

    ``[base]`` holds settings shared by every cell (config field names,
    e.g. ``epochs = 5``). ``[axes]`` lists comma-separated values whose
    cartesian product forms cells in file order; invalid combinations are
    skipped. Each ``[cell NAME]`` section adds one explicit cell.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ParameterError(f"bad grid file: {exc}") from None
    base = base or PipelineConfig()
    if parser.has_section("base"):
        base = PipelineConfig.from_mapping(dict(parser.items("base")), base)
    cells = []
    if parser.has_section("axes"):
        axes = [(k, [v.strip() for v in values.split(",")]) for k, values in parser.items("axes")]
        for combo in itertools.product(*(vals for _, vals in axes)):
            mapping = {k: v for (k, _), v in zip(axes, combo)}
            try:
                cfg = PipelineConfig.from_mapping(mapping, base)
            except ParameterError:
                continue
            cells.append((" ".join(f"{k}={v}" for k, v in mapping.items()), cfg))
    for section in parser.sections():
        if section.startswith("cell"):
            name = section[4:].strip() or f"cell{len(cells) + 1}"
            cells.append((name, PipelineConfig.from_mapping(dict(parser.items(section)), base)))
    if not cells:
        raise ParameterError("grid defines no cells")
    return cells


TABLE_HEADER = "cell\tscheme\tC\tkeyframes\tmode\tstatic\tsequential\tchannels\taccuracy\ttop5\tchecksum"


def run_ablation(cells, corpus, work_dir, held_out: int, jobs: int = 1) -> tuple[str, list[dict]]:
    """Extract, train and evaluate every cell; returns the table text and rows."""
    work_dir = Path(work_dir)
    rows = []
    for i, (name, config) in enumerate(cells):
        row = {"cell": name, "config": config}
        try:
            out = work_dir / f"cell{i:02d}"
            failures = extract_corpus(corpus, out, config, jobs=jobs)
            if failures:
                raise DataError(f"{len(failures)} videos failed extraction")
            data = load_dataset(out, corpus)
            params, model_config, report, val_set = _train_cell(config, data, held_out)
            top1, top5 = evaluate(params, model_config, val_set)
            row.update(accuracy=top1, top5=top5, checksum=f"{report.checksum:08x}")
        except TafError as exc:
            log.error("cell %s failed: %s", name, exc)
            row.update(error=f"{type(exc).__name__}")
        rows.append(row)
    lines = [TABLE_HEADER]
    for r in rows:
        c = r["config"]
        kf = c.kf_method
        mode = str(c.mode) if kf != "none" else "-"
        result = (f"{100 * r['accuracy']:.2f}\t{100 * r['top5']:.2f}\t{r['checksum']}" if "accuracy" in r
                  else f"FAILED\tFAILED\t{r['error']}")
        lines.append(f"{r['cell']}\t{c.scheme}\t{c.channels}\t{kf}\t{mode}\t{c.static}\t{str(c.sequential).lower()}\t"
                     f"{c.input_channels}\t{result}")
    ok = [r for r in rows if "accuracy" in r]
    if ok:
        best = max(ok, key=lambda r: (r["accuracy"], r["top5"]))
        lines.append("")
        lines.append(f"# best: {best['cell']} accuracy {100 * best['accuracy']:.2f} top5 {100 * best['top5']:.2f}")
        lines.extend("# " + line for line in best["config"].to_text().splitlines() if line)
    return "\n".join(lines) + "\n", rows


def cmd_ablate(args) -> int:
    base = pipeline_config(args)
    cells = parse_grid(Path(args.grid).read_text(), base)
    corpus = Path(args.corpus)
    table, rows = run_ablation(cells, corpus, args.work, _held_out(args, corpus), args.jobs)
    Path(args.out).write_text(table)
    sys.stdout.write(table)
    print(f"table sha256 {hashlib.sha256(table.encode()).hexdigest()}")
    return EXIT_DATA if any("error" in r for r in rows) else EXIT_OK


# ------------------------------------------------------------------ export

def _base_group(tag: str) -> str:
    # "N_r" and "N2" both belong to group "N"
    return tag.rsplit(":", 1)[-1].split("_")[0].rstrip("0123456789")


def resolve_selector(taf: TafTensor, selector: str) -> list[int]:
    """Channel indices for ``JOINT:GROUP`` (e.g. ``R_WRIST:N`` gives the N triple) or ``i[,j,k]``."""
    if all(part.strip().isdigit() for part in selector.split(",")):
        idx = [int(p) for p in selector.split(",")]
    else:
        joint, _, group = selector.rpartition(":")
        if not joint:
            raise UsageError(f"bad channel selector {selector!r}")
        exact = [i for i, t in enumerate(taf.tags) if t == selector]
        idx = exact or [i for i, t in enumerate(taf.tags)
                        if t.startswith(joint + ":") and _base_group(t) == group]
    if len(idx) not in (1, 3) or any(not 0 <= i < taf.channels for i in idx):
        raise UsageError(f"selector {selector!r} must pick 1 or 3 existing channels, got {idx}")
    return idx


def export_png(taf: TafTensor, selector: str, path, flip: bool = False, scale: float | None = None) -> np.ndarray:
    """Write the selected channel(s) as 8-bit PNG; returns the uint8 image.

    Values are divided by ``scale`` (default: 1 for normalised channels,
    else the maximum of the selection), clipped to [0, 1] and rounded.
    """
    if flip:
        taf = flip_horizontal(taf)
    idx = resolve_selector(taf, selector)
    data = taf.data[idx].astype(np.float64)
    if scale is None:
        normalized = all(_base_group(taf.tags[i]) == "N" for i in idx)
        scale = 1.0 if normalized else max(float(data.max()), 1e-12)
    image = to_uint8(data, scale)
    if len(idx) == 1:
        write_gray(path, image[0])
        return image[0]
    rgb = np.moveaxis(image, 0, -1)
    write_rgb(path, rgb)
    return rgb


def cmd_export_png(args) -> int:
    taf = read_taf(args.taf)
    export_png(taf, args.select, args.out, flip=args.flip, scale=args.scale)
    print(f"wrote {args.out}")
    return EXIT_OK


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="taf", description="Temporal accumulative features for sign videos.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("out", type=Path)
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--signers", type=int, default=4)
    p.add_argument("--reps", type=int, default=8)
    p.add_argument("--holds", type=int, default=3)
    p.add_argument("--noise", type=float, default=0.0, help="jitter std in metres")
    p.add_argument("--corpus", choices=("primitives", "order"), default="primitives")
    p.add_argument("--held-out", type=int)
    p.add_argument("--no-frames", action="store_true", help="skip video frames (only entropy keyframes need them)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", help="write one TAF tensor per video")
    p.add_argument("corpus", type=Path)
    p.add_argument("out", type=Path)
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("keyframes", help="write a keyframe report")
    p.add_argument("corpus", type=Path)
    p.add_argument("report", type=Path)
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_keyframes)

    p = sub.add_parser("train", help="train the CNN on extracted tensors")
    p.add_argument("corpus", type=Path)
    p.add_argument("tafs", type=Path)
    p.add_argument("checkpoint", type=Path)
    p.add_argument("--report", type=Path)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--held-out", type=int)
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on the held-out signer")
    p.add_argument("checkpoint", type=Path)
    p.add_argument("corpus", type=Path)
    p.add_argument("tafs", type=Path)
    p.add_argument("--held-out", type=int)
    p.add_argument("--all", action="store_true", help="evaluate every video, not just the held-out signer")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="finite-difference check of backprop on a reduced network")
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("ablate", help="run an ablation grid and write a results table")
    p.add_argument("grid", type=Path)
    p.add_argument("corpus", type=Path)
    p.add_argument("out", type=Path)
    p.add_argument("--work", type=Path, default=Path("ablate_work"))
    p.add_argument("--held-out", type=int)
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("export-png", help="render TAF channels to an 8-bit PNG")
    p.add_argument("taf", type=Path)
    p.add_argument("out", type=Path)
    p.add_argument("--select", required=True, help="JOINT:GROUP (e.g. R_WRIST:N) or channel indices i[,j,k]")
    p.add_argument("--flip", action="store_true")
    p.add_argument("--scale", type=float)
    p.set_defaults(func=cmd_export_png)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, ParameterError) as exc:
        print(f"taf: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"taf: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, TafError, OSError) as exc:
        print(f"taf: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
