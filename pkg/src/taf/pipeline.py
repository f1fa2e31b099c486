"""End-to-end feature extraction and the configuration that drives it.

A :class:`PipelineConfig` names one cell of the ablation grid: colourisation
scheme, temporal channels, keyframe detector and mode, static hand-shape
channels, sequential accumulation, heatmap sigma and CNN hyper-parameters.
Config files are INI-style (``[section]`` headers, ``key = value`` lines)::

    [features]
    scheme = hue          ; baseline | hue
    channels = 3
    sigma = 2.0
    norm = pixel          ; pixel | channel
    sequential = false
    static = none         ; none | keyframe | keyshot

    [keyframes]
    method = hs_dc        ; none | hs_heu | ent_dc | hs_dc
    k = 3                 ; fixed-length mode
    tau =                 ; set instead of k for variable-length mode

    [model]
    blocks = 2
    convs_per_block = 3
    initial_filters = 128
    dropout = 0.5

    [train]
    epochs = 30
    lr = 0.001
    seed = 0
    stop_train_acc =      ; optional early stop on training accuracy
"""
from __future__ import annotations

import configparser
import dataclasses
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .classifier.model import ModelConfig
from .classifier.training import Dataset
from .colorize import Linear, Subunit, TafTensor, accumulate_baseline, accumulate_hue, accumulate_sequential, expected_channels, read_taf, write_taf
from .errors import DataError, ParameterError, ShapeError, TafError
from .heatmap import DEFAULT_SIGMA, render_stack
from .keyframes import ENT_DC, HS_DC, HS_HEU, FixedLength, KeyframeSet, VariableLength, detect_entropy_dc, detect_hs_dc, detect_hs_heuristic, write_report
from .pngio import frame_paths, read_png
from .skeleton_io import SkeletonSequence, parse_sequence, project_to_grid
from .static_subunits import HandMaskFrame, append_static, build_static_channels, load_masks

log = logging.getLogger(__name__)

SCHEMES = ("baseline", "hue")
KF_METHODS = ("none", HS_HEU, ENT_DC, HS_DC)
STATIC_VARIANTS = ("none", "keyframe", "keyshot")


@dataclass(frozen=True)
class PipelineConfig:
    scheme: str = "hue"
    channels: int = 3
    kf_method: str = "none"
    kf_k: int | None = 3
    kf_tau: float | None = None
    static: str = "none"
    sequential: bool = False
    sigma: float = DEFAULT_SIGMA
    norm: str = "pixel"
    blocks: int = 2
    convs_per_block: int = 3
    initial_filters: int = 128
    dropout: float = 0.5
    epochs: int = 30
    lr: float = 1e-3
    seed: int = 0
    stop_train_acc: float | None = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ParameterError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.kf_method not in KF_METHODS:
            raise ParameterError(f"keyframe method must be one of {KF_METHODS}, got {self.kf_method!r}")
        if self.static not in STATIC_VARIANTS:
            raise ParameterError(f"static variant must be one of {STATIC_VARIANTS}, got {self.static!r}")
        if self.channels < 2:
            raise ParameterError("need at least 2 temporal channels")
        if self.sigma <= 0:
            raise ParameterError("sigma must be positive")
        if self.kf_method != "none":
            if self.kf_tau is None and (self.kf_k is None or self.kf_k < 1):
                raise ParameterError("keyframe detection needs K >= 1 or a threshold tau")
            if self.scheme != "hue":
                raise ParameterError("keyframe subunits are coloured with the hue scheme only")
        if self.static != "none" and self.kf_method == "none":
            raise ParameterError("static hand-shape channels require a keyframe method")
        if self.sequential and self.kf_method == "none":
            raise ParameterError("sequential accumulation requires keyframes")
        if (self.static != "none" or self.sequential) and self.kf_tau is not None:
            raise ParameterError("static and sequential channels need a fixed keyframe count")

    @property
    def mode(self):
        return VariableLength(self.kf_tau) if self.kf_tau is not None else FixedLength(self.kf_k)

    @property
    def k(self) -> int:
        return 0 if self.kf_method == "none" or self.kf_tau is not None else self.kf_k

    @property
    def input_channels(self) -> int:
        return expected_channels(self.scheme, self.channels, self.k, self.static, self.sequential)

    def model_config(self, num_classes: int) -> ModelConfig:
        return ModelConfig(num_classes=num_classes, input_channels=self.input_channels, blocks=self.blocks,
                           convs_per_block=self.convs_per_block, initial_filters=self.initial_filters,
                           dropout_p=self.dropout, seed=self.seed)

    def replace(self, **changes) -> "PipelineConfig":
        return dataclasses.replace(self, **changes)

    def label(self) -> str:
        parts = [self.scheme, f"C={self.channels}" if self.scheme == "baseline" or self.kf_method == "none" else "",
                 self.kf_method if self.kf_method != "none" else "", str(self.mode) if self.kf_method != "none" else "",
                 f"static={self.static}" if self.static != "none" else "", "sequential" if self.sequential else ""]
        return " ".join(p for p in parts if p)

    # ---------------------------------------------------------------- files
    _SECTIONS = {
        "features": {"scheme": "scheme", "channels": "channels", "sigma": "sigma", "norm": "norm",
                     "sequential": "sequential", "static": "static"},
        "keyframes": {"method": "kf_method", "k": "kf_k", "tau": "kf_tau"},
        "model": {"blocks": "blocks", "convs_per_block": "convs_per_block", "initial_filters": "initial_filters",
                  "dropout": "dropout"},
        "train": {"epochs": "epochs", "lr": "lr", "seed": "seed", "stop_train_acc": "stop_train_acc"},
    }

    @classmethod
    def from_mapping(cls, values: dict[str, str], base: "PipelineConfig | None" = None) -> "PipelineConfig":
        """Build from ``field -> text`` pairs; empty text means ``None``."""
        base = base or cls()
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        changes = {}
        for name, text in values.items():
            if name not in types:
                raise ParameterError(f"unknown setting {name!r}")
            changes[name] = _coerce(text, types[name], name)
        return dataclasses.replace(base, **changes)

    @classmethod
    def parse(cls, text: str, base: "PipelineConfig | None" = None) -> "PipelineConfig":
        parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ParameterError(f"bad config file: {exc}") from None
        values = {}
        for section in parser.sections():
            if section not in cls._SECTIONS:
                raise ParameterError(f"unknown config section [{section}]")
            for key, text_value in parser.items(section):
                if key not in cls._SECTIONS[section]:
                    raise ParameterError(f"unknown key {key!r} in [{section}]")
                values[cls._SECTIONS[section][key]] = text_value
        return cls.from_mapping(values, base)

    @classmethod
    def load(cls, path, base: "PipelineConfig | None" = None) -> "PipelineConfig":
        return cls.parse(Path(path).read_text(), base)

    def to_text(self) -> str:
        lines = []
        for section, keys in self._SECTIONS.items():
            lines.append(f"[{section}]")
            for key, name in keys.items():
                value = getattr(self, name)
                lines.append(f"{key} = {'' if value is None else _format(value)}")
            lines.append("")
        return "\n".join(lines)


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return f"{value:g}" if isinstance(value, float) else str(value)


def _coerce(text: str, annotation: str, name: str):
    text = text.strip()
    optional = "None" in str(annotation)
    if text == "" or (optional and text.lower() == "none"):
        if optional:
            return None
        raise ParameterError(f"{name} needs a value")
    kind = str(annotation).split("|")[0].strip()
    try:
        if kind == "bool":
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
    except ValueError:
        raise ParameterError(f"bad value for {name}: {text!r}") from None
    return text


# --------------------------------------------------------------------------
# one video

def detect_keyframes(seq: SkeletonSequence, config: PipelineConfig, frames=None) -> KeyframeSet | None:
    if config.kf_method == "none":
        return None
    if config.kf_method == HS_HEU:
        return detect_hs_heuristic(seq, config.mode)
    if config.kf_method == HS_DC:
        return detect_hs_dc(seq, config.mode)
    if frames is None:
        raise DataError("entropy keyframes need video frames")
    return detect_entropy_dc(frames, config.mode)


def check_layout(taf: TafTensor, config: PipelineConfig) -> None:
    """Channel count must equal the layout arithmetic for this config."""
    if taf.channels != config.input_channels:
        raise ShapeError(f"extracted {taf.channels} channels, layout requires {config.input_channels}")
    static = sum(tag.startswith("static:") for tag in taf.tags)
    want = {"none": 0, "keyframe": config.k, "keyshot": 5 * config.k}[config.static]
    if static != want:
        raise ShapeError(f"{static} static channels, expected {want}")


def extract_video(seq: SkeletonSequence, config: PipelineConfig, masks: list[HandMaskFrame] | None = None,
                  frames=None) -> tuple[TafTensor, KeyframeSet | None]:
    """TAF tensor (and keyframes, if any) of one sequence."""
    stack = render_stack(project_to_grid(seq), config.sigma)
    keyframes = detect_keyframes(seq, config, frames)
    if config.scheme == "baseline":
        taf = accumulate_baseline(stack, config.channels, config.norm)
    elif keyframes is None:
        taf = accumulate_hue(stack, Linear(config.channels), norm=config.norm)
    elif config.sequential:
        taf = accumulate_sequential(stack, keyframes.indices, norm=config.norm)
    else:
        taf = accumulate_hue(stack, Subunit(keyframes.indices), norm=config.norm)
    if config.static != "none":
        if masks is None:
            raise DataError("static channels need hand masks")
        taf = append_static(taf, build_static_channels(masks, keyframes.indices, config.static, seq.T))
    check_layout(taf, config)
    return taf, keyframes


# --------------------------------------------------------------------------
# corpora on disk

@dataclass
class CorpusEntry:
    video_id: str
    class_id: int
    signer: int
    skeleton: Path
    masks: Path
    frames: Path


def corpus_entries(corpus_dir) -> list[CorpusEntry]:
    from .synth import read_manifest

    corpus_dir = Path(corpus_dir)
    manifest = corpus_dir / "manifest.txt"
    if not manifest.exists():
        raise DataError(f"{corpus_dir}: no manifest.txt")
    return [CorpusEntry(e.video_id, e.class_id, e.signer, corpus_dir / "skeletons" / f"{e.video_id}.txt",
                        corpus_dir / "masks" / e.video_id, corpus_dir / "frames" / e.video_id)
            for e in read_manifest(manifest)]


def load_frames(directory: Path) -> list[np.ndarray]:
    paths = frame_paths(directory)
    if not paths:
        raise DataError(f"{directory}: no video frames")
    return [read_png(p) for p in paths]


def _extract_entry(args):
    entry, config, out_dir = args
    try:
        seq = parse_sequence(entry.skeleton)
        masks = load_masks(entry.masks) if config.static != "none" else None
        frames = load_frames(entry.frames) if config.kf_method == ENT_DC else None
        taf, kf = extract_video(seq, config, masks, frames)
        write_taf(taf, Path(out_dir) / f"{entry.video_id}.taf")
        return entry.video_id, kf, None
    except TafError as exc:
        return entry.video_id, None, f"{type(exc).__name__}: {exc}"


def extract_corpus(corpus_dir, out_dir, config: PipelineConfig, jobs: int = 1) -> list[tuple[str, str]]:
    """Write one ``.taf`` per video plus ``keyframes.txt``; return per-video failures."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    work = [(e, config, out_dir) for e in corpus_entries(corpus_dir)]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(_extract_entry, work, chunksize=4))
    else:
        results = [_extract_entry(w) for w in work]
    failures = [(vid, err) for vid, _, err in results if err]
    for vid, err in failures:
        log.error("%s: %s", vid, err)
    report = [(vid, kf) for vid, kf, err in results if kf is not None]
    if report:
        write_report(out_dir / "keyframes.txt", report)
    return failures


def load_dataset(taf_dir, corpus_dir) -> Dataset:
    """Stack extracted tensors in manifest order with labels and signer ids."""
    entries = corpus_entries(corpus_dir)
    xs, ys, signers, ids = [], [], [], []
    for e in entries:
        path = Path(taf_dir) / f"{e.video_id}.taf"
        if not path.exists():
            log.warning("%s: no tensor, skipped", e.video_id)
            continue
        xs.append(read_taf(path).data)
        ys.append(e.class_id)
        signers.append(e.signer)
        ids.append(e.video_id)
    if not xs:
        raise DataError(f"{taf_dir}: no tensors")
    shapes = {x.shape for x in xs}
    if len(shapes) != 1:
        raise ShapeError(f"tensors disagree in shape: {sorted(shapes)}")
    return Dataset(np.stack(xs).astype(np.float32), ys, signers, ids)


def extract_samples(samples, config: PipelineConfig, spec=None) -> tuple[Dataset, list[KeyframeSet | None]]:
    """In-memory extraction of synthetic samples (masks and frames rendered on the fly)."""
    from .synth import generate_frames, generate_masks

    x = None
    keyframes = []
    for i, sample in enumerate(samples):
        masks = generate_masks(sample.sequence) if config.static != "none" else None
        frames = generate_frames(sample, spec) if config.kf_method == ENT_DC else None
        taf, kf = extract_video(sample.sequence, config, masks, frames)
        if x is None:
            x = np.empty((len(samples),) + taf.data.shape, dtype=np.float32)
        x[i] = taf.data
        keyframes.append(kf)
    y = [s.sequence.sign_label for s in samples]
    signers = [s.sequence.signer_id for s in samples]
    return Dataset(x, y, signers, [s.video_id for s in samples]), keyframes
