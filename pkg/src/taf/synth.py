"""Synthetic signing corpus with planted ground truth.

Every sequence follows a movement-hold pattern on the dominant (right) hand::

    rest -> lead-in -> stroke 1 -> HOLD -> stroke 2 -> HOLD ... -> lead-out -> rest

Hand speed is prescribed frame by frame: each stroke has a steep-edged
speed bump, holds are runs of exactly zero speed, and the lead-in/lead-out
boundaries are shallow non-zero speed troughs. Without noise the only
interior speed minima are therefore the ``H`` holds plus the two troughs,
which is what keyframe detection selecting ``K + 2`` and dropping the
outermost two expects. The non-dominant hand circles slowly at constant
speed (or rests, with ``left_motion=False``).

Classes differ by the geometric primitive traced by the strokes. The
``order`` corpus instead uses the same three loops around a common hub in
every class, so classes differ only in the order of their dynamic subunits.
The approach to the hub runs straight into the first loop and the last loop
runs straight into the departure, so the two holds sit exactly at the loop
boundaries.
"""
from __future__ import annotations

import hashlib
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .colorize import Linear, accumulate_hue
from .errors import ParameterError
from .heatmap import render_stack
from .pngio import write_gray
from .skeleton_io import GRID_SHAPE, JointId, SkeletonSequence, project_to_grid, quantize, write_sequence
from .static_subunits import HandMaskFrame, write_masks

HOLD_RUN = 2          # default frames of exactly zero speed per hold
TROUGH_LEVEL = 0.3    # lead-in/out trough speed relative to the neighbouring peaks
MASK_SCALE = 2        # mask resolution relative to the TAF grid
FRAME_SHAPE = (48, 64)
LEFT_PERIOD = 24      # frames per revolution of the non-dominant hand

PRIMITIVES = ("line", "arc", "zigzag", "figure8", "circle", "push", "wave", "spiral", "vee", "hook",
              "swoop", "loop_down")
BLOBS = ("disc", "ellipse", "bar")

# body layout in metres; x points to the signer's right, y up, z away from the camera
SHOULDER = {"left": np.array([-0.18, 0.45, 2.0]), "right": np.array([0.18, 0.45, 2.0])}
REST = {"left": np.array([-0.22, -0.15, 1.9]), "right": np.array([0.22, -0.15, 1.9])}
SIGN_ORIGIN = np.array([0.02, 0.12, 1.8])
LEFT_CENTER = np.array([-0.16, 0.02, 1.85])


@dataclass(frozen=True)
class SynthSpec:
    num_classes: int = 10
    signers: int = 4
    reps: int = 8
    t_range: tuple[int, int] = (64, 88)
    holds: int = 3
    noise: float = 0.0
    seed: int = 0
    corpus: str = "primitives"
    left_motion: bool = True
    amplitude: float = 0.6
    noise_corr: float = 3.0
    hold_frames: int = HOLD_RUN
    held_out: int | None = None

    def __post_init__(self):
        for name in ("num_classes", "signers", "reps", "holds", "hold_frames"):
            if getattr(self, name) < 1:
                raise ParameterError(f"{name} must be positive")
        if self.noise < 0 or self.noise_corr < 0:
            raise ParameterError("noise and its correlation length must be non-negative")
        lo, hi = self.t_range
        if not 0 < lo <= hi:
            raise ParameterError(f"bad T range {self.t_range}")
        if self.corpus not in ("primitives", "order"):
            raise ParameterError(f"unknown corpus {self.corpus!r}")
        if self.corpus == "primitives" and self.num_classes > len(PRIMITIVES):
            raise ParameterError(f"at most {len(PRIMITIVES)} primitive classes")
        if self.corpus == "order" and self.num_classes > 6:
            raise ParameterError("the order corpus has 6 classes (orderings of three loops)")
        if self.held_out is not None and not 1 <= self.held_out <= self.signers:
            raise ParameterError(f"held-out signer {self.held_out} outside 1..{self.signers}")

    @property
    def held_out_signer(self) -> int:
        return self.signers if self.held_out is None else self.held_out

    @property
    def hold_count(self) -> int:
        return 2 if self.corpus == "order" else self.holds

    def keys(self):
        """(class, signer, rep) for every sequence, signers numbered from 1."""
        return itertools.product(range(self.num_classes), range(1, self.signers + 1), range(self.reps))


@dataclass
class SynthSample:
    sequence: SkeletonSequence
    holds: tuple[int, ...]
    primitive: str

    @property
    def video_id(self) -> str:
        return video_id(self.sequence.sign_label, self.sequence.signer_id, self.sequence.meta["rep"])


def video_id(class_id: int, signer_id: int, rep: int) -> str:
    return f"c{class_id:03d}_s{signer_id:02d}_r{rep:02d}"


def _rng(spec: SynthSpec, *key: int) -> np.random.Generator:
    return np.random.default_rng([spec.seed, *key])


# --------------------------------------------------------------------------
# geometry

def _curve(name: str, u: np.ndarray) -> np.ndarray:
    """Unit-amplitude primitive, ``(len(u), 3)`` offsets from its start."""
    x, y, z = np.zeros_like(u), np.zeros_like(u), np.zeros_like(u)
    tau = 2 * np.pi
    if name == "line":
        x, y = u, -0.5 * u
    elif name == "arc":
        x, y = 0.5 * (1 - np.cos(np.pi * u)), 0.5 * np.sin(np.pi * u)
    elif name == "zigzag":
        x, y = 0.9 * u, -0.25 * np.sin(2 * tau * u) - 0.4 * u
    elif name == "figure8":
        x, y = 0.45 * np.sin(tau * u), 0.3 * np.sin(2 * tau * u)
    elif name == "circle":
        x, y = 0.35 * np.sin(tau * u), 0.35 * (np.cos(tau * u) - 1)
    elif name == "push":
        x, y, z = 0.25 * u, -0.6 * u, -0.6 * u
    elif name == "wave":
        x, y = -0.9 * u, 0.12 * np.sin(3 * tau * u)
    elif name == "spiral":
        r = 0.4 * (1 - 0.6 * u)
        x, y = r * np.cos(1.5 * tau * u) - 0.4, r * np.sin(1.5 * tau * u)
    elif name == "vee":
        x, y = -0.8 * u, -0.6 * np.sin(np.pi * u)
    elif name == "hook":
        x, y = 0.6 * np.sin(0.5 * np.pi * u), 0.7 * (1 - np.cos(0.5 * np.pi * u)) + 0.2 * u
    elif name == "swoop":
        x, y = 0.5 * u, 0.6 * u**2 - 0.5 * u
    elif name == "loop_down":
        x, y = 0.3 * np.sin(tau * u), -0.8 * u + 0.25 * (1 - np.cos(tau * u))
    else:
        raise ParameterError(f"unknown primitive {name!r}")
    return np.stack([x, y, z], axis=1)


LOOPS = {
    "up": lambda u: np.stack([0.25 * np.sin(2 * np.pi * u), 0.3 * (1 - np.cos(2 * np.pi * u)), 0 * u], axis=1),
    "left": lambda u: np.stack([-0.3 * (1 - np.cos(2 * np.pi * u)), 0.25 * np.sin(2 * np.pi * u), 0 * u], axis=1),
    "down": lambda u: np.stack([-0.25 * np.sin(2 * np.pi * u), -0.3 * (1 - np.cos(2 * np.pi * u)), 0 * u], axis=1),
}
ORDERS = list(itertools.permutations(("up", "left", "down")))


def class_primitive(class_id: int, spec: SynthSpec) -> str:
    if spec.corpus == "order":
        return "order:" + "-".join(ORDERS[class_id])
    return PRIMITIVES[class_id]


def _arc_length(points: np.ndarray) -> np.ndarray:
    return np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(points, axis=0), axis=1))])


def _split_by_arc(points: np.ndarray, pieces: int, jitter: np.ndarray) -> list[np.ndarray]:
    """Cut a dense polyline into ``pieces`` at (jittered) equal arc fractions."""
    s = _arc_length(points)
    cuts = (np.arange(1, pieces) + jitter) / pieces * s[-1]
    idx = np.searchsorted(s, cuts)
    bounds = [0, *idx.tolist(), len(points) - 1]
    return [points[a:b + 1] for a, b in zip(bounds[:-1], bounds[1:])]


def _strokes(class_id: int, spec: SynthSpec, scale: float, origin: np.ndarray, rng) -> list[np.ndarray]:
    u = np.linspace(0.0, 1.0, 2001)
    if spec.corpus == "order":
        hub = origin + scale * np.array([0.0, 0.0, 0.0])
        approach = np.linspace(hub + scale * np.array([0.35, -0.25, 0.0]), hub, 200)
        depart = np.linspace(hub, hub + scale * np.array([-0.35, -0.25, 0.0]), 200)
        first, middle, last = (hub + scale * LOOPS[name](u) for name in ORDERS[class_id])
        return [np.concatenate([approach, first[1:]]), middle, np.concatenate([last, depart[1:]])]
    curve = origin + scale * _curve(PRIMITIVES[class_id], u)
    jitter = rng.uniform(-0.08, 0.08, size=spec.holds)
    return _split_by_arc(curve, spec.holds + 1, jitter)


def _speed_profile(n: int, length: float, v_start: float, v_end: float) -> np.ndarray:
    """Per-frame speeds of one stroke: a steep-edged bump from ``v_start`` to ``v_end``.

    The bump follows ``sin^0.5`` so speed leaves and reaches the boundary
    value abruptly, giving holds and troughs a sharp, well-located minimum.
    The peak is solved for so the speeds sum to ``length``.
    """
    m = max(n // 2, 1)
    j = np.arange(1, n + 1)
    up = j <= m
    w = np.where(up, np.sin(0.5 * np.pi * j / m), np.sin(0.5 * np.pi * (n - j) / max(n - m, 1))) ** 0.5
    base = np.where(up, v_start, v_end) * (1 - w)
    peak = (length - base.sum()) / w.sum()
    if peak <= max(v_start, v_end):
        raise ParameterError("stroke too short for its boundary speeds")
    return base + peak * w


def _walk(points: np.ndarray, length: float, frames: int, v_start: float, v_end: float) -> np.ndarray:
    """Positions of one stroke whose frame-to-frame distances follow the speed profile.

    Arc-length increments are rescaled until every chord is the same
    multiple of the prescribed speed and the last frame lands on the
    stroke's endpoint, so curvature cannot add spurious speed dips.
    """
    s = _arc_length(points)
    speeds = _speed_profile(frames, length, v_start, v_end)
    moving = speeds > 0
    step = speeds * (s[-1] / speeds.sum())

    def place(steps):
        travelled = np.minimum(np.cumsum(steps), s[-1])
        return np.stack([np.interp(travelled, s, points[:, k]) for k in range(3)], axis=1)

    for _ in range(50):
        pos = place(step)
        chords = np.linalg.norm(np.diff(np.vstack([points[:1], pos]), axis=0), axis=1)
        ratio = np.where(moving, speeds / np.where(chords > 0, chords, 1.0), 0.0)
        scale = np.median(chords[moving] / speeds[moving])
        step = step * ratio * scale
        step *= s[-1] / step.sum()
        if np.abs(chords[moving] / speeds[moving] - scale).max() < 1e-9:
            break
    out = place(step)
    out[-1] = points[-1]
    return out


def _frame_budget(lengths: np.ndarray, T: int, fixed: int, rng) -> np.ndarray:
    weights = np.sqrt(lengths) * rng.uniform(0.85, 1.15, size=len(lengths))
    free = T - fixed
    n = np.maximum(np.floor(free * weights / weights.sum()).astype(int), 6)
    while n.sum() < free:
        n[np.argmax(weights * free / weights.sum() - n)] += 1
    while n.sum() > free:
        n[np.argmax(n)] -= 1
    return n


def jitter(rng, shape, sigma: float, corr: float) -> np.ndarray:
    """Gaussian noise with per-coordinate std ``sigma``, smoothed over time.

    White noise is convolved with a Gaussian of ``corr`` frames and rescaled
    so the marginal std stays ``sigma``; ``corr = 0`` gives i.i.d. jitter.
    """
    if corr == 0:
        return rng.normal(scale=sigma, size=shape)
    r = int(math.ceil(4 * corr))
    kernel = np.exp(-0.5 * (np.arange(-r, r + 1) / corr) ** 2)
    kernel /= np.sqrt((kernel**2).sum())
    white = rng.normal(size=(shape[0] + 2 * r, *shape[1:]))
    smooth = np.apply_along_axis(lambda x: np.convolve(x, kernel, mode="valid"), 0, white)
    return sigma * smooth


def _arm(wrist: np.ndarray, side: str) -> dict[str, np.ndarray]:
    sign = 1.0 if side == "right" else -1.0
    shoulder = np.broadcast_to(SHOULDER[side], wrist.shape)
    elbow = shoulder + 0.55 * (wrist - shoulder) + np.array([0.06 * sign, -0.12, 0.05])
    forearm = wrist - elbow
    forearm = forearm / np.linalg.norm(forearm, axis=1, keepdims=True)
    tip = wrist + 0.09 * forearm
    thumb = wrist + 0.05 * forearm + np.array([-0.03 * sign, 0.01, -0.01])
    return {"upper": shoulder, "elbow": elbow, "wrist": wrist, "tip": tip, "thumb": thumb}


def _assemble(right: np.ndarray, left: np.ndarray) -> np.ndarray:
    T = len(right)
    world = np.empty((T, 10, 3))
    for side, wrist in (("left", left), ("right", right)):
        parts = _arm(wrist, side)
        base = 0 if side == "left" else 5
        for k, part in enumerate(("upper", "elbow", "wrist", "tip", "thumb")):
            world[:, base + k] = parts[part]
    return world


def generate_sequence(class_id: int, signer_id: int, rep: int, spec: SynthSpec) -> SynthSample:
    """One labelled sequence and the frame indices of its planted holds."""
    if not 0 <= class_id < spec.num_classes:
        raise ParameterError(f"class {class_id} outside [0, {spec.num_classes})")
    signer = _rng(spec, 1, signer_id)
    amp = signer.uniform(0.85, 1.15)
    offset = np.array([signer.uniform(-0.05, 0.05), signer.uniform(-0.05, 0.05), 0.0])
    rng = _rng(spec, 2, class_id, signer_id, rep)
    scale = spec.amplitude * amp * rng.uniform(0.97, 1.03)
    origin = SIGN_ORIGIN + offset
    H = spec.hold_count

    inner = _strokes(class_id, spec, scale, origin, rng)
    rise = np.linspace(REST["right"] + offset, inner[0][0], 200)
    lower = np.linspace(inner[-1][-1], REST["right"] + offset, 200)
    strokes = [rise, *inner, lower]
    lengths = np.array([_arc_length(p)[-1] for p in strokes])

    T = int(rng.integers(spec.t_range[0], spec.t_range[1] + 1))
    n = _frame_budget(lengths, T, 1 + H * (spec.hold_frames - 1), rng)
    mean_speed = lengths / n
    trough_in = TROUGH_LEVEL * 2 * min(mean_speed[0], mean_speed[1])
    trough_out = TROUGH_LEVEL * 2 * min(mean_speed[-2], mean_speed[-1])
    boundary = [0.0, trough_in, *([0.0] * H), trough_out, 0.0]

    positions = [strokes[0][:1]]
    holds = []
    t = 0
    for i, (points, frames) in enumerate(zip(strokes, n)):
        positions.append(_walk(points, lengths[i], int(frames), boundary[i], boundary[i + 1]))
        t += int(frames)
        if 1 <= i <= H:
            # the stroke's last frame already has zero speed
            positions.append(np.repeat(points[-1:], spec.hold_frames - 1, axis=0))
            holds.append(t + (spec.hold_frames - 1) // 2)
            t += spec.hold_frames - 1
    right = np.concatenate(positions)
    T = len(right)

    frames_t = np.arange(T)
    if spec.left_motion:
        phase = rng.uniform(0, 2 * np.pi)
        angle = phase + 2 * np.pi * frames_t / LEFT_PERIOD
        radius = 0.04 * amp
        left = LEFT_CENTER + offset + radius * np.stack([np.cos(angle), np.sin(angle), 0 * angle], axis=1)
    else:
        left = np.repeat((REST["left"] + offset)[None], T, axis=0)

    world = _assemble(right, left)
    if spec.noise > 0:
        world = world + jitter(rng, world.shape, spec.noise, spec.noise_corr)
    seq = SkeletonSequence(
        frame_index=frames_t, world=quantize(world), sign_label=class_id, signer_id=signer_id,
        meta={"rep": rep, "primitive": class_primitive(class_id, spec)},
    )
    return SynthSample(seq, tuple(holds), class_primitive(class_id, spec))


# --------------------------------------------------------------------------
# masks and video frames

def blob_shape(class_id: int) -> str:
    return BLOBS[class_id % len(BLOBS)]


def blob_dims(shape: str) -> tuple[float, float]:
    return {"disc": (6.0, 6.0), "ellipse": (9.0, 5.0), "bar": (8.0, 3.0)}[shape]


def blob_area(shape: str) -> float:
    """Analytic area in mask pixels (half-axes for disc/ellipse, half-sides for bar)."""
    a, b = blob_dims(shape)
    return 4 * a * b if shape == "bar" else math.pi * a * b


def render_blob(center, shape: str, size) -> np.ndarray:
    """Binary blob sampled at pixel centres."""
    r, c = np.mgrid[0:size[0], 0:size[1]]
    dr, dc = r + 0.5 - center[0], c + 0.5 - center[1]
    a, b = blob_dims(shape)
    if shape == "bar":
        inside = (np.abs(dc) <= a) & (np.abs(dr) <= b)
    else:
        inside = (dc / a) ** 2 + (dr / b) ** 2 <= 1.0
    return inside.astype(np.uint8)


def generate_masks(seq: SkeletonSequence, spec: SynthSpec | None = None) -> list[HandMaskFrame]:
    """Per-frame hand masks at ``MASK_SCALE`` times the grid resolution."""
    size = (GRID_SHAPE[0] * MASK_SCALE, GRID_SHAPE[1] * MASK_SCALE)
    grid = project_to_grid(seq)
    shape = blob_shape(seq.sign_label)
    masks = []
    for t in range(seq.T):
        def blob(joint):
            return render_blob(grid[t, joint] * MASK_SCALE + MASK_SCALE / 2 - 0.5, shape, size)
        right = blob(JointId.R_WRIST)
        # label images hold one class per pixel; the right hand wins overlaps
        left = blob(JointId.L_WRIST) & (1 - right)
        masks.append(HandMaskFrame(int(seq.frame_index[t]), left, right))
    return masks


def entropy_profile(T: int, holds) -> np.ndarray:
    """Texture density per frame whose only interior extrema are the holds.

    Holds alternate between peaks and troughs joined by linear ramps; the
    ramps into the first and out of the last hold run monotonically to the
    sequence ends, so no other frame is a local extremum.
    """
    high, low, base = 0.8, 0.4, 0.1
    levels = [high if i % 2 == 0 else low for i in range(len(holds))]
    end = base if levels and levels[-1] == high else high
    knots_t = [0, *holds, T - 1]
    knots_v = [base, *levels, end]
    return np.interp(np.arange(T), knots_t, knots_v)


def generate_frames(sample: SynthSample, spec: SynthSpec, shape=FRAME_SHAPE) -> np.ndarray:
    """Grayscale frames whose entropy has its interior extrema at the holds.

    Each frame replaces a growing prefix of a fixed random pixel order with
    random texture over a flat grey image, so entropy rises with the
    density from :func:`entropy_profile`.
    """
    T = sample.sequence.T
    rng = _rng(spec, 3, sample.sequence.sign_label, sample.sequence.signer_id, sample.sequence.meta["rep"])
    order = rng.permutation(shape[0] * shape[1])
    texture = rng.integers(0, 256, size=shape[0] * shape[1])
    density = entropy_profile(T, sample.holds)
    frames = np.full((T, shape[0] * shape[1]), 128, dtype=np.uint8)
    for k in range(T):
        chosen = order[: int(round(density[k] * order.size))]
        frames[k, chosen] = texture[chosen]
    return frames.reshape(T, *shape)


# --------------------------------------------------------------------------
# corpus on disk

def manifest_line(sample: SynthSample) -> str:
    seq = sample.sequence
    holds = ",".join(str(h) for h in sample.holds)
    return (f"{sample.video_id} {seq.sign_label} {seq.signer_id} {seq.meta['rep']} {seq.T} "
            f"holds={holds} path={sample.primitive}")


@dataclass
class ManifestEntry:
    video_id: str
    class_id: int
    signer: int
    rep: int
    T: int
    holds: tuple[int, ...]
    path: str


def read_manifest(path) -> list[ManifestEntry]:
    entries = []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        vid, c, s, r, T, holds, prim = line.split()
        hold_values = holds.removeprefix("holds=")
        entries.append(ManifestEntry(vid, int(c), int(s), int(r), int(T),
                                     tuple(int(h) for h in hold_values.split(",") if h), prim.removeprefix("path=")))
    return entries


def taf_for(sample_or_seq, C: int = 3) -> np.ndarray:
    seq = sample_or_seq.sequence if isinstance(sample_or_seq, SynthSample) else sample_or_seq
    return accumulate_hue(render_stack(project_to_grid(seq)), Linear(C)).data


def class_margin(spec: SynthSpec, C: int = 3) -> tuple[float, np.ndarray]:
    """Smallest pairwise L1 distance between noise-free class-mean hue TAFs.

    Means run over the first signer's repetitions to keep generation cheap.
    Returns the margin and the full ``(classes, classes)`` distance matrix.
    """
    clean = SynthSpec(**{**asdict(spec), "noise": 0.0})
    means = []
    for c in range(spec.num_classes):
        tafs = [taf_for(generate_sequence(c, 1, r, clean), C) for r in range(min(spec.reps, 2))]
        means.append(np.mean(tafs, axis=0))
    d = np.array([[np.abs(a - b).sum() for b in means] for a in means])
    off = d[~np.eye(len(d), dtype=bool)]
    return (float(off.min()) if off.size else 0.0), d


def _write_one(args) -> str:
    key, spec, out_dir, frames = args
    sample = generate_sequence(*key, spec)
    vid = sample.video_id
    write_sequence(sample.sequence, out_dir / "skeletons" / f"{vid}.txt")
    write_masks(out_dir / "masks" / vid, generate_masks(sample.sequence, spec))
    if frames:
        for t, image in enumerate(generate_frames(sample, spec)):
            write_gray(out_dir / "frames" / vid / f"{t:06d}.png", image)
    return manifest_line(sample)


def generate_dataset(spec: SynthSpec, out_dir, frames: bool = True, jobs: int = 1) -> Path:
    """Write skeletons, masks, optional video frames, manifest and metadata.

    Output is byte-identical for a fixed spec regardless of ``jobs``.
    """
    out_dir = Path(out_dir)
    (out_dir / "skeletons").mkdir(parents=True, exist_ok=True)
    work = [(key, spec, out_dir, frames) for key in spec.keys()]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            lines = list(pool.map(_write_one, work, chunksize=4))
    else:
        lines = [_write_one(w) for w in work]
    (out_dir / "manifest.txt").write_text("".join(line + "\n" for line in lines))
    margin, _ = class_margin(spec)
    meta = {**asdict(spec), "held_out_signer": spec.held_out_signer,
            "class_margin_l1": f"{margin:.6f}", "trough_level": TROUGH_LEVEL,
            "mask_scale": MASK_SCALE, "left_period": LEFT_PERIOD,
            "primitives": ",".join(class_primitive(c, spec) for c in range(spec.num_classes)),
            "blobs": ",".join(blob_shape(c) for c in range(spec.num_classes))}
    meta["t_range"] = f"{spec.t_range[0]},{spec.t_range[1]}"
    (out_dir / "manifest_meta.txt").write_text("".join(f"{k} = {v}\n" for k, v in meta.items()))
    return out_dir


def read_meta(path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def corpus_digest(out_dir) -> str:
    """SHA-256 over every file path and its bytes, in sorted order."""
    out_dir = Path(out_dir)
    h = hashlib.sha256()
    for path in sorted(p for p in out_dir.rglob("*") if p.is_file()):
        h.update(str(path.relative_to(out_dir)).encode())
        h.update(path.read_bytes())
    return h.hexdigest()


def generate_corpus(spec: SynthSpec) -> list[SynthSample]:
    """All samples of a spec in manifest order, in memory."""
    return [generate_sequence(c, s, r, spec) for c, s, r in spec.keys()]
