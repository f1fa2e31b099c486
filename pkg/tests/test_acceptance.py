"""Acceptance criteria, one PASS/FAIL line each.

Run standalone with ``python3 tests/test_acceptance.py`` or through pytest.
The end-to-end benchmark trains the full-size CNN four times and dominates
the runtime (tens of minutes on one core).
"""
import sys
import time

import numpy as np
import pytest

from taf.classifier.gradcheck import gradient_check
from taf.classifier.training import evaluate, split_by_signer, train
from taf.cli import main
from taf.colorize import Linear, Subunit, accumulate_baseline, accumulate_hue, read_taf
from taf.heatmap import render_stack
from taf.keyframes import FixedLength, density_peak_cluster, detect_hs_dc, detect_hs_heuristic
from taf.pipeline import PipelineConfig, corpus_entries, extract_corpus, extract_samples
from taf.skeleton_io import parse_sequence, project_to_grid
from taf.synth import SynthSpec, generate_corpus, generate_dataset, generate_sequence

from oracles import brute_baseline, brute_density_peaks, brute_hue


@pytest.fixture
def report(capsys):
    def emit(name, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} {name}: {detail}")
        return ok
    return emit


# ------------------------------------------------------------------ gradient

def test_gradient_gate(report):
    result = gradient_check()
    ok = result.passed(1e-4) and result.seconds < 60
    detail = (f"max rel err per tensor {result.max_rel_error:.2e}, per element {result.max_elementwise:.2e}, "
              f"{len(result.per_tensor)} tensors, {result.seconds:.1f}s, {result.redraws} redraws")
    assert report("gradient gate", ok, detail), detail


# ------------------------------------------------------------------ channel arithmetic

def table_channels(scheme, C=3, K=0, static="none", sequential=False):
    """Channel counts written out case by case from the layout table."""
    if scheme == "baseline":
        return 11 * (2 * C + 1)
    base = 11 * 7 * (K + 1) if sequential else 11 * 7
    return base + {"none": 0, "keyframe": K, "keyshot": 5 * K}[static]


CHANNEL_GRID = [
    dict(scheme="baseline", channels=2),
    dict(scheme="baseline", channels=3),
    dict(scheme="baseline", channels=4),
    dict(scheme="baseline", channels=5),
    dict(scheme="hue", channels=3),
    dict(scheme="hue", kf_method="hs_heu", kf_k=3),
    dict(scheme="hue", kf_method="hs_dc", kf_k=3),
    dict(scheme="hue", kf_method="ent_dc", kf_k=3),
    dict(scheme="hue", kf_method="hs_dc", kf_k=2),
    dict(scheme="hue", kf_method="hs_dc", kf_k=3, static="keyframe"),
    dict(scheme="hue", kf_method="hs_heu", kf_k=2, static="keyframe"),
    dict(scheme="hue", kf_method="hs_dc", kf_k=3, static="keyshot"),
    dict(scheme="hue", kf_method="hs_dc", kf_k=3, sequential=True),
    dict(scheme="hue", kf_method="hs_dc", kf_k=2, sequential=True, static="keyframe"),
    dict(scheme="hue", kf_method="hs_dc", kf_k=3, sequential=True, static="keyshot"),
    dict(scheme="hue", kf_method="hs_dc", kf_k=None, kf_tau=0.005),
]


@pytest.fixture(scope="module")
def small_corpus(tmp_path_factory):
    spec = SynthSpec(num_classes=4, signers=2, reps=1, t_range=(48, 64))
    return generate_dataset(spec, tmp_path_factory.mktemp("acc") / "corpus")


def test_channel_arithmetic(report, small_corpus, tmp_path):
    bad = []
    for i, kw in enumerate(CHANNEL_GRID):
        config = PipelineConfig(**kw)
        assert not extract_corpus(small_corpus, tmp_path / f"c{i}", config)
        want = table_channels(config.scheme, config.channels, config.k, config.static, config.sequential)
        got = {read_taf(p).channels for p in (tmp_path / f"c{i}").glob("*.taf")}
        if got != {want}:
            bad.append((config.label(), sorted(got), want))
    ok = not bad and len(CHANNEL_GRID) >= 12
    detail = f"{len(CHANNEL_GRID)} cells, {len(CHANNEL_GRID) * len(corpus_entries(small_corpus))} tensors" + (
        f", mismatches {bad}" if bad else ", all counts match")
    assert report("channel arithmetic", ok, detail), detail


# ------------------------------------------------------------------ colorization oracles

def test_colorization_oracles(report):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(20):
        stack = rng.uniform(size=(6, 11, 5, 7))
        stack[rng.uniform(size=stack.shape) < 0.3] = 0.0
        C = int(rng.integers(2, 6))
        worst = max(worst, np.abs(accumulate_baseline(stack, C).data - brute_baseline(stack, C)).max())
        worst = max(worst, np.abs(accumulate_hue(stack, Linear(3)).data - brute_hue(stack, [0, 2, 4, 6])).max())
        kf = sorted(rng.choice(np.arange(1, 5), size=int(rng.integers(1, 3)), replace=False).tolist())
        worst = max(worst, np.abs(accumulate_hue(stack, Subunit(kf)).data - brute_hue(stack, [0, *kf, 6])).max())
    ok = worst < 1e-6
    detail = f"20 stacks x (baseline, linear hue, subunit hue), max abs diff {worst:.2e}"
    assert report("colorization oracles", ok, detail), detail


# ------------------------------------------------------------------ density peaks

def test_density_peaks_oracle(report):
    rng = np.random.default_rng(7)
    mismatches = 0
    for _ in range(100):
        n = int(rng.integers(1, 51))
        k = int(rng.integers(1, min(5, n) + 1))
        dim = int(rng.integers(1, 3))
        points = rng.uniform(size=(n, dim))
        if rng.random() < 0.3:
            points = np.round(points * 4) / 4  # duplicates exercise the tie-break
        if density_peak_cluster(points, k) != brute_density_peaks(points, k):
            mismatches += 1
    ok = mismatches == 0
    detail = f"100 point sets (n<=50, K<=5), {mismatches} mismatches"
    assert report("density-peaks oracle", ok, detail), detail


# ------------------------------------------------------------------ keyframe recovery

def test_keyframe_recovery(report):
    spec = SynthSpec(num_classes=10, signers=5, reps=1, noise=0.005)
    hits = {"hs_dc": 0, "hs_heu": 0}
    total = 0
    for c, s, r in spec.keys():
        sample = generate_sequence(c, s, r, spec)
        planted = np.array(sample.holds)
        total += len(planted)
        for name, detect in (("hs_dc", detect_hs_dc), ("hs_heu", detect_hs_heuristic)):
            found = np.array(detect(sample.sequence, FixedLength(len(planted))).indices)
            hits[name] += int(sum(np.abs(found - h).min() <= 2 for h in planted))
    dc, heu = hits["hs_dc"] / total, hits["hs_heu"] / total
    ok = dc >= 0.95 and heu >= 0.90
    detail = f"50 sequences, noise 0.005 m, {total} holds: HS+DC {100 * dc:.1f}%, HS heuristic {100 * heu:.1f}%"
    assert report("keyframe recovery", ok, detail), detail


# ------------------------------------------------------------------ end to end

def _run(spec, config):
    start = time.perf_counter()
    data, _ = extract_samples(generate_corpus(spec), config, spec)
    train_set, val_set = split_by_signer(data, spec.held_out_signer)
    del data
    model_config = config.model_config(spec.num_classes)
    params, rep = train(train_set, model_config, config.epochs, config.lr, val_set=val_set,
                        stop_train_acc=config.stop_train_acc)
    top1, top5 = evaluate(params, model_config, val_set)
    return top1, top5, len(rep.epochs), time.perf_counter() - start


@pytest.fixture(scope="module")
def e2e():
    base = PipelineConfig(scheme="hue", channels=3, epochs=30, stop_train_acc=0.98)
    primitives = SynthSpec(num_classes=10, signers=4, reps=8)
    order = SynthSpec(corpus="order", num_classes=6, signers=4, reps=8)
    kf = dict(kf_method="hs_dc")
    return {
        "none": _run(primitives, base),
        "hs_dc": _run(primitives, base.replace(kf_k=primitives.hold_count, **kf)),
        "order_none": _run(order, base),
        "order_hs_dc": _run(order, base.replace(kf_k=order.hold_count, **kf)),
    }


def test_end_to_end_benchmark(report, e2e):
    top1, top5, epochs, seconds = e2e["none"]
    ok = top1 >= 0.90 and top5 >= 0.99 and epochs <= 30 and seconds < 900
    detail = (f"10x4x8 hue C=3, held-out signer: accuracy {100 * top1:.1f}%, top-5 {100 * top5:.1f}%, "
              f"{epochs} epochs, {seconds:.0f}s")
    assert report("end-to-end benchmark", ok, detail), detail


def test_directionality(report, e2e):
    none, kf = e2e["none"][0], e2e["hs_dc"][0]
    order_none, order_kf = e2e["order_none"][0], e2e["order_hs_dc"][0]
    ok = kf >= none - 0.02 and order_kf >= order_none
    detail = (f"primitives none {100 * none:.1f}% vs HS+DC K=3 {100 * kf:.1f}%; "
              f"order corpus none {100 * order_none:.1f}% vs HS+DC K=2 {100 * order_kf:.1f}%")
    assert report("keyframe directionality", ok, detail), detail


# ------------------------------------------------------------------ determinism

ABLATION_GRID = """
[base]
blocks = 1
convs_per_block = 2
initial_filters = 8
epochs = 3
[axes]
scheme = baseline, hue
kf_method = none, hs_dc
[cell entropy]
kf_method = ent_dc
[cell keyshot]
kf_method = hs_dc
static = keyshot
[cell sequential]
kf_method = hs_dc
sequential = true
"""


def test_ablate_determinism(report, small_corpus, tmp_path):
    grid = tmp_path / "grid.ini"
    grid.write_text(ABLATION_GRID)
    tables, codes = [], []
    for run in ("a", "b"):
        out = tmp_path / f"{run}.tsv"
        codes.append(main(["ablate", str(grid), str(small_corpus), str(out), "--work", str(tmp_path / run)]))
        tables.append(out.read_bytes())
    rows = [l for l in tables[0].decode().splitlines()[1:] if l and not l.startswith("#")]
    checksums = [row.split("\t")[-1] for row in rows]
    ok = codes == [0, 0] and tables[0] == tables[1] and len(rows) == 6
    detail = f"{len(rows)} cells, exit codes {codes}, tables identical {tables[0] == tables[1]}, checksums {checksums}"
    assert report("ablate determinism", ok, detail), detail


# ------------------------------------------------------------------ normalization

def _n_channel_groups(taf):
    """For each (segment, joint): index of its I channel and of its N channels."""
    groups = {}
    for i, tag in enumerate(taf.tags):
        if tag.startswith("static:"):
            continue
        owner, _, group = tag.rpartition(":")
        entry = groups.setdefault(owner, {"I": None, "N": []})
        if group == "I":
            entry["I"] = i
        elif group.startswith("N"):
            entry["N"].append(i)
    return groups


NORM_CONFIGS = [
    dict(scheme="baseline", channels=3),
    dict(scheme="hue"),
    dict(kf_method="hs_dc", kf_k=3),
    dict(kf_method="hs_dc", kf_k=3, sequential=True, static="keyframe"),
]


def test_normalization_invariants(report, small_corpus, tmp_path):
    tensors, range_bad, peak_bad = 0, 0, 0
    for i, kw in enumerate(NORM_CONFIGS):
        assert not extract_corpus(small_corpus, tmp_path / f"n{i}", PipelineConfig(**kw))
        for path in sorted((tmp_path / f"n{i}").glob("*.taf")):
            taf = read_taf(path)
            tensors += 1
            for g in _n_channel_groups(taf).values():
                N = taf.data[g["N"]].astype(np.float64)
                range_bad += int(N.min() < 0 or N.max() > 1 + 1e-6)
                lit = taf.data[g["I"]] > 0
                peak_bad += int(np.any(np.abs(N.max(axis=0)[lit] - 1) > 1e-6))
    # alpha scaling of the heatmap stack leaves N channels unchanged
    scale_err = 0.0
    for e in corpus_entries(small_corpus)[:3]:
        stack = render_stack(project_to_grid(parse_sequence(e.skeleton)))
        for acc in (lambda s: accumulate_baseline(s, 3), lambda s: accumulate_hue(s, Linear(3))):
            ref = acc(stack)
            idx = [i for g in _n_channel_groups(ref).values() for i in g["N"]]
            for alpha in (0.5, 2.0):
                scale_err = max(scale_err, np.abs(acc(alpha * stack).data[idx] - ref.data[idx]).max())
    ok = tensors > 0 and range_bad == 0 and peak_bad == 0 and scale_err < 1e-6
    detail = (f"{tensors} extracted tensors: {range_bad} groups out of [0,1], {peak_bad} groups missing a unit peak; "
              f"alpha in (0.5, 2) max N change {scale_err:.2e}")
    assert report("normalization invariants", ok, detail), detail


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
