import colorsys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from taf.colorize import (
    HUE_CHANNELS_PER_JOINT,
    Linear,
    Subunit,
    TafTensor,
    accumulate_baseline,
    accumulate_hue,
    accumulate_sequential,
    expected_channels,
    flip_horizontal,
    frame_hsv,
    hsv_to_rgb,
    hue_for,
    potion_weights,
    read_taf,
    swap_sides,
    write_taf,
)
from taf.errors import DegenerateInputError, FormatError, ParameterError, SegmentationError
from taf.heatmap import sequence_heatmaps
from taf.skeleton_io import mirror_sequence
from taf.synth import SynthSpec, generate_sequence

from oracles import brute_baseline, brute_hue

H, W = 5, 7


def _stack(T, seed, H=H, W=W):
    rng = np.random.default_rng(seed)
    stack = rng.uniform(size=(T, 11, H, W))
    stack[rng.uniform(size=stack.shape) < 0.3] = 0.0
    return stack


# ------------------------------------------------------------------ baseline

def test_potion_endpoints_and_midpoint():
    np.testing.assert_array_equal(potion_weights(0, 9, 4), [1, 0, 0, 0])
    np.testing.assert_array_equal(potion_weights(8, 9, 4), [0, 0, 0, 1])
    np.testing.assert_allclose(potion_weights(1, 5, 3), [0.5, 0.5, 0])


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 60), st.integers(2, 8), st.data())
def test_potion_weights_sum_to_one(T, C, data):
    t = data.draw(st.integers(0, T - 1))
    w = potion_weights(t, T, C)
    assert abs(w.sum() - 1) < 1e-12 and (w >= 0).all()


def test_potion_degenerate():
    with pytest.raises(DegenerateInputError):
        potion_weights(0, 1, 3)


@pytest.mark.parametrize("T,C,seed", [(4, 2, 0), (6, 3, 1), (7, 4, 2)])
def test_baseline_matches_brute_force(T, C, seed):
    stack = _stack(T, seed)
    np.testing.assert_allclose(accumulate_baseline(stack, C).data, brute_baseline(stack, C), atol=1e-12)


def test_baseline_static_joint_both_n_one():
    stack = np.zeros((6, 11, H, W))
    stack[:, 2, 1, 1] = 0.7
    out = accumulate_baseline(stack, 2).data.reshape(11, 5, H, W)
    np.testing.assert_allclose(out[2, 3:, 1, 1], [1, 1])


def test_baseline_first_frame_only():
    stack = np.zeros((5, 11, H, W))
    stack[0, 0, 2, 3] = 0.4
    out = accumulate_baseline(stack, 3).data.reshape(11, 7, H, W)
    np.testing.assert_allclose(out[0, :, 2, 3], [0.4, 0, 0, 0.4, 1, 0, 0])


def test_baseline_time_reversal():
    stack = _stack(7, 3)
    C = 3
    fwd = accumulate_baseline(stack, C).data.reshape(11, 2 * C + 1, H, W)
    rev = accumulate_baseline(stack[::-1], C).data.reshape(11, 2 * C + 1, H, W)
    np.testing.assert_allclose(rev[:, :C], fwd[:, C - 1::-1], atol=1e-12)
    np.testing.assert_allclose(rev[:, C + 1:], fwd[:, :C:-1], atol=1e-12)


# ------------------------------------------------------------------ hue

def test_hue_formula():
    assert hue_for(1, 5) == 30
    assert hue_for(5, 5) == 150
    assert {hue_for(1, 2), hue_for(2, 2)} == {60, 120}
    with pytest.raises(ParameterError):
        hue_for(0, 3)
    with pytest.raises(ParameterError):
        hue_for(4, 3)


@pytest.mark.parametrize("S", range(1, 12))
def test_hue_injective(S):
    hues = [hue_for(n, S) for n in range(1, S + 1)]
    assert len(set(hues)) == S and 0 < min(hues) and max(hues) < 180


def test_eight_frames_eight_linear_hues():
    hue, _ = frame_hsv(8, Linear(8).segments(8))
    assert len(set(hue)) == 8
    np.testing.assert_allclose(np.diff(hue), 20.0)


def test_hsv_matches_colorsys():
    rng = np.random.default_rng(0)
    h, s, v = rng.uniform(0, 180, 200), rng.uniform(size=200), rng.uniform(size=200)
    ours = hsv_to_rgb(h, s, v)
    ref = np.array([colorsys.hsv_to_rgb(a / 180, b, c) for a, b, c in zip(h, s, v)])
    np.testing.assert_allclose(ours, ref, atol=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_hue_linear_matches_brute_force(seed):
    stack = _stack(6, seed)
    bounds = [0, 3, 6]
    ours = accumulate_hue(stack, Linear(2)).data
    np.testing.assert_allclose(ours, brute_hue(stack, bounds), atol=1e-12)


def test_hue_subunit_matches_brute_force():
    stack = _stack(9, 5)
    ours = accumulate_hue(stack, Subunit((2, 3, 7))).data
    np.testing.assert_allclose(ours, brute_hue(stack, [0, 2, 3, 7, 9]), atol=1e-12)


def test_single_segment_constant_hue():
    stack = np.zeros((5, 11, H, W))
    stack[:, 4, 2, 2] = 0.5
    out = accumulate_hue(stack, Subunit(())).data.reshape(11, 7, H, W)
    n = out[4, 4:, 2, 2]
    assert n.max() == pytest.approx(1.0)
    # a single hue: colour direction equals that of any one frame
    rgb = hsv_to_rgb(90.0, 1.0, 1.0)
    assert np.argmax(n) == np.argmax(rgb)


def test_empty_segment_rejected():
    with pytest.raises(SegmentationError):
        accumulate_hue(_stack(6, 0), Subunit((3, 3)))


def test_layout_tags():
    taf = accumulate_hue(_stack(4, 0), Linear(2))
    assert taf.channels == 77
    assert taf.tags[:7] == [f"L_UPPER_ARM:{g}" for g in ["U_r", "U_g", "U_b", "I", "N_r", "N_g", "N_b"]]
    assert taf.tags[-1] == "BACKGROUND:N_b"


# ------------------------------------------------------------------ invariants

@pytest.mark.parametrize("acc", [lambda s: accumulate_baseline(s, 3), lambda s: accumulate_hue(s, Linear(3))])
def test_normalization_invariants(acc):
    stack = _stack(8, 11)
    taf = acc(stack)
    n = taf.data[taf.normalized_indices()]
    i = taf.data[taf.intensity_indices()]
    assert n.min() >= 0 and n.max() <= 1 + 1e-12
    per_joint = n.reshape(11, -1, H, W).max(axis=1)
    active = i > 0
    np.testing.assert_allclose(per_joint[active], 1.0, atol=1e-6)
    for alpha in (0.5, 2.0):
        scaled = acc(alpha * stack)
        np.testing.assert_allclose(scaled.data[taf.normalized_indices()], n, atol=1e-12)
        un = np.setdiff1d(np.arange(taf.channels), taf.normalized_indices())
        np.testing.assert_allclose(scaled.data[un], alpha * taf.data[un], rtol=1e-12)


def test_channel_norm_option():
    stack = _stack(6, 2)
    taf = accumulate_baseline(stack, 2, norm="channel")
    n = taf.data[taf.normalized_indices()]
    np.testing.assert_allclose(n.reshape(22, -1).max(axis=1), 1.0)


# ------------------------------------------------------------------ sequential

def test_sequential_doubles_and_truncates():
    stack = _stack(8, 4)
    seq = accumulate_sequential(stack, (4,))
    assert seq.channels == 2 * 77
    single = accumulate_hue(stack[:4], Subunit(())).data
    np.testing.assert_array_equal(seq.data[:77], single)


def test_sequential_three_segments():
    stack = _stack(10, 6)
    seq = accumulate_sequential(stack, (3, 7))
    for n, (a, b) in enumerate([(0, 3), (3, 7), (7, 10)]):
        np.testing.assert_allclose(seq.data[77 * n:77 * (n + 1)], brute_hue(stack[a:b], [0, b - a]), atol=1e-12)
    assert seq.tags[77].startswith("seg2/")


def test_sequential_needs_keyframe():
    with pytest.raises(SegmentationError):
        accumulate_sequential(_stack(6, 0), ())


# ------------------------------------------------------------------ flip

def test_flip_involution_and_peak():
    taf = accumulate_hue(_stack(5, 1), Linear(2))
    np.testing.assert_array_equal(flip_horizontal(flip_horizontal(taf)).data, taf.data)
    one = np.zeros((1, H, W))
    one[0, 2, 1] = 1
    flipped = flip_horizontal(TafTensor(one, ["x"]))
    assert flipped.data[0, 2, W - 2] == 1


def test_flip_equals_mirrored_skeleton_with_swapped_channels():
    seq = generate_sequence(2, 1, 0, SynthSpec(num_classes=3, signers=2, reps=1)).sequence
    taf = accumulate_hue(sequence_heatmaps(seq), Linear(3))
    mirrored = accumulate_hue(sequence_heatmaps(mirror_sequence(seq)), Linear(3))
    np.testing.assert_allclose(swap_sides(flip_horizontal(taf)).data, mirrored.data, atol=1e-9)
    # without the swap the joint channels disagree
    assert not np.allclose(flip_horizontal(taf).data, mirrored.data, atol=1e-3)


# ------------------------------------------------------------------ arithmetic & format

@pytest.mark.parametrize("C", [2, 3, 4, 5])
def test_channel_formula(C):
    assert expected_channels("baseline", C) == 11 * (2 * C + 1)
    assert accumulate_baseline(_stack(6, 0), C).channels == 11 * (2 * C + 1)


def test_channel_formula_static():
    assert expected_channels("hue") == 77 == 11 * HUE_CHANNELS_PER_JOINT
    assert expected_channels("hue", k=6, static="keyframe") == 83
    assert expected_channels("hue", k=4, static="keyshot") == 97
    assert expected_channels("hue", k=2, sequential=True) == 231
    with pytest.raises(ParameterError):
        expected_channels("baseline", 3, sequential=True)


def test_taf_round_trip(tmp_path):
    taf = accumulate_hue(_stack(5, 0), Linear(2))
    write_taf(taf, tmp_path / "a.taf")
    back = read_taf(tmp_path / "a.taf")
    assert back.tags == taf.tags
    np.testing.assert_array_equal(back.data, taf.data.astype(np.float32))
    raw = (tmp_path / "a.taf").read_bytes()
    assert raw[:4] == b"TAF1"
    (tmp_path / "b.taf").write_bytes(raw[:-4])
    with pytest.raises(FormatError):
        read_taf(tmp_path / "b.taf")
    (tmp_path / "c.taf").write_bytes(b"NOPE" + raw[4:])
    with pytest.raises(FormatError):
        read_taf(tmp_path / "c.taf")
