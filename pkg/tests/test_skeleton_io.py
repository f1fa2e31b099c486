import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from taf.errors import DegenerateInputError, ParseError, SchemaError
from taf.skeleton_io import (
    GRID_SHAPE,
    MARGIN,
    NUM_JOINTS,
    JointId,
    SkeletonSequence,
    fill_missing,
    format_sequence,
    mirror_sequence,
    parse_sequence,
    parse_text,
    project_to_grid,
    quantize,
    write_sequence,
)
from taf.synth import SynthSpec, generate_sequence


def _sequence(T=5, seed=0, image=False):
    rng = np.random.default_rng(seed)
    world = quantize(rng.normal(size=(T, NUM_JOINTS, 3)))
    img = quantize(rng.uniform(0, 500, size=(T, NUM_JOINTS, 2))) if image else None
    return SkeletonSequence(np.arange(T), world, img, sign_label=3, signer_id=2, fps=30.0)


def test_two_frame_file(tmp_path):
    seq = _sequence(T=2)
    write_sequence(seq, tmp_path / "a.txt")
    back = parse_sequence(tmp_path / "a.txt")
    assert back.T == 2
    assert back.world.shape == (2, 10, 3)


def test_non_monotonic_frames_rejected():
    text = format_sequence(_sequence(T=3)).split("\n")
    text[2], text[3] = text[3], text[2]
    with pytest.raises(SchemaError):
        parse_text("\n".join(text))


def test_bad_token_reports_line():
    lines = format_sequence(_sequence(T=3)).split("\n")
    lines[2] = lines[2].replace(lines[2].split(" ")[4], "abc", 1)
    with pytest.raises(ParseError) as err:
        parse_text("\n".join(lines))
    assert err.value.line == 3


def test_missing_column_is_schema_error():
    lines = format_sequence(_sequence(T=3)).split("\n")
    lines[1] = " ".join(lines[1].split(" ")[:-1])
    with pytest.raises(SchemaError):
        parse_text("\n".join(lines))


def test_header_count_mismatch():
    text = format_sequence(_sequence(T=3)).replace("T=3", "T=4")
    with pytest.raises(SchemaError):
        parse_text(text)


def test_bad_header():
    with pytest.raises(ParseError):
        parse_text("SKEL v1 T=2\n")


def test_synth_round_trip(tmp_path):
    spec = SynthSpec(num_classes=3, signers=2, reps=1, noise=0.003)
    for c, s, r in spec.keys():
        seq = generate_sequence(c, s, r, spec).sequence
        path = tmp_path / f"{c}_{s}.txt"
        write_sequence(seq, path)
        assert parse_sequence(path) == seq


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (4, NUM_JOINTS, 3), elements=st.floats(-5, 5, allow_nan=False)),
       st.booleans())
def test_parse_serialize_idempotent(world, with_image):
    image = np.abs(world[..., :2]) * 100 if with_image else None
    seq = SkeletonSequence(np.array([0, 2, 3, 7]), quantize(world), None if image is None else quantize(image))
    text = format_sequence(seq)
    once = parse_text(text)
    assert once == seq
    assert format_sequence(once) == text


def test_fill_missing_interpolates():
    seq = _sequence(T=5)
    world = seq.world.copy()
    expected = (world[1, 7] + world[3, 7]) / 2
    world[2, 7] = np.nan
    world[0, 4] = np.nan  # leading gap repeats the first valid frame
    filled = fill_missing(SkeletonSequence(seq.frame_index, world))
    np.testing.assert_allclose(filled.world[2, 7], expected)
    np.testing.assert_array_equal(filled.world[0, 4], world[1, 4])


def test_joint_missing_everywhere_rejected():
    seq = _sequence(T=4)
    world = seq.world.copy()
    world[:, 3] = np.nan
    with pytest.raises(SchemaError):
        fill_missing(SkeletonSequence(seq.frame_index, world))


def test_projection_bounds_and_corners():
    seq = _sequence(T=6, seed=3)
    grid = project_to_grid(seq)
    H, W = GRID_SHAPE
    assert grid[..., 0].min() >= 0 and grid[..., 0].max() < H
    assert grid[..., 1].min() >= 0 and grid[..., 1].max() < W
    # the bounding box sits inside the 10% margin on its limiting axis
    rows, cols = grid[..., 0], grid[..., 1]
    row_frac = (rows.max() - rows.min()) / (H - 1)
    col_frac = (cols.max() - cols.min()) / (W - 1)
    assert max(row_frac, col_frac) == pytest.approx(1 / (1 + 2 * MARGIN))


def test_projection_center_maps_to_grid_center():
    seq = _sequence(T=6, seed=4)
    planar = np.stack([-seq.world[..., 1], seq.world[..., 0]], axis=-1)
    lo, hi = planar.reshape(-1, 2).min(0), planar.reshape(-1, 2).max(0)
    world = seq.world.copy()
    world[0, 0, 0] = (lo[1] + hi[1]) / 2
    world[0, 0, 1] = -(lo[0] + hi[0]) / 2
    grid = project_to_grid(SkeletonSequence(seq.frame_index, world))
    np.testing.assert_allclose(grid[0, 0], [(GRID_SHAPE[0] - 1) / 2, (GRID_SHAPE[1] - 1) / 2], atol=1e-9)


def test_circle_radius_scales_affinely():
    T, r = 40, 0.2
    theta = np.linspace(0, 2 * np.pi, T, endpoint=False)
    world = np.zeros((T, NUM_JOINTS, 3))
    world[:, :, 0] = 0.5  # every other joint parked at one point
    world[:, :, 1] = 0.1
    world[:, 7, 0] = r * np.cos(theta)
    world[:, 7, 1] = r * np.sin(theta)
    grid = project_to_grid(SkeletonSequence(np.arange(T), world))
    # independent scale: planar extent along each axis with the margin
    planar_rows = -world[..., 1].ravel()
    planar_cols = world[..., 0].ravel()
    ext = np.array([np.ptp(planar_rows), np.ptp(planar_cols)]) * (1 + 2 * MARGIN)
    scale = min((GRID_SHAPE[0] - 1) / ext[0], (GRID_SHAPE[1] - 1) / ext[1])
    center = grid[:, 7].mean(axis=0)
    radii = np.linalg.norm(grid[:, 7] - center, axis=1)
    np.testing.assert_allclose(radii, r * scale, rtol=1e-9)


def test_degenerate_box():
    world = np.ones((3, NUM_JOINTS, 3))
    with pytest.raises(DegenerateInputError):
        project_to_grid(SkeletonSequence(np.arange(3), world))


def test_projection_order_preserving():
    seq = _sequence(T=5, seed=7)
    grid = project_to_grid(seq)
    x = seq.world[..., 0].ravel()
    col = grid[..., 1].ravel()
    order = np.argsort(x, kind="stable")
    assert np.all(np.diff(col[order]) >= -1e-12)


def test_mirror_equivariance():
    seq = _sequence(T=5, seed=8)
    grid = project_to_grid(seq)
    mirrored = project_to_grid(mirror_sequence(seq, swap_sides=False))
    np.testing.assert_allclose(mirrored[..., 1], GRID_SHAPE[1] - 1 - grid[..., 1], atol=1e-9)
    np.testing.assert_allclose(mirrored[..., 0], grid[..., 0], atol=1e-9)


def test_mirror_swaps_joint_labels():
    seq = _sequence(T=3)
    m = mirror_sequence(seq)
    np.testing.assert_array_equal(m.world[:, JointId.L_WRIST, 1], seq.world[:, JointId.R_WRIST, 1])
    assert JointId.L_THUMB.mirror is JointId.R_THUMB
    assert JointId.BACKGROUND.mirror is JointId.BACKGROUND


def test_image_coordinates_preferred():
    seq = _sequence(T=4, image=True)
    grid = project_to_grid(seq)
    u = seq.image[..., 0].ravel()
    assert np.corrcoef(u, grid[..., 1].ravel())[0, 1] == pytest.approx(1.0)
