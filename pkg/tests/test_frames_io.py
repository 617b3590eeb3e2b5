import numpy as np
import pytest

from coupledpf.core_types import BoxVolume, SphereVolume
from coupledpf.frames_io import (HEADER, FrameFormatError, export_frames, find_sequences, load_frames, read_grasps,
                                 read_grid, read_pgm, read_truth, write_grasps, write_grid, write_pgm, write_truth)
from coupledpf.measurements import GraspCandidateSet
from coupledpf.scene_sim import NoiseModel, make_benchmark_suite, render_sequence


def test_grid_round_trip(tmp_path):
    data = np.random.default_rng(0).normal(size=(6, 5, 4))
    write_grid(tmp_path / "a.grid", data)
    np.testing.assert_array_equal(read_grid(tmp_path / "a.grid"), data)
    write_grid(tmp_path / "b.grid", data[:, :, 0])
    assert read_grid(tmp_path / "b.grid").shape == (6, 5, 1)


def test_grid_header_layout(tmp_path):
    write_grid(tmp_path / "a.grid", np.zeros((3, 7, 2)))
    raw = (tmp_path / "a.grid").read_bytes()
    assert raw[:8] == b"CPFGRID\0"
    assert int.from_bytes(raw[8:12], "little") == 1
    assert int.from_bytes(raw[12:16], "little") == 7
    assert int.from_bytes(raw[16:20], "little") == 3
    assert int.from_bytes(raw[20:24], "little") == 2
    assert len(raw) == 24 + 8 * 3 * 7 * 2


def test_grid_truncated_payload_names_file_and_offset(tmp_path):
    p = tmp_path / "t.grid"
    write_grid(p, np.zeros((4, 4, 4)))
    raw = p.read_bytes()
    p.write_bytes(raw[:-10])
    with pytest.raises(FrameFormatError) as exc:
        read_grid(p)
    assert exc.value.path == p
    assert str(p) in str(exc.value) and f"offset {len(raw) - 10}" in str(exc.value)


def test_grid_truncated_header_and_bad_magic(tmp_path):
    p = tmp_path / "h.grid"
    p.write_bytes(b"CPF")
    with pytest.raises(FrameFormatError, match="offset 3"):
        read_grid(p)
    p.write_bytes(b"NOTAGRID" + bytes(HEADER.size - 8))
    with pytest.raises(FrameFormatError, match="offset 0.*bad magic"):
        read_grid(p)


def test_grid_trailing_bytes(tmp_path):
    p = tmp_path / "x.grid"
    write_grid(p, np.zeros((2, 2)))
    p.write_bytes(p.read_bytes() + b"\0")
    with pytest.raises(FrameFormatError, match="trailing"):
        read_grid(p)


def test_pgm_round_trip_8_and_16_bit(tmp_path):
    heat = np.random.default_rng(1).random((5, 8))
    write_pgm(tmp_path / "a.pgm", heat)
    np.testing.assert_allclose(read_pgm(tmp_path / "a.pgm"), heat, atol=1 / 65535)
    write_pgm(tmp_path / "b.pgm", heat, maxval=255)
    np.testing.assert_allclose(read_pgm(tmp_path / "b.pgm"), heat, atol=1 / 255)


def test_pgm_ascii_with_comment(tmp_path):
    p = tmp_path / "c.pgm"
    p.write_text("P2\n# comment\n3 1\n4\n0 2 4\n")
    np.testing.assert_allclose(read_pgm(p), [[0.0, 0.5, 1.0]])


def test_pgm_errors(tmp_path):
    p = tmp_path / "bad.pgm"
    p.write_bytes(b"P6\n2 2\n255\n" + bytes(12))
    with pytest.raises(FrameFormatError, match="not a PGM"):
        read_pgm(p)
    p.write_bytes(b"P5\n4 4\n255\n" + bytes(3))
    with pytest.raises(FrameFormatError, match="truncated raster"):
        read_pgm(p)


def test_grasps_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    a = rng.normal(size=(6, 3))
    a /= np.linalg.norm(a, axis=1, keepdims=True)
    z = GraspCandidateSet(rng.normal(size=(6, 3)), a, rng.random(6), rng.random(6))
    write_grasps(tmp_path / "g.txt", z)
    back = read_grasps(tmp_path / "g.txt")
    for name in ("positions", "approach", "roll", "p"):
        np.testing.assert_array_equal(getattr(back, name), getattr(z, name))
    write_grasps(tmp_path / "e.txt", GraspCandidateSet())
    assert len(read_grasps(tmp_path / "e.txt")) == 0


def test_grasps_bad_line_and_missing_table(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("# header\n0 0 1 0 0 -1 0 0.5\n0 0 1 0 0\n")
    with pytest.raises(FrameFormatError, match="line 3"):
        read_grasps(p)
    with pytest.raises(FrameFormatError, match="missing table"):
        read_grasps(tmp_path / "absent.txt")


def test_truth_round_trip(tmp_path):
    rot = np.array([[0.0, -1, 0], [1, 0, 0], [0, 0, 1]])
    vols = [SphereVolume(np.array([0.1, 0.2, 1.0]), 0.05, "knob"),
            BoxVolume(np.array([0.0, 0.0, 1.2]), np.array([0.1, 0.02, 0.03]), "", rot)]
    write_truth(tmp_path / "t.txt", vols)
    back = read_truth(tmp_path / "t.txt")
    assert [v.label for v in back] == ["knob", ""]
    pts = np.random.default_rng(3).normal(0, 0.2, (50, 3)) + [0, 0, 1]
    for v, w in zip(vols, back):
        np.testing.assert_array_equal(v.distance(pts), w.distance(pts))


def test_truth_bad_record(tmp_path):
    p = tmp_path / "t.txt"
    p.write_text("sphere a 0 0 1\n")
    with pytest.raises(FrameFormatError, match="line 1"):
        read_truth(p)


@pytest.fixture(scope="module")
def frames():
    scene = make_benchmark_suite(0)["tabletop_drawer"]
    return render_sequence(scene, NoiseModel(rng_seed=4), n_frames=3)


def test_sequence_round_trip(tmp_path, frames):
    d = export_frames(tmp_path / "seq", frames, {"seed": 4})
    back = load_frames(d)
    assert len(back) == 3
    for a, b in zip(frames, back):
        np.testing.assert_array_equal(a.depth, b.depth)
        np.testing.assert_array_equal(a.flow, b.flow)
        np.testing.assert_array_equal(a.move_meas.heatmap, b.move_meas.heatmap)
        np.testing.assert_array_equal(a.grasp_meas.positions, b.grasp_meas.positions)
        assert len(a.ground_truth) == len(b.ground_truth)
        assert (b.scene_name, b.frame_id) == (a.scene_name, a.frame_id)
    assert len(load_frames(d, 2)) == 2
    assert find_sequences(tmp_path) == [d]


def test_sequence_without_truth_and_pgm_heat(tmp_path, frames):
    d = export_frames(tmp_path / "seq", frames)
    for t, f in enumerate(frames):
        (d / f"frame_{t:04d}_truth.txt").unlink()
        grid = read_grid(d / f"frame_{t:04d}.grid")
        write_grid(d / f"frame_{t:04d}.grid", grid[:, :, :3])
        write_pgm(d / f"frame_{t:04d}_heat.pgm", f.move_meas.heatmap)
    back = load_frames(d)
    assert all(f.ground_truth is None for f in back)
    np.testing.assert_allclose(back[0].move_meas.heatmap, frames[0].move_meas.heatmap, atol=1 / 65535)


def test_sequence_errors(tmp_path, frames):
    with pytest.raises(FrameFormatError, match="missing sequence metadata"):
        load_frames(tmp_path)
    d = export_frames(tmp_path / "seq", frames)
    (d / "frame_0001.grid").unlink()
    with pytest.raises(FrameFormatError, match="frame_0001.grid.*missing frame grid"):
        load_frames(d)
    (d / "meta.yaml").write_text("camera: [1,\n")
    with pytest.raises(FrameFormatError, match="line"):
        load_frames(d)
