import numpy as np
import pytest

from dadist.errors import ConfigurationError
from dadist.shapes_ingest import (DEFAULT_PAIRS, LandmarkSet, QuaternionSample,
                                  build_matrix_sample, build_quaternion_sample, parse_pairs,
                                  read_landmarks_csv, read_quaternions_csv, reflect, symmetrize,
                                  to_dataset, write_landmarks_csv, write_quaternions_csv)


@pytest.fixture
def outlines():
    rng = np.random.default_rng(4)
    base = np.stack([np.cos(np.linspace(0, 2 * np.pi, 60, endpoint=False)),
                     np.sin(np.linspace(0, 2 * np.pi, 60, endpoint=False))], axis=1)
    return [LandmarkSet(f"s{i}", base + 0.05 * rng.standard_normal((60, 2))) for i in range(4)]


def test_default_pairs():
    assert DEFAULT_PAIRS[0] == (2, 16) and DEFAULT_PAIRS[-1] == (15, 29)
    assert parse_pairs("default") == DEFAULT_PAIRS
    assert parse_pairs("2-16, 3:17") == ((2, 16), (3, 17))
    with pytest.raises(ConfigurationError):
        parse_pairs("2-x")


def test_quaternion_components(outlines):
    lms = outlines[0]
    q = build_quaternion_sample(lms)
    assert q.data.shape == (14, 1, 4)
    assert np.array_equal(q.q[0], np.concatenate([lms.landmark(2), lms.landmark(16)]))


def test_invalid_pairings(outlines):
    with pytest.raises(ConfigurationError):
        build_quaternion_sample(outlines[0], ((1, 61),))
    with pytest.raises(ConfigurationError):
        build_quaternion_sample(outlines[0], ((1, 2), (2, 3)))
    assert build_quaternion_sample(outlines[0], ((5, 5),)).data.shape == (1, 1, 4)


def test_reflection_and_symmetrization(outlines):
    assert np.allclose(reflect([3.0, 1.0], 1.0), [-1.0, 1.0])
    sym = symmetrize(outlines[0])
    assert np.array_equal(sym.points[:45], outlines[0].points[:45])
    twice = symmetrize(sym)
    assert np.allclose(twice.points, sym.points)
    x0 = 0.5 * (sym.landmark(30)[0] + sym.landmark(45)[0])
    assert np.allclose(sym.landmark(46), reflect(sym.landmark(29), x0))


def test_matrix_mode(outlines):
    m = build_matrix_sample(outlines[0])
    assert m.data.shape == (14, 2, 4)
    assert np.array_equal(m.data[:, 0], build_quaternion_sample(outlines[0]).data[:, 0])
    with pytest.raises(ConfigurationError):
        build_matrix_sample(outlines[0], ((20, 50),))


def test_layouts(outlines):
    samples = [build_quaternion_sample(o) for o in outlines]
    (pooled,) = to_dataset(samples, "pooled")
    assert len(pooled.slots) == 4 and pooled.size == 1
    assert pooled.slots[0][0, 0, 0, 0] == pytest.approx(np.sum(samples[0].q ** 2))
    (per,) = to_dataset(samples, "specimen")
    assert len(per.slots) == 14 and per.size == 4
    mats = [build_matrix_sample(o) for o in outlines]
    (pm,) = to_dataset(mats, "pooled")
    assert pm.slots[0].shape == (1, 2, 2, 4)
    with pytest.raises(ConfigurationError):
        to_dataset(mats, "specimen")
    with pytest.raises(ConfigurationError):
        to_dataset(samples, "other")


def test_csv_roundtrips(tmp_path, outlines):
    path = tmp_path / "lm.csv"
    write_landmarks_csv(path, outlines)
    back = read_landmarks_csv(path)
    assert [b.specimen for b in back] == [o.specimen for o in outlines]
    assert all(np.array_equal(a.points, b.points) for a, b in zip(outlines, back))
    qpath = tmp_path / "q.csv"
    samples = [build_matrix_sample(o) for o in outlines]
    write_quaternions_csv(qpath, samples)
    qs = read_quaternions_csv(qpath)
    assert all(np.array_equal(a.data, b.data) for a, b in zip(samples, qs))


def test_malformed_landmark_files(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("specimen,landmark_index,x,y\na,1,0.0,0.0\n")
    with pytest.raises(ConfigurationError, match="60"):
        read_landmarks_csv(p)
    p.write_text("a,61,0.0,0.0\n")
    with pytest.raises(ConfigurationError):
        read_landmarks_csv(p)
    with pytest.raises(ConfigurationError):
        LandmarkSet("x", np.zeros((59, 2)))
    with pytest.raises(ConfigurationError):
        QuaternionSample("x", np.zeros((3, 3)))
