import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qratchet.grids import PhaseSpaceGrid, comparison_report, overlap_measure


def grid(values, kind="liouville", p_min=-1.0, p_max=1.0):
    values = np.asarray(values, dtype=float)
    return PhaseSpaceGrid(
        values=values,
        x_bins=values.shape[0],
        p_bins=values.shape[1],
        p_min=p_min,
        p_max=p_max,
        kind=kind,
    )


def random_grid(rng, shape=(8, 8)):
    return grid(rng.random(shape))


class TestOverlap:
    def test_self_overlap_is_one(self):
        g = random_grid(np.random.default_rng(0))
        assert overlap_measure(g, g) == pytest.approx(1.0)

    def test_disjoint_supports(self):
        a = np.zeros((4, 4))
        b = np.zeros((4, 4))
        a[0, 0] = 1.0
        b[3, 3] = 1.0
        assert overlap_measure(grid(a), grid(b)) == 0.0
        assert overlap_measure(grid(a), grid(b), "raw") == 0.0

    def test_incomparable_grids_rejected(self):
        a = random_grid(np.random.default_rng(0), (8, 8))
        b = random_grid(np.random.default_rng(0), (8, 16))
        with pytest.raises(ValueError, match="not comparable"):
            overlap_measure(a, b)
        c = grid(np.ones((8, 8)), p_max=2.0)
        with pytest.raises(ValueError, match="not comparable"):
            overlap_measure(a, c)

    def test_unknown_mode_rejected(self):
        g = random_grid(np.random.default_rng(0))
        with pytest.raises(ValueError):
            overlap_measure(g, g, "cosine")

    @settings(deadline=None, max_examples=50)
    @given(st.integers(min_value=0, max_value=2**31 - 1))
    def test_symmetry_and_bounds(self, seed):
        rng = np.random.default_rng(seed)
        a, b = random_grid(rng), random_grid(rng)
        o_ab = overlap_measure(a, b)
        assert o_ab == overlap_measure(b, a)
        assert 0.0 <= o_ab <= 1.0 + 1e-12
        assert overlap_measure(a, b, "raw") == overlap_measure(b, a, "raw")

    def test_proportional_grids_give_one(self):
        rng = np.random.default_rng(1)
        a = random_grid(rng)
        b = grid(3.7 * a.values)
        assert overlap_measure(a, b) == pytest.approx(1.0)


class TestGridContainer:
    def test_negative_values_rejected(self):
        with pytest.raises(ValueError):
            grid([[-1.0, 0.0], [0.0, 1.0]])

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            PhaseSpaceGrid(
                values=np.ones((2, 3)), x_bins=3, p_bins=2,
                p_min=-1.0, p_max=1.0, kind="liouville",
            )

    def test_normalized(self):
        g = grid(2.0 * np.ones((4, 4)))
        n = g.normalized()
        assert n.values.sum() == pytest.approx(1.0)


class TestPersistence:
    def test_round_trip(self, tmp_path):
        g = random_grid(np.random.default_rng(2), (16, 12))
        g.metadata["params"] = {"gamma": 0.2}
        g.save(tmp_path / "grid")
        back = PhaseSpaceGrid.load(tmp_path / "grid")
        assert np.array_equal(back.values, g.values)
        assert back.comparable(g)
        assert back.kind == g.kind
        assert back.metadata["params"] == {"gamma": 0.2}

    def test_pgm_is_valid_16bit(self, tmp_path):
        g = random_grid(np.random.default_rng(3), (8, 6))
        g.save(tmp_path / "grid")
        raw = (tmp_path / "grid.pgm").read_bytes()
        header, rest = raw.split(b"\n", 1)
        assert header == b"P5"
        dims, rest = rest.split(b"\n", 1)
        assert dims == b"8 6"
        maxval, pixels = rest.split(b"\n", 1)
        assert maxval == b"65535"
        assert len(pixels) == 2 * 8 * 6
        img = np.frombuffer(pixels, dtype=">u2")
        assert img.max() == 65535  # max-normalized

    def test_sidecar_fields(self, tmp_path):
        import json

        g = random_grid(np.random.default_rng(4))
        g.save(tmp_path / "g")
        meta = json.loads((tmp_path / "g.json").read_text())
        for key in ("kind", "x_bins", "p_bins", "p_min", "p_max", "sum_before_normalization"):
            assert key in meta


def test_comparison_report_flags_similarity():
    rng = np.random.default_rng(5)
    a = random_grid(rng)
    report = comparison_report(None, None, a, a, similarity_threshold=0.9)
    assert report["similar"] is True
    assert report["overlap_normalized"] == pytest.approx(1.0)
