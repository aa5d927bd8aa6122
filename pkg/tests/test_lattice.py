import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from filmhomog import EmptyTessellation, Rectangle, UnitCellChoice, corner_map, tessellate

UNIT = Rectangle((0.0, 0.0), (1.0, 1.0))
SQUARE = UnitCellChoice()
HALF_SHIFT = UnitCellChoice(f=(0.5, 0.5))


class TestTessellate:
    def test_exact_tiling(self):
        t = tessellate(UNIT, 0.25, SQUARE)
        assert len(t.full_cells) == 16
        assert len(t.partial_cells) == 0

    def test_incommensurate(self):
        t = tessellate(UNIT, 0.3, SQUARE)
        assert len(t.full_cells) == 9
        assert len(t.partial_cells) == 7

    def test_half_shifted(self):
        t = tessellate(UNIT, 0.25, HALF_SHIFT)
        assert len(t.full_cells) == 9
        assert len(t.partial_cells) == 16

    def test_incommensurate_counts_by_interval_arithmetic(self):
        # independent count: 1D overlap classification per axis
        l = 0.3
        full_1d = [k for k in range(-1, 5) if k * l >= -1e-12 and (k + 1) * l <= 1 + 1e-12]
        cut_1d = [
            k
            for k in range(-1, 5)
            if min(1, (k + 1) * l) - max(0, k * l) > 1e-12 and k not in full_1d
        ]
        n_full = len(full_1d) ** 2
        n_partial = (len(full_1d) + len(cut_1d)) ** 2 - n_full
        t = tessellate(UNIT, l, SQUARE)
        assert (len(t.full_cells), len(t.partial_cells)) == (n_full, n_partial)

    @pytest.mark.parametrize("l,choice", [(0.25, SQUARE), (0.3, SQUARE), (0.25, HALF_SHIFT), (0.17, HALF_SHIFT)])
    def test_area_partition(self, l, choice):
        t = tessellate(UNIT, l, choice)
        assert t.total_area() == pytest.approx(UNIT.area, rel=1e-10)

    def test_partial_cells_meet_complement(self):
        for cell in tessellate(UNIT, 0.3, SQUARE).partial_cells:
            uncut = cell.corner + 0.3 * np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
            assert not np.all(UNIT.contains(uncut, tol=1e-12))

    def test_refinement_quadruples_full_cells(self):
        n1 = len(tessellate(UNIT, 1 / 8, SQUARE).full_cells)
        n2 = len(tessellate(UNIT, 1 / 16, SQUARE).full_cells)
        assert n2 == 4 * n1

    def test_no_full_cell_warns(self):
        with pytest.warns(EmptyTessellation):
            t = tessellate(Rectangle((0.0, 0.0), (0.4, 0.4)), 0.9, SQUARE)
        assert not t.has_full_cells
        assert t.total_area() == pytest.approx(0.16, rel=1e-10)

    def test_oblique_basis_area(self):
        oblique = UnitCellChoice(e1=(1.0, 0.0), e2=(0.5, 1.0))
        t = tessellate(UNIT, 0.25, oblique)
        assert t.total_area() == pytest.approx(1.0, rel=1e-10)

    def test_rejects_bad_scale(self):
        with pytest.raises(ValueError):
            tessellate(UNIT, 0.0, SQUARE)
        with pytest.raises(ValueError):
            tessellate(UNIT, 1.5, SQUARE)

    def test_rejects_degenerate_basis(self):
        with pytest.raises(ValueError):
            UnitCellChoice(e1=(1.0, 0.0), e2=(2.0, 0.0))


class TestCornerMap:
    def test_plain(self):
        np.testing.assert_allclose(corner_map(np.array([0.26, 0.01]), 0.25, SQUARE), [0.25, 0.0])

    def test_on_corner_half_open(self):
        np.testing.assert_allclose(corner_map(np.array([0.25, 0.25]), 0.25, SQUARE), [0.25, 0.25])

    def test_shifted_origin_cell(self):
        np.testing.assert_allclose(
            corner_map(np.array([0.05, 0.05]), 0.25, HALF_SHIFT), [-0.125, -0.125]
        )

    def test_batch(self):
        pts = np.array([[0.26, 0.01], [0.77, 0.52]])
        corners = corner_map(pts, 0.25, SQUARE)
        np.testing.assert_allclose(corners, [[0.25, 0.0], [0.75, 0.5]])

    def test_point_minus_corner_in_cell(self):
        rng = np.random.default_rng(0)
        pts = UNIT.sample(1000, rng)
        for choice, l in [(SQUARE, 0.3), (HALF_SHIFT, 0.25), (UnitCellChoice(e1=(1, 0.2), e2=(-0.1, 1)), 0.21)]:
            corners = corner_map(pts, l, choice)
            rel = (pts - corners) @ np.linalg.inv(choice.basis).T / l
            assert np.all(rel >= -1e-9)
            assert np.all(rel < 1.0 + 1e-9)


@settings(max_examples=40, deadline=None)
@given(
    l=st.floats(0.05, 0.9),
    fx=st.floats(0.0, 1.0, exclude_max=True),
    fy=st.floats(0.0, 1.0, exclude_max=True),
)
def test_partition_property(l, fx, fy):
    """Every sampled point lands in exactly one listed cell of its tessellation."""
    choice = UnitCellChoice(f=(fx, fy))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EmptyTessellation)
        t = tessellate(UNIT, l, choice)
    rng = np.random.default_rng(42)
    pts = UNIT.sample(200, rng)
    for p in pts:
        cell = t.locate(p)
        assert cell is not None
        rel = np.linalg.inv(choice.basis) @ (p - cell.corner) / l
        assert np.all(rel >= -1e-9) and np.all(rel < 1 + 1e-9)


@settings(max_examples=40, deadline=None)
@given(l=st.floats(0.05, 0.9), fx=st.floats(0.0, 1.0, exclude_max=True))
def test_area_identity_property(l, fx):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EmptyTessellation)
        t = tessellate(UNIT, l, UnitCellChoice(f=(fx, 0.25)))
    assert abs(t.total_area() - 1.0) < 1e-10


def test_partition_ten_thousand_points():
    """Each of 1e4 random points lies in exactly one listed cell."""
    rng = np.random.default_rng(7)
    pts = UNIT.sample(10_000, rng)
    for choice, l in [(SQUARE, 0.3), (HALF_SHIFT, 0.25)]:
        t = tessellate(UNIT, l, choice)
        Binv = np.linalg.inv(choice.basis)
        for p in pts:
            cell = t.locate(p)
            assert cell is not None
            rel = Binv @ (p - cell.corner) / l
            assert np.all(rel >= -1e-9) and np.all(rel < 1 + 1e-9)


def test_gauge_pair_same_coverage():
    ta = tessellate(UNIT, 0.25, SQUARE)
    tb = tessellate(UNIT, 0.25, HALF_SHIFT)
    assert ta.total_area() == pytest.approx(tb.total_area(), rel=1e-12)


class TestBoundarySpans:
    def test_aligned_right_edge_covered_by_full_cells(self):
        t = tessellate(UNIT, 0.25, SQUARE)
        edge = {e.name: e for e in UNIT.edges()}["right"]
        spans = t.boundary_spans(edge)
        assert [s[:2] for s in spans] == [(0.0, 0.25), (0.25, 0.5), (0.5, 0.75), (0.75, 1.0)]
        assert all(c.is_full for _, _, c in spans)

    def test_shifted_edges_covered_fully(self):
        t = tessellate(UNIT, 0.25, HALF_SHIFT)
        for edge in UNIT.edges():
            spans = t.boundary_spans(edge)
            total = sum(b - a for a, b, _ in spans)
            assert total == pytest.approx(edge.length, abs=1e-12)

    def test_corner_cells_detected(self):
        t = tessellate(UNIT, 0.25, HALF_SHIFT)
        corners = t.corner_touching_indices()
        assert corners == {(-1, -1), (-1, 3), (3, -1), (3, 3)}
