import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perfopt.partition import BoxDomain, Cell, candidate_points, root

from _oracles import encode_codes


def cells(max_depth=8, max_dim=3):
    """Strategy over valid cells: per-axis codes drawn first, then encoded."""

    @st.composite
    def build(draw):
        dim = draw(st.integers(1, max_dim))
        depth = draw(st.integers(0, max_depth))
        codes = tuple(draw(st.integers(0, 2 ** depth - 1)) for _ in range(dim))
        return Cell(depth, encode_codes(codes, depth), dim), codes

    return build()


class TestBoxDomain:
    def test_corners_map_exactly(self):
        dom = BoxDomain([-5.12, -5.12], [5.12, 5.12])
        assert np.array_equal(dom.from_unit([0.0, 0.0]), [-5.12, -5.12])
        assert np.array_equal(dom.from_unit([1.0, 1.0]), [5.12, 5.12])
        assert np.array_equal(dom.from_unit([0.0, 1.0]), [-5.12, 5.12])

    def test_center_maps_to_midpoint(self):
        dom = BoxDomain([-5.12, -5.12], [5.12, 5.12])
        assert np.array_equal(dom.from_unit([0.5, 0.5]), [0.0, 0.0])

    @given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=2))
    def test_round_trip(self, u):
        dom = BoxDomain([-3.0, 1.0], [2.0, 4.5])
        assert np.allclose(dom.to_unit(dom.from_unit(u)), u, atol=1e-12)

    def test_contains_and_widths(self):
        dom = BoxDomain([0.0, -1.0], [2.0, 1.0])
        assert dom.dim == 2
        assert np.array_equal(dom.widths, [2.0, 2.0])
        assert dom.contains([0.0, -1.0]) and dom.contains([2.0, 1.0])
        assert not dom.contains([2.0001, 0.0])

    def test_invalid_bounds_rejected(self):
        with pytest.raises(ValueError):
            BoxDomain([0.0, 0.0], [1.0, 0.0])
        with pytest.raises(ValueError):
            BoxDomain([[0.0]], [[1.0]])


class TestCell:
    @given(cells())
    def test_axis_codes_invert_encoding(self, cell_and_codes):
        cell, codes = cell_and_codes
        assert cell.axis_codes() == codes

    @given(cells(max_depth=6))
    def test_children_parent_inverse(self, cell_and_codes):
        cell, _ = cell_and_codes
        kids = cell.children()
        assert len(kids) == 2 ** cell.dim
        assert len({k.index for k in kids}) == len(kids)
        for kid in kids:
            assert kid.depth == cell.depth + 1
            assert kid.parent() == cell

    @given(cells(max_depth=6), st.data())
    @settings(max_examples=60)
    def test_children_tile_the_parent(self, cell_and_codes, data):
        cell, _ = cell_and_codes
        lo, hi = cell.lower_corner(), cell.upper_corner()
        u = np.array(
            [
                data.draw(st.floats(float(a), float(b), exclude_max=bool(b < 1.0)))
                for a, b in zip(lo, hi)
            ]
        )
        owners = [k for k in cell.children() if k.contains(u)]
        assert len(owners) == 1

    def test_geometry(self):
        cell = Cell(2, 0b1101, 2)  # codes (3, 1) at depth 2
        assert cell.axis_codes() == (3, 1)
        assert cell.edge == 0.25
        assert cell.diameter == pytest.approx(np.sqrt(2.0) / 4.0)
        assert np.array_equal(cell.lower_corner(), [0.75, 0.25])
        assert np.array_equal(cell.center(), [0.875, 0.375])

    def test_boundary_membership_is_exclusive(self):
        # every point of the cube lies in exactly one cell per depth,
        # including shared faces and the closed top boundary
        depth = 3
        all_cells = [Cell(depth, i, 2) for i in range(1 << (2 * depth))]
        for u in ([0.25, 0.25], [0.5, 0.125], [1.0, 1.0], [0.375, 1.0], [0.0, 0.0]):
            owners = [c for c in all_cells if c.contains(np.array(u))]
            assert len(owners) == 1, u

    def test_deep_cells_use_exact_integers(self):
        depth = 80
        codes = (2 ** 79 + 7, 5)
        cell = Cell(depth, encode_codes(codes, depth), 2)
        assert cell.axis_codes() == codes
        kid = cell.children()[3]
        assert kid.parent() == cell
        assert kid.index == encode_codes((2 * codes[0] + 1, 2 * codes[1] + 1), depth + 1)

    def test_root_and_validation(self):
        assert root(2) == Cell(0, 0, 2)
        with pytest.raises(ValueError):
            Cell(0, 0, 2).parent()
        with pytest.raises(ValueError):
            Cell(1, 4, 2)  # index out of range at depth 1
        with pytest.raises(ValueError):
            Cell(-1, 0, 2)


class TestCandidatePoints:
    def test_first_point_is_the_center(self):
        cell = Cell(2, 5, 2)
        pts = candidate_points(cell, 9)
        assert pts.shape == (9, 2)
        assert np.array_equal(pts[0], cell.center())

    @given(cells(max_depth=8), st.integers(1, 16), st.integers(0, 3))
    @settings(max_examples=80)
    def test_points_stay_inside_the_cell(self, cell_and_codes, k, salt):
        cell, _ = cell_and_codes
        pts = candidate_points(cell, k, salt)
        assert pts.shape == (k, cell.dim)
        assert np.all(pts >= cell.lower_corner())
        assert np.all(pts <= cell.upper_corner())
        # non-center points keep a margin from every face
        if k > 1:
            gap = cell.edge / 32.0
            assert np.all(pts[1:] >= cell.lower_corner() + gap * (1 - 1e-12))
            assert np.all(pts[1:] <= cell.upper_corner() - gap * (1 - 1e-12))

    def test_pure_function_of_arguments(self):
        cell = Cell(3, 21, 2)
        a = candidate_points(cell, 9, salt=0)
        b = candidate_points(cell, 9, salt=0)
        assert np.array_equal(a, b)
        assert not np.array_equal(a[1:], candidate_points(cell, 9, salt=1)[1:])
        sibling = Cell(3, 22, 2)
        rel_a = a[1:] - cell.lower_corner()
        rel_s = candidate_points(sibling, 9)[1:] - sibling.lower_corner()
        assert not np.array_equal(rel_a, rel_s)  # per-cell rotation differs

    def test_k_one_is_center_only(self):
        cell = Cell(1, 2, 2)
        assert np.array_equal(candidate_points(cell, 1), [cell.center()])

    def test_invalid_k_rejected(self):
        with pytest.raises(ValueError):
            candidate_points(root(2), 0)
