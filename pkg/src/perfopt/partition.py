"""Hierarchical dyadic partitioning of a box decision domain.

All optimizers in this package search over the unit cube [0,1]^D, split into a
tree of cells by bisecting every axis at once (2^D children per cell, edge
length 2^-h at depth h).  A ``BoxDomain`` maps the unit cube to the original
decision box.  Cells are identified by ``(depth, index)`` where ``index`` is
row-major over the per-axis binary codes, axis 0 most significant; indexes are
plain Python ints so arbitrarily deep trees never overflow.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np


class BoxDomain:
    """Axis-aligned box with an affine map to and from the unit cube."""

    def __init__(self, lower, upper):
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        if self.lower.ndim != 1 or self.lower.shape != self.upper.shape:
            raise ValueError("lower and upper must be 1-d and of equal length")
        if not np.all(self.lower < self.upper):
            raise ValueError("need lower < upper on every axis")

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    def from_unit(self, u):
        """Map unit-cube coordinates to the box.

        The convex form ``lower*(1-u) + upper*u`` is exact at u=0 and u=1 for
        arbitrary float bounds, which keeps cell corners reproducible.
        """
        u = np.asarray(u, dtype=float)
        return self.lower * (1.0 - u) + self.upper * u

    def to_unit(self, x):
        x = np.asarray(x, dtype=float)
        return (x - self.lower) / self.widths

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def __repr__(self):
        return f"BoxDomain({self.lower.tolist()}, {self.upper.tolist()})"


def _encode(codes, depth: int) -> int:
    # row-major over per-axis codes, axis 0 most significant
    side = 1 << depth
    index = 0
    for c in codes:
        index = index * side + c
    return index


@dataclass(frozen=True)
class Cell:
    """One node of the partition tree: the sub-box of the unit cube at
    ``depth`` whose per-axis binary codes encode to ``index``."""

    depth: int
    index: int
    dim: int

    def __post_init__(self):
        if self.depth < 0 or self.dim < 1:
            raise ValueError("need depth >= 0 and dim >= 1")
        if not 0 <= self.index < 1 << (self.dim * self.depth):
            raise ValueError("index out of range for depth")

    def axis_codes(self) -> tuple[int, ...]:
        side = 1 << self.depth
        codes = []
        idx = self.index
        for _ in range(self.dim):
            codes.append(idx % side)
            idx //= side
        return tuple(reversed(codes))

    @property
    def edge(self) -> float:
        return 2.0 ** -self.depth

    @property
    def diameter(self) -> float:
        return np.sqrt(self.dim) * 2.0 ** -self.depth

    def lower_corner(self) -> np.ndarray:
        return np.array([c * self.edge for c in self.axis_codes()])

    def upper_corner(self) -> np.ndarray:
        return np.array([(c + 1) * self.edge for c in self.axis_codes()])

    def center(self) -> np.ndarray:
        return np.array([(c + 0.5) * self.edge for c in self.axis_codes()])

    def contains(self, u) -> bool:
        """Half-open membership test; the upper face is closed only on the
        cube boundary so every point belongs to exactly one cell per depth."""
        u = np.asarray(u, dtype=float)
        lo, hi = self.lower_corner(), self.upper_corner()
        above = np.all(u >= lo)
        below = np.all(np.where(hi >= 1.0, u <= hi, u < hi))
        return bool(above and below)

    def children(self) -> list[Cell]:
        codes = self.axis_codes()
        kids = []
        for b in range(1 << self.dim):
            child_codes = tuple(
                2 * c + ((b >> (self.dim - 1 - a)) & 1) for a, c in enumerate(codes)
            )
            kids.append(Cell(self.depth + 1, _encode(child_codes, self.depth + 1), self.dim))
        return kids

    def parent(self) -> Cell:
        if self.depth == 0:
            raise ValueError("root has no parent")
        codes = tuple(c // 2 for c in self.axis_codes())
        return Cell(self.depth - 1, _encode(codes, self.depth - 1), self.dim)


def root(dim: int) -> Cell:
    """The depth-0 cell covering the whole unit cube."""
    return Cell(0, 0, dim)


def _kronecker_alpha(dim: int) -> np.ndarray:
    # generalized golden ratio: the positive root of x**(dim+1) = x + 1
    phi = 2.0
    for _ in range(64):
        phi = (1.0 + phi) ** (1.0 / (dim + 1))
    return np.array([(1.0 / phi ** (j + 1)) % 1.0 for j in range(dim)])


def _cell_shift(cell: Cell, k: int, salt: int) -> np.ndarray:
    # hashlib, not hash(): stable across processes and interpreter runs
    key = f"{cell.dim}:{cell.depth}:{cell.index}:{k}:{salt}".encode()
    digest = hashlib.blake2b(key, digest_size=8 * cell.dim).digest()
    words = np.frombuffer(digest, dtype="<u8")
    return words.astype(np.float64) / 2.0 ** 64


def candidate_points(cell: Cell, k: int, salt: int = 0) -> np.ndarray:
    """Cell center followed by k-1 low-discrepancy points strictly inside.

    The extra points are an additive Kronecker sequence rotated by a per-cell
    shift derived from blake2b(depth, index, k, salt), so the result is a pure
    function of its arguments.  Returns an array of shape (k, dim).
    """
    if k < 1:
        raise ValueError("need k >= 1")
    pts = np.empty((k, cell.dim))
    pts[0] = cell.center()
    if k > 1:
        alpha = _kronecker_alpha(cell.dim)
        shift = _cell_shift(cell, k, salt)
        steps = np.arange(1, k, dtype=float)[:, None]
        u = (shift + steps * alpha) % 1.0
        # squeeze away from the faces so points stay strictly interior
        margin = 1.0 / 32.0
        inner = margin + u * (1.0 - 2.0 * margin)
        pts[1:] = cell.lower_corner() + cell.edge * inner
    return pts
