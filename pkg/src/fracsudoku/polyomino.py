"""Polyomino boxes: the matrix M', the alpha-approximate metric and the Pentadoku study."""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import ndimage

from .core import PartialSudoku, SudokuShape, availability_vector, edge_mask, rect_box_grid
from .incidence import _kronecker_blocks, build_M, rank_and_nullity
from .solver import SolveOptions, SolveOutcome, solve


class TilingError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class BoxMap:
    """n x n grid of 0-based box labels, each used exactly n times."""

    grid: np.ndarray
    names: Optional[tuple[str, ...]] = None  # original text labels, if read from a file

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=np.int64)
        object.__setattr__(self, "grid", g)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise TilingError("box map must be square")
        n = g.shape[0]
        if g.min() < 0 or g.max() >= n:
            raise TilingError(f"box labels must lie in 0..{n - 1}")
        counts = np.bincount(g.ravel(), minlength=n)
        if np.any(counts != n):
            raise TilingError(f"every box needs exactly {n} cells, got sizes {counts.tolist()}")
        if self.disconnected_boxes():
            warnings.warn(f"boxes {self.disconnected_boxes()} are not connected", RuntimeWarning, stacklevel=3)

    @property
    def n(self) -> int:
        return self.grid.shape[0]

    @classmethod
    def rectangular(cls, shape: SudokuShape) -> "BoxMap":
        return cls(rect_box_grid(shape).copy())

    @classmethod
    def from_labels(cls, rows: Sequence[Sequence[str]]) -> "BoxMap":
        """Accept arbitrary tokens; integer labels 1..n keep their value, others are numbered by first use."""
        flat = [t for r in rows for t in r]
        n = len(rows)
        if all(t.isdigit() for t in flat) and {int(t) for t in flat} <= set(range(1, n + 1)):
            return cls(np.array([[int(t) - 1 for t in r] for r in rows]))
        order: dict[str, int] = {}
        for t in flat:
            order.setdefault(t, len(order))
        return cls(np.array([[order[t] for t in r] for r in rows]), tuple(order))

    def to_boxes(self) -> tuple[tuple[int, ...], ...]:
        """1-based labels in the form PartialSudoku expects."""
        return tuple(tuple(int(v) + 1 for v in row) for row in self.grid)

    def cells(self, label: int) -> set[tuple[int, int]]:
        return {(int(i), int(j)) for i, j in zip(*np.nonzero(self.grid == label))}

    def disconnected_boxes(self) -> list[int]:
        return [l + 1 for l in range(self.n) if ndimage.label(self.grid == l)[1] > 1]

    def has_straight_box(self) -> bool:
        """True if some box is a full 1 x n or n x 1 line (the I-pentomino when n = 5)."""
        n = self.n
        return any(len(set(self.grid[i])) == 1 for i in range(n)) or any(
            len(set(self.grid[:, j])) == 1 for j in range(n))

    def text(self) -> str:
        labels = self.names or tuple(str(l + 1) for l in range(self.n))
        return f"{self.n}\n" + "\n".join(" ".join(labels[v] for v in row) for row in self.grid)


def parse_tilings(text: str) -> list[BoxMap]:
    """Blocks of: a line holding n, then n lines of n labels.  Blank lines and # comments are ignored."""
    lines = [ln.split("#")[0].split() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    out, pos = [], 0
    while pos < len(lines):
        head = lines[pos]
        if len(head) != 1 or not head[0].isdigit():
            raise TilingError(f"expected a size line, got {' '.join(head)!r}")
        n = int(head[0])
        rows = lines[pos + 1:pos + 1 + n]
        if len(rows) != n or any(len(r) != n for r in rows):
            raise TilingError(f"tiling {len(out) + 1}: expected {n} rows of {n} labels")
        out.append(BoxMap.from_labels(rows))
        pos += n + 1
    return out


def read_tilings(path=None) -> list[BoxMap]:
    """Read a tiling file; with no path, the curated 5 x 5 pentomino tilings shipped with the package."""
    if path is None:
        text = resources.files("fracsudoku").joinpath("data/pentomino_tilings.txt").read_text()
    else:
        text = Path(path).read_text()
    return parse_tilings(text)


def build_M_prime(boxmap: BoxMap) -> np.ndarray:
    """The normal matrix of the empty puzzle with boxes given by ``boxmap`` (dense int64)."""
    return _kronecker_blocks(boxmap.n, boxmap.grid)


def m_difference_norm(boxmap: BoxMap, shape: SudokuShape) -> int:
    """||M - M'||_inf against the rectangular pattern of ``shape``."""
    if shape.n != boxmap.n:
        raise ValueError("box map and shape disagree on n")
    D = build_M(shape, "kronecker_blocks") - build_M_prime(boxmap)
    return int(np.abs(D).sum(axis=1).max())


def _min_cover(cells: set[tuple[int, int]], h: int, w: int) -> Fraction:
    """Least alpha such that ``cells`` is covered by alpha*h rows together with alpha*w columns."""
    if not cells:
        return Fraction(0)
    rows = sorted({i for i, _ in cells})
    best = None
    for r in range(len(rows) + 1):
        for R in itertools.combinations(rows, r):
            Rs = set(R)
            cols = {j for i, j in cells if i not in Rs}
            a = max(Fraction(r, h), Fraction(len(cols), w))
            if best is None or a < best:
                best = a
    return best


def alpha_of(boxmap: BoxMap, shape: SudokuShape) -> Fraction:
    """Minimal alpha for which ``boxmap`` has alpha-approximate type ``shape`` (labels matched by index)."""
    if shape.n != boxmap.n:
        raise ValueError("box map and shape disagree on n")
    rect = rect_box_grid(shape)
    alpha = Fraction(0)
    for l in range(shape.n):
        diff = {(int(i), int(j)) for i, j in zip(*np.nonzero((rect == l) != (boxmap.grid == l)))}
        alpha = max(alpha, _min_cover(diff, shape.h, shape.w))
    return alpha


@dataclass(frozen=True)
class AlphaReport:
    alpha: Fraction
    norm: int  # ||M - M'||_inf
    bound: Fraction  # 4 alpha n
    changed_cells: int

    @property
    def holds(self) -> bool:
        return self.norm <= self.bound

    def lines(self) -> list[str]:
        return [f"alpha: {self.alpha}", f"changed_cells: {self.changed_cells}",
                f"norm_M_minus_M_prime: {self.norm}", f"bound_4_alpha_n: {self.bound}",
                f"bound_holds: {self.holds}"]


def alpha_report(boxmap: BoxMap, shape: SudokuShape) -> AlphaReport:
    a = alpha_of(boxmap, shape)
    changed = int((rect_box_grid(shape) != boxmap.grid).sum())
    return AlphaReport(a, m_difference_norm(boxmap, shape), 4 * a * shape.n, changed)


def random_perturbed_boxmap(shape: SudokuShape, rng: np.random.Generator, swaps: int = 1) -> BoxMap:
    """Swap ``swaps`` pairs of orthogonally adjacent cells lying in different boxes."""
    g = rect_box_grid(shape).copy()
    n = shape.n
    done = 0
    while done < swaps:
        i, j = (int(x) for x in rng.integers(0, n, size=2))
        di, dj = ((0, 1), (1, 0))[int(rng.integers(2))]
        i2, j2 = i + di, j + dj
        if i2 >= n or j2 >= n or g[i, j] == g[i2, j2]:
            continue
        g[i, j], g[i2, j2] = g[i2, j2], g[i, j]
        done += 1
        if done == swaps and np.array_equal(g, rect_box_grid(shape)):
            done -= 1  # the swaps cancelled out; keep going
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return BoxMap(g)


@dataclass(frozen=True)
class NullityRecord:
    index: int
    has_straight: bool
    nullity: int
    numeric_nullity: Optional[int]

    @property
    def expected(self) -> Optional[int]:
        """27 with an I-pentomino and 23 without; only documented for 5 x 5 tilings."""
        return None if self.index < 0 else (27 if self.has_straight else 23)

    @property
    def stable(self) -> bool:
        return self.numeric_nullity is None or self.numeric_nullity == self.nullity


def nullity_study(tilings: Iterable[BoxMap], numeric: bool = True, tol: float = 1e-9) -> list[NullityRecord]:
    out = []
    for idx, bm in enumerate(tilings):
        Mp = build_M_prime(bm)
        exact = rank_and_nullity(Mp, "exact").nullity
        num = rank_and_nullity(Mp, "numeric", tol).nullity if numeric else None
        out.append(NullityRecord(idx if bm.n == 5 else -1, bm.has_straight_box(), exact, num))
    return out


def approx_solve(S: PartialSudoku, opts: Optional[SolveOptions] = None,
                 shape: Optional[SudokuShape] = None) -> SolveOutcome:
    """Solve a polyomino puzzle with the rectangular A^{-1} and K, dM measured from rectangular M.

    ``S.shape`` supplies the rectangular reference unless ``shape`` is given.
    The diagnostics gain alpha, delta and the bound 4(alpha + delta) n next to
    the measured ||M - M~||_inf.
    """
    shape = shape or S.shape
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        bm = BoxMap(S.box_grid)
    a = alpha_of(bm, shape)
    mask = edge_mask(S)
    u = availability_vector(S, mask)
    delta = Fraction(int(u.max(initial=0)), shape.n)
    out = solve(S, opts, reference_M=build_M(shape, "kronecker_blocks"))
    d = out.diagnostics
    d["alpha"] = a
    d["delta"] = delta
    d["norm_M_minus_M_prime"] = m_difference_norm(bm, shape)
    d["bound_4_alpha_delta_n"] = 4 * (a + delta) * shape.n
    if "delta_M_norm" in d:
        d["bound_4_alpha_delta_n_holds"] = d["delta_M_norm"] < d["bound_4_alpha_delta_n"]
    return out
