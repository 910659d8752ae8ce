"""The 69-relation coherent configuration on the edges of G_hw and its algebra.

Relations are labelled by ordered edge-type pair and the relations between
the underlying rows, columns, symbols and boxes:

* row relation: 0 equal, 1 same bundle (distinct), 2 different bundles;
  the column relation is analogous with column bundles (stacks);
* symbol relation: 0 equal, 1 distinct;
* row/box incidence ``rb`` and column/box incidence ``cb``: 0 incident, 1 not;
* box relation: 0 equal, 1 same row bundle, 2 same column bundle, 3 neither.

Each type-pair block owns a contiguous id range, and ids are ``offset +
local + 1`` with ``local`` a mixed-radix code of the component relations.
With this labelling the diagonal relations are 1, 16, 32 and 62 and every
degree agrees with the published degree table.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence, TextIO

import numpy as np
import sympy

from .core import EDGE_KINDS, BS, CS, RC, RS, EdgeId, SudokuShape

NUM_RELATIONS = 69
DIAGONAL_IDS = {RC: 1, RS: 16, CS: 32, BS: 62}

# (first type, second type) -> (offset, block size, description of local code)
BLOCKS: dict[tuple[int, int], tuple[int, int, str]] = {
    (RC, RC): (0, 9, "3*row + col"),
    (RC, RS): (9, 3, "row"),
    (RS, RC): (12, 3, "row"),
    (RS, RS): (15, 6, "2*row + sym"),
    (RC, CS): (21, 3, "col"),
    (CS, RC): (24, 3, "col"),
    (RS, CS): (27, 2, "sym"),
    (CS, RS): (29, 2, "sym"),
    (CS, CS): (31, 6, "2*col + sym"),
    (RC, BS): (37, 4, "2*rb + cb"),
    (BS, RC): (41, 4, "2*rb + cb"),
    (RS, BS): (45, 4, "2*rb + sym"),
    (BS, RS): (49, 4, "2*rb + sym"),
    (CS, BS): (53, 4, "2*cb + sym"),
    (BS, CS): (57, 4, "2*cb + sym"),
    (BS, BS): (61, 8, "2*box + sym"),
}

_LINE = ("=", "~", "!~")
_SYM = ("=", "!=")
_INC = ("meets", "misses")
_BOX = ("=", "row-bundle", "col-bundle", "apart")


@dataclass(frozen=True)
class RelationDescriptor:
    id: int
    first: str
    second: str
    parts: tuple[tuple[str, str], ...]

    def __str__(self):
        inner = ", ".join(f"{k} {v}" for k, v in self.parts)
        return f"R{self.id} {self.first}-{self.second}: {inner}"


def _local_parts(code: str, local: int) -> tuple[tuple[str, str], ...]:
    names = {"row": _LINE, "col": _LINE, "sym": _SYM, "rb": _INC, "cb": _INC, "box": _BOX}
    terms = [t.strip() for t in code.split("+")]
    radices = []
    for t in terms:
        name = t.split("*")[-1]
        radices.append((name, len(names[name])))
    out = []
    for name, base in reversed(radices):
        local, digit = divmod(local, base)
        out.append((name, names[name][digit]))
    return tuple(reversed(out))


@lru_cache(maxsize=None)
def relation_descriptors() -> tuple[RelationDescriptor, ...]:
    out: list[Optional[RelationDescriptor]] = [None] * NUM_RELATIONS
    for (p, q), (off, size, code) in BLOCKS.items():
        for loc in range(size):
            out[off + loc] = RelationDescriptor(
                off + loc + 1, EDGE_KINDS[p], EDGE_KINDS[q], _local_parts(code, loc)
            )
    return tuple(out)  # type: ignore[arg-type]


@lru_cache(maxsize=None)
def relation_types() -> tuple[np.ndarray, np.ndarray]:
    """0-based arrays (length 70, index 0 unused) of first and second edge types."""
    first = np.full(NUM_RELATIONS + 1, -1)
    second = np.full(NUM_RELATIONS + 1, -1)
    for (p, q), (off, size, _) in BLOCKS.items():
        first[off + 1: off + size + 1] = p
        second[off + 1: off + size + 1] = q
    return first, second


# --- pair classification --------------------------------------------------------


class _Rel:
    def __init__(self, shape: SudokuShape):
        self.h, self.w = shape.h, shape.w

    def row(self, a, b):
        return np.where(a == b, 0, np.where(a // self.h == b // self.h, 1, 2))

    def col(self, a, b):
        return np.where(a == b, 0, np.where(a // self.w == b // self.w, 1, 2))

    @staticmethod
    def sym(a, b):
        return (a != b).astype(np.int64)

    def rb(self, i, l):  # noqa: E741
        return (i // self.h != l // self.h).astype(np.int64)

    def cb(self, j, l):  # noqa: E741
        return (j // self.w != l % self.h).astype(np.int64)

    def box(self, a, b):
        h = self.h
        return np.where(a == b, 0, np.where(a // h == b // h, 1, np.where(a % h == b % h, 2, 3)))

    def cell_box(self, i, j):
        return self.h * (i // self.h) + j // self.w


def _block_local(r: _Rel, p: int, q: int, a1, b1, a2, b2):
    """Local relation code for edges (a1, b1) of type p and (a2, b2) of type q (0-based)."""
    if (p, q) == (RC, RC):
        return 3 * r.row(a1, a2) + r.col(b1, b2)
    if (p, q) in ((RC, RS), (RS, RC)):
        return r.row(a1, a2)
    if (p, q) == (RS, RS):
        return 2 * r.row(a1, a2) + r.sym(b1, b2)
    if (p, q) in ((RC, CS),):
        return r.col(b1, a2)
    if (p, q) == (CS, RC):
        return r.col(a1, b2)
    if (p, q) in ((RS, CS), (CS, RS)):
        return r.sym(b1, b2)
    if (p, q) == (CS, CS):
        return 2 * r.col(a1, a2) + r.sym(b1, b2)
    if (p, q) == (RC, BS):
        return 2 * r.rb(a1, a2) + r.cb(b1, a2)
    if (p, q) == (BS, RC):
        return 2 * r.rb(a2, a1) + r.cb(b2, a1)
    if (p, q) == (RS, BS):
        return 2 * r.rb(a1, a2) + r.sym(b1, b2)
    if (p, q) == (BS, RS):
        return 2 * r.rb(a2, a1) + r.sym(b1, b2)
    if (p, q) == (CS, BS):
        return 2 * r.cb(a1, a2) + r.sym(b1, b2)
    if (p, q) == (BS, CS):
        return 2 * r.cb(a2, a1) + r.sym(b1, b2)
    if (p, q) == (BS, BS):
        return 2 * r.box(a1, a2) + r.sym(b1, b2)
    raise AssertionError((p, q))


def classify_pair(shape: SudokuShape, e: EdgeId, f: EdgeId) -> int:
    """Relation id (1..69) of the ordered edge pair (e, f); edges are 1-based."""
    n = shape.n
    for x in (e, f):
        if not (1 <= x.a <= n and 1 <= x.b <= n):
            raise ValueError(f"edge {x} does not belong to shape {shape}")
    p, q = EDGE_KINDS.index(e.kind), EDGE_KINDS.index(f.kind)
    loc = _block_local(_Rel(shape), p, q, np.int64(e.a - 1), np.int64(e.b - 1),
                       np.int64(f.a - 1), np.int64(f.b - 1))
    return BLOCKS[(p, q)][0] + int(loc) + 1


@lru_cache(maxsize=16)
def relation_ids(shape: SudokuShape) -> np.ndarray:
    """4n^2 x 4n^2 int8 matrix of relation ids in the global edge order."""
    n = shape.n
    r = _Rel(shape)
    a = np.repeat(np.arange(n), n)
    b = np.tile(np.arange(n), n)
    out = np.empty((4 * n * n, 4 * n * n), dtype=np.int8)
    nn = n * n
    for (p, q), (off, _, _) in BLOCKS.items():
        loc = _block_local(r, p, q, a[:, None], b[:, None], a[None, :], b[None, :])
        out[p * nn:(p + 1) * nn, q * nn:(q + 1) * nn] = off + 1 + loc
    out.setflags(write=False)
    return out


def relation_matrix(shape: SudokuShape, rid: int) -> np.ndarray:
    """0/1 adjacency matrix A_rid."""
    if not 1 <= rid <= NUM_RELATIONS:
        raise ValueError(f"relation id {rid} outside 1..{NUM_RELATIONS}")
    return (relation_ids(shape) == rid).astype(np.int64)


@lru_cache(maxsize=16)
def canonical_pairs(shape: SudokuShape) -> np.ndarray:
    """(69, 2) array: for each relation, the lexicographically first pair (x, z) in it."""
    R = relation_ids(shape)
    flat = R.ravel()
    out = np.empty((NUM_RELATIONS, 2), dtype=np.int64)
    for k in range(1, NUM_RELATIONS + 1):
        pos = np.flatnonzero(flat == k)
        if pos.size == 0:
            raise RuntimeError(f"relation {k} is empty at shape {shape}")
        out[k - 1] = divmod(int(pos[0]), R.shape[1])
    return out


@lru_cache(maxsize=None)
def transpose_map() -> tuple[int, ...]:
    """transpose_map()[k] is the id of the transpose of relation k (index 0 unused)."""
    shape = SudokuShape(2, 3)
    R = relation_ids(shape)
    cp = canonical_pairs(shape)
    return (0,) + tuple(int(R[z, x]) for x, z in cp)


def degrees_concrete(shape: SudokuShape) -> np.ndarray:
    """d_i (index 1..69; index 0 unused) by direct counting of nonzero row sums."""
    R = relation_ids(shape)
    cp = canonical_pairs(shape)
    d = np.zeros(NUM_RELATIONS + 1, dtype=np.int64)
    for k in range(1, NUM_RELATIONS + 1):
        d[k] = int((R[cp[k - 1, 0]] == k).sum())
    return d


# --- structure constants --------------------------------------------------------

GRID = (2, 3, 4)
MONOMIALS = ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (2, 1), (1, 2), (2, 2))
MONOMIAL_NAMES = ("1", "h", "w", "h^2", "hw", "w^2", "h^2w", "hw^2", "h^2w^2")


def structure_constants_concrete(shape: SudokuShape) -> np.ndarray:
    """p[i, j, k] (1-based, size 70^3) counted at one shape.

    For each k a canonical (x, z) in R_k is fixed and the middle edges y are
    counted by the pair (relation of (x, y), relation of (y, z)).
    """
    R = relation_ids(shape)
    cp = canonical_pairs(shape)
    p = np.zeros((NUM_RELATIONS + 1,) * 3, dtype=np.int64)
    for k in range(1, NUM_RELATIONS + 1):
        x, z = cp[k - 1]
        np.add.at(p[:, :, k], (R[x, :].astype(np.int64), R[:, z].astype(np.int64)), 1)
    return p


def _vandermonde() -> sympy.Matrix:
    pts = [(h, w) for h in GRID for w in GRID]
    return sympy.Matrix([[h**a * w**b for a, b in MONOMIALS] for h, w in pts])


@dataclass(frozen=True, eq=False)
class StructureConstants:
    """p_ij^k as polynomials in h, w with integer coefficients in the 9-term basis.

    ``coeffs`` has shape (70, 70, 70, 9); index 0 is unused.
    """

    coeffs: np.ndarray

    def at(self, shape: SudokuShape) -> np.ndarray:
        return _evaluate_constants(self, shape.h, shape.w)

    def polynomial(self, i: int, j: int, k: int) -> sympy.Expr:
        h, w = sympy.symbols("h w")
        return sum(int(c) * h**a * w**b for c, (a, b) in zip(self.coeffs[i, j, k], MONOMIALS))

    def max_degrees(self) -> tuple[int, int]:
        nz = np.any(self.coeffs != 0, axis=(0, 1, 2))
        return (max(MONOMIALS[t][0] for t in np.flatnonzero(nz)),
                max(MONOMIALS[t][1] for t in np.flatnonzero(nz)))

    def export(self, fh: TextIO) -> int:
        """Write ``i j k c_1 .. c_9`` for every nonzero constant."""
        idx = np.argwhere(np.any(self.coeffs != 0, axis=3))
        for i, j, k in idx:
            cs = " ".join(str(int(c)) for c in self.coeffs[i, j, k])
            fh.write(f"{i} {j} {k} {cs}\n")
        return len(idx)


_EVAL_CACHE: dict[tuple[int, int], np.ndarray] = {}


def _evaluate_constants(sc: StructureConstants, h: int, w: int) -> np.ndarray:
    key = (id(sc), h, w)
    if key not in _EVAL_CACHE:
        mono = np.array([h**a * w**b for a, b in MONOMIALS], dtype=np.int64)
        arr = sc.coeffs @ mono
        arr.setflags(write=False)
        _EVAL_CACHE[key] = arr
    return _EVAL_CACHE[key]


@lru_cache(maxsize=None)
def compute_structure_constants() -> StructureConstants:
    """Count p_ij^k on the 3 x 3 grid of shapes and interpolate exactly."""
    V = _vandermonde()
    det = int(V.det())
    adj = np.array((V.inv() * det).tolist(), dtype=object).astype(np.int64)
    samples = np.stack(
        [structure_constants_concrete(SudokuShape(h, w)) for h in GRID for w in GRID], axis=-1
    )  # (70, 70, 70, 9)
    scaled = samples @ adj.T
    if np.any(scaled % det):
        raise RuntimeError("structure constants do not interpolate to integer polynomials")
    coeffs = scaled // det
    if np.any(coeffs @ np.array(V.T.tolist(), dtype=np.int64) != samples):
        raise RuntimeError("interpolation residual is nonzero")
    sc = StructureConstants(coeffs)
    if sc.max_degrees()[0] > 2 or sc.max_degrees()[1] > 2:
        raise RuntimeError("structure constants exceed degree 2")
    return sc


# --- algebra elements --------------------------------------------------------------

H_SYM, W_SYM = sympy.symbols("h w", positive=True, integer=True)


@dataclass(frozen=True)
class AlgebraElement:
    """Coefficients c_1..c_69 of sum_i c_i A_i.

    ``shape`` is None for symbolic elements (coefficients in Q[h, w] as
    sympy expressions); otherwise the coefficients are Fractions valid at
    that shape.
    """

    coeffs: tuple
    shape: Optional[SudokuShape] = None

    def __post_init__(self):
        if len(self.coeffs) != NUM_RELATIONS:
            raise ValueError(f"expected {NUM_RELATIONS} coefficients, got {len(self.coeffs)}")
        if self.shape is not None:
            object.__setattr__(self, "coeffs", tuple(Fraction(c) for c in self.coeffs))
        else:
            object.__setattr__(self, "coeffs", tuple(sympy.sympify(c) for c in self.coeffs))

    def __getitem__(self, rid: int):
        return self.coeffs[rid - 1]

    @classmethod
    def zero(cls, shape: Optional[SudokuShape] = None) -> "AlgebraElement":
        return cls((0,) * NUM_RELATIONS, shape)

    @classmethod
    def from_dict(cls, d: dict, shape: Optional[SudokuShape] = None) -> "AlgebraElement":
        c = [0] * NUM_RELATIONS
        for k, v in d.items():
            c[k - 1] = v
        return cls(tuple(c), shape)

    @classmethod
    def identity(cls, shape: Optional[SudokuShape] = None) -> "AlgebraElement":
        return cls.from_dict({r: 1 for r in DIAGONAL_IDS.values()}, shape)

    @classmethod
    def ones(cls, shape: Optional[SudokuShape] = None) -> "AlgebraElement":
        return cls((1,) * NUM_RELATIONS, shape)

    def _check(self, other: "AlgebraElement"):
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch: {self.shape} vs {other.shape}")

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        self._check(other)
        return AlgebraElement(tuple(a + b for a, b in zip(self.coeffs, other.coeffs)), self.shape)

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        self._check(other)
        return AlgebraElement(tuple(a - b for a, b in zip(self.coeffs, other.coeffs)), self.shape)

    def __neg__(self):
        return AlgebraElement(tuple(-a for a in self.coeffs), self.shape)

    def scale(self, s) -> "AlgebraElement":
        s = Fraction(s) if self.shape is not None else sympy.sympify(s)
        return AlgebraElement(tuple(s * a for a in self.coeffs), self.shape)

    def __mul__(self, s):
        return self.scale(s)

    __rmul__ = __mul__

    def __matmul__(self, other: "AlgebraElement") -> "AlgebraElement":
        return algebra_multiply(self, other)

    def at(self, shape: SudokuShape) -> "AlgebraElement":
        """Specialize a symbolic element to a concrete shape."""
        if self.shape is not None:
            if self.shape != shape:
                raise ValueError("element already bound to a different shape")
            return self
        subs = {H_SYM: shape.h, W_SYM: shape.w}
        vals = []
        for c in self.coeffs:
            v = sympy.nsimplify(c.subs(subs))
            vals.append(Fraction(int(v.p), int(v.q)))
        return AlgebraElement(tuple(vals), shape)

    def nonzero(self) -> dict[int, object]:
        return {i + 1: c for i, c in enumerate(self.coeffs) if c != 0}

    def export(self, fh: TextIO) -> None:
        """Write ``relation_id coefficient`` for all 69 relations (rational or symbolic)."""
        for i, c in enumerate(self.coeffs, start=1):
            fh.write(f"{i} {c if isinstance(c, Fraction) else sympy.sstr(c)}\n")


def _common_denominator(vals: Sequence[Fraction]) -> int:
    d = 1
    for v in vals:
        d = d * v.denominator // np.gcd(d, v.denominator) if v.denominator != 1 else d
    return int(d)


def algebra_multiply(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    """(a b)_k = sum_ij a_i b_j p_ij^k, exactly, at the elements' shape."""
    a._check(b)
    if a.shape is None:
        raise ValueError("multiplication needs a concrete shape; specialize with .at(shape)")
    p = compute_structure_constants().at(a.shape)[1:, 1:, 1:]
    da, db = _common_denominator(a.coeffs), _common_denominator(b.coeffs)
    ai = np.array([int(c * da) for c in a.coeffs], dtype=object)
    bi = np.array([int(c * db) for c in b.coeffs], dtype=object)
    ia, ib = np.flatnonzero(ai), np.flatnonzero(bi)
    out = [0] * NUM_RELATIONS
    for i in ia:
        for j in ib:
            col = p[i, j]
            nz = np.flatnonzero(col)
            if nz.size:
                prod = ai[i] * bi[j]
                for k in nz:
                    out[k] += prod * int(col[k])
    den = da * db
    return AlgebraElement(tuple(Fraction(v, den) for v in out), a.shape)


def element_to_matrix(a: AlgebraElement, shape: Optional[SudokuShape] = None, exact: bool = False) -> np.ndarray:
    """Dense matrix sum_i c_i A_i (float by default, Fraction objects when exact)."""
    if a.shape is None:
        if shape is None:
            raise ValueError("symbolic element needs a shape")
        a = a.at(shape)
    R = relation_ids(a.shape)
    if exact:
        table = np.array((Fraction(0),) + a.coeffs, dtype=object)
    else:
        table = np.array([0.0] + [float(c) for c in a.coeffs])
    return table[R]


def matrix_to_element(shape: SudokuShape, M: np.ndarray, check: bool = True) -> AlgebraElement:
    """Algebra coordinates of a matrix in the algebra.

    One entry per relation is sampled; with ``check`` the matrix is verified
    to be constant on every relation.
    """
    cp = canonical_pairs(shape)
    coeffs = tuple(M[x, z] for x, z in cp)
    if M.dtype != object:
        coeffs = tuple(Fraction(int(c)) if float(c).is_integer() else Fraction(c) for c in coeffs)
    el = AlgebraElement(coeffs, shape)
    if check:
        rebuilt = element_to_matrix(el, exact=M.dtype == object)
        if M.dtype == object:
            ok = bool(np.all(rebuilt == M))
        else:
            ok = np.allclose(rebuilt, M, rtol=0, atol=1e-9 * max(1.0, np.abs(M).max()))
        if not ok:
            raise ValueError("matrix is not constant on the relations")
    return el


# --- degrees and named elements -------------------------------------------------------


@lru_cache(maxsize=None)
def degree_table() -> tuple[sympy.Expr, ...]:
    """Symbolic d_1..d_69 recovered from the structure constants.

    d_i = p_{i, i^T}^{diag} where diag is the diagonal relation of i's first type.
    """
    sc = compute_structure_constants()
    first, _ = relation_types()
    tmap = transpose_map()
    out = []
    for i in range(1, NUM_RELATIONS + 1):
        diag = DIAGONAL_IDS[int(first[i])]
        out.append(sympy.factor(sc.polynomial(i, tmap[i], diag).subs(
            {sympy.Symbol("h"): H_SYM, sympy.Symbol("w"): W_SYM})))
    return tuple(out)


def degrees_at(shape: SudokuShape) -> np.ndarray:
    sc = compute_structure_constants().at(shape)
    first, _ = relation_types()
    tmap = transpose_map()
    d = np.zeros(NUM_RELATIONS + 1, dtype=np.int64)
    for i in range(1, NUM_RELATIONS + 1):
        d[i] = sc[i, tmap[i], DIAGONAL_IDS[int(first[i])]]
    return d


def element_infinity_norm(a: AlgebraElement, shape: Optional[SudokuShape] = None) -> Fraction:
    """Max over the four edge-type sections of sum_i |c_i| d_i."""
    if a.shape is None:
        if shape is None:
            raise ValueError("symbolic element needs a shape")
        a = a.at(shape)
    return max(section_norms(a).values())


def section_norms(a: AlgebraElement) -> dict[str, Fraction]:
    d = degrees_at(a.shape)
    first, _ = relation_types()
    out = {k: Fraction(0) for k in EDGE_KINDS}
    for i, c in enumerate(a.coeffs, start=1):
        out[EDGE_KINDS[int(first[i])]] += abs(c) * int(d[i])
    return out


def express_M(shape: Optional[SudokuShape] = None) -> AlgebraElement:
    """M in relation coordinates; symbolic unless a shape is given."""
    h, w = H_SYM, W_SYM
    n = h * w
    d = {1: n, 16: n, 32: n, 62: n, 46: w, 50: w, 54: h, 58: h}
    for r in (10, 13, 22, 25, 28, 30, 38, 42):
        d[r] = 1
    el = AlgebraElement.from_dict(d)
    return el if shape is None else el.at(shape)


def type_indicator(kind: int, shape: Optional[SudokuShape] = None) -> AlgebraElement:
    """Identity restricted to one edge-type section."""
    return AlgebraElement.from_dict({DIAGONAL_IDS[kind]: 1}, shape)


def export_degrees(fh: TextIO) -> None:
    for i, d in enumerate(degree_table(), start=1):
        fh.write(f"{i} {sympy.sstr(d)}\n")


def random_element(shape: SudokuShape, rng: np.random.Generator, lo: int = -5, hi: int = 6) -> AlgebraElement:
    return AlgebraElement(tuple(Fraction(int(v), int(rng.integers(1, 4)))
                                for v in rng.integers(lo, hi, NUM_RELATIONS)), shape)


def all_pairs() -> list[tuple[int, int]]:
    return list(itertools.product(range(1, NUM_RELATIONS + 1), repeat=2))
