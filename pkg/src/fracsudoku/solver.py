"""Perturbation solver for fractional completions of sparse partial Sudoku.

With A = M + eta K, the prefilled cells perturb A by
dA = dM + eta K', where dM = M - M~ (M~ has M_S in the G_S block and zeros
to its right) and K' keeps only the columns of K on deleted edges.  The
system (A - dA) x = 1 is block lower-triangular, so its restriction x' to
E(G_S) solves (M_S + eta K[S]) x' = 1, hence M_S x' = 1, and W_S^T x' gives
tile weights.  Nonnegativity is guaranteed when ||A^{-1} dA|| <= 1/2 and is
checked directly in any case.
"""

from __future__ import annotations

import io
import math
import time
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from typing import Optional, TextIO

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import maximum_bipartite_matching

from .algebra import AlgebraElement, element_infinity_norm, element_to_matrix, relation_ids
from .core import (
    EdgeId,
    FractionalAssignment,
    PartialSudoku,
    SudokuShape,
    availability_vector,
    cells_by_box,
    edge_mask,
    verify_fractional_completion,
)
from .incidence import RestrictedSystem, apply_M, build_M, build_restricted
from .spectral import generalized_inverse, inverse_operator, kernel_operator, projectors

COMPLETED = "completed"
CONTRACTION_FAILED = "contraction_failed"
NEGATIVE_SOLUTION = "negative_solution"
RESIDUAL_FAILED = "residual_failed"

DENSE_LIMIT = 25  # n up to which 4n^2 x 4n^2 operators are materialized


@dataclass(frozen=True)
class SolveOptions:
    eta: Optional[Fraction] = None  # default 2n/3
    method: str = "neumann"  # neumann | direct
    max_terms: int = 10_000
    tol: float = 1e-8
    neg_tol: float = 1e-10
    arith: str = "float"  # float | rational
    precheck: bool = True
    kernel_rows: str = "all"  # all: K'; edges: K'' (rows off G_S zeroed)
    max_rational_n: int = 12

    def __post_init__(self):
        if self.method not in ("neumann", "direct"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.arith not in ("float", "rational"):
            raise ValueError(f"unknown arithmetic {self.arith!r}")
        if self.arith == "float" and not self.tol > 0:
            raise ValueError("tolerance must be positive in float mode")
        if self.arith == "rational" and self.method == "neumann":
            raise ValueError("rational arithmetic requires method='direct'")
        if self.kernel_rows not in ("all", "edges"):
            raise ValueError(f"unknown kernel_rows {self.kernel_rows!r}")
        if self.eta is not None and Fraction(self.eta) <= 0:
            raise ValueError("eta must be positive")

    def eta_for(self, shape: SudokuShape) -> Fraction:
        return Fraction(2 * shape.n, 3) if self.eta is None else Fraction(self.eta)


@dataclass
class SolveOutcome:
    status: str
    S: PartialSudoku
    edges: np.ndarray
    tiles: np.ndarray
    edge_weights: Optional[np.ndarray]
    tile_weights: Optional[np.ndarray]
    assignment: Optional[FractionalAssignment]
    diagnostics: dict = field(default_factory=dict)
    certificate: Optional[str] = None
    options: SolveOptions = field(default_factory=SolveOptions)

    @property
    def completed(self) -> bool:
        return self.status == COMPLETED


# --- shape-level data --------------------------------------------------------------------


@lru_cache(maxsize=8)
def _dense_ops(shape: SudokuShape, x: Fraction) -> tuple[np.ndarray, np.ndarray]:
    Ainv = element_to_matrix(generalized_inverse(shape, x))
    K = element_to_matrix(projectors(shape).K)
    return Ainv, K


@lru_cache(maxsize=8)
def _kernel_scaled(shape: SudokuShape) -> tuple[np.ndarray, int]:
    """Integer table D * |c_i| (index = relation id) and the common denominator D."""
    K = projectors(shape).K
    D = 1
    for c in K.coeffs:
        D = D * c.denominator // math.gcd(D, c.denominator)
    table = np.array([0] + [abs(int(c * D)) for c in K.coeffs], dtype=np.int64)
    return table, D


def a_inverse_norm_exact(shape: SudokuShape, eta: Fraction) -> Fraction:
    return element_infinity_norm(generalized_inverse(shape, Fraction(shape.n) / eta))


# --- perturbation ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Perturbation:
    S: PartialSudoku
    mask: np.ndarray
    delta_M: np.ndarray
    K_prime: np.ndarray
    eta: Fraction

    @property
    def delta_A(self) -> np.ndarray:
        return self.delta_M + float(self.eta) * self.K_prime


def build_delta_M(S: PartialSudoku, restricted: Optional[RestrictedSystem] = None,
                  M: Optional[np.ndarray] = None) -> np.ndarray:
    """Dense dM = M - M~ (int64).  ``M`` overrides the reference matrix."""
    if M is None:
        M = build_M(S.shape)
    rs = restricted or build_restricted(S)
    mask = np.zeros(M.shape[0], dtype=bool)
    mask[rs.edges] = True
    dM = np.array(M, dtype=np.int64, copy=True)
    dM[~mask] = 0
    dM[np.ix_(rs.edges, rs.edges)] -= rs.M_S.toarray()
    return dM


def build_K_prime(S: PartialSudoku, kernel_rows: str = "all", exact: bool = False) -> np.ndarray:
    """K with columns on E(G_S) zeroed; with ``kernel_rows="edges"`` also rows off E(G_S)."""
    mask = edge_mask(S)
    K = element_to_matrix(projectors(S.shape).K, exact=exact)
    Kp = K.copy()
    Kp[:, mask] = 0
    if kernel_rows == "edges":
        Kp[~mask] = 0
    return Kp


def build_perturbation(S: PartialSudoku, eta=None, kernel_rows: str = "all") -> Perturbation:
    eta = Fraction(2 * S.n, 3) if eta is None else Fraction(eta)
    return Perturbation(S, edge_mask(S), build_delta_M(S), build_K_prime(S, kernel_rows), eta)


def k_prime_norm_exact(S: PartialSudoku, kernel_rows: str = "all",
                       mask: Optional[np.ndarray] = None) -> Fraction:
    """||K'||_inf (or ||K''||_inf) exactly, from the relation coefficients of K."""
    if mask is None:
        mask = edge_mask(S)
    deleted = np.flatnonzero(~mask)
    if deleted.size == 0:
        return Fraction(0)
    table, D = _kernel_scaled(S.shape)
    R = relation_ids(S.shape)
    rows = np.flatnonzero(mask) if kernel_rows == "edges" else np.arange(len(mask))
    if rows.size == 0:
        return Fraction(0)
    sums = table[R[np.ix_(rows, deleted)]].sum(axis=1)
    return Fraction(int(sums.max()), D)


def delta_M_norm_exact(S: PartialSudoku, mask: Optional[np.ndarray] = None) -> int:
    """||dM||_inf = 4 max_e u(e) (dM is nonnegative with row sums 4u)."""
    if mask is None:
        mask = edge_mask(S)
    u = availability_vector(S, mask)
    return 4 * int(u[mask].max(initial=0))


@dataclass(frozen=True)
class ContractionBound:
    a_inv_norm: Fraction
    delta_M_norm: Fraction
    k_prime_norm: Fraction

    @property
    def value(self) -> Fraction:
        return self.a_inv_norm * self.delta_M_norm + self.k_prime_norm

    def __float__(self):
        return float(self.value)


def contraction_bound(S: PartialSudoku, eta=None, kernel_rows: str = "all") -> ContractionBound:
    """Exact upper bound ||A^{-1}|| ||dM|| + ||K'|| on ||A^{-1} dA||_inf."""
    eta = Fraction(2 * S.n, 3) if eta is None else Fraction(eta)
    mask = edge_mask(S)
    return ContractionBound(
        a_inverse_norm_exact(S.shape, eta),
        Fraction(delta_M_norm_exact(S, mask)),
        k_prime_norm_exact(S, kernel_rows, mask),
    )


# --- infeasibility evidence -------------------------------------------------------------------


def zero_availability_edges(S: PartialSudoku) -> list[EdgeId]:
    mask = edge_mask(S)
    u = availability_vector(S, mask)
    n = S.n
    return [EdgeId.from_index(e, n) for e in np.flatnonzero(mask & (u == n))]


def hall_obstruction(S: PartialSudoku) -> Optional[str]:
    """Search rows, columns and boxes for a Hall violation among available placements.

    Returns a human-readable certificate or None.  A violation rules out any
    fractional completion, since each unit must carry a fractional perfect
    matching between its empty cells and missing symbols.
    """
    n = S.n
    grid = S.grid()
    boxes = S.box_grid
    mask = edge_mask(S)
    from .core import available_tile_mask

    avail = available_tile_mask(S, mask).reshape(n, n, n)
    units = [("row", i + 1, [(i, j) for j in range(n)]) for i in range(n)]
    units += [("column", j + 1, [(i, j) for i in range(n)]) for j in range(n)]
    units += [("box", b + 1, cells) for b, cells in enumerate(cells_by_box(boxes))]
    for name, idx, cells in units:
        empty = [c for c in cells if grid[c] == 0]
        present = {int(grid[c]) - 1 for c in cells if grid[c] > 0}
        missing = [k for k in range(n) if k not in present]
        if not empty:
            continue
        adj = np.array([[avail[i, j, k] for (i, j) in empty] for k in missing], dtype=np.int8)
        match = maximum_bipartite_matching(sp.csr_matrix(adj), perm_type="column")
        unmatched = np.flatnonzero(match < 0)
        if unmatched.size == 0:
            continue
        # alternating search from an unmatched symbol (Konig)
        cell_match = {int(c): s for s, c in enumerate(match) if c >= 0}
        X, Y, frontier = {int(unmatched[0])}, set(), [int(unmatched[0])]
        while frontier:
            s = frontier.pop()
            for c in np.flatnonzero(adj[s]):
                c = int(c)
                if c not in Y:
                    Y.add(c)
                    if c in cell_match and cell_match[c] not in X:
                        X.add(cell_match[c])
                        frontier.append(cell_match[c])
        syms = sorted(missing[s] + 1 for s in X)
        cl = sorted((empty[c][0] + 1, empty[c][1] + 1) for c in Y)
        cells_txt = ", ".join(f"({a},{b})" for a, b in cl) or "none"
        return f"{name} {idx}: symbols {syms} can only use cells [{cells_txt}]"
    return None


# --- solve ---------------------------------------------------------------------------------------


def _restricted_kernel_matvec(shape, edges, mask, eta, K_dense):
    n4 = 4 * shape.n**2
    if K_dense is not None:
        KS = K_dense[np.ix_(edges, edges)]
        return lambda v: float(eta) * (KS @ v)
    Kop = kernel_operator(shape)

    def mv(v):
        full = np.zeros(n4)
        full[edges] = v
        return float(eta) * Kop(full)[edges]

    return mv


def _neumann(shape, rs: RestrictedSystem, mask, eta, opts, dense, K_dense, Ainv_dense, M_dense,
             kernel_rows: str):
    """x = sum_k (A^{-1} dA)^k A^{-1} 1; returns (x, terms) or (None, terms) on divergence/cap."""
    n = shape.n
    n4 = 4 * n * n
    edges = rs.edges
    eta_f = float(eta)
    if dense:
        dA = np.array(M_dense, dtype=float)
        dA[~mask] = 0
        dA[np.ix_(edges, edges)] -= rs.M_S.toarray()
        Kp = K_dense.copy()
        Kp[:, mask] = 0
        if kernel_rows == "edges":
            Kp[~mask] = 0
        T = Ainv_dense @ (dA + eta_f * Kp)
        step = lambda v: T @ v  # noqa: E731
    else:
        Ainv = inverse_operator(shape, Fraction(n) / eta)
        Kop = kernel_operator(shape)

        def step(v):
            Mv = apply_M(shape, v)
            out = np.where(mask, Mv, 0.0)
            out[edges] -= rs.M_S @ v[edges]
            kv = Kop(np.where(mask, 0.0, v))
            if kernel_rows == "edges":
                kv = np.where(mask, kv, 0.0)
            return Ainv(out + eta_f * kv)

    term = np.full(n4, 1.0 / (4 * n))
    x = term.copy()
    first = np.abs(term).max()
    for k in range(1, opts.max_terms + 1):
        term = step(term)
        tn = np.abs(term).max()
        x += term
        if tn < opts.tol * np.abs(x).max() * 1e-3:
            return x, k
        if not np.isfinite(tn) or tn > 1e8 * first:
            return None, k
    return None, opts.max_terms


def _direct_float(shape, rs, eta, dense, K_dense, opts):
    edges = rs.edges
    if dense:
        B = rs.M_S.toarray() + float(eta) * K_dense[np.ix_(edges, edges)]
        rhs = np.ones(len(edges))
        try:
            x = np.linalg.solve(B, rhs)
            how = "dense"
        except np.linalg.LinAlgError:
            x = None
        # a singular shifted matrix still gives unique tile weights when the
        # system is consistent, so fall back to least squares
        if x is None or not np.all(np.isfinite(x)) or np.abs(B @ x - rhs).max() > opts.tol:
            x = np.linalg.lstsq(B, rhs, rcond=None)[0]
            how = "lstsq"
            if np.abs(B @ x - rhs).max() > opts.tol:
                return None, "inconsistent"
        return x, how
    kmv = _restricted_kernel_matvec(shape, edges, None, eta, None)
    op = spla.LinearOperator((len(edges),) * 2, matvec=lambda v: rs.M_S @ v + kmv(v), dtype=float)
    x, info = spla.cg(op, np.ones(len(edges)), rtol=opts.tol * 1e-3, maxiter=20_000)
    if info != 0:
        return None, f"cg info {info}"
    return x, "cg"


def _direct_rational(S: PartialSudoku, rs: RestrictedSystem, eta: Fraction):
    import flint

    edges = rs.edges
    K = element_to_matrix(projectors(S.shape).K, exact=True)[np.ix_(edges, edges)]
    MS = rs.M_S.toarray()
    rows = [[flint.fmpq(int(MS[a, b])) + flint.fmpq(eta.numerator, eta.denominator)
             * flint.fmpq(K[a, b].numerator, K[a, b].denominator)
             for b in range(len(edges))] for a in range(len(edges))]
    m = len(edges)
    B = flint.fmpq_mat(rows)
    rhs = flint.fmpq_mat([[1] for _ in edges])
    try:
        sol = B.solve(rhs)
        return np.array([Fraction(int(sol[a, 0].p), int(sol[a, 0].q)) for a in range(m)], dtype=object)
    except ZeroDivisionError:
        pass
    # singular: particular solution from the reduced echelon form (free variables 0)
    aug = flint.fmpq_mat([row + [flint.fmpq(1)] for row in rows])
    R, rank = aug.rref()
    x = [Fraction(0)] * m
    for r in range(rank):
        piv = next(c for c in range(m + 1) if R[r, c] != 0)
        if piv == m:
            return None  # inconsistent
        v = R[r, m]
        x[piv] = Fraction(int(v.p), int(v.q))
    return np.array(x, dtype=object)


def _assignment(S: PartialSudoku, tiles: np.ndarray, y: np.ndarray, exact: bool) -> FractionalAssignment:
    n = S.n
    W = np.full(n**3, Fraction(0), dtype=object) if exact else np.zeros(n**3)
    W[tiles] = y
    for (i, j), k in S.entries.items():
        W[((i - 1) * n + (j - 1)) * n + (k - 1)] = Fraction(1) if exact else 1.0
    return FractionalAssignment(S.shape, W.reshape(n, n, n))


def solve(S: PartialSudoku, opts: Optional[SolveOptions] = None, *,
          reference_M: Optional[np.ndarray] = None) -> SolveOutcome:
    """Run the perturbation pipeline on S.

    ``reference_M`` replaces M when forming dM (used for polyomino boxes,
    where the unperturbed operator stays rectangular).
    """
    opts = opts or SolveOptions()
    shape, n = S.shape, S.n
    if opts.arith == "rational" and n > opts.max_rational_n:
        raise ValueError(f"rational arithmetic is limited to n <= {opts.max_rational_n}")
    t0 = time.perf_counter()
    eta = opts.eta_for(shape)
    mask = edge_mask(S)
    rs = build_restricted(S)
    diag: dict = {"eta": eta, "method": opts.method, "arith": opts.arith,
                  "edges": len(rs.edges), "tiles": len(rs.tiles)}
    out = SolveOutcome(CONTRACTION_FAILED, S, rs.edges, rs.tiles, None, None, None, diag, None, opts)

    if len(rs.edges) == 0:
        out.status = COMPLETED
        out.assignment = _assignment(S, rs.tiles, np.zeros(0), opts.arith == "rational")
        out.edge_weights = np.zeros(0)
        out.tile_weights = np.zeros(0)
        diag.update(max_residual=0.0, min_tile_weight=None, neumann_terms=0)
        return out

    if opts.precheck:
        zero = zero_availability_edges(S)
        if zero:
            out.status = RESIDUAL_FAILED
            out.certificate = f"edge {zero[0]}: zero available tiles"
            diag["zero_availability_edges"] = len(zero)
            diag["seconds"] = time.perf_counter() - t0
            return out

    rect = reference_M is None and S.boxes is None
    if rect:
        cb = contraction_bound(S, eta, opts.kernel_rows)
        diag.update(a_inv_norm=cb.a_inv_norm, delta_M_norm=cb.delta_M_norm,
                    k_prime_norm=cb.k_prime_norm, bound=cb.value)
        bound = cb.value
    else:
        M_ref = reference_M if reference_M is not None else build_M(shape)
        dM = np.array(M_ref, dtype=np.int64)
        dM[~mask] = 0
        dM[np.ix_(rs.edges, rs.edges)] -= rs.M_S.toarray()
        dm_norm = Fraction(int(np.abs(dM).sum(axis=1).max()))
        a_norm = a_inverse_norm_exact(shape, eta)
        kp = k_prime_norm_exact(S if S.boxes is None else PartialSudoku(shape, {}), opts.kernel_rows, mask)
        bound = a_norm * dm_norm + kp
        diag.update(a_inv_norm=a_norm, delta_M_norm=dm_norm, k_prime_norm=kp, bound=bound)

    dense = n <= DENSE_LIMIT
    x_S = None
    exact = opts.arith == "rational"
    if exact:
        x_S = _direct_rational(S, rs, eta)
        diag["solver"] = "rational"
    else:
        K_dense = Ainv_dense = None
        if dense:
            Ainv_dense, K_dense = _dense_ops(shape, Fraction(n) / eta)
        if opts.method == "neumann":
            # the series may converge even when the rigorous bound is >= 1;
            # divergence or the term cap triggers the direct fallback
            M_dense = (reference_M if reference_M is not None else build_M(shape)) if dense else None
            if reference_M is not None and not dense:
                raise ValueError("polyomino solves need n <= %d" % DENSE_LIMIT)
            x, terms = _neumann(shape, rs, mask, eta, opts, dense, K_dense, Ainv_dense, M_dense,
                                opts.kernel_rows)
            diag["neumann_terms"] = terms
            if x is not None:
                x_S = x[rs.edges]
                diag["solver"] = "neumann"
        if x_S is None:
            if opts.method == "neumann":
                diag["fallback"] = "direct"
            x_S, how = _direct_float(shape, rs, eta, dense, K_dense, opts)
            diag["solver"] = f"direct-{how}"
    if x_S is None:
        out.status = CONTRACTION_FAILED
        out.certificate = hall_obstruction(S)
        diag["seconds"] = time.perf_counter() - t0
        return out

    if exact:
        pos = np.full(4 * n * n, -1)
        pos[rs.edges] = np.arange(len(rs.edges))
        te = pos[S.tile_edges()[rs.tiles]]
        y = x_S[te].sum(axis=1)
        sums = np.array([Fraction(0)] * len(rs.edges), dtype=object)
        np.add.at(sums, te.ravel(), np.repeat(y, 4))
        residual = sums - Fraction(1)
    else:
        y = rs.W_S.T @ x_S
        residual = rs.W_S @ y - 1.0
    max_res = max(abs(r) for r in residual) if len(residual) else 0
    min_w = min(y) if len(y) else None
    out.edge_weights, out.tile_weights = x_S, y
    out.assignment = _assignment(S, rs.tiles, y, exact)
    diag.update(max_residual=max_res, min_tile_weight=min_w, min_edge_weight=min(x_S))
    tol = 0 if exact else opts.tol
    if min_w is not None and min_w < -(0 if exact else opts.neg_tol):
        out.status = NEGATIVE_SOLUTION
        t = rs.tiles[int(np.argmin(np.asarray(y, dtype=float)))]
        ij, k = divmod(int(t), n)
        i, j = divmod(ij, n)
        out.certificate = (f"tile ({i + 1},{j + 1},{k + 1}) has weight {float(min_w):.6g} < 0")
        hall = hall_obstruction(S)
        if hall:
            out.certificate += f"; {hall}"
    elif max_res > tol:
        out.status = RESIDUAL_FAILED
        out.certificate = f"marginal residual {float(max_res):.3g} exceeds tolerance"
    else:
        ok, bad = verify_fractional_completion(S, out.assignment, tol=max(tol, opts.neg_tol))
        out.status = COMPLETED if ok else RESIDUAL_FAILED
        if not ok:
            out.certificate = bad[0]
    diag["seconds"] = time.perf_counter() - t0
    return out


# --- certification ---------------------------------------------------------------------------------


@dataclass(frozen=True)
class Certificate:
    ok: bool
    violations: tuple[str, ...]
    max_deviation: float
    min_weight: float

    def lines(self) -> list[str]:
        out = [f"certified: {'yes' if self.ok else 'no'}",
               f"max_deviation: {self.max_deviation:.3g}",
               f"min_weight: {self.min_weight:.12g}"]
        out += [f"violation: {v}" for v in self.violations[:20]]
        return out


def certify(S: PartialSudoku, f: FractionalAssignment, tol: float = 1e-8,
            neg_tol: float = 1e-10) -> Certificate:
    """Independent check of a candidate fractional completion of S.

    Edge sums are recomputed from the tile weights over G_S, unavailable
    tiles must carry no weight, and the marginal conditions are re-verified.
    """
    n = S.n
    Wt = f.weights.reshape(-1)
    exact = Wt.dtype == object
    te = S.tile_edges()
    mask = edge_mask(S)
    from .core import available_tile_mask

    avail = available_tile_mask(S, mask)
    filled = np.zeros(n**3, dtype=bool)
    for (i, j), k in S.entries.items():
        filled[((i - 1) * n + (j - 1)) * n + (k - 1)] = True
    bad: list[str] = []
    stray = np.flatnonzero(~avail & ~filled & (np.asarray(Wt != 0)))
    for t in stray[:5]:
        ij, k = divmod(int(t), n)
        bad.append(f"unavailable tile ({ij // n + 1},{ij % n + 1},{k + 1}) has weight {float(Wt[t]):.6g}")
    wf = np.asarray(Wt, dtype=float)
    min_w = float(wf[avail].min()) if avail.any() else 0.0
    neg = np.flatnonzero(avail & (wf < -neg_tol))
    for t in neg[:5]:
        ij, k = divmod(int(t), n)
        bad.append(f"tile ({ij // n + 1},{ij % n + 1},{k + 1}) has negative weight {wf[t]:.6g}")
    if exact:
        sums = [Fraction(0)] * (4 * n * n)
        for t in np.flatnonzero(avail):
            for e in te[t]:
                sums[e] += Wt[t]
        dev = [abs(sums[e] - 1) for e in np.flatnonzero(mask)]
        max_dev = float(max(dev, default=0))
        worst = [e for e in np.flatnonzero(mask) if sums[e] != 1]
    else:
        sums = np.bincount(te[avail].ravel(), weights=np.repeat(wf[avail], 4), minlength=4 * n * n)
        dev_arr = np.abs(sums[mask] - 1)
        max_dev = float(dev_arr.max(initial=0))
        worst = list(np.flatnonzero(mask)[dev_arr > tol])
    for e in worst[:5]:
        bad.append(f"edge {EdgeId.from_index(e, n)} sums to {float(sums[e]):.12g}")
    ok_marg, marg = verify_fractional_completion(S, f, tol=tol)
    if not ok_marg:
        bad.extend(marg[:5])
    return Certificate(not bad, tuple(bad), max_dev, min_w)


def certify_outcome(out: SolveOutcome) -> Certificate:
    if out.assignment is None:
        return Certificate(False, (f"no solution ({out.status})",), math.inf, math.nan)
    return certify(out.S, out.assignment, out.options.tol, out.options.neg_tol)


# --- solution files -----------------------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, Fraction):
        return f"{v} ({float(v):.12g})"
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def diagnostics_lines(out: SolveOutcome) -> list[str]:
    keys = ["status", "certificate"]
    lines = [f"status: {out.status}"]
    if out.certificate:
        lines.append(f"certificate: {out.certificate}")
    for k, v in out.diagnostics.items():
        if k not in keys and v is not None:
            lines.append(f"{k}: {_fmt(v)}")
    return lines


def write_solution(out: SolveOutcome, fh: TextIO) -> int:
    """Header of key: value lines, then one ``i j k weight`` record per positive weight."""
    S = out.S
    fh.write(f"shape: {S.shape.h} {S.shape.w}\n")
    for line in diagnostics_lines(out):
        fh.write(line + "\n")
    if out.assignment is None:
        fh.write("records: 0\n")
        return 0
    W = out.assignment.weights
    n = S.n
    recs = []
    for i in range(n):
        for j in range(n):
            for k in range(n):
                v = W[i, j, k]
                if float(v) > 0:
                    recs.append(f"{i + 1} {j + 1} {k + 1} {float(v):.12g}")
    fh.write(f"records: {len(recs)}\n")
    fh.write("\n".join(recs) + ("\n" if recs else ""))
    return len(recs)


def solution_text(out: SolveOutcome) -> str:
    buf = io.StringIO()
    write_solution(out, buf)
    return buf.getvalue()


def read_solution(text: str) -> tuple[SudokuShape, FractionalAssignment, dict]:
    lines = text.splitlines()
    header: dict = {}
    pos = 0
    while pos < len(lines):
        line = lines[pos]
        pos += 1
        key, sep, val = line.partition(":")
        if not sep:
            raise ValueError(f"solution line {pos}: expected 'key: value'")
        header[key.strip()] = val.strip()
        if key.strip() == "records":
            break
    if "shape" not in header or "records" not in header:
        raise ValueError("solution file lacks a shape or records header")
    h, w = (int(t) for t in header["shape"].split())
    shape = SudokuShape(h, w)
    n = shape.n
    count = int(header["records"])
    W = np.zeros((n, n, n))
    for r in range(count):
        if pos + r >= len(lines):
            raise ValueError(f"expected {count} records, found {r}")
        fields = lines[pos + r].split()
        if len(fields) != 4:
            raise ValueError(f"record {r + 1}: expected 'i j k weight'")
        i, j, k = (int(t) for t in fields[:3])
        if not all(1 <= v <= n for v in (i, j, k)):
            raise ValueError(f"record {r + 1}: index outside [1,{n}]")
        W[i - 1, j - 1, k - 1] = float(fields[3])
    return shape, FractionalAssignment(shape, W), header


def with_options(opts: SolveOptions, **kw) -> SolveOptions:
    return replace(opts, **kw)
