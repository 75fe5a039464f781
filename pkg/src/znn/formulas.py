"""Look-ahead finite difference formulas of type ``j_s``.

A formula of type ``j_s`` uses the ``j + s`` equidistant instances
``x_{k+1}, x_k, x_{k-1}, ..., x_{k-l}`` (``l = j + s - 2``) to express the
derivative at ``t_k``::

    D * tau * xdot_k = sum_i w_i * x_{inst_i} - (sum_i w_i) * x_k

where the weights ``w`` (one per non-central instance) annihilate the
Taylor terms of orders ``2..j``.  Solving for ``x_{k+1}`` gives the
recursion used by the ZNN engine::

    x_{k+1} = taucoeff * tau * xdot_k + sum_i polyrest_i * x_{k+1-i}

The weights are parametrised by a seed vector ``y`` of length ``s``
through an exact rational kernel map, and convergent formulas are found
by a randomized Nelder-Mead search over seeds.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize

__all__ = [
    "FormulaType",
    "TaylorMatrix",
    "KernelMap",
    "DifferenceFormula",
    "ConvergenceReport",
    "SearchConfig",
    "RankDeficient",
    "DegenerateFormula",
    "FormulaNotFound",
    "FormulaNotPresent",
    "build_taylor_matrix",
    "kernel_parametrization",
    "formula_from_weights",
    "formula_from_recursion",
    "is_convergent",
    "discover_formula",
    "stability_bound",
    "catalog",
    "lookup",
    "read_catalog",
    "write_catalog",
    "append_catalog",
]


class RankDeficient(ArithmeticError):
    """The Taylor matrix does not have full column rank."""


class DegenerateFormula(ValueError):
    """The weights cannot be turned into a look-ahead recursion."""


class FormulaNotFound(LookupError):
    """Discovery exhausted its seed budget.

    ``best`` holds the candidate with the smallest spectral radius seen
    (or None when no candidate could be evaluated).
    """

    def __init__(self, ftype, best=None, best_radius=math.inf, seeds=0):
        self.ftype = ftype
        self.best = best
        self.best_radius = best_radius
        self.seeds = seeds
        super().__init__(
            f"no convergent formula of type {ftype} after {seeds} seeds "
            f"(best parasitic root modulus {best_radius:.6g})"
        )


class FormulaNotPresent(KeyError):
    pass


@dataclass(frozen=True, order=True)
class FormulaType:
    j: int
    s: int

    def __post_init__(self):
        if not (isinstance(self.j, int) and isinstance(self.s, int)):
            raise TypeError("j and s must be integers")
        if self.j < 1 or self.s < 1:
            raise ValueError(f"formula type needs j >= 1 and s >= 1, got {self.j}_{self.s}")

    @classmethod
    def parse(cls, text: str | "FormulaType") -> "FormulaType":
        if isinstance(text, FormulaType):
            return text
        try:
            j, s = (int(p) for p in str(text).strip().split("_"))
        except ValueError:
            raise ValueError(f"cannot parse formula type {text!r}; expected 'j_s'") from None
        return cls(j, s)

    @property
    def instances(self) -> int:
        return self.j + self.s

    @property
    def r(self) -> int:
        """Number of Taylor expansions (instances other than x_k)."""
        return self.j + self.s - 1

    @property
    def offsets(self) -> tuple[int, ...]:
        """Grid offsets of the expanded instances relative to ``t_k``."""
        return (1,) + tuple(-i for i in range(1, self.r))

    def __str__(self) -> str:
        return f"{self.j}_{self.s}"


@dataclass(frozen=True)
class TaylorMatrix:
    """Exact rational Taylor coefficients ``c**p / p!``.

    Rows follow ``ftype.offsets``, columns the derivative orders in
    ``orders`` (``2..j`` unless extra orders were requested).
    """

    ftype: FormulaType
    orders: tuple[int, ...]
    entries: tuple[tuple[Fraction, ...], ...]

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.entries), len(self.orders))

    def to_array(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.entries]).reshape(self.shape)

    def annihilates(self, w: Sequence) -> bool:
        """Exact check of ``w . A == 0`` for rational weights."""
        return all(
            sum(Fraction(wi) * row[p] for wi, row in zip(w, self.entries)) == 0
            for p in range(len(self.orders))
        )


def build_taylor_matrix(ftype: FormulaType | str, extra_orders: int = 0) -> TaylorMatrix:
    """Rational Taylor matrix of a formula type.

    ``extra_orders`` appends the columns for orders ``j+1, ..., j+extra``;
    formulas in the kernel of the enlarged matrix are still of type
    ``j_s`` but have a higher order of consistency.
    """
    ftype = FormulaType.parse(ftype)
    if extra_orders < 0:
        raise ValueError("extra_orders must be non-negative")
    orders = tuple(range(2, ftype.j + 1 + extra_orders))
    entries = tuple(
        tuple(Fraction(c) ** p / math.factorial(p) for p in orders) for c in ftype.offsets
    )
    return TaylorMatrix(ftype, orders, entries)


def _rref(rows: list[list[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    m = [list(r) for r in rows]
    pivots = []
    lead = 0
    ncols = len(m[0]) if m else 0
    for col in range(ncols):
        piv = next((i for i in range(lead, len(m)) if m[i][col] != 0), None)
        if piv is None:
            continue
        m[lead], m[piv] = m[piv], m[lead]
        pv = m[lead][col]
        m[lead] = [v / pv for v in m[lead]]
        for i in range(len(m)):
            if i != lead and m[i][col] != 0:
                f = m[i][col]
                m[i] = [a - f * b for a, b in zip(m[i], m[lead])]
        pivots.append(col)
        lead += 1
        if lead == len(m):
            break
    return m, pivots


@dataclass(frozen=True)
class KernelMap:
    """Seed-to-weights map ``y -> w = [-R y; y]`` with ``w . A = 0``."""

    ftype: FormulaType
    R: tuple[tuple[Fraction, ...], ...]
    seed_dim: int
    extra_orders: int = 0
    _Rf: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        Rf = np.array([[float(v) for v in row] for row in self.R], dtype=float)
        object.__setattr__(self, "_Rf", Rf.reshape(len(self.R), self.seed_dim))

    def extend(self, y: Sequence[float]) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if y.shape != (self.seed_dim,):
            raise ValueError(f"seed must have length {self.seed_dim}")
        return np.concatenate([-self._Rf @ y, y])

    def extend_exact(self, y: Sequence) -> tuple[Fraction, ...]:
        y = [Fraction(v) for v in y]
        if len(y) != self.seed_dim:
            raise ValueError(f"seed must have length {self.seed_dim}")
        u = [-sum((a * b for a, b in zip(row, y)), Fraction(0)) for row in self.R]
        return tuple(u + y)


def kernel_parametrization(tm: TaylorMatrix) -> KernelMap:
    rows, cols = tm.shape
    if rows <= cols:
        raise RankDeficient(f"Taylor matrix {rows}x{cols} has no nontrivial left kernel")
    if cols == 0:
        return KernelMap(tm.ftype, tuple(), rows, 0)
    transposed = [[tm.entries[i][p] for i in range(rows)] for p in range(cols)]
    reduced, pivots = _rref(transposed)
    if len(pivots) < cols:
        raise RankDeficient(f"Taylor matrix for {tm.ftype} has rank {len(pivots)} < {cols}")
    if pivots != list(range(cols)):
        # leading block is a scaled Vandermonde matrix and always invertible
        raise RankDeficient(f"unexpected pivot pattern {pivots} for {tm.ftype}")
    R = tuple(tuple(reduced[p][cols:]) for p in range(cols))
    extra = len(tm.orders) - (tm.ftype.j - 1)
    return KernelMap(tm.ftype, R, rows - cols, extra)


@dataclass(frozen=True)
class DifferenceFormula:
    """A look-ahead difference formula in derivative and recursion form.

    ``weights`` are normalised so that the weight on ``x_{k+1}`` is one.
    ``charpoly`` lists the monic characteristic polynomial coefficients,
    highest degree first.
    """

    ftype: FormulaType
    weights: tuple[float, ...]
    derivative_denominator: float
    taucoeff: float
    polyrest: tuple[float, ...]
    charpoly: tuple[float, ...]
    truncation_order: int
    exact_weights: tuple[Fraction, ...] | None = None
    name: str | None = None
    default_h: float | None = None

    @property
    def label(self) -> str:
        return self.name or str(self.ftype)

    @property
    def history_length(self) -> int:
        """Iterates the recursion consumes (``x_k`` back to ``x_{k-l}``)."""
        return len(self.polyrest)

    @property
    def roots(self) -> np.ndarray:
        return np.roots(self.charpoly)

    def consistency_order(self, tol: float = 1e-10) -> int:
        """Highest order P such that the Taylor terms 2..P all cancel."""
        c = np.array(self.ftype.offsets, dtype=float)
        w = np.asarray(self.weights)
        p = 1
        scale = np.abs(w).sum()
        while p < 64:
            moment = float(np.dot(w, c ** (p + 1)))
            ref = float(np.dot(np.abs(w), np.abs(c) ** (p + 1)))
            if abs(moment) > tol * max(ref, scale):
                break
            p += 1
        return p

    def derivative(self, values: Sequence, tau: float) -> np.ndarray:
        """Apply the derivative form to ``[x_{k+1}, x_k, x_{k-1}, ...]``."""
        values = [np.asarray(v) for v in values]
        if len(values) != self.ftype.instances:
            raise ValueError(f"need {self.ftype.instances} values, got {len(values)}")
        w = self.weights
        acc = w[0] * values[0] - sum(w) * values[1]
        for wi, v in zip(w[1:], values[2:]):
            acc = acc + wi * v
        return acc / (self.derivative_denominator * tau)

    def step(self, history: Sequence[np.ndarray], rate: np.ndarray, tau: float) -> np.ndarray:
        """One recursion step; ``history`` is newest first (``x_k`` first)."""
        out = (self.taucoeff * tau) * rate
        for coef, x in zip(self.polyrest, history):
            out = out + coef * x
        return out

    def stability_bound(self, eps: float = 1e-9) -> float:
        return stability_bound(self, eps=eps)


def _as_weights(w) -> tuple[list, bool]:
    items = list(w)
    exact = all(isinstance(v, (int, Fraction)) and not isinstance(v, bool) for v in items)
    if exact:
        return [Fraction(v) for v in items], True
    return [float(v) for v in items], False


def formula_from_weights(
    w: Sequence,
    ftype: FormulaType | str,
    *,
    tol: float = 1e-12,
    name: str | None = None,
    default_h: float | None = None,
) -> DifferenceFormula:
    """Build the derivative/recursion pair from instance weights.

    ``w`` holds one weight per instance ``x_{k+1}, x_{k-1}, ..., x_{k-l}``
    (any scale).  Integer or Fraction weights are handled exactly.
    """
    ftype = FormulaType.parse(ftype)
    weights, exact = _as_weights(w)
    if len(weights) != ftype.r:
        raise ValueError(f"type {ftype} needs {ftype.r} weights, got {len(weights)}")
    tm = build_taylor_matrix(ftype)
    offsets = ftype.offsets
    if exact:
        if not tm.annihilates(weights):
            raise DegenerateFormula("weights are not in the left kernel of the Taylor matrix")
        D = sum(wi * c for wi, c in zip(weights, offsets))
        if D == 0:
            raise DegenerateFormula("derivative denominator vanishes")
        if weights[0] == 0:
            raise DegenerateFormula("weight on x_{k+1} vanishes")
        norm = [wi / weights[0] for wi in weights]
        total = sum(norm)
        taucoeff = D / weights[0]
        polyrest = [total] + [-wi for wi in norm[1:]]
        return DifferenceFormula(
            ftype=ftype,
            weights=tuple(float(v) for v in norm),
            derivative_denominator=float(taucoeff),
            taucoeff=float(taucoeff),
            polyrest=tuple(float(v) for v in polyrest),
            charpoly=(1.0,) + tuple(float(-v) for v in polyrest),
            truncation_order=ftype.j + 2,
            exact_weights=tuple(norm),
            name=name,
            default_h=default_h,
        )

    wv = np.array(weights)
    scale = np.abs(wv).sum()
    if scale == 0:
        raise DegenerateFormula("zero weight vector")
    if tm.shape[1]:
        A = tm.to_array()
        if np.max(np.abs(wv @ A)) > tol * scale * max(1.0, np.abs(A).max()):
            raise DegenerateFormula("weights are not in the left kernel of the Taylor matrix")
    D = float(np.dot(wv, offsets))
    if abs(D) <= tol * scale:
        raise DegenerateFormula("derivative denominator vanishes")
    if abs(wv[0]) <= tol * scale:
        raise DegenerateFormula("weight on x_{k+1} vanishes")
    norm = wv / wv[0]
    taucoeff = D / wv[0]
    # adding 0.0 turns negative zeros into plain zeros
    polyrest = np.concatenate([[norm.sum()], -norm[1:]]) + 0.0
    return DifferenceFormula(
        ftype=ftype,
        weights=tuple(norm.tolist()),
        derivative_denominator=float(taucoeff),
        taucoeff=float(taucoeff),
        polyrest=tuple(polyrest.tolist()),
        charpoly=(1.0,) + tuple((0.0 - polyrest).tolist()),
        truncation_order=ftype.j + 2,
        name=name,
        default_h=default_h,
    )


def formula_from_recursion(
    ftype: FormulaType | str,
    taucoeff: float,
    polyrest: Sequence[float],
    *,
    tol: float = 1e-10,
    name: str | None = None,
    default_h: float | None = None,
) -> DifferenceFormula:
    """Inverse of the recursion solve: rebuild a formula from stored coefficients."""
    ftype = FormulaType.parse(ftype)
    polyrest = [float(v) for v in polyrest]
    if len(polyrest) != ftype.r:
        raise ValueError(f"type {ftype} needs {ftype.r} recursion weights")
    w = [1.0] + [-v for v in polyrest[1:]]
    f = formula_from_weights(w, ftype, tol=tol, name=name, default_h=default_h)
    if abs(f.taucoeff - taucoeff) > tol * max(1.0, abs(taucoeff)):
        raise DegenerateFormula(
            f"stored taucoeff {taucoeff!r} disagrees with the weights ({f.taucoeff!r})"
        )
    if abs(f.polyrest[0] - polyrest[0]) > tol * max(1.0, abs(polyrest[0])):
        raise DegenerateFormula("recursion weights do not sum to one")
    # keep the stored coefficients bit for bit
    polyrest = tuple(polyrest)
    return replace(
        f,
        derivative_denominator=float(taucoeff),
        taucoeff=float(taucoeff),
        polyrest=polyrest,
        charpoly=(1.0,) + tuple(0.0 - v for v in polyrest),
    )


@dataclass(frozen=True)
class ConvergenceReport:
    convergent: bool
    roots: np.ndarray
    max_modulus: float
    second_modulus: float
    unit_roots: int
    p_at_one: float
    reason: str

    def __bool__(self) -> bool:
        return self.convergent


def _parasitic_radius(charpoly: np.ndarray) -> float:
    """Largest root modulus after deflating the consistency root at 1."""
    q, _ = np.polydiv(charpoly, np.array([1.0, -1.0]))
    if len(q) <= 1:
        return 0.0
    return float(np.max(np.abs(np.roots(q))))


def is_convergent(
    f: DifferenceFormula | Sequence[float],
    eps_conv: float = 1e-9,
    *,
    strict: bool = True,
) -> ConvergenceReport:
    """Root-condition test of the characteristic polynomial.

    All roots must lie in the disk ``|z| <= 1 + eps_conv``, roots near the
    unit circle must be simple and ``p(1) = 0``.  With ``strict`` (the
    default) the consistency root at 1 must be the only root on the unit
    circle; this rejects weakly stable formulas such as the leapfrog rule
    whose parasitic root -1 leaves the disk for any positive ``tau * eta``.
    """
    coeffs = np.asarray(f.charpoly if isinstance(f, DifferenceFormula) else f, dtype=float)
    roots = np.roots(coeffs)
    mods = np.sort(np.abs(roots))[::-1]
    max_mod = float(mods[0]) if len(mods) else 0.0
    second = float(mods[1]) if len(mods) > 1 else 0.0
    p1 = float(np.sum(coeffs))
    band = max(eps_conv, 1e-8)
    near = roots[np.abs(np.abs(roots) - 1.0) <= band]
    min_gap = math.inf
    for a in range(len(near)):
        for b in range(a + 1, len(near)):
            min_gap = min(min_gap, abs(near[a] - near[b]))

    if abs(p1) > 1e-12 * max(1.0, float(np.abs(coeffs).sum())):
        ok, reason = False, f"p(1) = {p1:.3g} is not zero"
    elif max_mod > 1.0 + eps_conv:
        ok, reason = False, f"root of modulus {max_mod:.12g} outside the unit disk"
    elif min_gap <= 1e-8:
        ok, reason = False, "repeated root on the unit circle"
    elif strict and len(near) > 1:
        ok, reason = False, f"{len(near)} roots on the unit circle"
    else:
        ok, reason = True, "convergent"
    return ConvergenceReport(ok, roots, max_mod, second, len(near), p1, reason)


@dataclass(frozen=True)
class SearchConfig:
    max_outer: int = 2000
    min_restarts: int = 3
    max_restarts: int = 6
    eps_conv: float = 1e-9
    perturbation: float = 0.1
    nm_maxiter: int = 2000
    nm_tol: float = 1e-12
    extra_orders: int = 0

    def __post_init__(self):
        if self.max_outer < 1:
            raise ValueError("max_outer must be positive")
        if not 1 <= self.min_restarts <= self.max_restarts:
            raise ValueError("need 1 <= min_restarts <= max_restarts")


def _seed_objective(km: KernelMap, offsets: np.ndarray):
    def objective(y):
        w = km.extend(y)
        scale = np.abs(w).sum()
        if scale == 0 or abs(w[0]) < 1e-10 * scale or abs(np.dot(w, offsets)) < 1e-10 * scale:
            return 1e6
        norm = w / w[0]
        charpoly = np.concatenate([[1.0], -np.concatenate([[norm.sum()], -norm[1:]])])
        return _parasitic_radius(charpoly)

    return objective


def discover_formula(
    ftype: FormulaType | str,
    search: SearchConfig = SearchConfig(),
    rng_seed: int = 0,
    seeds: Iterable[Sequence[float]] = (),
) -> DifferenceFormula:
    """Randomized two-loop search for a convergent formula of type ``ftype``.

    The outer loop takes the seeds in ``seeds`` first and then draws
    Gaussian ones.  A seed whose formula is already convergent is returned
    as is; otherwise it is refined by a few Nelder-Mead runs on the
    largest non-consistency root modulus, with a random kick between
    runs.  Raises FormulaNotFound when ``search.max_outer`` seeds are used up.
    """
    ftype = FormulaType.parse(ftype)
    tm = build_taylor_matrix(ftype, search.extra_orders)
    km = kernel_parametrization(tm)
    offsets = np.array(ftype.offsets, dtype=float)
    objective = _seed_objective(km, offsets)
    rng = np.random.default_rng(rng_seed)

    best, best_radius = None, math.inf

    def candidate(y):
        try:
            return formula_from_weights(km.extend(y), ftype, tol=1e-10)
        except DegenerateFormula:
            return None

    if ftype.j == 1 and search.extra_orders == 0:
        # no Taylor constraints: the Euler weights (1, 0, ..., 0) give the
        # convergent charpoly z**(r-1) * (z - 1)
        f = candidate(np.eye(km.seed_dim)[0])
        if f is not None and is_convergent(f, search.eps_conv):
            return f

    if km.seed_dim == 1:
        # every seed is a multiple of the same one: a single candidate exists
        f = candidate(np.ones(1))
        if f is not None and is_convergent(f, search.eps_conv):
            return f
        radius = _parasitic_radius(np.array(f.charpoly)) if f is not None else math.inf
        raise FormulaNotFound(ftype, f, radius, seeds=1)

    given = iter(seeds)
    for outer in range(search.max_outer):
        y = next(given, None)
        if y is None:
            y = rng.standard_normal(km.seed_dim)
        else:
            y = np.asarray(y, dtype=float)
            if y.shape != (km.seed_dim,):
                raise ValueError(f"seeds for type {ftype} must have length {km.seed_dim}")
        f = candidate(y)
        if f is not None:
            radius = objective(y)
            if radius < best_radius:
                best, best_radius = f, radius
            if is_convergent(f, search.eps_conv):
                return f
        restarts = int(rng.integers(search.min_restarts, search.max_restarts + 1))
        for _ in range(restarts):
            res = minimize(
                objective,
                y,
                method="Nelder-Mead",
                options={
                    "maxiter": search.nm_maxiter,
                    "xatol": search.nm_tol,
                    "fatol": search.nm_tol,
                },
            )
            y = res.x / max(np.linalg.norm(res.x), 1e-300)
            f = candidate(y)
            if f is not None:
                radius = objective(y)
                if radius < best_radius:
                    best, best_radius = f, radius
                if is_convergent(f, search.eps_conv):
                    return f
            y = y + search.perturbation * np.linalg.norm(y) * rng.standard_normal(km.seed_dim)
    raise FormulaNotFound(ftype, best, best_radius, seeds=search.max_outer)


def stability_bound(f: DifferenceFormula, eps: float = 1e-9, h_max: float = 10.0) -> float:
    """Largest ``h = tau * eta`` keeping the linearised ZNN error recursion stable.

    The error of a ZNN iterate obeys ``p(z) + h * taucoeff * z**(r-1) = 0``;
    the bound is found by a scan followed by bisection.
    """
    base = np.array(f.charpoly, dtype=float)

    def radius(h):
        q = base.copy()
        q[1] += h * f.taucoeff
        return float(np.max(np.abs(np.roots(q))))

    grid = np.linspace(0.0, h_max, 2001)[1:]
    lo = 0.0
    for h in grid:
        if radius(h) >= 1.0 - eps:
            break
        lo = h
    else:
        return h_max
    hi = lo + grid[0]
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if radius(mid) < 1.0 - eps:
            lo = mid
        else:
            hi = mid
    return lo


# -- catalog ---------------------------------------------------------------

_F = Fraction

# weights on x_{k+1}, x_{k-1}, ..., x_{k-l}, normalised to 1 on x_{k+1}
_BUILTIN = {
    "1_2": dict(weights=(_F(1), _F(0)), default_h=0.5),
    "2_3": dict(weights=(_F(8), _F(-6), _F(-5), _F(2)), default_h=0.1),
}

CATALOG_ENV = "ZNN_CATALOG"


def _builtin_formulas() -> list[DifferenceFormula]:
    out = []
    for key, entry in _BUILTIN.items():
        out.append(
            formula_from_weights(entry["weights"], key, name=key, default_h=entry["default_h"])
        )
    return out


def _fmt(x: float) -> str:
    return "%.17g" % x


def write_catalog(path: str | os.PathLike, formulas: Iterable[DifferenceFormula]) -> None:
    with open(path, "w") as fh:
        fh.write("# type j s taucoeff polyrest...\n")
        for f in formulas:
            fh.write(_catalog_line(f) + "\n")


def append_catalog(path: str | os.PathLike, formula: DifferenceFormula) -> None:
    path = Path(path)
    new = not path.exists() or path.stat().st_size == 0
    with open(path, "a") as fh:
        if new:
            fh.write("# type j s taucoeff polyrest...\n")
        fh.write(_catalog_line(formula) + "\n")


def _catalog_line(f: DifferenceFormula) -> str:
    fields = [str(f.ftype), str(f.ftype.j), str(f.ftype.s), _fmt(f.taucoeff)]
    fields += [_fmt(v) for v in f.polyrest]
    return " ".join(fields)


def read_catalog(path: str | os.PathLike) -> list[DifferenceFormula]:
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                name, j, s = parts[0], int(parts[1]), int(parts[2])
                ftype = FormulaType(j, s)
                if FormulaType.parse(name) != ftype:
                    raise ValueError(f"type {name} does not match j={j}, s={s}")
                taucoeff = float(parts[3])
                polyrest = [float(v) for v in parts[4:]]
                out.append(formula_from_recursion(ftype, taucoeff, polyrest, name=name))
            except (ValueError, IndexError, DegenerateFormula) as exc:
                raise ValueError(f"{path}:{lineno}: bad catalog line: {exc}") from None
    return out


def _data_catalog() -> list[DifferenceFormula]:
    path = Path(__file__).with_name("catalog.txt")
    if not path.exists():
        return []
    return read_catalog(path)


def catalog(extra_paths: Iterable[str | os.PathLike] = ()) -> list[DifferenceFormula]:
    """Built-in formulas, persisted catalogs and the shipped data file.

    Order is also lookup precedence: the exact built-ins, then
    ``extra_paths``, then files listed in the ``ZNN_CATALOG`` environment
    variable (``os.pathsep`` separated), then the shipped data file.
    """
    paths = list(extra_paths)
    env = os.environ.get(CATALOG_ENV)
    if env:
        paths += [p for p in env.split(os.pathsep) if p]
    formulas = _builtin_formulas()
    for p in paths:
        formulas += read_catalog(p)
    return formulas + _data_catalog()


def lookup(name: str | FormulaType, extra_paths: Iterable[str | os.PathLike] = ()) -> DifferenceFormula:
    key = str(FormulaType.parse(name))
    for f in catalog(extra_paths):
        if str(f.ftype) == key:
            return f
    raise FormulaNotPresent(key)
