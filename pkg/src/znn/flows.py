"""Time-varying matrix data sampled at a constant gap.

A flow maps a time ``t`` to a dense matrix (vectors are ``n x 1``
matrices) and may carry an analytic derivative.  Problems consume a
*flow set*, a plain dict of named flows such as ``{"A": ..., "b": ...}``.
"""
from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "SamplingGrid",
    "MatrixFlow",
    "FlowEvaluationError",
    "OffGridError",
    "OutOfOrderAccess",
    "functional_flow",
    "constant_flow",
    "ReplayLog",
    "replay_flow",
    "write_replay",
    "read_replay",
    "record_flow",
    "backward_difference_weights",
    "estimate_derivative",
    "fov_flow",
    "MonitoredFlow",
    "FLOWS",
    "parse_flow_spec",
    "make_flow_set",
]


@dataclass(frozen=True)
class SamplingGrid:
    t0: float
    tf: float
    tau: float

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("sampling gap tau must be positive")
        if not self.tf > self.t0:
            raise ValueError("need tf > t0")

    @property
    def steps(self) -> int:
        return int(round((self.tf - self.t0) / self.tau))

    def time(self, k: int) -> float:
        """Grid time of step ``k`` (1-based)."""
        return self.t0 + (k - 1) * self.tau

    def times(self) -> np.ndarray:
        return self.t0 + self.tau * np.arange(self.steps)


class FlowEvaluationError(ValueError):
    def __init__(self, t, reason):
        self.t = t
        super().__init__(f"flow evaluation failed at t = {t!r}: {reason}")


class OffGridError(ValueError):
    pass


class OutOfOrderAccess(RuntimeError):
    pass


class MatrixFlow:
    """Base class: ``sample(t)`` and optionally ``derivative(t)``."""

    dims: tuple[int, int]
    name: str = "flow"

    @property
    def has_derivative(self) -> bool:
        return False

    def sample(self, t: float) -> np.ndarray:
        raise NotImplementedError

    def derivative(self, t: float) -> np.ndarray:
        raise NotImplementedError(f"{self.name} has no analytic derivative")


class _FunctionalFlow(MatrixFlow):
    def __init__(self, fn, dfn, dims, name):
        self._fn = fn
        self._dfn = dfn
        self.dims = dims
        self.name = name

    @property
    def has_derivative(self) -> bool:
        return self._dfn is not None

    def _eval(self, fn, t):
        try:
            val = np.asarray(fn(t))
        except Exception as exc:  # user formulas may fail anywhere
            raise FlowEvaluationError(t, exc) from exc
        if val.ndim == 1:
            val = val.reshape(-1, 1)
        elif val.ndim == 0:
            val = val.reshape(1, 1)
        if val.shape != self.dims:
            raise FlowEvaluationError(t, f"shape {val.shape} differs from {self.dims}")
        if not np.all(np.isfinite(val)):
            raise FlowEvaluationError(t, "non-finite entry")
        return val

    def sample(self, t):
        return self._eval(self._fn, t)

    def derivative(self, t):
        if self._dfn is None:
            return super().derivative(t)
        return self._eval(self._dfn, t)


def functional_flow(
    fn: Callable[[float], np.ndarray],
    derivative: Callable[[float], np.ndarray] | None = None,
    *,
    dims: tuple[int, int] | None = None,
    t0: float = 0.0,
    name: str = "functional",
) -> MatrixFlow:
    """Wrap closed-form entry definitions as a flow.

    The shape is taken from ``fn(t0)`` unless ``dims`` is given; 1-D
    results are treated as column vectors.
    """
    if dims is None:
        try:
            probe = np.asarray(fn(t0))
        except Exception as exc:
            raise FlowEvaluationError(t0, exc) from exc
        if probe.ndim == 0:
            dims = (1, 1)
        elif probe.ndim == 1:
            dims = (probe.shape[0], 1)
        else:
            dims = tuple(probe.shape)
    return _FunctionalFlow(fn, derivative, tuple(dims), name)


def constant_flow(M, name: str = "constant") -> MatrixFlow:
    M = np.array(M)
    if M.ndim == 1:
        M = M.reshape(-1, 1)
    M.setflags(write=False)
    Z = np.zeros_like(M)
    Z.setflags(write=False)
    return functional_flow(lambda t: M, lambda t: Z, dims=M.shape, name=name)


# -- replay logs -----------------------------------------------------------


@dataclass(frozen=True)
class ReplayLog:
    m: int
    n: int
    tau: float
    t0: float
    samples: tuple[np.ndarray, ...] = field(repr=False)

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("replay gap must be positive")
        for i, s in enumerate(self.samples):
            if s.shape != (self.m, self.n):
                raise ValueError(f"sample {i} has shape {s.shape}, expected {(self.m, self.n)}")

    def __len__(self) -> int:
        return len(self.samples)


class _ReplayFlow(MatrixFlow):
    def __init__(self, log: ReplayLog, name: str):
        self.log = log
        self.dims = (log.m, log.n)
        self.name = name

    def index(self, t: float) -> int:
        pos = (t - self.log.t0) / self.log.tau
        k = int(round(pos))
        if abs(pos - k) > 1e-9 * max(1.0, abs(pos)):
            raise OffGridError(f"t = {t!r} is not a sample time of {self.name}")
        if not 0 <= k < len(self.log):
            raise OffGridError(f"t = {t!r} lies outside the recorded range of {self.name}")
        return k

    def sample(self, t):
        return self.log.samples[self.index(t)]

    def check_grid(self, grid: SamplingGrid, needed: int | None = None) -> None:
        if not math.isclose(grid.tau, self.log.tau, rel_tol=1e-12):
            raise OffGridError(f"grid gap {grid.tau!r} differs from recorded gap {self.log.tau!r}")
        self.index(grid.t0)
        steps = grid.steps if needed is None else needed
        if self.index(grid.t0) + steps > len(self.log):
            raise OffGridError(f"{self.name} holds {len(self.log)} samples, run needs {steps}")


def replay_flow(log: ReplayLog, name: str = "replay") -> MatrixFlow:
    return _ReplayFlow(log, name)


def _fmt_entry(z) -> str:
    if np.iscomplexobj(z) and z.imag != 0:
        return "%.17g%+.17gj" % (z.real, z.imag)
    return "%.17g" % float(np.real(z))


def write_replay(path: str | os.PathLike, log: ReplayLog) -> None:
    with open(path, "w") as fh:
        fh.write("%d %d %.17g %.17g\n" % (log.m, log.n, log.tau, log.t0))
        for s in log.samples:
            fh.write(" ".join(_fmt_entry(z) for z in s.reshape(-1)) + "\n")


def read_replay(path: str | os.PathLike) -> ReplayLog:
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ValueError(f"{path}: empty replay log")
    head = lines[0].split()
    if len(head) != 4:
        raise ValueError(f"{path}: header must read 'm n tau t0'")
    m, n, tau, t0 = int(head[0]), int(head[1]), float(head[2]), float(head[3])
    samples = []
    for lineno, line in enumerate(lines[1:], 2):
        parts = line.split()
        if len(parts) != m * n:
            raise ValueError(f"{path}:{lineno}: expected {m * n} entries, got {len(parts)}")
        if any("j" in p for p in parts):
            vals = np.array([complex(p) for p in parts])
        else:
            vals = np.array([float(p) for p in parts])
        samples.append(vals.reshape(m, n))
    return ReplayLog(m, n, tau, t0, tuple(samples))


def record_flow(flow: MatrixFlow, grid: SamplingGrid, extra: int = 0) -> ReplayLog:
    """Sample a flow on every grid time (plus ``extra`` trailing samples)."""
    samples = tuple(np.array(flow.sample(grid.time(k))) for k in range(1, grid.steps + 1 + extra))
    return ReplayLog(flow.dims[0], flow.dims[1], grid.tau, grid.t0, samples)


# -- derivative estimation -------------------------------------------------


@lru_cache(maxsize=None)
def backward_difference_weights(order: int) -> tuple[Fraction, ...]:
    """Weights on ``f(t), f(t - tau), ..., f(t - order*tau)`` for ``tau * f'(t)``.

    These are the sums of the scaled backward differences
    ``sum_{m=1}^{order} nabla^m / m``.
    """
    if order < 0:
        raise ValueError("order must be non-negative")
    w = [Fraction(0)] * (order + 1)
    for m in range(1, order + 1):
        # nabla^m f = sum_i (-1)^i C(m, i) f(t - i tau)
        for i in range(m + 1):
            w[i] += Fraction((-1) ** i * math.comb(m, i), m)
    return tuple(w)


def estimate_derivative(history: Sequence[np.ndarray], tau: float, order: int | None = None) -> np.ndarray:
    """Backward-difference derivative at the newest sample.

    ``history`` is newest first.  The order is clamped to ``len(history) - 1``;
    a single sample yields a zero derivative.
    """
    history = list(history)
    if not history:
        raise ValueError("cannot estimate a derivative from an empty history")
    p = len(history) - 1 if order is None else min(order, len(history) - 1)
    if p <= 0:
        return np.zeros_like(np.asarray(history[0]))
    w = backward_difference_weights(p)
    acc = float(w[0]) * np.asarray(history[0])
    for wi, h in zip(w[1:], history[1:]):
        acc = acc + float(wi) * np.asarray(h)
    return acc / tau


# -- field-of-values flow --------------------------------------------------


def fov_flow(A) -> MatrixFlow:
    """Hermitean flow ``cos(t) H + sin(t) K`` with ``A = H + iK``."""
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("field-of-values flow needs a square matrix")
    H = (A + A.conj().T) / 2
    K = (A - A.conj().T) / 2j
    # symmetrize against rounding so samples are exactly hermitean
    H = (H + H.conj().T) / 2
    K = (K + K.conj().T) / 2
    flow = functional_flow(
        lambda t: math.cos(t) * H + math.sin(t) * K,
        lambda t: -math.sin(t) * H + math.cos(t) * K,
        dims=A.shape,
        name="fov",
    )
    flow.H, flow.K, flow.source = H, K, A
    return flow


class MonitoredFlow(MatrixFlow):
    """Wrapper that records every access and faults on out-of-order times."""

    def __init__(self, inner: MatrixFlow, strict: bool = True):
        self.inner = inner
        self.dims = inner.dims
        self.name = f"monitored({inner.name})"
        self.strict = strict
        self.accessed: list[float] = []

    @property
    def has_derivative(self) -> bool:
        return self.inner.has_derivative

    @property
    def latest(self) -> float:
        return max(self.accessed) if self.accessed else -math.inf

    def _note(self, t):
        if self.strict and self.accessed and t < self.accessed[-1]:
            raise OutOfOrderAccess(f"request for t = {t!r} after t = {self.accessed[-1]!r}")
        self.accessed.append(t)

    def sample(self, t):
        self._note(t)
        return self.inner.sample(t)

    def derivative(self, t):
        self._note(t)
        return self.inner.derivative(t)


# -- named test flows ------------------------------------------------------


def _sym2(omega=1.0):
    w = float(omega)
    A = functional_flow(
        lambda t: np.array([[math.sin(w * t) + 2, math.cos(w * t)], [math.cos(w * t), math.sin(w * t) + 2]]),
        lambda t: w * np.array([[math.cos(w * t), -math.sin(w * t)], [-math.sin(w * t), math.cos(w * t)]]),
        dims=(2, 2),
        name="sym2.A",
    )
    b = functional_flow(
        lambda t: np.array([[math.sin(w * t)], [math.cos(w * t)]]),
        lambda t: w * np.array([[math.cos(w * t)], [-math.sin(w * t)]]),
        dims=(2, 1),
        name="sym2.b",
    )
    return {"A": A, "b": b}


def _spd2_sqrt(omega=0.2):
    # R(t) diag(l1, l2) R(t)^T with l1 in [1.5, 2.5], l2 in [6, 8]; the
    # eigenvalues never approach each other so every square root stays
    # well conditioned, including the indefinite ones a random start may find
    w = float(omega)

    def parts(t):
        th = w * t / 2
        c, s = math.cos(th), math.sin(th)
        R = np.array([[c, -s], [s, c]])
        dR = (w / 2) * np.array([[-s, -c], [c, -s]])
        D = np.diag([2 + 0.5 * math.sin(w * t), 7 + math.cos(w * t)])
        dD = np.diag([0.5 * w * math.cos(w * t), -w * math.sin(w * t)])
        return R, dR, D, dD

    def A(t):
        R, _, D, _ = parts(t)
        return R @ D @ R.T

    def dA(t):
        R, dR, D, dD = parts(t)
        return dR @ D @ R.T + R @ dD @ R.T + R @ D @ dR.T

    return {"A": functional_flow(A, dA, dims=(2, 2), name="spd2-sqrt.A")}


def _const_id(n=2):
    n = int(n)
    eye = np.eye(n)
    return {
        "A": constant_flow(eye, "const-id.A"),
        "b": constant_flow(np.arange(1.0, n + 1).reshape(-1, 1), "const-id.b"),
        "B": constant_flow(eye, "const-id.B"),
        "C": constant_flow(2 * eye, "const-id.C"),
        "Q": constant_flow(eye, "const-id.Q"),
    }


def _rect(m, n, omega):
    w = float(omega)
    base = np.array([[2.0, 0.5, -0.3], [0.4, 1.5, 0.7], [-0.2, 0.6, 1.8]])[:m, :n]
    P = np.array([[0.3, -0.2, 0.1], [0.1, 0.4, -0.3], [0.2, 0.1, 0.3]])[:m, :n]
    S = np.array([[0.1, 0.3, 0.2], [-0.3, 0.1, 0.2], [0.2, -0.1, 0.1]])[:m, :n]

    def A(t):
        return base + math.sin(w * t) * P + math.cos(w * t) * S

    def dA(t):
        return w * (math.cos(w * t) * P - math.sin(w * t) * S)

    bvec = np.array([1.0, -0.5, 0.8])[:m].reshape(-1, 1)
    bvar = np.array([0.3, 0.2, -0.4])[:m].reshape(-1, 1)
    return {
        "A": functional_flow(A, dA, dims=(m, n), name=f"rect{m}{n}.A"),
        "b": functional_flow(
            lambda t: bvec + math.sin(w * t) * bvar,
            lambda t: w * math.cos(w * t) * bvar,
            dims=(m, 1),
            name=f"rect{m}{n}.b",
        ),
    }


def _rect23(omega=1.0):
    return _rect(2, 3, omega)


def _rect32(omega=1.0):
    return _rect(3, 2, omega)


def _lsq32(omega=1.0):
    # constant tall A with a time-varying right side outside its range
    w = float(omega)
    A = np.array([[2.0, 0.5], [0.4, 1.5], [-0.2, 0.6]])
    b0 = np.array([1.0, -0.5, 0.8]).reshape(-1, 1)
    b1 = np.array([0.3, 0.2, -0.4]).reshape(-1, 1)
    return {
        "A": constant_flow(A, "lsq32.A"),
        "b": functional_flow(
            lambda t: b0 + math.sin(w * t) * b1,
            lambda t: w * math.cos(w * t) * b1,
            dims=(3, 1),
            name="lsq32.b",
        ),
    }


def _sylv2(omega=1.0):
    w = float(omega)

    def pair(f0, f1, f2, name):
        return functional_flow(
            lambda t: f0 + math.sin(w * t) * f1 + math.cos(w * t) * f2,
            lambda t: w * (math.cos(w * t) * f1 - math.sin(w * t) * f2),
            dims=f0.shape,
            name=name,
        )

    A0 = np.array([[3.0, 1.0], [0.0, 2.0]])
    B0 = np.array([[2.0, 0.0], [1.0, 4.0]])
    C0 = np.array([[1.0, 2.0], [-1.0, 0.5]])
    return {
        "A": pair(A0, np.array([[0.5, 0.0], [0.2, 0.3]]), np.array([[0.0, 0.2], [0.1, 0.0]]), "sylv2.A"),
        "B": pair(B0, np.array([[0.2, 0.1], [0.0, -0.3]]), np.array([[0.3, 0.0], [0.0, 0.2]]), "sylv2.B"),
        "C": pair(C0, np.array([[1.0, 0.0], [0.5, -1.0]]), np.array([[0.0, 0.5], [0.5, 0.0]]), "sylv2.C"),
    }


def _lyap2(omega=1.0):
    # spectral radius of A stays below 0.75, Q hermitean positive definite
    w = float(omega)

    def A(t):
        return np.array([[0.5 * math.cos(w * t), 0.2], [-0.1, 0.3 + 0.2 * math.sin(w * t)]])

    def dA(t):
        return w * np.array([[-0.5 * math.sin(w * t), 0.0], [0.0, 0.2 * math.cos(w * t)]])

    def Q(t):
        s = math.sin(w * t)
        return np.array([[2 + s, 0.5 * math.cos(w * t)], [0.5 * math.cos(w * t), 1.5 - 0.5 * s]])

    def dQ(t):
        s, c = math.sin(w * t), math.cos(w * t)
        return w * np.array([[c, -0.5 * s], [-0.5 * s, -0.5 * c]])

    return {
        "A": functional_flow(A, dA, dims=(2, 2), name="lyap2.A"),
        "Q": functional_flow(Q, dQ, dims=(2, 2), name="lyap2.Q"),
    }


def _herm3(omega=1.0):
    # hermitean with well separated eigenvalues (near 1, 4, 7)
    w = float(omega)
    D = np.diag([1.0, 4.0, 7.0]).astype(complex)
    P = np.array([[0, 1, 0.5j], [1, 0, 0.3], [-0.5j, 0.3, 0]], dtype=complex)
    S = np.array([[0.5, 0.2j, 0], [-0.2j, -0.5, 0.4], [0, 0.4, 0.2]], dtype=complex)
    return {
        "A": functional_flow(
            lambda t: D + math.sin(w * t) * P + math.cos(w * t) * S,
            lambda t: w * (math.cos(w * t) * P - math.sin(w * t) * S),
            dims=(3, 3),
            name="herm3.A",
        )
    }


def _kkt2(omega=1.0):
    # single linear constraint x1 + x2 = sin(w t) + 2
    w = float(omega)
    return {
        "A": constant_flow(np.array([[1.0, 1.0]]), "kkt2.A"),
        "b": functional_flow(
            lambda t: np.array([[math.sin(w * t) + 2]]),
            lambda t: np.array([[w * math.cos(w * t)]]),
            dims=(1, 1),
            name="kkt2.b",
        ),
    }


def _ineq2(omega=1.0):
    w = float(omega)
    A = functional_flow(
        lambda t: np.array([[1.0 + 0.2 * math.sin(w * t), 0.5], [0.3, 1.0]]),
        lambda t: np.array([[0.2 * w * math.cos(w * t), 0.0], [0.0, 0.0]]),
        dims=(2, 2),
        name="ineq2.A",
    )
    b = functional_flow(
        lambda t: np.array([[2.0 + math.cos(w * t)], [3.0]]),
        lambda t: np.array([[-w * math.sin(w * t)], [0.0]]),
        dims=(2, 1),
        name="ineq2.b",
    )
    C = functional_flow(
        lambda t: np.array([[1.0, -1.0 + 0.1 * math.cos(w * t)]]),
        lambda t: np.array([[0.0, -0.1 * w * math.sin(w * t)]]),
        dims=(1, 2),
        name="ineq2.C",
    )
    d = functional_flow(
        lambda t: np.array([[1.5 + 0.5 * math.sin(w * t)]]),
        lambda t: np.array([[0.5 * w * math.cos(w * t)]]),
        dims=(1, 1),
        name="ineq2.d",
    )
    return {"A": A, "b": b, "C": C, "d": d}


def _mixed2():
    # entries with powers, exponentials and a square root; no analytic derivative
    def A(t):
        return np.array(
            [[math.sin(t * t) - t, -(3.0 ** (t - 1))], [17.56 * math.sqrt(t), 1 / (1 + t**3.14)]]
        )

    return {"A": functional_flow(A, dims=(2, 2), name="mixed2.A")}


def _fov(*entries):
    """``fov(a11,a12,...)`` builds the flow of a real square matrix given row-major."""
    vals = np.asarray(entries, dtype=float)
    n = int(round(math.sqrt(vals.size)))
    if n * n != vals.size or n == 0:
        raise ValueError("fov needs n*n matrix entries")
    return {"A": fov_flow(vals.reshape(n, n))}


FLOWS: dict[str, Callable[..., dict]] = {
    "const-id": _const_id,
    "sym2": _sym2,
    "spd2-sqrt": _spd2_sqrt,
    "rect23": _rect23,
    "rect32": _rect32,
    "lsq32": _lsq32,
    "sylv2": _sylv2,
    "lyap2": _lyap2,
    "herm3": _herm3,
    "kkt2": _kkt2,
    "ineq2": _ineq2,
    "mixed2": _mixed2,
    "fov": _fov,
}

_SPEC_RE = re.compile(r"^\s*([A-Za-z0-9_\-]+)\s*(?:\((.*)\)|:(.*))?\s*$")


def parse_flow_spec(text: str) -> tuple[str, list]:
    """Split ``name(p1,p2)`` or ``name:p1,p2`` into a name and parameters.

    ``replay:...`` keeps its argument as a single string.
    """
    if text.startswith("replay:"):
        return "replay", [text[len("replay:"):]]
    m = _SPEC_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse flow spec {text!r}")
    name, a, b = m.groups()
    raw = a if a is not None else b
    params = []
    if raw:
        for p in raw.split(","):
            p = p.strip()
            if p:
                params.append(float(p))
    return name, params


def _replay_set(arg: str) -> dict:
    """``replay:path`` (the log is A) or ``replay:A=path,b=path``."""
    out = {}
    parts = arg.split(",")
    if len(parts) == 1 and "=" not in parts[0]:
        parts = [f"A={parts[0]}"]
    for p in parts:
        key, _, path = p.partition("=")
        if not path:
            raise ValueError(f"bad replay entry {p!r}; expected key=path")
        out[key.strip()] = replay_flow(read_replay(path.strip()), name=f"replay:{path.strip()}")
    return out


def make_flow_set(text: str) -> dict[str, MatrixFlow]:
    name, params = parse_flow_spec(text)
    if name == "replay":
        return _replay_set(params[0])
    if name not in FLOWS:
        raise KeyError(f"unknown flow {name!r}; known: {', '.join(sorted(FLOWS))}, replay:<path>")
    return FLOWS[name](*params)
