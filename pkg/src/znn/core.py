"""Discretized ZNN engine: Euler warm-up, look-ahead recursion and traces."""
from __future__ import annotations

import collections
import io
import math
import os
import time
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence, TextIO

import numpy as np

from .flows import MatrixFlow, SamplingGrid, estimate_derivative, fov_flow
from .formulas import DifferenceFormula, lookup
from .problems import Eigen, Problem, fov_point

__all__ = [
    "Diverged",
    "RunConfig",
    "ZnnState",
    "TraceRecord",
    "Trace",
    "step",
    "warmup",
    "run",
    "resolve_formula",
    "fov_boundary",
    "EULER",
]

EULER = "1_2"
DIVERGENCE_FACTOR = 1e12
# h = tau * eta used when a formula carries no default of its own; well
# inside the stability limit of every shipped formula
DEFAULT_H = 0.1


class Diverged(ArithmeticError):
    def __init__(self, k: int, trace: "Trace | None" = None, reason: str = ""):
        self.k = k
        self.trace = trace
        super().__init__(f"iteration diverged at step {k}" + (f": {reason}" if reason else ""))


def resolve_formula(formula: str | DifferenceFormula) -> DifferenceFormula:
    return formula if isinstance(formula, DifferenceFormula) else lookup(formula)


@dataclass(frozen=True)
class RunConfig:
    """Settings for one ZNN run.

    Exactly one of ``eta`` and ``h`` may be given; ``h = tau * eta``.
    When neither is set the formula's default ``h`` is used.
    ``derivative`` is ``"auto"`` (analytic when the flow has one),
    ``"analytic"`` or ``"backward"`` with ``deriv_order`` (default j+1).
    """

    formula: str | DifferenceFormula
    grid: SamplingGrid
    eta: float | None = None
    h: float | None = None
    start: str = "oracle"
    rng_seed: int = 0
    derivative: str = "auto"
    deriv_order: int | None = None
    record_solution: bool = False
    track_oracle: bool = False
    start_value: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.eta is not None and self.h is not None:
            raise ValueError("give eta or h, not both")
        if self.eta is not None and not self.eta > 0:
            raise ValueError("eta must be positive")
        if self.h is not None and not self.h > 0:
            raise ValueError("h must be positive")
        if self.start not in ("oracle", "random", "given"):
            raise ValueError("start must be 'oracle', 'random' or 'given'")
        if self.start == "given" and self.start_value is None:
            raise ValueError("start 'given' needs start_value")
        if self.derivative not in ("auto", "analytic", "backward"):
            raise ValueError("derivative must be 'auto', 'analytic' or 'backward'")

    def resolved(self) -> tuple[DifferenceFormula, float, float]:
        """Formula, eta and h after applying defaults."""
        f = resolve_formula(self.formula)
        tau = self.grid.tau
        if self.eta is not None:
            eta = self.eta
        else:
            h = self.h if self.h is not None else (f.default_h or DEFAULT_H)
            eta = h / tau
        return f, eta, tau * eta


@dataclass
class ZnnState:
    """Newest-first ring buffer of iterates."""

    capacity: int
    history: collections.deque = field(default_factory=collections.deque)
    k: int = 1
    phase: str = "warming"

    def push(self, x: np.ndarray) -> None:
        self.history.appendleft(x)
        while len(self.history) > self.capacity:
            self.history.pop()

    @property
    def current(self) -> np.ndarray:
        return self.history[0]


@dataclass(frozen=True)
class TraceRecord:
    k: int
    t: float
    residual_fro: float
    relative_residual: float
    solve_condition: float
    solution: np.ndarray | None = None
    oracle_error: float | None = None


class Trace:
    """Per-step residual history of a run."""

    def __init__(self, header: Mapping[str, object]):
        self.header = dict(header)
        self.records: list[TraceRecord] = []
        self.wall_time = 0.0
        self.diverged_at: int | None = None

    def __len__(self) -> int:
        return len(self.records)

    def append(self, rec: TraceRecord) -> None:
        self.records.append(rec)

    @property
    def t(self) -> np.ndarray:
        return np.array([r.t for r in self.records])

    @property
    def residual(self) -> np.ndarray:
        return np.array([r.residual_fro for r in self.records])

    @property
    def relative(self) -> np.ndarray:
        return np.array([r.relative_residual for r in self.records])

    @property
    def oracle_errors(self) -> np.ndarray:
        return np.array([np.nan if r.oracle_error is None else r.oracle_error for r in self.records])

    def window(self, t_start: float, t_end: float = math.inf) -> np.ndarray:
        t = self.t
        return (t >= t_start - 1e-12) & (t <= t_end + 1e-12)

    def _after_burn_in(self, burn_in, column):
        if burn_in is None:
            burn_in = 5.0 / float(self.header["eta"])
        mask = self.window(float(self.header["t0"]) + burn_in)
        return getattr(self, column)[mask]

    def steady_state(self, burn_in: float | None = None, column: str = "relative") -> float:
        """Typical level (median) of ``column`` after the burn-in (default ``5 / eta``).

        The median ignores the decaying tail of the warm-up error, which
        after only ``5 / eta`` seconds can still dominate the maximum.
        """
        values = self._after_burn_in(burn_in, column)
        return float(np.median(values)) if values.size else math.nan

    def steady_state_max(self, burn_in: float | None = None, column: str = "relative") -> float:
        """Largest value of ``column`` after the burn-in."""
        values = self._after_burn_in(burn_in, column)
        return float(np.max(values)) if values.size else math.nan

    def steps_per_second(self) -> float:
        return len(self) / self.wall_time if self.wall_time > 0 else math.inf

    def to_csv(self, out: str | os.PathLike | TextIO, oracle: bool = False) -> None:
        own = isinstance(out, (str, os.PathLike))
        fh = open(out, "w") if own else out
        try:
            for key, val in self.header.items():
                fh.write(f"# {key} = {val}\n")
            cols = ["k", "t", "residual_fro", "relative_residual", "solve_condition"]
            if oracle:
                cols.append("oracle_error")
            width = 0
            if self.records and self.records[0].solution is not None:
                width = self.records[0].solution.size
                sol = self.records[0].solution
                if np.iscomplexobj(sol):
                    cols += [f"re_x{i + 1},im_x{i + 1}" for i in range(width)]
                else:
                    cols += [f"x{i + 1}" for i in range(width)]
            fh.write(",".join(cols) + "\n")
            for r in self.records:
                row = [str(r.k), "%.17g" % r.t, "%.17g" % r.residual_fro, "%.17g" % r.relative_residual,
                       "%.17g" % r.solve_condition]
                if oracle:
                    row.append("%.17g" % (math.nan if r.oracle_error is None else r.oracle_error))
                if width:
                    if np.iscomplexobj(r.solution):
                        for z in r.solution:
                            row += ["%.17g" % z.real, "%.17g" % z.imag]
                    else:
                        row += ["%.17g" % v for v in r.solution]
                fh.write(",".join(row) + "\n")
        finally:
            if own:
                fh.close()

    def csv_text(self, oracle: bool = False) -> str:
        buf = io.StringIO()
        self.to_csv(buf, oracle=oracle)
        return buf.getvalue()


def step(formula: DifferenceFormula, state: ZnnState, rate: np.ndarray, tau: float) -> np.ndarray:
    """Advance the recursion by one step and rotate the history."""
    x_next = formula.step(state.history, rate, tau)
    if not np.all(np.isfinite(x_next)):
        raise Diverged(state.k, reason="non-finite iterate")
    state.push(x_next)
    state.k += 1
    return x_next


class _Sampler:
    """Reads flow samples strictly in grid order and serves derivatives."""

    def __init__(self, flows: Mapping[str, MatrixFlow], keys: Sequence[str], tau: float, mode: str, order: int):
        missing = [k for k in keys if k not in flows]
        if missing:
            raise KeyError(f"flow set lacks {', '.join(missing)}")
        self.flows = {k: flows[k] for k in keys}
        self.tau = tau
        self.order = order
        self.analytic = {}
        for k, f in self.flows.items():
            if mode == "analytic" and not f.has_derivative:
                raise ValueError(f"flow {f.name} has no analytic derivative")
            self.analytic[k] = f.has_derivative and mode != "backward"
        self.past = {k: collections.deque(maxlen=order + 1) for k in keys}
        self.t_last = -math.inf

    def at(self, t: float):
        if t < self.t_last:
            raise RuntimeError("samples must be requested in grid order")
        self.t_last = t
        S, dS = {}, {}
        for k, f in self.flows.items():
            s = f.sample(t)
            S[k] = s
            if self.analytic[k]:
                dS[k] = f.derivative(t)
            else:
                self.past[k].appendleft(s)
                dS[k] = estimate_derivative(self.past[k], self.tau, self.order)
        return S, dS


def _start_value(problem: Problem, S, config: RunConfig, rng: np.random.Generator) -> np.ndarray:
    if config.start == "given":
        z = np.array(config.start_value, dtype=problem.dtype(S)).reshape(-1)
        if z.size != problem.size(S):
            raise ValueError(f"start value has {z.size} entries, problem needs {problem.size(S)}")
        return z
    if config.start == "random":
        return np.asarray(problem.random_start(S, rng), dtype=problem.dtype(S))
    z = problem.initial(config.grid.t0, S)
    if z is None:
        raise ValueError(f"problem {problem.name} has no oracle start; use a random start")
    return np.asarray(z, dtype=problem.dtype(S))


def _record(trace, problem, k, t, S, z, cond, config):
    E = problem.residual(t, S, z)
    res = float(np.linalg.norm(E))
    scale = problem.scale(t, S)
    rel = res / scale if scale > 0 else res
    trace.append(
        TraceRecord(
            k,
            t,
            res,
            rel,
            float(cond),
            problem.solution(S, z).copy() if config.record_solution else None,
            problem.oracle_error(t, S, z) if config.track_oracle else None,
        )
    )


def warmup(
    problem: Problem,
    flows: Mapping[str, MatrixFlow],
    formula: DifferenceFormula,
    config: RunConfig,
    rng: np.random.Generator | None = None,
    *,
    _sampler: _Sampler | None = None,
    _trace: Trace | None = None,
    _eta: float | None = None,
    on_step: Callable | None = None,
) -> ZnnState:
    """Start value plus ``j + s`` Euler steps; returns the running state.

    After the warm-up the state holds ``x_2 .. x_{j+s+1}`` (newest first)
    and ``state.k = j + s + 1``.
    """
    if rng is None:
        rng = np.random.default_rng(config.rng_seed)
    eta = config.resolved()[1] if _eta is None else _eta
    grid = config.grid
    tau = grid.tau
    order = config.deriv_order if config.deriv_order is not None else formula.ftype.j + 1
    sampler = _sampler or _Sampler(flows, problem.needs, tau, config.derivative, order)
    trace = _trace if _trace is not None else Trace({})
    warm = formula.ftype.instances
    state = ZnnState(capacity=formula.ftype.instances)

    S, dS = sampler.at(grid.time(1))
    z = _start_value(problem, S, config, rng)
    bound = DIVERGENCE_FACTOR * (1.0 + float(np.linalg.norm(z)))
    state.push(z)
    for _ in range(warm):
        k = state.k
        if k > grid.steps:
            break
        t = grid.time(k)
        if k > 1:
            S, dS = sampler.at(t)
        rate, cond = problem.rate(t, S, dS, state.current, eta)
        _record(trace, problem, k, t, S, state.current, cond, config)
        x_next = state.current + tau * rate
        if not np.all(np.isfinite(x_next)) or np.linalg.norm(x_next) > bound:
            raise Diverged(k, trace, "during warm-up")
        state.push(x_next)
        state.k += 1
        if on_step is not None:
            on_step(k, t, x_next)
    state.phase = "running"
    state.bound = bound
    return state


def run(
    problem: Problem,
    flows: Mapping[str, MatrixFlow],
    config: RunConfig,
    *,
    on_step: Callable[[int, float, np.ndarray], None] | None = None,
) -> Trace:
    """Warm-up followed by the look-ahead recursion over the whole grid.

    One record per grid step holds the residual of ``x_k`` at ``t_k``.
    ``on_step(k, t_k, x_next)`` is called right after ``x_{k+1}`` has
    been computed and before any sample at ``t_{k+1}`` is requested.
    """
    formula, eta, h = config.resolved()
    grid = config.grid
    tau = grid.tau
    order = config.deriv_order if config.deriv_order is not None else formula.ftype.j + 1
    header = {
        "problem": problem.name,
        "formula": formula.label,
        "tau": "%.17g" % tau,
        "eta": "%.17g" % eta,
        "h": "%.17g" % h,
        "t0": "%.17g" % grid.t0,
        "tf": "%.17g" % grid.tf,
        "start": config.start,
        "rng": config.rng_seed,
    }
    trace = Trace(header)
    sampler = _Sampler(flows, problem.needs, tau, config.derivative, order)
    rng = np.random.default_rng(config.rng_seed)
    t_start = time.perf_counter()
    try:
        state = warmup(problem, flows, formula, config, rng, _sampler=sampler, _trace=trace, _eta=eta,
                       on_step=on_step)
        bound = state.bound
        while state.k <= grid.steps:
            k = state.k
            t = grid.time(k)
            S, dS = sampler.at(t)
            z = state.current
            rate, cond = problem.rate(t, S, dS, z, eta)
            _record(trace, problem, k, t, S, z, cond, config)
            if k == grid.steps:
                break
            x_next = step(formula, state, rate, tau)
            if np.linalg.norm(x_next) > bound:
                raise Diverged(k, reason="iterate norm exceeds the divergence bound")
            if on_step is not None:
                on_step(k, t, x_next)
    except Diverged as exc:
        exc.trace = trace
        trace.diverged_at = exc.k
        trace.wall_time = time.perf_counter() - t_start
        raise
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        trace.diverged_at = len(trace) + 1
        trace.wall_time = time.perf_counter() - t_start
        raise Diverged(len(trace) + 1, trace, str(exc)) from exc
    trace.wall_time = time.perf_counter() - t_start
    return trace


def fov_boundary(
    A,
    formula: str | DifferenceFormula = "2_3",
    tau: float = 2 * math.pi / 2000,
    h: float | None = None,
    eta: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Field-of-values boundary of ``A`` traced over ``t`` in ``[0, 2 pi]``.

    One eigenpair track per eigenvalue of ``cos(t) H + sin(t) K`` is run
    with the ZNN eigen solver; at each time the track with the largest
    eigenvalue supplies the boundary point ``x* A x``.  Taking the maximum
    over all tracks keeps the boundary correct where eigencurves cross.
    Returns the times and the complex boundary points.
    """
    A = np.asarray(A, dtype=complex)
    flows = {"A": fov_flow(A)}
    grid = SamplingGrid(0.0, 2 * math.pi, tau)
    tracks = []
    for i in range(A.shape[0]):
        config = RunConfig(formula, grid, eta=eta, h=h, record_solution=True)
        tracks.append(run(Eigen(i), flows, config))
    n = A.shape[0]
    t = tracks[0].t
    lam = np.array([[r.solution[n].real for r in tr.records] for tr in tracks])
    best = np.argmax(lam, axis=0)
    points = np.array([fov_point(A, tracks[b].records[k].solution[:n]) for k, b in enumerate(best)])
    return t, points
