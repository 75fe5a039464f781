"""Rate assemblies for the time-varying matrix problems.

Each problem starts from an error function ``E`` (the model defect),
stipulates ``dE/dt = -eta * E`` and solves that relation for the rate of
the unknown.  The free functions compute one rate from samples; the
:class:`Problem` subclasses package them for the ZNN engine together
with the residual, a dense per-step oracle and a random start.

Unknowns are handed to the engine as flat vectors (column-stacked for
matrix unknowns).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np
import scipy.linalg as sla

from .tensor import kron, min_norm_solve, unvec, vec

__all__ = [
    "RankLoss",
    "EigenSystem",
    "linsys_rate",
    "inverse_rate",
    "pinv_rate",
    "lsq_rate",
    "lagrange_rate",
    "ineq_rate",
    "sqrt_rate",
    "sylvester_rate",
    "lyapunov_rate",
    "eigen_assemble",
    "fov_point",
    "Problem",
    "PROBLEMS",
    "make_problem",
]

# ratio sigma_min / sigma_max below which Gram matrices count as singular
RANK_RTOL = 1e-12


class RankLoss(np.linalg.LinAlgError):
    pass


def _ct(M):
    return M.conj().T


def _solve(M, rhs, what="matrix"):
    try:
        return np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:
        raise RankLoss(f"singular {what}") from exc


def _gram_solve(G, rhs, what):
    """Solve with a Gram matrix, checking its rank by singular values."""
    sv = np.linalg.svd(G, compute_uv=False)
    if sv[-1] <= RANK_RTOL * sv[0]:
        raise RankLoss(f"{what} is rank deficient (sigma_min/sigma_max = {sv[-1] / sv[0]:.3g})")
    return np.linalg.solve(G, rhs), float(sv[0] / sv[-1])


# -- free rate functions ---------------------------------------------------


def linsys_rate(A, Adot, b, bdot, x, eta, *, inverse=None, explicit_inverse=False):
    """Rate of ``x`` for ``A x = b``.

    ``inverse`` replaces ``A^{-1}`` by an approximate inverse (the coupled
    two-recursion scheme); ``explicit_inverse`` forms ``inv(A)``.
    """
    rhs = -Adot @ x + bdot - eta * (A @ x - b)
    if inverse is not None:
        return inverse @ rhs
    if explicit_inverse:
        return np.linalg.inv(A) @ rhs
    return _solve(A, rhs, "system matrix")


def inverse_rate(A, Adot, X, eta):
    """Rate of ``X`` tracking ``A^{-1}``; error ``A X - I``."""
    n = A.shape[0]
    return -X @ ((Adot + eta * A) @ X - eta * np.eye(n))


def pinv_rate(side, A, Adot, X, eta):
    """Rate of a full-rank pseudoinverse ``X`` of ``A``.

    right (m < n): error ``X A A* - A*``; left (m > n): error ``A* A X - A*``.
    """
    Ah, Adh = _ct(A), _ct(Adot)
    if side == "right":
        top = -X @ ((Adot + eta * A) @ Ah + A @ Adh) + Adh + eta * Ah
        # Y (A A*) = top  <=>  (A A*) Y* = top*  (A A* is hermitean)
        Yh, _ = _gram_solve(A @ Ah, _ct(top), "A A*")
        return _ct(Yh)
    if side == "left":
        rhs = -(Adh @ A + Ah @ Adot + eta * (Ah @ A)) @ X + Adh + eta * Ah
        out, _ = _gram_solve(Ah @ A, rhs, "A* A")
        return out
    raise ValueError("side must be 'left' or 'right'")


def lsq_rate(A, Adot, b, bdot, x, eta):
    """Least-squares rate: ``(A*A)^{-1} A* (-(Adot + eta A) x + bdot + eta b)``."""
    Ah = _ct(A)
    rhs = Ah @ (-(Adot + eta * A) @ x + bdot + eta * b)
    out, _ = _gram_solve(Ah @ A, rhs, "A* A")
    return out


def lagrange_rate(grad_f, hess_f, A, Adot, b, bdot, y, eta):
    """Rate of ``y = [x; lambda]`` for min f(x) subject to ``A x = b``.

    Returns ``(rate, cond)`` with the condition number of the KKT matrix.
    """
    n = A.shape[1]
    x, lam = y[:n], y[n:]
    h = np.concatenate([grad_f(x) + A.T @ lam, A @ x - b])
    ht = np.concatenate([Adot.T @ lam, Adot @ x - bdot])
    m = A.shape[0]
    J = np.block([[hess_f(x), A.T], [A, np.zeros((m, m))]])
    res = min_norm_solve(J, eta * h + ht)
    return -res.x, res.cond


def ineq_rate(variant, A, Adot, b, bdot, x, u, eta, C=None, Cdot=None, d=None, ddot=None, *, printed=False):
    """Rate of ``[x; u]`` for inequality systems via squared slack variables.

    ``Au``: ``A x + u.^2 = b``.  ``ACu``: ``A x = b`` and ``C x + u.^2 = d``.
    By default the ACu system is the derivative of its error function,
    ``[[A, 0], [C, 2 diag(u)]] [xdot; udot] = [bdot - Adot x; ddot - Cdot x] - eta E``;
    ``printed=True`` uses the derivative matrices as system matrix
    instead, which only agrees with it in special cases.
    Returns ``(rate, cond)``.
    """
    if variant == "Au":
        M = np.hstack([A, 2 * np.diag(u)])
        q = bdot - Adot @ x - eta * (A @ x + u * u - b)
        res = min_norm_solve(M, q)
        return res.x, res.cond
    if variant != "ACu":
        raise ValueError("variant must be 'Au' or 'ACu'")
    if C is None or d is None:
        raise ValueError("ACu needs C and d")
    m, n = A.shape
    k = C.shape[0]
    E = np.concatenate([A @ x - b, C @ x + u * u - d])
    if printed:
        M = np.block([[Adot, np.zeros((m, k))], [Cdot, 2 * np.diag(u)]])
        q = np.concatenate([bdot, ddot]) - eta * E
    else:
        M = np.block([[A, np.zeros((m, k))], [C, 2 * np.diag(u)]])
        q = np.concatenate([bdot - Adot @ x, ddot - Cdot @ x]) - eta * E
    res = min_norm_solve(M, q)
    return res.x, res.cond


def sqrt_rate(A, Adot, X, eta):
    """Vectorized rate of a square root ``X`` of ``A``; error ``A - X X``.

    Returns ``(vec(Xdot), cond)``; the minimum-norm solve covers a
    singular Kronecker sum.
    """
    n = A.shape[0]
    eye = np.eye(n)
    KX = kron(X.T, eye)
    M = KX + kron(eye, X)
    q = vec(Adot) + eta * vec(A) - eta * (KX @ vec(X))
    res = min_norm_solve(M, q)
    return res.x, res.cond


def sylvester_rate(A, Adot, B, Bdot, C, Cdot, X, eta, *, kron_form=False):
    """Vectorized rate for ``A X + X B = C``; returns ``(vec(Xdot), cond)``."""
    n, m = X.shape
    In, Im = np.eye(n), np.eye(m)
    M = kron(Im, A) + kron(B.T, In)
    if kron_form:
        Mdot = kron(Im, Adot) + kron(Bdot.T, In)
        q = -Mdot @ vec(X) + vec(Cdot) - eta * (M @ vec(X) - vec(C))
    else:
        q = -vec(Adot @ X) - vec(X @ Bdot) + vec(Cdot) - eta * (vec(A @ X) + vec(X @ B) - vec(C))
    res = min_norm_solve(M, q)
    return res.x, res.cond


def lyapunov_rate(A, Adot, Q, Qdot, X, eta):
    """Vectorized rate for ``A X A* - X + Q = 0``; returns ``(vec(Xdot), cond)``."""
    n = A.shape[0]
    Abar = A.conj()
    KA = kron(Abar, A)
    M = np.eye(n * n) - KA
    q = (kron(Adot.conj(), A) + kron(Abar, Adot)) @ vec(X) - eta * (M @ vec(X)) + eta * vec(Q) + vec(Qdot)
    res = min_norm_solve(M, q)
    return res.x, res.cond


@dataclass(frozen=True)
class EigenSystem:
    P: np.ndarray
    q: np.ndarray

    def solve(self):
        return min_norm_solve(self.P, self.q)


def eigen_assemble(A, Adot, z, eta) -> EigenSystem:
    """Linear system for ``zdot`` with ``z = [x; lambda]``.

    Errors ``(A - lambda I) x`` and ``x* x - 1`` decay with rates ``eta``
    and ``2 eta`` respectively.
    """
    n = A.shape[0]
    x, lam = z[:n], z[n]
    shifted = A - lam * np.eye(n)
    P = np.zeros((n + 1, n + 1), dtype=np.result_type(A, z))
    P[:n, :n] = shifted
    P[:n, n] = -x
    P[n, :n] = -x.conj()
    q = np.concatenate([(-eta * shifted - Adot) @ x, [eta * (np.vdot(x, x) - 1)]])
    return EigenSystem(P, q)


def fov_point(A, x) -> complex:
    """Rayleigh quotient ``x* A x / x* x``."""
    x = np.asarray(x)
    nrm = np.vdot(x, x).real
    if nrm == 0:
        raise ValueError("field-of-values point needs a nonzero vector")
    return complex(np.vdot(x, np.asarray(A) @ x) / nrm)


# -- problem classes -------------------------------------------------------

Samples = Mapping[str, np.ndarray]


def _dtype(samples: Samples):
    return np.result_type(*samples.values(), np.float64)


def _col(v):
    return np.asarray(v).reshape(-1)


class Problem:
    """Interface between a problem class and the ZNN engine.

    ``needs`` lists the flow keys read each step.  ``rate`` returns the
    vectorized rate and the condition number of the linear solve (1.0
    when no solve is involved).
    """

    name = "problem"
    needs: tuple[str, ...] = ("A",)

    def size(self, S: Samples) -> int:
        raise NotImplementedError

    def rate(self, t, S: Samples, dS: Samples, z, eta):
        raise NotImplementedError

    def residual(self, t, S: Samples, z) -> np.ndarray:
        raise NotImplementedError

    def scale(self, t, S: Samples) -> float:
        raise NotImplementedError

    def oracle(self, t, S: Samples):
        """Dense per-step solution (vectorized) or None when not unique."""
        return None

    def oracle_error(self, t, S: Samples, z) -> float:
        """Relative distance of ``z`` from the oracle solution."""
        ref = self.oracle(t, S)
        if ref is None:
            return float(np.linalg.norm(self.residual(t, S, z)) / max(self.scale(t, S), 1e-300))
        return float(np.linalg.norm(z - ref) / max(np.linalg.norm(ref), 1e-300))

    def initial(self, t, S: Samples):
        """Start value for an oracle start (the oracle solution by default)."""
        return self.oracle(t, S)

    def random_start(self, S: Samples, rng: np.random.Generator):
        z = rng.standard_normal(self.size(S))
        if np.iscomplexobj(_dtype(S)):
            z = z + 1j * rng.standard_normal(self.size(S))
        return z

    def solution(self, S: Samples, z):
        """Unknown in its natural shape."""
        return z

    def dtype(self, S: Samples):
        return _dtype(S)


class LinearSystem(Problem):
    name = "linsys"
    needs = ("A", "b")

    def __init__(self, variant: str = "solve"):
        if variant not in ("solve", "explicit-inverse", "coupled"):
            raise ValueError(f"unknown linsys variant {variant!r}")
        self.variant = variant

    def size(self, S):
        n = S["A"].shape[1]
        return n + n * n if self.variant == "coupled" else n

    def rate(self, t, S, dS, z, eta):
        A, Adot, b, bdot = S["A"], dS["A"], _col(S["b"]), _col(dS["b"])
        n = A.shape[1]
        x = z[:n]
        if self.variant == "coupled":
            X = unvec(z[n:], n, n)
            xdot = linsys_rate(A, Adot, b, bdot, x, eta, inverse=X)
            Xdot = inverse_rate(A, Adot, X, eta)
            return np.concatenate([xdot, vec(Xdot)]), 1.0
        xdot = linsys_rate(A, Adot, b, bdot, x, eta, explicit_inverse=self.variant == "explicit-inverse")
        return xdot, float(np.linalg.cond(A))

    def residual(self, t, S, z):
        n = S["A"].shape[1]
        return S["A"] @ z[:n] - _col(S["b"])

    def scale(self, t, S):
        return float(np.linalg.norm(S["b"]))

    def oracle(self, t, S):
        x = np.linalg.solve(S["A"], _col(S["b"]))
        if self.variant == "coupled":
            return np.concatenate([x, vec(np.linalg.inv(S["A"]))])
        return x

    def oracle_error(self, t, S, z):
        n = S["A"].shape[1]
        ref = np.linalg.solve(S["A"], _col(S["b"]))
        return float(np.linalg.norm(z[:n] - ref) / np.linalg.norm(ref))

    def solution(self, S, z):
        return z[: S["A"].shape[1]]


class MatrixInverse(Problem):
    name = "inverse"
    needs = ("A",)

    def size(self, S):
        return S["A"].size

    def rate(self, t, S, dS, z, eta):
        n = S["A"].shape[0]
        return vec(inverse_rate(S["A"], dS["A"], unvec(z, n, n), eta)), 1.0

    def residual(self, t, S, z):
        n = S["A"].shape[0]
        return S["A"] @ unvec(z, n, n) - np.eye(n)

    def scale(self, t, S):
        return math.sqrt(S["A"].shape[0])

    def oracle(self, t, S):
        return vec(np.linalg.inv(S["A"]))

    def solution(self, S, z):
        n = S["A"].shape[0]
        return unvec(z, n, n)


class Pseudoinverse(Problem):
    needs = ("A",)

    def __init__(self, side: str):
        if side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")
        self.side = side
        self.name = f"pinv-{side}"

    def _check(self, A):
        m, n = A.shape
        if self.side == "right" and not m < n:
            raise ValueError("right pseudoinverse needs a wide matrix (m < n)")
        if self.side == "left" and not m > n:
            raise ValueError("left pseudoinverse needs a tall matrix (m > n)")

    def size(self, S):
        self._check(S["A"])
        return S["A"].size

    def rate(self, t, S, dS, z, eta):
        A = S["A"]
        m, n = A.shape
        X = unvec(z, n, m)
        return vec(pinv_rate(self.side, A, dS["A"], X, eta)), float(np.linalg.cond(A))

    def residual(self, t, S, z):
        A = S["A"]
        m, n = A.shape
        X = unvec(z, n, m)
        if self.side == "right":
            return X @ A @ _ct(A) - _ct(A)
        return _ct(A) @ A @ X - _ct(A)

    def scale(self, t, S):
        return float(np.linalg.norm(S["A"]))

    def oracle(self, t, S):
        return vec(np.linalg.pinv(S["A"]))

    def solution(self, S, z):
        m, n = S["A"].shape
        return unvec(z, n, m)


class LeastSquares(Problem):
    name = "lsq"
    needs = ("A", "b")

    def size(self, S):
        return S["A"].shape[1]

    def rate(self, t, S, dS, z, eta):
        A = S["A"]
        return lsq_rate(A, dS["A"], _col(S["b"]), _col(dS["b"]), z, eta), float(np.linalg.cond(A))

    def residual(self, t, S, z):
        return S["A"] @ z - _col(S["b"])

    def scale(self, t, S):
        return float(np.linalg.norm(S["b"]))

    def oracle(self, t, S):
        return np.linalg.lstsq(S["A"], _col(S["b"]), rcond=None)[0]


class Lagrange(Problem):
    """min f(x) subject to ``A x = b``; the default f is ``sum(x**2)``."""

    name = "lagrange"
    needs = ("A", "b")

    def __init__(self, grad_f: Callable | None = None, hess_f: Callable | None = None):
        if (grad_f is None) != (hess_f is None):
            raise ValueError("supply both the gradient and the Hessian of f")
        self.grad_f = grad_f or (lambda x: 2 * x)
        self.hess_f = hess_f or (lambda x: 2 * np.eye(len(x)))

    def size(self, S):
        m, n = S["A"].shape
        return n + m

    def rate(self, t, S, dS, z, eta):
        return lagrange_rate(self.grad_f, self.hess_f, S["A"], dS["A"], _col(S["b"]), _col(dS["b"]), z, eta)

    def residual(self, t, S, z):
        A, b = S["A"], _col(S["b"])
        n = A.shape[1]
        return np.concatenate([self.grad_f(z[:n]) + A.T @ z[n:], A @ z[:n] - b])

    def scale(self, t, S):
        return float(np.linalg.norm(S["b"]))

    def oracle(self, t, S, iters: int = 50):
        # Newton on the KKT conditions; one step for quadratic objectives
        A, b = S["A"], _col(S["b"])
        m, n = A.shape
        y = np.zeros(n + m)
        for _ in range(iters):
            x, lam = y[:n], y[n:]
            h = np.concatenate([self.grad_f(x) + A.T @ lam, A @ x - b])
            J = np.block([[self.hess_f(x), A.T], [A, np.zeros((m, m))]])
            step = np.linalg.solve(J, h)
            y = y - step
            if np.linalg.norm(step) <= 1e-15 * max(1.0, np.linalg.norm(y)):
                break
        return y


class Inequality(Problem):
    """``A x <= b`` (Au) or ``A x = b, C x <= d`` (ACu) via slacks ``u.^2``.

    Solutions are not unique, so the oracle check is the residual of the
    slack equations.
    """

    def __init__(self, variant: str = "Au", printed: bool = False):
        if variant not in ("Au", "ACu"):
            raise ValueError("variant must be 'Au' or 'ACu'")
        self.variant = variant
        self.printed = printed
        self.name = f"ineq-{variant}"
        self.needs = ("A", "b") if variant == "Au" else ("A", "b", "C", "d")

    def _split(self, S, z):
        n = S["A"].shape[1]
        return z[:n], z[n:]

    def size(self, S):
        n = S["A"].shape[1]
        return n + (S["A"].shape[0] if self.variant == "Au" else S["C"].shape[0])

    def rate(self, t, S, dS, z, eta):
        x, u = self._split(S, z)
        if self.variant == "Au":
            return ineq_rate("Au", S["A"], dS["A"], _col(S["b"]), _col(dS["b"]), x, u, eta)
        return ineq_rate(
            "ACu", S["A"], dS["A"], _col(S["b"]), _col(dS["b"]), x, u, eta,
            S["C"], dS["C"], _col(S["d"]), _col(dS["d"]), printed=self.printed,
        )

    def residual(self, t, S, z):
        x, u = self._split(S, z)
        if self.variant == "Au":
            return S["A"] @ x + u * u - _col(S["b"])
        return np.concatenate([S["A"] @ x - _col(S["b"]), S["C"] @ x + u * u - _col(S["d"])])

    def scale(self, t, S):
        if self.variant == "Au":
            return float(np.linalg.norm(S["b"]))
        return float(math.hypot(np.linalg.norm(S["b"]), np.linalg.norm(S["d"])))

    def initial(self, t, S):
        # Au: unit slacks and the minimum-norm x of A x = b - 1.
        # ACu: minimum-norm x of A x = b, slacks from the remaining gap d - C x
        A, b = S["A"], _col(S["b"])
        if self.variant == "Au":
            u = np.ones(A.shape[0])
            x = min_norm_solve(A, b - 1.0).x
        else:
            x = min_norm_solve(A, b).x
            gap = _col(S["d"]) - S["C"] @ x
            u = np.sqrt(np.maximum(gap, 1e-2))
        return np.concatenate([x, u])

    def random_start(self, S, rng):
        z = rng.standard_normal(self.size(S))
        # keep slacks away from zero so 2 diag(u) starts nonsingular
        n = S["A"].shape[1]
        z[n:] = np.abs(z[n:]) + 0.5
        return z

    def feasibility(self, t, S, z) -> float:
        """Largest violation of the original inequalities (<= 0 when feasible)."""
        x, _ = self._split(S, z)
        if self.variant == "Au":
            return float(np.max(S["A"] @ x - _col(S["b"])))
        return float(np.max(S["C"] @ x - _col(S["d"])))


class SquareRoot(Problem):
    name = "sqrt"
    needs = ("A",)

    def size(self, S):
        return S["A"].size

    def rate(self, t, S, dS, z, eta):
        n = S["A"].shape[0]
        return sqrt_rate(S["A"], dS["A"], unvec(z, n, n), eta)

    def residual(self, t, S, z):
        n = S["A"].shape[0]
        X = unvec(z, n, n)
        return S["A"] - X @ X

    def scale(self, t, S):
        return float(np.linalg.norm(S["A"]))

    def oracle(self, t, S):
        return vec(sla.sqrtm(S["A"]))

    def oracle_error(self, t, S, z):
        # square roots are not unique; compare against the principal one
        # only when z is close to it, otherwise report the residual
        ref = self.oracle(t, S)
        dist = float(np.linalg.norm(z - ref) / np.linalg.norm(ref))
        if dist < 1e-3:
            return dist
        return float(np.linalg.norm(self.residual(t, S, z)) / self.scale(t, S))

    def solution(self, S, z):
        n = S["A"].shape[0]
        return unvec(z, n, n)


class Sylvester(Problem):
    name = "sylvester"
    needs = ("A", "B", "C")

    def __init__(self, kron_form: bool = False):
        self.kron_form = kron_form

    def size(self, S):
        return S["C"].size

    def rate(self, t, S, dS, z, eta):
        n, m = S["C"].shape
        return sylvester_rate(
            S["A"], dS["A"], S["B"], dS["B"], S["C"], dS["C"], unvec(z, n, m), eta, kron_form=self.kron_form
        )

    def residual(self, t, S, z):
        n, m = S["C"].shape
        X = unvec(z, n, m)
        return S["A"] @ X + X @ S["B"] - S["C"]

    def scale(self, t, S):
        return float(np.linalg.norm(S["C"]))

    def oracle(self, t, S):
        return vec(sla.solve_sylvester(S["A"], S["B"], S["C"]))

    def solution(self, S, z):
        return unvec(z, *S["C"].shape)


class Lyapunov(Problem):
    name = "lyapunov"
    needs = ("A", "Q")

    def size(self, S):
        return S["Q"].size

    def rate(self, t, S, dS, z, eta):
        n = S["A"].shape[0]
        return lyapunov_rate(S["A"], dS["A"], S["Q"], dS["Q"], unvec(z, n, n), eta)

    def residual(self, t, S, z):
        n = S["A"].shape[0]
        X = unvec(z, n, n)
        A = S["A"]
        return A @ X @ _ct(A) - X + S["Q"]

    def scale(self, t, S):
        return float(np.linalg.norm(S["Q"]))

    def oracle(self, t, S):
        return vec(sla.solve_discrete_lyapunov(S["A"], S["Q"]))

    def solution(self, S, z):
        n = S["A"].shape[0]
        return unvec(z, n, n)


class Eigen(Problem):
    """One eigenpair ``[x; lambda]`` of a hermitean flow.

    ``index`` selects the eigenvalue (ascending order) used by the oracle
    start and the oracle comparison.
    """

    name = "eigen"
    needs = ("A",)

    def __init__(self, index: int = 0):
        self.index = int(index)

    def size(self, S):
        return S["A"].shape[0] + 1

    def dtype(self, S):
        return np.complex128

    def rate(self, t, S, dS, z, eta):
        res = eigen_assemble(S["A"], dS["A"], z, eta).solve()
        return res.x, res.cond

    def residual(self, t, S, z):
        n = S["A"].shape[0]
        x, lam = z[:n], z[n]
        return np.concatenate([S["A"] @ x - lam * x, [np.vdot(x, x).real - 1]])

    def scale(self, t, S):
        return float(np.linalg.norm(S["A"]))

    def _pair(self, S):
        w, V = np.linalg.eigh(S["A"])
        return w[self.index], V[:, self.index]

    def oracle(self, t, S):
        lam, v = self._pair(S)
        return np.concatenate([v, [lam]]).astype(complex)

    def oracle_error(self, t, S, z):
        n = S["A"].shape[0]
        lam, v = self._pair(S)
        x = z[:n]
        # eigenvectors are fixed only up to a unit phase factor
        phase = np.vdot(v, x)
        phase = phase / abs(phase) if abs(phase) > 0 else 1.0
        vec_err = np.linalg.norm(x - phase * v)
        return float(max(vec_err, abs(z[n] - lam) / max(1.0, abs(lam))))

    def random_start(self, S, rng):
        n = S["A"].shape[0]
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        x /= np.linalg.norm(x)
        lam = np.vdot(x, S["A"] @ x)
        return np.concatenate([x, [lam]])


def _pinv_left():
    return Pseudoinverse("left")


def _pinv_right():
    return Pseudoinverse("right")


PROBLEMS: dict[str, Callable[..., Problem]] = {
    "linsys": LinearSystem,
    "inverse": MatrixInverse,
    "pinv-left": _pinv_left,
    "pinv-right": _pinv_right,
    "lsq": LeastSquares,
    "lagrange": Lagrange,
    "ineq-Au": lambda: Inequality("Au"),
    "ineq-ACu": lambda: Inequality("ACu"),
    "sqrt": SquareRoot,
    "sylvester": Sylvester,
    "lyapunov": Lyapunov,
    "eigen": Eigen,
}


def make_problem(text: str) -> Problem:
    """Build a problem from ``name`` or ``name:param`` (e.g. ``eigen:2``, ``linsys:coupled``)."""
    name, _, param = text.partition(":")
    if name not in PROBLEMS:
        raise KeyError(f"unknown problem {name!r}; known: {', '.join(sorted(PROBLEMS))}")
    if not param:
        return PROBLEMS[name]()
    if name == "eigen":
        return Eigen(int(param))
    if name == "linsys":
        return LinearSystem(param)
    if name == "sylvester" and param == "kron":
        return Sylvester(kron_form=True)
    if name == "ineq-ACu" and param == "printed":
        return Inequality("ACu", printed=True)
    raise ValueError(f"problem {name!r} takes no parameter {param!r}")
