"""Closed-form building blocks of the stochastic FitzHugh-Nagumo model and its
structure-preserving splitting simulator.

The two-dimensional SDE for the membrane voltage ``v`` and recovery variable
``u`` is split into an exactly solvable linear SDE and an exactly solvable
nonlinear ODE.  One step of size ``dt`` composes a half-step of the nonlinear
flow, the exact linear step (matrix exponential plus a correlated Gaussian
increment), and another half-step of the nonlinear flow.

2x2 matrices and 2-vectors are plain ``numpy`` arrays in row-major order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SimulationBlowupError, UnsupportedRegimeError

__all__ = [
    "ModelParams",
    "State",
    "Trajectory",
    "kappa",
    "linear_matrices",
    "ode_flow",
    "drift",
    "strang_path",
    "simulate_paths_batch",
]


@dataclass(frozen=True)
class ModelParams:
    """FitzHugh-Nagumo parameters.

    epsilon  time-scale separation of the voltage dynamics
    gamma    spike duration
    beta     spike position
    sigma    noise intensity on the recovery variable

    All four are strictly positive for the model proper; the simulator
    additionally requires the weakly damped regime ``kappa(params) > 0`` and
    tolerates ``sigma == 0`` so that the deterministic limit can be exercised.
    Validation happens at the point of use (simulator, priors), not at
    construction, because proposal machinery legitimately builds candidate
    values that are only filtered afterwards.
    """

    epsilon: float
    gamma: float
    beta: float
    sigma: float

    def as_array(self) -> np.ndarray:
        return np.array([self.epsilon, self.gamma, self.beta, self.sigma])

    @classmethod
    def from_array(cls, theta) -> "ModelParams":
        e, g, b, s = np.asarray(theta, dtype=float).reshape(4)
        return cls(float(e), float(g), float(b), float(s))


@dataclass(frozen=True)
class State:
    """One point (v, u) of the two-dimensional state space."""

    v: float
    u: float

    def as_array(self) -> np.ndarray:
        return np.array([self.v, self.u])


@dataclass(frozen=True)
class Trajectory:
    """Equidistant path output; ``v_values[0]`` is the initial voltage."""

    step: float
    v_values: np.ndarray
    u_values: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.v_values)

    @property
    def times(self) -> np.ndarray:
        return self.step * np.arange(len(self.v_values))


def kappa(params: ModelParams) -> float:
    """Damping discriminant 4*gamma/epsilon - 1 of the linear subequation.

    Positive values put the underlying stochastic oscillator in the weakly
    damped regime; the simulator requires this.
    """
    return 4.0 * params.gamma / params.epsilon - 1.0


def _require_simulable(params: ModelParams) -> float:
    """Validate parameters for the closed-form machinery, return kappa."""
    th = params.as_array()
    if not np.all(np.isfinite(th)):
        raise ValueError(f"non-finite parameters: {params}")
    if params.epsilon <= 0.0 or params.gamma <= 0.0:
        raise ValueError("epsilon and gamma must be strictly positive")
    if params.sigma < 0.0:
        raise ValueError("sigma must be nonnegative")
    k = kappa(params)
    if k <= 0.0:
        raise UnsupportedRegimeError(
            f"kappa = {k:.6g} <= 0 (over/critically damped regime not supported)"
        )
    return k


def linear_matrices(params: ModelParams, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact propagation matrices of the linear subequation over time ``t``.

    Returns ``(E, C)`` where ``E = exp(A t)`` with
    ``A = [[0, -1/epsilon], [gamma, -1]]`` and ``C`` is the covariance of the
    Gaussian increment accumulated over ``(0, t]``.  ``C`` is symmetric and,
    for ``t > 0``, strictly positive definite even though the driving noise
    only enters the second coordinate.
    """
    k = _require_simulable(params)
    if t < 0.0:
        raise ValueError("t must be nonnegative")
    if t == 0.0:
        return np.eye(2), np.zeros((2, 2))

    eps, gam, sig = params.epsilon, params.gamma, params.sigma
    sk = math.sqrt(k)
    half = 0.5 * sk * t
    decay = math.exp(-0.5 * t)
    cos_h, sin_h = math.cos(half), math.sin(half)
    E = decay * np.array(
        [
            [cos_h + sin_h / sk, -2.0 * sin_h / (eps * sk)],
            [2.0 * gam * sin_h / sk, cos_h - sin_h / sk],
        ]
    )

    et = math.exp(-t)
    cos_f, sin_f = math.cos(sk * t), math.sin(sk * t)
    s2 = sig * sig
    c11 = s2 * et / (2.0 * eps * gam * k) * (
        -4.0 * gam / eps + k / et + cos_f - sk * sin_f
    )
    c12 = s2 * et / (k * eps) * (cos_f - 1.0)
    c22 = s2 * et / (2.0 * k) * (cos_f + sk * sin_f - 4.0 * gam / eps + k / et)
    C = np.array([[c11, c12], [c12, c22]])
    return E, C


def _chol2(c11: float, c12: float, c22: float) -> np.ndarray:
    """Lower-triangular factor of a symmetric PSD 2x2 matrix.

    A zero matrix factors to zero.  If the leading entry is numerically
    nonpositive (possible for t -> 0 where the whole matrix vanishes), a
    diagonal jitter of 1e-12 * trace is applied once.
    """
    trace = c11 + c22
    if trace == 0.0 and c12 == 0.0:
        return np.zeros((2, 2))
    if c11 <= 0.0 or (c22 - c12 * c12 / c11) < 0.0:
        jit = 1e-12 * trace
        c11, c22 = c11 + jit, c22 + jit
    l11 = math.sqrt(c11)
    l21 = c12 / l11
    l22 = math.sqrt(max(c22 - l21 * l21, 0.0))
    return np.array([[l11, 0.0], [l21, l22]])


def ode_flow(x: State, t: float, params: ModelParams) -> State:
    """Exact flow of the nonlinear subequation
    ``dv = (v - v^3)/epsilon dt, du = beta dt`` after time ``t >= 0``."""
    if t < 0.0:
        raise ValueError("t must be nonnegative")
    decay = math.exp(-2.0 * t / params.epsilon)
    v = x.v / math.sqrt(decay + x.v * x.v * (1.0 - decay))
    return State(v, params.beta * t + x.u)


def drift(x: State, params: ModelParams) -> np.ndarray:
    """Full drift vector; used by reference schemes and equilibrium checks."""
    return np.array(
        [
            (x.v - x.v**3 - x.u) / params.epsilon,
            params.gamma * x.v - x.u + params.beta,
        ]
    )


def _batch_step_terms(thetas: np.ndarray, step: float):
    """Per-path propagation constants for a batch of parameter vectors.

    ``thetas`` is (B, 4) with columns epsilon, gamma, beta, sigma; every row
    must satisfy kappa > 0.  Returns the half-flow decay factor, the half-step
    beta increment, the entries of E(step) and of the lower Cholesky factor of
    C(step).
    """
    eps, gam, bet, sig = (thetas[:, i] for i in range(4))
    k = 4.0 * gam / eps - 1.0
    if np.any(k <= 0.0):
        raise UnsupportedRegimeError("batch contains kappa <= 0 parameters")

    sk = np.sqrt(k)
    half = 0.5 * sk * step
    decay = math.exp(-0.5 * step)
    cos_h, sin_h = np.cos(half), np.sin(half)
    e11 = decay * (cos_h + sin_h / sk)
    e12 = decay * (-2.0 * sin_h / (eps * sk))
    e21 = decay * (2.0 * gam * sin_h / sk)
    e22 = decay * (cos_h - sin_h / sk)

    et = math.exp(-step)
    cos_f, sin_f = np.cos(sk * step), np.sin(sk * step)
    s2 = sig * sig
    c11 = s2 * et / (2.0 * eps * gam * k) * (-4.0 * gam / eps + k / et + cos_f - sk * sin_f)
    c12 = s2 * et / (k * eps) * (cos_f - 1.0)
    c22 = s2 * et / (2.0 * k) * (cos_f + sk * sin_f - 4.0 * gam / eps + k / et)

    # Vectorized 2x2 Cholesky with the same jitter fallback as _chol2.
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        trace = c11 + c22
        bad = (c11 <= 0.0) | (c22 * c11 - c12 * c12 < 0.0)
        nonzero = trace > 0.0
        jit = np.where(bad & nonzero, 1e-12 * trace, 0.0)
        c11j, c22j = c11 + jit, c22 + jit
        l11 = np.sqrt(np.maximum(c11j, 0.0))
        l21 = np.where(l11 > 0.0, c12 / np.where(l11 > 0.0, l11, 1.0), 0.0)
        l22 = np.sqrt(np.maximum(c22j - l21 * l21, 0.0))

    exp_half_flow = np.exp(-step / eps)  # e^{-2 (step/2) / eps}
    beta_half = 0.5 * step * bet
    return exp_half_flow, beta_half, (e11, e12, e21, e22), (l11, l21, l22)


def simulate_paths_batch(
    thetas: np.ndarray,
    x0: State,
    step: float,
    n: int,
    noise: np.ndarray,
    keep_u: bool = True,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Simulate one splitting path per parameter row, sharing the time grid.

    ``thetas`` is (B, 4); ``noise`` is (B, n, 2) standard normal draws, one
    pair per step, which the routine colours with the per-path factor of
    C(step).  Returns voltage and recovery arrays of shape (B, n + 1); the
    recovery history is None when ``keep_u`` is false (the terminal state
    still reflects it).  Non-finite rows signal a blown-up path; callers
    decide how to react (the inference engine treats them as rejections).
    """
    thetas = np.asarray(thetas, dtype=float)
    if thetas.ndim != 2 or thetas.shape[1] != 4:
        raise ValueError("thetas must have shape (B, 4)")
    B = thetas.shape[0]
    if noise.shape != (B, n, 2):
        raise ValueError(f"noise must have shape {(B, n, 2)}, got {noise.shape}")
    if step <= 0.0:
        raise ValueError("step must be positive")
    if n < 1:
        raise ValueError("n must be >= 1")

    ch, bh, (e11, e12, e21, e22), (l11, l21, l22) = _batch_step_terms(thetas, step)
    one_m_ch = 1.0 - ch

    # Colour the noise once, laid out step-major so the loop reads
    # contiguously: xi = L z for the per-path lower factor L.
    xi_v = np.empty((n, B))
    xi_u = np.empty((n, B))
    np.multiply(noise[:, :, 0].T, l11, out=xi_v)
    np.multiply(noise[:, :, 0].T, l21, out=xi_u)
    xi_u += noise[:, :, 1].T * l22

    V = np.empty((B, n + 1))
    U = np.empty((B, n + 1)) if keep_u else None
    v = np.full(B, float(x0.v))
    u = np.full(B, float(x0.u))
    V[:, 0] = v
    if keep_u:
        U[:, 0] = u

    w = np.empty(B)
    vh = np.empty(B)
    uh = np.empty(B)
    tmp = np.empty(B)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for i in range(n):
            # half-step of the nonlinear flow
            np.multiply(v, v, out=w)
            w *= one_m_ch
            w += ch
            np.sqrt(w, out=w)
            np.divide(v, w, out=vh)
            np.add(u, bh, out=uh)
            # exact linear step with correlated Gaussian increment
            np.multiply(e11, vh, out=v)
            np.multiply(e12, uh, out=tmp)
            v += tmp
            v += xi_v[i]
            np.multiply(e21, vh, out=u)
            np.multiply(e22, uh, out=tmp)
            u += tmp
            u += xi_u[i]
            # second half-step of the nonlinear flow
            np.multiply(v, v, out=w)
            w *= one_m_ch
            w += ch
            np.sqrt(w, out=w)
            v /= w
            u += bh
            V[:, i + 1] = v
            if keep_u:
                U[:, i + 1] = u
    return V, U


def strang_path(
    params: ModelParams,
    x0: State,
    step: float,
    n: int,
    rng: np.random.Generator,
) -> Trajectory:
    """Simulate one path of the full model over ``n`` steps of size ``step``.

    The Gaussian pair of every step is drawn from the supplied generator, so
    identical seeds reproduce identical trajectories bit for bit.

    Raises ``SimulationBlowupError`` (carrying the first offending step index)
    if the path leaves the finite range, and ``UnsupportedRegimeError`` for
    kappa <= 0.
    """
    _require_simulable(params)
    if not (np.isfinite(x0.v) and np.isfinite(x0.u)):
        raise ValueError("x0 must be finite")
    noise = rng.standard_normal((1, n, 2))
    V, U = simulate_paths_batch(params.as_array()[None, :], x0, step, n, noise)
    bad = ~(np.isfinite(V[0]) & np.isfinite(U[0]))
    if bad.any():
        raise SimulationBlowupError(int(np.argmax(bad)))
    return Trajectory(step=step, v_values=V[0], u_values=U[0])
