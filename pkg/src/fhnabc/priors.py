"""Prior families over the four model parameters.

Three families are supported.  The conditional uniform draws gamma from
U(epsilon/4, hi) given the drawn epsilon, which guarantees the weakly damped
regime kappa > 0 by construction.  The log-normal and exponential families
live on the whole positive orthant and are unconditional on kappa; draws with
kappa <= 0 are the inference engine's job to reject, mirroring how kernel
proposals are filtered.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ModelParams

__all__ = ["PriorSpec", "prior_sample", "prior_density", "prior_density_batch"]

_FAMILIES = ("uniform_conditional", "lognormal", "exponential")
# hyperparameter layout (all positive, bounds ordered):
#   uniform_conditional: eps_lo, eps_hi, gamma_hi, beta_lo, beta_hi, sigma_lo, sigma_hi
#   lognormal:           (location, scale) for each of eps, gamma, beta, sigma
#   exponential:         rate for each of eps, gamma, beta, sigma
_N_PARAMS = {"uniform_conditional": 7, "lognormal": 8, "exponential": 4}


@dataclass(frozen=True)
class PriorSpec:
    """A prior family plus its flat hyperparameter vector (layout above)."""

    family: str
    hyperparameters: tuple[float, ...]

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown prior family {self.family!r}")
        hp = tuple(float(v) for v in self.hyperparameters)
        object.__setattr__(self, "hyperparameters", hp)
        if len(hp) != _N_PARAMS[self.family]:
            raise ValueError(
                f"{self.family} expects {_N_PARAMS[self.family]} hyperparameters, got {len(hp)}"
            )
        if self.family == "uniform_conditional":
            el, eh, gh, bl, bh, sl, sh = hp
            if not (0.0 < el < eh and 0.0 < bl < bh and 0.0 < sl < sh and gh > eh / 4.0):
                raise ValueError("uniform bounds must be ordered, positive, and leave "
                                 "room for gamma > epsilon/4")
        elif self.family == "lognormal":
            if any(s <= 0.0 for s in hp[1::2]):
                raise ValueError("log-normal scales must be strictly positive")
        else:
            if any(r <= 0.0 for r in hp):
                raise ValueError("exponential rates must be strictly positive")

    @classmethod
    def uniform_simulation(cls) -> "PriorSpec":
        """Conditional uniform box used for simulated-data studies."""
        return cls("uniform_conditional", (0.01, 0.5, 6.0, 0.01, 6.0, 0.01, 1.0))

    @classmethod
    def uniform_real_data(cls) -> "PriorSpec":
        """Wider conditional uniform box used for recorded voltage data."""
        return cls("uniform_conditional", (0.01, 1.0, 10.0, 0.01, 10.0, 0.01, 3.0))

    @classmethod
    def lognormal_default(cls) -> "PriorSpec":
        return cls("lognormal", (0.0, 1.0, 0.0, 0.5, 0.0, 1.0, 0.0, 0.75))

    @classmethod
    def exponential_default(cls) -> "PriorSpec":
        return cls("exponential", (3.0, 0.5, 0.5, 1.0))


def prior_sample(spec: PriorSpec, rng: np.random.Generator) -> ModelParams:
    """One independent draw from the prior."""
    hp = spec.hyperparameters
    if spec.family == "uniform_conditional":
        el, eh, gh, bl, bh, sl, sh = hp
        eps = rng.uniform(el, eh)
        gam = rng.uniform(eps / 4.0, gh)
        bet = rng.uniform(bl, bh)
        sig = rng.uniform(sl, sh)
    elif spec.family == "lognormal":
        draws = [rng.lognormal(hp[2 * i], hp[2 * i + 1]) for i in range(4)]
        eps, gam, bet, sig = draws
    else:
        eps, gam, bet, sig = (rng.exponential(1.0 / r) for r in hp)
    return ModelParams(float(eps), float(gam), float(bet), float(sig))


def prior_density_batch(spec: PriorSpec, thetas: np.ndarray) -> np.ndarray:
    """Prior density for each row of an (N, 4) parameter array.

    Exactly zero outside the support, including gamma <= epsilon/4 for the
    conditional uniform family and nonpositive components everywhere.
    """
    th = np.atleast_2d(np.asarray(thetas, dtype=float))
    eps, gam, bet, sig = th[:, 0], th[:, 1], th[:, 2], th[:, 3]
    hp = spec.hyperparameters
    out = np.zeros(th.shape[0])

    if spec.family == "uniform_conditional":
        el, eh, gh, bl, bh, sl, sh = hp
        ok = (
            (eps >= el) & (eps <= eh)
            & (gam > eps / 4.0) & (gam <= gh)
            & (bet >= bl) & (bet <= bh)
            & (sig >= sl) & (sig <= sh)
        )
        dens = 1.0 / ((eh - el) * (gh - eps / 4.0) * (bh - bl) * (sh - sl))
        out[ok] = dens[ok]
        return out

    pos = (eps > 0) & (gam > 0) & (bet > 0) & (sig > 0)
    if not pos.any():
        return out
    comps = (eps, gam, bet, sig)
    dens = np.ones(th.shape[0])
    if spec.family == "lognormal":
        for i, x in enumerate(comps):
            mu, s = hp[2 * i], hp[2 * i + 1]
            lx = np.log(np.where(pos, x, 1.0))
            dens *= np.exp(-0.5 * ((lx - mu) / s) ** 2) / (
                np.where(pos, x, 1.0) * s * math.sqrt(2.0 * math.pi)
            )
    else:
        for i, x in enumerate(comps):
            r = hp[i]
            dens *= r * np.exp(-r * np.where(pos, x, 0.0))
    out[pos] = dens[pos]
    return out


def prior_density(spec: PriorSpec, theta) -> float:
    """Prior density at one point (a ModelParams or a length-4 sequence)."""
    if isinstance(theta, ModelParams):
        theta = theta.as_array()
    return float(prior_density_batch(spec, np.asarray(theta, dtype=float)[None, :])[0])
