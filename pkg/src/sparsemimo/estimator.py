"""Adaptive update rules for identifying one MISO channel row.

Four algorithms share a single state/update contract:

* ``lms``      plain stochastic gradient,   h += mu * e * x
* ``nlms``     step normalized by the regressor energy,
               h += mu * e * x / (delta + x.x)
* ``lp_nlms``  NLMS minus a fractional-norm zero attractor scaled by
               rho_lp = mu * lambda_lp
* ``l0_nlms``  NLMS minus a piecewise-linear attractor acting only on taps
               inside the band |h| <= 1/beta, scaled by rho_l0

The sparse variants subtract the gradient of their sparsity penalty,
evaluated at the pre-update estimate, so small taps are dragged toward
zero while dominant taps are left to the normalized gradient step. The
smooth exponential attractor (the exact penalty gradient that the
piecewise rule approximates) is kept as an oracle for testing.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signal import Regressor

__all__ = [
    "ALGORITHMS",
    "NLMS_DELTA",
    "DivergenceError",
    "HyperParams",
    "EstimatorState",
    "predict",
    "error",
    "update",
    "lms_update",
    "nlms_update",
    "lp_nlms_update",
    "l0_nlms_update",
    "lp_norm",
    "lp_attractor",
    "l0_approx_norm",
    "j_attractor",
    "l0_exponential_attractor",
]

ALGORITHMS = ("lms", "nlms", "lp_nlms", "l0_nlms")

# Keeps the all-zero cold-start regressor from dividing by zero.
NLMS_DELTA = 1e-12


def _quiet():
    # Divergence shows up as overflow/invalid and is reported via
    # DivergenceError; errstate instances are single-use in numpy >= 2.
    return np.errstate(over="ignore", invalid="ignore")


class DivergenceError(RuntimeError):
    """An update produced a non-finite estimate; the run must be aborted."""


@dataclass(frozen=True)
class HyperParams:
    """Step size and sparsity-penalty knobs shared by all update rules.

    ``lambda_lp``/``lambda_l0`` weigh the sparsity penalties; the effective
    attractor strengths are ``rho_lp = mu * lambda_lp`` and
    ``rho_l0 = mu * lambda_l0``. ``p`` is the fractional norm exponent,
    ``epsilon`` guards the attractor denominator near zero taps, and
    ``1/beta`` is the half-width of the piecewise attractor's active band.
    """

    mu: float = 0.5
    lambda_lp: float = 0.0
    lambda_l0: float = 0.0
    p: float = 0.45
    epsilon: float = 0.02
    beta: float = 15.0

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if self.lambda_lp < 0 or self.lambda_l0 < 0:
            raise ValueError("regularization weights must be nonnegative")
        if not 0 < self.p <= 1:
            raise ValueError(f"p must lie in (0, 1], got {self.p}")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be nonnegative, got {self.epsilon}")
        if self.beta <= 0:
            raise ValueError(f"beta must be positive, got {self.beta}")

    @property
    def rho_lp(self) -> float:
        return self.mu * self.lambda_lp

    @property
    def rho_l0(self) -> float:
        return self.mu * self.lambda_l0


@dataclass(frozen=True, eq=False)
class EstimatorState:
    """Current estimate of one MISO row plus the rule that updates it."""

    estimate: np.ndarray
    algorithm: str
    hyper: HyperParams

    @classmethod
    def initial(cls, size: int, algorithm: str, hyper: HyperParams) -> "EstimatorState":
        """All-zero cold start of the given length."""
        if algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")
        if algorithm != "lms" and not hyper.mu < 2.0:
            raise ValueError(f"normalized algorithms require mu in (0, 2), got {hyper.mu}")
        return cls(np.zeros(size), algorithm, hyper)


def _advance(state: EstimatorState, estimate: np.ndarray) -> EstimatorState:
    if not np.isfinite(estimate).all():
        raise DivergenceError(f"{state.algorithm} estimate left the finite range")
    return EstimatorState(estimate, state.algorithm, state.hyper)


def predict(state: EstimatorState, x: Regressor) -> float:
    """Filter output for the current estimate: dot(estimate, x)."""
    if state.estimate.size != x.stacked.size:
        raise ValueError(
            f"estimate length {state.estimate.size} does not match regressor length {x.stacked.size}"
        )
    return float(state.estimate @ x.stacked)


def error(y: float, y_hat: float) -> float:
    """A-priori estimation error e = y - y_hat."""
    return float(y) - float(y_hat)


def lms_update(state: EstimatorState, x: Regressor, e: float) -> EstimatorState:
    with _quiet():
        estimate = state.estimate + state.hyper.mu * e * x.stacked
    return _advance(state, estimate)


def nlms_update(state: EstimatorState, x: Regressor, e: float, delta: float = NLMS_DELTA) -> EstimatorState:
    """Energy-normalized gradient step; scale-invariant in (x, y)."""
    xs = x.stacked
    with _quiet():
        den = delta + float(xs @ xs)
        if den == 0.0:
            # all-zero regressor and no guard: nothing to learn from
            return state
        estimate = state.estimate + (state.hyper.mu * e / den) * xs
    return _advance(state, estimate)


def lp_norm(h, p: float) -> float:
    """Fractional vector norm ``(sum |h_i|^p) ** (1/p)`` for p in (0, 2]."""
    if not 0 < p <= 2:
        raise ValueError(f"p must lie in (0, 2], got {p}")
    h = np.asarray(h, dtype=np.float64)
    return float(np.sum(np.abs(h) ** p) ** (1.0 / p))


def lp_attractor(h, p: float, epsilon: float) -> np.ndarray:
    """Zero-attractor of the fractional-norm penalty, evaluated elementwise.

    Component i is ``||h||_p^(1-p) * sgn(h_i) / (epsilon + |h_i|^(1-p))``
    with sgn(0) = 0; ``epsilon > 0`` removes the singularity of vanishing
    taps.
    """
    if not 0 < p <= 1:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    h = np.asarray(h, dtype=np.float64)
    scale = lp_norm(h, p) ** (1.0 - p)
    return scale * np.sign(h) / (epsilon + np.abs(h) ** (1.0 - p))


def lp_nlms_update(state: EstimatorState, x: Regressor, e: float) -> EstimatorState:
    """NLMS step minus rho_lp times the fractional-norm attractor."""
    hp = state.hyper
    base = nlms_update(state, x, e)
    with _quiet():
        estimate = base.estimate - hp.rho_lp * lp_attractor(state.estimate, hp.p, hp.epsilon)
    return _advance(state, estimate)


def l0_approx_norm(h, beta: float) -> float:
    """Smooth nonzero-count surrogate ``sum(1 - exp(-beta * |h_i|))``.

    Never exceeds the exact nonzero count and approaches it as beta grows.
    """
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    h = np.asarray(h, dtype=np.float64)
    return float(np.sum(1.0 - np.exp(-beta * np.abs(h))))


def l0_exponential_attractor(h, beta: float) -> np.ndarray:
    """Exact gradient of :func:`l0_approx_norm`: ``beta * sgn(h) * exp(-beta |h|)``."""
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    h = np.asarray(h, dtype=np.float64)
    return beta * np.sign(h) * np.exp(-beta * np.abs(h))


def j_attractor(h, beta: float) -> np.ndarray:
    """First-order approximation of twice the exponential attractor.

    ``2*beta*sgn(h_i) - 2*beta**2*h_i`` inside the band ``|h_i| <= 1/beta``
    and zero outside; continuous at the band edge. Subtracting a small
    positive multiple of this vector shrinks in-band taps toward zero
    without flipping their sign and leaves out-of-band taps untouched.
    """
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    h = np.asarray(h, dtype=np.float64)
    inside = np.abs(h) <= 1.0 / beta
    return np.where(inside, 2.0 * beta * np.sign(h) - 2.0 * beta**2 * h, 0.0)


def l0_nlms_update(state: EstimatorState, x: Regressor, e: float) -> EstimatorState:
    """NLMS step minus rho_l0 times the banded attractor."""
    hp = state.hyper
    base = nlms_update(state, x, e)
    with _quiet():
        estimate = base.estimate - hp.rho_l0 * j_attractor(state.estimate, hp.beta)
    return _advance(state, estimate)


_UPDATES = {
    "lms": lms_update,
    "nlms": nlms_update,
    "lp_nlms": lp_nlms_update,
    "l0_nlms": l0_nlms_update,
}


def update(state: EstimatorState, x: Regressor, e: float) -> EstimatorState:
    """Apply the state's own update rule; the common entry point."""
    try:
        rule = _UPDATES[state.algorithm]
    except KeyError:
        raise ValueError(
            f"unknown algorithm {state.algorithm!r}; expected one of {ALGORITHMS}"
        ) from None
    return rule(state, x, e)
