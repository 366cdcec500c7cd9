"""Detector, error signals and stochastic-gradient updates.

One receiver unit (a user at one cancellation stage) carries three
coupled parameter sets: the filter ``w`` applied to the cancelled input,
the cancellation weights ``lam`` over its group, and the channel
estimate ``h_hat`` behind its own regenerated contribution.  Both costs

    J1 = E|b - w^H r_c|^2          (detection error)
    J2 = E||F h_hat - r + D lam||^2  (reconstruction error)

are quadratic in their parameters; the instantaneous-gradient updates
below descend J1 in ``w`` and J2 in ``lam`` and ``h_hat``:

    w      <- w      + mu_w   * conj(e_scalar) * r_c
    lam    <- lam    - mu_lam * D^H e_vector
    h_hat  <- h_hat  - mu_h   * F^H e_vector

with ``e_scalar = b_ref - w^H r_c`` and ``e_vector = F h_hat - r + D lam``
(equal to ``F h_hat - r_c`` when ``r_c = r - D lam``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "StepSizes",
    "EstimatorState",
    "ErrorSignals",
    "detect",
    "compute_errors",
    "update_w",
    "update_lambda",
    "update_h",
]


@dataclass(frozen=True)
class StepSizes:
    """Positive stochastic-gradient step sizes for (w, lam, h_hat)."""

    mu_w: float
    mu_lambda: float
    mu_h: float

    def __post_init__(self) -> None:
        for name in ("mu_w", "mu_lambda", "mu_h"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class EstimatorState:
    """Adaptive parameters of one user at one cancellation stage."""

    w: np.ndarray
    lam: np.ndarray
    h_hat: np.ndarray
    stage: int = 1


@dataclass(frozen=True)
class ErrorSignals:
    """Scalar detection error and vector reconstruction error."""

    e_scalar: complex
    e_vector: np.ndarray


def detect(x):
    """Hard QPSK decision ``sgn(Re x) + j sgn(Im x)`` with ``sgn(0) = +1``.

    Accepts scalars or arrays; idempotent on its own outputs.
    """
    x = np.asarray(x)
    d = np.where(x.real >= 0, 1.0, -1.0) + 1j * np.where(x.imag >= 0, 1.0, -1.0)
    if d.ndim == 0:
        return complex(d)
    return d


def compute_errors(
    state: EstimatorState,
    r: np.ndarray,
    r_cancelled: np.ndarray,
    f: np.ndarray,
    d: np.ndarray,
    b_ref: complex,
) -> ErrorSignals:
    """Evaluate both error signals at the current parameters.

    ``b_ref`` is the known training symbol or the receiver's own
    decision.  ``r_cancelled`` feeds the filter; the reconstruction error
    is evaluated literally as ``F h_hat - r + D lam`` (equal to
    ``F h_hat - r_cancelled`` whenever the caller derived ``r_cancelled``
    from the same ``D`` and ``lam``).
    """
    e_scalar = b_ref - np.vdot(state.w, r_cancelled)
    e_vector = f @ state.h_hat - r + d @ state.lam
    return ErrorSignals(e_scalar=complex(e_scalar), e_vector=e_vector)


def update_w(state: EstimatorState, e_scalar: complex, r_cancelled: np.ndarray, mu_w: float) -> np.ndarray:
    """One gradient step on the detection cost; returns the new filter."""
    return state.w + mu_w * np.conj(e_scalar) * r_cancelled


def update_lambda(state: EstimatorState, d: np.ndarray, e_vector: np.ndarray, mu_lambda: float) -> np.ndarray:
    """One gradient step on the reconstruction cost in ``lam``."""
    return state.lam - mu_lambda * (d.conj().T @ e_vector)


def update_h(state: EstimatorState, f: np.ndarray, e_vector: np.ndarray, mu_h: float) -> np.ndarray:
    """One gradient step on the reconstruction cost in ``h_hat``."""
    return state.h_hat - mu_h * (f.conj().T @ e_vector)
