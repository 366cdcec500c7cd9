"""Batch MMSE solvers: the block-coordinate oracle behind the adaptive loops.

For a recorded batch of observations with fixed regeneration inputs, the
three parameter sets solve regularized normal equations built from sample
statistics:

    w     = (R_hat + eps I)^-1  p_b,     R_hat = E[r_c r_c^H],  p_b = E[b* r_c]
    lam   = (R_D  + eps I)^-1  p_F,      R_D   = E[D^H D],      p_F = E[D^H (r - F h_hat)]
    h_hat = (R_F  + eps I)^-1  p_D,      R_F   = E[F^H F],      p_D = E[F^H (r - D lam)]

The cross statistics depend on the other block's current value, so the
equations are iterated: each :func:`alternate` round refreshes the
statistics, solves for ``h_hat``, refreshes, solves for ``lam``,
refreshes, and solves for ``w``.  Because every block solve is an exact
least-squares minimizer given the other block, the reconstruction cost
``J2`` is non-increasing round over round (up to the ridge term).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SingularStatisticsError",
    "SampleStatistics",
    "SymbolBatch",
    "AlternateResult",
    "accumulate",
    "batch_statistics",
    "solve_w",
    "solve_lambda",
    "solve_h",
    "alternate",
]

_COND_LIMIT = 1e12


class SingularStatisticsError(RuntimeError):
    """Raised when a normal-equation matrix is (near-)singular with ridge 0."""


@dataclass
class SampleStatistics:
    """Running sample means of the six statistics; Hermitian by construction."""

    r_cov: np.ndarray
    p_b: np.ndarray
    d_cov: np.ndarray
    p_f: np.ndarray
    f_cov: np.ndarray
    p_d: np.ndarray
    n_samples: int = 0

    @classmethod
    def empty(cls, m_dim: int, p_dim: int, lp: int) -> "SampleStatistics":
        return cls(
            r_cov=np.zeros((m_dim, m_dim), dtype=np.complex128),
            p_b=np.zeros(m_dim, dtype=np.complex128),
            d_cov=np.zeros((p_dim, p_dim), dtype=np.complex128),
            p_f=np.zeros(p_dim, dtype=np.complex128),
            f_cov=np.zeros((lp, lp), dtype=np.complex128),
            p_d=np.zeros(lp, dtype=np.complex128),
            n_samples=0,
        )


@dataclass(frozen=True)
class SymbolBatch:
    """Recorded samples with fixed regeneration inputs.

    ``r`` is (n, M), ``b`` (n,), ``f`` (n, M, Lp), ``d`` (n, M, P); the
    group dimension P may be zero.
    """

    r: np.ndarray
    b: np.ndarray
    f: np.ndarray
    d: np.ndarray

    def __post_init__(self) -> None:
        r = np.asarray(self.r, dtype=np.complex128)
        b = np.asarray(self.b, dtype=np.complex128).reshape(-1)
        f = np.asarray(self.f, dtype=np.complex128)
        d = np.asarray(self.d, dtype=np.complex128)
        n, m = r.shape
        if b.size != n or f.shape[:2] != (n, m) or d.shape[:2] != (n, m):
            raise ValueError("batch arrays must share n and M")
        for name, arr in (("r", r), ("b", b), ("f", f), ("d", d)):
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.r.shape[0]

    @property
    def p_dim(self) -> int:
        return self.d.shape[2]

    @property
    def lp(self) -> int:
        return self.f.shape[2]


@dataclass(frozen=True)
class AlternateResult:
    """Final triple and per-round cost trajectories."""

    w: np.ndarray
    lam: np.ndarray
    h_hat: np.ndarray
    j1: np.ndarray
    j2: np.ndarray


def accumulate(
    stats: SampleStatistics,
    r_cancelled: np.ndarray,
    b_ref: complex,
    d: np.ndarray,
    f: np.ndarray,
    h_hat: np.ndarray,
    lam: np.ndarray,
) -> SampleStatistics:
    """Fold one sample into the running means; returns the same object.

    ``r_cancelled`` must be ``r - d @ lam`` for the passed ``d`` and
    ``lam``; the uncancelled ``r`` is reconstructed internally where the
    cross statistics need it.
    """
    n = stats.n_samples + 1
    r = r_cancelled + d @ lam

    def fold(mean: np.ndarray, sample: np.ndarray) -> None:
        mean += (sample - mean) / n

    fold(stats.r_cov, np.outer(r_cancelled, r_cancelled.conj()))
    fold(stats.p_b, np.conj(b_ref) * r_cancelled)
    fold(stats.d_cov, d.conj().T @ d)
    fold(stats.p_f, d.conj().T @ (r - f @ h_hat))
    fold(stats.f_cov, f.conj().T @ f)
    fold(stats.p_d, f.conj().T @ r_cancelled)
    stats.n_samples = n
    return stats


def batch_statistics(batch: SymbolBatch, lam: np.ndarray, h_hat: np.ndarray) -> SampleStatistics:
    """Vectorized statistics of a whole batch at the given (lam, h_hat)."""
    n = batch.n
    r_c = batch.r - batch.d @ lam
    fh = batch.f @ h_hat
    return SampleStatistics(
        r_cov=r_c.T @ r_c.conj() / n,
        p_b=r_c.T @ batch.b.conj() / n,
        d_cov=np.einsum("nmp,nmq->pq", batch.d.conj(), batch.d) / n,
        p_f=np.einsum("nmp,nm->p", batch.d.conj(), batch.r - fh) / n,
        f_cov=np.einsum("nml,nmq->lq", batch.f.conj(), batch.f) / n,
        p_d=np.einsum("nml,nm->l", batch.f.conj(), r_c) / n,
        n_samples=n,
    )


def _solve(mat: np.ndarray, vec: np.ndarray, ridge: float | None) -> np.ndarray:
    dim = mat.shape[0]
    if dim == 0:
        return np.zeros(0, dtype=np.complex128)
    if ridge is None:
        eps = 1e-8 * float(np.trace(mat).real) / dim
    else:
        eps = float(ridge)
    a = mat + eps * np.eye(dim)
    if eps == 0.0:
        cond = np.linalg.cond(a)
        if not np.isfinite(cond) or cond > _COND_LIMIT:
            raise SingularStatisticsError(
                f"normal-equation matrix is singular or ill-conditioned (cond={cond:.3g})"
            )
    try:
        return np.linalg.solve(a, vec)
    except np.linalg.LinAlgError as exc:
        raise SingularStatisticsError(str(exc)) from exc


def solve_w(stats: SampleStatistics, ridge: float | None = None) -> np.ndarray:
    """Batch MMSE filter ``(R_hat + eps I)^-1 p_b``.

    ``ridge=None`` uses the default ``1e-8 * trace/dim``; pass 0 for the
    exact solve, which raises :class:`SingularStatisticsError` on
    (near-)singular statistics.
    """
    return _solve(stats.r_cov, stats.p_b, ridge)


def solve_lambda(stats: SampleStatistics, ridge: float | None = None) -> np.ndarray:
    """Batch cancellation weights ``(R_D + eps I)^-1 p_F``."""
    return _solve(stats.d_cov, stats.p_f, ridge)


def solve_h(stats: SampleStatistics, ridge: float | None = None) -> np.ndarray:
    """Batch channel estimate ``(R_F + eps I)^-1 p_D`` (length Lp)."""
    return _solve(stats.f_cov, stats.p_d, ridge)


def alternate(
    batch: SymbolBatch,
    iters: int,
    lam0: np.ndarray | None = None,
    ridge: float | None = None,
) -> AlternateResult:
    """Iterate the coupled solves h -> lam -> w over a fixed batch.

    Statistics are refreshed before every solve so that each block sees
    the other block's newest value; that makes every round an exact block
    coordinate-descent step and the ``j2`` trajectory non-increasing (up
    to the ridge contribution).  Cost trajectories are recorded at the
    end of each round.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    lam = np.ones(batch.p_dim, dtype=np.complex128) if lam0 is None else np.asarray(lam0, dtype=np.complex128)
    h_hat = np.zeros(batch.lp, dtype=np.complex128)
    h_hat[0] = 1.0
    w = np.zeros(batch.r.shape[1], dtype=np.complex128)
    j1 = np.zeros(iters)
    j2 = np.zeros(iters)
    for it in range(iters):
        stats = batch_statistics(batch, lam, h_hat)
        h_hat = solve_h(stats, ridge)
        stats = batch_statistics(batch, lam, h_hat)
        lam = solve_lambda(stats, ridge)
        stats = batch_statistics(batch, lam, h_hat)
        w = solve_w(stats, ridge)
        e = batch.f @ h_hat - batch.r + batch.d @ lam
        j2[it] = float(np.mean(np.sum(np.abs(e) ** 2, axis=1)))
        r_c = batch.r - batch.d @ lam
        j1[it] = float(np.mean(np.abs(batch.b - r_c @ w.conj()) ** 2))
    return AlternateResult(w=w, lam=lam, h_hat=h_hat, j1=j1, j2=j2)
