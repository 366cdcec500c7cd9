"""Unified interference cancellation: regeneration, reconstruction, schedules.

A cancellation group is an ordered set of interferers whose regenerated
contributions form the columns of a reconstruction matrix ``D``; the
cancelled input ``r - D @ lam`` then feeds the per-user receiver filter.
Successive (power-ordered) and parallel (all-but-one) cancellation are
the same machinery with different groups: SIC grows the group one user
at a time along a decreasing-power schedule, PIC uses everybody except
the desired user.  The conventional receivers plug smoothed amplitude
estimates into ``lam``; the jointly optimized ones adapt ``lam``
directly.

Matrices are plain ndarrays: a regeneration matrix is ``(M, Lp)``
(symbol-weighted code matrices of one user), a reconstruction matrix is
``(M, P)`` with one column per group member.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from cdma_jic.signal_model import ConstraintMatrices

__all__ = [
    "ICGroup",
    "build_regen_matrix",
    "build_reconstruction_matrix",
    "cancel",
    "conventional_cancel",
    "sic_schedule",
    "pic_group",
]


@dataclass(frozen=True)
class ICGroup:
    """Ordered interferer indices for one cancellation step.

    Members are distinct user indices.  Empty groups are legal: the first
    user of a SIC schedule and every user of a single-user system cancel
    nothing.
    """

    members: tuple[int, ...]

    def __post_init__(self) -> None:
        members = tuple(int(m) for m in self.members)
        object.__setattr__(self, "members", members)
        if len(set(members)) != len(members):
            raise ValueError("group members must be distinct")

    @property
    def p(self) -> int:
        return len(self.members)


def build_regen_matrix(
    cm: ConstraintMatrices,
    b_prev: complex,
    b_cur: complex,
    b_next: complex,
) -> np.ndarray:
    """Symbol-weighted code matrix ``F = b_prev*Cp + b_cur*C + b_next*Cs``.

    The decisions are QPSK values, or 0 at the packet boundaries.  ``F``
    multiplied by a channel estimate regenerates that user's contribution
    to the current observation window.
    """
    return b_prev * cm.c_prev + b_cur * cm.c + b_next * cm.c_next


def build_reconstruction_matrix(
    group: ICGroup,
    regens: Sequence[np.ndarray],
    h_hats: Sequence[np.ndarray],
    m_dim: int | None = None,
) -> np.ndarray:
    """Stack regenerated group contributions as columns of ``D`` (M x P).

    Column ``j`` is ``regens[j] @ h_hats[j]`` for the j-th group member,
    in group order.  ``m_dim`` is only needed to size the result for an
    empty group.
    """
    if not (len(regens) == len(h_hats) == group.p):
        raise ValueError("regens and h_hats must match the group size")
    if group.p == 0:
        if m_dim is None:
            raise ValueError("m_dim is required for an empty group")
        return np.zeros((m_dim, 0), dtype=np.complex128)
    cols = []
    m = np.asarray(regens[0]).shape[0]
    for f, h in zip(regens, h_hats):
        f = np.asarray(f)
        h = np.asarray(h).reshape(-1)
        if f.shape[0] != m:
            raise ValueError("all regeneration matrices must share M")
        if f.shape[1] != h.size:
            raise ValueError("channel estimate length must match Lp")
        cols.append(f @ h)
    return np.column_stack(cols).astype(np.complex128)


def cancel(r: np.ndarray, d: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """Cancelled observation ``r - D @ lam``.

    Affine in ``lam``; with an empty group it returns ``r`` unchanged.
    """
    r = np.asarray(r)
    d = np.asarray(d)
    lam = np.asarray(lam).reshape(-1)
    if d.ndim != 2 or d.shape[0] != r.shape[0]:
        raise ValueError("d must be (M, P) with M matching r")
    if d.shape[1] != lam.size:
        raise ValueError("lam length must match the group size")
    return r - d @ lam


def conventional_cancel(
    r: np.ndarray,
    group: ICGroup,
    regens: Sequence[np.ndarray],
    h_hats: Sequence[np.ndarray],
    a_hats: Sequence[float],
) -> np.ndarray:
    """Cancellation with amplitude estimates in place of adapted weights."""
    if len(a_hats) != group.p:
        raise ValueError("a_hats must match the group size")
    d = build_reconstruction_matrix(group, regens, h_hats, m_dim=np.asarray(r).shape[0])
    return cancel(r, d, np.asarray(a_hats, dtype=np.complex128))


def sic_schedule(powers: np.ndarray) -> np.ndarray:
    """Detection order for SIC: decreasing power, ties by user index."""
    powers = np.asarray(powers, dtype=np.float64).reshape(-1)
    return np.argsort(-powers, kind="stable")


def pic_group(k: int, k_users: int) -> ICGroup:
    """All-but-k group for parallel cancellation, ascending user index."""
    if not 0 <= k < k_users:
        raise ValueError(f"k must lie in [0, {k_users})")
    return ICGroup(members=tuple(j for j in range(k_users) if j != k))
