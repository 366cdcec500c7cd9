"""Per-symbol receiver pipelines: linear, SIC, PIC and their jointly optimized variants.

Mechanics shared by every receiver
----------------------------------
* Each receiver carries an adaptive linear front-end bank (one LMS filter
  per user running on the uncancelled input).  It supplies the stage-0
  decisions for the current symbol and, because interference regeneration
  needs the *next* symbol too, a tentative decision computed on ``r[i+1]``
  with the current front-end filters.  Previous-symbol decisions are the
  final decisions fed back from symbol ``i - 1``; both boundary symbols
  read as zero.
* While training (``i < training_len``) every regeneration and reference
  symbol is the known pilot; afterwards the receiver's own hard decisions
  take over.  Reported decisions (the ones scored for BER) are always
  actual detector outputs, training region included.
* Within one symbol all parameter reads use the state as of the start of
  the symbol; decisions, by contrast, propagate immediately (users
  detected earlier inside the SIC sweep, stage ``m-1`` feeding stage ``m``
  inside PIC).  That makes the users of one PIC stage independent given
  the previous stage's snapshot, so the stage is processed as one batched
  operation over users.

The baseline (non-joint) receivers cancel with smoothed amplitude
estimates ``A_hat_j <- (1 - rho) A_hat_j + rho |w_j^H r_j|`` instead of
adapted cancellation weights; everything else is identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from cdma_jic.estimators import StepSizes, detect
from cdma_jic.ic import sic_schedule
from cdma_jic.signal_model import SpreadingCode, build_constraint_matrices

__all__ = [
    "RECEIVER_NAMES",
    "PacketContext",
    "LinearPipeline",
    "SicPipeline",
    "PicPipeline",
    "make_pipeline",
]

RECEIVER_NAMES = ("linear", "sic", "pic", "jo-sic", "jo-pic")


@dataclass(frozen=True)
class PacketContext:
    """Receiver-side constants for one packet.

    ``cc``, ``cp``, ``cs`` stack the per-user constraint matrices into
    ``(K, M, Lp)`` tensors; ``training`` holds the known pilot symbols
    ``(K, training_len)``.  ``true_powers`` are the transmit powers the
    SIC schedule may consult during the training phase.
    """

    cc: np.ndarray
    cp: np.ndarray
    cs: np.ndarray
    training: np.ndarray
    packet_len: int
    true_powers: np.ndarray

    @property
    def k_users(self) -> int:
        return self.cc.shape[0]

    @property
    def m_dim(self) -> int:
        return self.cc.shape[1]

    @property
    def lp(self) -> int:
        return self.cc.shape[2]

    @property
    def training_len(self) -> int:
        return self.training.shape[1]

    @classmethod
    def from_codes(
        cls,
        codes: Sequence[SpreadingCode],
        lp: int,
        training: np.ndarray,
        packet_len: int,
        true_powers: np.ndarray,
    ) -> "PacketContext":
        mats = [build_constraint_matrices(code, lp) for code in codes]
        return cls(
            cc=np.stack([m.c for m in mats]),
            cp=np.stack([m.c_prev for m in mats]),
            cs=np.stack([m.c_next for m in mats]),
            training=np.asarray(training, dtype=np.complex128),
            packet_len=int(packet_len),
            true_powers=np.asarray(true_powers, dtype=np.float64),
        )


# ---------------------------------------------------------------------------
# batched per-user helpers
# ---------------------------------------------------------------------------

def _bank_outputs(w_bank: np.ndarray, x_bank: np.ndarray) -> np.ndarray:
    """Row-wise filter outputs w_k^H x_k -> (K,)."""
    return np.einsum("km,km->k", w_bank.conj(), x_bank)


def _bank_project(mats: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    """Per-user matrix-vector products (K,M,Lp) x (K,Lp) -> (K,M)."""
    return np.einsum("kml,kl->km", mats, vecs)


def _regen_bank(cph, cch, csh, b_prev, b_cur, b_next) -> np.ndarray:
    """Per-user regenerated contributions F_k h_k -> (K, M)."""
    return (
        b_prev[:, None] * cph + b_cur[:, None] * cch + b_next[:, None] * csh
    )


def _regen_adjoint(cp, cc, cs, b_prev, b_cur, b_next, e_bank) -> np.ndarray:
    """Per-user channel gradients F_k^H e_k -> (K, Lp), without forming F."""
    gp = np.einsum("kml,km->kl", cp, e_bank)
    gc = np.einsum("kml,km->kl", cc, e_bank)
    gs = np.einsum("kml,km->kl", cs, e_bank)
    return (
        b_prev.conj()[:, None] * gp
        + b_cur.conj()[:, None] * gc
        + b_next.conj()[:, None] * gs
    )


def _matched_filter_bank(cc: np.ndarray) -> np.ndarray:
    """Initial filters: normalized matched filter to the first-tap channel."""
    w0 = cc[:, :, 0].astype(np.complex128)
    norms = np.linalg.norm(w0, axis=1, keepdims=True)
    return w0 / norms


def _initial_h(k_users: int, lp: int) -> np.ndarray:
    h0 = np.zeros((k_users, lp), dtype=np.complex128)
    h0[:, 0] = 1.0
    return h0


class _PipelineBase:
    """State and helpers common to all pipelines."""

    def __init__(self, ctx: PacketContext, steps: StepSizes, rho: float, freeze_after_training: bool):
        if not 0 < rho <= 1:
            raise ValueError("rho must lie in (0, 1]")
        self.ctx = ctx
        self.steps = steps
        self.rho = float(rho)
        self.freeze_after_training = bool(freeze_after_training)
        self._b_prev = np.zeros(ctx.k_users, dtype=np.complex128)

    def _tentative_next(self, i: int, r_next: np.ndarray | None, w_bank: np.ndarray) -> np.ndarray:
        """Decision for symbol i+1: pilot, front-end tentative, or boundary zero."""
        ctx = self.ctx
        if r_next is None:
            return np.zeros(ctx.k_users, dtype=np.complex128)
        if i + 1 < ctx.training_len:
            return ctx.training[:, i + 1]
        rb = np.broadcast_to(r_next, w_bank.shape)
        return detect(_bank_outputs(w_bank, rb))

    def _adapt_enabled(self, training: bool) -> bool:
        return training or not self.freeze_after_training


class LinearPipeline(_PipelineBase):
    """Adaptive linear receiver; also the front-end model for the IC pipelines.

    Cancels nothing.  Keeps a channel estimate per user so that channel
    mean-square error is reportable for the linear baseline too.
    """

    name = "linear"

    def __init__(self, ctx, steps, rho=0.05, freeze_after_training=False):
        super().__init__(ctx, steps, rho, freeze_after_training)
        self.w = _matched_filter_bank(ctx.cc)
        self.h = _initial_h(ctx.k_users, ctx.lp)

    def process_symbol(self, i: int, r_cur: np.ndarray, r_next: np.ndarray | None = None) -> np.ndarray:
        ctx = self.ctx
        training = i < ctx.training_len
        rb = np.broadcast_to(r_cur, self.w.shape)
        x = _bank_outputs(self.w, rb)
        reported = detect(x)
        d_cur = ctx.training[:, i] if training else reported
        d_next = self._tentative_next(i, r_next, self.w)

        cph = _bank_project(ctx.cp, self.h)
        cch = _bank_project(ctx.cc, self.h)
        csh = _bank_project(ctx.cs, self.h)
        g_own = _regen_bank(cph, cch, csh, self._b_prev, d_cur, d_next)
        e_vec = g_own - rb
        e_s = d_cur - x

        self.w = self.w + self.steps.mu_w * e_s.conj()[:, None] * rb
        if self._adapt_enabled(training):
            self.h = self.h - self.steps.mu_h * _regen_adjoint(
                ctx.cp, ctx.cc, ctx.cs, self._b_prev, d_cur, d_next, e_vec
            )
        self._b_prev = d_cur
        return reported

    def channel_estimates(self) -> np.ndarray:
        return self.h


class _CancellingPipeline(_PipelineBase):
    """Adds the shared front-end bank used by SIC and PIC."""

    def __init__(self, ctx, steps, rho, freeze_after_training):
        super().__init__(ctx, steps, rho, freeze_after_training)
        self.w_fe = _matched_filter_bank(ctx.cc)

    def _front(self, i: int, r_cur: np.ndarray, r_next: np.ndarray | None):
        ctx = self.ctx
        training = i < ctx.training_len
        rb = np.broadcast_to(r_cur, self.w_fe.shape)
        x0 = _bank_outputs(self.w_fe, rb)
        d0 = ctx.training[:, i] if training else detect(x0)
        d_next = self._tentative_next(i, r_next, self.w_fe)
        return x0, d0, d_next, rb

    def _front_update(self, x0: np.ndarray, d0: np.ndarray, rb: np.ndarray) -> None:
        e0 = d0 - x0
        self.w_fe = self.w_fe + self.steps.mu_w * e0.conj()[:, None] * rb


class SicPipeline(_CancellingPipeline):
    """Successive cancellation in decreasing-power order, one pass per symbol.

    The schedule is fixed from the true transmit powers while training;
    at the decision-directed switch it is recomputed once from
    ``||h_hat_k||^2`` times the smoothed front-end output energy, and the
    adapted cancellation weights are carried over per user id.
    """

    def __init__(self, ctx, steps, joint: bool, rho=0.05, freeze_after_training=False):
        super().__init__(ctx, steps, rho, freeze_after_training)
        self._joint = bool(joint)
        self.name = "jo-sic" if joint else "sic"
        k = ctx.k_users
        self.w = _matched_filter_bank(ctx.cc)
        self.h = _initial_h(k, ctx.lp)
        self._pow_est = np.zeros(k)
        self._amp = np.ones(k)
        self._order = sic_schedule(ctx.true_powers)
        self._groups = [np.array([], dtype=int)] * k
        self._lam = [np.zeros(0, dtype=np.complex128)] * k
        self._set_order(self._order)
        self._reordered = False

    def _set_order(self, order: np.ndarray) -> None:
        old_lam = {}
        for k, gids in enumerate(self._groups):
            old_lam[k] = dict(zip(gids.tolist(), self._lam[k]))
        self._order = order
        groups: list[np.ndarray] = [None] * self.ctx.k_users  # type: ignore[list-item]
        lam: list[np.ndarray] = [None] * self.ctx.k_users  # type: ignore[list-item]
        for pos, k in enumerate(order):
            gids = np.asarray(order[:pos], dtype=int)
            groups[k] = gids
            lam[k] = np.array(
                [old_lam[k].get(j, 1.0 + 0.0j) for j in gids.tolist()],
                dtype=np.complex128,
            )
        self._groups = groups
        self._lam = lam

    def _reorder(self) -> None:
        est = self._pow_est * np.sum(np.abs(self.h) ** 2, axis=1)
        self._set_order(sic_schedule(est))

    def process_symbol(self, i: int, r_cur: np.ndarray, r_next: np.ndarray | None = None) -> np.ndarray:
        ctx = self.ctx
        steps = self.steps
        t_len = ctx.training_len
        training = i < t_len
        if i == t_len and t_len > 0 and not self._reordered:
            self._reorder()
            self._reordered = True

        x0, d0, d_next, rb = self._front(i, r_cur, r_next)
        # start-of-symbol channel snapshot; later in-place updates touch h[k]
        # only after user k's own sweep step, and reads go through these.
        cph = _bank_project(ctx.cp, self.h)
        cch = _bank_project(ctx.cc, self.h)
        csh = _bank_project(ctx.cs, self.h)

        k_users = ctx.k_users
        g_cols = np.empty((ctx.m_dim, k_users), dtype=np.complex128)
        d_fb = np.empty(k_users, dtype=np.complex128)
        reported = np.empty(k_users, dtype=np.complex128)
        adapt = self._adapt_enabled(training)

        for pos, k in enumerate(self._order):
            gids = self._groups[k]
            d_mat = g_cols[:, :pos]
            if self._joint:
                lam_vec = self._lam[k]
            else:
                lam_vec = self._amp[gids].astype(np.complex128)
            rc = r_cur - d_mat @ lam_vec if pos else r_cur
            x = np.vdot(self.w[k], rc)
            rep = detect(x)
            reported[k] = rep
            dk = ctx.training[k, i] if training else rep
            d_fb[k] = dk
            g_own = self._b_prev[k] * cph[k] + dk * cch[k] + d_next[k] * csh[k]
            g_cols[:, pos] = g_own
            e_v = g_own - rc
            e_s = dk - x
            self.w[k] = self.w[k] + steps.mu_w * np.conj(e_s) * rc
            if adapt:
                hg = (
                    np.conj(self._b_prev[k]) * (ctx.cp[k].T @ e_v)
                    + np.conj(dk) * (ctx.cc[k].T @ e_v)
                    + np.conj(d_next[k]) * (ctx.cs[k].T @ e_v)
                )
                self.h[k] = self.h[k] - steps.mu_h * hg
                if self._joint and pos:
                    self._lam[k] = self._lam[k] - steps.mu_lambda * (d_mat.conj().T @ e_v)

        self._front_update(x0, d0, rb)
        self._pow_est = (1 - self.rho) * self._pow_est + self.rho * np.abs(x0) ** 2
        if not self._joint:
            self._amp = (1 - self.rho) * self._amp + self.rho * np.abs(x0)
        self._b_prev = d_fb
        return reported

    def channel_estimates(self) -> np.ndarray:
        return self.h


class PicPipeline(_CancellingPipeline):
    """Parallel cancellation over all-but-one groups, several stages deep.

    Stage m cancels with the decisions produced by stage m-1 (stage 0
    being the front-end) and keeps its own filter, weight and channel
    banks.  Users within a stage see the same immutable snapshot, so the
    whole stage is a handful of batched array operations.
    """

    def __init__(self, ctx, steps, joint: bool, stages: int = 3, rho=0.05, freeze_after_training=False):
        super().__init__(ctx, steps, rho, freeze_after_training)
        if stages < 1:
            raise ValueError("stages must be >= 1")
        self._joint = bool(joint)
        self.name = "jo-pic" if joint else "pic"
        self.stages = int(stages)
        k = ctx.k_users
        self.w_stage = [_matched_filter_bank(ctx.cc) for _ in range(stages)]
        self.h_stage = [_initial_h(k, ctx.lp) for _ in range(stages)]
        self.lam_stage = [
            np.ones((k, k - 1), dtype=np.complex128) for _ in range(stages)
        ]
        self._amp = np.ones(k)
        self._rows = np.arange(k)[:, None]
        self._offdiag = np.array(
            [[j for j in range(k) if j != kk] for kk in range(k)], dtype=int
        ).reshape(k, k - 1)

    def _lam_full(self, m: int) -> np.ndarray:
        k = self.ctx.k_users
        if self._joint:
            lam_full = np.zeros((k, k), dtype=np.complex128)
            lam_full[self._rows, self._offdiag] = self.lam_stage[m]
        else:
            lam_full = np.tile(self._amp.astype(np.complex128), (k, 1))
            np.fill_diagonal(lam_full, 0.0)
        return lam_full

    def process_symbol(self, i: int, r_cur: np.ndarray, r_next: np.ndarray | None = None) -> np.ndarray:
        ctx = self.ctx
        steps = self.steps
        training = i < ctx.training_len
        train_col = ctx.training[:, i] if training else None
        x0, d0, d_next, rb = self._front(i, r_cur, r_next)
        adapt = self._adapt_enabled(training)
        k_users = ctx.k_users

        d_in = d0
        reported = detect(x0)
        for m in range(self.stages):
            w_bank = self.w_stage[m]
            h_bank = self.h_stage[m]
            cph = _bank_project(ctx.cp, h_bank)
            cch = _bank_project(ctx.cc, h_bank)
            csh = _bank_project(ctx.cs, h_bank)
            g_in = _regen_bank(cph, cch, csh, self._b_prev, d_in, d_next)
            rc = r_cur[None, :] - self._lam_full(m) @ g_in
            x = _bank_outputs(w_bank, rc)
            rep = detect(x)
            d_m = train_col if training else rep
            e_s = d_m - x
            g_own = _regen_bank(cph, cch, csh, self._b_prev, d_m, d_next)
            e_bank = g_own - rc
            self.w_stage[m] = w_bank + steps.mu_w * e_s.conj()[:, None] * rc
            if adapt:
                self.h_stage[m] = h_bank - steps.mu_h * _regen_adjoint(
                    ctx.cp, ctx.cc, ctx.cs, self._b_prev, d_m, d_next, e_bank
                )
                if self._joint and k_users > 1:
                    # tm[j, k] = g_j^H e_k; user k's gradient gathers rows j != k
                    tm = g_in.conj() @ e_bank.T
                    grads = np.take_along_axis(tm.T, self._offdiag, axis=1)
                    self.lam_stage[m] = self.lam_stage[m] - steps.mu_lambda * grads
            d_in = d_m
            reported = rep

        self._front_update(x0, d0, rb)
        if not self._joint:
            # baseline PIC takes its amplitude estimates from the front-end
            # output, not from the cleaner post-cancellation stages
            self._amp = (1 - self.rho) * self._amp + self.rho * np.abs(x0)
        self._b_prev = d_in
        return reported

    def channel_estimates(self) -> np.ndarray:
        return self.h_stage[-1]


def make_pipeline(
    name: str,
    ctx: PacketContext,
    steps: StepSizes,
    pic_stages: int = 3,
    rho: float = 0.05,
    freeze_after_training: bool = False,
):
    """Construct one of the five receivers by name."""
    if name == "linear":
        return LinearPipeline(ctx, steps, rho, freeze_after_training)
    if name == "sic":
        return SicPipeline(ctx, steps, joint=False, rho=rho, freeze_after_training=freeze_after_training)
    if name == "jo-sic":
        return SicPipeline(ctx, steps, joint=True, rho=rho, freeze_after_training=freeze_after_training)
    if name == "pic":
        return PicPipeline(ctx, steps, joint=False, stages=pic_stages, rho=rho, freeze_after_training=freeze_after_training)
    if name == "jo-pic":
        return PicPipeline(ctx, steps, joint=True, stages=pic_stages, rho=rho, freeze_after_training=freeze_after_training)
    raise ValueError(f"unknown receiver {name!r}; expected one of {RECEIVER_NAMES}")
