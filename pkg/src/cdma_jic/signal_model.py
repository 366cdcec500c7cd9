"""Discrete-time signal model for a synchronous DS-CDMA uplink.

One symbol interval seen at the chip-matched filter output spans
``M = N + Lp - 1`` samples when each of the K users transmits a length-N
signature through a multipath channel with Lp resolvable paths.  The
received vector at symbol index ``i`` is

    r[i] = sum_k A_k (b_k[i-1] Cp_k + b_k[i] C_k + b_k[i+1] Cs_k) h_k + n[i]

where ``C_k`` is the M x Lp banded Toeplitz constraint matrix holding the
one-chip shifted copies of user k's signature, and ``Cp_k`` / ``Cs_k``
carry the tails of the previous and next symbols that leak into the
current window.  ``n[i]`` is circularly symmetric complex Gaussian noise
with covariance ``sigma^2 I``.

Everything random (codes, symbols, channels, powers, noise) flows through
explicit numpy Generators so that callers can split seed streams per
component and reproduce any draw bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "SpreadingCode",
    "ConstraintMatrices",
    "ChannelVector",
    "UserConfig",
    "SymbolStream",
    "build_constraint_matrices",
    "generate_code",
    "generate_symbols",
    "generate_channel",
    "generate_amplitudes",
    "synthesize_received",
    "synthesize_packet",
]


@dataclass(frozen=True)
class SpreadingCode:
    """Unit-energy signature sequence with chips in {+1/sqrt(N), -1/sqrt(N)}."""

    chips: np.ndarray

    def __post_init__(self) -> None:
        chips = np.asarray(self.chips, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "chips", chips)
        if chips.size < 1:
            raise ValueError("spreading code needs at least one chip")
        if not np.allclose(np.abs(chips) * np.sqrt(chips.size), 1.0, rtol=0.0, atol=1e-12):
            raise ValueError(f"chips must all have magnitude 1/sqrt({chips.size})")

    @property
    def n(self) -> int:
        """Processing gain (chips per symbol)."""
        return self.chips.size


@dataclass(frozen=True)
class ConstraintMatrices:
    """Code matrices of one user: current symbol plus the two ISI tails.

    ``c`` is M x Lp with column ``l`` holding the signature delayed by
    ``l`` chips.  ``c_prev`` places the last ``Lp - 1`` rows of ``c`` in
    its top rows (tail of the previous symbol), ``c_next`` places the
    first ``Lp - 1`` rows of ``c`` in its bottom rows (head of the next
    symbol).  For a flat channel (Lp = 1) both tails are zero.
    """

    c: np.ndarray
    c_prev: np.ndarray
    c_next: np.ndarray

    @property
    def m_dim(self) -> int:
        return self.c.shape[0]

    @property
    def lp(self) -> int:
        return self.c.shape[1]


@dataclass(frozen=True)
class ChannelVector:
    """Complex multipath gains over a window of ``lp`` chip-spaced delays."""

    taps: np.ndarray

    def __post_init__(self) -> None:
        taps = np.asarray(self.taps, dtype=np.complex128).reshape(-1)
        object.__setattr__(self, "taps", taps)
        if taps.size < 1:
            raise ValueError("channel needs at least one tap")

    @property
    def lp(self) -> int:
        return self.taps.size

    @property
    def energy(self) -> float:
        return float(np.sum(np.abs(self.taps) ** 2))


@dataclass(frozen=True)
class UserConfig:
    """Transmit-side description of a single user."""

    amplitude: float
    code: SpreadingCode
    channel: ChannelVector

    def __post_init__(self) -> None:
        if not self.amplitude > 0:
            raise ValueError("amplitude must be positive")


@dataclass(frozen=True)
class SymbolStream:
    """QPSK symbol sequence of one user; indices outside the packet read as 0."""

    symbols: np.ndarray

    def __post_init__(self) -> None:
        sym = np.asarray(self.symbols, dtype=np.complex128).reshape(-1)
        object.__setattr__(self, "symbols", sym)
        ok = (np.abs(sym.real) == 1.0) & (np.abs(sym.imag) == 1.0)
        if not np.all(ok):
            raise ValueError("symbols must lie in {+-1 +- 1j}")

    def __len__(self) -> int:
        return self.symbols.size

    def at(self, i: int) -> complex:
        """Symbol at index ``i``, or 0 outside the packet boundaries."""
        if 0 <= i < self.symbols.size:
            return complex(self.symbols[i])
        return 0.0 + 0.0j


def build_constraint_matrices(code: SpreadingCode, lp: int) -> ConstraintMatrices:
    """Build the M x Lp code matrices of one user for an Lp-path channel.

    Parameters
    ----------
    code : SpreadingCode
        Length-N signature.
    lp : int
        Channel order (number of chip-spaced delays), ``1 <= lp <= N``.

    Returns
    -------
    ConstraintMatrices
        ``c`` (current symbol), ``c_prev`` and ``c_next`` (ISI tails),
        each of shape ``(N + lp - 1, lp)``.
    """
    n = code.n
    if not 1 <= lp <= n:
        raise ValueError(f"lp must satisfy 1 <= lp <= {n}, got {lp}")
    m = n + lp - 1
    c = np.zeros((m, lp))
    for shift in range(lp):
        c[shift:shift + n, shift] = code.chips
    c_prev = np.zeros((m, lp))
    c_next = np.zeros((m, lp))
    if lp > 1:
        c_prev[: lp - 1, :] = c[n:, :]
        c_next[m - (lp - 1):, :] = c[: lp - 1, :]
    return ConstraintMatrices(c=c, c_prev=c_prev, c_next=c_next)


def generate_code(rng: np.random.Generator, n: int) -> SpreadingCode:
    """Draw a random signature with equiprobable chips ``+-1/sqrt(n)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    signs = rng.integers(0, 2, size=n) * 2 - 1
    return SpreadingCode(chips=signs / np.sqrt(n))


def generate_symbols(rng: np.random.Generator, length: int) -> SymbolStream:
    """Draw ``length`` uniform QPSK symbols from {+-1 +- 1j}."""
    bits = rng.integers(0, 2, size=(length, 2))
    sym = (2.0 * bits[:, 0] - 1.0) + 1j * (2.0 * bits[:, 1] - 1.0)
    return SymbolStream(symbols=sym)


def generate_channel(
    rng: np.random.Generator,
    lp: int = 9,
    nonzero_paths: int = 3,
    max_spacing: int = 3,
    pin_first_tap: bool = True,
) -> ChannelVector:
    """Draw a sparse unit-energy multipath channel.

    ``nonzero_paths`` taps are placed with successive spacings drawn
    uniformly from ``{1, ..., max_spacing}``; the first tap sits at delay
    zero unless ``pin_first_tap`` is False, in which case the whole
    cluster is shifted by a random offset that still fits the window.
    Tap gains have real and imaginary parts uniform on [-1, 1] and the
    vector is normalized to unit energy.
    """
    if nonzero_paths < 1:
        raise ValueError("nonzero_paths must be >= 1")
    span = (nonzero_paths - 1) * max_spacing + 1
    if span > lp:
        raise ValueError(
            f"{nonzero_paths} paths with spacing up to {max_spacing} "
            f"cannot fit in a window of {lp} taps"
        )
    spacings = rng.integers(1, max_spacing + 1, size=nonzero_paths - 1)
    positions = np.concatenate(([0], np.cumsum(spacings)))
    if not pin_first_tap:
        slack = lp - 1 - positions[-1]
        positions = positions + rng.integers(0, slack + 1)
    parts = rng.uniform(-1.0, 1.0, size=(2, nonzero_paths))
    gains = parts[0] + 1j * parts[1]
    taps = np.zeros(lp, dtype=np.complex128)
    taps[positions] = gains
    taps /= np.linalg.norm(taps)
    return ChannelVector(taps=taps)


def generate_amplitudes(
    rng: np.random.Generator, k_users: int, std_db: float = 3.0
) -> np.ndarray:
    """Draw per-user amplitudes from a log-normal power profile.

    User powers satisfy ``10*log10(P_k) ~ Normal(0, std_db^2)``; the
    returned amplitudes are ``sqrt(P_k)``.  Mapping the target Eb/N0 to
    the noise variance is the harness's job, so the mean power is 0 dB
    here by construction.
    """
    if k_users < 1:
        raise ValueError("k_users must be >= 1")
    power_db = rng.normal(0.0, std_db, size=k_users)
    return 10.0 ** (power_db / 20.0)


def _complex_noise(rng: np.random.Generator, shape, variance: float) -> np.ndarray:
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def _check_shared_dims(users: Sequence[UserConfig]) -> tuple[int, int]:
    n = users[0].code.n
    lp = users[0].channel.lp
    for u in users:
        if u.code.n != n or u.channel.lp != lp:
            raise ValueError("all users must share the same N and Lp")
    return n, lp


def synthesize_received(
    users: Sequence[UserConfig],
    symbols: Sequence[SymbolStream],
    i: int,
    noise_var: float,
    rng: np.random.Generator,
    m_dim: int | None = None,
) -> np.ndarray:
    """Received vector at symbol index ``i`` for one set of users.

    Evaluates the three-term model (previous, current and next symbol of
    every user) plus circular Gaussian noise.  Symbols outside the packet
    read as zero, so the packet edges see reduced ISI.  For full-packet
    synthesis prefer :func:`synthesize_packet`, which is vectorized.

    Parameters
    ----------
    users, symbols : sequences of equal length K
    i : symbol index
    noise_var : total noise variance sigma^2 (0 disables the noise draw)
    rng : generator used only for the noise
    m_dim : observation length, required when ``users`` is empty
    """
    if noise_var < 0:
        raise ValueError("noise_var must be >= 0")
    if len(users) != len(symbols):
        raise ValueError("users and symbols must have equal length")
    if users:
        n, lp = _check_shared_dims(users)
        m = n + lp - 1
        if m_dim is not None and m_dim != m:
            raise ValueError(f"m_dim {m_dim} inconsistent with N + Lp - 1 = {m}")
    else:
        if m_dim is None:
            raise ValueError("m_dim is required when no users are given")
        m = m_dim
    r = np.zeros(m, dtype=np.complex128)
    for user, stream in zip(users, symbols):
        cm = build_constraint_matrices(user.code, user.channel.lp)
        f = (
            stream.at(i - 1) * cm.c_prev
            + stream.at(i) * cm.c
            + stream.at(i + 1) * cm.c_next
        )
        r += user.amplitude * (f @ user.channel.taps)
    if noise_var > 0:
        r += _complex_noise(rng, m, noise_var)
    return r


def synthesize_packet(
    users: Sequence[UserConfig],
    symbols: np.ndarray,
    noise_var: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Received matrix ``(M, L)`` for a whole packet.

    ``symbols`` is the ``(K, L)`` matrix of QPSK symbols.  Each user's
    contribution is three rank-one terms (previous / current / next
    symbol against the code-channel composite vectors), so the packet
    costs three outer products per user.  Symbol indices -1 and L read
    as zero, matching :func:`synthesize_received`.
    """
    if not users:
        raise ValueError("synthesize_packet needs at least one user")
    symbols = np.asarray(symbols, dtype=np.complex128)
    if symbols.ndim != 2 or symbols.shape[0] != len(users):
        raise ValueError("symbols must have shape (K, L)")
    n, lp = _check_shared_dims(users)
    m = n + lp - 1
    k_users, length = symbols.shape
    r = np.zeros((m, length), dtype=np.complex128)
    for idx, user in enumerate(users):
        cm = build_constraint_matrices(user.code, user.channel.lp)
        u_prev = user.amplitude * (cm.c_prev @ user.channel.taps)
        u_cur = user.amplitude * (cm.c @ user.channel.taps)
        u_next = user.amplitude * (cm.c_next @ user.channel.taps)
        b = symbols[idx]
        b_prev = np.concatenate(([0.0], b[:-1]))
        b_next = np.concatenate((b[1:], [0.0]))
        r += np.outer(u_prev, b_prev) + np.outer(u_cur, b) + np.outer(u_next, b_next)
    if noise_var > 0:
        r += _complex_noise(rng, (m, length), noise_var)
    return r
