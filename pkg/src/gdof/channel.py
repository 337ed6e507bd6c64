"""The symmetric K-user real Gaussian interference channel.

Receiver k observes ``Y_k = X_k + Q**shift * sum_{j != k} X_j + Z_k`` where
``SNR = Q**(2M/|alpha-1|)`` and ``shift = sgn(alpha - 1) * M``. SNR is only
ever carried as its exact base-Q logarithm.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .qary import QaryVector, add_carry_free, shift as qshift, value_of

# trials per counter-seeded random block
CHUNK = 4096

NOISE_STREAM = 0
MESSAGE_STREAM = 1


class AlphaOneUnsupported(ValueError):
    """alpha = 1 has no layered scheme; its GDOF is the closed form 1/K."""


class BaseTooSmall(ValueError):
    pass


def as_rational(x) -> Fraction:
    """Exact rational for ``x``; floats go through their shortest repr.

    ``as_rational(0.6) == Fraction(3, 5)``, and strings such as ``"2/3"``
    or ``"0.09375"`` are parsed exactly.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (float, np.floating)):
        return Fraction(repr(float(x)))
    return Fraction(x)


@dataclass(frozen=True)
class ChannelParams:
    K: int
    Q: int
    M: int
    alpha: Fraction
    snr_log_q: Fraction
    shift: int
    span: int
    m: int

    @property
    def inr_log_q(self) -> Fraction:
        return self.alpha * self.snr_log_q

    @property
    def log2_snr(self) -> float:
        return float(self.snr_log_q) * np.log2(self.Q)


def derive_params(K: int, Q: int, M: int, alpha, span: int) -> ChannelParams:
    alpha = as_rational(alpha)
    if alpha == 1:
        raise AlphaOneUnsupported("alpha = 1 has no layered scheme (d(1) = 1/K)")
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    if K < 2:
        raise ValueError(f"need K >= 2 users, got {K}")
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    if Q < 2 * K + 4:
        raise BaseTooSmall(f"Q={Q} is below 2K+4={2 * K + 4}")
    if span < 1:
        raise ValueError(f"span must be >= 1, got {span}")
    s = M if alpha > 1 else -M
    return ChannelParams(
        K=K,
        Q=Q,
        M=M,
        alpha=alpha,
        snr_log_q=Fraction(2 * M) / abs(alpha - 1),
        shift=s,
        span=span,
        m=max(span, span + s),
    )


def check_power(params: ChannelParams, layout) -> bool:
    """Peak-amplitude power check ``Q**(2*span) <= SNR``, in exact exponents."""
    return layout.span <= params.snr_log_q / 2


@dataclass(frozen=True)
class NoiseModel:
    """Unit-variance real AWGN with counter-based seeding.

    Draws for trial ``t`` come from block ``t // CHUNK`` whose generator is
    keyed by ``(seed, stream, block)``, so any slicing or scheduling of the
    trials reproduces the same samples. ``std=0`` is a test hook.
    """

    seed: int
    std: float = 1.0
    stream: int = NOISE_STREAM

    def block(self, start: int, count: int, width: int) -> np.ndarray:
        return counter_draw(
            self.seed, self.stream, start, count,
            lambda rng, n: rng.standard_normal((n, width)),
        ) * self.std

    def sample(self, trial: int, K: int) -> np.ndarray:
        return self.block(trial, 1, K)[0]


def counter_draw(seed: int, stream: int, start: int, count: int, draw) -> np.ndarray:
    """Rows ``start .. start+count`` of a chunked counter-seeded stream.

    ``draw(rng, n)`` must return ``n`` rows from ``rng``.
    """
    if count <= 0:
        return draw(np.random.default_rng(0), 0)
    first, last = start // CHUNK, (start + count - 1) // CHUNK
    parts = [draw(np.random.default_rng([seed, stream, c]), CHUNK) for c in range(first, last + 1)]
    rows = np.concatenate(parts) if len(parts) > 1 else parts[0]
    off = start - first * CHUNK
    return rows[off:off + count]


def apply_deterministic(params: ChannelParams, inputs: Sequence[QaryVector]) -> list[QaryVector]:
    """Noise-free outputs ``X_k + Q**shift * sum_{j != k} X_j`` for every receiver."""
    if len(inputs) != params.K:
        raise ValueError(f"expected {params.K} inputs, got {len(inputs)}")
    outs = []
    for k in range(params.K):
        terms = [inputs[k]] + [qshift(x, params.shift) for j, x in enumerate(inputs) if j != k]
        outs.append(add_carry_free(terms))
    return outs


def apply_gaussian(
    params: ChannelParams,
    inputs: Sequence[QaryVector],
    noise: NoiseModel,
    trial: int = 0,
) -> list[Fraction]:
    """Noisy outputs as exact rationals: deterministic value plus the float noise sample."""
    z = noise.sample(trial, params.K)
    return [
        Fraction(value_of(y)) + Fraction(float(zk))
        for y, zk in zip(apply_deterministic(params, inputs), z)
    ]


def composite_digits(params: ChannelParams, tx: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batched noise-free receiver signals, digit by digit.

    ``tx`` has shape ``(B, K, span)`` (transmit digits, exponent 0 first).
    Returns ``(int_digits, frac_digits, overflow)``: digits at exponents
    ``0..m-1``, digits at exponents ``-M..-1`` (empty unless shift < 0), and
    a ``(B, K)`` mask of receivers where some position-wise sum exceeds Q-1.
    """
    B, K, T = tx.shape
    tx = tx.astype(np.int64)
    interf = tx.sum(axis=1, keepdims=True) - tx
    lo = min(0, params.shift)
    full = np.zeros((B, K, params.m - lo), dtype=np.int64)
    full[..., -lo:-lo + T] += tx
    full[..., params.shift - lo:params.shift - lo + T] += interf
    overflow = (full >= params.Q).any(axis=-1)
    return full[..., -lo:], full[..., :-lo], overflow
