"""Regime-specific multilevel transmit layouts, encoder, decoder and rates.

Each interference regime has its own arrangement of information, copy and
zero-padding digits (:func:`build_layout`). All layered schemes share one
decoder: receiver ``k`` sees, at level ``p``,

    r_p = x_p + s_{p - shift}

where ``x`` are its own digits and ``s`` the carry-free digit sums of the
interferers. Copy digits alias their sources in both ``x`` and ``s``
(interferers use the same layout), so the decoder repeatedly solves any
level equation left with a single unknown. For very strong and weak
interference that is a plain read-out; for strong and moderately weak it
reproduces the block-by-block cancellation of desired copies and of the
interference sum, without ever decoding an individual interferer.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .channel import ChannelParams, as_rational
from .qary import QaryVector

Message = tuple[int, ...]


class Regime(str, enum.Enum):
    NOISY = "Noisy"
    WEAK = "Weak"
    MODERATELY_WEAK = "ModeratelyWeak"
    ALPHA_ONE = "AlphaOne"
    STRONG = "Strong"
    VERY_STRONG = "VeryStrong"

    def __str__(self) -> str:
        return self.value


# left-closed intervals [lo, hi); hi=None means unbounded; alpha=1 is AlphaOne
REGIME_INTERVALS = {
    Regime.NOISY: (Fraction(0), Fraction(1, 2)),
    Regime.WEAK: (Fraction(1, 2), Fraction(2, 3)),
    Regime.MODERATELY_WEAK: (Fraction(2, 3), Fraction(1)),
    Regime.STRONG: (Fraction(1), Fraction(2)),
    Regime.VERY_STRONG: (Fraction(2), None),
}


class RegimeUnsupported(ValueError):
    pass


class AlphabetEmpty(ValueError):
    pass


class MessageMismatch(ValueError):
    pass


class DigitOutOfAlphabet(ValueError):
    def __init__(self, decoded: "Decoded"):
        bad = [i for i, f in enumerate(decoded.flags) if f]
        super().__init__(f"decoded digits at info indices {bad} fall outside the alphabet")
        self.decoded = decoded


def classify(alpha) -> Regime:
    alpha = as_rational(alpha)
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    if alpha == 1:
        return Regime.ALPHA_ONE
    for regime, (lo, hi) in REGIME_INTERVALS.items():
        if lo <= alpha and (hi is None or alpha < hi):
            return regime
    raise AssertionError(alpha)


@dataclass(frozen=True)
class Block:
    kind: str  # "info", "copy" or "zero"
    start: int
    stop: int

    def __len__(self) -> int:
        return self.stop - self.start


@dataclass(frozen=True)
class SignalLayout:
    regime: Regime
    K: int
    Q: int
    M: int
    alpha: Fraction
    N: int
    span: int
    blocks: tuple[Block, ...]
    copy_map: tuple[tuple[int, int], ...]  # (copy position, source position)
    alphabet: tuple[int, ...]
    _kinds: tuple[str, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        kinds = [None] * self.span
        for b in self.blocks:
            for p in range(b.start, b.stop):
                if kinds[p] is not None:
                    raise ValueError(f"blocks overlap at position {p}")
                kinds[p] = b.kind
        if None in kinds:
            raise ValueError("blocks do not tile the span")
        for c, src in self.copy_map:
            if kinds[c] != "copy" or kinds[src] != "info":
                raise ValueError(f"copy map entry {c} <- {src} is not copy <- info")
        if sorted(c for c, _ in self.copy_map) != [p for p, k in enumerate(kinds) if k == "copy"]:
            raise ValueError("every copy position needs exactly one source")
        object.__setattr__(self, "_kinds", tuple(kinds))

    @property
    def kinds(self) -> tuple[str, ...]:
        return self._kinds

    @property
    def info_positions(self) -> tuple[int, ...]:
        return tuple(p for p, k in enumerate(self._kinds) if k == "info")

    @property
    def copies(self) -> dict[int, int]:
        return dict(self.copy_map)

    def source_index(self) -> np.ndarray:
        """Per position: index into the message, or -1 for zero padding."""
        idx = {p: i for i, p in enumerate(self.info_positions)}
        copies = self.copies
        out = np.full(self.span, -1, dtype=np.int64)
        for p, kind in enumerate(self._kinds):
            if kind == "info":
                out[p] = idx[p]
            elif kind == "copy":
                out[p] = idx[copies[p]]
        return out


def regime_alphabet(regime: Regime, K: int, Q: int) -> tuple[int, ...]:
    # {1..Q-2} is only carry-free when no two nonzero digits ever superpose,
    # which for very strong / weak layouts holds iff K == 2.
    if regime in (Regime.VERY_STRONG, Regime.WEAK) and K == 2:
        top = Q - 2
    else:
        top = (Q - 1) // K - 1
    if top < 1:
        raise AlphabetEmpty(f"digit alphabet empty for K={K}, Q={Q} ({regime})")
    return tuple(range(1, top + 1))


def _blocks(*spec: tuple[str, int]) -> tuple[Block, ...]:
    out, p = [], 0
    for kind, n in spec:
        if n > 0:
            out.append(Block(kind, p, p + n))
        p += n
    return tuple(out)


def build_layout(regime: Regime, K: int, Q: int, M: int, alpha) -> SignalLayout:
    regime = Regime(regime)
    alpha = as_rational(alpha)
    if regime in (Regime.NOISY, Regime.ALPHA_ONE):
        raise RegimeUnsupported(f"{regime} has no layered transmit scheme")
    if alpha < 0 or classify(alpha) is not regime:
        raise ValueError(f"alpha={alpha} is outside the {regime} interval")
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    alphabet = regime_alphabet(regime, K, Q)

    if regime is Regime.VERY_STRONG:
        N = math.floor(M / (alpha - 1))
        span = N
        blocks = _blocks(("info", N))
        copies = ()
    elif regime is Regime.STRONG:
        N = math.floor(M * alpha / (2 * (alpha - 1)))
        span = 2 * N - M
        blocks = _blocks(("info", N), ("copy", N - M))
        # X_{2N-M-i} = X_{i-1}: the top N-M digits mirror the bottom ones
        copies = tuple((2 * N - M - i, i - 1) for i in range(1, N - M + 1))
    elif regime is Regime.MODERATELY_WEAK:
        N = math.floor(M * (3 * alpha - 2) / (2 * (1 - alpha)))
        span = 2 * N + 3 * M
        blocks = _blocks(("info", M), ("zero", M), ("copy", N), ("info", M), ("info", N))
        # X_{2N+3M-i} = X_{2M+i-1}: the copy block mirrors the top N digits
        copies = tuple((2 * M + i - 1, 2 * N + 3 * M - i) for i in range(1, N + 1))
    else:  # weak
        N = math.floor(M * (2 * alpha - 1) / (1 - alpha))
        span = N + 2 * M
        blocks = _blocks(("info", M), ("zero", M), ("info", N))
        copies = ()

    return SignalLayout(
        regime=regime, K=K, Q=Q, M=M, alpha=alpha, N=N, span=span,
        blocks=blocks, copy_map=tuple(sorted(copies)), alphabet=alphabet,
    )


def encode(layout: SignalLayout, msg: Sequence[int]) -> QaryVector:
    info = layout.info_positions
    if len(msg) != len(info):
        raise MessageMismatch(f"message has {len(msg)} digits, layout needs {len(info)}")
    lo, hi = layout.alphabet[0], layout.alphabet[-1]
    if any(not lo <= d <= hi for d in msg):
        raise MessageMismatch(f"message digits must lie in {{{lo}..{hi}}}")
    return QaryVector(layout.Q, tuple(encode_batch(layout, np.asarray([msg]))[0]), 0)


def encode_batch(layout: SignalLayout, msgs: np.ndarray) -> np.ndarray:
    """Vectorised encoder: ``(..., n_info)`` message digits to ``(..., span)`` transmit digits."""
    src = layout.source_index()
    msgs = np.asarray(msgs, dtype=np.int64)
    padded = np.concatenate([msgs, np.zeros(msgs.shape[:-1] + (1,), dtype=np.int64)], axis=-1)
    return padded[..., src]  # -1 picks the appended zero


# -- decoder --------------------------------------------------------------

@dataclass(frozen=True)
class Step:
    """Resolve ``target = r[level] - other`` (``other`` None means a direct read)."""

    target: tuple[str, int]  # ("x", pos) own digit or ("s", pos) interference-sum digit
    level: int
    other: tuple[str, int] | None


@lru_cache(maxsize=256)
def cancellation_schedule(layout: SignalLayout, shift: int, m: int) -> tuple[Step, ...]:
    """Order in which levels are read and cancelled to recover every own info digit."""
    copies = layout.copies
    kinds = layout.kinds

    def var(tag: str, pos: int):
        if 0 <= pos < layout.span and kinds[pos] != "zero":
            return (tag, copies.get(pos, pos))
        return None

    equations = []
    for p in range(m):
        terms = [v for v in (var("x", p), var("s", p - shift)) if v is not None]
        if terms:
            equations.append((p, terms))

    known: dict[tuple[str, int], Step] = {}
    progress = True
    while progress:
        progress = False
        for p, terms in equations:
            unknown = [v for v in terms if v not in known]
            if len(unknown) == 1:
                target = unknown[0]
                other = next((v for v in terms if v != target), None)
                known[target] = Step(target, p, other)
                progress = True

    wanted = [("x", p) for p in layout.info_positions]
    missing = [v for v in wanted if v not in known]
    if missing:
        raise ValueError(f"layout is not decodable: unresolved {missing}")

    needed: set = set()
    stack = list(wanted)
    while stack:
        v = stack.pop()
        if v in needed:
            continue
        needed.add(v)
        if known[v].other is not None:
            stack.append(known[v].other)
    order = list(known)
    return tuple(known[v] for v in order if v in needed)


@dataclass(frozen=True)
class Decoded:
    message: Message
    flags: tuple[bool, ...]  # True where the estimate is outside the alphabet

    @property
    def ok(self) -> bool:
        return not any(self.flags)


def decode_batch(layout: SignalLayout, shift: int, reduced: np.ndarray) -> np.ndarray:
    """Run the cancellation schedule on ``(..., m)`` reduced digits; returns ``(..., n_info)`` estimates."""
    reduced = np.asarray(reduced, dtype=np.int64)
    m = reduced.shape[-1]
    values = {}
    for step in cancellation_schedule(layout, shift, m):
        v = reduced[..., step.level]
        if step.other is not None:
            v = v - values[step.other]
        values[step.target] = v
    cols = [values[("x", p)] for p in layout.info_positions]
    if not cols:
        return np.zeros(reduced.shape[:-1] + (0,), dtype=np.int64)
    return np.stack(cols, axis=-1)


def decode(layout: SignalLayout, params: ChannelParams, reduced: QaryVector, strict: bool = False) -> Decoded:
    if len(reduced.digits) != params.m or reduced.lowest_exponent != 0:
        raise ValueError(f"expected {params.m} reduced digits at exponents 0..{params.m - 1}")
    est = decode_batch(layout, params.shift, np.asarray([reduced.digits]))[0]
    lo, hi = layout.alphabet[0], layout.alphabet[-1]
    out = Decoded(tuple(int(d) for d in est), tuple(bool(d < lo or d > hi) for d in est))
    if strict and not out.ok:
        raise DigitOutOfAlphabet(out)
    return out


# -- rates ----------------------------------------------------------------

def symmetric_rate_qits(layout: SignalLayout) -> float:
    """Uncoded per-level rate: info digits times ``log_Q`` of the alphabet size."""
    return len(layout.info_positions) * math.log(len(layout.alphabet)) / math.log(layout.Q)


def noisy_regime_rate_log2(log2_snr: float, alpha, K: int) -> float:
    """Treating-interference-as-noise rate in bits, from ``log2(SNR)``; overflow-free."""
    alpha = float(as_rational(alpha))
    ln_snr = log2_snr * math.log(2)
    ln_den = np.logaddexp(0.0, math.log(K - 1) + alpha * ln_snr)
    return float(0.5 * np.logaddexp(0.0, ln_snr - ln_den) / math.log(2))


def noisy_regime_rate(snr, alpha, K: int) -> float:
    """``0.5 * log2(1 + SNR / (1 + (K-1) * SNR**alpha))`` in bits per channel use."""
    if snr <= 0:
        raise ValueError("snr must be positive")
    return noisy_regime_rate_log2(math.log2(snr), alpha, K)
