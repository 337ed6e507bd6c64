"""GDOF curve, Monte-Carlo harness, per-level error profiles and sweeps."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from statistics import NormalDist
from typing import Iterable, Sequence

import numpy as np

from . import schemes
from .channel import (
    CHUNK,
    MESSAGE_STREAM,
    ChannelParams,
    NoiseModel,
    as_rational,
    composite_digits,
    counter_draw,
    derive_params,
)
from .qary import fraction_value, reduce_noisy
from .schemes import Regime, SignalLayout

Z99 = NormalDist().inv_cdf(0.995)
MEASURED_THRESHOLD = 1e-3


def gdof_theoretical(alpha, K: int) -> Fraction:
    """Per-user generalized degrees of freedom of the symmetric K-user channel."""
    a = as_rational(alpha)
    if a < 0 or K < 2:
        raise ValueError("need alpha >= 0 and K >= 2")
    if a <= Fraction(1, 2):
        return 1 - a
    if a <= Fraction(2, 3):
        return a
    if a < 1:
        return 1 - a / 2
    if a == 1:
        return Fraction(1, K)
    if a <= 2:
        return a / 2
    return Fraction(1)


def empirical_gdof(rate_qits: float, M: int, alpha) -> float:
    """Rate normalised by ``0.5*log_Q(SNR) = M/|alpha-1|``."""
    a = as_rational(alpha)
    if a == 1:
        raise ValueError("alpha = 1 has no finite SNR exponent")
    return float(rate_qits) * float(abs(a - 1)) / M


def gaussian_tail(x: float) -> float:
    """P(Z > x) for a standard normal Z."""
    return 0.5 * math.erfc(x / math.sqrt(2))


def wilson_interval(errors: int, n: int, z: float = Z99) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    p = errors / n
    den = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass(frozen=True)
class ErrorProfile:
    """Per-level mismatch counts between noisy and noise-free reduced digits."""

    errors: tuple[int, ...]
    trials: int  # receiver observations per level

    @property
    def rates(self) -> tuple[float, ...]:
        return tuple(e / self.trials for e in self.errors)

    def interval(self, level: int) -> tuple[float, float]:
        return wilson_interval(self.errors[level], self.trials)

    def is_monotone(self) -> bool:
        """Non-increasing in level up to 99% Wilson-interval overlap."""
        for i in range(len(self.errors) - 1):
            lo_i, hi_i = self.interval(i)
            lo_n, hi_n = self.interval(i + 1)
            if hi_n - lo_i > max(hi_i - lo_i, hi_n - lo_n):
                return False
        return True


@dataclass
class SimResult:
    regime: Regime
    K: int
    Q: int
    M: int
    alpha: Fraction
    trials: int
    seed: int
    zero_noise: bool
    profile: ErrorProfile | None
    user_message_error: tuple[float, ...]
    info_digit_error: tuple[float, ...]
    out_of_alphabet: int
    rate_formula: float
    rate_measured: float | None
    d_theory: Fraction
    d_empirical: float
    d_measured: float | None


class EmptyLayout(ValueError):
    """The layout carries no information digits (N = 0, span 0) at this M."""


def _setup(K: int, Q: int, M: int, alpha) -> tuple[ChannelParams, SignalLayout]:
    regime = schemes.classify(alpha)
    layout = schemes.build_layout(regime, K, Q, M, alpha)
    if layout.span == 0:
        derive_params(K, Q, M, alpha, 1)  # precondition checks still apply
        raise EmptyLayout(f"{regime} layout at M={M}, alpha={alpha} has no digits; increase M")
    return derive_params(K, Q, M, alpha, layout.span), layout


def _random_messages(layout: SignalLayout, seed: int, start: int, count: int) -> np.ndarray:
    n_info = len(layout.info_positions)
    a = len(layout.alphabet)
    width = layout.K * n_info
    idx = counter_draw(seed, MESSAGE_STREAM, start, count, lambda rng, n: rng.integers(0, a, size=(n, width)))
    return (idx + layout.alphabet[0]).reshape(count, layout.K, n_info)


def _trial_batches(trials: int):
    start = 0
    while start < trials:
        n = min(CHUNK, trials - start)
        yield start, n
        start += n


def run_trials(params: ChannelParams, layout: SignalLayout, trials: int, seed: int, noise_std: float = 1.0) -> SimResult:
    """Encode random messages, pass them through the Gaussian channel and decode, ``trials`` times."""
    K, m = params.K, params.m
    noise = NoiseModel(seed, std=noise_std)
    level_err = np.zeros(m, dtype=np.int64)
    n_info = len(layout.info_positions)
    digit_err = np.zeros(n_info, dtype=np.int64)
    user_err = np.zeros(K, dtype=np.int64)
    oob = 0
    lo, hi = layout.alphabet[0], layout.alphabet[-1]
    for start, n in _trial_batches(trials):
        msgs = _random_messages(layout, seed, start, n)
        tx = schemes.encode_batch(layout, msgs)
        clean, frac_digits, overflow = composite_digits(params, tx)
        if overflow.any():
            raise AssertionError("carry overflow under a carry-free alphabet")
        frac = fraction_value(frac_digits, params.Q)
        noisy = reduce_noisy(clean, frac, noise.block(start, n, K), params.Q)
        level_err += (noisy != clean).reshape(-1, m).sum(axis=0)
        est = schemes.decode_batch(layout, params.shift, noisy)
        wrong = est != msgs
        digit_err += wrong.reshape(-1, n_info).sum(axis=0)
        user_err += wrong.any(axis=-1).sum(axis=0)
        oob += int(((est < lo) | (est > hi)).sum())

    rate = schemes.symmetric_rate_qits(layout)
    digit_rates = digit_err / (trials * K)
    good = int((digit_rates < MEASURED_THRESHOLD).sum())
    rate_measured = good * math.log(len(layout.alphabet)) / math.log(params.Q)
    return SimResult(
        regime=layout.regime, K=K, Q=params.Q, M=params.M, alpha=params.alpha,
        trials=trials, seed=seed, zero_noise=noise_std == 0,
        profile=ErrorProfile(tuple(int(e) for e in level_err), trials * K),
        user_message_error=tuple(float(e) / trials for e in user_err),
        info_digit_error=tuple(float(r) for r in digit_rates),
        out_of_alphabet=oob,
        rate_formula=rate,
        rate_measured=rate_measured,
        d_theory=gdof_theoretical(params.alpha, K),
        d_empirical=empirical_gdof(rate, params.M, params.alpha),
        d_measured=empirical_gdof(rate_measured, params.M, params.alpha),
    )


def estimate_error_profile(params: ChannelParams, layout: SignalLayout, trials: int, seed: int, noise_std: float = 1.0) -> ErrorProfile:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    return run_trials(params, layout, trials, seed, noise_std).profile


def noisy_point_gdof(K: int, Q: int, M: int, alpha) -> tuple[float, float]:
    """(rate in bits, GDOF) of Gaussian codebooks treating interference as noise at ``SNR = Q**(2M/|alpha-1|)``."""
    a = as_rational(alpha)
    log2_snr = float(Fraction(2 * M) / abs(a - 1)) * math.log2(Q)
    rate = schemes.noisy_regime_rate_log2(log2_snr, a, K)
    return rate, rate / (0.5 * log2_snr)


def simulate(K: int, Q: int, M: int, alpha, trials: int, seed: int, zero_noise: bool = False) -> SimResult:
    """Full pipeline at one operating point; the noisy regime reports its closed-form rate."""
    a = as_rational(alpha)
    regime = schemes.classify(a)
    if regime is Regime.ALPHA_ONE:
        raise schemes.RegimeUnsupported("alpha = 1 has no layered scheme")
    if regime is Regime.NOISY:
        derive_params(K, Q, M, a, 1)  # precondition checks only
        rate_bits, d = noisy_point_gdof(K, Q, M, a)
        rate_qits = rate_bits / math.log2(Q)
        return SimResult(
            regime=regime, K=K, Q=Q, M=M, alpha=a, trials=0, seed=seed,
            zero_noise=zero_noise, profile=None, user_message_error=(),
            info_digit_error=(), out_of_alphabet=0, rate_formula=rate_qits,
            rate_measured=None, d_theory=gdof_theoretical(a, K), d_empirical=d,
            d_measured=None,
        )
    params, layout = _setup(K, Q, M, a)
    return run_trials(params, layout, trials, seed, 0.0 if zero_noise else 1.0)


@dataclass
class GdofPoint:
    alpha: Fraction
    regime: Regime
    K: int
    Q: int
    M: int
    trials: int
    seed: int
    d_theory: Fraction
    d_empirical: float | None = None
    per_level_error: tuple[tuple[int, float, int], ...] = ()
    error: str | None = None

    @property
    def gap(self) -> float | None:
        if self.d_empirical is None:
            return None
        return float(self.d_theory) - self.d_empirical

    @property
    def max_level_error(self) -> float | None:
        if not self.per_level_error:
            return None
        return max(r for _, r, _ in self.per_level_error)


def point_seed(seed: int, alpha: Fraction) -> list[int]:
    # keyed on alpha itself so a point's result does not depend on the grid around it
    return [seed, alpha.numerator, alpha.denominator]


def sweep(alphas: Iterable, K: int, Q: int, M: int, trials: int, seed: int, zero_noise: bool = False) -> list[GdofPoint]:
    out = []
    for alpha in alphas:
        a = as_rational(alpha)
        regime = schemes.classify(a)
        pt = GdofPoint(alpha=a, regime=regime, K=K, Q=Q, M=M, trials=0, seed=seed, d_theory=gdof_theoretical(a, K))
        try:
            if regime is Regime.NOISY:
                derive_params(K, Q, M, a, 1)
                pt.d_empirical = noisy_point_gdof(K, Q, M, a)[1]
            elif regime is not Regime.ALPHA_ONE:
                try:
                    params, layout = _setup(K, Q, M, a)
                except EmptyLayout:
                    pt.d_empirical = 0.0  # nothing sent, rate zero
                    out.append(pt)
                    continue
                ss = np.random.SeedSequence(point_seed(seed, a)).generate_state(2, dtype=np.uint64)
                sub_seed = int(ss[0])
                res = run_trials(params, layout, trials, sub_seed, 0.0 if zero_noise else 1.0)
                pt.trials = trials
                pt.d_empirical = res.d_empirical
                pt.per_level_error = tuple(
                    (i, r, res.profile.trials) for i, r in enumerate(res.profile.rates)
                )
        except ValueError as exc:
            pt.error = f"{type(exc).__name__}: {exc}"
        out.append(pt)
    return out


# -- exhaustive deterministic oracle ---------------------------------------

class CapExceeded(ValueError):
    pass


@dataclass
class VerifyReport:
    layout: SignalLayout
    params: ChannelParams | None
    test_alphabet: tuple[int, ...]
    tuples: int = 0
    counterexamples: list[dict] = field(default_factory=list)
    failures: int = 0

    @property
    def passed(self) -> bool:
        return self.failures == 0


def verification_alphabet(layout: SignalLayout, mode: str) -> tuple[int, ...]:
    if mode == "full":
        return layout.alphabet
    if mode == "extremes":
        return tuple(sorted({layout.alphabet[0], layout.alphabet[-1]}))
    raise ValueError(f"unknown test alphabet {mode!r}")


def verify_round_trip(
    K: int,
    Q: int,
    M: int,
    alpha,
    cap: int = 10**6,
    alphabet: str = "full",
    encoder_layout: SignalLayout | None = None,
    max_reports: int = 10,
    batch: int = 1 << 16,
) -> VerifyReport:
    """Send every message tuple through the noise-free channel and check every receiver.

    ``encoder_layout`` lets a test inject a transmitter that disagrees with
    the decoder's layout (fault injection).
    """
    try:
        params, layout = _setup(K, Q, M, alpha)
    except EmptyLayout:
        # only the empty message exists, and it round-trips trivially
        layout = schemes.build_layout(schemes.classify(alpha), K, Q, M, alpha)
        return VerifyReport(layout, None, (), tuples=1)
    tx_layout = encoder_layout or layout
    digits = verification_alphabet(layout, alphabet)
    n_info = len(layout.info_positions)
    width = K * n_info
    total = len(digits) ** width
    if total > cap:
        raise CapExceeded(f"{total} message tuples exceed the cap of {cap}")
    report = VerifyReport(layout, params, digits, tuples=total)
    alph = np.asarray(digits, dtype=np.int64)
    radix = len(digits) ** np.arange(width, dtype=np.int64)
    for start in range(0, total, batch):
        idx = np.arange(start, min(total, start + batch), dtype=np.int64)
        msgs = alph[(idx[:, None] // radix) % len(digits)].reshape(-1, K, n_info)
        tx = schemes.encode_batch(tx_layout, msgs)
        clean, _, overflow = composite_digits(params, tx)
        est = schemes.decode_batch(layout, params.shift, clean)
        bad = (est != msgs).any(axis=-1) | overflow
        report.failures += int(bad.sum())
        for b, k in np.argwhere(bad):
            if len(report.counterexamples) >= max_reports:
                break
            report.counterexamples.append({
                "messages": msgs[b].tolist(),
                "transmit_digits": tx[b].tolist(),
                "receiver": int(k),
                "carry_overflow": bool(overflow[b, k]),
                "reduced_digits": clean[b, k].tolist(),
                "decoded": est[b, k].tolist(),
            })
    return report


def corrupt_copy_map(layout: SignalLayout) -> SignalLayout:
    """Same layout with the first copy pointed at a different info digit (fault injection)."""
    if not layout.copy_map:
        raise ValueError("layout has no copy digits to corrupt")
    info = layout.info_positions
    (c, src), *rest = layout.copy_map
    wrong = info[(info.index(src) + 1) % len(info)]
    return replace(layout, copy_map=tuple(sorted([(c, wrong), *rest])))
