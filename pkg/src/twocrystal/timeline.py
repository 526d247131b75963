"""Pair occupancy of crystal X over time, and Monte Carlo coincidence counts.

Selected pairs leave X at the enhanced rate ``q_e``: a quarter of them
arrive from X', three quarters are born in X.  Each pair occupies the
crystal for ``delta = max(tau_pcoh, n d_max / c)``.  When the mean spacing
``1 / q_e`` dwarfs ``delta``, an incoming pair is almost never inside X
while a pair is born there.

Randomness comes from numpy's PCG64.  The master seed is split with
``SeedSequence.spawn`` into independent streams: incoming arrivals, births,
and channel sampling.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from twocrystal.errors import InvalidParams
from twocrystal.experiment import ExperimentConfig, run_experiment_b
from twocrystal.fock_core import DcCoefficients

SPEED_OF_LIGHT = 2.99792458e8
# LiIO3 default; only the order of magnitude of n d_max / c matters.
DEFAULT_N_REFR = 1.9
# T / delta above this ratio counts as "much greater".
INEQUALITY_RATIO = 100.0

_STREAM_INCOMING, _STREAM_BORN, _STREAM_CHANNEL = range(3)


class Origin(str, enum.Enum):
    FROM_XPRIME = "FROM_XPRIME"
    BORN_IN_X = "BORN_IN_X"


@dataclass(frozen=True)
class TimescaleParams:
    q_e: float
    tau_pcoh: float
    d_max: float
    n_refr: float = DEFAULT_N_REFR
    c: float = SPEED_OF_LIGHT

    def __post_init__(self):
        for name in ("q_e", "tau_pcoh", "d_max", "n_refr", "c"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise InvalidParams(f"{name} must be positive and finite, got {v!r}")

    @property
    def transit_time(self) -> float:
        return self.n_refr * self.d_max / self.c

    @property
    def delta(self) -> float:
        return max(self.tau_pcoh, self.transit_time)

    @property
    def incoming_rate(self) -> float:
        return self.q_e / 4

    @property
    def born_rate(self) -> float:
        return 3 * self.q_e / 4


@dataclass(frozen=True)
class Timescales:
    t_mean: float
    delta: float
    ratio: float
    inequality_holds: bool


@dataclass(frozen=True)
class TimelineEvent:
    t_start: float
    duration: float
    origin: Origin


@dataclass(frozen=True)
class TimelineStats:
    n_incoming: int
    n_born: int
    n_overlapping_born: int
    overlap_fraction: float
    t_mean_measured: float


@dataclass(frozen=True)
class MonteCarloResult:
    channels: tuple[str, ...]
    counts: tuple[int, ...]
    rates: tuple[float, ...]
    stderr: tuple[float, ...]
    analytic_rates: tuple[float, ...]
    n_trials: int
    duration: float

    def channel(self, name: str) -> dict:
        i = self.channels.index(name)
        return {
            "count": self.counts[i],
            "rate": self.rates[i],
            "stderr": self.stderr[i],
            "analytic_rate": self.analytic_rates[i],
        }


def derive_timescales(p: TimescaleParams) -> Timescales:
    t_mean = 1.0 / p.q_e
    ratio = t_mean / p.delta
    return Timescales(t_mean=t_mean, delta=p.delta, ratio=ratio, inequality_holds=ratio > INEQUALITY_RATIO)


def overlap_probability(p: TimescaleParams) -> float:
    """Chance that a birth falls within ``delta`` of some incoming pair."""
    return -math.expm1(-2 * p.delta * p.incoming_rate)


def _streams(seed: int) -> list[np.random.Generator]:
    children = np.random.SeedSequence(int(seed)).spawn(3)
    return [np.random.Generator(np.random.PCG64(s)) for s in children]


def poisson_arrivals(rng: np.random.Generator, rate: float, duration: float) -> np.ndarray:
    """Arrival times in ``[0, duration)`` of a homogeneous Poisson process."""
    expected = rate * duration
    chunk = max(16, int(expected + 6 * math.sqrt(expected) + 16))
    times = []
    t = 0.0
    while True:
        gaps = rng.exponential(1.0 / rate, size=chunk)
        arr = t + np.cumsum(gaps)
        times.append(arr)
        t = arr[-1]
        if t >= duration:
            break
    out = np.concatenate(times)
    return out[out < duration]


def _overlap_mask(born: np.ndarray, incoming: np.ndarray, delta: float) -> np.ndarray:
    # Closed intervals [t, t + delta] meet iff the starts differ by at most delta.
    idx = np.searchsorted(incoming, born - delta, side="left")
    mask = idx < len(incoming)
    hit = np.zeros(len(born), dtype=bool)
    hit[mask] = incoming[idx[mask]] <= born[mask] + delta
    return hit


def _simulate(p: TimescaleParams, duration: float, seed: int):
    if not (math.isfinite(duration) and duration > 0):
        raise InvalidParams(f"duration must be positive, got {duration}")
    rng_in, rng_born, _ = _streams(seed)
    incoming = poisson_arrivals(rng_in, p.incoming_rate, duration)
    born = poisson_arrivals(rng_born, p.born_rate, duration)
    n_overlap = int(np.count_nonzero(_overlap_mask(born, incoming, p.delta)))
    n_total = len(incoming) + len(born)
    stats = TimelineStats(
        n_incoming=len(incoming),
        n_born=len(born),
        n_overlapping_born=n_overlap,
        overlap_fraction=n_overlap / len(born) if len(born) else 0.0,
        t_mean_measured=duration / n_total if n_total else math.inf,
    )
    return incoming, born, stats


def timeline_stats(p: TimescaleParams, duration: float, seed: int) -> TimelineStats:
    """Statistics of :func:`simulate_timeline` without materializing events."""
    return _simulate(p, duration, seed)[2]


def simulate_timeline(
    p: TimescaleParams, duration: float, seed: int
) -> tuple[list[TimelineEvent], TimelineStats]:
    incoming, born, stats = _simulate(p, duration, seed)
    starts = np.concatenate((incoming, born))
    is_born = np.concatenate((np.zeros(len(incoming), bool), np.ones(len(born), bool)))
    order = np.argsort(starts, kind="stable")
    delta = p.delta
    events = [
        TimelineEvent(float(starts[i]), delta, Origin.BORN_IN_X if is_born[i] else Origin.FROM_XPRIME)
        for i in order
    ]
    return events, stats


def channel_names(coeffs: DcCoefficients) -> tuple[str, ...]:
    names = ["uv", "selected"]
    names += [f"pair_{m}" for m in range(coeffs.n_modes) if m != coeffs.selected]
    return tuple(names)


def coincidence_monte_carlo(
    coeffs: DcCoefficients,
    n0: float,
    sigma: float,
    phi: float,
    duration: float,
    seed: int,
) -> MonteCarloResult:
    """Count exit channels for a Poisson stream of UV photons into experiment B.

    The number of photons in ``duration`` is Poisson(n0 duration); each is
    assigned a channel with the output probabilities divided by their sum
    ``1 + |alpha(sel)|^2``.  Rates are scaled back by that sum so they are
    comparable with ``n0 * probability``.  Standard errors are Poisson,
    computed from ``max(count, 1)`` so an empty channel is not reported as
    exact.
    """
    if not (math.isfinite(duration) and duration > 0):
        raise InvalidParams(f"duration must be positive, got {duration}")
    res = run_experiment_b(ExperimentConfig(coeffs=coeffs, n0=n0, sigma=sigma, phi=phi))
    nonsel = [res.prob_nonselected[m] for m in sorted(res.prob_nonselected)]
    probs = np.array([res.prob_c, res.prob_selected, *nonsel])
    total = float(probs.sum())
    rng = _streams(seed)[_STREAM_CHANNEL]
    n_trials = int(rng.poisson(res.n0 * duration))
    counts = rng.multinomial(n_trials, probs / total)
    scale = total / duration
    return MonteCarloResult(
        channels=channel_names(coeffs),
        counts=tuple(int(c) for c in counts),
        rates=tuple(float(c * scale) for c in counts),
        stderr=tuple(float(math.sqrt(max(int(c), 1)) * scale) for c in counts),
        analytic_rates=tuple(float(res.n0 * q) for q in probs),
        n_trials=n_trials,
        duration=float(duration),
    )
