"""Experiments A and B: two identical crystals, separate or in series.

In experiment A the two crystals X' and X emit independently.  In
experiment B the selected pair from X' is steered into X, where it
interferes with the pair X itself emits.  Only the relative phase
``delta = sigma - phi`` matters physically.

Rates are ``n0 * |amplitude|^2`` over an input state whose squared norm is
``1 + |alpha(sel)|^2``; nothing is renormalized.
"""

from __future__ import annotations

import cmath
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from twocrystal.errors import InvalidGrid, InvalidParams, InvalidRate, WrongCase
from twocrystal.fock_core import DcCoefficients, SectorState, apply_to_pair, apply_to_uv

# Relative-phase tolerance for the case-specific analyses.
PHASE_CASE_TOL = 1e-9
# Above this |gamma(sel)| the quarter/quarter/half split is flagged as approximate.
GAMMA_NEGLECT_THRESHOLD = 1e-6


def _check_rate(n0: float) -> float:
    n0 = float(n0)
    if not (math.isfinite(n0) and n0 > 0):
        raise InvalidRate(f"UV photon rate must be positive and finite, got {n0}")
    return n0


def wrap_phase(x: float) -> float:
    """Map an angle onto (-pi, pi]."""
    y = math.remainder(x, 2 * math.pi)
    return math.pi if y == -math.pi else y


def one_minus_beta(coeffs: DcCoefficients) -> float:
    """``1 - cos xi`` without cancellation."""
    return 2.0 * math.sin(coeffs.xi / 2) ** 2


@dataclass(frozen=True)
class SigmaParts:
    """Path lengths and wave-vector magnitudes of the selected signal and idler."""

    l_s: float
    k_j0: float
    l_i: float
    k_k0: float

    @property
    def sigma(self) -> float:
        return self.l_s * self.k_j0 + self.l_i * self.k_k0


@dataclass(frozen=True)
class ExperimentConfig:
    """Inputs of experiment B.

    Both crystals share ``coeffs``.  Give either ``sigma`` or ``sigma_parts``;
    if both are given they must agree to 1e-12.
    """

    coeffs: DcCoefficients
    n0: float
    phi: float
    sigma: float | None = None
    sigma_parts: SigmaParts | None = None

    def __post_init__(self):
        object.__setattr__(self, "n0", _check_rate(self.n0))
        if self.sigma is None:
            if self.sigma_parts is None:
                raise InvalidParams("either sigma or sigma_parts is required")
            object.__setattr__(self, "sigma", float(self.sigma_parts.sigma))
        elif self.sigma_parts is not None:
            derived = self.sigma_parts.sigma
            if abs(derived - self.sigma) > 1e-12 * max(1.0, abs(derived)):
                raise InvalidParams(
                    f"sigma={self.sigma} disagrees with sigma_parts ({derived})"
                )
        for name in ("sigma", "phi"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidParams(f"{name} must be finite")

    @property
    def delta(self) -> float:
        return wrap_phase(self.sigma - self.phi)


@dataclass(frozen=True)
class ExperimentARates:
    q_prime: float
    q: float
    q_total: float


@dataclass(frozen=True)
class ExperimentBResult:
    input_state: SectorState
    output_state: SectorState
    n0: float
    prob_c: float
    prob_selected: float
    prob_nonselected: dict[int, float]
    rate_c: float
    rate_selected: float
    rate_nonselected_total: float
    uv_loss: float
    balance_residual: float


@dataclass(frozen=True)
class BalanceRecord:
    """Both sides of the UV-channel rate balance.

    ``lhs = n0 - <Q_c>``, taken from :func:`uv_loss_fraction` so that a tiny
    loss is not swamped by rounding of ``<Q_c> ~ n0``; ``rhs`` is the outgoing
    pair rate minus the incoming pair rate ``<Q'>``, summed from the
    propagated amplitudes.
    """

    lhs: float
    rhs: float
    residual: float


@dataclass(frozen=True)
class EnhancementDecomposition:
    from_xprime: float
    from_x_intrinsic: float
    from_interference: float
    rate_selected: float
    q_e: float
    gamma_neglected: bool = field(default=False)


@dataclass(frozen=True)
class QuenchAnalysis:
    prob_c: float
    passthrough_prob: float
    nonselected_prob: float
    prob_c_direct: float


class ScanRow(NamedTuple):
    delta: float
    rate_selected: float
    rate_c: float


def experiment_a_rates(coeffs: DcCoefficients, n0: float) -> ExperimentARates:
    n0 = _check_rate(n0)
    q = n0 * abs(coeffs.alpha_sel) ** 2
    return ExperimentARates(q_prime=q, q=q, q_total=2 * q)


def input_state_b(coeffs: DcCoefficients, sigma: float, phi: float) -> SectorState:
    """Selected pair from X' with phase ``sigma`` plus a UV photon with phase ``phi``."""
    pair = np.zeros(coeffs.n_modes, dtype=np.complex128)
    pair[coeffs.selected] = cmath.exp(1j * sigma) * coeffs.alpha_sel
    return SectorState(cmath.exp(1j * phi), pair)


def uv_loss_fraction(coeffs: DcCoefficients, delta: float) -> float:
    """``1 - prob_c`` evaluated without subtracting two numbers close to one.

    With ``u = beta - e^{i delta} a``, ``a = |alpha(sel)|^2``:
    ``1 - |u|^2 = sin^2 xi + 2 a beta cos(delta) - a^2``.
    """
    a = abs(coeffs.alpha_sel) ** 2
    return math.sin(coeffs.xi) ** 2 + 2 * a * coeffs.beta * math.cos(delta) - a * a


def _balance(n0: float, coeffs: DcCoefficients, out: SectorState, delta: float) -> BalanceRecord:
    probs = np.abs(out.pair_amps) ** 2
    q_prime = n0 * abs(coeffs.alpha_sel) ** 2
    lhs = n0 * uv_loss_fraction(coeffs, delta)
    rhs = n0 * probs[coeffs.selected] + n0 * float(np.sum(probs[coeffs.nonselected()])) - q_prime
    return BalanceRecord(lhs=lhs, rhs=rhs, residual=abs(lhs - rhs))


def _output_over_phi(coeffs: DcCoefficients, delta: np.ndarray) -> np.ndarray:
    """Output amplitudes divided by ``e^{i phi}``, one row per relative phase.

    The selected amplitude is ``alpha0 ((1 + e^{i delta}) - e^{i delta} gamma0)``
    with ``1 + e^{i delta} = 2 cos(delta/2) e^{i delta/2}``, which keeps full
    relative precision near the quench where the two terms nearly cancel.
    """
    delta = np.atleast_1d(np.asarray(delta, dtype=float))
    rot = np.exp(1j * delta)
    incoming = rot * coeffs.alpha_sel
    out = incoming[:, None] * apply_to_pair(coeffs, coeffs.selected).vector[None, :]
    out += apply_to_uv(coeffs).vector[None, :]
    one_plus_rot = 2 * np.cos(delta / 2) * np.exp(0.5j * delta)
    out[:, 1 + coeffs.selected] = coeffs.alpha_sel * (one_plus_rot - rot * coeffs.gamma_sel)
    return out


def run_experiment_b(cfg: ExperimentConfig) -> ExperimentBResult:
    """Propagate the experiment-B input state through crystal X.

    The crystal acts linearly on the incoming-pair and UV-photon components.
    """
    coeffs = cfg.coeffs
    sel = coeffs.selected
    out_vec = cmath.exp(1j * cfg.phi) * _output_over_phi(coeffs, cfg.sigma - cfg.phi)[0]
    out = SectorState.from_vector(out_vec)
    probs = np.abs(out.pair_amps) ** 2
    nonsel = {m: float(probs[m]) for m in range(coeffs.n_modes) if m != sel}
    prob_c = abs(out.uv_amp) ** 2
    return ExperimentBResult(
        input_state=input_state_b(coeffs, cfg.sigma, cfg.phi),
        output_state=out,
        n0=cfg.n0,
        prob_c=prob_c,
        prob_selected=float(probs[sel]),
        prob_nonselected=nonsel,
        rate_c=cfg.n0 * prob_c,
        rate_selected=cfg.n0 * float(probs[sel]),
        rate_nonselected_total=cfg.n0 * sum(nonsel.values()),
        uv_loss=cfg.n0 * uv_loss_fraction(coeffs, cfg.sigma - cfg.phi),
        balance_residual=_balance(cfg.n0, coeffs, out, cfg.sigma - cfg.phi).residual,
    )


def uv_channel_balance(cfg: ExperimentConfig) -> BalanceRecord:
    res = run_experiment_b(cfg)
    return _balance(cfg.n0, cfg.coeffs, res.output_state, cfg.sigma - cfg.phi)


def _require_case(cfg: ExperimentConfig, target: float, name: str) -> None:
    off = wrap_phase(cfg.sigma - cfg.phi - target)
    if abs(off) > PHASE_CASE_TOL:
        raise WrongCase(
            f"{name} requires sigma - phi = {target:g} (mod 2 pi); off by {off:.3g} rad"
        )


def enhancement_decomposition(cfg: ExperimentConfig) -> EnhancementDecomposition:
    """Split the constructive-interference rate into its three sources.

    The pairs arriving from X' and the pairs X would emit alone each carry
    ``n0 |alpha(sel)|^2``; the remainder of the measured selected rate is
    attributed to interference.  That remainder equals half of
    ``4 n0 |alpha(sel)|^2`` up to terms of order ``gamma(sel)``, so
    ``gamma_neglected`` is set once ``|gamma(sel)|`` exceeds 1e-6.
    """
    _require_case(cfg, 0.0, "enhancement decomposition")
    res = run_experiment_b(cfg)
    q_single = cfg.n0 * abs(cfg.coeffs.alpha_sel) ** 2
    return EnhancementDecomposition(
        from_xprime=q_single,
        from_x_intrinsic=q_single,
        from_interference=res.rate_selected - 2 * q_single,
        rate_selected=res.rate_selected,
        q_e=4 * q_single,
        gamma_neglected=abs(cfg.coeffs.gamma_sel) > GAMMA_NEGLECT_THRESHOLD,
    )


def prob_c_quench_expanded(coeffs: DcCoefficients) -> tuple[float, float, float]:
    """UV survival at destructive interference, as the sum of its physical parts.

    Returns ``(prob_c, passthrough, nonselected)`` where ``prob_c = 1 +
    |alpha0|^2 - passthrough - nonselected``.
    """
    a0 = coeffs.alpha_sel
    mask = coeffs.nonselected()
    passthrough = abs(a0 * coeffs.gamma_sel) ** 2
    nonsel = float(np.sum(np.abs(coeffs.alpha[mask] + a0 * coeffs.gamma[mask]) ** 2))
    return 1 + abs(a0) ** 2 - passthrough - nonsel, passthrough, nonsel


def prob_c_enhanced_expanded(coeffs: DcCoefficients) -> float:
    """UV survival at constructive interference with ``beta^2`` eliminated."""
    a0sq = abs(coeffs.alpha_sel) ** 2
    rest = float(np.sum(np.abs(coeffs.alpha[coeffs.nonselected()]) ** 2))
    return 1 - 3 * a0sq - rest + 2 * a0sq * one_minus_beta(coeffs) + a0sq**2


def quench_analysis(cfg: ExperimentConfig) -> QuenchAnalysis:
    _require_case(cfg, math.pi, "quench analysis")
    prob_c, passthrough, nonsel = prob_c_quench_expanded(cfg.coeffs)
    direct = run_experiment_b(cfg).prob_c
    return QuenchAnalysis(
        prob_c=prob_c,
        passthrough_prob=passthrough,
        nonselected_prob=nonsel,
        prob_c_direct=direct,
    )


def phase_scan(
    coeffs: DcCoefficients, n0: float, delta_grid: Sequence[float]
) -> list[ScanRow]:
    """Selected-pair and UV rates across the fringe, in grid order.

    The UV photon is held at phase 0 and the incoming pair at ``delta``.
    """
    n0 = _check_rate(n0)
    deltas = np.asarray(list(delta_grid), dtype=float)
    if deltas.ndim != 1 or deltas.size == 0:
        raise InvalidGrid("phase grid must be a non-empty list")
    if not np.all(np.isfinite(deltas)):
        raise InvalidGrid("phase grid must be finite")
    out = _output_over_phi(coeffs, deltas)
    rate_sel = n0 * np.abs(out[:, 1 + coeffs.selected]) ** 2
    rate_c = n0 * np.abs(out[:, 0]) ** 2
    return [ScanRow(float(d), float(s), float(c)) for d, s, c in zip(deltas, rate_sel, rate_c)]


def fringe_grid(delta_min: float, delta_max: float, steps: int) -> list[float]:
    """Half-open grid ``delta_min + k (delta_max - delta_min) / steps``, k < steps."""
    if steps < 1:
        raise InvalidGrid(f"steps must be >= 1, got {steps}")
    if not (math.isfinite(delta_min) and math.isfinite(delta_max)):
        raise InvalidGrid("grid bounds must be finite")
    width = delta_max - delta_min
    return [delta_min + width * k / steps for k in range(steps)]
