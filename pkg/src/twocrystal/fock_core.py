"""One crystal's action on the single-excitation sector.

The sector is spanned by one UV photon, ``|1_UV, 0, 0>``, and one
signal-idler pair in mode ``m``, ``|0, 1_j, 1_k>``.  Vectors and matrices
over it use slot 0 for the UV channel and slot ``m + 1`` for pair mode ``m``.

Only the dimensionless couplings ``eta = g t / hbar`` enter; there is no
physical-units layer.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from twocrystal.errors import InvalidCoupling, InvalidModeSet, InvalidSelection

# Below this coupling strength alpha and gamma use their analytic xi -> 0 limits.
SMALL_XI = 1e-7


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class CouplingTable:
    """Couplings ``eta[m]`` of one crystal, with ``xi = sqrt(sum |eta|^2)``."""

    eta: np.ndarray
    selected: int
    xi: float

    @property
    def n_modes(self) -> int:
        return len(self.eta)


@dataclass(frozen=True)
class DcCoefficients:
    """Closed-form transformation coefficients of one crystal.

    ``beta`` is the UV survival amplitude, ``alpha[m]`` the pair creation
    amplitude, ``gamma[m]`` the redistribution amplitude of the selected pair
    into mode ``m``.  ``table`` is the coupling table they were built from.
    """

    beta: float
    alpha: np.ndarray
    gamma: np.ndarray
    xi: float
    table: CouplingTable

    @property
    def selected(self) -> int:
        return self.table.selected

    @property
    def n_modes(self) -> int:
        return len(self.alpha)

    @property
    def alpha_sel(self) -> complex:
        return complex(self.alpha[self.selected])

    @property
    def gamma_sel(self) -> complex:
        return complex(self.gamma[self.selected])

    def nonselected(self) -> np.ndarray:
        """Boolean mask over modes, True for every mode except the selected one."""
        mask = np.ones(self.n_modes, dtype=bool)
        mask[self.selected] = False
        return mask


@dataclass(frozen=True)
class SectorState:
    """Amplitudes over the single-excitation basis.

    Never normalized implicitly: a superposition of an incoming pair and a
    UV photon legitimately has squared norm above one.
    """

    uv_amp: complex
    pair_amps: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "uv_amp", complex(self.uv_amp))
        object.__setattr__(self, "pair_amps", _frozen(self.pair_amps))
        if not (np.isfinite(self.uv_amp) and np.all(np.isfinite(self.pair_amps))):
            raise ValueError("SectorState amplitudes must be finite")

    @classmethod
    def from_vector(cls, v: np.ndarray) -> "SectorState":
        v = np.asarray(v, dtype=np.complex128)
        return cls(complex(v[0]), v[1:])

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate(([self.uv_amp], self.pair_amps))

    @property
    def dim(self) -> int:
        return 1 + len(self.pair_amps)

    def norm_sq(self) -> float:
        return float(abs(self.uv_amp) ** 2 + np.sum(np.abs(self.pair_amps) ** 2))

    def probabilities(self) -> np.ndarray:
        """Squared moduli, UV channel first."""
        return np.abs(self.vector) ** 2


def build_coupling_table(etas: Sequence[complex], selected_index: int) -> CouplingTable:
    eta = np.asarray(list(etas), dtype=np.complex128)
    if eta.ndim != 1 or eta.size == 0:
        raise InvalidModeSet("at least one pair mode is required")
    if not np.all(np.isfinite(eta)):
        raise InvalidCoupling("couplings must be finite")
    if isinstance(selected_index, bool) or int(selected_index) != selected_index:
        raise InvalidSelection(f"selected index must be an integer, got {selected_index!r}")
    selected_index = int(selected_index)
    if not 0 <= selected_index < eta.size:
        raise InvalidSelection(
            f"selected index {selected_index} out of range for {eta.size} modes"
        )
    xi = float(np.sqrt(np.sum(np.abs(eta) ** 2)))
    return CouplingTable(eta=_frozen(eta), selected=selected_index, xi=xi)


def dc_coefficients(table: CouplingTable) -> DcCoefficients:
    """Resummed series for beta, alpha and gamma.

    ``1 - cos xi`` is evaluated as ``2 sin^2(xi/2)`` so gamma keeps full
    relative precision at small coupling.
    """
    xi = table.xi
    eta = np.asarray(table.eta)
    sin_over_xi = 1.0 if xi < SMALL_XI else math.sin(xi) / xi
    alpha = 1j * eta * sin_over_xi
    gamma = np.conj(eta[table.selected]) * eta * _one_minus_cos_over_xi2(xi)
    return DcCoefficients(
        beta=math.cos(xi),
        alpha=_frozen(alpha),
        gamma=_frozen(gamma),
        xi=xi,
        table=table,
    )


def _one_minus_cos_over_xi2(xi: float) -> float:
    if xi < SMALL_XI:
        return 0.5
    return 2.0 * math.sin(xi / 2) ** 2 / xi**2


def _check_mode(coeffs: DcCoefficients, mode: int) -> int:
    if isinstance(mode, bool) or int(mode) != mode or not 0 <= int(mode) < coeffs.n_modes:
        raise InvalidSelection(f"mode {mode!r} out of range for {coeffs.n_modes} modes")
    return int(mode)


def apply_to_uv(coeffs: DcCoefficients) -> SectorState:
    """Image of one UV photon: ``beta |UV> + sum_m alpha[m] |m>``."""
    return SectorState(coeffs.beta, coeffs.alpha)


def _redistribution(coeffs: DcCoefficients, mode: int) -> np.ndarray:
    # eta*(mode) eta(n) (1 - cos xi) / xi^2, the generalization of gamma to any input mode
    if mode == coeffs.selected:
        return np.array(coeffs.gamma)
    eta = np.asarray(coeffs.table.eta)
    return np.conj(eta[mode]) * eta * _one_minus_cos_over_xi2(coeffs.xi)


def apply_to_pair(coeffs: DcCoefficients, input_mode: int) -> SectorState:
    """Image of one pair in ``input_mode``.

    For the selected mode this is ``-alpha*(sel)|UV> + (1 - gamma(sel))|sel>
    - sum_{m != sel} gamma(m)|m>``; other modes follow from the same rank-one
    structure with the selected coupling replaced by the input one.
    """
    mode = _check_mode(coeffs, input_mode)
    pair = -_redistribution(coeffs, mode)
    pair[mode] += 1.0
    return SectorState(-np.conj(coeffs.alpha[mode]), pair)


def closed_form_unitary(coeffs: DcCoefficients) -> np.ndarray:
    """Sector unitary assembled column by column from the closed forms."""
    dim = 1 + coeffs.n_modes
    u = np.empty((dim, dim), dtype=np.complex128)
    u[:, 0] = apply_to_uv(coeffs).vector
    for m in range(coeffs.n_modes):
        u[:, m + 1] = apply_to_pair(coeffs, m).vector
    return u


def sector_generator(table: CouplingTable) -> np.ndarray:
    """Hermitian matrix of ``H t / hbar`` on the sector.

    ``<m| H |UV> = eta[m]`` (creation of a pair), ``<UV| H |m> = eta*[m]``.
    """
    dim = 1 + table.n_modes
    k = np.zeros((dim, dim), dtype=np.complex128)
    k[1:, 0] = table.eta
    k[0, 1:] = np.conj(table.eta)
    return k


def brute_force_unitary(table: CouplingTable) -> np.ndarray:
    """``exp(i K)`` by scaling-and-squaring; shares nothing with the closed forms."""
    return scipy.linalg.expm(1j * sector_generator(table))


def apply_unitary(u: np.ndarray, s: SectorState) -> SectorState:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1] or u.shape[1] != s.dim:
        raise ValueError(f"unitary of shape {u.shape} cannot act on a state of dimension {s.dim}")
    return SectorState.from_vector(u @ s.vector)


def unitarity_defect(u: np.ndarray) -> float:
    """Max entrywise ``|U^dagger U - I|``."""
    u = np.asarray(u)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def random_coupling_table(
    rng: np.random.Generator, n_modes: int, xi: float | None = None
) -> CouplingTable:
    """Complex Gaussian couplings rescaled to strength ``xi``.

    ``xi`` defaults to a uniform draw on (0, 1.5]; the selected mode is uniform.
    """
    if xi is None:
        xi = 1.5 * (1.0 - rng.random())
    eta = rng.normal(size=n_modes) + 1j * rng.normal(size=n_modes)
    eta *= xi / np.linalg.norm(eta)
    return build_coupling_table(eta, int(rng.integers(n_modes)))
