"""Memory kernels and closed-form spectra for the engineered cavity baths.

Two baths are provided: a thermal cavity (heating/cooling dissipators keep it
at occupation nbar) and a squeezed cavity (two-photon drive in the frame
rotating at half the pump frequency).  Every kernel entry is a finite sum of
decaying exponentials c * exp(-kappa t) * exp(i mu t), so both the time-domain
matrix and its one-sided Fourier transform c / (kappa + i (omega - mu)) come
from one mode table.  Frequency arguments named ``delta`` are measured from
the qubit frequency (omega_q or delta_q); bare transform variables are named
``omega``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize_scalar

from .liouville import (
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_Z,
    commutator_superop,
    left_multiplier,
    right_multiplier,
)

__all__ = [
    "ThermalBathParams",
    "SqueezedBathParams",
    "BogoliubovParams",
    "EffectiveRates",
    "KernelModes",
    "KernelModel",
    "bogoliubov_params",
    "kernel_modes",
    "kernel_model",
    "thermal_kernel_time",
    "thermal_kernel_freq",
    "squeezed_kernel_time",
    "squeezed_kernel_freq",
    "generic_kernel_time",
    "effective_rates",
    "markovian_spectrum",
    "thermal_closed_spectrum",
    "squeezed_closed_spectrum",
    "squeezed_steady_ground_population",
    "default_frequency_grid",
    "locate_peak",
]


@dataclass(frozen=True)
class ThermalBathParams:
    """Qubit coupled to a lossy cavity held in a thermal state.

    All rates share one arbitrary frequency unit; inputs quoted in units of
    the coupling correspond to g = 1.
    """

    g: float
    omega_q: float
    omega_c: float
    kappa: float
    nbar: float = 0.0

    def __post_init__(self):
        if self.g <= 0 or self.kappa <= 0:
            raise ValueError("g and kappa must be positive")
        if self.nbar < 0:
            raise ValueError("nbar must be nonnegative")

    @property
    def delta(self) -> float:
        """Qubit-cavity detuning omega_q - omega_c."""
        return self.omega_q - self.omega_c


@dataclass(frozen=True)
class SqueezedBathParams:
    """Qubit coupled to a lossy cavity under a two-photon drive.

    Detunings are measured from half the pump frequency; r is the squeezing
    strength and must satisfy r < |delta_c| for the drive to be stable.
    """

    g: float
    delta_q: float
    delta_c: float
    r: float
    kappa: float

    def __post_init__(self):
        if self.g <= 0 or self.kappa <= 0:
            raise ValueError("g and kappa must be positive")
        if not 0 <= self.r < abs(self.delta_c):
            raise ValueError(f"require 0 <= r < |delta_c|, got r={self.r}, delta_c={self.delta_c}")

    def bogoliubov(self) -> "BogoliubovParams":
        return bogoliubov_params(self)


@dataclass(frozen=True)
class BogoliubovParams:
    """Derived quantities of the transform that diagonalizes the driven cavity."""

    zeta: float
    delta_c_eff: float
    g1: float
    g2: float
    nbar: float
    mbar: complex
    delta_diff: float
    sigma_sum: float


@dataclass(frozen=True)
class EffectiveRates:
    """Markov-limit Lamb shift and decay rate of the qubit."""

    delta_eff: float
    gamma_eff: float


@lru_cache(maxsize=None)
def bogoliubov_params(p: SqueezedBathParams) -> BogoliubovParams:
    """Transform parameters of the squeezed cavity.

    zeta is the squeeze angle, delta_c_eff the diagonalized cavity frequency,
    g1/g2 the rotating/counter-rotating couplings (g2 = -g sinh zeta), and
    nbar/mbar the steady-state occupation and two-photon coherence of the
    transformed mode.
    """
    zeta = 0.5 * np.arctanh(p.r / p.delta_c)
    delta_c_eff = float(np.sqrt(p.delta_c**2 - p.r**2))
    g1 = p.g * float(np.cosh(zeta))
    g2 = -p.g * float(np.sinh(zeta))
    nbar = float(np.sinh(zeta) ** 2)
    mbar = complex(p.kappa * np.sinh(2 * zeta) / (2.0 * (p.kappa + 1j * delta_c_eff)))
    return BogoliubovParams(
        zeta=float(zeta),
        delta_c_eff=delta_c_eff,
        g1=g1,
        g2=g2,
        nbar=nbar,
        mbar=mbar,
        delta_diff=p.delta_q - delta_c_eff,
        sigma_sum=p.delta_q + delta_c_eff,
    )


# --------------------------------------------------------------------------
# mode tables
# --------------------------------------------------------------------------

THERMAL_STRUCTURE = frozenset([(0, 0), (0, 3), (1, 1), (2, 2), (3, 0), (3, 3)])
SQUEEZED_STRUCTURE = THERMAL_STRUCTURE | frozenset([(1, 2), (2, 1)])


@dataclass(frozen=True)
class KernelModes:
    """Exponential-mode table of a 4x4 memory kernel.

    ``entries[(i, j)]`` is a tuple of (coefficient, mu) pairs; the kernel
    entry is sum_k c_k exp((-kappa + i mu_k) t) in time and
    sum_k c_k / (kappa + i (omega - mu_k)) in frequency.  ``omega_ref`` is the
    qubit frequency that defines the detuning convention delta = omega -
    omega_ref and the free-rotation phases used by the time-local reduction.
    """

    kappa: float
    omega_ref: float
    entries: tuple  # ((i, j), ((c, mu), ...)) pairs, hashable

    def entry_map(self) -> dict:
        return {ij: modes for ij, modes in self.entries}

    def time_matrix(self, t) -> np.ndarray:
        """Kernel matrix at time(s) t >= 0; shape (..., 4, 4)."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("kernel is defined for t >= 0 only")
        out = np.zeros(t.shape + (4, 4), dtype=complex)
        env = np.exp(-self.kappa * t)
        for (i, j), modes in self.entries:
            acc = np.zeros_like(t, dtype=complex)
            for c, mu in modes:
                acc = acc + c * np.exp(1j * mu * t)
            out[..., i, j] = env * acc
        return out

    def freq_matrix(self, omega) -> np.ndarray:
        """One-sided transform of the kernel at transform variable(s) omega."""
        omega = np.asarray(omega, dtype=float)
        out = np.zeros(omega.shape + (4, 4), dtype=complex)
        for (i, j), modes in self.entries:
            acc = np.zeros_like(omega, dtype=complex)
            for c, mu in modes:
                acc = acc + c / (self.kappa + 1j * (omega - mu))
            out[..., i, j] = acc
        return out

    def pole_frequencies(self) -> np.ndarray:
        """Complex omega poles mu + i kappa of all entries (upper half plane)."""
        mus = sorted({mu for _, modes in self.entries for _, mu in modes})
        return np.array([mu + 1j * self.kappa for mu in mus])


@dataclass(frozen=True)
class KernelModel:
    """Callable pair of time- and frequency-domain kernels plus structure tag.

    ``freq_kernel`` takes the detuning delta from the qubit frequency;
    ``time_kernel`` takes t >= 0.
    """

    time_kernel: Callable
    freq_kernel: Callable
    structure: str
    modes: KernelModes

    def __post_init__(self):
        allowed = THERMAL_STRUCTURE if self.structure == "thermal" else SQUEEZED_STRUCTURE
        for ij, _ in self.modes.entries:
            if ij not in allowed:
                raise ValueError(f"kernel entry {ij} outside {self.structure} structure")


def _conj_transform_modes(modes):
    """Modes of the one-sided transform of the conjugated time function."""
    return tuple((np.conj(c), -mu) for c, mu in modes)


def _thermal_modes(p: ThermalBathParams) -> KernelModes:
    g2, nb = p.g**2, p.nbar
    delta = p.delta
    k11 = ((-nb * g2, delta), (-nb * g2, -delta))
    k44 = ((-(nb + 1) * g2, delta), (-(nb + 1) * g2, -delta))
    k22 = ((-(2 * nb + 1) * g2, p.omega_c),)
    entries = (
        ((0, 0), k11),
        ((3, 3), k44),
        ((0, 3), tuple((-c, mu) for c, mu in k44)),
        ((3, 0), tuple((-c, mu) for c, mu in k11)),
        ((1, 1), k22),
        ((2, 2), _conj_transform_modes(k22)),
    )
    return KernelModes(kappa=p.kappa, omega_ref=p.omega_q, entries=entries)


def _squeezed_modes(p: SqueezedBathParams, include_sum_frequency: bool = True) -> KernelModes:
    b = bogoliubov_params(p)
    g1, g2, nb, mb = b.g1, b.g2, b.nbar, b.mbar
    dc, dd, ss = b.delta_c_eff, b.delta_diff, b.sigma_sum
    two_n1 = 2 * nb + 1

    # coherence sector; poles at the diagonalized cavity frequency +/- dc
    k22 = [(-(2 * g1 * g2 * np.conj(mb) + g1**2 * two_n1), dc)]
    k32 = [((2 * g2**2 * np.conj(mb) + g1 * g2 * two_n1), dc)]
    if include_sum_frequency:
        k22.append((-(2 * g1 * g2 * mb + g2**2 * two_n1), -dc))
        k32.append(((2 * g1**2 * mb + g1 * g2 * two_n1), -dc))

    # population sector; difference- and sum-frequency modes
    def _pop(n_diff, n_sum):
        modes = [
            (-g1 * g2 * mb, dd),
            (-g1 * g2 * np.conj(mb), -dd),
            (-g1**2 * n_diff, dd),
            (-g1**2 * n_diff, -dd),
        ]
        if include_sum_frequency:
            modes += [
                (-g1 * g2 * np.conj(mb), ss),
                (-g1 * g2 * mb, -ss),
                (-g2**2 * n_sum, ss),
                (-g2**2 * n_sum, -ss),
            ]
        return tuple(modes)

    k11 = _pop(nb, nb + 1)
    k44 = _pop(nb + 1, nb)
    entries = (
        ((0, 0), k11),
        ((3, 3), k44),
        ((0, 3), tuple((-c, mu) for c, mu in k44)),
        ((3, 0), tuple((-c, mu) for c, mu in k11)),
        ((1, 1), tuple(k22)),
        ((2, 2), _conj_transform_modes(k22)),
        ((2, 1), tuple(k32)),
        ((1, 2), _conj_transform_modes(k32)),
    )
    return KernelModes(kappa=p.kappa, omega_ref=p.delta_q, entries=entries)


def kernel_modes(p, include_sum_frequency: bool = True) -> KernelModes:
    """Mode table for either bath type."""
    if isinstance(p, ThermalBathParams):
        return _thermal_modes(p)
    if isinstance(p, SqueezedBathParams):
        return _squeezed_modes(p, include_sum_frequency)
    raise TypeError(f"unsupported bath parameters: {type(p).__name__}")


def kernel_model(p, include_sum_frequency: bool = True) -> KernelModel:
    """Bundle time- and frequency-domain kernels for a bath."""
    modes = kernel_modes(p, include_sum_frequency)
    structure = "thermal" if isinstance(p, ThermalBathParams) else "squeezed"
    return KernelModel(
        time_kernel=modes.time_matrix,
        freq_kernel=lambda delta: modes.freq_matrix(np.asarray(delta) + modes.omega_ref),
        structure=structure,
        modes=modes,
    )


def thermal_kernel_time(p: ThermalBathParams, t) -> np.ndarray:
    """Thermal memory kernel at time(s) t; heating (1,1), cooling (4,4)."""
    return _thermal_modes(p).time_matrix(t)


def thermal_kernel_freq(p: ThermalBathParams, delta) -> np.ndarray:
    """Thermal kernel transform at detuning(s) delta from the qubit frequency."""
    return _thermal_modes(p).freq_matrix(np.asarray(delta) + p.omega_q)


def squeezed_kernel_time(p: SqueezedBathParams, t, include_sum_frequency: bool = True) -> np.ndarray:
    """Squeezed-cavity kernel at time(s) t, including the coherence coupling."""
    return _squeezed_modes(p, include_sum_frequency).time_matrix(t)


def squeezed_kernel_freq(p: SqueezedBathParams, delta, include_sum_frequency: bool = True) -> np.ndarray:
    """Squeezed-cavity kernel transform at detuning(s) delta from delta_q."""
    return _squeezed_modes(p, include_sum_frequency).freq_matrix(np.asarray(delta) + p.delta_q)


# --------------------------------------------------------------------------
# independent construction from bath-superoperator modes
# --------------------------------------------------------------------------

_SIGMA_SUPEROPS = (
    left_multiplier(SIGMA_PLUS),
    left_multiplier(SIGMA_MINUS),
    right_multiplier(SIGMA_MINUS),
    right_multiplier(SIGMA_PLUS),
)


def _mode_matrix(nbar: float, mbar: complex, kappa: float, omega_b: float) -> np.ndarray:
    """Adjoint action of the bath Liouvillian on (a., a^dag., .a^dag, .a)."""
    c = (kappa + 1j * omega_b) * mbar
    k = kappa
    return np.array(
        [
            [1j * omega_b + (2 * nbar + 1) * k, -2 * c, 2 * c, -2 * nbar * k],
            [2 * c, -1j * omega_b - (2 * nbar + 1) * k, 2 * (nbar + 1) * k, -2 * c],
            [2 * c, -2 * nbar * k, -1j * omega_b + (2 * nbar + 1) * k, -2 * c],
            [2 * (nbar + 1) * k, -2 * c, 2 * c, 1j * omega_b - (2 * nbar + 1) * k],
        ],
        dtype=complex,
    )


def _correlator_matrix(nbar: float, mbar: complex) -> np.ndarray:
    """Steady-state bath correlators Tr_B[A A^T rho_ss], same operator order."""
    n, m = nbar, mbar
    return np.array(
        [
            [m, n + 1, n, m],
            [n, np.conj(m), np.conj(m), n + 1],
            [n, np.conj(m), np.conj(m), n + 1],
            [m, n + 1, n, m],
        ],
        dtype=complex,
    )


def _coupling_matrix(g1: float, g2: float) -> np.ndarray:
    G = np.zeros((4, 4), dtype=complex)
    G[0, 0] = G[1, 1] = g1
    G[0, 1] = G[1, 0] = g2
    G[2, 2] = G[3, 3] = -g1
    G[2, 3] = G[3, 2] = -g2
    return G


def _generic_kernel_single(
    t: float, g1: float, g2: float, nbar: float, mbar: complex, kappa: float, omega_b: float, omega_q: float
) -> np.ndarray:
    M = _mode_matrix(nbar, mbar, kappa, omega_b)
    T = _correlator_matrix(nbar, mbar)
    G = _coupling_matrix(g1, g2)
    l_s = commutator_superop(-(omega_q / 2.0) * SIGMA_Z).mat
    west = G @ T @ expm(M.T * t) @ G
    e_ls = expm(l_s * t)
    out = np.zeros((4, 4), dtype=complex)
    for i in range(4):
        for j in range(4):
            out -= west[i, j] * (_SIGMA_SUPEROPS[i] @ e_ls @ _SIGMA_SUPEROPS[j])
    return out


def generic_kernel_time(p, t) -> np.ndarray:
    """Memory kernel from the bath-superoperator mode equations.

    This route never uses the per-entry closed forms: it exponentiates the
    4x4 adjoint-action matrix of the cavity superoperators and contracts with
    the steady-state correlator matrix, so it cross-checks every coefficient
    of the mode tables.
    """
    if isinstance(p, SqueezedBathParams):
        b = bogoliubov_params(p)
        args = (b.g1, b.g2, b.nbar, b.mbar, p.kappa, b.delta_c_eff, p.delta_q)
    elif isinstance(p, ThermalBathParams):
        args = (p.g, 0.0, p.nbar, 0.0 + 0.0j, p.kappa, p.omega_c, p.omega_q)
    else:
        raise TypeError(f"unsupported bath parameters: {type(p).__name__}")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("kernel is defined for t >= 0 only")
    if t_arr.ndim == 0:
        return _generic_kernel_single(float(t_arr), *args)
    return np.stack([_generic_kernel_single(float(ti), *args) for ti in t_arr])


# --------------------------------------------------------------------------
# closed-form spectra
# --------------------------------------------------------------------------


def _k22_delta(p, delta):
    """Coherence-sector kernel entry as a function of detuning."""
    modes = kernel_modes(p)
    omega_ref = modes.omega_ref
    entry = modes.entry_map()[(1, 1)]
    delta = np.asarray(delta, dtype=float)
    acc = np.zeros(delta.shape, dtype=complex)
    for c, mu in entry:
        acc = acc + c / (modes.kappa + 1j * (delta + omega_ref - mu))
    return acc


def effective_rates(p) -> EffectiveRates:
    """Markov-limit rates: delta_eff = Im K22[0], gamma_eff = -Re K22[0]."""
    k0 = complex(_k22_delta(p, 0.0))
    return EffectiveRates(delta_eff=k0.imag, gamma_eff=-k0.real)


def markovian_spectrum(p_or_rates, delta) -> np.ndarray:
    """Unit-area Lorentzian emission line of the Markov-limit master equation."""
    rates = p_or_rates if isinstance(p_or_rates, EffectiveRates) else effective_rates(p_or_rates)
    if rates.gamma_eff <= 0:
        raise ValueError(f"gamma_eff must be positive, got {rates.gamma_eff}")
    delta = np.asarray(delta, dtype=float)
    return (rates.gamma_eff / np.pi) / ((delta - rates.delta_eff) ** 2 + rates.gamma_eff**2)


def thermal_closed_spectrum(p: ThermalBathParams, delta, freeze_kernel_at: float | None = None) -> np.ndarray:
    """Steady-state emission density of the thermal bath, unit area.

    The line is a nested Lorentzian: width -Re K22[delta] and center
    Im K22[delta] are themselves frequency dependent.  Passing
    ``freeze_kernel_at`` evaluates the kernel at that fixed detuning, which
    reproduces the Markov-limit Lorentzian exactly when frozen at 0.
    """
    delta = np.asarray(delta, dtype=float)
    k22 = _k22_delta(p, freeze_kernel_at) if freeze_kernel_at is not None else _k22_delta(p, delta)
    width = -np.real(k22)
    center = np.imag(k22)
    return (width / np.pi) / ((delta - center) ** 2 + width**2)


def squeezed_closed_spectrum(
    p: SqueezedBathParams, delta, include_cross_terms: bool = True
) -> np.ndarray:
    """Steady-state emission density of the squeezed bath, unit area.

    Includes the coherence-coupling correction built from the product of the
    (3,2) kernel transform and the transform of its conjugated time function
    (which is not |K32|^2).  With ``include_cross_terms=False`` the nested
    Lorentzian with the squeezed K22 alone is returned.
    """
    delta = np.asarray(delta, dtype=float)
    modes = kernel_modes(p)
    dq = p.delta_q
    mat = modes.freq_matrix(delta + dq)
    a = 1j * delta - mat[..., 1, 1]
    if include_cross_terms:
        b = 1j * (delta + 2 * dq) - mat[..., 2, 2]
        cross = mat[..., 2, 1] * mat[..., 1, 2]
        a = a - cross / b
    dens = 2.0 * np.real(1.0 / a) / (2.0 * np.pi)
    return dens


def squeezed_steady_ground_population(p: SqueezedBathParams) -> float:
    """Ground-state occupation of the squeezed-bath steady state, closed form."""
    b = bogoliubov_params(p)
    g1, g2, nb = b.g1, b.g2, b.nbar
    k, dd, ss = p.kappa, b.delta_diff, b.sigma_sum
    mr, mi = b.mbar.real, b.mbar.imag
    cross = mr * k * (2 * k**2 + dd**2 + ss**2) + (ss - dd) * mi * (k**2 - ss * dd)
    num = k * ((nb + 1) * g1**2 * (k**2 + ss**2) + nb * g2**2 * (k**2 + dd**2)) + g1 * g2 * cross
    den = (2 * nb + 1) * k * (g1**2 * (k**2 + ss**2) + g2**2 * (k**2 + dd**2)) + 2 * g1 * g2 * cross
    return float(num / den)


# --------------------------------------------------------------------------
# grids and peak location
# --------------------------------------------------------------------------


def default_frequency_grid(p, n_base: int = 2**14) -> np.ndarray:
    """Symmetric detuning grid, densified around the emission features.

    Covers +/- (|detuning| + sum-frequency span + 40 kappa) with at least
    ``n_base`` uniform points, plus a fine window around the central line
    (scale gamma_eff) with logarithmic shoulders out to the grid edge, and
    fine windows around each kernel resonance (scale kappa).  The shoulders
    keep the trapezoid rule accurate on the 1/x^2 Lorentzian wings even when
    gamma_eff is orders of magnitude below the base spacing.
    """
    rates = effective_rates(p)
    if isinstance(p, ThermalBathParams):
        span = abs(p.delta) + 40 * p.kappa
        features = [-p.delta]
    else:
        b = bogoliubov_params(p)
        span = abs(b.delta_diff) + abs(b.sigma_sum) + 40 * p.kappa
        features = [-b.delta_diff, -b.sigma_sum]
    base = np.linspace(-span, span, n_base)
    core_halfwidth = 30 * rates.gamma_eff
    fine = [rates.delta_eff + np.linspace(-core_halfwidth, core_halfwidth, 2001)]
    decades = np.log10(2.0 * span / core_halfwidth)
    if decades > 0:
        shoulder = np.geomspace(core_halfwidth, 2.0 * span, int(96 * decades) + 2)
        fine.append(rates.delta_eff + shoulder)
        fine.append(rates.delta_eff - shoulder)
    for f in features:
        fine.append(np.linspace(f - 6 * p.kappa, f + 6 * p.kappa, 1201))
    grid = np.unique(np.concatenate([base] + fine))
    return grid[(grid >= -span) & (grid <= span)]


def locate_peak(fn: Callable, center: float, halfwidth: float, coarse_step: float) -> float:
    """Local-maximum position of fn on [center - halfwidth, center + halfwidth].

    Coarse grid scan at the given step, preferring interior local maxima (so
    a tail rising toward the window edge cannot shadow a genuine peak),
    followed by golden-section refinement between the neighboring samples.
    """
    lo, hi = center - halfwidth, center + halfwidth
    xs = np.arange(lo, hi + coarse_step, coarse_step)
    vals = np.asarray(fn(xs), dtype=float)
    interior = np.nonzero((vals[1:-1] > vals[:-2]) & (vals[1:-1] >= vals[2:]))[0] + 1
    k = int(interior[np.argmax(vals[interior])]) if interior.size else int(np.argmax(vals))
    a = xs[max(k - 1, 0)]
    b = xs[min(k + 1, len(xs) - 1)]
    if a == b:
        return float(xs[k])
    objective = lambda x: -float(np.asarray(fn(x)).ravel()[0])
    res = minimize_scalar(objective, bounds=(a, b), method="bounded",
                          options={"xatol": coarse_step * 1e-8})
    return float(res.x)
