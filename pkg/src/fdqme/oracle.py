"""Exact full-system validator: joint qubit + truncated-cavity dynamics.

The engineered baths are a single lossy cavity mode, so the joint evolution
is an ordinary constant-coefficient Lindblad equation that can be solved
exactly at modest truncation.  The reduced-qubit steady state and emission
spectrum from this model are the ground truth the reduced descriptions are
benchmarked against; in particular the joint state can never lose
positivity, in contrast to the time-local reduced equations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .baths import SqueezedBathParams, ThermalBathParams
from .fdme import Spectrum, make_spectrum
from .liouville import (
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_Z,
    annihilation,
    left_multiplier,
    lindblad_dissipator,
)

__all__ = [
    "FullModel",
    "TruncationError",
    "build_full_model",
    "full_steady_state",
    "reduced_qubit_state",
    "full_steady_spectrum",
]


class TruncationError(RuntimeError):
    """Raised when the requested Fock truncation is demonstrably too small."""


@dataclass(frozen=True)
class FullModel:
    """Joint Liouvillian of the qubit and the truncated cavity."""

    n_fock: int
    qubit_frequency: float
    hamiltonian: np.ndarray
    dissipators: tuple  # (rate, operator) pairs
    liouvillian: np.ndarray

    @property
    def dim(self) -> int:
        return 2 * self.n_fock


def _joint_liouvillian(h: np.ndarray, dissipators) -> np.ndarray:
    lv = -1j * (left_multiplier(h) - np.kron(np.eye(h.shape[0], dtype=complex), h.T))
    for rate, op in dissipators:
        lv = lv + rate * lindblad_dissipator(op).mat
    return lv


def build_full_model(p, n_fock: int) -> FullModel:
    """Assemble the joint model for either bath.

    Thermal: lab frame with heating and cooling on the cavity.  Squeezed:
    frame rotating at half the pump, two-photon drive on the cavity and a
    single loss channel.
    """
    if n_fock < 4:
        raise ValueError("n_fock must be at least 4")
    a = annihilation(n_fock)
    eye_c = np.eye(n_fock, dtype=complex)
    eye_q = np.eye(2, dtype=complex)
    a_joint = np.kron(eye_q, a)
    coupling = lambda g: g * (np.kron(SIGMA_PLUS, a) + np.kron(SIGMA_MINUS, a.conj().T))
    if isinstance(p, ThermalBathParams):
        h = (
            np.kron(-(p.omega_q / 2.0) * SIGMA_Z, eye_c)
            + np.kron(eye_q, p.omega_c * (a.conj().T @ a))
            + coupling(p.g)
        )
        dissipators = (
            (p.kappa * (p.nbar + 1.0), a_joint),
            (p.kappa * p.nbar, a_joint.conj().T),
        )
        omega_ref = p.omega_q
    elif isinstance(p, SqueezedBathParams):
        h_cav = p.delta_c * (a.conj().T @ a) + 0.5 * p.r * (a @ a + a.conj().T @ a.conj().T)
        h = np.kron(-(p.delta_q / 2.0) * SIGMA_Z, eye_c) + np.kron(eye_q, h_cav) + coupling(p.g)
        dissipators = ((p.kappa, a_joint),)
        omega_ref = p.delta_q
    else:
        raise TypeError(f"unsupported bath parameters: {type(p).__name__}")
    return FullModel(
        n_fock=n_fock,
        qubit_frequency=omega_ref,
        hamiltonian=h,
        dissipators=dissipators,
        liouvillian=_joint_liouvillian(h, dissipators),
    )


def full_steady_state(m: FullModel) -> np.ndarray:
    """Joint steady state as a density matrix, with adequacy checks.

    Solves the null-space problem with a trace constraint, verifies the
    residual, positivity, and that the top two Fock levels are essentially
    unpopulated (< 1e-6), otherwise the truncation is too small.
    """
    d = m.dim
    lv = m.liouvillian.copy()
    rhs = np.zeros(d * d, dtype=complex)
    trace_row = np.eye(d, dtype=complex).reshape(-1)
    lv[0, :] = trace_row
    rhs[0] = 1.0
    chi = np.linalg.solve(lv, rhs).reshape(d, d)
    chi = 0.5 * (chi + chi.conj().T)
    chi = chi / np.trace(chi).real
    resid = np.linalg.norm(m.liouvillian @ chi.reshape(-1))
    if resid > 1e-9 * max(1.0, np.linalg.norm(m.liouvillian)):
        raise RuntimeError(f"steady-state residual {resid:.3e} too large")
    if np.linalg.eigvalsh(chi).min() < -1e-10:
        raise RuntimeError("joint steady state is not positive semidefinite")
    pops = np.real(np.diag(chi)).reshape(2, m.n_fock).sum(axis=0)
    if pops[-2:].sum() > 1e-6:
        raise TruncationError(
            f"top Fock levels hold {pops[-2:].sum():.2e} population; increase n_fock"
        )
    return chi


def reduced_qubit_state(chi: np.ndarray, n_fock: int) -> np.ndarray:
    """Partial trace over the cavity."""
    return np.einsum("ikjk->ij", chi.reshape(2, n_fock, 2, n_fock))


def full_steady_spectrum(m: FullModel, grid, chi_ss: np.ndarray | None = None) -> Spectrum:
    """Steady-state qubit emission spectrum of the joint model.

    Same resolvent contraction as the reduced theory but on the full
    Liouville space, evaluated through one eigendecomposition so the whole
    frequency grid costs a single diagonalization.  ``grid`` holds detunings
    from the qubit frequency.
    """
    grid = np.asarray(grid, dtype=float)
    if chi_ss is None:
        chi_ss = full_steady_state(m)
    sm_joint = np.kron(SIGMA_MINUS, np.eye(m.n_fock, dtype=complex))
    src = (sm_joint @ chi_ss).reshape(-1)
    dual = sm_joint.reshape(-1).conj()
    lam, vmat = np.linalg.eig(m.liouvillian)
    weights = (dual @ vmat) * np.linalg.solve(vmat, src)
    # drop the steady-state mode's numerically-zero weight to avoid 0/0 at the pole
    keep = np.abs(weights) > 1e-14 * np.abs(weights).max()
    omega = grid + m.qubit_frequency
    dens = 2.0 * np.real(
        (weights[keep] / (1j * omega[:, None] - lam[keep][None, :])).sum(axis=1)
    )
    return make_spectrum(grid, dens, normalize=True, clip_rel=1e-7)
