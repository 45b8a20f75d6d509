import numpy as np
import pytest

from fdqme.baths import (
    SqueezedBathParams,
    ThermalBathParams,
    default_frequency_grid,
    markovian_spectrum,
    squeezed_closed_spectrum,
    squeezed_steady_ground_population,
    thermal_closed_spectrum,
)
from fdqme.fdme import (
    emission_spectrum,
    free_propagator,
    inverse_transform,
    make_spectrum,
    propagate,
    purity,
    squeezed_propagator,
    steady_state,
    thermal_propagator,
)
from fdqme.liouville import SIGMA_MINUS, SIGMA_Z, commutator_superop, qubit_state, trace_dual
from fdqme.redfield import bm_evolve

RNG = np.random.default_rng(31415)

THERMAL = ThermalBathParams(g=1.0, omega_q=2.0e5, omega_c=2.0e5 - 50.0, kappa=10.0, nbar=0.1)
SQUEEZED = SqueezedBathParams(g=1.0, delta_q=200.0, delta_c=320.0, r=115.0, kappa=10.0)
FIG8 = SqueezedBathParams(g=1.0, delta_q=200.0, delta_c=120.0, r=float(np.sqrt(120.0**2 - 34.0**2)), kappa=10.0)


def random_density():
    a = RNG.normal(size=(2, 2)) + 1j * RNG.normal(size=(2, 2))
    rho = a @ a.conj().T
    return (rho / np.trace(rho)).reshape(-1)


# --------------------------------------------------------------------------
# propagator
# --------------------------------------------------------------------------


def test_propagate_scalar_resolvent():
    fp = free_propagator(np.zeros((4, 4)))
    u = propagate(fp, 2.7)
    assert np.allclose(u, np.eye(4) / (1j * 2.7), atol=1e-14)


def test_propagate_trace_identity():
    fp = thermal_propagator(THERMAL)
    dual = trace_dual(2)
    for omega in (0.3, THERMAL.omega_q + 12.3, -40.0):
        u = propagate(fp, omega)
        for _ in range(3):
            rho0 = random_density()
            val = dual @ (u @ rho0)
            assert abs(val - 1.0 / (1j * omega)) < 1e-10


def test_propagate_markov_mode_is_constant_resolvent():
    fp = thermal_propagator(THERMAL, markov=True)
    frozen = fp.kernel_freq(123.0)  # any argument returns the frozen matrix
    assert np.allclose(frozen, fp.kernel.freq_kernel(0.0))
    omega = THERMAL.omega_q + 3.7
    u = propagate(fp, omega)
    expected = np.linalg.inv(1j * omega * np.eye(4) - fp.l0 - frozen)
    assert np.allclose(u, expected, atol=1e-12)


def test_propagate_residual_guard():
    fp = thermal_propagator(THERMAL)
    u = propagate(fp, THERMAL.omega_q + 0.011)
    m = fp._system_matrix(np.asarray(THERMAL.omega_q + 0.011))
    assert np.linalg.norm(m @ u - np.eye(4)) < 1e-10


def test_propagate_reports_singularity():
    fp = free_propagator(np.zeros((4, 4)))
    with pytest.raises(ValueError, match="singular|residual"):
        propagate(fp, 0.0)


# --------------------------------------------------------------------------
# steady state
# --------------------------------------------------------------------------


def test_thermal_steady_state_occupations():
    fp = thermal_propagator(THERMAL)
    ss = steady_state(fp, qubit_state("mixed"))
    expected = np.array([11.0 / 12.0, 0, 0, 1.0 / 12.0])
    assert np.abs(ss.vec - expected).max() < 1e-9


def test_zero_temperature_steady_state_is_ground():
    p = ThermalBathParams(g=1.0, omega_q=300.0, omega_c=280.0, kappa=8.0, nbar=0.0)
    ss = steady_state(thermal_propagator(p), qubit_state("e"))
    assert np.abs(ss.vec - np.array([1, 0, 0, 0])).max() < 1e-9


def test_steady_state_unique_across_initial_states():
    fp = thermal_propagator(THERMAL)
    results = [steady_state(fp, random_density()).vec for _ in range(3)]
    assert np.abs(results[0] - results[1]).max() < 1e-8
    assert np.abs(results[0] - results[2]).max() < 1e-8


def test_squeezed_steady_state_matches_closed_form():
    fp = squeezed_propagator(SQUEEZED)
    ss = steady_state(fp, qubit_state("mixed"))
    assert abs(ss.vec[0].real - squeezed_steady_ground_population(SQUEEZED)) < 1e-9
    assert abs(ss.vec[1]) < 1e-9 and abs(ss.vec[2]) < 1e-9


def test_steady_state_rejects_invalid_input():
    fp = thermal_propagator(THERMAL)
    with pytest.raises(ValueError, match="trace"):
        steady_state(fp, np.array([1.0, 0, 0, 1.0]))


def test_steady_state_degenerate_manifold_detected():
    fp = free_propagator(commutator_superop(-(5.0 / 2) * SIGMA_Z).mat, omega_ref=5.0)
    with pytest.raises(ValueError):
        steady_state(fp, qubit_state("x+"))


# --------------------------------------------------------------------------
# emission spectrum
# --------------------------------------------------------------------------


def test_thermal_spectrum_matches_closed_form_pointwise():
    fp = thermal_propagator(THERMAL)
    ss = steady_state(fp, qubit_state("mixed"))
    grid = default_frequency_grid(THERMAL)
    spec = emission_spectrum(fp, SIGMA_MINUS, ss, grid)
    closed = make_spectrum(grid, thermal_closed_spectrum(THERMAL, grid))
    assert np.abs(spec.values - closed.values).max() < 1e-9
    # pre-normalization the two differ by 2 pi times the excited population
    raw = emission_spectrum(fp, SIGMA_MINUS, ss, grid, normalize=False)
    factor = 2.0 * np.pi * (0.1 / 1.2)
    assert np.abs(raw.values - factor * thermal_closed_spectrum(THERMAL, grid)).max() < 1e-9 * factor


def test_markov_mode_spectrum_is_lorentzian():
    fp = thermal_propagator(THERMAL, markov=True)
    ss = steady_state(fp, qubit_state("mixed"))
    grid = default_frequency_grid(THERMAL)
    spec = emission_spectrum(fp, SIGMA_MINUS, ss, grid)
    markov = make_spectrum(grid, markovian_spectrum(THERMAL, grid))
    assert np.abs(spec.values - markov.values).max() < 1e-9


def test_squeezed_spectrum_matches_closed_form():
    fp = squeezed_propagator(SQUEEZED)
    ss = steady_state(fp, qubit_state("mixed"))
    grid = default_frequency_grid(SQUEEZED)
    spec = emission_spectrum(fp, SIGMA_MINUS, ss, grid)
    closed = make_spectrum(grid, squeezed_closed_spectrum(SQUEEZED, grid))
    assert np.abs(spec.values - closed.values).max() < 1e-8


def test_resonant_thermal_spectrum_symmetric():
    p = ThermalBathParams(g=1.0, omega_q=500.0, omega_c=500.0, kappa=10.0, nbar=0.1)
    fp = thermal_propagator(p)
    ss = steady_state(fp, qubit_state("mixed"))
    grid = np.linspace(-200.0, 200.0, 8001)
    spec = emission_spectrum(fp, SIGMA_MINUS, ss, grid)
    assert np.abs(spec.values - spec.values[::-1]).max() < 1e-8


def test_emission_spectrum_rejects_bad_grid():
    fp = thermal_propagator(THERMAL)
    ss = steady_state(fp, qubit_state("mixed"))
    with pytest.raises(ValueError, match="grid"):
        emission_spectrum(fp, SIGMA_MINUS, ss, np.array([]))
    with pytest.raises(ValueError, match="grid"):
        emission_spectrum(fp, SIGMA_MINUS, ss, np.array([0.0, 0.0, 1.0]))


def test_spectrum_container_invariants():
    grid = np.linspace(-1, 1, 101)
    vals = np.exp(-(grid**2))
    s = make_spectrum(grid, vals)
    assert s.normalized and abs(s.area - 1.0) < 1e-12
    assert s.norm == pytest.approx(np.trapezoid(vals, grid))
    with pytest.raises(ValueError, match="negativity"):
        make_spectrum(grid, vals - 0.5)


# --------------------------------------------------------------------------
# inverse transform
# --------------------------------------------------------------------------


def test_inverse_transform_free_coherence():
    omega_q = 7.3
    fp = free_propagator(commutator_superop(-(omega_q / 2) * SIGMA_Z).mat, omega_ref=omega_q)
    rho0 = qubit_state("x+").reshape(-1)
    ts = np.linspace(0.0, 3.0, 61)
    states = inverse_transform(fp, rho0, ts)
    for t, st in zip(ts, states):
        expected = 0.5 * np.exp(1j * omega_q * t)
        assert abs(st.vec[1] - expected) < 1e-5
        assert abs(st.vec[0] - 0.5) < 1e-10


def test_inverse_transform_recovers_initial_state():
    fp = squeezed_propagator(FIG8)
    rho0 = qubit_state("y-").reshape(-1)
    states = inverse_transform(fp, rho0, np.array([0.0, 0.01]))
    assert np.abs(states[0].vec - rho0).max() < 1e-4


def test_inverse_transform_thermal_matches_markov_limit_at_fast_cavity():
    p = ThermalBathParams(g=1.0, omega_q=150.0, omega_c=150.0, kappa=100.0, nbar=0.1)
    fp = thermal_propagator(p)
    rho0 = qubit_state("e").reshape(-1)
    ts = np.linspace(0.0, 150.0, 151)
    states = inverse_transform(fp, rho0, ts)
    pops = np.array([s.vec[3].real for s in states])
    traj = bm_evolve(p, rho0, ts)
    assert np.abs(pops - traj.excited_population()).max() < 0.02


def test_inverse_transform_purity_stays_physical():
    fp = squeezed_propagator(FIG8)
    rho0 = qubit_state("y-").reshape(-1)
    ts = np.linspace(0.0, 0.8, 400)
    states = inverse_transform(fp, rho0, ts)
    purities = np.array([purity(s) for s in states])
    assert purities.max() <= 1.0 + 1e-4


def test_inverse_transform_validates_input():
    fp = thermal_propagator(THERMAL)
    with pytest.raises(ValueError, match="nonnegative"):
        inverse_transform(fp, qubit_state("g").reshape(-1), np.array([-1.0, 0.0]))
    with pytest.raises(ValueError, match="frozen"):
        inverse_transform(thermal_propagator(THERMAL, markov=True), qubit_state("g").reshape(-1), np.array([0.0]))


# --------------------------------------------------------------------------
# purity
# --------------------------------------------------------------------------


def test_purity_reference_values():
    assert purity(qubit_state("g").reshape(-1)) == pytest.approx(1.0)
    assert purity(qubit_state("mixed").reshape(-1)) == pytest.approx(0.5)
    thermal_ss = np.array([11.0 / 12.0, 0, 0, 1.0 / 12.0], dtype=complex)
    assert purity(thermal_ss) == pytest.approx(122.0 / 144.0, rel=1e-12)
