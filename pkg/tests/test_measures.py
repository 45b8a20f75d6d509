import numpy as np
import pytest

from fdqme.baths import (
    ThermalBathParams,
    default_frequency_grid,
    effective_rates,
    markovian_spectrum,
    thermal_closed_spectrum,
)
from fdqme.fdme import Spectrum, make_spectrum
from fdqme.liouville import qubit_state
from fdqme.measures import (
    MeasureResult,
    blp_measure,
    fwhm,
    kl_divergence,
    spectral_gap,
    spectral_measure,
    trace_distance,
)
from fdqme.redfield import bm_evolve, br_evolve

THERMAL = ThermalBathParams(g=1.0, omega_q=2.0e5, omega_c=2.0e5 - 50.0, kappa=10.0, nbar=0.1)


def lorentzian_spectrum(grid, center, width):
    return make_spectrum(grid, (width / np.pi) / ((grid - center) ** 2 + width**2))


# --------------------------------------------------------------------------
# relative entropy
# --------------------------------------------------------------------------


def test_kl_zero_for_identical():
    grid = np.linspace(-50, 50, 20001)
    s = lorentzian_spectrum(grid, 0.0, 1.0)
    assert kl_divergence(s, s) == 0.0


def test_kl_offset_lorentzians_matches_dense_quadrature():
    # oracle: same integrand on a 16x denser grid
    gamma = 1.0
    grid = np.linspace(-600, 600, 60001)
    fine = np.linspace(-600, 600, 960001)
    s = lorentzian_spectrum(grid, gamma, gamma)
    s_ref = lorentzian_spectrum(grid, 0.0, gamma)
    dense_p = (gamma / np.pi) / ((fine - gamma) ** 2 + gamma**2)
    dense_q = (gamma / np.pi) / (fine**2 + gamma**2)
    dense_p /= np.trapezoid(dense_p, fine)
    dense_q /= np.trapezoid(dense_q, fine)
    expected = np.trapezoid(dense_p * np.log2(dense_p / dense_q), fine)
    assert kl_divergence(s, s_ref) == pytest.approx(expected, abs=1e-6)


def test_kl_is_asymmetric():
    grid = default_frequency_grid(THERMAL)
    s = make_spectrum(grid, thermal_closed_spectrum(THERMAL, grid))
    s_m = make_spectrum(grid, markovian_spectrum(THERMAL, grid))
    assert kl_divergence(s, s_m) != pytest.approx(kl_divergence(s_m, s), rel=1e-3)


def test_kl_nonnegative_on_perturbed_pair():
    rng = np.random.default_rng(3)
    grid = np.linspace(-30, 30, 30001)
    base = (1.0 / np.pi) / (grid**2 + 1.0)
    bump = base * (1.0 + 0.2 * np.exp(-((grid - 2.0) ** 2)))
    s = make_spectrum(grid, bump)
    s_ref = make_spectrum(grid, base)
    assert kl_divergence(s, s_ref) > 0.0
    assert kl_divergence(s_ref, s) > 0.0


def test_kl_requires_common_grid_and_normalization():
    grid = np.linspace(-10, 10, 101)
    s = lorentzian_spectrum(grid, 0.0, 1.0)
    other = lorentzian_spectrum(np.linspace(-9, 11, 101), 0.0, 1.0)
    with pytest.raises(ValueError, match="common grid"):
        kl_divergence(s, other)
    raw = make_spectrum(grid, (1 / np.pi) / (grid**2 + 1), normalize=False)
    with pytest.raises(ValueError, match="normalized"):
        kl_divergence(raw, s)


def test_kl_rejects_vanishing_reference():
    grid = np.linspace(-10, 10, 1001)
    s = lorentzian_spectrum(grid, 0.0, 1.0)
    ref_vals = np.where(np.abs(grid) < 5, (1 / np.pi) / (grid**2 + 1), 0.0)
    s_ref = Spectrum(grid=grid, values=ref_vals / np.trapezoid(ref_vals, grid), norm=1.0, normalized=True)
    with pytest.raises(ValueError, match="vanishes"):
        kl_divergence(s, s_ref)


# --------------------------------------------------------------------------
# spectral gap and measure
# --------------------------------------------------------------------------


def test_spectral_gap_resonant_thermal():
    p = ThermalBathParams(g=1.0, omega_q=100.0, omega_c=100.0, kappa=5.0, nbar=0.1)
    gap = spectral_gap(p)
    assert gap == pytest.approx((2 * p.nbar + 1) * p.g**2 / p.kappa, rel=1e-9)


def test_spectral_gap_is_smallest_decay_eigenvalue():
    # 4x4 eigendecomposition oracle of the Markov-limit generator
    from fdqme.redfield import bm_induced_generator, free_liouvillian

    gen = free_liouvillian(THERMAL) + bm_induced_generator(THERMAL)
    decay = np.abs(np.real(np.linalg.eigvals(gen)))
    decay = decay[decay > 1e-9 * decay.max()]
    assert spectral_gap(THERMAL) == pytest.approx(decay.min(), rel=1e-10)


def test_spectral_gap_fwhm_variant():
    assert spectral_gap(THERMAL, method="fwhm") == pytest.approx(
        2 * effective_rates(THERMAL).gamma_eff, rel=1e-12
    )


def test_fwhm_of_lorentzian():
    grid = np.linspace(-50, 50, 200001)
    s = lorentzian_spectrum(grid, 0.7, 2.0)
    assert fwhm(s) == pytest.approx(4.0, rel=1e-6)


def test_spectral_measure_zero_iff_identical():
    grid = default_frequency_grid(THERMAL)
    s_m = make_spectrum(grid, markovian_spectrum(THERMAL, grid))
    res = spectral_measure(s_m, s_m, spectral_gap(THERMAL))
    assert res.value == 0.0
    assert res.method == "spectral"
    s = make_spectrum(grid, thermal_closed_spectrum(THERMAL, grid))
    assert spectral_measure(s, s_m, spectral_gap(THERMAL)).value > 0.0


def test_spectral_measure_axis_rescaling_enters_only_through_gap():
    grid = default_frequency_grid(THERMAL)
    s = make_spectrum(grid, thermal_closed_spectrum(THERMAL, grid))
    s_m = make_spectrum(grid, markovian_spectrum(THERMAL, grid))
    gap = spectral_gap(THERMAL)
    base = spectral_measure(s, s_m, gap).value
    # stretch the frequency axis by 2 and renormalize: densities halve,
    # the relative entropy is invariant, the bandwidth doubles
    s2 = make_spectrum(2.0 * grid, s.values / 2.0)
    s2_m = make_spectrum(2.0 * grid, s_m.values / 2.0)
    scaled = spectral_measure(s2, s2_m, 2.0 * gap).value
    assert scaled == pytest.approx(base / 2.0, rel=1e-9)


def test_measure_result_rejects_negative():
    with pytest.raises(ValueError, match="nonnegative"):
        MeasureResult(value=-0.1, method="spectral")


def test_thermal_measure_monotonic_in_kappa_and_detuning():
    # Markov limit improves with cavity linewidth and degrades with detuning
    kappas = [20.0, 50.0, 100.0, 200.0]
    vals = []
    for kappa in kappas:
        p = ThermalBathParams(g=1.0, omega_q=2.0e5, omega_c=2.0e5 - 30.0, kappa=kappa, nbar=0.1)
        grid = default_frequency_grid(p)
        s = make_spectrum(grid, thermal_closed_spectrum(p, grid))
        s_m = make_spectrum(grid, markovian_spectrum(p, grid))
        vals.append(spectral_measure(s, s_m, spectral_gap(p)).value)
    assert all(a > b for a, b in zip(vals, vals[1:]))
    deltas = [30.0, 60.0, 120.0, 240.0]
    vals = []
    for delta in deltas:
        p = ThermalBathParams(g=1.0, omega_q=2.0e5, omega_c=2.0e5 - delta, kappa=10.0, nbar=0.1)
        grid = default_frequency_grid(p)
        s = make_spectrum(grid, thermal_closed_spectrum(p, grid))
        s_m = make_spectrum(grid, markovian_spectrum(p, grid))
        vals.append(spectral_measure(s, s_m, spectral_gap(p)).value)
    assert all(a < b for a, b in zip(vals, vals[1:]))


# --------------------------------------------------------------------------
# trace distance and backflow
# --------------------------------------------------------------------------


def test_trace_distance_reference_values():
    assert trace_distance(qubit_state("g"), qubit_state("g")) == 0.0
    assert trace_distance(qubit_state("g"), qubit_state("e")) == pytest.approx(1.0)
    rho = np.diag([0.75, 0.25]).astype(complex)
    assert trace_distance(rho, qubit_state("mixed")) == pytest.approx(0.25)


def test_trace_distance_rejects_nonhermitian_difference():
    rho = np.array([[0.5, 0.3], [0.0, 0.5]], dtype=complex)
    with pytest.raises(ValueError, match="Hermitian"):
        trace_distance(rho, qubit_state("mixed"))


def test_blp_zero_for_markov_semigroup():
    p = ThermalBathParams(g=1.0, omega_q=150.0, omega_c=130.0, kappa=8.0, nbar=0.1)
    ts = np.linspace(0.0, 5.0, 2001)
    t1 = bm_evolve(p, qubit_state("g").reshape(-1), ts)
    t2 = bm_evolve(p, qubit_state("e").reshape(-1), ts)
    assert blp_measure(t1, t2).value < 1e-8


def test_blp_positive_for_oscillatory_rates():
    kappa = 20.0
    p = ThermalBathParams(g=1.0, omega_q=2.0e5, omega_c=2.0e5 - 8.5 * kappa, kappa=kappa, nbar=0.1)
    ts = np.linspace(0.0, 0.6, 3001)
    t1 = br_evolve(p, qubit_state("g").reshape(-1), ts)
    t2 = br_evolve(p, qubit_state("e").reshape(-1), ts)
    assert blp_measure(t1, t2).value > 1e-5


def test_blp_grid_refinement_converged():
    kappa = 20.0
    p = ThermalBathParams(g=1.0, omega_q=2.0e5, omega_c=2.0e5 - 8.5 * kappa, kappa=kappa, nbar=0.1)
    vals = []
    for n in (3001, 6001):
        ts = np.linspace(0.0, 0.6, n)
        t1 = br_evolve(p, qubit_state("g").reshape(-1), ts)
        t2 = br_evolve(p, qubit_state("e").reshape(-1), ts)
        vals.append(blp_measure(t1, t2).value)
    assert abs(vals[1] - vals[0]) / vals[1] < 0.01


def test_blp_requires_common_grid():
    p = ThermalBathParams(g=1.0, omega_q=150.0, omega_c=130.0, kappa=8.0, nbar=0.1)
    t1 = bm_evolve(p, qubit_state("g").reshape(-1), np.linspace(0, 1, 11))
    t2 = bm_evolve(p, qubit_state("e").reshape(-1), np.linspace(0, 2, 11))
    with pytest.raises(ValueError, match="common time grid"):
        blp_measure(t1, t2)
