import math

import numpy as np
from scipy.integrate import trapezoid
import pytest
from hypothesis import given, strategies as st

from zwitterlab import observables as obs
from zwitterlab.evolution import PropagatorConfig, propagate
from zwitterlab.grid import PhaseGrid
from zwitterlab.potentials import QuarticPotential, harmonic
from zwitterlab.spectra import harmonic_eigenstate
from zwitterlab.state import (ClassicalWaveFunction, QuantumPureState, StateError, density,
                              density_of_states, from_density, from_quantum_pure, gaussian_packet,
                              microcanonical_state, reflect_momentum, shell_mass_quadrature,
                              static_state_from_profile, two_delta_state)
from zwitterlab.transforms import reduced_density_matrix, to_position_basis


def _ground_closed_form(grid):
    x, p = grid.mesh()
    return 2 * np.exp(-x ** 2) * np.exp(-p ** 2)


def _hermite1(x):
    return math.sqrt(2) * np.pi ** -0.25 * x * np.exp(-x ** 2 / 2)


def _trapezoid_transform(fn, z, p, half=20.0, n=8001):
    r = np.linspace(-half, half, n)
    vals = np.exp(-1j * p * r) * fn(z + r / 2) * np.conj(fn(z - r / 2))
    return float(np.real(trapezoid(vals, r)))


# ---------------------------------------------------------------------------
# pure states

def test_ground_state_transform(grid64, ground64):
    assert np.max(np.abs(ground64.values - _ground_closed_form(grid64))) < 1e-8


def test_transform_is_normalized(grid64):
    for n in range(4):
        psi = from_quantum_pure(harmonic_eigenstate(grid64, n))
        assert psi.norm == pytest.approx(1.0, abs=1e-10)


def test_first_excited_state_against_quadrature(grid64):
    psi = from_quantum_pure(harmonic_eigenstate(grid64, 1))
    for i, j in [(32, 32), (28, 35), (36, 30), (25, 40), (40, 26)]:
        z, p = grid64.x[i], grid64.p[j]
        assert psi.values[i, j] == pytest.approx(_trapezoid_transform(_hermite1, z, p), abs=1e-6)


def test_transform_records_imaginary_residue(ground64):
    assert ground64.diagnostics["imag_residue"] < 1e-10


def test_transform_refuses_boundary_mass(grid64):
    edge = gaussian_packet(grid64, x0=7.0, sigma=0.5)
    with pytest.raises(StateError):
        from_quantum_pure(edge)


def test_transform_refuses_unnormalized(grid64):
    v = harmonic_eigenstate(grid64, 0).values * 1.1
    with pytest.raises(StateError):
        from_quantum_pure(QuantumPureState(grid64, v))


def test_quantum_state_validation(grid64):
    with pytest.raises(StateError):
        QuantumPureState(grid64, np.ones(10))
    with pytest.raises(StateError):
        QuantumPureState(grid64, np.full(64, np.nan))


def test_classical_state_validation(grid64):
    with pytest.raises(StateError):
        ClassicalWaveFunction(grid64, np.zeros((64, 64), dtype=complex))
    with pytest.raises(StateError):
        ClassicalWaveFunction(grid64, np.zeros((64, 32)))
    with pytest.raises(StateError):
        ClassicalWaveFunction(grid64, np.full((64, 64), np.inf))


# ---------------------------------------------------------------------------
# densities

def test_from_density_of_ground_state(grid64, ground64):
    w = 4 * np.exp(-2 * grid64.mesh()[0] ** 2) * np.exp(-2 * grid64.mesh()[1] ** 2)
    w = w / (w.sum() * grid64.measure)
    psi = from_density(grid64, w)
    assert np.max(np.abs(psi.values - ground64.values)) < 1e-8


def test_from_density_single_cell(grid64):
    w = np.zeros(grid64.shape)
    w[20, 30] = 1.0 / grid64.measure
    psi = from_density(grid64, w)
    assert psi.values[20, 30] == pytest.approx(math.sqrt(1 / grid64.measure))
    assert np.count_nonzero(psi.values) == 1


def test_from_density_round_trip_with_sign(grid64):
    psi = from_quantum_pure(harmonic_eigenstate(grid64, 1))
    back = from_density(grid64, density(psi), sign=np.where(psi.values < 0, -1.0, 1.0))
    assert np.array_equal(back.values, psi.values)


def test_from_density_flags_interior_zeros(grid64):
    psi = from_quantum_pure(harmonic_eigenstate(grid64, 1))
    assert from_density(grid64, density(psi)).diagnostics["interior_zeros"]
    ground = from_quantum_pure(harmonic_eigenstate(grid64, 0))
    assert not from_density(grid64, density(ground)).diagnostics["interior_zeros"]


def test_from_density_errors(grid64, ground64):
    w = density(ground64)
    bad = w.copy()
    bad[3, 3] = -1.0
    with pytest.raises(StateError):
        from_density(grid64, bad)
    with pytest.raises(StateError):
        from_density(grid64, 2 * w)


def test_density_of_ground_state(grid64, ground64):
    x, p = grid64.mesh()
    assert np.max(np.abs(density(ground64) - 4 * np.exp(-2 * x ** 2) * np.exp(-2 * p ** 2))) < 1e-8
    assert np.sum(density(ground64)) * grid64.measure == pytest.approx(1.0, abs=1e-10)


def test_density_sign_invariance(ground64):
    flipped = ground64.with_values(-ground64.values)
    assert np.array_equal(density(flipped), density(ground64))


@given(st.integers(0, 2 ** 32 - 1))
def test_density_from_density_identity(seed):
    g = PhaseGrid(16, 16, 4.0, 4.0)
    w = np.random.default_rng(seed).random(g.shape)
    w = w / (w.sum() * g.measure)
    assert np.max(np.abs(density(from_density(g, w)) - w)) < 1e-12 * np.max(w)


# ---------------------------------------------------------------------------
# static classical states

SHELL_GRID = PhaseGrid(256, 256, 8.0, 8.0)


def _moments(psi, pot):
    kin = obs.expectation(0.5 * (obs.Pcl * obs.Pcl), psi)
    potl = obs.expectation(obs.vfun(pot, "cl"), psi)
    return kin, potl


def test_microcanonical_virial():
    pot = harmonic()
    psi = microcanonical_state(SHELL_GRID, 1.0, 0.05, pot)
    kin, potl = _moments(psi, pot)
    assert kin == pytest.approx(0.5, abs=1e-3)
    assert potl == pytest.approx(0.5, abs=1e-3)


def test_microcanonical_dispersion_vanishes():
    pot = harmonic()
    hcl = obs.energy_observable("H_cl", pot)
    results = [obs.energy_moments(microcanonical_state(SHELL_GRID, 1.0, w, pot), hcl) for w in (0.2, 0.1, 0.05)]
    means = [m for m, _ in results]
    variances = [v for _, v in results]
    assert abs(means[-1] - 1.0) < 1e-3
    assert variances[0] > variances[1] > variances[2]
    assert variances[2] == pytest.approx(0.05 ** 2, rel=0.05)


def test_microcanonical_mass_matches_quadrature():
    pot = QuarticPotential(c=1.0, e=0.5)
    psi = microcanonical_state(SHELL_GRID, 1.0, 0.1, pot)
    assert psi.diagnostics["raw_mass"] == pytest.approx(shell_mass_quadrature(1.0, 0.1, pot), abs=1e-8)


def test_microcanonical_errors():
    with pytest.raises(StateError):
        microcanonical_state(SHELL_GRID, -0.5, 0.05, harmonic())
    with pytest.raises(StateError):
        microcanonical_state(SHELL_GRID, 1.0, 0.001, harmonic())
    with pytest.raises(StateError):
        microcanonical_state(SHELL_GRID, 1.0, 0.0, harmonic())


def test_two_delta_split():
    pot = harmonic()
    psi = two_delta_state(SHELL_GRID, 1.0, 0.1)
    kin, potl = _moments(psi, pot)
    assert psi.norm == pytest.approx(1.0, abs=1e-12)
    assert kin == pytest.approx(2 / 3, abs=1e-2)
    assert potl == pytest.approx(1 / 3, abs=1e-2)


def test_two_delta_errors():
    with pytest.raises(StateError):
        two_delta_state(SHELL_GRID, 1.0, 0.001)
    with pytest.raises(StateError):
        two_delta_state(SHELL_GRID, -1.0, 0.1)


@pytest.mark.parametrize("c", [1.0, 4.0])
def test_density_of_states_harmonic(c):
    for e in (0.3, 1.0, 2.5):
        assert density_of_states(harmonic(c), e) == pytest.approx(1 / math.sqrt(c), abs=1e-6)


def test_profile_delta_agrees_with_microcanonical():
    pot = harmonic()
    eps, width = 1.0, 0.1
    prof = lambda e: math.exp(-((e - eps) ** 2) / (4 * width ** 2))  # noqa: E731
    a = static_state_from_profile(SHELL_GRID, prof, pot)
    b = microcanonical_state(SHELL_GRID, eps, width, pot)
    assert np.max(np.abs(a.values - b.values)) < 1e-6 * np.max(b.values)
    assert a.norm == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("pot", [harmonic(), QuarticPotential(c=1.0, d=0.3, e=0.5)])
def test_profile_state_is_static(pot):
    g = PhaseGrid(128, 128, 10.0, 10.0)
    psi = static_state_from_profile(g, lambda e: math.exp(-2.0 * e), pot)
    hl = obs.hamiltonian_expr("L", pot)
    resid = obs.apply(hl, psi)
    assert math.sqrt(np.sum(np.abs(resid) ** 2) * g.measure) < 1e-6


def test_profile_support_outside_range():
    g = PhaseGrid(64, 64, 4.0, 4.0)
    with pytest.raises(StateError):
        static_state_from_profile(g, lambda e: 1.0, harmonic())


# ---------------------------------------------------------------------------
# invariants

def test_pure_state_stays_pure():
    g = PhaseGrid(64, 64, 16.0, 16.0)
    pot = QuarticPotential(c=1.0, e=0.5)
    psi = from_quantum_pure(gaussian_packet(g, x0=1.0, p0=0.5, sigma=0.8))
    out = propagate(psi, PropagatorConfig("W", dt=0.01, steps=100, potential=pot, monitor_energies=False))
    ev = reduced_density_matrix(out.state).eigenvalues()
    assert ev[-1] == pytest.approx(1.0, abs=1e-6)


@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_momentum_reflection_is_conjugation(x0, p0):
    g = PhaseGrid(64, 64, 16.0, 16.0)
    q = gaussian_packet(g, x0=x0, p0=p0, sigma=1 / math.sqrt(2))
    conj = QuantumPureState(g, np.conj(q.values))
    a = reflect_momentum(from_quantum_pure(q))
    b = from_quantum_pure(conj)
    assert np.max(np.abs(a.values - b.values)) < 1e-8


def test_reflection_of_pure_state_in_position_basis():
    g = PhaseGrid(64, 64, 16.0, 16.0)
    q = gaussian_packet(g, x0=0.5, p0=1.0, sigma=1 / math.sqrt(2))
    pbs = to_position_basis(reflect_momentum(from_quantum_pure(q)))
    v = np.conj(q.values)
    assert np.max(np.abs(pbs.values - np.outer(v, v.conj()))) < 1e-8
