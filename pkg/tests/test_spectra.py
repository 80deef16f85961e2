import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from zwitterlab import observables as obs
from zwitterlab.grid import PhaseGrid
from zwitterlab.potentials import QuarticPotential, harmonic
from zwitterlab.spectra import (EigenCache, SpectrumError, broadening_analysis, eigensolve,
                                hamiltonian_matrix, harmonic_eigenstate, loglog_slope,
                                quartic_zwitter_potential, zwitter_ground_iterate, zwitter_potential)
from zwitterlab.state import from_quantum_pure

from conftest import l2

QUARTIC = QuarticPotential(c=1.0, d=0.3, e=0.5)
G = PhaseGrid(128, 64, 16.0, 16.0)


@pytest.fixture(scope="module")
def basis():
    return eigensolve(G, QUARTIC, 20)


# ---------------------------------------------------------------------------
# harmonic eigenstates

def test_harmonic_states_are_orthonormal(grid64):
    v = np.column_stack([harmonic_eigenstate(grid64, n).values for n in range(10)])
    gram = v.conj().T @ v * grid64.dx
    assert np.max(np.abs(gram - np.eye(10))) < 1e-12


def test_harmonic_states_solve_the_grid_hamiltonian():
    g = PhaseGrid(128, 64, 20.0, 16.0)
    h = hamiltonian_matrix(g, harmonic())
    for n in range(8):
        v = harmonic_eigenstate(g, n).values
        assert np.max(np.abs(h @ v - (n + 0.5) * v)) < 1e-8


def test_harmonic_state_frequency_scaling():
    g = PhaseGrid(128, 64, 20.0, 16.0)
    v = harmonic_eigenstate(g, 1, m=2.0, omega=1.5).values
    h = hamiltonian_matrix(g, harmonic(2.0 * 1.5 ** 2), m=2.0)
    assert np.max(np.abs(h @ v - 1.5 * 1.5 * v)) < 1e-8


def test_harmonic_state_errors(grid64):
    with pytest.raises(SpectrumError):
        harmonic_eigenstate(grid64, -1)
    with pytest.raises(SpectrumError):
        harmonic_eigenstate(PhaseGrid(32, 32, 6.0, 6.0), 12)


def test_classical_images_are_orthonormal(grid64):
    # <psi_C,n, psi_C,m> = |<n|m>|^2
    psis = [from_quantum_pure(harmonic_eigenstate(grid64, n)) for n in range(4)]
    for i, a in enumerate(psis):
        for j, b in enumerate(psis):
            assert obs.inner(grid64, a.values, b.values).real == pytest.approx(float(i == j), abs=1e-10)


# ---------------------------------------------------------------------------
# eigensolver

def test_eigensolve_harmonic_levels():
    b = eigensolve(PhaseGrid(128, 64, 20.0, 16.0), harmonic(), 10)
    assert np.max(np.abs(b.energies - (np.arange(10) + 0.5))) < 1e-10
    assert b.residuals.max() < 1e-10
    assert len(b) == 10
    e, state = next(iter(b))
    assert e == pytest.approx(0.5) and state.norm == pytest.approx(1.0, abs=1e-12)


def _shooting_ground_energy():
    """Even ground state of p^2/2 + x^4 by shooting from the origin."""
    def tail(energy):
        sol = solve_ivp(lambda x, y: [y[1], 2 * (x ** 4 - energy) * y[0]], (0.0, 4.0), [1.0, 0.0],
                        rtol=1e-12, atol=1e-14)
        return sol.y[0, -1]
    return brentq(tail, 0.6, 0.7, xtol=1e-14)


def test_eigensolve_pure_quartic_against_shooting():
    oracle = _shooting_ground_energy()
    assert oracle == pytest.approx(0.667986, abs=1e-6)
    b = eigensolve(PhaseGrid(128, 64, 10.0, 8.0), QuarticPotential(c=0.0, e=24.0), 6)
    assert b.energies[0] == pytest.approx(oracle, abs=1e-6)
    assert np.min(np.diff(b.energies)) > 1.0


def test_eigensolve_errors():
    with pytest.raises(SpectrumError, match="confining"):
        eigensolve(G, QuarticPotential(c=1.0, d=0.3), 4)
    with pytest.raises(SpectrumError):
        eigensolve(G, QUARTIC, 0)
    with pytest.raises(SpectrumError, match="edge"):
        eigensolve(PhaseGrid(64, 64, 4.0, 4.0), harmonic(), 10)


def test_eigen_cache(tmp_path):
    cache = EigenCache(tmp_path)
    a = cache.get(G, QUARTIC, 5)
    files = list(tmp_path.glob("eig_*.npz"))
    assert len(files) == 1
    b = cache.get(G, QUARTIC, 5)
    assert np.array_equal(a.energies, b.energies) and np.array_equal(a.vectors, b.vectors)
    assert cache.key(G, QUARTIC, 5, 1.0) != cache.key(G, QUARTIC, 6, 1.0)


def test_eigenstates_are_static_under_hw(basis):
    hw = obs.hamiltonian_expr("W", QUARTIC)
    g = PhaseGrid(64, 64, 16.0, 16.0)
    b = eigensolve(g, QUARTIC, 4)
    for n in range(4):
        psi = from_quantum_pure(b.state(n))
        assert l2(g, obs.apply(hw, psi)) < 1e-8


# ---------------------------------------------------------------------------
# zwitter potential

def _ground_density(grid):
    return np.abs(harmonic_eigenstate(grid, 0).values) ** 2


def test_zwitter_potential_vanishes_for_harmonic_and_zero_angle():
    dens = _ground_density(G)
    assert np.max(np.abs(zwitter_potential(G, dens, harmonic(), 0.7))) < 1e-12
    assert np.max(np.abs(zwitter_potential(G, dens, QUARTIC, 0.0))) == 0


def test_zwitter_potential_closed_form():
    x0 = 0.4
    dens = np.exp(-(G.x - x0) ** 2) / math.sqrt(math.pi)
    moments = {n: float(np.sum(G.x ** n * dens) * G.dx) for n in range(1, 5)}
    # Gaussian moments as a sanity check on the quadrature
    assert moments[1] == pytest.approx(x0, abs=1e-12)
    assert moments[2] == pytest.approx(x0 ** 2 + 0.5, abs=1e-12)
    for gamma in (0.3, 1.1):
        w = zwitter_potential(G, dens, QUARTIC, gamma)
        closed = quartic_zwitter_potential(G.x, moments, QUARTIC, gamma)
        assert np.max(np.abs(w - closed)) < 1e-8 * np.max(np.abs(closed))


def test_zwitter_potential_accepts_density_matrix():
    from zwitterlab.transforms import density_matrix_from_pure
    rho = density_matrix_from_pure(harmonic_eigenstate(G, 1))
    a = zwitter_potential(G, rho, QUARTIC, 0.5)
    b = zwitter_potential(G, np.abs(harmonic_eigenstate(G, 1).values) ** 2, QUARTIC, 0.5)
    assert np.max(np.abs(a - b)) < 1e-14


def test_quartic_coefficient_is_softened():
    # the x^4 term of V + W carries e (1 - s/2) with s = sin^2 gamma
    pot = QuarticPotential(c=0.0, e=24.0)
    moments = {1: 0.0, 2: 0.3, 3: 0.0, 4: 0.2}
    x = np.linspace(-2, 2, 41)
    for gamma in (0.2, 0.8):
        s = math.sin(gamma) ** 2
        total = pot(x) + quartic_zwitter_potential(x, moments, pot, gamma)
        lead = np.polyfit(x, total, 4)[0]
        assert lead == pytest.approx(1 - s / 2, abs=1e-10)


# ---------------------------------------------------------------------------
# self-consistent ground state

def test_zero_angle_iteration_is_the_ground_state(basis):
    z = zwitter_ground_iterate(G, QUARTIC, 0.0)
    assert z.energy == pytest.approx(basis.energies[0], abs=1e-12)
    assert np.max(np.abs(z.psi.values - basis.vectors[:, 0])) < 1e-10
    assert np.max(np.abs(z.zwitter_potential)) == 0


def test_iteration_converges(basis):
    z = zwitter_ground_iterate(G, QUARTIC, 0.4)
    assert z.residuals[-1] < 1e-12
    assert z.iterations < 50
    assert z.psi.norm == pytest.approx(1.0, abs=1e-12)


def test_first_order_stops_after_one_step():
    z = zwitter_ground_iterate(G, QUARTIC, 0.4, first_order=True)
    assert z.iterations == 1 and len(z.residuals) == 1


def test_iteration_failure_is_reported():
    with pytest.raises(SpectrumError):
        zwitter_ground_iterate(G, QUARTIC, 0.4, max_iter=1, tol=0.0)


@pytest.mark.parametrize("gamma", [0.1, 0.3, 0.6])
def test_energy_shift_is_second_order(basis, gamma):
    z = zwitter_ground_iterate(G, QUARTIC, gamma)
    br = broadening_analysis(z, basis, QUARTIC)
    e0 = basis.energies[0]
    assert 0 < br.shift / e0 < 10 * math.sin(gamma) ** 4


# ---------------------------------------------------------------------------
# broadening

def test_zero_angle_has_no_broadening(basis):
    br = broadening_analysis(zwitter_ground_iterate(G, QUARTIC, 0.0), basis, QUARTIC)
    assert br.coefficients[0] == pytest.approx(1.0, abs=1e-12)
    assert abs(br.shift) < 1e-12 and br.width < 1e-6


def test_broadening_scaling(basis):
    gammas = [0.05, 0.1, 0.2]
    s = [math.sin(g) ** 2 for g in gammas]
    res = [broadening_analysis(zwitter_ground_iterate(G, QUARTIC, g), basis, QUARTIC) for g in gammas]
    widths = [r.width for r in res]
    assert loglog_slope(s, widths) == pytest.approx(1.0, abs=0.05)
    assert loglog_slope(s, [r.shift for r in res]) == pytest.approx(2.0, abs=0.05)
    assert widths[0] < widths[1] < widths[2]


def test_broadening_mean_matches_direct_expectation(basis):
    br = broadening_analysis(zwitter_ground_iterate(G, QUARTIC, 0.5), basis, QUARTIC)
    assert br.coverage == pytest.approx(1.0, abs=1e-10)
    assert br.mean == pytest.approx(br.mean_direct, abs=1e-10)
    assert br.coefficients.sum() == pytest.approx(br.coverage)


def test_broadening_needs_a_complete_basis(basis):
    z = zwitter_ground_iterate(G, QUARTIC, 0.9)
    with pytest.raises(SpectrumError):
        broadening_analysis(z, basis, depth=1)
    assert np.isnan(broadening_analysis(z, basis).mean_direct)
