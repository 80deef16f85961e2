import math

import numpy as np
import pytest

from zwitterlab import observables as obs
from zwitterlab.grid import PhaseGrid
from zwitterlab.opalgebra import (NON_PROOF_NOTE, EnergyAnsatz, intermediate_identities,
                                  no_conserved_energy_scan, random_test_states,
                                  verify_ansatz_commutator, verify_ezgamma_commutator,
                                  verify_hq_commutator)
from zwitterlab.potentials import QuarticPotential, harmonic

GAMMA = 0.6


def _same_action(a, b, states):
    for psi in states:
        fa, fb = obs.apply(a, psi), obs.apply(b, psi)
        assert np.max(np.abs(fa - fb)) < 1e-10 * (1 + np.max(np.abs(fb)))


# ---------------------------------------------------------------------------
# ansatz presets

def test_presets_match_named_energies(smooth_states, quartic):
    states = smooth_states[:2]
    _same_action(EnergyAnsatz.quantum().expr(quartic), obs.energy_observable("H_Q", quartic).expr, states)
    _same_action(EnergyAnsatz.classical().expr(quartic), obs.energy_observable("H_cl", quartic).expr, states)
    _same_action(EnergyAnsatz.e_gamma(GAMMA).expr(quartic),
                 obs.energy_observable("E_gamma", quartic, GAMMA).expr, states)


def test_cubic_invariant_preset(smooth_states, quartic):
    g = GAMMA
    k = (obs.energy_observable("H_Q", quartic).expr + obs.energy_observable("H_Qt", quartic).expr
         + 2 * math.tan(g) ** 2 * obs.energy_observable("H_cl", quartic).expr)
    _same_action(EnergyAnsatz.cubic_invariant(g).expr(quartic), k, smooth_states[:2])
    with pytest.raises(ValueError):
        EnergyAnsatz.cubic_invariant(math.pi / 2)


def test_vector_round_trip():
    a = EnergyAnsatz(0.1, -0.2, 0.3, 0.4, -0.5, 0.6)
    assert EnergyAnsatz.from_vector(a.vector()) == a
    assert EnergyAnsatz().expr(harmonic()).is_hermitian()


# ---------------------------------------------------------------------------
# closed-form commutators

@pytest.mark.parametrize("vec", [(0.3, -0.7, 0.2, 0.9, -0.4, 0.5), (1.0, 0.0, 0.0, 0.0, 0.0, 1.0),
                                 (0.0, 0.5, -1.0, 0.0, 0.3, 0.0)])
def test_generic_ansatz_closed_form(smooth_states, quartic, vec):
    rep = verify_ansatz_commutator(EnergyAnsatz(*vec), GAMMA, quartic, smooth_states)
    assert rep.max_residual < 1e-6
    assert rep.max_commutator > 1e-3


def test_e_gamma_harmonic_is_conserved(smooth_states):
    rep = verify_ezgamma_commutator(GAMMA, harmonic(), smooth_states)
    assert rep.max_commutator < 1e-9
    assert rep.max_residual < 1e-9


@pytest.mark.parametrize("gamma", [0.0, math.pi / 2])
def test_e_gamma_endpoints_commute(smooth_states, quartic, gamma):
    rep = verify_ezgamma_commutator(gamma, quartic, smooth_states)
    assert rep.max_commutator < 1e-9


def test_e_gamma_cubic_form(smooth_states, cubic, quartic):
    rep = verify_ezgamma_commutator(GAMMA, cubic, smooth_states)
    assert rep.max_residual < 1e-7
    assert rep.max_cubic_residual < 1e-7
    assert rep.max_commutator > 1e-3
    # the quartic term falls outside the leading cubic form
    rep = verify_ezgamma_commutator(GAMMA, quartic, smooth_states)
    assert rep.max_residual < 1e-7
    assert rep.max_cubic_residual > 1e-3


def test_e_gamma_needs_quartic(smooth_states):
    from zwitterlab.potentials import CoulombPotential
    with pytest.raises(ValueError):
        verify_ezgamma_commutator(GAMMA, CoulombPotential(), smooth_states)


def test_hq_closed_form(smooth_states, cubic, quartic):
    assert verify_hq_commutator(GAMMA, quartic, smooth_states).max_residual < 1e-7
    rep = verify_hq_commutator(GAMMA, cubic, smooth_states)
    assert rep.max_residual < 1e-7 and rep.max_cubic_residual < 1e-7
    d = rep.to_dict()
    assert d["label"] == "H_Q" and len(d["states"]) == len(smooth_states)


def test_hq_commutator_is_linear_in_d_and_sin2(smooth_states):
    base = verify_hq_commutator(GAMMA, QuarticPotential(c=1.0, d=0.3), smooth_states).max_commutator
    doubled_d = verify_hq_commutator(GAMMA, QuarticPotential(c=1.0, d=0.6), smooth_states).max_commutator
    assert doubled_d / base == pytest.approx(2.0, rel=1e-9)
    g1, g2 = math.asin(math.sqrt(0.1)), math.asin(math.sqrt(0.2))
    a = verify_hq_commutator(g1, QuarticPotential(c=1.0, d=0.3), smooth_states).max_commutator
    b = verify_hq_commutator(g2, QuarticPotential(c=1.0, d=0.3), smooth_states).max_commutator
    assert b / a == pytest.approx(2.0, rel=1e-9)


def test_intermediate_identities(smooth_states, quartic):
    ids = intermediate_identities(quartic, smooth_states)
    assert len(ids) == 15
    assert max(ids.values()) < 1e-7


def test_checks_require_unit_hbar(quartic):
    g = PhaseGrid(64, 64, 16.0, 16.0, hbar=0.5)
    states = random_test_states(g, 1, seed=1, width=(0.6, 0.9), spread=0.5)
    with pytest.raises(ValueError):
        verify_hq_commutator(GAMMA, quartic, states)


# ---------------------------------------------------------------------------
# conserved-energy search

def test_cubic_invariant_commutes(smooth_states, cubic):
    for gamma in (0.3, GAMMA, 1.2):
        rep = verify_ansatz_commutator(EnergyAnsatz.cubic_invariant(gamma), gamma, cubic, smooth_states)
        assert rep.max_commutator < 1e-9


def test_cubic_scan_finds_the_invariant(smooth_states, cubic):
    # constant V''' leaves a conserved energy inside the ansatz span
    rep = no_conserved_energy_scan(GAMMA, cubic, smooth_states)
    assert rep.eigen_floor < 1e-6
    k = EnergyAnsatz.cubic_invariant(GAMMA).vector()
    v = np.asarray(rep.eigen_vector)
    assert abs(v @ k) / (np.linalg.norm(v) * np.linalg.norm(k)) == pytest.approx(1.0, abs=1e-6)


def test_harmonic_scan_floor_is_zero(smooth_states):
    rep = no_conserved_energy_scan(GAMMA, harmonic(), smooth_states, require_anharmonic=False)
    assert rep.floor < 1e-9
    assert rep.excluded > 0


def test_quartic_floor_is_positive_and_shrinks_toward_zero_angle(smooth_states, quartic):
    reps = [no_conserved_energy_scan(g, quartic, smooth_states) for g in (0.1, 0.3, math.pi / 4)]
    for r in reps:
        assert r.floor > 1e-5
        assert r.eigen_floor > 1e-5
        assert r.floor >= r.eigen_floor
        assert len(r.argmin) == 6 and max(abs(c) for c in r.argmin) <= 1.0
        assert r.note == NON_PROOF_NOTE
    assert reps[0].floor < reps[1].floor
    assert reps[0].eigen_floor < reps[1].eigen_floor < reps[2].eigen_floor


def test_scan_report_fields(smooth_states, quartic):
    rep = no_conserved_energy_scan(GAMMA, quartic, smooth_states[:2], resolution=0.5)
    d = rep.to_dict()
    assert d["note"] == NON_PROOF_NOTE
    assert rep.points == 5 ** 6 - 1 - rep.excluded
    assert len(rep.per_state) == 2
    assert isinstance(rep.argmin_ansatz, EnergyAnsatz)


def test_scan_errors(smooth_states, quartic):
    with pytest.raises(ValueError):
        no_conserved_energy_scan(GAMMA, harmonic(), smooth_states)
    with pytest.raises(ValueError):
        no_conserved_energy_scan(0.0, quartic, smooth_states)
    with pytest.raises(ValueError):
        no_conserved_energy_scan(math.pi / 2, quartic, smooth_states)
