import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from zwitterlab.coulomb import (HE3_BINDING_MEV, SWEEP_COLUMNS, coulomb_broadening, coulomb_f_profile,
                                coulomb_sweep, coulomb_zwitter_ground, f_function, gamma_bound_from_width,
                                he3_bound, hydrogen_1s_f, hydrogen_energy, hydrogen_s,
                                iterated_f_bar, minimal_planck_exponent, radial_norm, virial_residual)
from zwitterlab.state import StateError


def _angle(u, f_bar=1.875):
    """gamma with sin^2(gamma) f_bar = u."""
    return math.asin(math.sqrt(u / f_bar))


# ---------------------------------------------------------------------------
# orbitals and f

@pytest.mark.parametrize("n", [1, 2, 3])
def test_orbitals_are_normalized(n):
    assert radial_norm(lambda r: hydrogen_s(n, r, 1.3)) == pytest.approx(1.0, abs=1e-10)


def test_orbital_errors_and_energies():
    with pytest.raises(ValueError):
        hydrogen_s(0, 1.0)
    assert hydrogen_energy(1) == -0.5
    assert hydrogen_energy(2, strength=-2.0, mu=0.5) == pytest.approx(-0.25)


def test_f_limits():
    f = f_function(lambda r: hydrogen_s(1, r))
    assert f(0.0) == pytest.approx(1.0, abs=1e-10)
    assert f(40.0) == pytest.approx(5.0, abs=1e-10)


@given(st.floats(0.0, 12.0), st.sampled_from([0.5, 1.0, 2.0]))
def test_f_matches_closed_form(r, a):
    f = f_function(lambda y: hydrogen_s(1, y, a))
    assert f(r) == pytest.approx(float(hydrogen_1s_f(r, a)), abs=1e-9)


def test_f_bar_values():
    prof = coulomb_f_profile()
    assert prof.f_bar == pytest.approx(1.875, abs=1e-10)
    assert prof.f_bar_matched == pytest.approx(1.0, abs=1e-10)
    # the two summaries of f disagree by almost half
    assert (prof.f_bar - prof.f_bar_matched) / prof.f_bar == pytest.approx(0.4667, abs=1e-4)
    assert np.allclose(prof.f, hydrogen_1s_f(prof.r), atol=1e-9)


def test_f_bar_is_scale_free():
    assert coulomb_f_profile(a=2.5, r=[0.0]).f_bar == pytest.approx(1.875, abs=1e-10)
    assert iterated_f_bar(0.4) == pytest.approx(1.875, abs=1e-10)


def test_profile_rejects_unnormalized_input():
    with pytest.raises(StateError):
        coulomb_f_profile(lambda r: 1.1 * hydrogen_s(1, r), r=[0.0])
    with pytest.raises(StateError):
        coulomb_f_profile(weight=lambda r: 0.5 * hydrogen_s(1, r), r=[0.0])


# ---------------------------------------------------------------------------
# zwitter ground state

def test_shifted_radius():
    z = coulomb_zwitter_ground(_angle(0.1), 1.875)
    assert z.a_gamma == pytest.approx(1 / 0.9, rel=1e-12)
    assert z.e0 == -0.5


def test_zero_angle_overlaps():
    z = coulomb_zwitter_ground(0.0, 1.875)
    assert z.overlaps[1] == pytest.approx(1.0, abs=1e-10)
    assert all(abs(z.overlaps[n]) < 1e-10 for n in range(2, 7))


@pytest.mark.parametrize("u", [0.01, 0.1, 0.3])
def test_overlaps_match_closed_forms(u):
    z = coulomb_zwitter_ground(_angle(u), 1.875)
    assert z.overlaps[1] == pytest.approx(z.a100_closed, abs=1e-10)
    assert z.overlaps[2] == pytest.approx(z.a200_closed, abs=1e-10)
    assert sum(v * v for v in z.overlaps.values()) <= 1.0


def test_a200_linear_term():
    z = coulomb_zwitter_ground(_angle(0.01), 1.875)
    assert z.overlaps[2] == pytest.approx(z.a200_linear, rel=0.05)
    assert z.overlaps[2] < 0


def test_ground_state_errors():
    with pytest.raises(ValueError):
        coulomb_zwitter_ground(0.3, 1.0, strength=1.0)
    with pytest.raises(ValueError, match="no bound state"):
        coulomb_zwitter_ground(math.pi / 2, 1.0)


# ---------------------------------------------------------------------------
# broadening

@given(st.floats(0.0, 0.5))
def test_broadening_closed_forms(u):
    b = coulomb_broadening(coulomb_zwitter_ground(_angle(u), 1.875))
    assert b.mean == pytest.approx(b.mean_closed, abs=1e-10)
    assert b.shift == pytest.approx(b.shift_closed, abs=1e-10)
    assert b.width == pytest.approx(b.width_closed, abs=1e-6)


def test_one_percent_shift_case():
    b = coulomb_broadening(coulomb_zwitter_ground(_angle(0.01), 1.875))
    assert b.width / 0.5 == pytest.approx(0.02, rel=0.05)
    assert b.width_leading / 0.5 == pytest.approx(0.02, rel=1e-12)
    assert b.shift / 0.5 == pytest.approx(1e-4, rel=1e-6)
    assert b.ratio == pytest.approx(b.ratio_leading, rel=0.05)


def test_zero_angle_broadening():
    b = coulomb_broadening(coulomb_zwitter_ground(0.0, 1.875))
    assert b.mean == pytest.approx(-0.5, abs=1e-12)
    assert abs(b.shift) < 1e-12 and b.width < 1e-6 and b.ratio == 0.0
    assert b.basis_coverage == pytest.approx(1.0, abs=1e-10)


def test_bound_state_basis_misses_continuum():
    b = coulomb_broadening(coulomb_zwitter_ground(_angle(0.1), 1.875))
    assert b.basis_coverage < 1
    assert b.basis_difference < 0


def test_sweep_rows():
    rows = coulomb_sweep([0.0, 0.01], [1.0, 1.875])
    assert len(rows) == 4
    assert set(rows[0]) == set(SWEEP_COLUMNS)
    assert rows[0]["a_gamma"] == 1.0


# ---------------------------------------------------------------------------
# bounds

def test_virial_holds_at_every_radius():
    for a in (0.5, 1.0, 1 / 0.9, 3.0):
        assert virial_residual(a) < 1e-10


def test_helium_bound():
    b = he3_bound()
    assert 1.5e-14 < b.gamma < 6e-14
    assert b.sin2 == pytest.approx(0.6e-20 / (2 * HE3_BINDING_MEV * 1e6), rel=1e-12)
    assert he3_bound(per_nucleon=True).sin2 == pytest.approx(3 * b.sin2, rel=1e-12)


def test_gamma_bound_inversion():
    assert gamma_bound_from_width(1.0, -0.5, 1.0).sin2 == pytest.approx(1.0)
    assert gamma_bound_from_width(1.0, -0.5, 1.0).gamma == pytest.approx(math.pi / 2)
    half = gamma_bound_from_width(0.5, -0.5, 1.0)
    assert half.sin2 == pytest.approx(0.5)
    with pytest.raises(ValueError):
        gamma_bound_from_width(1.1, -0.5, 1.0)
    with pytest.raises(ValueError):
        gamma_bound_from_width(-1.0, -0.5, 1.0)


def test_planck_exponent():
    assert minimal_planck_exponent(he3_bound(), HE3_BINDING_MEV * 1e6) == pytest.approx(1.29, abs=0.01)
