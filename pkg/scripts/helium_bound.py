"""Bound on gamma from a ground-state width limit, for several choices of E_0 and f_bar."""
from zwitterlab import coulomb

if __name__ == "__main__":
    for label, e0 in (("3He total binding", coulomb.HE3_BINDING_MEV * 1e6),
                      ("3He per nucleon", coulomb.HE3_PER_NUCLEON_MEV * 1e6)):
        for fb in (1.0, 1.875, 5.0):
            b = coulomb.gamma_bound_from_width(coulomb.HE3_WIDTH_LIMIT_EV, e0, fb)
            n = coulomb.minimal_planck_exponent(b, e0)
            print(f"{label:18s} f_bar={fb:5.3f}  sin^2={b.sin2:.3e}  |gamma|<{b.gamma:.2e}  n>={n:.2f}")
