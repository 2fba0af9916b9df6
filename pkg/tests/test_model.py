import numpy as np
import pytest

from sulphsim.model import (
    ConstraintMode,
    NuLaw,
    PhysParams,
    PsiPolynomial,
    constitutive_report,
    permeability,
    porosity,
    project_box,
    rugosity_reaction,
    rugosity_reaction_potential,
)


def params(**kw):
    return PhysParams(**kw)


class TestPorosity:
    def test_zero_calcite_gives_offset(self):
        p = params(A=0.37, B=-0.2)
        assert porosity(0.0, p) == 0.37

    def test_arithmetic(self):
        p = params(A=0.1, B=-0.05)
        assert porosity(1.0, p) == pytest.approx(0.05, abs=1e-15)

    def test_constant_when_slope_zero(self):
        p = params(A=1.0, B=0.0)
        assert porosity(0.7, p) == 1.0

    def test_rejects_out_of_range(self):
        p = params()
        with pytest.raises(ValueError):
            porosity(-1e-6, p)
        with pytest.raises(ValueError):
            porosity(p.C0 + 1e-6, p)

    def test_tolerates_roundoff_overshoot(self):
        p = params()
        porosity(p.C0 + 0.9e-12, p)
        porosity(-0.9e-12, p)

    def test_affine_combination(self):
        # porosity(a*c1 + (1-a)*c2) == a*porosity(c1) + (1-a)*porosity(c2)
        rng = np.random.default_rng(7)
        p = params(A=0.3, B=0.4, C0=1.0)
        for _ in range(200):
            c1, c2, a = rng.uniform(0, 1, 3)
            lhs = porosity(a * c1 + (1 - a) * c2, p)
            rhs = a * porosity(c1, p) + (1 - a) * porosity(c2, p)
            assert lhs == pytest.approx(rhs, abs=1e-14)

    def test_bounded_by_report(self):
        p = params(A=0.1, B=-0.05)
        rep = constitutive_report(p)
        c = np.linspace(0, p.C0, 500)
        phi = porosity(c, p)
        assert np.all(phi >= rep.phi_min - 1e-15)
        assert np.all(phi <= rep.phi_max + 1e-15)


class TestConstitutiveReport:
    def test_extremes(self):
        rep = constitutive_report(params(A=0.1, B=-0.05, C0=1.0))
        assert rep.phi_min == pytest.approx(0.05)
        assert rep.phi_max == pytest.approx(0.1)
        rep2 = constitutive_report(params(A=0.1, B=0.5, C0=1.0))
        assert rep2.phi_min == pytest.approx(0.1)
        assert rep2.phi_max == pytest.approx(0.6)

    def test_nu_endpoints_both_laws(self):
        for law in NuLaw:
            p = params(nu_law=law, nu0=0.3, nul=0.9, rl=2.0)
            rep = constitutive_report(p)
            assert permeability(0.0, p) == rep.nu_at_zero == 0.3
            assert permeability(p.rl, p) == pytest.approx(rep.nu_at_rl)


class TestPermeability:
    def test_flat_surface_minimum(self):
        for law in NuLaw:
            p = params(nu_law=law)
            assert permeability(0.0, p) == p.nu0

    def test_agree_at_rl(self):
        for law in NuLaw:
            p = params(nu_law=law, rl=1.7)
            assert permeability(p.rl, p) == pytest.approx(p.nul, rel=1e-14)

    def test_midpoint(self):
        p_lin = params(nu_law=NuLaw.LINEAR, nu0=0.1, nul=1.0, rl=1.0)
        p_par = params(nu_law=NuLaw.PARABOLIC, nu0=0.1, nul=1.0, rl=1.0)
        assert permeability(0.5, p_lin) == pytest.approx((0.1 + 1.0) / 2)
        assert permeability(0.5, p_par) == pytest.approx(0.1 + 0.9 / 4)

    def test_nondecreasing_on_range(self):
        r = np.linspace(0.0, 1.0, 1000)
        for law in NuLaw:
            p = params(nu_law=law, nu0=0.2, nul=1.4, rl=1.0)
            nu = permeability(r, p)
            assert np.all(np.diff(nu) >= 0)

    def test_extrapolates_beyond_rl(self):
        p = params(nu_law=NuLaw.PARABOLIC, nu0=0.0, nul=1.0, rl=1.0)
        assert permeability(2.0, p) == pytest.approx(4.0)


class TestRugosityReaction:
    def test_vanishes_without_reactants(self):
        p = params(A=1.0, B=0.0, g=30.0)
        assert rugosity_reaction(0.7, 0.0, 1.0, p) == 0.0
        assert rugosity_reaction(0.7, 1.0, 0.0, p) == 0.0

    def test_flat_surface_value(self):
        p = params(A=1.0, B=0.0, g=30.0)
        assert rugosity_reaction(0.0, 1.0, 1.0, p) == pytest.approx(-30.0)

    def test_bracket_grows_with_rugosity(self):
        p = params(A=1.0, B=0.0, g=30.0)
        assert rugosity_reaction(1.0, 1.0, 1.0, p) == pytest.approx(-45.0)

    def test_nonpositive_and_monotone_in_r(self):
        rng = np.random.default_rng(11)
        p = params(A=0.1, B=-0.05, g=30.0)
        for _ in range(100):
            c, s = rng.uniform(0, 1, 2)
            r = np.sort(rng.uniform(0, 5, 20))
            g = rugosity_reaction(r, c, s, p)
            assert np.all(g <= 0)
            assert np.all(np.diff(np.abs(g)) >= -1e-15)


class TestReactionPotential:
    def test_normalized_at_zero(self):
        p = params()
        assert rugosity_reaction_potential(0.0, 0.5, 0.5, p) == 0.0

    def test_closed_form_value(self):
        # -30*(2 - ln 2), checked against extended-precision evaluation
        p = params(A=1.0, B=0.0, g=30.0)
        got = rugosity_reaction_potential(1.0, 1.0, 1.0, p)
        assert got == pytest.approx(-39.20558458320164, abs=1e-12)

    def test_matches_quadrature_of_reaction(self):
        # potential(1) - potential(0) == integral of the reaction over [0,1]
        p = params(A=0.1, B=-0.05, g=30.0)
        r = np.linspace(0.0, 1.0, 200001)
        integral = np.trapezoid(rugosity_reaction(r, 0.8, 0.6, p), r)
        assert rugosity_reaction_potential(1.0, 0.8, 0.6, p) == pytest.approx(
            integral, rel=1e-9
        )

    def test_central_difference_recovers_reaction(self):
        rng = np.random.default_rng(3)
        p = params(A=0.1, B=-0.05, g=30.0)
        h = 1e-4
        for _ in range(50):
            r = rng.uniform(0.05, 4.0)
            c, s = rng.uniform(0.05, 1.0, 2)
            d = (
                rugosity_reaction_potential(r + h, c, s, p)
                - rugosity_reaction_potential(r - h, c, s, p)
            ) / (2 * h)
            assert d == pytest.approx(rugosity_reaction(r, c, s, p), abs=1e-6)


class TestProjectBox:
    def test_interior_point_passes_through(self):
        p = params(R0=1.0, constraint_mode=ConstraintMode.BOX)
        r, xi = project_box(0.3, dt=0.1, p=p)
        assert r == 0.3 and xi == 0.0

    def test_lower_clamp(self):
        p = params(R0=1.0)
        r, xi = project_box(-0.5, dt=0.1, p=p)
        assert r == 0.0 and xi == pytest.approx(-5.0)

    def test_upper_clamp(self):
        p = params(R0=1.0)
        r, xi = project_box(1.2, dt=0.1, p=p)
        assert r == 1.0 and xi == pytest.approx(2.0)

    def test_feasible_iff_multiplier_zero(self):
        rng = np.random.default_rng(5)
        p = params(R0=2.0)
        trial = rng.uniform(-1.0, 3.0, 500)
        r, xi = project_box(trial, dt=0.01, p=p)
        assert np.all((r >= 0.0) & (r <= p.R0))
        inside = (trial >= 0.0) & (trial <= p.R0)
        assert np.all((xi == 0.0) == inside)


class TestPhysParamsValidation:
    def test_default_config_valid(self):
        assert params().validate() == []

    def test_a1_violation_named(self):
        bad = params(A=0.1, B=-0.2, C0=1.0)  # A + B*C0 = -0.1
        msgs = bad.validate()
        assert any("(A1)" in m for m in msgs)

    def test_a9_violation_named_only_when_enforced(self):
        bad = params(B=2.0, S0=1.0)
        assert any("(A9)" in m for m in bad.validate(enforce_global_bound=True))
        assert not any("B <= 1/S0" in m for m in bad.validate(enforce_global_bound=False))

    def test_ceiling_guarantee_detection(self):
        assert params().ceiling_guaranteed()
        assert not params(B=2.0).ceiling_guaranteed()
        assert not params(sbar=1.5, S0=1.0).ceiling_guaranteed()


class TestPsiPolynomial:
    def test_zero_default(self):
        from sulphsim.model import PSI_ZERO

        assert PSI_ZERO.value(1.3) == 0.0
        assert PSI_ZERO.deriv(1.3) == 0.0

    def test_cubic_derivative(self):
        psi = PsiPolynomial((1.0, -2.0, 0.5, 0.25))
        r = 1.7
        h = 1e-6
        num = (psi.value(r + h) - psi.value(r - h)) / (2 * h)
        assert psi.deriv(r) == pytest.approx(num, abs=1e-8)
