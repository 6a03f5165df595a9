import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fano_qed.config import parse_config, spec_from_values
from fano_qed.coupling import (
    CouplingSet,
    DirectScattering,
    MicroscopicParams,
    ScatteringModel,
    SystemSpec,
    build_two_port_background,
    from_microscopic,
    solve_mirror_coupling,
    validate_constraints,
)
from fano_qed.errors import ConfigError, DomainError, UnsupportedConfigurationError
from strategies import system_specs

S75 = math.sqrt(0.75)


class TestBackground:
    def test_full_transmission_is_identity(self):
        np.testing.assert_array_equal(build_two_port_background(1.0, 1, 0.0).c_matrix, np.eye(2))

    def test_pure_cross_coupling(self):
        np.testing.assert_allclose(build_two_port_background(0.0, 1, 0.0).c_matrix, [[0, 1j], [1j, 0]], atol=0)

    def test_half_transmission(self):
        c = build_two_port_background(0.5, 1, 0.0).c_matrix
        np.testing.assert_allclose(c, [[0.5, 0.8660254j], [0.8660254j, 0.5]], atol=5e-8)

    @given(st.floats(0, 1), st.sampled_from([1, -1]), st.floats(-math.pi, math.pi))
    def test_unitary_and_symmetric(self, t, sign, phi):
        c = build_two_port_background(t, sign, phi)
        assert c.unitarity_residual <= 1e-15
        assert c.symmetry_residual == 0.0

    @pytest.mark.parametrize("t", [-0.1, 1.0000001, math.nan])
    def test_rejects_out_of_range_t(self, t):
        with pytest.raises(DomainError):
            build_two_port_background(t)


class TestMirrorCoupling:
    def test_lorentzian_case(self):
        d = solve_mirror_coupling(SystemSpec(t_bg=0.0, sigma=0.2)).d
        assert d[0] == pytest.approx(-0.3162278 + 0.3162278j, abs=1e-7)
        assert np.vdot(d, d).real == pytest.approx(0.4, abs=1e-15)

    def test_side_coupled_case(self):
        d = solve_mirror_coupling(SystemSpec(t_bg=1.0, sigma=0.2)).d
        np.testing.assert_allclose(d, [0.4472136j, 0.4472136j], atol=1e-7)

    def test_square_identity_at_half_transmission(self):
        d = solve_mirror_coupling(SystemSpec(t_bg=0.5, sigma=0.2)).d
        assert d[0] ** 2 == pytest.approx(-0.1 - 0.1732051j, abs=1e-7)

    @given(system_specs())
    def test_square_identity(self, spec):
        d1 = solve_mirror_coupling(spec).d[0]
        r = spec.parity * spec.r
        expected = -np.exp(1j * spec.phi) * spec.sigma.real * (spec.t_bg + 1j * r)
        assert abs(d1**2 - expected) <= 1e-12

    def test_odd_parity_antisymmetric(self):
        d = solve_mirror_coupling(SystemSpec(t_bg=0.3, parity=-1)).d
        assert d[1] == -d[0]

    def test_kappa_equals_d(self):
        coup = solve_mirror_coupling(SystemSpec(t_bg=0.3))
        np.testing.assert_array_equal(coup.kappa, coup.d)

    def test_rejects_multichannel(self):
        with pytest.raises(UnsupportedConfigurationError):
            solve_mirror_coupling(SystemSpec(n_channels=3))


class TestValidateConstraints:
    def test_identity_background_passes(self):
        d = 1j * math.sqrt(0.2) * np.ones(2)
        rep = validate_constraints(DirectScattering(np.eye(2)), CouplingSet(d, d), 0.2)
        assert rep.passed

    def test_identity_background_tolerates_sign_flip(self):
        # purely imaginary d satisfies C d* = -d for C = 1 whatever the relative sign
        d = 1j * math.sqrt(0.2) * np.array([1.0, -1.0])
        rep = validate_constraints(DirectScattering(np.eye(2)), CouplingSet(d, d), 0.2)
        assert rep.residuals["cd_star"] == 0.0

    def test_parity_mismatch_detected(self):
        spec = SystemSpec(t_bg=0.0, sigma=0.2)
        d = spec.couplings().d * np.array([1.0, -1.0])
        rep = validate_constraints(spec.background(), CouplingSet(d, d), 0.2)
        assert rep.residuals["cd_star"] == pytest.approx(2 * math.sqrt(0.2), abs=1e-12)
        assert rep.residuals["cd_star"] == pytest.approx(0.894, abs=1e-3)
        assert not rep.passed

    def test_wrong_sigma_fails_flux_and_causality(self):
        spec = SystemSpec(t_bg=0.4, sigma=0.2)
        rep = validate_constraints(spec.background(), spec.couplings(), 0.3)
        assert rep.residuals["flux"] == pytest.approx(0.2)
        assert rep.residuals["causality"] == pytest.approx(0.2)
        assert not rep.passed

    def test_dimension_mismatch(self):
        with pytest.raises(DomainError):
            validate_constraints(DirectScattering(np.eye(3)), CouplingSet(np.ones(2), np.ones(2)), 0.2)

    @given(system_specs(complex_sigma=True))
    def test_assembled_specs_pass(self, spec):
        rep = validate_constraints(spec.background(), spec.couplings(), spec.sigma)
        assert rep.passed, rep.residuals

    @given(st.floats(1e-16, 1e-1))
    def test_passed_iff_all_residuals_within_tolerance(self, tol):
        spec = SystemSpec(t_bg=0.4)
        d = spec.couplings().d * (1 + 1e-6)
        rep = validate_constraints(spec.background(), CouplingSet(d, d), spec.sigma, tol)
        assert rep.passed == all(v <= tol for v in rep.residuals.values())


class TestMicroscopic:
    def test_no_direct_coupling(self):
        c, coup, sigma = from_microscopic(MicroscopicParams(np.array([0.3, 0.3]), np.zeros((2, 2))))
        np.testing.assert_array_equal(c.c_matrix, np.eye(2))
        np.testing.assert_allclose(coup.d, -0.3j * np.ones(2))
        assert sigma == pytest.approx(0.09) and sigma.imag == 0

    def test_cross_coupling_two(self):
        c, coup, sigma = from_microscopic(MicroscopicParams(np.zeros(2), np.array([[0, 2.0], [2.0, 0]])))
        np.testing.assert_allclose(c.c_matrix, [[0, -1j], [-1j, 0]], atol=1e-15)
        assert np.all(coup.d == 0) and sigma == 0

    def test_half_transmission_negative_branch(self):
        v = 2 * math.sqrt(1 / 3)
        c, _, _ = from_microscopic(MicroscopicParams(np.zeros(2), np.array([[0, v], [v, 0]])))
        assert c.c_matrix[0, 0] == pytest.approx(0.5, abs=1e-12)
        assert c.c_matrix[0, 1] == pytest.approx(-0.8660254j, abs=1e-7)

    @given(st.lists(st.floats(-2, 2), min_size=2, max_size=4).flatmap(
        lambda xi: st.tuples(st.just(xi), st.lists(st.floats(-10, 10), min_size=len(xi) * (len(xi) - 1) // 2,
                                                    max_size=len(xi) * (len(xi) - 1) // 2))))
    def test_random_microscopic_passes(self, args):
        xi, upper = args
        n = len(xi)
        v = np.zeros((n, n))
        v[np.triu_indices(n, 1)] = upper
        v = v + v.T
        if np.linalg.norm(v, 2) > 10:
            v *= 10 / np.linalg.norm(v, 2)
        c, coup, sigma = from_microscopic(MicroscopicParams(np.array(xi), v))
        rep = validate_constraints(c, coup, sigma)
        assert rep.passed, rep.residuals
        assert abs(np.vdot(coup.d, coup.d) - 2 * sigma.real) <= 1e-12

    @given(st.floats(1e-6, 1.0))
    def test_round_trip_transmission(self, t):
        c, _, _ = from_microscopic(MicroscopicParams.for_background(t))
        assert abs(abs(c.c_matrix[0, 0]) - t) <= 1e-12

    @given(st.floats(0.0, 1.0), st.floats(0.01, 1.0))
    def test_for_background_decay(self, t, gamma):
        model = ScatteringModel.from_microscopic(MicroscopicParams.for_background(t, gamma))
        assert model.sigma.real == pytest.approx(gamma, rel=1e-12)

    def test_rejects_asymmetric_v(self):
        with pytest.raises(DomainError):
            MicroscopicParams(np.ones(2), np.array([[0, 1.0], [2.0, 0]]))

    def test_rejects_diagonal_v(self):
        with pytest.raises(DomainError):
            MicroscopicParams(np.ones(2), np.eye(2))


class TestSystemSpec:
    def test_r_from_sign(self):
        assert SystemSpec(t_bg=0.6, r_sign=-1).r == pytest.approx(-0.8)

    def test_phase_wrapped(self):
        assert SystemSpec(phi=math.pi).phi == pytest.approx(-math.pi)

    @pytest.mark.parametrize("kw", [dict(sigma=0.0), dict(sigma=-0.1 + 0.2j), dict(t_bg=1.5),
                                    dict(r_sign=0), dict(parity=2), dict(chi=-1.0), dict(n_channels=0)])
    def test_invalid(self, kw):
        with pytest.raises(DomainError):
            SystemSpec(**kw)

    def test_atom_flag(self):
        assert SystemSpec().is_atom and not SystemSpec(chi=5.0).is_atom

    def test_values_immutable(self):
        c = build_two_port_background(0.3)
        with pytest.raises(ValueError):
            c.c_matrix[0, 0] = 2


class TestConfig:
    TEXT = """
    # Fano resonator
    channels = 2
    omega = 1.0
    sigma_re = 0.2   # decay
    sigma_im = 0
    chi = inf
    t = 0.5
    r_sign = -1
    phi = 0.25
    parity = 1
    """

    def test_round_trip(self):
        spec = spec_from_values(parse_config(self.TEXT))
        assert spec == SystemSpec(omega=1.0, sigma=0.2, chi=math.inf, t_bg=0.5, r_sign=-1, phi=0.25, parity=1)

    def test_unknown_key_named(self):
        with pytest.raises(ConfigError, match="gamma"):
            parse_config("gamma = 3")

    def test_malformed_line(self):
        with pytest.raises(ConfigError, match="line 2"):
            parse_config("t = 0.5\nnonsense\n")

    def test_bad_number(self):
        with pytest.raises(ConfigError, match="omega"):
            parse_config("omega = fast")

    def test_out_of_range_value(self):
        with pytest.raises(ConfigError):
            spec_from_values(parse_config("t = 2"))

    def test_finite_chi(self):
        assert spec_from_values(parse_config("chi = 12.5")).chi == 12.5
