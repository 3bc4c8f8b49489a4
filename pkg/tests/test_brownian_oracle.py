"""Closed-form Gaussian oracle: Kummer function, tail constant, density.

Frozen expectations are elementary identities:
  M(1,2,z) = (exp(z)-1)/z,  M(a,a,z) = exp(z),  M(1,3,-x) = 2(exp(-x)-1+x)/x^2,
and for drift -2, sigma=4, q=0 the functional is 1/(2*Gamma(1)) distributed,
giving survival 1 - exp(-1/(2t)) and density exp(-1/(2t))/(2t^2).
"""

import math

import numpy as np
import pytest
import scipy.special as sps
from scipy import integrate

from expfunc import ConditionHViolated, DomainError, InvalidParameter, LevyModel
from expfunc.brownian_oracle import (
    BrownianCase,
    closed_form_tail_constant,
    hyp1f1,
    yor_density,
)

CASE_Q2 = BrownianCase(b=0.0, sigma=4.0, q=2.0)     # phi=1, c=3
CASE_B2_Q4 = BrownianCase(b=2.0, sigma=4.0, q=4.0)  # phi=1, c=4
CASE_DUFRESNE = BrownianCase(b=-2.0, sigma=4.0, q=0.0)  # phi=1, c=2


class TestCaseConstants:
    def test_phi_closed_form(self):
        assert CASE_Q2.phi == pytest.approx(1.0, rel=1e-14)
        assert CASE_B2_Q4.phi == pytest.approx(1.0, rel=1e-14)
        assert BrownianCase(b=0.0, sigma=2.0, q=4.0).phi == pytest.approx(2.0, rel=1e-14)
        assert CASE_DUFRESNE.phi == pytest.approx(1.0, rel=1e-14)  # positive root

    def test_kummer_second_parameter(self):
        assert CASE_Q2.kummer_c == pytest.approx(3.0, rel=1e-14)
        assert CASE_B2_Q4.kummer_c == pytest.approx(4.0, rel=1e-14)
        assert CASE_DUFRESNE.kummer_c == pytest.approx(2.0, rel=1e-14)

    def test_q0_requires_negative_drift(self):
        with pytest.raises(ConditionHViolated):
            BrownianCase(b=0.5, sigma=4.0, q=0.0)

    def test_sigma_positive_required(self):
        with pytest.raises(InvalidParameter):
            BrownianCase(b=0.0, sigma=0.0, q=2.0)

    def test_from_model_brownian(self):
        case = BrownianCase.from_model(LevyModel.brownian(b=0.0, sigma=4.0), 2.0)
        assert case == CASE_Q2

    def test_from_model_stable_alpha_two(self):
        case = BrownianCase.from_model(LevyModel.stable(b=-1.0, c=1.0, alpha=2.0), 1.0)
        assert case.sigma == 2.0 and case.b == -1.0

    def test_from_model_rejects_jumps(self):
        m = LevyModel.jump_diffusion(b=1.0, sigma=2.0, lam=3.0, eta=2.0)
        with pytest.raises(InvalidParameter):
            BrownianCase.from_model(m, 2.0)


class TestKummer:
    def test_at_zero_argument(self):
        assert hyp1f1(1.7, 2.9, 0.0) == 1.0

    def test_first_parameter_zero(self):
        assert hyp1f1(0.0, 2.0, 5.0) == 1.0

    def test_elementary_a1_c2(self):
        # M(1,2,z) = (exp(z)-1)/z
        assert hyp1f1(1.0, 2.0, 1.0) == pytest.approx(math.e - 1.0, rel=1e-14)
        assert hyp1f1(1.0, 2.0, -1.0) == pytest.approx(1.0 - 1.0 / math.e, rel=1e-13)

    def test_elementary_equal_parameters(self):
        # M(a,a,z) = exp(z)
        assert hyp1f1(2.0, 2.0, 3.0) == pytest.approx(math.exp(3.0), rel=1e-13)
        assert hyp1f1(2.0, 2.0, -3.0) == pytest.approx(math.exp(-3.0), rel=1e-13)

    def test_elementary_a1_c3(self):
        # M(1,3,-x) = 2(exp(-x)-1+x)/x^2
        for x in (0.5, 2.0, 10.0):
            expected = 2.0 * (math.exp(-x) - 1.0 + x) / (x * x)
            assert hyp1f1(1.0, 3.0, -x) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("a", [0.5, 1.0, 1.7, 3.2])
    @pytest.mark.parametrize("c", [3.6, 5.0])
    @pytest.mark.parametrize("z", [-40.0, -5.0, -0.5, 0.5, 5.0, 40.0])
    def test_matches_scipy(self, a, c, z):
        assert hyp1f1(a, c, z) == pytest.approx(float(sps.hyp1f1(a, c, z)), rel=1e-10)

    def test_continuous_across_log_space_switch(self):
        lo, hi = hyp1f1(1.5, 3.5, 299.9), hyp1f1(1.5, 3.5, 300.2)
        assert math.log(hi) - math.log(lo) == pytest.approx(0.3, rel=1e-2)
        lo_n, hi_n = hyp1f1(1.5, 3.5, -299.9), hyp1f1(1.5, 3.5, -300.2)
        assert math.log(lo_n) - math.log(hi_n) == pytest.approx(
            math.log(lo_n / hi_n), rel=1e-9)

    def test_asymptotic_decay_at_large_negative_argument(self):
        # M(rho, c, -x) * x**rho * Gamma(c-rho)/Gamma(c) -> 1
        rho, c, x = 1.25, 3.5, 1000.0
        ratio = (hyp1f1(rho, c, -x) * x ** rho
                 * math.gamma(c - rho) / math.gamma(c))
        assert ratio == pytest.approx(1.0, abs=5e-2)

    def test_rejects_bad_parameters(self):
        with pytest.raises(DomainError):
            hyp1f1(1.0, 0.0, 1.0)
        with pytest.raises(DomainError):
            hyp1f1(-0.5, 2.0, 1.0)
        with pytest.raises(DomainError):
            hyp1f1(3.0, 2.0, -1.0)  # transform needs c >= a


class TestTailConstant:
    def test_frozen_quarter(self):
        # Gamma(2)/(2^1 Gamma(3)) = 1/4
        assert closed_form_tail_constant(CASE_Q2) == pytest.approx(0.25, rel=1e-13)

    def test_frozen_sixth(self):
        # Gamma(3)/(2^1 Gamma(4)) = 1/6
        assert closed_form_tail_constant(CASE_B2_Q4) == pytest.approx(1.0 / 6.0, rel=1e-13)

    def test_frozen_half_for_q0(self):
        # Gamma(1)/(2^1 Gamma(2)) = 1/2
        assert closed_form_tail_constant(CASE_DUFRESNE) == pytest.approx(0.5, rel=1e-13)


class TestDensity:
    def test_q0_elementary_form(self):
        # density exp(-1/(2t))/(2 t^2)
        for t in (0.3, 0.7, 2.5):
            expected = math.exp(-1.0 / (2.0 * t)) / (2.0 * t * t)
            assert yor_density(CASE_DUFRESNE, t) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("case", [CASE_Q2, CASE_B2_Q4])
    @pytest.mark.parametrize("t", [0.1, 1.0, 10.0])
    def test_integral_matches_kummer_form(self, case, t):
        # the same density written through M(1+phi, c; -1/(2t))
        phi, c = case.phi, case.kummer_c
        const = closed_form_tail_constant(case)
        expected = (phi * const * t ** (-phi - 1.0)
                    * hyp1f1(1.0 + phi, c, -1.0 / (2.0 * t)))
        assert yor_density(case, t) == pytest.approx(expected, rel=1e-10)

    @pytest.mark.parametrize("case", [
        CASE_Q2,
        CASE_B2_Q4,
        BrownianCase(b=-1.0, sigma=2.0, q=1.5),
    ])
    def test_density_normalizes(self, case):
        total, err = integrate.quad(lambda t: yor_density(case, t),
                                    0.0, np.inf, limit=400)
        assert total == pytest.approx(1.0, abs=2e-6)

    def test_tail_exponent(self):
        # t^(phi+1) s(t) -> phi * C
        case = CASE_Q2
        t = 1e4
        level = yor_density(case, t) * t ** (case.phi + 1.0)
        assert level == pytest.approx(case.phi * closed_form_tail_constant(case), rel=1e-2)

    def test_rejects_nonpositive_time(self):
        with pytest.raises(DomainError):
            yor_density(CASE_Q2, 0.0)


class TestSurvivalComposition:
    def test_frozen_survival_value(self):
        # S(1) = (1/4) M(1,3,-1/2) = 2(exp(-1/2) - 1/2)
        s1 = (closed_form_tail_constant(CASE_Q2)
              * hyp1f1(CASE_Q2.phi, CASE_Q2.kummer_c, -0.5))
        assert s1 == pytest.approx(2.0 * (math.exp(-0.5) - 0.5), rel=1e-13)

    def test_dufresne_survival(self):
        # 1 - exp(-1/(2t)) for the q=0 case
        case = CASE_DUFRESNE
        const = closed_form_tail_constant(case)
        for t in (0.2, 1.0, 5.0):
            s = const * t ** (-case.phi) * hyp1f1(case.phi, case.kummer_c,
                                                  -1.0 / (2.0 * t))
            assert s == pytest.approx(1.0 - math.exp(-1.0 / (2.0 * t)), rel=1e-12)


class TestInterfaceAliases:
    def test_alias_identity(self):
        from expfunc import brownian_oracle

        assert brownian_oracle.kummer_phi is hyp1f1
        assert brownian_oracle.closed_C is closed_form_tail_constant
