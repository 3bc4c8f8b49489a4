"""Certified series evaluation: coefficients, stop rule, escalation.

Frozen expectations come from two shifted exponents that reduce to small
rationals:

  psi_gamma(u) = 2u^2 + 4u  (drift 0, sigma = 4, q = 2, shift 1):
      a_1 = 1/6,  a_2 = 1/96,  a_3 = 1/2880
  psi_gamma(u) = 2u^2 + 2u  (drift -2, sigma = 4, q = 0, shift 1):
      a_1 = 1/4,  a_2 = 1/48,  a_3 = 1/1152

and for the Gaussian family the alternating series collapses to a Kummer
function: O(rho; x) = M(rho, 2b/sigma + 2 phi + 1; -2x/sigma).
"""

import math
import threading

import mpmath as mp
import numpy as np
import pytest
import scipy.special as sps

from expfunc import (
    DomainError,
    InvalidParameter,
    LevyModel,
    MaxTermsExceeded,
    PrecisionInsufficient,
    SeriesValue,
    coefficients,
    eval_alternating_series,
    eval_alternating_series_extended,
    eval_increasing_series,
)
from expfunc import _backend
from expfunc.power_series import (
    HARD_TERM_CAP,
    _prescan,
    eval_I,
    eval_O,
    eval_O_extended,
    eval_alternating_series_double,
)


def brownian_shift(b=0.0, sigma=4.0, q=2.0):
    return LevyModel.brownian(b=b, sigma=sigma).shift(q)


def kummer_oracle(shifted, rho, x, dps_bits=250):
    """M(rho, 2b/sigma + 2 phi + 1, -2x/sigma) summed in multiprecision."""
    b, sigma = shifted.base.b, shifted.base.sigma
    with mp.workprec(dps_bits):
        phi = shifted.refined_shift_mp()
        c = 2 * mp.mpf(b) / sigma + 2 * phi + 1
        return float(mp.hyp1f1(mp.mpf(rho), c, -2 * mp.mpf(x) / sigma))


def mp_direct_alternating(shifted, kappa, z, n_sum, bits=300):
    """Reference partial sum of O(kappa; z) with n_sum terms."""
    with mp.workprec(bits):
        g = shifted.refined_shift_mp()
        t = mp.mpf(1)
        s = mp.mpf(1)
        for n in range(n_sum):
            t = -t * (mp.mpf(kappa) + n) * mp.mpf(z) / shifted.psi_shifted_mp(n + 1, shift_mp=g)
            s += t
        return s


class TestCoefficients:
    def test_frozen_shift_one_q_two(self):
        a = coefficients(brownian_shift(), 3)
        assert a == pytest.approx([1.0, 1 / 6, 1 / 96, 1 / 2880], rel=1e-15)

    def test_frozen_dufresne(self):
        a = coefficients(brownian_shift(b=-2.0, q=0.0), 3)
        assert a == pytest.approx([1.0, 1 / 4, 1 / 48, 1 / 1152], rel=1e-15)

    def test_zero_order(self):
        assert coefficients(brownian_shift(), 0).tolist() == [1.0]

    def test_negative_order_rejected(self):
        with pytest.raises(InvalidParameter):
            coefficients(brownian_shift(), -1)

    def test_large_order_underflows_to_zero(self):
        a = coefficients(brownian_shift(), 400)
        assert a[-1] == 0.0 and np.all(a >= 0.0)

    def test_matches_gamma_ratio_form(self):
        # For psi_gamma(u) = 2u^2 + 4u = 2u(u+2):
        # prod_{k<=n} psi_gamma(k) = 2^n n! * Gamma(n+3)/Gamma(3).
        a = coefficients(brownian_shift(), 40)
        n = np.arange(41, dtype=np.float64)
        log_expected = -(n * math.log(2.0) + sps.gammaln(n + 1)
                         + sps.gammaln(n + 3) - sps.gammaln(3.0))
        with np.errstate(divide="ignore"):
            assert np.log(a) == pytest.approx(log_expected, abs=1e-12)


class TestIncreasingSeries:
    def test_at_zero(self):
        assert eval_increasing_series(brownian_shift(), 0.0) == SeriesValue(1.0, 0.0, 1, 1.0, 1.0)

    @pytest.mark.parametrize("z", [0.25, 2.0, 30.0, 200.0])
    def test_matches_multiprecision_sum(self, z):
        shifted = brownian_shift()
        got = eval_increasing_series(shifted, z, 1e-13)
        with mp.workprec(300):
            g = shifted.refined_shift_mp()
            t = mp.mpf(1)
            s = mp.mpf(1)
            for n in range(600):
                t = t * mp.mpf(z) / shifted.psi_shifted_mp(n + 1, shift_mp=g)
                s += t
        assert got.value == pytest.approx(float(s), rel=1e-12)
        assert got.condition == 1.0
        assert got.truncation_bound <= 1e-12 * got.value

    def test_monotone_in_argument(self):
        shifted = brownian_shift()
        values = [eval_increasing_series(shifted, z).value for z in (0.0, 1.0, 5.0, 9.0)]
        assert values == sorted(values) and values[0] == 1.0

    def test_overflow_reported(self):
        with pytest.raises(PrecisionInsufficient):
            eval_increasing_series(brownian_shift(), 1e8)

    def test_rejects_negative_argument(self):
        with pytest.raises(DomainError):
            eval_increasing_series(brownian_shift(), -1.0)


class TestAlternatingFrozenPartials:
    def test_kappa_one_partial_sums(self):
        # With a_1 = 1/6, a_2 = 1/96, a_3 = 1/2880 and kappa = 1 the first
        # terms are 1 - z/6 + z^2/48 - z^3/480 ((1)_n = n!).
        shifted = brownian_shift()
        z = 0.375
        expected = 1 - z / 6 + z * z / 48 - z ** 3 / 480
        got = float(mp_direct_alternating(shifted, 1.0, z, 3))
        assert got == pytest.approx(expected, rel=1e-14)

    def test_prescan_matches_gammaln_term_logs(self):
        shifted = brownian_shift()
        kappa, z = 1.5, 7.0
        n_need, log_peak, _ = _prescan(shifted, kappa, z, 1e-12)
        # ln |t_n| = ln (kappa)_n + n ln z - sum_k ln psi_gamma(k)
        n = np.arange(1, 120, dtype=np.float64)
        ln_poch = sps.gammaln(kappa + n) - sps.gammaln(kappa)
        ln_psi = np.cumsum(np.log(shifted.base.psi_array(n + shifted.shift) - shifted.q))
        logs = ln_poch + n * math.log(z) - ln_psi
        assert log_peak == pytest.approx(max(0.0, float(logs.max())), abs=1e-9)
        assert 0 < n_need <= 119
        # past n_need the magnitudes must stay below the peak
        assert float(logs[int(n_need) - 1]) < log_peak


class TestAlternatingAgainstKummer:
    @pytest.mark.parametrize("b,sigma,q", [(0.0, 4.0, 2.0), (1.0, 2.0, 3.0)])
    @pytest.mark.parametrize("x", [0.0, 1.0, 5.0, 20.0, 50.0])
    def test_matches_oracle(self, b, sigma, q, x):
        shifted = brownian_shift(b=b, sigma=sigma, q=q)
        phi = shifted.shift
        for rho, offset in [(phi, 0.0), (1.0 + phi, 1.0), (phi - 1.0, -1.0)]:
            if rho <= 0.0:
                continue
            got = eval_alternating_series(shifted, rho, x, 1e-10, kappa_offset=offset)
            assert got.value == pytest.approx(kummer_oracle(shifted, rho, x), rel=1e-10)

    def test_escalates_at_strong_cancellation(self):
        got = eval_alternating_series(brownian_shift(), 1.0, 50.0, 1e-10)
        assert got.precision_bits > 53
        assert got.mp_value is not None
        assert got.condition > 1e6

    def test_stays_double_when_benign(self):
        got = eval_alternating_series(brownian_shift(), 1.0, 2.0, 1e-10)
        assert got.precision_bits == 53
        assert got.mp_value is None

    def test_auto_equals_double_path_when_routed_double(self):
        shifted = brownian_shift()
        auto = eval_alternating_series(shifted, 2.0, 3.0, 1e-11)
        direct = eval_alternating_series_double(shifted, 2.0, 3.0, 1e-11)
        assert auto == direct

    def test_double_only_raises_at_strong_cancellation(self):
        with pytest.raises(PrecisionInsufficient) as err:
            eval_alternating_series_double(brownian_shift(), 1.0, 50.0, 1e-10)
        assert err.value.condition > 1e6
        assert err.value.log10_condition == pytest.approx(
            math.log10(err.value.condition), rel=1e-6)

    def test_certified_error_bound_holds(self):
        shifted = brownian_shift()
        rel_tol = 1e-11
        for z in (1.0, 5.0, 12.0):
            got = eval_alternating_series_double(shifted, 2.0, z, rel_tol)
            ref = float(mp_direct_alternating(shifted, 2.0, z, 400))
            assert abs(got.value - ref) <= rel_tol * abs(ref)

    def test_at_zero(self):
        assert eval_alternating_series(brownian_shift(), 2.5, 0.0).value == 1.0


class TestExtendedPrecision:
    def test_refinement_is_cauchy(self):
        shifted = brownian_shift()
        rel_tol = 1e-12
        vals = [eval_alternating_series_extended(shifted, 1.0, 50.0, rel_tol, bits)
                for bits in (128, 256, 512)]
        v512 = vals[-1].value
        for v in vals[:-1]:
            assert abs(v.value - v512) <= 2 * rel_tol * abs(v512)
        assert vals[0].precision_bits == 128

    def test_jump_diffusion_self_consistency(self):
        shifted = LevyModel.jump_diffusion(b=1.0, sigma=2.0, lam=3.0, eta=2.0).shift(2.0)
        auto = eval_alternating_series(shifted, shifted.shift, 9.0, 1e-11, kappa_offset=0.0)
        ref = eval_alternating_series_extended(shifted, shifted.shift, 9.0, 1e-13, 256,
                                               kappa_offset=0.0)
        assert auto.value == pytest.approx(ref.value, rel=1e-11)

    def test_stable_self_consistency(self):
        shifted = LevyModel.stable(b=0.0, c=1.0, alpha=1.75).shift(2.0)
        auto = eval_alternating_series(shifted, shifted.shift, 10.0, 1e-11, kappa_offset=0.0)
        ref = eval_alternating_series_extended(shifted, shifted.shift, 10.0, 1e-13, 256,
                                               kappa_offset=0.0)
        assert auto.value == pytest.approx(ref.value, rel=1e-11)

    def test_inconsistent_kappa_offset_rejected(self):
        with pytest.raises(InvalidParameter):
            eval_alternating_series_extended(brownian_shift(), 1.0, 5.0, 1e-12, 128,
                                             kappa_offset=1.0)

    def test_small_precisions_rejected(self):
        with pytest.raises(InvalidParameter):
            eval_alternating_series_extended(brownian_shift(), 1.0, 5.0, 1e-12, 52)

    def test_threaded_evaluations_agree(self):
        shifted = brownian_shift()
        results = [None] * 8

        def work(slot):
            results[slot] = eval_alternating_series_extended(
                shifted, 1.0, 50.0, 1e-12, 192).value

        threads = [threading.Thread(target=work, args=(i,)) for i in range(8)]
        for th in threads:
            th.start()
        for th in threads:
            th.join()
        assert len({repr(v) for v in results}) == 1


class TestFailureModes:
    def test_term_budget_exhausted(self):
        # alpha = 1.5 needs about (z/c)^2 terms; z = 600 wants ~360000.
        shifted = LevyModel.stable(b=0.0, c=1.0, alpha=1.5).shift(1.0)
        with pytest.raises(MaxTermsExceeded):
            eval_alternating_series(shifted, shifted.shift, 600.0, 1e-10)

    def test_negative_argument_rejected(self):
        with pytest.raises(DomainError):
            eval_alternating_series(brownian_shift(), 1.0, -2.0)

    def test_nonpositive_kappa_rejected(self):
        for kappa in (0.0, -1.0, math.nan):
            with pytest.raises(InvalidParameter):
                eval_alternating_series(brownian_shift(), kappa, 1.0)

    def test_bad_tolerance_rejected(self):
        for rel_tol in (0.0, 1.0, -1e-3):
            with pytest.raises(InvalidParameter):
                eval_alternating_series(brownian_shift(), 1.0, 1.0, rel_tol)

    def test_hard_cap_is_export(self):
        assert HARD_TERM_CAP == 100_000


class TestBackendParity:
    @pytest.mark.parametrize("z", [0.5, 5.0, 20.0])
    def test_alternating_matches_across_backends(self, z):
        shifted = brownian_shift()
        with _backend.override("numba"):
            with_jit = eval_alternating_series_double(shifted, 1.0, z, 1e-11)
        with _backend.override("numpy"):
            plain = eval_alternating_series_double(shifted, 1.0, z, 1e-11)
        assert with_jit.value == pytest.approx(plain.value, rel=1e-12)

    def test_increasing_matches_across_backends(self):
        shifted = brownian_shift()
        with _backend.override("numba"):
            with_jit = eval_increasing_series(shifted, 8.0)
        with _backend.override("numpy"):
            plain = eval_increasing_series(shifted, 8.0)
        assert with_jit.value == pytest.approx(plain.value, rel=1e-13)


class TestOperationAliases:
    def test_aliases_point_at_implementations(self):
        assert eval_I is eval_increasing_series
        assert eval_O is eval_alternating_series
        assert eval_O_extended is eval_alternating_series_extended
