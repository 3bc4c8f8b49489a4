"""Tests for the seeded Monte Carlo oracle and the EXPF sample format."""

import math

import numpy as np
import pytest

from expfunc import _backend
from expfunc.errors import ConditionHViolated, InvalidConfig, InvalidParameter
from expfunc.law import survival
from expfunc.levy_model import LevyModel
from expfunc.mc_oracle import (
    EXPF_MAGIC,
    McConfig,
    McSample,
    default_time_cap,
    empirical_asian,
    empirical_survival,
    read_expf,
    simulate,
    write_expf,
)
from expfunc.pricing import functional_moment

BROWNIAN = LevyModel.brownian(b=0.0, sigma=4.0)
DUFRESNE = LevyModel.brownian(b=-2.0, sigma=4.0)
JUMPY = LevyModel.jump_diffusion(b=2.0, sigma=2.0, lam=3.0, eta=2.0)
STABLE = LevyModel.stable(b=0.0, c=1.0, alpha=1.75)


@pytest.fixture(scope="module", autouse=True)
def _warm_kernels():
    _backend.kernels().warm_up()


@pytest.fixture(scope="module")
def brownian_sample():
    return simulate(BROWNIAN, 12.0, McConfig(n_paths=20_000, dt=1e-3, seed=42))


@pytest.fixture(scope="module")
def jumpy_sample():
    return simulate(JUMPY, 10.0, McConfig(n_paths=20_000, dt=1e-3, seed=42))


class TestConfigValidation:
    def test_defaults(self):
        cfg = McConfig()
        assert cfg.n_paths == 100_000
        assert cfg.dt == 1e-3
        assert cfg.seed == 42
        assert cfg.t_cap is None

    @pytest.mark.parametrize("n_paths", [0, -5, 2.0, "many"])
    def test_rejects_bad_path_count(self, n_paths):
        with pytest.raises(InvalidParameter):
            McConfig(n_paths=n_paths)

    @pytest.mark.parametrize("dt", [0.0, -1e-3, float("nan"), float("inf"), 1])
    def test_rejects_bad_step(self, dt):
        with pytest.raises(InvalidParameter):
            McConfig(dt=dt)

    @pytest.mark.parametrize("seed", [-1, 2 ** 64, 1.5])
    def test_rejects_bad_seed(self, seed):
        with pytest.raises(InvalidParameter):
            McConfig(seed=seed)

    @pytest.mark.parametrize("t_cap", [0.0, -2.0, float("inf"), float("nan")])
    def test_rejects_bad_cap(self, t_cap):
        with pytest.raises(InvalidParameter):
            McConfig(t_cap=t_cap)


class TestSimulateValidation:
    @pytest.mark.parametrize("q", [-1.0, float("nan"), float("inf")])
    def test_rejects_bad_rate(self, q):
        with pytest.raises(InvalidParameter):
            simulate(BROWNIAN, q, McConfig(n_paths=10))

    def test_unkilled_needs_negative_mean(self):
        # b = 0 gives a driftless exponent: the functional diverges at q = 0.
        with pytest.raises(ConditionHViolated):
            simulate(BROWNIAN, 0.0, McConfig(n_paths=10))

    def test_sample_carries_provenance(self, brownian_sample):
        assert isinstance(brownian_sample, McSample)
        assert brownian_sample.model is BROWNIAN
        assert brownian_sample.q == 12.0
        assert brownian_sample.config.n_paths == 20_000
        assert brownian_sample.values.shape == (20_000,)


class TestDeterminism:
    def test_same_seed_is_bitwise_identical(self):
        cfg = McConfig(n_paths=2_000, dt=1e-3, seed=7)
        a = simulate(BROWNIAN, 2.0, cfg)
        b = simulate(BROWNIAN, 2.0, cfg)
        assert np.array_equal(a.values, b.values)

    def test_different_seeds_differ(self):
        a = simulate(BROWNIAN, 2.0, McConfig(n_paths=2_000, seed=1))
        b = simulate(BROWNIAN, 2.0, McConfig(n_paths=2_000, seed=2))
        assert not np.array_equal(a.values, b.values)

    def test_worker_thread_count_does_not_change_bits(self):
        cfg = McConfig(n_paths=2_000, dt=1e-3, seed=11)
        if _backend.use_numba():
            import numba

            before = numba.get_num_threads()
        try:
            _backend.set_worker_threads(1)
            single = simulate(JUMPY, 2.0, cfg).values
            _backend.set_worker_threads(8)
            many = simulate(JUMPY, 2.0, cfg).values
        finally:
            if _backend.use_numba():
                numba.set_num_threads(before)
        assert np.array_equal(single, many)

    @pytest.mark.parametrize("model,q", [(BROWNIAN, 2.0), (JUMPY, 2.0), (STABLE, 2.0)])
    def test_backends_agree(self, model, q):
        cfg = McConfig(n_paths=500, dt=1e-3, seed=3)
        with _backend.override("numba"):
            compiled = simulate(model, q, cfg).values
        with _backend.override("numpy"):
            plain = simulate(model, q, cfg).values
        np.testing.assert_allclose(compiled, plain, rtol=1e-10, atol=1e-13)


class TestStatistics:
    def test_brownian_mean_matches_first_moment(self, brownian_sample):
        mean, se = empirical_asian(brownian_sample, 0.0)
        exact = functional_moment(BROWNIAN, 12.0, 1)
        assert exact == 0.1
        assert abs(mean - exact) <= 3.0 * se

    def test_jump_diffusion_mean_matches_first_moment(self, jumpy_sample):
        mean, se = empirical_asian(jumpy_sample, 0.0)
        exact = functional_moment(JUMPY, 10.0, 1)
        assert exact == pytest.approx(0.125)
        assert abs(mean - exact) <= 3.0 * se

    def test_second_moment_where_fourth_exists(self):
        # q = 40 keeps the fourth moment finite, so the sample second moment
        # has a well-behaved standard error.
        sample = simulate(BROWNIAN, 40.0, McConfig(n_paths=20_000, dt=1e-3, seed=42))
        sq = sample.values ** 2
        exact = functional_moment(BROWNIAN, 40.0, 2)
        assert exact == pytest.approx(1.0 / 608.0)
        se = float(sq.std(ddof=1)) / math.sqrt(sq.size)
        assert abs(float(sq.mean()) - exact) <= 3.0 * se

    def test_unkilled_survival_matches_closed_form(self):
        # For b = -2, sigma = 4 at q = 0 the survival function is
        # 1 - exp(-1/(2 t)).
        sample = simulate(DUFRESNE, 0.0, McConfig(n_paths=2_000, dt=2e-3, seed=42))
        for t in (0.5, 1.0, 2.0):
            p_hat, se = empirical_survival(sample, t)
            exact = 1.0 - math.exp(-1.0 / (2.0 * t))
            assert abs(p_hat - exact) <= 3.0 * se + 2e-3

    def test_stable_survival_matches_series(self):
        sample = simulate(STABLE, 2.0, McConfig(n_paths=5_000, dt=1e-3, seed=42))
        for t in (0.25, 1.0):
            p_hat, se = empirical_survival(sample, t)
            exact = survival(STABLE, 2.0, t)
            assert abs(p_hat - exact) <= 3.0 * se + 2e-3

    def test_stable_values_are_positive_and_finite(self):
        sample = simulate(STABLE, 2.0, McConfig(n_paths=2_000, dt=1e-3, seed=5))
        assert np.all(np.isfinite(sample.values))
        assert np.all(sample.values > 0.0)

    def test_step_halving_stays_within_noise(self):
        coarse = simulate(BROWNIAN, 12.0, McConfig(n_paths=10_000, dt=1e-3, seed=9))
        fine = simulate(BROWNIAN, 12.0, McConfig(n_paths=10_000, dt=5e-4, seed=9))
        m_c, se_c = empirical_asian(coarse, 0.0)
        m_f, se_f = empirical_asian(fine, 0.0)
        assert not np.array_equal(coarse.values, fine.values)
        assert abs(m_c - m_f) <= 4.0 * math.hypot(se_c, se_f)


class TestTimeCap:
    def test_default_cap_value(self):
        # psi(theta/2) = psi(1/2) = -1/2 for b = -2, sigma = 4, so the cap is
        # 4 ln(1e4).
        assert default_time_cap(DUFRESNE) == pytest.approx(4.0 * math.log(1e4))

    def test_longer_cap_only_adds_mass(self):
        short = simulate(DUFRESNE, 0.0,
                         McConfig(n_paths=500, dt=2e-3, seed=4, t_cap=5.0))
        full = simulate(DUFRESNE, 0.0, McConfig(n_paths=500, dt=2e-3, seed=4))
        assert np.all(full.values >= short.values - 1e-12)
        assert full.values.mean() > short.values.mean()


class TestEstimators:
    def test_survival_at_zero_threshold(self, brownian_sample):
        p_hat, se = empirical_survival(brownian_sample, 0.0)
        assert p_hat == 1.0
        assert se == 0.0

    def test_survival_beyond_support(self, brownian_sample):
        p_hat, se = empirical_survival(brownian_sample, 1e12)
        assert p_hat == 0.0
        assert se == 0.0

    def test_survival_rejects_bad_threshold(self, brownian_sample):
        with pytest.raises(InvalidParameter):
            empirical_survival(brownian_sample, -1.0)
        with pytest.raises(InvalidParameter):
            empirical_survival(brownian_sample, float("nan"))

    def test_asian_beyond_support(self, brownian_sample):
        mean, se = empirical_asian(brownian_sample, 1e12)
        assert mean == 0.0
        assert se == 0.0

    def test_asian_rejects_bad_strike(self, brownian_sample):
        with pytest.raises(InvalidParameter):
            empirical_asian(brownian_sample, -0.5)
        with pytest.raises(InvalidParameter):
            empirical_asian(brownian_sample, float("inf"))

    def test_asian_decreasing_in_strike(self, brownian_sample):
        values = [empirical_asian(brownian_sample, k)[0]
                  for k in (0.0, 0.05, 0.1, 0.2)]
        assert values == sorted(values, reverse=True)


class TestExpfFormat:
    def test_roundtrip_is_bitwise(self, tmp_path, brownian_sample):
        path = tmp_path / "sample.expf"
        write_expf(path, brownian_sample.values)
        back = read_expf(path)
        assert np.array_equal(back, brownian_sample.values)
        assert back.dtype == np.float64

    def test_header_layout(self, tmp_path):
        path = tmp_path / "three.expf"
        write_expf(path, np.array([1.0, -2.5, 3.75]))
        raw = path.read_bytes()
        assert raw[:4] == EXPF_MAGIC
        assert len(raw) == 16 + 3 * 8
        assert int.from_bytes(raw[8:16], "little") == 3

    def test_empty_roundtrip(self, tmp_path):
        path = tmp_path / "empty.expf"
        write_expf(path, np.array([]))
        assert read_expf(path).size == 0

    def test_rejects_truncated_header(self, tmp_path):
        path = tmp_path / "short.expf"
        path.write_bytes(b"EXPF\x01")
        with pytest.raises(InvalidConfig):
            read_expf(path)

    def test_rejects_wrong_magic(self, tmp_path):
        path = tmp_path / "wrong.expf"
        write_expf(path, np.array([1.0]))
        raw = bytearray(path.read_bytes())
        raw[:4] = b"NOPE"
        path.write_bytes(bytes(raw))
        with pytest.raises(InvalidConfig):
            read_expf(path)

    def test_rejects_unknown_version(self, tmp_path):
        path = tmp_path / "vers.expf"
        write_expf(path, np.array([1.0]))
        raw = bytearray(path.read_bytes())
        raw[4] = 99
        path.write_bytes(bytes(raw))
        with pytest.raises(InvalidConfig):
            read_expf(path)

    def test_rejects_truncated_payload(self, tmp_path):
        path = tmp_path / "trunc.expf"
        write_expf(path, np.array([1.0, 2.0]))
        raw = path.read_bytes()
        path.write_bytes(raw[:-4])
        with pytest.raises(InvalidConfig):
            read_expf(path)

    def test_rejects_matrix_input(self, tmp_path):
        with pytest.raises(InvalidParameter):
            write_expf(tmp_path / "mat.expf", np.ones((2, 2)))
