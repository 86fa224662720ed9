import math

import numpy as np
import pytest
from scipy import stats

from obfrank import analytic
from obfrank.model import Disk, Homogeneous, PathLossModel, QosSpec, RectGrid, SystemConfig, Wyner
from obfrank.montecarlo import (
    TrialConfig,
    draw_beams,
    draw_channels,
    draw_users,
    estimate_outage,
    path_gains,
    sinr_sample,
)

from .conftest import within_se

QOS = QosSpec(4.0, 0.1)


class TestBeams:
    def test_single_antenna(self):
        w = draw_beams(1, 1, np.random.default_rng(0))
        assert w.shape == (1, 1)
        assert abs(w[0, 0]) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("Nt, L", [(8, 1), (8, 3), (8, 8), (4, 2)])
    def test_orthonormal(self, Nt, L):
        w = draw_beams(Nt, L, np.random.default_rng(1), size=(200,))
        gram = np.conj(np.swapaxes(w, -1, -2)) @ w
        assert np.max(np.abs(gram - np.eye(L))) < 1e-12

    def test_too_many_beams(self):
        with pytest.raises(ValueError):
            draw_beams(2, 3, np.random.default_rng(0))

    def test_rotation_invariance(self):
        rng = np.random.default_rng(3)
        Nt, n = 4, 10_000
        u, _ = np.linalg.qr(rng.standard_normal((Nt, Nt)) + 1j * rng.standard_normal((Nt, Nt)))
        h = np.array([1.0, 0.5j, -0.3, 0.2 + 0.1j])
        w = draw_beams(Nt, 2, rng, size=(n,))[..., 0]
        v = draw_beams(Nt, 2, rng, size=(n,))[..., 0] @ u.T
        a = np.abs(w @ h) ** 2
        b = np.abs(v @ h) ** 2
        assert stats.ks_2samp(a, b).pvalue > 0.01


class TestUsers:
    def test_disk_second_moment(self):
        n, D = 100_000, 2.0
        pos = draw_users(Disk(D), n, np.random.default_rng(4))
        r2 = np.sum(pos[0] ** 2, axis=-1)
        assert abs(r2.mean() - D**2 / 2) <= 3 * r2.std(ddof=1) / math.sqrt(n)

    def test_square_mean(self):
        n = 100_000
        grid = RectGrid.adjacent(2.0)
        pos = draw_users(grid, n, np.random.default_rng(5))
        x = pos[0, :, 0]
        assert abs(x.mean() - grid.bs_x[0]) <= 3 * x.std(ddof=1) / math.sqrt(n)

    @pytest.mark.parametrize("M", [2, 3, 5])
    def test_closest_bs_association(self, M):
        grid = RectGrid.adjacent(1.5, M)
        pos = draw_users(grid, 2000, np.random.default_rng(M))
        bs = np.stack([np.asarray(grid.bs_x), np.zeros(M)], axis=-1)
        d = np.linalg.norm(pos[:, :, None, :] - bs, axis=-1)
        assert np.all(np.argmin(d, axis=-1) == np.arange(M)[:, None])

    def test_wyner_has_no_locations(self):
        with pytest.raises(TypeError):
            draw_users(Wyner(0.1), 3, np.random.default_rng(0))

    def test_disk_gain_distribution(self):
        D, alpha, n = 2.0, 3.0, 100_000
        sysc = SystemConfig(1, n, 8, 0.01, Disk(D), QOS, PathLossModel(alpha))
        g = path_gains(sysc, np.random.default_rng(8))[0, :, 0]
        cdf = lambda x: 1 - np.power(x, -2 / alpha) / D**2
        assert stats.kstest(g, cdf).pvalue > 0.01


class TestSinr:
    def test_noise_only_mean(self):
        n, noise = 100_000, 0.01
        rng = np.random.default_rng(9)
        gains = np.ones((n, 1, 1, 1))
        ch = draw_channels(1, 1, 4, rng, (n,))
        beams = [draw_beams(4, 1, rng, (n,))]
        s = sinr_sample(beams, ch, gains, [1], noise)[0][:, 0, 0]
        assert abs(s.mean() - 1 / noise) <= 3 * s.std(ddof=1) / math.sqrt(n)

    def test_two_evaluations_agree(self):
        n = 10_000
        rng = np.random.default_rng(10)
        ranks = [3, 1, 2]
        gains = rng.uniform(0.01, 10, (n, 3, 4, 3))
        ch = draw_channels(3, 4, 6, rng, (n,))
        beams = [draw_beams(6, L, rng, (n,)) for L in ranks]
        a, b = sinr_sample(beams, ch, gains, ranks, 0.05, both=True)
        for x, y in zip(a, b):
            np.testing.assert_allclose(x, y, rtol=1e-12, atol=0)

    def test_wyner_single_user_cdf(self):
        sysc = SystemConfig(2, 10, 8, 0.01, Wyner(0.1), QOS)
        est = estimate_outage(TrialConfig(sysc, (2, 2), 100_000, seed=21), 4.0)
        expected = analytic.outage_wyner(4.0, 2, 2, 0.1, 0.01, 1)
        assert within_se(est.single_user[0], expected, 100_000)


class TestEstimate:
    def test_zero_threshold(self):
        sysc = SystemConfig(1, 5, 8, 0.01, Homogeneous(1.0), QOS)
        est = estimate_outage(TrialConfig(sysc, (3,), 5000, seed=1), 0.0)
        assert est.p_hat == 0.0 and est.std_err == 0.0

    def test_standard_error(self):
        sysc = SystemConfig(1, 10, 8, 0.01, Homogeneous(1.0), QOS)
        est = estimate_outage(TrialConfig(sysc, (2,), 10_000, seed=2), 4.0)
        assert est.std_err == pytest.approx(math.sqrt(est.p_hat * (1 - est.p_hat) / 10_000))

    def test_reproducible(self, two_cell_system):
        tc = TrialConfig(two_cell_system, (2, 3), 5000, seed=77)
        assert estimate_outage(tc, 4.0) == estimate_outage(tc, 4.0)

    def test_thread_count_independent(self, two_cell_system):
        tc = TrialConfig(two_cell_system, (2, 3), 9000, seed=78)
        assert estimate_outage(tc, 4.0, threads=1) == estimate_outage(tc, 4.0, threads=4)

    def test_seed_matters(self, two_cell_system):
        a = estimate_outage(TrialConfig(two_cell_system, (2, 2), 5000, seed=1), 4.0)
        b = estimate_outage(TrialConfig(two_cell_system, (2, 2), 5000, seed=2), 4.0)
        assert a != b

    def test_beam_exchangeable(self):
        sysc = SystemConfig(2, 10, 8, 0.01, Wyner(0.1), QOS)
        n = 50_000
        first = estimate_outage(TrialConfig(sysc, (3, 2), n, seed=5), 4.0)
        rand = estimate_outage(TrialConfig(sysc, (3, 2), n, seed=6), 4.0, beam="random")
        for a, b in zip(first.per_cell, rand.per_cell):
            se = math.sqrt(a * (1 - a) / n + b * (1 - b) / n)
            assert abs(a - b) < 3 * se

    def test_general_m(self):
        grid = RectGrid.adjacent(2.0, 3)
        sysc = SystemConfig(3, 4, 8, 0.01, grid, QOS, PathLossModel(3.0))
        est = estimate_outage(TrialConfig(sysc, (2, 2, 2), 4000, seed=3), 4.0, cell=1)
        assert len(est.per_cell) == 3
        # the middle cell sees two interferers
        assert est.per_cell[1] >= est.per_cell[0] - 0.05

    @pytest.mark.parametrize(
        "ranks, trials, seed",
        [((2,), 0, 0), ((9,), 10, 0), ((2, 2), 10, 0), ((2,), 10, -1)],
    )
    def test_trial_config_checks(self, ranks, trials, seed):
        sysc = SystemConfig(1, 5, 8, 0.01, Homogeneous(1.0), QOS)
        with pytest.raises(ValueError):
            TrialConfig(sysc, ranks, trials, seed)
