import numpy as np
import pytest

from loadid import space
from loadid.errors import InvalidConfigError, InvalidInputError

from conftest import random_feasible_params


class TestGrid:
    def test_endpoints(self, grid100):
        assert grid100.point(0, 0) == 0.02
        assert grid100.point(0, 99) == 0.2

    def test_interior_point(self, grid100):
        assert abs(grid100.point(0, 1) - (0.02 + 0.18 / 99)) < 1e-12

    def test_two_bins(self):
        grid = space.build_grid(2)
        for i, (_, lo, hi) in enumerate(space.DEFAULT_RANGES):
            assert grid.point(i, 0) == lo
            assert grid.point(i, 1) == hi

    def test_bins_validation(self):
        with pytest.raises(InvalidConfigError):
            space.build_grid(1)

    def test_range_table(self, grid100):
        table = {r.name: (r.lo, r.hi) for r in grid100.ranges}
        assert table["r_s"] == (0.02, 0.2)
        assert table["x_s"] == (0.1, 0.2)
        assert table["x_m"] == (2.0, 3.8)
        assert table["x_r"] == (0.5, 1.5)
        assert table["k_pm"] == (0.2, 0.9)
        assert table["r_r"] == (0.01, 0.1)
        assert table["h"] == (0.5, 2.0)
        assert table["a"] == (0.2, 1.0)
        assert table["b"] == (0.0, 1.0)
        for nm in ("a_p", "a_q", "b_p", "b_q"):
            assert table[nm] == (0.1, 0.9)

    def test_descriptor_roundtrip(self, grid100):
        back = space.DiscretizationGrid.from_descriptor(grid100.descriptor())
        assert back == grid100


class TestDecodeEncode:
    def test_decode_lower_corner(self, grid100):
        params = space.decode(grid100, space.ActionChain((0,) * 13))
        assert params.im.r_s == 0.02
        assert abs(params.zip.c_p - 0.8) < 1e-12
        assert abs(params.zip.c_q - 0.8) < 1e-12

    def test_decode_upper_corner(self, grid100):
        params = space.decode(grid100, space.ActionChain((99,) * 13))
        assert abs(params.zip.c_p - -0.8) < 1e-12
        assert abs(params.im.c - -1.0) < 1e-12  # A=1, B=1 -> C=-1

    def test_decode_validates_indices(self, grid100):
        with pytest.raises(InvalidInputError):
            space.decode(grid100, space.ActionChain((0,) * 12 + (100,)))

    def test_encode_nearest(self, grid100):
        params = space.decode(grid100, space.ActionChain((0,) * 13))
        params = space.params_from_vector(
            [0.0209] + list(space.vector_from_params(params))[1:]
        )
        chain = space.encode(grid100, params)
        assert chain.indices[0] == 0

    def test_encode_midpoint_rounds_down(self, grid100):
        vec = space.vector_from_params(space.decode(grid100, space.ActionChain((3,) * 13)))
        step0 = (0.2 - 0.02) / 99
        vec[0] += 0.5 * step0
        chain = space.encode(grid100, space.params_from_vector(vec))
        assert chain.indices[0] == 3

    def test_encode_out_of_range(self, grid100):
        vec = space.vector_from_params(space.decode(grid100, space.ActionChain((0,) * 13)))
        vec[0] = 0.3
        with pytest.raises(InvalidInputError):
            space.encode(grid100, space.params_from_vector(vec))

    @pytest.mark.parametrize("bins", [2, 3, 5])
    def test_roundtrip_exhaustive_per_index(self, bins):
        grid = space.build_grid(bins)
        for j in range(bins):
            chain = space.ActionChain((j,) * 13)
            assert space.encode(grid, space.decode(grid, chain)) == chain

    def test_roundtrip_random_chains(self, grid100):
        rng = np.random.default_rng(5)
        for _ in range(200):
            chain = space.ActionChain(tuple(int(x) for x in rng.integers(100, size=13)))
            assert space.encode(grid100, space.decode(grid100, chain)) == chain

    def test_monotonicity_per_variable(self, grid100):
        for var in range(13):
            values = [grid100.point(var, j) for j in range(100)]
            assert all(a < b for a, b in zip(values, values[1:]))


class TestFitness:
    def test_truth_is_zero(self, s1_spec, s1_series):
        assert space.fitness(s1_spec.truth, s1_series) < 1e-12

    def test_two_sample_hand_case(self):
        # objective arithmetic: P off by 0.1 at both of two samples, Q exact
        dp = np.array([0.1, 0.1])
        dq = np.array([0.0, 0.0])
        h = float(np.mean(dp * dp + dq * dq))
        assert abs(h - 0.01) < 1e-12

    def test_estimate_pinned_to_first_sample(self, s1_spec, s1_series):
        # the operating point is read off sample 0, so any feasible estimate
        # reproduces the measured values exactly at t = 0
        from loadid.loadmodel import simulate

        rng = np.random.default_rng(19)
        params = random_feasible_params(rng)
        p_est, q_est = simulate(params, s1_series.v, s1_series.v0, s1_series.p0, s1_series.q0, s1_series.dt)
        assert abs(p_est[0] - s1_series.p[0]) < 1e-6
        assert abs(q_est[0] - s1_series.q[0]) < 1e-6

    def test_nonnegative_on_random_params(self, s1_series):
        rng = np.random.default_rng(31)
        for _ in range(20):
            params = random_feasible_params(rng)
            assert space.fitness(params, s1_series) >= 0.0

    def test_penalty_on_infeasible(self, grid100, s1_series):
        # weak rotor, high motor share: demanded power exceeds the pullout
        vec = space.vector_from_params(space.decode(grid100, space.ActionChain((0,) * 13)))
        names = list(space.PARAM_NAMES)
        vec[names.index("k_pm")] = 0.9
        vec[names.index("x_r")] = 1.5
        vec[names.index("x_m")] = 3.8
        vec[names.index("r_s")] = 0.2
        params = space.params_from_vector(vec)
        value, failed = space.fitness_with_status(params, s1_series)
        assert failed and value == space.PENALTY_FITNESS

    def test_offset_changes_fitness_by_bounded_amount(self, s1_series):
        # triangle bound on the objective formula with the estimate held fixed
        from loadid.loadmodel import simulate

        rng = np.random.default_rng(11)
        offset = 0.1
        for _ in range(5):
            params = random_feasible_params(rng)
            p_est, q_est = simulate(params, s1_series.v, s1_series.v0, s1_series.p0, s1_series.q0, s1_series.dt)
            dp = p_est - s1_series.p
            dq = q_est - s1_series.q
            h0 = float(np.mean(dp * dp + dq * dq))
            dps = dp - offset
            h1 = float(np.mean(dps * dps + dq * dq))
            bound = offset**2 + 2 * offset * np.max(np.abs(dp))
            assert abs(h1 - h0) <= bound + 1e-12

    def test_residual_sum_matches_fitness(self, s1_spec, s1_series):
        residual = space.make_residual(s1_series)
        rng = np.random.default_rng(8)
        params = random_feasible_params(rng)
        r = residual(space.vector_from_params(params))
        h = space.fitness(params, s1_series)
        assert abs(float(r @ r) - h) < 1e-15 + 1e-9 * h
