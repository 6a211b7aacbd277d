import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minwidth.errors import DomainError, MonotonicityError
from minwidth.mono1d import (
    PL1D,
    build_sawtooth,
    compile_monotone,
    fit_monotone_pl,
    pl_eval,
    pl_from_points,
    pl_invert,
    pl_line,
    pl_segment_slopes,
)
from minwidth.network import eval_batch, leaky
from minwidth.uoe1d import extract_extrema


class TestPLEval:
    def test_identity(self):
        f = PL1D([0.0], [0.0], 1.0, 1.0)
        assert pl_eval(f, 5.0) == 5.0

    def test_tail_slopes(self):
        f = PL1D([0.0, 1.0], [0.0, 1.0], 0.25, 0.25)
        assert pl_eval(f, -4.0) == -1.0

    def test_matches_leaky_relu(self):
        f = PL1D([0.0], [0.0], 0.25, 1.0)
        xs = np.linspace(-5, 5, 1000)
        assert np.allclose(pl_eval(f, xs), leaky(0.25).scalar(xs), atol=0.0)

    def test_breakpoints_must_increase(self):
        with pytest.raises(DomainError):
            PL1D([1.0, 0.5], [0.0, 1.0], 1.0, 1.0)


class TestInvert:
    def test_identity(self):
        inv = pl_invert(pl_line(1.0))
        assert pl_eval(inv, 3.3) == 3.3

    def test_affine(self):
        f = PL1D([0.0], [1.0], 2.0, 2.0)  # 2x + 1
        inv = pl_invert(f)
        assert pl_eval(inv, 3.0) == pytest.approx(1.0, abs=1e-15)

    def test_rejects_nonmonotone(self):
        f = pl_from_points([0.0, 0.5, 1.0], [0.0, 1.0, 0.5])
        with pytest.raises(MonotonicityError):
            pl_invert(f)

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(st.floats(0.05, 1.0), min_size=2, max_size=10),
        st.lists(st.floats(0.05, 1.0), min_size=2, max_size=10),
    )
    def test_round_trip(self, dxs, dys):
        n = min(len(dxs), len(dys))
        xs = np.cumsum(np.asarray(dxs[:n]))
        ys = np.cumsum(np.asarray(dys[:n]))
        f = pl_from_points(xs, ys)
        inv = pl_invert(f)
        probe = np.linspace(xs[0] - 1.0, xs[-1] + 1.0, 200)
        back = pl_eval(inv, pl_eval(f, probe))
        assert np.max(np.abs(back - probe)) <= 1e-12 * max(1.0, np.abs(probe).max())


class TestFitMonotone:
    def test_identity_collapses_to_line(self):
        f = fit_monotone_pl(lambda x: x, 0.01, domain=(0.0, 1.0))
        assert f.num_breakpoints == 0
        assert pl_eval(f, 0.77) == 0.77

    def test_cubic_within_eps(self):
        f = fit_monotone_pl(lambda x: x**3, 0.01, domain=(0.0, 1.0))
        xs = np.linspace(0, 1, 10000)
        assert np.max(np.abs(pl_eval(f, xs) - xs**3)) <= 0.01
        assert np.all(pl_segment_slopes(f) > 0.0)

    def test_constant_gets_slope_floor(self):
        f = fit_monotone_pl(lambda x: 0.5, 0.02, domain=(0.0, 1.0))
        xs = np.linspace(0, 1, 1000)
        vals = pl_eval(f, xs)
        assert np.all(np.diff(vals) > 0.0)
        assert vals[-1] - vals[0] <= 0.02
        assert np.max(np.abs(vals - 0.5)) <= 0.02

    def test_sample_input_with_violation_rejected(self):
        samples = np.array([[0.0, 0.0], [0.5, 0.5], [1.0, 0.2]])
        with pytest.raises(DomainError):
            fit_monotone_pl(None, 0.1, samples=samples)

    def test_sample_input_small_noise_monotonized(self):
        samples = np.array([[0.0, 0.0], [0.5, 0.5], [0.6, 0.49], [1.0, 1.0]])
        f = fit_monotone_pl(None, 0.1, samples=samples)
        xs = np.linspace(0, 1, 500)
        assert np.all(np.diff(pl_eval(f, xs)) > 0.0)


class TestCompileMonotone:
    def test_identity_is_pure_affine(self):
        net = compile_monotone(pl_line(1.0), 0.5, (0.0, 1.0), 1e-6)
        assert net.depth == 0
        assert net([0.3])[0] == 0.3

    def test_leaky_pl_single_layer(self):
        u = PL1D([0.0], [0.0], 0.5, 1.0)
        net = compile_monotone(u, 0.5, (-1.0, 1.0), 1e-6)
        assert net.depth == 1
        xs = np.linspace(-1, 1, 1000)
        assert np.max(np.abs(eval_batch(net, xs[:, None]).ravel() - pl_eval(u, xs))) < 1e-14

    def test_lattice_slopes_exact(self):
        # slope ratios {0.5, 2} are exact powers of alpha = 0.5
        u = pl_from_points([0.0, 0.3, 0.7, 1.0], [0.0, 0.3, 0.5, 1.1])
        net = compile_monotone(u, 0.5, (0.0, 1.0), 1e-6)
        xs = np.linspace(0, 1, 10000)
        err = np.max(np.abs(eval_batch(net, xs[:, None]).ravel() - pl_eval(u, xs)))
        assert err <= 1e-6

    def test_random_pl_within_eps_and_increasing(self):
        rng = np.random.default_rng(11)
        for trial in range(5):
            k = rng.integers(2, 8)
            xs = np.concatenate([[0.0], np.sort(rng.uniform(0.05, 0.95, k)), [1.0]])
            ys = np.cumsum(rng.uniform(0.05, 1.0, k + 2))
            u = pl_from_points(xs, ys)
            eps = 10.0 ** rng.uniform(-5, -2)
            net = compile_monotone(u, 0.5, (0.0, 1.0), eps)
            grid = np.linspace(0, 1, 2000)
            out = eval_batch(net, grid[:, None]).ravel()
            assert np.max(np.abs(out - pl_eval(u, grid))) <= eps
            assert np.all(np.diff(out) > 0.0)

    def test_rejects_nonincreasing(self):
        u = pl_from_points([0.0, 0.5, 1.0], [0.0, 1.0, 0.5])
        with pytest.raises(MonotonicityError):
            compile_monotone(u, 0.5, (0.0, 1.0), 1e-3)


class TestSawtooth:
    def test_m1_is_ramp(self):
        net = build_sawtooth(1, (0.0, 1.0))
        xs = np.array([0.0, 0.5, 1.0])
        assert np.allclose(eval_batch(net, xs[:, None]).ravel(), xs, atol=0.0)

    def test_m2_tent(self):
        net = build_sawtooth(2, (0.0, 1.0))
        for x, want in [(0.0, 0.0), (0.5, 1.0), (1.0, 0.0)]:
            assert net([x])[0] == want

    def test_m4_extrema(self):
        net = build_sawtooth(4, (0.0, 1.0))
        for x, want in [(0.25, 1.0), (0.5, 0.0), (0.75, 1.0)]:
            assert net([x])[0] == want

    @pytest.mark.parametrize("m", [1, 2, 3, 4, 5, 7, 8])
    def test_extrema_count_and_range(self, m):
        net = build_sawtooth(m, (0.0, 1.0))
        xs = np.linspace(0, 1, 8 * m + 1)
        vals = eval_batch(net, xs[:, None]).ravel()
        f = pl_from_points(xs, vals)
        prof = extract_extrema(f, (0.0, 1.0))
        assert prof.m == m - 1
        assert vals.min() >= -1e-12 and vals.max() <= 1.0 + 1e-12

    def test_general_domain(self):
        net = build_sawtooth(3, (-2.0, 4.0))
        assert net([-2.0])[0] == pytest.approx(0.0, abs=1e-12)
        assert net([0.0])[0] == pytest.approx(1.0, abs=1e-12)  # first peak at -2 + 2

    def test_rejects_m_zero(self):
        with pytest.raises(DomainError):
            build_sawtooth(0, (0.0, 1.0))

    def test_composed_with_increasing_map_keeps_extrema(self):
        from minwidth.network import compose

        m = 5
        saw = build_sawtooth(m, (0.0, 1.0))
        inner = compile_monotone(
            fit_monotone_pl(lambda x: x**2, 0.005, domain=(0.0, 1.0)),
            0.5,
            (0.0, 1.0),
            1e-4,
        )
        comp = compose(saw, inner)
        xs = np.linspace(0, 1, 4001)
        vals = eval_batch(comp, xs[:, None]).ravel()
        signs = np.sign(np.diff(vals))
        signs = signs[signs != 0]
        flips = int(np.sum(signs[1:] != signs[:-1]))
        assert flips == m - 1
