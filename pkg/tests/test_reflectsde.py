import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from interlace_lab import reflectsde as rs
from interlace_lab.diffusion1d import make_spec
from interlace_lab.twolevel import Shape


class TestSkorokhodMap:
    def test_one_sided_example(self):
        res = rs.skorokhod_map(np.array([0.0, -1.0, -0.5]), lower=0.0)
        assert np.array_equal(res.x, [0.0, 0.0, 0.5])
        assert np.array_equal(res.k, [0.0, 1.0, 1.0])
        assert res.crossing_index is None

    def test_identity_inside_barriers(self):
        z = np.array([0.0, 0.2, -0.1])
        res = rs.skorokhod_map(z, lower=-1.0, upper=1.0)
        assert np.array_equal(res.x, z)
        assert np.array_equal(res.k, np.zeros(3))

    def test_matches_running_max_formula_exactly(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            z = np.cumsum(rng.normal(0, 0.5, size=100))
            res = rs.skorokhod_map(z, lower=0.0)
            explicit = z + np.maximum.accumulate(np.maximum(-z, 0.0))
            assert np.array_equal(res.x, explicit)

    def test_barrier_crossing_truncates_with_flag(self):
        z = np.zeros(5)
        lower = np.array([0.0, 0.0, 0.5, 0.0, 0.0])
        upper = np.array([1.0, 1.0, 0.2, 1.0, 1.0])
        res = rs.skorokhod_map(z, lower=lower, upper=upper)
        assert res.crossing_index == 2
        assert np.array_equal(res.x[2:], np.full(3, res.x[1]))

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(-2, 2), min_size=3, max_size=40))
    def test_stays_within_barriers(self, incs):
        z = np.concatenate([[0.4], 0.4 + np.cumsum(incs)])
        res = rs.skorokhod_map(z, lower=0.0, upper=3.0)
        assert np.all(res.x >= -1e-12) and np.all(res.x <= 3.0 + 1e-12)
        # pushing is monotone on each side: k increments only at contact
        dk = np.diff(res.k)
        at_lower = np.isclose(res.x[1:], 0.0)
        at_upper = np.isclose(res.x[1:], 3.0)
        assert np.all((dk <= 1e-12) | at_lower)
        assert np.all((dk >= -1e-12) | at_upper)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_lipschitz_constant(self, seed):
        rng = np.random.default_rng(seed)
        z = np.cumsum(rng.normal(0, 0.4, size=60))
        eps = 1e-3
        pert = rng.normal(size=60)
        pert *= eps / max(np.max(np.abs(pert)), 1e-12)
        ra = rs.skorokhod_map(z + pert, lower=-1.0, upper=1.0)
        rb = rs.skorokhod_map(z, lower=-1.0, upper=1.0)
        assert np.max(np.abs(ra.x - rb.x)) <= 4.0 * eps + 1e-12


class TestYWCheck:
    @pytest.mark.parametrize("sid", ["bm", "ou", "besq:3", "lag:2", "jac:1,1", "gbm:1"])
    def test_catalog_holds(self, sid):
        assert rs.yw_check(make_spec(sid)) == "Holds"

    def test_unregistered_modulus_unknown(self):
        import dataclasses

        custom = dataclasses.replace(make_spec("bm"), family="custom")
        assert rs.yw_check(custom) == "Unknown"


class TestTwoLevelSimulation:
    def test_free_particle_variance(self):
        # no y level: a single unconstrained motion, terminal variance = T
        bm = make_spec("bm")
        pb = rs.simulate_two_level(bm, Shape.NNP1, np.array([0.0]), np.zeros((1, 0)),
                                   T=1.0, dt=1e-3, n_paths=30000, seed=1, y_spec=bm)
        xs = pb.terminal(1)[:, 0]
        assert abs(xs.mean()) < 3.0 / math.sqrt(30000)
        assert xs.var() == pytest.approx(1.0, abs=3 * math.sqrt(2.0 / 30000))

    def test_seed_determinism_bitwise(self):
        bm = make_spec("bm")
        kw = dict(x0=np.array([-1.0, 1.0]), y0=np.array([0.0]), T=0.3, dt=1e-3,
                  n_paths=500, seed=11, y_spec=bm)
        a = rs.simulate_two_level(bm, Shape.NNP1, **kw)
        b = rs.simulate_two_level(bm, Shape.NNP1, **kw)
        assert np.array_equal(a.terminal(1), b.terminal(1))
        assert np.array_equal(a.terminal(0), b.terminal(0))

    def test_interlacing_at_every_recorded_step(self):
        bm = make_spec("bm")
        pb = rs.simulate_two_level(bm, Shape.NNP1, np.array([-1.0, 1.0]), np.array([0.0]),
                                   T=0.3, dt=1e-3, n_paths=200, seed=3, y_spec=bm,
                                   record_stride=1)
        y = pb.levels[0]
        x = pb.levels[1]
        assert np.all(x[..., 0] <= y[..., 0] + 1e-12)
        assert np.all(y[..., 0] <= x[..., 1] + 1e-12)

    def test_k_increments_nonnegative_with_contact(self):
        bm = make_spec("bm")
        pb = rs.simulate_two_level(bm, Shape.NNP1, np.array([-0.1, 0.1]), np.array([0.0]),
                                   T=0.2, dt=1e-3, n_paths=300, seed=5, y_spec=bm)
        assert np.all(pb.k_lower[1] >= 0.0) and np.all(pb.k_upper[1] >= 0.0)
        assert pb.k_lower[1].sum() > 0.0  # tight start guarantees contact
        assert 0.0 < pb.contact_fraction < 0.5

    def test_contact_fraction_shrinks_with_dt(self):
        bm = make_spec("bm")
        fracs = []
        for dt in (4e-3, 1e-3, 2.5e-4):
            pb = rs.simulate_two_level(bm, Shape.NNP1, np.array([-0.5, 0.5]), np.array([0.0]),
                                       T=0.3, dt=dt, n_paths=800, seed=9, y_spec=bm)
            fracs.append(pb.contact_fraction)
        assert fracs[0] > fracs[1] > fracs[2]

    def test_w11_reflected_pair_matches_conditioned_law(self):
        # half-line pair at modest budget; full budget runs in acceptance
        from interlace_lab.harness.checks import bes3_cdf

        spec = make_spec("bm_halfline:abs")
        ysp = make_spec("bm_halfline:refl")

        def y0(n):
            rng = np.random.default_rng(123)
            return rng.uniform(0.0, 1.0, size=(n, 1))

        pb = rs.simulate_two_level(spec, Shape.NN, np.array([1.0]), y0, T=1.0, dt=2e-3,
                                   n_paths=4000, seed=21, y_spec=ysp)
        xs = np.sort(pb.terminal(1)[:, 0])
        F = bes3_cdf(xs)
        n = len(xs)
        ks = max(np.max(np.arange(1, n + 1) / n - F), np.max(F - np.arange(n) / n))
        assert ks < 0.05

    def test_input_validation(self):
        bm = make_spec("bm")
        with pytest.raises(ValueError):
            rs.simulate_two_level(bm, Shape.NNP1, np.array([-1.0, 1.0]), np.array([0.0]),
                                  T=0.1, dt=-1e-3, n_paths=10, seed=0, y_spec=bm)
        with pytest.raises(ValueError):
            rs.simulate_two_level(bm, Shape.NNP1, np.array([-1.0, 1.0]), np.array([2.0]),
                                  T=0.1, dt=1e-3, n_paths=10, seed=0, y_spec=bm)
        from interlace_lab.twolevel import BoundaryAssumptionError

        with pytest.raises(BoundaryAssumptionError):
            rs.simulate_two_level(make_spec("bm_halfline:abs"), Shape.NNP1,
                                  np.array([0.5, 1.5]), np.array([1.0]),
                                  T=0.1, dt=1e-3, n_paths=10, seed=0)

    def test_y_collision_stops_paths(self):
        # two dual particles squeezed together must trigger tau
        bm = make_spec("bm")
        pb = rs.simulate_two_level(bm, Shape.NNP1, np.array([-0.05, 0.0, 0.05]),
                                   np.array([-0.02, 0.02]), T=0.5, dt=1e-3,
                                   n_paths=500, seed=2, y_spec=bm)
        assert np.isfinite(pb.tau).mean() > 0.9


class TestGTSimulation:
    def test_no_interior_collisions_under_pattern_initialization(self):
        from interlace_lab import kmgroup as km

        elaw = km.entrance_law("gue", 3)
        t0 = 1e-3

        def init(n):
            rng = np.random.default_rng(31)
            x3 = elaw.sample(rng, t0, n)
            x2 = np.column_stack([
                rng.uniform(x3[:, 0], x3[:, 1]),
                rng.uniform(x3[:, 1], x3[:, 2]),
            ])
            x1 = rng.uniform(x2[:, 0], x2[:, 1])[:, None]
            return [x1, x2, x3]

        specs = [make_spec("bm")] * 3
        pb = rs.simulate_gt(specs, init, T=0.5, dt=1e-3, n_paths=2000, seed=13, t0=t0)
        assert int(np.isfinite(pb.tau).sum()) == 0

    def test_levels_interlace_at_terminal_time(self):
        specs = [make_spec("bm")] * 3
        x0 = [np.array([0.0]), np.array([-0.5, 0.5]), np.array([-1.0, 0.0, 1.0])]
        pb = rs.simulate_gt(specs, x0, T=0.4, dt=1e-3, n_paths=500, seed=8)
        l1, l2, l3 = (pb.terminal(k) for k in range(3))
        assert np.all(l2[:, 0] <= l1[:, 0] + 1e-12) and np.all(l1[:, 0] <= l2[:, 1] + 1e-12)
        assert np.all(l3[:, 0] <= l2[:, 0] + 1e-12) and np.all(l2[:, 1] <= l3[:, 2] + 1e-12)

    def test_besq_ladder_dimensions(self):
        # level spec dimensions must decrease by two toward the bottom
        specs = [make_spec("besq:6"), make_spec("besq:4"), make_spec("besq:2")]
        x0 = [np.array([1.0]), np.array([0.5, 1.5]), np.array([0.2, 1.0, 2.0])]
        pb = rs.simulate_gt(specs, x0, T=0.2, dt=1e-3, n_paths=200, seed=4)
        assert pb.terminal(2).shape == (200, 3)

    def test_size_validation(self):
        specs = [make_spec("bm")] * 2
        with pytest.raises(ValueError):
            rs.simulate_gt(specs, [np.array([0.0]), np.array([-1.0, 0.0, 1.0])],
                           T=0.1, dt=1e-2, n_paths=5, seed=0)

    def test_symplectic_pattern_half_line(self):
        # alternating sizes 1,1: the second level, reflected upward off the
        # first, evolves as the scale-conditioned motion from the origin
        from interlace_lab.harness.checks import bes3_cdf

        t0 = 1e-3
        specs = [make_spec("bm_halfline:refl"), make_spec("bm_halfline:abs")]

        def init(n):
            rng = np.random.default_rng(41)
            y = np.abs(rng.normal(0.0, math.sqrt(t0), size=(n, 1)))
            xh = y + np.abs(rng.normal(0.0, math.sqrt(t0), size=(n, 1)))
            return [y, xh]

        pb = rs.simulate_gt(specs, init, T=1.0, dt=1e-3, n_paths=8000, seed=44, t0=t0)
        xh = np.sort(pb.terminal(1)[:, 0])
        # x from ~0: conditioned law has density prop. z^2 e^{-z^2/2t}
        z = xh
        F = (bes3_cdf(z, x=1e-4, t=1.0))
        n = len(z)
        ks = max(np.max(np.arange(1, n + 1) / n - F), np.max(F - np.arange(n) / n))
        assert ks < 0.05
        # interlacing across the equal-size step
        assert np.all(pb.terminal(1)[:, 0] >= pb.terminal(0)[:, 0] - 1e-12)


class TestEdgeSimulation:
    def test_single_particle_is_plain_diffusion(self):
        pb = rs.simulate_edge(make_spec("bm"), 1, "right", np.array([0.0]), T=1.0,
                              dt=1e-3, n_paths=20000, seed=6)
        xs = pb.terminal(0)[:, 0]
        assert xs.var() == pytest.approx(1.0, abs=0.03)

    def test_ladder_specs(self):
        assert rs.edge_ladder_spec(make_spec("besq:2"), 2, 1).name == "besq:4"
        assert rs.edge_ladder_spec(make_spec("besq:2"), 2, 2).name == "besq:2"
        assert rs.edge_ladder_spec(make_spec("lag:2"), 3, 1).name == "lag:6"
        assert rs.edge_ladder_spec(make_spec("jac:1,1"), 2, 1).name == "jac:2,2"
        assert rs.edge_ladder_spec(make_spec("gbm:1"), 2, 1).name == "gbm:2"
        assert rs.edge_ladder_spec(make_spec("bm"), 4, 2).name == "bm"

    def test_right_edge_ordering_maintained(self):
        pb = rs.simulate_edge(make_spec("bm"), 3, "right", np.zeros(3), T=0.5,
                              dt=1e-3, n_paths=300, seed=14, record_stride=50)
        arr = pb.levels[0]
        assert np.all(np.diff(arr, axis=-1) >= -1e-12)

    def test_left_edge_ordering_maintained(self):
        pb = rs.simulate_edge(make_spec("besq:2"), 2, "left", np.array([2e-4, 1e-4]),
                              T=0.5, dt=1e-3, n_paths=300, seed=15, record_stride=50)
        arr = pb.levels[0]
        assert np.all(np.diff(arr, axis=-1) <= 1e-12)

    def test_boundary_assumption_enforced(self):
        with pytest.raises(ValueError):
            rs.simulate_edge(make_spec("bm_halfline:refl"), 2, "right",
                             np.array([0.5, 1.0]), T=0.1, dt=1e-3, n_paths=10, seed=0)


class TestBlockKernelMonteCarlo:
    def test_two_level_density_matches_kernel_smoothing(self):
        # raw dual dynamics (killing at collisions) against the block
        # determinant, by product-kernel smoothing at one configuration
        import numpy as np
        from interlace_lab import twolevel as tl

        bm = make_spec("bm")
        sys_ = tl.TwoLevelSystem(bm, tl.Shape.NNP1)
        z = (np.array([-1.0, 1.0]), np.array([0.0]))
        q_exact = float(tl.block_kernel(sys_, 1.0, z, z))
        pb = rs.simulate_two_level(bm, Shape.NNP1, z[0], z[1], T=1.0, dt=1e-3,
                                   n_paths=60000, seed=33)
        alive = pb.alive
        X = pb.terminal(1)[alive]
        Y = pb.terminal(0)[alive]
        h = 0.17
        w = np.exp(-0.5 * ((X[:, 0] + 1.0) ** 2 + (X[:, 1] - 1.0) ** 2 + Y[:, 0] ** 2) / h**2)
        est = w.sum() / pb.tau.shape[0] / (h * math.sqrt(2 * math.pi)) ** 3
        assert est == pytest.approx(q_exact, rel=0.1)
