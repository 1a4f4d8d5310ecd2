import numpy as np
import pytest

from interlace_lab import kmgroup as km
from interlace_lab import twolevel as tl
from interlace_lab.diffusion1d import conjugate, kernel, make_spec
from interlace_lab.quadrature import gl_nodes


@pytest.fixture(scope="module")
def bm_sys():
    return tl.TwoLevelSystem(make_spec("bm"), tl.Shape.NNP1)


@pytest.fixture(scope="module")
def half_sys():
    return tl.TwoLevelSystem(make_spec("bm_halfline:abs"), tl.Shape.NN)


class TestShapes:
    def test_boundary_assumptions_enforced(self):
        with pytest.raises(tl.BoundaryAssumptionError):
            tl.TwoLevelSystem(make_spec("bm_halfline:refl"), tl.Shape.NN)
        with pytest.raises(tl.BoundaryAssumptionError):
            tl.TwoLevelSystem(make_spec("bm_halfline:abs"), tl.Shape.NNP1)
        tl.TwoLevelSystem(make_spec("besq:3"), tl.Shape.NNP1)  # entrance ok

    def test_config_validation(self):
        with pytest.raises(ValueError):
            tl.InterlacingConfig(tl.Shape.NNP1, np.array([0.0, 1.0]), np.array([2.0]))
        with pytest.raises(ValueError):
            tl.InterlacingConfig(tl.Shape.NNP1, np.array([0.0, 1.0]), np.array([0.2, 0.4]))
        cfg = tl.InterlacingConfig(tl.Shape.NNP1, np.array([0.0, 1.0]), np.array([0.5]))
        assert cfg.x.shape == (2,)

    def test_weak_interlacing_allowed(self):
        tl.InterlacingConfig(tl.Shape.NN, np.array([0.5, 1.0]), np.array([0.5, 1.0]))


class TestBlockKernel:
    def test_no_y_level_reduces_to_kernel(self, bm_sys):
        q = tl.block_kernel(bm_sys, 0.7, (np.array([0.2]), np.zeros(0)), (np.array([0.9]), np.zeros(0)))
        assert float(q) == pytest.approx(float(kernel(make_spec("bm")).density(0.7, 0.2, 0.9)), rel=1e-12)

    def test_equal_starting_y_rows_vanish(self, bm_sys):
        z = (np.array([-1.0, 0.0, 1.0]), np.array([0.3, 0.3]))
        zp = (np.array([-1.2, 0.1, 1.1]), np.array([-0.2, 0.6]))
        assert abs(float(tl.block_kernel(bm_sys, 0.5, z, zp))) < 1e-14

    def test_positive_on_random_configurations(self, bm_sys):
        rng = np.random.default_rng(0)
        bad = 0
        for _ in range(1000):
            x = np.sort(rng.normal(0, 1, 3))
            y = rng.uniform(x[:-1], x[1:])
            xp = np.sort(rng.normal(0, 1, 3))
            yp = rng.uniform(xp[:-1], xp[1:])
            q = float(tl.block_kernel(bm_sys, 0.5, (x, y), (xp, yp)))
            bad += q < -1e-12
        assert bad == 0

    def test_positive_besq_random(self):
        sysb = tl.TwoLevelSystem(make_spec("besq:3"), tl.Shape.NNP1)
        rng = np.random.default_rng(1)
        for _ in range(300):
            x = np.sort(rng.uniform(0.1, 5.0, 2))
            y = rng.uniform(x[:-1], x[1:])
            xp = np.sort(rng.uniform(0.1, 5.0, 2))
            yp = rng.uniform(xp[:-1], xp[1:])
            assert float(tl.block_kernel(sysb, 0.4, (x, y), (xp, yp))) > -1e-12

    def test_collapse_onto_dual_determinant(self, bm_sys):
        z = (np.array([-1.0, 1.0]), np.array([0.0]))
        assert tl.collapse_residual(bm_sys, 1.0, z, np.array([0.3])) < 1e-10

    def test_collapse_halfline(self, half_sys):
        z = (np.array([1.0]), np.array([0.4]))
        assert tl.collapse_residual(half_sys, 0.5, z, np.array([0.8])) < 1e-9


class TestMass:
    def test_submarkov_mass_in_unit_interval(self, bm_sys):
        z = (np.array([-1.0, 1.0]), np.array([0.0]))
        m = tl.submarkov_mass(bm_sys, 0.5, z)
        assert 0.0 < m <= 1.0 + 1e-6

    def test_single_y_on_full_line_is_conservative(self, bm_sys):
        # a single dual particle on the full line cannot be killed
        z = (np.array([-1.0, 1.0]), np.array([0.0]))
        assert tl.submarkov_mass(bm_sys, 0.5, z) == pytest.approx(1.0, abs=1e-5)

    def test_small_time_mass_one(self, bm_sys):
        z = (np.array([-1.0, 1.0]), np.array([0.0]))
        assert tl.submarkov_mass(bm_sys, 0.01, z) == pytest.approx(1.0, abs=1e-3)

    def test_q_h_transform_total_mass_one(self, bm_sys):
        z = (np.array([-1.0, 1.0]), np.array([0.0]))
        m = tl.q_h_mass(bm_sys, km.vandermonde(1), 0.5, z)
        assert m == pytest.approx(1.0, abs=1e-5)


class TestLambda:
    def test_bm_unit_integral_is_gap(self):
        x = np.array([-1.0, 1.0])
        val = tl.lambda_apply(make_spec("bm"), tl.Shape.NNP1,
                              lambda xr, yr: np.ones(yr.shape[0]), x)
        assert val == pytest.approx(x[1] - x[0], rel=1e-12)

    def test_normalized_kernel_has_mass_one(self):
        x = np.array([-1.0, 1.0])
        val = tl.lambda_apply(make_spec("bm"), tl.Shape.NNP1,
                              lambda xr, yr: np.ones(yr.shape[0]), x,
                              h_hat=km.vandermonde(1))
        assert val == pytest.approx(1.0, rel=1e-12)

    def test_halfline_fiber_is_uniform(self):
        # the normalized fiber law of the half-line pair is uniform on [0, x]
        x = np.array([1.5])
        mean = tl.lambda_apply(make_spec("bm_halfline:abs"), tl.Shape.NN,
                               lambda xr, yr: yr[:, 0], x, h_hat=km.vandermonde(1))
        assert mean == pytest.approx(0.75, rel=1e-10)

    def test_divergent_fiber_reported(self):
        # equal-count shape over the full line: the fiber weight integral
        # has no finite normalization
        with pytest.raises(ArithmeticError):
            tl.lambda_apply(make_spec("bm"), tl.Shape.NN,
                            lambda xr, yr: np.ones(yr.shape[0]), np.array([0.0]))

    def test_fiber_sampler_matches_density(self):
        rng = np.random.default_rng(11)
        x = np.array([0.0, 2.0])
        s = tl.sample_interlacing_fiber(rng, make_spec("bm"), tl.Shape.NNP1, x, size=20000)
        assert s.shape == (20000, 1)
        assert np.all((s >= 0.0) & (s <= 2.0))
        # uniform on [0, 2]
        assert np.mean(s) == pytest.approx(1.0, abs=0.02)
        assert np.mean(s**2) == pytest.approx(4.0 / 3.0, abs=0.04)


class TestIdentities:
    def test_projection_identity_constant_function(self, bm_sys):
        z = (np.array([-1.0, 1.0]), np.array([0.0]))
        assert tl.dynkin_residual(bm_sys, 0.5, lambda yp: np.ones(yp.shape[0]), z) < 1e-5

    def test_projection_identity_coordinate(self, bm_sys):
        z = (np.array([-1.0, 1.0]), np.array([0.0]))
        assert tl.dynkin_residual(bm_sys, 0.5, lambda yp: yp[:, 0], z) < 1e-4

    def test_projection_identity_besq_nn(self):
        sysb = tl.TwoLevelSystem(make_spec("besq:1:abs"), tl.Shape.NN)
        z = (np.array([1.5]), np.array([0.7]))
        f = lambda yp: np.exp(-0.5 * (yp[:, 0] - 1.0) ** 2)
        assert tl.dynkin_residual(sysb, 0.4, f, z, n_nodes=40) < 1e-3

    def test_master_identity_three_families(self):
        cases = [
            (tl.TwoLevelSystem(make_spec("bm"), tl.Shape.NNP1),
             km.vandermonde(1), np.array([-1.0, 1.0]), np.array([0.0])),
            (tl.TwoLevelSystem(make_spec("bm_halfline:abs"), tl.Shape.NN),
             km.vandermonde(1), np.array([1.2]), np.array([0.6])),
            (tl.TwoLevelSystem(make_spec("besq:3"), tl.Shape.NNP1),
             km.eigenfunction_catalog(make_spec("besq:-1"), 1),
             np.array([1.0, 3.0]), np.array([2.0])),
        ]
        for sys_, h_hat, x, yc in cases:
            fs = tl.test_function_basis(x, yc)
            res = tl.master_intertwining_residual(sys_, h_hat, 0.5, fs, x)
            assert max(res) < 1e-4

    def test_negative_controls_fail_loudly(self, bm_sys):
        x = np.array([-1.0, 1.0])
        fs = tl.test_function_basis(x, np.array([0.0]))
        for perturb in ("indicator", "c_sign"):
            res = tl.master_intertwining_residual(bm_sys, km.vandermonde(1), 0.5, fs, x,
                                                  perturb=perturb)
            assert max(res) > 1e-2

    def test_appendix_intertwining_unnormalized(self):
        # killed semigroup composed with the weight integral equals the
        # weight integral of the conservative dual: closed forms for BM
        spec = make_spec("bm_halfline:abs")
        kern = kernel(spec)
        dual = kernel(conjugate(spec))
        f = lambda y: np.exp(-0.5 * (y - 1.0) ** 2)
        x, t = 1.3, 0.5

        def lam_f(u):
            zi, wi = gl_nodes(0.0, u, 160)
            return float(np.dot(wi, f(zi)))

        zs, ws = gl_nodes(0.0, 14.0, 300)
        lhs = float(np.dot(ws, kern.density(t, x, zs) * np.vectorize(lam_f)(zs)))
        ui, wi = gl_nodes(0.0, x, 160)
        phat_f = np.array([np.dot(ws, dual.density(t, u, zs) * f(zs)) for u in ui])
        rhs = float(np.dot(wi, phat_f))
        assert lhs == pytest.approx(rhs, abs=1e-8)


class TestEntranceTransport:
    def test_entrance_law_pushforward_consistency(self, bm_sys):
        # the degenerate-start law of the x level, spread over its fiber by
        # the normalized interlacing kernel, is an entrance law for the
        # two-level dynamics: nu_s Q_t = nu_{s+t} at a probe configuration
        from interlace_lab import kmgroup as km
        from interlace_lab.quadrature import ordered_nodes, stacked_box_nodes

        elaw = km.entrance_law("gue", 2)
        s = t = 0.4
        zp = (np.array([-0.6, 0.9]), np.array([0.2]))
        xb, wx = ordered_nodes(2, -6.5, 6.5, 56)
        flo, fhi = tl.fiber_bounds(xb, tl.Shape.NNP1)
        yb, wy, outer = stacked_box_nodes(flo, fhi, 24)
        gap = (xb[:, 1] - xb[:, 0])[outer]
        nu_s = elaw.density(s, xb)[outer] / np.maximum(gap, 1e-300)
        q = tl.block_kernel(bm_sys, t, (xb[outer], yb), zp)
        lhs = float(np.dot(wx[outer] * wy, nu_s * q))
        rhs = elaw.density(s + t, zp[0][None, :]).item() / (zp[0][1] - zp[0][0])
        assert lhs == pytest.approx(rhs, rel=2e-4)


class TestChapman:
    def test_one_dimensional_closed_form(self):
        kern = kernel(make_spec("bm"))
        zs, ws = gl_nodes(-10.0, 10.0, 300)
        conv = float(np.dot(ws, kern.density(0.5, 0.1, zs) * kern.density(0.5, zs, 0.6)))
        assert conv == pytest.approx(float(kern.density(1.0, 0.1, 0.6)), abs=1e-10)

    def test_two_level_semigroup_property(self, bm_sys):
        z = (np.array([-1.0, 1.0]), np.array([0.0]))
        z2 = (np.array([-0.8, 1.3]), np.array([0.4]))
        assert tl.chapman_residual(bm_sys, 0.5, 0.5, z, z2) < 1e-3

    def test_delta_limit_leg_stays_controlled(self, bm_sys):
        # as the first leg shrinks toward the delta limit the identity must
        # keep holding (the quadrature sees an increasingly peaked factor)
        z = (np.array([-1.0, 1.0]), np.array([0.0]))
        z2 = (np.array([-0.9, 1.2]), np.array([0.3]))
        assert tl.chapman_residual(bm_sys, 0.15, 0.85, z, z2, n_nodes=56) < 2e-3
        assert tl.chapman_residual(bm_sys, 0.08, 0.92, z, z2, n_nodes=64) < 2e-3
