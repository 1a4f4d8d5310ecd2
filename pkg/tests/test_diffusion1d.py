import math

import numpy as np
import pytest

from interlace_lab.diffusion1d import (
    Boundary,
    CatalogError,
    DegenerateInputError,
    DUAL_FELLER,
    FellerClass,
    InconclusiveBoundaryError,
    TruncationError,
    classify_boundary,
    conjugate,
    conjugate_density_residual,
    duality_residual,
    kernel,
    make_spec,
    scale_speed,
    spectral_basis,
    symmetry_residual,
    validate_spec,
)


class TestScaleSpeed:
    def test_bm_constant_scale(self):
        ss = scale_speed(make_spec("bm"))
        x = np.linspace(-3, 3, 7)
        assert np.allclose(ss.s_prime(x), 1.0)
        assert np.allclose(ss.m(x), 2.0)

    def test_ou_direct_integration(self):
        ss = scale_speed(make_spec("ou"))
        x = np.linspace(-2, 2, 9)
        assert np.allclose(ss.s_prime(x), np.exp(x**2), rtol=1e-12)
        assert np.allclose(ss.m(x), 2 * np.exp(-(x**2)), rtol=1e-12)

    def test_besq_symbolic_vs_numeric(self):
        # closed forms against direct quadrature of the defining integrals
        from scipy.integrate import quad

        spec = make_spec("besq:3")
        ss = scale_speed(spec)
        for x in (0.4, 1.7, 3.2):
            log_sp, _ = quad(lambda y: spec.b(y) / spec.a(y), 1.0, x)
            assert ss.s_prime(x) == pytest.approx(math.exp(-log_sp), rel=1e-10)
            s_num, _ = quad(lambda y: y ** -1.5, 1.0, x)
            assert ss.s(x) == pytest.approx(s_num, rel=1e-10)
        assert np.allclose(ss.s_prime(2.0), 2.0**-1.5)
        assert np.allclose(ss.m(2.0), 2.0**0.5 / 2)

    @pytest.mark.parametrize("sid", ["bm", "ou", "besq:2.5", "lag:3", "jac:1,1", "gbm:1"])
    def test_m_sp_a_identity(self, sid):
        spec = make_spec(sid)
        ss = scale_speed(spec)
        lo, hi = spec.interval
        lo = max(lo + 0.05, spec.c - 2)
        hi = min(hi - 0.05 if np.isfinite(hi) else np.inf, spec.c + 2)
        x = np.linspace(lo, hi, 11)
        assert np.max(np.abs(ss.m(x) * ss.s_prime(x) * spec.a(x) - 1.0)) < 1e-12

    @pytest.mark.parametrize("sid", ["bm", "ou", "besq:3", "lag:2", "jac:1,1", "gbm:1"])
    def test_validate_passes_catalog(self, sid):
        validate_spec(make_spec(sid))

    def test_nonintegrable_drift_ratio_rejected(self):
        from dataclasses import replace

        from interlace_lab.diffusion1d import CoefficientDomainError
        from interlace_lab.diffusion1d.core import numeric_scale_speed

        bad = replace(
            make_spec("bm"), name="bad", family="", scale=None,
            b=lambda x: 1.0 / np.maximum(np.abs(np.asarray(x, float)), 1e-300),
        )
        with pytest.raises(CoefficientDomainError):
            numeric_scale_speed(bad)

    def test_numeric_scale_speed_matches_closed_forms(self):
        from dataclasses import replace

        from interlace_lab.diffusion1d.core import numeric_scale_speed

        spec = make_spec("besq:3")
        num = numeric_scale_speed(replace(spec, scale=None))
        for x in (0.4, 1.0, 2.7):
            assert num.s_prime(x) == pytest.approx(spec.scale.s_prime(x), rel=1e-9)
            assert num.M(x) == pytest.approx(spec.scale.M(x), rel=1e-9)


class TestConjugate:
    @pytest.mark.parametrize(
        "sid,dual",
        [
            ("besq:3", "besq:-1"),
            ("bm", "bm"),
            ("gbm:1", "gbm:0"),
            ("ou", "ou_out"),
            ("bm_halfline:refl", "bm_halfline:abs"),
            ("bm_interval:refl,abs", "bm_interval:abs,refl"),
        ],
    )
    def test_catalog_images(self, sid, dual):
        assert conjugate(make_spec(sid)).name == dual

    def test_involution(self):
        spec = make_spec("besq:2.5")
        back = conjugate(conjugate(spec))
        x = np.linspace(0.2, 4.0, 9)
        assert np.allclose(back.b(x), spec.b(x))
        assert back.behavior_l == spec.behavior_l

    @pytest.mark.parametrize("sid", ["bm", "ou", "besq:3", "besq:1", "gbm:1", "lag:2"])
    def test_scale_speed_swap(self, sid):
        spec = make_spec(sid)
        ss = scale_speed(spec)
        css = scale_speed(conjugate(spec))
        lo = max(spec.interval[0] + 0.1, spec.c - 2)
        x = np.linspace(lo, spec.c + 2, 9)
        assert np.max(np.abs(css.s_prime(x) / ss.m(x) - 1.0)) < 1e-10
        assert np.max(np.abs(css.m(x) / ss.s_prime(x) - 1.0)) < 1e-10

    def test_generic_conjugate_drift(self):
        # non-catalog spec goes through the generic a' - b rule
        from dataclasses import replace

        spec = replace(make_spec("besq:3"), family="", name="custom", scale=None)
        dual = conjugate(spec)
        x = np.linspace(0.3, 3.0, 7)
        assert np.allclose(dual.b(x), 2.0 - spec.b(x))


class TestClassify:
    @pytest.mark.parametrize(
        "sid,end,expected",
        [
            ("besq:3", "l", FellerClass.ENTRANCE),
            ("besq:1", "l", FellerClass.REGULAR),
            ("besq:-1", "l", FellerClass.EXIT),
            ("bm", "r", FellerClass.NATURAL),
            ("bm", "l", FellerClass.NATURAL),
            ("ou", "r", FellerClass.NATURAL),
            ("jac:1,1", "l", FellerClass.ENTRANCE),
            ("gbm:1", "l", FellerClass.NATURAL),
            ("gbm:1", "r", FellerClass.NATURAL),
            ("lag:3", "l", FellerClass.ENTRANCE),
        ],
    )
    def test_classes(self, sid, end, expected):
        assert classify_boundary(make_spec(sid), end) is expected

    @pytest.mark.parametrize("sid", ["besq:0.5", "besq:2", "jac:1,1", "gbm:1"])
    def test_conjugate_table_image(self, sid):
        spec = make_spec(sid)
        dual = conjugate(spec)
        for end in ("l", "r"):
            assert classify_boundary(dual, end) is DUAL_FELLER[classify_boundary(spec, end)]

    def test_inconclusive_error_carries_values(self):
        err = InconclusiveBoundaryError(1.0, 2.0)
        assert err.n_value == 1.0 and err.sigma_value == 2.0


class TestKernels:
    def test_bm_heat_kernel_value(self):
        k = kernel(make_spec("bm"))
        assert float(k.density(1.0, 0.0, 0.0)) == pytest.approx(1 / math.sqrt(2 * math.pi), abs=1e-7)

    def test_absorbed_halfline_atom(self):
        k = kernel(make_spec("bm_halfline:abs"))
        assert float(k.atom_l(1.0, 1.0)) == pytest.approx(0.3173105078629141, abs=1e-12)

    @pytest.mark.parametrize(
        "sid,t,x",
        [
            ("bm", 0.7, 0.3),
            ("bm_halfline:refl", 1.0, 0.5),
            ("bm_halfline:abs", 1.0, 0.5),
            ("ou", 0.5, -0.4),
            ("besq:3", 0.8, 1.5),
            ("besq:1", 0.8, 1.5),
            ("besq:1:abs", 0.8, 1.5),
            ("lag:2", 0.6, 1.0),
            ("gbm:1", 0.5, 1.0),
            ("jac:1,1", 0.4, 0.3),
            ("bm_interval:refl,refl", 0.5, 1.0),
            ("bm_interval:abs,abs", 0.5, 1.0),
            ("bm_interval:refl,abs", 0.5, 1.0),
        ],
    )
    def test_total_mass_one(self, sid, t, x):
        # interior mass plus boundary atoms is conservative
        k = kernel(make_spec(sid))
        assert k.total_mass(t, x) == pytest.approx(1.0, abs=5e-7)

    def test_killed_mass_below_one(self):
        k = kernel(make_spec("besq:-1"))
        lo, hi = k.window(1.0, 2.0)
        from interlace_lab.quadrature import gl_nodes

        z, w = gl_nodes(lo, hi, 300)
        interior = float(np.dot(w, k.density(1.0, 2.0, z)))
        assert interior < 1.0
        assert interior + float(k.atom_l(1.0, 2.0)) == pytest.approx(1.0, abs=1e-6)

    def test_unsupported_family_raises(self):
        with pytest.raises(CatalogError):
            make_spec("levy:1")

    def test_spectral_truncation_error(self):
        with pytest.raises(TruncationError):
            kernel(make_spec("jac:1,1")).density(1e-8, 0.4, 0.6)

    def test_interval_spectral_matches_images(self):
        # two independent representations of the same kernel
        from interlace_lab.kmgroup import spectral_km

        k = kernel(make_spec("bm_interval:abs,abs"))
        v_img = float(k.density(1.0, 1.0, 2.0))
        v_ser = spectral_km(make_spec("bm_interval:abs,abs"), 1, 1.0,
                            np.array([1.0]), np.array([2.0])).item()
        assert abs(v_img - v_ser) < 1e-8

    @pytest.mark.parametrize("sid", ["bm", "ou", "besq:2.5", "gbm:1", "bm_halfline:refl"])
    def test_derivative_evaluators_match_fd(self, sid):
        from interlace_lab.quadrature import fd_derivative

        k = kernel(make_spec(sid))
        t, x, y = 0.7, 1.1, 1.6
        fd_y = fd_derivative(lambda v: k.density(t, x, v), np.asarray(y), order=1)
        fd_x = fd_derivative(lambda u: k.density(t, u, y), np.asarray(x), order=1)
        assert float(k.dy_derivative(1, t, x, y)) == pytest.approx(float(fd_y), rel=1e-6)
        assert float(k.dx_derivative(1, t, x, y)) == pytest.approx(float(fd_x), rel=1e-6)


class TestDuality:
    @pytest.mark.parametrize(
        "sid,t,x,y,tol",
        [
            ("bm_halfline:refl", 1.0, 0.5, 1.0, 1e-8),
            ("bm", 1.0, 0.3, -0.4, 1e-8),
            ("besq:3", 1.0, 1.0, 2.0, 1e-6),
            ("besq:2.5", 0.7, 1.3, 0.8, 1e-6),
            ("ou", 0.5, 0.0, 1.0, 1e-6),
            ("lag:3", 0.4, 1.0, 2.0, 1e-6),
            ("gbm:1", 0.5, 1.0, 1.5, 1e-6),
            ("jac:1,1", 0.4, 0.4, 0.7, 1e-6),
            ("bm_interval:refl,refl", 0.5, 1.0, 2.0, 1e-6),
        ],
    )
    def test_residuals(self, sid, t, x, y, tol):
        assert duality_residual(make_spec(sid), t, x, y) <= tol

    def test_small_time_indicator_limit(self):
        spec = make_spec("bm")
        k = kernel(spec)
        # x < y: both sides approach 1
        assert float(k.cdf(1e-4, 0.0, 0.5)) == pytest.approx(1.0, abs=1e-12)
        assert duality_residual(spec, 1e-4, 0.0, 0.5) < 1e-12

    def test_duality_grid_property(self):
        # residual small across an (x, y, t) grid for a dual pair with atoms
        spec = make_spec("besq:3")
        worst = 0.0
        for t in (0.3, 0.8):
            for x in np.linspace(0.5, 3.0, 4):
                for y in np.linspace(0.6, 3.5, 4):
                    worst = max(worst, duality_residual(spec, t, float(x), float(y)))
        assert worst < 1e-6

    @pytest.mark.parametrize(
        "sid,t,x,y",
        [
            ("bm", 1.0, 0.2, 0.7),
            ("ou", 0.5, 0.0, 1.0),
            ("besq:3", 0.8, 1.5, 2.0),
        ],
    )
    def test_conjugate_density_relation(self, sid, t, x, y):
        assert conjugate_density_residual(make_spec(sid), t, x, y) < 1e-7

    def test_degenerate_step_raises(self):
        with pytest.raises(DegenerateInputError):
            conjugate_density_residual(make_spec("besq:3"), 0.5, 1.0, 1e-9)

    @pytest.mark.parametrize(
        "sid,t,x,y",
        [("bm", 1.0, 0.2, 0.7), ("ou", 0.5, 0.3, 1.0), ("besq:2.5", 0.8, 1.5, 2.0),
         ("lag:2", 0.5, 1.0, 2.2), ("jac:1,1", 0.4, 0.3, 0.6)],
    )
    def test_speed_measure_reversibility(self, sid, t, x, y):
        assert symmetry_residual(make_spec(sid), t, x, y) < 1e-10


class TestSpectralBases:
    @pytest.mark.parametrize("sid", ["ou", "lag:3", "jac:1,1", "bm_interval:abs,abs"])
    def test_orthonormality(self, sid):
        from interlace_lab.quadrature import gl_nodes

        spec = make_spec(sid)
        basis = spectral_basis(spec)
        lo, hi = spec.interval
        if np.isfinite(lo) and np.isinf(hi):
            # half line: integrate in u = sqrt(y) to tame the speed density
            u, w = gl_nodes(0.0, 7.0, 500)
            z, w = u * u, w * 2.0 * u
        else:
            lo = lo if np.isfinite(lo) else -9.0
            hi = hi if np.isfinite(hi) else 9.0
            z, w = gl_nodes(lo + 1e-12, hi, 400)
        for j in range(3):
            for k in range(j, 3):
                val = float(np.dot(w, basis.phi(j, z) * basis.phi(k, z) * basis.m(z)))
                assert val == pytest.approx(1.0 if j == k else 0.0, abs=5e-7)
