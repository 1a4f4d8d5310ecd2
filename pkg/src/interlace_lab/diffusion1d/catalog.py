"""Kernel catalog for the supported diffusion families.

Families and string ids (parameters after the colon):

    bm                       standard Brownian motion, a = 1/2
    bm_drift:mu              Brownian motion with drift
    ou                       Ornstein-Uhlenbeck, a = 1/2, b = -x
    ou_out                   outward OU (b = +x); arises as the dual of ou
    besq:d[:abs]             squared Bessel, a = 2x, b = d; ':abs' kills at 0
    lag:alpha                Laguerre a = 2x, b = alpha - 2x
    lag_dual:alpha           dual of lag (exit at 0)
    jac:beta,gamma           Jacobi a = 2x(1-x), b = 2(beta-(beta+gamma)x)
    jac_dual:beta,gamma      dual of jac (exit at both ends)
    gbm:alpha                geometric BM a = x^2/2, b = alpha x
    bm_halfline:refl|abs     BM on [0, inf) reflected/absorbed at 0
    bm_interval:b0,b1        BM on [0, pi], b in {refl, abs} per endpoint

Closed forms: Gaussian families, image method on the half line and the
interval, lognormal, ncx2-type squared-Bessel/Laguerre forms.  Spectral
series: sine/cosine on the interval, Hermite for ou, generalized Laguerre
for lag, Jacobi polynomials for jac.  Duals of lag/jac are h-transforms of
parameter-shifted members of the same family.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
from scipy import special as sc

from ..quadrature import gl_nodes
from .core import (
    Boundary,
    CatalogError,
    DiffusionSpec,
    ScaleSpeed,
    TransitionKernel,
    TruncationError,
    cdf_from_density,
    numeric_scale_speed,
    swapped_scale_speed,
)

_SQRT2PI = math.sqrt(2.0 * math.pi)
_WINDOW_SD = 8.0  # quadrature truncation, in standard deviations


def _npdf(z):
    return np.exp(-0.5 * z * z) / _SQRT2PI


def _gpdf(u, var):
    return np.exp(-0.5 * u * u / var) / np.sqrt(2.0 * math.pi * var)


def _Phi(z):
    return sc.ndtr(z)


def _hermite_e(n: int, z):
    """Probabilists' Hermite He_n by recurrence, vectorised in z."""
    z = np.asarray(z, float)
    if n == 0:
        return np.ones_like(z)
    hkm1, hk = np.ones_like(z), z.copy()
    for k in range(1, n):
        hkm1, hk = hk, z * hk - k * hkm1
    return hk


# ---------------------------------------------------------------------------
# spec construction
# ---------------------------------------------------------------------------


def _const(v):
    return lambda x: np.full_like(np.asarray(x, float), v)


def _closed_scale(s_prime, m, s, M, log_sp, log_m):
    return ScaleSpeed(s_prime=s_prime, m=m, s=s, M=M, log_s_prime=log_sp, log_m=log_m)


def _bm_like_scale(c):
    return _closed_scale(
        s_prime=_const(1.0),
        m=_const(2.0),
        s=lambda x: np.asarray(x, float) - c,
        M=lambda x: 2.0 * (np.asarray(x, float) - c),
        log_sp=_const(0.0),
        log_m=_const(math.log(2.0)),
    )


def _closed_scale_named(**kw):
    return _closed_scale(
        kw["s_prime"], kw["m"], kw["s"], kw["M"], kw["log_sp"], kw["log_m"]
    )


@functools.lru_cache(maxsize=256)
def make_spec(spec_id: str) -> DiffusionSpec:
    """Build a catalog spec from its string id (e.g. 'besq:3', 'jac:1,1')."""
    parts = spec_id.split(":")
    fam = parts[0]
    if fam == "bm":
        return DiffusionSpec(
            name="bm",
            a=_const(0.5),
            b=_const(0.0),
            a_prime=_const(0.0),
            interval=(-np.inf, np.inf),
            behavior_l=Boundary.NATURAL,
            behavior_r=Boundary.NATURAL,
            c=0.0,
            family="bm",
            scale=_bm_like_scale(0.0),
        )
    if fam == "bm_drift":
        mu = float(parts[1])
        if mu == 0.0:
            return make_spec("bm")
        sp = lambda x: np.exp(-2.0 * mu * np.asarray(x, float))
        return DiffusionSpec(
            name=f"bm_drift:{mu:g}",
            a=_const(0.5),
            b=_const(mu),
            a_prime=_const(0.0),
            interval=(-np.inf, np.inf),
            behavior_l=Boundary.NATURAL,
            behavior_r=Boundary.NATURAL,
            c=0.0,
            family="bm_drift",
            params=(mu,),
            scale=_closed_scale(
                s_prime=sp,
                m=lambda x: 2.0 * np.exp(2.0 * mu * np.asarray(x, float)),
                s=lambda x: (1.0 - np.exp(-2.0 * mu * np.asarray(x, float)))
                / (2.0 * mu),
                M=lambda x: (np.exp(2.0 * mu * np.asarray(x, float)) - 1.0) / mu,
                log_sp=lambda x: -2.0 * mu * np.asarray(x, float),
                log_m=lambda x: math.log(2.0) + 2.0 * mu * np.asarray(x, float),
            ),
        )
    if fam in ("ou", "ou_out"):
        sgn = -1.0 if fam == "ou" else 1.0  # drift b = sgn * x
        return DiffusionSpec(
            name=fam,
            a=_const(0.5),
            b=lambda x: sgn * np.asarray(x, float),
            a_prime=_const(0.0),
            interval=(-np.inf, np.inf),
            behavior_l=Boundary.NATURAL,
            behavior_r=Boundary.NATURAL,
            c=0.0,
            family=fam,
            scale=_closed_scale(
                s_prime=lambda x: np.exp(-sgn * np.asarray(x, float) ** 2),
                m=lambda x: 2.0 * np.exp(sgn * np.asarray(x, float) ** 2),
                s=(lambda x: (math.sqrt(math.pi) / 2.0) * sc.erfi(x))
                if sgn < 0
                else (lambda x: (math.sqrt(math.pi) / 2.0) * sc.erf(x)),
                M=(lambda x: math.sqrt(math.pi) * sc.erf(x))
                if sgn < 0
                else (lambda x: math.sqrt(math.pi) * sc.erfi(x)),
                log_sp=lambda x: -sgn * np.asarray(x, float) ** 2,
                log_m=lambda x: math.log(2.0) + sgn * np.asarray(x, float) ** 2,
            ),
        )
    if fam == "besq":
        d = float(parts[1])
        killed = len(parts) > 2 and parts[2] == "abs"
        if d <= 0.0:
            killed = True
        if killed and d >= 2.0:
            raise CatalogError("besq absorption at 0 requires d < 2")
        if d >= 2.0:
            bl = Boundary.ENTRANCE
        elif d > 0.0:
            bl = Boundary.REGULAR_ABSORBING if killed else Boundary.REGULAR_REFLECTING
        else:
            bl = Boundary.EXIT
        nu = d / 2.0 - 1.0

        def s_fun(x):
            x = np.asarray(x, float)
            if d == 2.0:
                return np.log(x)
            return (x ** (1.0 - d / 2.0) - 1.0) / (1.0 - d / 2.0)

        def M_fun(x):
            x = np.asarray(x, float)
            if d == 0.0:
                return 0.5 * np.log(x)
            return (x ** (d / 2.0) - 1.0) / d

        return DiffusionSpec(
            name=f"besq:{d:g}" + (":abs" if killed and 0.0 < d < 2.0 else ""),
            a=lambda x: 2.0 * np.asarray(x, float),
            b=_const(d),
            a_prime=_const(2.0),
            interval=(0.0, np.inf),
            behavior_l=bl,
            behavior_r=Boundary.NATURAL,
            c=1.0,
            family="besq",
            params=(d, killed),
            scale=_closed_scale(
                s_prime=lambda x: np.asarray(x, float) ** (-d / 2.0),
                m=lambda x: np.asarray(x, float) ** (d / 2.0 - 1.0) / 2.0,
                s=s_fun,
                M=M_fun,
                log_sp=lambda x: (-d / 2.0) * np.log(x),
                log_m=lambda x: (d / 2.0 - 1.0) * np.log(x) - math.log(2.0),
            ),
        )
    if fam in ("lag", "lag_dual"):
        alpha = float(parts[1])
        if alpha <= 0:
            raise CatalogError("lag requires alpha > 0")
        nu = alpha / 2.0 - 1.0
        if fam == "lag":
            bl = Boundary.ENTRANCE if alpha >= 2.0 else Boundary.REGULAR_REFLECTING
            b_fun = lambda x: alpha - 2.0 * np.asarray(x, float)
            log_sp = lambda x: (-alpha / 2.0) * np.log(x) + (np.asarray(x, float) - 1.0)
        else:
            bl = Boundary.EXIT if alpha >= 2.0 else Boundary.REGULAR_ABSORBING
            b_fun = lambda x: 2.0 - alpha + 2.0 * np.asarray(x, float)
            log_sp = lambda x: (alpha / 2.0) * np.log(x) - (np.asarray(x, float) - 1.0)
        log_a = lambda x: math.log(2.0) + np.log(x)
        return DiffusionSpec(
            name=f"{fam}:{alpha:g}",
            a=lambda x: 2.0 * np.asarray(x, float),
            b=b_fun,
            a_prime=_const(2.0),
            interval=(0.0, np.inf),
            behavior_l=bl,
            behavior_r=Boundary.NATURAL,
            c=1.0,
            family=fam,
            params=(alpha,),
            scale=_closed_scale(
                s_prime=lambda x: np.exp(log_sp(x)),
                m=lambda x: np.exp(-log_sp(x) - log_a(x)),
                s=_numeric_cumulative(lambda x: np.exp(log_sp(x)), 1.0),
                M=_numeric_cumulative(lambda x: np.exp(-log_sp(x) - log_a(x)), 1.0),
                log_sp=log_sp,
                log_m=lambda x: -log_sp(x) - log_a(x),
            ),
        )
    if fam in ("jac", "jac_dual"):
        beta, gamma = (float(v) for v in parts[1].split(","))
        if fam == "jac":
            bb, gg = beta, gamma
        else:
            bb, gg = 1.0 - beta, 1.0 - gamma
        b_fun = lambda x: 2.0 * (bb - (bb + gg) * np.asarray(x, float))
        log_sp = lambda x: -bb * np.log(2.0 * np.asarray(x, float)) - gg * np.log(
            2.0 * (1.0 - np.asarray(x, float))
        )
        log_a = lambda x: np.log(2.0 * np.asarray(x, float) * (1.0 - np.asarray(x, float)))

        def _end(par):
            if par >= 1.0:
                return Boundary.ENTRANCE
            if par > 0.0:
                return Boundary.REGULAR_REFLECTING
            return Boundary.EXIT

        if fam == "jac":
            bl, br = _end(beta), _end(gamma)
        else:
            # dual endpoints of the primal classes
            from .core import DUAL_BOUNDARY

            bl, br = DUAL_BOUNDARY[_end(beta)], DUAL_BOUNDARY[_end(gamma)]
        return DiffusionSpec(
            name=f"{fam}:{beta:g},{gamma:g}",
            a=lambda x: 2.0 * np.asarray(x, float) * (1.0 - np.asarray(x, float)),
            b=b_fun,
            a_prime=lambda x: 2.0 - 4.0 * np.asarray(x, float),
            interval=(0.0, 1.0),
            behavior_l=bl,
            behavior_r=br,
            c=0.5,
            family=fam,
            params=(beta, gamma),
            scale=_closed_scale(
                s_prime=lambda x: np.exp(log_sp(x)),
                m=lambda x: np.exp(-log_sp(x) - log_a(x)),
                s=_numeric_cumulative(lambda x: np.exp(log_sp(x)), 0.5),
                M=_numeric_cumulative(lambda x: np.exp(-log_sp(x) - log_a(x)), 0.5),
                log_sp=log_sp,
                log_m=lambda x: -log_sp(x) - log_a(x),
            ),
        )
    if fam == "gbm":
        alpha = float(parts[1])
        p = 1.0 - 2.0 * alpha  # s' = x^(p-1+...)

        def s_fun(x):
            x = np.asarray(x, float)
            if alpha == 0.5:
                return np.log(x)
            return (x ** (1.0 - 2.0 * alpha) - 1.0) / (1.0 - 2.0 * alpha)

        def M_fun(x):
            x = np.asarray(x, float)
            if alpha == 0.5:
                return 2.0 * np.log(x)
            return 2.0 * (x ** (2.0 * alpha - 1.0) - 1.0) / (2.0 * alpha - 1.0)

        return DiffusionSpec(
            name=f"gbm:{alpha:g}",
            a=lambda x: 0.5 * np.asarray(x, float) ** 2,
            b=lambda x: alpha * np.asarray(x, float),
            a_prime=lambda x: np.asarray(x, float),
            interval=(0.0, np.inf),
            behavior_l=Boundary.NATURAL,
            behavior_r=Boundary.NATURAL,
            c=1.0,
            family="gbm",
            params=(alpha,),
            scale=_closed_scale(
                s_prime=lambda x: np.asarray(x, float) ** (-2.0 * alpha),
                m=lambda x: 2.0 * np.asarray(x, float) ** (2.0 * alpha - 2.0),
                s=s_fun,
                M=M_fun,
                log_sp=lambda x: -2.0 * alpha * np.log(x),
                log_m=lambda x: math.log(2.0) + (2.0 * alpha - 2.0) * np.log(x),
            ),
        )
    if fam == "bm_halfline":
        mode = parts[1]
        if mode not in ("refl", "abs"):
            raise CatalogError("bm_halfline mode must be refl or abs")
        return DiffusionSpec(
            name=f"bm_halfline:{mode}",
            a=_const(0.5),
            b=_const(0.0),
            a_prime=_const(0.0),
            interval=(0.0, np.inf),
            behavior_l=Boundary.REGULAR_REFLECTING
            if mode == "refl"
            else Boundary.REGULAR_ABSORBING,
            behavior_r=Boundary.NATURAL,
            c=1.0,
            family="bm_halfline",
            params=(mode,),
            scale=_bm_like_scale(1.0),
        )
    if fam == "bm_interval":
        b0, b1 = parts[1].split(",")
        for v in (b0, b1):
            if v not in ("refl", "abs"):
                raise CatalogError("bm_interval modes must be refl or abs")
        to_b = {
            "refl": Boundary.REGULAR_REFLECTING,
            "abs": Boundary.REGULAR_ABSORBING,
        }
        return DiffusionSpec(
            name=f"bm_interval:{b0},{b1}",
            a=_const(0.5),
            b=_const(0.0),
            a_prime=_const(0.0),
            interval=(0.0, math.pi),
            behavior_l=to_b[b0],
            behavior_r=to_b[b1],
            c=math.pi / 2.0,
            family="bm_interval",
            params=(b0, b1),
            scale=_bm_like_scale(math.pi / 2.0),
        )
    raise CatalogError(f"unknown family id: {spec_id!r}")


def _numeric_cumulative(f, c):
    from scipy.integrate import quad

    @functools.lru_cache(maxsize=4096)
    def one(x):
        if x == c:
            return 0.0
        val, _ = quad(f, c, x, limit=200)
        return val

    return np.vectorize(lambda x: one(float(x)), otypes=[float])


#: ids exercised by the CLI and the verification campaigns
CATALOG_IDS = [
    "bm",
    "bm_drift:0.5",
    "ou",
    "besq:0.5",
    "besq:1",
    "besq:2",
    "besq:2.5",
    "besq:3",
    "lag:2",
    "lag:3",
    "jac:1,1",
    "gbm:1",
    "bm_halfline:refl",
    "bm_halfline:abs",
    "bm_interval:refl,refl",
    "bm_interval:abs,abs",
]


def catalog_conjugate(spec: DiffusionSpec) -> Optional[DiffusionSpec]:
    """Closed-form dual for catalog members, with swapped scale/speed."""
    fam = spec.family
    dual_id = None
    if fam == "bm":
        dual_id = "bm"
    elif fam == "bm_drift":
        dual_id = f"bm_drift:{-spec.params[0]:g}"
    elif fam == "ou":
        dual_id = "ou_out"
    elif fam == "ou_out":
        dual_id = "ou"
    elif fam == "besq":
        d, killed = spec.params
        dd = 2.0 - d
        if dd >= 2.0 or dd <= 0.0:
            dual_id = f"besq:{dd:g}"
        else:
            dual_id = f"besq:{dd:g}" + ("" if killed else ":abs")
    elif fam == "lag":
        dual_id = f"lag_dual:{spec.params[0]:g}"
    elif fam == "lag_dual":
        dual_id = f"lag:{spec.params[0]:g}"
    elif fam == "jac":
        dual_id = f"jac_dual:{spec.params[0]:g},{spec.params[1]:g}"
    elif fam == "jac_dual":
        dual_id = f"jac:{spec.params[0]:g},{spec.params[1]:g}"
    elif fam == "gbm":
        dual_id = f"gbm:{1.0 - spec.params[0]:g}"
    elif fam == "bm_halfline":
        dual_id = "bm_halfline:" + ("abs" if spec.params[0] == "refl" else "refl")
    elif fam == "bm_interval":
        flip = {"refl": "abs", "abs": "refl"}
        dual_id = f"bm_interval:{flip[spec.params[0]]},{flip[spec.params[1]]}"
    if dual_id is None:
        return None
    dual = make_spec(dual_id)
    return replace(dual, scale=swapped_scale_speed(spec.scale or numeric_scale_speed(spec)))


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=256)
def _kernel_by_name(name: str) -> TransitionKernel:
    return _build_kernel(make_spec(name))


def kernel(spec: DiffusionSpec) -> TransitionKernel:
    """Transition kernel for a catalog spec (cached by canonical id)."""
    return _kernel_by_name(spec.name)


def _build_kernel(spec: DiffusionSpec) -> TransitionKernel:
    fam = spec.family
    if fam in ("bm", "bm_drift"):
        mu = spec.params[0] if fam == "bm_drift" else 0.0
        return _gaussian_kernel(
            spec,
            mean=lambda t, x: np.asarray(x, float) + mu * t,
            var=lambda t: t,
            dmean_dx=lambda t: 1.0,
        )
    if fam == "ou":
        return _gaussian_kernel(
            spec,
            mean=lambda t, x: np.asarray(x, float) * math.exp(-t),
            var=lambda t: 0.5 * (1.0 - math.exp(-2.0 * t)),
            dmean_dx=lambda t: math.exp(-t),
        )
    if fam == "ou_out":
        return _gaussian_kernel(
            spec,
            mean=lambda t, x: np.asarray(x, float) * math.exp(t),
            var=lambda t: 0.5 * (math.exp(2.0 * t) - 1.0),
            dmean_dx=lambda t: math.exp(t),
        )
    if fam == "besq":
        return _besq_kernel(spec, *spec.params)
    if fam == "lag":
        return _laguerre_kernel(spec, spec.params[0])
    if fam == "lag_dual":
        return _laguerre_dual_kernel(spec, spec.params[0])
    if fam == "jac":
        return _spectral_only_kernel(spec)
    if fam == "jac_dual":
        return _jacobi_dual_kernel(spec, *spec.params)
    if fam == "gbm":
        return _gbm_kernel(spec, spec.params[0])
    if fam == "bm_halfline":
        return _halfline_kernel(spec, spec.params[0])
    if fam == "bm_interval":
        return _interval_kernel(spec, *spec.params)
    raise CatalogError(f"no kernel for family {fam!r}")


def _gaussian_kernel(spec, mean, var, dmean_dx):
    def density(t, x, y):
        v = var(t)
        return _gpdf(np.asarray(y, float) - mean(t, x), v)

    def cdf(t, x, y):
        v = var(t)
        return _Phi((np.asarray(y, float) - mean(t, x)) / math.sqrt(v))

    def dy(order, t, x, y):
        v = var(t)
        s = math.sqrt(v)
        z = (np.asarray(y, float) - mean(t, x)) / s
        return (-1.0 / s) ** order * _hermite_e(order, z) * _npdf(z) / s

    def dx(order, t, x, y):
        return (-dmean_dx(t)) ** order * dy(order, t, x, y)

    def window(t, x):
        v = var(t)
        mu = mean(t, x)
        pad = _WINDOW_SD * math.sqrt(v)
        return float(np.min(mu) - pad), float(np.max(mu) + pad)

    zero = lambda t, x: np.zeros_like(np.asarray(x, float))
    return TransitionKernel(
        spec=spec,
        density=density,
        cdf=cdf,
        atom_l=zero,
        atom_r=zero,
        window=window,
        dx_derivative=dx,
        dy_derivative=dy,
    )


def _besq_core_density(t, x, y, nu):
    """(1/2t)(y/x)^(nu/2) exp(-(sqrt x - sqrt y)^2 / 2t) ive(nu, sqrt(xy)/t)."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    xs = np.maximum(x, 1e-300)
    z = np.sqrt(xs * y) / t
    val = (
        (1.0 / (2.0 * t))
        * (y / xs) ** (nu / 2.0)
        * np.exp(-0.5 * (np.sqrt(xs) - np.sqrt(y)) ** 2 / t)
        * sc.ive(nu, z)
    )
    return val


def _besq_kernel(spec, d, killed):
    nu = d / 2.0 - 1.0
    order = nu if not killed else -nu

    def density(t, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        if killed:
            out = _besq_core_density(t, x, y, nu) * 0.0
            pos = x > 1e-300
            main = (
                (1.0 / (2.0 * t))
                * (y / np.maximum(x, 1e-300)) ** (nu / 2.0)
                * np.exp(-0.5 * (np.sqrt(np.maximum(x, 0)) - np.sqrt(y)) ** 2 / t)
                * sc.ive(-nu, np.sqrt(np.maximum(x, 0) * y) / t)
            )
            return np.where(pos, main, 0.0)
        main = _besq_core_density(t, x, y, nu)
        # entrance limit from 0: gamma(d/2, scale 2t)
        lim = (
            y ** (d / 2.0 - 1.0)
            * np.exp(-y / (2.0 * t))
            / ((2.0 * t) ** (d / 2.0) * sc.gamma(d / 2.0))
        )
        return np.where(np.asarray(x, float) > 1e-300, main, lim)

    if killed:

        def atom_l(t, x):
            return sc.gammaincc(-nu, np.asarray(x, float) / (2.0 * t))

        def cdf(t, x, y):
            kern_ref = kern_holder[0]
            return cdf_from_density(kern_ref, t, x, y)

    else:

        def atom_l(t, x):
            return np.zeros_like(np.asarray(x, float))

        def cdf(t, x, y):
            x = np.asarray(x, float)
            y = np.asarray(y, float)
            from scipy.stats import chi2, ncx2

            small = x <= 1e-300
            out = np.where(
                small,
                chi2.cdf(y / t, d),
                ncx2.cdf(y / t, d, np.maximum(x, 1e-300) / t),
            )
            return out

    def ratio_next(z):
        return sc.ive(order + 1.0, z) / np.maximum(sc.ive(order, z), 1e-300)

    # d log p = (mu -+ nu)/(2 x-or-y) - 1/(2t) + (dz) I_{mu+1}/I_mu with
    # mu = nu (conservative) or -nu (killed); the prefactor is (y/x)^{nu/2}
    # in both cases, so the power-law terms only cancel pairwise
    def dx1(t, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        p = density(t, x, y)
        xs = np.maximum(x, 1e-300)
        z = np.sqrt(xs * y) / t
        return p * (
            (order - nu) / (2.0 * xs)
            - 1.0 / (2.0 * t)
            + np.sqrt(y / xs) / (2.0 * t) * ratio_next(z)
        )

    def dy1(t, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        p = density(t, x, y)
        z = np.sqrt(np.maximum(x, 1e-300) * y) / t
        ys = np.maximum(y, 1e-300)
        return p * (
            (order + nu) / (2.0 * ys)
            - 1.0 / (2.0 * t)
            + np.sqrt(np.maximum(x, 0.0) / ys) / (2.0 * t) * ratio_next(z)
        )

    def dx(o, t, x, y):
        if o == 1:
            return dx1(t, x, y)
        from ..quadrature import fd_derivative

        return fd_derivative(lambda u: dx1(t, np.maximum(u, 1e-12), y), np.asarray(x, float), order=o - 1)

    def dy(o, t, x, y):
        if o == 1:
            return dy1(t, x, y)
        from ..quadrature import fd_derivative

        return fd_derivative(lambda v: dy1(t, x, np.maximum(v, 1e-12)), np.asarray(y, float), order=o - 1)

    def window(t, x):
        x = float(np.max(np.asarray(x, float)))
        dd = max(abs(d), 2.0)
        sd = math.sqrt(t * (4.0 * x + 2.0 * dd * t))
        hi = x + max(d, 0.0) * t + _WINDOW_SD * sd + 6.0 * dd * t
        return 0.0, hi

    kern = TransitionKernel(
        spec=spec,
        density=density,
        cdf=cdf,
        atom_l=atom_l,
        atom_r=lambda t, x: np.zeros_like(np.asarray(x, float)),
        window=window,
        dx_derivative=dx,
        dy_derivative=dy,
    )
    kern_holder = [kern]
    return kern


def _laguerre_kernel(spec, alpha):
    """Laguerre via squared-Bessel time change: e^{2t} X_t is BESQ(alpha) at
    tau = (e^{2t}-1)/2, so p_t(x,y) = e^{2t} q_tau(x, e^{2t} y)."""
    besq = _kernel_by_name(f"besq:{alpha:g}")

    def density(t, x, y):
        e2, tau = math.exp(2.0 * t), 0.5 * (math.exp(2.0 * t) - 1.0)
        return e2 * besq.density(tau, x, e2 * np.asarray(y, float))

    def cdf(t, x, y):
        e2, tau = math.exp(2.0 * t), 0.5 * (math.exp(2.0 * t) - 1.0)
        return besq.cdf(tau, x, e2 * np.asarray(y, float))

    def dx(o, t, x, y):
        e2, tau = math.exp(2.0 * t), 0.5 * (math.exp(2.0 * t) - 1.0)
        return e2 * besq.dx_derivative(o, tau, x, e2 * np.asarray(y, float))

    def dy(o, t, x, y):
        e2, tau = math.exp(2.0 * t), 0.5 * (math.exp(2.0 * t) - 1.0)
        return e2 ** (o + 1) * besq.dy_derivative(o, tau, x, e2 * np.asarray(y, float))

    def window(t, x):
        e2, tau = math.exp(2.0 * t), 0.5 * (math.exp(2.0 * t) - 1.0)
        lo, hi = besq.window(tau, x)
        return lo / e2, hi / e2

    zero = lambda t, x: np.zeros_like(np.asarray(x, float))
    return TransitionKernel(
        spec=spec,
        density=density,
        cdf=cdf,
        atom_l=zero,
        atom_r=zero,
        window=window,
        dx_derivative=dx,
        dy_derivative=dy,
    )


def _laguerre_dual_kernel(spec, alpha):
    """Dual of lag(alpha): h-transform of lag(alpha+2) by hh(x) = x^{a/2}e^{-x}
    with rate -2, giving p(x,y) = e^{-2t} (hh(x)/hh(y)) p^{alpha+2}_t(x,y)."""
    up = _kernel_by_name(f"lag:{alpha + 2:g}")

    def hh_ratio(x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        return (np.maximum(x, 1e-300) / np.maximum(y, 1e-300)) ** (alpha / 2.0) * np.exp(y - x)

    def density(t, x, y):
        return math.exp(-2.0 * t) * hh_ratio(x, y) * up.density(t, x, y)

    def window(t, x):
        x = float(np.max(np.asarray(x, float)))
        e2 = math.exp(2.0 * t)
        hi = 45.0 * max(e2 - 1.0, t) + 3.0 * e2 * (x + alpha + 2.0) + 10.0
        return 0.0, hi

    def atom_l(t, x):
        def one(xx):
            lo, hi = window(t, xx)
            xs, ws = gl_nodes(lo, hi, 360)
            return 1.0 - float(np.dot(ws, density(t, xx, xs)))

        return np.vectorize(one, otypes=[float])(x)

    def cdf(t, x, y):
        kern_ref = holder[0]
        return cdf_from_density(kern_ref, t, x, y, n=360)

    kern = TransitionKernel(
        spec=spec,
        density=density,
        cdf=cdf,
        atom_l=atom_l,
        atom_r=lambda t, x: np.zeros_like(np.asarray(x, float)),
        window=window,
    )
    holder = [kern]
    return kern


def _jacobi_dual_kernel(spec, beta, gamma):
    """Dual of jac(beta,gamma): h-transform of jac(beta+1,gamma+1) by
    hh(x) = x^beta (1-x)^gamma with rate -2(beta+gamma); exit at both ends."""
    up = _kernel_by_name(f"jac:{beta + 1:g},{gamma + 1:g}")
    rate = 2.0 * (beta + gamma)

    def hh(x):
        x = np.asarray(x, float)
        return np.maximum(x, 1e-300) ** beta * np.maximum(1.0 - x, 1e-300) ** gamma

    def density(t, x, y):
        return math.exp(-rate * t) * (hh(x) / hh(y)) * up.density(t, x, y)

    def window(t, x):
        return 0.0, 1.0

    # absorption split: u_l(t,x) = h_l(x) - int p(t,x,y) h_l(y) dy with
    # h_l the scale-harmonic hitting probability of the left end
    def h_l(x):
        return 1.0 - sc.betainc(beta, gamma, np.asarray(x, float))

    def atom_l(t, x):
        def one(xx):
            xs, ws = gl_nodes(0.0, 1.0, 240)
            return float(h_l(xx) - np.dot(ws, density(t, xx, xs) * h_l(xs)))

        return np.vectorize(one, otypes=[float])(x)

    def atom_r(t, x):
        def one(xx):
            xs, ws = gl_nodes(0.0, 1.0, 240)
            hr = 1.0 - h_l(xs)
            return float((1.0 - h_l(xx)) - np.dot(ws, density(t, xx, xs) * hr))

        return np.vectorize(one, otypes=[float])(x)

    def cdf(t, x, y):
        def one(yy):
            if yy <= 0.0:
                return float(atom_l(t, x))
            xs, ws = gl_nodes(0.0, min(yy, 1.0), 240)
            return float(atom_l(t, x) + np.dot(ws, density(t, x, xs)))

        return np.vectorize(one, otypes=[float])(np.asarray(y, float))

    return TransitionKernel(
        spec=spec,
        density=density,
        cdf=cdf,
        atom_l=atom_l,
        atom_r=atom_r,
        window=window,
        source="spectral-series",
    )


def _gbm_kernel(spec, alpha):
    drift = alpha - 0.5

    def density(t, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        s = math.sqrt(t)
        z = (np.log(y / x) - drift * t) / s
        return _npdf(z) / (np.maximum(y, 1e-300) * s)

    def cdf(t, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        s = math.sqrt(t)
        return _Phi((np.log(np.maximum(y, 1e-300) / x) - drift * t) / s)

    def dy1(t, x, y):
        y = np.asarray(y, float)
        s = math.sqrt(t)
        z = (np.log(y / np.asarray(x, float)) - drift * t) / s
        return density(t, x, y) * (-1.0 / y) * (1.0 + z / s)

    def dy(o, t, x, y):
        if o == 1:
            return dy1(t, x, y)
        from ..quadrature import fd_derivative

        return fd_derivative(lambda v: dy1(t, x, np.maximum(v, 1e-12)), np.asarray(y, float), order=o - 1)

    def dx1(t, x, y):
        x = np.asarray(x, float)
        s = math.sqrt(t)
        z = (np.log(np.asarray(y, float) / x) - drift * t) / s
        return density(t, x, y) * z / (s * x)

    def dx(o, t, x, y):
        if o == 1:
            return dx1(t, x, y)
        from ..quadrature import fd_derivative

        return fd_derivative(lambda u: dx1(t, np.maximum(u, 1e-12), y), np.asarray(x, float), order=o - 1)

    def window(t, x):
        x = np.asarray(x, float)
        s = math.sqrt(t)
        lo = float(np.min(x)) * math.exp(drift * t - _WINDOW_SD * s)
        hi = float(np.max(x)) * math.exp(drift * t + _WINDOW_SD * s)
        return lo, hi

    zero = lambda t, x: np.zeros_like(np.asarray(x, float))
    return TransitionKernel(
        spec=spec,
        density=density,
        cdf=cdf,
        atom_l=zero,
        atom_r=zero,
        window=window,
        dx_derivative=dx,
        dy_derivative=dy,
    )


def _halfline_kernel(spec, mode):
    refl = mode == "refl"
    sgn = 1.0 if refl else -1.0

    def density(t, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        return _gpdf(y - x, t) + sgn * _gpdf(y + x, t)

    if refl:

        def cdf(t, x, y):
            s = math.sqrt(t)
            x = np.asarray(x, float)
            y = np.asarray(y, float)
            return _Phi((y - x) / s) - _Phi((-y - x) / s)

        def atom_l(t, x):
            return np.zeros_like(np.asarray(x, float))

    else:

        def cdf(t, x, y):
            s = math.sqrt(t)
            x = np.asarray(x, float)
            y = np.asarray(y, float)
            return _Phi((y - x) / s) + _Phi(-(y + x) / s)

        def atom_l(t, x):
            return 2.0 * _Phi(-np.asarray(x, float) / math.sqrt(t))

    def dy(order, t, x, y):
        s = math.sqrt(t)
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        zm, zp = (y - x) / s, (y + x) / s
        st = s**order
        return (
            (-1.0) ** order
            * (_hermite_e(order, zm) * _npdf(zm) + sgn * _hermite_e(order, zp) * _npdf(zp))
            / (s * st)
        )

    def dx(order, t, x, y):
        s = math.sqrt(t)
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        zm, zp = (y - x) / s, (y + x) / s
        st = s**order
        return (
            (_hermite_e(order, zm) * _npdf(zm)
             + sgn * (-1.0) ** order * _hermite_e(order, zp) * _npdf(zp))
            / (s * st)
        )

    def window(t, x):
        x = np.asarray(x, float)
        pad = _WINDOW_SD * math.sqrt(t)
        return max(0.0, float(np.min(x)) - pad), float(np.max(x)) + pad

    return TransitionKernel(
        spec=spec,
        density=density,
        cdf=cdf,
        atom_l=atom_l,
        atom_r=lambda t, x: np.zeros_like(np.asarray(x, float)),
        window=window,
        dx_derivative=dx,
        dy_derivative=dy,
    )


def _interval_kernel(spec, b0, b1):
    """BM on [0, pi]: image method for refl,refl / abs,abs; spectral series
    for the mixed combinations (cos/sin of half-integer frequencies)."""
    L = math.pi
    basis = spectral_basis(spec)

    def n_images(t):
        return max(2, int(math.ceil(_WINDOW_SD * math.sqrt(t) / (2.0 * L))) + 1)

    if (b0, b1) in (("refl", "refl"), ("abs", "abs")):
        sgn = 1.0 if b0 == "refl" else -1.0

        def density(t, x, y):
            x = np.asarray(x, float)
            y = np.asarray(y, float)
            acc = 0.0
            for j in range(-n_images(t), n_images(t) + 1):
                acc = acc + _gpdf(y - x + 2 * L * j, t) + sgn * _gpdf(y + x + 2 * L * j, t)
            return acc

        def cdf_interior(t, x, y):
            s = math.sqrt(t)
            x = np.asarray(x, float)
            y = np.asarray(y, float)
            acc = 0.0
            for j in range(-n_images(t), n_images(t) + 1):
                acc = acc + (
                    _Phi((y - x + 2 * L * j) / s) - _Phi((-x + 2 * L * j) / s)
                ) + sgn * (_Phi((y + x + 2 * L * j) / s) - _Phi((x + 2 * L * j) / s))
            return acc

        def dy(order, t, x, y):
            s = math.sqrt(t)
            x = np.asarray(x, float)
            y = np.asarray(y, float)
            acc = 0.0
            for j in range(-n_images(t), n_images(t) + 1):
                zm = (y - x + 2 * L * j) / s
                zp = (y + x + 2 * L * j) / s
                acc = acc + _hermite_e(order, zm) * _npdf(zm) + sgn * _hermite_e(order, zp) * _npdf(zp)
            return (-1.0) ** order * acc / s ** (order + 1)

        def dx(order, t, x, y):
            s = math.sqrt(t)
            x = np.asarray(x, float)
            y = np.asarray(y, float)
            acc = 0.0
            for j in range(-n_images(t), n_images(t) + 1):
                zm = (y - x + 2 * L * j) / s
                zp = (y + x + 2 * L * j) / s
                acc = acc + _hermite_e(order, zm) * _npdf(zm) + sgn * (-1.0) ** order * _hermite_e(order, zp) * _npdf(zp)
            return acc / s ** (order + 1)

    else:
        density, dx, dy = _series_evaluators(basis)
        cdf_interior = None

    zero_atom = lambda t, x: np.zeros_like(np.asarray(x, float))

    def _deficit(t, x):
        def one(xx):
            xs, ws = gl_nodes(0.0, L, 200)
            return float(1.0 - np.dot(ws, density(t, xx, xs)))

        return np.vectorize(one, otypes=[float])(x)

    def _harmonic_atom(t, x, h):
        # absorbed mass at an end: h(x) - int p_t(x, y) h(y) dy with h the
        # scale-harmonic hitting probability of that end
        def one(xx):
            xs, ws = gl_nodes(0.0, L, 200)
            return float(h(xx) - np.dot(ws, density(t, xx, xs) * h(xs)))

        return np.vectorize(one, otypes=[float])(x)

    if b0 == "abs" and b1 == "abs":
        atom_l = lambda t, x: _harmonic_atom(t, x, lambda u: (L - np.asarray(u, float)) / L)
        atom_r = lambda t, x: _harmonic_atom(t, x, lambda u: np.asarray(u, float) / L)
    elif b0 == "abs":
        atom_l, atom_r = _deficit, zero_atom
    elif b1 == "abs":
        atom_l, atom_r = zero_atom, _deficit
    else:
        atom_l = atom_r = zero_atom

    if cdf_interior is not None:

        def cdf(t, x, y):
            return atom_l(t, x) + cdf_interior(t, x, y)

    else:

        def cdf(t, x, y):
            def one(yy):
                if yy <= 0.0:
                    return float(atom_l(t, x))
                xs, ws = gl_nodes(0.0, min(yy, L), 200)
                return float(atom_l(t, x) + np.dot(ws, density(t, x, xs)))

            return np.vectorize(one, otypes=[float])(np.asarray(y, float))

    return TransitionKernel(
        spec=spec,
        density=density,
        cdf=cdf,
        atom_l=atom_l,
        atom_r=atom_r,
        window=lambda t, x: (0.0, L),
        dx_derivative=dx,
        dy_derivative=dy,
        source="closed-form" if cdf_interior is not None else "spectral-series",
    )


# ---------------------------------------------------------------------------
# spectral bases
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class SpectralBasis:
    """Discrete spectrum data: L phi_k = -lambda_k phi_k, orthonormal in
    L^2(m dx); the kernel is sum_k e^{-lambda_k t} phi_k(x) phi_k(y) m(y)."""

    spec: DiffusionSpec
    eigenvalue: Callable
    phi: Callable
    phi_prime: Callable
    m: Callable
    m_prime: Callable
    max_terms: int = 512
    grid: np.ndarray = None

    def __post_init__(self):
        if self.grid is None:
            l, r = self.spec.interval
            lo = l if np.isfinite(l) else self.spec.c - 8.0
            hi = r if np.isfinite(r) else self.spec.c + 8.0
            pad = 1e-9 * max(1.0, hi - lo)
            self.grid = np.linspace(lo + pad, hi - pad, 257)

    @functools.lru_cache(maxsize=2048)
    def _phi_max(self, k: int) -> float:
        return float(np.max(np.abs(self.phi(k, self.grid))))

    def n_terms(self, t: float, tol: float = 1e-12) -> int:
        m_max = float(np.max(np.abs(self.m(self.grid))))
        for k in range(self.max_terms):
            bound = math.exp(-self.eigenvalue(k) * t) * self._phi_max(k) ** 2 * m_max
            if bound < tol and k >= 2:
                return k
        raise TruncationError(
            f"{self.spec.name}: series tail above {tol:g} after {self.max_terms} terms (t={t:g})"
        )


def _series_evaluators(basis: SpectralBasis):
    def density(t, x, y):
        K = basis.n_terms(t)
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        acc = 0.0
        for k in range(K):
            acc = acc + math.exp(-basis.eigenvalue(k) * t) * basis.phi(k, x) * basis.phi(k, y)
        return acc * basis.m(y)

    def dy(order, t, x, y):
        if order > 2:
            from ..quadrature import fd_derivative

            return fd_derivative(lambda v: density(t, x, v), np.asarray(y, float), order=order)
        K = basis.n_terms(t)
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        acc = 0.0
        for k in range(K):
            w = math.exp(-basis.eigenvalue(k) * t) * basis.phi(k, x)
            if order == 1:
                acc = acc + w * (basis.phi_prime(k, y) * basis.m(y) + basis.phi(k, y) * basis.m_prime(y))
            else:
                from ..quadrature import fd_derivative

                term = fd_derivative(
                    lambda v, kk=k: basis.phi_prime(kk, v) * basis.m(v) + basis.phi(kk, v) * basis.m_prime(v),
                    y,
                    order=1,
                )
                acc = acc + w * term
        return acc

    def dx(order, t, x, y):
        if order > 2:
            from ..quadrature import fd_derivative

            return fd_derivative(lambda u: density(t, u, y), np.asarray(x, float), order=order)
        K = basis.n_terms(t)
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        acc = 0.0
        for k in range(K):
            w = math.exp(-basis.eigenvalue(k) * t) * basis.phi(k, y) * basis.m(y)
            if order == 1:
                acc = acc + w * basis.phi_prime(k, x)
            else:
                from ..quadrature import fd_derivative

                acc = acc + w * fd_derivative(lambda u, kk=k: basis.phi_prime(kk, u), x, order=1)
        return acc

    return density, dx, dy


def _spectral_only_kernel(spec):
    basis = spectral_basis(spec)
    density, dx, dy = _series_evaluators(basis)

    def cdf(t, x, y):
        def one(yy):
            l = spec.interval[0]
            if yy <= l:
                return 0.0
            xs, ws = gl_nodes(l, min(yy, spec.interval[1]), 200)
            return float(np.dot(ws, density(t, x, xs)))

        return np.vectorize(one, otypes=[float])(np.asarray(y, float))

    zero = lambda t, x: np.zeros_like(np.asarray(x, float))
    lo, hi = spec.interval
    return TransitionKernel(
        spec=spec,
        density=density,
        cdf=cdf,
        atom_l=zero,
        atom_r=zero,
        window=lambda t, x: (lo, hi),
        dx_derivative=dx,
        dy_derivative=dy,
        source="spectral-series",
    )


@functools.lru_cache(maxsize=64)
def _spectral_basis_by_name(name: str) -> SpectralBasis:
    spec = make_spec(name)
    fam = spec.family
    if fam == "bm_interval":
        b0, b1 = spec.params
        m = _const(2.0)
        mp = _const(0.0)
        rt_pi = math.sqrt(math.pi)
        if (b0, b1) == ("abs", "abs"):
            freq = lambda k: k + 1.0
            f, fp = np.sin, np.cos
            s0 = 1.0
        elif (b0, b1) == ("refl", "refl"):

            def phi(k, x):
                x = np.asarray(x, float)
                if k == 0:
                    return np.full_like(x, 1.0 / math.sqrt(2.0 * math.pi))
                return np.cos(k * x) / rt_pi

            def phi_prime(k, x):
                x = np.asarray(x, float)
                if k == 0:
                    return np.zeros_like(x)
                return -k * np.sin(k * x) / rt_pi

            return SpectralBasis(
                spec=spec,
                eigenvalue=lambda k: 0.5 * k**2,
                phi=phi,
                phi_prime=phi_prime,
                m=m,
                m_prime=mp,
            )
        elif (b0, b1) == ("refl", "abs"):
            freq = lambda k: k + 0.5
            f, fp = np.cos, lambda z: -np.sin(z)
            s0 = 1.0
        else:  # abs, refl
            freq = lambda k: k + 0.5
            f, fp = np.sin, np.cos
            s0 = 1.0

        def phi(k, x):
            return s0 * f(freq(k) * np.asarray(x, float)) / rt_pi

        def phi_prime(k, x):
            return s0 * freq(k) * fp(freq(k) * np.asarray(x, float)) / rt_pi

        return SpectralBasis(
            spec=spec,
            eigenvalue=lambda k: 0.5 * freq(k) ** 2,
            phi=phi,
            phi_prime=phi_prime,
            m=m,
            m_prime=mp,
        )
    if fam == "ou":
        m = lambda x: 2.0 * np.exp(-np.asarray(x, float) ** 2)
        mp = lambda x: -2.0 * np.asarray(x, float) * m(x)

        @functools.lru_cache(maxsize=1024)
        def norm(k):
            return 1.0 / math.sqrt(2.0 * math.sqrt(math.pi) * 2.0**k * math.factorial(k))

        def phi(k, x):
            return sc.eval_hermite(k, np.asarray(x, float)) * norm(k)

        def phi_prime(k, x):
            if k == 0:
                return np.zeros_like(np.asarray(x, float))
            return 2.0 * k * sc.eval_hermite(k - 1, np.asarray(x, float)) * norm(k)

        return SpectralBasis(
            spec=spec,
            eigenvalue=lambda k: float(k),
            phi=phi,
            phi_prime=phi_prime,
            m=m,
            m_prime=mp,
            max_terms=200,
        )
    if fam == "lag":
        alpha = spec.params[0]
        nu = alpha / 2.0 - 1.0
        ss = spec.scale
        nodes, weights = sc.roots_genlaguerre(320, nu)

        @functools.lru_cache(maxsize=1024)
        def norm(k):
            vals = sc.eval_genlaguerre(k, nu, nodes)
            raw = float(np.dot(weights, vals * vals))  # int L_k^2 x^nu e^-x
            return 1.0 / math.sqrt(raw * (math.e / 2.0))

        def phi(k, x):
            return sc.eval_genlaguerre(k, nu, np.asarray(x, float)) * norm(k)

        def phi_prime(k, x):
            if k == 0:
                return np.zeros_like(np.asarray(x, float))
            return -sc.eval_genlaguerre(k - 1, nu + 1.0, np.asarray(x, float)) * norm(k)

        return SpectralBasis(
            spec=spec,
            eigenvalue=lambda k: 2.0 * float(k),
            phi=phi,
            phi_prime=phi_prime,
            m=ss.m,
            m_prime=lambda x: ss.m(x) * (nu / np.maximum(np.asarray(x, float), 1e-300) - 1.0),
            max_terms=300,
            grid=np.linspace(1e-6, 12.0 + 4.0 * alpha, 257),
        )
    if fam == "jac":
        beta, gamma = spec.params
        a_j, b_j = gamma - 1.0, beta - 1.0
        ss = spec.scale
        nodes, weights = sc.roots_jacobi(160, a_j, b_j)

        @functools.lru_cache(maxsize=1024)
        def norm(k):
            vals = sc.eval_jacobi(k, a_j, b_j, nodes)
            raw = float(np.dot(weights, vals * vals))
            return 1.0 / math.sqrt(raw)

        def phi(k, x):
            u = 2.0 * np.asarray(x, float) - 1.0
            return sc.eval_jacobi(k, a_j, b_j, u) * norm(k)

        def phi_prime(k, x):
            if k == 0:
                return np.zeros_like(np.asarray(x, float))
            u = 2.0 * np.asarray(x, float) - 1.0
            return (k + a_j + b_j + 1.0) * sc.eval_jacobi(k - 1, a_j + 1.0, b_j + 1.0, u) * norm(k)

        def m_prime(x):
            x = np.asarray(x, float)
            return ss.m(x) * ((beta - 1.0) / np.maximum(x, 1e-300) - (gamma - 1.0) / np.maximum(1.0 - x, 1e-300))

        return SpectralBasis(
            spec=spec,
            eigenvalue=lambda k: 2.0 * k * (k + beta + gamma - 1.0),
            phi=phi,
            phi_prime=phi_prime,
            m=ss.m,
            m_prime=m_prime,
            max_terms=150,
            grid=np.linspace(1e-6, 1.0 - 1e-6, 257),
        )
    raise CatalogError(f"no spectral basis for {name!r}")


def spectral_basis(spec: DiffusionSpec) -> SpectralBasis:
    return _spectral_basis_by_name(spec.name)


def has_spectral_basis(spec: DiffusionSpec) -> bool:
    try:
        spectral_basis(spec)
        return True
    except CatalogError:
        return False
