"""Discrete Skorokhod maps and Euler simulation of reflected systems.

Scheme: per time step, autonomous levels advance first by a full-truncation
Euler-Maruyama step (coefficients evaluated at the state clamped into the
interval, the standard positivity-preserving treatment of square-root
diffusions); constrained levels then advance and are projected onto the
moving interval defined by the already-updated neighbouring level.  The
per-step projection is the discrete two-sided Skorokhod solution, and the
constraining increments are accumulated exactly like the finite-variation
terms they approximate.

Driving noise comes from counter-based Philox streams keyed by
(level, particle), so bundles are bit-reproducible for a fixed seed and
independent of scheduling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .diffusion1d import Boundary, DiffusionSpec, conjugate, make_spec
from .twolevel import Shape


@dataclass
class SkorokhodResult:
    x: np.ndarray
    k: np.ndarray
    crossing_index: Optional[int] = None  # horizon truncation point, if any


def skorokhod_map(z, lower=None, upper=None) -> SkorokhodResult:
    """Discrete two-sided Skorokhod solution along a path (axis 0 = time).

    x = z + k stays in [lower, upper]; k is the signed cumulative pushing.
    For a constant lower barrier and no upper barrier this reproduces the
    explicit formula x(t) = z(t) + max_{s<=t} (lower - z(s))^+ on the grid.
    Barrier crossing (lower > upper) truncates the projection horizon and
    reports the index.
    """
    z = np.asarray(z, float)
    m = z.shape[0]
    lo = np.full(z.shape, -np.inf) if lower is None else np.broadcast_to(
        np.asarray(lower, float), z.shape
    )
    hi = np.full(z.shape, np.inf) if upper is None else np.broadcast_to(
        np.asarray(upper, float), z.shape
    )
    x = np.empty_like(z)
    k = np.zeros_like(z)
    crossing = None
    # track the gap k = x - z: projection becomes a clip of k alone, which
    # reproduces the running-max formula bit for bit in the one-sided case
    kcur = np.clip(np.zeros_like(z[0]), lo[0] - z[0], hi[0] - z[0])
    x[0] = z[0] + kcur
    k[0] = kcur
    for j in range(1, m):
        if np.any(lo[j] > hi[j]):
            crossing = j if crossing is None else crossing
            x[j:] = x[j - 1]
            k[j:] = k[j - 1]
            break
        kcur = np.clip(kcur, lo[j] - z[j], hi[j] - z[j])
        x[j] = z[j] + kcur
        k[j] = kcur
    return SkorokhodResult(x=x, k=k, crossing_index=crossing)


def yw_check(spec: DiffusionSpec) -> str:
    """'Holds' when a pathwise-uniqueness modulus is registered for the
    family (1/2-Hoelder diffusion coefficient, Lipschitz drift); otherwise
    'Unknown' and simulation proceeds with a warning."""
    known = {
        "bm", "bm_drift", "ou", "ou_out", "besq", "lag", "lag_dual",
        "jac", "jac_dual", "gbm", "bm_halfline", "bm_interval",
    }
    return "Holds" if spec.family in known else "Unknown"


@dataclass
class PathBundle:
    """Simulated trajectories with constraining increments and stop times.

    levels[i] has shape (n_recorded, n_paths, n_particles_i); k_lower and
    k_upper hold the cumulative push-up/push-down amounts at the final
    time.  tau is +inf for paths never stopped.  contact_fraction tracks
    the average fraction of steps spent in exact contact with a barrier.
    """

    grid: np.ndarray
    levels: list
    k_lower: list
    k_upper: list
    tau: np.ndarray
    seed: int
    dt: float
    level_names: list
    contact_fraction: float = 0.0

    def terminal(self, level: int) -> np.ndarray:
        return self.levels[level][-1]

    @property
    def alive(self) -> np.ndarray:
        return ~np.isfinite(self.tau)


@dataclass(frozen=True)
class RNGStreams:
    """Counter-based Philox streams keyed by (kind, level, particle).

    Streams are pairwise independent by seed-sequence spawning and the
    assignment depends only on the integer key, so it is stable under any
    reordering of the simulation set-up.
    """

    seed: int

    def stream(self, kind: int, level: int, particle: int) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(kind, level, particle))
        return np.random.Generator(np.random.Philox(ss))


def _stream(seed: int, kind: int, level: int, particle: int) -> np.random.Generator:
    return RNGStreams(seed).stream(kind, level, particle)


def _clamp_state(spec: DiffusionSpec, x):
    l, r = spec.interval
    lo = l if np.isinf(l) else l
    hi = r if np.isinf(r) else r
    return np.clip(x, lo, hi)


def _euler_raw(spec: DiffusionSpec, x, dt, xi):
    xc = _clamp_state(spec, x)
    return x + np.asarray(spec.b(xc), float) * dt + np.sqrt(
        2.0 * np.maximum(np.asarray(spec.a(xc), float), 0.0) * dt
    ) * xi


def _static_barriers(spec: DiffusionSpec):
    """(lower, upper) hard walls from regular-reflecting endpoints."""
    lo = spec.l if spec.behavior_l is Boundary.REGULAR_REFLECTING else -np.inf
    hi = spec.r if spec.behavior_r is Boundary.REGULAR_REFLECTING else np.inf
    return lo, hi


def _killing_ends(spec: DiffusionSpec):
    kl = spec.behavior_l in (Boundary.EXIT, Boundary.REGULAR_ABSORBING)
    kr = spec.behavior_r in (Boundary.EXIT, Boundary.REGULAR_ABSORBING)
    return kl, kr


def _resolve_steps(T, dt, t0=0.0):
    n_steps = max(int(round((T - t0) / dt)), 1)
    return n_steps, (T - t0) / n_steps


def simulate_two_level(
    spec: DiffusionSpec,
    shape: Shape,
    x0,
    y0,
    T: float,
    dt: float,
    n_paths: int,
    seed: int = 0,
    y_spec: Optional[DiffusionSpec] = None,
    y_extra_drift: Optional[Callable] = None,
    t0: float = 0.0,
    record_stride: Optional[int] = None,
) -> PathBundle:
    """Evolve (X, Y) on an interlacing space.

    Y advances first as independent y_spec-diffusions (default: the raw
    conjugate of spec, i.e. the two-level kernel dynamics), optionally with
    an interaction drift (for h-transformed duals).  X is then projected
    per step onto the interval between its updated Y neighbours.  tau is
    set at the first Y collision or killing-boundary hit required by the
    shape; stopped paths are frozen.
    """
    from .twolevel import check_shape_assumptions, interlaces

    check_shape_assumptions(spec, shape)
    if yw_check(spec) == "Unknown" or yw_check(y_spec or conjugate(spec)) == "Unknown":
        import warnings

        warnings.warn(
            "no pathwise-uniqueness modulus registered for this family; "
            "simulating anyway",
            stacklevel=2,
        )
    if y_spec is None:
        y_spec = conjugate(spec)
    if dt <= 0:
        raise ValueError("dt must be positive")
    n_steps, dt = _resolve_steps(T, dt, t0)
    x0 = np.asarray(x0, float)
    n2 = x0.shape[-1]
    x = np.broadcast_to(x0, (n_paths, n2)).copy()
    if callable(y0):
        y = np.asarray(y0(n_paths), float)
    else:
        y = np.broadcast_to(np.asarray(y0, float), (n_paths, np.asarray(y0).shape[-1])).copy()
    n1 = y.shape[-1]
    l0, r0 = spec.interval
    for a, b in ((x[:1], y[:1]), (x[-1:], y[-1:])):
        if n1 and not interlaces(a[0], b[0], shape, l0, r0, tol=1e-12):
            raise ValueError("initial configuration violates the interlacing inequalities")

    gy = [_stream(seed, 0, 0, i) for i in range(n1)]
    gx = [_stream(seed, 1, 0, i) for i in range(n2)]
    l, r = spec.interval
    ylo_wall, yhi_wall = _static_barriers(y_spec)
    kill_l, kill_r = _killing_ends(y_spec)
    xlo_wall, xhi_wall = _static_barriers(spec)

    tau = np.full(n_paths, np.inf)
    alive = np.ones(n_paths, bool)
    klow = np.zeros((n_paths, n2))
    kup = np.zeros((n_paths, n2))
    contacts = 0.0

    rec_idx = _record_indices(n_steps, record_stride)
    rec_x, rec_y, rec_t = [], [], []

    def record(j):
        rec_t.append(t0 + j * dt)
        rec_x.append(x.copy())
        rec_y.append(y.copy())

    record(0)
    sq = math.sqrt(dt)
    for j in range(1, n_steps + 1):
        ynew = np.empty_like(y)
        for i in range(n1):
            drift_extra = 0.0
            if y_extra_drift is not None:
                drift_extra = y_extra_drift(y)[:, i] * dt
            ynew[:, i] = _euler_raw(y_spec, y[:, i], dt, gy[i].standard_normal(n_paths)) + drift_extra
            if np.isfinite(ylo_wall):
                ynew[:, i] = np.maximum(ynew[:, i], ylo_wall)
            if np.isfinite(yhi_wall):
                ynew[:, i] = np.minimum(ynew[:, i], yhi_wall)
        # stopping: Y collision or killing-boundary hit
        stopped = np.zeros(n_paths, bool)
        if n1 > 1:
            stopped |= np.any(np.diff(ynew, axis=1) <= 0.0, axis=1)
        if kill_l and np.isfinite(l):
            stopped |= np.min(ynew, axis=1) <= l
        if kill_r and np.isfinite(r):
            stopped |= np.max(ynew, axis=1) >= r
        newly = alive & stopped
        tau[newly] = t0 + j * dt
        upd = alive & ~stopped
        y[upd] = ynew[upd]
        alive = alive & ~stopped

        xnew = np.empty_like(x)
        for i in range(n2):
            raw = _euler_raw(spec, x[:, i], dt, gx[i].standard_normal(n_paths))
            lo, hi = _x_bounds(shape, y, i, n2, xlo_wall, xhi_wall)
            proj = np.clip(raw, lo, hi)
            klow[upd, i] += np.maximum(lo - raw, 0.0)[upd]
            kup[upd, i] += np.maximum(raw - hi, 0.0)[upd]
            contacts += float(np.mean((proj != raw) & upd))
            xnew[:, i] = proj
        x[upd] = xnew[upd]
        if j in rec_idx:
            record(j)

    return PathBundle(
        grid=np.asarray(rec_t),
        levels=[np.asarray(rec_y), np.asarray(rec_x)],
        k_lower=[np.zeros((n_paths, n1)), klow],
        k_upper=[np.zeros((n_paths, n1)), kup],
        tau=tau,
        seed=seed,
        dt=dt,
        level_names=["y", "x"],
        contact_fraction=contacts / max(n_steps * n2, 1),
    )


def _record_indices(n_steps, stride):
    if stride is None:
        return {n_steps}
    return set(range(0, n_steps + 1, stride)) | {n_steps}


def _x_bounds(shape: Shape, y, i, n2, xlo_wall, xhi_wall):
    """Moving interval for x particle i given the updated y level."""
    n1 = y.shape[1]
    if shape is Shape.NNP1:
        lo = y[:, i - 1] if i >= 1 else xlo_wall
        hi = y[:, i] if i < n1 else xhi_wall
    elif shape is Shape.NN:
        lo = y[:, i]
        hi = y[:, i + 1] if i + 1 < n1 else xhi_wall
    else:  # NP1N
        lo = y[:, i]
        hi = y[:, i + 1]
    return lo, hi


def simulate_gt(
    level_specs: Sequence[DiffusionSpec],
    x0,
    T: float,
    dt: float,
    n_paths: int,
    seed: int = 0,
    t0: float = 0.0,
    record_stride: Optional[int] = None,
) -> PathBundle:
    """Interlacing-array dynamics: each level is reflected per step off the
    already-updated previous level; the first level is free.

    Level sizes come from the initial data and may grow by one per level
    (the triangular pattern) or stay equal (the alternating/symplectic
    pattern, where the new level sits above the previous one).  x0: list of
    per-level arrays or a callable sampler(n_paths) -> list of arrays.
    tau is the first interior-level collision, matching the stopping rule
    under which the pattern dynamics are defined.
    """
    N = len(level_specs)
    n_steps, dt = _resolve_steps(T, dt, t0)
    if callable(x0):
        levels = [np.atleast_2d(np.asarray(a, float)).copy() for a in x0(n_paths)]
    else:
        levels = [
            np.broadcast_to(np.asarray(a, float), (n_paths, np.asarray(a).shape[-1])).copy()
            for a in x0
        ]
    sizes = [lv.shape[1] for lv in levels]
    if len(sizes) != N:
        raise ValueError("one initial array per level is required")
    for k in range(1, N):
        if sizes[k] - sizes[k - 1] not in (0, 1):
            raise ValueError("consecutive level sizes may grow by at most one")

    gens = [[_stream(seed, 2, k, i) for i in range(sizes[k])] for k in range(N)]
    walls = [_static_barriers(sp) for sp in level_specs]
    tau = np.full(n_paths, np.inf)
    alive = np.ones(n_paths, bool)
    klow = [np.zeros((n_paths, sizes[k])) for k in range(N)]
    kup = [np.zeros((n_paths, sizes[k])) for k in range(N)]
    contacts = 0.0
    n_constrained = sum(sizes[1:]) if N > 1 else 1

    rec_idx = _record_indices(n_steps, record_stride)
    rec = [[lv.copy()] for lv in levels]
    rec_t = [t0]

    for j in range(1, n_steps + 1):
        prev = None
        for k in range(N):
            sp = level_specs[k]
            lo_wall, hi_wall = walls[k]
            cur = levels[k]
            nk = sizes[k]
            grow = prev is not None and nk == prev.shape[1] + 1
            new = np.empty_like(cur)
            for i in range(nk):
                raw = _euler_raw(sp, cur[:, i], dt, gens[k][i].standard_normal(n_paths))
                if prev is None:
                    lo, hi = lo_wall, hi_wall
                elif grow:
                    # triangular step: particle i sits between prev i-1, i
                    lo = prev[:, i - 1] if i >= 1 else lo_wall
                    hi = prev[:, i] if i < nk - 1 else hi_wall
                else:
                    # equal-size step: the new level sits above the old one
                    lo = prev[:, i]
                    hi = prev[:, i + 1] if i + 1 < nk else hi_wall
                proj = np.clip(raw, lo, hi)
                klow[k][alive, i] += np.broadcast_to(np.maximum(lo - raw, 0.0), raw.shape)[alive]
                kup[k][alive, i] += np.broadcast_to(np.maximum(raw - hi, 0.0), raw.shape)[alive]
                if k >= 1:
                    contacts += float(np.mean((proj != raw) & alive))
                new[:, i] = proj
            levels[k][alive] = new[alive]
            prev = levels[k]
        # interior-level collisions stop the pattern
        stopped = np.zeros(n_paths, bool)
        for k in range(1, N - 1):
            if levels[k].shape[1] > 1:
                stopped |= np.any(np.diff(levels[k], axis=1) < 0.0, axis=1)
        newly = alive & stopped
        tau[newly] = t0 + j * dt
        alive = alive & ~stopped
        if j in rec_idx:
            rec_t.append(t0 + j * dt)
            for k in range(N):
                rec[k].append(levels[k].copy())

    return PathBundle(
        grid=np.asarray(rec_t),
        levels=[np.asarray(r) for r in rec],
        k_lower=klow,
        k_upper=kup,
        tau=tau,
        seed=seed,
        dt=dt,
        level_names=[f"level{k+1}" for k in range(N)],
        contact_fraction=contacts / max(n_steps * max(n_constrained, 1), 1),
    )


def edge_ladder_spec(base: DiffusionSpec, n: int, k: int) -> DiffusionSpec:
    """Level-k spec of the edge system: drift b + (n-k) a' stays in-family
    for the quadratic-a / affine-b catalog."""
    m = n - k
    fam = base.family
    if m == 0:
        return base
    if fam in ("bm", "bm_drift"):
        mu = base.params[0] if fam == "bm_drift" else 0.0
        return make_spec(f"bm_drift:{mu:g}") if mu else base
    if fam == "ou":
        return base
    if fam == "besq":
        return make_spec(f"besq:{base.params[0] + 2 * m:g}")
    if fam == "lag":
        return make_spec(f"lag:{base.params[0] + 2 * m:g}")
    if fam == "jac":
        b, g = base.params
        return make_spec(f"jac:{b + m:g},{g + m:g}")
    if fam == "gbm":
        return make_spec(f"gbm:{base.params[0] + m:g}")
    raise ValueError(f"edge ladder undefined for family {fam!r}")


def simulate_edge(
    base: DiffusionSpec,
    n: int,
    side: str,
    x0,
    T: float,
    dt: float,
    n_paths: int,
    seed: int = 0,
    t0: float = 0.0,
    record_stride: Optional[int] = None,
) -> PathBundle:
    """One-sided-collision system along a pattern edge.

    side='right': particle k (spec of ladder level k) is pushed up off
    particle k-1, ordering increasing.  side='left': pushed down, ordering
    decreasing.  Particle 1 is free.
    """
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    specs = [edge_ladder_spec(base, n, k) for k in range(1, n + 1)]
    for sp in specs:
        if sp.behavior_l not in (Boundary.NATURAL, Boundary.ENTRANCE) or sp.behavior_r not in (
            Boundary.NATURAL,
            Boundary.ENTRANCE,
        ):
            raise ValueError(
                f"edge systems require natural/entrance boundaries; {sp.name} violates this"
            )
    n_steps, dt = _resolve_steps(T, dt, t0)
    x = np.broadcast_to(np.asarray(x0, float), (n_paths, n)).copy()
    gens = [_stream(seed, 3, 0, i) for i in range(n)]
    klow = np.zeros((n_paths, n))
    kup = np.zeros((n_paths, n))
    contacts = 0.0

    rec_idx = _record_indices(n_steps, record_stride)
    rec = [x.copy()]
    rec_t = [t0]
    for j in range(1, n_steps + 1):
        prev_new = None
        for i in range(n):
            raw = _euler_raw(specs[i], x[:, i], dt, gens[i].standard_normal(n_paths))
            if i == 0:
                proj = raw
            elif side == "right":
                proj = np.maximum(raw, prev_new)
                klow[:, i] += np.maximum(prev_new - raw, 0.0)
                contacts += float(np.mean(proj != raw))
            else:
                proj = np.minimum(raw, prev_new)
                kup[:, i] += np.maximum(raw - prev_new, 0.0)
                contacts += float(np.mean(proj != raw))
            x[:, i] = proj
            prev_new = x[:, i]
        if j in rec_idx:
            rec_t.append(t0 + j * dt)
            rec.append(x.copy())

    return PathBundle(
        grid=np.asarray(rec_t),
        levels=[np.asarray(rec)],
        k_lower=[klow],
        k_upper=[kup],
        tau=np.full(n_paths, np.inf),
        seed=seed,
        dt=dt,
        level_names=["edge"],
        contact_fraction=contacts / max(n_steps * (n - 1), 1),
    )
