"""Dimension estimators on top of cube systems and covering counts.

Hausdorff dimension comes from the scaling of the cubic measure; Minkowski
(box) dimension from a least-squares fit of log dyadic counts; the Assouad
spectrum and Assouad dimension from the maximum local log-count slope over
admissible zoom windows. All estimators are deterministic given seeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .covering import greedy_cover_count
from .cubes import (DIAMETER_SLACK, AdjacentFamily, CubeSystem, circumscribed_cube,
                    r_grid)
from .errors import (DegenerateBallError, InsufficientScalesError,
                     InvalidArgumentError, ScaleExhaustedError)

HAUSDORFF_SLOPE_TOL = 0.005
BISECTION_STEPS = 20
BISECTION_TOL = 1e-3


@dataclass
class MeasureValue:
    s: float
    r: float
    value: float
    m_star: int
    flags: list = field(default_factory=list)


@dataclass
class DimensionEstimate:
    kind: str
    value: float
    theta: float | None = None
    window: list = field(default_factory=list)
    slope: float = 0.0
    intercept: float = 0.0
    residual: float = 0.0
    system_id: int = 0
    seed: int = 0
    flags: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {
            "kind": self.kind,
            "value": round(float(self.value), 12),
            "window": list(self.window),
            "slope": round(float(self.slope), 12),
            "intercept": round(float(self.intercept), 12),
            "residual": round(float(self.residual), 12),
            "system_id": self.system_id,
            "seed": self.seed,
            "flags": sorted(self.flags),
        }
        if self.theta is not None:
            out["theta"] = self.theta
        return out


def _fit_line(xs, ys):
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = float(np.sqrt(np.mean((ys - (slope * xs + intercept)) ** 2)))
    return float(slope), float(intercept), resid


# -- cubic measure and Hausdorff dimension -----------------------------------


def cubic_measure(system: CubeSystem, E, s: float, r: float) -> MeasureValue:
    """min over levels m with 4*C0*delta^m <= r of the |Q|^s sum over cubes meeting E."""
    E = np.asarray(E, dtype=np.int64)
    if E.size == 0:
        raise InvalidArgumentError("E must be non-empty")
    if s < 0:
        raise InvalidArgumentError("exponent s must be >= 0")
    p = system.params
    admissible = [m for m in range(system.max_level + 1)
                  if 4.0 * p.C0 * p.delta ** m <= r * (1 + 1e-12)]
    if not admissible:
        raise ScaleExhaustedError(
            f"no admissible level: 4*C0*delta^m <= {r:g} needs m > {system.max_level}",
            deepest_available=system.max_level)
    sums = system.level_sums(E, s)
    best_m = min(admissible, key=lambda m: (sums[m], m))
    value = sums[best_m]
    flags = ["saturated-at-depth"] if (value == 0.0 and s > 0) else []
    return MeasureValue(s=s, r=r, value=float(value), m_star=best_m, flags=flags)


def h_greedy_sum(space, E, s: float, r: float) -> float:
    """Greedy arbitrary-set comparison value for the Hausdorff pre-measure."""
    sets = greedy_cover_count(space, E, r, return_sets=True)
    return float(sum(space.diameter(block) ** s if s > 0 else 1.0 for block in sets))


def _measure_slope(system, E, s, r_schedule):
    """Fitted slope of log M^s_r against log(1/r); None when underdetermined."""
    xs, ys = [], []
    for r in r_schedule:
        mv = cubic_measure(system, E, s, r)
        if mv.value > 0:
            xs.append(math.log(1.0 / r))
            ys.append(math.log(mv.value))
    if len(xs) < 2 or len(set(xs)) < 2:
        return None
    slope, _, _ = _fit_line(xs, ys)
    return slope


def hausdorff_dim_estimate(system: CubeSystem, E, s_grid=None, r_schedule=None,
                           doubling=None) -> DimensionEstimate:
    """Critical exponent of the cubic measure via bisection on the fitted slope.

    Measures grow as r shrinks below the critical exponent and flatten or
    decay above it; the estimate is the crossing point.
    """
    E = np.asarray(E, dtype=np.int64)
    p = system.params
    if r_schedule is None:
        r_schedule = [4.0 * p.C0 * p.delta ** j for j in range(1, system.max_level + 1)]
    usable = [r for r in r_schedule
              if any(4.0 * p.C0 * p.delta ** m <= r * (1 + 1e-12)
                     for m in range(system.max_level + 1))]
    if len(usable) < 3:
        raise InsufficientScalesError(
            f"hausdorff fit needs >= 3 resolvable scales, got {len(usable)} "
            f"(max_level={system.max_level})")

    if doubling is None:
        doubling = system.space.estimate_doubling(sample_count=16, rng_seed=7)
    hi = max(1.0, math.log2(max(2, doubling.C_d_hat)))
    lo = 0.0

    def grows(s):
        slope = _measure_slope(system, E, s, usable)
        if slope is None:
            return False
        return slope > HAUSDORFF_SLOPE_TOL

    if not grows(lo + 1e-9):
        value = 0.0
    elif grows(hi):
        value = hi
    else:
        a, b = lo, hi
        for _ in range(BISECTION_STEPS):
            mid = 0.5 * (a + b)
            if grows(mid):
                a = mid
            else:
                b = mid
            if b - a < BISECTION_TOL:
                break
        value = 0.5 * (a + b)

    diagnostics = {}
    flags = []
    grid = list(s_grid) if s_grid is not None else [round(value * f, 6) for f in
                                                    (0.5, 0.8, 1.0, 1.2, 1.5) if value > 0]
    slopes = []
    for s in grid:
        sl = _measure_slope(system, E, s, usable)
        diagnostics[f"slope@s={s:g}"] = sl
        slopes.append(sl)
    known = [sl for sl in slopes if sl is not None]
    if any(b > a + 1e-9 for a, b in zip(known, known[1:])):
        flags.append("unstable")

    return DimensionEstimate(kind="hausdorff", value=float(value),
                             window=[float(usable[0]), float(usable[-1])],
                             slope=value, system_id=system.system_id,
                             seed=system.seed, flags=flags, diagnostics=diagnostics)


# -- box dimension ------------------------------------------------------------


def least_admissible_level(delta: float, diam: float, offset: int = 0) -> int:
    """Smallest m >= 0 with delta^(offset + m) <= diam (with float slack)."""
    if diam <= 0:
        return 0
    m = 0
    while delta ** (offset + m) > diam * DIAMETER_SLACK:
        m += 1
    return m


def box_dim_estimate(family: AdjacentFamily, E, x: int | None = None,
                     R: float | None = None, m_window=None,
                     sharper: bool = False) -> DimensionEstimate:
    """Least-squares slope of log D(E, m) against m*log(1/delta)."""
    E = np.asarray(E, dtype=np.int64)
    if E.size == 0:
        raise InvalidArgumentError("E must be non-empty")
    space = family.space
    if E.size == 1:
        return DimensionEstimate(kind="box", value=0.0, window=[0, 0],
                                 flags=family.flags())
    if x is None:
        x = int(E[0])
        R = float(space.row(x)[E].max()) * (1.0 + 1e-9)
    members = space.ball_members(x, R)
    if np.setdiff1d(E, members).size:
        raise InvalidArgumentError("E is not contained in the ball B(x, R)")

    cc = circumscribed_cube(family, x, R)
    system = family.systems[cc.system_id]
    depth = system.max_level - cc.level
    diam_E = space.diameter(E)
    offset = cc.level if sharper else 0
    m_E = least_admissible_level(family.params.delta, diam_E, offset=offset)
    if m_window is None:
        m_window = list(range(m_E, depth + 1))
    m_window = [m for m in m_window if m_E <= m <= depth]
    if len(m_window) < 3:
        raise InsufficientScalesError(
            f"box fit needs >= 3 levels, window has {len(m_window)} "
            f"(m_E={m_E}, depth={depth})")

    target = np.intersect1d(E, members)
    counts = []
    for m in m_window:
        level = cc.level + m
        counts.append(int(np.unique(system.labels[level][target]).size))
    log_inv_delta = math.log(1.0 / family.params.delta)
    xs = [m * log_inv_delta for m in m_window]
    ys = [math.log(c) for c in counts]
    slope, intercept, resid = _fit_line(xs, ys)

    flags = family.flags()
    if counts[-1] == target.size:
        flags.append("depth-limited")
    return DimensionEstimate(kind="box", value=float(slope), window=list(m_window),
                             slope=float(slope), intercept=float(intercept),
                             residual=resid, system_id=cc.system_id,
                             seed=system.seed, flags=flags,
                             diagnostics={"counts": counts})


# -- local sweeps: Assouad spectrum and Assouad dimension ---------------------


@dataclass
class LocalWindow:
    """Counts and cube diameters for one (x, R) localization."""

    x: int
    R: float
    R_eff: float
    level: int
    system_id: int
    depth: int
    counts: list
    max_diams: list
    target_size: int


def sample_points(space, E, budget: int, seed: int) -> np.ndarray:
    """Up to ``budget`` seeded sample points of E plus the extremal ids.

    Extremal = lexicographic extremes plus the points with the smallest and
    largest nearest-neighbor gap inside E; zoom behavior concentrates there.
    """
    E = np.asarray(E, dtype=np.int64)
    extremal = [int(E[0]), int(E[-1])]
    if E.size > 2:
        sub = E
        if E.size > 4096:
            rng = np.random.default_rng([seed, 11])
            sub = np.sort(rng.choice(E, size=4096, replace=False))
        gaps = []
        for p in sub[:: max(1, sub.size // 512)]:
            row = space.row(int(p))[E]
            row = row[row > 0]
            if row.size:
                gaps.append((float(row.min()), int(p)))
        if gaps:
            extremal.append(min(gaps)[1])
            extremal.append(max(gaps)[1])
    if E.size <= budget:
        chosen = E
    else:
        rng = np.random.default_rng([seed, 13])
        chosen = rng.choice(E, size=budget, replace=False)
    return np.unique(np.concatenate([chosen, np.asarray(extremal, dtype=np.int64)]))


def _windows_for_point(family, E, x, radii, seen):
    space = family.space
    row = space.row(int(x))
    out = []
    for R in radii:
        members = np.flatnonzero(row < R)
        if members.size < 2:
            continue
        # the minimal containing cube depends only on the member set
        # (cube families are laminar), so identical balls are one window
        key = (int(members[0]), int(members[-1]), int(members.size),
               int(members.sum()))
        if key in seen:
            continue
        seen.add(key)
        target = members if E.size == space.n else np.intersect1d(E, members)
        if target.size == 0:
            continue
        try:
            cc = circumscribed_cube(family, int(x), float(R), members=members)
        except DegenerateBallError:
            continue
        system = family.systems[cc.system_id]
        depth = system.max_level - cc.level
        if depth < 2:
            continue
        counts, max_diams = [], []
        for m in range(1, depth + 1):
            level = cc.level + m
            idx = np.unique(system.labels[level][target])
            diams = system.diams_at(level)
            counts.append(int(idx.size))
            max_diams.append(float(diams[idx].max()))
        out.append(LocalWindow(
            x=int(x), R=float(R), R_eff=cc.R_eff, level=cc.level,
            system_id=cc.system_id, depth=depth, counts=counts,
            max_diams=max_diams, target_size=int(target.size)))
    return out


def local_windows(family: AdjacentFamily, E, sample_budget: int = 512,
                  seed: int = 0, radii=None, threads: int = 1) -> list:
    """Precompute per-(x, R) dyadic counts and cube diameters for the sweeps.

    The same table serves every theta and the Assouad sweep; admissibility
    filters are applied afterwards. With threads > 1 the per-point work runs
    in a pool, but results are collected in x order so the output (and every
    downstream max-reduction) is independent of the thread count.
    """
    E = np.asarray(E, dtype=np.int64)
    space = family.space
    max_level = family.max_level
    if radii is None:
        gap = space.min_positive_distance()
        radii = [R for R in r_grid(family.params.delta, max_level)
                 if not math.isfinite(gap) or R >= gap]
        # a radius just below 1 keeps whole-space windows in every sweep,
        # which pins the small-theta end of the spectrum to the global counts
        radii.insert(0, 1.0 - 1e-10)
    xs = sample_points(space, E, sample_budget, seed)
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        # per-x dedupe only: duplicate balls across points carry identical
        # counts, so every max/fit downstream is unchanged by thread count
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_x = list(pool.map(
                lambda x: _windows_for_point(family, E, x, radii, set()), xs))
        return [w for batch in per_x for w in batch]
    windows = []
    seen = set()
    for x in xs:
        windows.extend(_windows_for_point(family, E, x, radii, seen))
    return windows


def _window_slope(window: LocalWindow, bound: float, log_inv_delta: float):
    """LSQ slope of log counts over the levels whose cube diameters fit the bound.

    Counted-cube max diameters decrease with depth, so the admissible set is
    a contiguous range [m_lo, depth]; the fit absorbs the uniform constant
    into the intercept.
    """
    ms = [m for m, d in zip(range(1, window.depth + 1), window.max_diams)
          if d <= bound]
    if len(ms) < 2:
        return None, len(ms), False
    xs = [m * log_inv_delta for m in ms]
    ys = [math.log(window.counts[m - 1]) for m in ms]
    slope, _, _ = _fit_line(xs, ys)
    hits_depth = ms[-1] == window.depth
    return slope, len(ms), hits_depth


def _sweep_max_slope(family, windows, bound_fn, kind, theta, seed):
    log_inv_delta = math.log(1.0 / family.params.delta)
    best = None
    witness = None
    truncated = False
    usable = 0
    singleton_only = 0
    for w in windows:
        slope, n_adm, hits_depth = _window_slope(w, bound_fn(w), log_inv_delta)
        truncated = truncated or hits_depth
        if slope is None:
            if n_adm == 1:
                singleton_only += 1
            continue
        usable += 1
        if best is None or slope > best:
            best = slope
            witness = {"x": w.x, "R": w.R, "system_id": w.system_id}
    if best is None:
        reason = ("depth too small for the admissible windows"
                  if singleton_only else
                  f"cube-diameter bound too tight (C_delta_hat={family.C_delta_hat:g}, "
                  f"C_tilde={family.C_tilde:g})")
        raise InsufficientScalesError(
            f"{kind}: no (x, R) window with >= 2 admissible levels; {reason}")
    flags = family.flags()
    if truncated:
        flags.append("depth-limited")
    return DimensionEstimate(kind=kind, value=float(best), theta=theta,
                             window=[0, family.max_level], slope=float(best),
                             seed=seed, flags=flags,
                             diagnostics={"windows_used": usable, "witness": witness})


def assouad_spectrum_estimate(family: AdjacentFamily, E, theta: float,
                              sample_budget: int = 512, seed: int = 0,
                              windows=None, threads: int = 1) -> DimensionEstimate:
    """Max over (x, R) of the fitted local slope over theta-admissible levels.

    A level m is admissible for (x, R) when every counted cube at that level
    has diameter at most R_eff^(1/theta); admissible sets grow with theta,
    so the estimate is monotone up to fit noise.
    """
    if not (0.0 < theta < 1.0):
        raise InvalidArgumentError("theta must be in (0, 1)")
    if windows is None:
        windows = local_windows(family, E, sample_budget, seed, threads=threads)
    est = _sweep_max_slope(family, windows,
                           lambda w: w.R_eff ** (1.0 / theta),
                           "assouad_theta", theta, seed)
    return est


def assouad_dim_estimate(family: AdjacentFamily, E, sample_budget: int = 512,
                         seed: int = 0, windows=None,
                         threads: int = 1) -> DimensionEstimate:
    """Same sweep with the zoom constraint relaxed to diameters <= R_eff."""
    if windows is None:
        windows = local_windows(family, E, sample_budget, seed, threads=threads)
    return _sweep_max_slope(family, windows, lambda w: w.R_eff,
                            "assouad", None, seed)
