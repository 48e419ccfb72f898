"""Dyadic cube hierarchies, adjacent families, and circumscribed-cube queries.

A system is built from one net per level: every point is assigned to its
nearest deepest-level center, each level-(k+1) center to its nearest level-k
center, and a level-k cube collects the points whose ancestor chain passes
through its center. Nesting and partition hold by construction; the ball
sandwich and ball monotonicity are checked, not assumed.

An adjacent family holds several systems built from consecutive seeds and a
measured two-sided comparability certificate for circumscribed-cube queries.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (ConfigurationError, DegenerateBallError, InvalidArgumentError,
                     ScaleExhaustedError, StaleCubesError)
from .metric import MetricSpace
from .nets import NetLevel, NetParams, build_net, nearest_center

MAX_LEVEL_CAP = 12   # default depth cap for resolution-derived levels
HARD_LEVEL_CAP = 24  # explicit requests beyond this are configuration errors
NORMALIZED_DIAMETER = 1.0 - 1e-9
DIAMETER_SLACK = 1.0 + 1e-6


@dataclass
class DyadicCube:
    system_id: int
    k: int
    index: int
    center: int
    parent: "DyadicCube | None"
    members: np.ndarray
    diameter: float

    def __repr__(self):
        return (f"DyadicCube(sys={self.system_id}, k={self.k}, i={self.index}, "
                f"center={self.center}, n={self.members.size})")


@dataclass
class PropertyCheck:
    name: str
    ok: bool
    applicable: bool = True
    worst: float | None = None
    witness: object = None


@dataclass
class BuildReport:
    warnings: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)

    @property
    def all_ok(self):
        return all(c.ok for c in self.checks.values() if c.applicable)


def default_max_level(space: MetricSpace, delta: float) -> int:
    """Deepest level whose scale stays at or above the smallest point gap."""
    gap = space.min_positive_distance()
    if not math.isfinite(gap):
        return 1
    level = int(math.floor(math.log(1.0 / gap) / math.log(1.0 / delta) + 1e-9))
    return max(1, min(MAX_LEVEL_CAP, level))


class CubeSystem:
    """One delta-dyadic hierarchy over a diameter-normalized space."""

    def __init__(self, system_id, space, params, seed, levels, labels, parent_idx,
                 report):
        self.system_id = system_id
        self.space = space
        self.params = params
        self.seed = seed
        self.levels = levels
        self.labels = labels
        self.parent_idx = parent_idx
        self.report = report
        self.max_level = len(levels) - 1
        self._cubes = [None] * len(levels)
        self._diams = [None] * len(levels)
        self._contiguous = [None] * len(levels)

    # -- cube access ----------------------------------------------------------

    def cubes_at(self, k) -> list:
        if not (0 <= k <= self.max_level):
            raise InvalidArgumentError(f"level {k} out of range 0..{self.max_level}")
        if self._cubes[k] is None:
            centers = self.levels[k].centers
            order = np.argsort(self.labels[k], kind="stable")
            bounds = np.searchsorted(self.labels[k][order], np.arange(centers.size + 1))
            cubes = []
            for i, center in enumerate(centers):
                members = np.sort(order[bounds[i]:bounds[i + 1]])
                diam = self.space.diameter(members) if members.size else 0.0
                parent = None
                if k > 0:
                    parent = self.cubes_at(k - 1)[self.parent_idx[k][i]]
                cubes.append(DyadicCube(self.system_id, k, i, int(center), parent,
                                        members, diam))
            self._cubes[k] = cubes
        return self._cubes[k]

    def diams_at(self, k) -> np.ndarray:
        """Cube diameters at level k, indexed like the level's center list."""
        if self._diams[k] is None:
            self._diams[k] = np.array([c.diameter for c in self.cubes_at(k)])
        return self._diams[k]

    def contiguous_at(self, k) -> bool:
        """True when the level's cubes are contiguous id ranges (sorted payloads)."""
        if self._contiguous[k] is None:
            changes = int(np.count_nonzero(np.diff(self.labels[k]))) + 1
            self._contiguous[k] = changes == self.levels[k].centers.size
        return self._contiguous[k]

    def cube_of(self, x, k) -> DyadicCube:
        """The unique level-k cube containing point x."""
        if not (0 <= x < self.space.n):
            raise InvalidArgumentError(f"unknown point id {x}")
        if not (0 <= k <= self.max_level):
            raise InvalidArgumentError(f"level {k} out of range 0..{self.max_level}")
        return self.cubes_at(k)[int(self.labels[k][x])]

    def children_of(self, cube: DyadicCube) -> list:
        if cube.k >= self.max_level:
            return []
        nxt = self.cubes_at(cube.k + 1)
        pidx = self.parent_idx[cube.k + 1]
        return [nxt[i] for i in np.flatnonzero(pidx == cube.index)]

    def descendants_at(self, cube: DyadicCube, m: int) -> list:
        """Level-(cube.k + m) cubes inside the cube; they partition its members."""
        if m < 0:
            raise InvalidArgumentError("descendant offset m must be >= 0")
        target = cube.k + m
        if target > self.max_level:
            raise ScaleExhaustedError(
                f"level {target} exceeds max level {self.max_level}",
                deepest_available=self.max_level - cube.k)
        if m == 0:
            return [cube]
        idx = np.unique(self.labels[target][cube.members])
        level_cubes = self.cubes_at(target)
        return [level_cubes[i] for i in idx]

    def descendant_count(self, cube: DyadicCube, m: int, subset=None) -> int:
        """Number of level-(cube.k+m) cubes meeting ``subset`` (default: all members)."""
        target = cube.k + m
        if target > self.max_level:
            raise ScaleExhaustedError(
                f"level {target} exceeds max level {self.max_level}",
                deepest_available=self.max_level - cube.k)
        ids = cube.members if subset is None else subset
        return int(np.unique(self.labels[target][ids]).size)

    def level_sums(self, E, s) -> list:
        """Per level: sum of |Q|^s over cubes meeting E (the minimal level cover)."""
        out = []
        for k in range(self.max_level + 1):
            idx = np.unique(self.labels[k][E])
            if s == 0.0:
                out.append(float(idx.size))
            else:
                out.append(float(np.sum(self.diams_at(k)[idx] ** s)))
        return out


def build_system(space: MetricSpace, params: NetParams, seed: int = 0,
                 max_level: int | None = None, system_id: int = 0,
                 pre_normalized: bool = False) -> CubeSystem:
    """Build one cube system. The space is diameter-normalized first.

    Verifies the ball sandwich and ball monotonicity during the build; the
    results land in ``system.report``.
    """
    params.validate()
    norm = space if pre_normalized else space.normalized(
        NORMALIZED_DIAMETER * min(1.0, params.c0))
    if max_level is None:
        max_level = default_max_level(norm, params.delta)
    if max_level < 0:
        raise ConfigurationError("max_level must be >= 0")
    if max_level > HARD_LEVEL_CAP:
        raise ConfigurationError(
            f"max_level {max_level} exceeds the hard cap {HARD_LEVEL_CAP}")

    report = BuildReport()
    resolution_level = default_max_level(norm, params.delta)
    if max_level > resolution_level:
        report.warnings.append(
            f"max_level {max_level} is below the sample resolution "
            f"(nets repeat beyond level {resolution_level})")

    levels = [build_net(norm, k, params, seed) for k in range(max_level + 1)]

    # deepest-level assignment, then parent chains
    deepest = levels[-1].centers
    assign_L, dist_L = nearest_center(norm, deepest)
    parent_idx = [None]
    for k in range(1, max_level + 1):
        child_centers = levels[k].centers
        pidx, _ = nearest_center(norm, levels[k - 1].centers, query_ids=child_centers)
        parent_idx.append(pidx)

    labels = [None] * (max_level + 1)
    labels[max_level] = assign_L.astype(np.int64)
    for k in range(max_level - 1, -1, -1):
        labels[k] = parent_idx[k + 1][labels[k + 1]]

    system = CubeSystem(system_id, norm, params, seed, levels, labels, parent_idx,
                        report)
    report.checks["iii_inner"] = _check_inner_balls(system)
    report.checks["iii_outer"] = _check_outer_balls(system)
    report.checks["iv_ball_monotone"] = _check_ball_monotone(system)
    return system


def _check_inner_balls(system: CubeSystem) -> PropertyCheck:
    """B(center, c0 d^k / 3) must lie inside the center's cube, every level."""
    worst = 0.0
    witness = None
    ok = True
    for k in range(system.max_level + 1):
        inner = system.params.separation(k) / 3.0 * (1.0 - 1e-9)
        idx, dist = nearest_center(system.space, system.levels[k].centers)
        close = dist < inner
        bad = close & (idx != system.labels[k])
        if np.any(bad):
            ok = False
            p = int(np.flatnonzero(bad)[0])
            witness = {"level": k, "point": p,
                       "nearest_center": int(system.levels[k].centers[idx[p]]),
                       "assigned_center": int(system.levels[k].centers[system.labels[k][p]])}
            worst = max(worst, float((dist[bad] / inner).max()))
    return PropertyCheck("iii_inner", ok, worst=worst, witness=witness)


def _check_outer_balls(system: CubeSystem) -> PropertyCheck:
    """Every member sits within 2*C0*d^k of its cube center."""
    worst = 0.0
    witness = None
    ok = True
    for k in range(system.max_level + 1):
        outer = 2.0 * system.params.covering(k)
        centers = system.levels[k].centers
        order = np.argsort(system.labels[k], kind="stable")
        bounds = np.searchsorted(system.labels[k][order], np.arange(centers.size + 1))
        for cube_i, center in enumerate(centers):
            members = order[bounds[cube_i]:bounds[cube_i + 1]]
            if members.size <= 1:
                continue  # singleton cube: the only member is the center
            d = system.space.row(int(center))[members]
            ratio = float(d.max()) / outer
            if ratio > worst:
                worst = ratio
                if ratio > 1.0 + 1e-9:
                    witness = {"level": k, "center": int(center),
                               "point": int(members[int(np.argmax(d))])}
    if witness is not None:
        ok = False
    return PropertyCheck("iii_outer", ok, worst=worst, witness=witness)


def _check_ball_monotone(system: CubeSystem) -> PropertyCheck:
    """d(child center, parent center) + 2*C0*d^l <= 2*C0*d^k for parent-child pairs."""
    if system.max_level == 0:
        return PropertyCheck("iv_ball_monotone", True, applicable=False)
    worst = 0.0
    witness = None
    ok = True
    for k in range(1, system.max_level + 1):
        child_centers = system.levels[k].centers
        parent_centers = system.levels[k - 1].centers[system.parent_idx[k]]
        outer_child = 2.0 * system.params.covering(k)
        outer_parent = 2.0 * system.params.covering(k - 1)
        for ci, (c, p) in enumerate(zip(child_centers, parent_centers)):
            lhs = system.space.distance(int(c), int(p)) + outer_child
            ratio = lhs / outer_parent
            if ratio > worst:
                worst = ratio
                if ratio > 1.0 + 1e-9:
                    witness = {"level": k, "child_center": int(c), "parent_center": int(p)}
    if witness is not None:
        ok = False
    return PropertyCheck("iv_ball_monotone", ok, worst=worst, witness=witness)


def verify_system(system: CubeSystem) -> dict:
    """Exhaustive re-check of all four structural properties."""
    checks = {}

    # (i) nesting across consecutive level pairs via label/parent consistency
    if system.max_level == 0:
        checks["i_nesting"] = PropertyCheck("i_nesting", True, applicable=False)
    else:
        ok = True
        witness = None
        for k in range(system.max_level):
            expect = system.parent_idx[k + 1][system.labels[k + 1]]
            bad = np.flatnonzero(expect != system.labels[k])
            if bad.size:
                ok = False
                witness = {"level_pair": (k, k + 1), "point": int(bad[0])}
                break
        checks["i_nesting"] = PropertyCheck("i_nesting", ok, witness=witness)

    # (ii) partition per level: every point labeled, cubes disjoint, union = X
    ok = True
    witness = None
    for k in range(system.max_level + 1):
        sizes = np.bincount(system.labels[k], minlength=system.levels[k].centers.size)
        if int(sizes.sum()) != system.space.n:
            ok = False
            witness = {"level": k}
            break
        if np.any(sizes == 0):
            ok = False
            witness = {"level": k, "empty_cube": int(np.flatnonzero(sizes == 0)[0])}
            break
    checks["ii_partition"] = PropertyCheck("ii_partition", ok, witness=witness)

    checks["iii_inner"] = _check_inner_balls(system)
    checks["iii_outer"] = _check_outer_balls(system)
    checks["iv_ball_monotone"] = _check_ball_monotone(system)
    return checks


# -- adjacent families ------------------------------------------------------


@dataclass
class CircumscribedCube:
    system_id: int
    cube: DyadicCube
    level: int
    ratio: float
    R_eff: float
    cert: float
    flags: list = field(default_factory=list)


class AdjacentFamily:
    """K cube systems plus the measured circumscribed-cube certificate."""

    def __init__(self, space, params, systems, C_delta_hat, C_tilde, best_effort,
                 target_ratio, query_budget, seed, query_log, scale):
        self.space = space
        self.params = params
        self.systems = systems
        self.K = len(systems)
        self.C_delta_hat = C_delta_hat
        self.C_tilde = C_tilde
        self.best_effort = best_effort
        self.target_ratio = target_ratio
        self.query_budget = query_budget
        self.seed = seed
        self.query_log = query_log
        self.scale = scale

    @property
    def max_level(self):
        return min(s.max_level for s in self.systems)

    def flags(self):
        return ["best-effort-family"] if self.best_effort else []


def r_grid(delta: float, max_level: int, per_level: int = 8) -> list:
    """Radii delta^(j/q), j >= 1: the scales local estimators sweep."""
    return [float(delta ** (j / per_level))
            for j in range(1, per_level * max_level + 1)]


def _cert_terms(params, R_eff, level, diam):
    up = diam / R_eff
    down = R_eff / diam if diam > 0 else float("inf")
    scale = params.c0 * params.delta ** level
    lvl_up = 3.0 * R_eff / scale
    lvl_down = scale / (3.0 * R_eff)
    return max(up, down, lvl_up, lvl_down)


def _circumscribed_in_system(system: CubeSystem, x: int, members: np.ndarray):
    """Deepest ancestor cube of x containing every member id, or None.

    Cubes containing x form a single ancestor chain, so scanning deep to
    shallow returns the minimal containing cube of this system. On levels
    where cubes are contiguous id ranges the containment test is O(1).
    """
    first = int(members[0])
    last = int(members[-1])
    for k in range(system.max_level, -1, -1):
        labels = system.labels[k]
        idx = labels[x]
        if system.contiguous_at(k):
            if labels[first] == idx and labels[last] == idx:
                return system.cube_of(x, k)
        elif labels[first] == idx and labels[last] == idx and \
                np.all(labels[members] == idx):
            return system.cube_of(x, k)
    return None


def circumscribed_cube(family: AdjacentFamily, x: int, R: float,
                       members: np.ndarray | None = None) -> CircumscribedCube:
    """Minimal-diameter cube across systems containing B(x, R).

    The radius is first clamped into the two-sided ball convention
    (R <= 2 * diam of the members). ``members`` may be passed to avoid
    recomputing the ball.
    """
    if members is None:
        members = family.space.ball_members(x, R)
    if members.size < 2:
        raise DegenerateBallError(
            f"ball B({x}, {R:g}) holds {members.size} point(s); need at least 2")
    ball_diam = family.space.diameter(members)
    R_eff = min(R, 2.0 * ball_diam)

    best = None
    for system in family.systems:
        cube = _circumscribed_in_system(system, x, members)
        if cube is None:
            continue
        key = (cube.diameter, system.system_id)
        if best is None or key < (best[0].diameter, best[1]):
            best = (cube, system.system_id)
    if best is None:
        raise InvalidArgumentError("no system has a containing cube (missing root?)")
    cube, sys_id = best
    cert = _cert_terms(family.params, R_eff, cube.k, cube.diameter)
    flags = []
    if cert > family.C_delta_hat * (1 + 1e-9):
        flags.append("ratio-above-certificate")
    ratio = cube.diameter / R_eff if R_eff > 0 else float("inf")
    return CircumscribedCube(sys_id, cube, cube.k, ratio, R_eff, cert, flags)


def build_adjacent_family(space: MetricSpace, params: NetParams, K_max: int = 8,
                          query_budget: int = 500, target_ratio: float = 64.0,
                          seed: int = 0, max_level: int | None = None) -> AdjacentFamily:
    """Add systems (seeds seed, seed+1, ...) until the sampled worst-case
    circumscribed-cube certificate meets target_ratio, or K_max is reached.

    The query sample is fixed up front, so the stop rule and the recorded
    certificate are pure functions of (space, params, budgets, seed).
    """
    params.validate()
    if K_max < 1:
        raise ConfigurationError("K_max must be >= 1")
    if query_budget < 1:
        raise ConfigurationError("query_budget must be >= 1")
    raw_diam = space.diameter()
    norm = space.normalized(NORMALIZED_DIAMETER * min(1.0, params.c0))
    scale = 1.0 if raw_diam == 0 else (NORMALIZED_DIAMETER * min(1.0, params.c0)) / raw_diam

    probe = build_system(norm, params, seed=seed, max_level=max_level,
                         system_id=0, pre_normalized=True)
    L = probe.max_level

    rng = np.random.default_rng([seed, 104729])
    radii = r_grid(params.delta, L)
    queries = []
    for _ in range(query_budget):
        x = int(rng.integers(norm.n))
        R = radii[int(rng.integers(len(radii)))]
        queries.append((x, R))

    systems = [probe]
    # per-query best (smallest-diameter) containing cube across systems so far
    best_cert = np.full(len(queries), np.inf)
    best_diam = np.full(len(queries), np.inf)
    ball_cache = {}

    def eval_system(system):
        for qi, (x, R) in enumerate(queries):
            if qi not in ball_cache:
                m = norm.ball_members(x, R)
                if m.size < 2:
                    ball_cache[qi] = None
                    best_cert[qi] = 1.0  # degenerate: skipped by convention
                    best_diam[qi] = 0.0
                    continue
                ball_cache[qi] = (m, min(R, 2.0 * norm.diameter(m)))
            entry = ball_cache[qi]
            if entry is None:
                continue
            members, R_eff = entry
            cube = _circumscribed_in_system(system, x, members)
            if cube is None:
                continue
            if cube.diameter < best_diam[qi]:
                best_diam[qi] = cube.diameter
                best_cert[qi] = _cert_terms(params, R_eff, cube.k, cube.diameter)

    eval_system(probe)
    while float(np.max(best_cert, initial=1.0)) > target_ratio and len(systems) < K_max:
        t = len(systems)
        systems.append(build_system(norm, params, seed=seed + t, max_level=L,
                                    system_id=t, pre_normalized=True))
        eval_system(systems[-1])

    finite = best_cert[np.isfinite(best_cert)]
    worst = float(finite.max()) if finite.size else 1.0
    C_delta_hat = max(1.0, worst)
    C_tilde = 12.0 * params.C0 * C_delta_hat / params.c0
    best_effort = worst > target_ratio

    query_log = []
    for qi, (x, R) in enumerate(queries):
        entry = ball_cache.get(qi)
        query_log.append({
            "x": x, "R": R,
            "degenerate": entry is None,
            "cert": float(best_cert[qi]) if np.isfinite(best_cert[qi]) else None,
        })

    return AdjacentFamily(norm, params, systems, C_delta_hat, C_tilde, best_effort,
                          target_ratio, query_budget, seed, query_log, scale)


# -- serialization ----------------------------------------------------------


def file_hash(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def family_to_json(family: AdjacentFamily, points_hash: str = "") -> dict:
    systems = []
    for s in family.systems:
        levels = [{"k": lv.k, "centers": [int(c) for c in lv.centers]}
                  for lv in s.levels]
        parents = []
        for k in range(1, s.max_level + 1):
            for ci, c in enumerate(s.levels[k].centers):
                parents.append([int(c), int(s.levels[k - 1].centers[s.parent_idx[k][ci]])])
        systems.append({"seed": s.seed, "levels": levels, "parents": parents})
    return {
        "params": {"delta": family.params.delta, "c0": family.params.c0,
                   "C0": family.params.C0, "seed": family.seed,
                   "target_ratio": family.target_ratio,
                   "query_budget": family.query_budget},
        "systems": systems,
        "C_delta_hat": family.C_delta_hat,
        "C_tilde": family.C_tilde,
        "best_effort": family.best_effort,
        "scale": family.scale,
        "points_hash": points_hash,
    }


def save_family(family: AdjacentFamily, path, points_hash: str = "") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(family_to_json(family, points_hash), fh, sort_keys=True,
                  separators=(",", ":"))
        fh.write("\n")


def load_family(path, space: MetricSpace, points_hash: str | None = None) -> AdjacentFamily:
    """Rebuild a family from file; member lists are reconstructed and the
    partition/sandwich properties re-verified. Refuses mismatched or broken files."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if points_hash is not None and doc.get("points_hash") not in ("", points_hash):
        raise StaleCubesError("cubes file was built from a different points file")
    p = doc["params"]
    params = NetParams(delta=p["delta"], c0=p["c0"], C0=p["C0"])
    norm = space.normalized(NORMALIZED_DIAMETER * min(1.0, params.c0))
    systems = []
    for sid, sdoc in enumerate(doc["systems"]):
        system = _system_from_json(sdoc, norm, params, sid)
        checks = verify_system(system)
        for name in ("ii_partition", "iii_inner", "iii_outer"):
            if checks[name].applicable and not checks[name].ok:
                raise StaleCubesError(
                    f"cubes file fails property {name} on reload: {checks[name].witness}")
        systems.append(system)
    family = AdjacentFamily(norm, params, systems, doc["C_delta_hat"], doc["C_tilde"],
                            doc["best_effort"], p.get("target_ratio", 0.0),
                            p.get("query_budget", 0), p.get("seed", 0), [],
                            doc.get("scale", 1.0))
    return family


def _system_from_json(sdoc, norm, params, system_id) -> CubeSystem:
    levels = []
    for lv in sdoc["levels"]:
        centers = np.asarray(lv["centers"], dtype=np.int64)
        levels.append(NetLevel(k=lv["k"], centers=centers, params=params,
                               seed=sdoc["seed"]))
    max_level = len(levels) - 1
    center_pos = [
        {int(c): i for i, c in enumerate(lv.centers)} for lv in levels
    ]
    parent_idx = [None] + [np.zeros(levels[k].centers.size, dtype=np.int64)
                           for k in range(1, max_level + 1)]
    cursor = 0
    pairs = sdoc["parents"]
    for k in range(1, max_level + 1):
        for ci in range(levels[k].centers.size):
            child, parent = pairs[cursor]
            cursor += 1
            if int(child) != int(levels[k].centers[ci]):
                raise StaleCubesError("parent list does not match level centers")
            parent_idx[k][ci] = center_pos[k - 1][int(parent)]
    assign, _ = nearest_center(norm, levels[max_level].centers)
    labels = [None] * (max_level + 1)
    labels[max_level] = assign.astype(np.int64)
    for k in range(max_level - 1, -1, -1):
        labels[k] = parent_idx[k + 1][labels[k + 1]]
    report = BuildReport()
    return CubeSystem(system_id, norm, params, sdoc["seed"], levels, labels,
                      parent_idx, report)
