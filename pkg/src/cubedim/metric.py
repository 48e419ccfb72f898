"""Finite metric spaces: distances, balls, diameters, doubling estimates.

A space is a list of points with contiguous integer ids plus a metric
descriptor. Supported metrics: euclidean coordinates, an explicit distance
matrix, snowflaked variants (d^epsilon), and the longest-common-prefix
ultrametric on symbol strings. Every set in the package (subsets, balls,
cubes) is an id array over one of these spaces.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import InvalidArgumentError, PointsFileError

DEFAULT_CACHE_LIMIT = 4096

_KINDS = ("euclidean", "matrix", "snowflake", "ultrametric")


@dataclass(frozen=True)
class MetricDescriptor:
    """What metric the space carries.

    ``scale`` multiplies the final distance (used by diameter normalization);
    ``epsilon`` is the snowflake exponent applied before scaling.
    """

    kind: str
    epsilon: float = 1.0
    arity: int = 0
    base: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise InvalidArgumentError(f"unknown metric kind {self.kind!r}")
        if not (0.0 < self.epsilon <= 1.0):
            raise InvalidArgumentError("snowflake epsilon must be in (0, 1]")
        if self.kind == "ultrametric":
            if self.arity < 2:
                raise InvalidArgumentError("ultrametric arity must be >= 2")
            if not (0.0 < self.base < 1.0):
                raise InvalidArgumentError("ultrametric base must be in (0, 1)")
        if self.scale <= 0.0:
            raise InvalidArgumentError("metric scale must be positive")

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        if self.epsilon != 1.0:
            out["epsilon"] = self.epsilon
        if self.kind == "ultrametric":
            out["arity"] = self.arity
            out["base"] = self.base
        if self.scale != 1.0:
            out["scale"] = self.scale
        return out


@dataclass
class DoublingEstimate:
    """Empirical doubling constant: max greedy count of r-balls covering a 2r-ball."""

    C_d_hat: int
    samples_used: int
    radii_probed: list = field(default_factory=list)


class MetricSpace:
    """Immutable finite metric space with id-indexed points."""

    def __init__(self, descriptor, coords=None, strings=None, matrix=None,
                 cache_limit=DEFAULT_CACHE_LIMIT):
        self.descriptor = descriptor
        self.cache_limit = cache_limit
        self._coords = None
        self._codes = None
        self.strings = None
        self._matrix = None
        self._dmat = None
        self._tree = None
        self._diam = None
        self._min_gap = None

        kind = descriptor.kind
        if kind in ("euclidean", "snowflake"):
            if coords is None:
                raise InvalidArgumentError(f"{kind} metric needs coordinate payloads")
            c = np.asarray(coords, dtype=np.float64)
            if c.ndim == 1:
                c = c[:, None]
            if c.ndim != 2 or c.shape[0] == 0:
                raise InvalidArgumentError("coordinates must be a non-empty 2d array")
            self._coords = np.ascontiguousarray(c)
            self.n = c.shape[0]
        elif kind == "ultrametric":
            if not strings:
                raise InvalidArgumentError("ultrametric metric needs string payloads")
            length = len(strings[0])
            codes = np.zeros((len(strings), max(length, 1)), dtype=np.int16)
            for i, s in enumerate(strings):
                if len(s) != length:
                    raise InvalidArgumentError("ultrametric strings must share one length")
                for j, ch in enumerate(s):
                    codes[i, j] = ord(ch)
            self.strings = list(strings)
            self._codes = codes
            self.n = len(strings)
        elif kind == "matrix":
            m = np.asarray(matrix, dtype=np.float64)
            if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
                raise InvalidArgumentError("matrix metric needs a square distance matrix")
            if not np.allclose(m, m.T, rtol=0, atol=0):
                raise InvalidArgumentError("distance matrix must be symmetric")
            if np.any(np.diag(m) != 0.0):
                raise InvalidArgumentError("distance matrix diagonal must be zero")
            off = m + np.eye(m.shape[0])
            if np.any(off <= 0.0):
                raise InvalidArgumentError("off-diagonal distances must be positive")
            self._matrix = m
            self.n = m.shape[0]
        else:  # pragma: no cover - descriptor validates kinds
            raise InvalidArgumentError(kind)
        self.ids = np.arange(self.n, dtype=np.int64)

    # -- raw payload access -------------------------------------------------

    @property
    def coords(self):
        return self._coords

    def _check_id(self, p):
        if not (0 <= p < self.n):
            raise InvalidArgumentError(f"unknown point id {p} (n={self.n})")

    # -- distances ----------------------------------------------------------

    def _transform(self, base):
        d = self.descriptor
        if d.epsilon != 1.0:
            base = np.power(base, d.epsilon) if isinstance(base, np.ndarray) else base ** d.epsilon
        if d.scale != 1.0:
            base = base * d.scale
        return base

    def _base_row(self, p):
        """Untransformed distances from p to all points."""
        kind = self.descriptor.kind
        if kind in ("euclidean", "snowflake"):
            diff = self._coords - self._coords[p]
            return np.sqrt(np.einsum("ij,ij->i", diff, diff))
        if kind == "ultrametric":
            neq = self._codes != self._codes[p]
            length = self._codes.shape[1]
            lcp = np.where(neq.any(axis=1), np.argmax(neq, axis=1), length)
            row = np.power(self.descriptor.base, lcp.astype(np.float64))
            row[lcp == length] = 0.0
            return row
        return self._matrix[p].copy()

    def row(self, p) -> np.ndarray:
        """Distances from p to every point, as a length-n vector."""
        self._check_id(p)
        if self._dmat is not None:
            return self._dmat[p]
        return self._transform(self._base_row(p))

    def distance_matrix(self) -> np.ndarray:
        """Dense distance matrix, cached when n <= cache_limit."""
        if self._dmat is None:
            kind = self.descriptor.kind
            if kind in ("euclidean", "snowflake"):
                base = kernels.pairwise_distances(self._coords)
            elif kind == "matrix":
                base = self._matrix
            else:
                base = np.vstack([self._base_row(i) for i in range(self.n)])
            dmat = self._transform(base.astype(np.float64, copy=True))
            np.fill_diagonal(dmat, 0.0)
            if self.n <= self.cache_limit:
                self._dmat = dmat
            return dmat
        return self._dmat

    def _ensure_cache(self):
        if self._dmat is None and self.n <= self.cache_limit:
            self.distance_matrix()
        return self._dmat

    def distance(self, p, q) -> float:
        """d(p, q) per the descriptor; symmetric, zero iff the stored points coincide."""
        self._check_id(p)
        self._check_id(q)
        if p == q:
            return 0.0
        if self._dmat is not None:
            return float(self._dmat[p, q])
        return float(self.row(p)[q])

    # -- balls and diameters --------------------------------------------------

    def ball_members(self, x, r) -> np.ndarray:
        """Ids q with d(x, q) < r (strict), ascending. Includes x for r > 0."""
        self._check_id(x)
        if r <= 0:
            raise InvalidArgumentError("ball radius must be positive")
        kind = self.descriptor.kind
        if kind in ("euclidean", "snowflake") and self.n > self.cache_limit:
            tree = self._get_tree()
            base_r = self._invert_radius(r)
            cand = np.asarray(tree.query_ball_point(self._coords[x], base_r * (1 + 1e-12)),
                              dtype=np.int64)
            row = self._transform(np.sqrt(
                np.einsum("ij,ij->i", self._coords[cand] - self._coords[x],
                          self._coords[cand] - self._coords[x])))
            members = cand[row < r]
            members.sort()
            return members
        row = self.row(x)
        return np.flatnonzero(row < r).astype(np.int64)

    def _invert_radius(self, r) -> float:
        """Base-metric radius whose transformed value is r."""
        d = self.descriptor
        base = r / d.scale
        if d.epsilon != 1.0:
            base = base ** (1.0 / d.epsilon)
        return base

    def _get_tree(self):
        if self._tree is None:
            from scipy.spatial import cKDTree

            self._tree = cKDTree(self._coords)
        return self._tree

    def diameter(self, subset=None) -> float:
        """Max pairwise distance over the subset (whole space by default)."""
        if subset is None:
            if self._diam is None:
                self._diam = self.diameter(self.ids)
            return self._diam
        ids = np.asarray(subset, dtype=np.int64)
        if ids.size == 0:
            raise InvalidArgumentError("diameter of an empty subset")
        if ids.size == 1:
            return 0.0
        kind = self.descriptor.kind
        if kind in ("euclidean", "snowflake"):
            return float(self._transform(self._euclid_diam(ids)))
        if kind == "ultrametric":
            rows = self._codes[np.sort(ids)]
            # min lcp over the set is attained by the lexicographic extremes
            order = np.lexsort(rows.T[::-1])
            first, last = rows[order[0]], rows[order[-1]]
            neq = first != last
            if not neq.any():
                return 0.0
            lcp = int(np.argmax(neq))
            return float(self._transform(self.descriptor.base ** lcp))
        sub = self._matrix[np.ix_(ids, ids)]
        return float(self._transform(sub.max()))

    def _euclid_diam(self, ids) -> float:
        pts = self._coords[ids]
        if pts.shape[1] == 1:
            return float(pts.max() - pts.min())
        if ids.size <= 2048:
            d2 = 0.0
            for start in range(0, ids.size, 512):
                block = pts[start:start + 512]
                diff = block[:, None, :] - pts[None, :, :]
                d2 = max(d2, float(np.einsum("ijk,ijk->ij", diff, diff).max()))
            return float(np.sqrt(d2))
        from scipy.spatial import ConvexHull

        hull = pts[ConvexHull(pts).vertices]
        diff = hull[:, None, :] - hull[None, :, :]
        return float(np.sqrt(np.einsum("ijk,ijk->ij", diff, diff).max()))

    def min_positive_distance(self) -> float:
        """Smallest nonzero pairwise distance; inf for a singleton space."""
        if self._min_gap is not None:
            return self._min_gap
        if self.n == 1:
            self._min_gap = float("inf")
            return self._min_gap
        kind = self.descriptor.kind
        if kind in ("euclidean", "snowflake"):
            from scipy.spatial import cKDTree

            tree = self._get_tree() if self.n > self.cache_limit else cKDTree(self._coords)
            d, _ = tree.query(self._coords, k=2)
            base = float(d[:, 1].min())
        elif kind == "ultrametric":
            order = np.lexsort(self._codes.T[::-1])
            rows = self._codes[order]
            neq = rows[:-1] != rows[1:]
            lcps = np.where(neq.any(axis=1), np.argmax(neq, axis=1), self._codes.shape[1])
            max_lcp = int(lcps[lcps < self._codes.shape[1]].max()) if np.any(
                lcps < self._codes.shape[1]) else None
            if max_lcp is None:
                self._min_gap = float("inf")
                return self._min_gap
            base = self.descriptor.base ** max_lcp
        else:
            m = self._matrix + np.diag(np.full(self.n, np.inf))
            base = float(m.min())
        self._min_gap = float(self._transform(base))
        return self._min_gap

    # -- derived spaces -------------------------------------------------------

    def rescaled(self, factor) -> "MetricSpace":
        """Same points, metric multiplied by factor."""
        if factor <= 0:
            raise InvalidArgumentError("scale factor must be positive")
        d = self.descriptor
        new_desc = MetricDescriptor(d.kind, d.epsilon, d.arity, d.base, d.scale * factor)
        return self._clone(new_desc)

    def snowflaked(self, epsilon) -> "MetricSpace":
        """Same points, metric d^epsilon. Scale is re-applied after the power."""
        if not (0.0 < epsilon <= 1.0):
            raise InvalidArgumentError("snowflake epsilon must be in (0, 1]")
        d = self.descriptor
        kind = "snowflake" if d.kind in ("euclidean", "snowflake") else d.kind
        new_desc = MetricDescriptor(kind, d.epsilon * epsilon, d.arity, d.base,
                                    d.scale ** epsilon)
        return self._clone(new_desc)

    def normalized(self, target=1.0 - 1e-9) -> "MetricSpace":
        """Rescale so the diameter equals target (no-op for singletons)."""
        diam = self.diameter()
        if diam == 0.0:
            return self
        return self.rescaled(target / diam)

    def _clone(self, desc) -> "MetricSpace":
        if desc.kind in ("euclidean", "snowflake"):
            return MetricSpace(desc, coords=self._coords, cache_limit=self.cache_limit)
        if desc.kind == "ultrametric":
            return MetricSpace(desc, strings=self.strings, cache_limit=self.cache_limit)
        return MetricSpace(desc, matrix=self._matrix, cache_limit=self.cache_limit)

    # -- doubling ------------------------------------------------------------

    def estimate_doubling(self, sample_count=32, rng_seed=0) -> DoublingEstimate:
        """Greedy estimate of the doubling constant over sampled (x, r) pairs.

        Each sample greedily covers ball(x, 2r) with radius-r balls centered
        at member points; the estimate is the running maximum, so it is
        monotone in sample_count for a fixed seed.
        """
        if sample_count < 1:
            raise InvalidArgumentError("sample_count must be >= 1")
        if self.n == 1:
            return DoublingEstimate(1, sample_count, [])
        rng = np.random.default_rng(rng_seed)
        diam = self.diameter()
        gap = self.min_positive_distance()
        lo, hi = np.log(max(gap, 1e-300)), np.log(max(diam / 2.0, gap * 2.0))
        best = 1
        radii = []
        for _ in range(sample_count):
            x = int(rng.integers(self.n))
            r = float(np.exp(rng.uniform(lo, hi)))
            radii.append(r)
            members = self.ball_members(x, 2.0 * r)
            count = self._greedy_ball_cover_count(members, r)
            best = max(best, count)
        return DoublingEstimate(best, sample_count, radii)

    def _greedy_ball_cover_count(self, members, r) -> int:
        remaining = list(members)
        remaining_set = set(remaining)
        count = 0
        for p in remaining:
            if p not in remaining_set:
                continue
            count += 1
            row = self.row(p)
            for q in list(remaining_set):
                if row[q] < r:
                    remaining_set.discard(q)
            if not remaining_set:
                break
        return count


# -- points files --------------------------------------------------------


def load_points(path, cache_limit=DEFAULT_CACHE_LIMIT) -> MetricSpace:
    """Read a points JSON document and validate it into a MetricSpace."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise PointsFileError(f"cannot parse points file {path}: {exc}") from exc
    return space_from_json(doc, cache_limit=cache_limit)


def space_from_json(doc, cache_limit=DEFAULT_CACHE_LIMIT) -> MetricSpace:
    if not isinstance(doc, dict) or "metric" not in doc:
        raise PointsFileError("points document must be an object with a 'metric' field")
    m = doc["metric"]
    kind = m.get("kind")
    try:
        if kind in ("euclidean", "snowflake"):
            pts = doc.get("points")
            if not pts:
                raise PointsFileError("field 'points': empty or missing")
            desc = MetricDescriptor(kind, epsilon=float(m.get("epsilon", 1.0)),
                                    scale=float(m.get("scale", 1.0)))
            return MetricSpace(desc, coords=np.asarray(pts, dtype=np.float64),
                               cache_limit=cache_limit)
        if kind == "ultrametric":
            pts = doc.get("points")
            if not pts:
                raise PointsFileError("field 'points': empty or missing")
            desc = MetricDescriptor(kind, arity=int(m["arity"]), base=float(m["base"]),
                                    scale=float(m.get("scale", 1.0)))
            return MetricSpace(desc, strings=[str(s) for s in pts], cache_limit=cache_limit)
        if kind == "matrix":
            tri = m.get("matrix")
            if tri is None:
                raise PointsFileError("field 'metric.matrix': missing for matrix kind")
            full = _matrix_from_lower_triangular(tri)
            desc = MetricDescriptor(kind, scale=float(m.get("scale", 1.0)))
            space = MetricSpace(desc, matrix=full, cache_limit=cache_limit)
            _spot_check_triangle(space)
            return space
    except KeyError as exc:
        raise PointsFileError(f"field 'metric.{exc.args[0]}': missing") from exc
    except (TypeError, ValueError, InvalidArgumentError) as exc:
        raise PointsFileError(f"invalid points document: {exc}") from exc
    raise PointsFileError(f"field 'metric.kind': unknown kind {kind!r}")


def _matrix_from_lower_triangular(tri):
    tri = list(tri)
    # solve k(k-1)/2 = len for k
    n = int((1 + np.sqrt(1 + 8 * len(tri))) / 2)
    if n * (n - 1) // 2 != len(tri):
        raise PointsFileError("field 'metric.matrix': length is not a triangular number")
    full = np.zeros((n, n), dtype=np.float64)
    pos = 0
    for i in range(1, n):
        for j in range(i):
            full[i, j] = full[j, i] = float(tri[pos])
            pos += 1
    return full


def _spot_check_triangle(space, samples=10000, seed=0):
    """Probabilistic triangle-inequality check for matrix-supplied metrics."""
    if space.n < 3:
        return
    rng = np.random.default_rng(seed)
    m = space._matrix
    idx = rng.integers(space.n, size=(samples, 3))
    p, q, s = idx[:, 0], idx[:, 1], idx[:, 2]
    bad = m[p, q] > m[p, s] + m[s, q] + 1e-12 * np.maximum(m[p, q], 1.0)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise PointsFileError(
            f"triangle inequality fails for triple ({p[i]}, {q[i]}, {s[i]})")


def save_points(space: MetricSpace, path) -> None:
    doc = {"metric": space.descriptor.to_json()}
    kind = space.descriptor.kind
    if kind in ("euclidean", "snowflake"):
        doc["points"] = [[float(v) for v in row] for row in space.coords]
    elif kind == "ultrametric":
        doc["points"] = list(space.strings)
    else:
        tri = []
        for i in range(1, space.n):
            tri.extend(float(space._matrix[i, j]) for j in range(i))
        doc["metric"]["matrix"] = tri
        doc["points"] = list(range(space.n))
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")
