"""Round-annulus diagnostics for uniform perfectness of point clouds.

A compact set is uniformly perfect when the moduli of annuli separating it
are bounded. Here only round annuli ``r1 < |z - c| < r2`` are searched, so the
values reported are lower bounds for the conformal supremum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .sphere import PointCloud

EXHAUSTIVE_MAX = 600
NEIGHBORS_MAX = 6000
NEIGHBORS = 8
LOCAL_K = 48
_CHUNK = 1 << 22  # distance entries per block


@dataclass(frozen=True)
class RoundAnnulus:
    center: complex
    r1: float
    r2: float

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        r1, r2 = float(self.r1), float(self.r2)
        if not (0 < r1 < r2 < math.inf):
            raise ValueError(f"need 0 < r1 < r2 < inf, got r1={r1!r}, r2={r2!r}")
        object.__setattr__(self, "r1", r1)
        object.__setattr__(self, "r2", r2)

    @property
    def modulus(self) -> float:
        return math.log(self.r2 / self.r1) / (2 * math.pi)

    def shrunk(self, margin: float) -> RoundAnnulus:
        """The annulus with both radii moved inward by ``margin``."""
        return RoundAnnulus(self.center, self.r1 + margin, self.r2 - margin)

    def to_json_obj(self) -> dict:
        return {"center": [self.center.real, self.center.imag], "r1": self.r1, "r2": self.r2}


def modulus(a: RoundAnnulus) -> float:
    return a.modulus


def separates(a: RoundAnnulus, cloud: PointCloud) -> bool:
    """Exact test: empty open annulus, points on both sides (infinity is outside)."""
    if len(cloud) == 0:
        raise ValueError("empty cloud")
    d = np.abs(cloud.finite - a.center)
    if np.any((d > a.r1) & (d < a.r2)):
        return False
    inner = bool(np.any(d <= a.r1))
    outer = bool(np.any(d >= a.r2)) or cloud.n_inf > 0
    return inner and outer


def _resolve_mode(n: int, mode: str) -> str:
    if mode == "auto":
        if n <= EXHAUSTIVE_MAX:
            return "exhaustive"
        return "neighbors" if n <= NEIGHBORS_MAX else "local"
    if mode not in ("exhaustive", "neighbors", "local"):
        raise ValueError(f"unknown center mode {mode!r}")
    return mode


def candidate_centers(points: np.ndarray, mode: str = "auto") -> np.ndarray:
    """Cloud points plus midpoints, deduplicated and sorted lexicographically.

    ``"exhaustive"`` uses all pairwise midpoints; ``"neighbors"`` and
    ``"local"`` only midpoints with each point's 8 nearest neighbours.
    """
    z = np.asarray(points, dtype=complex)
    n = z.size
    mode = _resolve_mode(n, mode)
    if mode == "exhaustive":
        i, j = np.triu_indices(n, k=1)
        mids = (z[i] + z[j]) / 2
    else:
        k = min(NEIGHBORS + 1, n)
        xy = np.column_stack([z.real, z.imag])
        _, nn = cKDTree(xy).query(xy, k=k)
        nn = np.asarray(nn).reshape(n, k)[:, 1:]
        mids = ((z[:, None] + z[nn]) / 2).reshape(-1)
    return np.unique(np.concatenate([z, mids]))


def _sorted_distances(z, mode):
    """Yield (centers, sorted radial distances) blocks in center order."""
    cs = candidate_centers(z, mode)
    if _resolve_mode(z.size, mode) == "local":
        k = min(LOCAL_K, z.size)
        tree = cKDTree(np.column_stack([z.real, z.imag]))
        block = max(1, _CHUNK // k)
        for start in range(0, cs.size, block):
            c = cs[start:start + block]
            idx = np.asarray(tree.query(np.column_stack([c.real, c.imag]), k=k)[1]).reshape(c.size, k)
            # exact distances in the same arithmetic as the full scan
            yield c, np.sort(np.abs(z[idx] - c[:, None]), axis=1)
        return
    block = max(1, _CHUNK // z.size)
    for start in range(0, cs.size, block):
        c = cs[start:start + block]
        yield c, np.sort(np.abs(z[None, :] - c[:, None]), axis=1)


def _scan(cloud: PointCloud, floors, mode):
    z = cloud.finite
    if z.size < 2:
        raise ValueError("need at least two finite points")
    best = [(1.0, None)] * len(floors)
    for c, d in _sorted_distances(z, mode):
        hi = d[:, 1:]
        for fi, floor in enumerate(floors):
            lo = np.maximum(d[:, :-1], floor)
            ratio = np.where(hi > lo, hi / lo, 0.0)
            arg = np.argmax(ratio, axis=1)
            row_best = ratio[np.arange(c.size), arg]
            k = int(np.argmax(row_best))
            if row_best[k] > best[fi][0]:
                best[fi] = (float(row_best[k]), (c[k], float(lo[k, arg[k]]), float(hi[k, arg[k]])))
    out = []
    for _, b in best:
        if b is None:
            out.append(None)
        else:
            ann = RoundAnnulus(*b)
            out.append((ann.modulus, ann))
    return out


def max_separating_modulus(cloud: PointCloud, scale_floor: float, centers: str = "auto"):
    """Thickest separating round annulus with inner radius >= scale_floor.

    For every candidate center the radial distances d_0 <= d_1 <= ... to the
    cloud are sorted; each consecutive gap gives the annulus
    (max(d_i, scale_floor), d_(i+1)), which separates whenever it is
    nonempty. Returns ``(modulus, RoundAnnulus)`` or None. Ties (equal radius
    ratio) go to the lexicographically smallest center, then the smallest r1.

    In ``"local"`` mode (default above ``NEIGHBORS_MAX`` points) only the
    ``LOCAL_K`` nearest cloud points of each center are scanned, so annuli
    whose inner disk holds more points than that are not seen.
    """
    if scale_floor <= 0:
        raise ValueError("scale_floor must be positive")
    return _scan(cloud, [float(scale_floor)], centers)[0]


def perfectness_profile(cloud: PointCloud, floors, centers: str = "auto") -> list[tuple]:
    """``(floor, modulus, annulus)`` for each floor; floors must be positive and descending.

    Modulus is 0.0 (annulus None) when no annulus separates at that floor.
    """
    floors = [float(f) for f in floors]
    if any(f <= 0 for f in floors):
        raise ValueError("floors must be positive")
    if any(a < b for a, b in zip(floors, floors[1:])):
        raise ValueError("floors must be descending")
    results = _scan(cloud, floors, centers)
    return [(f, 0.0, None) if r is None else (f, r[0], r[1]) for f, r in zip(floors, results)]


def profile_to_json_obj(profile) -> list[dict]:
    return [
        {"floor": f, "modulus": m, "annulus": None if a is None else a.to_json_obj()}
        for f, m, a in profile
    ]


def invert_cloud(cloud: PointCloud) -> PointCloud:
    """Image of the cloud under z -> 1/z, for annuli that enclose infinity."""
    v = cloud.values
    zero = (v == 0) & ~cloud.inf_mask
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(cloud.inf_mask | zero, 0j, 1.0 / np.where(zero | cloud.inf_mask, 1.0, v))
    return PointCloud(w, zero, cloud.method_tag, dict(cloud.params, inverted=True))
