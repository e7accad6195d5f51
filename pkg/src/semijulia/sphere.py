"""Points of the Riemann sphere, the chordal metric and point clouds.

The spherical metric used throughout is the chordal metric

    sigma(z, w) = 2|z - w| / sqrt((1 + |z|^2)(1 + |w|^2)),
    sigma(z, oo) = 2 / sqrt(1 + |z|^2),

i.e. Euclidean distance after stereographic projection onto the unit
sphere in R^3. The sphere therefore has diameter 2.
"""
from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree


@dataclass(frozen=True, slots=True)
class SpherePoint:
    """A finite complex number, or the point at infinity.

    Large finite values are never silently turned into infinity; use
    :data:`INF` (or ``SpherePoint.infinity()``) explicitly.
    """

    z: complex = 0j
    is_inf: bool = False

    def __post_init__(self):
        if self.is_inf:
            object.__setattr__(self, "z", 0j)
        else:
            z = complex(self.z)
            if not cmath.isfinite(z):
                raise ValueError(f"finite sphere point has non-finite coordinates: {z!r}")
            object.__setattr__(self, "z", z)

    @classmethod
    def infinity(cls) -> SpherePoint:
        return INF

    @classmethod
    def of(cls, value) -> SpherePoint:
        """Coerce a complex/real number or a SpherePoint."""
        if isinstance(value, SpherePoint):
            return value
        if isinstance(value, str) and value.strip().lower() in ("inf", "infinity", "oo"):
            return INF
        return cls(complex(value))

    def __repr__(self):
        return "SpherePoint(inf)" if self.is_inf else f"SpherePoint({self.z!r})"


INF = SpherePoint(0j, True)


def chordal_dist(p, q) -> float:
    """Chordal distance between two sphere points (value in [0, 2])."""
    p = SpherePoint.of(p)
    q = SpherePoint.of(q)
    if p.is_inf and q.is_inf:
        return 0.0
    if p.is_inf:
        return 2.0 / math.sqrt(1.0 + abs(q.z) ** 2)
    if q.is_inf:
        return 2.0 / math.sqrt(1.0 + abs(p.z) ** 2)
    return 2.0 * abs(p.z - q.z) / math.sqrt((1.0 + abs(p.z) ** 2) * (1.0 + abs(q.z) ** 2))


def stereographic(values: np.ndarray, inf_mask: np.ndarray) -> np.ndarray:
    """Map sphere points to the unit sphere in R^3, shape (n, 3).

    Chordal distance equals the Euclidean distance of these embeddings.
    """
    z = np.asarray(values, dtype=complex)
    s = 1.0 + np.abs(z) ** 2
    out = np.empty((z.size, 3))
    out[:, 0] = 2.0 * z.real / s
    out[:, 1] = 2.0 * z.imag / s
    out[:, 2] = (np.abs(z) ** 2 - 1.0) / s
    out[np.asarray(inf_mask, dtype=bool)] = (0.0, 0.0, 1.0)
    return out


@dataclass(frozen=True)
class PointCloud:
    """A finite set of sphere points approximating a Julia set.

    ``values`` holds the finite coordinates (0 where ``inf_mask`` is set).
    ``params`` records whatever is needed to regenerate the cloud.
    """

    values: np.ndarray
    inf_mask: np.ndarray
    method_tag: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        values = np.array(self.values, dtype=complex).reshape(-1)
        mask = np.array(self.inf_mask, dtype=bool).reshape(-1)
        if values.shape != mask.shape:
            raise ValueError("values and inf_mask must have the same length")
        values[mask] = 0j
        if not np.all(np.isfinite(values)):
            raise ValueError("point cloud contains non-finite finite-coordinates")
        values.flags.writeable = False
        mask.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "inf_mask", mask)

    @classmethod
    def from_points(cls, points: Iterable, method_tag: str = "", params: dict | None = None) -> PointCloud:
        pts = [SpherePoint.of(p) for p in points]
        return cls(
            np.array([p.z for p in pts], dtype=complex),
            np.array([p.is_inf for p in pts], dtype=bool),
            method_tag,
            dict(params or {}),
        )

    @classmethod
    def from_complex(cls, values, method_tag: str = "", params: dict | None = None) -> PointCloud:
        values = np.asarray(values, dtype=complex).reshape(-1)
        return cls(values, np.zeros(values.shape, dtype=bool), method_tag, dict(params or {}))

    def __len__(self):
        return self.values.size

    def __iter__(self):
        for z, inf in zip(self.values, self.inf_mask):
            yield INF if inf else SpherePoint(complex(z))

    @property
    def finite(self) -> np.ndarray:
        return self.values[~self.inf_mask]

    @property
    def n_inf(self) -> int:
        return int(self.inf_mask.sum())

    def embedding(self) -> np.ndarray:
        return stereographic(self.values, self.inf_mask)

    def with_meta(self, method_tag: str, params: dict) -> PointCloud:
        return PointCloud(self.values, self.inf_mask, method_tag, dict(params))

    # -- serialization -------------------------------------------------

    def to_text(self) -> str:
        lines = []
        for z, inf in zip(self.values, self.inf_mask):
            lines.append("inf" if inf else f"{float(z.real)!r} {float(z.imag)!r}")
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_text(cls, text: str, method_tag: str = "", params: dict | None = None) -> PointCloud:
        pts = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if line.lower() == "inf":
                pts.append(INF)
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected 're im' or 'inf', got {line!r}")
            pts.append(SpherePoint(complex(float(parts[0]), float(parts[1]))))
        return cls.from_points(pts, method_tag, params)

    def to_json_obj(self) -> dict:
        pts = [
            {"inf": True} if inf else {"re": float(z.real), "im": float(z.imag)}
            for z, inf in zip(self.values, self.inf_mask)
        ]
        return {"method": self.method_tag, "params": self.params, "points": pts}

    @classmethod
    def from_json_obj(cls, obj) -> PointCloud:
        if isinstance(obj, list):
            obj = {"points": obj}
        pts = []
        for rec in obj["points"]:
            if rec.get("inf"):
                pts.append(INF)
            else:
                pts.append(SpherePoint(complex(rec["re"], rec["im"])))
        return cls.from_points(pts, obj.get("method", ""), obj.get("params"))

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True)


def _as_cloud(c) -> PointCloud:
    if isinstance(c, PointCloud):
        return c
    return PointCloud.from_points(c)


def spherical_diameter(cloud) -> float:
    """Maximum pairwise chordal distance of a nonempty cloud."""
    cloud = _as_cloud(cloud)
    if len(cloud) == 0:
        raise ValueError("spherical_diameter of an empty cloud")
    x = cloud.embedding()
    if len(x) > 64:
        # diameter is attained at extreme points
        from scipy.spatial import ConvexHull, QhullError

        try:
            x = x[ConvexHull(x).vertices]
        except (QhullError, ValueError):
            pass
    best = 0.0
    for start in range(0, len(x), 512):
        block = x[start:start + 512]
        d = np.sqrt(((block[:, None, :] - x[None, :, :]) ** 2).sum(axis=-1))
        best = max(best, float(d.max()))
    return min(best, 2.0)


def directed_hausdorff(a, b) -> float:
    """sup over a of the chordal distance to b."""
    a = _as_cloud(a)
    b = _as_cloud(b)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("Hausdorff distance needs nonempty clouds")
    dist, _ = cKDTree(b.embedding()).query(a.embedding(), k=1)
    return float(np.max(dist))


def hausdorff_dist(a, b) -> float:
    """Symmetric Hausdorff distance in the chordal metric."""
    return max(directed_hausdorff(a, b), directed_hausdorff(b, a))


def nearest_chordal(cloud, targets: Sequence) -> np.ndarray:
    """Chordal distance from each target point to the nearest cloud point."""
    cloud = _as_cloud(cloud)
    t = _as_cloud(targets)
    dist, _ = cKDTree(cloud.embedding()).query(t.embedding(), k=1)
    return np.asarray(dist)
