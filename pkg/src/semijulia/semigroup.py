"""Finitely generated rational semigroups and approximations of their Julia sets.

Words follow composition order: the word ``(i1, i2, ..., im)`` is the map
``g[i1] o g[i2] o ... o g[im]``, so ``g[im]`` is applied first.
"""
from __future__ import annotations

import hashlib
import itertools
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .rational import (
    DEFAULT_DEGREE_CAP,
    DegreeCapError,
    MoebiusMap,
    RationalMap,
    RootFindingError,
    compose,
    exceptional_points,
    fixed_points,
    is_loxodromic,
    map_from_json_obj,
    preimages,
)
from .sphere import INF, PointCloud, SpherePoint, chordal_dist, hausdorff_dist, stereographic

MERGE_TOL = 1e-10
BACKWARD_CHUNK = 4096


class SeedWarning(UserWarning):
    """The backward-orbit seed sits on an exceptional point of a generator."""


@dataclass(frozen=True, eq=False)
class SemigroupSpec:
    """Generators of G = <g_i>; in group mode the inverses are appended.

    After construction ``generators`` is the closed, duplicate-free list and
    word indices refer to it. ``base_count`` is the number of user-supplied
    generators that survived deduplication.
    """

    generators: tuple
    group_mode: bool = False
    degree_cap: int = DEFAULT_DEGREE_CAP
    labels: tuple | None = None
    base_count: int = field(init=False)
    inverse_index: tuple = field(init=False)

    def __post_init__(self):
        gens = [g if isinstance(g, RationalMap) else RationalMap(*g) for g in self.generators]
        if not gens:
            raise ValueError("a semigroup needs at least one generator")
        labels = list(self.labels) if self.labels is not None else [f"g{i}" for i in range(len(gens))]
        if len(labels) != len(gens):
            raise ValueError("labels must match generators")
        for g in gens:
            if g.degree < 1:
                raise ValueError("generators must be nonconstant")
        gens = [g.as_moebius() if g.degree == 1 else g for g in gens]
        kept, kept_labels = [], []
        for g, lab in zip(gens, labels):
            if not any(g.is_close(h) for h in kept):
                kept.append(g)
                kept_labels.append(lab)
        base_count = len(kept)
        if self.group_mode:
            if any(not isinstance(g, MoebiusMap) for g in kept):
                raise ValueError("group mode requires every generator to be Moebius")
            for g, lab in list(zip(kept[:base_count], kept_labels[:base_count])):
                inv = g.inverse()
                if not any(inv.is_close(h) for h in kept):
                    kept.append(inv)
                    kept_labels.append(lab[:-3] if lab.endswith("^-1") else lab + "^-1")
        inverse_index = [None] * len(kept)
        if self.group_mode:
            for i, g in enumerate(kept):
                inv = g.inverse()
                for j, h in enumerate(kept):
                    if inv.is_close(h):
                        inverse_index[i] = j
                        break
        object.__setattr__(self, "generators", tuple(kept))
        object.__setattr__(self, "labels", tuple(kept_labels))
        object.__setattr__(self, "base_count", base_count)
        object.__setattr__(self, "inverse_index", tuple(inverse_index))

    def __len__(self):
        return len(self.generators)

    def to_json_obj(self) -> dict:
        gens = self.generators[: self.base_count] if self.group_mode else self.generators
        labels = self.labels[: len(gens)]
        return {
            "generators": [g.to_json_obj() for g in gens],
            "group_mode": self.group_mode,
            "degree_cap": self.degree_cap,
            "labels": list(labels),
        }

    @classmethod
    def from_json_obj(cls, obj) -> SemigroupSpec:
        gens = [map_from_json_obj(g) for g in obj["generators"]]
        labels = obj.get("labels")
        return cls(
            tuple(gens),
            group_mode=bool(obj.get("group_mode", False)),
            degree_cap=int(obj.get("degree_cap", DEFAULT_DEGREE_CAP)),
            labels=tuple(labels) if labels else None,
        )

    def spec_hash(self) -> str:
        blob = json.dumps(self.to_json_obj(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def word_degree(self, indices) -> int:
        return math.prod(self.generators[i].degree for i in indices)

    def is_reduced(self, indices) -> bool:
        """False if the word contains an adjacent generator/inverse pair."""
        inv = self.inverse_index
        return all(inv[a] != b for a, b in zip(indices, indices[1:]))


@dataclass(frozen=True)
class Word:
    indices: tuple
    functional_only: bool = False

    def __len__(self):
        return len(self.indices)


@dataclass(frozen=True)
class JuliaApproximation:
    cloud: PointCloud
    spec_hash: str
    method: str
    params: dict
    report: dict = field(default_factory=dict)
    sources: tuple = ()  # producing word per point (repelling method)


def enumerate_words(spec: SemigroupSpec, max_len: int) -> list[Word]:
    """All words of length 1..max_len, by length then lexicographically."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    n = len(spec)
    out = []
    for length in range(1, max_len + 1):
        for idx in itertools.product(range(n), repeat=length):
            out.append(Word(idx, spec.word_degree(idx) > spec.degree_cap))
    return out


def word_map(spec: SemigroupSpec, word) -> RationalMap:
    idx = tuple(word.indices if isinstance(word, Word) else word)
    if not idx:
        raise ValueError("empty word")
    if any(i < 0 or i >= len(spec) for i in idx):
        raise IndexError(f"generator index out of range in {idx}")
    deg = spec.word_degree(idx)
    if deg > spec.degree_cap:
        raise DegreeCapError(deg, spec.degree_cap)
    f = spec.generators[idx[-1]]
    for i in reversed(idx[:-1]):
        f = compose(spec.generators[i], f, spec.degree_cap)
    return f


def _iter_word_maps(spec: SemigroupSpec, max_len: int):
    """Yield (word, map or None) in enumeration order, reusing suffix maps."""
    gens = spec.generators
    prev = {}
    for i, g in enumerate(gens):
        m = g if g.degree <= spec.degree_cap else None
        prev[(i,)] = m
        yield (i,), m
    for length in range(2, max_len + 1):
        cur = {}
        for idx in itertools.product(range(len(gens)), repeat=length):
            rest = prev[idx[1:]]
            if rest is None or gens[idx[0]].degree * rest.degree > spec.degree_cap:
                m = None
            else:
                m = compose(gens[idx[0]], rest, spec.degree_cap)
            cur[idx] = m
            yield idx, m
        prev = cur


def _merge_points(points: list[SpherePoint], tol: float):
    """Indices of first occurrences after merging points within ``tol`` (chordal)."""
    if not points:
        return []
    vals = np.array([p.z for p in points], dtype=complex)
    mask = np.array([p.is_inf for p in points], dtype=bool)
    emb = stereographic(vals, mask)
    pairs = cKDTree(emb).query_pairs(tol, output_type="ndarray")
    parent = np.arange(len(points))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a, b in pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    return [i for i in range(len(points)) if find(i) == i]


def _repelling_of(item):
    idx, f = item
    try:
        recs = fixed_points(f)
    except RootFindingError as exc:
        exc.context["word"] = idx
        raise
    return [r.location for r in recs if r.is_repelling]


def repelling_cloud(spec: SemigroupSpec, max_len: int, n_jobs: int = 1) -> JuliaApproximation:
    """Repelling fixed points of every word of length <= max_len.

    Words past the degree cap are skipped and counted; in group mode words
    that are not freely reduced, and words reducing to the identity, are
    skipped as well.
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    report = {"words": 0, "functional_only_skipped": 0, "unreduced_skipped": 0, "identity_skipped": 0}
    jobs = []
    for idx, f in _iter_word_maps(spec, max_len):
        report["words"] += 1
        if spec.group_mode and not spec.is_reduced(idx):
            report["unreduced_skipped"] += 1
            continue
        if f is None:
            report["functional_only_skipped"] += 1
            continue
        if isinstance(f, MoebiusMap) and f.is_identity():
            report["identity_skipped"] += 1
            continue
        jobs.append((idx, f))
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            found = list(pool.map(_repelling_of, jobs, chunksize=256))
    else:
        found = [_repelling_of(j) for j in jobs]
    points, sources = [], []
    for (idx, _), locs in zip(jobs, found):
        for loc in locs:
            points.append(loc)
            sources.append(idx)
    keep = _merge_points(points, MERGE_TOL)
    params = {"max_len": max_len}
    cloud = PointCloud.from_points([points[i] for i in keep], "repelling", params)
    report["points"] = len(keep)
    return JuliaApproximation(cloud, spec.spec_hash(), "repelling", params, report,
                              tuple(sources[i] for i in keep))


def _warn_if_exceptional(spec: SemigroupSpec, seed: SpherePoint):
    for i, g in enumerate(spec.generators):
        if g.degree == 1:
            m = g.as_moebius()
            if m.is_identity() or not is_loxodromic(m):
                continue
        try:
            exc = exceptional_points(g)
        except (RootFindingError, DegreeCapError):
            continue
        if any(chordal_dist(seed, e) <= 1e-9 for e in exc):
            warnings.warn(f"seed {seed!r} is an exceptional point of generator {i}", SeedWarning,
                          stacklevel=3)


def _backward_chunk(spec, inverses, seed, count, burn_in, rng_seed, chunk):
    rng = np.random.default_rng(np.random.SeedSequence(rng_seed, spawn_key=(chunk,)))
    steps = burn_in + count
    choice = rng.integers(len(spec.generators), size=steps)
    branch = rng.random(steps)
    z = seed
    out_v = np.empty(count, dtype=complex)
    out_m = np.zeros(count, dtype=bool)
    for step in range(steps):
        i = int(choice[step])
        inv = inverses[i]
        if inv is not None:
            z = inv.eval(z)
        else:
            try:
                pre = preimages(spec.generators[i], z)
            except RootFindingError as exc:
                exc.context.update({"chunk": chunk, "step": step, "generator": i, "point": repr(z)})
                raise
            z = pre[min(int(branch[step] * len(pre)), len(pre) - 1)]
        if step >= burn_in:
            k = step - burn_in
            out_v[k] = z.z
            out_m[k] = z.is_inf
    return out_v, out_m


def backward_orbit_cloud(spec: SemigroupSpec, seed, n_samples: int, burn_in: int, rng_seed: int,
                         n_jobs: int = 1, chunk_size: int = BACKWARD_CHUNK) -> JuliaApproximation:
    """Random backward walk: pick a generator uniformly, then a preimage uniformly.

    Samples are produced in fixed-size chunks, each an independent walk from
    ``seed`` with its own burn-in and a seed derived from (rng_seed, chunk
    index); the output does not depend on ``n_jobs``.
    """
    seed = SpherePoint.of(seed)
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if burn_in < 0:
        raise ValueError("burn_in must be >= 0")
    _warn_if_exceptional(spec, seed)
    inverses = [g.inverse() if isinstance(g, MoebiusMap) else None for g in spec.generators]
    counts = [min(chunk_size, n_samples - s) for s in range(0, n_samples, chunk_size)]
    tasks = [(spec, inverses, seed, c, burn_in, rng_seed, k) for k, c in enumerate(counts)]
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            parts = list(pool.map(lambda t: _backward_chunk(*t), tasks))
    else:
        parts = [_backward_chunk(*t) for t in tasks]
    values = np.concatenate([p[0] for p in parts])
    mask = np.concatenate([p[1] for p in parts])
    params = {
        "seed": "inf" if seed.is_inf else [seed.z.real, seed.z.imag],
        "n_samples": n_samples,
        "burn_in": burn_in,
        "rng_seed": rng_seed,
        "chunk_size": chunk_size,
    }
    cloud = PointCloud(values, mask, "backward_orbit", params)
    return JuliaApproximation(cloud, spec.spec_hash(), "backward_orbit", params,
                              {"points": len(cloud), "chunks": len(counts)})


def _moebius_apply(m: MoebiusMap, values: np.ndarray, mask: np.ndarray):
    a, b, c, d = m.a, m.b, m.c, m.d
    den = c * values + d
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (a * values + b) / den
    out_mask = (den == 0) | ~np.isfinite(out)
    if mask.any():
        if c == 0:
            out_mask = out_mask | mask
        else:
            out = np.where(mask, a / c, out)
            out_mask = out_mask & ~mask
    return np.where(out_mask, 0j, out), out_mask


def pullback(spec: SemigroupSpec, cloud: PointCloud) -> PointCloud:
    """Union over generators of all preimages of all cloud points."""
    vals, masks = [], []
    for g in spec.generators:
        if isinstance(g, MoebiusMap):
            v, m = _moebius_apply(g.inverse(), cloud.values, cloud.inf_mask)
            vals.append(v)
            masks.append(m)
        else:
            pts = [q for p in cloud for q in preimages(g, p)]
            vals.append(np.array([q.z for q in pts], dtype=complex))
            masks.append(np.array([q.is_inf for q in pts], dtype=bool))
    return PointCloud(np.concatenate(vals), np.concatenate(masks), "pullback")


def self_similarity_defect(spec: SemigroupSpec, cloud: PointCloud) -> float:
    """Hausdorff distance between a cloud and its pullback under all generators.

    A Julia set satisfies J = union of g_i^{-1}(J), so a good approximation
    has a small defect. The converse fails: any common fixed point of the
    inverse branches has defect zero.
    """
    if len(cloud) == 0:
        raise ValueError("empty cloud")
    return hausdorff_dist(cloud, pullback(spec, cloud))


# ---------------------------------------------------------------------------
# Escape region


def _coefficient_certificate(g: RationalMap, r: float) -> bool:
    """True if |g(z)| > |z| is guaranteed for every |z| >= r.

    Uses Q(r) = |a_D| r^D - sum_{k<D} |a_k| r^k - sum_k |b_k| r^(k+1): when
    only the leading coefficient of Q is positive, Q has a single positive
    root, so Q(r) > 0 implies Q > 0 on [r, oo).
    """
    a = np.abs(g.num.coeffs)
    b = np.abs(g.den.coeffs)
    D = g.num.degree
    if D < 1 or g.den.degree + 1 > D:
        return False
    q = -a.copy()
    q[D] = a[D]
    q[1: b.size + 1] -= b
    if q[D] <= 0:
        return False
    return float(np.polynomial.polynomial.polyval(r, q)) > 0


def _circle_ok(g: RationalMap, r: float, n: int) -> bool:
    z = r * np.exp(2j * np.pi * (np.arange(n) + 0.5) / n)
    w, inf = g.eval_array(z)
    return bool(np.all(inf | (np.abs(w) > r)))


def forward_invariant_escape_region(spec: SemigroupSpec, R_max: float,
                                    n_circle: int = 4096) -> float | None:
    """Smallest R in 2, 3, 4, ... <= R_max with |g(z)| > |z| on |z| >= R for every generator.

    Circles at R, 2R, 4R, ... are sampled until the coefficient tail bound
    takes over. A returned radius certifies a forward-invariant neighborhood
    of infinity, which therefore lies in the Fatou set.
    """
    if R_max <= 1:
        raise ValueError("R_max must exceed 1")
    R = 2
    while R <= R_max:
        if all(_escapes_beyond(g, float(R), n_circle) for g in spec.generators):
            return float(R)
        R += 1
    return None


def _escapes_beyond(g: RationalMap, R: float, n_circle: int) -> bool:
    r = R
    for _ in range(64):
        if not _circle_ok(g, r, n_circle):
            return False
        if _coefficient_certificate(g, r):
            return True
        r *= 2.0
    return False


# ---------------------------------------------------------------------------
# Rendering


@dataclass(frozen=True)
class Raster:
    pixels: np.ndarray  # (height, width) uint8, row 0 at the top of the window
    dropped: int

    def to_pgm(self) -> bytes:
        h, w = self.pixels.shape
        return f"P5\n{w} {h}\n255\n".encode() + self.pixels.astype(np.uint8).tobytes()


def render_cloud(cloud: PointCloud, window, width: int, height: int) -> Raster:
    """Log-scaled hit-count raster. ``window`` is (xmin, xmax, ymin, ymax)."""
    xmin, xmax, ymin, ymax = map(float, window)
    if width < 1 or height < 1:
        raise ValueError("raster dimensions must be positive")
    if not (xmax > xmin and ymax > ymin) or not all(map(math.isfinite, (xmin, xmax, ymin, ymax))):
        raise ValueError(f"degenerate window {window!r}")
    z = cloud.finite
    x, y = z.real, z.imag
    inside = (x >= xmin) & (x <= xmax) & (y >= ymin) & (y <= ymax)
    dropped = int(cloud.n_inf + np.count_nonzero(~inside))
    col = np.floor((x[inside] - xmin) / (xmax - xmin) * width).astype(int)
    row = np.floor((ymax - y[inside]) / (ymax - ymin) * height).astype(int)
    np.clip(col, 0, width - 1, out=col)
    np.clip(row, 0, height - 1, out=row)
    counts = np.zeros((height, width), dtype=np.int64)
    np.add.at(counts, (row, col), 1)
    top = counts.max()
    if top == 0:
        return Raster(np.zeros((height, width), dtype=np.uint8), dropped)
    scaled = np.rint(255.0 * np.log1p(counts) / np.log1p(top))
    return Raster(scaled.astype(np.uint8), dropped)
