"""Rational and Moebius maps of the Riemann sphere.

A rational map is stored as a pair of polynomials ``num/den`` with complex
coefficients in ascending powers. Degree-1 maps have a dedicated
:class:`MoebiusMap` subclass backed by an SL(2, C) matrix.

The spherical derivative is computed from the homogeneous form

    f#(z) = |num'(z) den(z) - num(z) den'(z)| (1 + |z|^2) / (|num(z)|^2 + |den(z)|^2)

which stays finite at poles; for |z| > 1 the chart w = 1/z is used.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.optimize import minimize

from .sphere import INF, SpherePoint, chordal_dist

_EPS = np.finfo(float).eps

ROOT_CLUSTER_TOL = 1e-7
CLASSIFY_TOL = 1e-9
COPRIME_TOL = 1e-9
DEFAULT_DEGREE_CAP = 64


class RootFindingError(ArithmeticError):
    """Polynomial root refinement did not reach the requested residual."""

    def __init__(self, message, residual=float("nan"), context=None):
        super().__init__(message)
        self.residual = residual
        self.context = context or {}


class DegreeCapError(ValueError):
    def __init__(self, degree, cap):
        super().__init__(f"composed degree {degree} exceeds degree cap {cap}")
        self.degree = degree
        self.cap = cap


# ---------------------------------------------------------------------------
# Polynomials


class Polynomial:
    """Complex polynomial, coefficients in ascending order.

    Trailing (highest-power) exact zeros are stripped; the zero polynomial
    has an empty coefficient array and degree -1.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=()):
        if isinstance(coeffs, Polynomial):
            c = coeffs.coeffs
        else:
            c = np.array(coeffs, dtype=complex).reshape(-1)
        if not np.all(np.isfinite(c)):
            raise ValueError("polynomial coefficients must be finite")
        nz = np.flatnonzero(c)
        c = c[: nz[-1] + 1].copy() if nz.size else np.zeros(0, dtype=complex)
        c.flags.writeable = False
        self.coeffs = c

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def is_zero(self) -> bool:
        return self.coeffs.size == 0

    @property
    def lead(self) -> complex:
        return complex(self.coeffs[-1]) if self.coeffs.size else 0j

    def __call__(self, z):
        if isinstance(z, np.ndarray):
            if self.coeffs.size == 0:
                return np.zeros(z.shape, dtype=complex)
            return _horner(self.coeffs, z)
        acc = 0j
        for c in self.coeffs[::-1]:
            acc = acc * z + c
        return acc

    def deriv(self) -> Polynomial:
        if self.coeffs.size <= 1:
            return Polynomial()
        return Polynomial(_polyder(self.coeffs))

    def padded(self, n: int) -> np.ndarray:
        """Coefficients zero-padded to length n + 1."""
        out = np.zeros(n + 1, dtype=complex)
        out[: self.coeffs.size] = self.coeffs
        return out

    def reversed(self, n: int) -> Polynomial:
        """w^n p(1/w)."""
        return Polynomial(self.padded(n)[::-1])

    def __add__(self, other):
        return Polynomial(P.polyadd(self.coeffs, Polynomial(other).coeffs))

    def __sub__(self, other):
        return Polynomial(P.polysub(self.coeffs, Polynomial(other).coeffs))

    def __mul__(self, other):
        if isinstance(other, (int, float, complex)):
            return Polynomial(self.coeffs * other)
        o = Polynomial(other)
        if self.is_zero() or o.is_zero():
            return Polynomial()
        return Polynomial(P.polymul(self.coeffs, o.coeffs))

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, Polynomial) and np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash(self.coeffs.tobytes())

    def __repr__(self):
        return f"Polynomial({self.coeffs.tolist()})"


def _horner(c, z):
    """Evaluate ascending coefficients ``c`` at ``z`` (array or scalar)."""
    acc = c[-1] * np.ones_like(z) if isinstance(z, np.ndarray) else complex(c[-1])
    for k in range(len(c) - 2, -1, -1):
        acc = acc * z + c[k]
    return acc


def _polyder(c):
    return c[1:] * np.arange(1, len(c))


def _trim_relative(coeffs, rel=64 * _EPS) -> Polynomial:
    """Drop top coefficients that are rounding noise relative to the largest one."""
    c = np.asarray(coeffs, dtype=complex)
    if c.size == 0:
        return Polynomial()
    scale = np.max(np.abs(c))
    if scale == 0:
        return Polynomial()
    keep = np.flatnonzero(np.abs(c) > rel * scale)
    return Polynomial(c[: keep[-1] + 1])


def _cluster(points, tol):
    """Single-linkage clustering of complex points; returns (mean, count) pairs."""
    pts = list(points)
    n = len(pts)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(pts[i] - pts[j]) < tol:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(pts[i])
    out = [(complex(sum(g) / len(g)), len(g)) for g in groups.values()]
    out.sort(key=lambda t: (t[0].real, t[0].imag))
    return out


def _backward_error(coeffs, z):
    absz = np.abs(z)
    num = np.abs(_horner(coeffs, z))
    den = _horner(np.abs(coeffs), absz)
    return num / np.where(den > 0, den, 1.0)


def poly_roots(p, tol: float = 1e-10, max_iter: int = 800,
               cluster_tol: float = ROOT_CLUSTER_TOL) -> list[tuple[complex, int]]:
    """All complex roots of ``p`` as ``(root, multiplicity)`` pairs.

    Aberth-Ehrlich simultaneous iteration from a perturbed circle of
    starting points. Exact zero roots are split off first; approximations
    closer than ``cluster_tol`` are merged and their count reported as the
    multiplicity. ``tol`` bounds the relative backward error
    |p(z)| / sum |a_k||z|^k of every returned root.
    """
    p = Polynomial(p)
    n = p.degree
    if n < 1:
        raise ValueError("poly_roots needs a polynomial of degree >= 1")
    c = p.coeffs
    n_zero = int(np.flatnonzero(c)[0])
    c = c[n_zero:]
    m = c.size - 1
    found: list[complex] = []
    if m == 1:
        found = [complex(-c[0] / c[1])]
    elif m == 2:
        found = list(_quadratic(c[2], c[1], c[0]))
    elif 2 < m <= 24:
        found = _aberth_small([complex(v) for v in c / c[-1]], max_iter)
    elif m > 24:
        found = list(_aberth(c / c[-1], tol, max_iter))
    if found:
        err = _backward_error(c, np.array(found))
        worst = float(err.max())
        if worst > tol:
            raise RootFindingError(
                f"root refinement stalled: worst backward error {worst:.3e} > {tol:.1e}",
                residual=worst,
            )
    out = _cluster(found, cluster_tol)
    if n_zero:
        merged = [(r, k) for r, k in out if abs(r) >= cluster_tol]
        extra = sum(k for r, k in out if abs(r) < cluster_tol)
        out = merged + [(0j, n_zero + extra)]
        out.sort(key=lambda t: (t[0].real, t[0].imag))
    return out


def _quadratic(a, b, c):
    """Roots of a z^2 + b z + c with the cancellation-free formula."""
    a, b, c = complex(a), complex(b), complex(c)
    disc = cmath.sqrt(b * b - 4 * a * c)
    # choose sign so that |b + s| is maximal
    s = disc if (b.conjugate() * disc).real >= 0 else -disc
    q = -0.5 * (b + s)
    if q == 0:
        return 0j, 0j
    return q / a, c / q


def _initial_circle(a, m):
    center = -a[m - 1] / m
    shifted = 0j
    for coef in reversed(a):
        shifted = shifted * center + coef
    radius = abs(shifted) ** (1.0 / m) if shifted != 0 else 1.0
    radius = max(radius, 1e-3 * (abs(center) + 1.0))
    return [center + radius * (1.0 + 0.01 * k / m) * cmath.exp(1j * (2 * math.pi * k / m + 0.4))
            for k in range(m)]


def _aberth_small(a: list, max_iter: int) -> list:
    """Gauss-Seidel Aberth iteration in plain complex arithmetic (low degree)."""
    m = len(a) - 1
    da = [k * a[k] for k in range(1, m + 1)]
    absa = [abs(v) for v in a]
    z = _initial_circle(a, m)
    active = [True] * m
    eps = float(_EPS)
    for _ in range(max_iter):
        moved = False
        for i in range(m):
            if not active[i]:
                continue
            zi = z[i]
            pz = 0j
            for coef in reversed(a):
                pz = pz * zi + coef
            r = abs(zi)
            scale = 0.0
            for coef in reversed(absa):
                scale = scale * r + coef
            if abs(pz) <= 4 * eps * scale:
                active[i] = False
                continue
            dpz = 0j
            for coef in reversed(da):
                dpz = dpz * zi + coef
            s = 0j
            for j in range(m):
                if j != i:
                    diff = zi - z[j]
                    if diff != 0:
                        s += 1.0 / diff
            if dpz == 0:
                step = 1e-8 * (1.0 + r)
            else:
                ratio = pz / dpz
                den = 1.0 - ratio * s
                step = ratio / den if den != 0 else ratio
            z[i] = zi - step
            if abs(step) <= 2 * eps * abs(z[i]):
                active[i] = False
            moved = True
        if not moved:
            break
    return z


def _aberth(a: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    m = a.size - 1
    da = _polyder(a)
    center = -a[m - 1] / m
    shifted = abs(_horner(a, center))
    radius = shifted ** (1.0 / m) if shifted > 0 else 1.0
    radius = max(radius, 1e-3 * (abs(center) + 1.0))
    k = np.arange(m)
    z = center + radius * (1.0 + 0.01 * k / m) * np.exp(1j * (2 * np.pi * k / m + 0.4))
    active = np.ones(m, dtype=bool)
    for _ in range(max_iter):
        pz = _horner(a, z)
        dpz = _horner(da, z)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        inv = 1.0 / diff
        np.fill_diagonal(inv, 0.0)
        s = inv.sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = pz / dpz
            step = ratio / (1.0 - ratio * s)
        bad = ~np.isfinite(step)
        step[bad] = 1e-8 * (1.0 + np.abs(z[bad]))
        step[~active] = 0.0
        z = z - step
        done = (np.abs(step) <= 2 * _EPS * np.abs(z)) | (_backward_error(a, z) <= 4 * _EPS)
        active &= ~done
        if not active.any():
            break
    err = _backward_error(a, z)
    if err.max() > tol:
        # a few Newton polishing steps for stragglers
        for _ in range(20):
            pz = _horner(a, z)
            dpz = _horner(da, z)
            upd = np.where(dpz != 0, pz / np.where(dpz != 0, dpz, 1), 0)
            z = z - np.where(_backward_error(a, z) > tol, upd, 0)
    return z


# ---------------------------------------------------------------------------
# Rational maps


@dataclass(frozen=True)
class FixedPointRecord:
    location: SpherePoint
    multiplier: complex
    kind: str  # superattracting | attracting | indifferent | repelling
    multiplicity: int = 1

    @property
    def is_repelling(self) -> bool:
        return self.kind == "repelling"


def classify_multiplier(lam: complex, tol: float = CLASSIFY_TOL) -> str:
    r = abs(lam)
    if r <= tol:
        return "superattracting"
    if r < 1 - tol:
        return "attracting"
    if r <= 1 + tol:
        return "indifferent"
    return "repelling"


class RationalMap:
    """Nonconstant rational map num/den.

    Construction checks that ``den`` is not identically zero, that the map is
    nonconstant, and that ``num`` and ``den`` have no common root (to 1e-9
    relative backward error). Internal constructors pass ``check=False``.
    """

    __slots__ = ("num", "den", "_derivs")

    def __init__(self, num, den=(1,), *, check: bool = True):
        self.num = Polynomial(num)
        self.den = Polynomial(den)
        if self.den.is_zero():
            raise ValueError("denominator is identically zero")
        if check:
            if self.degree < 1:
                raise ValueError("rational map must be nonconstant")
            _check_coprime(self.num, self.den)
        self._derivs = None

    @property
    def _dnum(self) -> Polynomial:
        if self._derivs is None:
            self._derivs = (self.num.deriv(), self.den.deriv())
        return self._derivs[0]

    @property
    def _dden(self) -> Polynomial:
        if self._derivs is None:
            self._derivs = (self.num.deriv(), self.den.deriv())
        return self._derivs[1]

    @property
    def degree(self) -> int:
        return max(self.num.degree, self.den.degree)

    @property
    def is_moebius(self) -> bool:
        return self.degree == 1

    def as_moebius(self) -> MoebiusMap:
        if isinstance(self, MoebiusMap):
            return self
        if self.degree != 1:
            raise ValueError("not a degree-1 map")
        n, d = self.num.padded(1), self.den.padded(1)
        return MoebiusMap(n[1], n[0], d[1], d[0])

    # -- evaluation --------------------------------------------------------

    def value_at_infinity(self) -> SpherePoint:
        dn, dd = self.num.degree, self.den.degree
        if dn > dd:
            return INF
        if dn < dd:
            return SpherePoint(0j)
        return SpherePoint(self.num.lead / self.den.lead)

    def eval(self, p) -> SpherePoint:
        p = SpherePoint.of(p)
        if p.is_inf:
            return self.value_at_infinity()
        d = self.den(p.z)
        if d == 0:
            return INF
        w = self.num(p.z) / d
        if not cmath.isfinite(w):
            return INF
        return SpherePoint(w)

    __call__ = eval

    def eval_array(self, z: np.ndarray):
        """Evaluate at finite points; returns (values, inf_mask)."""
        z = np.asarray(z, dtype=complex)
        n = self.num(z)
        d = self.den(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = n / d
        mask = (d == 0) | ~np.isfinite(w)
        w = np.where(mask, 0j, w)
        return w, mask

    def derivative(self, z: complex) -> complex:
        """f'(z) at a finite non-pole point."""
        n, d = self.num(z), self.den(z)
        return (self._dnum(z) * d - n * self._dden(z)) / (d * d)

    def chart_at_infinity(self) -> RationalMap:
        """The map w -> f(1/w)."""
        D = self.degree
        return RationalMap(self.num.reversed(D), self.den.reversed(D), check=False)

    def conjugate_by_inversion(self) -> RationalMap:
        """The map w -> 1/f(1/w)."""
        D = self.degree
        return RationalMap(self.den.reversed(D), self.num.reversed(D), check=False)

    # -- spherical derivative ----------------------------------------------

    def _sph_finite(self, z):
        n, d = self.num(z), self.den(z)
        jac = self._dnum(z) * d - n * self._dden(z)
        if isinstance(z, np.ndarray):
            return np.abs(jac) * (1.0 + np.abs(z) ** 2) / (np.abs(n) ** 2 + np.abs(d) ** 2)
        return abs(jac) * (1.0 + abs(z) ** 2) / (abs(n) ** 2 + abs(d) ** 2)

    def spherical_derivative(self, p) -> float:
        p = SpherePoint.of(p)
        if p.is_inf:
            return float(self.chart_at_infinity()._sph_finite(0j))
        if abs(p.z) > 1.0:
            return float(self.chart_at_infinity()._sph_finite(1.0 / p.z))
        return float(self._sph_finite(p.z))

    # -- misc ----------------------------------------------------------------

    def normalized_coeffs(self) -> tuple[np.ndarray, np.ndarray]:
        """(num, den) scaled so the leading denominator coefficient is 1."""
        s = self.den.lead
        return self.num.coeffs / s, self.den.coeffs / s

    def is_close(self, other: RationalMap, tol: float = 1e-12) -> bool:
        a_n, a_d = self.normalized_coeffs()
        b_n, b_d = other.normalized_coeffs()
        if a_n.shape != b_n.shape or a_d.shape != b_d.shape:
            return False
        return bool(np.all(np.abs(a_n - b_n) <= tol) and np.all(np.abs(a_d - b_d) <= tol))

    def to_json_obj(self) -> dict:
        return {
            "num": [_pair(c) for c in self.num.coeffs],
            "den": [_pair(c) for c in self.den.coeffs],
        }

    def __repr__(self):
        return f"RationalMap(num={self.num.coeffs.tolist()}, den={self.den.coeffs.tolist()})"


def _pair(c) -> list:
    # adding 0.0 drops the sign of negative zeros so equal maps serialize identically
    return [float(c.real) + 0.0, float(c.imag) + 0.0]


def _check_coprime(num: Polynomial, den: Polynomial):
    if num.degree < 1 or den.degree < 1:
        return
    small, other = (num, den) if num.degree <= den.degree else (den, num)
    for r, _ in poly_roots(small):
        err = _backward_error(other.coeffs, np.array([r]))[0]
        if err < COPRIME_TOL:
            raise ValueError(f"numerator and denominator share the root {r!r}")


class MoebiusMap(RationalMap):
    """z -> (a z + b) / (c z + d), stored with ad - bc = 1."""

    __slots__ = ("a", "b", "c", "d")

    def __init__(self, a, b, c, d):
        a, b, c, d = complex(a), complex(b), complex(c), complex(d)
        det = a * d - b * c
        if det == 0 or not cmath.isfinite(det):
            raise ValueError("Moebius map needs ad - bc != 0")
        if abs(det - 1) <= 8 * _EPS * (abs(a * d) + abs(b * c)):
            s = 1.0  # already normalized; rescaling would only perturb the last bits
        else:
            s = cmath.sqrt(det)
        self.a, self.b, self.c, self.d = a / s, b / s, c / s, d / s
        super().__init__((self.b, self.a), (self.d, self.c), check=False)

    @classmethod
    def from_matrix(cls, m) -> MoebiusMap:
        return cls(m[0][0], m[0][1], m[1][0], m[1][1])

    @classmethod
    def _from_sl2(cls, m) -> MoebiusMap:
        """Wrap a product of normalized matrices without recomputing ad - bc.

        For long words the determinant suffers catastrophic cancellation,
        while the product itself is accurate.
        """
        obj = cls.__new__(cls)
        obj.a, obj.b, obj.c, obj.d = (complex(m[0][0]), complex(m[0][1]),
                                      complex(m[1][0]), complex(m[1][1]))
        RationalMap.__init__(obj, (obj.b, obj.a), (obj.d, obj.c), check=False)
        return obj

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])

    def eval(self, p) -> SpherePoint:
        p = SpherePoint.of(p)
        a, b, c, d = self.a, self.b, self.c, self.d
        if p.is_inf:
            return INF if c == 0 else SpherePoint(a / c)
        den = c * p.z + d
        if den == 0:
            return INF
        w = (a * p.z + b) / den
        return SpherePoint(w) if cmath.isfinite(w) else INF

    __call__ = eval

    def inverse(self) -> MoebiusMap:
        return MoebiusMap._from_sl2([[self.d, -self.b], [-self.c, self.a]])

    def trace_squared(self) -> complex:
        return (self.a + self.d) ** 2

    def is_identity(self, tol: float = 1e-12) -> bool:
        return abs(self.b) <= tol and abs(self.c) <= tol and abs(self.a - self.d) <= tol

    def to_json_obj(self) -> dict:
        return {"moebius": [_pair(v) for v in (self.a, self.b, self.c, self.d)]}

    def __repr__(self):
        return f"MoebiusMap({self.a!r}, {self.b!r}, {self.c!r}, {self.d!r})"


def map_from_json_obj(obj) -> RationalMap:
    if "moebius" in obj:
        vals = [complex(re, im) for re, im in obj["moebius"]]
        if len(vals) != 4:
            raise ValueError("moebius map needs exactly 4 coefficients")
        return MoebiusMap(*vals)
    num = [complex(re, im) for re, im in obj["num"]]
    den = [complex(re, im) for re, im in obj.get("den", [[1.0, 0.0]])]
    f = RationalMap(num, den)
    return f.as_moebius() if f.degree == 1 else f


def inverse(m) -> MoebiusMap:
    if not isinstance(m, MoebiusMap):
        m = m.as_moebius()
    return m.inverse()


def is_loxodromic(m, tol: float = 1e-12) -> bool:
    """True iff the normalized trace squared lies outside the real segment [0, 4]."""
    if not isinstance(m, MoebiusMap):
        m = m.as_moebius()
    if m.is_identity():
        raise ValueError("the identity has no loxodromic/elliptic/parabolic type")
    t = m.trace_squared()
    if abs(t.imag) > tol:
        return True
    return t.real < -tol or t.real > 4 + tol


# ---------------------------------------------------------------------------
# Operations


def eval_map(f: RationalMap, p) -> SpherePoint:
    return f.eval(p)


def spherical_derivative(f: RationalMap, p) -> float:
    return f.spherical_derivative(p)


def compose(f: RationalMap, g: RationalMap, degree_cap: int = DEFAULT_DEGREE_CAP) -> RationalMap:
    """f o g, expanded. Raises DegreeCapError past ``degree_cap``."""
    D = f.degree
    deg = D * g.degree
    if deg > degree_cap:
        raise DegreeCapError(deg, degree_cap)
    if isinstance(f, MoebiusMap) and isinstance(g, MoebiusMap):
        return MoebiusMap._from_sl2(f.matrix @ g.matrix)
    p, q = g.num.coeffs, g.den.coeffs
    p_pow = [np.ones(1, dtype=complex)]
    q_pow = [np.ones(1, dtype=complex)]
    for _ in range(D):
        p_pow.append(np.convolve(p_pow[-1], p))
        q_pow.append(np.convolve(q_pow[-1], q))
    fn, fd = f.num.padded(D), f.den.padded(D)
    num = np.zeros(deg + 1, dtype=complex)
    den = np.zeros(deg + 1, dtype=complex)
    for k in range(D + 1):
        term = np.convolve(p_pow[k], q_pow[D - k])
        num[: term.size] += fn[k] * term
        den[: term.size] += fd[k] * term
    h = RationalMap(num, den, check=False)
    return h.as_moebius() if deg == 1 else h


def _moebius_fixed_points(m: MoebiusMap) -> list[FixedPointRecord]:
    a, b, c, d = m.a, m.b, m.c, m.d
    if m.is_identity():
        raise ValueError("every point is fixed by the identity")
    if abs(c) <= 1e-15 * (abs(a) + abs(d)):
        # z -> (a z + b)/d fixes infinity with multiplier d/a
        lam_inf = d / a
        if abs(a - d) <= 1e-14 * (abs(a) + abs(d)):
            return [FixedPointRecord(INF, 1 + 0j, "indifferent", 2)]
        zf = b / (d - a)
        lam = a / d
        return [
            FixedPointRecord(SpherePoint(zf), lam, classify_multiplier(lam)),
            FixedPointRecord(INF, lam_inf, classify_multiplier(lam_inf)),
        ]
    t = a + d
    disc = t * t - 4
    if abs(disc) <= 1e-14 * max(1.0, abs(t) ** 2):
        zf = (a - d) / (2 * c)
        return [FixedPointRecord(SpherePoint(zf), 1 + 0j, "indifferent", 2)]
    # eigenvalues mu of the matrix; the fixed point z has c z + d = mu, multiplier 1/mu^2
    sq = cmath.sqrt(disc)
    mu1 = 0.5 * (t + sq) if (t.conjugate() * sq).real >= 0 else 0.5 * (t - sq)
    out = []
    for mu in (mu1, 1.0 / mu1):
        r_d = abs(mu - d) / (abs(mu) + abs(d))
        r_a = abs(mu - a) / (abs(mu) + abs(a))
        zf = (mu - d) / c if r_d >= r_a or mu == a else b / (mu - a)
        lam = 1.0 / (mu * mu)
        out.append(FixedPointRecord(SpherePoint(zf), lam, classify_multiplier(lam)))
    return out


def fixed_points(f: RationalMap, tol: float = 1e-10) -> list[FixedPointRecord]:
    """All fixed points with multipliers; one record per distinct point.

    Multiplicities are carried in ``FixedPointRecord.multiplicity`` and sum to
    deg f + 1.
    """
    if f.degree == 1:
        return _moebius_fixed_points(f.as_moebius())
    D = f.degree
    poly = _trim_relative(f.num.padded(D + 1) - np.concatenate([[0j], f.den.padded(D)]))
    if poly.is_zero():
        raise ValueError("every point is fixed by the identity")
    out = []
    if poly.degree >= 1:
        for zf, mult in poly_roots(poly, tol=tol):
            lam = f.derivative(zf)
            out.append(FixedPointRecord(SpherePoint(zf), lam, classify_multiplier(lam), mult))
    if f.num.degree > f.den.degree:
        F = f.conjugate_by_inversion()
        lam = F.derivative(0j)
        out.append(FixedPointRecord(INF, lam, classify_multiplier(lam), D + 1 - max(poly.degree, 0)))
    return out


def preimages(f: RationalMap, w, tol: float = 1e-10) -> list[SpherePoint]:
    """Solutions of f(z) = w, repeated according to multiplicity."""
    w = SpherePoint.of(w)
    if isinstance(f, MoebiusMap):
        return [f.inverse().eval(w)]
    D = f.degree
    if w.is_inf:
        poly = f.den
    else:
        poly = _trim_relative(f.num.padded(D) - w.z * f.den.padded(D))
    out: list[SpherePoint] = []
    if poly.degree >= 1:
        for r, mult in poly_roots(poly, tol=tol):
            out.extend([SpherePoint(r)] * mult)
    out.extend([INF] * (D - max(poly.degree, 0)))
    return out


def _distinct(points, tol=1e-9):
    kept = []
    for p in points:
        if all(chordal_dist(p, q) > tol for q in kept):
            kept.append(p)
    return kept


def _sort_key(p: SpherePoint):
    return (1, 0.0, 0.0) if p.is_inf else (0, p.z.real, p.z.imag)


def exceptional_points(f: RationalMap, depth: int = 3, tol: float = 1e-9) -> list[SpherePoint]:
    """Points whose backward orbit has at most two points.

    For deg >= 2 every fixed point and 2-periodic point is tested by
    enumerating iterated preimages to ``depth`` levels. For a loxodromic
    Moebius map the result is its attracting fixed point.
    """
    if f.degree == 1:
        m = f.as_moebius()
        if m.is_identity() or not is_loxodromic(m):
            raise ValueError("exceptional set is only defined for loxodromic Moebius maps")
        return [r.location for r in fixed_points(m) if abs(r.multiplier) < 1]
    f2 = compose(f, f, degree_cap=f.degree ** 2)
    candidates = _distinct([r.location for r in fixed_points(f)] + [r.location for r in fixed_points(f2)], tol)
    result = []
    for z in candidates:
        orbit = [z]
        frontier = [z]
        for _ in range(depth):
            new = []
            for q in frontier:
                for pre in preimages(f, q):
                    if all(chordal_dist(pre, o) > tol for o in orbit):
                        orbit.append(pre)
                        new.append(pre)
            frontier = new
            if len(orbit) > 2 or not frontier:
                break
        if len(orbit) <= 2:
            result.append(z)
    return sorted(result, key=_sort_key)


# ---------------------------------------------------------------------------
# Lipschitz constant


def fibonacci_sphere(n: int):
    """Quasi-uniform points on the unit sphere as (finite chart values, chart id).

    Chart 0 holds |z| <= 1; chart 1 holds w = 1/z with |w| < 1.
    """
    k = np.arange(n) + 0.5
    zc = 1.0 - 2.0 * k / n  # height in (-1, 1)
    phi = np.pi * (1.0 + math.sqrt(5.0)) * k
    rho = np.sqrt(np.maximum(0.0, 1.0 - zc * zc))
    x, y = rho * np.cos(phi), rho * np.sin(phi)
    south = zc <= 0
    pts = np.empty(n, dtype=complex)
    # inverse stereographic from the north pole: z = (x + iy)/(1 - h)
    pts[south] = (x[south] + 1j * y[south]) / (1.0 - zc[south])
    # chart at infinity: w = 1/z = (x - iy)/(1 + h)
    pts[~south] = (x[~south] - 1j * y[~south]) / (1.0 + zc[~south])
    return pts, (~south).astype(int)


def lipschitz_constant(f: RationalMap, tol: float = 1e-10, n_samples: int = 200_000,
                       n_refine: int = 50) -> float:
    """sup over the sphere of the spherical derivative.

    This is the Lipschitz constant of f for the chordal metric's
    infinitesimal form; it is the value used for every "Lip" in this
    package. Dense two-chart sampling is followed by Nelder-Mead refinement
    of the ``n_refine`` best samples, repeated until the maximum moves by
    less than ``tol`` (relative).
    """
    charts = (f, f.chart_at_infinity())
    pts, chart = fibonacci_sphere(n_samples)
    vals = np.empty(n_samples)
    for c in (0, 1):
        sel = chart == c
        vals[sel] = charts[c]._sph_finite(pts[sel])
    order = np.argsort(-vals, kind="stable")[:n_refine]
    best = float(vals[order[0]])
    best_start = (int(chart[order[0]]), complex(pts[order[0]]))

    def objective(x, c):
        return -charts[c]._sph_finite(complex(x[0], x[1]))

    def refine(c, z0, step):
        simplex = np.array([[z0.real, z0.imag], [z0.real + step, z0.imag], [z0.real, z0.imag + step]])
        res = minimize(objective, [z0.real, z0.imag], args=(c,), method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": tol * 1e-3, "initial_simplex": simplex,
                                "maxiter": 4000})
        return -float(res.fun), complex(res.x[0], res.x[1])

    for idx in order:
        c, z0 = int(chart[idx]), complex(pts[idx])
        val, z1 = refine(c, z0, 1e-2)
        if val > best:
            best, best_start = val, (c, z1)
    step = 1e-3
    for _ in range(20):
        val, z1 = refine(best_start[0], best_start[1], step)
        if val <= best * (1 + tol):
            best = max(best, val)
            break
        best, best_start = val, (best_start[0], z1)
        step *= 0.1
    return best
