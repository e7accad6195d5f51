import cmath
import math

import numpy as np
import pytest
from oracles import radial_sup
from hypothesis import given, settings
from hypothesis import strategies as st

from semijulia.rational import (
    DegreeCapError,
    MoebiusMap,
    Polynomial,
    RationalMap,
    classify_multiplier,
    compose,
    exceptional_points,
    fixed_points,
    inverse,
    is_loxodromic,
    lipschitz_constant,
    map_from_json_obj,
    poly_roots,
    preimages,
    spherical_derivative,
)
from semijulia.sphere import INF, SpherePoint, chordal_dist

coef = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)


def _roots_sorted(pairs):
    out = []
    for r, m in pairs:
        out.extend([r] * m)
    return np.array(sorted(out, key=lambda z: (round(z.real, 6), round(z.imag, 6))))


def test_polynomial_trims_and_degree():
    p = Polynomial([1, 2, 0, 0])
    assert p.degree == 1
    assert Polynomial([]).degree == -1
    assert p(2) == 5


@pytest.mark.parametrize("deg", [1, 2, 3, 5, 12, 30, 60])
def test_roots_match_numpy(deg):
    rng = np.random.default_rng(deg)
    c = rng.normal(size=deg + 1) + 1j * rng.normal(size=deg + 1)
    ours = _roots_sorted(poly_roots(Polynomial(c)))
    ref = np.roots(c[::-1])
    assert ours.size == deg
    # match every numpy root to one of ours
    for r in ref:
        assert np.min(np.abs(ours - r)) < 1e-8 * max(1.0, abs(r))


def test_roots_multiplicity_and_zero():
    # z^2 (z - 1)^2 (z + 2): exact zeros are split off, the double root merges
    p = Polynomial(np.polynomial.polynomial.polyfromroots([0, 0, 1, 1, -2]))
    got = {(round(r.real, 6), m) for r, m in poly_roots(p)}
    assert got == {(0.0, 2), (1.0, 2), (-2.0, 1)}


def test_triple_root_within_expected_spread():
    # a triple root only resolves to about eps^(1/3); the 1e-7 merge radius keeps the copies apart
    p = Polynomial(np.polynomial.polynomial.polyfromroots([1, 1, 1]))
    pairs = poly_roots(p)
    assert sum(m for _, m in pairs) == 3
    assert all(abs(r - 1) < 1e-4 for r, _ in pairs)


def test_roots_of_unity():
    roots = _roots_sorted(poly_roots(Polynomial([-1] + [0] * 6 + [1])))
    assert np.allclose(np.abs(roots), 1.0, atol=1e-12)
    assert np.allclose(roots ** 7, 1.0, atol=1e-11)


def test_rational_map_validation():
    with pytest.raises(ValueError):
        RationalMap([1], [0])
    with pytest.raises(ValueError):
        RationalMap([3], [1])
    with pytest.raises(ValueError):
        RationalMap([-1, 0, 1], [-1, 1])  # (z^2-1)/(z-1) has a common factor
    assert RationalMap([0, 0, 1]).degree == 2


def test_eval_and_infinity():
    f = RationalMap([0, 0, 1])
    assert f(2).z == 4
    assert f(INF).is_inf
    g = RationalMap([1], [0, 1])  # 1/z
    assert g(0).is_inf
    assert g(INF).z == 0
    assert RationalMap([1, 2], [3, 4])(INF).z == 0.5


def test_moebius_normalization_and_inverse():
    m = MoebiusMap(2, 1, 1, 1)
    assert abs(m.a * m.d - m.b * m.c - 1) < 1e-14
    mi = inverse(m)
    for z in (0.3, 1 + 2j, -4j):
        assert abs(mi(m(z)).z - z) < 1e-12
    with pytest.raises(ValueError):
        MoebiusMap(1, 2, 2, 4)


def test_moebius_json_round_trip():
    m = MoebiusMap(1 + 1j, 2, 0.5, 3)
    back = map_from_json_obj(m.to_json_obj())
    assert isinstance(back, MoebiusMap)
    assert np.allclose(back.matrix, m.matrix) or np.allclose(back.matrix, -m.matrix)
    f = RationalMap([1, 0, 2j], [1, 1])
    assert map_from_json_obj(f.to_json_obj()).is_close(f)


def test_compose_squares():
    f = RationalMap([0, 0, 1])
    g = compose(f, f)
    assert g.degree == 4
    assert abs(g(1.5).z - 1.5 ** 4) < 1e-12
    with pytest.raises(DegreeCapError):
        compose(g, g, degree_cap=8)


@settings(max_examples=40, deadline=None)
@given(st.lists(coef, min_size=3, max_size=4), st.lists(coef, min_size=2, max_size=3), coef)
def test_compose_pointwise(fn, gn, z):
    try:
        f = RationalMap(fn)
        g = RationalMap(gn)
    except ValueError:
        return
    h = compose(f, g)
    expected = f(g(z))
    got = h(z)
    assert chordal_dist(got, expected) < 1e-6


def test_loxodromic():
    assert is_loxodromic(MoebiusMap(3, 0, 0, 1))
    assert not is_loxodromic(MoebiusMap(1, 1, 0, 1))  # parabolic
    assert not is_loxodromic(MoebiusMap(1j, 0, 0, 1))  # elliptic
    with pytest.raises(ValueError):
        is_loxodromic(MoebiusMap(1, 0, 0, 1))


def test_classify_multiplier():
    assert classify_multiplier(0) == "superattracting"
    assert classify_multiplier(0.5) == "attracting"
    assert classify_multiplier(cmath.exp(0.3j)) == "indifferent"
    assert classify_multiplier(2) == "repelling"


def test_fixed_points_square():
    recs = fixed_points(RationalMap([0, 0, 1]))
    kinds = {("inf" if r.location.is_inf else round(r.location.z.real, 9)): r.kind for r in recs}
    assert kinds == {0.0: "superattracting", 1.0: "repelling", "inf": "superattracting"}
    assert sum(r.multiplicity for r in recs) == 3


def test_fixed_points_quadratic_family():
    # z^2 - 1: fixed points (1 +- sqrt 5)/2, multipliers 1 +- sqrt 5
    recs = [r for r in fixed_points(RationalMap([-1, 0, 1])) if not r.location.is_inf]
    for r in recs:
        z = r.location.z
        assert abs(z * z - 1 - z) < 1e-12
        assert abs(r.multiplier - 2 * z) < 1e-12


def test_fixed_points_affine_and_moebius():
    recs = fixed_points(MoebiusMap(3, -2, 0, 1))  # 3z - 2
    locs = {("inf" if r.location.is_inf else round(r.location.z.real, 12)): r.multiplier for r in recs}
    assert locs[1.0] == pytest.approx(3)
    assert locs["inf"] == pytest.approx(1 / 3)
    recs = fixed_points(MoebiusMap(2, 1, 1, 1))
    for r in recs:
        z = r.location.z
        assert abs((2 * z + 1) / (z + 1) - z) < 1e-12
        assert abs(r.multiplier - 1 / (z + 1) ** 2) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.lists(coef, min_size=3, max_size=6))
def test_fixed_point_multiplicities_sum(c):
    try:
        f = RationalMap(c)
    except ValueError:
        return
    recs = fixed_points(f)
    assert sum(r.multiplicity for r in recs) == f.degree + 1
    for r in recs:
        if not r.location.is_inf and r.multiplicity == 1:
            assert chordal_dist(f(r.location), r.location) < 1e-8


def test_preimages():
    pre = preimages(RationalMap([0, 0, 1]), 4)
    assert sorted(round(p.z.real, 12) for p in pre) == [-2.0, 2.0]
    pre = preimages(RationalMap([0, 0, 1]), INF)
    assert all(p.is_inf for p in pre) and len(pre) == 2
    pre = preimages(RationalMap([0, 0, 1]), 0)
    assert len(pre) == 2


def test_exceptional_points():
    assert [p.is_inf for p in exceptional_points(RationalMap([0, 0, 1]))] == [False, True]
    assert exceptional_points(RationalMap([0, 0, 1]))[0].z == 0
    # infinity is totally invariant for every polynomial
    e = exceptional_points(RationalMap([-1, 0, 1]))
    assert len(e) == 1 and e[0].is_inf
    e = exceptional_points(MoebiusMap(1, 0, 0, 2))  # z/2 attracts to 0
    assert len(e) == 1 and e[0].z == 0


def test_lipschitz_radial_oracles():
    assert lipschitz_constant(MoebiusMap(1, 0, 0, 1)) == pytest.approx(1, abs=1e-6)
    sq = radial_sup(lambda r: 2 * r * (1 + r * r) / (1 + r ** 4))
    assert lipschitz_constant(RationalMap([0, 0, 1])) == pytest.approx(sq, abs=1e-4)
    three = radial_sup(lambda r: 3 * (1 + r * r) / (1 + 9 * r * r))
    assert lipschitz_constant(MoebiusMap(3, 0, 0, 1)) == pytest.approx(three, abs=1e-4)


@pytest.mark.parametrize("seed", range(5))
def test_lipschitz_moebius_svd(seed):
    rng = np.random.default_rng(seed)
    a, b, c, d = rng.normal(size=4) + 1j * rng.normal(size=4)
    m = MoebiusMap(a, b, c, d)
    sv = np.linalg.svd(m.matrix, compute_uv=False)
    assert lipschitz_constant(m) == pytest.approx(sv[0] / sv[1], rel=1e-6)


def test_spherical_derivative_consistency():
    f = RationalMap([1, 0, 2], [0, 1, 1])
    z = 0.3 + 0.4j
    h = 1e-6
    fd = chordal_dist(f(z + h), f(z)) / chordal_dist(z + h, z)
    assert spherical_derivative(f, z) == pytest.approx(fd, rel=1e-4)
    # the chart at infinity gives the same value at large |z|
    assert spherical_derivative(f, 1e4) == pytest.approx(spherical_derivative(f, SpherePoint(1e4)), rel=1e-12)
    assert math.isfinite(spherical_derivative(f, INF))
