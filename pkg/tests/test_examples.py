import math

import numpy as np
import pytest

from semijulia.examples import (
    NAMES,
    ExampleConfig,
    cantor_spec,
    example4_b,
    example4_spec,
    get_example,
    koch_spec,
    schottky_annulus_modulus,
    schottky_pairing,
    schottky_params,
    schottky_spec,
)
from semijulia.perfectness import RoundAnnulus
from semijulia.rational import fixed_points, lipschitz_constant
from semijulia.semigroup import backward_orbit_cloud, repelling_cloud


def test_get_example_all_names():
    for name in NAMES:
        assert isinstance(get_example(name), ExampleConfig)
    with pytest.raises(ValueError):
        get_example("mandelbrot")
    with pytest.raises(ValueError):
        schottky_spec(7)
    with pytest.raises(ValueError):
        example4_spec(-1)


def test_cantor_generators():
    g0, g1 = cantor_spec().spec.generators
    assert abs(g0(0.5).z - 1.5) < 1e-15
    assert abs(g1(0.5).z - (-0.5)) < 1e-15


def test_koch_cloud_geometry():
    cfg = koch_spec()
    z = backward_orbit_cloud(cfg.spec, 0.5, 20000, 30, 0).cloud.finite
    assert z.real.min() >= -1e-12 and z.real.max() <= 1 + 1e-12
    assert z.imag.min() >= -1e-12
    assert z.imag.max() == pytest.approx(cfg.expected["height"], abs=0.01)
    assert z.imag.max() <= cfg.expected["height"] + 1e-12
    rep = repelling_cloud(cfg.spec, 1).cloud.finite
    assert np.min(np.abs(rep - 0)) < 1e-14 and np.min(np.abs(rep - 1)) < 1e-14


def test_example4_fixed_points():
    cfg = example4_spec(18)
    assert example4_b(18) == 1.05
    assert len(cfg.spec) == 20
    for n, g in enumerate(cfg.spec.generators[1:]):
        rep = [r.location.z for r in fixed_points(g) if r.is_repelling]
        assert min(abs(z - cfg.expected["repelling_fixed_points"][n]) for z in rep) < 1e-12
        # J(f_n) is the circle |z + b_n| = 1, which the repelling point lies on
        assert abs(abs(rep[0] + example4_b(n)) - 1) < 1e-12


def test_example4_lipschitz_finite():
    cfg = example4_spec(2)
    for g in cfg.spec.generators:
        assert math.isfinite(lipschitz_constant(g, n_samples=20000))


def test_schottky_pairing_maps_circles():
    for a, r in schottky_params(4):
        g = schottky_pairing(a, r)
        th = np.linspace(0, 2 * np.pi, 64)
        w, _ = g.eval_array(a + r * np.exp(1j * th))
        assert np.allclose(np.abs(w - complex(a, 2)), r, rtol=1e-9)
        # inside goes outside
        assert abs(g(a + r / 2).z - complex(a, 2)) > r


def test_schottky_circles_disjoint():
    circles = [(complex(a, 0), r) for a, r in schottky_params(6)] + [(complex(a, 2), r) for a, r in schottky_params(6)]
    for i, (c1, r1) in enumerate(circles):
        for c2, r2 in circles[i + 1:]:
            assert abs(c1 - c2) > r1 + r2


def test_schottky_annuli_closed_form():
    cfg = schottky_spec(4)
    ms = []
    for rec in cfg.expected["annuli"]:
        a = rec["annulus"]
        m = RoundAnnulus(complex(*a["center"]), a["r1"], a["r2"]).modulus
        assert m == pytest.approx(schottky_annulus_modulus(rec["n"]), abs=1e-12)
        ms.append(m)
    assert ms == sorted(ms)
    assert [round(m, 4) for m in ms] == [0.2497, 0.4703, 0.6909]
