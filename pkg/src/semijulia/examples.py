"""Built-in semigroups: Cantor set, von Koch curve, the z^2 family and a Schottky group.

Every constructor returns an :class:`ExampleConfig` whose ``expected`` record
holds closed-form target quantities used by the test-suite.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

from .perfectness import RoundAnnulus
from .rational import MoebiusMap, RationalMap
from .semigroup import SemigroupSpec

NAMES = ("cantor", "koch", "example4", "schottky")


@dataclass(frozen=True)
class ExampleConfig:
    name: str
    spec: SemigroupSpec
    expected: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in NAMES:
            raise ValueError(f"unknown example {self.name!r}")


def _ifs_maps():
    """The four contractions z/3, (e^{i pi/3} z + 1)/3, (e^{2 pi i/3} z + 2)/3, (z + 2)/3."""
    w1 = cmath.exp(1j * math.pi / 3)
    w2 = cmath.exp(2j * math.pi / 3)
    return [
        MoebiusMap(1, 0, 0, 3),
        MoebiusMap(w1, 1, 0, 3),
        MoebiusMap(w2, 2, 0, 3),
        MoebiusMap(1, 2, 0, 3),
    ]


def cantor_spec() -> ExampleConfig:
    """<3z, 3z - 2>: inverses of z/3 and (z + 2)/3; J is the middle-third Cantor set."""
    g = _ifs_maps()
    spec = SemigroupSpec((g[0].inverse(), g[3].inverse()), labels=("g1^-1", "g4^-1"))
    expected = {
        "attractor": "middle-third Cantor set",
        "bounding_box": [0.0, 1.0, 0.0, 0.0],
        "repelling_max_len_2": [0.0, 0.25, 0.75, 1.0],
        "gap_modulus_ratio": 3.0,
    }
    return ExampleConfig("cantor", spec, expected)


def koch_spec() -> ExampleConfig:
    """Inverses of the four similarities whose attractor is the von Koch curve."""
    g = _ifs_maps()
    spec = SemigroupSpec(tuple(m.inverse() for m in g), labels=("g1^-1", "g2^-1", "g3^-1", "g4^-1"))
    expected = {
        "attractor": "von Koch curve",
        "endpoints": [0.0, 1.0],
        "height": 1 / (2 * math.sqrt(3)),
        "ifs": [m.to_json_obj() for m in g],
    }
    return ExampleConfig("koch", spec, expected)


def example4_b(n: int) -> float:
    return 1.0 + 1.0 / (n + 2)


def example4_spec(N: int = 18) -> ExampleConfig:
    """<z^2, f_0, ..., f_N> with f_n(z) = (z + b_n)^2 - b_n and b_n = 1 + 1/(n + 2) -> 1.

    Each f_n is z^2 conjugated by a translation, so J(f_n) is the circle
    |z + b_n| = 1 and f_n has the repelling fixed point 1 - b_n.
    """
    if N < 0:
        raise ValueError("N must be >= 0")
    gens = [RationalMap([0, 0, 1])]
    labels = ["z^2"]
    for n in range(N + 1):
        b = example4_b(n)
        gens.append(RationalMap([b * b - b, 2 * b, 1]))
        labels.append(f"f{n}")
    spec = SemigroupSpec(tuple(gens), labels=tuple(labels))
    expected = {
        "b": [example4_b(n) for n in range(N + 1)],
        "repelling_fixed_points": [1.0 - example4_b(n) for n in range(N + 1)],
        "escape_radius_at_most": 10.0,
    }
    return ExampleConfig("example4", spec, expected)


def schottky_params(N: int):
    return [(2.0 ** -(n * n), 2.0 ** -(n * n) / 4) for n in range(1, N + 1)]


def schottky_pairing(a: float, r: float) -> MoebiusMap:
    """z -> c' + r^2/(z - c): maps |z - a| = r onto |w - c'| = r, inside to outside."""
    c, cp = complex(a), complex(a, 2.0)
    return MoebiusMap(cp, r * r - c * cp, 1, -c)


def schottky_annulus_modulus(n: int) -> float:
    return (math.log(3 / 5) + (2 * n + 1) * math.log(2)) / (2 * math.pi)


def schottky_spec(N: int = 4) -> ExampleConfig:
    """Group generated by pairings of C_n = {|z - a_n| = r_n} with C_n' = C_n + 2i.

    Defaults a_n = 2^(-n^2), r_n = a_n/4. The annuli
    A_n = {a_(n+1) + r_(n+1) < |z| < a_n - r_n} separate the limit set and
    their moduli grow without bound.
    """
    if not 1 <= N <= 6:
        raise ValueError("schottky_spec needs 1 <= N <= 6")
    params = schottky_params(N)
    gens = tuple(schottky_pairing(a, r) for a, r in params)
    spec = SemigroupSpec(gens, group_mode=True, labels=tuple(f"g{n}" for n in range(1, N + 1)))
    annuli = []
    for n in range(1, N):
        a_n, r_n = params[n - 1]
        a_next, r_next = params[n]
        ann = RoundAnnulus(0j, a_next + r_next, a_n - r_n)
        annuli.append({"n": n, "annulus": ann.to_json_obj(), "modulus": schottky_annulus_modulus(n)})
    expected = {
        "circles": [{"center": [a, 0.0], "radius": r} for a, r in params]
        + [{"center": [a, 2.0], "radius": r} for a, r in params],
        "annuli": annuli,
    }
    return ExampleConfig("schottky", spec, expected)


def get_example(name: str, N: int | None = None) -> ExampleConfig:
    if name == "cantor":
        return cantor_spec()
    if name == "koch":
        return koch_spec()
    if name == "example4":
        return example4_spec(18 if N is None else N)
    if name == "schottky":
        return schottky_spec(4 if N is None else N)
    raise ValueError(f"unknown example {name!r}; choose from {', '.join(NAMES)}")
