import math

import numpy as np
import pytest

from ps3lab.errors import InvalidSpec
from ps3lab.membrane import (MembraneSpec, SpectralParams, boundary_trace, build_membrane,
                             euler_characteristic, involution_Xi, render_svg, validate_spec)
from ps3lab.moduli import FashionParams


def spec(f, m1, m2=0):
    return FashionParams(f, m1, m2).spec(np.zeros(3))


def test_PB1_threshold_is_strict():
    lam = 1.5
    mu = math.sqrt((3 - lam) / (2 * lam))
    h1 = 1 / mu + math.sqrt(mu ** -2 - 1)
    assert validate_spec(MembraneSpec("PB1", lam, h1, h1 + 1, 1))
    assert not validate_spec(MembraneSpec("PB1", lam, h1 + 1e-9, h1 + 1, 1))


def test_PA2_boundary_product_allowed():
    assert not validate_spec(MembraneSpec("PA2", 1.5, 0.5, 2.0, 1, 0))
    assert validate_spec(MembraneSpec("PA2", 1.5, 0.5, 1.9, 1, 0))


def test_PB22_angle_sum():
    assert any("m pi" in v for v in validate_spec(MembraneSpec("PB22", 2.0, 2.0, 1.2, 1)))


def test_PA1_modulus():
    # arg h = 1 lies inside the sector and outside the disk bounded by C at lambda = 1.5
    c, s = math.cos(1.0), math.sin(1.0)
    assert not validate_spec(MembraneSpec("PA1", 1.5, c, s, 1, 1))
    assert any("|h| >= 1" in v for v in validate_spec(MembraneSpec("PA1", 1.5, 0.9 * c, 0.9 * s, 1, 1)))


def test_invalid_build_raises():
    with pytest.raises(InvalidSpec):
        build_membrane(MembraneSpec("PB1", 2.5, 3.0, 4.0, 1))


def test_spec_json_round_trip():
    s = MembraneSpec("PA2", 1.4, 1.2, 3.1, 2, 1)
    assert MembraneSpec.from_json(s.to_json()) == s


@pytest.mark.parametrize("m", (1, 2, 3))
def test_PB1_red_winding(m):
    a = build_membrane(spec("PB1", m))
    assert a.color_multiset() == ("blue", "green", "red")
    assert boundary_trace(a, "red").winding == m


@pytest.mark.parametrize("m1,m2", ((1, 1), (2, 3)))
def test_PA1_windings(m1, m2):
    a = build_membrane(spec("PA1", m1, m2))
    assert boundary_trace(a, "green").winding == m1
    assert boundary_trace(a, "blue").winding == m2


def test_b2_color_multisets():
    assert build_membrane(spec("PB21", 2)).color_multiset() == ("blue", "blue", "green")
    assert build_membrane(spec("PB22", 2)).color_multiset() == ("green", "red", "red")


@pytest.mark.parametrize("f,m1,m2", [("PB1", 1, 0), ("PA1", 1, 1), ("PA2", 1, 1), ("PA3", 0, 1),
                                     ("PA12", 1, 1), ("PB21", 2, 0), ("PB23", 3, 0)])
def test_pants_topology(f, m1, m2):
    assert euler_characteristic(build_membrane(spec(f, m1, m2))) == -1


def test_involution_Xi():
    sp = SpectralParams(2.0)
    r = math.sqrt(sp.mu ** -2 - 1)
    p = (0.7, 1.3)
    q = involution_Xi(involution_Xi(p, 2, sp), 2, sp)
    assert q[0] == pytest.approx(p[0]) and q[1] == pytest.approx(p[1])
    for phi in (0.0, 2 * math.pi):
        x = involution_Xi((r, phi), 2, sp)
        assert x[0] == pytest.approx(r) and x[1] % (4 * math.pi) == pytest.approx(phi)


def test_svg_and_json_deterministic():
    a = build_membrane(spec("PB21", 2))
    b = build_membrane(spec("PB21", 2))
    assert a.dumps() == b.dumps()
    svg = render_svg(a)
    assert svg.startswith("<svg") and svg == render_svg(b)
