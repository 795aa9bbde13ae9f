import math

import numpy as np
import pytest

from gibbsgraph import (
    GaussianOverlap,
    GeneralizedExponential,
    HardCoreYukawa,
    HardSphere,
    Point,
    Region,
    ZeroPotential,
    ball_volume,
    edge_probability,
    edge_probability_radial,
    phi,
    potential_from_config,
    potential_to_config,
    temperedness_constant,
)

SOFT_FAMILIES = [
    GaussianOverlap(1.0, 1.0),
    GeneralizedExponential(1.5, 0.8, 1.5),
    HardCoreYukawa(0.2, 2.0, 1.5),
]
ALL_FAMILIES = [ZeroPotential(), HardSphere(0.3)] + SOFT_FAMILIES


def test_phi_spot_values():
    line = Region([10.0])
    hs = HardSphere(0.5)
    assert phi(hs, line, Point([0.0]), Point([0.3])) == math.inf
    assert phi(hs, line, Point([0.0]), Point([1.5])) == 0.0
    # exclusion is strict: exactly touching cores do not interact
    assert hs.phi_radial(1.0) == 0.0
    g = GaussianOverlap(2.0, 1.0)
    assert phi(g, line, Point([4.0]), Point([4.0])) == 2.0
    assert g.phi_radial(1.0) == pytest.approx(2.0 * math.exp(-1.0), rel=1e-15)
    ge = GeneralizedExponential(1.5, 0.8, 1.5)
    assert ge.phi_radial(0.4) == pytest.approx(1.5 * math.exp(-(0.5**1.5)), rel=1e-15)
    yk = HardCoreYukawa(0.2, 2.0, 1.5)
    assert yk.phi_radial(0.1) == math.inf
    assert yk.phi_radial(0.5) == pytest.approx(2.0 * math.exp(-0.75) / 0.5, rel=1e-15)
    assert HardCoreYukawa(0.0, 1.0, 1.0).phi_radial(0.0) == math.inf
    assert ZeroPotential().phi_radial(123.4) == 0.0


def test_parameter_validation():
    with pytest.raises(ValueError):
        HardSphere(0.0)
    with pytest.raises(ValueError):
        GaussianOverlap(-1.0, 1.0)
    with pytest.raises(ValueError):
        GaussianOverlap(1.0, 0.0)
    with pytest.raises(ValueError):
        GeneralizedExponential(1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        HardCoreYukawa(-0.1, 1.0, 1.0)
    HardCoreYukawa(0.0, 1.0, 1.0)  # hard_radius may be zero


def test_edge_probability_exact_endpoints():
    line = Region([10.0])
    assert edge_probability(HardSphere(0.5), line, Point([0.0]), Point([0.3])) == 1.0
    assert edge_probability(HardSphere(0.5), line, Point([0.0]), Point([2.0])) == 0.0
    assert edge_probability(ZeroPotential(), line, Point([0.0]), Point([0.1])) == 0.0
    # phi = ln 2 at zero separation gives probability one half
    half = edge_probability(GaussianOverlap(math.log(2.0), 1.0), line, Point([1.0]), Point([1.0]))
    assert half == pytest.approx(0.5, abs=1e-15)


def test_edge_probability_monotone_and_bounded():
    grid = np.linspace(1e-6, 12.0, 2500)
    for pot in ALL_FAMILIES:
        p = edge_probability_radial(pot, grid)
        assert np.all(p >= 0.0) and np.all(p <= 1.0)
        assert np.all(np.diff(p) <= 1e-12), type(pot).__name__
        # vectorized path agrees with the scalar definition
        scalar = [-math.expm1(-pot.phi_radial(float(r))) for r in grid[::500]]
        assert np.allclose(p[::500], scalar, rtol=0, atol=1e-15)


def test_phi_symmetry_random_pairs():
    rng = np.random.default_rng(5)
    box = Region([4.0, 4.0])
    a = rng.random((10**4, 2)) * 4.0
    b = rng.random((10**4, 2)) * 4.0
    d_ab = np.linalg.norm(a - b, axis=1)
    for pot in ALL_FAMILIES:
        fwd = edge_probability_radial(pot, d_ab)
        rev = edge_probability_radial(pot, np.linalg.norm(b - a, axis=1))
        assert np.array_equal(fwd, rev)
    # and through the Point-level API on a subsample
    for i in range(0, 10**4, 500):
        p, q = Point(a[i]), Point(b[i])
        for pot in ALL_FAMILIES:
            assert phi(pot, box, p, q) == phi(pot, box, q, p)


def test_temperedness_hard_sphere_closed_forms():
    for d in (1, 2, 3):
        want = ball_volume(d, 1.0)  # exclusion ball has radius 2r = 1
        got = temperedness_constant(HardSphere(0.5), d)
        assert got == pytest.approx(want, rel=1e-12)
    assert temperedness_constant(HardSphere(0.5), 1) == pytest.approx(2.0, rel=1e-12)
    assert temperedness_constant(HardSphere(0.5), 2) == pytest.approx(math.pi, rel=1e-12)
    assert temperedness_constant(HardSphere(0.5), 3) == pytest.approx(4.0 * math.pi / 3.0, rel=1e-12)
    assert temperedness_constant(ZeroPotential(), 2) == 0.0


def test_temperedness_gaussian_vs_trapezoid_oracle():
    """1D interaction volume against a 10^6-point trapezoid on [0, 10*sigma]."""
    x = np.linspace(0.0, 10.0, 10**6 + 1)
    oracle = 2.0 * np.trapezoid(1.0 - np.exp(-np.exp(-(x**2))), x)
    got = temperedness_constant(GaussianOverlap(1.0, 1.0), 1)
    assert got == pytest.approx(oracle, rel=1e-7)
    assert got == pytest.approx(1.2851445209578922, rel=1e-9)  # frozen


@pytest.mark.parametrize(
    "pot,d,radius",
    [
        (GaussianOverlap(1.0, 1.0), 1, 8.0),
        (GaussianOverlap(1.0, 1.0), 2, 8.0),
        (GeneralizedExponential(1.5, 0.8, 1.5), 2, 12.0),
        (HardCoreYukawa(0.2, 2.0, 1.5), 3, 25.0),
    ],
)
def test_temperedness_vs_stratified_monte_carlo(pot, d, radius):
    """Quadrature value against an independent 10^7-point stratified MC integral."""
    n = 10**7
    rng = np.random.default_rng(d * 1000 + 17)
    r = (np.arange(n) + rng.random(n)) * (radius / n)
    f = -np.expm1(-pot.phi_radial(r))
    surface = {1: 2.0 * np.ones_like(r), 2: 2.0 * np.pi * r, 3: 4.0 * np.pi * r**2}[d]
    mc = float(np.sum(f * surface) * (radius / n))
    got = temperedness_constant(pot, d)
    assert got == pytest.approx(mc, rel=1e-4)


def test_config_roundtrip_and_schema():
    assert potential_to_config(HardSphere(0.3)) == {"family": "hard_sphere", "r": 0.3}
    assert potential_to_config(ZeroPotential()) == {"family": "zero"}
    for pot in ALL_FAMILIES:
        clone = potential_from_config(potential_to_config(pot))
        assert type(clone) is type(pot)
        assert potential_to_config(clone) == potential_to_config(pot)
    with pytest.raises(ValueError, match="family"):
        potential_from_config({"family": "lennard_jones", "eps": 1.0})
    with pytest.raises(ValueError):
        potential_from_config({"family": "hard_sphere"})  # missing r
    with pytest.raises(ValueError):
        potential_from_config({"family": "hard_sphere", "r": 0.3, "extra": 1})


def test_core_diameters():
    assert HardSphere(0.5).core_diameter() == 1.0
    assert HardCoreYukawa(0.2, 2.0, 1.5).core_diameter() == 0.2
    assert ZeroPotential().core_diameter() == 0.0
    assert GaussianOverlap(1.0, 1.0).core_diameter() == 0.0
