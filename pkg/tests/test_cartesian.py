import json
import math

import numpy as np
import pytest
from scipy import integrate

from pmheat import BoxGrid, DomainError, PotentialSpec, RefusalError, ShapeError, Snapshot, evolve, parity_parts, symmetry_defect
from pmheat.cartesian import (
    _dipole_mollified,
    _inverse_square_mollified,
    fourier_profile,
    gaussian_data,
    heat_kernel_solution,
    mollified_potential,
    parity_fraction,
    reflect,
)

SMALL = BoxGrid(L=4.0, N=32, dt=0.01)
FINE_EPS = BoxGrid(L=4.0, N=64, epsilon=0.5)


def _smoothed_radial(f, r, eps):
    """(Gaussian_eps * f)(r) for radial f in R^3, reduced to one radial integral."""
    c = math.pi / eps**2
    g = lambda s: f(s) * s * (math.exp(-c * (r - s) ** 2) - math.exp(-c * (r + s) ** 2))
    lo, hi = max(0.0, r - 8 * eps), r + 8 * eps
    pts = [p for p in (r,) if lo < p < hi]
    return integrate.quad(g, lo, hi, points=pts or None, limit=200, epsabs=0, epsrel=1e-11)[0] / (eps * r)


@pytest.mark.parametrize("eps", [0.25, 0.5])
@pytest.mark.parametrize("r", [0.01, 0.1, 0.4, 1.0, 3.0])
def test_mollified_inverse_square_against_quadrature(eps, r):
    exact = _smoothed_radial(lambda s: 1 / (s * s), r, eps)
    assert _inverse_square_mollified(np.array(r * r), eps) == pytest.approx(exact, rel=1e-8)


@pytest.mark.parametrize("eps", [0.25, 0.5])
@pytest.mark.parametrize("r", [0.003, 0.2, 0.7, 2.0])
def test_mollified_dipole_against_quadrature(eps, r):
    # x_1 / r^3 = -d/dx_1 (1 / r): differentiate the smoothed Coulomb potential numerically
    dr = 1e-4 * max(r, 0.05)
    smooth = lambda s: _smoothed_radial(lambda q: 1 / q, s, eps)
    deriv = (smooth(r + dr) - smooth(r - dr)) / (2 * dr)
    y = np.array([r, 0.0, 0.0]).reshape(3, 1)
    assert _dipole_mollified(y, eps)[0, 0] == pytest.approx(-deriv, rel=1e-6)


def test_mollified_potentials_far_field():
    box = BoxGrid(L=8.0, N=64, epsilon=0.25)
    far = box.radius > 3.0
    v = mollified_potential(PotentialSpec.hardy(0.7), box)
    r = box.radius[far]
    rel = v[far] * r**2 / 0.7 - 1
    assert np.allclose(rel, box.eps**2 / (2 * math.pi * r**2), rtol=0.05)
    x1 = box.coordinates()[0]
    d = mollified_potential(PotentialSpec.dipole([1.0, 0, 0]), box)
    assert np.allclose(d[far], x1[far] / box.radius[far] ** 3, rtol=1e-10, atol=1e-14)


def test_multipolar_potentials_are_sums():
    c = (1.0, 0.0, 0.0)
    iso = mollified_potential(PotentialSpec.isotropic([((0, 0, 0), 0.2), (c, 0.3)]), SMALL)
    parts = mollified_potential(PotentialSpec.hardy(0.2), SMALL)
    assert np.max(np.abs(iso - parts)) > 0
    aniso = mollified_potential(PotentialSpec.anisotropic([((0, 0, 0), (0.1, 0, 0))]), SMALL)
    assert np.allclose(aniso, mollified_potential(PotentialSpec.dipole([0.1, 0, 0]), SMALL))


@pytest.mark.parametrize("kw, err", [({"epsilon": 0.0}, RefusalError), ({"N": 33}, DomainError), ({"n": 4}, DomainError), ({"dt": 0.0}, DomainError)])
def test_box_validation(kw, err):
    with pytest.raises(err):
        BoxGrid(**kw)


def test_potential_dimension_mismatch():
    with pytest.raises(DomainError):
        mollified_potential(PotentialSpec.dipole([1, 0, 0, 0]), SMALL)


def test_free_heat_flow_matches_kernel():
    box = BoxGrid()
    snaps = evolve(PotentialSpec.hardy(0.0), gaussian_data(box), box, 0.5, [0.1, 0.5])
    assert [s.t for s in snaps] == [0.0, 0.1, 0.5]
    for s in snaps:
        exact = heat_kernel_solution(box, s.t)
        assert np.max(np.abs(s.values - exact)) <= 1e-4 * exact.max()


def test_evolve_validation():
    with pytest.raises(ShapeError):
        evolve(PotentialSpec.hardy(0.1), np.zeros((8, 8, 8)), SMALL, 0.1)
    with pytest.raises(DomainError):
        evolve(PotentialSpec.hardy(0.1), gaussian_data(SMALL), SMALL, 0.0)
    with pytest.raises(DomainError):
        evolve(PotentialSpec.hardy(0.1), gaussian_data(SMALL), SMALL, 0.1, [0.2])


@pytest.mark.parametrize("lam", [0.125, 0.5])
def test_positivity_resolved_mollifier(lam):
    snaps = evolve(PotentialSpec.hardy(lam), gaussian_data(FINE_EPS), FINE_EPS, 0.2, [0.05, 0.1, 0.2])
    for s in snaps:
        assert s.values.min() >= -1e-6 * s.values.max()


@pytest.mark.parametrize("lam", [0.125, 0.5])
def test_positivity_default_box(lam):
    box = BoxGrid()
    snaps = evolve(PotentialSpec.hardy(lam), gaussian_data(box), box, 0.2, [0.05, 0.1, 0.2])
    for s in snaps:
        assert s.values.min() >= -1e-3 * s.values.max()


@pytest.mark.parametrize("lam", [0.0, 0.125, 0.5])
def test_mass_non_decreasing(lam):
    snaps = evolve(PotentialSpec.hardy(lam), gaussian_data(SMALL), SMALL, 0.2, np.linspace(0.02, 0.2, 10))
    mass = np.array([s.mass() for s in snaps])
    assert np.all(np.diff(mass) >= -1e-12 * mass[0])
    if lam > 0:
        assert mass[-1] > mass[0]


def test_reflect_and_parity():
    rng = np.random.default_rng(0)
    u = rng.standard_normal((8, 8, 8))
    assert np.array_equal(reflect(reflect(u)), u)
    even, odd = parity_parts(u)
    assert np.allclose(even + odd, u)
    assert np.allclose(reflect(even), even) and np.allclose(reflect(odd), -odd)
    assert parity_fraction(even, "odd") == pytest.approx(0.0, abs=1e-15)
    assert parity_fraction(np.zeros((4, 4, 4))) == 0.0


def test_parity_conservation_radial_potential():
    box = SMALL
    x1 = box.coordinates()[0]
    u0 = gaussian_data(box) * (1 + 0.3 * x1)
    even0, odd0 = parity_parts(u0)
    spec = PotentialSpec.hardy(0.3)
    full = evolve(spec, u0, box, 0.1, [0.05, 0.1])
    ev = evolve(spec, even0, box, 0.1, [0.05, 0.1])
    od = evolve(spec, odd0, box, 0.1, [0.05, 0.1])
    for a, b, c in zip(full, ev, od):
        e, o = parity_parts(a.values)
        scale = np.max(np.abs(a.values))
        assert np.max(np.abs(e - b.values)) <= 1e-10 * scale
        assert np.max(np.abs(o - c.values)) <= 1e-10 * scale


def test_symmetry_defect_floor():
    snap = Snapshot(0.0, gaussian_data(SMALL), SMALL)
    assert symmetry_defect(snap) <= 1e-12


def test_symmetry_defect_of_radial_evolution_stays_small():
    snaps = evolve(PotentialSpec.hardy(0.3), gaussian_data(SMALL), SMALL, 0.2, [0.1, 0.2])
    assert max(symmetry_defect(s, r_max=2.5) for s in snaps) <= 1e-3


def test_nonradial_data_stay_nonradial():
    x1 = SMALL.coordinates()[0]
    u0 = x1 * gaussian_data(SMALL)
    snaps = evolve(PotentialSpec.hardy(0.3), u0, SMALL, 0.2, [0.05, 0.1, 0.2])
    d0 = symmetry_defect(snaps[0])
    assert d0 > 0.5
    assert all(symmetry_defect(s) >= 0.5 * d0 for s in snaps)
    assert all(parity_fraction(s.values, "odd") == pytest.approx(1.0, abs=1e-12) for s in snaps)


def test_dipole_breaks_symmetry():
    u0 = gaussian_data(SMALL)
    snaps = evolve(PotentialSpec.dipole([0.3, 0, 0]), u0, SMALL, 0.05, [0.01, 0.05])
    floor = symmetry_defect(snaps[0])
    assert symmetry_defect(snaps[1]) > 100 * max(floor, 1e-15)
    assert symmetry_defect(snaps[2]) > symmetry_defect(snaps[1])
    assert parity_fraction(snaps[1].values, "odd") > 1e-3


def test_off_center_pole_breaks_symmetry():
    u0 = gaussian_data(SMALL)
    spec = PotentialSpec.isotropic([((1.0, 0.0, 0.0), 0.2)])
    snap = evolve(spec, u0, SMALL, 0.05)[-1]
    assert symmetry_defect(snap) > 1e-4


def test_fourier_profile_of_gaussian():
    box = BoxGrid(L=8.0, N=64)
    rho, uhat = fourier_profile(Snapshot(0.0, gaussian_data(box), box))
    sel = rho < 1.5
    assert np.allclose(uhat[sel], np.exp(-math.pi * rho[sel] ** 2), atol=1e-12)


def test_snapshot_dump_load(tmp_path):
    snap = evolve(PotentialSpec.hardy(0.2), gaussian_data(SMALL), SMALL, 0.03)[-1]
    path = tmp_path / "snap.bin"
    snap.dump(path)
    meta = json.loads((tmp_path / "snap.bin.json").read_text())
    assert meta["N"] == SMALL.N and meta["L"] == SMALL.L and meta["t"] == pytest.approx(0.03)
    back = Snapshot.load(path, SMALL)
    assert back.t == pytest.approx(snap.t)
    assert np.array_equal(back.values, snap.values)
    with pytest.raises(ShapeError):
        Snapshot.load(path, BoxGrid(L=4.0, N=64))


def test_slice_csv(tmp_path):
    snap = Snapshot(0.0, gaussian_data(SMALL), SMALL)
    path = tmp_path / "slice.csv"
    snap.slice_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "x,y,u"
    assert len(lines) == 1 + SMALL.N**2
