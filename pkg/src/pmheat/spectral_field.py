"""Radial Fourier-side profiles on logarithmic grids.

A radial tempered distribution u is stored through its weighted transform
``h(rho) = rho**k * u^(rho)``, sampled on a geometric grid in rho = |xi|.
With this choice the PM^k norm ``ess sup |xi|^k |u^(xi)|`` is simply
``max |h|`` and homogeneous data of degree -(n-k) have a constant profile.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import special
from scipy.interpolate import CubicSpline

from .errors import AccuracyWarning, DomainError, GridEdgeWarning, ShapeError

DEFAULT_RHO_MIN = 1e-4
DEFAULT_RHO_MAX = 1e3
DEFAULT_COUNT = 512
FOUR_PI_SQ = 4.0 * math.pi**2


@dataclass(frozen=True)
class RadialGrid:
    """Geometric grid rho_j = rho_min * ratio**j, j = 0..count-1."""

    rho_min: float = DEFAULT_RHO_MIN
    rho_max: float = DEFAULT_RHO_MAX
    count: int = DEFAULT_COUNT

    def __post_init__(self):
        if not 0 < self.rho_min < self.rho_max:
            raise DomainError("need 0 < rho_min < rho_max")
        if self.count < 16:
            raise DomainError("radial grid needs at least 16 nodes")

    @cached_property
    def log_step(self) -> float:
        return math.log(self.rho_max / self.rho_min) / (self.count - 1)

    @property
    def ratio(self) -> float:
        return math.exp(self.log_step)

    @cached_property
    def nodes(self) -> np.ndarray:
        j = np.arange(self.count)
        nodes = self.rho_min * np.exp(j * self.log_step)
        nodes[-1] = self.rho_max
        nodes.flags.writeable = False
        return nodes

    @cached_property
    def log_nodes(self) -> np.ndarray:
        y = math.log(self.rho_min) + np.arange(self.count) * self.log_step
        y.flags.writeable = False
        return y

    def to_json(self) -> dict:
        return {"rho_min": self.rho_min, "rho_max": self.rho_max, "count": self.count}


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Weighted radial profile h_j = rho_j**k * u^(rho_j) of a field on R^n."""

    n: int
    k: float
    grid: RadialGrid
    profile: np.ndarray
    homogeneous: bool = False

    def __post_init__(self):
        h = np.array(self.profile, dtype=float)
        if h.shape != (self.grid.count,):
            raise ShapeError(f"profile has shape {h.shape}, grid has {self.grid.count} nodes")
        if not np.all(np.isfinite(h)):
            raise DomainError("profile must be finite at every node")
        if self.n < 3:
            raise DomainError("dimension must be >= 3")
        if self.homogeneous:
            scale = max(np.max(np.abs(h)), np.finfo(float).tiny)
            if np.ptp(h) > 1e-12 * scale:
                raise DomainError("homogeneous field must have a constant profile")
        h.flags.writeable = False
        object.__setattr__(self, "profile", h)

    @property
    def rho(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def uhat(self) -> np.ndarray:
        return self.profile * self.grid.nodes ** (-self.k)

    def with_profile(self, profile, homogeneous=False) -> "SpectralField":
        return SpectralField(self.n, self.k, self.grid, profile, homogeneous)

    def compatible(self, other: "SpectralField") -> bool:
        return self.n == other.n and self.k == other.k and self.grid == other.grid


def make_field(n: int, k: float, grid: RadialGrid, uhat) -> SpectralField:
    """Field from a callable or array giving u^(rho) at the grid nodes."""
    rho = grid.nodes
    values = uhat(rho) if callable(uhat) else np.asarray(uhat, dtype=float)
    if values.shape != rho.shape:
        raise ShapeError(f"expected {rho.shape[0]} values, got shape {values.shape}")
    return SpectralField(n, k, grid, rho**k * values)


def make_power_law_field(n: int, k: float, amplitude: float, grid: RadialGrid) -> SpectralField:
    """u^(rho) = amplitude * rho**(-k), the transform of a degree -(n-k) homogeneous function."""
    if not 0 < k < n:
        raise DomainError(f"power-law index must satisfy 0 < k < n, got k={k}, n={n}")
    return SpectralField(n, k, grid, np.full(grid.count, float(amplitude)), homogeneous=True)


def make_gaussian_field(
    n: int, k: float, grid: RadialGrid, scale: float = 1.0, amplitude: float = 1.0
) -> SpectralField:
    """Transform of ``amplitude * exp(-pi |x|^2 / scale^2)``."""
    if scale <= 0:
        raise DomainError("Gaussian scale must be positive")
    rho = grid.nodes
    uhat = amplitude * scale**n * np.exp(-math.pi * scale**2 * rho**2)
    return SpectralField(n, k, grid, rho**k * uhat)


def pm_norm(field: SpectralField, warn: bool = True) -> float:
    """Grid approximation of ess sup |xi|^k |u^(xi)|.

    Emits :class:`GridEdgeWarning` when the maximum of a non-homogeneous
    profile sits on the first or last node, since the true supremum may then
    lie outside the grid.
    """
    a = np.abs(field.profile)
    j = int(np.argmax(a))
    if warn and not field.homogeneous and a[j] > 0 and j in (0, len(a) - 1):
        warnings.warn(
            f"PM norm attained at grid edge (node {j}); grid may be too narrow",
            GridEdgeWarning,
            stacklevel=2,
        )
    return float(a[j])


def heat_factor(rho, t):
    return np.exp(-FOUR_PI_SQ * np.square(rho) * t)


def apply_heat_semigroup(field: SpectralField, t: float) -> SpectralField:
    """G(t): multiply u^ by exp(-4 pi^2 |xi|^2 t)."""
    if t < 0:
        raise DomainError(f"heat semigroup needs t >= 0, got {t}")
    if t == 0:
        return field
    return field.with_profile(field.profile * heat_factor(field.rho, t))


def _require_compatible(a, b):
    if not a.compatible(b):
        raise ShapeError("fields differ in dimension, index or grid")


def field_add(a: SpectralField, b: SpectralField) -> SpectralField:
    _require_compatible(a, b)
    homog = a.homogeneous and b.homogeneous
    return a.with_profile(a.profile + b.profile, homogeneous=homog)


def field_sub(a: SpectralField, b: SpectralField) -> SpectralField:
    _require_compatible(a, b)
    homog = a.homogeneous and b.homogeneous
    return a.with_profile(a.profile - b.profile, homogeneous=homog)


def field_scale(a: SpectralField, c: float) -> SpectralField:
    return a.with_profile(c * a.profile, homogeneous=a.homogeneous)


def edge_log_slopes(h: np.ndarray, log_step: float, k: float, n: int):
    """Log-slopes of |h| at both grid ends, for power-law extrapolation.

    Works on the last axis, so ``h`` may hold several profiles. Slopes are
    clamped so that |h| never grows away from the grid (keeps sup-norm bounds
    intact) and so that u^ = h rho^-k stays locally integrable at 0 and
    decays no faster than rho^-n at infinity: low end in [0, k], high end in
    [k - n, 0]. Where the two edge values differ in sign or vanish, the most
    damping admissible slope is used.
    """
    h = np.asarray(h, dtype=float)

    def slope(a, b, lo, hi, fallback):
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.log(np.abs(b) / np.abs(a)) / log_step
        ok = (a * b > 0) & np.isfinite(s)
        return np.where(ok, np.clip(np.where(ok, s, 0.0), lo, hi), fallback)

    # low end: going outward means decreasing rho, so slope measured inward
    s_lo = slope(h[..., 0], h[..., 1], 0.0, k, k)
    s_hi = slope(h[..., -2], h[..., -1], k - n, 0.0, k - n)
    return s_lo, s_hi


@dataclass(frozen=True)
class RadialValues:
    """Physical-space values u(r) reconstructed from a spectral field."""

    radii: np.ndarray
    values: np.ndarray
    accurate: np.ndarray  # per-radius flag; False means quadrature heuristics failed

    @property
    def all_accurate(self) -> bool:
        return bool(np.all(self.accurate))


_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def inverse_radial_transform(field: SpectralField, radii) -> RadialValues:
    """Radial inverse Fourier transform (Bochner formula).

    u(r) = 2 pi r^(1-n/2) int_0^inf u^(rho) J_{n/2-1}(2 pi rho r) rho^(n/2) d rho

    The profile is interpolated with a cubic spline in log rho, the grid
    range is integrated with panel Gauss-Legendre quadrature fine enough to
    resolve the oscillations, and both ends of the grid get closed-form
    power-law corrections (small-argument Bessel below rho_min, asymptotic
    Bessel with integration by parts above rho_max).
    """
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    if np.any(radii <= 0):
        raise DomainError("radii must be positive")
    n, k, grid = field.n, field.k, field.grid
    h = field.profile
    values = np.zeros_like(radii)
    accurate = np.ones(radii.shape, dtype=bool)
    hmax = float(np.max(np.abs(h)))
    if hmax == 0.0:
        return RadialValues(radii, values, accurate)

    nu_order = 0.5 * n - 1.0
    y = grid.log_nodes
    spline = CubicSpline(y, h)
    s_lo, s_hi = edge_log_slopes(h, grid.log_step, k, n)
    significant = np.nonzero(np.abs(h) > 1e-16 * hmax)[0]
    j_cut = int(significant[-1])
    rho_top = grid.nodes[min(j_cut + 1, grid.count - 1)]
    tail_active = j_cut >= grid.count - 2 and abs(h[-1]) > 1e-14 * hmax

    for i, r in enumerate(radii):
        # panel edges: log-spaced cells refined so that no panel exceeds 1/(4r)
        max_width = 0.25 / r
        edges = [grid.rho_min]
        for a, b in zip(grid.nodes[:-1], grid.nodes[1:]):
            if a >= rho_top:
                break
            m = max(1, int(math.ceil((b - a) / max_width)))
            edges.extend(np.linspace(a, b, m + 1)[1:])
        edges = np.asarray(edges)
        left, right = edges[:-1], edges[1:]
        mid, half = 0.5 * (left + right), 0.5 * (right - left)
        rho = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
        w = (half[:, None] * _GL_W[None, :]).ravel()
        uhat = spline(np.log(rho)) * rho ** (-k)
        integrand = uhat * special.jv(nu_order, 2 * math.pi * rho * r) * rho ** (0.5 * n)
        total = float(np.dot(w, integrand))

        # [0, rho_min] with J_nu(z) ~ (z/2)^nu / Gamma(nu+1)
        z0 = 2 * math.pi * grid.rho_min * r
        low = (
            math.pi**nu_order
            / math.gamma(nu_order + 1)
            * h[0]
            * grid.rho_min ** (n - k)
            / (n - k + s_lo)
        )
        total += low * r**nu_order
        if z0 > 0.1:
            accurate[i] = False

        if tail_active:
            big_r = grid.rho_max
            a_freq = 2 * math.pi * r
            if a_freq * big_r < 20:
                accurate[i] = False
            p = s_hi - k + 0.5 * (n - 1)
            amp = 2.0 * r ** (0.5 * (1 - n)) * h[-1] * big_r ** (-k) * big_r ** (0.5 * (n - 1))
            phase = a_freq * big_r - 0.5 * nu_order * math.pi - 0.25 * math.pi
            tail = -amp * math.sin(phase) / a_freq - amp * p / big_r * math.cos(phase) / a_freq**2
            total += tail / (2 * math.pi * r ** (1 - 0.5 * n))
            if p >= 0:
                accurate[i] = False
        values[i] = 2 * math.pi * r ** (1 - 0.5 * n) * total

    if not np.all(accurate):
        warnings.warn("inverse radial transform may be inaccurate at some radii", AccuracyWarning, stacklevel=2)
    return RadialValues(radii, values, accurate)


def field_to_csv(field: SpectralField, path) -> None:
    """Write ``rho,h,uhat`` rows with 17 significant digits."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rho", "h", "uhat"])
        for rho, h, u in zip(field.rho, field.profile, field.uhat):
            writer.writerow([f"{rho:.17g}", f"{h:.17g}", f"{u:.17g}"])
