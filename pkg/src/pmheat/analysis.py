"""Stationary solutions, self-similarity, positivity and large-time experiments."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, ShapeError
from .picard import (
    TimeGrid,
    Trajectory,
    _kernel_of,
    contraction_factor,
    duhamel_apply,
    heat_flow,
    picard_solve,
)
from .potentials import PotentialSpec
from .special_functions import homogeneous_ft_constant, lambda_star
from .spectral_field import (
    FOUR_PI_SQ,
    RadialGrid,
    SpectralField,
    inverse_radial_transform,
    make_power_law_field,
)

EQUIVALENT = "equivalent"
NOT_EQUIVALENT = "not_equivalent"
UNDECIDED = "undecided"


@dataclass(frozen=True)
class StationaryPair:
    """The two power-law stationary solutions omega_i = |x|^(exponent_i) for lambda / |x|^2."""

    n: int
    lam: float
    l: float
    exponents: tuple
    indices: tuple
    fourier_amplitudes: tuple

    def potential(self) -> PotentialSpec:
        return PotentialSpec.hardy(self.lam)

    def field(self, which: int, grid: RadialGrid) -> SpectralField:
        """omega_i^ as a homogeneous field in PM^{k_i}."""
        idx = _which(which)
        return make_power_law_field(self.n, self.indices[idx], self.fourier_amplitudes[idx], grid)


def _which(which):
    if which not in (1, 2):
        raise DomainError(f"which must be 1 or 2, got {which}")
    return which - 1


def stationary_pair(lam: float, n: int) -> StationaryPair:
    """Exponents, PM indices and transform amplitudes of the stationary pair (A_i = 1)."""
    ls = lambda_star(n)
    if not abs(lam) < ls:
        raise DomainError(f"need |lambda| < lambda* = {ls}, got {lam}")
    l = math.sqrt(ls - lam)
    half = 0.5 * (n - 2)
    exponents = (-half + l, -half - l)
    indices = (0.5 * (n + 2) + l, 0.5 * (n + 2) - l)
    amps = []
    for e in exponents:
        # FT of |x|^e = |x|^-(n - alpha) with alpha = n + e, valid for 0 < alpha < n
        alpha = n + e
        amps.append(homogeneous_ft_constant(0, alpha, n).real if 0 < alpha < n else math.nan)
    return StationaryPair(n, lam, l, exponents, indices, tuple(amps))


def stationarity_residual(
    pair: StationaryPair,
    which: int,
    grid: Optional[RadialGrid] = None,
    tg: Optional[TimeGrid] = None,
    k: Optional[float] = None,
    amplitude: Optional[float] = None,
) -> float:
    """sup over (t, rho) of |H(w) - w| / ||w|| with H(w) = G(t) w + L_V(w).

    ``w`` is the stationary power law omega_i, or, when ``k`` is given, the
    power law of the same family with index ``k`` (a detuned test profile).
    """
    grid = RadialGrid() if grid is None else grid
    tg = TimeGrid.default() if tg is None else tg
    idx = _which(which)
    k_use = pair.indices[idx] if k is None else float(k)
    if not 2 < k_use < pair.n:
        raise DomainError(f"PM index {k_use} outside (2, n); the Duhamel map is not defined")
    amp = pair.fourier_amplitudes[idx] if amplitude is None else amplitude
    w = make_power_law_field(pair.n, k_use, amp, grid)
    const = heat_flow(w, tg).with_profiles(np.broadcast_to(w.profile, (tg.count, grid.count)))
    image = heat_flow(w, tg).profiles + duhamel_apply(_kernel_of(pair.potential(), pair.n), const).profiles
    return float(np.max(np.abs(image - const.profiles)) / np.max(np.abs(w.profile)))


def self_similarity_residual(traj: Trajectory, shift: int, t_ratio_min: float = 1e4, margin: int = 64) -> float:
    """Grid-shift defect of h(rho, t) = h(lambda rho, t / lambda^2) with lambda = r^shift.

    Needs a geometric time grid with ratio r^(2 shift). Only nodes with
    t >= t_ratio_min * t_1 enter, since the first time interval is not
    scale covariant; ``margin`` nodes at each rho edge are skipped.
    """
    t = traj.times.nodes
    r2 = traj.grid.ratio ** (2 * shift)
    ratios = t[2:] / t[1:-1]
    if t.size < 3 or not np.allclose(ratios, r2, rtol=1e-9):
        raise DomainError("time grid must be geometric with ratio grid_ratio**(2*shift)")
    start = int(np.searchsorted(t, t_ratio_min * t[1]))
    if start >= t.size - 1:
        raise DomainError("time grid too short for the requested start-up cutoff")
    h = traj.profiles
    lo, hi = margin, traj.grid.count - margin - shift
    if hi <= lo:
        raise DomainError("radial grid too short for the shift and margin")
    later = h[start + 1 :, lo:hi]
    shifted = h[start:-1, lo + shift : hi + shift]
    return float(np.max(np.abs(later - shifted)) / np.max(np.abs(h)))


@dataclass(frozen=True)
class AsymptoticSeries:
    times: np.ndarray
    gap_norms: np.ndarray
    fitted_slope: Optional[float] = None

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "norm"])
            for t, v in zip(self.times, self.gap_norms):
                writer.writerow([f"{t:.17g}", f"{v:.17g}"])

    def decade_ratio(self) -> float:
        """norm(t_last) / norm(t_last / 10), by log-linear interpolation."""
        return _decade_ratio(self.times, self.gap_norms)


def _decade_ratio(times, norms):
    t_end = times[-1]
    if times[0] > t_end / 10:
        raise DomainError("series does not span a decade")
    keep = times > 0
    pos = np.clip(norms[keep], np.finfo(float).tiny, None)
    earlier = math.exp(np.interp(math.log(t_end / 10), np.log(times[keep]), np.log(pos)))
    return float(norms[-1] / earlier)


def _tail_slope(times, norms):
    mask = (times > 0) & (norms > 0)
    t, v = times[mask], norms[mask]
    if t.size < 4 or not v[-1] < v[t.size // 2]:
        return None
    half = t.size // 2
    return float(np.polyfit(np.log(t[half:]), np.log(v[half:]), 1)[0])


def semigroup_gap(psi: SpectralField, times) -> AsymptoticSeries:
    """||G(t) psi||_{PM^k} at the given times, with a log-log tail slope when decaying."""
    times = np.asarray(times, dtype=float)
    if np.any(times < 0) or np.any(np.diff(times) <= 0):
        raise DomainError("times must be non-negative and increasing")
    rho2 = psi.grid.nodes**2
    norms = np.max(np.abs(psi.profile[None, :] * np.exp(-FOUR_PI_SQ * np.outer(times, rho2))), axis=1)
    return AsymptoticSeries(times, norms, _tail_slope(times, norms))


def convergence_experiment(
    potential, u0: SpectralField, v0: SpectralField, tg: TimeGrid, tol: float = 1e-10, max_iter: int = 200
) -> AsymptoticSeries:
    """||u(t) - v(t)||_{PM^k} for the two mild solutions with the same potential."""
    if not u0.compatible(v0):
        raise ShapeError("initial data live on different (n, k, grid)")
    if contraction_factor(_kernel_of(potential, u0.n), u0.n, u0.k) >= 1:
        raise DomainError("convergence experiment needs tau < 1")
    ru = picard_solve(potential, u0, tg, tol=tol, max_iter=max_iter)
    rv = picard_solve(potential, v0, tg, tol=tol, max_iter=max_iter)
    norms = np.max(np.abs(ru.trajectory.profiles - rv.trajectory.profiles), axis=1)
    return AsymptoticSeries(tg.nodes.copy(), norms, _tail_slope(tg.nodes, norms))


@dataclass(frozen=True)
class PositivityReport:
    min_value: float
    max_value: float
    sign: int
    passes: bool
    accurate: bool

    def to_json(self) -> dict:
        return {
            "min": self.min_value,
            "max": self.max_value,
            "sign": self.sign,
            "passes": self.passes,
            "accurate": self.accurate,
        }


def positivity_check(solution: Trajectory, radii, times, sign: int = 1, rel_tol: float = 1e-3) -> PositivityReport:
    """Sample u(r, t) in physical space and check it keeps the sign of the data.

    ``times`` are matched to the nearest time nodes. With ``sign = 1`` it
    passes if min >= -rel_tol * max; with ``sign = -1`` if max <= rel_tol * |min|.
    """
    if sign not in (1, -1):
        raise DomainError("sign must be +1 or -1")
    nodes = solution.times.nodes
    idx = sorted({int(np.argmin(np.abs(nodes - t))) for t in np.atleast_1d(times)})
    values, accurate = [], True
    for m in idx:
        rv = inverse_radial_transform(solution.field(m), radii)
        values.append(rv.values)
        accurate &= rv.all_accurate
    v = np.concatenate(values)
    lo, hi = float(v.min()), float(v.max())
    ok = lo >= -rel_tol * hi if sign == 1 else hi <= rel_tol * abs(lo)
    return PositivityReport(lo, hi, sign, bool(ok), bool(accurate))


def equivalence_probe(
    u0: SpectralField, v0: SpectralField, k: Optional[float] = None, horizon: float = 1e3, samples: int = 61
) -> str:
    """Classify (u0, v0) by whether ||G(t)(u0 - v0)||_{PM^k} decays over [1, horizon].

    The last decade ratio below 0.3 means equivalent, above 0.9 not
    equivalent, anything between is undecided.
    """
    if not u0.compatible(v0):
        raise ShapeError("initial data live on different (n, k, grid)")
    if k is not None and k != u0.k:
        raise DomainError(f"fields are stored with k={u0.k}, probe asked for k={k}")
    if horizon < 10:
        raise DomainError("horizon must be at least 10 to test a decade")
    psi = u0.with_profile(u0.profile - v0.profile)
    series = semigroup_gap(psi, np.geomspace(1.0, horizon, samples))
    ratio = series.decade_ratio()
    if ratio < 0.3:
        return EQUIVALENT
    if ratio > 0.9:
        return NOT_EQUIVALENT
    return UNDECIDED
