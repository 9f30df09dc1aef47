"""Self-check suite run by ``pmheat verify``.

Every check compares a library result with an independent closed form or
brute-force quadrature and returns a :class:`CheckResult`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, List

import numpy as np
from scipy import integrate

from .analysis import (
    convergence_experiment,
    self_similarity_residual,
    semigroup_gap,
    stationarity_residual,
    stationary_pair,
)
from .cartesian import crosscheck
from .picard import TimeGrid, continuous_dependence_check, picard_solve
from .potentials import PotentialSpec, threshold_report
from .radial_convolution import RadialKernel, convolve_radial, power_law_convolution_oracle
from .special_functions import (
    beta_fn,
    hardy_constant,
    homogeneous_ft_constant,
    lambda_star,
    riesz_composition_constant,
)
from .spectral_field import RadialGrid, make_gaussian_field, make_power_law_field


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


def riesz_brute_force(theta1: float, theta2: float, n: int) -> float:
    """int |x|^(theta1-n) |e - x|^(theta2-n) dx over R^n for a unit vector e.

    Nested adaptive quadrature in (r, polar angle); the r-range is split at
    the singular shell r = 1 and the far tail is mapped to s = 1/r.
    """
    sph = 2 * math.pi ** ((n - 1) / 2) / math.gamma((n - 1) / 2)
    p = (theta2 - n) / 2
    with warnings.catch_warnings():
        # the inner integrand is singular at r = 1, phi = 0; QUADPACK flags roundoff there
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return sph * _riesz_radial(theta1, p, n)


def _riesz_radial(theta1, p, n):

    def inner(r):
        f = lambda phi: (1 + r * r - 2 * r * math.cos(phi)) ** p * math.sin(phi) ** (n - 2)
        return integrate.quad(f, 0, math.pi, limit=400, epsabs=0, epsrel=1e-10)[0]

    g = lambda r: r ** (theta1 - 1) * inner(r)
    total = 0.0
    for a, b in ((0, 0.5), (0.5, 1), (1, 2), (2, 10)):
        total += integrate.quad(g, a, b, limit=400, epsabs=0, epsrel=1e-9)[0]
    total += integrate.quad(lambda s: g(1 / s) / s**2, 0, 0.1, limit=400, epsabs=0, epsrel=1e-9)[0]
    return total


def _rel(a, b):
    return abs(a / b - 1.0)


def check_constants() -> CheckResult:
    values = {
        "hardy_constant(4,3)": (hardy_constant(4, 3), 1.0),
        "lambda_star(3)": (lambda_star(3), 0.25),
        "lambda_star(4)": (lambda_star(4), 1.0),
        "lambda_star(6)": (lambda_star(6), 4.0),
        "beta(1/2,1)": (beta_fn(0.5, 1.0), 2.0),
        "gamma(0,2,4)": (homogeneous_ft_constant(0, 2, 4).real, 1.0),
    }
    errs = {k: _rel(a, b) for k, (a, b) in values.items()}
    triples = [(1.0, 1.5, 3), (2.0, 1.0, 4), (2.5, 1.0, 5)]
    for t in triples:
        errs[f"K{t}"] = _rel(riesz_composition_constant(*t), riesz_brute_force(*t))
    ok = all(v <= (1e-3 if k.startswith("K") else 1e-9) for k, v in errs.items())
    return CheckResult("constants", ok, errs)


def check_threshold_equivalence() -> CheckResult:
    bad = 0
    total = 0
    for n in (3, 4, 6):
        for k in np.linspace(2, n, 22)[1:-1]:
            for lam in np.linspace(-1.2 * lambda_star(n), 1.2 * lambda_star(n), 20):
                total += 1
                rep = threshold_report(PotentialSpec.hardy(lam), n, float(k))
                bad += rep.passes != (abs(lam) < (k - 2) * (n - k))
    return CheckResult("threshold_equivalence", bad == 0, {"cases": total, "disagreements": int(bad)})


def check_convolution_oracle() -> CheckResult:
    grid = RadialGrid()
    errs = {}
    for n, b1, k in ((3, 2.0, 1.5), (4, 2.0, 3.0), (4, 2.0, 2.5), (6, 4.0, 3.0)):
        out = convolve_radial(RadialKernel(n, b1), make_power_law_field(n, k, 1.0, grid))
        rho = grid.nodes[64:-64]
        exact = np.array([power_law_convolution_oracle(n - b1, n - k, n, r) for r in rho])
        errs[f"n={n},b1={b1},k={k}"] = float(np.max(np.abs(out.uhat[64:-64] / exact - 1)))
    return CheckResult("convolution_oracle", all(e <= 1e-3 for e in errs.values()), errs)


def check_contraction() -> CheckResult:
    u0 = make_power_law_field(4, 3.0, 1 / (2 * math.pi), RadialGrid())
    rep = picard_solve(PotentialSpec.hardy(0.5), u0, TimeGrid.default(), tol=1e-8)
    ratios = rep.diffs[1:] / rep.diffs[:-1]
    ok = (
        bool(np.all(ratios <= 0.5 * 1.05))
        and 0.45 <= rep.measured_rate <= 0.55
        and rep.iterations <= 40
    )
    return CheckResult(
        "contraction_certificate",
        ok,
        {"iterations": rep.iterations, "max_ratio": float(ratios.max()), "measured_rate": rep.measured_rate},
    )


def check_stationary() -> CheckResult:
    pair = stationary_pair(0.75, 4)
    tuned = stationarity_residual(pair, 2)
    detuned = stationarity_residual(pair, 2, k=3.0)
    return CheckResult(
        "stationary_fixed_point", tuned <= 2e-3 and detuned >= 0.1, {"residual": tuned, "detuned": detuned}
    )


def check_self_similarity() -> CheckResult:
    grid = RadialGrid()
    shift = 16
    tg = TimeGrid.geometric(1e-6, grid.ratio ** (2 * shift), 17)
    u0 = make_power_law_field(4, 3.0, 1 / (2 * math.pi), grid)
    traj = picard_solve(PotentialSpec.hardy(0.5), u0, tg, tol=1e-13, max_iter=200).trajectory
    res = self_similarity_residual(traj, shift)
    return CheckResult("self_similarity", res <= 1e-6, {"residual": res})


def check_asymptotics() -> CheckResult:
    grid = RadialGrid()
    times = np.geomspace(1.0, 1e3, 61)
    slope = semigroup_gap(make_gaussian_field(4, 3.0, grid), times).fitted_slope
    homog = semigroup_gap(make_power_law_field(4, 3.0, 1.0, grid), times).gap_norms
    rho_factor = math.exp(-4 * math.pi**2 * grid.rho_min**2 * times[-1])
    flat = bool(np.all(homog >= rho_factor * (1 - 1e-12)) and np.all(homog <= 1.0))
    pot = PotentialSpec.hardy(0.5)
    v0 = make_power_law_field(4, 3.0, 1 / (2 * math.pi), grid)
    u0 = v0.with_profile(v0.profile + make_gaussian_field(4, 3.0, grid).profile)
    tg = TimeGrid.default(t_end=100.0)
    eq = convergence_experiment(pot, u0, v0, tg).decade_ratio()
    w0 = v0.with_profile(v0.profile + 0.05)
    series = convergence_experiment(pot, w0, v0, tg).gap_norms
    drift = float(np.max(np.abs(series[1:] / series[0] - 1)))
    ok = slope is not None and abs(slope / -1.5 - 1) <= 0.05 and flat and eq <= 0.1 and drift <= 0.1
    return CheckResult(
        "asymptotics",
        ok,
        {"gaussian_slope": slope, "homogeneous_flat": flat, "equivalent_decade_ratio": eq, "homogeneous_drift": drift},
    )


def check_continuous_dependence() -> CheckResult:
    grid = RadialGrid()
    u0 = make_power_law_field(4, 3.0, 1 / (2 * math.pi), grid)
    bump = make_gaussian_field(4, 3.0, grid, amplitude=0.01)
    v_bump = u0.with_profile(u0.profile + bump.profile)
    tg = TimeGrid.default(count=32)
    scenarios = {
        "identical": (u0, u0, 0.5, 0.5),
        "potential_shift": (u0, u0, 0.5, 0.55),
        "data_bump": (v_bump, u0, 0.5, 0.5),
    }
    detail = {}
    ok = True
    for name, (a, b, la, lb) in scenarios.items():
        res = continuous_dependence_check(a, b, PotentialSpec.hardy(la), PotentialSpec.hardy(lb), tg)
        detail[name] = {"difference": res.difference, "bound": res.bound}
        ok &= res.holds
    return CheckResult("continuous_dependence", bool(ok), detail)


def check_crosscheck() -> CheckResult:
    rep = crosscheck()
    ok = (
        rep.max_profile_error <= 0.05
        and rep.positivity_ratio >= -1e-3
        and rep.parity_mixing <= 1e-10
        and rep.dipole_odd_fraction > 1e-3
    )
    return CheckResult("crosscheck", ok, rep.to_json())


CHECKS: List[Callable[[], CheckResult]] = [
    check_constants,
    check_threshold_equivalence,
    check_convolution_oracle,
    check_contraction,
    check_stationary,
    check_self_similarity,
    check_asymptotics,
    check_continuous_dependence,
    check_crosscheck,
]


def run_all(include_crosscheck: bool = True) -> List[CheckResult]:
    results = []
    for check in CHECKS:
        if check is check_crosscheck and not include_crosscheck:
            continue
        results.append(check())
    return results
