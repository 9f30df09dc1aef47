"""Whole-trajectory Picard iteration for the mild heat equation with a radial potential.

The mild equation ``u = G(t) u0 + L_V(u)`` is solved on the Fourier side,
where for a potential with symbol ``V^ = coef |eta|^(2-n)``

    L_V(u)^(rho, t) = int_0^t exp(-4 pi^2 rho^2 (t - s)) (V^ * u^)(rho, s) ds.

The s-integral uses an exponential integrator: the convolution term is taken
piecewise linear in s between time nodes and integrated exactly against the
heat factor, so stiffness at large rho costs nothing.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import DomainError, NonConvergenceError, RefusalError, ShapeError
from .potentials import PotentialSpec, threshold_report
from .radial_convolution import RadialKernel, convolution_operator
from .special_functions import hardy_constant, hardy_potential_norm_factor
from .spectral_field import FOUR_PI_SQ, RadialGrid, SpectralField

# below this z the phi-function weights switch to their Taylor series
_SERIES_Z = 1e-2


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Time nodes 0 = t_0 < t_1 < ... < t_end."""

    nodes: np.ndarray

    def __post_init__(self):
        t = np.array(self.nodes, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise DomainError("time grid needs at least two nodes")
        if t[0] != 0.0:
            raise DomainError("time grid must start at t = 0")
        if not np.all(np.diff(t) > 0) or not np.all(np.isfinite(t)):
            raise DomainError("time nodes must be finite and strictly increasing")
        t.flags.writeable = False
        object.__setattr__(self, "nodes", t)

    @classmethod
    def default(
        cls, t_end: float = 4.0, count: int = 64, linear_count: int = 8, linear_fraction: float = 0.01
    ) -> "TimeGrid":
        """``linear_count`` equispaced nodes on [0, linear_fraction*t_end], geometric after."""
        if t_end <= 0:
            raise DomainError("t_end must be positive")
        if count < 8 or not 2 <= linear_count < count:
            raise DomainError("need count >= 8 and 2 <= linear_count < count")
        t_lin = linear_fraction * t_end
        lin = np.linspace(0.0, t_lin, linear_count)
        geo = np.geomspace(t_lin, t_end, count - linear_count + 1)[1:]
        nodes = np.concatenate([lin, geo])
        nodes[-1] = t_end
        return cls(nodes)

    @classmethod
    def geometric(cls, t_first: float, ratio: float, count: int) -> "TimeGrid":
        """Nodes 0, t_first, t_first*ratio, ..., with ``count`` nodes in total."""
        if t_first <= 0 or ratio <= 1 or count < 2:
            raise DomainError("need t_first > 0, ratio > 1 and count >= 2")
        return cls(np.concatenate([[0.0], t_first * ratio ** np.arange(count - 1)]))

    @property
    def t_end(self) -> float:
        return float(self.nodes[-1])

    @property
    def count(self) -> int:
        return int(self.nodes.size)

    def to_json(self) -> dict:
        return {"count": self.count, "t_end": self.t_end, "nodes": self.nodes.tolist()}


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Weighted profiles ``profiles[m, j] = rho_j^k u^(rho_j, t_m)``."""

    times: TimeGrid
    n: int
    k: float
    grid: RadialGrid
    profiles: np.ndarray

    def __post_init__(self):
        p = np.array(self.profiles, dtype=float)
        if p.shape != (self.times.count, self.grid.count):
            raise ShapeError(
                f"profiles have shape {p.shape}, expected {(self.times.count, self.grid.count)}"
            )
        p.flags.writeable = False
        object.__setattr__(self, "profiles", p)

    def field(self, m: int) -> SpectralField:
        return SpectralField(self.n, self.k, self.grid, self.profiles[m])

    def norms(self) -> np.ndarray:
        """PM^k norm at every time node."""
        return np.max(np.abs(self.profiles), axis=1)

    def sup_norm(self) -> float:
        """Grid form of the X_k norm sup_t ||u(t)||_{PM^k}."""
        return float(np.max(np.abs(self.profiles)))

    def with_profiles(self, profiles) -> "Trajectory":
        return Trajectory(self.times, self.n, self.k, self.grid, profiles)

    def compatible(self, other: "Trajectory") -> bool:
        return (
            self.n == other.n
            and self.k == other.k
            and self.grid == other.grid
            and np.array_equal(self.times.nodes, other.times.nodes)
        )

    def to_csv(self, path) -> None:
        """Long-format CSV with columns t, rho, h."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "rho", "h"])
            for t, row in zip(self.times.nodes, self.profiles):
                for rho, h in zip(self.grid.nodes, row):
                    writer.writerow([f"{t:.17g}", f"{rho:.17g}", f"{h:.17g}"])


def heat_flow(u0: SpectralField, tg: TimeGrid) -> Trajectory:
    """Trajectory of G(t) u0 on the time grid."""
    rho2 = u0.grid.nodes**2
    profiles = u0.profile[None, :] * np.exp(-FOUR_PI_SQ * np.outer(tg.nodes, rho2))
    return Trajectory(tg, u0.n, u0.k, u0.grid, profiles)


def _phi_weights(z):
    """Return (z*psi(z), z*(phi1(z) - psi(z))) for z >= 0.

    phi1(z) = (1 - e^-z)/z and psi(z) = (1 - e^-z (1 + z))/z^2 are the
    exact integrals of e^{-z(1-v)} against the hats v and 1 - v on [0, 1].
    """
    z = np.asarray(z, dtype=float)
    small = z < _SERIES_Z
    zs = np.where(small, z, 0.0)
    zl = np.where(small, 1.0, z)
    em = np.exp(-zl)
    zpsi_large = (1.0 - em * (1.0 + zl)) / zl
    zphi_large = -np.expm1(-zl)
    zpsi_small = zs * (0.5 - zs * (1 / 3 - zs * (1 / 8 - zs * (1 / 30 - zs / 144))))
    zphi_small = zs * (1 - zs * (0.5 - zs * (1 / 6 - zs * (1 / 24 - zs / 120))))
    zpsi = np.where(small, zpsi_small, zpsi_large)
    zphi = np.where(small, zphi_small, zphi_large)
    return zpsi, zphi - zpsi


def _kernel_of(potential, n: int) -> RadialKernel:
    if isinstance(potential, RadialKernel):
        kernel = potential
    elif isinstance(potential, PotentialSpec):
        if not potential.is_radial:
            raise DomainError(
                f"the radial solver needs a potential centred at the origin, got {potential.kind}"
            )
        strength = potential.lam if potential.kind == "hardy" else sum(p.lam for p in potential.poles)
        kernel = RadialKernel(n, n - 2, strength * hardy_potential_norm_factor(n))
    else:
        raise DomainError(f"unsupported potential type {type(potential).__name__}")
    if kernel.n != n:
        raise ShapeError(f"kernel lives in R^{kernel.n}, data in R^{n}")
    if kernel.exponent != n - 2:
        raise DomainError(
            f"Duhamel operator maps X_k to itself only for kernel exponent n-2={n - 2}, "
            f"got {kernel.exponent}"
        )
    return kernel


def duhamel_apply(kernel: RadialKernel, traj: Trajectory) -> Trajectory:
    """L_V(u) on every time node; zero at t_0."""
    kernel = _kernel_of(kernel, traj.n)
    if not 2 < traj.k < traj.n:
        raise DomainError(f"need 2 < k < n for the Duhamel operator, got k={traj.k}")
    out = np.zeros_like(traj.profiles)
    if kernel.coefficient == 0:
        return traj.with_profiles(out)
    op = convolution_operator(traj.n, float(kernel.exponent), float(traj.k), traj.grid)
    # weighted convolution profiles carry index k-2, the rho^2 below restores k
    forcing = kernel.coefficient * op.apply(traj.profiles)
    rho2 = traj.grid.nodes**2
    t = traj.times.nodes
    for m in range(1, t.size):
        z = FOUR_PI_SQ * rho2 * (t[m] - t[m - 1])
        w_prev, w_curr = _phi_weights(z)
        out[m] = np.exp(-z) * out[m - 1] + (w_prev * forcing[m - 1] + w_curr * forcing[m]) / FOUR_PI_SQ
    return traj.with_profiles(out)


def contraction_factor(potential, n: int, k: float) -> float:
    """tau = C_{n-2,k} times the PM^{n-2} norm (bound) of the potential."""
    if isinstance(potential, RadialKernel):
        if potential.n != n:
            raise ShapeError(f"kernel lives in R^{potential.n}, not R^{n}")
        if potential.exponent != n - 2:
            raise DomainError("contraction factor is defined for kernel exponent n-2")
        return hardy_constant(n, k) * abs(potential.coefficient)
    return threshold_report(potential, n, k).tau


@dataclass
class SolveReport:
    trajectory: Trajectory
    iterations: int
    diffs: np.ndarray
    measured_rate: float
    tau: float
    converged: bool
    tol: float
    initial_guess: str = "heat"
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        traj = self.trajectory
        return {
            "n": traj.n,
            "k": traj.k,
            "grid": traj.grid.to_json(),
            "time": traj.times.to_json(),
            "iterations": self.iterations,
            "diffs": [float(d) for d in self.diffs],
            "measured_rate": self.measured_rate,
            "tau": self.tau,
            "converged": self.converged,
            "tol": self.tol,
            "initial_guess": self.initial_guess,
            "solution_sup_norm": traj.sup_norm(),
        }


def measured_rate(diffs) -> float:
    """Geometric-fit ratio exp(slope of log diffs) over the last half of the sweeps.

    Early sweeps are transient (the heat-flow start makes the first ratios
    well below the asymptotic one), so only the tail enters the fit.
    """
    d = np.asarray(diffs, dtype=float)
    d = d[d.size // 2 :] if d.size >= 4 else d
    d = d[d > 0]
    if d.size < 2:
        return 0.0
    slope = np.polyfit(np.arange(d.size), np.log(d), 1)[0]
    return float(math.exp(slope))


def picard_solve(
    potential: Union[PotentialSpec, RadialKernel],
    u0: SpectralField,
    tg: Optional[TimeGrid] = None,
    tol: float = 1e-8,
    max_iter: int = 100,
    override: bool = False,
    initial_guess: str = "heat",
) -> SolveReport:
    """Iterate u_{b+1} = G(.) u0 + L_V(u_b) until the X_k difference is at most ``tol``.

    ``initial_guess`` is ``"heat"`` (u_1 = G(.) u0) or ``"zero"``. Raises
    :class:`RefusalError` when tau >= 1 unless ``override`` is set, and
    :class:`NonConvergenceError` after ``max_iter`` sweeps.
    """
    tg = TimeGrid.default() if tg is None else tg
    if tol <= 0 or max_iter < 1:
        raise DomainError("need tol > 0 and max_iter >= 1")
    kernel = _kernel_of(potential, u0.n)
    tau = contraction_factor(kernel, u0.n, u0.k)
    if tau >= 1 and not override:
        raise RefusalError(
            f"contraction factor tau = {tau:.6g} >= 1: the smallness condition "
            f"||V||_{{PM^{{n-2}}}} < 1/C_{{n-2,k}} = {1 / hardy_constant(u0.n, u0.k):.6g} fails",
            tau,
        )
    base = heat_flow(u0, tg)
    if initial_guess == "heat":
        u = base.profiles
    elif initial_guess == "zero":
        u = np.zeros_like(base.profiles)
    else:
        raise DomainError(f"initial_guess must be 'heat' or 'zero', got {initial_guess!r}")
    diffs = []
    converged = False
    for _ in range(max_iter):
        new = base.profiles + duhamel_apply(kernel, base.with_profiles(u)).profiles
        diffs.append(float(np.max(np.abs(new - u))))
        u = new
        if diffs[-1] <= tol:
            converged = True
            break
    diffs = np.array(diffs)
    if not converged:
        raise NonConvergenceError(
            f"Picard iteration did not reach tol={tol:g} in {max_iter} sweeps "
            f"(last diff {diffs[-1]:.3g})",
            diffs,
        )
    return SolveReport(
        trajectory=base.with_profiles(u),
        iterations=len(diffs),
        diffs=diffs,
        measured_rate=measured_rate(diffs),
        tau=tau,
        converged=True,
        tol=tol,
        initial_guess=initial_guess,
    )


def fixed_point_residual(potential, u0: SpectralField, traj: Trajectory) -> float:
    """||u - (G u0 + L_V u)||_{X_k} on the grid."""
    kernel = _kernel_of(potential, u0.n)
    image = heat_flow(u0, traj.times).profiles + duhamel_apply(kernel, traj).profiles
    return float(np.max(np.abs(traj.profiles - image)))


def _norm_of(potential, n: int) -> float:
    return abs(_kernel_of(potential, n).coefficient)


@dataclass(frozen=True)
class DependenceCheck:
    difference: float
    bound: float
    holds: bool
    tau_v: float
    tau_w: float

    def to_json(self) -> dict:
        return {
            "difference": self.difference,
            "bound": self.bound,
            "holds": self.holds,
            "tau_v": self.tau_v,
            "tau_w": self.tau_w,
        }


def dependence_bound(u0, v0, potential_v, potential_w) -> float:
    """Lipschitz bound on ||u - v||_{X_k} in terms of data and potential differences."""
    n, k = u0.n, u0.k
    c = hardy_constant(n, k)
    nv, nw = _norm_of(potential_v, n), _norm_of(potential_w, n)
    kv = _kernel_of(potential_v, n).coefficient
    kw = _kernel_of(potential_w, n).coefficient
    data = float(np.max(np.abs(u0.profile - v0.profile)))
    v0_norm = float(np.max(np.abs(v0.profile)))
    return (data + c * v0_norm / (1 - c * nw) * abs(kv - kw)) / (1 - c * nv)


def continuous_dependence_check(
    u0: SpectralField,
    v0: SpectralField,
    potential_v,
    potential_w,
    tg: Optional[TimeGrid] = None,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> DependenceCheck:
    """Solve both problems and compare ||u - v||_{X_k} with the Lipschitz bound (5% slack)."""
    if not u0.compatible(v0):
        raise ShapeError("initial data live on different (n, k, grid)")
    ru = picard_solve(potential_v, u0, tg, tol=tol, max_iter=max_iter)
    rv = picard_solve(potential_w, v0, tg, tol=tol, max_iter=max_iter)
    diff = float(np.max(np.abs(ru.trajectory.profiles - rv.trajectory.profiles)))
    bound = dependence_bound(u0, v0, potential_v, potential_w)
    return DependenceCheck(
        difference=diff,
        bound=bound,
        holds=diff <= bound * 1.05,
        tau_v=ru.tau,
        tau_w=rv.tau,
    )
