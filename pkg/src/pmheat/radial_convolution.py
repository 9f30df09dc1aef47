"""Fourier-side convolution of a radial power-law kernel with a radial field.

For a kernel ``coef * |eta|^(-b1)`` and a field with weighted profile
``h(rho) = rho^k u^(rho)``, spherical coordinates around xi give

    (V^ * u^)(rho) = coef |S^{n-2}| rho^(n-k-b1) int h(rho e^y) w(y) dy

with the scale-free weight

    w(y) = e^{(n-k) y} Phi(e^y)            for y < 0
    w(y) = e^{(n-k-b1) y} Phi(e^{-y})      for y > 0
    Phi(q) = int_0^pi (1 + q^2 - 2 q cos t)^(-b1/2) sin^{n-2} t dt
           = B(1/2, (n-1)/2) 2F1(b1/2, (b1-n+2)/2; n/2; q^2).

On a uniform log grid the y-integral is a discrete correlation. Weights are
obtained by product integration of w against piecewise-linear hats, so the
singular point y = 0 is always an interval endpoint. For the Newtonian
exponent b1 = n-2 the hypergeometric factor is identically 1 (shell theorem).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .errors import AccuracyWarning, DomainError, ShapeError
from .spectral_field import RadialGrid, SpectralField, edge_log_slopes
from .special_functions import beta_fn, riesz_composition_constant, sphere_area

# relative size of the kernel tail folded into the outermost weight
_TAIL_TOL = 1e-8
_MAX_REACH = 40000
_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)


@dataclass(frozen=True)
class RadialKernel:
    """The radial Fourier-side kernel ``coefficient * |eta|^(-exponent)`` on R^n."""

    n: int
    exponent: float
    coefficient: float = 1.0

    def __post_init__(self):
        if self.n < 3:
            raise DomainError("dimension must be >= 3")
        if not 0 < self.exponent < self.n:
            raise DomainError(f"kernel exponent must lie in (0, n), got {self.exponent}")


def angular_factor(q, b1: float, n: int):
    """Phi(q) for 0 <= q <= 1 (vectorized)."""
    q = np.asarray(q, dtype=float)
    if b1 == n - 2:
        return np.full(q.shape, beta_fn(0.5, 0.5 * (n - 1)))
    if n == 3:
        # exact reduction: int sin t (1+q^2-2q cos t)^(-b1/2) dt
        with np.errstate(divide="ignore", invalid="ignore"):
            if b1 == 2.0:
                val = np.log((1 + q) / (1 - q)) / q
            else:
                val = ((1 + q) ** (2 - b1) - (1 - q) ** (2 - b1)) / ((2 - b1) * q)
        return np.where(q == 0, 2.0, val)
    return beta_fn(0.5, 0.5 * (n - 1)) * special.hyp2f1(
        0.5 * b1, 0.5 * (b1 - n + 2), 0.5 * n, q * q
    )


class ConvolutionOperator:
    """Precomputed correlation weights for one (n, b1, k, grid) combination.

    ``apply`` maps weighted profiles of index k (last axis = grid) to
    weighted profiles of index b1 + k - n of ``|eta|^(-b1) * u^``, i.e. with
    unit kernel coefficient.
    """

    def __init__(self, n: int, b1: float, k: float, grid: RadialGrid):
        if not 0 < b1 < n:
            raise DomainError(f"kernel exponent must lie in (0, n), got {b1}")
        if not 0 < k < n or not n < b1 + k < 2 * n:
            raise DomainError(
                f"need 0 < k < n and n < b1 + k < 2n, got b1={b1}, k={k}, n={n}"
            )
        self.n, self.b1, self.k, self.grid = n, float(b1), float(k), grid
        self.k_out = b1 + k - n
        self.prefactor = sphere_area(n - 2)
        delta = grid.log_step
        self.decay_left = n - k
        self.decay_right = b1 + k - n
        self.reach_left = self._reach(self.decay_left, delta)
        self.reach_right = self._reach(self.decay_right, delta)
        with warnings.catch_warnings():
            # roundoff notices from QUADPACK at the y = 0 endpoint are benign here
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            self.weights = self._weights(delta)
        self._matrix = None

    @staticmethod
    def _reach(decay, delta):
        return min(_MAX_REACH, int(math.ceil(math.log(1.0 / _TAIL_TOL) / (decay * delta))) + 2)

    def w(self, y):
        y = np.asarray(y, dtype=float)
        n, b1, k = self.n, self.b1, self.k
        neg = y < 0
        q = np.exp(-np.abs(y))
        expo = np.where(neg, (n - k) * y, (n - k - b1) * y)
        return np.exp(expo) * angular_factor(q, b1, n)

    def _weights(self, delta):
        jl, jr = self.reach_left, self.reach_right
        starts = np.arange(-jl, jr) * delta  # interval [s, s + delta]
        left_w = np.zeros(starts.size)  # weight for the hat at the interval's left node
        right_w = np.zeros(starts.size)
        smooth = self.b1 == self.n - 2
        near = np.zeros(starts.size, dtype=bool) if smooth else np.abs(starts + 0.5 * delta) < 2 * delta
        # Gauss-Legendre on intervals where w is smooth
        u = 0.5 * (_GL_X + 1.0)
        ys = starts[~near, None] + delta * u[None, :]
        wy = self.w(ys) * (0.5 * delta) * _GL_W[None, :]
        left_w[~near] = (wy * (1.0 - u)[None, :]).sum(axis=1)
        right_w[~near] = (wy * u[None, :]).sum(axis=1)
        # adaptive quadrature next to the singular point y = 0
        for idx in np.nonzero(near)[0]:
            s = starts[idx]
            f0 = lambda y: float(self.w(y)) * (1.0 - (y - s) / delta)
            f1 = lambda y: float(self.w(y)) * ((y - s) / delta)
            left_w[idx] = integrate.quad(f0, s, s + delta, limit=200, epsabs=0, epsrel=1e-12)[0]
            right_w[idx] = integrate.quad(f1, s, s + delta, limit=200, epsabs=0, epsrel=1e-12)[0]
        weights = np.zeros(jl + jr + 1)
        weights[:-1] += left_w
        weights[1:] += right_w
        # fold the kernel tails beyond the reach into the outermost hats
        wf = lambda y: float(self.w(y))
        weights[0] += integrate.quad(wf, -np.inf, -jl * delta, limit=200, epsabs=0, epsrel=1e-10)[0]
        weights[-1] += integrate.quad(wf, jr * delta, np.inf, limit=200, epsabs=0, epsrel=1e-10)[0]
        return weights

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    @property
    def matrix(self) -> np.ndarray:
        """Banded (N + reach_left + reach_right, N) correlation matrix."""
        if self._matrix is None:
            n_nodes = self.grid.count
            rows = n_nodes + self.reach_left + self.reach_right
            m = np.zeros((rows, n_nodes))
            span = self.weights.size
            for i in range(n_nodes):
                m[i : i + span, i] = self.weights
            self._matrix = m
        return self._matrix

    def extend(self, h):
        """Pad profiles with power-law extrapolations on both sides."""
        h = np.asarray(h, dtype=float)
        delta = self.grid.log_step
        s_lo, s_hi = edge_log_slopes(h, delta, self.k, self.n)
        m_left = np.arange(self.reach_left, 0, -1) * delta
        m_right = np.arange(1, self.reach_right + 1) * delta
        left = h[..., :1] * np.exp(-np.asarray(s_lo)[..., None] * m_left)
        right = h[..., -1:] * np.exp(np.asarray(s_hi)[..., None] * m_right)
        return np.concatenate([left, h, right], axis=-1)

    def apply(self, h) -> np.ndarray:
        """Weighted output profile for unit kernel coefficient."""
        ext = self.extend(h)
        return self.prefactor * (ext @ self.matrix)

    def far_extrapolation_share(self, h) -> np.ndarray:
        """Fraction of each output's absolute weight drawn from beyond one decade off-grid."""
        ext = np.abs(self.extend(h))
        decade = int(math.ceil(math.log(10.0) / self.grid.log_step))
        mask = np.ones(ext.shape[-1], dtype=bool)
        mask[self.reach_left - decade : self.reach_left + self.grid.count + decade] = False
        total = ext @ self.matrix
        far = (ext * mask) @ self.matrix
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(total > 0, far / total, 0.0)


@lru_cache(maxsize=32)
def convolution_operator(n: int, b1: float, k: float, grid: RadialGrid) -> ConvolutionOperator:
    return ConvolutionOperator(n, b1, k, grid)


def _edge_is_power_law(h, tol=1e-3):
    if h.size < 3:
        return True
    ends = ((h[0], h[1], h[2]), (h[-1], h[-2], h[-3]))
    for a, b, c in ends:
        if a == 0 and b == 0 and c == 0:
            continue
        if a * b <= 0 or b * c <= 0:
            return False
        if abs(math.log(abs(b / a)) - math.log(abs(c / b))) > tol:
            return False
    return True


def convolve_radial(kernel: RadialKernel, field: SpectralField) -> SpectralField:
    """(V^ * u^) for V^ = coef |eta|^(-b1); output has index b1 + k - n.

    Warns with :class:`AccuracyWarning` when more than 0.1% of some output
    value comes from extrapolation more than a decade outside the grid and
    the profile is not a clean power law at that edge.
    """
    if kernel.n != field.n:
        raise ShapeError(f"kernel lives in R^{kernel.n}, field in R^{field.n}")
    op = convolution_operator(field.n, float(kernel.exponent), float(field.k), field.grid)
    out = kernel.coefficient * op.apply(field.profile)
    if not _edge_is_power_law(field.profile):
        share = op.far_extrapolation_share(field.profile)
        if np.any(share > 1e-3):
            warnings.warn(
                "convolution relies on extrapolation more than a decade beyond the grid",
                AccuracyWarning,
                stacklevel=2,
            )
    scale = float(np.max(np.abs(out))) if out.size else 0.0
    homog = field.homogeneous and float(np.ptp(out)) <= 1e-12 * scale
    return SpectralField(field.n, op.k_out, field.grid, out, homogeneous=homog)


def power_law_convolution_oracle(theta1: float, theta2: float, n: int, rho: float) -> float:
    """K(theta1, theta2, n) * rho^(theta1 + theta2 - n): |x|^(theta1-n) * |x|^(theta2-n) at |y| = rho."""
    if rho <= 0:
        raise DomainError("rho must be positive")
    return riesz_composition_constant(theta1, theta2, n) * rho ** (theta1 + theta2 - n)
