"""Closed-form constants for power-law kernels and the Hardy threshold.

All Fourier transforms use the convention ``f^(xi) = int f(x) exp(-2 pi i x.xi) dx``.
Gamma values are evaluated in log space so that products and quotients of
several Gamma factors stay well conditioned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

__all__ = [
    "ConstantBundle",
    "log_gamma",
    "nu",
    "riesz_composition_constant",
    "homogeneous_ft_constant",
    "hardy_constant",
    "hardy_constant_via_riesz",
    "bilinear_constant",
    "hardy_potential_norm_factor",
    "lambda_star",
    "optimal_k",
    "beta_fn",
    "sphere_area",
    "constant_bundle",
]


def _check_dimension(n):
    if n < 3 or int(n) != n:
        raise DomainError(f"dimension must be an integer >= 3, got {n}")


def _check_index(n, k):
    if not 2.0 < k < n:
        raise DomainError(f"PM index k must satisfy 2 < k < n={n}, got k={k}")


def log_gamma(x: float) -> float:
    """ln Gamma(x) for x > 0."""
    if not x > 0:
        raise DomainError(f"log_gamma requires x > 0, got {x}")
    return math.lgamma(x)


def _log_nu(theta: float) -> float:
    return -0.5 * theta * math.log(math.pi) + log_gamma(0.5 * theta)


def nu(theta: float) -> float:
    """pi**(-theta/2) * Gamma(theta/2)."""
    if not theta > 0:
        raise DomainError(f"nu requires theta > 0, got {theta}")
    return math.exp(_log_nu(theta))


def riesz_composition_constant(theta1: float, theta2: float, n: int) -> float:
    """Constant K with ``|x|^(theta1-n) * |x|^(theta2-n) = K |x|^(theta1+theta2-n)``.

    The star is convolution on R^n. Requires ``0 < theta1, theta2`` and
    ``theta1 + theta2 < n``.
    """
    _check_dimension(n)
    if not (0 < theta1 < n and 0 < theta2 < n and 0 < theta1 + theta2 < n):
        raise DomainError(
            f"need 0 < theta1, theta2 and theta1 + theta2 < n; "
            f"got ({theta1}, {theta2}, {n})"
        )
    log_k = (
        _log_nu(theta1)
        + _log_nu(theta2)
        + _log_nu(n - theta1 - theta2)
        - _log_nu(theta1 + theta2)
        - _log_nu(n - theta1)
        - _log_nu(n - theta2)
    )
    return math.exp(log_k)


def homogeneous_ft_constant(l: int, alpha: float, n: int) -> complex:
    """Constant gamma_{l,alpha} in ``FT[P_l(x)/|x|^(n+l-alpha)] = gamma P_l(xi)/|xi|^(l+alpha)``.

    Only the radial (l=0) and dipole (l=1) channels are supported.
    """
    _check_dimension(n)
    if l not in (0, 1):
        raise DomainError(f"only l in {{0, 1}} is supported, got {l}")
    if not 0 < alpha < n:
        raise DomainError(f"alpha must lie in (0, {n}), got {alpha}")
    modulus = math.exp(
        (0.5 * n - alpha) * math.log(math.pi)
        + log_gamma(0.5 * (l + alpha))
        - log_gamma(0.5 * (n + l - alpha))
    )
    # i**(-l): 1 for l=0, -i for l=1
    return complex(modulus, 0.0) if l == 0 else complex(0.0, -modulus)


def hardy_constant(n: int, k: float) -> float:
    """C_{n-2,k}, the bilinear constant for a |xi|^(2-n) potential acting on PM^k.

    Uses the simplified closed form; :func:`hardy_constant_via_riesz` gives
    the same number through K(2, n-k, n) / (4 pi^2).
    """
    _check_dimension(n)
    _check_index(n, k)
    log_c = (
        0.5 * n * math.log(math.pi)
        + math.log(n - 2)
        - math.log(2.0 * math.pi**2)
        - log_gamma(0.5 * n)
        - math.log((k - 2) * (n - k))
    )
    return math.exp(log_c)


def hardy_constant_via_riesz(n: int, k: float) -> float:
    _check_dimension(n)
    _check_index(n, k)
    return riesz_composition_constant(2.0, n - k, n) / (4.0 * math.pi**2)


def bilinear_constant(b1: float, b2: float, n: int) -> float:
    """C_{b1,b2} = K(n-b1, n-b2, n) / (4 pi^2), valid for n < b1 + b2 < 2n."""
    return riesz_composition_constant(n - b1, n - b2, n) / (4.0 * math.pi**2)


def hardy_potential_norm_factor(n: int) -> float:
    """PM^{n-2} norm of 1/|x|^2, i.e. pi^(2-n/2) Gamma((n-2)/2)."""
    _check_dimension(n)
    return math.exp((2.0 - 0.5 * n) * math.log(math.pi) + log_gamma(0.5 * (n - 2)))


def lambda_star(n: int) -> float:
    _check_dimension(n)
    return (n - 2) ** 2 / 4.0


def optimal_k(n: int) -> float:
    _check_dimension(n)
    return (n + 2) / 2.0


def beta_fn(a: float, b: float) -> float:
    if not (a > 0 and b > 0):
        raise DomainError(f"beta_fn requires positive arguments, got ({a}, {b})")
    return math.exp(log_gamma(a) + log_gamma(b) - log_gamma(a + b))


def sphere_area(dim: int) -> float:
    """Surface measure of the unit sphere S^dim embedded in R^(dim+1)."""
    return 2.0 * math.pi ** (0.5 * (dim + 1)) / math.gamma(0.5 * (dim + 1))


@dataclass(frozen=True)
class ConstantBundle:
    n: int
    k: float
    K_value: float
    C_value: float
    lambda_star: float
    k_opt: float


def constant_bundle(n: int, k: float) -> ConstantBundle:
    """All Hardy-problem constants for dimension ``n`` and PM index ``k``."""
    return ConstantBundle(
        n=n,
        k=k,
        K_value=riesz_composition_constant(2.0, n - k, n),
        C_value=hardy_constant(n, k),
        lambda_star=lambda_star(n),
        k_opt=optimal_k(n),
    )
