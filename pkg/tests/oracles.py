"""Independent reference computations for the test-suite.

Nothing here calls into pmheat: every value is produced by brute-force
quadrature or by a closed form derived separately from the library code.
"""

import math
import warnings

import numpy as np
from scipy import integrate, special


def _quiet_quad(f, a, b, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return integrate.quad(f, a, b, limit=400, epsabs=0, **kw)[0]


def sphere_measure(dim):
    """Area of the unit sphere S^dim in R^(dim+1)."""
    return 2 * math.pi ** ((dim + 1) / 2) / math.gamma((dim + 1) / 2)


def riesz_convolution(theta1, theta2, n):
    """(|x|^(theta1-n) * |x|^(theta2-n))(e) for a unit vector e, by nested quadrature."""
    p = (theta2 - n) / 2

    def inner(r):
        f = lambda phi: (1 + r * r - 2 * r * math.cos(phi)) ** p * math.sin(phi) ** (n - 2)
        return _quiet_quad(f, 0, math.pi, epsrel=1e-10)

    g = lambda r: r ** (theta1 - 1) * inner(r)
    total = sum(_quiet_quad(g, a, b, epsrel=1e-9) for a, b in ((0, 0.5), (0.5, 1), (1, 2), (2, 10)))
    total += _quiet_quad(lambda s: g(1 / s) / s**2, 0, 0.1, epsrel=1e-9)
    return sphere_measure(n - 2) * total


def radial_convolution(b1, uhat, n, rho, s_max=60.0, breaks=()):
    """int_{R^n} |xi - eta|^(-b1) uhat(|eta|) d eta at |xi| = rho by nested quadrature.

    ``uhat`` must be integrable against s^(n-1) ds with negligible mass past s_max.
    """
    p = -0.5 * b1

    def inner(s):
        f = lambda phi: (rho * rho + s * s - 2 * rho * s * math.cos(phi)) ** p * math.sin(phi) ** (n - 2)
        return _quiet_quad(f, 0, math.pi, epsrel=1e-10)

    g = lambda s: s ** (n - 1) * uhat(s) * inner(s)
    cuts = sorted({0.0, rho, s_max, *[b for b in breaks if 0 < b < s_max]})
    total = sum(_quiet_quad(g, a, b, epsrel=1e-9) for a, b in zip(cuts[:-1], cuts[1:]))
    return sphere_measure(n - 2) * total


def radial_moment(power, n, weight=lambda r: math.exp(-math.pi * r * r)):
    """int_{R^n} |x|^power weight(|x|) dx."""
    return sphere_measure(n - 1) * _quiet_quad(lambda r: r ** (power + n - 1) * weight(r), 0, np.inf, epsrel=1e-12)


def dipole_ft_constant(alpha, n):
    """gamma with FT[x_1 |x|^-(n+1-alpha)] = gamma xi_1 |xi|^-(1+alpha), via Parseval.

    Pairs both sides with x_1 exp(-pi |x|^2), whose transform is -i xi_1 exp(-pi |xi|^2).
    The angular average of x_1^2 is r^2/n on both sides and cancels.
    """
    lhs = radial_moment(2 - (n + 1 - alpha), n)
    rhs = radial_moment(2 - (1 + alpha), n)
    # int f g = int f^ conj(g^) = gamma * i * rhs
    return complex(0, -lhs / rhs)


def radial_ft_constant(alpha, n):
    """gamma with FT[|x|^-(n-alpha)] = gamma |xi|^-alpha, via Parseval against exp(-pi |x|^2)."""
    return radial_moment(alpha - n, n) / radial_moment(-alpha, n)


def radial_inverse_transform(uhat, r, n, rho_max=40.0):
    """u(r) from the Bochner formula by adaptive quadrature on [0, rho_max]."""
    nu = 0.5 * n - 1
    f = lambda rho: uhat(rho) * special.jv(nu, 2 * math.pi * rho * r) * rho ** (0.5 * n)
    return 2 * math.pi * r ** (1 - 0.5 * n) * _quiet_quad(f, 0, rho_max, epsrel=1e-11)


def duhamel_linear_in_time(a, t, alpha, beta):
    """int_0^t exp(-a (t-s)) (alpha + beta s) ds."""
    x = a * t
    if x < 1e-3:
        # series avoids cancellation in t/a - (1 - e^-x)/a^2
        first = t * (1 - x / 2 + x * x / 6 - x**3 / 24)
        second = t * t * (0.5 - x / 6 + x * x / 24 - x**3 / 120)
        return alpha * first + beta * second
    one_minus = -math.expm1(-x)
    return alpha * one_minus / a + beta * (x - one_minus) / a**2


def duhamel_exponential_in_time(a, t, c):
    """int_0^t exp(-a (t-s)) exp(-c s) ds."""
    if abs(a - c) < 1e-14:
        return t * math.exp(-a * t)
    return (math.exp(-c * t) - math.exp(-a * t)) / (a - c)


def gaussian_heat_solution(r, t, n, scale=1.0):
    """Heat flow of exp(-pi |x|^2 / scale^2) under u_t = Laplace u."""
    s2 = scale**2 + 4 * math.pi * t
    return (scale**2 / s2) ** (0.5 * n) * np.exp(-math.pi * np.asarray(r) ** 2 / s2)
