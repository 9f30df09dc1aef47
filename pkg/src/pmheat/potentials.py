"""Inverse-square type potentials: evaluation, Fourier symbols, PM^{n-2} norms.

Four families are supported:

* ``hardy``: lambda / |x|^2
* ``isotropic_multipolar``: sum_j lambda_j / |x - x^j|^2
* ``dipole``: d.x / |x|^3
* ``anisotropic_multipolar``: sum_j (x - x^j).d^j / |x - x^j|^3

Vector sizes |d| entering norms and thresholds use the sum (l1) norm. With the
Euclidean norm the dipole thresholds would change, so do not swap it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError, SingularityError
from .special_functions import (
    beta_fn,
    hardy_constant,
    hardy_potential_norm_factor,
    homogeneous_ft_constant,
    optimal_k,
)

HARDY = "hardy"
ISOTROPIC = "isotropic_multipolar"
DIPOLE = "dipole"
ANISOTROPIC = "anisotropic_multipolar"
KINDS = (HARDY, ISOTROPIC, DIPOLE, ANISOTROPIC)


def _vector(v, name):
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise DomainError(f"{name} must be a non-empty 1-D vector")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr


@dataclass(frozen=True)
class Pole:
    center: np.ndarray
    lam: float


@dataclass(frozen=True)
class DipolePole:
    center: np.ndarray
    d: np.ndarray


@dataclass(frozen=True)
class PotentialSpec:
    """Immutable description of one potential. Use the classmethod constructors."""

    kind: str
    lam: float = 0.0
    poles: tuple = field(default_factory=tuple)
    d: Optional[np.ndarray] = None
    dpoles: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown potential kind {self.kind!r}")
        if self.kind == ISOTROPIC and not self.poles:
            raise DomainError("isotropic multipolar potential needs at least one pole")
        if self.kind == ANISOTROPIC and not self.dpoles:
            raise DomainError("anisotropic multipolar potential needs at least one pole")
        if self.kind == DIPOLE and (self.d is None or not np.any(self.d != 0)):
            raise DomainError("dipole vector d must be nonzero")
        dims = {len(p.center) for p in self.poles}
        dims |= {len(p.center) for p in self.dpoles} | {len(p.d) for p in self.dpoles}
        if len(dims) > 1:
            raise DomainError(f"inconsistent vector lengths in pole list: {sorted(dims)}")

    @classmethod
    def hardy(cls, lam: float) -> "PotentialSpec":
        return cls(kind=HARDY, lam=float(lam))

    @classmethod
    def isotropic(cls, poles) -> "PotentialSpec":
        """``poles`` is an iterable of (center, lambda_j) pairs."""
        ps = tuple(Pole(_vector(c, "center"), float(lam)) for c, lam in poles)
        return cls(kind=ISOTROPIC, poles=ps)

    @classmethod
    def dipole(cls, d) -> "PotentialSpec":
        return cls(kind=DIPOLE, d=_vector(d, "d"))

    @classmethod
    def anisotropic(cls, dpoles) -> "PotentialSpec":
        """``dpoles`` is an iterable of (center, d_j) pairs."""
        ps = tuple(DipolePole(_vector(c, "center"), _vector(dj, "d")) for c, dj in dpoles)
        return cls(kind=ANISOTROPIC, dpoles=ps)

    @property
    def dimension(self) -> Optional[int]:
        """Dimension fixed by the vectors in the spec (None for hardy)."""
        if self.kind == ISOTROPIC:
            return len(self.poles[0].center)
        if self.kind == DIPOLE:
            return len(self.d)
        if self.kind == ANISOTROPIC:
            return len(self.dpoles[0].center)
        return None

    @property
    def is_radial(self) -> bool:
        if self.kind == HARDY:
            return True
        if self.kind == ISOTROPIC:
            return all(not np.any(p.center) for p in self.poles)
        return False

    @property
    def parameter_size(self) -> float:
        """|lambda|, sum |lambda_j|, |d|_1 or sum |d^j|_1 depending on kind."""
        if self.kind == HARDY:
            return abs(self.lam)
        if self.kind == ISOTROPIC:
            return float(sum(abs(p.lam) for p in self.poles))
        if self.kind == DIPOLE:
            return float(np.abs(self.d).sum())
        return float(sum(np.abs(p.d).sum() for p in self.dpoles))

    def to_json(self) -> dict:
        if self.kind == HARDY:
            return {"type": HARDY, "lambda": self.lam}
        if self.kind == ISOTROPIC:
            return {
                "type": ISOTROPIC,
                "poles": [{"center": p.center.tolist(), "lambda": p.lam} for p in self.poles],
            }
        if self.kind == DIPOLE:
            return {"type": DIPOLE, "d": self.d.tolist()}
        return {
            "type": ANISOTROPIC,
            "dpoles": [{"center": p.center.tolist(), "d": p.d.tolist()} for p in self.dpoles],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PotentialSpec":
        try:
            kind = obj["type"]
            if kind == HARDY:
                return cls.hardy(obj["lambda"])
            if kind == ISOTROPIC:
                return cls.isotropic((p["center"], p["lambda"]) for p in obj["poles"])
            if kind == DIPOLE:
                return cls.dipole(obj["d"])
            if kind == ANISOTROPIC:
                return cls.anisotropic((p["center"], p["d"]) for p in obj["dpoles"])
        except (KeyError, TypeError) as exc:
            raise DomainError(f"malformed potential JSON: {exc}") from exc
        raise DomainError(f"unknown potential type {kind!r}")


def _check_point(spec, x, name):
    x = _vector(x, name)
    dim = spec.dimension
    if dim is not None and len(x) != dim:
        raise DomainError(f"{name} has length {len(x)}, potential lives in R^{dim}")
    if len(x) < 3:
        raise DomainError("dimension must be >= 3")
    return x


def physical_value(spec: PotentialSpec, x) -> float:
    """Pointwise V(x)."""
    x = _check_point(spec, x, "x")
    if spec.kind == HARDY:
        r2 = float(x @ x)
        if r2 == 0.0:
            raise SingularityError("Hardy potential evaluated at the origin")
        return spec.lam / r2
    if spec.kind == DIPOLE:
        r = float(np.linalg.norm(x))
        if r == 0.0:
            raise SingularityError("dipole potential evaluated at the origin")
        return float(spec.d @ x) / r**3
    total = 0.0
    if spec.kind == ISOTROPIC:
        for p in spec.poles:
            y = x - p.center
            r2 = float(y @ y)
            if r2 == 0.0:
                raise SingularityError(f"potential evaluated at pole {p.center.tolist()}")
            total += p.lam / r2
        return total
    for p in spec.dpoles:
        y = x - p.center
        r = float(np.linalg.norm(y))
        if r == 0.0:
            raise SingularityError(f"potential evaluated at pole {p.center.tolist()}")
        total += float(p.d @ y) / r**3
    return total


def fourier_symbol(spec: PotentialSpec, xi) -> complex:
    """Closed-form V^(xi)."""
    xi = _check_point(spec, xi, "xi")
    n = len(xi)
    rho = float(np.linalg.norm(xi))
    if rho == 0.0:
        raise SingularityError("Fourier symbol is singular at xi = 0")
    if spec.kind in (HARDY, ISOTROPIC):
        radial = hardy_potential_norm_factor(n) * rho ** (2 - n)
        if spec.kind == HARDY:
            return complex(spec.lam * radial)
        phases = sum(p.lam * np.exp(-2j * math.pi * float(p.center @ xi)) for p in spec.poles)
        return complex(phases * radial)
    gamma1 = homogeneous_ft_constant(1, n - 2, n)
    if spec.kind == DIPOLE:
        return complex(gamma1 * float(spec.d @ xi) / rho ** (n - 1))
    acc = sum(
        np.exp(-2j * math.pi * float(p.center @ xi)) * float(p.d @ xi) for p in spec.dpoles
    )
    return complex(gamma1 * acc / rho ** (n - 1))


@dataclass(frozen=True)
class NormBound:
    value: float
    exact: bool


def norm_per_unit(kind: str, n: int) -> float:
    """PM^{n-2} norm bound per unit of ``parameter_size`` for a potential family."""
    if kind in (HARDY, ISOTROPIC):
        return hardy_potential_norm_factor(n)
    return abs(homogeneous_ft_constant(1, n - 2, n))


def pm_norm_bound(spec: PotentialSpec, n: int) -> NormBound:
    """Exact PM^{n-2} norm (hardy, single isotropic pole) or triangle-inequality bound."""
    if n < 3:
        raise DomainError("dimension must be >= 3")
    if spec.dimension is not None and spec.dimension != n:
        raise DomainError(f"potential lives in R^{spec.dimension}, not R^{n}")
    value = norm_per_unit(spec.kind, n) * spec.parameter_size
    exact = spec.kind == HARDY or (spec.kind == ISOTROPIC and len(spec.poles) == 1)
    return NormBound(value=value, exact=exact)


def parameter_threshold(kind: str, n: int, k: float) -> float:
    """Largest admissible ``parameter_size`` (exclusive) for the given family."""
    width = (k - 2.0) * (n - k)
    if kind in (HARDY, ISOTROPIC):
        return width
    return math.pi / (n - 2) * width / beta_fn(0.5, 0.5 * (n - 1))


@dataclass(frozen=True)
class ThresholdReport:
    n: int
    k: float
    kind: str
    norm_bound: NormBound
    constant: float
    tau: float
    bound_rhs: float
    passes: bool
    margin: float
    k_opt: float
    tau_at_k_opt: float
    parameter_size: float
    parameter_bound: float

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "kind": self.kind,
            "norm_bound": {"value": self.norm_bound.value, "exact": self.norm_bound.exact},
            "constant": self.constant,
            "tau": self.tau,
            "bound_rhs": self.bound_rhs,
            "passes": self.passes,
            "margin": self.margin,
            "k_opt": self.k_opt,
            "tau_at_k_opt": self.tau_at_k_opt,
            "parameter_size": self.parameter_size,
            "parameter_bound": self.parameter_bound,
        }


def threshold_report(spec: PotentialSpec, n: int, k: float) -> ThresholdReport:
    """Check the smallness condition ||V|| < 1/C_{n-2,k} for existence in X_k.

    ``passes`` is decided on the potential's own parameter (|lambda|,
    sum |lambda_j|, |d|_1, ...) against its family threshold, so that for
    Hardy potentials it coincides bit-for-bit with |lambda| < (k-2)(n-k).
    Away from round-off ties this is the same as ``tau < 1``.
    """
    c = hardy_constant(n, k)
    norm = pm_norm_bound(spec, n)
    k_opt = optimal_k(n)
    size = spec.parameter_size
    bound = parameter_threshold(spec.kind, n, k)
    return ThresholdReport(
        n=n,
        k=k,
        kind=spec.kind,
        norm_bound=norm,
        constant=c,
        tau=c * norm.value,
        bound_rhs=1.0 / c,
        passes=size < bound,
        margin=1.0 / c - norm.value,
        k_opt=k_opt,
        tau_at_k_opt=hardy_constant(n, k_opt) * norm.value,
        parameter_size=size,
        parameter_bound=bound,
    )
