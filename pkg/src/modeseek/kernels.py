"""Radially symmetric kernels described through their profiles.

A kernel ``K`` on R^d is written ``K(x) = profile(|x|^2 / 2)``.  Each entry of
the catalog carries the (unnormalized) profile, the subgradient profile
``-profile'(u+)`` that drives the mean-shift weights, the second derivative
of the profile where it exists, and boolean metadata describing which of the
standard mean-shift convergence assumptions the kernel satisfies:

``satisfies_asm2``
    convex, non-increasing profile with a finite right derivative at 0
``satisfies_asm3``
    the kernel has a Lipschitz-continuous gradient
``satisfies_asm4``
    the kernel is analytic or (globally) subanalytic

All profile callables are vectorized over numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.special import gamma

from .errors import DomainError

__all__ = [
    "KernelSpec",
    "KERNEL_NAMES",
    "KNOT_TOLERANCE",
    "get_kernel",
    "profile_value",
    "subgradient_profile_value",
    "kernel_value",
    "normalization_constant",
    "max_poly_degree",
]

ProfileFn = Callable[[np.ndarray], np.ndarray]

# Squared-half-radii closer than this to a knot have no second derivative.
KNOT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class KernelSpec:
    """Immutable description of one radially symmetric kernel."""

    name: str
    profile: ProfileFn
    subgradient_profile: ProfileFn
    second_profile_derivative: ProfileFn | None
    knots: tuple[float, ...]
    satisfies_asm2: bool
    satisfies_asm3: bool
    satisfies_asm4: bool
    max_poly_degree: int | None = None
    support_radius_sq_half: float | None = None
    is_c1: bool = False
    formula: str = ""
    # Table-style status strings: "yes", "conditional", "no".
    convergence: str = "no"
    rate: str = "no"
    worst_case_bound: str = "no"
    notes: str = field(default="", compare=False)

    def scaled(self, c: float) -> "KernelSpec":
        """Return the same kernel multiplied by a positive constant ``c``."""
        if not c > 0:
            raise DomainError("scale factor must be positive")
        second = self.second_profile_derivative
        return replace(
            self,
            name=f"{self.name}*{c:g}",
            profile=lambda u, f=self.profile: c * f(u),
            subgradient_profile=lambda u, f=self.subgradient_profile: c * f(u),
            second_profile_derivative=None if second is None else (lambda u, f=second: c * f(u)),
        )

    def has_knot_near(self, u, tol: float = KNOT_TOLERANCE) -> np.ndarray:
        """Boolean mask of ``u`` values within ``tol`` of a knot."""
        u = np.asarray(u, dtype=float)
        mask = np.zeros(u.shape, dtype=bool)
        for k in self.knots:
            mask |= np.abs(u - k) <= tol
        return mask


def _pos(u):
    return np.maximum(1.0 - u, 0.0)


# gaussian ------------------------------------------------------------------

def _gauss(u):
    return np.exp(-u)


# epanechnikov --------------------------------------------------------------

def _epan_sub(u):
    return np.where(u < 1.0, 1.0, 0.0)


def _epan_second(u):
    return np.zeros_like(np.asarray(u, dtype=float))


# biweight ------------------------------------------------------------------

def _biweight(u):
    return _pos(u) ** 2


def _biweight_sub(u):
    return 2.0 * _pos(u)


def _biweight_second(u):
    return np.where(u < 1.0, 2.0, 0.0)


# triweight -----------------------------------------------------------------

def _triweight(u):
    return _pos(u) ** 3


def _triweight_sub(u):
    return 3.0 * _pos(u) ** 2


def _triweight_second(u):
    return 6.0 * _pos(u)


# (1-u)^{3/2} ---------------------------------------------------------------

def _threehalves(u):
    return _pos(u) ** 1.5


def _threehalves_sub(u):
    return 1.5 * np.sqrt(_pos(u))


def _threehalves_second(u):
    p = _pos(u)
    with np.errstate(divide="ignore"):
        return np.where(p > 0.0, 0.75 / np.sqrt(np.where(p > 0.0, p, 1.0)), 0.0)


# tricube -------------------------------------------------------------------
# Not convex in u; the "subgradient" here is simply -profile'.

def _tricube(u):
    s = np.sqrt(u)
    return np.maximum(1.0 - s ** 3, 0.0) ** 3


def _tricube_sub(u):
    s = np.sqrt(u)
    return 4.5 * s * np.maximum(1.0 - s ** 3, 0.0) ** 2


def _tricube_second(u):
    u = np.asarray(u, dtype=float)
    s = np.sqrt(u)
    inside = (s > 0.0) & (s < 1.0)
    s_safe = np.where(inside, s, 0.5)
    val = -(2.25 / s_safe) * (1.0 - s_safe ** 3) * (1.0 - 7.0 * s_safe ** 3)
    out = np.where(inside, val, 0.0)
    return np.where(s == 0.0, -np.inf, out)


# cosine --------------------------------------------------------------------

def _cosine(u):
    u = np.asarray(u, dtype=float)
    return np.where(u < 1.0, np.cos(0.5 * np.pi * np.sqrt(np.minimum(u, 1.0))), 0.0)


def _cosine_sub(u):
    u = np.asarray(u, dtype=float)
    # (pi / 4s) sin(pi s / 2) == (pi^2 / 8) sinc(s / 2)
    return np.where(u < 1.0, (np.pi ** 2 / 8.0) * np.sinc(0.5 * np.sqrt(np.minimum(u, 1.0))), 0.0)


_COS_SERIES = (
    np.pi ** 4 / 192.0,
    -np.pi ** 6 / 7680.0,
    np.pi ** 8 / 860160.0,
    -np.pi ** 10 / 185794560.0,
    np.pi ** 12 / 65399685120.0,
    -np.pi ** 14 / 34007836262400.0,
)


def _cosine_second(u):
    u = np.asarray(u, dtype=float)
    small = u < 1e-2
    s = np.sqrt(np.where(small | (u >= 1.0), 0.25, u))
    z = 0.5 * np.pi * s
    direct = (np.pi / (8.0 * s ** 3)) * (np.sin(z) - z * np.cos(z))
    series = np.polynomial.polynomial.polyval(u, _COS_SERIES)
    out = np.where(small, series, direct)
    return np.where(u < 1.0, out, 0.0)


# logistic ------------------------------------------------------------------

def _sech2_tanh(a):
    e = np.exp(-2.0 * a)
    sech2 = 4.0 * e / (1.0 + e) ** 2
    tanh = (1.0 - e) / (1.0 + e)
    return sech2, tanh


def _logistic(u):
    a = 0.5 * np.sqrt(u)
    sech2, _ = _sech2_tanh(a)
    return 0.25 * sech2


def _logistic_sub(u):
    a = 0.5 * np.sqrt(np.asarray(u, dtype=float))
    sech2, tanh = _sech2_tanh(a)
    small = a < 1e-4
    a_safe = np.where(small, 1.0, a)
    ratio = np.where(small, 1.0 - a * a / 3.0, tanh / a_safe)
    return sech2 * ratio / 16.0


_LOGISTIC_SERIES = (
    1.0 / 48.0,
    -17.0 / 1920.0,
    31.0 / 13440.0,
    -691.0 / 1451520.0,
    5461.0 / 63866880.0,
    -929569.0 / 66421555200.0,
)


def _logistic_second(u):
    u = np.asarray(u, dtype=float)
    small = u < 1e-2
    a = 0.5 * np.sqrt(np.where(small, 1.0, u))
    sech2, tanh = _sech2_tanh(a)
    direct = sech2 * (tanh - a * sech2 + 2.0 * a * tanh ** 2) / (128.0 * a ** 3)
    series = np.polynomial.polynomial.polyval(u, _LOGISTIC_SERIES)
    return np.where(small, series, direct)


# cauchy --------------------------------------------------------------------

def _cauchy(u):
    return 1.0 / (1.0 + u)


def _cauchy_sub(u):
    return 1.0 / (1.0 + u) ** 2


def _cauchy_second(u):
    return 2.0 / (1.0 + u) ** 3


_CATALOG: dict[str, KernelSpec] = {
    k.name: k
    for k in (
        KernelSpec(
            "biweight", _biweight, _biweight_sub, _biweight_second, (1.0,),
            True, True, True, max_poly_degree=4, support_radius_sq_half=1.0, is_c1=True,
            formula="{(1-u)_+}^2", convergence="yes", rate="yes", worst_case_bound="yes",
        ),
        KernelSpec(
            "threehalves", _threehalves, _threehalves_sub, _threehalves_second, (1.0,),
            True, False, True, support_radius_sq_half=1.0, is_c1=True,
            formula="{(1-u)_+}^(3/2)", convergence="conditional", rate="conditional",
        ),
        KernelSpec(
            "triweight", _triweight, _triweight_sub, _triweight_second, (1.0,),
            True, True, True, max_poly_degree=6, support_radius_sq_half=1.0, is_c1=True,
            formula="{(1-u)_+}^3", convergence="yes", rate="yes", worst_case_bound="yes",
        ),
        KernelSpec(
            "tricube", _tricube, _tricube_sub, _tricube_second, (0.0, 1.0),
            False, True, True, support_radius_sq_half=1.0, is_c1=True,
            formula="{(1-u^(3/2))_+}^3",
            notes="neither the iterates nor the density values are guaranteed to converge",
        ),
        KernelSpec(
            "cosine", _cosine, _cosine_sub, _cosine_second, (1.0,),
            True, False, True, support_radius_sq_half=1.0,
            formula="cos(pi u^(1/2) / 2) 1(u<=1)", convergence="conditional", rate="conditional",
        ),
        KernelSpec(
            "epanechnikov", _pos, _epan_sub, _epan_second, (1.0,),
            True, False, True, max_poly_degree=2, support_radius_sq_half=1.0,
            formula="(1-u)_+", convergence="yes", rate="yes", worst_case_bound="yes",
            notes="finite-time convergence",
        ),
        KernelSpec(
            "gaussian", _gauss, _gauss, _gauss, (),
            True, True, True, is_c1=True,
            formula="exp(-u)", convergence="yes", rate="yes",
        ),
        KernelSpec(
            "logistic", _logistic, _logistic_sub, _logistic_second, (),
            True, True, True, is_c1=True,
            formula="1 / (exp(u^(1/2)) + 2 + exp(-u^(1/2)))", convergence="yes", rate="yes",
        ),
        KernelSpec(
            "cauchy", _cauchy, _cauchy_sub, _cauchy_second, (),
            True, True, True, is_c1=True,
            formula="1 / (1 + u)", convergence="yes", rate="yes",
        ),
    )
}

KERNEL_NAMES: tuple[str, ...] = tuple(_CATALOG)


def get_kernel(name: str | KernelSpec) -> KernelSpec:
    """Look up a catalog kernel by case-insensitive name."""
    if isinstance(name, KernelSpec):
        return name
    try:
        return _CATALOG[name.strip().lower()]
    except KeyError:
        raise DomainError(
            f"unknown kernel {name!r}; available: {', '.join(KERNEL_NAMES)}"
        ) from None


def _check_u(u) -> np.ndarray:
    arr = np.asarray(u, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise DomainError("profile argument must be non-negative")
    return arr


def _unwrap(x: np.ndarray):
    return float(x) if x.ndim == 0 else x


def profile_value(kernel: KernelSpec | str, u):
    """Unnormalized profile at ``u >= 0`` (scalar or array)."""
    kernel = get_kernel(kernel)
    return _unwrap(np.asarray(kernel.profile(_check_u(u)), dtype=float))


def subgradient_profile_value(kernel: KernelSpec | str, u):
    """Right-derivative convention ``-profile'(u+)``; vanishes at support edges."""
    kernel = get_kernel(kernel)
    return _unwrap(np.asarray(kernel.subgradient_profile(_check_u(u)), dtype=float))


def kernel_value(kernel: KernelSpec | str, x) -> float:
    """Evaluate ``K(x) = profile(|x|^2 / 2)`` for a single point ``x``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(x)):
        raise DomainError("kernel argument must be finite")
    return profile_value(kernel, 0.5 * float(x @ x))


@lru_cache(maxsize=None)
def _radial_integral(name: str, d: int) -> float:
    kernel = _CATALOG[name]

    def integrand(r):
        return float(kernel.profile(np.float64(0.5 * r * r))) * r ** (d - 1)

    surface = 2.0 * math.pi ** (d / 2.0) / gamma(d / 2.0)
    if kernel.support_radius_sq_half is not None:
        r_max = math.sqrt(2.0 * kernel.support_radius_sq_half)
        val, _ = integrate.quad(integrand, 0.0, r_max, epsabs=0.0, epsrel=1e-13, limit=200)
    else:
        val, _ = integrate.quad(integrand, 0.0, np.inf, epsabs=0.0, epsrel=1e-13, limit=400)
    return surface * val


def normalization_constant(kernel: KernelSpec | str, d: int) -> float:
    """Constant ``Z`` making ``Z * profile(|x|^2/2)`` integrate to one over R^d."""
    kernel = get_kernel(kernel)
    if int(d) != d or d < 1:
        raise DomainError("dimension must be a positive integer")
    if kernel.name not in _CATALOG:
        raise DomainError("normalization is only tabulated for catalog kernels")
    if kernel.name == "cauchy" and d >= 2:
        # profile decays like 2/|x|^2, which is not integrable for d >= 2
        raise DomainError("the Cauchy kernel is not integrable for d >= 2")
    return 1.0 / _radial_integral(kernel.name, int(d))


def max_poly_degree(kernel: KernelSpec | str) -> int | None:
    """Maximum degree in x of a piecewise-polynomial kernel, else ``None``."""
    return get_kernel(kernel).max_poly_degree
