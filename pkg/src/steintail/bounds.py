"""Tail-comparison certificates for quadratic-kernel reference laws.

Three layers of machinery:

* finite-z envelopes: for z > 0 the survival function is pinched between
  max(z - g'(z), 0)/q(z) * g(z) rho(z) and g(z) rho(z) / z, with a mirrored
  pair for z < 0;
* comparison bounds for a dominating/dominated variable X: the implicit
  integral lower bound P[X>z] >= Phi(z) - (1/q(z)) int_z^b (2x-z) P[X>x] dx,
  its explicit closure ((c-2) q(z)) / ((c-2) q(z) + 2 z^2) * Phi(z), and the
  admissible multiplier infimum (1-alpha)/(1-2*alpha) for upper bounds;
* asymptotic constants: the limit K of the normalized flux z^kappa e^(z/s)
  g(z) rho(z), which sandwiches z-power-normalized tails in
  [K (1-2 alpha)/(1-alpha), K] (exact squeeze in the linear-kernel case).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from . import pearson, quadrature
from .errors import (
    DomainError,
    InvalidConstantError,
    NonIntegrableTailError,
    ThirdMomentError,
    UnsupportedCaseError,
)
from .pearson import CaseTag, PearsonCoefficients, PearsonLaw, q_function, stein_kernel

__all__ = [
    "TailReport",
    "Direction",
    "phi_envelope",
    "implicit_lower_bound",
    "pearson_lower",
    "pearson_upper_constant",
    "asymptotic_tail_constant",
    "normalized_tail",
    "tail_sandwich",
    "variance_bound_check",
    "regime_threshold",
]


class Direction(str, Enum):
    GE = "GE"
    LE = "LE"


def phi_envelope(law: PearsonLaw, x: float) -> tuple[float, float]:
    """Certified bracket from the flux g(x) rho(x).

    For x > 0 the pair (lower, upper) brackets the tail P[Z > x]; for x < 0 it
    brackets 1 - P[Z > x].  At x = 0 the upper bound degenerates to the trivial
    1.
    """
    x = float(x)
    if not law.support_a < x < law.support_b:
        raise DomainError(f"envelope point {x} outside the open support")
    c = law.coeffs
    flux = float(pearson._g_rho(law, np.asarray(x)))
    q = float(q_function(c, x))
    g_prime = 2.0 * c.alpha * x + c.beta
    if x >= 0.0:
        lower = max(x - g_prime, 0.0) / q * flux
        upper = flux / x if x > 0.0 else 1.0
    else:
        lower = max(g_prime - x, 0.0) / q * flux
        upper = flux / (-x)
    return lower, min(upper, 1.0)


def tail_sandwich(law: PearsonLaw, z: float) -> tuple[float, float]:
    """Finite-z certified bracket (lo, hi) with lo <= P[Z > z] <= hi, z > 0."""
    if not z > 0.0:
        raise DomainError(f"tail_sandwich requires z > 0, got {z}")
    lower, upper = phi_envelope(law, z)
    return max(lower, 0.0), upper


def implicit_lower_bound(law: PearsonLaw, tail_of_x: Callable[[float], float], z: float) -> float:
    """Phi(z) - (1/q(z)) int_z^b (2x - z) P[X > x] dx by adaptive quadrature.

    The integrand is truncated where tail_of_x drops below 1e-14; the weight
    grows only linearly so the discarded mass is negligible.
    """
    if not 0.0 < z < law.support_b:
        raise DomainError(f"requires 0 < z < b, got z={z}")
    b = law.support_b
    if math.isfinite(b):
        x_hi = b
    else:
        x_hi = max(2.0 * z, z + math.sqrt(law.variance))
        for _ in range(200):
            if tail_of_x(x_hi) < 1e-14:
                break
            x_hi *= 2.0
        else:
            raise NonIntegrableTailError("tail of X does not decay below 1e-14")
    integral = quadrature.adaptive(lambda x: (2.0 * x - z) * tail_of_x(x), z, x_hi,
                                   epsabs=1e-13, epsrel=1e-9)
    return pearson.tail(law, z) - integral / float(q_function(law.coeffs, z))


def pearson_lower(law: PearsonLaw, z: float, c: float) -> tuple[float, float]:
    """Explicit lower-bound factor and its large-z limit.

    Returns (bound, asymptotic_constant) where
    bound = (c-2) q(z) / ((c-2) q(z) + 2 z^2) * Phi(z) and the constant is
    (c-2)(1-alpha) / (c - alpha (c-2)); both require c > 2.
    """
    if not c > 2.0:
        raise InvalidConstantError(f"explicit lower bound requires c > 2, got {c}")
    if not z > 0.0:
        raise DomainError(f"requires z > 0, got {z}")
    al = law.coeffs.alpha
    q = float(q_function(law.coeffs, z))
    bound = (c - 2.0) * q / ((c - 2.0) * q + 2.0 * z * z) * pearson.tail(law, z)
    asymptotic = (c - 2.0) * (1.0 - al) / (c - al * (c - 2.0))
    return bound, asymptotic


def pearson_upper_constant(alpha: float) -> float:
    """Infimum of admissible upper-bound multipliers; callers pick any K above it."""
    if not alpha < 0.5:
        raise ThirdMomentError(f"upper-bound constant needs alpha < 1/2 (finite third moment), got {alpha}")
    return (1.0 - alpha) / (1.0 - 2.0 * alpha)


def asymptotic_tail_constant(law: PearsonLaw) -> tuple[float, float]:
    """Closed-form limit K of the normalized flux and the sandwich lower factor.

    Defined for laws with b = +inf.  Linear kernel: K = C s e^(-mu/s) with an
    exact squeeze (lower factor 1).  Quadratic kernels: K = C alpha (times
    e^(s pi / 2) when the kernel has no real roots) and the normalized tail
    z^(1+1/alpha) P[Z > z] ends up in [K (1-2 alpha)/(1-alpha), K].
    """
    if law.support_b != math.inf:
        raise UnsupportedCaseError(f"asymptotic constant needs b = +inf, got case {law.case.value}"
                                   + (" (mirrored)" if law.mirrored else ""))
    al = law.coeffs.alpha
    c_norm = math.exp(law.log_norm_const)
    if law.case is CaseTag.GAMMA:
        return c_norm * law.s * math.exp(-law.mu / law.s), 1.0
    if law.case is CaseTag.INVERSE_GAMMA_TYPE:
        k = c_norm * al
    elif law.case is CaseTag.NO_REAL_ROOTS:
        k = c_norm * al * math.exp(law.s * math.pi / 2.0)
    else:
        raise UnsupportedCaseError(f"no asymptotic constant for case {law.case.value}")
    return k, max((1.0 - 2.0 * al) / (1.0 - al), 0.0)


def normalized_tail(law: PearsonLaw, z: float) -> float:
    """Tail rescaled so that it converges into [K * lower_factor, K].

    Linear kernel: z^(1-r) e^(z/s) P[Z > z] -> K exactly (note the exponent
    1 - r = 1 - mu/s; the growth normalizer must cancel the z^(r-1) factor of
    the flux).  Quadratic kernels: z^(1+1/alpha) P[Z > z].
    """
    if not z > 0.0:
        raise DomainError(f"normalized_tail requires z > 0, got {z}")
    lt = pearson.log_tail(law, z)
    if law.case is CaseTag.GAMMA and not law.mirrored:
        return math.exp(lt + z / law.s + (1.0 - law.r) * math.log(z))
    if law.case in (CaseTag.INVERSE_GAMMA_TYPE, CaseTag.NO_REAL_ROOTS) and not law.mirrored:
        return math.exp(lt + (1.0 + 1.0 / law.coeffs.alpha) * math.log(z))
    raise UnsupportedCaseError(f"no tail normalization for case {law.case.value}")


def log_normalized_flux(law: PearsonLaw, z: float) -> float:
    """log of the flux normalizer whose limit is ln K; numeric-limit oracle hook."""
    lg = math.log(float(stein_kernel(law.coeffs, z)))
    lr = float(pearson.log_density(law, z))
    if law.case is CaseTag.GAMMA and not law.mirrored:
        return lg + lr + z / law.s - law.r * math.log(z)
    if law.case in (CaseTag.INVERSE_GAMMA_TYPE, CaseTag.NO_REAL_ROOTS) and not law.mirrored:
        return lg + lr + math.log(z) / law.coeffs.alpha
    raise UnsupportedCaseError(f"no flux normalization for case {law.case.value}")


def variance_bound_check(coeffs: PearsonCoefficients, var_of_x: float,
                         direction: Direction | str, rel_tol: float = 1e-9) -> bool:
    """Compare Var[X] against the reference variance gamma/(1-alpha)."""
    if var_of_x < 0.0:
        raise DomainError(f"variance must be nonnegative, got {var_of_x}")
    direction = Direction(direction)
    target = pearson.variance(coeffs)
    slack = rel_tol * target
    if direction is Direction.GE:
        return var_of_x >= target - slack
    return var_of_x <= target + slack


def regime_threshold(coeffs: PearsonCoefficients) -> float:
    """z_min = 10 sqrt(gamma/(1-alpha)): below it large-z verdicts are informational."""
    return 10.0 * math.sqrt(pearson.variance(coeffs))


# ---------------------------------------------------------------------------
# tail report


class Verdict(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class TailReport:
    """Per-z certificates, empirical tails, and verdicts for one scenario."""

    z_grid: tuple[float, ...]
    phi_star: tuple[float, ...]
    lower_cert: tuple[float, ...]
    upper_cert: tuple[float, ...]
    empirical: tuple[float, ...]
    ci_half_width: float
    verdicts: tuple[str, ...]
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        n = len(self.z_grid)
        for name in ("phi_star", "lower_cert", "upper_cert", "empirical", "verdicts"):
            if len(getattr(self, name)) != n:
                raise DomainError(f"TailReport field {name} length mismatch")
        if any(b >= a for a, b in zip(self.phi_star, self.phi_star[1:])):
            raise DomainError("phi_star must be strictly decreasing along the grid")

    @property
    def all_passed(self) -> bool:
        return all(v != Verdict.FAIL.value for v in self.verdicts)

    def to_csv(self) -> str:
        lines = ["z,phi_star,lower,upper,empirical,ci,verdict"]
        for i, z in enumerate(self.z_grid):
            lines.append(
                f"{z!r},{self.phi_star[i]!r},{self.lower_cert[i]!r},{self.upper_cert[i]!r},"
                f"{self.empirical[i]!r},{self.ci_half_width!r},{self.verdicts[i]}"
            )
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps({
            "z": list(self.z_grid),
            "phi_star": list(self.phi_star),
            "lower": list(self.lower_cert),
            "upper": list(self.upper_cert),
            "empirical": list(self.empirical),
            "ci": self.ci_half_width,
            "verdicts": list(self.verdicts),
            "meta": self.meta,
        })
