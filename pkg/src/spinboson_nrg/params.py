"""Parameter translation between the dissipative two-level system and the
anisotropic Kondo model, plus analytic reference quantities.

Units: the conduction band half-bandwidth D0 is the energy unit, so the flat
density of states is rho0 = 1/2 and the bath cutoff sits at wc = 2*D0.  The
level asymmetry is accepted as the ratio eps/Delta and converted to an
absolute energy internally.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass


class DomainError(ValueError):
    """Input outside the supported parameter domain."""


@dataclass(frozen=True)
class SpinBosonPoint:
    """One physical input point (alpha, eps/Delta, Delta/wc)."""

    alpha: float
    epsilon: float       # eps / Delta, dimensionless
    delta_ratio: float   # Delta / wc, dimensionless
    wc: float = 2.0      # cutoff in D0 units, fixed at twice the half-bandwidth

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(
                f"unsupported dissipation sector: alpha={self.alpha} not in (0, 1)"
            )
        if not 0.0 < self.delta_ratio <= 0.1:
            raise DomainError(
                f"delta_ratio={self.delta_ratio} not in (0, 0.1]; the coupling"
                " correspondence holds only to lowest order in Delta/wc"
            )
        if self.epsilon < 0.0:
            raise DomainError(f"epsilon={self.epsilon} must be >= 0")
        if self.wc <= 0.0:
            raise DomainError("wc must be positive")

    @property
    def delta_abs(self) -> float:
        """Bare tunneling amplitude in D0 units."""
        return self.delta_ratio * self.wc

    @property
    def epsilon_abs(self) -> float:
        """Level asymmetry in D0 units."""
        return self.epsilon * self.delta_abs


@dataclass(frozen=True)
class KondoParams:
    """Dimensionless Kondo couplings in half-bandwidth units."""

    rho0_jperp: float
    rho0_jpar: float
    field: float               # local Zeeman energy g*muB*h in D0 units
    half_bandwidth: float = 1.0
    in_longitudinal_sector: bool = True

    def __post_init__(self):
        if self.rho0_jpar <= 0.0:
            raise DomainError(
                f"rho0_jpar={self.rho0_jpar} must be > 0 (antiferromagnetic sector)"
            )
        if self.rho0_jperp <= 0.0:
            raise DomainError(f"rho0_jperp={self.rho0_jperp} must be > 0")
        object.__setattr__(
            self, "in_longitudinal_sector", self.rho0_jperp < abs(self.rho0_jpar)
        )

    @property
    def jperp(self) -> float:
        """Transverse coupling in D0 units (rho0 = 1/2 per spin)."""
        return 2.0 * self.half_bandwidth * self.rho0_jperp

    @property
    def jpar(self) -> float:
        """Longitudinal coupling in D0 units."""
        return 2.0 * self.half_bandwidth * self.rho0_jpar


def map_to_kondo(p: SpinBosonPoint) -> KondoParams:
    """Translate a spin-boson point to Kondo couplings.

    The scattering phase shift delta = (pi/2)(sqrt(alpha) - 1) is taken on the
    branch (-pi/2, 0), the unique branch with antiferromagnetic J_par for
    alpha < 1.  With wc = 2*D0 the transverse coupling equals the tunneling
    amplitude, J_perp = Delta.
    """
    delta = 0.5 * math.pi * (math.sqrt(p.alpha) - 1.0)
    rho0_jpar = -4.0 / math.pi * math.tan(delta)
    k = KondoParams(
        rho0_jperp=p.delta_ratio,
        rho0_jpar=rho0_jpar,
        field=p.epsilon * p.delta_abs,
        half_bandwidth=p.wc / 2.0,
    )
    if not k.in_longitudinal_sector:
        warnings.warn(
            f"rho0_jperp={k.rho0_jperp:.4g} >= rho0_jpar={k.rho0_jpar:.4g}:"
            " outside the longitudinal sector, the parameter correspondence"
            " is no longer controlled",
            UserWarning,
            stacklevel=2,
        )
    return k


def alpha_from_kondo(k: KondoParams) -> float:
    """Inverse of the coupling map: alpha from rho0*J_par."""
    delta = -math.atan(0.25 * math.pi * k.rho0_jpar)
    return (1.0 + 2.0 * delta / math.pi) ** 2


def kondo_to_spinboson(k: KondoParams) -> SpinBosonPoint:
    """Inverse translation; valid only where SpinBosonPoint invariants hold."""
    alpha = alpha_from_kondo(k)
    delta_abs = k.jperp
    return SpinBosonPoint(
        alpha=alpha,
        epsilon=k.field / delta_abs,
        delta_ratio=k.rho0_jperp,
        wc=2.0 * k.half_bandwidth,
    )


def renormalized_tunneling(p: SpinBosonPoint) -> float:
    """Renormalized tunneling scale Delta_r = wc * (Delta/wc)^(1/(1-alpha)).

    This is the crossover (Kondo) scale that sets the iteration depth needed
    for convergence.  If the power underflows, the result is clamped to the
    smallest positive float and a RuntimeWarning is emitted.
    """
    exponent = 1.0 / (1.0 - p.alpha)
    dr = p.wc * p.delta_ratio ** exponent
    if dr <= 0.0:
        warnings.warn(
            f"renormalized tunneling underflowed at alpha={p.alpha};"
            " clamped to the smallest positive float",
            RuntimeWarning,
            stacklevel=2,
        )
        dr = math.ulp(0.0)
    return dr


def kondo_renormalized_tunneling(k: KondoParams) -> float:
    """Crossover scale computed directly from Kondo couplings."""
    alpha = alpha_from_kondo(k)
    dr = 2.0 * k.half_bandwidth * k.rho0_jperp ** (1.0 / (1.0 - alpha))
    return dr if dr > 0.0 else math.ulp(0.0)


def noninteracting_reference(delta: float, epsilon: float) -> tuple[float, float]:
    """Ground-state (sx, sz) of the isolated two-level system.

    Returns (Delta, eps)/sqrt(eps^2 + Delta^2); the pair has unit norm.
    """
    if delta <= 0.0:
        raise DomainError("delta must be positive")
    if epsilon < 0.0:
        raise DomainError("epsilon must be >= 0")
    r = math.hypot(delta, epsilon)
    return delta / r, epsilon / r
