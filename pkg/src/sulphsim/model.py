"""Physical parameters and constitutive laws of the sulphation model.

Everything here is a pure function of its arguments: the porosity law
phi(c) = A + B*c, the rugosity-dependent boundary permeability nu(r), the
rugosity reaction term G(r, c, s) with its antiderivative in r, and the box
projection that realizes the constraint r in [0, R0].
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

C_RANGE_TOL = 1e-12


class NuLaw(Enum):
    LINEAR = "linear"
    PARABOLIC = "parabolic"


class ConstraintMode(Enum):
    FREE = "free"
    BOX = "box"


@dataclass(frozen=True)
class PhysParams:
    """All physical and constitutive constants of one simulation.

    Defaults follow the reference setup: reaction rate lam=100, rugosity
    rate g=30, unit ceilings C0=S0=1, ambient concentration sbar=1, and a
    permeability law rising from nu0=0.1 at a flat surface to nul=1 at
    rugosity rl=1.  A=0.1, B=-0.05 satisfy both the positivity assumption
    on the porosity (A > 0, A + B*C0 > 0) and the global ceiling
    assumption (B <= 1/S0, sbar <= S0), so the maximum principle
    0 <= s <= S0 is guaranteed and is enforced as a hard invariant.
    """

    A: float = 0.1
    B: float = -0.05
    lam: float = 100.0          # reaction rate ("lambda" is a Python keyword)
    C0: float = 1.0
    S0: float = 1.0
    sbar: float = 1.0
    g: float = 30.0
    R0: float = 4.0
    nu_law: NuLaw = NuLaw.LINEAR
    nu0: float = 0.1
    nul: float = 1.0
    rl: float = 1.0
    weibull_m: float = 10.0
    weibull_r0: float = 0.2
    constraint_mode: ConstraintMode = ConstraintMode.FREE

    def validate(self, enforce_global_bound: bool = True) -> list[str]:
        """Return a list of violated assumptions (empty when valid)."""
        v = []
        if not (self.A > 0 and self.A + self.B * self.C0 > 0):
            v.append(
                f"(A1): requires A > 0 and A + B*C0 > 0 "
                f"(A={self.A}, A+B*C0={self.A + self.B * self.C0})"
            )
        if enforce_global_bound and self.S0 > 0 and self.B > 1.0 / self.S0:
            v.append(f"(A9): requires B <= 1/S0 (B={self.B}, 1/S0={1.0 / self.S0})")
        if not 0.0 <= self.sbar <= self.S0:
            v.append(f"(A9): requires 0 <= sbar <= S0 (sbar={self.sbar}, S0={self.S0})")
        if self.nu0 < 0 or self.nul < 0:
            v.append(f"nu0 and nul must be >= 0 (nu0={self.nu0}, nul={self.nul})")
        if self.rl <= 0:
            v.append(f"rl must be > 0 (rl={self.rl})")
        if self.g < 0:
            v.append(f"g must be >= 0 (g={self.g})")
        if self.lam <= 0:
            v.append(f"lam must be > 0 (lam={self.lam})")
        if self.C0 <= 0:
            v.append(f"C0 must be > 0 (C0={self.C0})")
        if self.S0 <= 0:
            v.append(f"S0 must be > 0 (S0={self.S0})")
        if self.weibull_m <= 0:
            v.append(f"weibull_m must be > 0 (weibull_m={self.weibull_m})")
        if self.weibull_r0 < 0:
            v.append(f"weibull_r0 must be >= 0 (weibull_r0={self.weibull_r0})")
        if self.R0 <= 0:
            v.append(f"R0 must be > 0 (R0={self.R0})")
        return v

    def ceiling_guaranteed(self) -> bool:
        """True when the hypotheses of the s <= S0 bound hold."""
        return self.B <= 1.0 / self.S0 + 1e-15 and self.sbar <= self.S0 + 1e-15


@dataclass(frozen=True)
class ConstitutiveReport:
    """Derived bounds of the constitutive laws, used by tests and diagnostics."""

    phi_min: float
    phi_max: float
    nu_at_zero: float
    nu_at_rl: float


def constitutive_report(p: PhysParams) -> ConstitutiveReport:
    lo = min(p.A, p.A + p.B * p.C0)
    hi = max(p.A, p.A + p.B * p.C0)
    return ConstitutiveReport(phi_min=lo, phi_max=hi, nu_at_zero=p.nu0, nu_at_rl=p.nul)


def porosity(c, p: PhysParams):
    """Affine porosity A + B*c.

    Rejects c outside [0, C0] beyond 1e-12; an out-of-range value signals a
    bound violation in the caller, not a recoverable condition.
    """
    c = np.asarray(c, dtype=float)
    if np.any(c < -C_RANGE_TOL) or np.any(c > p.C0 + C_RANGE_TOL):
        bad_lo = float(c.min())
        bad_hi = float(c.max())
        raise ValueError(
            f"calcite density outside [0, C0={p.C0}] beyond {C_RANGE_TOL} "
            f"(range [{bad_lo}, {bad_hi}])"
        )
    return p.A + p.B * c


def permeability(r, p: PhysParams):
    """Boundary exchange coefficient nu(r), linear or parabolic in r.

    Both laws pass through (0, nu0) and (rl, nul).  Beyond rl the formula
    is extrapolated as written; the rugosity cap R0 is enforced elsewhere.
    """
    r = np.asarray(r, dtype=float)
    if p.nu_law is NuLaw.LINEAR:
        return p.nu0 + (p.nul - p.nu0) * r / p.rl
    return p.nu0 + (p.nul - p.nu0) * r * r / (p.rl * p.rl)


def rugosity_reaction(r, c, s, p: PhysParams):
    """Reaction term G(r, c, s) = -phi(c)*c*s*(1 + r/(1+r))*g.

    Nonpositive for nonnegative arguments, and vanishing whenever c or s
    does, so rugosity never decreases under the reduced surface equation.
    """
    r = np.asarray(r, dtype=float)
    c = np.asarray(c, dtype=float)
    s = np.asarray(s, dtype=float)
    phi = p.A + p.B * c
    return -phi * c * s * (1.0 + r / (1.0 + r)) * p.g


def rugosity_reaction_potential(r, c, s, p: PhysParams):
    """r-antiderivative of the reaction term, normalized to vanish at r=0.

    Integrating the bracket gives 2r - log(1+r); this enters the surface
    energy functional.
    """
    r = np.asarray(r, dtype=float)
    c = np.asarray(c, dtype=float)
    s = np.asarray(s, dtype=float)
    phi = p.A + p.B * c
    return -phi * c * s * p.g * (2.0 * r - np.log1p(r))


def project_box(r_trial, dt: float, p: PhysParams):
    """Clamp a trial rugosity into [0, R0] and return the multiplier.

    xi = (r_trial - r)/dt restores the pointwise identity
    (r_new - r_old)/dt + xi + G = F of the constrained update; xi is zero
    exactly when the trial value is feasible.
    """
    if dt <= 0:
        raise ValueError(f"dt must be > 0 (dt={dt})")
    r_trial = np.asarray(r_trial, dtype=float)
    r = np.clip(r_trial, 0.0, p.R0)
    xi = (r_trial - r) / dt
    return r, xi


@dataclass(frozen=True)
class PsiPolynomial:
    """Non-monotone surface potential, restricted to cubic polynomials.

    coeffs are (c0, c1, c2, c3) of c0 + c1*r + c2*r^2 + c3*r^3.  The
    reference experiments use the zero polynomial.
    """

    coeffs: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)

    def value(self, r):
        c0, c1, c2, c3 = self.coeffs
        r = np.asarray(r, dtype=float)
        return c0 + r * (c1 + r * (c2 + r * c3))

    def deriv(self, r):
        _, c1, c2, c3 = self.coeffs
        r = np.asarray(r, dtype=float)
        return c1 + r * (2.0 * c2 + r * 3.0 * c3)


PSI_ZERO = PsiPolynomial()
