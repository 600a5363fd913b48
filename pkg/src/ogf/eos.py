"""Gas equation of state, potential function and non-dimensional scaling.

The compressibility model is the CNGA closed form Z = 1/(b1 + b2*p), which
collapses to the ideal gas for (b1, b2) = (1, 0).  All model building and
solving happens in dimensionless quantities; `NondimContext` holds the
nominal scales and the derived constants used to move between SI data and
model space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .network import Network, Pipe, Resistor

# CNGA fit constants (unitless) and the psi-to-pascal divisor.
CNGA_A1 = 344400.0
CNGA_A2 = 1.785
CNGA_A3 = 3.825
PSI_PA = 6894.75729


def cnga_coefficients(T: float, G: float, p_atm: float,
                      ideal: bool = False) -> tuple[float, float]:
    """Compressibility coefficients (b1, b2) with b1 = 1 + p_atm*b2.

    T is gas temperature in K, G the specific gravity relative to air and
    p_atm atmospheric pressure in Pa.  With `ideal=True` returns (1, 0).
    Raises ValueError when the fit blows up, which happens when G and T are
    swapped or given in the wrong units.
    """
    if ideal:
        return 1.0, 0.0
    if T <= 0 or G <= 0 or p_atm <= 0:
        raise ValueError("T, G and p_atm must be positive")
    core = CNGA_A1 * 10.0 ** (CNGA_A2 * G) / (1.8 * T) ** CNGA_A3
    b2 = core / PSI_PA
    b1 = 1.0 + p_atm * b2
    if not (math.isfinite(b1) and math.isfinite(b2)):
        raise ValueError("CNGA coefficient overflow; check G/T units")
    return b1, b2


@dataclass(frozen=True)
class NondimContext:
    """Nominal scales plus every derived constant of the scaled model.

    a = sqrt(R_g*T) is the isothermal sound speed, mach = v0/a and
    euler = p0/(rho0*a^2) are the two dimensionless groups, and
    (b1n, b2n) are the scaled equation-of-state coefficients entering the
    potential pi(p) = b1n/2 p^2 + b2n/3 p^3.  Areas are not scaled (A0=1).
    """

    l0: float
    p0: float
    rho0: float
    v0: float
    A0: float
    f0: float
    pi0: float
    a: float
    mach: float
    euler: float
    b1: float  # SI CNGA coefficient (unitless)
    b2: float  # SI CNGA coefficient (1/Pa)
    b1n: float  # scaled: euler * b1
    b2n: float  # scaled: euler * p0 * b2

    def __post_init__(self):
        for name in ("l0", "p0", "rho0", "v0", "A0", "f0", "pi0", "a"):
            if getattr(self, name) <= 0:
                raise ValueError(f"nominal {name} must be positive")
        if self.b1 < 1.0 or self.b2 < 0.0:
            raise ValueError("equation-of-state coefficients need b1 >= 1, b2 >= 0")

    # scaling helpers; nd_* go SI -> dimensionless, si_* invert them
    def nd_pressure(self, p):
        return p / self.p0

    def si_pressure(self, p):
        return p * self.p0

    def nd_flow(self, f):
        return f / self.f0

    def si_flow(self, f):
        return f * self.f0

    def nd_length(self, x):
        return x / self.l0

    def si_length(self, x):
        return x * self.l0

    def nd_potential(self, x):
        return x / self.pi0

    def si_potential(self, x):
        return x * self.pi0


def build_context(network: Network, l0: float = 1000.0, p0: float = 5e6,
                  v0: float = 1.0, rho0: float | None = None,
                  ideal_eos: bool = False) -> NondimContext:
    """Derive the scaling context for a network from nominal choices.

    By default rho0 = p0/a^2, which makes euler = 1 so that the ideal-gas
    potential is exactly p^2/2 in model space and keeps the remaining
    coefficients O(1).
    """
    if l0 <= 0 or p0 <= 0 or v0 <= 0:
        raise ValueError("nominal scales must be positive")
    gas = network.gas
    a = math.sqrt(gas.R_g * gas.T)
    if rho0 is None:
        rho0 = p0 / a**2
    b1, b2 = cnga_coefficients(gas.T, gas.G, gas.p_atm, ideal=ideal_eos)
    A0 = 1.0
    f0 = rho0 * v0 * A0
    euler = p0 / (rho0 * a**2)
    return NondimContext(
        l0=l0, p0=p0, rho0=rho0, v0=v0, A0=A0, f0=f0,
        pi0=rho0 * p0 * a**2, a=a, mach=v0 / a, euler=euler,
        b1=b1, b2=b2, b1n=euler * b1, b2n=euler * p0 * b2,
    )


def potential(p, ctx: NondimContext):
    """Scaled pressure potential b1n/2 p^2 + b2n/3 p^3 (accepts arrays)."""
    return 0.5 * ctx.b1n * p**2 + ctx.b2n / 3.0 * p**3


def potential_derivative(p, ctx: NondimContext):
    """d(potential)/dp = b1n p + b2n p^2, used for tangent construction."""
    return ctx.b1n * p + ctx.b2n * p**2


def density(p, ctx: NondimContext):
    """Scaled density b1n p + b2n p^2."""
    return ctx.b1n * p + ctx.b2n * p**2


def inverse_potential(target: float, ctx: NondimContext,
                      lo: float = 0.0, hi: float = 1e6,
                      tol: float = 1e-14, max_iter: int = 200) -> float:
    """Pressure p >= 0 with potential(p) == target.

    Safeguarded Newton on the monotone cubic with a bisection fallback;
    `lo`/`hi` must bracket the root.
    """
    if target < 0:
        raise ValueError("potential is nonnegative for p >= 0")
    f_lo = potential(lo, ctx) - target
    f_hi = potential(hi, ctx) - target
    if f_lo > 0 or f_hi < 0:
        raise ValueError("bracket does not contain the inverse potential")
    p = min(max(math.sqrt(2.0 * target / ctx.b1n) if ctx.b1n > 0 else hi, lo), hi)
    for _ in range(max_iter):
        r = potential(p, ctx) - target
        if abs(r) <= tol * max(1.0, abs(target)):
            return p
        dr = potential_derivative(p, ctx)
        step_ok = dr > 0
        if step_ok:
            p_new = p - r / dr
            step_ok = lo <= p_new <= hi
        if not step_ok:
            p_new = 0.5 * (lo + hi)  # bisection fallback
        if r > 0:
            hi = p
        else:
            lo = p
        p = p_new
    return p


def nikuradse_friction(diameter: float, roughness: float) -> float:
    """Turbulent wall-law friction factor from pipe roughness."""
    if diameter <= 0 or roughness <= 0:
        raise ValueError("diameter and roughness must be positive")
    return (2.0 * math.log10(diameter / roughness) + 1.138) ** -2


def pipe_resistance(pipe: Pipe, ctx: NondimContext) -> float:
    """Friction coefficient of the scaled pipe equation.

    The scaled momentum balance across a pipe reads
    pi(p_out) - pi(p_in) = -beta * f|f| with
    beta = (mach^2/euler) * lambda*L / (2*D*A^2) in scaled length units.
    """
    L = ctx.nd_length(pipe.length)
    D = ctx.nd_length(pipe.diameter)
    A = pipe.area_or_default()  # areas are unscaled
    return (ctx.mach**2 / ctx.euler) * pipe.friction_factor * L / (2.0 * D * A**2)


def resistor_coefficient(resistor: Resistor, ctx: NondimContext) -> float:
    """Darcy-Weisbach drag coefficient of the scaled resistor equation."""
    return (resistor.drag / (2.0 * resistor.area**2)) * (ctx.mach**2 / ctx.euler)


__all__ = [
    "cnga_coefficients", "NondimContext", "build_context", "potential",
    "potential_derivative", "density", "inverse_potential",
    "nikuradse_friction", "pipe_resistance", "resistor_coefficient",
]
