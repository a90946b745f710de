"""Closed-form references for a solid cylindrical conductor.

These are the independent checks the field solver is validated against:
DC resistance, skin depth, and the internal impedance of a round rod
carrying a prescribed time-harmonic current,

    Z = L * k / (2*pi*a*sigma) * J0(k*a) / J1(k*a),   k = sqrt(-i*omega*mu*sigma),

i.e. the axial surface field times length over total current.  The Bessel
ratio is evaluated from scratch here (power series, switching to large
argument asymptotics) so the check shares no code with the solver, and a
second, fully numerical 1D radial finite-difference route cross-validates
the series itself before either is trusted against 3D results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

# The J0/J1 power series loses roughly 0.18*(a/delta) decimal digits to
# cancellation and is kept up to a/delta = 15 (|ka| = 15*sqrt(2), about 3
# digits lost); beyond that the large-argument asymptotic ratio, accurate
# to ~|ka|^-3 there, takes over.
SERIES_MAX_RATIO = 15.0
_SERIES_TERMS = 200


@dataclass(frozen=True)
class RodSpec:
    """Solid round rod: length, radius, sigma, mu, angular frequency omega.

    omega = 0 describes the DC case; the AC routines require omega > 0.
    """

    length: float
    radius: float
    sigma: float
    mu: float
    omega: float = 0.0

    def __post_init__(self) -> None:
        for name in ("length", "radius", "sigma", "mu"):
            v = getattr(self, name)
            if not (v > 0.0) or not math.isfinite(v):
                raise ValueError(f"rod {name} must be finite and > 0, got {v}")
        if not (self.omega >= 0.0) or not math.isfinite(self.omega):
            raise ValueError(f"rod omega must be finite and >= 0, got {self.omega}")

    @property
    def skin_ratio(self) -> float:
        """radius / skin depth (0 at DC)."""
        if self.omega == 0.0:
            return 0.0
        return self.radius / skin_depth(self.sigma, self.mu, self.omega)


def skin_depth(sigma: float, mu: float, omega: float) -> float:
    """Penetration depth delta = sqrt(2 / (omega * mu * sigma))."""
    if sigma <= 0.0 or mu <= 0.0 or omega <= 0.0:
        raise ValueError("skin depth needs sigma, mu, omega all > 0")
    return math.sqrt(2.0 / (omega * mu * sigma))


def dc_rod_resistance(rod: RodSpec) -> float:
    """R = L / (sigma * pi * a^2)."""
    return rod.length / (rod.sigma * math.pi * rod.radius**2)


def _j0_series(z: complex) -> complex:
    """J0(z) = sum_m (-z^2/4)^m / (m!)^2, run until terms stop contributing."""
    q = -z * z / 4.0
    term = complex(1.0)
    total = complex(1.0)
    for m in range(1, _SERIES_TERMS):
        term *= q / (m * m)
        total += term
        if abs(term) < 1e-18 * abs(total):
            return total
    raise ArithmeticError(f"J0 series did not converge for |z| = {abs(z):.3g}")


def _j1_series(z: complex) -> complex:
    """J1(z) = (z/2) * sum_m (-z^2/4)^m / (m! (m+1)!)."""
    q = -z * z / 4.0
    term = complex(1.0)
    total = complex(1.0)
    for m in range(1, _SERIES_TERMS):
        term *= q / (m * (m + 1))
        total += term
        if abs(term) < 1e-18 * abs(total):
            return total * z / 2.0
    raise ArithmeticError(f"J1 series did not converge for |z| = {abs(z):.3g}")


def _j0_over_j1_asymptotic(z: complex) -> complex:
    """Large-|z| ratio J0(z)/J1(z) for arguments on the exp(-i*pi/4) ray.

    There the decaying-exponential Hankel component dominates both J0 and
    J1, so the ratio tends to H0/H1 = i*(P0 + i*Q0)/(P1 + i*Q1) with the
    standard modulus corrections P, Q through order 1/z^2.
    """
    z2 = z * z
    p0 = 1.0 - 9.0 / (128.0 * z2)
    q0 = -1.0 / (8.0 * z)
    p1 = 1.0 + 15.0 / (128.0 * z2)
    q1 = 3.0 / (8.0 * z)
    return 1j * (p0 + 1j * q0) / (p1 + 1j * q1)


def _kappa(rod: RodSpec) -> complex:
    # sqrt(-i*omega*mu*sigma) on the branch with Re > 0, i.e. (1 - i)/delta.
    delta = skin_depth(rod.sigma, rod.mu, rod.omega)
    return complex(1.0, -1.0) / delta


def ac_rod_internal_impedance(rod: RodSpec) -> complex:
    """Series impedance Z = R + iX of the rod at rod.omega.

    Internal impedance only: the voltage drop is the axial electric field at
    the rod surface times the length, which excludes any external inductance
    of a return loop.  Re(Z) -> DC resistance as omega -> 0 and
    Re(Z)/R_dc -> a/(2*delta) + 1/4 as a/delta grows.
    """
    if rod.omega <= 0.0:
        raise ValueError("AC impedance needs omega > 0; use dc_rod_resistance at DC")
    k = _kappa(rod)
    z = k * rod.radius
    if rod.skin_ratio <= SERIES_MAX_RATIO:
        ratio = _j0_series(z) / _j1_series(z)
    else:
        ratio = _j0_over_j1_asymptotic(z)
    return rod.length * k / (2.0 * math.pi * rod.radius * rod.sigma) * ratio


def ac_resistance_ratio(rod: RodSpec) -> float:
    """R_ac / R_dc from the series/asymptotic impedance."""
    return ac_rod_internal_impedance(rod).real / dc_rod_resistance(rod)


def rod_current_profile(rod: RodSpec, r) -> np.ndarray:
    """Axial current density shape J_z(r) = J0(k*r), normalized to 1 on axis.

    Meaningful within the series range (skin_ratio <= SERIES_MAX_RATIO); for
    much larger rods the axis value underflows and only ratios of samples
    near the surface are useful.
    """
    if rod.omega <= 0.0:
        raise ValueError("current profile needs omega > 0 (DC profile is uniform)")
    k = _kappa(rod)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r < 0.0) or np.any(r > rod.radius):
        raise ValueError("profile radius outside [0, rod.radius]")
    return np.array([_j0_series(k * ri) for ri in r], dtype=complex)


def fd_rod_impedance(rod: RodSpec, n: int | None = None) -> complex:
    """Radial finite-difference route to the same internal impedance.

    Solves E'' + E'/r = i*omega*mu*sigma*E on [0, a] with E'(0) = 0 and
    E(a) = 1, then Z = E(a)*L / I with I = sigma * int 2*pi*r*E dr.  Shares
    nothing with the Bessel series; the grid resolves the skin depth.
    """
    if rod.omega <= 0.0:
        raise ValueError("FD impedance needs omega > 0")
    delta = skin_depth(rod.sigma, rod.mu, rod.omega)
    if n is None:
        n = max(2000, int(400.0 * rod.radius / delta))
    if n % 2:
        n += 1  # Simpson weights below need an even interval count
    h = rod.radius / n
    lam = 1j * rod.omega * rod.mu * rod.sigma

    rows, cols, data = [0, 0], [0, 1], [-4.0 / h**2 - lam, 4.0 / h**2]
    # Axis row above: for smooth even E, E'' + E'/r -> 4*(E_1 - E_0)/h^2.
    rhs = np.zeros(n + 1, dtype=complex)
    for i in range(1, n):
        r_i = i * h
        rows += [i, i, i]
        cols += [i - 1, i, i + 1]
        data += [
            1.0 / h**2 - 1.0 / (2.0 * r_i * h),
            -2.0 / h**2 - lam,
            1.0 / h**2 + 1.0 / (2.0 * r_i * h),
        ]
    rows.append(n)
    cols.append(n)
    data.append(1.0)
    rhs[n] = 1.0

    A = sp.csr_matrix((np.asarray(data, dtype=complex), (rows, cols)), shape=(n + 1, n + 1))
    E = spla.spsolve(A, rhs)

    r = np.linspace(0.0, rod.radius, n + 1)
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    integral = (h / 3.0) * np.sum(w * E * r)
    current = rod.sigma * 2.0 * math.pi * integral
    return rod.length * E[n] / current
