"""Binary collision laws at fixed contact geometry.

Two laws share the dispatch threshold |v_i - v_j|^2 = 4*eps0: above it the
pair emits, losing exactly eps0 of kinetic energy while every component of
the relative velocity is rescaled by the same factor; at or below it the
collision is the standard elastic exchange of normal components.  The
emitting law is also provided in its center-of-mass radial form.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import CRIT_TOL, GRAZING_TOL, IHSEError, ModelParams, UsageError

UNIT_NORM_TOL = 1e-12
ZERO_RELATIVE_SPEED = 1e-14


class CollisionKind(enum.Enum):
    ELASTIC = "elastic"
    INELASTIC = "inelastic"


class CriticalEnergyError(IHSEError):
    """Relative speed within the excluded band around the emission threshold."""


class NotPreCollisionalError(IHSEError):
    """The pair is not approaching along the contact direction."""


class GrazingContactError(IHSEError):
    """Relative velocity nearly tangent to the contact plane."""


class ZeroRelativeVelocityError(IHSEError):
    """Coinciding velocities leave the emission direction undefined."""


class BelowThresholdError(IHSEError):
    """Radial emission requested below the energy threshold."""


@dataclass(frozen=True)
class ScatteringOutcome:
    """Post-collisional velocities with the geometry and energy bookkeeping
    of the collision that produced them."""

    kind: CollisionKind
    omega: np.ndarray
    sigma: Optional[np.ndarray]
    kappa: Optional[float]
    v_i_post: np.ndarray
    v_j_post: np.ndarray
    energy_loss: float


@dataclass(frozen=True)
class RadialCoordinates:
    """Center-of-mass relative velocity in polar (d=2) or spherical (d=3)
    coordinates; theta is latitude in [-pi/2, pi/2] and phi azimuth."""

    rho: float
    theta: float
    phi: Optional[float] = None

    def __post_init__(self):
        if not self.rho > 0:
            raise UsageError("rho must be positive")
        if self.phi is not None:
            if not -math.pi / 2 <= self.theta <= math.pi / 2:
                raise UsageError("theta must lie in [-pi/2, pi/2] for d=3")
            if not 0 <= self.phi < 2 * math.pi:
                raise UsageError("phi must lie in [0, 2*pi)")

    @property
    def dimension(self) -> int:
        return 2 if self.phi is None else 3


def _check_unit(omega: np.ndarray):
    if abs(float(omega @ omega) - 1.0) > 2 * UNIT_NORM_TOL:
        raise UsageError("omega must be a unit vector")


def sigma_direction(v_i, v_j, omega) -> np.ndarray:
    """Reflection of the normalized relative velocity (v_j - v_i)/|v_j - v_i|
    through the plane orthogonal to omega; always unit norm."""
    v_i = np.asarray(v_i, dtype=float)
    v_j = np.asarray(v_j, dtype=float)
    omega = np.asarray(omega, dtype=float)
    _check_unit(omega)
    w = v_j - v_i
    speed = float(np.linalg.norm(w))
    if speed < ZERO_RELATIVE_SPEED:
        raise ZeroRelativeVelocityError("relative velocity is zero")
    u = w / speed
    return u - 2.0 * float(u @ omega) * omega


def elastic_reflection(v_i, v_j, omega) -> tuple[np.ndarray, np.ndarray]:
    """Elastic exchange of the normal velocity components (unguarded)."""
    v_i = np.asarray(v_i, dtype=float)
    v_j = np.asarray(v_j, dtype=float)
    omega = np.asarray(omega, dtype=float)
    transfer = float((v_i - v_j) @ omega) * omega
    return v_i - transfer, v_j + transfer


def inelastic_emission(v_i, v_j, omega, epsilon0: float) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Emitting collision (unguarded): returns (v_i', v_j', sigma, kappa).

    Post-collisional velocities are mean -/+ sigma*kappa with
    kappa = sqrt(|v_j - v_i|^2 / 4 - epsilon0); requires |v_j-v_i|^2 > 4*eps0.
    """
    v_i = np.asarray(v_i, dtype=float)
    v_j = np.asarray(v_j, dtype=float)
    w2 = float((v_j - v_i) @ (v_j - v_i))
    if not w2 / 4.0 - epsilon0 > 0.0:
        raise BelowThresholdError("relative speed below the emission threshold")
    sigma = sigma_direction(v_i, v_j, omega)
    kappa = math.sqrt(w2 / 4.0 - epsilon0)
    mean = 0.5 * (v_i + v_j)
    return mean - sigma * kappa, mean + sigma * kappa, sigma, kappa


def scatter(
    v_i,
    v_j,
    omega,
    params: ModelParams,
    *,
    crit_tol: float = CRIT_TOL,
    grazing_tol: float = GRAZING_TOL,
) -> ScatteringOutcome:
    """Dispatched collision law for a genuinely pre-collisional pair.

    Emits (losing exactly epsilon0 of kinetic energy) when the squared
    relative speed exceeds 4*epsilon0, reflects elastically otherwise.
    Raises on contact that is not pre-collisional, grazing contact, or a
    squared relative speed inside the excluded band 4*epsilon0 +/- crit_tol.
    """
    v_i = np.asarray(v_i, dtype=float)
    v_j = np.asarray(v_j, dtype=float)
    omega = np.asarray(omega, dtype=float)
    _check_unit(omega)
    w = v_j - v_i
    w2 = float(w @ w)
    approach = float(w @ omega)
    if approach >= 0.0:
        raise NotPreCollisionalError("pair is not approaching along the contact direction")
    if abs(approach) < grazing_tol * math.sqrt(w2):
        raise GrazingContactError("contact is grazing")
    if abs(w2 - 4.0 * params.epsilon0) <= crit_tol:
        raise CriticalEnergyError("relative speed inside the critical band around the emission threshold")
    ke_pre = 0.5 * (float(v_i @ v_i) + float(v_j @ v_j))
    if w2 > 4.0 * params.epsilon0:
        vi_post, vj_post, sigma, kappa = inelastic_emission(v_i, v_j, omega, params.epsilon0)
        kind, sig, kap = CollisionKind.INELASTIC, sigma, kappa
    else:
        vi_post, vj_post = elastic_reflection(v_i, v_j, omega)
        kind, sig, kap = CollisionKind.ELASTIC, None, None
    ke_post = 0.5 * (float(vi_post @ vi_post) + float(vj_post @ vj_post))
    return ScatteringOutcome(
        kind=kind,
        omega=omega,
        sigma=sig,
        kappa=kap,
        v_i_post=vi_post,
        v_j_post=vj_post,
        energy_loss=ke_pre - ke_post,
    )


def radial_emission_map(coords: RadialCoordinates, params: ModelParams) -> RadialCoordinates:
    """Center-of-mass form of the emitting collision.

    d=2: (rho, theta) -> (sqrt(rho^2 - 4 eps0), -theta), exactly the
    dispatched law conjugated into polar coordinates about the contact
    plane.  d=3: (rho, theta, phi) -> ((rho^3 - 4 eps0)^(1/3), -theta, phi),
    the cubic-radius variant whose induced Cartesian map is measure
    preserving in three dimensions.
    """
    eps0 = params.epsilon0
    if coords.dimension == 2:
        if not coords.rho**2 > 4.0 * eps0:
            raise BelowThresholdError("rho^2 must exceed 4*epsilon0")
        return RadialCoordinates(math.sqrt(coords.rho**2 - 4.0 * eps0), -coords.theta)
    if not coords.rho**3 > 4.0 * eps0:
        raise BelowThresholdError("rho^3 must exceed 4*epsilon0")
    return RadialCoordinates((coords.rho**3 - 4.0 * eps0) ** (1.0 / 3.0), -coords.theta, coords.phi)


def spherical_to_cartesian(coords: RadialCoordinates) -> np.ndarray:
    """Cartesian vector for d=3 spherical coordinates (latitude convention)."""
    if coords.dimension != 3:
        raise UsageError("expected d=3 coordinates")
    ct = math.cos(coords.theta)
    return coords.rho * np.array([ct * math.cos(coords.phi), ct * math.sin(coords.phi), math.sin(coords.theta)])


def cartesian_to_spherical(v) -> RadialCoordinates:
    """Inverse of spherical_to_cartesian; phi normalized into [0, 2*pi)."""
    v = np.asarray(v, dtype=float)
    rho = float(np.linalg.norm(v))
    if rho <= 0:
        raise UsageError("zero vector has no spherical representation")
    theta = math.asin(max(-1.0, min(1.0, v[2] / rho)))
    phi = math.atan2(v[1], v[0]) % (2 * math.pi)
    return RadialCoordinates(rho, theta, phi)


def emission_map_cartesian_3d(v, params: ModelParams) -> np.ndarray:
    """Cartesian form of the d=3 radial emission map: rescale the radius to
    (rho^3 - 4 eps0)^(1/3) and mirror the z component (theta -> -theta)."""
    v = np.asarray(v, dtype=float)
    rho = float(np.linalg.norm(v))
    if not rho**3 > 4.0 * params.epsilon0:
        raise BelowThresholdError("rho^3 must exceed 4*epsilon0")
    scale = (rho**3 - 4.0 * params.epsilon0) ** (1.0 / 3.0) / rho
    return scale * np.array([v[0], v[1], -v[2]])


def scattering_velocity_jacobian(v_i, v_j, omega, params: ModelParams) -> np.ndarray:
    """Analytic Jacobian of the velocity map (v_i, v_j) -> (v_i', v_j') at
    fixed contact direction, as a 2d x 2d matrix in block form
    [[B+, B-], [B-, B+]] with B+/- = I/2 +/- A.

    For the elastic branch A = I/2 - omega (x) omega.  For the emitting
    branch, with w = v_j - v_i, u = w/|w| and kappa^2 = |w|^2/4 - eps0:

        A = (kappa/|w|) [ I + (|w|^2/(4 kappa^2) - 1) u(x)u
                            + (u.omega)(2 - |w|^2/(2 kappa^2)) omega(x)u
                            - 2 omega(x)omega ]
    """
    v_i = np.asarray(v_i, dtype=float)
    v_j = np.asarray(v_j, dtype=float)
    omega = np.asarray(omega, dtype=float)
    d = omega.shape[0]
    ident = np.eye(d)
    w = v_j - v_i
    w2 = float(w @ w)
    if w2 > 4.0 * params.epsilon0:
        speed = math.sqrt(w2)
        u = w / speed
        kappa_sq = w2 / 4.0 - params.epsilon0
        kappa = math.sqrt(kappa_sq)
        a_mat = (kappa / speed) * (
            ident
            + (w2 / (4.0 * kappa_sq) - 1.0) * np.outer(u, u)
            + float(u @ omega) * (2.0 - w2 / (2.0 * kappa_sq)) * np.outer(omega, u)
            - 2.0 * np.outer(omega, omega)
        )
    else:
        a_mat = 0.5 * ident - np.outer(omega, omega)
    b_plus = 0.5 * ident + a_mat
    b_minus = 0.5 * ident - a_mat
    return np.block([[b_plus, b_minus], [b_minus, b_plus]])


def scattering_velocity_det_analytic(v_i, v_j, omega, params: ModelParams) -> float:
    """det of the analytic scattering Jacobian, computed as det(2A) from the
    assembled block structure (row reduction of [[I/2+A, I/2-A], ...])."""
    jac = scattering_velocity_jacobian(v_i, v_j, omega, params)
    d = np.asarray(omega).shape[0]
    two_a = jac[:d, :d] - jac[:d, d:]  # (I/2 + A) - (I/2 - A)
    return float(np.linalg.det(two_a))
