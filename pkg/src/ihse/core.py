"""Domain types for systems of unit-diameter spheres: configurations,
phase-space membership, free transport, and conserved-quantity diagnostics.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

# Default numerical tolerances.  Lengths are in units of the particle
# diameter, which is fixed at 1, so absolute tolerances are meaningful.
CONTACT_TOL = 1e-9
GRAZING_TOL = 1e-12
SIMULTANEITY_TOL = 1e-10
CRIT_TOL = 1e-10
FD_STEP = 1e-6
MAX_EVENTS = 10**6


class IHSEError(Exception):
    """Base class for errors raised by this package."""


class UsageError(IHSEError):
    """Invalid arguments: wrong shapes, non-finite input, bad parameters."""


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerance block shared by the CLI and the experiments."""

    grazing_tol: float = GRAZING_TOL
    simultaneity_tol: float = SIMULTANEITY_TOL
    crit_tol: float = CRIT_TOL
    fd_step: float = FD_STEP
    max_events: int = MAX_EVENTS

    def __post_init__(self):
        for name in ("grazing_tol", "simultaneity_tol", "crit_tol", "fd_step"):
            if not getattr(self, name) > 0:
                raise UsageError(f"{name} must be positive")
        if self.max_events <= 0:
            raise UsageError("max_events must be positive")


@dataclass(frozen=True)
class ModelParams:
    """Model parameters: energy quantum lost per emitting collision and the
    spatial dimension.  The particle diameter is fixed at 1.

    ``epsilon0 = math.inf`` is the elastic-only sentinel: every collision
    falls below the emission threshold.
    """

    epsilon0: float
    dimension: int = 2
    diameter: float = 1.0

    def __post_init__(self):
        if not self.epsilon0 > 0:
            raise UsageError("epsilon0 must be > 0")
        if self.dimension < 2 or self.dimension != int(self.dimension):
            raise UsageError("dimension must be an integer >= 2")
        if self.diameter != 1.0:
            raise UsageError("diameter is normalized to 1")


@dataclass(frozen=True, order=True)
class PairIndex:
    """Ordered particle pair, 1-based, i < j."""

    i: int
    j: int

    def __post_init__(self):
        if not (1 <= self.i < self.j):
            raise UsageError(f"pair indices must satisfy 1 <= i < j, got ({self.i}, {self.j})")

    def zero_based(self) -> tuple[int, int]:
        return self.i - 1, self.j - 1

    def involves(self, other: "PairIndex") -> bool:
        """True when the two pairs share at least one particle."""
        return len({self.i, self.j} & {other.i, other.j}) > 0

    def as_list(self) -> list[int]:
        return [self.i, self.j]


def all_pairs(n: int) -> list[PairIndex]:
    """All ordered pairs (i, j), 1 <= i < j <= n, in lexicographic order."""
    return [PairIndex(i, j) for i, j in combinations(range(1, n + 1), 2)]


class Configuration:
    """Positions and velocities of N spheres in dimension d.

    Arrays are stored as float64 with shape (N, d) and frozen after
    construction; all operations on configurations return new objects.
    """

    __slots__ = ("positions", "velocities")

    def __init__(self, positions, velocities):
        x = np.array(positions, dtype=float)
        v = np.array(velocities, dtype=float)
        if x.ndim != 2 or v.shape != x.shape:
            raise UsageError(f"positions/velocities must share shape (N, d), got {x.shape} and {v.shape}")
        if x.shape[0] < 1:
            raise UsageError("need at least one particle")
        if x.shape[1] < 1:
            raise UsageError("dimension must be >= 1")
        if not (np.isfinite(x).all() and np.isfinite(v).all()):
            raise UsageError("positions and velocities must be finite")
        x.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "positions", x)
        object.__setattr__(self, "velocities", v)

    def __setattr__(self, name, value):
        raise AttributeError("Configuration is immutable")

    @property
    def n_particles(self) -> int:
        return self.positions.shape[0]

    @property
    def dimension(self) -> int:
        return self.positions.shape[1]

    def pair_state(self, pair: PairIndex):
        """Relative position x_i - x_j and relative velocity v_i - v_j."""
        i, j = pair.zero_based()
        return self.positions[i] - self.positions[j], self.velocities[i] - self.velocities[j]

    def separation(self, pair: PairIndex) -> float:
        r, _ = self.pair_state(pair)
        return float(np.linalg.norm(r))

    def min_separation(self) -> float:
        n = self.n_particles
        if n == 1:
            return math.inf
        diff = self.positions[:, None, :] - self.positions[None, :, :]
        dist = np.linalg.norm(diff, axis=-1)
        iu = np.triu_indices(n, k=1)
        return float(dist[iu].min())

    def to_vector(self) -> np.ndarray:
        """Flat phase-space vector: positions then velocities, particle-major."""
        return np.concatenate([self.positions.ravel(), self.velocities.ravel()])

    @staticmethod
    def from_vector(z, n_particles: int, dimension: int) -> "Configuration":
        z = np.asarray(z, dtype=float)
        m = n_particles * dimension
        if z.shape != (2 * m,):
            raise UsageError(f"expected vector of length {2 * m}, got shape {z.shape}")
        return Configuration(z[:m].reshape(n_particles, dimension), z[m:].reshape(n_particles, dimension))

    def to_json_dict(self) -> dict:
        return {
            "d": self.dimension,
            "particles": [
                {"x": list(self.positions[k]), "v": list(self.velocities[k])}
                for k in range(self.n_particles)
            ],
        }

    @staticmethod
    def from_json_dict(doc: dict) -> "Configuration":
        try:
            d = int(doc["d"])
            particles = doc["particles"]
            x = [p["x"] for p in particles]
            v = [p["v"] for p in particles]
        except (KeyError, TypeError) as exc:
            raise UsageError(f"malformed configuration document: {exc}") from exc
        cfg = Configuration(x, v)
        if cfg.dimension != d:
            raise UsageError(f"declared dimension {d} does not match particle data ({cfg.dimension})")
        return cfg

    def __eq__(self, other):
        return (
            isinstance(other, Configuration)
            and np.array_equal(self.positions, other.positions)
            and np.array_equal(self.velocities, other.velocities)
        )

    def __repr__(self):
        return f"Configuration(N={self.n_particles}, d={self.dimension})"


class DomainKind(enum.Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"
    INVALID = "invalid"


@dataclass(frozen=True)
class DomainStatus:
    """Phase-space membership: interior (all gaps > 1), boundary (some pair
    at contact within tolerance), or invalid (overlapping pair)."""

    kind: DomainKind
    pairs: tuple[PairIndex, ...] = field(default=())

    @property
    def is_interior(self) -> bool:
        return self.kind is DomainKind.INTERIOR


def validate_configuration(cfg: Configuration, tol: float = CONTACT_TOL) -> DomainStatus:
    """Classify a configuration against the hard-sphere domain.

    Interior when every pair separation exceeds 1 + tol; boundary pairs have
    | |x_i - x_j| - 1 | <= tol; invalid pairs overlap by more than tol.
    Invalid takes precedence over boundary.
    """
    if tol < 0:
        raise UsageError("tol must be >= 0")
    boundary, invalid = [], []
    for pair in all_pairs(cfg.n_particles):
        s = cfg.separation(pair)
        if abs(s - 1.0) <= tol:
            boundary.append(pair)
        elif s < 1.0 - tol:
            invalid.append(pair)
    if invalid:
        return DomainStatus(DomainKind.INVALID, tuple(invalid))
    if boundary:
        return DomainStatus(DomainKind.BOUNDARY, tuple(boundary))
    return DomainStatus(DomainKind.INTERIOR)


def free_transport(cfg: Configuration, t: float) -> Configuration:
    """Straight-line transport by time t (may be negative); no collision check."""
    if not math.isfinite(t):
        raise UsageError("transport time must be finite")
    return Configuration(cfg.positions + t * cfg.velocities, cfg.velocities)


def conserved_quantities(cfg: Configuration) -> tuple[np.ndarray, float]:
    """Total momentum (d-vector) and kinetic energy sum |v_i|^2 / 2."""
    momentum = cfg.velocities.sum(axis=0)
    kinetic = 0.5 * float((cfg.velocities**2).sum())
    return momentum, kinetic


def kinetic_energy(cfg: Configuration) -> float:
    return conserved_quantities(cfg)[1]
