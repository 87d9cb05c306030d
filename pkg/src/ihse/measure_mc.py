"""Monte Carlo estimation of the pathological-set measures (near-multiple
collisions, near-critical relative speeds) and ensemble phase-space volume
evolution under the multi-collision flow, checked against the product of
per-event analytic contraction factors.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Configuration, IHSEError, ModelParams, UsageError, kinetic_energy
from .jacobian_lab import BranchCrossingError, fd_determinant
from .rng import BLOCK_SIZE, block_generator, blocks, sample_generator, uniform_ball
from .scattering import CollisionKind
from .simulator import SimOptions, random_configuration, simulate
from .tct import contraction_factor

SPEED_BAND_WIDTH = "relative_speed_band"  # band 2 sqrt(e0) <= |w| <= 2 sqrt(e0)(1 + (sqrt(2)-1) mu)
SPEED_BAND_CUTOFF = "jacobian_cutoff"  # band 4 e0 <= |w|^2 < 4 e0 / (1 - mu)


@dataclass(frozen=True)
class PathologicalSetSpec:
    """Which pathological set to sample: double-proximity sets (family "E")
    or proximity-with-near-critical-speed sets (family "P"), at time-shift
    index k inside the truncated region |X| <= R1 + k*delta*R2, |V| <= R2."""

    family: str  # "E" | "P"
    n_particles: int
    k: int
    delta: float
    mu: Optional[float]
    R1: float
    R2: float
    params: ModelParams
    band: str = SPEED_BAND_WIDTH

    def __post_init__(self):
        if self.family not in ("E", "P"):
            raise UsageError("family must be 'E' or 'P'")
        if self.n_particles < 2:
            raise UsageError("need at least two particles")
        if self.k < 0:
            raise UsageError("k must be >= 0")
        if not (0 < self.delta <= 1):
            raise UsageError("delta must lie in (0, 1]")
        if self.delta > 2.0 / (3.0 * math.sqrt(2.0) * self.R2):
            raise UsageError("delta must satisfy delta <= 2 / (3 sqrt(2) R2)")
        if self.family == "P":
            if self.mu is None:
                raise UsageError("family P requires mu")
            if not (0 < self.mu <= 0.5):
                raise UsageError("mu must lie in (0, 1/2]")
        if self.R1 <= 0 or self.R2 <= 0:
            raise UsageError("R1 and R2 must be positive")
        if self.params.dimension != 2:
            raise UsageError("pathological-set estimates are defined for d=2")
        if self.band not in (SPEED_BAND_WIDTH, SPEED_BAND_CUTOFF):
            raise UsageError(f"unknown speed band form: {self.band}")

    @property
    def position_radius(self) -> float:
        return self.R1 + self.k * self.delta * self.R2


@dataclass(frozen=True)
class MeasureEstimate:
    spec: PathologicalSetSpec
    n_samples: int
    hits: int
    fraction: float
    volume: float  # fraction x sampling-box volume
    ci95: float  # binomial half-width, volume units


def ball_volume(dim: int, radius: float) -> float:
    return math.pi ** (dim / 2.0) / math.gamma(dim / 2.0 + 1.0) * radius**dim


def _pair_distances(points: np.ndarray) -> np.ndarray:
    """Pairwise distances for a block of stacked configurations,
    shape (block, n_pairs)."""
    diff = points[:, :, None, :] - points[:, None, :, :]
    dist = np.linalg.norm(diff, axis=-1)
    n = points.shape[1]
    iu = np.triu_indices(n, k=1)
    return dist[:, iu[0], iu[1]]


def _count_hits_block(spec: PathologicalSetSpec, gen: np.random.Generator, count: int) -> int:
    n, d = spec.n_particles, spec.params.dimension
    x = uniform_ball(gen, count, n * d, spec.position_radius).reshape(count, n, d)
    v = uniform_ball(gen, count, n * d, spec.R2).reshape(count, n, d)
    xdist = _pair_distances(x)
    interior = (xdist > 1.0).all(axis=1)
    if spec.family == "E":
        proximity = 1.0 + 1.5 * math.sqrt(2.0) * spec.delta * spec.R2
        hits = interior & ((xdist <= proximity).sum(axis=1) >= 2)
        return int(hits.sum())
    proximity = 1.0 + math.sqrt(2.0) * spec.delta * spec.R2
    vdist = _pair_distances(v)
    eps0 = spec.params.epsilon0
    lo = 2.0 * math.sqrt(eps0)
    if spec.band == SPEED_BAND_WIDTH:
        hi = lo * (1.0 + (math.sqrt(2.0) - 1.0) * spec.mu)
        in_band = (vdist >= lo) & (vdist <= hi)
    else:
        hi_sq = 4.0 * eps0 / (1.0 - spec.mu)
        in_band = (vdist >= lo) & (vdist**2 < hi_sq)
    hits = interior & ((xdist <= proximity) & in_band).any(axis=1)
    return int(hits.sum())


def estimate_pathological_measure(
    spec: PathologicalSetSpec,
    n_samples: int,
    seed: int,
    *,
    threads: int = 1,
    block_size: int = BLOCK_SIZE,
) -> MeasureEstimate:
    """Hit-or-miss estimate of the set's Lebesgue measure.

    Sampling is uniform on the product of stacked-norm balls
    B(0, R1 + k delta R2) x B(0, R2); draws whose configuration is not
    interior cannot belong to the set and count as misses.  Blocks are keyed
    by (seed, block index), so the result is independent of thread count and
    evaluation order.
    """
    if n_samples <= 0:
        raise UsageError("n_samples must be positive")
    work = list(blocks(n_samples, block_size))

    def run(item):
        index, count = item
        return _count_hits_block(spec, block_generator(seed, index), count)

    if threads > 1 and len(work) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            hits = sum(pool.map(run, work))
    else:
        hits = sum(run(item) for item in work)
    n, d = spec.n_particles, spec.params.dimension
    box = ball_volume(n * d, spec.position_radius) * ball_volume(n * d, spec.R2)
    fraction = hits / n_samples
    ci95 = 1.96 * math.sqrt(max(fraction * (1.0 - fraction), 0.0) / n_samples) * box
    return MeasureEstimate(spec, n_samples, hits, fraction, fraction * box, ci95)


def _flow_vector(z: np.ndarray, n: int, d: int, tau: float, params: ModelParams, opts: SimOptions) -> np.ndarray:
    cfg = Configuration.from_vector(z, n, d)
    return simulate(cfg, tau, params, opts).final.to_vector()


def _flow_signature(z: np.ndarray, n: int, d: int, tau: float, params: ModelParams, opts: SimOptions):
    cfg = Configuration.from_vector(z, n, d)
    return simulate(cfg, tau, params, opts).event_signature


def ensemble_volume_evolution(
    center: Configuration,
    radius: float,
    tau: float,
    params: ModelParams,
    opts: SimOptions = SimOptions(),
) -> tuple[float, float]:
    """(predicted, measured) local volume factor of the flow over [0, tau]
    around a trajectory.

    predicted multiplies the analytic per-event factors along the center
    trajectory: sqrt(1 - 4 eps0 / s^2) per emitting collision (d=2),
    1 per elastic collision.  measured is |det| of the finite-difference
    Jacobian of the full flow map at the center with step radius/10; every
    stencil point must reproduce the center's event sequence (same pairs,
    kinds, order), otherwise BranchCrossingError is raised so the caller can
    shrink the radius.
    """
    if radius <= 0 or tau <= 0:
        raise UsageError("radius and tau must be positive")
    report = simulate(center, tau, params, opts)
    if report.halted is not None:
        raise IHSEError(f"center trajectory halted on pathology: {report.halted.reason}")
    predicted = 1.0
    for event in report.events:
        if event.kind is CollisionKind.INELASTIC:
            if center.dimension != 2:
                raise IHSEError("analytic contraction factors for emitting collisions require d=2")
            predicted *= contraction_factor(event.rel_speed_sq, params)
    n, d = center.n_particles, center.dimension
    center_sig = report.event_signature

    def branch(z):
        return _flow_signature(z, n, d, tau, params, opts)

    if branch(center.to_vector()) != center_sig:
        raise BranchCrossingError("center signature not reproducible")
    det = fd_determinant(
        lambda z: _flow_vector(z, n, d, tau, params, opts),
        center.to_vector(),
        radius / 10.0,
        branch=branch,
    )
    return predicted, abs(det)


def low_energy_ensemble(
    seed: int,
    index: int,
    n_particles: int,
    params: ModelParams,
    *,
    r_positions: float = 4.0,
    energy_fraction_range: tuple[float, float] = (0.3, 0.95),
) -> Configuration:
    """Random interior configuration with total kinetic energy strictly
    below 2*epsilon0 (scaled into the requested fraction of that bound)."""
    cfg = random_configuration(seed, index, n_particles, params.dimension, r_positions, 1.0)
    gen = sample_generator(seed ^ 0x5DEECE66D, index)
    lo, hi = energy_fraction_range
    target = (lo + (hi - lo) * gen.random()) * 2.0 * params.epsilon0
    ke = kinetic_energy(cfg)
    if ke <= 0:
        raise IHSEError("degenerate zero-velocity draw")
    scale = math.sqrt(target / ke)
    return Configuration(cfg.positions, scale * cfg.velocities)
