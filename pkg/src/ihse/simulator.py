"""Event-driven multi-collision dynamics on [0, T]: iterated advance-scatter
steps with an energy ledger, collision counting, pathology detection, and
collision-count bound checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    CRIT_TOL,
    GRAZING_TOL,
    MAX_EVENTS,
    SIMULTANEITY_TOL,
    Configuration,
    IHSEError,
    ModelParams,
    PairIndex,
    UsageError,
    all_pairs,
    free_transport,
    kinetic_energy,
    validate_configuration,
)
from .collision import REARM_TIME, first_collision
from .rng import sample_generator, uniform_ball
from .scattering import CollisionKind, scatter
from .tct import contact_direction

PATHOLOGY_SIMULTANEOUS = "simultaneous"
PATHOLOGY_GRAZING = "grazing"
PATHOLOGY_CRITICAL_ENERGY = "critical_energy"
PATHOLOGY_MAX_EVENTS = "max_events"


@dataclass(frozen=True)
class SimOptions:
    grazing_tol: float = GRAZING_TOL
    simultaneity_tol: float = SIMULTANEITY_TOL
    crit_tol: float = CRIT_TOL
    max_events: int = MAX_EVENTS
    n_checkpoints: int = 100
    rearm_time: float = REARM_TIME


@dataclass(frozen=True)
class SimEvent:
    time: float
    pair: PairIndex
    kind: CollisionKind
    ke_before: float
    ke_after: float
    rel_speed_sq: float  # pre-collisional |v_i - v_j|^2


@dataclass(frozen=True)
class Pathology:
    reason: str
    time: float


@dataclass(frozen=True)
class SimReport:
    events: tuple[SimEvent, ...]
    final: Configuration
    n_elastic: int
    n_inelastic: int
    min_separation: float
    halted: Optional[Pathology] = None

    @property
    def event_signature(self) -> tuple:
        """Hashable (pair, kind) sequence; used as a branch label when
        differentiating the multi-collision flow map."""
        sig = tuple((e.pair.i, e.pair.j, e.kind.value) for e in self.events)
        if self.halted is not None:
            sig = sig + (("halted", self.halted.reason),)
        return sig


@dataclass(frozen=True)
class BoundCheck:
    """Margins of the run against the a-priori collision-count bounds."""

    inelastic_count: int
    inelastic_limit: int
    inelastic_margin: int
    inelastic_ok: bool
    event_count: int
    event_limit: int
    event_margin: int
    events_ok: bool


def _grazing_encounter_time(cfg: Configuration, horizon: float, grazing_tol: float) -> Optional[float]:
    """Earliest tangential encounter inside (0, horizon], if any."""
    earliest = None
    for pair in all_pairs(cfg.n_particles):
        r, w = cfg.pair_state(pair)
        a = float(w @ w)
        b = float(r @ w)
        if a == 0.0 or b >= 0.0:
            continue
        delta = b * b - a * (float(r @ r) - 1.0)
        if abs(delta) <= grazing_tol:
            t_graze = -b / a
            if 0.0 < t_graze <= horizon and (earliest is None or t_graze < earliest):
                earliest = t_graze
    return earliest


def simulate(cfg: Configuration, T: float, params: ModelParams, opts: SimOptions = SimOptions()) -> SimReport:
    """Run the event-driven dynamics from an interior configuration to time T.

    Each step advances to the earliest pair contact, applies the dispatched
    collision law, and continues.  Near-simultaneous distinct-pair contacts,
    grazing encounters, relative speeds inside the critical band, and event
    count overflow halt the run with an in-band pathology record.
    """
    if T <= 0:
        raise UsageError("T must be positive")
    if not validate_configuration(cfg).is_interior:
        raise UsageError("initial configuration must be interior (all gaps > 1)")
    checkpoint_times = [T * (k + 1) / opts.n_checkpoints for k in range(opts.n_checkpoints)]
    events: list[SimEvent] = []
    min_sep = cfg.min_separation()
    state = cfg
    now = 0.0
    recent: Optional[PairIndex] = None
    halted: Optional[Pathology] = None
    next_checkpoint = 0

    def advance_through(segment_end: float):
        """Free-transport bookkeeping for checkpoints inside the segment."""
        nonlocal next_checkpoint, min_sep
        while next_checkpoint < len(checkpoint_times) and checkpoint_times[next_checkpoint] <= segment_end + 1e-15:
            probe = free_transport(state, checkpoint_times[next_checkpoint] - now)
            min_sep = min(min_sep, probe.min_separation())
            next_checkpoint += 1

    while True:
        remaining = T - now
        if remaining <= 0:
            break
        t_graze = _grazing_encounter_time(state, remaining, opts.grazing_tol)
        fc = first_collision(
            state,
            remaining,
            opts.simultaneity_tol,
            grazing_tol=opts.grazing_tol,
            recent_pair=recent,
            rearm_time=opts.rearm_time,
        )
        if t_graze is not None and (fc is None or t_graze <= fc.time):
            halted = Pathology(PATHOLOGY_GRAZING, now + t_graze)
            break
        if fc is None:
            advance_through(T)
            state = free_transport(state, remaining)
            now = T
            break
        if not fc.unique:
            halted = Pathology(PATHOLOGY_SIMULTANEOUS, now + fc.time)
            break
        advance_through(now + fc.time)
        state = free_transport(state, fc.time)
        now += fc.time
        min_sep = min(min_sep, state.min_separation())
        i, j = fc.pair.zero_based()
        w = state.velocities[i] - state.velocities[j]
        w2 = float(w @ w)
        if abs(w2 - 4.0 * params.epsilon0) <= opts.crit_tol:
            halted = Pathology(PATHOLOGY_CRITICAL_ENERGY, now)
            break
        ke_before = kinetic_energy(state)
        omega = contact_direction(state, fc.pair)
        outcome = scatter(
            state.velocities[i],
            state.velocities[j],
            omega,
            params,
            crit_tol=opts.crit_tol,
            grazing_tol=opts.grazing_tol,
        )
        velocities = state.velocities.copy()
        velocities[i] = outcome.v_i_post
        velocities[j] = outcome.v_j_post
        state = Configuration(state.positions, velocities)
        ke_after = kinetic_energy(state)
        events.append(SimEvent(now, fc.pair, outcome.kind, ke_before, ke_after, w2))
        recent = fc.pair
        if len(events) >= opts.max_events:
            halted = Pathology(PATHOLOGY_MAX_EVENTS, now)
            break

    n_inelastic = sum(1 for e in events if e.kind is CollisionKind.INELASTIC)
    return SimReport(
        events=tuple(events),
        final=state,
        n_elastic=len(events) - n_inelastic,
        n_inelastic=n_inelastic,
        min_separation=min_sep,
        halted=halted,
    )


def check_collision_bounds(report: SimReport, params: ModelParams, initial: Configuration, opts: SimOptions = SimOptions()) -> BoundCheck:
    """Check the run against the a-priori bounds: the number of emitting
    collisions cannot exceed floor(KE_initial / epsilon0) (each removes
    exactly epsilon0), and the total event count must stay below the
    configured ceiling (empirical finiteness)."""
    ke0 = kinetic_energy(initial)
    ratio = ke0 / params.epsilon0
    inelastic_limit = int(math.floor(ratio)) if math.isfinite(ratio) else 0
    event_count = len(report.events)
    return BoundCheck(
        inelastic_count=report.n_inelastic,
        inelastic_limit=inelastic_limit,
        inelastic_margin=inelastic_limit - report.n_inelastic,
        inelastic_ok=report.n_inelastic <= inelastic_limit,
        event_count=event_count,
        event_limit=opts.max_events,
        event_margin=opts.max_events - event_count,
        events_ok=event_count < opts.max_events,
    )


def random_configuration(
    seed: int,
    index: int,
    n_particles: int,
    dimension: int,
    r_positions: float,
    r_velocities: float,
    *,
    min_gap: float = 1.0 + 1e-9,
    max_tries: int = 10000,
) -> Configuration:
    """Interior configuration with the stacked position vector drawn
    uniformly from the ball |X| <= r_positions (rejection sampled for
    pairwise gaps) and the stacked velocity vector uniform in
    |V| <= r_velocities."""
    gen = sample_generator(seed, index)
    dof = n_particles * dimension
    for _ in range(max_tries):
        x = uniform_ball(gen, 1, dof, r_positions)[0].reshape(n_particles, dimension)
        cfg_ok = True
        for a in range(n_particles):
            for b in range(a + 1, n_particles):
                if float(np.linalg.norm(x[a] - x[b])) <= min_gap:
                    cfg_ok = False
                    break
            if not cfg_ok:
                break
        if cfg_ok:
            v = uniform_ball(gen, 1, dof, r_velocities)[0].reshape(n_particles, dimension)
            return Configuration(x, v)
    raise IHSEError(
        f"could not place {n_particles} interior particles in |X| <= {r_positions} within the retry budget"
    )


def collision_rich_configuration(
    seed: int,
    index: int,
    n_particles: int,
    dimension: int,
    r_positions: float,
    r_velocities: float,
    inward_bias: float,
) -> Configuration:
    """Random interior configuration whose velocities carry a drift toward
    the cluster center, so desk-scale runs typically see several collisions
    before the particles disperse."""
    cfg = random_configuration(seed, index, n_particles, dimension, r_positions, r_velocities)
    center = cfg.positions.mean(axis=0)
    velocities = cfg.velocities.copy()
    for k in range(n_particles):
        towards = center - cfg.positions[k]
        norm = float(np.linalg.norm(towards))
        if norm > 1e-9:
            velocities[k] = velocities[k] + inward_bias * towards / norm
    return Configuration(cfg.positions, velocities)
