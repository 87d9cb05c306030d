"""Per-pair collision prediction for unit-diameter spheres: grazing
discriminants, first-contact times over all pairs, and analytic gradients of
the first collision time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    GRAZING_TOL,
    SIMULTANEITY_TOL,
    Configuration,
    IHSEError,
    PairIndex,
    all_pairs,
)

# A pair is ignored below this root when it has just collided: post-collision
# states sit numerically on the contact sphere and would otherwise re-report
# the crossing they are leaving.
REARM_TIME = 1e-12


class GrazingCollisionError(IHSEError):
    """Tangential contact: the contact-time function has a degenerate root."""


class NoCollisionError(IHSEError):
    """Requested collision data for a pair that never reaches contact."""


@dataclass(frozen=True)
class CollisionPrediction:
    """Prediction for one pair: discriminant, earliest positive contact time
    (absent for receding, parallel, or grazing pairs), and the grazing flag."""

    pair: PairIndex
    discriminant: float
    time: Optional[float]
    grazing: bool


@dataclass(frozen=True)
class FirstCollision:
    """Earliest contact over all pairs; unique is False when a second pair
    reaches contact within the simultaneity tolerance."""

    time: float
    pair: PairIndex
    unique: bool


def grazing_discriminant(cfg: Configuration, pair: PairIndex) -> float:
    """((x_i-x_j).(v_i-v_j))^2 - |v_i-v_j|^2 (|x_i-x_j|^2 - 1).

    Positive: the pair's line of flight crosses the contact sphere
    transversally.  Zero: tangential (grazing) encounter.  Negative: the
    pair never reaches contact.
    """
    r, w = cfg.pair_state(pair)
    b = float(r @ w)
    return b * b - float(w @ w) * (float(r @ r) - 1.0)


def _quadratic_contact_roots(r: np.ndarray, w: np.ndarray) -> tuple[float, float, float, Optional[tuple[float, float]]]:
    """Roots of |r + t w|^2 = 1 as (b, a, delta, (t_small, t_large))."""
    a = float(w @ w)
    b = float(r @ w)
    delta = b * b - a * (float(r @ r) - 1.0)
    if a == 0.0 or delta < 0.0:
        return b, a, delta, None
    # Stable small/large roots: q = -b + sqrt(delta) never cancels when b < 0.
    sq = math.sqrt(delta)
    c = float(r @ r) - 1.0
    if b < 0.0:
        q = -b + sq
        return b, a, delta, (c / q, q / a)
    q = -b - sq  # b >= 0: both roots <= 0 when c >= 0
    if q == 0.0:
        return b, a, delta, (0.0, 0.0)
    return b, a, delta, (q / a, c / q)


def predict_pair(cfg: Configuration, pair: PairIndex, grazing_tol: float = GRAZING_TOL) -> CollisionPrediction:
    """Full prediction record for one pair."""
    r, w = cfg.pair_state(pair)
    b, a, delta, roots = _quadratic_contact_roots(r, w)
    grazing = abs(delta) <= grazing_tol
    if grazing or roots is None or delta <= grazing_tol:
        return CollisionPrediction(pair, delta, None, grazing)
    t_small, t_large = roots
    time = None
    if t_small > 0.0:
        time = t_small
    elif t_large > 0.0:
        # Interior configurations never reach this branch; kept so the
        # prediction is meaningful for states inside the contact sphere.
        time = t_large
    return CollisionPrediction(pair, delta, time, False)


def pair_collision_time(cfg: Configuration, pair: PairIndex, grazing_tol: float = GRAZING_TOL) -> Optional[float]:
    """Smallest strictly positive contact time of the pair, or None.

    None when the pair recedes, moves in parallel, or the encounter is
    grazing (|discriminant| <= grazing_tol).
    """
    return predict_pair(cfg, pair, grazing_tol).time


def first_collision(
    cfg: Configuration,
    horizon: float,
    simultaneity_tol: float = SIMULTANEITY_TOL,
    *,
    grazing_tol: float = GRAZING_TOL,
    recent_pair: Optional[PairIndex] = None,
    rearm_time: float = REARM_TIME,
) -> Optional[FirstCollision]:
    """Earliest pair contact within the horizon.

    Pairs are scanned in lexicographic order and ties are broken toward the
    earlier pair before the simultaneity tolerance is applied.  For
    recent_pair (the pair that scattered last), roots at or below rearm_time
    are discarded; its members sit exactly on the contact sphere.
    """
    if horizon <= 0:
        raise NoCollisionError("horizon must be positive")
    best: Optional[FirstCollision] = None
    second: Optional[float] = None
    for pair in all_pairs(cfg.n_particles):
        time = pair_collision_time(cfg, pair, grazing_tol)
        if time is None:
            continue
        if recent_pair is not None and pair == recent_pair and time <= rearm_time:
            continue
        if best is None or time < best.time:
            second = None if best is None else best.time
            best = FirstCollision(time, pair, True)
        elif second is None or time < second:
            second = time
    if best is None or best.time > horizon:
        return None
    if second is not None and second - best.time <= simultaneity_tol:
        return FirstCollision(best.time, best.pair, False)
    return best


def collision_time_gradients(
    cfg: Configuration, pair: PairIndex, grazing_tol: float = GRAZING_TOL
) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradients of the pair's contact time with respect to all
    positions and all velocities, as flat length-(N*d) vectors.

    Only the two colliding particles carry nonzero entries:
    grad wrt x_i is -omega / ((v_i - v_j) . omega) with omega the unit
    contact vector, grad wrt x_j its negative, and the velocity gradient is
    the position gradient scaled by the contact time.
    """
    prediction = predict_pair(cfg, pair, grazing_tol)
    if prediction.grazing:
        raise GrazingCollisionError(f"pair {pair.as_list()} is grazing; contact time is not differentiable")
    if prediction.time is None:
        raise NoCollisionError(f"pair {pair.as_list()} has no upcoming contact")
    tau = prediction.time
    r, w = cfg.pair_state(pair)
    contact = r + tau * w
    omega = contact / np.linalg.norm(contact)
    denom = float(w @ omega)
    if denom == 0.0:
        raise GrazingCollisionError(f"pair {pair.as_list()}: relative velocity tangent to contact sphere")
    n, d = cfg.n_particles, cfg.dimension
    grad_x = np.zeros(n * d)
    i, j = pair.zero_based()
    grad_x[i * d : (i + 1) * d] = -omega / denom
    grad_x[j * d : (j + 1) * d] = omega / denom
    return grad_x, tau * grad_x
