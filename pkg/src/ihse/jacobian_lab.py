"""Independent numerical oracles: central finite-difference Jacobians with
branch-crossing detection, the planar tensor-sum determinant identity, and
end-to-end comparisons of analytic versus finite-difference determinants for
both the scattering map and the full one-collision flow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import FD_STEP, Configuration, IHSEError, ModelParams, PairIndex, free_transport
from .collision import first_collision, predict_pair
from .rng import sample_generator, unit_vector
from .scattering import (
    CollisionKind,
    elastic_reflection,
    inelastic_emission,
    scattering_velocity_det_analytic,
)
from .tct import (
    ExcludedConfigurationError,
    UnsupportedDimensionError,
    analytic_flow_jacobian_det,
    classify_tct_domain,
    tct_flow,
)


class BranchCrossingError(IHSEError):
    """A finite-difference stencil point classified differently from the
    stencil center, so the difference quotient spans a discontinuity."""


class NonFiniteError(IHSEError):
    """A map evaluation produced a non-finite value."""


class UnreliableStencilError(IHSEError):
    """Step-halving disagreement too large: the stencil is untrustworthy."""


@dataclass(frozen=True)
class JacobianReport:
    """Analytic vs finite-difference determinant comparison for one input."""

    analytic_det: Optional[float]
    fd_det: float
    prefactor: Optional[float]
    det_N_fd: Optional[float]
    residual: Optional[float]
    step: float

    @staticmethod
    def build(analytic_det, fd_det, prefactor, det_n_fd, step) -> "JacobianReport":
        residual = None
        if analytic_det is not None:
            residual = abs(analytic_det - fd_det) / max(1.0, abs(fd_det))
        return JacobianReport(analytic_det, fd_det, prefactor, det_n_fd, residual, step)


@dataclass(frozen=True)
class TensorLemmaCase:
    """Planar determinant identity input: det(I + lam u(x)u + mu u(x)w +
    nu w(x)w) against its closed form."""

    lam: float
    mu: float
    nu: float
    u: np.ndarray
    omega: np.ndarray


def fd_jacobian(
    fn: Callable[[np.ndarray], np.ndarray],
    point,
    h: float = FD_STEP,
    *,
    branch: Optional[Callable[[np.ndarray], object]] = None,
) -> np.ndarray:
    """Central-difference Jacobian of fn at point, one column per input
    coordinate, shape (outputs, inputs).

    When a branch callback is given, every stencil point must report the
    same label as the center; a mismatch raises BranchCrossingError rather
    than differencing across a discontinuity.
    """
    point = np.asarray(point, dtype=float)
    if point.ndim != 1:
        raise IHSEError("point must be a flat vector")
    if not h > 0:
        raise IHSEError("step h must be positive")
    center_label = branch(point) if branch is not None else None
    columns = []
    for k in range(point.size):
        offset = np.zeros_like(point)
        offset[k] = h
        plus, minus = point + offset, point - offset
        if branch is not None:
            for stencil in (plus, minus):
                if branch(stencil) != center_label:
                    raise BranchCrossingError(
                        f"stencil point along coordinate {k} crosses a classification boundary"
                    )
        f_plus, f_minus = np.asarray(fn(plus), float), np.asarray(fn(minus), float)
        if not (np.isfinite(f_plus).all() and np.isfinite(f_minus).all()):
            raise NonFiniteError(f"non-finite map value on the stencil of coordinate {k}")
        columns.append((f_plus - f_minus) / (2.0 * h))
    return np.array(columns).T


def fd_determinant(
    fn,
    point,
    h: float = FD_STEP,
    *,
    branch=None,
    refine: bool = True,
    disagreement_tol: float = 0.1,
) -> float:
    """Determinant of the finite-difference Jacobian.

    With refine=True the determinant is computed at steps h and h/2 and
    Richardson-extrapolated; a relative disagreement beyond
    disagreement_tol flags the stencil as unreliable.
    """
    det_h = float(np.linalg.det(fd_jacobian(fn, point, h, branch=branch)))
    if not refine:
        return det_h
    det_half = float(np.linalg.det(fd_jacobian(fn, point, h / 2.0, branch=branch)))
    if abs(det_h - det_half) > disagreement_tol * max(1.0, abs(det_half)):
        raise UnreliableStencilError(
            f"determinants at h and h/2 disagree: {det_h} vs {det_half}"
        )
    return (4.0 * det_half - det_h) / 3.0


def tensor_sum_det(case: TensorLemmaCase) -> tuple[float, float]:
    """(closed form, direct 2x2 determinant) of
    I + lam u(x)u + mu u(x)omega + nu omega(x)omega."""
    u = np.asarray(case.u, dtype=float)
    w = np.asarray(case.omega, dtype=float)
    if u.shape != (2,) or w.shape != (2,):
        raise IHSEError("the tensor-sum identity is planar: u and omega must be 2-vectors")
    cross = u[0] * w[1] - u[1] * w[0]
    formula = (
        1.0
        + case.lam * float(u @ u)
        + case.mu * float(u @ w)
        + case.nu * float(w @ w)
        + case.lam * case.nu * cross * cross
    )
    matrix = (
        np.eye(2)
        + case.lam * np.outer(u, u)
        + case.mu * np.outer(u, w)
        + case.nu * np.outer(w, w)
    )
    return formula, float(np.linalg.det(matrix))


def _dispatched_velocity_map(z: np.ndarray, omega: np.ndarray, params: ModelParams) -> np.ndarray:
    d = omega.size
    v_i, v_j = z[:d], z[d:]
    w = v_j - v_i
    if float(w @ w) > 4.0 * params.epsilon0:
        vi_post, vj_post, _, _ = inelastic_emission(v_i, v_j, omega, params.epsilon0)
    else:
        vi_post, vj_post = elastic_reflection(v_i, v_j, omega)
    return np.concatenate([vi_post, vj_post])


def _velocity_map_kind(z: np.ndarray, omega: np.ndarray, params: ModelParams) -> str:
    d = omega.size
    w = z[d:] - z[:d]
    return "inelastic" if float(w @ w) > 4.0 * params.epsilon0 else "elastic"


def draw_scattering_sample(
    gen: np.random.Generator,
    params: ModelParams,
    *,
    kind: Optional[CollisionKind] = None,
    speed_scale: float = 1.0,
    approach_margin: float = 0.05,
    threshold_margin: float = 0.05,
    max_tries: int = 1000,
):
    """Random pre-collisional, non-grazing, non-critical (v_i, v_j, omega).

    kind forces the emitting or elastic branch; margins keep the draw away
    from grazing contact and from the dispatch threshold so finite
    differences stay on one branch.
    """
    d = params.dimension
    for _ in range(max_tries):
        v_i = speed_scale * gen.standard_normal(d)
        v_j = speed_scale * gen.standard_normal(d)
        omega = unit_vector(gen, d)
        w = v_j - v_i
        w2 = float(w @ w)
        if w2 < 1e-6:
            continue
        if float(w @ omega) > 0.0:
            omega = -omega
        if abs(float(w @ omega)) < approach_margin * math.sqrt(w2):
            continue
        if abs(w2 - 4.0 * params.epsilon0) <= threshold_margin * max(1.0, w2):
            continue
        drawn = CollisionKind.INELASTIC if w2 > 4.0 * params.epsilon0 else CollisionKind.ELASTIC
        if kind is not None and drawn is not kind:
            continue
        return v_i, v_j, omega, drawn
    raise IHSEError("could not draw a valid scattering sample within the retry budget")


def verify_scattering_measure(
    samples: int,
    params: ModelParams,
    seed: int,
    *,
    kind: Optional[CollisionKind] = None,
    h: float = FD_STEP,
) -> list[JacobianReport]:
    """Finite-difference determinants of the velocity scattering map on
    random valid inputs, with the analytic determinant alongside where a
    closed form exists (d=2 both branches; elastic in any dimension).

    Sampling is keyed per index, so the report list is independent of
    evaluation order.
    """
    if samples <= 0:
        raise IHSEError("samples must be positive")
    reports = []
    for index in range(samples):
        gen = sample_generator(seed, index)
        v_i, v_j, omega, drawn = draw_scattering_sample(gen, params, kind=kind)
        z = np.concatenate([v_i, v_j])
        jac = fd_jacobian(
            lambda zz: _dispatched_velocity_map(zz, omega, params),
            z,
            h,
            branch=lambda zz: _velocity_map_kind(zz, omega, params),
        )
        fd_det = float(np.linalg.det(jac))
        if drawn is CollisionKind.ELASTIC:
            analytic = -1.0
        elif params.dimension == 2:
            analytic = scattering_velocity_det_analytic(v_i, v_j, omega, params)
        else:
            analytic = None  # recorded as data: no closed form claimed
        reports.append(JacobianReport.build(analytic, fd_det, None, None, h))
    return reports


def _flow_state_vector(z: np.ndarray, n: int, d: int, tau: float, params: ModelParams) -> np.ndarray:
    cfg = Configuration.from_vector(z, n, d)
    return tct_flow(cfg, tau, params).final.to_vector()


def _flow_branch(z: np.ndarray, n: int, d: int, tau: float, params: ModelParams):
    return classify_tct_domain(Configuration.from_vector(z, n, d), tau, params).signature()


def _contact_velocity_block_det(cfg: Configuration, pair: PairIndex, t_c: float, params: ModelParams, h: float) -> float:
    """Finite-difference determinant of the colliding pair's velocity map at
    the contact position (the only non-identity block of det N)."""
    contact = free_transport(cfg, t_c)
    r, _ = contact.pair_state(pair)
    omega = -r / np.linalg.norm(r)
    i, j = pair.zero_based()
    z = np.concatenate([contact.velocities[i], contact.velocities[j]])
    jac = fd_jacobian(
        lambda zz: _dispatched_velocity_map(zz, omega, params),
        z,
        h,
        branch=lambda zz: _velocity_map_kind(zz, omega, params),
    )
    return float(np.linalg.det(jac))


def verify_flow_jacobian(
    cfg: Configuration,
    tau: float,
    params: ModelParams,
    h: float = FD_STEP,
) -> JacobianReport:
    """Compare the analytic flow determinant (prefactor * det N) against the
    finite-difference determinant of the full phase-space flow map."""
    classification = classify_tct_domain(cfg, tau, params)
    if classification.is_excluded:
        raise ExcludedConfigurationError(classification.reason)
    n, d = cfg.n_particles, cfg.dimension
    fd_det = fd_determinant(
        lambda z: _flow_state_vector(z, n, d, tau, params),
        cfg.to_vector(),
        h,
        branch=lambda z: _flow_branch(z, n, d, tau, params),
    )
    analytic = prefactor = det_n_fd = None
    try:
        analytic, prefactor, _ = analytic_flow_jacobian_det(cfg, tau, params)
    except UnsupportedDimensionError:
        pass
    if classification.is_single_collision:
        det_n_fd = _contact_velocity_block_det(cfg, classification.pair, classification.t_c, params, h)
    return JacobianReport.build(analytic, fd_det, prefactor, det_n_fd, h)


def random_tct_case(
    seed: int,
    index: int,
    n_particles: int,
    *,
    kind: Optional[CollisionKind],
    tau: float = 1.0,
    d: int = 2,
    fixed_eps0: Optional[float] = None,
    max_tries: int = 2000,
) -> tuple[Configuration, ModelParams]:
    """Random configuration classified as a single collision of the given
    kind over [0, tau], with margins keeping finite-difference stencils on
    one branch.

    One pair is aimed to collide; the remaining particles drift slowly far
    apart.  The energy quantum is set per draw from the colliding pair's
    relative speed so that both branches are exercised well away from the
    dispatch threshold; pass fixed_eps0 to pin it instead (draws whose
    relative speed falls near 4*eps0 or on the wrong branch are rejected).
    """
    gen = sample_generator(seed, index)
    for _ in range(max_tries):
        positions = _spread_positions(gen, n_particles, d, min_gap=3.6, spread=2.0 + 1.5 * n_particles)
        # Pull particle 1 onto a shell close to particle 2 so contact falls
        # well inside the horizon.
        shell = 1.3 + 0.9 * gen.random()
        positions[0] = positions[1] + shell * unit_vector(gen, d)
        velocities = 0.2 * gen.standard_normal((n_particles, d))
        # Aim particle 1 at particle 2 with a sub-diameter impact parameter.
        gap = positions[1] - positions[0]
        dist = float(np.linalg.norm(gap))
        direction = gap / dist
        tangent = unit_vector(gen, d)
        tangent -= float(tangent @ direction) * direction
        t_norm = float(np.linalg.norm(tangent))
        if t_norm > 1e-9:
            tangent /= t_norm
        else:
            tangent = np.zeros(d)
        speed = 1.5 + gen.random()
        impact = 0.5 * gen.random()
        velocities[0] = velocities[1] + speed * direction + impact * tangent
        cfg = Configuration(positions, velocities)
        fc = first_collision(cfg, tau)
        if fc is None or not fc.unique or fc.pair != PairIndex(1, 2):
            continue
        if not 0.05 * tau < fc.time < 0.8 * tau:
            continue
        pred = predict_pair(cfg, fc.pair)
        if pred.discriminant < 0.1:
            continue
        _, w = cfg.pair_state(fc.pair)
        s2 = float(w @ w)
        if fixed_eps0 is not None:
            eps0 = fixed_eps0
            if abs(s2 - 4.0 * eps0) <= 0.15 * max(1.0, s2):
                continue
            drawn = CollisionKind.INELASTIC if s2 > 4.0 * eps0 else CollisionKind.ELASTIC
            if kind is not None and drawn is not kind:
                continue
        else:
            target = kind
            if target is None:
                target = CollisionKind.INELASTIC if gen.random() < 0.5 else CollisionKind.ELASTIC
            if target is CollisionKind.INELASTIC:
                eps0 = s2 * (0.15 + 0.6 * gen.random()) / 4.0
            else:
                eps0 = s2 * (0.3 + 0.5 * gen.random())
        params = ModelParams(eps0, d)
        classification = classify_tct_domain(cfg, tau, params)
        if not classification.is_single_collision:
            continue
        if kind is not None and classification.kind is not kind:
            continue
        return cfg, params
    raise IHSEError("failed to draw a one-collision configuration within the retry budget")


def _spread_positions(gen: np.random.Generator, n: int, d: int, *, min_gap: float, spread: float, max_tries: int = 500) -> np.ndarray:
    for _ in range(max_tries):
        pts = spread * gen.uniform(-1.0, 1.0, size=(n, d))
        ok = True
        for a in range(n):
            for b in range(a + 1, n):
                if float(np.linalg.norm(pts[a] - pts[b])) < min_gap:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            return pts
    raise IHSEError("failed to spread particles")
