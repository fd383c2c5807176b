"""Mannheim partner and conjugate curves, with residual-based verification.

A Mannheim pair links two curves so that the normal direction of one lies
along the binormal direction of the other at corresponding points.  The
partner is reached by a normal offset psi = phi + c * n_hat, the conjugate by
a binormal offset phi = psi + a * b_hat.  Every characterizing identity is
exposed as a quantitative residual rather than a boolean.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, NamedTuple

import numpy as np

import bisect

from .curves import ArcLengthMap, CurveKind, ParamCurve, _jet, arc_length_map, reparametrize
from .errors import (
    ConjugateUndefinedError,
    CurvatureDegenerateError,
    DegeneratePartnerError,
    NonUnitSpeedError,
    NothingToVerifyError,
    NotPlanarError,
    OffsetRegularityError,
    UnfittableCurveError,
    UnstableDerivativeError,
)
from .frames import kappa_threshold, modified_frame, torsion

_FD_STEP = 1e-4  # parameter step for third/fourth derivatives of offset curves


class PairSide(Enum):
    PARTNER_OF_BASE = "partner_of_base"
    CONJUGATE_OF_PARTNER = "conjugate_of_partner"


class Correspondence:
    """Monotone map between base arc length s and partner arc length s*."""

    def __init__(self, forward, inverse, derivative, s_domain, s_star_domain):
        self.forward_fn = forward
        self.inverse_fn = inverse
        self.derivative_fn = derivative
        self.s_domain = s_domain
        self.s_star_domain = s_star_domain

    def forward(self, s: float) -> float:
        return float(self.forward_fn(s))

    def inverse(self, s_star: float) -> float:
        return float(self.inverse_fn(s_star))

    def derivative(self, s: float) -> float:
        """ds*/ds at base arc length s."""
        return float(self.derivative_fn(s))


@dataclass
class MannheimPair:
    """A base curve, its offset curve, and the data relating them."""

    base: ParamCurve
    partner: ParamCurve
    offset_c: float
    correspondence: Correspondence
    epsilon: int
    side: PairSide
    degenerate_set: list = field(default_factory=list)
    _partner_continuation: NormalContinuation | None = field(default=None, repr=False)

    def partner_continuation(self) -> NormalContinuation:
        if self._partner_continuation is None:
            self._partner_continuation = normal_continuation(self.partner)
        return self._partner_continuation

    def conjugate_constant(self) -> float:
        """The constant of the binormal-offset relation phi = psi + a * b_hat.

        For a pair built by a normal offset with constant c the two constants
        are tied by a = -c * epsilon.
        """
        if self.side is PairSide.CONJUGATE_OF_PARTNER:
            return self.offset_c
        return -self.offset_c * self.epsilon

    def normal_offset_constant(self) -> float:
        if self.side is PairSide.PARTNER_OF_BASE:
            return self.offset_c
        return -self.offset_c * self.epsilon


class AngleResiduals(NamedTuple):
    """Max residuals of the three angle identities along the pair.

    ``cos_vs_rate``: |cos(theta) - ds*/ds|
    ``tan_vs_torsion``: |tan(theta) + a * tau_partner|
    ``theta_rate_vs_curvature``: |d theta/ds* + kappa_partner|
    """

    cos_vs_rate: float
    tan_vs_torsion: float
    theta_rate_vs_curvature: float


class FmRelationResiduals(NamedTuple):
    """Max residuals of the four constant-angle relations of FM pairs.

    With a the binormal-offset constant, eps the frame-matching sign, P the
    partner and B the base:

    1. |sin(theta) + a tau_P cos(theta)|
    2. |(1 + eps a kappa_B) sin(theta) + a tau_B cos(theta)|
    3. |cos^2(theta) - (1 + eps a kappa_B)|
    4. |sin^2(theta) - a^2 tau_P tau_B|
    """

    sin_vs_partner_torsion: float
    mixed_balance: float
    cos_sq_vs_offset: float
    sin_sq_vs_torsion_product: float


@dataclass
class PairReport:
    """Verification summary for one Mannheim pair."""

    colinearity_max: float
    distance_mean: float
    distance_std: float
    mannheim_residual_max: float | None
    partner_residual_max: float | None
    theta: float
    angle_residuals: AngleResiduals
    fm_relation_residuals: FmRelationResiduals
    degenerate_set: list
    offset_abs: float
    constant_distance_residual: float
    curvature_scaled_distance_residual: float
    distance_matches_constant: bool
    distance_matches_curvature_scaled: bool
    epsilon: int
    conjugate_constant: float
    nodes: int

    def to_dict(self) -> dict:
        return {
            "colinearity_max": self.colinearity_max,
            "distance_mean": self.distance_mean,
            "distance_std": self.distance_std,
            "mannheim_residual_max": self.mannheim_residual_max,
            "partner_residual_max": self.partner_residual_max,
            "theta": self.theta,
            "angle_residuals": {
                "cos_vs_rate": self.angle_residuals.cos_vs_rate,
                "tan_vs_torsion": self.angle_residuals.tan_vs_torsion,
                "theta_rate_vs_curvature": self.angle_residuals.theta_rate_vs_curvature,
            },
            "fm_relation_residuals": list(self.fm_relation_residuals),
            "degenerate_set": list(self.degenerate_set),
            "offset_abs": self.offset_abs,
            "constant_distance_residual": self.constant_distance_residual,
            "curvature_scaled_distance_residual": self.curvature_scaled_distance_residual,
            "distance_matches_constant": self.distance_matches_constant,
            "distance_matches_curvature_scaled": self.distance_matches_curvature_scaled,
            "epsilon": self.epsilon,
            "conjugate_constant": self.conjugate_constant,
            "nodes": self.nodes,
        }


# ---------------------------------------------------------------------------
# frame-quantity helper
# ---------------------------------------------------------------------------

class _FrameData(NamedTuple):
    kappa_sq: float
    kappa: float
    T: np.ndarray
    n_hat: np.ndarray | None
    b_hat: np.ndarray | None
    tau: float
    kappa_prime: float
    tau_prime: float
    valid: bool


class NormalContinuation:
    """Sign of the analytically continued frame normal along a curve.

    N and B pass through zero and reverse at odd curvature zeros; relations
    that are linear in the frame directions only hold with the continued
    (signed) frame.  ``flips`` holds the arc lengths of the reversals;
    calling the object gives the sign (+1 before the first flip).
    """

    def __init__(self, flips):
        self.flips = sorted(float(f) for f in flips)

    def __call__(self, s: float) -> float:
        return -1.0 if bisect.bisect_right(self.flips, s) % 2 else 1.0


def normal_continuation(curve: ParamCurve, nodes: int = 1024) -> NormalContinuation:
    """Detect normal reversals of ``curve`` at its odd curvature zeros."""
    from .synthesis import _find_sign_flips

    lo, hi = curve.domain
    s_nodes = np.linspace(lo, hi, nodes)
    d2s = np.array([curve.jet(float(s), 2).d2 for s in s_nodes])
    k_sq = np.einsum("ij,ij->i", d2s, d2s)
    k_max = math.sqrt(max(float(k_sq.max()), 0.0))
    return NormalContinuation(_find_sign_flips(curve, s_nodes, k_sq, d2s, k_max))


def _frame_data(curve: ParamCurve, s: float, eps: float, order: int = 4) -> _FrameData:
    jet = curve.jet(s, order)
    T = jet.d1
    N = jet.d2
    kappa_sq = float(N @ N)
    if kappa_sq <= eps:
        tau = torsion(jet, eps, jet_source=curve.jet, domain=curve.domain)
        return _FrameData(kappa_sq, 0.0, T, None, None, tau, 0.0, 0.0, False)
    kappa = math.sqrt(kappa_sq)
    n_hat = N / kappa
    b_hat = np.cross(T, n_hat)
    det3 = float(jet.d1 @ np.cross(jet.d2, jet.d3))
    tau = det3 / kappa_sq
    k2_prime = 2.0 * float(jet.d2 @ jet.d3)
    kappa_prime = 0.5 * k2_prime / kappa
    if order >= 4:
        det4 = float(jet.d1 @ np.cross(jet.d2, jet.d4))
        tau_prime = (det4 - tau * k2_prime) / kappa_sq
    else:
        tau_prime = 0.0
    return _FrameData(kappa_sq, kappa, T, n_hat, b_hat, tau, kappa_prime, tau_prime, True)


# ---------------------------------------------------------------------------
# offset curves
# ---------------------------------------------------------------------------

def _offset_curve(source: ParamCurve, alpha: float, beta: float, eps: float,
                  label: str) -> ParamCurve:
    """Curve p(s) = source(s) + alpha * n_hat(s) + beta * b_hat(s).

    The source must be unit speed.  Jets are analytic to order 2; orders 3
    and 4 come from second-order differences of the order-2 formula.
    """
    lo, hi = source.domain

    def analytic(s):
        fd = _frame_data(source, s, eps)
        if not fd.valid:
            raise CurvatureDegenerateError(
                f"offset undefined at s = {s:.6g}: curvature below threshold")
        jet = source.jet(s, 1)
        p = jet.p + alpha * fd.n_hat + beta * fd.b_hat
        k, t_ = fd.kappa, fd.tau
        d1 = (1.0 - alpha * k) * fd.T - beta * t_ * fd.n_hat + alpha * t_ * fd.b_hat
        d2 = ((-alpha * fd.kappa_prime + beta * t_ * k) * fd.T
              + ((1.0 - alpha * k) * k - beta * fd.tau_prime - alpha * t_ * t_) * fd.n_hat
              + (alpha * fd.tau_prime - beta * t_ * t_) * fd.b_hat)
        return p, d1, d2

    def d2_at(s):
        return analytic(s)[2]

    def ev(s, order):
        p, d1, d2 = analytic(s)
        if order < 3:
            return _jet(s, p, d1, d2, order=max(order, 2))
        h = _FD_STEP
        if s - 2.0 * h >= lo and s + 2.0 * h <= hi:
            fm2, fm1 = d2_at(s - 2.0 * h), d2_at(s - h)
            fp1, fp2 = d2_at(s + h), d2_at(s + 2.0 * h)
            d3 = (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h)
            d4 = (-fm2 + 16.0 * fm1 - 30.0 * d2 + 16.0 * fp1 - fp2) / (12.0 * h * h)
        else:
            sgn = 1.0 if s - lo < hi - s else -1.0
            f = [d2_at(s + sgn * k * h) for k in range(1, 5)]
            d3 = sgn * (-25.0 * d2 + 48.0 * f[0] - 36.0 * f[1]
                        + 16.0 * f[2] - 3.0 * f[3]) / (12.0 * h)
            d4 = (2.0 * d2 - 5.0 * f[0] + 4.0 * f[1] - f[2]) / (h * h)
        if order < 4:
            return _jet(s, p, d1, d2, d3, order=3)
        return _jet(s, p, d1, d2, d3, d4)

    return ParamCurve((lo, hi), ev, CurveKind.SYNTHESIZED,
                      params={"offset": label, "alpha": alpha, "beta": beta})


def _check_unit_speed_curve(curve: ParamCurve, where: str):
    lo, hi = curve.domain
    for s in np.linspace(lo, hi, 7):
        g = float(curve.jet(s, 1).d1 @ curve.jet(s, 1).d1)
        if abs(g - 1.0) > 1e-6:
            raise NonUnitSpeedError(
                f"{where} requires a unit-speed curve (<d1,d1> = {g:.6g} at s = {s:.6g})")


def _measure_epsilon(base, partner_unit, corr, s_grid, eps_b, eps_p) -> int:
    """Sign making <N_base, B_partner> >= 0 at the first nondegenerate sample."""
    for s in s_grid:
        jb = base.jet(float(s), 2)
        if float(jb.d2 @ jb.d2) <= eps_b:
            continue
        jp = partner_unit.jet(corr.forward(float(s)), 2)
        if float(jp.d2 @ jp.d2) <= eps_p:
            continue
        dot = float(jb.d2 @ np.cross(jp.d1, jp.d2))
        if dot != 0.0:
            return 1 if dot > 0 else -1
    return 1


def construct_partner(base: ParamCurve, c: float, *, samples: int = 1024,
                      arc_tol: float = 1e-10) -> MannheimPair:
    """Build the normal-offset partner psi(s) = phi(s) + c * n_hat(s).

    The partner is reparametrized to unit speed; the correspondence map
    accumulates arc length along the offset curve.  A partner whose speed
    vanishes identically (circle offset to its own center) is rejected;
    isolated speed zeros are recorded in the degenerate set and construction
    proceeds.
    """
    if c == 0.0:
        raise ValueError("offset constant c must be nonzero")
    _check_unit_speed_curve(base, "construct_partner")
    eps_b = kappa_threshold(base)
    lo, hi = base.domain
    s_grid = np.linspace(lo, hi, samples)

    kappa_sq = np.array([float(base.jet(s, 2).d2 @ base.jet(s, 2).d2) for s in s_grid])
    if np.all(kappa_sq <= eps_b):
        raise CurvatureDegenerateError(
            "base curvature vanishes identically; normal offset undefined")
    degenerate = [float(s) for s, k2 in zip(s_grid, kappa_sq) if k2 <= eps_b]

    partner_param = _offset_curve(base, c, 0.0, eps_b, "normal")
    speeds = np.array([partner_param.jet(s, 1).speed()
                       for s, k2 in zip(s_grid, kappa_sq) if k2 > eps_b])
    speed_scale = max(1.0, abs(c))
    if speeds.max() < 1e-9 * speed_scale:
        raise DegeneratePartnerError(
            "partner speed vanishes identically (1 - c*kappa = 0 and tau = 0)")
    degenerate.extend(
        float(s) for s, k2 in zip(s_grid, kappa_sq)
        if k2 > eps_b and partner_param.jet(s, 1).speed() < 1e-8 * speeds.max())

    alm = arc_length_map(partner_param, arc_tol)
    partner_unit = reparametrize(partner_param, alm)
    corr = Correspondence(
        forward=alm.forward, inverse=alm.inverse,
        derivative=lambda s: partner_param.jet(s, 1).speed(),
        s_domain=base.domain, s_star_domain=partner_unit.domain)

    eps_p = kappa_threshold(partner_unit)
    epsilon = _measure_epsilon(base, partner_unit, corr, s_grid, eps_b, eps_p)
    return MannheimPair(base=base, partner=partner_unit, offset_c=float(c),
                        correspondence=corr, epsilon=epsilon,
                        side=PairSide.PARTNER_OF_BASE,
                        degenerate_set=sorted(set(degenerate)))


def construct_conjugate(partner: ParamCurve, a: float, *, samples: int = 1024,
                        arc_tol: float = 1e-10) -> MannheimPair:
    """Build the binormal-offset conjugate phi(s*) = psi(s*) + a * b_hat(s*).

    ``partner`` plays the role of the curve whose binormal carries the
    offset.  Fails where the partner curvature vanishes on more than a
    discrete set, since the offset direction is undefined there.
    """
    if a == 0.0:
        raise ValueError("offset constant a must be nonzero")
    _check_unit_speed_curve(partner, "construct_conjugate")
    eps_p = kappa_threshold(partner)
    lo, hi = partner.domain
    grid = np.linspace(lo, hi, samples)
    kappa_sq = np.array([float(partner.jet(s, 2).d2 @ partner.jet(s, 2).d2) for s in grid])
    bad = [float(s) for s, k2 in zip(grid, kappa_sq) if k2 <= eps_p]
    if len(bad) > max(2, samples // 100):
        raise ConjugateUndefinedError(
            f"partner curvature vanishes on {len(bad)} of {samples} samples; "
            "binormal offset undefined", s_values=bad)

    base_param = _offset_curve(partner, 0.0, a, eps_p, "binormal")
    alm = arc_length_map(base_param, arc_tol)  # s* -> arc length of the base
    base_unit = reparametrize(base_param, alm)
    corr = Correspondence(
        forward=alm.inverse, inverse=alm.forward,
        derivative=lambda s: 1.0 / base_param.jet(alm.inverse(s), 1).speed(),
        s_domain=base_unit.domain, s_star_domain=partner.domain)

    eps_b = kappa_threshold(base_unit)
    s_grid_base = np.linspace(base_unit.domain[0], base_unit.domain[1], samples)
    epsilon = _measure_epsilon(base_unit, partner, corr, s_grid_base, eps_b, eps_p)
    return MannheimPair(base=base_unit, partner=partner, offset_c=float(a),
                        correspondence=corr, epsilon=epsilon,
                        side=PairSide.CONJUGATE_OF_PARTNER,
                        degenerate_set=sorted(set(bad)))


# ---------------------------------------------------------------------------
# scalar residuals
# ---------------------------------------------------------------------------

def mannheim_residual(base: ParamCurve, c: float | None = None,
                      nodes: int = 512) -> tuple[float, float]:
    """Residual of the offset-constant relation kappa = c (kappa^2 + tau^2).

    When ``c`` is absent it is fitted by least squares of kappa against
    kappa^2 + tau^2 over the grid.  Returns (c_used, max residual normalized
    by max kappa).
    """
    if nodes < 100:
        raise ValueError("need a sampling grid of at least 100 nodes")
    eps = kappa_threshold(base)
    lo, hi = base.domain
    kappas = np.empty(nodes)
    denoms = np.empty(nodes)
    for i, s in enumerate(np.linspace(lo, hi, nodes)):
        fd = _frame_data(base, float(s), eps, order=3)
        kappas[i] = fd.kappa if fd.valid else math.sqrt(max(fd.kappa_sq, 0.0))
        denoms[i] = kappas[i] ** 2 + fd.tau ** 2
    k_max = float(kappas.max())
    if k_max == 0.0 or float(denoms.max()) == 0.0:
        raise UnfittableCurveError(
            "kappa^2 + tau^2 vanishes identically; no offset constant exists")
    if c is None:
        c = float(denoms @ kappas) / float(denoms @ denoms)
    residual = float(np.max(np.abs(kappas - c * denoms))) / k_max
    return float(c), residual


def partner_residual(partner: ParamCurve, a: float, nodes: int = 512) -> float:
    """Residual of tau' = (kappa / a)(1 + a^2 tau^2) along the partner.

    tau' is computed by second-order central differences with a small local
    step; the result is normalized by max(1, max |tau'|).  The grid torsion
    samples are screened first: if their second differences are as large as
    their first differences the derivative is noise-dominated and the call
    fails rather than reporting garbage.
    """
    if a == 0.0:
        raise ValueError("offset constant a must be nonzero")
    eps = kappa_threshold(partner)
    cont = normal_continuation(partner)
    lo, hi = partner.domain
    s = np.linspace(lo, hi, nodes)

    def tau_at(x):
        return _frame_data(partner, float(x), eps, order=3).tau

    kappas = np.empty(nodes)
    taus = np.empty(nodes)
    for i, si in enumerate(s):
        fd = _frame_data(partner, float(si), eps, order=3)
        kappas[i] = cont(float(si)) * fd.kappa
        taus[i] = fd.tau
    dtau = np.diff(taus)
    if np.max(np.abs(dtau)) > 1e-12 * (1.0 + np.max(np.abs(taus))):
        noise = np.median(np.abs(np.diff(dtau)))
        if noise > 0.9 * np.max(np.abs(dtau)):
            raise UnstableDerivativeError(
                "torsion samples too rough for a stable derivative on this grid")

    delta = min(_FD_STEP, 0.125 * (hi - lo))
    tau_prime = np.empty(nodes)
    for i, si in enumerate(s):
        si = float(si)
        if si - delta >= lo and si + delta <= hi:
            tau_prime[i] = (tau_at(si + delta) - tau_at(si - delta)) / (2.0 * delta)
        else:
            sgn = 1.0 if si - lo < hi - si else -1.0
            tau_prime[i] = sgn * (-3.0 * taus[i] + 4.0 * tau_at(si + sgn * delta)
                                  - tau_at(si + sgn * 2.0 * delta)) / (2.0 * delta)
    rhs = (kappas / a) * (1.0 + a * a * taus * taus)
    return float(np.max(np.abs(tau_prime - rhs))) / max(1.0, float(np.max(np.abs(tau_prime))))


# ---------------------------------------------------------------------------
# pair verification
# ---------------------------------------------------------------------------

def _partner_direction_data(pair, s, s_star, base_fd, eps_p, cont):
    """Analytically continued partner n_hat / tau / signed kappa at s_star.

    Falls back to the correspondence-induced frame where the partner
    curvature vanishes (straight partners carry no frame of their own; the
    joining direction supplies one, realizing the free frame choice that
    degenerate conjugates admit)."""
    fd = _frame_data(pair.partner, s_star, eps_p)
    if fd.valid:
        u = cont(s_star)
        return u * fd.n_hat, fd.tau, u * fd.kappa, fd.T, False
    if base_fd is None or not base_fd.valid:
        return None, 0.0, 0.0, fd.T, True
    eps_sign = float(pair.epsilon)
    b_ind = eps_sign * base_fd.n_hat
    n_ind = np.cross(b_ind, fd.T)
    ds_dstar = 1.0 / pair.correspondence.derivative(s)
    db_dstar = eps_sign * (-base_fd.kappa * base_fd.T + base_fd.tau * base_fd.b_hat) * ds_dstar
    tau_ind = -float(db_dstar @ n_ind)
    return n_ind, tau_ind, 0.0, fd.T, True


def _theta_at(pair, s, eps_b, eps_p, cont):
    """Signed tangent angle at base arc length s, or None where undefined."""
    base_fd = _frame_data(pair.base, s, eps_b, order=3)
    s_star = pair.correspondence.forward(s)
    n_p, _, _, T_p, _ = _partner_direction_data(pair, s, s_star, base_fd, eps_p, cont)
    if n_p is None:
        return None
    cos_t = float(base_fd.T @ T_p)
    sin_t = float(base_fd.T @ n_p)
    return math.atan2(sin_t, cos_t)


def verify_pair(pair: MannheimPair, nodes: int = 512,
                speed_floor_rel: float = 1e-8,
                distance_tol: float = 1e-8) -> PairReport:
    """Evaluate every pair identity as a residual over a uniform grid.

    The angle theta between corresponding tangents is taken in (-pi, pi],
    with its sign fixed by the partner normal direction, and unwrapped along
    arc length before differencing.
    """
    base, partner = pair.base, pair.partner
    corr = pair.correspondence
    eps_b = kappa_threshold(base)
    eps_p = kappa_threshold(partner)
    lo, hi = base.domain
    s_grid = np.linspace(lo, hi, nodes)
    a = pair.conjugate_constant()
    eps_sign = float(pair.epsilon)
    cont = pair.partner_continuation()

    speeds = np.array([corr.derivative(float(s)) for s in s_grid])
    speed_floor = speed_floor_rel * max(float(speeds.max()), 1e-300)

    distances = np.empty(nodes)
    base_kappas = np.empty(nodes)
    colinearity = []
    thetas = np.full(nodes, np.nan)
    theta_rate_resid = []
    cos_resid = []
    tan_resid = []
    fm1 = []
    fm2 = []
    fm3 = []
    fm4 = []
    degenerate = set(float(x) for x in pair.degenerate_set)
    usable = 0

    for i, s in enumerate(s_grid):
        s = float(s)
        s_star = corr.forward(s)
        base_fd = _frame_data(base, s, eps_b)
        p_b = base.jet(s, 0).p
        p_p = partner.jet(s_star, 0).p
        distances[i] = float(np.linalg.norm(p_p - p_b))
        base_kappas[i] = base_fd.kappa if base_fd.valid else math.sqrt(max(base_fd.kappa_sq, 0.0))

        if speeds[i] < speed_floor:
            degenerate.add(s)
            continue

        partner_fd = _frame_data(partner, s_star, eps_p)
        if base_fd.valid and partner_fd.valid:
            cosang = abs(float(base_fd.n_hat @ partner_fd.b_hat))
            colinearity.append(math.acos(min(1.0, cosang)))
        else:
            degenerate.add(s)

        if not base_fd.valid:
            continue
        usable += 1

        n_p, tau_p, kappa_p, T_p, induced = _partner_direction_data(
            pair, s, s_star, base_fd, eps_p, cont)
        if n_p is None:
            continue
        cos_t = float(base_fd.T @ T_p)
        sin_t = float(base_fd.T @ n_p)
        theta = math.atan2(sin_t, cos_t)
        thetas[i] = theta

        cos_resid.append(abs(cos_t - speeds[i]))
        if abs(cos_t) > 1e-12:
            tan_resid.append(abs(sin_t / cos_t + a * tau_p))

        tau_b = base_fd.tau
        kappa_b = base_fd.kappa
        fm1.append(abs(sin_t + a * tau_p * cos_t))
        fm2.append(abs((1.0 + eps_sign * a * kappa_b) * sin_t + a * tau_b * cos_t))
        fm3.append(abs(cos_t * cos_t - (1.0 + eps_sign * a * kappa_b)))
        fm4.append(abs(sin_t * sin_t - a * a * tau_p * tau_b))

        # d theta / ds* by a local second-order stencil, independent of the grid
        delta = min(_FD_STEP, 0.25 * (hi - lo) / (nodes - 1)) if nodes > 1 else _FD_STEP
        delta = max(delta, 1e-6 * (hi - lo))
        th = _local_theta_slope(pair, s, theta, delta, eps_b, eps_p, cont, lo, hi)
        if th is not None:
            theta_rate_resid.append(abs(th / speeds[i] + kappa_p))

    if usable == 0:
        raise NothingToVerifyError("no sample admits frame comparison")

    mannheim_max = None
    try:
        _, mannheim_max = mannheim_residual(base, pair.normal_offset_constant(),
                                            nodes=max(nodes, 100))
    except UnfittableCurveError:
        pass
    partner_max = None
    try:
        partner_max = partner_residual(partner, a, nodes=nodes)
    except UnstableDerivativeError:
        pass

    offset_abs = abs(pair.offset_c)
    const_resid = float(np.max(np.abs(distances - offset_abs)))
    scaled_resid = float(np.max(np.abs(distances - offset_abs * base_kappas)))
    dist_mean = float(distances.mean())
    dist_std = float(distances.std())
    valid_thetas = thetas[~np.isnan(thetas)]

    return PairReport(
        colinearity_max=float(max(colinearity)) if colinearity else 0.0,
        distance_mean=dist_mean,
        distance_std=dist_std,
        mannheim_residual_max=mannheim_max,
        partner_residual_max=partner_max,
        theta=float(np.mean(np.unwrap(valid_thetas))) if len(valid_thetas) else 0.0,
        angle_residuals=AngleResiduals(
            cos_vs_rate=float(max(cos_resid)) if cos_resid else 0.0,
            tan_vs_torsion=float(max(tan_resid)) if tan_resid else 0.0,
            theta_rate_vs_curvature=float(max(theta_rate_resid)) if theta_rate_resid else 0.0,
        ),
        fm_relation_residuals=FmRelationResiduals(
            sin_vs_partner_torsion=float(max(fm1)) if fm1 else 0.0,
            mixed_balance=float(max(fm2)) if fm2 else 0.0,
            cos_sq_vs_offset=float(max(fm3)) if fm3 else 0.0,
            sin_sq_vs_torsion_product=float(max(fm4)) if fm4 else 0.0,
        ),
        degenerate_set=sorted(degenerate),
        offset_abs=offset_abs,
        constant_distance_residual=const_resid,
        curvature_scaled_distance_residual=scaled_resid,
        distance_matches_constant=const_resid <= distance_tol * max(1.0, offset_abs),
        distance_matches_curvature_scaled=scaled_resid <= distance_tol * max(1.0, offset_abs),
        epsilon=pair.epsilon,
        conjugate_constant=a,
        nodes=nodes,
    )


def _local_theta_slope(pair, s, theta_center, delta, eps_b, eps_p, cont, lo, hi):
    """d theta / ds at s by a second-order stencil with branch alignment."""

    def theta_near(x):
        th = _theta_at(pair, x, eps_b, eps_p, cont)
        if th is None:
            return None
        while th - theta_center > math.pi:
            th -= 2.0 * math.pi
        while th - theta_center < -math.pi:
            th += 2.0 * math.pi
        return th

    if s - delta >= lo and s + delta <= hi:
        tm, tp = theta_near(s - delta), theta_near(s + delta)
        if tm is None or tp is None:
            return None
        return (tp - tm) / (2.0 * delta)
    sgn = 1.0 if s - lo < hi - s else -1.0
    t1, t2 = theta_near(s + sgn * delta), theta_near(s + sgn * 2.0 * delta)
    if t1 is None or t2 is None:
        return None
    return sgn * (-3.0 * theta_center + 4.0 * t1 - t2) / (2.0 * delta)


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

class FmKind(Enum):
    LINE = "line"
    CIRCULAR_HELIX = "circular_helix"
    NOT_FM = "not_fm"


@dataclass
class FmClassification:
    kind: FmKind
    r: float | None = None
    b: float | None = None

    def to_dict(self):
        return {"kind": self.kind.value, "r": self.r, "b": self.b}


def classify_fm(curve: ParamCurve, tol: float = 1e-6, nodes: int = 512) -> FmClassification:
    """Decide whether a curve admits a binormal-offset conjugate.

    The only such curves are straight lines and non-planar circular helices;
    for a helix the radius and pitch are recovered from the constant
    curvature and torsion as r = k/(k^2+t^2), b = t/(k^2+t^2).
    """
    eps = kappa_threshold(curve)
    lo, hi = curve.domain
    kappas = np.empty(nodes)
    taus = np.empty(nodes)
    for i, s in enumerate(np.linspace(lo, hi, nodes)):
        fd = _frame_data(curve, float(s), eps, order=3)
        kappas[i] = math.sqrt(max(fd.kappa_sq, 0.0))
        taus[i] = fd.tau
    if float(np.max(kappas ** 2)) < tol:
        return FmClassification(FmKind.LINE)
    k_mean = float(kappas.mean())
    t_mean = float(taus.mean())
    k_const = float(np.max(np.abs(kappas - k_mean))) <= tol * (1.0 + k_mean)
    t_const = float(np.max(np.abs(taus - t_mean))) <= tol * (1.0 + abs(t_mean))
    if k_const and t_const and k_mean > 0.0 and abs(t_mean) > tol:
        denom = k_mean ** 2 + t_mean ** 2
        return FmClassification(FmKind.CIRCULAR_HELIX, r=k_mean / denom, b=t_mean / denom)
    return FmClassification(FmKind.NOT_FM)


def is_generalized_helix(curve: ParamCurve, tol: float = 1e-6,
                         nodes: int = 512) -> tuple[bool, np.ndarray | None]:
    """Test whether tau/kappa is constant; recover the fixed axis if so.

    The axis is the direction making a constant angle with the tangent,
    recovered as the least-varying direction of the tangent samples.
    """
    eps = kappa_threshold(curve)
    lo, hi = curve.domain
    ratios = []
    tangents = []
    for s in np.linspace(lo, hi, nodes):
        fd = _frame_data(curve, float(s), eps, order=3)
        tangents.append(fd.T)
        if fd.valid:
            ratios.append(fd.tau / fd.kappa)
    if not ratios:
        raise CurvatureDegenerateError(
            "all samples curvature-degenerate; helix test indeterminate")
    ratios = np.asarray(ratios)
    mean = float(ratios.mean())
    if float(np.max(np.abs(ratios - mean))) > tol * (1.0 + abs(mean)):
        return False, None
    T = np.asarray(tangents)
    centered = T - T.mean(axis=0)
    _, _, Vt = np.linalg.svd(centered, full_matrices=True)
    axis = Vt[-1]
    lean = float(T.mean(axis=0) @ axis)
    if abs(lean) > 1e-9:
        axis = axis * np.sign(lean)
    elif axis[np.argmax(np.abs(axis))] < 0:
        axis = -axis
    return True, axis


def planar_fm_conjugate(partner: ParamCurve, a: float, epsilon: int = 1, *,
                        nodes: int = 512, planar_tol: float = 1e-8) -> ParamCurve:
    """Conjugate of a plane curve by the in-plane offset phi = psi - eps*a*n_hat.

    Requires zero torsion and 1 + eps*a*kappa bounded away from zero, which
    keeps the offset curve regular with tangents parallel to the source.
    """
    if a == 0.0:
        raise ValueError("offset constant a must be nonzero")
    if epsilon not in (1, -1):
        raise ValueError("epsilon must be +1 or -1")
    _check_unit_speed_curve(partner, "planar_fm_conjugate")
    eps = kappa_threshold(partner)
    lo, hi = partner.domain
    kappas = np.empty(nodes)
    taus = np.empty(nodes)
    for i, s in enumerate(np.linspace(lo, hi, nodes)):
        fd = _frame_data(partner, float(s), eps, order=3)
        if not fd.valid:
            raise CurvatureDegenerateError(
                f"curvature vanishes near s = {s:.6g}; offset direction undefined")
        kappas[i] = fd.kappa
        taus[i] = fd.tau
    if float(np.max(np.abs(taus))) > planar_tol * (1.0 + float(kappas.max())):
        raise NotPlanarError(
            f"max |tau| = {np.max(np.abs(taus)):.3g}; curve is not planar")
    g = 1.0 + epsilon * a * kappas
    if float(g.min()) <= 0.0 <= float(g.max()) or float(np.min(np.abs(g))) < 1e-12:
        raise OffsetRegularityError(
            "1 + eps*a*kappa changes sign on the domain; offset curve irregular")
    return _offset_curve(partner, -epsilon * a, 0.0, eps, "planar_conjugate")


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------

CORRESPONDENCE_CSV_HEADER = "s,s_star,distance,theta"


def write_correspondence_csv(path, pair: MannheimPair, nodes: int = 512):
    """Dump the correspondence map with per-sample distance and tangent angle."""
    eps_b = kappa_threshold(pair.base)
    eps_p = kappa_threshold(pair.partner)
    cont = pair.partner_continuation()
    lo, hi = pair.base.domain
    with open(path, "w", newline="") as fh:
        fh.write(CORRESPONDENCE_CSV_HEADER + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        for s in np.linspace(lo, hi, nodes):
            s = float(s)
            s_star = pair.correspondence.forward(s)
            d = float(np.linalg.norm(pair.partner.jet(s_star, 0).p - pair.base.jet(s, 0).p))
            theta = _theta_at(pair, s, eps_b, eps_p, cont)
            row = [s, s_star, d, float("nan") if theta is None else theta]
            writer.writerow([f"{v:.17g}" for v in row])
