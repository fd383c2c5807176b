"""Curve synthesis from prescribed curvature and torsion.

The frame system is integrated in the globally regular variables
(p, T, n, b): p' = T, T' = kappa n, n' = -kappa T + tau b, b' = -tau n,
with N = kappa n and B = kappa b assembled on output.  This is equivalent to
propagating {T, N, B} directly but has polynomial coefficients, so curvature
zeros need no special-casing; a signed kappa encodes the analytic
continuation of the normal through odd zeros.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq, minimize_scalar

from .curves import CurveJet, CurveKind, ParamCurve, _jet
from .errors import (
    IntegrationFailureError,
    InfeasibleProfileError,
    ParameterDomainError,
    PoleProximityError,
    PoseMismatchError,
)
from .frames import ModifiedFrame, kappa_threshold, torsion


# ---------------------------------------------------------------------------
# curvature / torsion profiles
# ---------------------------------------------------------------------------

class CurvatureProfile:
    """Prescribed curvature and torsion over a closed arc-length interval.

    ``kappa`` may take negative values: the sign encodes the direction of the
    frame normal through odd curvature zeros (the squared curvature is
    kappa**2 either way).  ``dkappa``, ``d2kappa`` and ``dtau`` are optional
    analytic derivatives; central differences are used where absent.
    """

    def __init__(self, kappa: Callable, tau: Callable, domain,
                 description: str = "", dkappa=None, d2kappa=None, dtau=None):
        lo, hi = float(domain[0]), float(domain[1])
        if not lo < hi:
            raise ValueError(f"empty profile domain [{lo}, {hi}]")
        self.kappa = kappa
        self.tau = tau
        self.domain = (lo, hi)
        self.description = description
        self._dkappa = dkappa
        self._d2kappa = d2kappa
        self._dtau = dtau
        self._fd_h = 1e-6 * max(1.0, hi - lo)

    def _fd(self, fn, s):
        lo, hi = self.domain
        h = self._fd_h
        a, b = max(lo, s - h), min(hi, s + h)
        return (fn(b) - fn(a)) / (b - a)

    def kappa_deriv(self, s: float) -> float:
        if self._dkappa is not None:
            return float(self._dkappa(s))
        return float(self._fd(self.kappa, s))

    def kappa_deriv2(self, s: float) -> float:
        if self._d2kappa is not None:
            return float(self._d2kappa(s))
        return float(self._fd(self.kappa_deriv, s))

    def tau_deriv(self, s: float) -> float:
        if self._dtau is not None:
            return float(self._dtau(s))
        return float(self._fd(self.tau, s))

    # -- constructors -------------------------------------------------------
    @classmethod
    def constant(cls, kappa: float, tau: float, domain, description=""):
        k, t = float(kappa), float(tau)
        return cls(lambda s: k, lambda s: t, domain,
                   description or f"constant kappa={k}, tau={t}",
                   dkappa=lambda s: 0.0, d2kappa=lambda s: 0.0, dtau=lambda s: 0.0)

    @classmethod
    def from_table(cls, s_values, kappa_values, tau_values, description=""):
        s = np.asarray(s_values, dtype=float)
        ks = CubicSpline(s, np.asarray(kappa_values, dtype=float))
        ts = CubicSpline(s, np.asarray(tau_values, dtype=float))
        return cls(lambda x: float(ks(x)), lambda x: float(ts(x)),
                   (s[0], s[-1]), description or "tabulated profile",
                   dkappa=ks.derivative(1), d2kappa=ks.derivative(2),
                   dtau=ts.derivative(1))

    @classmethod
    def from_spec(cls, spec: dict):
        """Parse the profile JSON schema.

        ``{"kappa": {"kind": "const"|"poly"|"table", ...}, "tau": {...},
        "domain": [s0, s1]}`` where const carries ``value``, poly carries
        ``coeffs`` (ascending) and table carries ``s`` and ``values``.
        """
        domain = tuple(float(v) for v in spec["domain"])

        def build(part):
            kind = part["kind"]
            if kind == "const":
                v = float(part["value"])
                return (lambda s: v), (lambda s: 0.0), (lambda s: 0.0)
            if kind == "poly":
                p = np.polynomial.Polynomial(part["coeffs"])
                d1, d2 = p.deriv(1), p.deriv(2)
                return (lambda s: float(p(s))), (lambda s: float(d1(s))), (lambda s: float(d2(s)))
            if kind == "table":
                sp = CubicSpline(np.asarray(part["s"], float),
                                 np.asarray(part["values"], float))
                d1, d2 = sp.derivative(1), sp.derivative(2)
                return (lambda s: float(sp(s))), (lambda s: float(d1(s))), (lambda s: float(d2(s)))
            raise ValueError(f"unknown profile kind {kind!r}")

        k, dk, d2k = build(spec["kappa"])
        t, dt, _ = build(spec["tau"])
        return cls(k, t, domain, description=spec.get("description", "profile spec"),
                   dkappa=dk, d2kappa=d2k, dtau=dt)

    @classmethod
    def from_curve(cls, curve: ParamCurve, n: int = 4097):
        """Extract (kappa, tau) from a unit-speed curve.

        The curvature is given a continuous sign: at isolated zeros where the
        second derivative reverses direction, kappa changes sign so that the
        normal direction kappa*n stays analytic, which is what faithful
        reconstruction through inflections requires.
        """
        lo, hi = curve.domain
        s_nodes = np.linspace(lo, hi, n)
        d2s = np.empty((n, 3))
        k_sq = np.empty(n)
        for i, s in enumerate(s_nodes):
            d2 = curve.jet(s, 2).d2
            d2s[i] = d2
            k_sq[i] = float(d2 @ d2)
        k_max = math.sqrt(max(k_sq.max(), 0.0))
        flips = _find_sign_flips(curve, s_nodes, k_sq, d2s, k_max)

        sign = np.ones(n)
        for f in flips:
            sign[s_nodes > f] *= -1.0
        kappa_nodes = sign * np.sqrt(k_sq)

        eps = kappa_threshold(curve)
        tau_nodes = np.array([
            torsion(curve.jet(s, 3), eps, jet_source=curve.jet, domain=curve.domain)
            for s in s_nodes
        ])
        ks = CubicSpline(s_nodes, kappa_nodes)
        ts = CubicSpline(s_nodes, tau_nodes)
        return cls(lambda x: float(ks(x)), lambda x: float(ts(x)), (lo, hi),
                   description=f"extracted from {curve.kind.value}",
                   dkappa=ks.derivative(1), d2kappa=ks.derivative(2),
                   dtau=ts.derivative(1))


def _find_sign_flips(curve, s_nodes, k_sq, d2s, k_max):
    """Locate odd curvature zeros, where the frame normal reverses."""
    if k_max == 0.0:
        return []
    candidate = (0.05 * k_max) ** 2
    zero = (1e-5 * (1.0 + k_max)) ** 2
    step = s_nodes[1] - s_nodes[0]
    flips = []
    for i in range(1, len(s_nodes) - 1):
        if not (k_sq[i] < candidate and k_sq[i] <= k_sq[i - 1] and k_sq[i] <= k_sq[i + 1]):
            continue
        res = minimize_scalar(
            lambda s: float(curve.jet(s, 2).d2 @ curve.jet(s, 2).d2),
            bounds=(s_nodes[i - 1], s_nodes[i + 1]), method="bounded",
            options={"xatol": 1e-12 * max(1.0, abs(s_nodes[-1]))},
        )
        s_min = float(res.x)
        if float(res.fun) > zero:
            continue
        left = curve.jet(max(s_nodes[0], s_min - step), 2).d2
        right_s = min(s_nodes[-1], s_min + step)
        right = curve.jet(right_s, 2).d2
        if float(left @ right) >= 0.0:
            continue  # even-order zero: no reversal, positive root stays smooth
        ref = right / np.linalg.norm(right)
        f = lambda s: float(curve.jet(s, 2).d2 @ ref)
        try:
            s_flip = brentq(f, max(s_nodes[0], s_min - step), right_s, xtol=1e-13)
        except ValueError:
            s_flip = s_min
        flips.append(float(s_flip))
    return sorted(flips)


# ---------------------------------------------------------------------------
# initial pose
# ---------------------------------------------------------------------------

@dataclass
class FramePose:
    """Initial frame data at the start of a profile domain."""

    p0: np.ndarray
    T0: np.ndarray
    N0: np.ndarray
    B0: np.ndarray

    def __post_init__(self):
        self.p0 = np.asarray(self.p0, dtype=float)
        self.T0 = np.asarray(self.T0, dtype=float)
        self.N0 = np.asarray(self.N0, dtype=float)
        self.B0 = np.asarray(self.B0, dtype=float)

    def validate(self, kappa0: float, tol: float = 1e-6):
        scale = 1.0 + abs(kappa0)
        if abs(np.linalg.norm(self.T0) - 1.0) > tol:
            raise PoseMismatchError("T0 must be a unit vector")
        if abs(float(self.T0 @ self.N0)) > tol * scale:
            raise PoseMismatchError("N0 must be orthogonal to T0")
        if abs(np.linalg.norm(self.N0) - abs(kappa0)) > tol * scale:
            raise PoseMismatchError(
                f"|N0| = {np.linalg.norm(self.N0):.6g} disagrees with |kappa(s0)| = {abs(kappa0):.6g}"
            )
        if np.linalg.norm(np.cross(self.T0, self.N0) - self.B0) > tol * scale:
            raise PoseMismatchError("B0 must equal T0 x N0")

    @classmethod
    def canonical(cls, profile: CurvatureProfile):
        """p0 at the origin, T0 = +x, N0 = kappa(s0) * (+y)."""
        k0 = profile.kappa(profile.domain[0])
        T0 = np.array([1.0, 0.0, 0.0])
        N0 = np.array([0.0, k0, 0.0])
        return cls(np.zeros(3), T0, N0, np.cross(T0, N0))

    @classmethod
    def from_curve(cls, curve: ParamCurve, s0: float | None = None):
        s0 = curve.domain[0] if s0 is None else s0
        jet = curve.jet(s0, 2)
        T0 = jet.d1 / np.linalg.norm(jet.d1)
        N0 = jet.d2
        return cls(jet.p, T0, N0, np.cross(T0, N0))


def _unit_normal_seed(T0: np.ndarray, N0: np.ndarray) -> np.ndarray:
    """Unit normal for the integrator state; arbitrary but fixed when N0 = 0."""
    nn = float(np.linalg.norm(N0))
    if nn > 1e-14:
        return N0 / nn
    k = int(np.argmin(np.abs(T0)))
    e = np.zeros(3)
    e[k] = 1.0
    n = e - float(e @ T0) * T0
    return n / np.linalg.norm(n)


# ---------------------------------------------------------------------------
# frame integration (embedded Dormand-Prince 4(5) pair)
# ---------------------------------------------------------------------------

_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_DP_A = [
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_DP_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
                  -17253 / 339200, 22 / 525, -1 / 40])


def _frame_rhs(profile, s, y):
    kappa = profile.kappa(s)
    tau = profile.tau(s)
    T = y[3:6]
    n = y[6:9]
    b = y[9:12]
    out = np.empty(12)
    out[0:3] = T
    out[3:6] = kappa * n
    out[6:9] = -kappa * T + tau * b
    out[9:12] = -tau * n
    return out


def _project_state(y):
    """Snap (T, n, b) back onto the orthonormality constraints."""
    T = y[3:6]
    T /= np.linalg.norm(T)
    n = y[6:9]
    n -= float(n @ T) * T
    n /= np.linalg.norm(n)
    y[9:12] = np.cross(T, n)
    return y


class SynthesizedCurve(ParamCurve):
    """Unit-speed curve produced by frame integration.

    Carries the profile it was built from, frame samples on a uniform grid
    and the per-step frame orthogonality residuals after re-projection.
    """

    def __init__(self, profile, nodes, states, derivs, n_samples, step_gram_residuals):
        self.profile = profile
        self._nodes = nodes
        self._states = states
        self._derivs = derivs
        self.step_gram_residuals = step_gram_residuals
        super().__init__((nodes[0], nodes[-1]), self._eval, CurveKind.SYNTHESIZED,
                         params={"profile": profile.description},
                         constant_speed=1.0)
        grid = np.linspace(nodes[0], nodes[-1], n_samples)
        eps = 1e-10 * (1.0 + max(profile.kappa(s) ** 2 for s in grid))
        self.frame_samples = [self._frame_at(float(s), eps) for s in grid]

    def _state(self, s):
        nodes = self._nodes
        i = int(np.searchsorted(nodes, s, side="right")) - 1
        i = min(max(i, 0), len(nodes) - 2)
        h = nodes[i + 1] - nodes[i]
        u = (s - nodes[i]) / h
        y0, y1 = self._states[i], self._states[i + 1]
        f0, f1 = self._derivs[i], self._derivs[i + 1]
        h00 = (1.0 + 2.0 * u) * (1.0 - u) ** 2
        h10 = u * (1.0 - u) ** 2
        h01 = u * u * (3.0 - 2.0 * u)
        h11 = u * u * (u - 1.0)
        y = h00 * y0 + h * h10 * f0 + h01 * y1 + h * h11 * f1
        return _project_state(y)

    def _eval(self, s, order):
        y = self._state(s)
        p, T, n, b = y[0:3], y[3:6], y[6:9], y[9:12]
        kappa = self.profile.kappa(s)
        if order < 2:
            return _jet(s, p, T, order=order)
        tau = self.profile.tau(s)
        d2 = kappa * n
        if order < 3:
            return _jet(s, p, T, d2, order=order)
        kp = self.profile.kappa_deriv(s)
        d3 = -kappa * kappa * T + kp * n + kappa * tau * b
        if order < 4:
            return _jet(s, p, T, d2, d3, order=order)
        kpp = self.profile.kappa_deriv2(s)
        taup = self.profile.tau_deriv(s)
        d4 = (-3.0 * kappa * kp * T
              + (kpp - kappa ** 3 - kappa * tau * tau) * n
              + (2.0 * kp * tau + kappa * taup) * b)
        return _jet(s, p, T, d2, d3, d4)

    def _frame_at(self, s, eps):
        y = self._state(s)
        kappa = self.profile.kappa(s)
        T, n, b = y[3:6], y[6:9], y[9:12]
        k_sq = kappa * kappa
        return ModifiedFrame(s=s, T=T, N=kappa * n, B=kappa * b, kappa_sq=k_sq,
                             tau=float(self.profile.tau(s)),
                             kappa_valid=k_sq > eps)


def integrate_frame(profile: CurvatureProfile, pose: FramePose, *,
                    rtol: float = 1e-9, atol: float = 1e-9,
                    max_step: float = math.inf, n_samples: int = 512) -> SynthesizedCurve:
    """Integrate the frame system over the profile domain from ``pose``.

    Adaptive embedded 4(5) stepping; after every accepted step the frame part
    of the state is re-projected onto its orthonormality constraints.  Raises
    :class:`IntegrationFailureError` if the controller hits the step floor.
    """
    lo, hi = profile.domain
    pose.validate(profile.kappa(lo))
    n0 = _unit_normal_seed(pose.T0, pose.N0)
    T0 = pose.T0 / np.linalg.norm(pose.T0)
    y = np.concatenate([pose.p0, T0, n0, np.cross(T0, n0)])

    span = hi - lo
    h_floor = 1e-14 * span
    h = min(1e-3 * span, max_step)
    s = lo
    f = _frame_rhs(profile, s, y)

    nodes = [s]
    states = [y.copy()]
    derivs = [f.copy()]
    gram = []

    k = np.empty((7, 12))
    while s < hi:
        h = min(h, hi - s, max_step)
        if h < h_floor:
            raise IntegrationFailureError(
                f"step size underflow at s = {s:.9g}", last_s=s)
        k[0] = f
        for i in range(5):
            ys = y + h * (k[: i + 1].T @ _DP_A[i])
            k[i + 1] = _frame_rhs(profile, s + _DP_C[i + 1] * h, ys)
        y5 = y + h * (k[:6].T @ _DP_B5)
        k[6] = _frame_rhs(profile, s + h, y5)
        err_vec = h * (k.T @ _DP_E)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y5))
        err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))
        if err <= 1.0:
            s = s + h
            y = _project_state(y5)
            f = _frame_rhs(profile, s, y)
            nodes.append(s)
            states.append(y.copy())
            derivs.append(f.copy())
            gram.append(_frame_gram_residual(y, profile.kappa(s)))
        factor = 0.9 * (err + 1e-300) ** -0.2
        h *= min(5.0, max(0.2, factor))

    return SynthesizedCurve(profile, np.array(nodes), np.array(states),
                            np.array(derivs), n_samples, np.array(gram))


def _frame_gram_residual(y, kappa):
    T, n, b = y[3:6], y[6:9], y[9:12]
    N, B = kappa * n, kappa * b
    k2 = kappa * kappa
    return float(max(abs(T @ T - 1.0), abs(N @ N - k2), abs(B @ B - k2),
                     abs(T @ N), abs(T @ B), abs(N @ B)))


# ---------------------------------------------------------------------------
# offset-constant relations
# ---------------------------------------------------------------------------

def kappa_from_mannheim_condition(c: float, tau: Callable, branch: str = "plus",
                                  domain=None, n_check: int = 1000) -> Callable:
    """Invert kappa = c * (kappa^2 + tau^2) for kappa as a function of s.

    Returns the selected root (1 +- sqrt(1 - 4 c^2 tau^2)) / (2 c) of the
    quadratic c k^2 - k + c tau^2 = 0.  The plus branch is continuous with the
    circle limit tau -> 0, kappa -> 1/c.
    """
    if c == 0.0:
        raise ValueError("offset constant c must be nonzero")
    if branch not in ("plus", "minus"):
        raise ValueError(f"branch must be 'plus' or 'minus', got {branch!r}")
    sign = 1.0 if branch == "plus" else -1.0

    def kappa(s):
        t = tau(s)
        disc = 1.0 - 4.0 * c * c * t * t
        if disc < -1e-12:
            raise InfeasibleProfileError(
                f"discriminant negative at s = {s:.6g} (4c^2 tau^2 = {4 * c * c * t * t:.6g})",
                violating=[s])
        return (1.0 + sign * math.sqrt(max(disc, 0.0))) / (2.0 * c)

    if domain is not None:
        grid = np.linspace(domain[0], domain[1], n_check)
        bad = [float(s) for s in grid if 4.0 * c * c * tau(s) ** 2 > 1.0 + 1e-12]
        if bad:
            raise InfeasibleProfileError(
                f"discriminant negative on {len(bad)} of {n_check} nodes "
                f"(first at s = {bad[0]:.6g})", violating=bad)
    return kappa


class TorsionSolution:
    """Piecewise solution of the partner-torsion equation.

    Callable on the solved window; ``blew_up`` is True when the solution hit
    the magnitude cap (tangent-style pole) before a window end, in which case
    ``blowups`` holds the arc-length values where stepping stopped.
    """

    def __init__(self, window, s0, solved, dense_fwd, dense_bwd, blowups, cap):
        self.window = window
        self.s0 = s0
        self.solved = solved
        self.blowups = blowups
        self.blew_up = bool(blowups)
        self.cap = cap
        self._fwd = dense_fwd
        self._bwd = dense_bwd

    def _eval_scalar(self, s: float) -> float:
        lo, hi = self.solved
        if not lo - 1e-12 <= s <= hi + 1e-12:
            raise ParameterDomainError(
                f"s* = {s:.6g} outside solved window [{lo:.6g}, {hi:.6g}]")
        s = min(max(s, lo), hi)
        if s >= self.s0 and self._fwd is not None:
            return float(self._fwd(s)[0])
        if s <= self.s0 and self._bwd is not None:
            return float(self._bwd(s)[0])
        return float("nan")

    def __call__(self, s):
        if np.ndim(s) == 0:
            return self._eval_scalar(float(s))
        return np.array([self._eval_scalar(float(x)) for x in np.asarray(s).ravel()])


def partner_torsion_ode(a: float, kappa: Callable, tau0: float = 0.0,
                        window=(0.0, 1.0), s0: float = 0.0, cap: float = 1e6,
                        rtol: float = 1e-10, atol: float = 1e-12) -> TorsionSolution:
    """Integrate tau' = (kappa / a) (1 + a^2 tau^2) from tau(s0) = tau0.

    Integration refuses to step past blow-up: it stops where |tau| reaches
    ``cap`` and records the location (genuine tangent poles are detected, not
    chased).
    """
    if a == 0.0:
        raise ValueError("offset constant a must be nonzero")
    lo, hi = float(window[0]), float(window[1])
    if not lo <= s0 <= hi:
        raise ValueError(f"anchor s0 = {s0} outside window [{lo}, {hi}]")

    def rhs(s, y):
        return [(kappa(s) / a) * (1.0 + a * a * y[0] * y[0])]

    def hit_cap(s, y):
        return abs(y[0]) - cap

    hit_cap.terminal = True

    blowups = []
    dense_fwd = dense_bwd = None
    solved_lo = solved_hi = s0
    if hi > s0:
        sol = solve_ivp(rhs, (s0, hi), [float(tau0)], method="RK45",
                        dense_output=True, events=hit_cap, rtol=rtol, atol=atol)
        dense_fwd = sol.sol
        solved_hi = float(sol.t[-1])
        if sol.status == 1:
            blowups.append(solved_hi)
    if lo < s0:
        sol = solve_ivp(rhs, (s0, lo), [float(tau0)], method="RK45",
                        dense_output=True, events=hit_cap, rtol=rtol, atol=atol)
        dense_bwd = sol.sol
        solved_lo = float(sol.t[-1])
        if sol.status == 1:
            blowups.append(solved_lo)
    return TorsionSolution((lo, hi), s0, (solved_lo, solved_hi),
                           dense_fwd, dense_bwd, sorted(blowups), cap)


class ClosedFormTorsion:
    """tau(s*) = (1/a) tan( integral of kappa from s0 to s* + c0 )."""

    def __init__(self, a, kappa, c0=0.0, s0=0.0, pole_margin=1e-6):
        if a == 0.0:
            raise ValueError("offset constant a must be nonzero")
        self.a = float(a)
        self.kappa = kappa
        self.c0 = float(c0)
        self.s0 = float(s0)
        self.pole_margin = float(pole_margin)

    def phase(self, s: float) -> float:
        integral, _ = quad(self.kappa, self.s0, s, epsabs=1e-12, epsrel=1e-12, limit=200)
        return integral + self.c0

    def _eval_scalar(self, s: float) -> float:
        phase = self.phase(s)
        frac = (phase - 0.5 * math.pi) / math.pi
        dist = abs(frac - round(frac)) * math.pi
        if dist < self.pole_margin:
            raise PoleProximityError(
                f"phase {phase:.6g} within {dist:.3g} of a tangent pole at s* = {s:.6g}")
        return math.tan(phase) / self.a

    def __call__(self, s):
        if np.ndim(s) == 0:
            return self._eval_scalar(float(s))
        return np.array([self._eval_scalar(float(x)) for x in np.asarray(s).ravel()])


def partner_torsion_closed_form(a: float, kappa: Callable, c0: float = 0.0,
                                s0: float = 0.0,
                                pole_margin: float = 1e-6) -> ClosedFormTorsion:
    """Closed-form solution of the partner-torsion equation; see the ODE twin."""
    return ClosedFormTorsion(a, kappa, c0=c0, s0=s0, pole_margin=pole_margin)


# ---------------------------------------------------------------------------
# rigid alignment
# ---------------------------------------------------------------------------

@dataclass
class Alignment:
    """Proper-rotation least-squares alignment of two ordered point sets."""

    rotation: np.ndarray
    translation: np.ndarray
    rmse: float
    ambiguous: bool = False

    def apply(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points) @ self.rotation.T + self.translation


def rigid_align(A, B) -> Alignment:
    """Align point list ``A`` onto ``B`` by a proper rotation plus translation.

    Collinear point spreads make the rotation ambiguous; those fall back to a
    translation-only alignment with the ``ambiguous`` flag set.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape or A.ndim != 2 or A.shape[1] != 3:
        raise ValueError("point lists must be matching (n, 3) arrays")
    if len(A) < 3:
        raise ValueError("need at least 3 points")
    ca, cb = A.mean(axis=0), B.mean(axis=0)
    H = (A - ca).T @ (B - cb)
    U, S, Vt = np.linalg.svd(H)
    if S[0] > 0 and S[1] / S[0] < 1e-12:
        R = np.eye(3)
        ambiguous = True
    else:
        d = np.sign(np.linalg.det(Vt.T @ U.T))
        R = Vt.T @ np.diag([1.0, 1.0, d]) @ U.T
        ambiguous = False
    t = cb - R @ ca
    resid = A @ R.T + t - B
    rmse = float(np.sqrt(np.mean(np.sum(resid ** 2, axis=1))))
    return Alignment(rotation=R, translation=t, rmse=rmse, ambiguous=ambiguous)
