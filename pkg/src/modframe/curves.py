"""Space curves: analytic catalog, derivative jets, arc-length reparametrization.

Curves are represented by an evaluator mapping a parameter value to a jet of
position and derivatives up to order 4.  Catalog curves carry exact jets;
sampled curves are backed by a quintic smoothing spline so that third
derivatives (needed for torsion) are continuous.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from scipy import interpolate
from scipy.integrate import solve_ivp

from .errors import (
    InvalidCurveParams,
    IrregularCurveError,
    ParameterDomainError,
    SampleDataError,
)

_SPEED_FLOOR_REL = 1e-12  # relative regularity threshold on |d1|


class CurveKind(Enum):
    LINE = "line"
    CIRCLE = "circle"
    CIRCULAR_HELIX = "helix"
    PLANAR_CUBIC = "planar_cubic"
    TWISTED_CUBIC = "twisted_cubic"
    SAMPLED = "sampled"
    SYNTHESIZED = "synthesized"


_KIND_ALIASES = {
    "line": CurveKind.LINE,
    "circle": CurveKind.CIRCLE,
    "helix": CurveKind.CIRCULAR_HELIX,
    "circular_helix": CurveKind.CIRCULAR_HELIX,
    "planar_cubic": CurveKind.PLANAR_CUBIC,
    "twisted_cubic": CurveKind.TWISTED_CUBIC,
}


@dataclass
class CurveJet:
    """Position and parameter derivatives of a curve at one parameter value.

    ``order`` records how many derivative orders are populated; higher
    derivatives are zero-filled and must not be trusted.
    """

    t: float
    p: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    d3: np.ndarray
    d4: np.ndarray
    order: int = 4

    def speed(self) -> float:
        return float(np.linalg.norm(self.d1))


def _jet(t, p, d1, d2=None, d3=None, d4=None, order=4):
    z = np.zeros(3)
    return CurveJet(
        t=float(t),
        p=np.asarray(p, dtype=float),
        d1=np.asarray(d1, dtype=float),
        d2=z if d2 is None else np.asarray(d2, dtype=float),
        d3=z if d3 is None else np.asarray(d3, dtype=float),
        d4=z if d4 is None else np.asarray(d4, dtype=float),
        order=order,
    )


class ParamCurve:
    """Evaluatable curve over a closed parameter interval.

    The evaluator must be defined and smooth in the interior of the domain and
    the first derivative must never vanish (regular curve).
    """

    def __init__(self, domain, evaluator, kind, params=None, constant_speed=None):
        lo, hi = float(domain[0]), float(domain[1])
        if not lo < hi:
            raise InvalidCurveParams(f"empty parameter domain [{lo}, {hi}]")
        self.domain = (lo, hi)
        self.kind = kind
        self.params = dict(params or {})
        #: exact speed when the curve is known to have constant |d1|, else None
        self.constant_speed = constant_speed
        self._evaluator = evaluator
        self._kappa_sq_ceiling = None  # lazy cache used by frames.kappa_threshold

    @property
    def span(self) -> float:
        return self.domain[1] - self.domain[0]

    def clamp(self, t: float) -> float:
        lo, hi = self.domain
        slack = 1e-9 * max(1.0, self.span)
        if t < lo - slack or t > hi + slack:
            raise ParameterDomainError(
                f"parameter {t} outside domain [{lo}, {hi}]"
            )
        return min(max(t, lo), hi)

    def jet(self, t: float, order: int = 4) -> CurveJet:
        """Evaluate the derivative jet at ``t``.

        Derivative orders above ``order`` are zero-filled and flagged absent
        via ``CurveJet.order``.
        """
        if not 0 <= order <= 4:
            raise ValueError("jet order must be between 0 and 4")
        t = self.clamp(t)
        jet = self._evaluator(t, order)
        if order < 4:
            z = np.zeros(3)
            if order < 1:
                jet.d1 = z
            if order < 2:
                jet.d2 = z
            if order < 3:
                jet.d3 = z
            jet.d4 = z if order < 4 else jet.d4
            jet.order = order
        return jet

    def positions(self, t_values) -> np.ndarray:
        return np.array([self.jet(t, 0).p for t in np.atleast_1d(t_values)])


def eval_jet(curve: ParamCurve, t: float, order: int = 4) -> CurveJet:
    """Evaluate ``curve`` at parameter ``t`` up to derivative ``order``."""
    return curve.jet(t, order)


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------

def make_catalog_curve(kind, *, domain=None, **params) -> ParamCurve:
    """Build an analytic catalog curve with exact jets to order 4.

    Supported kinds and parameters:

    * ``line``: ``point`` (default origin), ``direction`` (default +z)
    * ``circle``: ``radius`` > 0
    * ``helix``: ``r`` > 0, ``b`` real; (r cos t, r sin t, b t)
    * ``planar_cubic``: (t, t^3, 0), curvature vanishes at t = 0
    * ``twisted_cubic``: (t, t^2, t^3)
    """
    if isinstance(kind, CurveKind):
        kind_tag = kind
    else:
        try:
            kind_tag = _KIND_ALIASES[str(kind).lower()]
        except KeyError:
            raise InvalidCurveParams(f"unknown catalog curve kind {kind!r}") from None

    if kind_tag is CurveKind.LINE:
        point = np.asarray(params.pop("point", (0.0, 0.0, 0.0)), dtype=float)
        direction = np.asarray(params.pop("direction", (0.0, 0.0, 1.0)), dtype=float)
        _reject_extra(params)
        speed = float(np.linalg.norm(direction))
        if speed == 0.0:
            raise InvalidCurveParams("line direction must be nonzero")
        dom = domain or (0.0, 1.0)

        def ev(t, order):
            return _jet(t, point + t * direction, direction)

        return ParamCurve(dom, ev, kind_tag,
                          params={"point": point.tolist(), "direction": direction.tolist()},
                          constant_speed=speed)

    if kind_tag is CurveKind.CIRCLE:
        radius = float(params.pop("radius", params.pop("R", 1.0)))
        _reject_extra(params)
        if radius <= 0:
            raise InvalidCurveParams(f"circle radius must be positive, got {radius}")
        dom = domain or (0.0, 2.0 * math.pi)
        return ParamCurve(dom, _helix_evaluator(radius, 0.0), kind_tag,
                          params={"radius": radius}, constant_speed=radius)

    if kind_tag is CurveKind.CIRCULAR_HELIX:
        r = float(params.pop("r"))
        b = float(params.pop("b"))
        _reject_extra(params)
        if r <= 0:
            raise InvalidCurveParams(f"helix radius must be positive, got {r}")
        dom = domain or (0.0, 2.0 * math.pi)
        return ParamCurve(dom, _helix_evaluator(r, b), kind_tag,
                          params={"r": r, "b": b},
                          constant_speed=math.hypot(r, b))

    if kind_tag is CurveKind.PLANAR_CUBIC:
        _reject_extra(params)
        dom = domain or (-1.0, 1.0)

        def ev(t, order):
            return _jet(t, (t, t ** 3, 0.0), (1.0, 3.0 * t * t, 0.0),
                        (0.0, 6.0 * t, 0.0), (0.0, 6.0, 0.0))

        return ParamCurve(dom, ev, kind_tag)

    if kind_tag is CurveKind.TWISTED_CUBIC:
        _reject_extra(params)
        dom = domain or (-1.0, 1.0)

        def ev(t, order):
            return _jet(t, (t, t * t, t ** 3), (1.0, 2.0 * t, 3.0 * t * t),
                        (0.0, 2.0, 6.0 * t), (0.0, 0.0, 6.0))

        return ParamCurve(dom, ev, kind_tag)

    raise InvalidCurveParams(f"{kind_tag} is not an analytic catalog kind")


def _reject_extra(params):
    if params:
        raise InvalidCurveParams(f"unexpected curve parameters: {sorted(params)}")


def _helix_evaluator(r, b):
    def ev(t, order):
        c, s = math.cos(t), math.sin(t)
        return _jet(t, (r * c, r * s, b * t), (-r * s, r * c, b),
                    (-r * c, -r * s, 0.0), (r * s, -r * c, 0.0), (r * c, r * s, 0.0))

    return ev


# ---------------------------------------------------------------------------
# arc length
# ---------------------------------------------------------------------------

class ArcLengthMap:
    """Monotone map between a curve's parameter and its arc length.

    ``forward`` integrates |d1| by adaptive quadrature to relative accuracy
    ``tol``; ``inverse`` solves forward(t) = s by bisection-safeguarded Newton.
    """

    def __init__(self, curve: ParamCurve, tol: float = 1e-9):
        if tol <= 0:
            raise ValueError("tolerance must be positive")
        self.curve = curve
        self.tol = float(tol)
        lo, hi = curve.domain

        probe = np.linspace(lo, hi, 1025)
        speeds = np.array([curve.jet(t, 1).speed() for t in probe])
        floor = _SPEED_FLOOR_REL * max(1.0, float(speeds.max()))
        if speeds.min() < floor:
            bad = probe[speeds < floor]
            raise IrregularCurveError(
                f"speed below regularity threshold near t={bad[0]:.6g}"
            )

        if curve.constant_speed is not None:
            self._sigma = float(curve.constant_speed)
            self.total_length = self._sigma * curve.span
            self._sol = None
            self._t_tab = probe
            self._s_tab = self._sigma * (probe - lo)
        else:
            sol = solve_ivp(
                lambda t, y: [curve.jet(t, 1).speed()],
                (lo, hi), [0.0], method="DOP853", dense_output=True,
                rtol=min(tol, 1e-8), atol=tol * 1e-3 * max(1.0, float(speeds.mean()) * curve.span),
            )
            if not sol.success:
                raise IrregularCurveError(f"arc-length quadrature failed: {sol.message}")
            self._sigma = None
            self._sol = sol.sol
            self.total_length = float(sol.y[0, -1])
            self._t_tab = probe
            self._s_tab = np.array([self._forward_scalar(t) for t in probe])

    # -- forward -----------------------------------------------------------
    def _forward_scalar(self, t: float) -> float:
        lo, hi = self.curve.domain
        t = min(max(t, lo), hi)
        if self._sigma is not None:
            return self._sigma * (t - lo)
        return float(self._sol(t)[0])

    def forward(self, t):
        """Arc length from the domain start to parameter ``t``."""
        if np.ndim(t) == 0:
            return self._forward_scalar(float(t))
        return np.array([self._forward_scalar(float(x)) for x in np.asarray(t).ravel()])

    # -- inverse -----------------------------------------------------------
    def _inverse_scalar(self, s: float) -> float:
        lo, hi = self.curve.domain
        s = min(max(s, 0.0), self.total_length)
        if self._sigma is not None:
            return lo + s / self._sigma
        i = int(np.searchsorted(self._s_tab, s))
        i = min(max(i, 1), len(self._s_tab) - 1)
        t_lo, t_hi = self._t_tab[i - 1], self._t_tab[i]
        t = float(np.interp(s, self._s_tab[i - 1:i + 1], self._t_tab[i - 1:i + 1]))
        f_tol = max(5e-15 * max(1.0, self.total_length), 1e-3 * self.tol)
        for _ in range(60):
            f = self._forward_scalar(t) - s
            if f > 0:
                t_hi = min(t_hi, t)
            else:
                t_lo = max(t_lo, t)
            if abs(f) <= f_tol:
                break
            v = self.curve.jet(t, 1).speed()
            t_new = t - f / v
            if not t_lo <= t_new <= t_hi:
                t_new = 0.5 * (t_lo + t_hi)
            if abs(t_new - t) < 1e-16 * max(1.0, abs(hi - lo)):
                t = t_new
                break
            t = t_new
        return float(min(max(t, lo), hi))

    def inverse(self, s):
        """Parameter value at arc length ``s``."""
        if np.ndim(s) == 0:
            return self._inverse_scalar(float(s))
        return np.array([self._inverse_scalar(float(x)) for x in np.asarray(s).ravel()])


def arc_length_map(curve: ParamCurve, tol: float = 1e-9) -> ArcLengthMap:
    """Build the arc-length map of a regular curve."""
    return ArcLengthMap(curve, tol)


def reparametrize(curve: ParamCurve, alm: ArcLengthMap) -> ParamCurve:
    """Return the unit-speed version of ``curve`` using its arc-length map.

    Jets are transformed through order 4 by the chain rule, so the returned
    curve satisfies <d1, d1> = 1 up to the map tolerance everywhere.
    """
    if alm.curve is not curve:
        raise ValueError("arc-length map was built from a different curve")

    def ev(s, order):
        t = alm.inverse(s)
        if order == 0:
            return _jet(s, curve.jet(t, 0).p, np.zeros(3), order=0)
        base = curve.jet(t, order)
        d1 = base.d1
        sig2 = float(d1 @ d1)
        sig = math.sqrt(sig2)
        tp = 1.0 / sig
        p = base.p
        out_d1 = d1 * tp
        if order < 2:
            return _jet(s, p, out_d1, order=order)

        d2 = base.d2
        sig_p = float(d1 @ d2) / sig
        tpp = -sig_p / sig ** 3
        out_d2 = d2 * tp * tp + d1 * tpp
        if order < 3:
            return _jet(s, p, out_d1, out_d2, order=order)

        d3 = base.d3
        sig_pp = (float(d2 @ d2) + float(d1 @ d3) - sig_p ** 2) / sig
        tppp = 3.0 * sig_p ** 2 / sig ** 5 - sig_pp / sig ** 4
        out_d3 = d3 * tp ** 3 + 3.0 * d2 * tp * tpp + d1 * tppp
        if order < 4:
            return _jet(s, p, out_d1, out_d2, out_d3, order=order)

        d4 = base.d4
        sig_ppp = (3.0 * float(d2 @ d3) + float(d1 @ d4) - 3.0 * sig_p * sig_pp) / sig
        tpppp = (-sig_ppp / sig ** 5 + 10.0 * sig_p * sig_pp / sig ** 6
                 - 15.0 * sig_p ** 3 / sig ** 7)
        out_d4 = (d4 * tp ** 4 + 6.0 * d3 * tp * tp * tpp
                  + d2 * (3.0 * tpp ** 2 + 4.0 * tp * tppp) + d1 * tpppp)
        return _jet(s, p, out_d1, out_d2, out_d3, out_d4)

    params = dict(curve.params)
    params["unit_speed"] = True
    return ParamCurve((0.0, alm.total_length), ev, curve.kind, params=params,
                      constant_speed=1.0)


def unit_speed(curve: ParamCurve, tol: float = 1e-9) -> ParamCurve:
    """Convenience composition of :func:`arc_length_map` and :func:`reparametrize`."""
    return reparametrize(curve, arc_length_map(curve, tol))


# ---------------------------------------------------------------------------
# sampled curves
# ---------------------------------------------------------------------------

def curve_from_samples(points, closed: bool = False, smoothing: float = 0.0,
                       t=None) -> ParamCurve:
    """Fit a C3 spline curve through an ordered list of 3-vectors.

    ``smoothing`` = 0 interpolates the points exactly; larger values trade
    fidelity for smoothness.  A quintic spline is used so torsion, which needs
    third derivatives, is well defined.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise SampleDataError("expected an (n, 3) array of points")
    if len(pts) < 8:
        raise SampleDataError(f"need at least 8 points, got {len(pts)}")
    if smoothing < 0:
        raise SampleDataError("smoothing must be nonnegative")
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    if np.any(seg == 0.0):
        i = int(np.argmin(seg))
        raise SampleDataError(f"duplicate consecutive points at index {i}")

    u = None
    if t is not None:
        u = np.asarray(t, dtype=float)
        if len(u) != len(pts) or np.any(np.diff(u) <= 0):
            raise SampleDataError("parameter values must be strictly increasing")

    tck, u_out = interpolate.splprep(pts.T, u=u, k=5, s=smoothing, per=int(closed))

    def ev(tt, order):
        vals = [np.asarray(interpolate.splev(tt, tck, der=d), dtype=float)
                for d in range(5)]
        return _jet(tt, *(v.reshape(3) for v in vals))

    return ParamCurve((float(u_out[0]), float(u_out[-1])), ev, CurveKind.SAMPLED,
                      params={"n_points": len(pts), "smoothing": float(smoothing),
                              "closed": bool(closed)})


def load_samples_csv(path) -> tuple[np.ndarray, np.ndarray | None]:
    """Read curve samples from CSV with header ``t,x,y,z`` or ``x,y,z``."""
    if hasattr(path, "read"):
        text = path.read()
    else:
        with open(path, "r", newline="") as fh:
            text = fh.read()
    reader = csv.reader(io.StringIO(text))
    rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    if not rows:
        raise SampleDataError("empty sample file")
    header = [h.strip().lower() for h in rows[0]]
    if header == ["t", "x", "y", "z"]:
        has_t = True
    elif header == ["x", "y", "z"]:
        has_t = False
    else:
        raise SampleDataError(f"expected header 't,x,y,z' or 'x,y,z', got {rows[0]}")
    try:
        data = np.array([[float(v) for v in row] for row in rows[1:]])
    except ValueError as exc:
        raise SampleDataError(f"malformed numeric row: {exc}") from None
    if data.ndim != 2 or data.shape[1] != len(header):
        raise SampleDataError("inconsistent column count")
    if has_t:
        return data[:, 1:4], data[:, 0]
    return data, None


def curve_from_csv(path, closed: bool = False, smoothing: float = 0.0) -> ParamCurve:
    """Load samples from CSV and fit them; see :func:`curve_from_samples`."""
    pts, t = load_samples_csv(path)
    return curve_from_samples(pts, closed=closed, smoothing=smoothing, t=t)
