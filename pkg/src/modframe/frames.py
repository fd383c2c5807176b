"""Moving frames of unit-speed curves and residuals of their governing equations.

The frame carried here is the orthogonal (not orthonormal) one obtained from
T = d1, N = dT/ds, B = T x N.  Both N and B have squared length kappa^2, so
the frame stays defined through isolated curvature zeros, where the classical
Frenet normal and binormal are not.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .curves import CurveJet, ParamCurve
from .errors import CurvatureDegenerateError, NonUnitSpeedError, ParameterDomainError

#: default tolerance on <d1,d1> = 1 for the unit-speed contract
UNIT_SPEED_TOL = 1e-6


@dataclass
class ModifiedFrame:
    """Frame sample at arc length ``s``.

    ``kappa_sq`` is <N, N>; ``kappa_valid`` is False where kappa_sq sits below
    the degeneracy threshold and the classical frame would be undefined.
    """

    s: float
    T: np.ndarray
    N: np.ndarray
    B: np.ndarray
    kappa_sq: float
    tau: float
    kappa_valid: bool


class FrenetFrame(NamedTuple):
    t: np.ndarray
    n: np.ndarray
    b: np.ndarray


class TorsionResult(NamedTuple):
    value: float
    removable: bool    # True when the point needed the limit through kappa = 0
    degenerate: bool   # True when the neighborhood is curvature-free as well


class OdeResiduals(NamedTuple):
    """Finite-difference residuals of the frame derivative relations.

    ``N`` and ``B`` are None where the curvature is below threshold (the
    kappa'/kappa coefficient is singular at curvature zeros, so those rows are
    skipped and only the T row is reported).
    """

    T: float
    N: float | None
    B: float | None


def kappa_threshold(curve: ParamCurve, n: int = 512) -> float:
    """Scale-aware curvature-degeneracy cutoff for ``curve``.

    Computed as 1e-10 * (1 + max sampled kappa^2) and cached on the curve.
    """
    if curve._kappa_sq_ceiling is None:
        lo, hi = curve.domain
        ks = 0.0
        for s in np.linspace(lo, hi, n):
            d2 = curve.jet(s, 2).d2
            ks = max(ks, float(d2 @ d2))
        curve._kappa_sq_ceiling = ks
    return 1e-10 * (1.0 + curve._kappa_sq_ceiling)


def _check_unit_speed(jet: CurveJet, tol: float = UNIT_SPEED_TOL):
    g = float(jet.d1 @ jet.d1)
    if abs(g - 1.0) > tol:
        raise NonUnitSpeedError(
            f"<d1,d1> = {g:.6g} at s = {jet.t:.6g}; reparametrize by arc length first"
        )


def torsion_detail(jet: CurveJet, eps_kappa: float | None = None,
                   jet_source: Callable[[float, int], CurveJet] | None = None,
                   domain=None) -> TorsionResult:
    """Torsion det(d1, d2, d3) / kappa^2 with removable-singularity handling.

    Where kappa^2 falls below ``eps_kappa`` the value is recovered as the
    limit from symmetric parameter offsets; if the neighborhood is degenerate
    too (straight stretch) the result is 0 with the degenerate flag set.
    """
    _check_unit_speed(jet)
    if jet.order < 3:
        raise ValueError("torsion needs derivative orders up to 3")
    kappa_sq = float(jet.d2 @ jet.d2)
    if eps_kappa is None:
        eps_kappa = 1e-10 * (1.0 + kappa_sq)
    if kappa_sq >= eps_kappa:
        val = float(jet.d1 @ np.cross(jet.d2, jet.d3)) / kappa_sq
        return TorsionResult(val, False, False)

    if jet_source is None:
        return TorsionResult(0.0, True, True)

    # limit through the zero: average det/kappa^2 at +-h where defined
    h = max(1e-5, eps_kappa ** 0.25)
    values = []
    for side in (-1.0, 1.0):
        t = jet.t + side * h
        if domain is not None:
            t = min(max(t, domain[0]), domain[1])
        try:
            near = jet_source(t, 3)
        except ParameterDomainError:
            continue
        ks = float(near.d2 @ near.d2)
        if ks >= eps_kappa:
            values.append(float(near.d1 @ np.cross(near.d2, near.d3)) / ks)
    if not values:
        return TorsionResult(0.0, True, True)
    return TorsionResult(float(np.mean(values)), True, False)


def torsion(jet: CurveJet, eps_kappa: float | None = None,
            jet_source=None, domain=None) -> float:
    """Torsion value; see :func:`torsion_detail` for the flags."""
    return torsion_detail(jet, eps_kappa, jet_source, domain).value


def modified_frame(curve: ParamCurve, s: float,
                   eps_kappa: float | None = None) -> ModifiedFrame:
    """Frame {T, N, B} of a unit-speed curve at arc length ``s``."""
    jet = curve.jet(s, 3)
    _check_unit_speed(jet)
    if eps_kappa is None:
        eps_kappa = kappa_threshold(curve)
    T = jet.d1
    N = jet.d2
    B = np.cross(T, N)
    kappa_sq = float(N @ N)
    tau = torsion(jet, eps_kappa, jet_source=curve.jet, domain=curve.domain)
    return ModifiedFrame(s=float(s), T=T, N=N, B=B, kappa_sq=kappa_sq,
                         tau=tau, kappa_valid=kappa_sq > eps_kappa)


def frame_grid(curve: ParamCurve, s_values) -> list[ModifiedFrame]:
    """Frames at each of ``s_values`` (shared degeneracy threshold)."""
    eps = kappa_threshold(curve)
    return [modified_frame(curve, float(s), eps) for s in np.atleast_1d(s_values)]


def frenet_frame(frame: ModifiedFrame) -> FrenetFrame:
    """Classical unit frame {t, n, b}; undefined where curvature vanishes."""
    if not frame.kappa_valid:
        raise CurvatureDegenerateError(
            f"classical frame undefined at s = {frame.s:.6g} (kappa ~ 0)"
        )
    kappa = math.sqrt(frame.kappa_sq)
    return FrenetFrame(t=frame.T, n=frame.N / kappa, b=frame.B / kappa)


def gram_residuals(frame: ModifiedFrame) -> np.ndarray:
    """Six inner-product residuals of the frame:

    |<T,T> - 1|, |<N,N> - kappa^2|, |<B,B> - kappa^2|,
    |<T,N>|, |<T,B>|, |<N,B>|.
    """
    T, N, B, k2 = frame.T, frame.N, frame.B, frame.kappa_sq
    return np.abs([T @ T - 1.0, N @ N - k2, B @ B - k2, T @ N, T @ B, N @ B])


def frame_ode_residual(curve: ParamCurve, s: float, h: float,
                       eps_kappa: float | None = None) -> OdeResiduals:
    """Central-difference residuals of the frame derivative equations at ``s``.

    The left sides are (X(s+h) - X(s-h)) / 2h for X in {T, N, B}; the right
    sides use analytically evaluated kappa^2, kappa'/kappa and tau at ``s``.
    """
    lo, hi = curve.domain
    if s - h < lo - 1e-12 or s + h > hi + 1e-12:
        raise ParameterDomainError(f"stencil [{s - h}, {s + h}] leaves the domain")
    if eps_kappa is None:
        eps_kappa = kappa_threshold(curve)
    fm = modified_frame(curve, s, eps_kappa)
    fp = modified_frame(curve, s + h, eps_kappa)
    fmn = modified_frame(curve, s - h, eps_kappa)

    dT = (fp.T - fmn.T) / (2.0 * h)
    res_T = float(np.linalg.norm(dT - fm.N))
    if not fm.kappa_valid:
        return OdeResiduals(res_T, None, None)

    jet = curve.jet(s, 3)
    # kappa' / kappa = d(kappa^2)/ds / (2 kappa^2) = <d2, d3> / kappa^2
    kp_over_k = float(jet.d2 @ jet.d3) / fm.kappa_sq
    dN = (fp.N - fmn.N) / (2.0 * h)
    dB = (fp.B - fmn.B) / (2.0 * h)
    rhs_N = -fm.kappa_sq * fm.T + kp_over_k * fm.N + fm.tau * fm.B
    rhs_B = -fm.tau * fm.N + kp_over_k * fm.B
    return OdeResiduals(res_T,
                        float(np.linalg.norm(dN - rhs_N)),
                        float(np.linalg.norm(dB - rhs_B)))


# ---------------------------------------------------------------------------
# frame dump CSV
# ---------------------------------------------------------------------------

FRAME_CSV_HEADER = ("s,x,y,z,Tx,Ty,Tz,Nx,Ny,Nz,Bx,By,Bz,kappa_sq,tau,kappa_valid")


def frame_rows(curve: ParamCurve, frames: list[ModifiedFrame]):
    for f in frames:
        p = curve.jet(f.s, 0).p
        yield ([f.s, *p, *f.T, *f.N, *f.B, f.kappa_sq, f.tau], f.kappa_valid)


def write_frame_csv(path, curve: ParamCurve, frames: list[ModifiedFrame]):
    """Dump frame samples in the delimited format used across the toolkit."""
    with open(path, "w", newline="") as fh:
        fh.write(FRAME_CSV_HEADER + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        for numeric, valid in frame_rows(curve, frames):
            writer.writerow([f"{v:.17g}" for v in numeric] + ["1" if valid else "0"])
