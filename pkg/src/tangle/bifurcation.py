"""Bifurcation curves in the ``(mu1, mu2)`` plane.

``L_+`` is the saddle-node line ``mu2 = 0``; ``L_h`` is where the image of
the unstable manifold of the saddle ``O1`` touches its stable manifold;
``L_k^+`` and ``L_k^-`` bound the stability window ``Delta_k`` of the fixed
point of ``T_k`` (multiplier ``+1`` and ``-1``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import rescale
from ._parallel import pmap
from ._roots import safeguarded_secant
from .errors import (
    BracketFailure,
    DLSRegion,
    MissedWindow,
    NoSaddle,
    OnBoundary,
    OutsideRD,
    PoleProximity,
    SeedFailure,
    TangleError,
)
from .model import LocalState, ModelConfig, fixed_points, t0_jac, t1
from .return_map import TOL_MULT, FixedPointRecord, ReturnMap

__all__ = [
    "TOL_CURVE",
    "MU2_WINDOW",
    "BifurcationCurve",
    "DomainTag",
    "LkPoint",
    "SliceInterval",
    "mu1_window",
    "trace_L_plus",
    "tangency_defect",
    "trace_L_h",
    "classify_domain",
    "homoclinic_count",
    "locate_L_k",
    "trace_L_k",
    "trace_windows",
    "window_interval",
    "delta_k_accumulation",
    "slice_intervals",
    "count_slice_windows",
]

TOL_CURVE = 1e-12
MU2_WINDOW = (-0.01, 0.01)
_DEFECT_SAMPLES = 201
_COUNT_SAMPLES = 4001


def mu1_window(cfg: ModelConfig) -> tuple[float, float]:
    return (-cfg.eps / 2.0, cfg.eps / 2.0)


@dataclass
class BifurcationCurve:
    curve_type: str  # Lplus, Lh, LkPlus, LkMinus
    k: int | None
    samples: list[tuple[float, float]]
    residuals: list[float]
    skipped: list[tuple[float, str]] = field(default_factory=list)

    def rows(self) -> list[tuple]:
        return [
            (self.curve_type, self.k, mu1, mu2, r)
            for (mu1, mu2), r in zip(self.samples, self.residuals)
        ]

    def mu1_at(self) -> dict[float, float]:
        return {mu2: mu1 for mu1, mu2 in self.samples}


@dataclass(frozen=True)
class DomainTag:
    tag: str  # I, II or III
    count: int

    def to_dict(self) -> dict:
        return {"domain": self.tag, "homoclinic_count": self.count}


# -- homoclinic curve and domains -------------------------------------------


def trace_L_plus(cfg: ModelConfig, samples: int = 51) -> BifurcationCurve:
    """The line ``mu2 = 0``; residual is ``|multiplier - 1|`` of the centre."""
    lo, hi = mu1_window(cfg)
    pts, res = [], []
    for mu1 in np.linspace(lo, hi, samples):
        c = cfg.with_mu(mu1=float(mu1), mu2=0.0)
        O = fixed_points(c).O1
        res.append(abs(t0_jac(O, c)[-1, -1] - 1.0))
        pts.append((float(mu1), 0.0))
    return BifurcationCurve("Lplus", None, pts, res)


def _image_height(u: float, cfg: ModelConfig, y_o1: float) -> float:
    return t1(LocalState(np.zeros(cfg.n), cfg.y_minus + u), cfg).y - y_o1


def _image_heights(us: np.ndarray, cfg: ModelConfig, y_o1: float) -> np.ndarray:
    # W^u_loc is {x = 0}, so only the unperturbed part of T1 vectorises
    p = cfg.perturbation
    if p is not None and (p.t1_x is not None or p.t1_y is not None):
        return np.array([_image_height(float(u), cfg, y_o1) for u in us])
    return cfg.mu1 + cfg.d * us * us - y_o1


def tangency_defect(mu1: float, mu2: float, cfg: ModelConfig) -> float:
    """Signed gap between ``T1(W^u_loc(O1))`` and ``W^s_loc(O1)`` near ``M+``.

    Minimum over ``|y - y_minus| <= eps`` of the image height above ``O1``
    for ``d > 0`` and maximum for ``d < 0``; zero exactly on ``L_h``.
    """
    if mu2 >= 0:
        raise NoSaddle("tangency defect needs mu2 < 0")
    c = cfg.with_mu(mu1=mu1, mu2=mu2)
    y_o1 = fixed_points(c).O1.y
    sgn = 1.0 if cfg.d > 0 else -1.0

    def g(u):
        return sgn * _image_height(u, c, y_o1)

    us = np.linspace(-cfg.eps, cfg.eps, _DEFECT_SAMPLES)
    vals = sgn * _image_heights(us, c, y_o1)
    i = int(np.argmin(vals))
    lo, hi = us[max(i - 1, 0)], us[min(i + 1, len(us) - 1)]
    best = float(vals[i])
    if hi > lo:
        r = minimize_scalar(g, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
        best = min(best, float(r.fun))
    return sgn * best


def trace_L_h(mu2_grid, cfg: ModelConfig, tol: float = TOL_CURVE) -> BifurcationCurve:
    pts, res = [], []
    for mu2 in sorted(float(m) for m in mu2_grid):
        if mu2 >= 0:
            raise NoSaddle("L_h exists only for mu2 < 0")
        y_o1 = fixed_points(cfg.with_mu(mu2=mu2)).O1.y
        lo, hi = y_o1 - cfg.eps, y_o1 + cfg.eps
        flo, fhi = tangency_defect(lo, mu2, cfg), tangency_defect(hi, mu2, cfg)
        if flo * fhi > 0:
            raise BracketFailure(f"no sign change of the tangency defect at mu2 = {mu2:.6g}")
        mu1 = brentq(lambda m: tangency_defect(m, mu2, cfg), lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps)
        pts.append((float(mu1), mu2))
        res.append(abs(tangency_defect(mu1, mu2, cfg)))
    return BifurcationCurve("Lh", None, pts, res)


def homoclinic_count(mu1: float, mu2: float, cfg: ModelConfig, samples: int = _COUNT_SAMPLES) -> int:
    """Transverse zeros of the image height along ``T1(W^u_loc(O1))``."""
    c = cfg.with_mu(mu1=mu1, mu2=mu2)
    y_o1 = fixed_points(c).O1.y
    us = np.linspace(y_o1 - cfg.y_minus, cfg.eps, samples)
    h = _image_heights(us, c, y_o1)
    s = np.sign(h)
    return int(np.count_nonzero(s[1:] * s[:-1] < 0))


def classify_domain(mu1: float, mu2: float, cfg: ModelConfig, tol: float = TOL_CURVE) -> DomainTag:
    if abs(mu2) <= tol:
        raise OnBoundary(f"mu2 = {mu2:.3g} lies on L_+")
    if mu2 > 0:
        return DomainTag("I", 0)
    defect = tangency_defect(mu1, mu2, cfg)
    if abs(defect) <= tol:
        raise OnBoundary(f"({mu1:.6g}, {mu2:.6g}) lies on L_h")
    separated = defect > 0 if cfg.d > 0 else defect < 0
    return DomainTag("II" if separated else "III", homoclinic_count(mu1, mu2, cfg))


# -- stability windows of T_k -----------------------------------------------

_M_TARGET = {"plus": -0.25, "minus": 0.75}
_M_INNER = {"plus": -0.2, "minus": 0.7}


@dataclass(frozen=True)
class LkPoint:
    k: int
    kind: str
    mu1: float
    mu2: float
    residual: float
    fixed_point: FixedPointRecord


def _base_frame(k: int, mu2: float, cfg: ModelConfig) -> rescale.RescaleFrame:
    # only M depends on mu1, and it does so affinely
    try:
        return rescale.frame(k, cfg.with_mu(mu1=0.0, mu2=mu2))
    except OutsideRD as exc:
        raise DLSRegion(str(exc)) from exc


def _sink_z(fr: rescale.RescaleFrame, mu1: float, seed=None) -> tuple[np.ndarray, FixedPointRecord]:
    fm = rescale.at_mu1(fr, mu1)
    if seed is None:
        Y = (-1.0 + math.sqrt(max(1.0 + 4.0 * fm.M, 0.0))) / 2.0
        seed = np.append(fm.cfg.b * Y, Y)
    return rescale.rescaled_fixed_point(fm, seed)


def _sink_for(fr: rescale.RescaleFrame, mu1: float) -> FixedPointRecord:
    """Fixed point of ``T_k`` at ``mu1`` seeded from the parabola sink."""
    return _sink_z(fr, mu1)[1]


def _locate_in_frame(fr: rescale.RescaleFrame, kind: str, mu2: float) -> LkPoint:
    if kind not in _M_TARGET:
        raise ValueError("kind must be 'plus' or 'minus'")

    last = [None]

    def lead(mu1):
        # warm start from the last converged secant iterate
        z, rec = _sink_z(fr, mu1, last[0])
        last[0] = z
        return float(np.real(rec.leading)), rec

    if kind == "plus":
        def f(mu1):
            m, rec = lead(mu1)
            return (1.0 - m) ** 2, rec
        ftol = 1e-11
    else:
        def f(mu1):
            m, rec = lead(mu1)
            return m + 1.0, rec
        ftol = 1e-8

    a = fr.mu1_for(_M_INNER[kind])
    b = fr.mu1_for(_M_TARGET[kind])
    try:
        f(a)
    except TangleError as exc:
        raise SeedFailure(f"no fixed point of T_{fr.k} at the seed mu1 = {a:.6g}: {exc}") from exc
    mu1, _, rec = safeguarded_secant(f, a, b, ftol=ftol)
    target = 1.0 if kind == "plus" else -1.0
    return LkPoint(fr.k, kind, float(mu1), mu2, abs(float(np.real(rec.leading)) - target), rec)


def locate_L_k(k: int, kind: str, mu2: float, cfg: ModelConfig) -> LkPoint:
    """``mu1`` on ``L_k^+`` (kind ``plus``) or ``L_k^-`` (``minus``) at ``mu2``."""
    return _locate_in_frame(_base_frame(k, mu2, cfg), kind, mu2)


def window_interval(k: int, mu2: float, cfg: ModelConfig) -> tuple[LkPoint, LkPoint]:
    """Both boundaries of ``Delta_k`` on the slice ``mu2 = const``."""
    fr = _base_frame(k, mu2, cfg)
    return _locate_in_frame(fr, "plus", mu2), _locate_in_frame(fr, "minus", mu2)


def _point_outcome(p: LkPoint, cfg: ModelConfig) -> tuple:
    lo, hi = mu1_window(cfg)
    if not lo <= p.mu1 <= hi:
        return ("skip", p.mu2, "OutsideWindow")
    if p.residual > TOL_MULT:
        return ("skip", p.mu2, "NoConvergence")
    return ("ok", p.mu1, p.mu2, p.residual)


def _trace_task(args) -> tuple:
    k, kind, mu2, cfg = args
    try:
        p = locate_L_k(k, kind, mu2, cfg)
    except TangleError as exc:
        return ("skip", mu2, exc.tag)
    return _point_outcome(p, cfg)


def _pair_task(args) -> tuple[tuple, tuple]:
    k, mu2, cfg = args
    try:
        fr = _base_frame(k, mu2, cfg)
    except TangleError as exc:
        return ("skip", mu2, exc.tag), ("skip", mu2, exc.tag)
    out = []
    for kind in ("plus", "minus"):
        try:
            out.append(_point_outcome(_locate_in_frame(fr, kind, mu2), cfg))
        except TangleError as exc:
            out.append(("skip", mu2, exc.tag))
    return out[0], out[1]


def _collect(curve: BifurcationCurve, results) -> BifurcationCurve:
    for r in results:
        if r[0] == "ok":
            curve.samples.append((r[1], r[2]))
            curve.residuals.append(r[3])
        else:
            curve.skipped.append((r[1], r[2]))
    return curve


def trace_L_k(k: int, kind: str, mu2_grid, cfg: ModelConfig, workers: int = 1) -> BifurcationCurve:
    """Multiplier ``+1`` (plus) or ``-1`` (minus) curve of ``T_k`` over ``mu2_grid``.

    Samples that fall outside the window, miss the stripe, or lie where the
    rescaling is invalid are recorded in ``skipped`` rather than guessed.
    """
    if kind not in _M_TARGET:
        raise ValueError("kind must be 'plus' or 'minus'")
    grid = sorted(float(m) for m in mu2_grid)
    out = pmap(_trace_task, [(k, kind, m, cfg) for m in grid], workers)
    return _collect(BifurcationCurve("LkPlus" if kind == "plus" else "LkMinus", k, [], []), out)


def trace_windows(k_range, mu2_grid, cfg: ModelConfig, workers: int = 1) -> dict[int, tuple[BifurcationCurve, BifurcationCurve]]:
    """``(L_k^+, L_k^-)`` for every ``k``; one frame per ``(k, mu2)`` serves both."""
    grid = sorted(float(m) for m in mu2_grid)
    ks = list(k_range)
    tasks = [(k, m, cfg) for k in ks for m in grid]
    res = pmap(_pair_task, tasks, workers)
    out = {}
    for i, k in enumerate(ks):
        chunk = res[i * len(grid):(i + 1) * len(grid)]
        out[k] = (
            _collect(BifurcationCurve("LkPlus", k, [], []), [r[0] for r in chunk]),
            _collect(BifurcationCurve("LkMinus", k, [], []), [r[1] for r in chunk]),
        )
    return out


# -- accumulation and cascades ---------------------------------------------


def _dist_to_polyline(p: np.ndarray, poly: np.ndarray) -> float:
    a, b = poly[:-1], poly[1:]
    ab = b - a
    L2 = np.einsum("ij,ij->i", ab, ab)
    t = np.clip(np.einsum("ij,ij->i", p - a, ab) / np.where(L2 > 0, L2, 1.0), 0.0, 1.0)
    proj = a + t[:, None] * ab
    return float(np.min(np.hypot(*(p - proj).T)))


def _lh_polyline(cfg: ModelConfig, n: int = 401) -> np.ndarray:
    t = np.linspace(0.0, math.sqrt(-MU2_WINDOW[0]), n)[1:]
    Lh = trace_L_h(-(t**2), cfg)
    return np.array([(0.0, 0.0)] + [p for p in Lh.samples])


def _dist_to_limit_set(mu1: float, mu2: float, lh: np.ndarray) -> float:
    d_plus = abs(mu2) if mu1 <= 0 else math.hypot(mu1, mu2)
    return min(d_plus, _dist_to_polyline(np.array([mu1, mu2]), lh))


def delta_k_accumulation(
    k_range,
    cfg: ModelConfig,
    mu2_grid=None,
    workers: int = 1,
    curves: dict | None = None,
) -> list[float]:
    """Sup distance from the midcurve of ``Delta_k`` to ``L_h`` and ``{mu2 = 0, mu1 < 0}``.

    ``curves`` maps ``k`` to a traced ``(plus, minus)`` pair; missing entries
    are traced over ``mu2_grid``.
    """
    if mu2_grid is None:
        mu2_grid = np.linspace(MU2_WINDOW[0], MU2_WINDOW[1], 41)
    curves = dict(curves or {})
    lh = _lh_polyline(cfg)
    out = []
    for k in k_range:
        if k not in curves:
            curves.update(trace_windows([k], mu2_grid, cfg, workers))
        plus, minus = curves[k]
        pm, mm = plus.mu1_at(), minus.mu1_at()
        common = sorted(set(pm) & set(mm))
        if not common:
            out.append(math.nan)
            continue
        out.append(max(_dist_to_limit_set(0.5 * (pm[m] + mm[m]), m, lh) for m in common))
    return out


@dataclass(frozen=True)
class SliceInterval:
    k: int
    lo: float
    hi: float

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)


def _slice_task(args):
    k, mu2, cfg, n_check = args
    lo_w, hi_w = mu1_window(cfg)
    try:
        p, m = window_interval(k, mu2, cfg)
    except TangleError as exc:
        return (k, exc.tag)
    lo, hi = sorted((p.mu1, m.mu1))
    if lo < lo_w or hi > hi_w:
        return (k, "OutsideWindow")
    if max(p.residual, m.residual) > TOL_MULT:
        return (k, "NoConvergence")
    fr = _base_frame(k, mu2, cfg)
    for mu1 in np.linspace(lo, hi, n_check + 2)[1:-1]:
        try:
            rec = _sink_for(fr, float(mu1))
        except TangleError:
            return (k, "NotSink")
        if rec.classification != "sink":
            return (k, "NotSink")
    return (k, SliceInterval(k, lo, hi))


def slice_intervals(
    mu2: float,
    cfg: ModelConfig,
    k_min: int,
    k_max: int,
    n_check: int = 3,
    workers: int = 1,
) -> tuple[list[SliceInterval], dict[int, str]]:
    """Windows ``delta_k = Delta_k ∩ {mu2 = const}`` inside the ``mu1`` window.

    Each window is bounded by located multiplier roots and confirmed by a
    sink at ``n_check`` interior points.  Returns the windows and the
    failure tag for every other ``k``.
    """
    res = pmap(_slice_task, [(k, mu2, cfg, n_check) for k in range(k_min, k_max + 1)], workers)
    found = [r for _, r in res if isinstance(r, SliceInterval)]
    failed = {k: r for k, r in res if not isinstance(r, SliceInterval)}
    return found, failed


def count_slice_windows(mu2: float, cfg: ModelConfig, k_max: int, n_check: int = 3, workers: int = 1) -> int:
    found, _ = slice_intervals(mu2, cfg, 1, k_max, n_check=n_check, workers=workers)
    return len(found)
