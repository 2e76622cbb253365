"""Concrete two-parameter family with a homoclinic tangency to a saddle-node.

Coordinates ``(x, y)`` with ``x`` in R^n (strong-stable) and ``y`` in R
(centre).  The local map is

    T0: x -> lam * x,   y -> mu2 + y + y^2

and the global map from ``Pi-`` (around ``(0, y_minus)``) to ``Pi+``
(around ``(x_plus, 0)``) is

    T1: x -> x_plus + a x + b (y - y_minus),
        y -> mu1 + c.x + d (y - y_minus)^2.

All higher-order remainders are zero unless a :class:`Perturbation` is
attached, which makes the invariant manifolds exact:
``W^ss = {y = 0}`` at ``mu2 = 0``, ``W^s_loc(O1) = {y = sqrt(-mu2)}`` and
``W^u_loc = {x = 0}``.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigError, Escaped, NoSaddle, OutOfNeighbourhood

__all__ = [
    "Perturbation",
    "time_one_flow",
    "ModelConfig",
    "LocalState",
    "FixedPoints",
    "t0",
    "t0_jac",
    "t0_pow",
    "t0_pow_jac",
    "t0_y_inverse",
    "t0_pow_inverse_y",
    "t1",
    "t1_jac",
    "fixed_points",
    "unstable_segment",
    "in_pi_plus",
    "in_pi_minus",
    "load_config",
]

_FD_STEP = 1e-7


@dataclass(frozen=True)
class Perturbation:
    """Smooth higher-order terms added to the model maps.

    Callbacks must respect the normal-form structure: ``t0_x(x, y, cfg)`` is
    ``O(|x|^2 |y|)``, ``t0_y(y, cfg)`` is ``O(y^3)`` and independent of ``x``,
    ``t1_x(x, u, cfg)`` is ``O(|x|^2 + |x||u| + u^2)`` and ``t1_y(x, u, cfg)``
    is ``O(|x|^2 + |x||u| + |u|^3)`` with ``u = y - y_minus``.
    Derivatives are taken by central differences unless ``t0_y_prime``
    supplies the derivative of ``t0_y``; ``t0_y_inverse(ybar, cfg)`` may
    supply the exact inverse of the full centre map (otherwise Newton).
    """

    t0_x: Callable | None = None
    t0_y: Callable | None = None
    t1_x: Callable | None = None
    t1_y: Callable | None = None
    t0_y_prime: Callable | None = None
    t0_y_inverse: Callable | None = None


def _flow_q(mu2: float) -> float:
    # tan(t)/t with t = sqrt(mu2), continued to mu2 <= 0
    if abs(mu2) <= 1e-9:
        return 1.0 + mu2 / 3.0 + 2.0 * mu2 * mu2 / 15.0
    if mu2 > 0:
        t = math.sqrt(mu2)
        return math.tan(t) / t
    s = math.sqrt(-mu2)
    return math.tanh(s) / s


def _flow_y(y, cfg):
    q = _flow_q(cfg.mu2)
    den = 1.0 - q * y
    if den <= 0.0:
        return math.inf
    return (y + cfg.mu2 * q) / den - (cfg.mu2 + y + y * y)


def _flow_y_prime(y, cfg):
    q = _flow_q(cfg.mu2)
    den = 1.0 - q * y
    if den <= 0.0:
        return math.inf
    return (1.0 + cfg.mu2 * q * q) / (den * den) - (1.0 + 2.0 * y)


def _flow_y_inverse(ybar, cfg):
    q = _flow_q(cfg.mu2)
    return (ybar - cfg.mu2 * q) / (1.0 + q * ybar)


def time_one_flow() -> Perturbation:
    """Centre map replaced by the time-one map of ``dy/dt = mu2 + y^2``.

    This is ``y -> (y + mu2 q) / (1 - q y)`` with ``q = tan(sqrt(mu2))/sqrt(mu2)``,
    which agrees with ``mu2 + y + y^2`` up to ``O(y^3 + |mu2| |y| + mu2^2)``.
    Its ``k``-th iterate is the time-``k`` flow, so the passage formula
    ``y0 = (nu_k yk - mu2) / (nu_k + yk)`` holds exactly.  Points with
    ``q y >= 1`` blow up within unit time and are sent to infinity.
    """
    return Perturbation(t0_y=_flow_y, t0_y_prime=_flow_y_prime, t0_y_inverse=_flow_y_inverse)


def _vec(v, n: int, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(v, dtype=float)).reshape(-1)
    if arr.shape != (n,):
        raise ConfigError(f"{name} must have length {n}, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ModelConfig:
    n: int = 1
    lam: float = 0.5
    a: np.ndarray = field(default_factory=lambda: np.array([[0.3]]))
    b: np.ndarray = field(default_factory=lambda: np.array([1.0]))
    c: np.ndarray = field(default_factory=lambda: np.array([0.5]))
    d: float = 1.0
    x_plus: np.ndarray = field(default_factory=lambda: np.array([1.0]))
    y_minus: float = 1.0
    eps: float = 0.1
    mu1: float = 0.0
    mu2: float = 0.0
    perturbation: Perturbation | None = field(default=None, repr=False)

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise ConfigError("n must be a positive integer")
        a = np.asarray(self.a, dtype=float)
        if a.ndim < 2:
            a = a.reshape(n, n) if a.size == n * n else a
        if a.shape != (n, n):
            raise ConfigError(f"a must be {n}x{n}, got shape {a.shape}")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "a", a)
        for name in ("b", "c", "x_plus"):
            object.__setattr__(self, name, _vec(getattr(self, name), n, name))
        for name in ("lam", "d", "y_minus", "eps", "mu1", "mu2"):
            object.__setattr__(self, name, float(getattr(self, name)))

        if not 0.0 < self.lam < 1.0:
            raise ConfigError("need 0 < lambda < 1")
        if self.d == 0.0:
            raise ConfigError("d must be nonzero (quadratic tangency)")
        if self.y_minus <= 0.0:
            raise ConfigError("y_minus must be positive")
        if self.x_plus[0] <= 0.0:
            raise ConfigError("x_plus must have a positive first entry")
        if not 0.0 < self.eps < self.y_minus / 4.0:
            raise ConfigError("need 0 < eps < y_minus / 4")

    @property
    def chart_bound(self) -> float:
        return self.y_minus + self.eps

    def with_mu(self, mu1: float | None = None, mu2: float | None = None) -> "ModelConfig":
        return dataclasses.replace(
            self,
            mu1=self.mu1 if mu1 is None else mu1,
            mu2=self.mu2 if mu2 is None else mu2,
        )

    def with_d_sign(self, sign: str) -> "ModelConfig":
        if sign not in ("+", "-"):
            raise ConfigError("d-sign must be '+' or '-'")
        mag = abs(self.d)
        return dataclasses.replace(self, d=mag if sign == "+" else -mag)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "lambda": self.lam,
            "a": self.a.tolist(),
            "b": self.b.tolist(),
            "c": self.c.tolist(),
            "d": self.d,
            "x_plus": self.x_plus.tolist(),
            "y_minus": self.y_minus,
            "eps": self.eps,
            "mu1": self.mu1,
            "mu2": self.mu2,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelConfig":
        doc = dict(doc)
        if "lambda" in doc:
            doc["lam"] = doc.pop("lambda")
        known = {f.name for f in dataclasses.fields(cls)} - {"perturbation"}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown model fields: {sorted(unknown)}")
        return cls(**doc)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ModelConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid model JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("model JSON must be an object")
        return cls.from_dict(doc)


def load_config(path: str | Path) -> ModelConfig:
    return ModelConfig.from_json(Path(path).read_text())


@dataclass(frozen=True, eq=False)
class LocalState:
    x: np.ndarray
    y: float

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float)).reshape(-1).copy()
        x.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", float(self.y))

    def as_vector(self) -> np.ndarray:
        return np.append(self.x, self.y)

    @classmethod
    def from_vector(cls, v) -> "LocalState":
        v = np.asarray(v, dtype=float)
        return cls(v[:-1], v[-1])


@dataclass(frozen=True)
class FixedPoints:
    exists: bool
    O1: LocalState | None = None
    O2: LocalState | None = None


# -- local map ---------------------------------------------------------------


def _t0_y(y: float, cfg: ModelConfig) -> float:
    yb = cfg.mu2 + y + y * y
    p = cfg.perturbation
    if p is not None and p.t0_y is not None:
        yb += p.t0_y(y, cfg)
    return yb


def _t0_y_prime(y: float, cfg: ModelConfig) -> float:
    g = 1.0 + 2.0 * y
    p = cfg.perturbation
    if p is not None and p.t0_y is not None:
        if p.t0_y_prime is not None:
            return g + p.t0_y_prime(y, cfg)
        h = _FD_STEP
        g += (p.t0_y(y + h, cfg) - p.t0_y(y - h, cfg)) / (2 * h)
    return g


def t0(s: LocalState, cfg: ModelConfig) -> LocalState:
    x = cfg.lam * s.x
    p = cfg.perturbation
    if p is not None and p.t0_x is not None:
        x = x + np.asarray(p.t0_x(s.x, s.y, cfg), dtype=float)
    return LocalState(x, _t0_y(s.y, cfg))


def t0_jac(s: LocalState, cfg: ModelConfig) -> np.ndarray:
    n = cfg.n
    J = np.zeros((n + 1, n + 1))
    J[:n, :n] = cfg.lam * np.eye(n)
    J[n, n] = _t0_y_prime(s.y, cfg)
    p = cfg.perturbation
    if p is not None and p.t0_x is not None:
        h = _FD_STEP
        for j in range(n):
            e = np.zeros(n)
            e[j] = h
            J[:n, j] += (np.asarray(p.t0_x(s.x + e, s.y, cfg)) - np.asarray(p.t0_x(s.x - e, s.y, cfg))) / (2 * h)
        J[:n, n] += (np.asarray(p.t0_x(s.x, s.y + h, cfg)) - np.asarray(p.t0_x(s.x, s.y - h, cfg))) / (2 * h)
    return J


def _y_orbit(y0: float, k: int, cfg: ModelConfig) -> list[float]:
    """``[y0, ..., yk]``; raises :class:`Escaped` on leaving the chart."""
    bound = cfg.chart_bound
    ys = [y0]
    y = y0
    p = cfg.perturbation
    if p is None or p.t0_y is None:
        mu2 = cfg.mu2
        for i in range(1, k + 1):
            y = mu2 + y + y * y
            if not abs(y) <= bound:
                raise Escaped(i)
            ys.append(y)
    else:
        for i in range(1, k + 1):
            y = _t0_y(y, cfg)
            if not abs(y) <= bound:
                raise Escaped(i)
            ys.append(y)
    return ys


def _x_orbit_end(x0: np.ndarray, ys: list[float], cfg: ModelConfig) -> np.ndarray:
    k = len(ys) - 1
    p = cfg.perturbation
    if p is None or p.t0_x is None:
        return cfg.lam**k * x0
    x = x0
    for i in range(k):
        x = cfg.lam * x + np.asarray(p.t0_x(x, ys[i], cfg), dtype=float)
    return x


def t0_pow(s: LocalState, k: int, cfg: ModelConfig) -> LocalState:
    """``T0^k``; raises :class:`Escaped` if ``|y|`` leaves ``y_minus + eps``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    ys = _y_orbit(s.y, k, cfg)
    return LocalState(_x_orbit_end(s.x, ys, cfg), ys[-1])


def t0_pow_jac(s: LocalState, k: int, cfg: ModelConfig) -> tuple[LocalState, np.ndarray]:
    ys = _y_orbit(s.y, k, cfg)
    n = cfg.n
    p = cfg.perturbation
    if p is None or p.t0_x is None:
        dy = 1.0
        for y in ys[:-1]:
            dy *= _t0_y_prime(y, cfg)
        J = np.zeros((n + 1, n + 1))
        J[:n, :n] = cfg.lam**k * np.eye(n)
        J[n, n] = dy
        return LocalState(cfg.lam**k * s.x, ys[-1]), J
    J = np.eye(n + 1)
    x = s.x
    for i in range(k):
        st = LocalState(x, ys[i])
        J = t0_jac(st, cfg) @ J
        x = t0(st, cfg).x
    return LocalState(x, ys[-1]), J


def t0_y_inverse(ybar: float, cfg: ModelConfig) -> float:
    """One backward step of the centre equation on the branch ``y > -1/2``."""
    p = cfg.perturbation
    if p is not None and p.t0_y_inverse is not None:
        return p.t0_y_inverse(ybar, cfg)
    disc = 1.0 + 4.0 * (ybar - cfg.mu2)
    if disc < 0:
        raise OutOfNeighbourhood("no preimage of the centre coordinate")
    y = 2.0 * (ybar - cfg.mu2) / (1.0 + math.sqrt(disc))
    p = cfg.perturbation
    if p is not None and p.t0_y is not None:
        for _ in range(50):
            r = _t0_y(y, cfg) - ybar
            step = r / _t0_y_prime(y, cfg)
            y -= step
            if abs(step) <= 4.0 * np.finfo(float).eps * abs(y):
                break
    return y


def t0_pow_inverse_y(yk: float, k: int, cfg: ModelConfig) -> tuple[float, float]:
    """``(y0, dy0/dyk)`` for the ``k``-fold backward iterate of ``yk``."""
    bound = cfg.chart_bound
    y = yk
    deriv = 1.0
    p = cfg.perturbation
    if p is None or p.t0_y is None:
        mu2 = cfg.mu2
        for _ in range(k):
            disc = 1.0 + 4.0 * (y - mu2)
            if disc < 0:
                raise OutOfNeighbourhood("no preimage of the centre coordinate")
            r = math.sqrt(disc)
            y = 2.0 * (y - mu2) / (1.0 + r)
            if not abs(y) <= bound:
                raise OutOfNeighbourhood("backward orbit left the chart")
            deriv /= r  # 1 + 2 y = sqrt(disc) on this branch
        return y, deriv
    for _ in range(k):
        y = t0_y_inverse(y, cfg)
        if not abs(y) <= bound:
            raise OutOfNeighbourhood("backward orbit left the chart")
        deriv /= _t0_y_prime(y, cfg)
    return y, deriv


# -- global map --------------------------------------------------------------


def t1(s: LocalState, cfg: ModelConfig) -> LocalState:
    u = s.y - cfg.y_minus
    x = cfg.x_plus + cfg.a @ s.x + cfg.b * u
    y = cfg.mu1 + float(cfg.c @ s.x) + cfg.d * u * u
    p = cfg.perturbation
    if p is not None:
        if p.t1_x is not None:
            x = x + np.asarray(p.t1_x(s.x, u, cfg), dtype=float)
        if p.t1_y is not None:
            y += p.t1_y(s.x, u, cfg)
    return LocalState(x, y)


def t1_jac(s: LocalState, cfg: ModelConfig) -> np.ndarray:
    n = cfg.n
    u = s.y - cfg.y_minus
    J = np.zeros((n + 1, n + 1))
    J[:n, :n] = cfg.a
    J[:n, n] = cfg.b
    J[n, :n] = cfg.c
    J[n, n] = 2.0 * cfg.d * u
    p = cfg.perturbation
    if p is not None and (p.t1_x is not None or p.t1_y is not None):
        h = _FD_STEP

        def extra(x, uu):
            ex = np.zeros(n) if p.t1_x is None else np.asarray(p.t1_x(x, uu, cfg), dtype=float)
            ey = 0.0 if p.t1_y is None else p.t1_y(x, uu, cfg)
            return np.append(ex, ey)

        for j in range(n):
            e = np.zeros(n)
            e[j] = h
            J[:, j] += (extra(s.x + e, u) - extra(s.x - e, u)) / (2 * h)
        J[:, n] += (extra(s.x, u + h) - extra(s.x, u - h)) / (2 * h)
    return J


# -- invariant objects -------------------------------------------------------


def _centre_root(cfg: ModelConfig, sign: float) -> float:
    r = math.sqrt(-cfg.mu2)
    p = cfg.perturbation
    if p is None or p.t0_y is None:
        return sign * r

    def g(y):
        return _t0_y(y, cfg) - y

    lo, hi = (0.0, 2.0 * r) if sign > 0 else (-2.0 * r, 0.0)
    while g(lo) * g(hi) > 0:
        if sign > 0:
            hi *= 2.0
        else:
            lo *= 2.0
        if max(abs(lo), abs(hi)) > cfg.chart_bound:
            raise NoSaddle("fixed point not found inside the chart")
    return brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def fixed_points(cfg: ModelConfig) -> FixedPoints:
    if cfg.mu2 > 0:
        return FixedPoints(exists=False)
    zero = np.zeros(cfg.n)
    if cfg.mu2 == 0:
        o = LocalState(zero, 0.0)
        return FixedPoints(exists=True, O1=o, O2=o)
    return FixedPoints(
        exists=True,
        O1=LocalState(zero, _centre_root(cfg, +1.0)),
        O2=LocalState(zero, _centre_root(cfg, -1.0)),
    )


def unstable_segment(cfg: ModelConfig, samples: int) -> list[LocalState]:
    """Samples of ``W^u_loc = {x = 0}`` from the saddle up to ``y_minus + eps``."""
    if cfg.mu2 > 0:
        raise NoSaddle("no saddle fixed point for mu2 > 0")
    if samples < 2:
        raise ValueError("need at least two samples")
    start = fixed_points(cfg).O1.y
    zero = np.zeros(cfg.n)
    return [LocalState(zero, y) for y in np.linspace(start, cfg.chart_bound, samples)]


def in_pi_plus(s: LocalState, cfg: ModelConfig) -> bool:
    return bool(np.max(np.abs(s.x - cfg.x_plus)) <= cfg.eps and abs(s.y) <= cfg.eps)


def in_pi_minus(s: LocalState, cfg: ModelConfig) -> bool:
    return bool(np.max(np.abs(s.x)) <= cfg.eps and abs(s.y - cfg.y_minus) <= cfg.eps)
