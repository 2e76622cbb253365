"""Rescaling of ``T_k`` to the parabola map ``Ybar = M - Y^2``.

Work in cross coordinates ``(x0, u)`` where ``x0`` is the entry point in
``Pi+`` and ``u = yk - y_minus`` the exit offset in ``Pi-``.  After the
shift ``xi = x0 - x_plus + psi1``, ``eta = u + psi2`` chosen so that the
``x``-equation has no constant term and the ``y``-equation no linear term
in ``eta``, the return map reads

    slope * etabar = M1 + d_eff * eta^2 + ...

and the scaling ``(xi, eta) = alpha (X, Y)`` with ``alpha = -slope / d_eff``
gives ``Ybar = M - Y^2 + o(1)``, ``Xbar = b Y + o(1)`` with
``M = -d_eff * M1 / slope^2``.

``slope = theta_k (1 + rho_k) / (nu_k + y_minus)^2`` and the constant term
``M1 = mu1 - nu_k + ...`` are measured from the exact backward orbit, so
``rho_k`` and the dropped higher-order terms are carried exactly rather
than set to zero; ``alpha_nominal = -theta_k / (d y_minus^2)`` is kept for
comparison.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from ._roots import safeguarded_secant
from .errors import MissedWindow, NoConvergence, OutOfNeighbourhood, OutsideRD, TangleError
from .model import LocalState, ModelConfig, t0_pow, t0_pow_inverse_y, t0_pow_jac, t1
from .return_map import FixedPointRecord, ReturnMap, classify

__all__ = [
    "THETA_MAX",
    "RescaleFrame",
    "ParabolaAnalysis",
    "frame",
    "frame_at_M",
    "mu1_for_M",
    "rescaled_apply",
    "rescaling_residual",
    "parabola_analyze",
    "predict_mu1",
    "parabola_endpoints",
    "at_mu1",
    "rescaled_fixed_point",
]

THETA_MAX = 0.1
RESIDUAL_MS = (-0.2, 0.0, 0.5)

_PSI_FD = 1e-7
_ETA_FD1 = 1e-4
_ETA_FD2 = 1e-3


@dataclass(frozen=True, eq=False)
class RescaleFrame:
    k: int
    alpha: float
    psi1: np.ndarray
    psi2: float
    M: float
    S_k: float
    slope: float
    centre: float
    d_eff: float
    theta: float
    nu: float
    alpha_nominal: float
    rho: float
    cfg: ModelConfig = field(repr=False)

    def mu1_for(self, M: float) -> float:
        """``mu1`` giving rescaled parameter ``M`` (affine in ``mu1``)."""
        return self.cfg.mu1 + (self.M - M) * self.slope**2 / self.d_eff

    def to_local(self, X, Y: float) -> LocalState:
        cfg = self.cfg
        x0 = cfg.x_plus - self.psi1 + self.alpha * np.broadcast_to(np.asarray(X, dtype=float), (cfg.n,))
        u = self.alpha * Y - self.psi2
        y0, _ = t0_pow_inverse_y(cfg.y_minus + u, self.k, cfg)
        return LocalState(x0, y0)

    def from_local(self, s: LocalState) -> tuple[np.ndarray, float]:
        cfg = self.cfg
        yk = t0_pow(s, self.k, cfg).y
        X = (s.x - cfg.x_plus + self.psi1) / self.alpha
        Y = (yk - cfg.y_minus + self.psi2) / self.alpha
        return X, Y

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "mu1": self.cfg.mu1,
            "mu2": self.cfg.mu2,
            "alpha": self.alpha,
            "alpha_nominal": self.alpha_nominal,
            "rho": self.rho,
            "psi1": self.psi1.tolist(),
            "psi2": self.psi2,
            "M": self.M,
            "S_k": self.S_k,
            "slope": self.slope,
            "centre": self.centre,
            "d_eff": self.d_eff,
            "theta": self.theta,
            "nu": self.nu,
        }


@dataclass(frozen=True)
class ParabolaAnalysis:
    M: float
    fixed_points: list[float]
    multipliers: list[float]
    window: str


def _cross_image(x0: np.ndarray, u: float, k: int, cfg: ModelConfig) -> LocalState:
    """``T1(T0^k(x0, y0))`` with ``y0`` the exact preimage of ``y_minus + u``."""
    y0, _ = t0_pow_inverse_y(cfg.y_minus + u, k, cfg)
    xk = t0_pow(LocalState(x0, y0), k, cfg).x
    return t1(LocalState(xk, cfg.y_minus + u), cfg)


def _shift_conditions(psi: np.ndarray, k: int, cfg: ModelConfig) -> np.ndarray:
    n = cfg.n
    psi1, psi2 = psi[:n], psi[n]
    x0 = cfg.x_plus - psi1
    img = _cross_image(x0, -psi2, k, cfg)
    c1 = img.x - cfg.x_plus + psi1
    h = _ETA_FD1
    yp = _cross_image(x0, -psi2 + h, k, cfg).y
    ym = _cross_image(x0, -psi2 - h, k, cfg).y
    return np.append(c1, (yp - ym) / (2 * h))


def _solve_shifts(k: int, cfg: ModelConfig) -> tuple[np.ndarray, float]:
    n = cfg.n
    psi = np.zeros(n + 1)
    G = _shift_conditions(psi, k, cfg)
    for _ in range(20):
        J = np.empty((n + 1, n + 1))
        for j in range(n + 1):
            e = np.zeros(n + 1)
            e[j] = _PSI_FD
            J[:, j] = (_shift_conditions(psi + e, k, cfg) - _shift_conditions(psi - e, k, cfg)) / (2 * _PSI_FD)
        step = np.linalg.solve(J, -G)
        psi = psi + step
        G = _shift_conditions(psi, k, cfg)
        if np.max(np.abs(step)) <= 1e-15 * max(1.0, float(np.max(np.abs(psi)))):
            break
    if not np.all(np.isfinite(psi)):
        raise NoConvergence("shift equations diverged")
    return psi[:n].copy(), float(psi[n])


def frame(k: int, cfg: ModelConfig) -> RescaleFrame:
    """Rescaling frame of ``T_k`` at the parameters stored in ``cfg``."""
    nu_k = kernels.nu(k, cfg.mu2)
    theta_k = kernels.theta(k, cfg.mu2)
    if theta_k > THETA_MAX:
        raise OutsideRD(f"theta_k = {theta_k:.4g} exceeds {THETA_MAX}")
    try:
        psi1, psi2 = _solve_shifts(k, cfg)
        centre, slope = t0_pow_inverse_y(cfg.y_minus - psi2, k, cfg)
    except OutOfNeighbourhood as exc:
        raise MissedWindow(f"stripe sigma_{k} does not reach Pi-: {exc}") from exc
    if abs(centre) > cfg.eps:
        raise MissedWindow(f"stripe sigma_{k} lies outside Pi+ (y0 = {centre:.4g})")

    x0 = cfg.x_plus - psi1
    h = _ETA_FD2
    p0 = _cross_image(x0, -psi2, k, cfg).y
    pp = _cross_image(x0, -psi2 + h, k, cfg).y
    pm = _cross_image(x0, -psi2 - h, k, cfg).y
    d_eff = (pp - 2.0 * p0 + pm) / (2.0 * h * h)

    m1 = p0 - centre
    alpha = -slope / d_eff
    if not abs(alpha) < 1.0:
        raise OutsideRD(f"|alpha| = {abs(alpha):.3g} is not small")
    alpha_nominal = -theta_k / (cfg.d * cfg.y_minus**2)
    psi1.setflags(write=False)
    return RescaleFrame(
        k=k,
        alpha=alpha,
        psi1=psi1,
        psi2=psi2,
        M=-d_eff * m1 / slope**2,
        S_k=cfg.eps / abs(alpha),
        slope=slope,
        centre=centre,
        d_eff=d_eff,
        theta=theta_k,
        nu=nu_k,
        alpha_nominal=alpha_nominal,
        rho=alpha / alpha_nominal - 1.0,
        cfg=cfg,
    )


def frame_at_M(k: int, cfg: ModelConfig, M: float, max_iter: int = 6) -> RescaleFrame:
    """Frame at the ``mu1`` (for ``cfg.mu2``) where the rescaled parameter is ``M``."""
    fr = frame(k, cfg)
    for _ in range(max_iter):
        if abs(fr.M - M) <= 1e-12 * max(1.0, abs(M)):
            break
        fr = frame(k, cfg.with_mu(mu1=fr.mu1_for(M)))
    return fr


def mu1_for_M(k: int, mu2: float, M: float, cfg: ModelConfig) -> float:
    return frame_at_M(k, cfg.with_mu(mu2=mu2), M).cfg.mu1


def predict_mu1(k: int, mu2: float, M_target: float, cfg: ModelConfig) -> float:
    """Leading-order asymptotic ``mu1 = nu_k - M theta_k^2 / (d y_minus^4)``."""
    nu_k = kernels.nu(k, mu2)
    theta_k = kernels.theta(k, mu2)
    if theta_k > THETA_MAX:
        raise OutsideRD(f"theta_k = {theta_k:.4g} exceeds {THETA_MAX}")
    return nu_k - M_target * theta_k**2 / (cfg.d * cfg.y_minus**4)


def rescaled_apply(fr: RescaleFrame, X, Y: float) -> tuple[np.ndarray, float]:
    """``T_k`` conjugated into the rescaled coordinates of ``fr``."""
    s0 = fr.to_local(X, Y)
    s1 = ReturnMap(fr.k, fr.cfg).apply(s0)
    return fr.from_local(s1)


def _residual_grid(n_grid: int, radius: float) -> list[tuple[float, float]]:
    g = np.linspace(-radius, radius, n_grid)
    return [(float(X), float(Y)) for X in g for Y in g if X * X + Y * Y <= radius * radius + 1e-12]


def rescaling_residual(
    k: int,
    mu2: float,
    cfg: ModelConfig,
    Ms=RESIDUAL_MS,
    n_grid: int = 21,
    radius: float = 2.0,
) -> float:
    """Sup over a grid of ``|Ybar - (M - Y^2)| + |Xbar - b Y|``.

    Grid points whose orbit leaves the chart give an infinite residual.
    """
    worst = 0.0
    pts = _residual_grid(n_grid, radius)
    for M in Ms:
        fr = frame_at_M(k, cfg.with_mu(mu2=mu2), M)
        b = fr.cfg.b
        for X, Y in pts:
            try:
                Xb, Yb = rescaled_apply(fr, X, Y)
            except TangleError:
                return math.inf
            r = abs(Yb - (fr.M - Y * Y)) + float(np.max(np.abs(Xb - b * Y)))
            worst = max(worst, r)
    return worst


def parabola_analyze(M: float) -> ParabolaAnalysis:
    disc = 1.0 + 4.0 * M
    if disc < 0:
        fps: list[float] = []
    elif disc == 0:
        fps = [-0.5]
    else:
        r = math.sqrt(disc)
        fps = [(-1.0 - r) / 2.0, (-1.0 + r) / 2.0]
    if M <= -0.25:
        window = "below_SN"
    elif M >= 0.75:
        window = "period_doubled"
    else:
        window = "stable"
    return ParabolaAnalysis(M=M, fixed_points=fps, multipliers=[-2.0 * y for y in fps], window=window)


# -- multiplier root-finding directly on the rescaled map --------------------


def at_mu1(fr: RescaleFrame, mu1: float) -> RescaleFrame:
    """Same coordinates, different ``mu1``; ``M`` moves affinely."""
    return dataclasses.replace(
        fr,
        cfg=fr.cfg.with_mu(mu1=mu1),
        M=fr.M + (fr.cfg.mu1 - mu1) * fr.d_eff / fr.slope**2,
    )


def _rescaled_eval(fr: RescaleFrame, z: np.ndarray, rm: ReturnMap):
    cfg = fr.cfg
    n = cfg.n
    y0, dy0 = t0_pow_inverse_y(cfg.y_minus + fr.alpha * z[n] - fr.psi2, fr.k, cfg)
    s0 = LocalState(cfg.x_plus - fr.psi1 + fr.alpha * z[:n], y0)
    s1, J = rm.apply_with_jacobian(s0)
    sk, Jk = t0_pow_jac(s1, fr.k, fr.cfg)
    X = (s1.x - fr.cfg.x_plus + fr.psi1) / fr.alpha
    Y = (sk.y - fr.cfg.y_minus + fr.psi2) / fr.alpha
    D0 = np.full(n + 1, fr.alpha)
    D0[n] *= dy0
    D1 = np.full(n + 1, 1.0 / fr.alpha)
    D1[n] *= Jk[n, n]
    return np.append(X, Y), (D1[:, None] * J) * D0[None, :], s0, J


def rescaled_fixed_point(
    fr: RescaleFrame,
    seed,
    tol: float = 1e-12,
    accept: float = 1e-9,
    max_iter: int = 50,
) -> tuple[np.ndarray, FixedPointRecord]:
    """Fixed point of ``T_k`` found by damped Newton in the frame's coordinates.

    Near a fold the local coordinates cannot resolve the fixed point (the
    entry coordinate is compressed by ``slope * alpha``), while here the
    ``Y``-equation is order one.  Stops at residual ``tol``, or at the noise
    floor if the residual no longer decreases but is below ``accept``.
    Returns ``(z, record)`` with the record expressed in local coordinates.
    """
    n = fr.cfg.n
    rm = ReturnMap(fr.k, fr.cfg)
    z = np.asarray(seed, dtype=float).copy()
    R, JR, s0, J = _rescaled_eval(fr, z, rm)
    F = R - z
    res = float(np.max(np.abs(F)))
    history = [res]
    for it in range(max_iter + 1):
        done = res <= tol
        if not done and res > accept and it >= 3 and res > 0.9 * history[-4]:
            # even at a double root Newton at least halves the residual per step
            raise NoConvergence(f"rescaled Newton stalled at residual {res:.3e}")
        if not done and it < max_iter:
            try:
                step = np.linalg.solve(JR - np.eye(n + 1), -F)
            except np.linalg.LinAlgError as exc:
                raise NoConvergence("singular rescaled Newton system") from exc
            t = 1.0
            for _ in range(12):
                trial = z + t * step
                try:
                    R_t, JR_t, s0_t, J_t = _rescaled_eval(fr, trial, rm)
                except TangleError:
                    t *= 0.5
                    continue
                F_t = R_t - trial
                res_t = float(np.max(np.abs(F_t)))
                if res_t < res:
                    # creeping along the rounding floor counts as converged
                    done = res <= accept and res_t > 0.5 * res
                    z, R, JR, s0, J, F, res = trial, R_t, JR_t, s0_t, J_t, F_t, res_t
                    break
                if res <= accept:
                    done = True
                    break
                t *= 0.5
            else:
                done = res <= accept
                if not done:
                    raise NoConvergence(f"rescaled Newton stalled at residual {res:.3e}")
        elif not done:
            done = res <= accept
        history.append(res)
        if done:
            img = rm.apply(s0)
            w = np.linalg.eigvals(J)
            w = [complex(v) for v in w[np.argsort(-np.abs(w), kind="stable")]]
            rec = FixedPointRecord(
                point=s0,
                multipliers=w,
                classification=classify(w),
                newton_residual=float(np.max(np.abs(img.as_vector() - s0.as_vector()))),
                k=fr.k,
                iterations=it,
            )
            return z, rec
    raise NoConvergence(f"rescaled Newton: no convergence, residual {res:.3e}")


def _rescaled_fixed_point(fr: RescaleFrame, seed: np.ndarray):
    z, rec = rescaled_fixed_point(fr, seed)
    return z, np.asarray(rec.multipliers)


def parabola_endpoints(k: int, mu2: float, cfg: ModelConfig) -> tuple[float, float]:
    """``M`` values where the rescaled map's sink has multiplier +1 and -1."""
    base = frame(k, cfg.with_mu(mu2=mu2))
    n = cfg.n

    def sink_at(M: float):
        fr = frame_at_M(k, base.cfg, M)
        if 1.0 + 4.0 * fr.M < 0:
            raise NoConvergence("below the saddle-node")
        Ys = (-1.0 + math.sqrt(1.0 + 4.0 * fr.M)) / 2.0
        seed = np.append(fr.cfg.b * Ys, Ys)
        _, w = _rescaled_fixed_point(fr, seed)
        return fr.M, float(np.real(w[0]))

    def f_sn(M):
        Mx, m = sink_at(M)
        return (1.0 - m) ** 2, Mx

    def f_pd(M):
        Mx, m = sink_at(M)
        return m + 1.0, Mx

    _, _, m_sn = safeguarded_secant(f_sn, -0.15, -0.2, ftol=1e-10)
    _, _, m_pd = safeguarded_secant(f_pd, 0.7, 0.8, ftol=1e-8)
    return m_sn, m_pd
