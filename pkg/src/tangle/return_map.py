"""First-return maps ``T_k = T1 o T0^k`` on ``Pi+`` and their fixed points."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import Escaped, MissedWindow, NoConvergence
from .model import LocalState, ModelConfig, in_pi_minus, t0_pow, t0_pow_jac, t1, t1_jac

__all__ = [
    "TOL_FP",
    "TOL_MULT",
    "ReturnMap",
    "FixedPointRecord",
    "classify",
    "multipliers",
]

TOL_FP = 1e-10
TOL_MULT = 1e-4
MAX_ITER = 50
MAX_HALVINGS = 20
POLISH_STEPS = 3


def classify(mults, tol_mult: float = TOL_MULT) -> str:
    mods = np.abs(np.asarray(mults))
    if np.any(np.abs(mods - 1.0) <= tol_mult):
        return "nonhyperbolic"
    if np.all(mods < 1.0 - tol_mult):
        return "sink"
    if np.all(mods > 1.0 + tol_mult):
        return "source"
    return "saddle"


def _sorted_eigs(J: np.ndarray) -> list[complex]:
    w = np.linalg.eigvals(J)
    order = np.argsort(-np.abs(w), kind="stable")
    return [complex(v) for v in w[order]]


@dataclass(frozen=True)
class FixedPointRecord:
    point: LocalState
    multipliers: list[complex]
    classification: str
    newton_residual: float
    k: int
    iterations: int = 0

    @property
    def leading(self) -> complex:
        return self.multipliers[0]

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "x": self.point.x.tolist(),
            "y": self.point.y,
            "multipliers": [[m.real, m.imag] for m in self.multipliers],
            "classification": self.classification,
            "newton_residual": self.newton_residual,
            "iterations": self.iterations,
        }


@dataclass(frozen=True, eq=False)
class ReturnMap:
    k: int
    cfg: ModelConfig

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")

    def _to_minus(self, s: LocalState, with_jac: bool):
        if with_jac:
            sk, J0 = t0_pow_jac(s, self.k, self.cfg)
        else:
            sk, J0 = t0_pow(s, self.k, self.cfg), None
        if not in_pi_minus(sk, self.cfg):
            raise MissedWindow(f"T0^{self.k}(s) = ({sk.x.tolist()}, {sk.y:.6g}) is outside Pi-")
        return sk, J0

    def apply(self, s: LocalState) -> LocalState:
        sk, _ = self._to_minus(s, with_jac=False)
        return t1(sk, self.cfg)

    def apply_with_jacobian(self, s: LocalState) -> tuple[LocalState, np.ndarray]:
        sk, J0 = self._to_minus(s, with_jac=True)
        return t1(sk, self.cfg), t1_jac(sk, self.cfg) @ J0

    def jacobian(self, s: LocalState) -> np.ndarray:
        return self.apply_with_jacobian(s)[1]

    def multipliers_at(self, s: LocalState) -> list[complex]:
        return _sorted_eigs(self.jacobian(s))

    def find_fixed_point(
        self,
        guess: LocalState,
        tol_fp: float = TOL_FP,
        max_iter: int = MAX_ITER,
    ) -> FixedPointRecord:
        """Damped Newton on ``F(s) = T_k(s) - s``.

        The step is halved (up to 20 times) until the residual decreases;
        trial points whose orbit leaves the chart count as no decrease.
        """
        z = guess.as_vector()
        n1 = z.size
        img, J = self.apply_with_jacobian(LocalState.from_vector(z))
        F = img.as_vector() - z
        res = float(np.max(np.abs(F)))
        for it in range(max_iter + 1):
            if res <= tol_fp:
                # a few full steps past the tolerance; multipliers at large k
                # are sensitive to the last digits of the centre coordinate
                for _ in range(POLISH_STEPS):
                    try:
                        trial = z + np.linalg.solve(J - np.eye(n1), -F)
                        img_t, J_t = self.apply_with_jacobian(LocalState.from_vector(trial))
                    except (np.linalg.LinAlgError, Escaped, MissedWindow):
                        break
                    F_t = img_t.as_vector() - trial
                    res_t = float(np.max(np.abs(F_t)))
                    if not res_t < res:
                        break
                    z, J, F, res = trial, J_t, F_t, res_t
                return FixedPointRecord(
                    point=LocalState.from_vector(z),
                    multipliers=_sorted_eigs(J),
                    classification=classify(_sorted_eigs(J)),
                    newton_residual=res,
                    k=self.k,
                    iterations=it,
                )
            if it == max_iter:
                break
            try:
                step = np.linalg.solve(J - np.eye(n1), -F)
            except np.linalg.LinAlgError as exc:
                raise NoConvergence(f"singular Newton system at iteration {it}") from exc
            t = 1.0
            for _ in range(MAX_HALVINGS + 1):
                trial = z + t * step
                try:
                    img_t, J_t = self.apply_with_jacobian(LocalState.from_vector(trial))
                except (Escaped, MissedWindow):
                    t *= 0.5
                    continue
                F_t = img_t.as_vector() - trial
                res_t = float(np.max(np.abs(F_t)))
                if res_t < res:
                    z, J, F, res = trial, J_t, F_t, res_t
                    break
                t *= 0.5
            else:
                raise NoConvergence(f"damping failed at iteration {it}, residual {res:.3e}")
        raise NoConvergence(f"no convergence after {max_iter} iterations, residual {res:.3e}")


def multipliers(fp: FixedPointRecord, cfg: ModelConfig) -> list[complex]:
    """Eigenvalues of the return-map Jacobian at ``fp``, by decreasing modulus."""
    return ReturnMap(fp.k, cfg).multipliers_at(fp.point)
