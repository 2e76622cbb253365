"""Parameter-plane sweep: which return maps ``T_k`` have a sink at each cell."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rescale
from ._parallel import pmap
from .bifurcation import classify_domain
from .errors import MissedWindow, OutsideRD, PoleProximity, TangleError
from .model import ModelConfig, in_pi_plus

__all__ = ["OUTCOMES", "SweepCell", "sweep_grid", "sweep_row", "outcome_for"]

OUTCOMES = ("sink", "saddle", "escaped", "dls", "none")
# Newton is only run where the parabola predicts a fixed point near the window
_M_BAND = (-0.3, 1.0)


@dataclass
class SweepCell:
    i: int
    j: int
    mu1: float
    mu2: float
    outcomes: dict[int, str] = field(default_factory=dict)
    domain: str = ""
    count: int | None = None

    @property
    def sink_ks(self) -> list[int]:
        return [k for k, o in self.outcomes.items() if o == "sink"]


def outcome_for(fr: rescale.RescaleFrame, mu1: float) -> str:
    """Fixed-point outcome of ``T_k`` at ``mu1`` within a precomputed frame."""
    fm = rescale.at_mu1(fr, mu1)
    M = fm.M
    if M < _M_BAND[0]:
        return "none"
    Y = (-1.0 + math.sqrt(1.0 + 4.0 * max(M, -0.25))) / 2.0
    if M > _M_BAND[1]:
        # flip saddle of the parabola, if it still lies in the chart
        try:
            s = fm.to_local(fm.cfg.b * Y, Y)
        except TangleError:
            return "none"
        return "saddle" if in_pi_plus(s, fm.cfg) else "none"
    try:
        _, rec = rescale.rescaled_fixed_point(fm, np.append(fm.cfg.b * Y, Y))
    except TangleError:
        return "none"
    if not in_pi_plus(rec.point, fm.cfg):
        return "none"
    return "sink" if rec.classification == "sink" else "saddle"


def _domain(mu1: float, mu2: float, cfg: ModelConfig) -> tuple[str, int | None]:
    try:
        tag = classify_domain(mu1, mu2, cfg)
    except TangleError as exc:
        return exc.tag, None
    return tag.tag, tag.count


def sweep_row(args) -> list[SweepCell]:
    j, mu2, mu1s, k_range, cfg = args
    cells = [SweepCell(i, j, float(m), float(mu2)) for i, m in enumerate(mu1s)]
    for k in k_range:
        try:
            fr = rescale.frame(k, cfg.with_mu(mu1=0.0, mu2=mu2))
        except OutsideRD:
            fill = "dls"
        except (MissedWindow, PoleProximity):
            fill = "escaped"
        except TangleError:
            fill = "none"
        else:
            for c in cells:
                c.outcomes[k] = outcome_for(fr, c.mu1)
            continue
        for c in cells:
            c.outcomes[k] = fill
    for c in cells:
        c.domain, c.count = _domain(c.mu1, c.mu2, cfg)
    return cells


def sweep_grid(
    cfg: ModelConfig,
    mu1_range: tuple[float, float],
    mu2_range: tuple[float, float],
    n_mu1: int,
    n_mu2: int,
    k_range,
    workers: int = 1,
) -> list[SweepCell]:
    """Cells in row-major order (``mu2`` outer, ``mu1`` inner)."""
    if n_mu1 < 2 or n_mu2 < 2:
        raise ValueError("grid must be at least 2x2")
    mu1s = np.linspace(*mu1_range, n_mu1)
    mu2s = np.linspace(*mu2_range, n_mu2)
    ks = list(k_range)
    rows = pmap(sweep_row, [(j, float(m), mu1s, ks, cfg) for j, m in enumerate(mu2s)], workers)
    return [c for row in rows for c in row]
