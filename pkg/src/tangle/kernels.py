"""Closed-form transition quantities of the local saddle-node map.

The local map near the saddle-node acts on the centre coordinate as
``y -> mu2 + y + y**2``.  Passing from ``Pi+`` to ``Pi-`` in ``k`` steps is
governed by the scalars evaluated here:

    nu_k    = sqrt(-mu2) / tanh(k sqrt(-mu2))   (mu2 < 0)
            = 1 / k                             (mu2 = 0)
            = sqrt(mu2) / tan(k sqrt(mu2))      (mu2 > 0)
    theta_k = nu_k**2 + mu2

together with the transition integral of ``1 / (mu2 + y**2)`` and its
inversion ``y0(yk)``.  The iteration oracles at the bottom of the module
work directly with the discrete map and are used to cross-check the
closed forms.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import NonPositive, OutOfNeighbourhood, PoleProximity, SingularInterval

__all__ = [
    "TAU_REGIME",
    "TAU_SING",
    "Mu2Regime",
    "KernelValues",
    "regime",
    "nu",
    "nu_real",
    "theta",
    "theta_table",
    "kernel_values",
    "k_star",
    "transition_integral",
    "y0_of_yk",
    "backward_iterate",
    "forward_iterate",
    "delta_k_oracle",
    "stripe_count_oracle",
]

TAU_REGIME = 1e-9
TAU_SING = 1e-3 * math.pi

# x*cot(x) = 1 - x^2/3 - x^4/45 - 2x^6/945 - x^8/4725 - ...
_XCOT = (1.0, -1.0 / 3.0, -1.0 / 45.0, -2.0 / 945.0, -1.0 / 4725.0)
# x^2/sin^2(x) = 1 + x^2/3 + x^4/15 + 2x^6/189 + x^8/675 + ...
_X2CSC2 = (1.0, 1.0 / 3.0, 1.0 / 15.0, 2.0 / 189.0, 1.0 / 675.0)


class Mu2Regime(enum.Enum):
    NEGATIVE = "Negative"
    ZERO = "Zero"
    POSITIVE = "Positive"


@dataclass(frozen=True)
class KernelValues:
    k: int
    nu_k: float
    theta_k: float
    regime: Mu2Regime


def regime(mu2: float, tau: float = TAU_REGIME) -> Mu2Regime:
    if abs(mu2) <= tau:
        return Mu2Regime.ZERO
    return Mu2Regime.NEGATIVE if mu2 < 0 else Mu2Regime.POSITIVE


def _horner(coeffs, z: float) -> float:
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * z + c
    return acc


def _check_pole(K: float, mu2: float) -> None:
    if mu2 <= TAU_REGIME:
        return
    arg = K * math.sqrt(mu2)
    m = round(arg / math.pi)
    if m >= 1 and abs(arg - m * math.pi) <= TAU_SING:
        raise PoleProximity(
            f"k*sqrt(mu2) = {arg:.6g} is within {TAU_SING:.3g} of {m}*pi"
        )


def nu_real(K: float, mu2: float) -> float:
    """``nu`` for a real (not necessarily integer) step count ``K > 0``."""
    if K <= 0:
        raise ValueError("K must be positive")
    _check_pole(K, mu2)
    reg = regime(mu2)
    if reg is Mu2Regime.ZERO:
        return _horner(_XCOT, mu2 * K * K) / K
    if reg is Mu2Regime.NEGATIVE:
        s = math.sqrt(-mu2)
        return s / math.tanh(K * s)
    t = math.sqrt(mu2)
    return t / math.tan(K * t)


def nu(k: int, mu2: float) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    return nu_real(float(k), mu2)


def theta(k: int, mu2: float) -> float:
    """``nu_k^2 + mu2``, factored as ``(nu_k + s)(nu_k - s)`` when ``mu2 = -s^2 < 0``.

    For ``mu2 < 0`` and large ``k`` the plain sum cancels to rounding noise;
    ``nu_k - s = 2 s / expm1(2 k s)`` keeps full relative accuracy.
    """
    v = nu(k, mu2)
    if regime(mu2) is Mu2Regime.NEGATIVE:
        s = math.sqrt(-mu2)
        return (v + s) * (2.0 * s / math.expm1(2.0 * k * s))
    return v * v + mu2


def theta_table(k: int, mu2: float) -> float:
    """Direct branch forms ``-mu2/sinh^2``, ``1/k^2``, ``mu2/sin^2``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    _check_pole(k, mu2)
    reg = regime(mu2)
    if reg is Mu2Regime.ZERO:
        return _horner(_X2CSC2, mu2 * k * k) / (k * k)
    if reg is Mu2Regime.NEGATIVE:
        s = math.sqrt(-mu2)
        return -mu2 / math.sinh(k * s) ** 2
    t = math.sqrt(mu2)
    return mu2 / math.sin(k * t) ** 2


def kernel_values(k: int, mu2: float) -> KernelValues:
    v = nu(k, mu2)
    return KernelValues(k=k, nu_k=v, theta_k=theta(k, mu2), regime=regime(mu2))


def k_star(mu2: float, eps: float) -> int:
    """Largest number of local iterations that still connects Pi+ to Pi-."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if mu2 <= 0:
        raise NonPositive("k_star is only finite for mu2 > 0")
    val = math.pi / math.sqrt(mu2) - 1.0 / eps
    if val < 1:
        raise NonPositive(f"pi/sqrt(mu2) - 1/eps = {val:.6g} < 1: Pi+ never reaches Pi-")
    return int(round(val))


def transition_integral(y0: float, yk: float, mu2: float) -> float:
    """Integral of ``1/(mu2 + y^2)`` over ``[y0, yk]``."""
    if not y0 < yk:
        raise ValueError("need y0 < yk")
    if mu2 > 0:
        t = math.sqrt(mu2)
        return math.atan2(t * (yk - y0), mu2 + y0 * yk) / t
    if mu2 == 0:
        if y0 <= 0.0 <= yk:
            raise SingularInterval("interval contains the pole y = 0")
        return (yk - y0) / (y0 * yk)
    s = math.sqrt(-mu2)
    for pole in (-s, s):
        if y0 <= pole <= yk:
            raise SingularInterval(f"interval contains the pole y = {pole:.6g}")
    return math.log1p(2.0 * s * (yk - y0) / ((yk + s) * (y0 - s))) / (2.0 * s)


def y0_of_yk(
    yk: float,
    k: int,
    mu2: float,
    delta_k: float = 0.0,
    eps: float | None = None,
) -> float:
    """Entry coordinate ``y0`` of an orbit that reaches ``yk`` after ``k`` steps.

    Closed-form inversion of the transition integral with effective step
    count ``k (1 + delta_k)``.  With ``delta_k = 0`` this is the leading
    term ``(nu_k yk - mu2) / (nu_k + yk)``.
    """
    K = k * (1.0 + delta_k)
    v = nu_real(K, mu2)
    y0 = (yk * v - mu2) / (v + yk)
    if eps is not None and abs(y0) > eps:
        raise OutOfNeighbourhood(f"|y0| = {abs(y0):.6g} exceeds eps = {eps:.6g}")
    return y0


# -- iteration oracles -------------------------------------------------------


def forward_iterate(y0: float, k: int, mu2: float) -> float:
    y = y0
    for _ in range(k):
        y = mu2 + y + y * y
    return y


def backward_iterate(yk: float, k: int, mu2: float) -> float:
    """Exact ``k``-fold preimage of ``yk`` on the branch ``y > -1/2``."""
    y = yk
    for _ in range(k):
        disc = 1.0 + 4.0 * (y - mu2)
        if disc < 0:
            raise OutOfNeighbourhood("no preimage on the upper branch")
        # 2(ybar - mu2) / (1 + sqrt(disc)) avoids cancellation near y = 0
        y = 2.0 * (y - mu2) / (1.0 + math.sqrt(disc))
    return y


def delta_k_oracle(yk: float, k: int, mu2: float) -> float:
    """Exact ``delta_k`` making :func:`y0_of_yk` reproduce backward iteration."""
    y0 = backward_iterate(yk, k, mu2)
    return transition_integral(y0, yk, mu2) / k - 1.0


def stripe_count_oracle(mu2: float, eps: float, y_minus: float, k_cap: int = 10**7) -> int:
    """Largest ``k`` with ``T0^k Pi+`` meeting ``Pi-`` (``mu2 > 0``).

    Preimages are monotone in ``y``, so the last stripe is the one whose
    preimage of ``y_minus + eps`` still lies above ``-eps``.
    """
    if mu2 <= 0:
        raise NonPositive("every k has a stripe when mu2 <= 0")
    y = y_minus + eps
    k = 0
    while k < k_cap:
        disc = 1.0 + 4.0 * (y - mu2)
        if disc < 0:
            break
        prev = 2.0 * (y - mu2) / (1.0 + math.sqrt(disc))
        if prev < -eps:
            break
        y = prev
        k += 1
    return k
