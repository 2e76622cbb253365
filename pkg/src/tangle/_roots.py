from __future__ import annotations

from typing import Any, Callable

from .errors import NoConvergence, TangleError


def safeguarded_secant(
    fun: Callable[[float], tuple[float, Any]],
    a: float,
    b: float,
    ftol: float,
    max_iter: int = 60,
    max_backtracks: int = 60,
) -> tuple[float, float, Any]:
    """Secant iteration for ``fun(x)[0] = 0`` where ``fun`` may fail.

    ``fun`` returns ``(value, payload)`` or raises :class:`TangleError` where
    the underlying object does not exist (e.g. past a fold).  A failed trial
    (including the starting point ``b``) is pulled halfway back toward the
    last good point.  Returns
    ``(x, value, payload)`` of the best point seen.
    """
    fa, pa = fun(a)
    for _ in range(max_backtracks):
        try:
            fb, pb = fun(b)
            break
        except TangleError:
            b = a + 0.5 * (b - a)
    else:
        raise NoConvergence("second secant point never admitted a solution")
    best = min(((abs(fa), a, fa, pa), (abs(fb), b, fb, pb)), key=lambda t: t[0])
    for _ in range(max_iter):
        if abs(fb) <= ftol:
            return b, fb, pb
        if fb == fa:
            break
        c = b - fb * (b - a) / (fb - fa)
        for _ in range(max_backtracks):
            if c == b:
                break
            try:
                fc, pc = fun(c)
                break
            except TangleError:
                c = b + 0.5 * (c - b)
        else:
            raise NoConvergence("secant trial points never admitted a solution")
        if c == b:
            break
        a, fa, pa = b, fb, pb
        b, fb, pb = c, fc, pc
        if abs(fb) < best[0]:
            best = (abs(fb), b, fb, pb)
    _, x, fx, px = best
    return x, fx, px
