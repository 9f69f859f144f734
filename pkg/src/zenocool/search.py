"""Deterministic golden-section minimisation on a bracket."""
from __future__ import annotations

import math
from typing import Callable, NamedTuple

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class MinResult(NamedTuple):
    x: float
    fun: float
    iterations: int


def golden_section(f: Callable[[float], float], a: float, b: float,
                   xtol: float = 1e-7, max_iter: int = 200) -> MinResult:
    """Minimise a unimodal ``f`` on [a, b]; the best point seen (ends included) is returned."""
    if b < a:
        a, b = b, a
    fa, fb = f(a), f(b)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    it = 0
    while b - a > xtol and it < max_iter:
        it += 1
        if fc <= fd:  # ties keep the left bracket
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    best = min([(fa, a), (fc, c), (fd, d), (fb, b)], key=lambda p: (p[0], p[1]))
    return MinResult(float(best[1]), float(best[0]), it)
