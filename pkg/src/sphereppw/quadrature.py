"""Composite Gauss-Legendre rules."""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=32)
def _reference_rule(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_panels(a: float, b: float, panels: int = 16, order: int = 20):
    """Nodes and weights of ``panels`` equal Gauss-Legendre panels on [a, b].

    Nodes are strictly inside (a, b) and increasing.
    """
    if not b > a:
        raise ValueError("need b > a")
    if panels < 1 or order < 1:
        raise ValueError("panels and order must be positive")
    x, w = _reference_rule(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights
