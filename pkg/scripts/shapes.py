"""Smoothed polygonal test obstacles for the long-running examples.

Each shape is a polygon traced at equal arclength, then low-pass filtered so
that the corners become smooth but sharp features (wing roots, tower) remain.
"""
from __future__ import annotations

import numpy as np

from helio2d.curve import ClosedCurve, is_simple, lowpass

# counter-clockwise outlines, roughly unit scale
AIRCRAFT = [
    (2.0, 0.0), (1.6, 0.18), (0.4, 0.22), (-0.2, 1.6), (-0.55, 1.6), (-0.35, 0.22),
    (-1.3, 0.2), (-1.65, 0.75), (-1.85, 0.75), (-1.75, 0.0),
    (-1.85, -0.75), (-1.65, -0.75), (-1.3, -0.2), (-0.35, -0.22), (-0.55, -1.6),
    (-0.2, -1.6), (0.4, -0.22), (1.6, -0.18),
]

SUBMARINE = [
    (2.6, 0.0), (2.4, 0.25), (1.8, 0.38), (0.6, 0.4), (0.45, 0.95), (-0.25, 0.95),
    (-0.35, 0.4), (-1.8, 0.35), (-2.3, 0.15), (-2.6, 0.45), (-2.75, 0.45), (-2.7, 0.0),
    (-2.75, -0.45), (-2.6, -0.45), (-2.3, -0.15), (-1.8, -0.35), (1.8, -0.38),
    (2.4, -0.25),
]


def polygon_curve(vertices, n: int = 4096, b: int = 64, nb: int = 32) -> ClosedCurve:
    """Band-limited smoothing of a closed polygon."""
    v = np.asarray(vertices, dtype=float)
    seg = np.roll(v, -1, axis=0) - v
    cum = np.concatenate([[0.0], np.cumsum(np.hypot(seg[:, 0], seg[:, 1]))])
    s = np.linspace(0.0, cum[-1], n, endpoint=False)
    x = np.interp(s, cum, np.append(v[:, 0], v[0, 0]))
    y = np.interp(s, cum, np.append(v[:, 1], v[0, 1]))
    smooth = lowpass(ClosedCurve.from_samples(x, y), b, nb).samples(2 * (b + nb) + 2)
    curve = ClosedCurve.from_samples(smooth[:, 0], smooth[:, 1])
    if not is_simple(curve):
        raise ValueError("smoothed polygon is not simple")
    return curve


def aircraft() -> ClosedCurve:
    return polygon_curve(AIRCRAFT)


def submarine() -> ClosedCurve:
    return polygon_curve(SUBMARINE)
