"""Circular-angle helpers used by tracking, trajectories and attention."""

import numpy as np

TWO_PI = 2.0 * np.pi


def wrap_2pi(a):
    """Wrap angle(s) into [0, 2*pi)."""
    return np.mod(a, TWO_PI)


def wrap_pi(a):
    """Wrap angle(s) into [-pi, pi)."""
    return np.mod(a + np.pi, TWO_PI) - np.pi


def circ_dist(a, b):
    """Unsigned circular distance between angles, in [0, pi]."""
    return np.abs(wrap_pi(a - b))


def circ_diff(a, b):
    """Signed shortest rotation taking b to a, in [-pi, pi)."""
    return wrap_pi(a - b)
