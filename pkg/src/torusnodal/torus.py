"""Small periodic-geometry helpers shared across modules.

All coordinates live on the unit torus [0,1)^2; displacement vectors are
reduced to the fundamental chart [-1/2, 1/2)^2 componentwise, which realizes
the minimum-image convention for distances below 1/2.
"""

from __future__ import annotations

import numpy as np


def wrap_point(p: np.ndarray) -> np.ndarray:
    """Reduce coordinates into [0, 1)."""
    r = np.asarray(p, dtype=float) % 1.0
    # x % 1.0 rounds to exactly 1.0 for tiny negative x; keep the interval
    # half-open.
    return np.where(r >= 1.0, 0.0, r)


def wrap_delta(d: np.ndarray) -> np.ndarray:
    """Reduce a displacement componentwise into [-1/2, 1/2)."""
    r = (np.asarray(d, dtype=float) + 0.5) % 1.0
    return np.where(r >= 1.0, 0.0, r) - 0.5


def periodic_distance(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Geodesic distance on the flat torus (scalar or batched along axis -1)."""
    return np.linalg.norm(wrap_delta(np.asarray(p, dtype=float) - q), axis=-1)
