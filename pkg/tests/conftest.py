"""Shared numeric helpers for the test suite."""

import numpy as np


def simplex_centroid_grid(n):
    """Centroids of the n^2 congruent sub-triangles tiling the 2-simplex.

    Returns (points, weight): points has shape (n*n, 3), strictly interior,
    and every sub-triangle has the same area, so integrating f over the
    simplex in (x1, x2) coordinates is approximately weight * sum(f(points)).
    The tiling is exact (no cut cells), giving O(1/n^2) midpoint error for
    smooth integrands.
    """
    h = 1.0 / n
    pts = []
    for i in range(n):
        for j in range(n - i):
            pts.append(((i + 1.0 / 3.0) * h, (j + 1.0 / 3.0) * h))
            if i + j <= n - 2:
                pts.append(((i + 2.0 / 3.0) * h, (j + 2.0 / 3.0) * h))
    xy = np.asarray(pts)
    x3 = 1.0 - xy.sum(axis=1)
    points = np.column_stack([xy, x3])
    weight = 0.5 * h * h  # area of one sub-triangle
    assert points.shape[0] == n * n
    return points, weight
