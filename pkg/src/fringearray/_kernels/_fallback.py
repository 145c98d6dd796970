"""Pure-NumPy implementations of the hot kernels.

Arithmetic is written expression-for-expression like the Cython versions
(and the extension is compiled with -ffp-contract=off), so both backends
produce bit-identical results.
"""

import numpy as np


def inverse_cdf(u, grid, cdf):
    """Map uniforms ``u`` in (0, 1) through the inverse of a tabulated CDF.

    ``cdf`` must be nondecreasing with cdf[0] = 0 and cdf[-1] = 1 on the
    strictly increasing abscissa ``grid``.  Linear interpolation between
    bracketing nodes; flat CDF segments map to their left node.
    """
    j = np.searchsorted(cdf, u, side="right")
    j = np.clip(j, 1, len(cdf) - 1)
    c0 = cdf[j - 1]
    c1 = cdf[j]
    x0 = grid[j - 1]
    x1 = grid[j]
    w = c1 - c0
    safe = np.where(w > 0.0, w, 1.0)
    t = np.where(w > 0.0, (u - c0) / safe, 0.0)
    return x0 + t * (x1 - x0)


def ou_paths(z, rho, sigma):
    """Stationary Ornstein-Uhlenbeck paths from standard-normal draws.

    ``z`` has shape (n_paths, n_nodes); column 0 seeds the stationary
    marginal, later columns drive the exact AR(1) update
    x[j] = rho*x[j-1] + sigma*sqrt(1-rho^2)*z[j].
    """
    z = np.ascontiguousarray(z, dtype=np.float64)
    n, nodes = z.shape
    s = sigma * np.sqrt(1.0 - rho * rho)
    x = np.empty_like(z)
    x[:, 0] = sigma * z[:, 0]
    for j in range(1, nodes):
        x[:, j] = rho * x[:, j - 1] + s * z[:, j]
    return x
