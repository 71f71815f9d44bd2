"""Pure-numpy reference implementations of the pairwise kernels.

Broadcasting is chunked over the y axis to bound memory; accumulation is
in fixed chunk order, so results do not depend on any worker count.
"""

import numpy as np

_BLOCK = 1 << 22


def sin_product_mean(x, y, w, scale=1.0):
    x = np.ascontiguousarray(x, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    w = np.ascontiguousarray(w, dtype=float)
    n, m = len(x), len(y)
    out = np.zeros(n)
    chunk = max(1, _BLOCK // max(n, 1))
    for a in range(0, m, chunk):
        b = min(a + chunk, m)
        out += np.sin(scale * x[:, None] * y[None, a:b]) @ w[a:b]
    return out
