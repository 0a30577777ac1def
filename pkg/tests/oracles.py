"""Independent reference implementations used by the tests."""
import numpy as np
from scipy.spatial.distance import cdist


def matern52_corr(x1, x2, theta):
    r = cdist(x1 / theta, x2 / theta)
    return (1 + np.sqrt(5) * r + 5 * r**2 / 3) * np.exp(-np.sqrt(5) * r)


def dense_kriging_predict(xs, x_raw, y, xs_new, x_new_raw, theta, nugget_ratio, size_index):
    """Universal kriging with trend (1, a) through explicit inverses.

    Returns the mean and the variance divided by sigma^2 (excluding the nugget
    at the prediction point).
    """
    R = matern52_corr(xs, xs, theta) + nugget_ratio * np.eye(len(y))
    Ri = np.linalg.inv(R)
    F = np.column_stack([np.ones(len(y)), x_raw[:, size_index]])
    f = np.column_stack([np.ones(len(xs_new)), x_new_raw[:, size_index]])
    A = np.linalg.inv(F.T @ Ri @ F)
    beta = A @ F.T @ Ri @ y
    r = matern52_corr(xs_new, xs, theta)
    mean = f @ beta + r @ Ri @ (y - F @ beta)
    u = f.T - F.T @ Ri @ r.T
    var = 1 - np.einsum("ij,jk,ik->i", r, Ri, r) + np.einsum("ji,jk,ki->i", u, A, u)
    return mean, var


def mp_kriging_predict(xs, x_raw, y, xs_new, x_new_raw, theta, nugget_ratio, size_index,
                       digits=50):
    """Same formulas as :func:`dense_kriging_predict` in 50-digit arithmetic.

    Interpolating fits often have correlation matrices with condition
    numbers near 1e9, where a float64 explicit inverse loses about 7 digits.
    """
    import mpmath as mp

    ctx = mp.mp.clone() if hasattr(mp.mp, "clone") else mp.mp
    ctx.dps = digits
    n, m, d = len(xs), len(xs_new), xs.shape[1]
    s5 = ctx.sqrt(5)

    def corr(a, b):
        out = ctx.matrix(len(a), len(b))
        for i in range(len(a)):
            for j in range(len(b)):
                r = ctx.sqrt(ctx.fsum((ctx.mpf(a[i, k]) / theta[k] - ctx.mpf(b[j, k]) / theta[k]) ** 2
                                      for k in range(d)))
                out[i, j] = (1 + s5 * r + ctx.mpf(5) / 3 * r**2) * ctx.exp(-s5 * r)
        return out

    R = corr(xs, xs)
    for i in range(n):
        R[i, i] += nugget_ratio
    Ri = R**-1
    F = ctx.matrix([[1, x_raw[i, size_index]] for i in range(n)])
    Y = ctx.matrix([float(v) for v in y])
    A = (F.T * Ri * F) ** -1
    beta = A * F.T * Ri * Y
    r = corr(xs_new, xs)
    mean, var = np.empty(m), np.empty(m)
    for j in range(m):
        rj = r[j, :].T
        f = ctx.matrix([1, x_new_raw[j, size_index]])
        mean[j] = float((f.T * beta)[0] + (rj.T * Ri * (Y - F * beta))[0])
        u = f - F.T * Ri * rj
        var[j] = float(1 - (rj.T * Ri * rj)[0] + (u.T * A * u)[0])
    return mean, var
