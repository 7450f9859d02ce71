"""Pure numpy implementations of the hot numeric loops.

The compiled extension in ``_ckernels.pyx`` mirrors these signatures
one-to-one; ``claritk.kernels`` picks whichever is importable. Keep both
implementations arithmetically identical (same update order) so the parity
tests stay tight.
"""

import numpy as np

BACKEND = "python"


def remove_outliers(values, n, z):
    """Block z-score filter.

    Scans consecutive non-overlapping blocks of ``n`` samples; within each
    block every sample farther than ``z`` sample standard deviations from the
    block mean (strict inequality) is replaced by that mean. A trailing
    partial block is filtered with its own size when it has at least two
    samples, otherwise left untouched.
    """
    x = np.asarray(values, dtype=np.float64)
    out = x.copy()
    m = x.size // n
    if m > 0:
        blocks = x[: m * n].reshape(m, n)
        mu = blocks.mean(axis=1, keepdims=True)
        sd = blocks.std(axis=1, ddof=1, keepdims=True)
        mask = np.abs(blocks - mu) > z * sd
        out[: m * n] = np.where(mask, mu, blocks).ravel()
    tail = x.size - m * n
    if tail >= 2:
        t = x[m * n:]
        mu = t.mean()
        sd = t.std(ddof=1)
        mask = np.abs(t - mu) > z * sd
        out[m * n:] = np.where(mask, mu, t)
    return out


def moving_average(values, n):
    """Centered moving mean over up to ``n`` closest neighbors.

    The window is symmetric with half-width ``(n - 1) // 2`` and truncated at
    the series boundaries (no padding), so an even ``n`` behaves like
    ``n - 1``. ``n == 1`` is the identity.
    """
    x = np.asarray(values, dtype=np.float64)
    half = (n - 1) // 2
    if half == 0 or x.size == 0:
        return x.copy()
    w = 2 * half + 1
    if w >= x.size:
        # convolve(mode="same") returns kernel-length output here; windows
        # are heavily truncated anyway, so sum them directly
        out = np.empty(x.size)
        for i in range(x.size):
            lo = max(i - half, 0)
            hi = min(i + half, x.size - 1)
            out[i] = x[lo:hi + 1].sum() / (hi - lo + 1)
        return out
    kernel = np.ones(w)
    sums = np.convolve(x, kernel, mode="same")
    counts = np.convolve(np.ones(x.size), kernel, mode="same")
    return sums / counts


def tenlayer_integrate(x0, v_up, v_dn, x_f, feed_idx, dt, h,
                       is_takacs, v0, r_h, r_p, x_t,
                       n_steps, save_stride):
    """Explicit-Euler integration of the 10-layer settler.

    Parameters
    ----------
    x0 : array (10,)
        Initial layer concentrations, index 0 = top layer.
    v_up, x_f : arrays (n_steps,)
        Per-step bulk upflow velocity (effluent flow / area) and feed
        concentration; pass constant arrays for steady operation.
    v_dn : float
        Bulk downflow velocity (underflow / area), constant.
    feed_idx : int
        0-based feed layer.
    is_takacs : int
        0 = single-exponential settling, 1 = double-exponential.
    x_t : float
        Flux-limiter threshold concentration.
    save_stride : int
        A state snapshot is recorded after every ``save_stride`` steps and
        after the final step.

    Returns
    -------
    saved : array (n_saves, 10)
    last_dxdt_max : float
        max_j |dX_j/dt| of the final step, for steady-state detection.
    """
    x = np.asarray(x0, dtype=np.float64).copy()
    n_saves = n_steps // save_stride + (1 if n_steps % save_stride else 0)
    saved = np.empty((n_saves, 10))
    k = 0
    last_dxdt_max = np.inf
    up_mask = np.arange(10) <= feed_idx
    dn_mask = np.arange(10) >= feed_idx
    dx = np.empty(10)
    for step in range(n_steps):
        vu = v_up[step]
        feed = (vu + v_dn) * x_f[step]
        if is_takacs:
            vs = v0 * (np.exp(-r_h * x) - np.exp(-r_p * x))
            np.maximum(vs, 0.0, out=vs)
        else:
            vs = v0 * np.exp(-r_h * x)
        g = x * vs
        j_flux = np.where(x[1:] > x_t, np.minimum(g[:-1], g[1:]), g[:-1])
        dx[:] = -x * (vu * up_mask + v_dn * dn_mask)
        dx[:feed_idx] += vu * x[1: feed_idx + 1]
        dx[feed_idx + 1:] += v_dn * x[feed_idx:-1]
        dx[feed_idx] += feed
        dx[:-1] -= j_flux
        dx[1:] += j_flux
        dx /= h
        x += dt * dx
        np.maximum(x, 0.0, out=x)
        if step == n_steps - 1:
            last_dxdt_max = float(np.max(np.abs(dx)))
        if (step + 1) % save_stride == 0 or step == n_steps - 1:
            saved[k] = x
            k += 1
    return saved[:k], last_dxdt_max
