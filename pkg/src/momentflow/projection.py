"""Re-expansion of Hermite series about a new velocity/temperature frame.

A frame change (u, theta) -> (u', theta') acts separably per axis through a
lower-triangular Toeplitz convolution built from the kernel

    h_0 = 1,   n h_n = (u_d - u'_d) h_{n-1} + (theta - theta') h_{n-2},

so new_f_beta = sum_{gamma+delta=beta} f_gamma prod_d h_{delta_d}.  The map is
graded-triangular: coefficients of order k depend only on input orders <= k,
which makes the round trip exact on every retained order when nothing is
truncated away.
"""

import numpy as np

from .moments import MomentState, grade_mask


def shift_kernel(du, dtheta, nmax):
    """Kernel h_0..h_nmax for one axis; ``du``/``dtheta`` broadcast batched."""
    du = np.asarray(du, dtype=float)
    dtheta = np.asarray(dtheta, dtype=float)
    batch = np.broadcast(du, dtheta).shape
    h = np.zeros(batch + (nmax + 1,))
    h[..., 0] = 1.0
    if nmax >= 1:
        h[..., 1] = du
    for n in range(2, nmax + 1):
        h[..., n] = (du * h[..., n - 1] + dtheta * h[..., n - 2]) / n
    return h


def _shift_matrix(du, dtheta, K):
    """Lower-triangular banded matrix T[a, b] = h_{a-b}."""
    h = shift_kernel(du, dtheta, K - 1)
    diff = np.arange(K)[:, None] - np.arange(K)[None, :]
    # ascontiguousarray: the broadcast where() picks inverted output strides,
    # which would push the matmuls downstream off their fast path
    return np.ascontiguousarray(
        np.where(diff >= 0, h[..., np.clip(diff, 0, None)], 0.0)
    )


def project_coeffs(coeffs, u, theta, u_new, theta_new):
    """Apply the frame change to batched coefficient cubes.

    ``coeffs``: (..., K, K, K); ``u``/``u_new``: (..., 3);
    ``theta``/``theta_new``: (...,).  Cube entries beyond the retained order
    |alpha| <= K-1 are re-zeroed after the convolution.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    K = coeffs.shape[-1]
    u = np.asarray(u, dtype=float)
    u_new = np.asarray(u_new, dtype=float)
    dtheta = np.asarray(theta, dtype=float) - np.asarray(theta_new, dtype=float)
    # one kernel build for all three axes: batch axis -2 runs over x, y, z
    t123 = _shift_matrix(
        np.moveaxis(u - u_new, -1, 0), dtheta[None, ...], K
    )
    t1, t2, t3 = t123[0], t123[1], t123[2]
    batch = np.broadcast_shapes(coeffs.shape[:-3], t1.shape[:-2])
    out = np.broadcast_to(coeffs, batch + (K, K, K))
    # three stacked matmuls, one per cube axis, each phrased so the operand
    # stays contiguous: axis 1 as T (K x K^2), axis 2 with T broadcast across
    # the leading cube axis, axis 3 as a right-multiply by T^T
    out = np.matmul(t1, np.ascontiguousarray(out).reshape(batch + (K, K * K)))
    out = out.reshape(batch + (K, K, K))
    out = np.matmul(t2[..., None, :, :], out)
    out = np.matmul(out, np.swapaxes(t3, -1, -2)[..., None, :, :])
    out = np.multiply(out, grade_mask(K, K - 1), out=out)
    return out


def project(state, u_new, theta_new):
    """Frame-change a single MomentState; mass (slot 0) is preserved exactly."""
    if theta_new <= 0:
        raise ValueError("theta must be positive")
    c = project_coeffs(state.coeffs, state.u, state.theta, np.asarray(u_new, dtype=float), theta_new)
    return MomentState(u_new, theta_new, c)


def renormalize_arrays(u_frame, theta_frame, coeffs):
    """Recover the represented (rho, u, theta) and re-center the expansion.

    After a conservative update the cube about the old frame has nonzero
    f_{e_d} and second-moment trace; the represented function's true mean
    velocity and temperature follow from the low-order slots:

        u_d     = u_frame_d + f_{e_d} / f_0
        theta   = theta_frame
                  + (2 sum_d f_{2e_d} - sum_d f_{e_d}^2 / f_0) / (3 f_0)

    Projecting onto the recovered frame zeroes those slots again.
    Returns (u, theta, coeffs) batched like the inputs.
    """
    rho = coeffs[..., 0, 0, 0]
    f1 = np.stack(
        [coeffs[..., 1, 0, 0], coeffs[..., 0, 1, 0], coeffs[..., 0, 0, 1]], axis=-1
    )
    f2sum = coeffs[..., 2, 0, 0] + coeffs[..., 0, 2, 0] + coeffs[..., 0, 0, 2]
    u_new = u_frame + f1 / rho[..., None]
    theta_new = theta_frame + (2.0 * f2sum - np.sum(f1**2, axis=-1) / rho) / (3.0 * rho)
    c = project_coeffs(coeffs, u_frame, theta_frame, u_new, theta_new)
    return u_new, theta_new, c
