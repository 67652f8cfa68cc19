"""Closed-form integration of the relaxation collision step.

With (rho, u, theta) frozen -- the collision touches no conserved quantity --
the pure-collision system is linear with constant coefficients and integrates
exactly over a step:

  * the nine coefficients f_{e_i + 2e_j} relax towards the slow heat-flux
    mode:  f(t) = f(t0) e^{-dt/tau} + q_i(t0)/5 (e^{-Pr dt/tau} - e^{-dt/tau});
  * every other coefficient of order >= 2 decays by e^{-dt/tau};
  * orders <= 1 are untouched.

Setting Pr = 1 collapses the first rule onto the second (single relaxation
rate for everything above order one).
"""

import math
from dataclasses import dataclass

import numpy as np

from .moments import heat_flux, order_cube

# the heat-flux-coupled slots alpha = e_i + 2 e_j, grouped by the component i
# of q they draw from
_Q_SLOTS = (
    ((3, 0, 0), (1, 2, 0), (1, 0, 2)),
    ((2, 1, 0), (0, 3, 0), (0, 1, 2)),
    ((2, 0, 1), (0, 2, 1), (0, 0, 3)),
)


def relaxation_time(rho, theta, kn):
    """Hard-sphere relaxation time (5/16) sqrt(2 pi / theta) Kn / rho."""
    rho = np.asarray(rho, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(rho <= 0) or np.any(theta <= 0) or kn <= 0:
        raise ValueError("rho, theta and Kn must be positive")
    return 5.0 / 16.0 * np.sqrt(2.0 * math.pi / theta) * kn / rho


@dataclass
class CollisionParams:
    tau: float
    prandtl: float
    dt: float

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if not (0.0 < self.prandtl <= 1.0):
            raise ValueError("prandtl must lie in (0, 1]")
        if self.dt < 0:
            raise ValueError("dt must be non-negative")


def collide_coeffs(coeffs, tau, prandtl, dt):
    """Batched analytic collision update of coefficient cubes.

    ``tau`` may be per-cell (broadcast against the batch dims of ``coeffs``).
    """
    coeffs = np.asarray(coeffs, dtype=float)
    K = coeffs.shape[-1]
    tau = np.asarray(tau, dtype=float)
    e_full = np.exp(-dt / tau)
    e_pr = np.exp(-prandtl * dt / tau)
    q0 = heat_flux(coeffs)

    factor = np.where(order_cube(K) >= 2, e_full[..., None, None, None], 1.0)
    out = coeffs * factor
    bump = (e_pr - e_full) / 5.0
    for i, slots in enumerate(_Q_SLOTS):
        for alpha in slots:
            out[(Ellipsis,) + alpha] += q0[..., i] * bump
    return out


def collide(state, params):
    """Analytic collision step on one MomentState."""
    new = state.copy()
    new.coeffs = collide_coeffs(state.coeffs, params.tau, params.prandtl, params.dt)
    return new
