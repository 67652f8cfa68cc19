"""Finite-volume slab solver for the Hermite moment system.

One step = transport -> renormalize -> collision -> acceleration (Lie
splitting; Strang brackets the acceleration kick around the rest).  Each
transport flux pass reconstructs linear in-cell profiles of every stored
quantity, predicts the top-grade coefficients from interface gradients
(regularized closure), and applies an HLL flux in a per-interface common
frame; two such passes form a trapezoidal (Heun) update, which is what
keeps linear reconstruction stable at the working CFL.  Fluxes are
re-framed to each adjacent cell before the update, which makes the scheme
conservative in mass, momentum and energy by telescoping; wall interfaces
build the outer state from the inner trace so the wall mass flux vanishes
identically for a non-moving wall.

Frames are a gauge: the flux divergence is accumulated into the coefficient
cube at fixed (u, theta), after which the renormalization moves the frame to
restore f_{e_d} = 0 and the second-moment trace constraint exactly.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .boundary import WallSpec, ghost_state
from .closure import closure_coeffs, shifted
from .collision import collide_coeffs, relaxation_time
from .hermite import largest_he_root
from .moments import MomentState, grade_mask, order_cube, snapshot_table
from .projection import project_coeffs, renormalize_arrays

RESIDUAL_FLOOR = 1e-8


@dataclass
class Grid1D:
    """Uniform cell-centered mesh with per-cell moment data.

    ``u``: (N, 3) frame velocities, ``theta``: (N,), ``coeffs``:
    (N, K, K, K) with K = M + 2 (grades through M evolved, top grade
    scratch for the closure).
    """

    y_lo: float
    y_hi: float
    u: np.ndarray
    theta: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        self.u = np.array(self.u, dtype=float)
        self.theta = np.array(self.theta, dtype=float)
        self.coeffs = np.array(self.coeffs, dtype=float)
        n = self.coeffs.shape[0]
        K = self.coeffs.shape[-1]
        if self.y_hi <= self.y_lo:
            raise ValueError("empty domain")
        if self.u.shape != (n, 3) or self.theta.shape != (n,):
            raise ValueError("inconsistent field shapes")
        if self.coeffs.shape != (n, K, K, K) or K < 5:
            raise ValueError("coefficient cubes must be (N, K, K, K), M >= 3")
        if np.any(self.theta <= 0) or np.any(self.coeffs[:, 0, 0, 0] <= 0):
            raise ValueError("non-positive density or temperature")

    @property
    def n(self):
        return self.coeffs.shape[0]

    @property
    def M(self):
        return self.coeffs.shape[-1] - 2

    @property
    def dx(self):
        return (self.y_hi - self.y_lo) / self.n

    @property
    def centers(self):
        return self.y_lo + (np.arange(self.n) + 0.5) * self.dx

    @classmethod
    def from_fields(cls, y_lo, y_hi, rho, u, theta, M):
        """Cells initialized as local Maxwellians with the given fields."""
        rho = np.asarray(rho, dtype=float)
        n = rho.shape[0]
        K = M + 2
        cubes = np.zeros((n, K, K, K))
        cubes[:, 0, 0, 0] = rho
        u = np.broadcast_to(np.asarray(u, dtype=float), (n, 3))
        theta = np.broadcast_to(np.asarray(theta, dtype=float), (n,))
        return cls(y_lo, y_hi, u, theta, cubes)

    def cell_state(self, j):
        return MomentState(self.u[j], self.theta[j], self.coeffs[j])

    def set_cell(self, j, state):
        self.u[j] = state.u
        self.theta[j] = state.theta
        self.coeffs[j] = state.coeffs

    def densities(self):
        return self.coeffs[:, 0, 0, 0]

    def total_mass(self):
        return float(np.sum(self.densities()) * self.dx)

    def total_momentum(self):
        rho = self.densities()[:, None]
        f1 = np.stack(
            [self.coeffs[:, 1, 0, 0], self.coeffs[:, 0, 1, 0], self.coeffs[:, 0, 0, 1]],
            axis=-1,
        )
        return np.sum(rho * self.u + f1, axis=0) * self.dx

    def total_energy(self):
        rho = self.densities()
        f1 = np.stack(
            [self.coeffs[:, 1, 0, 0], self.coeffs[:, 0, 1, 0], self.coeffs[:, 0, 0, 1]],
            axis=-1,
        )
        f2 = (
            self.coeffs[:, 2, 0, 0]
            + self.coeffs[:, 0, 2, 0]
            + self.coeffs[:, 0, 0, 2]
        )
        e = 0.5 * rho * np.sum(self.u**2, axis=-1) + np.sum(self.u * f1, axis=-1)
        e += 1.5 * rho * self.theta + f2
        return float(np.sum(e) * self.dx)


@dataclass
class RunConfig:
    M: int
    kn: float
    pr: float = 2.0 / 3.0
    cfl: float = 0.95
    t_end: float = None
    steady_tol: float = None
    max_steps: int = 200000
    left: WallSpec = None          # None -> free (zero-gradient) boundary
    right: WallSpec = None
    force: np.ndarray = field(default_factory=lambda: np.zeros(3))
    splitting: str = "lie"
    limiter: str = "central"
    closure_location: str = "interface"
    signal_speed_factor: float = 1.2
    collisionless: bool = False
    ghost_refresh: bool = True     # rebuild wall ghosts at the second stage
    scenario: str = "custom"

    def __post_init__(self):
        if self.M < 3:
            raise ValueError("moment order M must be at least 3")
        if not (0.0 < self.cfl <= 1.0):
            raise ValueError("CFL must lie in (0, 1]")
        if self.kn <= 0:
            raise ValueError("Knudsen number must be positive")
        if not (0.0 < self.pr <= 1.0):
            raise ValueError("Prandtl number must lie in (0, 1]")
        if self.splitting not in ("lie", "strang"):
            raise ValueError("splitting must be 'lie' or 'strang'")
        if self.limiter not in ("none", "central", "minmod"):
            raise ValueError("limiter must be none, central or minmod")
        if self.closure_location not in ("interface", "cell"):
            raise ValueError("closure_location must be 'interface' or 'cell'")
        if self.t_end is None and self.steady_tol is None:
            raise ValueError("set an end time and/or a steady tolerance")
        self.force = np.asarray(self.force, dtype=float)

    @property
    def signal_speed(self):
        return self.signal_speed_factor * largest_he_root(self.M + 1)


def flux_vector(state):
    """y-direction flux coefficients of one state (closure grade present)."""
    return _flux_cube(
        state.coeffs, np.asarray(state.u[1]), np.asarray(state.theta)
    )


def _flux_cube(coeffs, u2, theta):
    """Per-slot flux theta f_{a-e2} + u2 f_a + (a2+1) f_{a+e2}, batched.

    Valid on grades <= M; the top grade of the result is zeroed (its flux
    would need unavailable grade-(M+2) data).
    """
    K = coeffs.shape[-1]
    th = np.asarray(theta, dtype=float)[..., None, None, None]
    uu = np.asarray(u2, dtype=float)[..., None, None, None]
    F = th * shifted(coeffs, 0, 1, 0) + uu * coeffs
    F += np.arange(1, K + 1)[None, :, None] * shifted(coeffs, 0, -1, 0)
    F *= grade_mask(K, K - 2)
    return F


def hll_flux(left, right, signal_c):
    """Two-wave flux between two states; returned in their mean frame.

    Signal bounds come from each side's own frame: lambda_L = min over the
    two states of u2 - c sqrt(theta), lambda_R = max of u2 + c sqrt(theta).
    Identical inputs reduce to flux_vector of that state.
    """
    u_c = 0.5 * (left.u + right.u)
    th_c = 0.5 * (left.theta + right.theta)
    a = project_coeffs(left.coeffs, left.u, left.theta, u_c, th_c)
    b = project_coeffs(right.coeffs, right.u, right.theta, u_c, th_c)
    lam_l = min(
        left.u[1] - signal_c * math.sqrt(left.theta),
        right.u[1] - signal_c * math.sqrt(right.theta),
    )
    lam_r = max(
        left.u[1] + signal_c * math.sqrt(left.theta),
        right.u[1] + signal_c * math.sqrt(right.theta),
    )
    return _hll_combine(
        _flux_cube(a, u_c[1], th_c),
        _flux_cube(b, u_c[1], th_c),
        (b - a) * grade_mask(a.shape[-1], a.shape[-1] - 2),
        np.asarray(lam_l),
        np.asarray(lam_r),
    )


def _hll_combine(fa, fb, jump, lam_l, lam_r):
    ll = lam_l[..., None, None, None]
    lr = lam_r[..., None, None, None]
    mid = (lr * fa - ll * fb + ll * lr * jump) / (lr - ll)
    return np.where(ll >= 0, fa, np.where(lr <= 0, fb, mid))


def cfl_timestep(grid, cfl, signal_c):
    """dt = cfl dx / max_cells(|u2| + c sqrt(theta))."""
    smax = np.max(np.abs(grid.u[:, 1]) + signal_c * np.sqrt(grid.theta))
    return cfl * grid.dx / smax


def _minmod(a, b):
    return np.where(a * b > 0.0, np.sign(a) * np.minimum(np.abs(a), np.abs(b)), 0.0)


def _slope(ext, dx, limiter):
    """Per-cell slope from an array extended by one ghost on each side."""
    if limiter == "none":
        return np.zeros_like(ext[1:-1])
    fwd = (ext[2:] - ext[1:-1]) / dx
    bwd = (ext[1:-1] - ext[:-2]) / dx
    if limiter == "central":
        return 0.5 * (fwd + bwd)
    return _minmod(bwd, fwd)


def _cell_ghost(grid, j, wall):
    st = grid.cell_state(j)
    if wall is None:
        return st
    return ghost_state(st, wall)


def closure_time(rho, theta, kn, dt):
    """Effective relaxation time feeding the top-grade prediction.

    The top grade is discarded and refilled every step, so its value over the
    step is the relaxation integral from zero towards the quasi-static
    balance: tau (1 - e^{-dt/tau}).  This equals tau once dt >~ 3 tau (the
    continuum regime the closure formula was derived for) and is capped by dt
    otherwise; the cap keeps the gradient part of the closure inside the
    explicit diffusion stability limit at the advective CFL step for every M
    (max diffusion number ~ 0.63 (M+1)/he_root(M+1)^2 < 1/2).
    """
    tau = relaxation_time(rho, theta, kn)
    return -tau * np.expm1(-dt / tau)


def _interface_data(grid, config, reuse=None):
    """Traces, flanking states and common frames for every interface.

    Returns a dict of arrays over the N+1 interfaces.  Flanking states (the
    pair whose mean fixes the common frame) are the adjacent cell values in
    the interior and the inner trace / trace-built ghost at a wall.

    ``reuse``: ghost states captured from an earlier sub-stage (the
    ``ghost_refresh=False`` mode keeps wall ghosts frozen across the
    stages of one step).
    """
    n, dx = grid.n, grid.dx
    K = grid.coeffs.shape[-1]
    if reuse is not None:
        gl, gr = reuse["cell_ghosts"]
    else:
        gl = _cell_ghost(grid, 0, config.left)
        gr = _cell_ghost(grid, n - 1, config.right)

    ext_u = np.concatenate([gl.u[None], grid.u, gr.u[None]], axis=0)
    ext_th = np.concatenate([[gl.theta], grid.theta, [gr.theta]])
    ext_c = np.concatenate([gl.coeffs[None], grid.coeffs, gr.coeffs[None]], axis=0)
    su = _slope(ext_u, dx, config.limiter)
    sth = _slope(ext_th, dx, config.limiter)
    sc = _slope(ext_c, dx, config.limiter)

    tl_u = np.empty((n + 1, 3))
    tl_th = np.empty(n + 1)
    tl_c = np.empty((n + 1, K, K, K))
    tr_u = np.empty_like(tl_u)
    tr_th = np.empty_like(tl_th)
    tr_c = np.empty_like(tl_c)
    half = 0.5 * dx
    tl_u[1:] = grid.u + su * half
    tl_th[1:] = grid.theta + sth * half
    tl_c[1:] = grid.coeffs + sc * half
    tr_u[:n] = grid.u - su * half
    tr_th[:n] = grid.theta - sth * half
    tr_c[:n] = grid.coeffs - sc * half
    if np.any(tl_th[1:] <= 0) or np.any(tr_th[:n] <= 0):
        raise RuntimeError("non-positive temperature in reconstruction")

    # outer trace at each end: trace-built ghost at a wall, zero-gradient copy
    # for a free boundary
    if config.left is not None:
        if reuse is not None:
            g = reuse["outer"][0]
        else:
            g = ghost_state(MomentState(tr_u[0], tr_th[0], tr_c[0]), config.left)
        tl_u[0], tl_th[0], tl_c[0] = g.u, g.theta, g.coeffs
        outer_l = g
    else:
        tl_u[0], tl_th[0], tl_c[0] = grid.u[0], grid.theta[0], grid.coeffs[0]
        outer_l = None
    if config.right is not None:
        if reuse is not None:
            g = reuse["outer"][1]
        else:
            g = ghost_state(MomentState(tl_u[n], tl_th[n], tl_c[n]), config.right)
        tr_u[n], tr_th[n], tr_c[n] = g.u, g.theta, g.coeffs
        outer_r = g
    else:
        tr_u[n], tr_th[n], tr_c[n] = grid.u[-1], grid.theta[-1], grid.coeffs[-1]
        outer_r = None

    al_u = np.concatenate([tl_u[:1], grid.u], axis=0)
    al_th = np.concatenate([tl_th[:1], grid.theta])
    al_c = np.concatenate([tl_c[:1], grid.coeffs], axis=0)
    br_u = np.concatenate([grid.u, tr_u[n:]], axis=0)
    br_th = np.concatenate([grid.theta, tr_th[n:]])
    br_c = np.concatenate([grid.coeffs, tr_c[n:]], axis=0)
    # at a wall the flanking pair is (trace, its ghost), which pins the
    # common frame to (u_trace_tangential, u_wall_normal, theta_trace)
    if config.left is not None:
        br_u[0], br_th[0], br_c[0] = tr_u[0], tr_th[0], tr_c[0]
    if config.right is not None:
        al_u[n], al_th[n], al_c[n] = tl_u[n], tl_th[n], tl_c[n]

    return {
        "tl": (tl_u, tl_th, tl_c),
        "tr": (tr_u, tr_th, tr_c),
        "al": (al_u, al_th, al_c),
        "br": (br_u, br_th, br_c),
        "ghosts": {"cell_ghosts": (gl, gr), "outer": (outer_l, outer_r)},
    }


def reconstruct(grid, config):
    """Interface trace pairs (left, right) as MomentStates, one per interface."""
    data = _interface_data(grid, config)
    tl_u, tl_th, tl_c = data["tl"]
    tr_u, tr_th, tr_c = data["tr"]
    return [
        (
            MomentState(tl_u[i], tl_th[i], tl_c[i]),
            MomentState(tr_u[i], tr_th[i], tr_c[i]),
        )
        for i in range(grid.n + 1)
    ]


def _cell_closure_blocks(grid, config, dt):
    """closure_location='cell': top-grade prediction per cell from central
    differences of the neighbor cell data over 2 dx.

    Differences are raw (stored-frame) slot-wise: the closure formula wants
    gradients of the locally-framed coefficient field, and its explicit
    du/dy, dtheta/dy terms already account for the frame varying in space."""
    n, dx = grid.n, grid.dx
    gl = _cell_ghost(grid, 0, config.left)
    gr = _cell_ghost(grid, n - 1, config.right)
    ext_u = np.concatenate([gl.u[None], grid.u, gr.u[None]], axis=0)
    ext_th = np.concatenate([[gl.theta], grid.theta, [gr.theta]])
    ext_c = np.concatenate([gl.coeffs[None], grid.coeffs, gr.coeffs[None]], axis=0)

    span = 2.0 * dx
    rho = grid.densities()
    grad_c = (ext_c[2:] - ext_c[:-2]) / span
    grad_u = (ext_u[2:] - ext_u[:-2]) / span
    grad_th = (ext_th[2:] - ext_th[:-2]) / span
    grad_pt = (ext_c[2:, 0, 0, 0] * ext_th[2:] - ext_c[:-2, 0, 0, 0] * ext_th[:-2]) / span
    # wall cells: one-sided interior differences (the mirror ghost's
    # odd-normal-order slots would otherwise feed back into the closure)
    for j, jo, wall in ((0, min(1, n - 1), config.left), (n - 1, max(n - 2, 0), config.right)):
        if wall is None:
            continue
        sgn = 1.0 if jo >= j else -1.0
        grad_c[j] = sgn * (grid.coeffs[jo] - grid.coeffs[j]) / dx
        grad_u[j] = sgn * (grid.u[jo] - grid.u[j]) / dx
        grad_th[j] = sgn * (grid.theta[jo] - grid.theta[j]) / dx
        grad_pt[j] = sgn * (
            grid.coeffs[jo, 0, 0, 0] * grid.theta[jo]
            - grid.coeffs[j, 0, 0, 0] * grid.theta[j]
        ) / dx
    tau = closure_time(rho, grid.theta, config.kn, dt)
    return closure_coeffs(
        grid.coeffs,
        grid.theta,
        grad_c,
        grad_u,
        grad_th,
        grad_pt,
        tau,
    )


def _transport_rate(grid, config, dt, reuse=None):
    """One flux-divergence evaluation: d(coeffs)/dt in each cell's own frame.

    Returns (rate, ghosts) where ghosts can be fed back as ``reuse`` by a
    later sub-stage when ``config.ghost_refresh`` is off.
    """
    n, dx = grid.n, grid.dx
    K = grid.coeffs.shape[-1]
    evolved = grade_mask(K, K - 2)
    top = order_cube(K) == K - 1

    work = grid
    if config.closure_location == "cell":
        blocks = _cell_closure_blocks(grid, config, dt)
        work = Grid1D(
            grid.y_lo,
            grid.y_hi,
            grid.u,
            grid.theta,
            np.where(top, blocks, grid.coeffs),
        )

    data = _interface_data(work, config, reuse=reuse)
    tl_u, tl_th, tl_c = data["tl"]
    tr_u, tr_th, tr_c = data["tr"]
    al_u, al_th, al_c = data["al"]
    br_u, br_th, br_c = data["br"]

    u_c = 0.5 * (al_u + br_u)
    th_c = 0.5 * (al_th + br_th)
    p_pair = project_coeffs(
        np.stack([tl_c, tr_c]),
        np.stack([tl_u, tr_u]),
        np.stack([tl_th, tr_th]),
        u_c,
        th_c,
    )
    p_tl, p_tr = p_pair[0], p_pair[1]

    if config.closure_location == "interface":
        mean_c = 0.5 * (p_tl + p_tr)
        rho_bar = mean_c[:, 0, 0, 0]
        if np.any(rho_bar <= 0):
            raise RuntimeError(
                "non-positive interface density in closure at interface %d"
                % int(np.argmin(rho_bar))
            )
        # Closure gradients: centered two-point differences of the
        # single-valued reconstructed interface values over 2 dx, raw
        # (stored-frame) slot-wise -- the formula's derivatives are of the
        # locally-framed coefficient field, with frame variation carried by
        # its explicit du/dy, dtheta/dy terms.  The wide stencil is also what
        # keeps the scheme stable at the advective CFL step: the HLL
        # dissipation alone puts the highest-frequency mode near the
        # stability edge, and this stencil does not see that mode.
        v_c = 0.5 * (tl_c + tr_c)
        v_u = 0.5 * (tl_u + tr_u)
        v_th = 0.5 * (tl_th + tr_th)
        v_pt = 0.5 * (
            tl_c[:, 0, 0, 0] * tl_th + tr_c[:, 0, 0, 0] * tr_th
        )
        grad_c = np.empty_like(v_c)
        grad_u = np.empty_like(v_u)
        grad_th = np.empty_like(v_th)
        grad_pt = np.empty_like(v_pt)
        span = 2.0 * dx
        grad_c[1:-1] = (v_c[2:] - v_c[:-2]) / span
        grad_u[1:-1] = (v_u[2:] - v_u[:-2]) / span
        grad_th[1:-1] = (v_th[2:] - v_th[:-2]) / span
        grad_pt[1:-1] = (v_pt[2:] - v_pt[:-2]) / span
        # end interfaces: one-sided differences of the adjacent raw cell
        # data; a wall ghost's odd-normal-order entries do not track the
        # interior ones, so differencing against it is not a gradient
        # estimate and would couple back into the top grade
        for i, ja, jb in ((0, 0, min(1, n - 1)), (n, max(n - 2, 0), n - 1)):
            grad_c[i] = (work.coeffs[jb] - work.coeffs[ja]) / dx
            grad_u[i] = (work.u[jb] - work.u[ja]) / dx
            grad_th[i] = (work.theta[jb] - work.theta[ja]) / dx
            grad_pt[i] = (
                work.coeffs[jb, 0, 0, 0] * work.theta[jb]
                - work.coeffs[ja, 0, 0, 0] * work.theta[ja]
            ) / dx
        block = closure_coeffs(
            mean_c,
            th_c,
            grad_c,
            grad_u,
            grad_th,
            grad_pt,
            closure_time(rho_bar, th_c, config.kn, dt),
        )
        a = np.where(top, block, p_tl)
        b = np.where(top, block, p_tr)
    else:
        a, b = p_tl, p_tr

    c_sig = config.signal_speed
    lam_l = np.minimum(
        tl_u[:, 1] - c_sig * np.sqrt(tl_th), tr_u[:, 1] - c_sig * np.sqrt(tr_th)
    )
    lam_r = np.maximum(
        tl_u[:, 1] + c_sig * np.sqrt(tl_th), tr_u[:, 1] + c_sig * np.sqrt(tr_th)
    )
    F = _hll_combine(
        _flux_cube(a, u_c[:, 1], th_c),
        _flux_cube(b, u_c[:, 1], th_c),
        (b - a) * evolved,
        lam_l,
        lam_r,
    )

    f_pair = project_coeffs(
        np.stack([F[:-1], F[1:]]),
        np.stack([u_c[:-1], u_c[1:]]),
        np.stack([th_c[:-1], th_c[1:]]),
        grid.u,
        grid.theta,
    )
    return (f_pair[0] - f_pair[1]) / dx, data["ghosts"]


def _stage_state(grid, coeffs, stage):
    """Renormalize a provisional coefficient update into a valid grid."""
    rho = coeffs[:, 0, 0, 0]
    if np.any(rho <= 0):
        raise RuntimeError(
            "non-positive density in cell %d after %s"
            % (int(np.argmin(rho)), stage)
        )
    u_new, th_new, c_ren = renormalize_arrays(grid.u, grid.theta, coeffs)
    if np.any(th_new <= 0):
        raise RuntimeError(
            "non-positive temperature in cell %d after %s"
            % (int(np.argmin(th_new)), stage)
        )
    c_ren *= grade_mask(coeffs.shape[-1], coeffs.shape[-1] - 2)
    return Grid1D(grid.y_lo, grid.y_hi, u_new, th_new, c_ren)


def step(grid, config, dt=None):
    """Advance the grid in place by one split step; returns the dt used.

    Transport is integrated with a two-stage trapezoidal (Heun) update:
    one flux evaluation per stage, stage states renormalized, the two rates
    averaged in the step-start frames.  A single forward-Euler pass over the
    linearly reconstructed fluxes is weakly unstable at the working CFL on
    any fixed grid; the second stage restores stability up to CFL 1 while
    keeping every stage a plain reconstruct -> close -> HLL sweep.
    """
    if grid.M != config.M:
        raise ValueError("grid and config disagree on the moment order")
    if dt is None:
        dt = cfl_timestep(grid, config.cfl, config.signal_speed)
    K = grid.coeffs.shape[-1]
    evolved = grade_mask(K, K - 2)

    if config.splitting == "strang":
        grid.u += 0.5 * dt * config.force

    r1, ghosts = _transport_rate(grid, config, dt)
    g1 = _stage_state(grid, (grid.coeffs + dt * r1) * evolved, "transport")
    r2, _ = _transport_rate(
        g1, config, dt, reuse=None if config.ghost_refresh else ghosts
    )
    # the second-stage rate comes back in the stage frames; re-express it in
    # the step-start frames before averaging (the frame map is linear)
    r2 = project_coeffs(r2, g1.u, g1.theta, grid.u, grid.theta)
    new_c = (grid.coeffs + 0.5 * dt * (r1 + r2)) * evolved
    final = _stage_state(grid, new_c, "transport")
    u_new, th_new, c_ren = final.u, final.theta, final.coeffs

    if not config.collisionless:
        tau = relaxation_time(c_ren[:, 0, 0, 0], th_new, config.kn)
        c_ren = collide_coeffs(c_ren, tau, config.pr, dt)

    kick = 0.5 * dt if config.splitting == "strang" else dt
    u_new = u_new + kick * config.force

    grid.u = u_new
    grid.theta = th_new
    grid.coeffs = c_ren
    return dt


@dataclass
class RunResult:
    grid: Grid1D
    t: float
    steps: int
    dt_history: np.ndarray
    residual_history: np.ndarray
    snapshots: list
    converged: bool
    message: str

    def final_table(self):
        return snapshot_table(
            self.grid.centers, self.grid.u, self.grid.theta, self.grid.coeffs
        )


def run(grid, config, snapshot_interval=None, on_step=None):
    """March to the configured end time and/or steady state.

    ``snapshot_interval``: emit a profile table every that many steps (the
    final state is always included).  ``on_step(t, grid)`` is an optional
    observer.  Steady detection: max relative per-step change of any stored
    quantity, per unit time, below config.steady_tol.
    """
    t_end = config.t_end if config.t_end is not None else math.inf
    t = 0.0
    snapshots = []
    dts = []
    residuals = []
    converged = config.steady_tol is None
    message = "reached end time"
    steps = 0
    while t < t_end and steps < config.max_steps:
        dt = cfl_timestep(grid, config.cfl, config.signal_speed)
        if t + dt > t_end:
            dt = t_end - t
        prev_u = grid.u.copy()
        prev_th = grid.theta.copy()
        prev_c = grid.coeffs.copy()
        step(grid, config, dt)
        t += dt
        steps += 1
        dts.append(dt)
        res = max(
            np.max(np.abs(grid.coeffs - prev_c) / (np.abs(prev_c) + RESIDUAL_FLOOR)),
            np.max(np.abs(grid.u - prev_u) / (np.abs(prev_u) + RESIDUAL_FLOOR)),
            np.max(np.abs(grid.theta - prev_th) / (prev_th + RESIDUAL_FLOOR)),
        ) / dt
        residuals.append(res)
        if on_step is not None:
            on_step(t, grid)
        if snapshot_interval and steps % snapshot_interval == 0:
            snapshots.append(
                (t, snapshot_table(grid.centers, grid.u, grid.theta, grid.coeffs))
            )
        if config.steady_tol is not None and res < config.steady_tol:
            converged = True
            message = "steady state reached"
            break
    else:
        if steps >= config.max_steps and config.steady_tol is not None:
            converged = False
            message = "step budget exhausted before reaching steady state"
    snapshots.append(
        (t, snapshot_table(grid.centers, grid.u, grid.theta, grid.coeffs))
    )
    return RunResult(
        grid,
        t,
        steps,
        np.asarray(dts),
        np.asarray(residuals),
        snapshots,
        converged,
        message,
    )
