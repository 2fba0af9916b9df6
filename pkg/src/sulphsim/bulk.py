"""Time integration of the bulk unknowns s and c.

The calcite density c advances pointwise by the exact solution of its
kinetics ODE with s frozen over the step.  The SO2 concentration s advances
by backward Euler on the conservative form

    (phi(c^{n+1}) s^{n+1} - phi(c^n) s^n)/dt
        - div_h(phi(c^{n+1}) grad_h s^{n+1})
        + lam * phi(c^{n+1}) c^{n+1} s^{n+1}  =  source,

discretized with the 5-point flux stencil, face diffusivity the arithmetic
mean of nodal phi, homogeneous Neumann on isolated edges and Robin exchange
phi*dn(s) = -nu(r)(s - sbar) on the exposed edge.  Rows are scaled by the
dual-cell volumes, which makes the matrix symmetric, an M-matrix, and
strictly diagonally dominant for every dt > 0, so the discrete solution
inherits positivity and (under the ceiling assumptions) s <= S0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .grid import Grid2D
from .model import PhysParams, PSI_ZERO, PsiPolynomial, porosity, permeability
from .surface import step_r

# CG tolerance used inside step(): tighter than the cg_solve default so the
# solver error stays well below the 1e-10 invariant tolerances.
STEP_CG_TOL = 1e-12


@dataclass
class FieldState:
    """Bulk fields s, c (length nx*ny) plus boundary fields r, xi at one time."""

    t: float
    s: np.ndarray
    c: np.ndarray
    r: np.ndarray
    xi: np.ndarray

    def copy(self) -> "FieldState":
        return FieldState(self.t, self.s.copy(), self.c.copy(), self.r.copy(), self.xi.copy())


@dataclass
class RobinData:
    """Per-trace-node boundary data phi*dn(s) = -nu*(s - sbar) + flux.

    The production path uses nu = nu(r), sbar from the parameters and
    flux = 0; the verification harness overrides all three.
    """

    nu: np.ndarray
    sbar: np.ndarray
    flux: np.ndarray


@dataclass
class LinearSystem:
    """Symmetric positive definite system in CSR layout plus right-hand side."""

    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    rhs: np.ndarray
    dominance_margin: float

    @property
    def n(self) -> int:
        return len(self.rhs)

    def matrix(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.data, self.indices, self.indptr), shape=(self.n, self.n))

    def dense(self) -> np.ndarray:
        return self.matrix().toarray()


class _Pattern:
    """Fixed CSR structure of the 5-point stencil for one grid.

    Precomputes, once per grid, where each diagonal and face contribution
    lands in the CSR data array, so per-step assembly is pure vectorized
    fills.
    """

    def __init__(self, grid: Grid2D):
        nx, ny = grid.nx, grid.ny
        n = nx * ny
        p = np.arange(n)
        i = p % nx
        j = p // nx
        has_w = i > 0
        has_e = i < nx - 1
        has_s = j > 0
        has_n = j < ny - 1

        deg = 1 + has_w + has_e + has_s + has_n
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(deg, out=indptr[1:])
        row0 = indptr[:-1]

        # Neighbor columns of row p sorted ascending: p-nx, p-1, p, p+1, p+nx.
        south_pos = row0
        west_pos = row0 + has_s
        diag_pos = row0 + has_s + has_w
        east_pos = diag_pos + 1
        north_pos = indptr[1:] - 1

        indices = np.empty(indptr[-1], dtype=np.int64)
        indices[diag_pos] = p
        indices[south_pos[has_s]] = p[has_s] - nx
        indices[west_pos[has_w]] = p[has_w] - 1
        indices[east_pos[has_e]] = p[has_e] + 1
        indices[north_pos[has_n]] = p[has_n] + nx

        wx = grid.axis_weights(nx, grid.hx)
        wy = grid.axis_weights(ny, grid.hy)

        # x-faces join (i,j)-(i+1,j); their dual length is wy of the row.
        self.xp = p[has_e]
        self.xq = self.xp + 1
        self.xlen = wy[self.xp // nx]
        self.xpos_pq = east_pos[has_e]
        self.xpos_qp = west_pos[self.xq]

        self.yp = p[has_n]
        self.yq = self.yp + nx
        self.ylen = wx[self.yp % nx]
        self.ypos_pq = north_pos[has_n]
        self.ypos_qp = south_pos[self.yq]

        self.indptr = indptr
        self.indices = indices
        self.diag_pos = diag_pos
        self.volumes = grid.node_volumes()
        self.n = n


def _pattern(grid: Grid2D) -> _Pattern:
    pat = getattr(grid, "_stencil_pattern", None)
    if pat is None:
        pat = _Pattern(grid)
        grid._stencil_pattern = pat
    return pat


def c_update_exact(c_n, s_frozen, dt: float, p: PhysParams):
    """Exact one-step kinetics update with s frozen over [t, t+dt].

    The ODE dc/dt = -lam*(A+B*c)*c*s is of Bernoulli type; its closed form

        c(t+dt) = A*c_n / ((A + B*c_n) * exp(lam*A*s*dt) - B*c_n)

    is monotone nonincreasing in dt and stays in [0, c_n].  The final clip
    only shields that guarantee against last-ulp roundoff.
    """
    if dt <= 0:
        raise ValueError(f"dt must be > 0 (dt={dt})")
    c_n = np.asarray(c_n, dtype=float)
    s_frozen = np.asarray(s_frozen, dtype=float)
    if np.any(s_frozen < 0):
        raise ValueError("c_update_exact requires s_frozen >= 0")
    x = np.minimum(p.lam * p.A * s_frozen * dt, 700.0)  # exp overflow guard
    denom = (p.A + p.B * c_n) * np.exp(x) - p.B * c_n
    return np.clip(p.A * c_n / denom, 0.0, c_n)


def assemble_s_system(
    grid: Grid2D,
    state_old: FieldState,
    c_new: np.ndarray,
    r_new: np.ndarray,
    dt: float,
    p: PhysParams,
    source: np.ndarray | None = None,
    robin_data: RobinData | None = None,
) -> LinearSystem:
    """Build the backward-Euler system for s^{n+1}.

    source is an optional nodal forcing (used by the verification harness);
    robin_data overrides the exposed-edge exchange data.  Rows are scaled
    by dual-cell volumes, so the matrix is symmetric by construction.
    """
    if dt <= 0:
        raise ValueError(f"dt must be > 0 (dt={dt})")
    for name, arr in (("c_new", c_new), ("s_old", state_old.s), ("c_old", state_old.c)):
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"non-finite values in {name}")

    pat = _pattern(grid)
    phi_new = np.asarray(porosity(c_new, p))
    phi_old = np.asarray(porosity(state_old.c, p))

    tx = 0.5 * (phi_new[pat.xp] + phi_new[pat.xq]) * pat.xlen / grid.hx
    ty = 0.5 * (phi_new[pat.yp] + phi_new[pat.yq]) * pat.ylen / grid.hy

    base_diag = pat.volumes * phi_new * (1.0 / dt + p.lam * np.asarray(c_new))
    rhs = pat.volumes * (phi_old * state_old.s / dt)
    if source is not None:
        rhs = rhs + pat.volumes * np.asarray(source)

    trace = grid.exposed_trace()
    if trace is not None:
        if robin_data is None:
            nu = np.asarray(permeability(r_new, p), dtype=float)
            robin_data = RobinData(
                nu=nu,
                sbar=np.full(len(trace), p.sbar),
                flux=np.zeros(len(trace)),
            )
        if np.any(robin_data.nu < 0):
            raise ValueError("negative boundary permeability nu(r)")
        base_diag = base_diag.copy()
        base_diag[trace.indices] += robin_data.nu * trace.weights
        rhs = rhs.copy()
        rhs[trace.indices] += trace.weights * (
            robin_data.nu * robin_data.sbar + robin_data.flux
        )

    diag = base_diag.copy()
    np.add.at(diag, pat.xp, tx)
    np.add.at(diag, pat.xq, tx)
    np.add.at(diag, pat.yp, ty)
    np.add.at(diag, pat.yq, ty)

    data = np.zeros(len(pat.indices))
    data[pat.diag_pos] = diag
    data[pat.xpos_pq] = -tx
    data[pat.xpos_qp] = -tx
    data[pat.ypos_pq] = -ty
    data[pat.ypos_qp] = -ty

    # Off-diagonal row sums equal the face sums, so the dominance margin is
    # exactly the mass + reaction + Robin diagonal; positive for any dt.
    margin = float(base_diag.min())
    return LinearSystem(
        indptr=pat.indptr,
        indices=pat.indices,
        data=data,
        rhs=rhs,
        dominance_margin=margin,
    )


class CgNonConvergence(RuntimeError):
    """Raised when PCG exhausts max_iter; carries the residual history."""

    def __init__(self, history: list[float], max_iter: int):
        super().__init__(
            f"conjugate gradients did not converge in {max_iter} iterations "
            f"(last residual {history[-1]:.3e})"
        )
        self.residual_history = history


def cg_solve(
    sys: LinearSystem,
    x0: np.ndarray | None = None,
    rel_tol: float = 1e-10,
    max_iter: int | None = None,
):
    """Jacobi-preconditioned conjugate gradients.

    Returns (solution, iterations, final true residual norm); stops when
    ||b - A x||_2 <= rel_tol * ||b||_2.  The recursive residual controls
    the iteration and the true residual is verified before returning.
    """
    if not 0 < rel_tol < 1:
        raise ValueError(f"rel_tol must be in (0,1) (got {rel_tol})")
    n = sys.n
    if max_iter is None:
        max_iter = 10 * n
    a = sys.matrix()
    d = a.diagonal()
    if np.any(d <= 0):
        raise ValueError("system diagonal is not strictly positive")
    b = sys.rhs
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros(n), 0, 0.0

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - a @ x
    z = r / d
    pvec = z.copy()
    rz = float(r @ z)
    history = [float(np.linalg.norm(r))]
    target = rel_tol * bnorm

    for k in range(max_iter + 1):
        if history[-1] <= target:
            true_r = b - a @ x
            tn = float(np.linalg.norm(true_r))
            if tn <= target:
                return x, k, tn
            # recursive residual drifted; restart from the true one
            r = true_r
            z = r / d
            pvec = z.copy()
            rz = float(r @ z)
            history[-1] = tn
        if k == max_iter:
            break
        ap = a @ pvec
        alpha = rz / float(pvec @ ap)
        x += alpha * pvec
        r -= alpha * ap
        z = r / d
        rz_new = float(r @ z)
        beta = rz_new / rz
        rz = rz_new
        pvec = z + beta * pvec
        history.append(float(np.linalg.norm(r)))

    raise CgNonConvergence(history, max_iter)


@dataclass
class BalanceTerms:
    """Per-step byproducts consumed by the invariant audit.

    The first four entries are the summands of the discrete balance
    identity obtained by summing the volume-scaled scheme over all nodes;
    the traces record the surface inputs of the final rugosity update.
    """

    accumulation: float
    reaction: float
    boundary_exchange: float
    source_total: float
    c_trace: np.ndarray = field(default_factory=lambda: np.zeros(0))
    s_trace: np.ndarray = field(default_factory=lambda: np.zeros(0))
    r_prev: np.ndarray = field(default_factory=lambda: np.zeros(0))
    cg_iterations: int = 0
    cg_residual: float = 0.0


def step(
    state: FieldState,
    dt: float,
    grid: Grid2D,
    p: PhysParams,
    picard_iters: int = 2,
    psi: PsiPolynomial = PSI_ZERO,
    f_ext: np.ndarray | float = 0.0,
) -> tuple[FieldState, BalanceTerms]:
    """Advance the coupled state by one time step.

    Per Picard sweep: (1) c from the exact kinetics with s frozen, (2) r by
    the explicit surface update using traces of the new c and the frozen s,
    (3) s from the implicit solve with coefficients phi(c_new), nu(r_new).
    Further sweeps re-freeze s at the latest iterate and redo (1)-(3) from
    the time-level-n state, approximating the fully implicit coupling.
    """
    if picard_iters < 1:
        raise ValueError("picard_iters must be >= 1")
    trace = grid.exposed_trace()
    pat = _pattern(grid)

    # Frozen s must be nonnegative for the kinetics; the solve itself can
    # leave -1e-12-scale noise which would otherwise flip the decay sign.
    s_frozen = np.maximum(state.s, 0.0)
    c_new = state.c
    r_new, xi = state.r, np.zeros_like(state.r)
    s_new = state.s
    iters = 0
    resid = 0.0
    c_tr = np.zeros(0)
    s_tr = np.zeros(0)

    for _ in range(picard_iters):
        c_new = c_update_exact(state.c, s_frozen, dt, p)
        if trace is not None:
            c_tr = c_new[trace.indices]
            s_tr = s_frozen[trace.indices]
            r_new, xi = step_r(state.r, c_tr, s_tr, dt, p, f_ext=f_ext, psi=psi)
        sys = assemble_s_system(grid, state, c_new, r_new, dt, p)
        s_new, iters, resid = cg_solve(sys, x0=state.s, rel_tol=STEP_CG_TOL)
        if not np.all(np.isfinite(s_new)):
            raise ValueError("non-finite s after implicit solve")
        s_frozen = np.maximum(s_new, 0.0)

    phi_new = np.asarray(porosity(c_new, p))
    phi_old = np.asarray(porosity(state.c, p))
    v = pat.volumes
    accumulation = float(np.sum(v * (phi_new * s_new - phi_old * state.s)) / dt)
    reaction = float(p.lam * np.sum(v * phi_new * c_new * s_new))
    if trace is not None:
        nu = np.asarray(permeability(r_new, p))
        boundary = float(np.sum(trace.weights * nu * (p.sbar - s_new[trace.indices])))
    else:
        boundary = 0.0

    new_state = FieldState(t=state.t + dt, s=s_new, c=c_new, r=r_new, xi=xi)
    terms = BalanceTerms(
        accumulation=accumulation,
        reaction=reaction,
        boundary_exchange=boundary,
        source_total=0.0,
        c_trace=c_tr,
        s_trace=s_tr,
        r_prev=state.r.copy(),
        cg_iterations=iters,
        cg_residual=resid,
    )
    return new_state, terms
