"""Invariant auditing, energy functionals, and the MMS convergence harness."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bulk import BalanceTerms, FieldState, RobinData, assemble_s_system, cg_solve
from .grid import Edge, EdgeTag, Grid2D, build_grid
from .model import (
    ConstraintMode,
    PhysParams,
    PSI_ZERO,
    PsiPolynomial,
    permeability,
    porosity,
    rugosity_reaction_potential,
)

S_TOL = 1e-10
C_TOL = 1e-12
R_TOL = 1e-12
BALANCE_REL_TOL = 1e-8


@dataclass(frozen=True)
class AuditEntry:
    step: int
    t: float
    s_min: float
    s_max: float
    c_min: float
    c_max: float
    r_min: float
    r_max: float
    xi_max_abs: float
    balance_residual: float
    balance_scale: float
    flags: tuple[str, ...]


@dataclass
class InvariantReport:
    """Append-only record of per-step bounds and balance residuals."""

    entries: list[AuditEntry] = field(default_factory=list)

    def append(self, entry: AuditEntry) -> None:
        self.entries.append(entry)

    @property
    def flagged(self) -> list[AuditEntry]:
        return [e for e in self.entries if e.flags]

    def summary(self) -> dict[str, str]:
        if not self.entries:
            return {"steps": "0", "flags": "0"}
        worst_balance = max(
            (e.balance_residual / e.balance_scale if e.balance_scale > 0 else 0.0)
            for e in self.entries
        )
        return {
            "steps": str(len(self.entries)),
            "flags": str(sum(len(e.flags) for e in self.entries)),
            "s_min": f"{min(e.s_min for e in self.entries):.3e}",
            "s_max": f"{max(e.s_max for e in self.entries):.3e}",
            "c_min": f"{min(e.c_min for e in self.entries):.3e}",
            "max_rel_balance_residual": f"{worst_balance:.3e}",
        }


def audit_step(
    state: FieldState,
    p: PhysParams,
    terms: BalanceTerms,
    grid: Grid2D,
    step_index: int = 0,
) -> AuditEntry:
    """Check one accepted step against the model's provable bounds.

    Flags: s below -1e-10, s above S0+1e-10 (only when the ceiling
    hypotheses hold), c outside [0, C0] beyond 1e-12, r outside [0, R0]
    beyond 1e-12 in box mode, and a discrete balance residual above 1e-8
    relative to its largest constituent term.  Reporting only; the state is
    never mutated.
    """
    flags = []
    s_min = float(state.s.min())
    s_max = float(state.s.max())
    c_min = float(state.c.min())
    c_max = float(state.c.max())
    if len(state.r):
        r_min = float(state.r.min())
        r_max = float(state.r.max())
        xi_max = float(np.abs(state.xi).max())
    else:
        r_min = r_max = xi_max = 0.0

    if s_min < -S_TOL:
        flags.append(f"s_min={s_min:.3e} below -{S_TOL} at node {int(state.s.argmin())}")
    if p.ceiling_guaranteed() and s_max > p.S0 + S_TOL:
        flags.append(f"s_max={s_max:.3e} above S0+{S_TOL} at node {int(state.s.argmax())}")
    if c_min < -C_TOL or c_max > p.C0 + C_TOL:
        node = int(state.c.argmin() if c_min < -C_TOL else state.c.argmax())
        flags.append(f"c range [{c_min:.3e}, {c_max:.3e}] outside [0, C0] at node {node}")
    if len(state.r) and (r_min < -R_TOL):
        flags.append(f"r_min={r_min:.3e} below 0 at trace node {int(state.r.argmin())}")
    if p.constraint_mode is ConstraintMode.BOX and len(state.r) and r_max > p.R0 + R_TOL:
        flags.append(f"r_max={r_max:.3e} above R0 at trace node {int(state.r.argmax())}")

    residual = abs(
        terms.accumulation + terms.reaction - terms.boundary_exchange - terms.source_total
    )
    scale = max(
        abs(terms.accumulation),
        abs(terms.reaction),
        abs(terms.boundary_exchange),
        abs(terms.source_total),
    )
    if scale > 0 and residual > BALANCE_REL_TOL * scale:
        flags.append(f"balance residual {residual:.3e} above {BALANCE_REL_TOL}*{scale:.3e}")

    return AuditEntry(
        step=step_index,
        t=state.t,
        s_min=s_min,
        s_max=s_max,
        c_min=c_min,
        c_max=c_max,
        r_min=r_min,
        r_max=r_max,
        xi_max_abs=xi_max,
        balance_residual=residual,
        balance_scale=scale,
        flags=tuple(flags),
    )


def _grad(field2d: np.ndarray, hx: float, hy: float):
    # centered differences inside, first-order one-sided at the boundary
    gy, gx = np.gradient(field2d, hy, hx, edge_order=1)
    return gx, gy


def bulk_energy(state: FieldState, grid: Grid2D, p: PhysParams) -> float:
    """Volume energy of the s-equation plus the boundary exchange term.

    Trapezoidal quadrature of
      phi(c)/2 |grad s|^2 + lam*c*phi(c)*s^2/2 - lam*B*phi(c)*c*s^3/3
    over the square, plus nu(r)/2 (s - sbar)^2 over the exposed trace.
    Diagnostic only; no decay property is asserted anywhere.
    """
    s2 = state.s.reshape(grid.ny, grid.nx)
    gx, gy = _grad(s2, grid.hx, grid.hy)
    phi = np.asarray(porosity(state.c, p))
    dens = (
        0.5 * phi * (gx.ravel() ** 2 + gy.ravel() ** 2)
        + 0.5 * p.lam * state.c * phi * state.s**2
        - (p.lam * p.B / 3.0) * phi * state.c * state.s**3
    )
    total = float(np.sum(grid.node_volumes() * dens))
    trace = grid.exposed_trace()
    if trace is not None and len(state.r):
        nu = np.asarray(permeability(state.r, p))
        s_tr = state.s[trace.indices]
        total += float(np.sum(trace.weights * 0.5 * nu * (s_tr - p.sbar) ** 2))
    return total


def surface_energy(
    state: FieldState,
    grid: Grid2D,
    p: PhysParams,
    psi: PsiPolynomial = PSI_ZERO,
    f_ext: np.ndarray | float = 0.0,
) -> float:
    """Boundary energy: Psi(r) + potential of G minus F*r over the trace.

    The constraint indicator contributes zero because the projection keeps
    r feasible at all times.
    """
    trace = grid.exposed_trace()
    if trace is None or not len(state.r):
        return 0.0
    c_tr = state.c[trace.indices]
    s_tr = state.s[trace.indices]
    ghat = np.asarray(rugosity_reaction_potential(state.r, c_tr, s_tr, p))
    dens = np.asarray(psi.value(state.r)) + ghat - np.asarray(f_ext) * state.r
    return float(np.sum(trace.weights * dens))


# ---------------------------------------------------------------------------
# Method of manufactured solutions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ManufacturedFields:
    """Closed-form fields driving the verification of the implicit s-solve.

    c and r are prescribed (their integrators have exact oracles of their
    own), a volumetric source makes s_exact solve the discrete equation's
    continuous counterpart, and the exposed-edge Robin data is overridden
    with a compensating flux so the exchange machinery is exercised
    nontrivially.
    """

    p: PhysParams

    def s_exact(self, x1, x2, t):
        return math.exp(-t) * np.cos(np.pi * x1) * np.cos(np.pi * x2)

    def c_field(self, x1, x2, t):
        return self.p.C0 * (0.5 + 0.25 * np.cos(np.pi * x1) * math.exp(-t))

    def r_field(self, x2, t):
        return self.p.rl * (0.5 + 0.25 * np.sin(np.pi * x2)) * (1.0 - math.exp(-t))

    def source(self, x1, x2, t):
        """Forcing f = dt(phi*s) - div(phi*grad s) + lam*phi*c*s for s_exact."""
        p = self.p
        s = self.s_exact(x1, x2, t)
        c = self.c_field(x1, x2, t)
        phi = p.A + p.B * c
        c_t = -0.25 * p.C0 * np.cos(np.pi * x1) * math.exp(-t)
        # dt(phi s) = B*c_t*s + phi*(-s);  lap(s) = -2 pi^2 s
        # grad(phi).grad(s) = 0.25*B*C0*pi^2*exp(-2t)*sin^2(pi x1)*cos(pi x2)
        cross = 0.25 * p.B * p.C0 * np.pi**2 * math.exp(-2.0 * t) * np.sin(np.pi * x1) ** 2 * np.cos(np.pi * x2)
        return p.B * c_t * s - phi * s + 2.0 * np.pi**2 * phi * s - cross + p.lam * phi * c * s

    def robin_override(self, coords: np.ndarray, t: float) -> RobinData:
        """Exchange data on the left edge under which s_exact is exact.

        s_exact has zero normal derivative on every edge, so the required
        compensating flux is g = nu(r*)(s_exact|edge - sbar).
        """
        p = self.p
        nu = np.asarray(permeability(self.r_field(coords, t), p), dtype=float)
        s_edge = self.s_exact(0.0, coords, t)
        return RobinData(
            nu=nu,
            sbar=np.full(len(coords), p.sbar),
            flux=nu * (s_edge - p.sbar),
        )


@dataclass(frozen=True)
class ConvergenceRow:
    level: int
    h_or_dt: float
    err_l2: float
    err_max: float
    order_l2: float | None
    order_max: float | None


@dataclass
class ConvergenceTable:
    study: str
    rows: list[ConvergenceRow]

    CSV_HEADER = "level,h_or_dt,err_L2,err_max,order_L2,order_max"

    def to_csv(self) -> str:
        lines = [self.CSV_HEADER]
        for r in self.rows:
            o2 = "" if r.order_l2 is None else f"{r.order_l2:.17g}"
            om = "" if r.order_max is None else f"{r.order_max:.17g}"
            lines.append(
                f"{r.level},{r.h_or_dt:.17g},{r.err_l2:.17g},{r.err_max:.17g},{o2},{om}"
            )
        return "\n".join(lines) + "\n"

    def __str__(self) -> str:
        out = [f"{self.study} convergence study"]
        out.append(f"{'level':>5} {'h_or_dt':>12} {'err_L2':>12} {'err_max':>12} {'ord_L2':>7} {'ord_max':>7}")
        for r in self.rows:
            o2 = "  --- " if r.order_l2 is None else f"{r.order_l2:7.3f}"
            om = "  --- " if r.order_max is None else f"{r.order_max:7.3f}"
            out.append(
                f"{r.level:>5} {r.h_or_dt:12.5e} {r.err_l2:12.5e} {r.err_max:12.5e} {o2} {om}"
            )
        return "\n".join(out)


def _mms_grid(n: int) -> Grid2D:
    return build_grid(n, n, {Edge.LEFT: EdgeTag.EXPOSED})


def run_mms_level(
    mf: ManufacturedFields,
    n: int,
    dt: float,
    t_end: float,
    cg_rel_tol: float = 1e-12,
) -> tuple[float, float]:
    """Integrate the forced s-equation on an n x n grid; return error norms at t_end."""
    grid = _mms_grid(n)
    x1 = grid.x1()
    x2 = grid.x2()
    trace = grid.exposed_trace()
    n_steps = int(round(t_end / dt))
    if abs(n_steps * dt - t_end) > 1e-12 * max(1.0, t_end):
        raise ValueError(f"dt={dt} does not divide t_end={t_end}")

    s = mf.s_exact(x1, x2, 0.0)
    c_old = mf.c_field(x1, x2, 0.0)
    for k in range(1, n_steps + 1):
        t = k * dt
        state_old = FieldState(t=t - dt, s=s, c=c_old, r=np.zeros(len(trace)), xi=np.zeros(len(trace)))
        c_new = mf.c_field(x1, x2, t)
        sys = assemble_s_system(
            grid,
            state_old,
            c_new,
            r_new=np.zeros(len(trace)),
            dt=dt,
            p=mf.p,
            source=mf.source(x1, x2, t),
            robin_data=mf.robin_override(trace.coords, t),
        )
        s, _, _ = cg_solve(sys, x0=s, rel_tol=cg_rel_tol)
        c_old = c_new

    err = s - mf.s_exact(x1, x2, t_end)
    vols = grid.node_volumes()
    err_l2 = float(np.sqrt(np.sum(vols * err**2)))
    err_max = float(np.abs(err).max())
    return err_l2, err_max


SPATIAL_GRIDS = (17, 33, 65, 129, 257)
SPATIAL_DT = 1e-5
TEMPORAL_GRID = 129
TEMPORAL_DT0 = 0.05
MMS_T_END = 0.1


def mms_convergence(
    study: str,
    levels: int,
    p: PhysParams | None = None,
) -> ConvergenceTable:
    """Run the spatial or temporal convergence study.

    Spatial: dt fixed at 1e-5, grids 17^2 -> 33^2 -> 65^2 -> 129^2 (then
    further refined by nesting).  Temporal: grid fixed at 129^2, dt halved
    per level starting from 0.05.  Errors are measured at t = 0.1 against
    the manufactured solution.
    """
    if levels < 3:
        raise ValueError("convergence study needs at least 3 levels")
    if study not in ("spatial", "temporal"):
        raise ValueError(f"unknown study {study!r}")
    mf = ManufacturedFields(p if p is not None else PhysParams())

    rows: list[ConvergenceRow] = []
    if study == "spatial":
        grids = [16 * 2**k + 1 for k in range(levels)]  # 17, 33, 65, ...
        prev = None
        for lvl, n in enumerate(grids):
            e2, em = run_mms_level(mf, n, SPATIAL_DT, MMS_T_END)
            h = 1.0 / (n - 1)
            if prev is None:
                rows.append(ConvergenceRow(lvl, h, e2, em, None, None))
            else:
                ratio = prev[0] / h
                rows.append(
                    ConvergenceRow(
                        lvl,
                        h,
                        e2,
                        em,
                        math.log(prev[1] / e2) / math.log(ratio),
                        math.log(prev[2] / em) / math.log(ratio),
                    )
                )
            prev = (h, e2, em)
    else:
        prev = None
        for lvl in range(levels):
            dt = TEMPORAL_DT0 / 2**lvl
            e2, em = run_mms_level(mf, TEMPORAL_GRID, dt, MMS_T_END)
            if prev is None:
                rows.append(ConvergenceRow(lvl, dt, e2, em, None, None))
            else:
                ratio = prev[0] / dt
                rows.append(
                    ConvergenceRow(
                        lvl,
                        dt,
                        e2,
                        em,
                        math.log(prev[1] / e2) / math.log(ratio),
                        math.log(prev[2] / em) / math.log(ratio),
                    )
                )
            prev = (dt, e2, em)
    return ConvergenceTable(study=study, rows=rows)
