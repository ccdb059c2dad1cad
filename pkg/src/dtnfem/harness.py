"""Error norms against the modal oracle, mesh/truncation studies, CSV output.

Errors are measured in the product norms over both regions,

    err_h0^2 = |u - u_h|^2_{L2(disc)} + |p - p_h|^2_{L2(annulus)},
    err_h1^2 = err_h0^2 + |grad(u - u_h)|^2 + |grad(p - p_h)|^2,

by a degree-5 (7-point) rule per triangle, one degree beyond what an O(h^2)
rate measurement needs so quadrature error never masquerades as convergence.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import analytic
from . import dtn as dtn_ops
from .assembly import assemble_blocks, assemble_system
from .config import PhysicalConfig
from .mesh import Mesh, build_annulus_mesh, build_disc_mesh, mesh_size, refine
from .solve import FieldSolution, solve

__all__ = [
    "CSV_HEADER", "ErrorReport", "StudyConfig",
    "ConvergenceResult", "TruncationResult", "PlateauInfo",
    "error_norms", "convergence_study", "truncation_study", "operator_decay",
    "build_mesh_pair", "run_single", "write_csv",
    "fitted_order", "successive_orders",
]

CSV_HEADER = "h,N,k,dofs,err_h0,err_h1,seconds"

_SQRT15 = np.sqrt(15.0)
_B1 = (6.0 + _SQRT15) / 21.0
_B2 = (6.0 - _SQRT15) / 21.0
_TRI_QP = np.array([
    [1 / 3, 1 / 3, 1 / 3],
    [1 - 2 * _B1, _B1, _B1], [_B1, 1 - 2 * _B1, _B1], [_B1, _B1, 1 - 2 * _B1],
    [1 - 2 * _B2, _B2, _B2], [_B2, 1 - 2 * _B2, _B2], [_B2, _B2, 1 - 2 * _B2],
])
_TRI_QW = np.array([9 / 40,
                    (155 + _SQRT15) / 1200, (155 + _SQRT15) / 1200,
                    (155 + _SQRT15) / 1200,
                    (155 - _SQRT15) / 1200, (155 - _SQRT15) / 1200,
                    (155 - _SQRT15) / 1200])


@dataclass(frozen=True)
class ErrorReport:
    h: float
    N: int
    k: float
    dofs: int
    err_h0: float
    err_h1: float
    seconds: float


def _quad_points(mesh: Mesh):
    p = mesh.nodes[mesh.triangles]               # (T, 3, 2)
    pts = np.einsum("qa,tad->tqd", _TRI_QP, p)   # (T, Q, 2)
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    area = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    return pts, area


def _p1_gradients(mesh: Mesh):
    p = mesh.nodes[mesh.triangles]
    x, y = p[..., 0], p[..., 1]
    det = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) \
        - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0])
    g = np.empty_like(p)
    g[:, 0, 0] = y[:, 1] - y[:, 2]
    g[:, 0, 1] = x[:, 2] - x[:, 1]
    g[:, 1, 0] = y[:, 2] - y[:, 0]
    g[:, 1, 1] = x[:, 0] - x[:, 2]
    g[:, 2, 0] = y[:, 0] - y[:, 1]
    g[:, 2, 1] = x[:, 1] - x[:, 0]
    return g / det[:, None, None]


class _ExactQuadrature:
    """Oracle fields frozen at the quadrature points of one mesh pair.

    Building this is the expensive part of an error measurement; reusing it
    across a truncation sweep makes the N study cheap.
    """

    def __init__(self, disc_mesh: Mesh, annulus_mesh: Mesh,
                 exact: analytic.SeriesSolution):
        self.disc_mesh = disc_mesh
        self.annulus_mesh = annulus_mesh
        self.exact = exact

        pts, self.area_d = _quad_points(disc_mesh)
        self.grads_d = _p1_gradients(disc_mesh)
        r = np.hypot(pts[..., 0], pts[..., 1])
        th = np.arctan2(pts[..., 1], pts[..., 0])
        # boundary triangles are chords of the circles, so a few quadrature
        # points sit O(h^2) outside the exact regions: lift the domain guard
        self.u_ex, self.jac_ex = analytic.eval_displacement(
            exact, r, th, with_gradient=True, check_domain=False)

        pts, self.area_a = _quad_points(annulus_mesh)
        self.grads_a = _p1_gradients(annulus_mesh)
        r = np.hypot(pts[..., 0], pts[..., 1])
        th = np.arctan2(pts[..., 1], pts[..., 0])
        self.p_ex, (pr, pt) = analytic.eval_pressure(
            exact, r, th, with_gradient=True, check_domain=False)
        c, s = np.cos(th), np.sin(th)
        self.gp_ex = np.stack([c * pr - s * pt / r, s * pr + c * pt / r],
                              axis=-1)

    def errors(self, u_nodal: np.ndarray, p_nodal: np.ndarray):
        tri_d = self.disc_mesh.triangles
        u_tri = u_nodal[tri_d]                                   # (T, 3, 2)
        u_h = np.einsum("qa,tac->tqc", _TRI_QP, u_tri)
        gu_h = np.einsum("tac,tad->tcd", u_tri, self.grads_d)    # (T, 2, 2)
        du = u_h - self.u_ex
        dg = gu_h[:, None, :, :] - self.jac_ex
        l2_d = np.einsum("q,tqc->t", _TRI_QW, np.abs(du) ** 2) @ self.area_d
        h1_d = np.einsum("q,tqcd->t", _TRI_QW, np.abs(dg) ** 2) @ self.area_d

        tri_a = self.annulus_mesh.triangles
        p_tri = p_nodal[tri_a]
        p_h = np.einsum("qa,ta->tq", _TRI_QP, p_tri)
        gp_h = np.einsum("ta,tad->td", p_tri, self.grads_a)
        dp = p_h - self.p_ex
        dgp = gp_h[:, None, :] - self.gp_ex
        l2_a = np.einsum("q,tq->t", _TRI_QW, np.abs(dp) ** 2) @ self.area_a
        h1_a = np.einsum("q,tqd->t", _TRI_QW, np.abs(dgp) ** 2) @ self.area_a

        err_h0 = np.sqrt(l2_d + l2_a)
        err_h1 = np.sqrt(l2_d + l2_a + h1_d + h1_a)
        return float(err_h0), float(err_h1)


_PHYSICAL_FIELDS = ("lam", "mu", "rho", "rho_f", "omega", "k", "R0", "R", "d")


def _same_physics(a: PhysicalConfig, b: PhysicalConfig) -> bool:
    return all(getattr(a, f) == getattr(b, f) for f in _PHYSICAL_FIELDS)


def error_norms(sol: FieldSolution, exact: analytic.SeriesSolution) -> ErrorReport:
    """Measure the discrete solution against the modal oracle."""
    if not _same_physics(sol.config, exact.config):
        raise ValueError("solution and oracle use different physical "
                         "configurations")
    t0 = time.perf_counter()
    quad = _ExactQuadrature(sol.disc_mesh, sol.annulus_mesh, exact)
    err_h0, err_h1 = quad.errors(sol.u_nodal, sol.p_nodal)
    h = max(mesh_size(sol.disc_mesh), mesh_size(sol.annulus_mesh))
    dofs = 2 * sol.disc_mesh.num_nodes + sol.annulus_mesh.num_nodes
    return ErrorReport(h=h, N=sol.config.N, k=sol.config.k, dofs=dofs,
                       err_h0=err_h0, err_h1=err_h1,
                       seconds=time.perf_counter() - t0)


def _default_workers() -> int:
    return max(1, int(os.environ.get("DTNFEM_WORKERS", "1")))


@dataclass(frozen=True)
class StudyConfig:
    """Sweep definition: refinement levels, DtN orders, wave numbers."""

    lam: float = 1.0
    mu: float = 1.0
    rho: float = 1.0
    rho_f: float = 1.0
    omega: float = 1.0
    R0: float = 1.0
    R: float = 2.0
    d: tuple = (1.0, 0.0)
    n_angular: int = 16
    levels: tuple = (1, 2, 3)
    k_values: tuple = (1.0,)
    N: int = 20
    n_values: tuple = tuple(range(1, 21))
    modes: int | None = None
    output: str | None = None
    workers: int = field(default_factory=_default_workers)

    def __post_init__(self):
        if not self.levels or not self.k_values or not self.n_values:
            raise ValueError("sweep lists must be non-empty")
        if max(self.levels) > 7:
            raise ValueError("refinement count capped at 7 (desk-scale guard)")
        if min(self.levels) < 0:
            raise ValueError("refinement levels must be >= 0")

    def physical(self, k: float, N: int | None = None) -> PhysicalConfig:
        return PhysicalConfig(lam=self.lam, mu=self.mu, rho=self.rho,
                              rho_f=self.rho_f, omega=self.omega, k=k,
                              R0=self.R0, R=self.R,
                              N=self.N if N is None else N, d=self.d)


def build_mesh_pair(R0: float, R: float, n_angular: int, level: int):
    """Coarse disc/annulus pair refined ``level`` times."""
    disc = build_disc_mesh(R0, n_angular)
    annulus = build_annulus_mesh(R0, R, n_angular)
    for _ in range(level):
        disc = refine(disc)
        annulus = refine(annulus)
    return disc, annulus


def _solve_exact(cfg: StudyConfig, k: float) -> analytic.SeriesSolution:
    return analytic.solve_modes(cfg.physical(k), n_modes=cfg.modes)


def run_single(cfg: StudyConfig, k: float, N: int, level: int):
    """One full pipeline pass; returns (report, solution, oracle)."""
    exact = _solve_exact(cfg, k)
    disc, annulus = build_mesh_pair(cfg.R0, cfg.R, cfg.n_angular, level)
    t0 = time.perf_counter()
    sol = solve(assemble_system(disc, annulus, cfg.physical(k, N)))
    report = error_norms(sol, exact)
    report = replace(report, seconds=time.perf_counter() - t0)
    return report, sol, exact


def _map_ordered(fn, items, workers: int):
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def fitted_order(hs, errs) -> float:
    """Least-squares slope of log(err) against log(h)."""
    return float(np.polyfit(np.log(np.asarray(hs)),
                            np.log(np.asarray(errs)), 1)[0])


def successive_orders(hs, errs):
    hs = np.asarray(hs, dtype=float)
    errs = np.asarray(errs, dtype=float)
    return list(np.log(errs[:-1] / errs[1:]) / np.log(hs[:-1] / hs[1:]))


@dataclass(frozen=True)
class ConvergenceResult:
    reports: list
    orders: dict        # k -> (fitted order err_h0, fitted order err_h1)
    step_orders: dict   # k -> (successive h0 orders, successive h1 orders)
    residuals: list

    def footer(self):
        return [f"# k={k:g} fitted_order_h0={o0:.4f} fitted_order_h1={o1:.4f}"
                for k, (o0, o1) in self.orders.items()]


def convergence_study(cfg: StudyConfig) -> ConvergenceResult:
    """h refinement at fixed truncation order cfg.N."""
    reports, residuals = [], []
    orders, step_orders = {}, {}

    def one_level(args):
        k, exact, level = args
        disc, annulus = build_mesh_pair(cfg.R0, cfg.R, cfg.n_angular, level)
        t0 = time.perf_counter()
        sol = solve(assemble_system(disc, annulus, cfg.physical(k)))
        report = error_norms(sol, exact)
        return replace(report, seconds=time.perf_counter() - t0), sol.residual

    for k in cfg.k_values:
        exact = _solve_exact(cfg, k)
        out = _map_ordered(one_level, [(k, exact, lv) for lv in cfg.levels],
                           cfg.workers)
        ks_reports = [r for r, _ in out]
        reports.extend(ks_reports)
        residuals.extend(r for _, r in out)
        hs = [r.h for r in ks_reports]
        if len(ks_reports) > 1:
            orders[k] = (fitted_order(hs, [r.err_h0 for r in ks_reports]),
                         fitted_order(hs, [r.err_h1 for r in ks_reports]))
            step_orders[k] = (
                successive_orders(hs, [r.err_h0 for r in ks_reports]),
                successive_orders(hs, [r.err_h1 for r in ks_reports]))
    return ConvergenceResult(reports=reports, orders=orders,
                             step_orders=step_orders, residuals=residuals)


@dataclass(frozen=True)
class PlateauInfo:
    k: float
    level: int
    h: float
    n_star: int          # smallest N within 5% of the err at max N
    plateau_err: float


@dataclass(frozen=True)
class TruncationResult:
    reports: list
    plateaus: list
    residuals: list

    def footer(self):
        return [f"# k={p.k:g} h={p.h:.6g} plateau_N={p.n_star} "
                f"plateau_err_h0={p.plateau_err:.6e}" for p in self.plateaus]


def truncation_study(cfg: StudyConfig) -> TruncationResult:
    """err_h0 against the truncation order N, one curve per (k, mesh level).

    The N-independent blocks and the oracle values at the quadrature points
    are assembled once per curve; only the absorbing-boundary matrix and the
    sparse factorization are redone per N.
    """
    reports, plateaus, residuals = [], [], []
    for k in cfg.k_values:
        exact = _solve_exact(cfg, k)
        for level in cfg.levels:
            disc, annulus = build_mesh_pair(cfg.R0, cfg.R, cfg.n_angular,
                                            level)
            blocks = assemble_blocks(disc, annulus, cfg.physical(k))
            quad = _ExactQuadrature(disc, annulus, exact)
            h = max(mesh_size(disc), mesh_size(annulus))
            dofs = blocks.dof_map.size

            def one_order(N):
                t0 = time.perf_counter()
                sol = solve(assemble_system(disc, annulus,
                                            cfg.physical(k, N), blocks))
                err_h0, err_h1 = quad.errors(sol.u_nodal, sol.p_nodal)
                rep = ErrorReport(h=h, N=N, k=k, dofs=dofs, err_h0=err_h0,
                                  err_h1=err_h1,
                                  seconds=time.perf_counter() - t0)
                return rep, sol.residual

            out = _map_ordered(one_order, list(cfg.n_values), cfg.workers)
            curve = [r for r, _ in out]
            reports.extend(curve)
            residuals.extend(r for _, r in out)
            errs = np.array([r.err_h0 for r in curve])
            n_star = int(np.asarray(cfg.n_values)[
                np.argmax(errs <= 1.05 * errs[-1])])
            plateaus.append(PlateauInfo(k=k, level=level, h=h, n_star=n_star,
                                        plateau_err=float(errs[-1])))
    return TruncationResult(reports=reports, plateaus=plateaus,
                            residuals=residuals)


def operator_decay(cfg: StudyConfig, k: float,
                   orders=range(0, 13)) -> dtn_ops.DecayTable:
    """Mode-space truncation-error decay of the absorbing boundary, measured
    on the modal content of the analytic scatterer solution."""
    exact = _solve_exact(cfg, k)
    content = analytic.trace_mode_coefficients(exact)
    return dtn_ops.truncation_decay_check(k, cfg.R0, cfg.R, content, orders)


def write_csv(path, reports, footer=()) -> None:
    """Fixed-schema CSV; byte-deterministic except the seconds column."""
    lines = [CSV_HEADER]
    for r in reports:
        lines.append(f"{r.h:.17g},{r.N},{r.k:.17g},{r.dofs},"
                     f"{r.err_h0:.17g},{r.err_h1:.17g},{r.seconds:.3f}")
    lines.extend(footer)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
