"""Error measures, discrete norms, and mesh-refinement convergence studies.

The study driver solves one problem on a hierarchy of uniformly refined
meshes and reports, per level:

* ``e0``: L2 distance between the interior solution field and the
  degree-``k`` Lagrange interpolant of the exact solution (coefficient
  norm in the orthonormal element bases);
* ``e0_true``: plain L2 error of the interior field against the exact
  solution, by quadrature;
* ``eg``: distance between the gradient trace field and the edge-wise
  interpolant of the exact gradient, in the edge-weighted norm
  ``(sum_T h_T int_{bd T} |.|^2)^{1/2}`` (interior edges contribute once
  per adjacent element);
* ``eb`` (general variant only): same weighted norm for the value trace
  field against the edge projection of the exact solution;
* ``gamma``: L2 norm of the dual multiplier field (the multiplier of
  the exact solution is zero, so this is itself an error);
* ``s_energy``: stabilizer energy of the discrete solution — a measure
  of how far the solution is from an H2-conforming function.

Observed orders are ``log2(e_prev / e_cur)`` between consecutive
levels; uniform refinement halves the mesh size exactly, so this is the
usual rate.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .assembly import assemble_stabilizer, build_saddle
from .mesh import build_initial_mesh, refine_uniform
from .polyquad import (
    DATA_DEGREE_DEFAULT,
    GEOMETRY_TRI_DEGREE,
    get_element_rule,
    get_tri_basis,
    project_edge,
)
from .solver import solve
from .wgspace import (
    SpaceConfig,
    apply_weak_hessian,
    build_dof_map,
    lagrange_nodes,
    nodal_to_modal,
    weak_hessian_local,
)

__all__ = [
    "LevelErrors",
    "ConvergenceTable",
    "NormReport",
    "lagrange_interpolant",
    "edge_gradient_interpolant",
    "error_norms",
    "discrete_norms",
    "run_study",
]

CSV_HEADER = "level,inv_h,e0,e0_order,eg,eg_order,gamma,gamma_order,e0_true,s_energy"
LOGLOG_HEADER = "h,e0,eg,gamma"


@dataclass(frozen=True)
class LevelErrors:
    """Error norms of one solve in a refinement hierarchy."""

    level: int
    h_max: float
    n_primal: int
    n_mult: int
    e0: float
    e0_true: float
    eg: float
    gamma: float
    s_energy: float
    eb: float | None = None

    @property
    def inv_h(self):
        return 1.0 / self.h_max


def lagrange_interpolant(u, mesh, k=2):
    """Orthonormal coefficients of the degree-``k`` Lagrange interpolant."""
    nodes = lagrange_nodes(mesh, k)
    vals = np.asarray(
        u(nodes.element_coords[..., 0], nodes.element_coords[..., 1]), dtype=float
    )
    return np.einsum("emn,en->em", nodal_to_modal(mesh, k), vals, optimize=True)


def edge_gradient_interpolant(grad_u, mesh, degree=1):
    """Edge-wise polynomial interpolant of a gradient field.

    Interpolates each gradient component at ``degree + 1`` equispaced
    parameters per edge (endpoints included), and returns coefficients
    (ne, 2, degree + 1) in the normalized Legendre edge bases.  For
    ``degree = 1`` this is plain endpoint interpolation.
    """
    t_nodes = np.linspace(-1.0, 1.0, degree + 1)
    lo = mesh.vertices[mesh.edges[:, 0]]
    hi = mesh.vertices[mesh.edges[:, 1]]
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    pts = mid[:, None, :] + t_nodes[None, :, None] * half[:, None, :]
    vals = np.asarray(grad_u(pts[..., 0], pts[..., 1]), dtype=float)  # (2, ne, deg+1)
    if not np.all(np.isfinite(vals)):
        raise ValueError("gradient evaluation returned a non-finite value")
    vander = np.polynomial.legendre.legvander(t_nodes, degree)
    plain = np.einsum("ij,cej->cei", np.linalg.inv(vander), vals, optimize=True)
    scale = np.sqrt(
        mesh.edge_lengths[:, None] / (2.0 * np.arange(degree + 1) + 1.0)[None, :]
    )
    return np.transpose(plain, (1, 0, 2)) * scale[:, None, :]


def _edge_weights(mesh):
    """Per-edge weight ``sum of h_T over adjacent elements``."""
    w = np.zeros(mesh.n_edges)
    np.add.at(w, mesh.tri_edges.ravel(), np.repeat(mesh.h_t, 3))
    return w


def error_norms(sol, problem, system=None, quad_degree=None):
    """All error norms of one solution against the problem's exact fields."""
    if problem.exact_u is None or problem.exact_grad_u is None:
        raise ValueError("problem has no exact solution to compare against")
    mesh, dofmap = sol.mesh, sol.dofmap
    k = dofmap.config.k
    qd = quad_degree
    if qd is None:
        qd = problem.quad_degree if problem.quad_degree is not None else DATA_DEGREE_DEFAULT
    qd = max(qd, GEOMETRY_TRI_DEGREE(k))

    ih = lagrange_interpolant(problem.exact_u, mesh, k)
    e0 = float(np.linalg.norm(sol.u0 - ih))

    pts, w = get_element_rule(mesh, qd)
    diff = sol.eval_u0(pts) - problem.exact_u(pts[..., 0], pts[..., 1])
    e0_true = float(np.sqrt(np.sum(w * diff**2)))

    wsum = _edge_weights(mesh)
    ig = edge_gradient_interpolant(problem.exact_grad_u, mesh, k - 1)
    dg = sol.ug - ig
    eg = float(np.sqrt(np.sum(wsum * np.sum(dg**2, axis=(1, 2)))))

    eb = None
    if sol.ub is not None:
        qb = project_edge(problem.exact_u, k, mesh, qd)
        db = sol.ub - qb
        eb = float(np.sqrt(np.sum(wsum * np.sum(db**2, axis=1))))

    gamma = float(np.linalg.norm(sol.lam_vec))

    S = system.S if system is not None else assemble_stabilizer(mesh, dofmap)
    s_energy = float(sol.primal @ (S @ sol.primal))

    return LevelErrors(
        level=mesh.level,
        h_max=float(mesh.h_max),
        n_primal=dofmap.n_primal,
        n_mult=dofmap.n_mult,
        e0=e0,
        e0_true=e0_true,
        eg=eg,
        gamma=gamma,
        s_energy=s_energy,
        eb=eb,
    )


@dataclass(frozen=True)
class NormReport:
    """Discrete second-order norms of one primal coefficient vector."""

    norm_2h: float
    triple_norm: float
    s_energy: float


def discrete_norms(primal, mesh, config, coeff, quad_degree=None):
    """Strong-Hessian and weak-Hessian discrete norms of a primal vector.

    ``norm_2h`` uses the multiplier-space projection of
    ``sum_ij a_ij d2 v0 / dx_i dx_j`` element by element; ``triple_norm``
    replaces the projected strong Hessian with the discrete weak Hessian
    of the full triplet.  Both include the stabilizer energy.
    """
    dofmap = build_dof_map(mesh, config)
    qd = quad_degree if quad_degree is not None else max(
        GEOMETRY_TRI_DEGREE(config.k), DATA_DEGREE_DEFAULT
    )
    primal = np.asarray(primal, dtype=float)

    hess = weak_hessian_local(mesh, config)
    local = dofmap.local_vectors(primal)
    sdeg = config.mult_degree
    basis_s = get_tri_basis(mesh, sdeg)
    pts, w = get_element_rule(mesh, qd)
    VS = basis_s.eval(pts)
    a = coeff.entries(pts[..., 0], pts[..., 1], mesh.region_tags[:, None])

    u0 = dofmap.u0_coefficients(primal, mesh)
    basis_k = get_tri_basis(mesh, config.k)

    weak_vals = np.zeros(pts.shape[:2])
    strong_vals = np.zeros(pts.shape[:2])
    for i, j in ((1, 1), (1, 2), (2, 1), (2, 2)):
        dij = apply_weak_hessian(local, hess, i, j)  # (nt, ns)
        weak_vals += a[f"{i}{j}"] * np.einsum("eqn,en->eq", VS, dij, optimize=True)
        d2 = np.einsum(
            "eqn,en->eq",
            basis_k.eval(pts, dx=(i == 1) + (j == 1), dy=(i == 2) + (j == 2)),
            u0,
            optimize=True,
        )
        strong_vals += a[f"{i}{j}"] * d2
    # Project the strong combination onto the multiplier space per element.
    strong_coeff = np.einsum("eqn,eq,eq->en", VS, strong_vals, w, optimize=True)

    S = assemble_stabilizer(mesh, dofmap)
    s_energy = float(primal @ (S @ primal))
    norm_2h = float(np.sqrt(np.sum(strong_coeff**2) + max(s_energy, 0.0)))
    triple = float(np.sqrt(np.sum(w * weak_vals**2) + max(s_energy, 0.0)))
    return NormReport(norm_2h=norm_2h, triple_norm=triple, s_energy=s_energy)


def _order(prev, cur):
    if prev is None or not (prev > 0.0) or not (cur > 0.0):
        return None
    return float(np.log2(prev / cur))


def _fmt(x):
    return f"{x:.8g}"


@dataclass(frozen=True)
class ConvergenceTable:
    """Per-level error norms and observed orders of one study."""

    problem_name: str
    config: SpaceConfig
    rows: tuple

    def order_rows(self):
        """Observed orders per row; the first row has all-``None`` orders."""
        out = []
        prev = None
        for row in self.rows:
            if prev is None:
                out.append({"e0": None, "eg": None, "gamma": None})
            else:
                out.append(
                    {
                        "e0": _order(prev.e0, row.e0),
                        "eg": _order(prev.eg, row.eg),
                        "gamma": _order(prev.gamma, row.gamma),
                    }
                )
            prev = row
        return out

    def final_orders(self):
        return self.order_rows()[-1]

    def to_csv(self, target=None):
        """Serialize to CSV; write to ``target`` path/handle if given."""
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        for row, orders in zip(self.rows, self.order_rows()):
            fields = [
                str(row.level),
                _fmt(row.inv_h),
                _fmt(row.e0),
                "" if orders["e0"] is None else _fmt(orders["e0"]),
                _fmt(row.eg),
                "" if orders["eg"] is None else _fmt(orders["eg"]),
                _fmt(row.gamma),
                "" if orders["gamma"] is None else _fmt(orders["gamma"]),
                _fmt(row.e0_true),
                _fmt(row.s_energy),
            ]
            buf.write(",".join(fields) + "\n")
        text = buf.getvalue()
        if target is not None:
            if hasattr(target, "write"):
                target.write(text)
            else:
                with open(target, "w") as fh:
                    fh.write(text)
        return text

    def to_loglog_csv(self, target=None):
        """Plot-ready companion CSV with raw mesh sizes and errors."""
        buf = io.StringIO()
        buf.write(LOGLOG_HEADER + "\n")
        for row in self.rows:
            buf.write(
                ",".join([_fmt(row.h_max), _fmt(row.e0), _fmt(row.eg), _fmt(row.gamma)])
                + "\n"
            )
        text = buf.getvalue()
        if target is not None:
            if hasattr(target, "write"):
                target.write(text)
            else:
                with open(target, "w") as fh:
                    fh.write(text)
        return text

    def summary_lines(self):
        lines = []
        for row, orders in zip(self.rows, self.order_rows()):
            parts = [f"level {row.level}:"]
            for key, val in (("e0", row.e0), ("eg", row.eg), ("gamma", row.gamma)):
                r = orders[key]
                r_txt = "--" if r is None else f"{r:.2f}"
                parts.append(f"{key}={val:.4e} (r={r_txt})")
            lines.append(" ".join(parts))
        return lines


def run_study(problem, config=None, levels=6, quad_degree=None, method="direct", on_level=None):
    """Solve ``problem`` on ``levels`` uniformly refined meshes.

    Parameters
    ----------
    problem : ProblemSpec
    config : SpaceConfig, optional
        Defaults to the C0 variant with ``k = 2`` and the degree-1
        multiplier space.
    levels : int
        Number of meshes (the initial mesh plus ``levels - 1``
        refinements); must be at least 2 so orders can be observed.
    quad_degree : int, optional
        Override of the data quadrature degree.
    method : {"direct", "minres"}
    on_level : callable, optional
        Called as ``on_level(mesh, system, solution, row)`` after each
        level solves; useful for dumping systems or progress reporting.

    Returns
    -------
    ConvergenceTable
    """
    if config is None:
        config = SpaceConfig()
    if levels < 2:
        raise ValueError("levels must be >= 2")
    mesh = build_initial_mesh(problem.domain)
    rows = []
    for lvl in range(levels):
        if lvl > 0:
            mesh = refine_uniform(mesh)
        system = build_saddle(mesh, config, problem, quad_degree=quad_degree)
        sol = solve(system, method=method)
        row = error_norms(sol, problem, system=system, quad_degree=quad_degree)
        rows.append(row)
        if on_level is not None:
            on_level(mesh, system, sol, row)
    return ConvergenceTable(problem_name=problem.name, config=config, rows=tuple(rows))
