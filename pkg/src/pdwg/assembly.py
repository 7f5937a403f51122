"""Assembly of the stabilized saddle-point system.

The discrete problem couples the primal weak field ``u`` with an
element-wise polynomial multiplier ``lam`` through

* the stabilizer ``s(u, v)``, a symmetric positive semidefinite form
  penalizing, edge by edge, the mismatch ``u0 - ub`` (weighted
  ``h_T**-3``) and ``grad u0 - ug`` (weighted ``h_T**-1``); in the C0
  variant the first mismatch vanishes identically and only the gradient
  term is assembled;
* the constraint form ``b(v, sigma) = sum_ij (a_ij D_ij(v), sigma)_T``
  built from the discrete weak Hessians and the coefficient tensor.

The assembled block system reads::

    [ S  B^T ] [ u   ]   [ boundary terms ]
    [ B  0   ] [ lam ] = [ F + boundary terms ]

with Dirichlet data imposed strongly: constrained DOFs (boundary ``vb``
blocks, or boundary Lagrange nodes in the C0 variant) are fixed to
projected/interpolated boundary values and eliminated symmetrically at
solve time, their contributions moved to the right-hand side.
"""

from __future__ import annotations

import inspect
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from .mesh import outward_normals
from .polyquad import (
    DATA_DEGREE_DEFAULT,
    GEOMETRY_EDGE_DEGREE,
    GEOMETRY_TRI_DEGREE,
    get_edge_basis,
    get_edge_rule,
    get_element_rule,
    get_tri_basis,
    space_dim,
)
from .wgspace import build_dof_map, nodal_to_modal, weak_hessian_local

__all__ = [
    "CoefficientField",
    "constant_coefficients",
    "SaddleSystem",
    "stabilizer_local_parts",
    "stabilizer_energy",
    "assemble_stabilizer",
    "assemble_constraint",
    "apply_dirichlet",
    "build_saddle",
    "dump_system",
]


def _as_field(fn):
    """Normalize an evaluator to the ``(x, y, region)`` calling convention."""
    if fn is None:
        return None
    try:
        n_params = len(inspect.signature(fn).parameters)
    except (TypeError, ValueError):
        n_params = 3
    if n_params >= 3:
        return fn

    def wrapped(x, y, region=None, _fn=fn):
        return _fn(x, y)

    return wrapped


@dataclass(frozen=True)
class CoefficientField:
    """Symmetric 2x2 coefficient tensor of the operator.

    Entries are vectorized evaluators ``a(x, y, region)`` (two-argument
    callables are adapted); ``region`` carries the element region tags so
    that tensors jumping across region interfaces are evaluated by tag,
    never by the sign of a near-interface point.  ``a21`` defaults to
    ``a12``; if given explicitly it must agree with ``a12`` wherever
    evaluated (the tensor is symmetric).

    ``bounds`` optionally records ellipticity constants ``(alpha, beta)``
    with ``alpha |xi|^2 <= xi.a.xi <= beta |xi|^2``.
    """

    a11: object
    a12: object
    a22: object
    a21: object = None
    bounds: tuple | None = None
    quad_degree: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "a11", _as_field(self.a11))
        object.__setattr__(self, "a12", _as_field(self.a12))
        object.__setattr__(self, "a22", _as_field(self.a22))
        object.__setattr__(self, "a21", _as_field(self.a21) or self.a12)

    def entries(self, x, y, region=None):
        """Evaluate all four entries, broadcast over the inputs."""
        shape = np.broadcast(x, y).shape
        out = {}
        for key, fn in (("11", self.a11), ("12", self.a12), ("21", self.a21), ("22", self.a22)):
            vals = np.asarray(fn(x, y, region), dtype=float)
            out[key] = np.broadcast_to(vals, shape)
        if not all(np.all(np.isfinite(v)) for v in out.values()):
            raise ValueError("coefficient evaluation returned a non-finite value")
        return out


def constant_coefficients(matrix):
    """CoefficientField with constant entries from a symmetric 2x2 matrix."""
    m = np.asarray(matrix, dtype=float)
    if m.shape != (2, 2) or not np.isclose(m[0, 1], m[1, 0]):
        raise ValueError("expected a symmetric 2x2 matrix")
    eig = np.linalg.eigvalsh(m)

    def entry(v):
        return lambda x, y, region=None: np.full(np.broadcast(x, y).shape, v)

    return CoefficientField(
        a11=entry(m[0, 0]),
        a12=entry(m[0, 1]),
        a22=entry(m[1, 1]),
        bounds=(float(eig[0]), float(eig[1])),
    )


@dataclass(frozen=True)
class SaddleSystem:
    """Assembled block system plus Dirichlet bookkeeping.

    ``S`` is exactly symmetric positive semidefinite, ``B`` is the
    constraint block, ``F`` the multiplier right-hand side.  The
    ``constrained`` primal DOFs carry ``constrained_values`` once
    :func:`apply_dirichlet` ran; the solver eliminates them
    symmetrically and moves their columns to the right-hand side.
    """

    S: sp.csr_matrix
    B: sp.csr_matrix
    F: np.ndarray
    n_primal: int
    n_mult: int
    constrained: np.ndarray
    constrained_values: np.ndarray | None
    dofmap: object
    mesh: object

    @property
    def n_total(self):
        return self.n_primal + self.n_mult

    def block_matrix(self):
        """Full symmetric block matrix [[S, B^T], [B, 0]] (CSR)."""
        return sp.bmat([[self.S, self.B.T], [self.B, None]], format="csr")

    def rhs(self):
        """Right-hand side before elimination: zeros stacked over F."""
        return np.concatenate([np.zeros(self.n_primal), self.F])


def _scatter(local, rows, cols, shape):
    """Accumulate per-element dense blocks into one CSR matrix."""
    nt, a, b = local.shape
    r = np.repeat(rows[:, :, None], b, axis=2)
    c = np.repeat(cols[:, None, :], a, axis=1)
    mat = sp.coo_matrix((local.ravel(), (r.ravel(), c.ravel())), shape=shape)
    return mat.tocsr()


def stabilizer_local_parts(mesh, dofmap):
    """Unweighted boundary-mismatch Gram blocks of the stabilizer.

    Returns ``(jump0, jump1)`` of shape (nt, nloc, nloc) such that the
    local stabilizer is ``h_T**-3 * jump0 + h_T**-1 * jump1``; ``jump0``
    is identically zero in the C0 variant.
    """

    def _build():
        config = dofmap.config
        k = config.k
        layout = dofmap.layout
        nt = mesh.n_triangles

        tb = get_tri_basis(mesh, k)
        epts, ew, t = get_edge_rule(mesh, GEOMETRY_EDGE_DEGREE(k))
        g = mesh.tri_edges
        pe = epts[g]
        we = ew[g]
        nq = t.shape[0]

        Xg = get_edge_basis(mesh, k - 1).eval_ref(t)[g]
        trans = nodal_to_modal(mesh, k) if config.c0_type else None

        def v0_block(vals):
            # vals: (nt, 3, nq, n0) in the orthonormal basis; in the C0
            # variant re-express against nodal values.
            return vals @ trans[:, None] if config.c0_type else vals

        G = {
            1: v0_block(tb.eval(pe, dx=1)),
            2: v0_block(tb.eval(pe, dy=1)),
        }

        jump1 = np.zeros((nt, layout.nloc, layout.nloc))
        for comp in (1, 2):
            J = np.zeros((nt, 3, nq, layout.nloc))
            J[:, :, :, layout.v0] = G[comp]
            for ledge in range(3):
                J[:, ledge, :, layout.vg(ledge, comp - 1)] = -Xg[:, ledge]
            jump1 += np.einsum("etql,etqm,etq->elm", J, J, we, optimize=True)

        if config.c0_type:
            jump0 = np.zeros((nt, layout.nloc, layout.nloc))
        else:
            T0 = tb.eval(pe)
            Xb = get_edge_basis(mesh, k).eval_ref(t)[g]
            J = np.zeros((nt, 3, nq, layout.nloc))
            J[:, :, :, layout.v0] = T0
            for ledge in range(3):
                J[:, ledge, :, layout.vb(ledge)] = -Xb[:, ledge]
            jump0 = np.einsum("etql,etqm,etq->elm", J, J, we, optimize=True)
        return jump0, jump1

    return mesh._memo(("stabilizer_parts", dofmap.config), _build)


def stabilizer_energy(mesh, dofmap, primal):
    """Stabilizer energy ``s(v, v)`` evaluated through pointwise jumps.

    Forms the boundary mismatches (interior trace minus independent
    trace unknown) at edge quadrature points, then squares — unlike the
    assembled quadratic form, no cancellation of large terms occurs, so
    conforming inputs evaluate to a genuine floating-point zero.
    """
    config = dofmap.config
    k = config.k
    primal = np.asarray(primal, dtype=float)
    loc = dofmap.local_vectors(primal)
    layout = dofmap.layout

    tb = get_tri_basis(mesh, k)
    epts, ew, t = get_edge_rule(mesh, GEOMETRY_EDGE_DEGREE(k))
    g = mesh.tri_edges
    pe = epts[g]
    we = ew[g]
    Xg = get_edge_basis(mesh, k - 1).eval_ref(t)[g]
    u0 = dofmap.u0_coefficients(primal, mesh)

    energy = 0.0
    for comp, (dx, dy) in ((0, (1, 0)), (1, (0, 1))):
        dvals = np.einsum("etqn,en->etq", tb.eval(pe, dx=dx, dy=dy), u0, optimize=True)
        gvals = np.zeros_like(dvals)
        for ledge in range(3):
            gvals[:, ledge] = np.einsum(
                "eqm,em->eq", Xg[:, ledge], loc[:, layout.vg(ledge, comp)], optimize=True
            )
        jump = dvals - gvals
        energy += float(np.sum((jump**2 * we) / mesh.h_t[:, None, None]))

    if not config.c0_type:
        vals0 = np.einsum("etqn,en->etq", tb.eval(pe), u0, optimize=True)
        bvals = np.zeros_like(vals0)
        Xb = get_edge_basis(mesh, k).eval_ref(t)[g]
        for ledge in range(3):
            bvals[:, ledge] = np.einsum(
                "eqm,em->eq", Xb[:, ledge], loc[:, layout.vb(ledge)], optimize=True
            )
        jump = vals0 - bvals
        energy += float(np.sum((jump**2 * we) / mesh.h_t[:, None, None] ** 3))
    return float(energy)


def assemble_stabilizer(mesh, dofmap):
    """Global stabilizer matrix S (symmetric PSD, CSR)."""

    def _build():
        jump0, jump1 = stabilizer_local_parts(mesh, dofmap)
        h = mesh.h_t[:, None, None]
        local = jump0 / h**3 + jump1 / h
        local = 0.5 * (local + np.transpose(local, (0, 2, 1)))
        S = _scatter(local, dofmap.element_primal, dofmap.element_primal,
                     (dofmap.n_primal, dofmap.n_primal))
        # Symmetrize exactly; scatter order must not break S == S.T.
        return 0.5 * (S + S.T).tocsr()

    return mesh._memo(("stabilizer", dofmap.config), _build)


def assemble_constraint(mesh, dofmap, coeff, f, quad_degree=None):
    """Constraint block ``B`` and load vector ``F``.

    ``B[n, :] v`` equals ``sum_ij (a_ij D_ij(v), sigma_n)_T`` over the
    owning element of multiplier basis function ``sigma_n``;
    ``F[n] = (f, sigma_n)_T``.  Coefficients and ``f`` are evaluated at
    interior quadrature points with the element region tag.
    """
    config = dofmap.config
    qd = quad_degree
    if qd is None:
        qd = coeff.quad_degree if coeff.quad_degree is not None else DATA_DEGREE_DEFAULT
    qd = max(qd, GEOMETRY_TRI_DEGREE(config.k))

    hess = weak_hessian_local(mesh, config)
    sb = get_tri_basis(mesh, config.mult_degree)
    pts, w = get_element_rule(mesh, qd)
    region = mesh.region_tags[:, None]
    x, y = pts[..., 0], pts[..., 1]

    VS = sb.eval(pts)
    a = coeff.entries(x, y, region)
    B_local = np.zeros((mesh.n_triangles, dofmap.ns, dofmap.layout.nloc))
    for (i, j), H in hess.matrices.items():
        M = np.einsum("eqn,eqm,eq,eq->enm", VS, VS, a[f"{i}{j}"], w, optimize=True)
        B_local += M @ H

    f = _as_field(f)
    fvals = np.asarray(f(x, y, region), dtype=float)
    fvals = np.broadcast_to(fvals, x.shape)
    if not np.all(np.isfinite(fvals)):
        raise ValueError("right-hand side evaluation returned a non-finite value")
    F_local = np.einsum("eqn,eq,eq->en", VS, fvals, w, optimize=True)

    B = _scatter(B_local, dofmap.element_mult, dofmap.element_primal,
                 (dofmap.n_mult, dofmap.n_primal))
    F = np.zeros(dofmap.n_mult)
    np.add.at(F, dofmap.element_mult.ravel(), F_local.ravel())
    return B, F


def apply_dirichlet(system, g, dofmap, mesh, quad_degree=None):
    """Attach strongly-imposed boundary values to a system.

    General variant: every boundary-edge ``vb`` block is set to the
    edge-wise L2 projection of ``g``.  C0 variant: boundary Lagrange
    nodes are set to ``g`` at the node coordinates.  Returns a new
    :class:`SaddleSystem`; elimination happens at solve time.
    """
    k = dofmap.config.k
    qd = quad_degree if quad_degree is not None else max(GEOMETRY_EDGE_DEGREE(k), DATA_DEGREE_DEFAULT)
    values = np.zeros(dofmap.constrained.shape[0])
    if dofmap.config.c0_type:
        coords = dofmap.nodes.coords[dofmap.constrained]
        values[:] = np.asarray(g(coords[:, 0], coords[:, 1]), dtype=float)
    else:
        bedges = mesh.boundary_edges
        if bedges.size:
            basis = get_edge_basis(mesh, k)
            pts, w, t = get_edge_rule(mesh, qd)
            pts, w = pts[bedges], w[bedges]
            gvals = np.asarray(g(pts[..., 0], pts[..., 1]), dtype=float)
            X = basis.eval_ref(t)[bedges]
            coeffs = np.einsum("eqn,eq,eq->en", X, gvals, w, optimize=True)
            ids = dofmap.vb_base + bedges[:, None] * (k + 1) + np.arange(k + 1)[None, :]
            lookup = {int(d): i for i, d in enumerate(dofmap.constrained)}
            pos = np.array([lookup[int(d)] for d in ids.ravel()], dtype=np.int64)
            values[pos] = coeffs.ravel()
    if not np.all(np.isfinite(values)):
        raise ValueError("boundary data evaluation returned a non-finite value")
    return replace(system, constrained_values=values)


def build_saddle(mesh, config, problem, quad_degree=None):
    """Assemble the full saddle system of a problem on one mesh.

    ``problem`` provides ``coeff`` (CoefficientField), ``f``, ``g`` and
    optionally ``quad_degree``.
    """
    dofmap = build_dof_map(mesh, config)
    qd = quad_degree
    if qd is None:
        qd = getattr(problem, "quad_degree", None)
    S = assemble_stabilizer(mesh, dofmap)
    B, F = assemble_constraint(mesh, dofmap, problem.coeff, problem.f, quad_degree=qd)
    system = SaddleSystem(
        S=S,
        B=B,
        F=F,
        n_primal=dofmap.n_primal,
        n_mult=dofmap.n_mult,
        constrained=dofmap.constrained,
        constrained_values=None,
        dofmap=dofmap,
        mesh=mesh,
    )
    return apply_dirichlet(system, problem.g, dofmap, mesh, quad_degree=qd)


def dump_system(system, target):
    """Write the full block matrix as ASCII coordinate triplets.

    First line ``n_primal n_multiplier nnz``, then one ``row col value``
    line per stored entry, sorted by row then column, values with 17
    significant digits.
    """
    K = system.block_matrix().tocoo()
    order = np.lexsort((K.col, K.row))
    lines = [f"{system.n_primal} {system.n_mult} {K.nnz}"]
    for r, c, v in zip(K.row[order], K.col[order], K.data[order]):
        lines.append(f"{r} {c} {v:.17g}")
    text = "\n".join(lines) + "\n"
    if hasattr(target, "write"):
        target.write(text)
    else:
        with open(target, "w") as fh:
            fh.write(text)
