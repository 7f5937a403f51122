"""Weak Galerkin spaces, degree-of-freedom maps, and discrete weak Hessians.

A discrete weak function is a triplet ``v = {v0, vb, vg}``: an interior
polynomial of degree ``k`` per element, a polynomial of degree ``k`` per
edge, and a vector polynomial of degree ``k - 1`` per edge approximating
the trace of the gradient.  Two variants are supported:

* the general variant keeps all three blocks independent;
* the C0 variant drops ``vb`` and replaces the per-element interior
  polynomials by one globally continuous Lagrange field of degree ``k``,
  so ``vb`` is implicitly the trace of ``v0``.

The discrete weak second derivative of ``v`` on element ``T`` is the
polynomial ``D_ij(v)`` in the multiplier space ``S(T)`` defined by
testing against all ``phi`` in ``S(T)``::

    (D_ij(v), phi)_T = (v0, d_j d_i phi)_T - <vb n_i, d_j phi>_bnd(T)
                       + <vg_i, phi n_j>_bnd(T)

and in the C0 variant equivalently (after one integration by parts,
using that vb is the trace of v0)::

    (D_ij(v), phi)_T = -(d_i v0, d_j phi)_T + <vg_i, phi n_j>_bnd(T)

The multiplier space per element is either ``P_{k-2}`` or ``P_{k-1}``.
All operators are assembled in batch as dense per-element matrices acting
on the element-local DOF vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import outward_normals
from .polyquad import (
    GEOMETRY_EDGE_DEGREE,
    GEOMETRY_TRI_DEGREE,
    get_edge_basis,
    get_edge_rule,
    get_element_rule,
    get_tri_basis,
    project_edge,
    project_element,
    space_dim,
)

__all__ = [
    "SpaceConfig",
    "LocalLayout",
    "DofMap",
    "build_dof_map",
    "lagrange_nodes",
    "nodal_to_modal",
    "WeakHessianLocal",
    "weak_hessian_local",
    "apply_weak_hessian",
    "project_weak",
    "interpolate_weak",
]

_MULTIPLIER_SPACES = ("pkm2", "pkm1")


@dataclass(frozen=True)
class SpaceConfig:
    """Discretization parameters.

    Parameters
    ----------
    k : int
        Polynomial degree of the primal field, at least 2.
    multiplier_space : {"pkm2", "pkm1"}
        Element multiplier space ``P_{k-2}`` or ``P_{k-1}``.
    c0_type : bool
        Use the continuous (C0) primal variant.
    """

    k: int = 2
    multiplier_space: str = "pkm1"
    c0_type: bool = True

    def __post_init__(self):
        if int(self.k) < 2:
            raise ValueError(f"polynomial degree k must be >= 2, got {self.k}")
        if self.multiplier_space not in _MULTIPLIER_SPACES:
            raise ValueError(
                f"multiplier_space must be one of {_MULTIPLIER_SPACES}, "
                f"got {self.multiplier_space!r}"
            )

    @property
    def mult_degree(self):
        return self.k - 1 if self.multiplier_space == "pkm1" else self.k - 2


@dataclass(frozen=True)
class LocalLayout:
    """Column layout of the element-local primal DOF vector.

    General variant: ``[v0 | vb edge0 | vb edge1 | vb edge2 | vg edge0 |
    vg edge1 | vg edge2]`` where each ``vg`` block stores the first
    component's coefficients then the second's.  C0 variant: the ``vb``
    blocks are absent and the ``v0`` block holds Lagrange nodal values.
    """

    k: int
    c0_type: bool

    @property
    def n0(self):
        return space_dim(self.k)

    @property
    def nb(self):
        return 0 if self.c0_type else self.k + 1

    @property
    def ng(self):
        return self.k  # per component

    @property
    def nloc(self):
        return self.n0 + 3 * self.nb + 6 * self.ng

    @property
    def v0(self):
        return slice(0, self.n0)

    def vb(self, ledge):
        if self.c0_type:
            raise ValueError("C0 variant has no vb block")
        start = self.n0 + ledge * self.nb
        return slice(start, start + self.nb)

    def vg(self, ledge, comp):
        start = self.n0 + 3 * self.nb + ledge * 2 * self.ng + comp * self.ng
        return slice(start, start + self.ng)


@dataclass(frozen=True)
class LagrangeNodes:
    """Principal-lattice Lagrange nodes of degree k over a mesh.

    Node numbering: mesh vertices first, then ``k - 1`` nodes per edge
    ordered from the lower-id endpoint, then per-element interior nodes.
    """

    k: int
    n_nodes: int
    coords: np.ndarray  # (n_nodes, 2)
    element_nodes: np.ndarray  # (nt, n0) global node ids, local order
    element_coords: np.ndarray  # (nt, n0, 2)
    boundary_nodes: np.ndarray  # sorted ids of nodes on the domain boundary


def lagrange_nodes(mesh, k):
    """Construct shared Lagrange nodes of degree ``k`` on a mesh."""

    def _build():
        nv, ne, nt = mesh.n_vertices, mesh.n_edges, mesh.n_triangles
        per_edge = k - 1
        n_int = (k - 1) * (k - 2) // 2
        lo = mesh.vertices[mesh.edges[:, 0]]
        hi = mesh.vertices[mesh.edges[:, 1]]
        frac = (np.arange(1, k) / k)[None, :, None]
        edge_coords = lo[:, None, :] + frac * (hi - lo)[:, None, :]

        corners = mesh.corners
        # Lattice interior points (i, j >= 1, i + j <= k - 1) in fixed order.
        int_list = sorted((i, j) for i in range(1, k) for j in range(1, k - i))
        assert len(int_list) == n_int
        if n_int:
            bary = np.array(int_list, dtype=float) / k
            int_coords = (
                corners[:, None, 0, :]
                + bary[None, :, 0, None] * (corners[:, 1] - corners[:, 0])[:, None, :]
                + bary[None, :, 1, None] * (corners[:, 2] - corners[:, 0])[:, None, :]
            )
        else:
            int_coords = np.zeros((nt, 0, 2))

        coords = np.vstack(
            [mesh.vertices, edge_coords.reshape(-1, 2), int_coords.reshape(-1, 2)]
        )
        n_nodes = nv + ne * per_edge + nt * n_int

        blocks = [mesh.triangles]
        coord_blocks = [corners]
        for ledge in range(3):
            g = mesh.tri_edges[:, ledge]
            ids = nv + g[:, None] * per_edge + np.arange(per_edge)[None, :]
            blocks.append(ids)
            coord_blocks.append(edge_coords[g])
        if n_int:
            ids = nv + ne * per_edge + np.arange(nt)[:, None] * n_int + np.arange(n_int)[None, :]
            blocks.append(ids)
            coord_blocks.append(int_coords)
        element_nodes = np.concatenate(blocks, axis=1).astype(np.int64)
        element_coords = np.concatenate(coord_blocks, axis=1)

        bmask = np.zeros(n_nodes, dtype=bool)
        bmask[: nv][mesh.boundary_vertices] = True
        bedges = mesh.boundary_edges
        ids = nv + bedges[:, None] * per_edge + np.arange(per_edge)[None, :]
        bmask[ids.ravel()] = True
        return LagrangeNodes(
            k=k,
            n_nodes=n_nodes,
            coords=coords,
            element_nodes=element_nodes,
            element_coords=element_coords,
            boundary_nodes=np.flatnonzero(bmask),
        )

    return mesh._memo(("lagrange_nodes", k), _build)


def nodal_to_modal(mesh, k):
    """Per-element map from Lagrange nodal values to orthonormal coefficients."""

    def _build():
        nodes = lagrange_nodes(mesh, k)
        basis = get_tri_basis(mesh, k)
        V = basis.eval(nodes.element_coords)  # (nt, n0, n0)
        return np.linalg.inv(V)

    return mesh._memo(("nodal_to_modal", k), _build)


@dataclass(frozen=True)
class DofMap:
    """Global numbering of primal and multiplier unknowns.

    Primal numbering, general variant: per-element interior blocks
    first, then per-edge ``vb`` blocks, then per-edge ``vg`` blocks.
    C0 variant: shared Lagrange nodes first, then per-edge ``vg``
    blocks.  Multiplier unknowns are numbered separately, one block of
    ``dim S`` per element.  Constrained DOFs are the boundary-edge
    ``vb`` blocks (general) or the boundary Lagrange nodes (C0); the
    gradient blocks ``vg`` are never constrained.
    """

    config: SpaceConfig
    layout: LocalLayout
    n_primal: int
    n_mult: int
    n_v0: int
    ns: int
    element_primal: np.ndarray  # (nt, nloc)
    element_mult: np.ndarray  # (nt, ns)
    constrained: np.ndarray  # sorted global primal ids
    vb_base: int | None
    vg_base: int
    nodes: LagrangeNodes | None

    def local_vectors(self, primal):
        """Gather (nt, nloc) element-local vectors from a global vector."""
        return np.asarray(primal)[self.element_primal]

    def u0_coefficients(self, primal, mesh):
        """Interior field as per-element orthonormal coefficients."""
        k = self.config.k
        if self.config.c0_type:
            nodal = np.asarray(primal)[self.nodes.element_nodes]
            return np.einsum("emn,en->em", nodal_to_modal(mesh, k), nodal, optimize=True)
        n0 = self.layout.n0
        return np.asarray(primal)[: self.n_v0].reshape(-1, n0)

    def ub_coefficients(self, primal, mesh):
        if self.config.c0_type:
            return None
        nb = self.config.k + 1
        return np.asarray(primal)[self.vb_base : self.vb_base + mesh.n_edges * nb].reshape(-1, nb)

    def ug_coefficients(self, primal, mesh):
        ng = self.config.k
        return np.asarray(primal)[self.vg_base :].reshape(mesh.n_edges, 2, ng)


def build_dof_map(mesh, config):
    """Build the :class:`DofMap` of a mesh/config pair (memoized)."""

    def _build():
        layout = LocalLayout(config.k, config.c0_type)
        k = config.k
        nt, ne = mesh.n_triangles, mesh.n_edges
        ns = space_dim(config.mult_degree)
        ng = 2 * k  # per-edge gradient block

        if config.c0_type:
            nodes = lagrange_nodes(mesh, k)
            n_v0 = nodes.n_nodes
            vb_base = None
            vg_base = n_v0
            n_primal = n_v0 + ne * ng
            v0_cols = nodes.element_nodes
            constrained = nodes.boundary_nodes
        else:
            nodes = None
            n0 = layout.n0
            n_v0 = nt * n0
            vb_base = n_v0
            vg_base = n_v0 + ne * (k + 1)
            n_primal = vg_base + ne * ng
            v0_cols = np.arange(n_v0, dtype=np.int64).reshape(nt, n0)
            bedges = mesh.boundary_edges
            constrained = (
                vb_base + bedges[:, None] * (k + 1) + np.arange(k + 1)[None, :]
            ).ravel()
            constrained = np.sort(constrained)

        cols = [v0_cols]
        if not config.c0_type:
            for ledge in range(3):
                g = mesh.tri_edges[:, ledge]
                cols.append(vb_base + g[:, None] * (k + 1) + np.arange(k + 1)[None, :])
        for ledge in range(3):
            g = mesh.tri_edges[:, ledge]
            cols.append(vg_base + g[:, None] * ng + np.arange(ng)[None, :])
        element_primal = np.concatenate(cols, axis=1).astype(np.int64)

        element_mult = (
            np.arange(nt, dtype=np.int64)[:, None] * ns + np.arange(ns)[None, :]
        )
        return DofMap(
            config=config,
            layout=layout,
            n_primal=n_primal,
            n_mult=nt * ns,
            n_v0=n_v0,
            ns=ns,
            element_primal=element_primal,
            element_mult=element_mult,
            constrained=np.asarray(constrained, dtype=np.int64),
            vb_base=vb_base,
            vg_base=vg_base,
            nodes=nodes,
        )

    return mesh._memo(("dofmap", config), _build)


@dataclass(frozen=True)
class WeakHessianLocal:
    """Per-element matrices of the four discrete weak second derivatives.

    ``matrices[(i, j)]`` has shape (nt, dim S, nloc) and maps the
    element-local primal vector to the orthonormal coefficients of
    ``D_ij`` in the multiplier space.
    """

    config: SpaceConfig
    layout: LocalLayout
    matrices: dict


def weak_hessian_local(mesh, config):
    """Assemble the discrete weak Hessian operators of all elements."""

    def _build():
        k = config.k
        layout = LocalLayout(k, config.c0_type)
        sdeg = config.mult_degree
        ns = space_dim(sdeg)
        nt = mesh.n_triangles

        tb = get_tri_basis(mesh, k)
        sb = get_tri_basis(mesh, sdeg)
        pts, w = get_element_rule(mesh, GEOMETRY_TRI_DEGREE(k))
        epts, ew, t = get_edge_rule(mesh, GEOMETRY_EDGE_DEGREE(k))

        g = mesh.tri_edges  # (nt, 3)
        pe = epts[g]  # (nt, 3, nq, 2)
        we = ew[g]
        nrm = outward_normals(mesh)

        VS_tr = sb.eval(pe)
        Xg = get_edge_basis(mesh, k - 1).eval_ref(t)[g]  # (nt, 3, nq, k)
        # <vg_i, phi n_j>: moment of every vg basis function against phi.
        Mg = np.einsum("etqm,etqr,etq->etmr", VS_tr, Xg, we, optimize=True)

        if config.c0_type:
            trans = nodal_to_modal(mesh, k)
            VSd_vol = {1: sb.eval(pts, dx=1), 2: sb.eval(pts, dy=1)}
            V0d = {1: tb.eval(pts, dx=1), 2: tb.eval(pts, dy=1)}
        else:
            VS_d = {1: sb.eval(pe, dx=1), 2: sb.eval(pe, dy=1)}
            Xb = get_edge_basis(mesh, k).eval_ref(t)[g]
            Mb = {
                j: np.einsum("etqm,etqr,etq->etmr", VS_d[j], Xb, we, optimize=True)
                for j in (1, 2)
            }
            V0 = tb.eval(pts)

        matrices = {}
        for i in (1, 2):
            for j in (1, 2):
                H = np.zeros((nt, ns, layout.nloc))
                if config.c0_type:
                    A = -np.einsum(
                        "eqm,eql,eq->eml", VSd_vol[j], V0d[i], w, optimize=True
                    )
                    H[:, :, layout.v0] = A @ trans
                else:
                    dx = (i == 1) + (j == 1)
                    dy = (i == 2) + (j == 2)
                    H[:, :, layout.v0] = np.einsum(
                        "eqm,eql,eq->eml", sb.eval(pts, dx=dx, dy=dy), V0, w, optimize=True
                    )
                    for ledge in range(3):
                        H[:, :, layout.vb(ledge)] -= (
                            nrm[:, ledge, i - 1, None, None] * Mb[j][:, ledge]
                        )
                for ledge in range(3):
                    H[:, :, layout.vg(ledge, i - 1)] += (
                        nrm[:, ledge, j - 1, None, None] * Mg[:, ledge]
                    )
                matrices[(i, j)] = H
        return WeakHessianLocal(config=config, layout=layout, matrices=matrices)

    return mesh._memo(("weak_hessian", config), _build)


def apply_weak_hessian(v_local, hess, i, j):
    """Coefficients of ``D_ij(v)`` from element-local DOF vectors.

    ``v_local`` is (nloc,) or (nt, nloc); the result is (nt, dim S).
    """
    H = hess.matrices[(i, j)]
    v_local = np.asarray(v_local, dtype=float)
    if v_local.ndim == 1:
        v_local = np.broadcast_to(v_local, (H.shape[0], H.shape[2]))
    return np.einsum("enl,el->en", H, v_local, optimize=True)


def project_weak(mesh, config, w, grad_w, quad_degree=None):
    """Componentwise L2 projection of a smooth function into the general space.

    Returns the global primal vector of ``{Q0 w, Qb w, Qg grad w}``.
    Only meaningful for the general variant, where the three blocks are
    independent.
    """
    if config.c0_type:
        raise ValueError("project_weak requires the general (non-C0) variant")
    dof = build_dof_map(mesh, config)
    k = config.k
    primal = np.zeros(dof.n_primal)
    primal[: dof.n_v0] = project_element(w, k, mesh, quad_degree).ravel()
    primal[dof.vb_base : dof.vg_base] = project_edge(w, k, mesh, quad_degree).ravel()
    primal[dof.vg_base :] = project_edge(grad_w, k - 1, mesh, quad_degree).ravel()
    return primal


def interpolate_weak(mesh, config, w, grad_w, quad_degree=None):
    """Nodal interpolant of ``w`` plus edge projection of its gradient.

    C0-variant counterpart of :func:`project_weak`: the interior field
    is the continuous Lagrange interpolant, the gradient block is the
    per-edge L2 projection of ``grad w``.
    """
    if not config.c0_type:
        raise ValueError("interpolate_weak requires the C0 variant")
    dof = build_dof_map(mesh, config)
    coords = dof.nodes.coords
    primal = np.zeros(dof.n_primal)
    primal[: dof.n_v0] = np.asarray(w(coords[:, 0], coords[:, 1]), dtype=float)
    primal[dof.vg_base :] = project_edge(grad_w, config.k - 1, mesh, quad_degree).ravel()
    return primal
