"""P1 assembly of the coupled solid displacement / fluid pressure system.

Blocks of the variational problem, in the unknown ordering
(u_x, u_y interleaved over disc nodes | p over annulus nodes):

    [ A1   C4 ] [u]   [ -integral_Gamma n p_inc . v ]
    [ C3  A2-B] [p] = [  integral_Gamma dp_inc/dn q ]

A1: elasticity form (lam div.div + 2 mu eps:eps - rho omega^2 mass) on the disc;
A2: Helmholtz form (stiffness - k^2 mass) on the annulus; C3/C4: interface
couplings through the outward normal of the solid; B: the truncated
absorbing-boundary matrix subtracted into the pressure-pressure block.
Volume element integrals are exact for P1; boundary loads use 4-point Gauss
per edge.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import dtn as dtn_ops
from .config import PhysicalConfig
from .mesh import GAMMA, GAMMA_R, BoundaryTrace, Mesh, boundary_trace

__all__ = [
    "DofMap", "FemSystem", "SystemBlocks", "PhysicalConfig",
    "assemble_elastic", "assemble_helmholtz", "assemble_coupling",
    "assemble_load", "assemble_blocks", "assemble_system", "dump_system",
]

_P1_MASS = (np.ones((3, 3)) + np.eye(3)) / 12.0

# 4-point Gauss-Legendre on [-1, 1] for the oscillatory boundary loads
_GAUSS_X = np.array([
    -0.8611363115940526, -0.3399810435848563,
    0.3399810435848563, 0.8611363115940526])
_GAUSS_W = np.array([
    0.3478548451374538, 0.6521451548625461,
    0.6521451548625461, 0.3478548451374538])


@dataclass(frozen=True)
class DofMap:
    """Unknown numbering: node i of the disc carries (2i, 2i+1); annulus node
    j carries 2*n_solid + j.  The two blocks never share an unknown, including
    on the interface circle where both meshes have nodes."""

    n_solid_nodes: int
    n_fluid_nodes: int

    @property
    def size(self) -> int:
        return 2 * self.n_solid_nodes + self.n_fluid_nodes

    def displacement(self, nodes, component):
        return 2 * np.asarray(nodes, dtype=np.int64) + component

    def pressure(self, nodes):
        return 2 * self.n_solid_nodes + np.asarray(nodes, dtype=np.int64)


def _p1_geometry(mesh: Mesh):
    """Constant barycentric gradients (T,3,2) and areas (T,)."""
    p = mesh.nodes[mesh.triangles]
    x, y = p[..., 0], p[..., 1]
    det = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) \
        - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0])
    if np.any(det <= 0.0):
        raise ValueError("mesh contains a degenerate or inverted triangle")
    g = np.empty_like(p)
    g[:, 0, 0] = y[:, 1] - y[:, 2]
    g[:, 0, 1] = x[:, 2] - x[:, 1]
    g[:, 1, 0] = y[:, 2] - y[:, 0]
    g[:, 1, 1] = x[:, 0] - x[:, 2]
    g[:, 2, 0] = y[:, 0] - y[:, 1]
    g[:, 2, 1] = x[:, 1] - x[:, 0]
    g /= det[:, None, None]
    return g, 0.5 * det


def _symmetrize(matrix: sp.csr_matrix) -> sp.csr_matrix:
    # element matrices are exactly symmetric, but the duplicate-summation
    # order differs between (i,j) and (j,i); restore bitwise symmetry
    return ((matrix + matrix.T) * 0.5).tocsr()


def assemble_helmholtz(mesh: Mesh, k: float) -> sp.csr_matrix:
    """Stiffness - k^2 mass over the fluid region, exact P1 integration."""
    g, area = _p1_geometry(mesh)
    ke = np.einsum("tad,tbd->tab", g, g) * area[:, None, None]
    ke = ke - k ** 2 * area[:, None, None] * _P1_MASS[None]
    rows = np.broadcast_to(mesh.triangles[:, :, None], ke.shape)
    cols = np.broadcast_to(mesh.triangles[:, None, :], ke.shape)
    n = mesh.num_nodes
    return _symmetrize(sp.coo_matrix(
        (ke.ravel(), (rows.ravel(), cols.ravel())), shape=(n, n)).tocsr())


def assemble_elastic(mesh: Mesh, lam: float, mu: float, rho: float,
                     omega: float) -> sp.csr_matrix:
    """lam div.div + 2 mu eps:eps - rho omega^2 mass over the solid disc."""
    g, area = _p1_geometry(mesh)
    dots = np.einsum("tad,tbd->tab", g, g)
    eye = np.eye(2)
    ke = lam * np.einsum("tai,tbj->taibj", g, g)
    ke += mu * (dots[:, :, None, :, None] * eye[None, None, :, None, :]
                + np.einsum("taj,tbi->taibj", g, g))
    ke -= rho * omega ** 2 * _P1_MASS[None, :, None, :, None] \
        * eye[None, None, :, None, :]
    ke *= area[:, None, None, None, None]

    dofs = 2 * mesh.triangles[:, :, None] + np.arange(2)[None, None, :]
    rows = np.broadcast_to(dofs[:, :, :, None, None], ke.shape)
    cols = np.broadcast_to(dofs[:, None, None, :, :], ke.shape)
    n = 2 * mesh.num_nodes
    return _symmetrize(sp.coo_matrix(
        (ke.ravel(), (rows.ravel(), cols.ravel())), shape=(n, n)).tocsr())


@dataclass(frozen=True)
class _InterfaceEdges:
    """Paired interface edges: same geometry, two index spaces."""

    solid_nodes: np.ndarray   # (E, 2) disc node indices
    fluid_nodes: np.ndarray   # (E, 2) annulus node indices
    points: np.ndarray        # (E, 2, 2) endpoint coordinates
    normals: np.ndarray       # (E, 2) outward from the solid
    lengths: np.ndarray       # (E,)


def _interface_edges(disc_mesh: Mesh, annulus_mesh: Mesh) -> _InterfaceEdges:
    ts = boundary_trace(disc_mesh, GAMMA)
    tf = boundary_trace(annulus_mesh, GAMMA)
    ps = disc_mesh.nodes[ts.node_indices]
    pf = annulus_mesh.nodes[tf.node_indices]
    if len(ts) != len(tf) or np.max(np.abs(ps - pf)) > 1e-12 * ts.radius:
        raise ValueError("disc and annulus interface traces do not conform")

    nxt = np.roll(np.arange(len(ts)), -1)
    solid_nodes = np.column_stack([ts.node_indices, ts.node_indices[nxt]])
    fluid_nodes = np.column_stack([tf.node_indices, tf.node_indices[nxt]])
    points = np.stack([ps, ps[nxt]], axis=1)
    tangent = points[:, 1] - points[:, 0]
    lengths = np.linalg.norm(tangent, axis=1)
    normals = np.column_stack([tangent[:, 1], -tangent[:, 0]]) / lengths[:, None]
    return _InterfaceEdges(solid_nodes, fluid_nodes, points, normals, lengths)


def assemble_coupling(disc_mesh: Mesh, annulus_mesh: Mesh, rho_f: float,
                      omega: float, dof_map: DofMap):
    """Interface blocks: C4 (displacement rows, pressure columns) discretizes
    integral_Gamma n p . v ds; C3 = rho_f omega^2 C4^T exactly, both built
    from the same edge mass integrals of linear traces."""
    edges = _interface_edges(disc_mesh, annulus_mesh)
    n_e = len(edges.lengths)
    edge_mass = (np.array([[1 / 3, 1 / 6], [1 / 6, 1 / 3]])[None]
                 * edges.lengths[:, None, None])

    # entries[e, a, comp, b] = n_comp * integral(phi_a zeta_b)
    entries = edges.normals[:, None, :, None] * edge_mass[:, :, None, :]
    rows = dof_map.displacement(edges.solid_nodes[:, :, None, None],
                                np.arange(2)[None, None, :, None])
    rows = np.broadcast_to(rows, entries.shape)
    cols = np.broadcast_to(edges.fluid_nodes[:, None, None, :], entries.shape)

    shape_c4 = (2 * dof_map.n_solid_nodes, dof_map.n_fluid_nodes)
    c4 = sp.coo_matrix(
        (entries.ravel(), (rows.ravel(), cols.ravel())), shape=shape_c4).tocsr()
    c3 = (rho_f * omega ** 2) * c4.T.tocsr()
    return c3, c4


def assemble_load(disc_mesh: Mesh, annulus_mesh: Mesh, config: PhysicalConfig,
                  dof_map: DofMap) -> np.ndarray:
    """Incident plane-wave functional over the interface circle."""
    edges = _interface_edges(disc_mesh, annulus_mesh)
    d = np.asarray(config.d)
    k = config.k

    # quadrature points on every edge at once: (E, Q, 2)
    lin = 0.5 * (1.0 + _GAUSS_X)
    pts = edges.points[:, 0, None, :] \
        + (edges.points[:, 1] - edges.points[:, 0])[:, None, :] * lin[None, :, None]
    pinc = np.exp(1j * k * (pts @ d))
    shapes = np.stack([1.0 - lin, lin], axis=0)            # (2, Q)
    jac = 0.5 * edges.lengths

    rhs = np.zeros(dof_map.size, dtype=complex)
    # pressure rows: + integral (ik d.n) p_inc zeta_b
    dn = edges.normals @ d
    q_weight = (1j * k * dn)[:, None] * pinc * _GAUSS_W[None, :]
    for b in range(2):
        vals = jac * np.sum(q_weight * shapes[b][None, :], axis=1)
        np.add.at(rhs, dof_map.pressure(edges.fluid_nodes[:, b]), vals)
    # displacement rows: - integral n p_inc . v
    v_weight = pinc * _GAUSS_W[None, :]
    for a in range(2):
        base = jac * np.sum(v_weight * shapes[a][None, :], axis=1)
        for comp in range(2):
            vals = -edges.normals[:, comp] * base
            np.add.at(rhs, dof_map.displacement(edges.solid_nodes[:, a], comp),
                      vals)
    return rhs


@dataclass(frozen=True)
class SystemBlocks:
    """N-independent pieces of the system, reusable across truncation orders."""

    elastic: sp.csr_matrix
    helmholtz: sp.csr_matrix
    coupling_pu: sp.csr_matrix   # C3
    coupling_up: sp.csr_matrix   # C4
    load: np.ndarray
    dof_map: DofMap
    trace_r: BoundaryTrace


@dataclass(frozen=True)
class FemSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    dof_map: DofMap
    disc_mesh: Mesh
    annulus_mesh: Mesh
    config: PhysicalConfig


def assemble_blocks(disc_mesh: Mesh, annulus_mesh: Mesh,
                    config: PhysicalConfig) -> SystemBlocks:
    dof_map = DofMap(disc_mesh.num_nodes, annulus_mesh.num_nodes)
    a1 = assemble_elastic(disc_mesh, config.lam, config.mu, config.rho,
                          config.omega)
    a2 = assemble_helmholtz(annulus_mesh, config.k)
    c3, c4 = assemble_coupling(disc_mesh, annulus_mesh, config.rho_f,
                               config.omega, dof_map)
    load = assemble_load(disc_mesh, annulus_mesh, config, dof_map)
    trace_r = boundary_trace(annulus_mesh, GAMMA_R)
    return SystemBlocks(elastic=a1, helmholtz=a2, coupling_pu=c3,
                        coupling_up=c4, load=load, dof_map=dof_map,
                        trace_r=trace_r)


def assemble_system(disc_mesh: Mesh, annulus_mesh: Mesh,
                    config: PhysicalConfig,
                    blocks: SystemBlocks | None = None) -> FemSystem:
    """Complete complex sparse system for the given truncation order
    config.N; pass precomputed ``blocks`` when sweeping over N."""
    if blocks is None:
        blocks = assemble_blocks(disc_mesh, annulus_mesh, config)
    b_dtn = dtn_ops.assemble_dtn_matrix(blocks.trace_r, config.k, config.R,
                                        config.N)
    m = len(blocks.trace_r)
    idx = blocks.trace_r.node_indices
    scatter = sp.coo_matrix(
        (b_dtn.ravel(), (np.repeat(idx, m), np.tile(idx, m))),
        shape=blocks.helmholtz.shape)
    fluid_block = blocks.helmholtz.astype(complex) - scatter.tocsr()
    matrix = sp.bmat(
        [[blocks.elastic.astype(complex), blocks.coupling_up],
         [blocks.coupling_pu, fluid_block]], format="csr")
    return FemSystem(matrix=matrix, rhs=blocks.load.copy(),
                     dof_map=blocks.dof_map, disc_mesh=disc_mesh,
                     annulus_mesh=annulus_mesh, config=config)


def dump_system(system: FemSystem, path) -> None:
    """Coordinate-format text dump: header 'dim nnz', lines 'i j re im'."""
    coo = system.matrix.tocoo()
    with open(path, "w") as fh:
        fh.write(f"{system.matrix.shape[0]} {coo.nnz}\n")
        for i, j, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i} {j} {v.real:.17g} {v.imag:.17g}\n")
