"""Structured polar triangulations of the solid disc and the fluid annulus.

Both regions are meshed with the same angular resolution so the interface
circle carries bitwise-identical node coordinates in the two meshes (required
by the interface coupling terms).  Uniform red refinement snaps new boundary
midpoints back onto their circle, so the discrete boundary keeps tracking the
true geometry through the refinement sequence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GAMMA = "GAMMA"      # solid-fluid interface circle, radius R0
GAMMA_R = "GAMMA_R"  # artificial outer circle, radius R
DISC = "DISC"
ANNULUS = "ANNULUS"

MIN_ANGULAR = 8

__all__ = [
    "GAMMA", "GAMMA_R", "DISC", "ANNULUS",
    "Mesh", "BoundaryTrace",
    "build_disc_mesh", "build_annulus_mesh", "refine", "boundary_trace",
    "mesh_size", "triangle_areas", "save_mesh", "load_mesh",
]


@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming triangulation with tagged boundary edge loops.

    nodes : (V, 2) float array
    triangles : (T, 3) int array, counter-clockwise
    boundary_edges : (E, 2) int array, each edge ordered counter-clockwise
        by angle along its circle
    boundary_tags : (E,) tuple of GAMMA / GAMMA_R
    region : DISC or ANNULUS
    """

    nodes: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: tuple
    region: str

    def __post_init__(self):
        for arr in (self.nodes, self.triangles, self.boundary_edges):
            arr.setflags(write=False)

    @property
    def num_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def num_triangles(self) -> int:
        return self.triangles.shape[0]


@dataclass(frozen=True)
class BoundaryTrace:
    """One boundary loop, ordered counter-clockwise starting at angle 0."""

    node_indices: np.ndarray
    angles: np.ndarray
    radius: float

    def __post_init__(self):
        self.node_indices.setflags(write=False)
        self.angles.setflags(write=False)

    def __len__(self) -> int:
        return self.node_indices.shape[0]

    @property
    def spacing(self) -> float:
        return 2.0 * np.pi / len(self)


def triangle_areas(mesh: Mesh) -> np.ndarray:
    """Signed areas; positive for correctly oriented triangles."""
    p = mesh.nodes[mesh.triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def mesh_size(mesh: Mesh) -> float:
    """h = longest edge over all triangles."""
    p = mesh.nodes[mesh.triangles]
    h = 0.0
    for a, b in ((0, 1), (1, 2), (2, 0)):
        h = max(h, float(np.max(np.linalg.norm(p[:, a] - p[:, b], axis=1))))
    return h


def _ring_coords(radius: float, n_angular: int) -> np.ndarray:
    theta = 2.0 * np.pi * np.arange(n_angular) / n_angular
    return np.column_stack([radius * np.cos(theta), radius * np.sin(theta)])


def _band_triangles(inner_base, outer_base, n_angular):
    """Split each quad of an annular band along the inner->outer diagonal."""
    tris = []
    for i in range(n_angular):
        j = (i + 1) % n_angular
        a = inner_base + i
        b = inner_base + j
        c = outer_base + j
        d = outer_base + i
        tris.append((a, d, c))
        tris.append((a, c, b))
    return tris


def _loop_edges(base, n_angular):
    return [(base + i, base + (i + 1) % n_angular) for i in range(n_angular)]


def _check_angular(n_angular: int):
    if n_angular < MIN_ANGULAR or n_angular % 2 != 0:
        raise ValueError(
            f"n_angular must be an even integer >= {MIN_ANGULAR}, got {n_angular}")


def build_disc_mesh(R0: float, n_angular: int) -> Mesh:
    """Polar mesh of the disc r <= R0: rings x sectors plus a center fan.

    The ring count keeps radial steps comparable to the outer angular chord
    (near-uniform aspect away from the center).
    """
    _check_angular(n_angular)
    if R0 <= 0.0:
        raise ValueError("R0 must be positive")
    # 1.1 biases the rounding so the ring count tracks doubling of n_angular
    # (plain round(n/2pi) sticks at 5 rings across the 32->64 step)
    n_rings = max(1, round(1.1 * n_angular / (2.0 * np.pi)))

    nodes = [np.zeros((1, 2))]
    for j in range(1, n_rings + 1):
        nodes.append(_ring_coords(R0 * j / n_rings, n_angular))
    nodes = np.vstack(nodes)

    tris = [(0, 1 + i, 1 + (i + 1) % n_angular) for i in range(n_angular)]
    for j in range(1, n_rings):
        inner = 1 + (j - 1) * n_angular
        outer = 1 + j * n_angular
        tris.extend(_band_triangles(inner, outer, n_angular))

    outer_base = 1 + (n_rings - 1) * n_angular
    edges = _loop_edges(outer_base, n_angular)
    return Mesh(
        nodes=nodes,
        triangles=np.asarray(tris, dtype=np.int64),
        boundary_edges=np.asarray(edges, dtype=np.int64),
        boundary_tags=tuple([GAMMA] * n_angular),
        region=DISC,
    )


def build_annulus_mesh(R0: float, R: float, n_angular: int) -> Mesh:
    """Polar mesh of the annulus R0 <= r <= R, conforming to the disc mesh.

    Ring angles match ``build_disc_mesh`` exactly, so the GAMMA trace nodes of
    a disc/annulus pair built with the same n_angular coincide bitwise.
    """
    _check_angular(n_angular)
    if not (R > R0 > 0.0):
        raise ValueError("annulus requires R > R0 > 0")
    # radial step keyed to the interface chord, where the field varies fastest;
    # also keeps the refined h ladder close to clean halving
    inner_chord = 2.0 * R0 * np.sin(np.pi / n_angular)
    n_layers = max(1, round((R - R0) / inner_chord))

    radii = R0 + (R - R0) * np.arange(n_layers + 1) / n_layers
    nodes = np.vstack([_ring_coords(r, n_angular) for r in radii])

    tris = []
    for j in range(n_layers):
        tris.extend(_band_triangles(j * n_angular, (j + 1) * n_angular, n_angular))

    edges = _loop_edges(0, n_angular) + _loop_edges(n_layers * n_angular, n_angular)
    tags = tuple([GAMMA] * n_angular + [GAMMA_R] * n_angular)
    return Mesh(
        nodes=nodes,
        triangles=np.asarray(tris, dtype=np.int64),
        boundary_edges=np.asarray(edges, dtype=np.int64),
        boundary_tags=tags,
        region=ANNULUS,
    )


def refine(mesh: Mesh) -> Mesh:
    """Uniform red refinement (each triangle into 4 similar children).

    Midpoints of boundary edges are snapped radially onto their tagged circle;
    everything else stays at the straight-edge midpoint, so triangle count is
    exactly 4x and boundary loops/tag ordering are preserved.
    """
    boundary = {}
    snap_radius = {}
    for (a, b), tag in zip(mesh.boundary_edges, mesh.boundary_tags):
        boundary[(min(a, b), max(a, b))] = tag
        if tag not in snap_radius:
            snap_radius[tag] = float(np.linalg.norm(mesh.nodes[a]))

    new_nodes = [mesh.nodes]
    next_index = mesh.num_nodes
    midpoint = {}

    def midpoint_of(a, b):
        nonlocal next_index
        key = (min(a, b), max(a, b))
        idx = midpoint.get(key)
        if idx is not None:
            return idx
        point = 0.5 * (mesh.nodes[a] + mesh.nodes[b])
        tag = boundary.get(key)
        if tag is not None:
            point = point * (snap_radius[tag] / np.linalg.norm(point))
        new_nodes.append(point[None, :])
        midpoint[key] = next_index
        next_index += 1
        return midpoint[key]

    tris = np.empty((4 * mesh.num_triangles, 3), dtype=np.int64)
    for t, (a, b, c) in enumerate(mesh.triangles):
        mab = midpoint_of(a, b)
        mbc = midpoint_of(b, c)
        mca = midpoint_of(c, a)
        tris[4 * t:4 * t + 4] = [
            (a, mab, mca),
            (mab, b, mbc),
            (mca, mbc, c),
            (mab, mbc, mca),
        ]

    edges = []
    tags = []
    for (a, b), tag in zip(mesh.boundary_edges, mesh.boundary_tags):
        m = midpoint[(min(a, b), max(a, b))]
        edges.append((a, m))
        edges.append((m, b))
        tags.extend((tag, tag))

    return Mesh(
        nodes=np.vstack(new_nodes),
        triangles=tris,
        boundary_edges=np.asarray(edges, dtype=np.int64),
        boundary_tags=tuple(tags),
        region=mesh.region,
    )


def boundary_trace(mesh: Mesh, tag: str) -> BoundaryTrace:
    """Nodes of one boundary loop, sorted counter-clockwise from angle 0."""
    picked = [e for e, t in zip(mesh.boundary_edges, mesh.boundary_tags) if t == tag]
    if not picked:
        raise ValueError(f"mesh has no boundary edges tagged {tag!r}")
    indices = np.unique(np.asarray(picked, dtype=np.int64))
    xy = mesh.nodes[indices]
    angles = np.mod(np.arctan2(xy[:, 1], xy[:, 0]), 2.0 * np.pi)
    order = np.argsort(angles)
    return BoundaryTrace(
        node_indices=indices[order],
        angles=angles[order],
        radius=float(np.mean(np.linalg.norm(xy, axis=1))),
    )


def save_mesh(mesh: Mesh, path) -> None:
    """Plain-text dump, round-trip lossless at 17 significant digits."""
    lines = [
        f"nodes {mesh.num_nodes} triangles {mesh.num_triangles} "
        f"edges {len(mesh.boundary_tags)}"
    ]
    for x, y in mesh.nodes:
        lines.append(f"{x:.17g} {y:.17g}")
    for i, j, k in mesh.triangles:
        lines.append(f"{i} {j} {k}")
    for (i, j), tag in zip(mesh.boundary_edges, mesh.boundary_tags):
        lines.append(f"{i} {j} {tag}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_mesh(path) -> Mesh:
    """Inverse of :func:`save_mesh`; region inferred from the edge tags."""
    with open(path) as fh:
        tokens = fh.readline().split()
        if len(tokens) != 6 or tokens[0] != "nodes" or tokens[2] != "triangles" \
                or tokens[4] != "edges":
            raise ValueError(f"malformed mesh header in {path}")
        n_nodes, n_tris, n_edges = int(tokens[1]), int(tokens[3]), int(tokens[5])
        nodes = np.array(
            [[float(v) for v in fh.readline().split()] for _ in range(n_nodes)])
        tris = np.array(
            [[int(v) for v in fh.readline().split()] for _ in range(n_tris)],
            dtype=np.int64)
        edges = np.empty((n_edges, 2), dtype=np.int64)
        tags = []
        for e in range(n_edges):
            i, j, tag = fh.readline().split()
            edges[e] = (int(i), int(j))
            tags.append(tag)
    region = ANNULUS if GAMMA_R in tags else DISC
    return Mesh(nodes=nodes, triangles=tris, boundary_edges=edges,
                boundary_tags=tuple(tags), region=region)
