"""P1 finite elements for ``-Delta - alpha delta_Gamma`` on polygons.

The interaction support is resolved by mesh edges, so the delta term is an
exact 1D mass matrix along those edges.  Boundary pieces carry integer tags;
each tag can be Dirichlet, Neumann (natural) or attractive Robin
``-beta int |u|^2``.

Meshing goes through Shewchuk's Triangle (``triangle`` package) with a
size field ``h(d) = min(h_far, h + grading * d)``, ``d`` being the distance
to the interaction support.
"""
from dataclasses import dataclass, field

import numpy as np
import triangle as tr
from scipy import sparse
from scipy.sparse import linalg as sla
from scipy.spatial import cKDTree

from .bs_solver import SpectralResult
from .errors import FactorizationFailure, MeshFailure, NoConvergence
from .geometry import Kite, Polyline, sample

GAMMA_MARK = 10000
AXIS_TAG = 1
FAR_TAG = 2
ADJ_TAG = 3
DEFAULT_GRADING = 0.05
MIN_ANGLE = 28.0
SHIFT_RETRIES = 3


@dataclass
class Mesh:
    """Triangulation with tagged boundary edges and interaction edges."""

    points: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: np.ndarray
    gamma_edges: np.ndarray
    h: float

    @property
    def n_nodes(self):
        return len(self.points)

    def areas(self):
        p = self.points[self.triangles]
        e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def angles(self):
        """Interior angles (degrees), shape (n_triangles, 3)."""
        p = self.points[self.triangles]
        out = np.empty((len(p), 3))
        for a in range(3):
            u = p[:, (a + 1) % 3] - p[:, a]
            v = p[:, (a + 2) % 3] - p[:, a]
            c = np.einsum("ij,ij->i", u, v) / (np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
            out[:, a] = np.degrees(np.arccos(np.clip(c, -1, 1)))
        return out

    def nodes_with_tag(self, tag):
        return np.unique(self.boundary_edges[self.boundary_tags == tag])

    def gamma_length(self):
        e = self.points[self.gamma_edges]
        return float(np.linalg.norm(e[:, 1] - e[:, 0], axis=1).sum())

    def mirrored(self):
        """Union with the reflection ``y -> -y``; the mesh must sit in ``y >= 0``.

        Nodes on the axis are shared and axis edges become interior.
        """
        pts = self.points
        on_axis = np.abs(pts[:, 1]) < 1e-12
        n = len(pts)
        image = np.where(on_axis, np.arange(n), -1)
        extra = np.flatnonzero(~on_axis)
        image[extra] = n + np.arange(len(extra))
        new_pts = np.vstack([pts, pts[extra] * [1.0, -1.0]])
        tris = np.vstack([self.triangles, image[self.triangles][:, ::-1]])
        keep = self.boundary_tags != AXIS_TAG
        be = self.boundary_edges[keep]
        bt = self.boundary_tags[keep]
        return Mesh(new_pts, tris, np.vstack([be, image[be]]), np.concatenate([bt, bt]),
                    np.vstack([self.gamma_edges, image[self.gamma_edges]]), self.h)

    def dump(self, path):
        """ASCII node / element listing, for debugging only."""
        with open(path, "w") as f:
            f.write(f"{len(self.points)} nodes\n")
            np.savetxt(f, self.points, fmt="%.17g")
            f.write(f"{len(self.triangles)} triangles\n")
            np.savetxt(f, self.triangles, fmt="%d")


def _point_in_polygon(pts, poly, tol=1e-9):
    """True for points inside or on the boundary of a simple polygon."""
    pts = np.atleast_2d(pts)
    x, y = pts[:, 0:1], pts[:, 1:2]
    a, b = poly, np.roll(poly, -1, axis=0)
    # distance to edges catches boundary points
    ab = b - a
    t = np.clip(((x - a[:, 0]) * ab[:, 0] + (y - a[:, 1]) * ab[:, 1]) / np.einsum("ij,ij->i", ab, ab), 0, 1)
    dx = x - (a[:, 0] + t * ab[:, 0])
    dy = y - (a[:, 1] + t * ab[:, 1])
    on_edge = (np.hypot(dx, dy) < tol).any(axis=1)
    cross = ((a[:, 1] > y) != (b[:, 1] > y))
    xint = a[:, 0] + (y - a[:, 1]) * ab[:, 0] / np.where(ab[:, 1] == 0, 1, ab[:, 1])
    inside = (cross & (x < xint)).sum(axis=1) % 2 == 1
    return inside | on_edge


def _chains(interaction):
    out = []
    for c in interaction or []:
        if isinstance(c, Polyline):
            nodes = c.nodes
            if c.closed:
                nodes = np.vstack([nodes, nodes[:1]])
            out.append(np.asarray(nodes, float))
        else:
            out.append(np.asarray(c, float))
    return out


def _subdivide(chain, h):
    pts = [chain[0]]
    for p, q in zip(chain[:-1], chain[1:]):
        m = max(1, int(np.ceil(np.linalg.norm(q - p) / h - 1e-9)))
        t = np.arange(1, m + 1)[:, None] / m
        pts.extend(p + t * (q - p))
    return np.array(pts)


class _Pslg:
    def __init__(self, tol):
        self.pts = []
        self.tol = tol
        self._tree = {}

    def add(self, p):
        key = (round(p[0] / self.tol), round(p[1] / self.tol))
        for dk in ((0, 0), (1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1), (1, -1), (-1, 1)):
            k = (key[0] + dk[0], key[1] + dk[1])
            if k in self._tree:
                return self._tree[k]
        self._tree[key] = len(self.pts)
        self.pts.append(np.asarray(p, float))
        return self._tree[key]


def triangulate(domain, interaction=(), h=0.1, h_far=None, grading=DEFAULT_GRADING,
                boundary_tags=None, min_angle=MIN_ANGLE, max_rounds=12, fine_tags=()) -> Mesh:
    """Constrained quality triangulation of a polygon.

    Parameters
    ----------
    domain : (n, 2) array
        Polygon vertices, anti-clockwise.
    interaction : list of Polyline or (m, 2) arrays
        Chains that must be resolved by mesh edges; they may touch the
        boundary but not leave the domain.
    h : float
        Element size on and near the interaction support.
    h_far : float, optional
        Size cap away from it (default: a tenth of the domain diameter).
    boundary_tags : sequence of int, optional
        Tag per polygon edge (edge ``j`` joins vertex ``j`` to ``j+1``);
        defaults to ``1..n``.
    fine_tags : sequence of int
        Boundary tags that get the same size field as the interaction
        support (boundary layers of Robin pieces).
    """
    domain = np.asarray(domain, float)
    nb = len(domain)
    tags = np.arange(1, nb + 1) if boundary_tags is None else np.asarray(boundary_tags, int)
    diam = float(np.ptp(domain, axis=0).max())
    h_far = 0.1 * diam if h_far is None else h_far
    tol = 1e-9 * diam
    chains = [_subdivide(c, h) for c in _chains(interaction)]
    for c in chains:
        mids = 0.5 * (c[1:] + c[:-1])
        if not (_point_in_polygon(c, domain, 1e-8 * diam).all()
                and _point_in_polygon(mids, domain, 1e-8 * diam).all()):
            raise MeshFailure("interaction support leaves the domain")

    g = _Pslg(tol)
    segs, marks = [], []
    # boundary edges, split where a chain node lies on them
    allc = np.vstack(chains) if chains else np.zeros((0, 2))
    for j in range(nb):
        a, b = domain[j], domain[(j + 1) % nb]
        ab = b - a
        L2 = ab @ ab
        cuts = [0.0, 1.0]
        if len(allc):
            t = (allc - a) @ ab / L2
            dist = np.abs((allc - a) @ np.array([-ab[1], ab[0]])) / np.sqrt(L2)
            cuts += list(t[(dist < tol * 10) & (t > 1e-12) & (t < 1 - 1e-12)])
        cuts = np.unique(cuts)
        ids = [g.add(a + t * ab) for t in cuts]
        for u, v in zip(ids[:-1], ids[1:]):
            segs.append((u, v))
            marks.append(tags[j])
    for ci, c in enumerate(chains):
        ids = [g.add(p) for p in c]
        for u, v in zip(ids[:-1], ids[1:]):
            if u != v:
                segs.append((u, v))
                marks.append(GAMMA_MARK + ci)
    pslg = dict(vertices=np.array(g.pts), segments=np.array(segs, dtype=np.int32),
                segment_markers=np.array(marks, dtype=np.int32)[:, None])

    fine = list(chains)
    for j in range(nb):
        if tags[j] in tuple(fine_tags):
            fine.append(np.array([domain[j], domain[(j + 1) % nb]]))
    if fine:
        dense = np.vstack([_subdivide(c, 0.5 * h) for c in fine])
        tree = cKDTree(dense)
        size = lambda x: np.minimum(h_far, h + grading * tree.query(x)[0])
    else:
        size = lambda x: np.full(len(x), float(h))
    opts = f"pq{min_angle:g}eQ"
    target0 = np.sqrt(3) / 4 * h_far ** 2
    try:
        mesh = tr.triangulate(pslg, opts + f"a{target0:.17g}")
        for _ in range(max_rounds):
            tri = mesh["triangles"]
            cen = mesh["vertices"][tri].mean(axis=1)
            target = np.sqrt(3) / 4 * size(cen) ** 2
            p = mesh["vertices"][tri]
            area = 0.5 * np.abs((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                                - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
            if np.all(area <= 1.5 * target):
                break
            mesh["triangle_max_area"] = target
            mesh = tr.triangulate(mesh, "r" + opts + "a")
    except Exception as exc:  # triangle raises plain RuntimeError
        raise MeshFailure(str(exc)) from exc

    edges = mesh["edges"]
    em = mesh["edge_markers"].ravel()
    gmask = em >= GAMMA_MARK
    bmask = (em > 0) & ~gmask
    return Mesh(np.asarray(mesh["vertices"], float), np.asarray(mesh["triangles"], np.int64),
                np.asarray(edges[bmask], np.int64), em[bmask].astype(int),
                np.asarray(edges[gmask], np.int64), float(h))


# ---------------------------------------------------------------------------
# assembly

def _p1_matrices(points, tris):
    p = points[tris]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    area = 0.5 * np.abs(det)
    # gradients of the barycentric coordinates
    g1 = np.stack([e2[:, 1], -e2[:, 0]], axis=1) / det[:, None]
    g2 = np.stack([-e1[:, 1], e1[:, 0]], axis=1) / det[:, None]
    g = np.stack([-g1 - g2, g1, g2], axis=1)
    Kloc = area[:, None, None] * np.einsum("tad,tbd->tab", g, g)
    Mloc = area[:, None, None] / 12.0 * (np.ones((3, 3)) + np.eye(3))
    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    n = len(points)
    A = sparse.csr_matrix((Kloc.ravel(), (rows, cols)), shape=(n, n))
    M = sparse.csr_matrix((Mloc.ravel(), (rows, cols)), shape=(n, n))
    return A, M


def line_mass(points, edges):
    """Mass matrix of ``int |u|^2 dS`` along a set of mesh edges."""
    n = len(points)
    if len(edges) == 0:
        return sparse.csr_matrix((n, n))
    ell = np.linalg.norm(points[edges[:, 1]] - points[edges[:, 0]], axis=1)
    loc = ell[:, None, None] / 6.0 * (np.ones((2, 2)) + np.eye(2))
    rows = np.repeat(edges, 2, axis=1).ravel()
    cols = np.tile(edges, (1, 2)).ravel()
    return sparse.csr_matrix((loc.ravel(), (rows, cols)), shape=(n, n))


@dataclass
class AssembledProblem:
    mesh: Mesh
    A: sparse.csr_matrix
    M: sparse.csr_matrix
    B_gamma: sparse.csr_matrix
    B_boundary: dict
    dirichlet: np.ndarray = field(default_factory=lambda: np.zeros(0, int))

    @property
    def free(self):
        mask = np.ones(self.mesh.n_nodes, bool)
        mask[self.dirichlet] = False
        return np.flatnonzero(mask)

    def operator(self, alpha, robin=None):
        K = self.A - alpha * self.B_gamma
        for tag, beta in (robin or {}).items():
            K = K - beta * self.B_boundary[tag]
        return K


def assemble_problem(mesh: Mesh, dirichlet_tags=()) -> AssembledProblem:
    """Stiffness, mass and line masses; nodes on ``dirichlet_tags`` are eliminated."""
    A, M = _p1_matrices(mesh.points, mesh.triangles)
    Bg = line_mass(mesh.points, mesh.gamma_edges)
    Bb = {int(t): line_mass(mesh.points, mesh.boundary_edges[mesh.boundary_tags == t])
          for t in np.unique(mesh.boundary_tags)}
    dn = [mesh.nodes_with_tag(t) for t in dirichlet_tags]
    dn = np.unique(np.concatenate(dn)) if dn else np.zeros(0, int)
    return AssembledProblem(mesh, A, M, Bg, Bb, dn.astype(int))


def _factor_below(K, M, shift):
    """LU of ``K - shift M`` and the number of eigenvalues below ``shift``."""
    Ks = (K - shift * M).tocsc()
    try:
        lu = sla.splu(Ks, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                      options=dict(SymmetricMode=True))
    except RuntimeError as exc:
        raise FactorizationFailure(str(exc)) from exc
    if not np.array_equal(lu.perm_r, lu.perm_c):
        return lu, None
    return lu, int(np.sum(lu.U.diagonal() < 0))


def lowest_eigs(problem: AssembledProblem, alpha, count, robin=None, shift=None,
                min_half_angle=np.pi / 2, tol=1e-12, return_vectors=False) -> SpectralResult:
    """Lowest ``count`` eigenvalues of the form ``a - alpha b_Gamma - sum beta b_p``.

    The default shift ``-alpha^2 / (4 sin^2 theta_min) - 1`` lies below the
    spectrum of the delta part; with Robin pieces the shift also covers
    ``-beta^2`` per piece.  The factorization's inertia is checked and the
    shift is multiplied by 1.5 (at most three times) if eigenvalues lie below
    it.
    """
    free = problem.free
    K = problem.operator(alpha, robin)[free][:, free].tocsc()
    M = problem.M[free][:, free].tocsc()
    if shift is None:
        shift = -alpha ** 2 / (4 * np.sin(min_half_angle) ** 2) - 1.0
        if robin:
            shift -= max(robin.values()) ** 2 * 4.0
    count = min(count, len(free) - 2)
    for attempt in range(SHIFT_RETRIES + 1):
        lu, below = _factor_below(K, M, shift)
        if below == 0:
            break
        shift *= 1.5
    else:
        raise FactorizationFailure(f"{below} eigenvalues remain below shift {shift}")
    op = sla.LinearOperator(K.shape, matvec=lu.solve, dtype=float)
    try:
        vals, vecs = sla.eigsh(K, k=count, M=M, sigma=shift, which="LM", OPinv=op, tol=tol)
    except sla.ArpackNoConvergence as exc:
        raise NoConvergence(str(exc)) from exc
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    full = None
    if return_vectors:
        full = np.zeros((problem.mesh.n_nodes, count))
        full[free] = vecs
    res = np.linalg.norm(K @ vecs - (M @ vecs) * vals, axis=0)
    disc = {"h": problem.mesh.h, "nodes": int(problem.mesh.n_nodes),
            "triangles": int(len(problem.mesh.triangles)), "shift": float(shift),
            "retries": attempt}
    return SpectralResult(vals, "fem", disc, res, complete=True, eigenvectors=full)


# ---------------------------------------------------------------------------
# kites and boxes

def kite_half_mesh(theta, R, h, h_far=None, grading=DEFAULT_GRADING, fine_tags=()) -> Mesh:
    """Mesh of the upper half ``y >= 0`` of the kite.

    Tags: axis 1, far edge 2, adjacent edge 3.
    """
    k = Kite(theta, R)
    A, _, T, P = k.vertices
    end = k.support_ends[1]
    if h_far is None:
        h_far = max(h, R / 4.0)
    return triangulate(np.array([A, T, P]), [np.array([[0.0, 0.0], end])], h=h,
                       h_far=h_far, grading=grading, boundary_tags=[AXIS_TAG, FAR_TAG, ADJ_TAG],
                       fine_tags=fine_tags)


def kite_mesh(theta, R, h, **kw) -> Mesh:
    """Symmetric mesh of the full kite (the half mesh and its mirror image)."""
    return kite_half_mesh(theta, R, h, **kw).mirrored()


_KITE_BC = {"N": ((), None), "D": ((FAR_TAG, ADJ_TAG), None), "Robin": ((), FAR_TAG)}


def default_kite_h(R, alpha):
    return min(1.0 / (10.0 * alpha), R / 40.0)


def kite_eigs(theta, R, alpha, bc="D", count=1, h=None, split=False, grading=DEFAULT_GRADING,
              robin_beta=None, return_vectors=False) -> SpectralResult:
    """Eigenvalues of the kite operator with interaction on the two half-diagonals.

    ``bc`` is ``"N"`` (Neumann everywhere), ``"D"`` (Dirichlet everywhere) or
    ``"Robin"``: the form ``-beta int |u|^2`` on the two far edges (``beta``
    defaults to ``alpha``), Neumann on the adjacent edges.  With ``split=True``
    the half kite is solved twice, with Neumann and Dirichlet conditions
    on the symmetry axis, and the spectra merged.
    """
    if bc not in _KITE_BC:
        raise ValueError("bc must be N, D or Robin")
    h = default_kite_h(R, alpha) if h is None else h
    dtags, rtag = _KITE_BC[bc]
    beta = alpha if robin_beta is None else robin_beta
    robin = {rtag: beta} if rtag is not None else None
    half = kite_half_mesh(theta, R, h, grading=grading,
                          fine_tags=(FAR_TAG,) if rtag is not None else ())
    if not split:
        prob = assemble_problem(half.mirrored(), dtags)
        res = lowest_eigs(prob, alpha, count, robin=robin, min_half_angle=theta,
                          return_vectors=return_vectors)
        res.discretization.update(theta=theta, R=R, bc=bc, split=False)
        res.problem = prob
        return res
    parts = []
    for axis_bc in ("N", "D"):
        tags = dtags + ((AXIS_TAG,) if axis_bc == "D" else ())
        prob = assemble_problem(half, tags)
        # even states: Neumann on the axis; odd states: Dirichlet
        r = lowest_eigs(prob, alpha, count, robin=robin, min_half_angle=theta)
        parts.append(r)
    vals = np.sort(np.concatenate([p.eigenvalues for p in parts]))[:count]
    disc = dict(parts[0].discretization, theta=theta, R=R, bc=bc, split=True,
                nodes=2 * parts[0].discretization["nodes"])
    return SpectralResult(vals, "fem", disc, np.full(len(vals), np.nan), complete=True)


def box_truncated_spectrum(curve, alpha, margin, h, count, h_far=None,
                           grading=DEFAULT_GRADING, return_vectors=False) -> SpectralResult:
    """Dirichlet truncation of ``-Delta - alpha delta_Gamma`` to an inflated bounding box.

    ``curve`` is a :class:`CurveWithCorners` (sampled at ``h``) or a Polyline.
    The result bounds the full-plane eigenvalues from above.
    """
    poly = curve if isinstance(curve, Polyline) else sample(curve, h)
    lo = poly.nodes.min(axis=0) - margin
    hi = poly.nodes.max(axis=0) + margin
    box = np.array([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])
    if h_far is None:
        h_far = max(h, 0.25 * margin, 2.0 / alpha)
    mesh = triangulate(box, [poly], h=h, h_far=h_far, grading=grading,
                       boundary_tags=[1, 1, 1, 1])
    prob = assemble_problem(mesh, (1,))
    th = getattr(curve, "half_angles", np.zeros(0))
    th_min = float(np.min(np.minimum(th, np.pi - th))) if len(th) else np.pi / 2
    res = lowest_eigs(prob, alpha, count, min_half_angle=th_min, return_vectors=return_vectors)
    res.discretization.update(margin=margin, box=box.tolist())
    res.problem = prob
    return res


# ---------------------------------------------------------------------------
# localization

def _subtriangle_rule(level=4):
    """Midpoint rule on ``level^2`` congruent subtriangles (barycentric points)."""
    pts = []
    n = level
    for i in range(n):
        for j in range(n - i):
            pts.append(((i + 1 / 3) / n, (j + 1 / 3) / n))
            if i + j < n - 1:
                pts.append(((i + 2 / 3) / n, (j + 2 / 3) / n))
    lam = np.array(pts)
    return np.column_stack([1 - lam.sum(axis=1), lam]), np.full(len(lam), 1.0 / len(lam))


def eigenvector_mass_profile(problem: AssembledProblem, eigvec, center, radii, level=4):
    """Fraction of ``int u^2`` outside the disks of the given radii about ``center``.

    ``u^2`` is integrated per triangle on ``level^2`` subtriangles so the
    disk indicator is resolved below the mesh size.
    """
    mesh = problem.mesh
    bary, w = _subtriangle_rule(level)
    tri = mesh.triangles
    area = np.abs(mesh.areas())
    p = mesh.points[tri]
    u = np.asarray(eigvec, float)[tri]
    xq = np.einsum("qa,tad->tqd", bary, p)
    uq = u @ bary.T
    dens = (uq ** 2) * (area[:, None] * w[None, :])
    rq = np.linalg.norm(xq - np.asarray(center, float), axis=2)
    total = dens.sum()
    return np.array([dens[rq > r].sum() / total for r in np.atleast_1d(radii)])


def fit_decay_rate(radii, tails):
    """Least-squares rate ``b`` in ``tail(r) ~ C exp(-b r)``."""
    r = np.asarray(radii, float)
    y = np.log(np.asarray(tails, float))
    slope, _ = np.polyfit(r, y, 1)
    return -slope
