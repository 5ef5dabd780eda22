"""Vietoris-Rips persistent homology over Z/pZ in dimensions 0 to 2.

The filtration is never materialized. Simplices are addressed by their
rank in the combinatorial number system (colex order), faces and cofaces
are enumerated on the fly, and pairs are found by reducing the coboundary
matrix one dimension at a time:

* dimension 0 is a union-find pass over the edges,
* columns that are known to be pivots of the previous dimension are
  cleared before reduction,
* zero-persistence apparent pairs are detected locally and never enter
  the reduction.

Within a dimension simplices are ordered by diameter, ties broken by
decreasing combinatorial index. The (birth, death) multiset does not
depend on the tie-break, only which zero-length pair gets reported.
"""
from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit, types
from numba.typed import Dict

PRIMES = (2, 3, 5, 7)
_PACK = 8  # pivot map stores column * _PACK + coefficient; needs p < _PACK


class PersistenceInputError(ValueError):
    """Distance matrix or parameters are not acceptable for a Rips filtration."""


@dataclass
class PersistenceDiagrams:
    """Birth/death pairs per homology dimension.

    ``diagrams[k]`` is a ``(m, 2)`` float array; essential classes carry
    ``death = inf``. Zero-length pairs are not reported.
    """

    prime: int
    max_dim: int
    diagrams: list[np.ndarray]
    threshold: float
    n_points: int = 0
    stats: dict = field(default_factory=dict, compare=False, repr=False)

    def __getitem__(self, dim: int) -> np.ndarray:
        return self.diagrams[dim]

    def finite(self, dim: int) -> np.ndarray:
        dgm = self.diagrams[dim]
        return dgm[np.isfinite(dgm[:, 1])]

    def lifetimes(self, dim: int) -> np.ndarray:
        dgm = self.finite(dim)
        return np.sort(dgm[:, 1] - dgm[:, 0])[::-1]


# ----------------------------------------------------------------------------
# combinatorial number system

@njit(cache=True)
def _binomials(n, kmax):
    B = np.zeros((n + 2, kmax + 1), dtype=np.int64)
    B[0, 0] = 1
    for v in range(1, n + 2):
        B[v, 0] = 1
        for k in range(1, kmax + 1):
            B[v, k] = B[v - 1, k - 1] + B[v - 1, k]
    return B


@njit(cache=True)
def _max_vertex(idx, k, top, B):
    # largest v < top with C(v, k) <= idx
    lo = k - 1
    hi = top
    while hi - lo > 1:
        mid = (lo + hi) >> 1
        if B[mid, k] <= idx:
            lo = mid
        else:
            hi = mid
    return lo


@njit(cache=True)
def _vertices(idx, dim, n, B, out):
    # fills out[0..dim] in decreasing vertex order
    top = n
    for i in range(dim + 1):
        k = dim + 1 - i
        v = _max_vertex(idx, k, top, B)
        out[i] = v
        idx -= B[v, k]
        top = v


@njit(cache=True)
def _diameter(verts, m, D):
    d = 0.0
    for a in range(m):
        for b in range(a + 1, m):
            if D[verts[a], verts[b]] > d:
                d = D[verts[a], verts[b]]
    return d


@njit(cache=True)
def _zero_pivot_cofacet(idx, dim, diam, D, B, n):
    """Oldest cofacet with the same diameter, as (index, sign), or (-1, 0)."""
    verts = np.empty(dim + 1, dtype=np.int64)
    _vertices(idx, dim, n, B, verts)
    idx_below = idx
    idx_above = 0
    v = n - 1
    k = dim + 1
    while v >= k:
        while k > 0 and B[v, k] <= idx_below:
            idx_below -= B[v, k]
            idx_above += B[v, k + 1]
            v -= 1
            k -= 1
        cd = diam
        for a in range(dim + 1):
            if D[v, verts[a]] > cd:
                cd = D[v, verts[a]]
                if cd > diam:
                    break
        if cd == diam:
            sign = -1 if (k & 1) else 1
            return idx_above + B[v, k + 1] + idx_below, sign
        v -= 1
    return -1, 0


@njit(cache=True)
def _zero_pivot_facet(idx, dim, diam, D, B, n):
    """Youngest facet with the same diameter, as (index, incidence sign), or (-1, 0)."""
    verts = np.empty(dim + 1, dtype=np.int64)
    _vertices(idx, dim, n, B, verts)
    rest = np.empty(dim, dtype=np.int64)
    # removing the top vertex first yields facets in increasing index order
    for i in range(dim + 1):
        m = 0
        for a in range(dim + 1):
            if a != i:
                rest[m] = verts[a]
                m += 1
        if _diameter(rest, dim, D) == diam:
            fidx = 0
            for a in range(dim):
                fidx += B[rest[a], dim - a]
            sign = -1 if ((dim - i) & 1) else 1
            return fidx, sign
    return -1, 0


@njit(cache=True)
def _zero_apparent_cofacet(idx, dim, diam, D, B, n):
    c, s = _zero_pivot_cofacet(idx, dim, diam, D, B, n)
    if c != -1:
        f, _ = _zero_pivot_facet(c, dim + 1, diam, D, B, n)
        if f == idx:
            return c
    return -1


@njit(cache=True)
def _zero_apparent_facet(idx, dim, diam, D, B, n):
    f, s = _zero_pivot_facet(idx, dim, diam, D, B, n)
    if f != -1:
        c, _ = _zero_pivot_cofacet(f, dim - 1, diam, D, B, n)
        if c == idx:
            return f, s
    return -1, 0


# ----------------------------------------------------------------------------
# dimension 0

@njit(cache=True)
def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@njit(cache=True)
def _edges(D, thr):
    n = D.shape[0]
    m = 0
    for j in range(n):
        for i in range(j):
            if D[i, j] <= thr:
                m += 1
    diam = np.empty(m, dtype=np.float64)
    idx = np.empty(m, dtype=np.int64)
    m = 0
    for j in range(n):
        base = j * (j - 1) // 2
        for i in range(j):
            if D[i, j] <= thr:
                diam[m] = D[i, j]
                idx[m] = base + i
                m += 1
    return diam, idx


@njit(cache=True)
def _dim0(ediam, eidx, order, D, B, n, want_columns):
    """Union-find over edges in filtration order.

    Returns H0 deaths, the number of components left, and the edges that
    must be reduced in dimension 1 (non-merging, not in an apparent pair).
    """
    parent = np.arange(n)
    rank = np.zeros(n, dtype=np.int64)
    deaths = []
    cols = []
    verts = np.empty(2, dtype=np.int64)
    for t in range(order.shape[0]):
        e = order[t]
        _vertices(eidx[e], 1, n, B, verts)
        u = _find(parent, verts[0])
        w = _find(parent, verts[1])
        if u != w:
            if ediam[e] > 0.0:
                deaths.append(ediam[e])
            if rank[u] < rank[w]:
                parent[u] = w
            elif rank[u] > rank[w]:
                parent[w] = u
            else:
                parent[w] = u
                rank[u] += 1
        elif want_columns:
            if _zero_apparent_cofacet(eidx[e], 1, ediam[e], D, B, n) == -1:
                cols.append(e)
    comps = 0
    for i in range(n):
        if _find(parent, i) == i:
            comps += 1
    return np.array(deaths, dtype=np.float64), comps, np.array(cols, dtype=np.int64)


# ----------------------------------------------------------------------------
# columns for dimension 2

@njit(cache=True)
def _triangle_columns(D, B, thr, pivot_keys):
    """Triangles within the threshold that still need a column in dimension 2."""
    n = D.shape[0]
    diam = []
    idx = []
    for l in range(n):
        for j in range(l):
            djl = D[j, l]
            if djl > thr:
                continue
            for i in range(j):
                dil = D[i, l]
                dij = D[i, j]
                if dil > thr or dij > thr:
                    continue
                d = djl
                if dil > d:
                    d = dil
                if dij > d:
                    d = dij
                t = B[i, 1] + B[j, 2] + B[l, 3]
                if t in pivot_keys:
                    continue
                if _zero_apparent_cofacet(t, 2, d, D, B, n) != -1:
                    continue
                f, _ = _zero_apparent_facet(t, 2, d, D, B, n)
                if f != -1:
                    continue
                diam.append(d)
                idx.append(t)
    return np.array(diam, dtype=np.float64), np.array(idx, dtype=np.int64)


# ----------------------------------------------------------------------------
# coboundary reduction

@njit(cache=True)
def _pop_pivot(heap, p):
    pd = 0.0
    pi = -1
    pc = 0
    while len(heap) > 0:
        d, ni, c = heap[0]
        if pc == 0:
            pd = d
            pi = -ni
            pc = c
        elif -ni != pi:
            return pd, pi, pc
        else:
            pc = (pc + c) % p
        heapq.heappop(heap)
    if pc == 0:
        return 0.0, -1, 0
    return pd, pi, pc


@njit(cache=True)
def _get_pivot(heap, p):
    d, i, c = _pop_pivot(heap, p)
    if i != -1:
        heapq.heappush(heap, (d, -i, c))
    return d, i, c


@njit(cache=True)
def _push_coboundary(sdiam, sidx, coef, dim, D, B, n, thr, p, heap, rheap, verts):
    heapq.heappush(rheap, (sdiam, -sidx, coef))
    _vertices(sidx, dim, n, B, verts)
    idx_below = sidx
    idx_above = 0
    v = n - 1
    k = dim + 1
    while v >= k:
        while k > 0 and B[v, k] <= idx_below:
            idx_below -= B[v, k]
            idx_above += B[v, k + 1]
            v -= 1
            k -= 1
        cd = sdiam
        for a in range(dim + 1):
            if D[v, verts[a]] > cd:
                cd = D[v, verts[a]]
        if cd <= thr:
            c = coef if (k & 1) == 0 else (p - coef) % p
            heapq.heappush(heap, (cd, -(idx_above + B[v, k + 1] + idx_below), c))
        v -= 1


@njit(cache=True)
def _reduce(cdiam, cidx, dim, D, B, n, thr, p, inv):
    """Reduce the coboundary columns of one dimension.

    ``cdiam, cidx`` must be in decreasing filtration order. Returns the
    births and deaths of the non-trivial pairs (death = inf for essential
    classes), the pivot set (for clearing the next dimension) and the
    number of columns that needed actual reduction.
    """
    m = cdiam.shape[0]
    pivot_map = Dict.empty(key_type=types.int64, value_type=types.int64)
    births = []
    deaths = []
    col_start = np.zeros(m, dtype=np.int64)
    col_end = np.zeros(m, dtype=np.int64)
    vd = []
    vi = []
    vc = []
    verts = np.empty(dim + 2, dtype=np.int64)
    cof_d = np.empty(n, dtype=np.float64)
    cof_i = np.empty(n, dtype=np.int64)
    cof_c = np.empty(n, dtype=np.int64)
    reduced = 0
    additions = 0
    for j in range(m):
        sd = cdiam[j]
        si = cidx[j]
        heap = [(0.0, 0, 0)]
        heap.pop()
        rheap = [(0.0, 0, 0)]
        rheap.pop()

        # enumerate the coboundary, stopping early on an emergent pair
        _vertices(si, dim, n, B, verts)
        idx_below = si
        idx_above = 0
        v = n - 1
        k = dim + 1
        ncof = 0
        check_emergent = True
        pd = 0.0
        pi = -1
        pc = 0
        emergent = False
        while v >= k:
            while k > 0 and B[v, k] <= idx_below:
                idx_below -= B[v, k]
                idx_above += B[v, k + 1]
                v -= 1
                k -= 1
            cd = sd
            for a in range(dim + 1):
                if D[v, verts[a]] > cd:
                    cd = D[v, verts[a]]
            if cd <= thr:
                ci = idx_above + B[v, k + 1] + idx_below
                cc = 1 if (k & 1) == 0 else p - 1
                cof_d[ncof] = cd
                cof_i[ncof] = ci
                cof_c[ncof] = cc
                ncof += 1
                if check_emergent and cd == sd:
                    if ci not in pivot_map:
                        f, _ = _zero_apparent_facet(ci, dim + 1, cd, D, B, n)
                        if f == -1:
                            pd = cd
                            pi = ci
                            pc = cc
                            emergent = True
                            break
                    check_emergent = False
            v -= 1
        if emergent:
            pivot_map[pi] = j * _PACK + pc
            col_start[j] = len(vi)
            col_end[j] = len(vi)
            continue

        reduced += 1
        for t in range(ncof):
            heapq.heappush(heap, (cof_d[t], -cof_i[t], cof_c[t]))
        pd, pi, pc = _get_pivot(heap, p)
        while True:
            if pi == -1:
                births.append(sd)
                deaths.append(np.inf)
                col_start[j] = len(vi)
                col_end[j] = len(vi)
                break
            if pi in pivot_map:
                packed = pivot_map[pi]
                jj = packed // _PACK
                oc = packed % _PACK
                factor = (p - (pc * inv[oc]) % p) % p
                additions += 1 + col_end[jj] - col_start[jj]
                _push_coboundary(cdiam[jj], cidx[jj], factor, dim, D, B, n, thr, p,
                                 heap, rheap, verts)
                for e in range(col_start[jj], col_end[jj]):
                    _push_coboundary(vd[e], vi[e], (vc[e] * factor) % p, dim, D, B, n,
                                     thr, p, heap, rheap, verts)
                pd, pi, pc = _get_pivot(heap, p)
                continue
            f, s = _zero_apparent_facet(pi, dim + 1, pd, D, B, n)
            if f != -1:
                # facet f is paired with pi; adding its coboundary cancels the pivot
                fc = (p - (pc * s) % p) % p
                additions += 1
                _push_coboundary(pd, f, fc, dim, D, B, n, thr, p, heap, rheap, verts)
                pd, pi, pc = _get_pivot(heap, p)
                continue
            if pd > sd:
                births.append(sd)
                deaths.append(pd)
            pivot_map[pi] = j * _PACK + pc
            col_start[j] = len(vi)
            while True:
                ed, ei, ec = _pop_pivot(rheap, p)
                if ei == -1:
                    break
                vd.append(ed)
                vi.append(ei)
                vc.append(ec)
            col_end[j] = len(vi)
            break
    return (np.array(births, dtype=np.float64), np.array(deaths, dtype=np.float64),
            pivot_map, reduced, additions)


# ----------------------------------------------------------------------------
# public API

def _check_matrix(dm) -> np.ndarray:
    D = np.asarray(dm, dtype=np.float64)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise PersistenceInputError(f"distance matrix must be square, got shape {D.shape}")
    if not np.all(np.isfinite(D)):
        raise PersistenceInputError("distance matrix has non-finite entries")
    if np.any(D < 0):
        raise PersistenceInputError("distance matrix has negative entries")
    scale = max(1.0, float(np.abs(D).max())) if D.size else 1.0
    if not np.allclose(D, D.T, rtol=0.0, atol=1e-12 * scale):
        raise PersistenceInputError("distance matrix is not symmetric")
    D = np.triu(D, 1)
    D = D + D.T
    return np.ascontiguousarray(D)


def enclosing_radius(dm) -> float:
    """min over points of the largest distance to any other point."""
    D = np.asarray(dm, dtype=np.float64)
    if D.shape[0] <= 1:
        return 0.0
    return float(D.max(axis=1).min())


def _decreasing_order(diam: np.ndarray, idx: np.ndarray) -> np.ndarray:
    # decreasing diameter, ties by increasing index
    return np.lexsort((idx, -diam))


def rips_persistence(dm, max_dim: int = 1, prime: int = 3,
                     threshold: float | str = "auto") -> PersistenceDiagrams:
    """Persistence diagrams of the Vietoris-Rips filtration of ``dm``.

    Parameters
    ----------
    dm : (n, n) array_like
        Symmetric, nonnegative, finite distance matrix.
    max_dim : int
        Highest homology dimension, 0, 1 or 2.
    prime : int
        Field characteristic, one of 2, 3, 5, 7.
    threshold : float or "auto"
        Largest simplex diameter included. ``"auto"`` uses the enclosing
        radius, past which every class of positive dimension is dead.
        ``inf`` includes the full filtration.

    Returns
    -------
    PersistenceDiagrams
    """
    if max_dim not in (0, 1, 2):
        raise PersistenceInputError(f"max_dim must be 0, 1 or 2, got {max_dim}")
    if prime not in PRIMES:
        raise PersistenceInputError(f"prime must be one of {PRIMES}, got {prime}")
    D = _check_matrix(dm)
    n = D.shape[0]
    er = enclosing_radius(D)
    if isinstance(threshold, str):
        if threshold != "auto":
            raise PersistenceInputError(f"unknown threshold {threshold!r}")
        thr = er
    else:
        thr = float(threshold)
        if math.isnan(thr) or thr < 0:
            raise PersistenceInputError(f"threshold must be >= 0, got {threshold}")
        if math.isinf(thr):
            # the largest entry; for a metric this is at most twice the enclosing radius
            thr = float(D.max()) if n else 0.0
    diagrams = [np.zeros((0, 2)) for _ in range(max_dim + 1)]
    stats = {"enclosing_radius": er}
    if n == 0:
        return PersistenceDiagrams(prime, max_dim, diagrams, thr, 0, stats)

    B = _binomials(n, max_dim + 3)
    inv = np.zeros(_PACK, dtype=np.int64)
    for a in range(1, prime):
        inv[a] = pow(a, prime - 2, prime)

    ediam, eidx = _edges(D, thr)
    asc = np.lexsort((-eidx, ediam))
    d0, comps, cols = _dim0(ediam, eidx, asc, D, B, n, max_dim > 0)
    h0 = [(0.0, d) for d in d0] + [(0.0, math.inf)] * comps
    diagrams[0] = _as_diagram(np.array(h0, dtype=np.float64).reshape(-1, 2))
    stats["edges"] = int(ediam.shape[0])

    if max_dim >= 1:
        cd, ci = ediam[cols], eidx[cols]
        order = _decreasing_order(cd, ci)
        cd, ci = np.ascontiguousarray(cd[order]), np.ascontiguousarray(ci[order])
        b, d, pivots, red, adds = _reduce(cd, ci, 1, D, B, n, thr, prime, inv)
        diagrams[1] = _as_diagram(np.column_stack([b, d]))
        stats["columns_1"] = int(cd.shape[0])
        stats["reduced_1"] = int(red)
        stats["additions_1"] = int(adds)
        if max_dim >= 2:
            td, ti = _triangle_columns(D, B, thr, pivots)
            order = _decreasing_order(td, ti)
            td, ti = np.ascontiguousarray(td[order]), np.ascontiguousarray(ti[order])
            del pivots
            b, d, _, red, adds = _reduce(td, ti, 2, D, B, n, thr, prime, inv)
            diagrams[2] = _as_diagram(np.column_stack([b, d]))
            stats["columns_2"] = int(td.shape[0])
            stats["reduced_2"] = int(red)
            stats["additions_2"] = int(adds)
    return PersistenceDiagrams(prime, max_dim, diagrams, thr, n, stats)


def _as_diagram(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64).reshape(-1, 2)
    if a.shape[0] == 0:
        return a
    order = np.lexsort((a[:, 1], a[:, 0]))
    return a[order]


def mp(dgms: PersistenceDiagrams, dim: int, i: int) -> float:
    """The i-th largest finite lifetime in dimension ``dim`` (0 if absent)."""
    if i < 1:
        raise ValueError("rank i starts at 1")
    if dim > dgms.max_dim:
        return 0.0
    life = dgms.lifetimes(dim)
    if life.shape[0] < i:
        return 0.0
    return float(life[i - 1])


def save_diagrams_csv(dgms: PersistenceDiagrams, path) -> None:
    """Write rows ``dim,birth,death`` with ``inf`` for essential classes."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dim", "birth", "death"])
        for k, dgm in enumerate(dgms.diagrams):
            for b, d in dgm:
                w.writerow([k, repr(float(b)), "inf" if math.isinf(d) else repr(float(d))])


def load_diagrams_csv(path, prime: int = 3, threshold: float = math.inf) -> PersistenceDiagrams:
    rows: dict[int, list] = {}
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if [h.strip() for h in header] != ["dim", "birth", "death"]:
            raise ValueError(f"{path}: expected header dim,birth,death")
        for row in r:
            if not row:
                continue
            rows.setdefault(int(row[0]), []).append((float(row[1]), float(row[2])))
    max_dim = max(rows) if rows else 0
    diagrams = [_as_diagram(np.array(rows.get(k, []), dtype=np.float64))
                for k in range(max_dim + 1)]
    return PersistenceDiagrams(prime, max_dim, diagrams, threshold)
