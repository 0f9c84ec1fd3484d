"""Empirical counting: circle zeros, nodal components, and local extrema.

The S^2 census runs on a cubed-sphere grid (6 faces of R x R cell centers;
no polar degeneracy).  Nodal components are counted through sign regions:
the zero set of a nondegenerate field is a disjoint union of circles, so
components = sign regions - 1.  Monte-Carlo trials draw per-trial seeds from
the master seed, so any subset of trials is reproducible and results do not
depend on worker scheduling.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .covariance import covariance_fn, slice_parameter
from .ensemble import EnsembleSpec
from .errors import DomainError, TrialFlagged
from .fieldsim import (
    FieldSample,
    TrigPoly,
    coefficient_layout,
    eval_points_matrix,
    restrict_to_circle,
    sample_coefficient_matrix,
)

__all__ = [
    "SphereGrid",
    "CensusReport",
    "SliceReport",
    "count_circle_zeros",
    "count_nodal_components",
    "count_local_extrema",
    "run_census",
    "slice_experiment",
    "trial_seed_value",
]

OBSERVABLES = ("circle_zeros", "nodal_components", "extrema", "slice_zeros")

ZERO_TOL_FACTOR = 1e-13

_FACE_FRAMES = (
    ((1, 0, 0), (0, 1, 0), (0, 0, 1)),
    ((1, 0, 0), (0, -1, 0), (0, 0, -1)),
    ((0, 1, 0), (0, 0, 1), (1, 0, 0)),
    ((0, 1, 0), (0, 0, -1), (-1, 0, 0)),
    ((0, 0, 1), (1, 0, 0), (0, 1, 0)),
    ((0, 0, 1), (-1, 0, 0), (0, -1, 0)),
)


class SphereGrid:
    """Cubed-sphere grid: 6 faces of R x R equiangular cell centers.

    Node index = face * R^2 + i * R + j.  Neighbors: the 8-neighborhood
    within a face plus the mirrored node across each cube edge (so every node
    has between 5 and 8 neighbors and the graph is connected).  The node set
    is antipodally symmetric; ``antipode`` maps each node to its negation.
    """

    def __init__(self, R: int):
        if R < 2:
            raise DomainError("grid resolution must be at least 2")
        self.R = R
        step = (math.pi / 2.0) / R
        angles = -math.pi / 4.0 + step * (np.arange(R) + 0.5)
        tans = np.tan(angles)
        self._step = step
        t1, t2 = np.meshgrid(tans, tans, indexing="ij")
        pts = []
        for e1, e2, e3 in _FACE_FRAMES:
            raw = (t1[..., None] * np.asarray(e1, float)
                   + t2[..., None] * np.asarray(e2, float)
                   + np.asarray(e3, float))
            pts.append(raw.reshape(-1, 3))
        pts = np.concatenate(pts, axis=0)
        self.points = pts / np.linalg.norm(pts, axis=1, keepdims=True)
        self.points.flags.writeable = False
        self.n_nodes = 6 * R * R
        self._build_edges()
        self._build_csr()
        self._antipode = None

    # -- construction ----------------------------------------------------

    def _build_edges(self):
        R = self.R
        idx = np.arange(R * R).reshape(R, R)
        pairs = []
        for di, dj in ((1, 0), (0, 1), (1, 1), (1, -1)):
            i0 = slice(max(0, -di), R - max(0, di))
            j0 = slice(max(0, -dj), R - max(0, dj))
            i1 = slice(max(0, di), R + min(0, di))
            j1 = slice(max(0, dj), R + min(0, dj))
            pairs.append(np.stack([idx[i0, j0].ravel(), idx[i1, j1].ravel()], axis=1))
        face_pairs = np.concatenate(pairs, axis=0)
        all_pairs = [np.concatenate([face_pairs + f * R * R for f in range(6)], axis=0)]

        # cross-face stitching: reflect each boundary row across the shared
        # cube-edge plane; the reflection maps the node set onto itself
        frames = [np.asarray(f, dtype=float) for f in _FACE_FRAMES]
        for f, (e1, e2, e3) in enumerate(frames):
            base = f * R * R
            sides = (
                (e1, (np.full(R, R - 1), np.arange(R))),
                (-e1, (np.full(R, 0), np.arange(R))),
                (e2, (np.arange(R), np.full(R, R - 1))),
                (-e2, (np.arange(R), np.full(R, 0))),
            )
            for axis_vec, (ii, jj) in sides:
                nodes = base + ii * R + jj
                nrm = (e3 - axis_vec) / np.linalg.norm(e3 - axis_vec)
                p = self.points[nodes]
                mirrored = p - 2.0 * (p @ nrm)[:, None] * nrm[None, :]
                nbrs = self.locate(mirrored)
                all_pairs.append(np.stack([nodes, nbrs], axis=1))

        edges = np.concatenate(all_pairs, axis=0)
        lo = np.minimum(edges[:, 0], edges[:, 1])
        hi = np.maximum(edges[:, 0], edges[:, 1])
        uniq = np.unique(lo * np.int64(self.n_nodes) + hi)
        self.edge_u = (uniq // self.n_nodes).astype(np.int64)
        self.edge_v = (uniq % self.n_nodes).astype(np.int64)

    def _build_csr(self):
        u, v = self.edge_u, self.edge_v
        src = np.concatenate([u, v])
        dst = np.concatenate([v, u])
        order = np.argsort(src, kind="stable")
        self.nbr_indices = dst[order]
        counts = np.bincount(src, minlength=self.n_nodes)
        self.nbr_indptr = np.concatenate([[0], np.cumsum(counts)])
        self.degree = counts

    # -- geometry --------------------------------------------------------

    def locate(self, points) -> np.ndarray:
        """Indices of the grid nodes whose cells contain the given points."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        frames = np.asarray(_FACE_FRAMES, dtype=float)  # (6, 3, 3)
        d3 = p @ frames[:, 2, :].T
        face = np.argmax(d3, axis=1)
        e = frames[face]
        w3 = np.einsum("ij,ij->i", p, e[:, 2, :])
        a1 = np.arctan(np.einsum("ij,ij->i", p, e[:, 0, :]) / w3)
        a2 = np.arctan(np.einsum("ij,ij->i", p, e[:, 1, :]) / w3)
        i = np.clip(np.round((a1 + math.pi / 4.0) / self._step - 0.5).astype(int), 0, self.R - 1)
        j = np.clip(np.round((a2 + math.pi / 4.0) / self._step - 0.5).astype(int), 0, self.R - 1)
        return face * self.R * self.R + i * self.R + j

    @property
    def antipode(self) -> np.ndarray:
        """Node index of the antipodal node (the grid is symmetric under -id)."""
        if self._antipode is None:
            anti = self.locate(-self.points)
            if not np.allclose(self.points[anti], -self.points, atol=1e-9):
                raise DomainError("antipodal map failed to close (internal error)")
            self._antipode = anti
        return self._antipode


@lru_cache(maxsize=8)
def get_grid(R: int) -> SphereGrid:
    return SphereGrid(R)


# -- per-trial counting -------------------------------------------------


def count_circle_zeros(g, d: int, tol: float = 1e-12) -> int:
    """Zeros of a degree-d trigonometric restriction on the circle.

    Samples a uniform grid of 16 d points, counts sign changes, recounts on a
    4x refined grid; on agreement, bisects every bracket to width <= tol.
    Persistent disagreement after 3 refinements flags the trial.
    ``g`` must accept a vector of angles.
    """
    if d < 1:
        raise DomainError("degree must be >= 1")
    counts = []
    factor = 16 * d
    thetas = vals = None
    for _ in range(4):
        thetas = np.linspace(0.0, 2.0 * math.pi, factor, endpoint=False)
        vals = np.asarray(g(thetas), dtype=float)
        pos = vals > 0.0
        changes = pos != np.roll(pos, -1)
        counts.append(int(np.count_nonzero(changes)))
        if len(counts) >= 2 and counts[-1] == counts[-2]:
            break
        factor *= 4
    else:
        raise TrialFlagged(f"zero count unstable after refinements: {counts}")

    # bisect each bracket (hi index wraps) down to the requested width
    change_idx = np.nonzero(pos != np.roll(pos, -1))[0]
    if change_idx.size:
        h = 2.0 * math.pi / thetas.size
        lo = thetas[change_idx]
        hi = lo + h
        flo = vals[change_idx]
        while np.any(hi - lo > tol):
            mid = 0.5 * (lo + hi)
            fmid = np.asarray(g(mid), dtype=float)
            left = (flo > 0.0) != (fmid > 0.0)
            hi = np.where(left, mid, hi)
            lo = np.where(left, lo, mid)
            flo = np.where(left, flo, fmid)
    return counts[-1]


def _zero_tolerance(e: EnsembleSpec) -> float:
    return ZERO_TOL_FACTOR * math.sqrt(covariance_fn(e, 1.0))


def nodal_components_from_values(values: np.ndarray, grid: SphereGrid,
                                 tol: float) -> tuple[int, bool]:
    """(component count, tie flag) from node values: sign regions minus 1."""
    tiny = np.abs(values) < tol
    pos = (values > 0.0) | tiny
    same = pos[grid.edge_u] == pos[grid.edge_v]
    n = grid.n_nodes
    graph = csr_matrix(
        (np.ones(int(same.sum()), dtype=np.int8),
         (grid.edge_u[same], grid.edge_v[same])), shape=(n, n))
    regions = connected_components(graph, directed=False, return_labels=False)
    return int(regions) - 1, bool(tiny.any())


def local_extrema_from_values(values: np.ndarray, grid: SphereGrid) -> tuple[int, int, bool]:
    """(minima, maxima, plateau flag): nodes strictly below/above all neighbors."""
    nbr_vals = values[grid.nbr_indices]
    starts = grid.nbr_indptr[:-1]
    nmin = np.minimum.reduceat(nbr_vals, starts)
    nmax = np.maximum.reduceat(nbr_vals, starts)
    minima = int(np.count_nonzero(values < nmin))
    maxima = int(np.count_nonzero(values > nmax))
    plateau = bool(np.any(values[grid.edge_u] == values[grid.edge_v]))
    return minima, maxima, plateau


def count_nodal_components(fs: FieldSample, grid: SphereGrid) -> int:
    """Nodal components of one S^2 field (raises TrialFlagged on a tie)."""
    _require_resolution(fs.ensemble, grid)
    values = fs.eval_grid(grid)
    count, flagged = nodal_components_from_values(values, grid, _zero_tolerance(fs.ensemble))
    if flagged:
        raise TrialFlagged("node value at the zero tolerance; treated as positive")
    return count


def count_local_extrema(fs: FieldSample, grid: SphereGrid) -> tuple[int, int]:
    """(minima, maxima) of one S^2 field (raises TrialFlagged on a plateau)."""
    _require_resolution(fs.ensemble, grid)
    values = fs.eval_grid(grid)
    minima, maxima, plateau = local_extrema_from_values(values, grid)
    if plateau:
        raise TrialFlagged("plateau: equal values on neighboring nodes")
    return minima, maxima


def projective_components_from_values(values: np.ndarray, grid: SphereGrid,
                                      d: int, tol: float) -> int:
    """Component count in projective space by antipodal-quotient labeling.

    Quotient nodes are antipodal orbits; an edge joins two orbits when a
    sphere edge joins same-sign nodes.  Regions r' of the quotient give
    b0 = (r' - 1) + [d odd] (an odd-degree zero set carries one one-sided
    component, which adds no region).
    """
    anti = grid.antipode
    orbit = np.minimum(np.arange(grid.n_nodes), anti)
    _, orbit_id = np.unique(orbit, return_inverse=True)
    tiny = np.abs(values) < tol
    pos = (values > 0.0) | tiny
    same = pos[grid.edge_u] == pos[grid.edge_v]
    nq = int(orbit_id.max()) + 1
    graph = csr_matrix(
        (np.ones(int(same.sum()), dtype=np.int8),
         (orbit_id[grid.edge_u[same]], orbit_id[grid.edge_v[same]])), shape=(nq, nq))
    regions = connected_components(graph, directed=False, return_labels=False)
    return int(regions) - 1 + (d % 2)


def _require_resolution(e: EnsembleSpec, grid: SphereGrid, c: int = 12):
    if e.n != 2:
        raise DomainError("the sphere census requires an n=2 ensemble")
    if grid.R < c * e.d:
        raise DomainError(f"grid resolution R={grid.R} below the floor {c}*d={c * e.d}")


# -- Monte-Carlo harness ----------------------------------------------


def trial_seed_value(master_seed: int, trial: int) -> int:
    """The per-trial seed recorded in reports (derived from the master seed)."""
    ss = np.random.SeedSequence([int(master_seed), int(trial)])
    return int(ss.generate_state(1, np.uint64)[0])


def _trial_entropy(master_seed: int, trial: int) -> list[int]:
    return [int(master_seed), int(trial)]


@dataclass
class CensusReport:
    """Per-trial and aggregate counts for one observable.

    ``mean``/``stderr`` summarize the unflagged trials only; flagged trials
    stay listed (with best-effort counts of -1 when no count was obtained).
    """

    observable: str
    kind: str
    n: int
    d: int
    trials: int
    seed: int
    counts: list[int]
    flagged: list[bool]
    aux: dict = field(default_factory=dict)

    @property
    def _clean(self) -> np.ndarray:
        return np.array([c for c, f in zip(self.counts, self.flagged) if not f], dtype=float)

    @property
    def mean(self) -> float | None:
        clean = self._clean
        return float(clean.mean()) if clean.size else None

    @property
    def stderr(self) -> float | None:
        clean = self._clean
        if clean.size < 2:
            return None
        return float(clean.std(ddof=1) / math.sqrt(clean.size))

    @property
    def flagged_fraction(self) -> float:
        return sum(self.flagged) / len(self.flagged) if self.flagged else 0.0

    @property
    def unreliable(self) -> bool:
        return self.flagged_fraction > 0.05

    def to_json(self) -> dict:
        return {
            "observable": self.observable,
            "ensemble": {"kind": self.kind, "n": self.n, "d": self.d},
            "d": self.d,
            "trials": self.trials,
            "seed": self.seed,
            "mean": self.mean,
            "stderr": self.stderr,
            "flagged_fraction": self.flagged_fraction,
            "unreliable": self.unreliable,
            "aux": {k: v for k, v in self.aux.items() if not isinstance(v, (list, np.ndarray))},
        }

    def write_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\r\n")
            writer.writerow(["trial", "seed", "count", "flagged"])
            for t, (c, f) in enumerate(zip(self.counts, self.flagged)):
                writer.writerow([t, trial_seed_value(self.seed, t), c, int(f)])


def _trig_polys_n1(e: EnsembleSpec, xi: np.ndarray) -> list[TrigPoly]:
    """Collapse n=1 coefficient columns into per-trial trig polynomials."""
    d = e.d
    trials = xi.shape[1]
    a = np.zeros((d + 1, trials))
    b = np.zeros((d + 1, trials))
    sizes, _ = coefficient_layout(e)
    pos = 0
    for ell, w, size in zip(e.ells.tolist(), e.weights.tolist(), sizes.tolist()):
        if ell == 0:
            a[0] = w * xi[pos] / math.sqrt(2.0 * math.pi)
        else:
            a[ell] = w * xi[pos] / math.sqrt(math.pi)
            b[ell] = w * xi[pos + 1] / math.sqrt(math.pi)
        pos += size
    return [TrigPoly(a[:, t], b[:, t]) for t in range(trials)]


def _equator_trig_polys(e: EnsembleSpec, xi: np.ndarray) -> list[TrigPoly]:
    """Fourier-collapse the equator restriction of each trial in one batch."""
    d = e.d
    m = 1
    while m < 4 * (d + 1):
        m *= 2
    theta = 2.0 * math.pi * np.arange(m) / m
    pts = np.stack([np.cos(theta), np.sin(theta), np.zeros(m)], axis=1)
    vals = eval_points_matrix(e, pts, xi)  # (m, trials)
    spec = np.fft.rfft(vals, axis=0) / m
    a = 2.0 * spec.real
    a[0] *= 0.5
    b = -2.0 * spec.imag
    return [TrigPoly(a[: d + 1, t], b[: d + 1, t]) for t in range(vals.shape[1])]


def run_census(e: EnsembleSpec, observable: str, trials: int, seed: int = 0,
               grid_c: int = 12, R: int | None = None,
               threads: int = 1) -> CensusReport:
    """Monte-Carlo census of one observable.

    Per-trial seeds derive from the master seed; flagged trials are excluded
    from the mean but reported.  ``R`` overrides the default resolution
    ``grid_c * d`` for the grid observables.
    """
    if observable not in OBSERVABLES:
        raise DomainError(f"unknown observable {observable!r}")
    if trials < 1:
        raise DomainError("trials must be >= 1")

    counts: list[int] = [-1] * trials
    flags: list[bool] = [False] * trials
    aux: dict = {}

    if observable in ("circle_zeros", "slice_zeros"):
        if observable == "circle_zeros" and e.n != 1:
            raise DomainError("circle_zeros counts an n=1 field on its own circle")
        if observable == "slice_zeros" and e.n != 2:
            raise DomainError("slice_zeros restricts an n=2 field to the equator")
        batch = max(1, min(trials, 4096))
        done = 0
        while done < trials:
            b = min(batch, trials - done)
            seeds = [_trial_entropy(seed, done + t) for t in range(b)]
            xi = sample_coefficient_matrix(e, b, seeds)
            polys = (_trig_polys_n1(e, xi) if observable == "circle_zeros"
                     else _equator_trig_polys(e, xi))
            for t, poly in enumerate(polys):
                try:
                    counts[done + t] = count_circle_zeros(poly, e.d)
                except TrialFlagged:
                    flags[done + t] = True
            done += b
        return CensusReport(observable, e.kind, e.n, e.d, trials, seed, counts, flags, aux)

    # grid observables
    grid = get_grid(R if R is not None else grid_c * e.d)
    _require_resolution(e, grid, c=1 if R is not None else grid_c)
    tol = _zero_tolerance(e)
    minima_list = [0] * trials
    maxima_list = [0] * trials
    violations = 0

    batch = max(1, min(trials, int(2.5e7 / grid.n_nodes) or 1))
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        seeds = [_trial_entropy(seed, done + t) for t in range(b)]
        xi = sample_coefficient_matrix(e, b, seeds)
        vals = eval_points_matrix(e, grid.points, xi)

        def work(t: int):
            v = vals[:, t]
            comp, tie = nodal_components_from_values(v, grid, tol)
            mn, mx, plateau = local_extrema_from_values(v, grid)
            return comp, tie, mn, mx, plateau

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(work, range(b)))
        else:
            results = [work(t) for t in range(b)]

        for t, (comp, tie, mn, mx, plateau) in enumerate(results):
            k = done + t
            minima_list[k] = mn
            maxima_list[k] = mx
            flags[k] = tie or plateau
            counts[k] = comp if observable == "nodal_components" else mn + mx
            if comp > mn + mx:
                violations += 1
        done += b

    aux["minima"] = minima_list
    aux["maxima"] = maxima_list
    aux["components_exceed_extrema"] = violations
    aux["grid_R"] = grid.R
    return CensusReport(observable, e.kind, e.n, e.d, trials, seed, counts, flags, aux)


@dataclass
class SliceReport:
    """Slice experiment: equator zeros and nodal components of the same draws."""

    kind: str
    n: int
    d: int
    trials: int
    seed: int
    slice_zeros: list[int]
    components: list[int]
    flagged: list[bool]
    two_delta: float
    grid_R: int

    @property
    def mean_slice_zeros(self) -> float:
        clean = [z for z, f in zip(self.slice_zeros, self.flagged) if not f]
        return float(np.mean(clean))

    @property
    def stderr_slice_zeros(self) -> float:
        clean = [z for z, f in zip(self.slice_zeros, self.flagged) if not f]
        return float(np.std(clean, ddof=1) / math.sqrt(len(clean)))

    @property
    def mean_components(self) -> float:
        clean = [c for c, f in zip(self.components, self.flagged) if not f]
        return float(np.mean(clean))

    @property
    def component_ratio(self) -> float:
        """E[b0 on the sphere] / delta^2."""
        return self.mean_components / (self.two_delta / 2.0) ** 2

    def to_json(self) -> dict:
        return {
            "ensemble": {"kind": self.kind, "n": self.n, "d": self.d},
            "trials": self.trials,
            "seed": self.seed,
            "mean_slice_zeros": self.mean_slice_zeros,
            "stderr_slice_zeros": self.stderr_slice_zeros,
            "mean_components": self.mean_components,
            "two_delta": self.two_delta,
            "component_ratio": self.component_ratio,
            "flagged_fraction": sum(self.flagged) / len(self.flagged),
            "grid_R": self.grid_R,
        }


def slice_experiment(e: EnsembleSpec, trials: int, seed: int = 0,
                     grid_c: int = 12, R: int | None = None) -> SliceReport:
    """Count equator zeros and nodal components on the same field draws."""
    if e.n != 2:
        raise DomainError("the slice experiment runs on S^2 fields")
    if e.psi is None or not e.coherent:
        raise DomainError("the slice experiment requires a coherent ensemble")
    grid = get_grid(R if R is not None else grid_c * e.d)
    _require_resolution(e, grid, c=1 if R is not None else grid_c)
    tol = _zero_tolerance(e)
    two_delta = 2.0 * slice_parameter(e)

    zeros: list[int] = [-1] * trials
    comps: list[int] = [-1] * trials
    flags: list[bool] = [False] * trials
    batch = max(1, min(trials, int(2.5e7 / grid.n_nodes) or 1))
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        seeds = [_trial_entropy(seed, done + t) for t in range(b)]
        xi = sample_coefficient_matrix(e, b, seeds)
        polys = _equator_trig_polys(e, xi)
        vals = eval_points_matrix(e, grid.points, xi)
        for t in range(b):
            k = done + t
            try:
                zeros[k] = count_circle_zeros(polys[t], e.d)
            except TrialFlagged:
                flags[k] = True
            comp, tie = nodal_components_from_values(vals[:, t], grid, tol)
            comps[k] = comp
            flags[k] = flags[k] or tie
        done += b
    return SliceReport(e.kind, e.n, e.d, trials, seed, zeros, comps, flags,
                       two_delta, grid.R)
