"""Time-series k-means over sampled target trajectories, producing virtual targets.

Every sample lives on the same time grid, so a trajectory is treated as one
flat vector of ``2 * n_t`` coordinates and compared with squared Euclidean
distance summed over time steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .prediction import SampleBundle, Trajectory

DEFAULT_TOL = 1.0
DEFAULT_MAX_ITER = 50


@dataclass(eq=False)
class KMeansResult:
    centroids: np.ndarray  # (k, n_t, 2)
    labels: np.ndarray  # (n_samples,)
    objective: list[float] = field(default_factory=list)  # after every Lloyd update
    n_iter: int = 0

    def trajectories(self, times) -> list[Trajectory]:
        return [Trajectory(times, c) for c in self.centroids]


def _as_array(trajs, times=None) -> tuple[np.ndarray, np.ndarray | None]:
    if isinstance(trajs, np.ndarray):
        if trajs.ndim != 3 or trajs.shape[-1] != 2:
            raise ValueError(f"expected (n, n_t, 2) array, got {trajs.shape}")
        return trajs.astype(float, copy=False), times
    trajs = list(trajs)
    if not trajs:
        raise ValueError("no trajectories given")
    grid = trajs[0].times if times is None else np.asarray(times)
    for tr in trajs:
        if tr.times.shape != grid.shape or not np.all(tr.times == grid):
            raise ValueError("trajectories are not on a common time grid")
    return np.stack([tr.positions for tr in trajs]), grid


def _sq_dists(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Squared distances between rows of x (s, d) and c (k, d), clipped at zero."""
    d = (x * x).sum(1)[:, None] - 2.0 * x @ c.T + (c * c).sum(1)[None, :]
    np.maximum(d, 0.0, out=d)
    return d


def objective(samples: np.ndarray, centroids: np.ndarray, labels: np.ndarray) -> float:
    """Sum over samples of the squared trajectory distance to the assigned centroid."""
    diff = samples - centroids[labels]
    return float(np.sum(diff * diff))


def kmeans_plus_plus(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """D^2-weighted seeding; indices of the chosen rows of ``x`` (s, d)."""
    n = x.shape[0]
    chosen = [int(rng.integers(n))]
    closest = _sq_dists(x, x[chosen[0]][None, :])[:, 0]
    for _ in range(1, k):
        total = closest.sum()
        if total > 0.0:
            idx = int(np.searchsorted(np.cumsum(closest), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        else:
            # every sample coincides with a chosen centre
            idx = int(rng.integers(n))
        chosen.append(idx)
        np.minimum(closest, _sq_dists(x, x[idx][None, :])[:, 0], out=closest)
    return np.array(chosen)


def ts_kmeans(
    samples,
    k: int,
    init=None,
    *,
    rng: np.random.Generator | None = None,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    track_objective: bool = True,
) -> KMeansResult:
    """Lloyd's algorithm on same-grid trajectories.

    ``samples`` and ``init`` may be lists of :class:`Trajectory` or arrays of
    shape (n, n_t, 2). Without ``init`` the centres are seeded by k-means++
    from ``rng``. Iteration stops once every centroid moves less than ``tol``
    metres at every time step, or after ``max_iter`` updates. The returned
    centroids are exactly the means of the returned labels.
    """
    x3, grid = _as_array(samples)
    n, n_t, _ = x3.shape
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= {n}, got k={k}")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    x = x3.reshape(n, -1)
    # centre the data so the expanded distance formula keeps its precision
    shift = x.mean(axis=0)
    xc = x - shift

    if init is None:
        if rng is None:
            raise ValueError("k-means++ seeding needs an rng")
        c = xc[kmeans_plus_plus(xc, k, rng)].copy()
    else:
        c3, init_grid = _as_array(init)
        if c3.shape[1:] != (n_t, 2):
            raise ValueError("init centroids are on a different time grid than the samples")
        if grid is not None and init_grid is not None and not np.array_equal(grid, init_grid):
            raise ValueError("init centroids are on a different time grid than the samples")
        if c3.shape[0] != k:
            raise ValueError(f"expected {k} init centroids, got {c3.shape[0]}")
        c = c3.reshape(k, -1) - shift

    labels = np.zeros(n, dtype=np.int64)
    obj = np.empty(max_iter if track_objective else 0)
    c, it = _kernels.lloyd(np.ascontiguousarray(xc), np.ascontiguousarray(c, dtype=float), max_iter, tol, labels, obj)
    history = [float(v) for v in obj[:it]]

    centroids = (c + shift).reshape(k, n_t, 2)
    return KMeansResult(centroids, labels, history, it)


@dataclass(eq=False)
class VirtualTargetSet:
    """Virtual-target trajectories, row ``i`` pursued by interceptor ``owners[i]``."""

    centroids: np.ndarray  # (k, n_t, 2)
    horizon_times: np.ndarray
    owners: list[int]
    prev_centroids: np.ndarray | None = None
    prev_times: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.owners)

    @property
    def vts(self) -> list[Trajectory]:
        return [Trajectory(self.horizon_times, c) for c in self.centroids]

    def index_of(self, interceptor_id: int) -> int:
        return self.owners.index(interceptor_id)

    def vt_for(self, interceptor_id: int) -> Trajectory:
        return Trajectory(self.horizon_times, self.centroids[self.index_of(interceptor_id)])


def regrid(centroids: np.ndarray, old_times: np.ndarray, new_times: np.ndarray) -> np.ndarray:
    """Linearly resample (k, n_old, 2) trajectories onto ``new_times``.

    Times outside the old grid are extrapolated from the two nearest end points.
    """
    old_times = np.asarray(old_times, dtype=float)
    new_times = np.asarray(new_times, dtype=float)
    if old_times.size == 1:
        return np.repeat(centroids, new_times.size, axis=1)
    hi = np.clip(np.searchsorted(old_times, new_times, side="right"), 1, old_times.size - 1)
    lo = hi - 1
    w = (new_times - old_times[lo]) / (old_times[hi] - old_times[lo])
    return centroids[:, lo, :] + w[None, :, None] * (centroids[:, hi, :] - centroids[:, lo, :])


def update_vts(
    bundle: SampleBundle,
    owners: list[int],
    prev: VirtualTargetSet | None,
    rng: np.random.Generator,
    *,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
) -> VirtualTargetSet:
    """Re-cluster a fresh bundle into ``len(owners)`` virtual targets.

    With ``prev`` the clustering is warm-started from its centroids, regridded
    onto the new horizon, and row order (hence interceptor pairing) is kept.
    """
    k = len(owners)
    if k < 1:
        raise ValueError("need at least one virtual target")
    times = bundle.horizon_times
    if prev is None:
        init = None
    else:
        if list(prev.owners) != list(owners):
            raise ValueError(f"owner mismatch: previous set {prev.owners}, requested {owners}")
        init = regrid(prev.centroids, prev.horizon_times, times)
    res = ts_kmeans(bundle.positions, k, init, rng=rng, max_iter=max_iter, tol=tol, track_objective=False)
    return VirtualTargetSet(
        centroids=res.centroids,
        horizon_times=times,
        owners=list(owners),
        prev_centroids=None if prev is None else prev.centroids,
        prev_times=None if prev is None else prev.horizon_times,
    )


def remove_vt(vt_set: VirtualTargetSet, index: int) -> VirtualTargetSet:
    """Drop one virtual target; the others keep their owners and their order."""
    if not 0 <= index < len(vt_set):
        raise IndexError(f"virtual target index {index} out of range for {len(vt_set)} targets")
    keep = [i for i in range(len(vt_set)) if i != index]
    return VirtualTargetSet(
        centroids=vt_set.centroids[keep],
        horizon_times=vt_set.horizon_times,
        owners=[vt_set.owners[i] for i in keep],
        prev_centroids=None if vt_set.prev_centroids is None else vt_set.prev_centroids[keep],
        prev_times=vt_set.prev_times,
    )
