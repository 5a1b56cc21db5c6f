"""K-means clustering of question embeddings, elbow-rule k selection, and
2-D PCA projections for diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .scores import QuestionEmbedding


class ClusteringError(ValueError):
    pass


MAX_LLOYD_ITERATIONS = 300


@dataclass
class ClusterModel:
    k: int
    centroids: np.ndarray  # shape (k, d)
    assignment: dict[str, int]  # item_id -> cluster index
    inertia: float
    seed: int
    _vectors: dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def members(self, cluster: int) -> list[str]:
        if not 0 <= cluster < self.k:
            raise ClusteringError(f"cluster index {cluster} out of range [0, {self.k})")
        return sorted(i for i, c in self.assignment.items() if c == cluster)


@dataclass(frozen=True)
class InertiaCurve:
    points: tuple[tuple[int, float], ...]  # (k, inertia), k strictly increasing

    def __post_init__(self) -> None:
        ks = [k for k, _ in self.points]
        if ks != sorted(set(ks)):
            raise ClusteringError("inertia curve k values must be strictly increasing")


@dataclass(frozen=True)
class PCAProjection:
    coordinates: dict[str, tuple[float, float]]
    variance_ratios: tuple[float, float]


def _embedding_matrix(
    embeddings: list[QuestionEmbedding],
) -> tuple[list[str], np.ndarray]:
    if not embeddings:
        raise ClusteringError("no embeddings given")
    ids = [e.item_id for e in embeddings]
    X = np.asarray([e.vector for e in embeddings], dtype=float)
    if X.ndim != 2:
        raise ClusteringError("embeddings must share a fixed dimension")
    return ids, X


def _kmeans_pp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: each new center drawn proportionally to squared
    distance from the nearest existing center."""
    n = X.shape[0]
    centers = [X[rng.integers(n)]]
    for _ in range(k - 1):
        d2 = np.min(
            ((X[:, None, :] - np.asarray(centers)[None, :, :]) ** 2).sum(axis=2), axis=1
        )
        total = d2.sum()
        if total <= 0:
            # All remaining points coincide with a center; any choice works.
            centers.append(X[rng.integers(n)])
            continue
        centers.append(X[rng.choice(n, p=d2 / total)])
    return np.asarray(centers)


def _lloyd(X: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Run Lloyd iterations to an assignment fixed point (or iteration cap)."""
    k = centers.shape[0]
    labels = None
    prev_inertia = np.inf
    for _ in range(MAX_LLOYD_ITERATIONS):
        d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = d2.argmin(axis=1)
        # Keep every cluster populated: hand the point farthest from its
        # center to each empty cluster.
        for c in range(k):
            if not (new_labels == c).any():
                far = d2[np.arange(len(X)), new_labels].argmax()
                new_labels[far] = c
                d2_far = ((X - X[far]) ** 2).sum(axis=1)
                d2[:, c] = d2_far
        inertia = float(d2[np.arange(len(X)), new_labels].sum())
        if inertia > prev_inertia + 1e-9:
            raise ClusteringError("inertia increased across Lloyd iterations")
        prev_inertia = inertia
        if labels is not None and (new_labels == labels).all():
            break
        labels = new_labels
        centers = np.asarray([X[labels == c].mean(axis=0) for c in range(k)])
    d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    inertia = float(d2[np.arange(len(X)), labels].sum())
    return labels, centers, inertia


def kmeans(
    embeddings: list[QuestionEmbedding],
    k: int,
    seed: int = 0,
    restarts: int = 10,
) -> ClusterModel:
    """K-means with k-means++ seeding; best of ``restarts`` runs by inertia."""
    ids, X = _embedding_matrix(embeddings)
    if k < 1:
        raise ClusteringError(f"k must be >= 1, got {k}")
    n_distinct = len(np.unique(X, axis=0))
    if k > n_distinct:
        raise ClusteringError(f"k={k} exceeds the {n_distinct} distinct points")

    best: tuple[float, np.ndarray, np.ndarray] | None = None
    for restart in range(max(1, restarts)):
        rng = np.random.default_rng((seed, restart))
        centers = _kmeans_pp_init(X, k, rng)
        labels, centers, inertia = _lloyd(X, centers)
        if best is None or inertia < best[0] - 1e-12:
            best = (inertia, labels, centers)

    inertia, labels, centers = best
    return ClusterModel(
        k=k,
        centroids=centers,
        assignment={ids[i]: int(labels[i]) for i in range(len(ids))},
        inertia=inertia,
        seed=seed,
        _vectors={ids[i]: X[i] for i in range(len(ids))},
    )


def inertia_curve(
    embeddings: list[QuestionEmbedding],
    k_max: int,
    seed: int = 0,
    restarts: int = 10,
) -> InertiaCurve:
    """Inertia at k = 1..k_max (capped at the number of distinct points)."""
    _, X = _embedding_matrix(embeddings)
    n_distinct = len(np.unique(X, axis=0))
    points = []
    for k in range(1, min(k_max, n_distinct) + 1):
        model = kmeans(embeddings, k, seed=seed, restarts=restarts)
        points.append((k, model.inertia))
    return InertiaCurve(points=tuple(points))


def elbow_select(curve: InertiaCurve) -> int:
    """Pick k at the sharpest bend: the interior point maximizing the second
    difference of the inertia curve. Ties break toward smaller k."""
    pts = curve.points
    if len(pts) < 3:
        raise ClusteringError("elbow selection needs at least 3 curve points")
    best_k, best_gain = None, -np.inf
    for i in range(1, len(pts) - 1):
        gain = pts[i - 1][1] - 2 * pts[i][1] + pts[i + 1][1]
        if gain > best_gain + 1e-12:
            best_k, best_gain = pts[i][0], gain
    return best_k


def pca_project(embeddings: list[QuestionEmbedding]) -> PCAProjection:
    """Project onto the top-2 principal components of the mean-centered data.

    Sign convention: each axis is flipped so its largest-magnitude loading
    is positive, making output deterministic across SVD implementations.
    """
    ids, X = _embedding_matrix(embeddings)
    if X.shape[0] < 2:
        raise ClusteringError("PCA needs at least 2 points")
    if X.shape[1] < 2:
        raise ClusteringError("PCA needs dimension >= 2")
    Xc = X - X.mean(axis=0)
    if not Xc.any():
        raise ClusteringError("degenerate input: all points identical")
    _, s, Vt = np.linalg.svd(Xc, full_matrices=False)
    components = Vt[:2]
    for j in range(2):
        lead = np.argmax(np.abs(components[j]))
        if components[j][lead] < 0:
            components[j] = -components[j]
    coords = Xc @ components.T
    total = float((s**2).sum())
    ratios = (float(s[0] ** 2 / total), float(s[1] ** 2 / total) if len(s) > 1 else 0.0)
    return PCAProjection(
        coordinates={ids[i]: (float(coords[i, 0]), float(coords[i, 1])) for i in range(len(ids))},
        variance_ratios=ratios,
    )


def nearest_to_centroid(model: ClusterModel, cluster: int) -> str:
    """Member closest to its centroid; ties break by lexicographic id."""
    members = model.members(cluster)
    if not members:
        raise ClusteringError(f"cluster {cluster} is empty")
    centroid = model.centroids[cluster]
    return min(
        members,
        key=lambda i: (float(((model._vectors[i] - centroid) ** 2).sum()), i),
    )
