"""Daily mode fitting: a diagonal-covariance Gaussian mixture via EM.

Each trading day's argument embeddings are clustered into ``k`` modes. The
implementation is deliberately self-contained:

* log-space densities with a canonical log-sum-exp (exponentials are summed
  in sorted order, so results do not depend on component ordering — fits are
  bit-equivariant under relabelling, which downstream invariance tests rely on),
* variance floor 1e-6 and mixing-weight floor 1e-6 (renormalised),
* k-means++ seeding from an explicit seed, or a warm start from a previous
  day's means when the component count matches,
* convergence when the relative log-likelihood improvement drops below 1e-6,
  capped at 200 iterations; the likelihood sequence is retained so callers can
  assert EM monotonicity.

The responsibilities returned are the posterior under the *final* parameters
(one extra E-step after convergence), so recomputing them from a serialised
mode set reproduces them bit-for-bit.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field

import numpy as np

from .embedding import ArgumentEmbedding
from .errors import (DimensionMismatch, EmptyInput, NumericalFailure, ShapeMismatch)

log = logging.getLogger(__name__)

VARIANCE_FLOOR = 1e-6
WEIGHT_FLOOR = 1e-6
REL_TOL = 1e-6
MAX_ITER = 200
_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class DailyModeSet:
    """Fitted mixture for one day: weights, means, diagonal variances."""

    day: str
    k_target: int
    k_actual: int
    weights: np.ndarray    # (k,)
    means: np.ndarray      # (k, d)
    variances: np.ndarray  # (k, d)
    log_likelihood: float
    loglik_history: list[float] = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.means = np.asarray(self.means, dtype=np.float64)
        self.variances = np.asarray(self.variances, dtype=np.float64)
        k, d = self.means.shape
        if self.weights.shape != (k,) or self.variances.shape != (k, d):
            raise ShapeMismatch("weights/means/variances shapes disagree")
        if k != self.k_actual:
            raise ShapeMismatch(f"k_actual {self.k_actual} != parameter rows {k}")
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.means))
                and np.all(np.isfinite(self.variances))):
            raise NumericalFailure("mode parameters must be finite")
        if abs(float(_sorted_sum(self.weights)) - 1.0) > 1e-9:
            raise NumericalFailure("mixing weights must sum to 1")
        if np.any(self.variances < VARIANCE_FLOOR * (1 - 1e-12)):
            raise NumericalFailure("variances below floor")
        for arr in (self.weights, self.means, self.variances):
            arr.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def to_doc(self) -> dict:
        return {
            "day": self.day,
            "k": self.k_actual,
            "dim": self.dim,
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
            "loglik": self.log_likelihood,
        }

    @classmethod
    def from_doc(cls, doc: dict, k_target: int | None = None) -> "DailyModeSet":
        return cls(day=doc["day"], k_target=k_target or doc["k"], k_actual=doc["k"],
                   weights=np.array(doc["weights"]), means=np.array(doc["means"]),
                   variances=np.array(doc["variances"]), log_likelihood=doc["loglik"])


@dataclass
class ResponsibilityMatrix:
    """Per-argument posterior over the day's modes; rows sum to 1."""

    day: str
    argument_ids: list[str]
    matrix: np.ndarray  # (n, k)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != len(self.argument_ids):
            raise ShapeMismatch("responsibility matrix shape does not match ids")
        rowsums = self.matrix.sum(axis=1)
        if np.any(np.abs(rowsums - 1.0) > 1e-9) or np.any(self.matrix < -1e-15):
            raise NumericalFailure("responsibility rows must be a distribution")
        self.matrix.setflags(write=False)

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update("\n".join(self.argument_ids).encode("utf-8"))
        h.update(np.ascontiguousarray(self.matrix, dtype="<f8").tobytes())
        return h.hexdigest()


def _sorted_sum(values: np.ndarray) -> float:
    # canonical reduction: independent of input order (ties identical by value)
    return float(np.sum(np.sort(values)))


def _logsumexp_rows(logp: np.ndarray) -> np.ndarray:
    """Row-wise log-sum-exp with exponentials summed in sorted order."""
    m = logp.max(axis=1, keepdims=True)
    z = np.exp(logp - m)
    return m[:, 0] + np.log(np.sort(z, axis=1).sum(axis=1))


def _log_gaussians(X: np.ndarray, means: np.ndarray, variances: np.ndarray) -> np.ndarray:
    """(n, k) matrix of log N(x_i | mu_k, diag(v_k))."""
    d = X.shape[1]
    logdet = np.sum(np.log(variances), axis=1)                     # (k,)
    diff = X[:, None, :] - means[None, :, :]                       # (n, k, d)
    quad = np.sum(diff * diff / variances[None, :, :], axis=2)     # (n, k)
    return -0.5 * (d * _LOG_2PI + logdet[None, :] + quad)


def _posterior(weights, means, variances, X) -> tuple[np.ndarray, np.ndarray]:
    """Returns (responsibilities, per-point log-likelihood)."""
    logp = np.log(weights)[None, :] + _log_gaussians(X, means, variances)
    norm = _logsumexp_rows(logp)
    resp = np.exp(logp - norm[:, None])
    return resp, norm


def _kmeanspp_means(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = [X[int(rng.integers(n))]]
    for _ in range(1, k):
        d2 = np.min([(np.square(X - c)).sum(axis=1) for c in centers], axis=0)
        total = d2.sum()
        if total <= 0.0:  # all points coincide with chosen centers
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers.append(X[idx])
    return np.array(centers)


def _stack_embeddings(embeddings) -> tuple[np.ndarray, list[str], str]:
    if len(embeddings) == 0:
        raise EmptyInput("cannot fit modes on zero embeddings")
    day = embeddings[0].day
    dims = {e.vector.shape[0] for e in embeddings}
    if len(dims) != 1:
        raise DimensionMismatch(f"mixed embedding dims {sorted(dims)}")
    if any(e.day != day for e in embeddings):
        raise ShapeMismatch("embeddings span more than one day")
    X = np.vstack([e.vector for e in embeddings]).astype(np.float64)
    return X, [e.argument_id for e in embeddings], day


def fit_daily_modes(embeddings, k_target: int, *, init: DailyModeSet | None = None,
                    rng_seed: int = 0,
                    n_init: int = 4) -> tuple[DailyModeSet, ResponsibilityMatrix]:
    """Fit the day's mixture.

    ``k_actual = min(k_target, n)``. When ``init`` is given and its component
    count equals ``k_actual`` (and dims agree), its means seed the fit (warm
    start, single run); weights and variances always reinitialise from the
    data. Cold starts run ``n_init`` seeded k-means++ restarts and keep the
    fit with the best final log-likelihood (first wins ties), so one unlucky
    seeding cannot lock the whole run into a bad optimum.
    """
    X, ids, day = _stack_embeddings(embeddings)
    n, d = X.shape
    if k_target < 1:
        raise ValueError("k_target must be >= 1")
    if n_init < 1:
        raise ValueError("n_init must be >= 1")
    k = min(k_target, n)

    if init is not None and init.k_actual == k and init.dim == d:
        starts = [np.array(init.means, dtype=np.float64)]
    else:
        rng = np.random.default_rng(rng_seed)
        starts = [_kmeanspp_means(X, k, rng) for _ in range(n_init)]

    best: tuple[DailyModeSet, ResponsibilityMatrix] | None = None
    for start_means in starts:
        fitted = _run_em(X, ids, day, k_target, k, start_means)
        if best is None or fitted[0].log_likelihood > best[0].log_likelihood:
            best = fitted
    assert best is not None
    return best


def _run_em(X: np.ndarray, ids: list[str], day: str, k_target: int, k: int,
            means: np.ndarray) -> tuple[DailyModeSet, ResponsibilityMatrix]:
    means = np.array(means, dtype=np.float64)
    data_var = np.maximum(X.var(axis=0), VARIANCE_FLOOR)
    variances = np.tile(data_var, (k, 1))
    weights = np.full(k, 1.0 / k)

    history: list[float] = []
    prev_ll = None
    for _ in range(MAX_ITER):
        resp, norm = _posterior(weights, means, variances, X)
        ll = float(np.sum(norm))
        if not np.isfinite(ll):
            raise NumericalFailure("non-finite log-likelihood during EM")
        history.append(ll)
        if prev_ll is not None and abs(ll - prev_ll) <= REL_TOL * max(1.0, abs(prev_ll)):
            break
        prev_ll = ll
        # M-step (per component, so results are independent of component order)
        nk = resp.sum(axis=0)
        active = nk > 1e-10
        safe_nk = np.where(active, nk, 1.0)
        new_means = (resp.T @ X) / safe_nk[:, None]
        diff = X[:, None, :] - new_means[None, :, :]
        new_vars = np.sum(resp[:, :, None] * diff * diff, axis=0) / safe_nk[:, None]
        means = np.where(active[:, None], new_means, means)
        variances = np.where(active[:, None], np.maximum(new_vars, VARIANCE_FLOOR), variances)
        weights = nk / _sorted_sum(nk)
        weights = np.maximum(weights, WEIGHT_FLOOR)
        weights = weights / _sorted_sum(weights)

    # final E-step so stored responsibilities match the returned parameters
    resp, norm = _posterior(weights, means, variances, X)
    ll = float(np.sum(norm))
    history.append(ll)
    mode_set = DailyModeSet(day=day, k_target=k_target, k_actual=k, weights=weights,
                            means=means, variances=variances, log_likelihood=ll,
                            loglik_history=history)
    resp_matrix = ResponsibilityMatrix(day=day, argument_ids=ids, matrix=resp)
    return mode_set, resp_matrix


def posterior_under(mode_set: DailyModeSet, vector: np.ndarray) -> np.ndarray:
    """Posterior mode probabilities of one embedding under a fitted day.

    With a single mode this is exactly ``[1.0]``.
    """
    vector = np.asarray(vector, dtype=np.float64)
    if vector.ndim != 1 or vector.shape[0] != mode_set.dim:
        raise DimensionMismatch(
            f"vector dim {vector.shape} incompatible with mode dim {mode_set.dim}")
    resp, _ = _posterior(mode_set.weights, mode_set.means, mode_set.variances,
                         vector[None, :])
    return resp[0]


def posterior_matrix(mode_set: DailyModeSet, X: np.ndarray) -> np.ndarray:
    """Batched :func:`posterior_under` for an (n, d) array."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != mode_set.dim:
        raise DimensionMismatch("matrix columns do not match mode dim")
    resp, _ = _posterior(mode_set.weights, mode_set.means, mode_set.variances, X)
    return resp


# --- optional frozen projection ----------------------------------------------

@dataclass
class Projection:
    """A frozen orthonormal linear map to a lower-dimensional working space.

    Purely linear (no centering), so distances can only contract and the same
    map applied on every day keeps centroids comparable across days.
    """

    basis: np.ndarray  # (out_dim, in_dim), orthonormal rows

    def __post_init__(self):
        self.basis = np.asarray(self.basis, dtype=np.float64)
        gram = self.basis @ self.basis.T
        if not np.allclose(gram, np.eye(self.basis.shape[0]), atol=1e-8):
            raise NumericalFailure("projection basis rows must be orthonormal")
        self.basis.setflags(write=False)

    def apply(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        one = X.ndim == 1
        if one:
            X = X[None, :]
        if X.shape[1] != self.basis.shape[1]:
            raise DimensionMismatch("projection input dim mismatch")
        out = X @ self.basis.T
        return out[0] if one else out

    def to_doc(self) -> dict:
        return {"basis": self.basis.tolist()}

    @classmethod
    def from_doc(cls, doc: dict) -> "Projection":
        return cls(basis=np.array(doc["basis"]))


def fit_projection(X: np.ndarray, out_dim: int) -> Projection:
    """Fit the top principal directions of a burn-in corpus (then freeze)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise EmptyInput("projection fit needs at least two vectors")
    out_dim = min(out_dim, X.shape[1], X.shape[0])
    centered = X - X.mean(axis=0, keepdims=True)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    return Projection(basis=vt[:out_dim])
