"""Gaussian mixture anomaly model over hidden features.

Diagonal-covariance GMM fitted by EM (log-space responsibilities), component
count chosen by BIC, and an alpha-percentile threshold over training
log-likelihood scores.  Higher score = more normal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_LOG_2PI = float(np.log(2.0 * np.pi))


class DensityError(RuntimeError):
    """EM fitting failed (repeated degenerate components)."""


@dataclass(frozen=True)
class GmmConfig:
    max_iters: int = 200
    tol: float = 1e-6
    variance_floor: float = 1e-6
    seed: int = 0


@dataclass(eq=False)
class GmmModel:
    weights: np.ndarray  # (C,)
    means: np.ndarray  # (C, H)
    variances: np.ndarray  # (C, H) diagonal, floored
    loglik_trace: tuple[float, ...] = field(default=(), repr=False)

    @property
    def n_components(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]


@dataclass(frozen=True)
class Threshold:
    value: float
    alpha: float


def _component_log_densities(model: GmmModel, x: np.ndarray) -> np.ndarray:
    """log(pi_c) + log N(x_n; mu_c, diag sigma2_c) as an (n, C) matrix."""
    inv = 1.0 / model.variances  # (C, H)
    quad = (
        0.5 * (x * x) @ inv.T
        - x @ (model.means * inv).T
        + 0.5 * np.sum(model.means**2 * inv, axis=1)
    )
    log_norm = 0.5 * np.sum(np.log(model.variances), axis=1) + 0.5 * model.dim * _LOG_2PI
    return np.log(model.weights) - log_norm - quad


def _logsumexp(a: np.ndarray, axis: int = -1) -> np.ndarray:
    m = a.max(axis=axis, keepdims=True)
    return (m + np.log(np.exp(a - m).sum(axis=axis, keepdims=True))).squeeze(axis)


def log_density(model: GmmModel, x: np.ndarray) -> np.ndarray:
    """Per-sample mixture log-density, computed via log-sum-exp."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    return _logsumexp(_component_log_densities(model, x), axis=1)


def score(model: GmmModel, feature: np.ndarray) -> float:
    """Normality score (log-likelihood, nats) of a single feature vector."""
    return float(log_density(model, np.asarray(feature, dtype=np.float64)[None, :])[0])


def _kmeanspp_centers(x: np.ndarray, c: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centers = [x[int(rng.integers(n))]]
    d2 = np.sum((x - centers[0]) ** 2, axis=1)
    for _ in range(1, c):
        total = d2.sum()
        if total <= 0.0:
            pick = int(rng.integers(n))
        else:
            pick = int(rng.choice(n, p=d2 / total))
        centers.append(x[pick])
        d2 = np.minimum(d2, np.sum((x - centers[-1]) ** 2, axis=1))
    return np.stack(centers)


def _init_model(x: np.ndarray, c: int, floor: float, rng: np.random.Generator) -> GmmModel:
    n, h = x.shape
    centers = _kmeanspp_centers(x, c, rng)
    assign = np.argmin(
        ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2), axis=1
    )
    global_var = np.maximum(x.var(axis=0), floor)
    weights = np.empty(c)
    means = np.empty((c, h))
    variances = np.empty((c, h))
    for k in range(c):
        pts = x[assign == k]
        if pts.shape[0] == 0:
            weights[k] = 1.0
            means[k] = centers[k]
            variances[k] = global_var
        else:
            weights[k] = pts.shape[0]
            means[k] = pts.mean(axis=0)
            variances[k] = np.maximum(pts.var(axis=0), floor)
    weights /= weights.sum()
    return GmmModel(weights, means, variances)


def fit_gmm(features, n_components: int, config: GmmConfig = GmmConfig()) -> GmmModel:
    """Fit a diagonal GMM by EM from a k-means++ style seeded initialization.

    Stops when the log-likelihood improves by less than ``config.tol`` or
    after ``config.max_iters`` iterations.  The per-iteration log-likelihood
    trace is kept on the returned model.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2:
        x = np.atleast_2d(x)
    n = x.shape[0]
    if n_components < 1:
        raise ValueError("n_components must be >= 1")
    if n < n_components:
        raise ValueError(f"need at least {n_components} samples, got {n}")
    rng = np.random.default_rng(config.seed)
    model = _init_model(x, n_components, config.variance_floor, rng)
    global_var = np.maximum(x.var(axis=0), config.variance_floor)
    trace: list[float] = []
    reinitialized = np.zeros(n_components, dtype=bool)
    prev_ll = -np.inf
    for _ in range(config.max_iters):
        comp = _component_log_densities(model, x)
        per_sample = _logsumexp(comp, axis=1)
        ll = float(per_sample.sum())
        trace.append(ll)
        if ll - prev_ll < config.tol and np.isfinite(prev_ll):
            break
        prev_ll = ll
        resp = np.exp(comp - per_sample[:, None])
        mass = resp.sum(axis=0)  # (C,)
        degenerate = mass < 1e-10
        if degenerate.any():
            for k in np.flatnonzero(degenerate):
                if reinitialized[k]:
                    raise DensityError(
                        f"component {k} degenerated twice during EM "
                        f"(n={n}, C={n_components}); data cannot support this fit"
                    )
                reinitialized[k] = True
                worst = int(np.argmin(per_sample))
                model.means[k] = x[worst]
                model.variances[k] = global_var
                model.weights[k] = 1.0 / n
            model.weights /= model.weights.sum()
            prev_ll = -np.inf
            continue
        weights = mass / n
        means = (resp.T @ x) / mass[:, None]
        sq = (resp.T @ (x * x)) / mass[:, None]
        variances = np.maximum(sq - means**2, config.variance_floor)
        model = GmmModel(weights, means, variances)
    model.loglik_trace = tuple(trace)
    return model


def bic(model: GmmModel, features) -> float:
    """k*ln(n) - 2*ln(L), with k = (C-1) + C*H + C*H free parameters."""
    x = np.atleast_2d(np.asarray(features, dtype=np.float64))
    n = x.shape[0]
    c, h = model.n_components, model.dim
    k = (c - 1) + 2 * c * h
    ll = float(log_density(model, x).sum())
    return k * float(np.log(n)) - 2.0 * ll


def select_components(
    features, max_components: int = 10, config: GmmConfig = GmmConfig()
) -> tuple[int, GmmModel]:
    """Fit C in 1..max_components and keep the BIC-minimizing fit (ties -> smaller C)."""
    if max_components < 1:
        raise ValueError("max_components must be >= 1")
    x = np.atleast_2d(np.asarray(features, dtype=np.float64))
    best: tuple[float, int, GmmModel] | None = None
    errors: list[str] = []
    for c in range(1, max_components + 1):
        if c > x.shape[0]:
            break
        try:
            model = fit_gmm(x, c, config)
        except DensityError as e:
            errors.append(str(e))
            continue
        b = bic(model, x)
        if best is None or b < best[0]:
            best = (b, c, model)
    if best is None:
        raise DensityError("all GMM fits failed: " + "; ".join(errors))
    return best[1], best[2]


def percentile_threshold(scores, alpha: float) -> Threshold:
    """Linear-interpolation alpha-percentile of the given normality scores."""
    s = np.asarray(scores, dtype=np.float64)
    if s.size == 0:
        raise ValueError("scores must be non-empty")
    if not 0.0 <= alpha <= 100.0:
        raise ValueError(f"alpha must be in [0, 100], got {alpha}")
    return Threshold(float(np.percentile(s, alpha)), float(alpha))
