"""Ordered logit model: class probabilities, likelihood and Newton-Raphson MLE.

The latent index is ``U = x.beta + eps`` with standard-logistic ``eps``; an
observation falls in class ``j`` when ``C[j-1] < U <= C[j]`` with
``C[-1] = -inf`` and ``C[J-1] = +inf``.

Probabilities of a class are computed as ``L(b) - L(a)`` with
``a = C[j-1] - x.beta`` and ``b = C[j] - x.beta``, using the factorisation

    L(b) - L(a) = L(b) * L(-a) * (1 - exp(a - b))

which is nonnegative by construction and free of cancellation in both tails.
The optimiser works on unconstrained parameters ``theta`` with
``C[0] = theta[0]`` and ``C[j] = C[j-1] + exp(theta[j])``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, EstimationError, SeparationWarning
from .schema import DesignMatrix


def logistic_cdf(z):
    """Standard logistic CDF, overflow-free for any finite or infinite input."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out if out.ndim else float(out)


def log_logistic_cdf(z):
    """log L(z) = -log(1 + exp(-z))."""
    return -np.logaddexp(0.0, -np.asarray(z, dtype=float))


@dataclass(frozen=True)
class OrderedLogitParams:
    beta: np.ndarray
    cutoffs: np.ndarray

    def __post_init__(self):
        beta = np.array(self.beta, dtype=float).reshape(-1)
        cutoffs = np.array(self.cutoffs, dtype=float).reshape(-1)
        if cutoffs.size < 1:
            raise ValueError("need at least one cut-off point")
        if not np.all(np.isfinite(cutoffs)) or not np.all(np.isfinite(beta)):
            raise ValueError("parameters must be finite")
        if np.any(np.diff(cutoffs) <= 0):
            raise ValueError(f"cut-off points must be strictly increasing, got {cutoffs.tolist()}")
        beta.flags.writeable = False
        cutoffs.flags.writeable = False
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "cutoffs", cutoffs)

    @property
    def n_classes(self) -> int:
        return self.cutoffs.size + 1

    @property
    def vector(self) -> np.ndarray:
        """Natural parameter vector (beta, cutoffs)."""
        return np.concatenate([self.beta, self.cutoffs])

    @classmethod
    def from_vector(cls, vec, n_beta: int) -> "OrderedLogitParams":
        vec = np.asarray(vec, dtype=float)
        return cls(vec[:n_beta], vec[n_beta:])


def _check_dims(X: np.ndarray, params: OrderedLogitParams):
    if X.shape[-1] != params.beta.size:
        raise DataError(f"design has {X.shape[-1]} columns but beta has {params.beta.size} entries")


def _bounds(cutoffs: np.ndarray, eta: np.ndarray, y: np.ndarray):
    """Lower/upper latent bounds (a, b) for each observation's observed class."""
    ext = np.concatenate([[-np.inf], cutoffs, [np.inf]])
    return ext[y] - eta, ext[y + 1] - eta


def _log_interval(a, b):
    """log(L(b) - L(a)) for a < b, elementwise."""
    with np.errstate(divide="ignore"):
        return log_logistic_cdf(b) + log_logistic_cdf(-a) + np.log(-np.expm1(a - b))


def class_probabilities(x, params: OrderedLogitParams) -> np.ndarray:
    """Probability of each outcome class.

    ``x`` is a K-vector (returns a J-vector) or an N x K matrix (returns N x J).
    """
    x = np.asarray(x, dtype=float)
    _check_dims(x, params)
    eta = x @ params.beta
    eta = np.asarray(eta)
    ext = np.concatenate([[-np.inf], params.cutoffs, [np.inf]])
    a = ext[:-1] - eta[..., None]
    b = ext[1:] - eta[..., None]
    with np.errstate(over="ignore"):
        return logistic_cdf(b) * logistic_cdf(-a) * -np.expm1(a - b)


def log_likelihood(design: DesignMatrix, params: OrderedLogitParams) -> float:
    _check_dims(design.X, params)
    if design.n_obs == 0:
        return 0.0
    a, b = _bounds(params.cutoffs, design.X @ params.beta, design.y)
    return float(np.sum(_log_interval(a, b)))


@dataclass
class _Derivatives:
    ll: float
    grad: np.ndarray  # natural parameters (beta, cutoffs)
    hess: np.ndarray | None


def _derivatives(X: np.ndarray, y: np.ndarray, beta: np.ndarray, cutoffs: np.ndarray, hessian: bool) -> _Derivatives:
    K = beta.size
    M = cutoffs.size
    a, b = _bounds(cutoffs, X @ beta, y)
    log_gap = np.log(-np.expm1(a - b))
    ll = float(np.sum(log_logistic_cdf(b) + log_logistic_cdf(-a) + log_gap))
    # density / probability ratios at each bound; exactly 0 at infinite bounds
    ga = np.exp(log_logistic_cdf(a) - log_logistic_cdf(b) - log_gap)
    gb = np.exp(log_logistic_cdf(-b) - log_logistic_cdf(-a) - log_gap)

    upper = y < M  # observation has a finite upper cut-off C[y]
    lower = y > 0  # observation has a finite lower cut-off C[y-1]
    d_eta = ga - gb
    grad = np.empty(K + M)
    grad[:K] = X.T @ d_eta
    grad[K:] = (np.bincount(y[upper], weights=gb[upper], minlength=M)[:M]
                - np.bincount(y[lower] - 1, weights=ga[lower], minlength=M)[:M])
    if not hessian:
        return _Derivatives(ll, grad, None)

    Fa = logistic_cdf(a)
    Fb = logistic_cdf(b)
    haa = -ga * (1.0 - 2.0 * Fa) - ga * ga
    hbb = gb * (1.0 - 2.0 * Fb) - gb * gb
    hab = ga * gb
    h_eta_eta = haa + 2.0 * hab + hbb
    h_eta_cu = -(hab + hbb)  # d2/(d eta d C[y])
    h_eta_cl = -(haa + hab)  # d2/(d eta d C[y-1])

    H = np.zeros((K + M, K + M))
    H[:K, :K] = (X * h_eta_eta[:, None]).T @ X
    cross = np.zeros((X.shape[0], M))
    idx = np.arange(X.shape[0])
    cross[idx[upper], y[upper]] += h_eta_cu[upper]
    cross[idx[lower], y[lower] - 1] += h_eta_cl[lower]
    H[:K, K:] = X.T @ cross
    H[K:, :K] = H[:K, K:].T
    diag = (np.bincount(y[upper], weights=hbb[upper], minlength=M)[:M]
            + np.bincount(y[lower] - 1, weights=haa[lower], minlength=M)[:M])
    H[K:, K:] = np.diag(diag)
    if M > 1:
        off = np.bincount(y[lower] - 1, weights=hab[lower], minlength=M)[: M - 1]
        i = np.arange(M - 1)
        H[K + i, K + i + 1] = off
        H[K + i + 1, K + i] = off
    return _Derivatives(ll, grad, H)


def gradient(design: DesignMatrix, params: OrderedLogitParams) -> np.ndarray:
    """Analytic gradient of the log-likelihood with respect to (beta, cutoffs)."""
    _check_dims(design.X, params)
    return _derivatives(design.X, design.y, params.beta, params.cutoffs, hessian=False).grad


def hessian(design: DesignMatrix, params: OrderedLogitParams) -> np.ndarray:
    """Analytic Hessian of the log-likelihood with respect to (beta, cutoffs)."""
    _check_dims(design.X, params)
    return _derivatives(design.X, design.y, params.beta, params.cutoffs, hessian=True).hess


# -- internal parameterisation ------------------------------------------------

def cutoffs_to_theta(cutoffs) -> np.ndarray:
    cutoffs = np.asarray(cutoffs, dtype=float)
    return np.concatenate([cutoffs[:1], np.log(np.diff(cutoffs))])


def theta_to_cutoffs(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    return np.cumsum(np.concatenate([theta[:1], np.exp(theta[1:])]))


def _theta_jacobian(theta: np.ndarray) -> np.ndarray:
    """d cutoffs / d theta (lower triangular)."""
    M = theta.size
    J = np.zeros((M, M))
    J[:, 0] = 1.0
    steps = np.exp(theta[1:])
    for j in range(1, M):
        J[j, 1 : j + 1] = steps[:j]
    return J


def _full_jacobian(K: int, theta: np.ndarray) -> np.ndarray:
    M = theta.size
    T = np.eye(K + M)
    T[K:, K:] = _theta_jacobian(theta)
    return T


def _internal_derivatives(X, y, q, K, hessian=True):
    theta = q[K:]
    cutoffs = theta_to_cutoffs(theta)
    d = _derivatives(X, y, q[:K], cutoffs, hessian)
    T = _full_jacobian(K, theta)
    g_q = T.T @ d.grad
    H_q = None
    if hessian:
        H_q = T.T @ d.hess @ T
        # curvature of the exp map: d2 C[j] / d theta[m]^2 = exp(theta[m]) for 1 <= m <= j
        tail = np.cumsum(d.grad[K:][::-1])[::-1]
        m = np.arange(1, theta.size)
        H_q[K + m, K + m] += np.exp(theta[1:]) * tail[1:]
    return d, g_q, H_q


@dataclass(frozen=True)
class FitOptions:
    tol_grad: float = 1e-6
    tol_ll: float = 1e-10
    max_iter: int = 200
    hessian_fallback: bool = True


@dataclass(frozen=True)
class OrderedLogitFit:
    params: OrderedLogitParams
    covariance: np.ndarray | None
    log_likelihood: float
    null_log_likelihood: float
    iterations: int
    converged: bool
    gradient_norm: float
    n_obs: int = 0
    labels: tuple = field(default=(), repr=False)
    warnings: tuple[str, ...] = ()

    @property
    def standard_errors(self) -> np.ndarray:
        return np.sqrt(np.diag(self.covariance))


def null_log_likelihood(y, n_classes: int | None = None) -> float:
    """Log-likelihood of the intercept-only model: sum_j n_j log(n_j / N)."""
    y = np.asarray(y, dtype=np.int64)
    n_classes = n_classes if n_classes is not None else (int(y.max()) + 1 if y.size else 0)
    counts = np.bincount(y, minlength=n_classes)
    if n_classes < 2 or np.any(counts == 0):
        missing = [j for j in range(n_classes) if counts[j] == 0]
        raise DataError(f"outcome classes {missing} have no observations" if missing
                        else "need at least two outcome classes")
    N = int(counts.sum())
    return math.fsum(n * math.log(n / N) for n in counts.tolist())


def _start_values(y: np.ndarray, n_classes: int) -> np.ndarray:
    counts = np.bincount(y, minlength=n_classes).astype(float)
    cum = np.cumsum(counts)[:-1] / counts.sum()
    return np.log(cum) - np.log1p(-cum)


def _detect_separation(design: DesignMatrix) -> list[str]:
    msgs = []
    top = design.n_classes - 1
    for k, label in enumerate(design.labels):
        on = design.X[:, k] == 1
        if not on.any():
            continue
        ys = design.y[on]
        if np.all(ys == 0) or np.all(ys == top):
            boundary = "lowest" if ys[0] == 0 else "highest"
            msgs.append(f"column {label!r} perfectly predicts the {boundary} class")
    return msgs


def fit(design: DesignMatrix, options: FitOptions | None = None) -> OrderedLogitFit:
    """Maximum-likelihood fit by Newton-Raphson with backtracking line search.

    Starts from beta = 0 and the cut-offs that reproduce the sample class
    shares. When the Hessian is not negative definite a gradient-ascent step
    is taken instead (unless ``options.hessian_fallback`` is False, in which
    case :class:`EstimationError` is raised).
    """
    options = options or FitOptions()
    X, y = design.X, design.y
    N, K = X.shape
    J = design.n_classes
    null_ll = null_log_likelihood(y, J)
    if N < K + J - 1:
        raise DataError(f"{N} observations cannot identify {K + J - 1} parameters")

    notes = _detect_separation(design)
    for msg in notes:
        warnings.warn(msg, SeparationWarning, stacklevel=2)

    q = np.concatenate([np.zeros(K), cutoffs_to_theta(_start_values(y, J))])
    d, g_q, H_q = _internal_derivatives(X, y, q, K)
    ll = d.ll
    delta_ll = np.inf
    converged = False
    iterations = 0
    while True:
        grad_norm = float(np.max(np.abs(d.grad))) if d.grad.size else 0.0
        if grad_norm < options.tol_grad and abs(delta_ll) <= options.tol_ll * max(1.0, abs(ll)):
            converged = True
            break
        if iterations >= options.max_iter:
            break
        iterations += 1

        neg_h = -H_q
        try:
            chol = np.linalg.cholesky(neg_h)
            step = np.linalg.solve(chol.T, np.linalg.solve(chol, g_q))
        except np.linalg.LinAlgError:
            if not options.hessian_fallback:
                raise EstimationError(f"Hessian not negative definite at iteration {iterations}") from None
            step = g_q / max(1.0, float(np.linalg.norm(g_q)))

        slope = float(g_q @ step)
        t = 1.0
        accepted = False
        for _ in range(60):
            q_new = q + t * step
            with np.errstate(over="ignore", invalid="ignore"):
                ll_new = log_likelihood_internal(X, y, q_new, K)
            if np.isfinite(ll_new) and ll_new >= ll + 1e-4 * t * slope:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            # no further ascent possible at machine precision
            converged = grad_norm < options.tol_grad
            break
        delta_ll = ll_new - ll
        q = q_new
        d, g_q, H_q = _internal_derivatives(X, y, q, K)
        ll = d.ll

    theta = q[K:]
    params = OrderedLogitParams(q[:K], theta_to_cutoffs(theta))
    grad_norm = float(np.max(np.abs(d.grad))) if d.grad.size else 0.0

    try:
        cov_q = np.linalg.inv(np.linalg.cholesky(-H_q))
        cov_q = cov_q.T @ cov_q
    except np.linalg.LinAlgError:
        if converged:
            raise EstimationError("Hessian is singular at the optimum; a column may be constant or collinear") from None
        cov = None
    else:
        T = _full_jacobian(K, theta)
        cov = T @ cov_q @ T.T
        cov = 0.5 * (cov + cov.T)

    return OrderedLogitFit(
        params=params,
        covariance=cov,
        log_likelihood=ll,
        null_log_likelihood=null_ll,
        iterations=iterations,
        converged=converged,
        gradient_norm=grad_norm,
        n_obs=N,
        labels=design.labels,
        warnings=tuple(notes),
    )


def log_likelihood_internal(X, y, q, K) -> float:
    cutoffs = theta_to_cutoffs(q[K:])
    if not np.all(np.isfinite(cutoffs)) or np.any(np.diff(cutoffs) <= 0):
        return -np.inf
    a, b = _bounds(cutoffs, X @ q[:K], y)
    return float(np.sum(_log_interval(a, b)))
