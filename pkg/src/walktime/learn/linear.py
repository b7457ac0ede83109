"""Linear regression families: OLS, Ridge, LASSO, Elastic Net and the LARS path.

Every solver fits an unpenalized intercept by centering X and y internally.
Objectives, with ``b`` the coefficient vector and ``r`` the residual:

    OLS          sum(r^2)
    Ridge        sum(r^2) + lam * ||b||^2
    LASSO        sum(r^2) / (2n) + lam * ||b||_1
    Elastic Net  sum(r^2) / (2n) + lam * (a * ||b||_1 + (1 - a) / 2 * ||b||^2)

so Elastic Net with ``a = 0`` coincides with Ridge at ``lam_ridge = n * lam``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numba
import numpy as np
import scipy.linalg

from ..dataset import FeatureMatrix
from ..errors import ConvergenceError, InvalidInputError, RankDeficiencyError

CD_TOL = 1e-7
CD_MAX_SWEEPS = 10_000


@dataclass(frozen=True)
class LinearModel:
    intercept: float
    coefficients: np.ndarray
    family: str
    column_names: tuple[str, ...]
    hyperparams: dict = field(default_factory=dict)
    n_iter: int = 0
    objective_history: tuple[float, ...] = ()

    def __post_init__(self):
        if len(self.coefficients) != len(self.column_names):
            raise InvalidInputError("coefficient count does not match feature count")
        if not (np.isfinite(self.intercept) and np.all(np.isfinite(self.coefficients))):
            raise InvalidInputError("non-finite coefficients")

    def predict(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.coefficients + self.intercept


def _center(m: FeatureMatrix):
    X = np.asarray(m.X, dtype=float)
    y = np.asarray(m.y, dtype=float)
    xm = X.mean(axis=0)
    ym = y.mean()
    return X - xm, y - ym, xm, ym


def _model(family, m, beta, xm, ym, **kw):
    beta = np.asarray(beta, dtype=float)
    return LinearModel(float(ym - xm @ beta), beta, family, tuple(m.column_names), **kw)


def collinear_columns(X, names, rtol: float = 1e-10) -> list[str]:
    """Columns that are linear combinations of earlier-pivoted ones (centered design)."""
    Xc = X - X.mean(axis=0)
    if Xc.shape[1] == 0:
        return []
    _, R, piv = scipy.linalg.qr(Xc, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    scale = diag[0] if diag.size and diag[0] > 0 else 1.0
    rank = int(np.sum(diag > rtol * scale))
    return [names[j] for j in sorted(piv[rank:])]


def independent_columns(X, rtol: float = 1e-9) -> np.ndarray:
    """Mask of columns kept by a left-to-right span test on the centered design.

    Column j is dropped when it is (numerically) a linear combination of the
    kept columns to its left; all-constant columns are dropped too.
    """
    Xc = np.asarray(X, dtype=float) - np.mean(X, axis=0)
    keep = np.zeros(Xc.shape[1], dtype=bool)
    Q = np.zeros((Xc.shape[0], 0))
    for j in range(Xc.shape[1]):
        v = Xc[:, j]
        norm = float(np.linalg.norm(v))
        if norm == 0:
            continue
        r = v - Q @ (Q.T @ v)
        r = r - Q @ (Q.T @ r)
        rn = float(np.linalg.norm(r))
        if rn > rtol * norm:
            keep[j] = True
            Q = np.column_stack([Q, r / rn])
    return keep


def fit_full_rank(fit, m: FeatureMatrix, **kwargs) -> LinearModel:
    """Run ``fit`` on the independent columns of ``m``; dropped columns get coefficient 0."""
    keep = independent_columns(m.X)
    if keep.all():
        return fit(m, **kwargs)
    sub = replace(m, X=np.ascontiguousarray(m.X[:, keep]),
                  column_names=tuple(c for c, k in zip(m.column_names, keep) if k))
    inner = fit(sub, **kwargs)
    beta = np.zeros(m.p)
    beta[keep] = inner.coefficients
    dropped = [c for c, k in zip(m.column_names, keep) if not k]
    return replace(inner, coefficients=beta, column_names=tuple(m.column_names),
                   hyperparams=dict(inner.hyperparams, dropped_columns=dropped))


def fit_ols(m: FeatureMatrix, pinv: bool = False) -> LinearModel:
    """Least squares with intercept.

    A rank-deficient design (including n <= p) raises unless ``pinv`` is set,
    in which case the minimum-norm solution is returned.
    """
    Xc, yc, xm, ym = _center(m)
    bad = collinear_columns(m.X, list(m.column_names))
    if (bad or m.n <= m.p) and not pinv:
        raise RankDeficiencyError(
            f"design is rank deficient (n={m.n}, p={m.p}); collinear columns: {bad}", bad
        )
    beta, *_ = np.linalg.lstsq(Xc, yc, rcond=None)
    return _model("OLS", m, beta, xm, ym, hyperparams={"pinv": bool(pinv)})


def fit_ridge(m: FeatureMatrix, lam: float) -> LinearModel:
    if not lam >= 0:
        raise InvalidInputError(f"ridge penalty must be >= 0, got {lam}")
    Xc, yc, xm, ym = _center(m)
    A = Xc.T @ Xc + lam * np.eye(m.p)
    try:
        beta = scipy.linalg.solve(A, Xc.T @ yc, assume_a="pos")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
        beta = np.linalg.lstsq(A, Xc.T @ yc, rcond=None)[0]
    return _model("Ridge", m, beta, xm, ym, hyperparams={"lam": float(lam)})


# -- coordinate descent -----------------------------------------------------


@numba.njit(cache=True)
def _cd(G, c, yy, l1, l2, tol, max_sweeps, beta):
    """Cyclic coordinate descent on the covariance form of the objective.

    ``G = Xc'Xc / n``, ``c = Xc'yc / n``, ``yy = yc'yc / n``. Returns the
    objective after every sweep (index 0 is the starting point).
    """
    p = G.shape[0]
    hist = np.empty(max_sweeps + 1)
    Gb = G @ beta

    def objective():
        q = 0.0
        l1n = 0.0
        l2n = 0.0
        for j in range(p):
            q += beta[j] * (0.5 * Gb[j] - c[j])
            l1n += abs(beta[j])
            l2n += beta[j] * beta[j]
        return 0.5 * yy + q + l1 * l1n + 0.5 * l2 * l2n

    hist[0] = objective()
    for sweep in range(1, max_sweeps + 1):
        max_delta = 0.0
        for j in range(p):
            if G[j, j] <= 0.0:
                continue
            old = beta[j]
            z = c[j] - Gb[j] + G[j, j] * old
            if z > l1:
                new = (z - l1) / (G[j, j] + l2)
            elif z < -l1:
                new = (z + l1) / (G[j, j] + l2)
            else:
                new = 0.0
            d = new - old
            if d != 0.0:
                beta[j] = new
                for k in range(p):
                    Gb[k] += G[k, j] * d
                if abs(d) > max_delta:
                    max_delta = abs(d)
        hist[sweep] = objective()
        if max_delta < tol:
            return hist[: sweep + 1], sweep, True
    return hist, max_sweeps, False


def _coordinate_descent(m, l1, l2, family, hyperparams, tol, max_sweeps, check_monotone):
    Xc, yc, xm, ym = _center(m)
    n = m.n
    G = Xc.T @ Xc / n
    c = Xc.T @ yc / n
    beta = np.zeros(m.p)
    hist, sweeps, converged = _cd(G, c, float(yc @ yc / n), float(l1), float(l2), tol, max_sweeps, beta)
    if not converged:
        raise ConvergenceError(
            f"{family} coordinate descent did not converge in {max_sweeps} sweeps "
            f"(last objective {hist[-1]:.6g})", float(hist[-1])
        )
    if check_monotone:
        slack = 1e-12 * np.maximum(1.0, np.abs(hist[:-1]))
        if np.any(np.diff(hist) > slack):
            raise AssertionError(f"{family} objective increased during coordinate descent")
    return _model(family, m, beta, xm, ym, hyperparams=hyperparams, n_iter=int(sweeps),
                  objective_history=tuple(float(h) for h in hist))


def lasso_lambda_max(m: FeatureMatrix) -> float:
    """Smallest penalty at which every LASSO coefficient is zero."""
    Xc, yc, _, _ = _center(m)
    return float(np.max(np.abs(Xc.T @ yc)) / m.n) if m.p else 0.0


def fit_lasso(m: FeatureMatrix, lam: float, tol: float = CD_TOL, max_sweeps: int = CD_MAX_SWEEPS,
              check_monotone: bool = False) -> LinearModel:
    if not lam > 0:
        raise InvalidInputError(f"LASSO penalty must be > 0, got {lam}")
    return _coordinate_descent(m, lam, 0.0, "LASSO", {"lam": float(lam)}, tol, max_sweeps, check_monotone)


def fit_elastic_net(m: FeatureMatrix, lam: float, l1_ratio: float, tol: float = CD_TOL,
                    max_sweeps: int = CD_MAX_SWEEPS, check_monotone: bool = False) -> LinearModel:
    if not lam > 0:
        raise InvalidInputError(f"Elastic Net penalty must be > 0, got {lam}")
    if not 0 <= l1_ratio <= 1:
        raise InvalidInputError(f"l1_ratio must be in [0, 1], got {l1_ratio}")
    return _coordinate_descent(
        m, lam * l1_ratio, lam * (1 - l1_ratio), "ElasticNet",
        {"lam": float(lam), "l1_ratio": float(l1_ratio)}, tol, max_sweeps, check_monotone,
    )


def objective(model: LinearModel, m: FeatureMatrix) -> float:
    """LASSO / Elastic Net objective of ``model`` on ``m`` (ordinary residual form)."""
    r = m.y - model.predict(m.X)
    b = model.coefficients
    lam = model.hyperparams.get("lam", 0.0)
    a = model.hyperparams.get("l1_ratio", 1.0)
    return float(r @ r / (2 * m.n) + lam * (a * np.abs(b).sum() + (1 - a) / 2 * b @ b))


# -- least angle regression -------------------------------------------------


def fit_lars(m: FeatureMatrix, max_steps: int | None = None, tol: float = 1e-12) -> list[LinearModel]:
    """The least-angle path. Element k holds the coefficients after k steps.

    Columns are normalized internally so every correlation is on a common
    scale; coefficients are reported on the original column scale. A column
    that lies in the span of the active set is skipped for good. Ties in the
    entry correlation go to the lowest column index.
    """
    Xc, yc, xm, ym = _center(m)
    n, p = Xc.shape
    norms = np.sqrt((Xc**2).sum(axis=0))
    usable = norms > 1e-12 * max(1.0, float(norms.max(initial=0.0)))
    Xn = np.zeros_like(Xc)
    Xn[:, usable] = Xc[:, usable] / norms[usable]

    limit = min(n - 1, int(usable.sum()))
    if max_steps is None:
        max_steps = limit
    if max_steps < 0 or max_steps > min(n - 1, p):
        raise InvalidInputError(f"max_steps must be in [0, {min(n - 1, p)}], got {max_steps}")
    max_steps = min(max_steps, limit)

    def emit(beta_n, k):
        beta = np.where(usable, beta_n / np.where(usable, norms, 1.0), 0.0)
        return _model("LARS", m, beta, xm, ym, hyperparams={"n_steps": k})

    beta_n = np.zeros(p)
    mu = np.zeros(n)
    active: list[int] = []
    excluded = ~usable
    path = [emit(beta_n, 0)]

    c = Xn.T @ yc
    cand = np.where(excluded, -np.inf, np.abs(c))
    j_new = int(np.argmax(cand)) if max_steps > 0 else -1

    for step in range(1, max_steps + 1):
        active.append(j_new)
        c = Xn.T @ (yc - mu)
        C = float(np.max(np.abs(c[active])))
        s = np.sign(c[active])
        s[s == 0] = 1.0
        XA = Xn[:, active] * s
        GA = XA.T @ XA
        ones = np.ones(len(active))
        try:
            Ginv1 = scipy.linalg.solve(GA, ones, assume_a="pos")
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
            raise RankDeficiencyError("LARS active set became singular", [m.column_names[j] for j in active])
        AA = 1.0 / np.sqrt(ones @ Ginv1)
        w = AA * Ginv1
        u = XA @ w
        a = Xn.T @ u

        gamma = C / AA
        j_next = -1
        if len(active) < limit:
            for j in range(p):
                if j in active or excluded[j]:
                    continue
                for num, den in ((C - c[j], AA - a[j]), (C + c[j], AA + a[j])):
                    if den <= 0:
                        continue
                    g = num / den
                    if tol < g < gamma or (j_next == -1 and g == gamma):
                        gamma, j_next = g, j
        mu = mu + gamma * u
        beta_n[active] += gamma * s * w
        path.append(emit(beta_n, step))

        if step == max_steps:
            break
        # skip columns already spanned by the active set
        while j_next >= 0:
            xa = Xn[:, active]
            proj = xa @ np.linalg.lstsq(xa, Xn[:, j_next], rcond=None)[0]
            if np.linalg.norm(Xn[:, j_next] - proj) > 1e-8:
                break
            excluded[j_next] = True
            limit -= 1
            c_now = Xn.T @ (yc - mu)
            cand = np.where(excluded, -np.inf, np.abs(c_now))
            cand[active] = -np.inf
            j_next = int(np.argmax(cand)) if np.isfinite(cand.max()) else -1
        if j_next < 0 or len(active) >= limit:
            break
        j_new = j_next
    return path
