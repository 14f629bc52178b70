"""Dense matrix utilities: norms, spectral-ball projection, Gaussian sampling.

Matrices are plain 2-D float64 numpy arrays. `as_matrix` is the validating
constructor used at every public boundary.
"""

import numpy as np

from .errors import NonConvergence, SvdFailure

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10_000

# projection treats a top singular value within this relative margin as inside
_BALL_RTOL = 1e-12


def as_matrix(data) -> np.ndarray:
    m = np.array(data, dtype=np.float64)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def frobenius_norm(m) -> float:
    m = np.asarray(m, dtype=np.float64)
    return float(np.sqrt(np.sum(m * m)))


def _power_iteration(gram, v, tol, max_iter):
    """Largest eigenvalue of a PSD matrix. Returns None when the iterate vanishes."""
    for _ in range(max_iter):
        w = gram @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return None
        lam = float(v @ w)
        # lam > 0 whenever gram @ v != 0 because gram is PSD
        resid = np.linalg.norm(w - lam * v) / lam
        # Rayleigh-quotient error is second order in the residual
        if resid * resid <= tol:
            return lam
        v = w / nw
    raise NonConvergence(
        f"power iteration residual above tol={tol} after {max_iter} iterations"
    )


def spectral_norm(m, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> float:
    """Largest singular value by power iteration on the smaller Gram matrix.

    The start vector is the normalized all-ones vector. A second run from a
    fixed pseudo-random vector (seed 0) is made when the first iterate
    vanishes, fails to converge, or lands below an easy lower bound on the
    top eigenvalue (start vector orthogonal to the top eigenspace).
    """
    if tol <= 0 or max_iter < 1:
        raise ValueError("tol must be > 0 and max_iter >= 1")
    m = np.asarray(m, dtype=np.float64)
    if not np.any(m):
        return 0.0
    # rescale so the Gram matrix neither underflows nor overflows
    scale = float(np.max(np.abs(m)))
    m = m / scale
    gram = m.T @ m if m.shape[0] >= m.shape[1] else m @ m.T
    k = gram.shape[0]
    floor = float(np.max(np.diag(gram)))

    lam = None
    try:
        lam = _power_iteration(gram, np.full(k, 1.0 / np.sqrt(k)), tol, max_iter)
    except NonConvergence:
        lam = None
    if lam is None or lam < floor * (1.0 - 1e-9):
        v = np.random.default_rng(0).standard_normal(k)
        v /= np.linalg.norm(v)
        lam2 = _power_iteration(gram, v, tol, max_iter)
        if lam2 is None:
            raise NonConvergence("power iteration stagnated from both start vectors")
        lam = lam2 if lam is None else max(lam, lam2)
    return float(np.sqrt(lam)) * scale


def spectral_norm_with_retry(m, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                             attempts: int = 3) -> float:
    """`spectral_norm`, retried with ten times the iteration budget on NonConvergence.

    Slow convergence comes from a near-tie between the two largest singular
    values; the estimate is still accurate but the residual shrinks slowly.
    """
    for k in range(attempts):
        try:
            return spectral_norm(m, tol, max_iter * 10 ** k)
        except NonConvergence:
            if k == attempts - 1:
                raise
    raise AssertionError("unreachable")


def project_spectral_ball(m, radius: float) -> np.ndarray:
    """Frobenius-nearest matrix with spectral norm <= radius (singular value clipping)."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    m = np.asarray(m, dtype=np.float64)
    if radius == 0:
        return np.zeros_like(m)
    try:
        u, s, vt = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SvdFailure(str(exc)) from exc
    if s[0] <= radius * (1.0 + _BALL_RTOL):
        return m.copy()
    return (u * np.minimum(s, radius)) @ vt


def project_spectral_ball_batch(stack, radius: float) -> np.ndarray:
    """`project_spectral_ball` applied to each matrix of a (N, r, c) stack."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    stack = np.asarray(stack, dtype=np.float64)
    if radius == 0:
        return np.zeros_like(stack)
    try:
        u, s, vt = np.linalg.svd(stack, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SvdFailure(str(exc)) from exc
    out = stack.copy()
    over = s[:, 0] > radius * (1.0 + _BALL_RTOL)
    if np.any(over):
        out[over] = (u[over] * np.minimum(s[over], radius)[:, None, :]) @ vt[over]
    return out


def gaussian_matrix(rows: int, cols: int, sigma: float, seed) -> np.ndarray:
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    rng = np.random.default_rng(seed)
    return sigma * rng.standard_normal((rows, cols))


def matrix_to_json(m) -> dict:
    m = np.asarray(m, dtype=np.float64)
    return {"rows": int(m.shape[0]), "cols": int(m.shape[1]), "data": m.ravel().tolist()}


def matrix_from_json(obj) -> np.ndarray:
    rows, cols, data = obj["rows"], obj["cols"], obj["data"]
    if len(data) != rows * cols:
        raise ValueError(f"matrix data has {len(data)} entries, expected {rows * cols}")
    return as_matrix(np.asarray(data, dtype=np.float64).reshape(rows, cols))
