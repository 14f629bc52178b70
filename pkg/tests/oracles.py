"""Independent reference implementations used only by the tests.

Everything here is written as plain loops over entries so it shares no code
path with the vectorized library.
"""

import math

import numpy as np


def jacobi_eigenvalues(sym, sweeps=100, tol=1e-15):
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations (pure Python)."""
    a = [list(map(float, row)) for row in sym]
    n = len(a)
    for _ in range(sweeps):
        off = sum(a[i][j] ** 2 for i in range(n) for j in range(n) if i != j)
        if off < tol * tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p][q]) < 1e-300:
                    continue
                theta = (a[q][q] - a[p][p]) / (2 * a[p][q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1))
                c = 1 / math.sqrt(t * t + 1)
                s = t * c
                for k in range(n):
                    akp, akq = a[k][p], a[k][q]
                    a[k][p] = c * akp - s * akq
                    a[k][q] = s * akp + c * akq
                for k in range(n):
                    apk, aqk = a[p][k], a[q][k]
                    a[p][k] = c * apk - s * aqk
                    a[q][k] = s * apk + c * aqk
    return sorted(a[i][i] for i in range(n))


def spectral_norm_oracle(m):
    m = np.asarray(m, dtype=float)
    rows, cols = m.shape
    gram = [[sum(m[k][i] * m[k][j] for k in range(rows)) for j in range(cols)] for i in range(cols)]
    return math.sqrt(max(jacobi_eigenvalues(gram)[-1], 0.0))


def laplacian_oracle(n, edges):
    adj = [[0.0] * n for _ in range(n)]
    for i, j in edges:
        adj[i][j] = adj[j][i] = 1.0
    for i in range(n):
        adj[i][i] += 1.0
    deg = [sum(row) for row in adj]
    return np.array([[adj[i][j] / math.sqrt(deg[i] * deg[j]) for j in range(n)] for i in range(n)])


def _matmul(a, b):
    n, k = len(a), len(b)
    c = len(b[0])
    return [[sum(a[i][t] * b[t][j] for t in range(k)) for j in range(c)] for i in range(n)]


def _apply(fn, a):
    return [[fn(v) for v in row] for row in a]


ACT = {
    "relu": lambda v: v if v > 0 else 0.0,
    "tanh": math.tanh,
    "identity": lambda v: v,
}


def _readout(h, w):
    n = len(h)
    pooled = [[sum(h[v][c] for v in range(n)) / n for c in range(len(h[0]))]]
    return np.array(_matmul(pooled, w.tolist())[0])


def gcn_loop(layers, X, P):
    """H_k = relu(P H_{k-1} W_k), logits = mean over nodes of H_{l-1}, times W_l."""
    h = X.tolist()
    p = P.tolist()
    for w in layers[:-1]:
        h = _apply(ACT["relu"], _matmul(_matmul(p, h), w.tolist()))
    return _readout(h, layers[-1])


def mpgnn_loop(W, U, X, P, phi="relu", rho="relu", psi="relu"):
    """H_k = phi(X U_k + rho(P psi(H_{k-1}) W_k)) with H_0 = 0."""
    n, h0 = X.shape
    x = X.tolist()
    p = P.tolist()
    h = [[0.0] * h0 for _ in range(n)]
    for k in range(len(W) - 1):
        f = _matmul(_matmul(p, _apply(ACT[psi], h)), W[k].tolist())
        xu = _matmul(x, U[k].tolist())
        rf = _apply(ACT[rho], f)
        h = _apply(ACT[phi], [[xu[i][c] + rf[i][c] for c in range(len(xu[0]))] for i in range(n)])
    return _readout(h, W[-1])


def central_difference(fn, x, step=1e-5):
    """Gradient of a scalar function of an array by central differences."""
    x = np.array(x, dtype=float)
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        old = x[idx]
        x[idx] = old + step
        up = fn(x)
        x[idx] = old - step
        down = fn(x)
        x[idx] = old
        g[idx] = (up - down) / (2 * step)
    return g


def relative_error(a, b):
    a, b = np.asarray(a), np.asarray(b)
    scale = max(np.linalg.norm(a), np.linalg.norm(b), 1e-8)
    return float(np.linalg.norm(a - b) / scale)
