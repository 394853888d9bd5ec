"""Pure numpy versions of the compiled kernels (same signatures)."""
import numpy as np


def block_toeplitz_fill(coef, kmin, n, m):
    coef = np.asarray(coef, dtype=complex)
    K, s, t = coef.shape
    idx = np.arange(n)[:, None] - np.arange(m)[None, :] - kmin
    valid = (idx >= 0) & (idx < K)
    padded = np.concatenate([coef, np.zeros((1, s, t), dtype=complex)])
    blocks = padded[np.where(valid, idx, K)]          # (n, m, s, t)
    return blocks.transpose(0, 2, 1, 3).reshape(s * n, t * m)


def mgs_orthogonalize(V, w, j):
    h = np.zeros(j + 2)
    for i in range(j + 1):
        h[i] = V[i] @ w
        w -= h[i] * V[i]
    h[j + 1] = np.sqrt(w @ w)
    return h
