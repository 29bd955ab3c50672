"""Compiled inner loops for per-pattern backpropagation.

Layers are passed as numba typed lists of weight matrices (out x in) and bias
vectors. Transfer codes: 0 = logistic sigmoid, 1 = tanh.
"""

import numpy as np
from numba import njit

SIGMOID = 0
TANH = 1


@njit(cache=True)
def _activate(z, code):
    if code == SIGMOID:
        return 1.0 / (1.0 + np.exp(-z))
    return np.tanh(z)


@njit(cache=True)
def _slope(a, code):
    # derivative expressed through the activation value
    if code == SIGMOID:
        return a * (1.0 - a)
    return 1.0 - a * a


@njit(cache=True)
def _matvec(W, x, b):
    out = b.copy()
    for i in range(W.shape[0]):
        s = 0.0
        for j in range(W.shape[1]):
            s += W[i, j] * x[j]
        out[i] += s
    return out


@njit(cache=True)
def forward_batch(Ws, bs, codes, X):
    n = X.shape[0]
    n_out = Ws[len(Ws) - 1].shape[0]
    out = np.empty((n, n_out))
    for p in range(n):
        a = X[p].copy()
        for l in range(len(Ws)):
            a = _activate(_matvec(Ws[l], a, bs[l]), codes[l])
        out[p] = a
    return out


@njit(cache=True)
def online_epoch(Ws, bs, vWs, vbs, codes, X, y, order, lr, momentum):
    """One pass of per-pattern updates in the given order. Mutates weights and velocities."""
    L = len(Ws)
    for k in range(order.shape[0]):
        p = order[k]
        acts = [X[p].copy()]
        for l in range(L):
            acts.append(_activate(_matvec(Ws[l], acts[l], bs[l]), codes[l]))
        delta = 2.0 * (acts[L] - y[p]) * _slope(acts[L], codes[L - 1])
        for l in range(L - 1, -1, -1):
            W = Ws[l]
            a_in = acts[l]
            if l > 0:
                back = np.zeros(W.shape[1])
                for i in range(W.shape[0]):
                    for j in range(W.shape[1]):
                        back[j] += W[i, j] * delta[i]
            vW = vWs[l]
            vb = vbs[l]
            b = bs[l]
            for i in range(W.shape[0]):
                for j in range(W.shape[1]):
                    vW[i, j] = momentum * vW[i, j] - lr * delta[i] * a_in[j]
                    W[i, j] += vW[i, j]
                vb[i] = momentum * vb[i] - lr * delta[i]
                b[i] += vb[i]
            if l > 0:
                delta = back * _slope(a_in, codes[l - 1])
