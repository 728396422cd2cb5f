"""Legendre-Galerkin eigenvalues of the log kernel on the mean-zero subspace.

On span{P_1, ..., P_M} (all mean-zero on [-1, 1]) the K1 correction and the
constant C_K drop out, so the Galerkin matrix is
    G_mn = -∫∫ log|x - s| P_m(x) P_n(s) ds dx = -∫ P_m(x) mu_n(x) dx,
with mu_n(x) = 2 (Q_{n+1}(x) - Q_{n-1}(x)) / (2n + 1) (Ferrers Q).
The outer integral is done by tanh-sinh quadrature in 40-digit arithmetic.
"""
import sys
import mpmath as mp
import numpy as np
import scipy.linalg as sla

mp.mp.dps = 40


def moments(x, nmax):
    q = [mp.mpf(0)] * (nmax + 2)
    q[0] = mp.log((1 + x) / (1 - x)) / 2
    q[1] = x * q[0] - 1
    for m in range(1, nmax + 1):
        q[m + 1] = ((2 * m + 1) * x * q[m] - m * q[m - 1]) / (m + 1)
    mu = [None] * (nmax + 1)
    mu[0] = (1 + x) * mp.log(1 + x) + (1 - x) * mp.log(1 - x) - 2
    for n in range(1, nmax + 1):
        mu[n] = 2 * (q[n + 1] - q[n - 1]) / (2 * n + 1)
    return mu


def legendre(x, nmax):
    p = [mp.mpf(1), x]
    for k in range(2, nmax + 1):
        p.append(((2 * k - 1) * x * p[-1] - (k - 1) * p[-2]) / k)
    return p


def galerkin(M, levels=9):
    # tanh-sinh nodes on [-1, 1]
    h = mp.mpf(1) / 2 ** (levels - 4)
    nodes = []
    k = 0
    while True:
        t = k * h
        u = mp.pi / 2 * mp.sinh(t)
        x = mp.tanh(u)
        w = h * mp.pi / 2 * mp.cosh(t) / mp.cosh(u) ** 2
        if w < mp.mpf(10) ** -45 or 1 - x == 0:
            break
        nodes.append((x, w))
        if k > 0:
            nodes.append((-x, w))
        k += 1
    G = np.zeros((M, M))
    acc = [[mp.mpf(0)] * M for _ in range(M)]
    for x, w in nodes:
        p = legendre(x, M)
        mu = moments(x, M)
        for m in range(1, M + 1):
            wp = w * p[m]
            for n in range(m, M + 1):
                acc[m - 1][n - 1] -= wp * mu[n]
    for m in range(M):
        for n in range(m, M):
            G[m, n] = G[n, m] = float(acc[m][n])
    mass = np.diag([2.0 / (2 * n + 1) for n in range(1, M + 1)])
    return np.sort(sla.eigh(G, mass, eigvals_only=True))[::-1]


if __name__ == "__main__":
    M = int(sys.argv[1]) if len(sys.argv) > 1 else 48
    ev = galerkin(M)
    for v in ev[:8]:
        print(repr(float(v)))
