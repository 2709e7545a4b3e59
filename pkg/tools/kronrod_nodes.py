"""Regenerate the Gauss-Kronrod tables hard-coded in ``fcgam.specfun``.

Solves for the Stieltjes polynomial of the n-point Gauss-Legendre rule in
high precision, takes its roots, and fits the 2n+1 weights by exactness on
the Legendre basis.  Usage: ``python tools/kronrod_nodes.py 7 15``.
"""
import sys

import mpmath as mp

mp.mp.dps = 60


def kronrod(n):
    pn = lambda x: mp.legendre(n, x)
    # E(x) = x^(n+1) + sum_{k<=n} c_k x^k, orthogonal to P_n * x^j, j=0..n
    def moment(k):
        return mp.quad(lambda x: pn(x) * x ** k, [-1, 0, 1])

    mom = [moment(k) for k in range(2 * n + 2)]
    a = mp.matrix(n + 1, n + 1)
    b = mp.matrix(n + 1, 1)
    for j in range(n + 1):
        for k in range(n + 1):
            a[j, k] = mom[j + k]
        b[j] = -mom[j + n + 1]
    c = mp.lu_solve(a, b)
    coeffs = [mp.mpf(1)] + [c[k] for k in reversed(range(n + 1))]
    stieltjes = sorted(mp.re(r) for r in mp.polyroots(coeffs, maxsteps=500, extraprec=400))
    gauss = sorted(mp.re(r) for r in mp.polyroots(
        mp.taylor(lambda x: mp.legendre(n, x), 0, n)[::-1], maxsteps=500, extraprec=400))
    nodes = sorted(stieltjes + gauss)
    m = len(nodes)
    v = mp.matrix(m, m)
    rhs = mp.matrix(m, 1)
    for i in range(m):
        for j in range(m):
            v[i, j] = mp.legendre(i, nodes[j])
        rhs[i] = 2 if i == 0 else 0
    wk = mp.lu_solve(v, rhs)
    wg = []
    for xg in gauss:
        dp = mp.diff(lambda x: mp.legendre(n, x), xg)
        wg.append(2 / ((1 - xg ** 2) * dp ** 2))
    return nodes, [wk[i] for i in range(m)], gauss, wg


if __name__ == "__main__":
    for n in map(int, sys.argv[1:] or ["7", "15"]):
        nodes, wk, gauss, wg = kronrod(n)
        half = [(x, w) for x, w in zip(nodes, wk) if x >= 0]
        print(f"# K{2 * n + 1}: nodes >= 0 (descending) and Kronrod weights")
        for x, w in reversed(half):
            print(f"    ({mp.nstr(x, 20)}, {mp.nstr(w, 20)}),")
        print(f"# G{n}: Gauss weights on nodes >= 0 (descending)")
        for x, w in reversed([(x, w) for x, w in zip(gauss, wg) if x >= 0]):
            print(f"    ({mp.nstr(x, 20)}, {mp.nstr(w, 20)}),")
