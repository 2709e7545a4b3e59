"""High-precision reference values frozen into the test-suite.

Everything here is computed with mpmath from textbook formulas, without
importing the package, so the tests compare two independent routes.

    python3 tools/oracles.py
"""
import mpmath as mp

mp.mp.dps = 30


def P(a, x):
    return mp.gammainc(a, 0, x, regularized=True)


def gamma_pdf(x, rate, shape):
    return rate ** shape * x ** (shape - 1) * mp.e ** (-rate * x) / mp.gamma(shape)


def frank_C(t, a, b):
    return -1 / t * mp.log(1 + (mp.e ** (-t * a) - 1) * (mp.e ** (-t * b) - 1) / (mp.e ** (-t) - 1))


def frank_c(t, a, b):
    num = t * (1 - mp.e ** (-t)) * mp.e ** (-t * (a + b))
    den = (1 - mp.e ** (-t)) - (1 - mp.e ** (-t * a)) * (1 - mp.e ** (-t * b))
    return num / den ** 2


def frank_dC_db(t, a, b):
    # P(A <= a | B = b)
    ea, eb, e1 = mp.e ** (-t * a) - 1, mp.e ** (-t * b), mp.e ** (-t) - 1
    return eb * ea / (e1 + ea * (eb - 1))


def tau(t):
    d = mp.quad(lambda s: s / mp.expm1(s) if s != 0 else 1, [0, t])
    return 1 + 4 / t * (d / t - 1)


def ratio_pdf(r, lam_u, lam_v, du, dv, t):
    def f(v):
        u = r * v
        a, b = P(du, lam_u * u), P(dv, lam_v * v)
        return v * gamma_pdf(u, lam_u, du) * gamma_pdf(v, lam_v, dv) * frank_c(t, a, b)
    mode = (du + dv) / (lam_u * r + lam_v)
    return mp.quad(f, [0, mode / 4, mode, 4 * mode, mp.inf])


def ratio_cdf(r, lam_u, lam_v, du, dv, t):
    def f(v):
        a, b = P(du, lam_u * r * v), P(dv, lam_v * v)
        return gamma_pdf(v, lam_v, dv) * frank_dC_db(t, a, b)
    mode = dv / lam_v
    return mp.quad(f, [0, mode / 4, mode, 4 * mode, mp.inf])


def main():
    print("P(2,x)=0.5 root", mp.findroot(lambda x: P(2, x) - 0.5, 1.7))
    print("debye I(1)", mp.quad(lambda s: s / mp.expm1(s), [0, 1]))
    print("debye I(-1)", mp.quad(lambda s: s / mp.expm1(s), [0, -1]))
    print("debye I(10)", mp.quad(lambda s: s / mp.expm1(s), [0, 10]))
    print("ndtri(0.975)", mp.sqrt(2) * mp.erfinv(2 * mp.mpf("0.975") - 1))
    print("frank_C(1,.5,.5)", frank_C(1, mp.mpf("0.5"), mp.mpf("0.5")))
    print("frank_C(-5,.3,.8)", frank_C(-5, mp.mpf("0.3"), mp.mpf("0.8")))
    print("frank_c(5,.2,.9)", frank_c(5, mp.mpf("0.2"), mp.mpf("0.9")))
    print("frank_c(-10,.2,.9)", frank_c(-10, mp.mpf("0.2"), mp.mpf("0.9")))
    a = P(2, 1)
    print("hand row nll", -mp.log(frank_c(1, a, a) * mp.e ** -2))
    for t in (-10, -5, -1, 1, 5, 10, 30):
        print("tau", t, tau(t))
    for args in [(0.5, 1, 1, 2, 3, -10), (1, 1, 1, 2, 3, 1), (2, 2, 1, 3, 2, 10),
                 (0.7, 0.5, 1, 2, 6, -5), (3, 1, 2, 2, 2, 30)]:
        print("ratio", args, "pdf", ratio_pdf(*args), "cdf", ratio_cdf(*args))
    med = mp.findroot(lambda r: ratio_cdf(r, 1, 1, 2, 3, 1) - 0.5, 0.6)
    print("median (1,1,2,3,1)", med)


if __name__ == "__main__":
    main()
