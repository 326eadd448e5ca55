"""Independent high-precision reference values for the special functions and kernels.

Run with `python3 tools/oracle.py`; the printed numbers are frozen into the Rust tests.
Everything here is evaluated with mpmath at 50 digits straight from the defining
formulas (no erfcx rewriting, no substitutions), so it shares no code path with
the library.
"""
from mpmath import mp, mpf, sqrt, exp, erfc, pi, quad, inf

mp.dps = 50


def gauss(t, x):
    return exp(-x * x / (2 * t)) / sqrt(2 * pi * t)


def hitting(t, d):
    return d / sqrt(2 * pi * t**3) * exp(-d * d / (2 * t))


def g_beta0(t, x, b):
    return gauss(t, x) - b / 2 * exp(b * x + b * b * t / 2) * erfc(x / sqrt(2 * t) + b * sqrt(t / 2))


def g_0gamma(t, x, g):
    return 1 / g * exp(2 * x / g + 2 * t / g**2) * erfc(x / sqrt(2 * t) + sqrt(2 * t) / g)


def g_betagamma(t, x, b, g):
    f = lambda s: (s + g * x) / (t - s) ** mpf(1.5) * exp(-(s + g * x) ** 2 / (2 * g * g * (t - s))) * exp(-b * s / g)
    return quad(f, [0, t / 2, t * mpf(0.9), t * mpf(0.99), t]) / (g * g * sqrt(2 * pi))


def absorbed_atom(t, d, b):
    return quad(lambda s: exp(-b * (t - s)) * hitting(s, d), [0, t / 4, t / 2, t])


def show(name, v):
    print(f"{name:40s} {mp.nstr(v, 17)}")


show("gauss(1,0)", gauss(1, 0))
show("gauss(2,1)", gauss(2, 1))
show("gauss(0.3,-0.7)", gauss(mpf("0.3"), mpf("-0.7")))
show("hitting(1,1)", hitting(1, 1))
show("hitting(0.25,0.4)", hitting(mpf("0.25"), mpf("0.4")))
show("LT hitting(.,1) at 1", quad(lambda t: exp(-t) * hitting(t, 1), [0, 1, 10, inf]))
show("g_beta0(1,0,1)", g_beta0(1, 0, 1))
show("g_beta0(0.5,0.3,2)", g_beta0(mpf("0.5"), mpf("0.3"), 2))
show("g_beta0(2,1.5,0.7)", g_beta0(2, mpf("1.5"), mpf("0.7")))
show("g_beta0(1,50,10)", g_beta0(1, 50, 10))
show("g_beta0(1e-3,0.01,100)", g_beta0(mpf("1e-3"), mpf("0.01"), 100))
show("g_beta0(1,0,200)", g_beta0(1, 0, 200))
show("g_0gamma(1,0,1)", g_0gamma(1, 0, 1))
show("g_0gamma(0.5,0.3,0.6)", g_0gamma(mpf("0.5"), mpf("0.3"), mpf("0.6")))
show("g_0gamma(2,1,3)", g_0gamma(2, 1, 3))
show("g_0gamma(1,5,0.01)", g_0gamma(1, 5, mpf("0.01")))
show("g_betagamma(1,0.5,1,1)", g_betagamma(1, mpf("0.5"), 1, 1))
show("g_betagamma(0.5,0,0.4,0.6)", g_betagamma(mpf("0.5"), 0, mpf("0.4"), mpf("0.6")))
show("g_betagamma(2,1,2,0.3)", g_betagamma(2, 1, 2, mpf("0.3")))
show("absorbed_atom(1,1,0)", absorbed_atom(1, 1, 0))
show("absorbed_atom(1,1,2)", absorbed_atom(1, 1, 2))
show("absorbed_atom(0.5,0.3,3)", absorbed_atom(mpf("0.5"), mpf("0.3"), 3))
