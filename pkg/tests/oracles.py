"""Independent direct-evaluation references in extended precision.

Each function re-derives a closed form from its definition without calling
into the package, so agreement is a genuine two-route check.
"""
import itertools
import math
from fractions import Fraction

import mpmath as mp

mp.mp.dps = 40


def gamma_cap(n, V):
    total = sum(math.comb(n, j) for j in range(min(V, n) + 1))
    # ceil(log2 n) by integer search
    k = 0
    while 2**k < n:
        k += 1
    return float(mp.log(k) + mp.log(2 * total))


def gamma_rd(u, r, d):
    u = mp.mpf(u)
    if r == 0:
        return float(1 / (1 + u))
    a = mp.mpf(2 * r * r)
    first = min(1 / (u * a**d), mp.mpf(1)) / (2 * (d + 1))
    second = max(mp.mpf(0), 1 - a ** (mp.mpf(d) / (d + 1)) * u ** (mp.mpf(1) / (d + 1))) ** 2
    return float(max(first, second))


def theta_shrink(h, h0, r, d):
    if r == 0:
        return 1.0
    u = mp.mpf(h) / h0
    a = mp.mpf(2 * r * r)
    first = min(1 / (u * a**d), mp.mpf(1)) / (2 * (d + 1))
    second = max(mp.mpf(0), 1 - a ** (mp.mpf(d) / (d + 1)) * u ** (mp.mpf(1) / (d + 1))) ** 2
    if first >= second:
        return float(mp.mpf(d) / (d + 1) / a)
    return float((u / a) ** (mp.mpf(1) / (d + 1)))


def model_bandwidth(r, j):
    d = len(j)
    s = sum(r)
    factor = Fraction(2 * s * s) ** d if s else Fraction(1)
    return float(Fraction(1, 2 ** sum(j)) / (factor * 4 ** (d + 1)))


def penalty(h, phat, n, V, a):
    h = mp.mpf(h)
    big = mp.mpf(gamma_cap(n, V)) + a * max(mp.mpf(0), -mp.log(h))
    c = mp.sqrt(mp.mpf(4) / 3)
    return float(29 * c * mp.sqrt(phat * big / (h * n)) + c * 841 * big / (h * n))


def psi_lower(measures, L, n):
    # best h for min(M(h), floor(1/(L h))) >= q is the q-th smallest measure,
    # feasible when q * mu_(q) * L <= 1; inputs are read as the decimals they print as,
    # so 0.01 means 1/100 rather than its binary neighbour
    mu = sorted(Fraction(repr(float(m))) for m in measures)
    L = Fraction(repr(float(L)))
    best = mp.mpf(0)
    for q, m in enumerate(mu, start=1):
        if q * m * L <= 1:
            best = max(best, mp.mpf(L.numerator) / L.denominator * mp.log(1 + q) / (mp.mpf(m.numerator) / m.denominator * n))
    return float(mp.sqrt(best))


def minimax_floor(L, h0, n):
    L, h0 = mp.mpf(L), mp.mpf(h0)
    ln2 = mp.log(2)
    return float(min(L, mp.sqrt(L * ln2 / (h0 * n)), mp.sqrt(ln2) / (h0 * mp.sqrt(n))) / 80)


def b_factor(r):
    leb = [2 / mp.pi * mp.log(1 + v) + 1 for v in r]
    best = None
    for perm in itertools.permutations(range(len(r))):
        total, prod = mp.mpf(0), mp.mpf(1)
        for i in perm:
            prod *= leb[i]
            total += prod
        best = total if best is None else min(best, total)
    return float(1 + best)


def kappa_star_floor(r):
    return float(1 / (4 * (1 + 4 * mp.sqrt(math.prod(v + 1 for v in r)))))
