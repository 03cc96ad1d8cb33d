"""Independent reference implementations used as test oracles.

They work on plain dictionaries ``{(P, Q): c}`` and evaluate exponentials
directly with cmath or mpmath, sharing no code with the library.
"""

import cmath
import math

import mpmath

TWO_PI = 2 * math.pi


def series_to_dict(s):
    out = {}
    for (P, Q), c in s.items():
        out[(tuple(P), tuple(Q))] = complex(c)
    return out


def matrix_to_dicts(M):
    return [[series_to_dict(M.entry(a, b)) for b in range(M.ell)] for a in range(M.ell)]


def dict_mul(a, b, K, m_max):
    """Truncated product and the l1 mass of dropped terms."""
    out, lost = {}, 0.0
    for (P1, Q1), c1 in a.items():
        for (P2, Q2), c2 in b.items():
            P = tuple(x + y for x, y in zip(P1, P2))
            Q = tuple(x + y for x, y in zip(Q1, Q2))
            if max((abs(x) for x in P), default=0) > K or sum(Q) > m_max:
                lost += abs(c1 * c2)
                continue
            out[(P, Q)] = out.get((P, Q), 0) + c1 * c2
    return {k: v for k, v in out.items() if v != 0}, lost


def dict_matmul(A, B, K, m_max):
    ell = len(A)
    C = [[{} for _ in range(ell)] for _ in range(ell)]
    for i in range(ell):
        for k in range(ell):
            acc = {}
            for j in range(ell):
                prod, _ = dict_mul(A[i][j], B[j][k], K, m_max)
                for key, v in prod.items():
                    acc[key] = acc.get(key, 0) + v
            C[i][k] = acc
    return C


def deck_factor(e_row, theta_row, P, Q):
    """``lam_j**P * mu_j**Q`` by direct exponentiation."""
    z = sum(p * complex(e) for p, e in zip(P, e_row)) + sum(q * t for q, t in zip(Q, theta_row))
    return cmath.exp(2j * math.pi * z)


def dict_compose(f, e_row, theta_row):
    return {k: c * deck_factor(e_row, theta_row, *k) for k, c in f.items()}


def dict_eval(f, z, v):
    total = 0j
    for (P, Q), c in f.items():
        term = c * cmath.exp(2j * math.pi * sum(p * zz for p, zz in zip(P, z)))
        for q, vv in zip(Q, v):
            term *= vv ** q
        total += term
    return total


def weight_vertex_max(e_next, eps, P):
    """``max |h**P|`` over the box ``t in [-eps, 1+eps]**n`` by enumerating all vertices."""
    import itertools

    n = len(P)
    best = -math.inf
    for t in itertools.product((-eps, 1 + eps), repeat=n):
        # h_k = exp(2 pi i z_k), z = sum_j t_j e_{n+j}; |h**P| = exp(-2 pi Im(P.z))
        im = sum(P[k] * sum(t[j] * complex(e_next[j][k]).imag for j in range(n))
                 for k in range(n))
        best = max(best, -TWO_PI * im)
    return math.exp(best)


def brute_force_min_divisor_times_size(tau, theta, bound, dps=30):
    """``min |lam**p mu**q - mu| * (|p| + q)`` over ``q >= 2``, ``|p| + q <= bound``.

    Scalar case ``n = d = 1``; every ``p`` in ``[-bound, bound]`` is visited
    and evaluated in ``dps``-digit arithmetic.
    """
    with mpmath.workdps(dps):
        lam = mpmath.exp(2j * mpmath.pi * mpmath.mpc(tau))
        mu = mpmath.exp(2j * mpmath.pi * mpmath.mpf(theta))
        best = mpmath.inf
        arg = None
        for p in range(-bound, bound + 1):
            lp = lam ** p
            for q in range(2, bound - abs(p) + 1):
                val = abs(lp * mu ** q - mu) * (abs(p) + q)
                if val < best:
                    best, arg = val, (p, q)
        return float(best), arg
