"""Torus lattices, unitary flat bundles, deck multipliers and small divisors.

Everything here works with *turns*: a complex exponent ``a + ib`` stands for
the number ``exp(2*pi*i*(a + ib))``.  Unit-modulus data are stored as real
turns and exponentiated on demand, which keeps resonances such as
``mu**3 == 1`` for ``theta = 1/3`` exact to rounding.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

TWO_PI = 2.0 * math.pi

#: Divisors at or below this value count as exact resonances.
RESONANCE_THRESHOLD = 1e-14

VARIANTS = ("vd", "svd", "hd", "dv")


def expm1_turns(a, b=0.0):
    """Return ``exp(2*pi*i*(a + i*b)) - 1`` without cancellation.

    ``a`` is reduced modulo 1 first, so large integer multiples of an angle
    do not lose the fractional part that matters.
    """
    a = np.asarray(a, dtype=float)
    a = a - np.round(a)
    x = -TWO_PI * np.asarray(b, dtype=float)
    y = TWO_PI * a
    ex = np.exp(x)
    s = np.sin(0.5 * y)
    return (np.expm1(x) - 2.0 * ex * s * s) + 1j * ex * np.sin(y)


def exp_turns(a, b=0.0):
    a = np.asarray(a, dtype=float)
    a = a - np.round(a)
    return np.exp(-TWO_PI * np.asarray(b, dtype=float)) * np.exp(1j * TWO_PI * a)


# -- angle presets -----------------------------------------------------------

def golden_angle():
    return (math.sqrt(5.0) - 1.0) / 2.0


def sqrt2_angle():
    return math.sqrt(2.0) - 1.0


def liouville_angle(k=4):
    """Finite decimal truncation of sum_{j>=1} 10**(-j!) with ``k`` terms."""
    if k < 1:
        raise ValueError("liouville(k) needs k >= 1")
    total = sum(Fraction(1, 10 ** math.factorial(j)) for j in range(1, k + 1))
    return float(total)


# -- lattice and bundle ------------------------------------------------------

@dataclass(frozen=True)
class TorusLattice:
    """Lattice spanned by the unit vectors and ``e_next = (e_{n+1}, ..., e_{2n})``.

    ``e_next[j][k]`` is the k-th coordinate of ``e_{n+1+j}``.
    """

    e_next: tuple

    def __post_init__(self):
        rows = tuple(tuple(complex(x) for x in row) for row in self.e_next)
        n = len(rows)
        if n < 1 or any(len(r) != n for r in rows):
            raise ValueError("e_next must be n rows of n complex numbers")
        object.__setattr__(self, "e_next", rows)
        im = np.array([[x.imag for x in r] for r in rows])
        sv = np.linalg.svd(im, compute_uv=False)
        if sv[-1] <= 1e-12 * max(1.0, sv[0]):
            raise ValueError("degenerate lattice: the matrix (Im e_{n+i,j}) is singular")

    @classmethod
    def elliptic(cls, tau):
        return cls(((complex(tau),),))

    @property
    def n(self):
        return len(self.e_next)

    @cached_property
    def e(self):
        return np.array(self.e_next, dtype=complex)

    @cached_property
    def imag_matrix(self):
        return self.e.imag.copy()

    @cached_property
    def sigma_min(self):
        return float(np.linalg.svd(self.imag_matrix, compute_uv=False)[-1])


@dataclass(frozen=True)
class FlatBundleData:
    """Diagonal unitary transition data: ``mu[j][l] = exp(2*pi*i*theta[j][l])``."""

    theta: tuple

    def __post_init__(self):
        rows = tuple(tuple(float(t) % 1.0 for t in row) for row in self.theta)
        if not rows or len({len(r) for r in rows}) != 1 or len(rows[0]) < 1:
            raise ValueError("theta must be n rows of d >= 1 angles")
        object.__setattr__(self, "theta", rows)

    @property
    def n(self):
        return len(self.theta)

    @property
    def d(self):
        return len(self.theta[0])

    @cached_property
    def angles(self):
        return np.array(self.theta, dtype=float)

    @cached_property
    def mu(self):
        return exp_turns(self.angles)


@dataclass(frozen=True)
class DeckMaps:
    """Generators ``(h, v) -> (T_j h, M_j v)`` of the covering action."""

    lattice: TorusLattice
    bundle: FlatBundleData

    def __post_init__(self):
        if self.lattice.n != self.bundle.n:
            raise ValueError(f"lattice has n={self.lattice.n} but bundle has {self.bundle.n} rows")

    @property
    def n(self):
        return self.lattice.n

    @property
    def d(self):
        return self.bundle.d

    @cached_property
    def lam(self):
        """``lam[j, k] = exp(2*pi*i*e_{n+j+1, k})``."""
        e = self.lattice.e
        return exp_turns(e.real, e.imag)

    @property
    def mu(self):
        return self.bundle.mu

    @property
    def scalar_lambda(self):
        if self.n != 1:
            raise ValueError("scalar lambda is only defined for n = 1")
        return complex(self.lam[0, 0])

    def turns(self, j, P, Q):
        """Complex turns of ``lam_j**P * mu_j**Q`` for 1-based deck index ``j``.

        ``P`` and ``Q`` may be arrays of shape ``(..., n)`` and ``(..., d)``.
        """
        e = self.lattice.e[j - 1]
        P = np.asarray(P, dtype=float)
        Q = np.asarray(Q, dtype=float)
        a = P @ e.real
        a = a - np.round(a) + Q @ self.bundle.angles[j - 1]
        b = P @ e.imag
        return a, b

    def multiplier(self, j, P, Q):
        a, b = self.turns(j, P, Q)
        return exp_turns(a, b)


def deck_multipliers(lattice, bundle):
    """Build the deck maps of ``lattice`` and ``bundle``."""
    return DeckMaps(lattice, bundle)


def _check_index(name, i, hi):
    if not 1 <= i <= hi:
        raise IndexError(f"{name}={i} out of range 1..{hi}")


def small_divisor(deck, P, Q, j):
    """Per-generator values ``|lam_l**P mu_l**Q - mu_{l,j}|`` and their maximum."""
    _check_index("j", j, deck.d)
    vals = []
    for ell in range(1, deck.n + 1):
        a, b = deck.turns(ell, P, Q)
        vals.append(float(abs(expm1_turns(a - deck.bundle.angles[ell - 1, j - 1], b))))
    vals = np.array(vals)
    return vals, float(vals.max())


def unit_divisor(deck, P, Q, i):
    """The solver divisor ``|lam_i**P mu_i**Q - 1|``."""
    _check_index("i", i, deck.n)
    if not any(P) and not any(Q):
        raise ValueError("unit_divisor is undefined at P = 0, Q = 0")
    a, b = deck.turns(i, P, Q)
    return float(abs(expm1_turns(a, b)))


# -- Diophantine scanning ----------------------------------------------------

def multi_indices(d, max_deg, min_deg=0):
    """All ``Q`` in N^d with ``min_deg <= |Q| <= max_deg`` in graded-lex order."""
    out = []
    for deg in range(min_deg, max_deg + 1):
        for combo in itertools.combinations_with_replacement(range(d), deg):
            q = [0] * d
            for c in combo:
                q[c] += 1
            out.append(tuple(q))
    # combinations_with_replacement emits each degree in reverse-lex; sort within degree
    out.sort(key=lambda q: (sum(q), tuple(-x for x in q)))
    return out


def _lattice_points_l1(n, radius):
    rng = range(-radius, radius + 1)
    pts = [p for p in itertools.product(rng, repeat=n) if sum(abs(x) for x in p) <= radius]
    pts.sort(key=lambda p: (sum(abs(x) for x in p), p))
    return np.array(pts, dtype=np.int64).reshape(-1, n)


def fourier_window(deck, variant, bound):
    """Range of ``P`` actually scanned and the divisor floor certified outside it.

    Returns ``(radius, certificate)``: every mode with ``|P|_1 > radius`` has a
    divisor of at least ``certificate`` (times ``|lam|`` for ``hd``).
    """
    if deck.n == 1:
        rho = abs(deck.scalar_lambda)
        loglam = abs(math.log(rho))
        w = min(bound, math.ceil(bound * math.log(2.0) / loglam))
        s = (w + 1) * loglam
    else:
        smin = deck.lattice.sigma_min
        w = min(bound, math.ceil(deck.n * math.log(2.0) / (TWO_PI * smin)))
        s = TWO_PI * smin * (w + 1) / deck.n
    cert = min(-math.expm1(-s), math.expm1(s))
    if w >= bound:
        cert = math.inf
    return w, cert


@dataclass
class DiophantineReport:
    bound: int
    variant: str
    D: float
    tau: float
    tau_max: float
    verdict: str
    worst_modes: list
    resonances: list
    window: int
    window_certificate: float
    profile: np.ndarray = field(repr=False)
    envelope: list = field(repr=False)
    modes_P: np.ndarray = field(repr=False)
    modes_Q: np.ndarray = field(repr=False)
    modes_j: np.ndarray = field(repr=False)
    divisors: np.ndarray = field(repr=False)

    @property
    def n_modes(self):
        return int(self.divisors.size)

    def constant_for(self, tau):
        """Largest ``D`` with ``divisor >= D / (|P|+|Q|)**tau`` on every scanned mode."""
        N = np.arange(self.profile.size, dtype=float)
        ok = np.isfinite(self.profile)
        return float(np.min(self.profile[ok] * N[ok] ** tau))

    def to_dict(self):
        def mode(m):
            (P, Q, j), div = m
            return {"P": list(P), "Q": list(Q), "j": j, "divisor": div}

        return {
            "bound": self.bound,
            "variant": self.variant,
            "verdict": self.verdict,
            "D": self.D,
            "tau": self.tau,
            "tau_max": self.tau_max,
            "min_divisor_times_size": self.constant_for(1.0),
            "n_modes": self.n_modes,
            "window": self.window,
            "window_certificate": self.window_certificate,
            "worst_modes": [mode(m) for m in self.worst_modes],
            "resonances": [mode(m) for m in self.resonances],
        }


def _scan_modes(deck, variant, bound):
    n, d = deck.n, deck.d
    w, cert = fourier_window(deck, variant, bound)
    Ps = _lattice_points_l1(n, w)
    if variant == "hd":
        Ps = Ps + np.eye(1, n, dtype=np.int64)  # window centred at p = 1
    Qs = np.array(multi_indices(d, bound, 2), dtype=np.int64).reshape(-1, d)
    if Qs.size == 0:
        raise ValueError(f"bound {bound} leaves no modes with |Q| >= 2")
    size = np.abs(Ps).sum(1)[:, None] + Qs.sum(1)[None, :]
    ip, iq = np.nonzero(size <= bound)
    P, Q, N = Ps[ip], Qs[iq], size[ip, iq]

    if variant == "hd":
        a, b = deck.turns(1, P, Q)
        tau = deck.lattice.e[0, 0]
        rho = abs(deck.scalar_lambda)
        div = rho * np.abs(expm1_turns(a - tau.real, b - tau.imag))
        return P, Q, np.zeros(len(N), dtype=np.int64), N, div, w, cert

    # vertical variants: one target index j per mode copy
    per_target = []
    for j in range(1, d + 1):
        vals = []
        for ell in range(1, n + 1):
            a, b = deck.turns(ell, P, Q)
            vals.append(np.abs(expm1_turns(a - deck.bundle.angles[ell - 1, j - 1], b)))
        vals = np.array(vals)
        per_target.append(vals.min(0) if variant == "svd" else vals.max(0))
    div = np.concatenate(per_target)
    js = np.repeat(np.arange(1, d + 1), len(N))
    return np.tile(P, (d, 1)), np.tile(Q, (d, 1)), js, np.tile(N, d), div, w, cert


def _fit_envelope(profile, threshold):
    """Least squares of log(divisor) against log(size) on record lows."""
    pts = []
    best = math.inf
    for N in range(1, profile.size):
        v = profile[N]
        if np.isfinite(v) and v > threshold and v < best:
            best = v
            pts.append((N, v))
    if not pts:
        return math.nan, math.nan, pts
    if len(pts) == 1:
        return pts[0][1], 0.0, pts
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    A = np.vstack([np.ones_like(x), -x]).T
    (c, tau), *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(math.exp(c)), float(tau), pts


def diophantine_scan(deck, variant="dv", bound=50, *, tau_max=None, n_worst=20,
                     threshold=RESONANCE_THRESHOLD):
    """Exhaustively scan small divisors of size ``|P| + |Q| <= bound``.

    ``vd``, ``svd`` and ``hd`` use the scalar multiplier of an elliptic curve
    and need ``n == 1``; ``dv`` works in any dimension.  Only modes with
    ``|Q| >= 2`` are scanned.  Modes with ``|P|`` outside the Fourier window
    are skipped; ``window_certificate`` is a lower bound for their divisors.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if variant != "dv" and deck.n != 1:
        raise ValueError(f"variant {variant!r} is defined for n = 1 only (got n = {deck.n})")
    if bound < 2:
        raise ValueError("bound must be >= 2")
    if tau_max is None:
        tau_max = deck.d + 0.5

    P, Q, js, N, div, w, cert = _scan_modes(deck, variant, bound)

    profile = np.full(bound + 1, np.inf)
    np.minimum.at(profile, N, div)
    D, tau, env = _fit_envelope(profile, threshold)

    def key(i):
        return (tuple(int(x) for x in P[i]), tuple(int(x) for x in Q[i]),
                int(js[i]) if variant != "hd" else None)

    res_idx = np.nonzero(div <= threshold)[0]
    resonances = [(key(i), float(div[i])) for i in res_idx]

    t = tau if np.isfinite(tau) else 1.0
    score = div * N.astype(float) ** t
    order = np.lexsort((N, score))[:n_worst]
    worst = [(key(i), float(div[i])) for i in order]

    if resonances:
        verdict = "resonant"
    elif np.isfinite(tau) and tau > tau_max:
        verdict = "non-diophantine-at-scale"
    else:
        verdict = "pass"
    return DiophantineReport(
        bound=bound, variant=variant, D=D, tau=tau, tau_max=float(tau_max), verdict=verdict,
        worst_modes=worst, resonances=resonances, window=w, window_certificate=cert,
        profile=profile, envelope=env, modes_P=P, modes_Q=Q, modes_j=js, divisors=div,
    )
