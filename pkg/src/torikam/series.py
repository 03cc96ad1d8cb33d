"""Truncated Fourier-Taylor series on ``Omega_{eps,r}``.

A series is a finite sum ``sum c[P, Q] h**P v**Q`` with ``P`` in Z^n
(``max |P_k| <= K``) and ``Q`` in N^d (``|Q| <= m_max``), where
``h = exp(2*pi*i*z)``.  Coefficients live in a dense complex array indexed by
``(P_1 + K, ..., P_n + K, Q_1, ..., Q_d)``; cells with ``|Q| > m_max`` are
kept at zero.  Matrix-valued series carry two extra leading axes.

Products are computed on an enlarged grid and then cropped back.  The
majorant mass of the cropped part is returned as the truncation loss, so that
dropped modes are never silent.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from . import kernels
from .errors import BadJet, SpecMismatch
from .lattice import TWO_PI, exp_turns, expm1_turns

__all__ = [
    "TruncationSpec", "FourierTaylorSeries", "MatrixSeries", "MajorantWeight",
    "add", "mul", "neumann_inverse", "compose_deck", "jet_truncate",
    "majorant_norm", "evaluate", "unit_divisor_grid",
]


@dataclass(frozen=True)
class TruncationSpec:
    """Fourier cutoff ``K``, Taylor degree ``m_max``, torus dim ``n``, fiber dim ``d``.

    ``prune`` is an absolute threshold below which results of arithmetic are
    set to zero; the default keeps everything that is not exactly zero.
    """

    K: int
    m_max: int
    n: int = 1
    d: int = 1
    prune: float = 0.0

    def __post_init__(self):
        for name, lo in (("K", 0), ("m_max", 0), ("n", 1), ("d", 1)):
            v = getattr(self, name)
            if not isinstance(v, numbers.Integral) or v < lo:
                raise ValueError(f"{name} must be an integer >= {lo}, got {v!r}")
        if self.prune < 0:
            raise ValueError("prune must be >= 0")

    @property
    def fourier_shape(self):
        return (2 * self.K + 1,) * self.n

    @property
    def taylor_shape(self):
        return (self.m_max + 1,) * self.d

    @property
    def shape(self):
        return self.fourier_shape + self.taylor_shape

    @cached_property
    def degree(self):
        """``|Q|`` broadcast against :attr:`shape`."""
        return _degree_grid(self.d, self.m_max).reshape((1,) * self.n + self.taylor_shape)

    @cached_property
    def mask(self):
        return np.broadcast_to(self.degree <= self.m_max, self.shape)

    @cached_property
    def p_points(self):
        """Integer ``P`` vectors, shape ``fourier_shape + (n,)``."""
        return _p_points(self.n, self.K)

    @cached_property
    def q_points(self):
        return _q_points(self.d, self.m_max)

    # enlarged grid holding exact products before cropping
    @property
    def full_shape(self):
        return (4 * self.K + 1,) * self.n + (2 * self.m_max + 1,) * self.d

    @cached_property
    def full_strides(self):
        shape = self.full_shape
        strides = np.ones(len(shape), dtype=np.intp)
        for ax in range(len(shape) - 2, -1, -1):
            strides[ax] = strides[ax + 1] * shape[ax + 1]
        return strides

    @cached_property
    def crop(self):
        return (tuple(slice(self.K, 3 * self.K + 1) for _ in range(self.n))
                + tuple(slice(0, self.m_max + 1) for _ in range(self.d)))

    @cached_property
    def full_kept(self):
        keep = np.zeros(self.full_shape, dtype=bool)
        keep[self.crop] = self.mask
        return keep

    def index(self, P, Q):
        P, Q = tuple(P), tuple(Q)
        if len(P) != self.n or len(Q) != self.d:
            raise ValueError(f"mode {(P, Q)} does not match n={self.n}, d={self.d}")
        if any(abs(p) > self.K for p in P) or any(q < 0 for q in Q) or sum(Q) > self.m_max:
            raise ValueError(f"mode {(P, Q)} outside truncation K={self.K}, m_max={self.m_max}")
        return tuple(p + self.K for p in P) + Q

    def mode(self, idx):
        idx = tuple(int(i) for i in idx)
        return (tuple(i - self.K for i in idx[: self.n]), idx[self.n:])


@lru_cache(maxsize=None)
def _degree_grid(d, m):
    grids = np.meshgrid(*([np.arange(m + 1)] * d), indexing="ij")
    g = sum(grids)
    g.flags.writeable = False
    return g


@lru_cache(maxsize=None)
def _p_points(n, K):
    ax = np.arange(-K, K + 1)
    pts = np.stack(np.meshgrid(*([ax] * n), indexing="ij"), axis=-1)
    pts.flags.writeable = False
    return pts


@lru_cache(maxsize=None)
def _q_points(d, m):
    ax = np.arange(m + 1)
    pts = np.stack(np.meshgrid(*([ax] * d), indexing="ij"), axis=-1)
    pts.flags.writeable = False
    return pts


@dataclass(frozen=True)
class MajorantWeight:
    """Weights ``W(P, eps) * r**|Q|`` of the majorant norm on ``Omega_{eps,r}``.

    ``W(P, eps)`` is the maximum of ``|h**P|`` over the closed strip, attained
    at a vertex of the parameter box ``[-eps, 1 + eps]**n``.
    """

    lattice: object
    eps: float
    r: float

    def __post_init__(self):
        if not self.eps > 0 or not self.r > 0:
            raise ValueError(f"need eps > 0 and r > 0, got eps={self.eps}, r={self.r}")

    def log_fourier(self, P):
        a = np.asarray(P, dtype=float) @ self.lattice.imag_matrix.T
        return np.maximum(TWO_PI * self.eps * a, -TWO_PI * (1.0 + self.eps) * a).sum(-1)

    def fourier(self, P):
        return np.exp(self.log_fourier(P))

    def grid(self, spec):
        return _weight_grid(self, spec, False)

    def full_grid(self, spec):
        return _weight_grid(self, spec, True)


@lru_cache(maxsize=64)
def _weight_grid(weight, spec, full):
    if weight.lattice.n != spec.n:
        raise ValueError(f"weight lattice has n={weight.lattice.n}, series has n={spec.n}")
    K = 2 * spec.K if full else spec.K
    m = 2 * spec.m_max if full else spec.m_max
    wp = weight.fourier(_p_points(spec.n, K))
    wq = float(weight.r) ** _degree_grid(spec.d, m).astype(float)
    g = wp.reshape(wp.shape + (1,) * spec.d) * wq.reshape((1,) * spec.n + wq.shape)
    g.flags.writeable = False
    return g


class _SeriesBase:
    __slots__ = ("spec", "data")
    _lead = 0

    def __init__(self, spec, data):
        data = np.array(data, dtype=complex)
        lead = data.shape[: data.ndim - len(spec.shape)]
        if data.shape[len(lead):] != spec.shape or len(lead) != self._lead:
            raise ValueError(f"data shape {data.shape} does not fit {type(self).__name__} with {spec}")
        data[..., ~spec.mask] = 0
        if spec.prune > 0:
            data[np.abs(data) <= spec.prune] = 0
        data.flags.writeable = False
        self.spec = spec
        self.data = data

    def _new(self, data):
        out = object.__new__(type(self))
        _SeriesBase.__init__(out, self.spec, data)
        return out

    def _check(self, other):
        if type(other) is not type(self):
            raise TypeError(f"cannot combine {type(self).__name__} with {type(other).__name__}")
        if other.spec != self.spec:
            raise SpecMismatch(f"truncation mismatch: {self.spec} vs {other.spec}")
        if self.data.shape != other.data.shape:
            raise SpecMismatch("matrix sizes differ")

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        self._check(other)
        return self._new(self.data - other.data)

    def __neg__(self):
        return self._new(-self.data)

    def __mul__(self, c):
        if not isinstance(c, numbers.Number):
            return NotImplemented
        return self._new(self.data * c)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return mul(self, other)[0]

    def __eq__(self, other):
        return (type(other) is type(self) and other.spec == self.spec
                and np.array_equal(self.data, other.data))

    __hash__ = None

    @property
    def is_zero(self):
        return not self.data.any()

    @property
    def nnz(self):
        return int(np.count_nonzero(self.data))

    @property
    def min_degree(self):
        """Lowest ``|Q|`` among nonzero coefficients, ``None`` for the zero series."""
        nz = self.data != 0
        if self._lead:
            nz = nz.any(axis=tuple(range(self._lead)))
        if not nz.any():
            return None
        deg = np.broadcast_to(self.spec.degree, self.spec.shape)
        return int(deg[nz].min())

    def max_abs(self):
        return float(np.abs(self.data).max()) if self.data.size else 0.0


class FourierTaylorSeries(_SeriesBase):
    """Scalar series; ``coeffs`` may be a dict ``{(P, Q): c}`` or a dense array."""

    __slots__ = ()
    _lead = 0

    def __init__(self, spec, coeffs=None):
        if coeffs is None:
            data = np.zeros(spec.shape, dtype=complex)
        elif isinstance(coeffs, dict):
            data = np.zeros(spec.shape, dtype=complex)
            for (P, Q), c in coeffs.items():
                data[spec.index(P, Q)] += c
        else:
            data = coeffs
        super().__init__(spec, data)

    @classmethod
    def zero(cls, spec):
        return cls(spec)

    @classmethod
    def constant(cls, spec, c=1.0):
        return cls(spec, {((0,) * spec.n, (0,) * spec.d): c})

    @classmethod
    def monomial(cls, spec, P, Q, c=1.0):
        return cls(spec, {(tuple(P), tuple(Q)): c})

    def identity_like(self):
        return FourierTaylorSeries.constant(self.spec, 1.0)

    def __getitem__(self, mode):
        P, Q = mode
        return complex(self.data[self.spec.index(P, Q)])

    def items(self):
        for idx in zip(*np.nonzero(self.data)):
            yield self.spec.mode(idx), complex(self.data[idx])

    def to_dict(self):
        return dict(self.items())

    def __repr__(self):
        return f"FourierTaylorSeries({self.spec}, nnz={self.nnz})"


class MatrixSeries(_SeriesBase):
    """``ell x ell`` matrix of series sharing one truncation."""

    __slots__ = ()
    _lead = 2

    def __init__(self, spec, data):
        data = np.asarray(data, dtype=complex)
        if data.ndim < 2 or data.shape[0] != data.shape[1] or data.shape[0] < 1:
            raise ValueError("matrix series needs a square, non-empty leading block")
        super().__init__(spec, data)

    @classmethod
    def identity(cls, spec, ell):
        data = np.zeros((ell, ell) + spec.shape, dtype=complex)
        origin = spec.index((0,) * spec.n, (0,) * spec.d)
        for a in range(ell):
            data[(a, a) + origin] = 1.0
        return cls(spec, data)

    @classmethod
    def zeros(cls, spec, ell):
        return cls(spec, np.zeros((ell, ell) + spec.shape, dtype=complex))

    @classmethod
    def from_entries(cls, entries):
        spec = entries[0][0].spec
        for row in entries:
            for e in row:
                if e.spec != spec:
                    raise SpecMismatch("entries do not share a truncation")
        return cls(spec, np.array([[e.data for e in row] for row in entries]))

    @property
    def ell(self):
        return self.data.shape[0]

    def identity_like(self):
        return MatrixSeries.identity(self.spec, self.ell)

    def entry(self, a, b):
        return FourierTaylorSeries(self.spec, self.data[a, b])

    def __repr__(self):
        return f"MatrixSeries(ell={self.ell}, {self.spec}, nnz={self.nnz})"


# -- operations --------------------------------------------------------------

def add(a, b):
    """Coefficientwise sum."""
    a._check(b)
    return a._new(a.data + b.data)


def _flat_nonzero(arr, spec):
    idx = np.nonzero(arr)
    if not idx[0].size:
        return None, None
    flat = np.zeros(idx[0].size, dtype=np.intp)
    for ax, ix in enumerate(idx):
        flat += ix.astype(np.intp) * spec.full_strides[ax]
    return flat, np.ascontiguousarray(arr[idx])


def _conv_into(out, a, b, spec):
    ia, va = _flat_nonzero(a, spec)
    ib, vb = _flat_nonzero(b, spec)
    if ia is None or ib is None:
        return
    if ia.size > ib.size:  # loop over the sparser operand
        ia, va, ib, vb = ib, vb, ia, va
    kernels.conv_accumulate(ia, va, ib, vb, out)


def _dropped_mass(full, spec, weight):
    """Majorant mass of the part of ``full`` outside the truncation (per leading index)."""
    absval = np.abs(full)
    if weight is not None:
        absval = absval * weight.full_grid(spec)
    drop = ~spec.full_kept
    axes = tuple(range(full.ndim - len(spec.full_shape), full.ndim))
    return np.where(drop, absval, 0.0).sum(axis=axes)


def mul(a, b, weight=None):
    """Truncated product and the majorant mass of the modes it dropped.

    For matrix series this is the matrix product.  The loss is measured with
    ``weight`` (plain l1 mass when ``None``) and, for matrices, as the largest
    row sum of dropped entry masses.
    """
    a._check(b)
    spec = a.spec
    size = int(np.prod(spec.full_shape))
    if isinstance(a, MatrixSeries):
        ell = a.ell
        full = np.zeros((ell, ell, size), dtype=complex)
        for i in range(ell):
            for k in range(ell):
                for j in range(ell):
                    _conv_into(full[i, k], a.data[i, j], b.data[j, k], spec)
        full = full.reshape((ell, ell) + spec.full_shape)
        lost = _dropped_mass(full, spec, weight)
        loss = float(lost.sum(axis=1).max())
        kept = full[(slice(None), slice(None)) + spec.crop]
    else:
        full = np.zeros(size, dtype=complex)
        _conv_into(full, a.data, b.data, spec)
        full = full.reshape(spec.full_shape)
        loss = float(_dropped_mass(full, spec, weight))
        kept = full[spec.crop]
    return a._new(kept), loss


def neumann_inverse(m, weight=None):
    """Inverse of ``I + phi`` as ``sum_k (-phi)**k`` for ``phi = O(v)``.

    The sum is finite: ``(-phi)**k`` vanishes once ``k * deg(phi) > m_max``.
    Returns ``(inverse, truncation_loss)``.
    """
    eye = m.identity_like()
    phi = m - eye
    if _has_v_free_part(phi):
        raise BadJet("neumann_inverse needs m = I + phi with phi = O(v)")
    d0 = phi.min_degree
    if d0 is None:
        return eye, 0.0
    neg = -phi
    total, term, loss = eye, eye, 0.0
    for _ in range(m.spec.m_max // d0):
        term, lost = mul(term, neg, weight)
        loss += lost
        if term.is_zero:
            break
        total = total + term
    return total, loss


def _has_v_free_part(s):
    deg0 = np.broadcast_to(s.spec.degree == 0, s.spec.shape)
    return bool((s.data[..., deg0] != 0).any())


def _check_deck(j, deck, spec):
    if deck.n != spec.n or deck.d != spec.d:
        raise ValueError(f"deck maps (n={deck.n}, d={deck.d}) do not match {spec}")
    if not 1 <= j <= deck.n:
        raise IndexError(f"deck index {j} out of range 1..{deck.n}")


@lru_cache(maxsize=256)
def _turns_grid(deck, j, spec):
    e = deck.lattice.e[j - 1]
    P = spec.p_points.astype(float)
    aP = P @ e.real
    aP = aP - np.round(aP)
    bP = P @ e.imag
    aQ = spec.q_points.astype(float) @ deck.bundle.angles[j - 1]
    aQ = aQ - np.round(aQ)
    fs = (1,) * spec.d
    ts = (1,) * spec.n
    a = aP.reshape(aP.shape + fs) + aQ.reshape(ts + aQ.shape)
    b = np.broadcast_to(bP.reshape(bP.shape + fs), spec.shape)
    return a, b


@lru_cache(maxsize=256)
def _multiplier_grid(deck, j, spec):
    a, b = _turns_grid(deck, j, spec)
    g = exp_turns(a, b)
    g.flags.writeable = False
    return g


def unit_divisor_grid(deck, i, spec):
    """``lam_i**P mu_i**Q - 1`` on every cell of the truncation grid."""
    _check_deck(i, deck, spec)
    return _divisor_grid(deck, i, spec)


@lru_cache(maxsize=256)
def _divisor_grid(deck, i, spec):
    a, b = _turns_grid(deck, i, spec)
    g = expm1_turns(a, b)
    g.flags.writeable = False
    return g


def compose_deck(f, j, deck):
    """Right composition with the deck generator ``tau_j``: ``f(T_j h, M_j v)``."""
    _check_deck(j, deck, f.spec)
    return f._new(f.data * _multiplier_grid(deck, j, f.spec))


def jet_truncate(f, q):
    """Keep the part of ``f`` of v-degree at most ``q``."""
    if q < 0:
        raise ValueError("jet degree must be >= 0")
    keep = np.broadcast_to(f.spec.degree <= q, f.spec.shape)
    return f._new(np.where(keep, f.data, 0))


def majorant_norm(f, weight=None):
    """Weighted l1 majorant ``sum |c[P,Q]| W(P, eps) r**|Q|``.

    Dominates the sup norm on ``Omega_{eps,r}``.  Matrices use the largest
    row sum of entry majorants, which is submultiplicative.  ``weight=None``
    gives the plain l1 norm of the coefficients.
    """
    absval = np.abs(f.data)
    if weight is not None:
        absval = absval * weight.grid(f.spec)
    axes = tuple(range(absval.ndim - len(f.spec.shape), absval.ndim))
    per = absval.sum(axis=axes)
    if isinstance(f, MatrixSeries):
        return float(per.sum(axis=1).max())
    return float(per)


def evaluate(f, z, v):
    """Value at ``h = exp(2*pi*i*z)`` and fiber point ``v``.

    Returns a complex number, or an ``ell x ell`` array for matrix series.
    """
    spec = f.spec
    z = np.asarray(z, dtype=complex).reshape(spec.n)
    v = np.asarray(v, dtype=complex).reshape(spec.d)
    hp = np.exp(1j * TWO_PI * (spec.p_points @ z))
    vq = np.prod(v ** spec.q_points, axis=-1)
    basis = hp.reshape(hp.shape + (1,) * spec.d) * vq.reshape((1,) * spec.n + vq.shape)
    axes = tuple(range(f.data.ndim - len(spec.shape), f.data.ndim))
    val = (f.data * basis).sum(axis=axes)
    return complex(val) if isinstance(f, FourierTaylorSeries) else val


def lowest_degree(fs):
    """Minimum v-degree over a list of series, ``math.inf`` if all vanish."""
    degs = [f.min_degree for f in fs]
    degs = [x for x in degs if x is not None]
    return min(degs) if degs else math.inf
