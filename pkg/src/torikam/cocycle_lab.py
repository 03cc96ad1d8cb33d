"""Ground-truth cocycles for testing.

``F_i = (Psi o tau_i)^-1 Psi`` is trivialized by ``Psi`` by construction.

Random coefficients come from NumPy's PCG64 generator seeded with
``SynthesisSpec.seed``.  For every matrix entry ``(a, b)`` in row-major order,
then every mode in the order of :func:`synthesis_modes`, two uniforms
``u1, u2`` in [0, 1) are drawn and mapped to the disc point
``amplitude * sqrt(u1) * exp(2 pi i u2)``, which is uniform in the disc.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import BadJet
from .lattice import RESONANCE_THRESHOLD, multi_indices, unit_divisor
from .newton import Cocycle
from .series import MatrixSeries, compose_deck, mul, neumann_inverse


@dataclass(frozen=True)
class SynthesisSpec:
    seed: int = 0
    amplitude: float = 1e-2
    min_degree: int = 1
    max_degree: int = 3
    fourier_support: int = 0
    ell: int = 2

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("amplitude must be >= 0")
        if self.min_degree < 1:
            raise ValueError("min_degree must be >= 1 (psi has no v-free part)")
        if self.max_degree < self.min_degree:
            raise ValueError("max_degree must be >= min_degree")
        if self.fourier_support < 0:
            raise ValueError("fourier_support must be >= 0")
        if self.ell < 1:
            raise ValueError("ell must be >= 1")


def synthesis_modes(synth, trunc):
    """Modes ``(P, Q)`` receiving a random coefficient, clipped to the truncation.

    ``Q`` runs over degrees ``min_degree..max_degree`` in graded order; ``P``
    over the box ``max|P_k| <= fourier_support`` in lexicographic order.
    """
    s = min(synth.fourier_support, trunc.K)
    Ps = list(itertools.product(range(-s, s + 1), repeat=trunc.n))
    Qs = multi_indices(trunc.d, min(synth.max_degree, trunc.m_max), synth.min_degree)
    return [(P, Q) for Q in Qs for P in Ps]


def random_near_identity(synth, trunc):
    """``I + psi`` with ``psi`` coefficients uniform in the disc of radius ``amplitude``."""
    modes = synthesis_modes(synth, trunc)
    ell = synth.ell
    data = np.zeros((ell, ell) + trunc.shape, dtype=complex)
    if modes and synth.amplitude > 0:
        rng = np.random.Generator(np.random.PCG64(synth.seed))
        u = rng.random((ell, ell, len(modes), 2))
        vals = synth.amplitude * np.sqrt(u[..., 0]) * np.exp(2j * np.pi * u[..., 1])
        for t, (P, Q) in enumerate(modes):
            data[(slice(None), slice(None)) + trunc.index(P, Q)] = vals[:, :, t]
    return MatrixSeries.identity(trunc, ell) + MatrixSeries(trunc, data)


def synthesize_cocycle(Psi, deck, weight=None):
    """Cocycle ``F_i = (Psi o tau_i)^-1 Psi``, trivialized by ``Psi``."""
    F = []
    for i in range(1, deck.n + 1):
        inv, _ = neumann_inverse(compose_deck(Psi, i, deck), weight)
        F.append(mul(inv, Psi, weight)[0])
    return Cocycle(deck, F)


def inject_resonance(c, mode, eta, entry=(0, 0), threshold=RESONANCE_THRESHOLD):
    """Add ``eta`` to ``f_1`` at a mode on which every unit divisor vanishes."""
    P, Q = (tuple(int(x) for x in part) for part in mode)
    if not any(Q):
        raise BadJet("a resonant mode must carry v-degree >= 1")
    divs = [unit_divisor(c.deck, P, Q, i) for i in range(1, c.n + 1)]
    if max(divs) >= threshold:
        raise ValueError(f"mode {(P, Q)} is not resonant: divisors {divs}")
    if eta == 0:
        return c
    spec = c.spec
    bump = np.zeros_like(c.F[0].data)
    bump[tuple(entry) + spec.index(P, Q)] = eta
    F = list(c.F)
    F[0] = F[0] + MatrixSeries(spec, bump)
    return Cocycle(c.deck, F)
