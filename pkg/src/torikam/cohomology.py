"""The vertical cohomological operator ``L_i(G) = G o tau_i - G`` and its inverse.

On a monomial ``h**P v**Q`` the operator is multiplication by the divisor
``lam_i**P mu_i**Q - 1``, so a compatible family ``L_i(G) = F_i`` is solved
mode by mode, dividing by the largest of the ``n`` available divisors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadJet, Incompatible, ResonantMode
from .lattice import RESONANCE_THRESHOLD
from .series import (
    MatrixSeries, _has_v_free_part, compose_deck, majorant_norm, unit_divisor_grid,
)


@dataclass(frozen=True)
class SolverSettings:
    """Tolerances of :func:`solve_cohomology`.

    resonance_threshold
        Modes whose largest divisor is below this are treated as resonant.
    coef_rtol
        A resonant mode is an error when some ``|F_i|`` coefficient there
        exceeds ``coef_rtol`` times the largest coefficient of the data.
    compat_rtol
        Allowed compatibility residual relative to ``max_i ||F_i||``.
    """

    resonance_threshold: float = RESONANCE_THRESHOLD
    coef_rtol: float = 1e-10
    compat_rtol: float = 1e-8


@dataclass
class CohomologySolution:
    G: object
    operator: np.ndarray = field(repr=False)
    residuals: list
    coef_residual: float
    min_divisor: float
    skipped: list
    compat_residual: float
    F_norm: float
    G_norm: float
    composed_norms: list

    @property
    def gain(self):
        """``||G|| / max_i ||F_i||``; the empirical stand-in for ``C' / delta**(tau + nu)``."""
        return self.G_norm / self.F_norm if self.F_norm else 0.0

    def to_dict(self):
        return {
            "min_divisor": self.min_divisor,
            "resonances_skipped": [[list(P), list(Q)] for P, Q in self.skipped],
            "residuals": list(self.residuals),
            "coef_residual": self.coef_residual,
            "compat_residual": self.compat_residual,
            "F_norm": self.F_norm,
            "G_norm": self.G_norm,
            "gain": self.gain,
            "composed_norms": list(self.composed_norms),
        }


def apply_L(G, i, deck):
    """``G(tau_i) - G``: coefficient ``c[P,Q]`` becomes ``(lam_i**P mu_i**Q - 1) c[P,Q]``."""
    return G._new(G.data * unit_divisor_grid(deck, i, G.spec))


def check_compatibility(F, deck, weight=None):
    """``max_{i<j} ||L_i(F_j) - L_j(F_i)||``; zero when ``n == 1``."""
    worst = 0.0
    for i in range(len(F)):
        for j in range(i + 1, len(F)):
            diff = apply_L(F[j], i + 1, deck) - apply_L(F[i], j + 1, deck)
            worst = max(worst, majorant_norm(diff, weight))
    return worst


def coefficient_envelope(F):
    """Series whose coefficients are ``max_i |F_i[P,Q]|``."""
    env = np.max(np.abs(np.stack([f.data for f in F])), axis=0)
    return F[0]._new(env)


def _cell_support(f):
    nz = f.data != 0
    if isinstance(f, MatrixSeries):
        nz = nz.any(axis=(0, 1))
    return nz


# relative pull toward zero applied where the division rounded onto the bound
_CLAMP = 2.0 ** -50


def _clamp_to_bound(g, f, min_div):
    """Make ``|g| <= |f| / min_div`` hold for the stored doubles.

    On modes whose divisor is the minimum the bound is an equality in exact
    arithmetic and rounding may overshoot it; those coefficients are scaled
    to ``(1 - 2**-50) |f| / min_div``.
    """
    cap = np.abs(f) / min_div * (1.0 - _CLAMP)
    mag = np.abs(g)
    over = mag > cap
    if over.any():
        g[over] *= cap[over] / mag[over]


def solve_cohomology(F, deck, settings=SolverSettings(), weight=None):
    """Find ``G`` with ``L_i(G) = F_i`` for every ``i``.

    ``F`` is a list of ``n`` series of one type (scalar or matrix) without
    v-free terms.  For each mode the operator index with the largest divisor
    is used (smallest index on ties).  Resonant modes whose coefficients are
    negligible are skipped and listed; otherwise :class:`ResonantMode` is
    raised.  ``weight`` only affects the reported norms.
    """
    F = list(F)
    if len(F) != deck.n:
        raise ValueError(f"need {deck.n} right-hand sides, got {len(F)}")
    for f in F[1:]:
        F[0]._check(f)
    spec = F[0].spec
    for i, f in enumerate(F, 1):
        if _has_v_free_part(f):
            raise BadJet(f"F_{i} has a v-independent term")

    F_norm = max(majorant_norm(f, weight) for f in F)
    compat = check_compatibility(F, deck, weight) if len(F) > 1 else 0.0
    if compat > settings.compat_rtol * F_norm:
        raise Incompatible(f"compatibility residual {compat:.3e} exceeds "
                           f"{settings.compat_rtol:.1e} * {F_norm:.3e}", residual=compat)

    div = np.stack([unit_divisor_grid(deck, i, spec) for i in range(1, deck.n + 1)])
    absdiv = np.abs(div)
    best = np.argmax(absdiv, axis=0)
    dmax = np.take_along_axis(absdiv, best[None], axis=0)[0]

    support = np.zeros(spec.shape, dtype=bool)
    for f in F:
        support |= _cell_support(f)
    resonant = support & (dmax < settings.resonance_threshold)
    scale = max(f.max_abs() for f in F)

    skipped = []
    if resonant.any():
        bad = []
        for idx in zip(*np.nonzero(resonant)):
            peak = max(float(np.abs(f.data[(..., *idx)]).max()) for f in F)
            mode = spec.mode(idx)
            if peak > settings.coef_rtol * scale:
                bad.append(mode)
            else:
                skipped.append(mode)
        if bad:
            raise ResonantMode(f"{len(bad)} resonant mode(s) with nonzero data, first {bad[0]}",
                               modes=bad)

    solve = support & ~resonant
    stacked = np.stack([f.data for f in F])
    lead = stacked.ndim - 1 - len(spec.shape)
    pick = np.broadcast_to(best.reshape((1,) * (1 + lead) + best.shape), (1,) + stacked.shape[1:])
    chosen_f = np.take_along_axis(stacked, pick, axis=0)[0]
    chosen_d = np.take_along_axis(div, best[None], axis=0)[0]
    g = np.zeros_like(chosen_f)
    np.divide(chosen_f, chosen_d, out=g, where=np.broadcast_to(solve, g.shape))
    min_div = float(dmax[solve].min()) if solve.any() else math.inf
    if solve.any():
        _clamp_to_bound(g, chosen_f, min_div)
    G = F[0]._new(g)

    residuals, coef_res = [], 0.0
    for i, f in enumerate(F, 1):
        diff = apply_L(G, i, deck) - f
        residuals.append(majorant_norm(diff, weight))
        coef_res = max(coef_res, diff.max_abs())

    operator = np.where(solve, best + 1, 0)
    return CohomologySolution(
        G=G,
        operator=operator,
        residuals=residuals,
        coef_residual=coef_res,
        min_divisor=min_div,
        skipped=skipped,
        compat_residual=compat,
        F_norm=F_norm,
        G_norm=majorant_norm(G, weight),
        composed_norms=[majorant_norm(compose_deck(G, i, deck), weight)
                        for i in range(1, deck.n + 1)],
    )
