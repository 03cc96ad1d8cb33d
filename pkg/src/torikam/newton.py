"""Quadratic Newton scheme trivializing a cocycle ``F_i = I + f_i``.

Step ``k`` (with ``m = 2**k - 1`` and ``f_i = O(v**(m+1))``) solves
``L_i(phi) = -J^(2m+1) f_i``, conjugates by ``Phi = I + phi`` and leaves a
remainder ``f_i^+ = O(v**(2m+2))``.  The remainder is formed as

    f^+ = ((f - J f) + phi(tau_i) f) (I + phi)^-1

which is algebraically equal to ``Phi(tau_i) F Phi^-1 - I`` but never
subtracts two near-identity matrices, so tiny residuals keep full relative
precision.  Norms on step ``k`` use the majorant weight of
``Omega_{eps_k, r_k}`` from :class:`DomainSchedule`.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .cohomology import SolverSettings, solve_cohomology
from .errors import BadJet, DegreeOverflow, Diverged, ScheduleError
from .series import (
    MajorantWeight, MatrixSeries, _has_v_free_part, compose_deck, jet_truncate,
    lowest_degree, majorant_norm, mul, neumann_inverse,
)

log = logging.getLogger(__name__)

_ZETA2 = math.pi ** 2 / 6


def schedule_values(delta0, eps0, r0, kappa, kmax):
    """``(delta_k, eps_k, r_k)`` for ``k = 0..kmax`` as arrays, without any checks."""
    k = np.arange(kmax + 1)
    delta = delta0 / (k + 1.0) ** 2
    part = np.concatenate([[0.0], np.cumsum(delta[:-1])])
    return delta, eps0 - 5 * part / kappa, r0 * np.exp(-5 * part)


@dataclass(frozen=True)
class DomainSchedule:
    """``delta_k = delta0/(k+1)**2``, ``eps_{k+1} = eps_k - 5 delta_k/kappa``, ``r_{k+1} = r_k exp(-5 delta_k)``.

    Construction fails with :class:`ScheduleError` unless the limits stay
    strictly above ``eps0/2`` and ``r0/2``.
    """

    delta0: float = 0.02
    eps0: float = 0.5
    r0: float = 0.9
    kappa: float = 1.0
    mu_exp: float = 8.0

    def __post_init__(self):
        for name in ("delta0", "eps0", "r0"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ScheduleError(f"{name} must lie in (0, 1), got {v}")
        if not self.kappa > 0:
            raise ScheduleError(f"kappa must be positive, got {self.kappa}")
        if not self.mu_exp > 0:
            raise ScheduleError(f"mu_exp must be positive, got {self.mu_exp}")
        total = self.delta0 * _ZETA2
        if 5 * total / self.kappa >= self.eps0 / 2:
            raise ScheduleError(
                f"eps_k would reach eps0/2: 5*sum(delta_k)/kappa = {5 * total / self.kappa:.4g}"
                f" >= {self.eps0 / 2:.4g}")
        if 5 * total >= math.log(2.0):
            raise ScheduleError(
                f"r_k would reach r0/2: 5*sum(delta_k) = {5 * total:.4g} >= log 2")

    def delta(self, k):
        return self.delta0 / (k + 1) ** 2

    def _partial(self, k):
        # sum_{j<k} delta_j, summed from the small end for accuracy
        return self.delta0 * math.fsum(1.0 / (j * j) for j in range(k, 0, -1))

    def eps(self, k):
        return self.eps0 - 5 * self._partial(k) / self.kappa

    def r(self, k):
        return self.r0 * math.exp(-5 * self._partial(k))

    def arrays(self, kmax):
        """``(delta, eps, r)`` for ``k = 0..kmax`` as arrays."""
        return schedule_values(self.delta0, self.eps0, self.r0, self.kappa, kmax)

    @property
    def eps_limit(self):
        return self.eps0 - 5 * self.delta0 * _ZETA2 / self.kappa

    @property
    def r_limit(self):
        return self.r0 * math.exp(-5 * self.delta0 * _ZETA2)

    def weight(self, lattice, k):
        return MajorantWeight(lattice, self.eps(k), self.r(k))

    def final_weight(self, lattice):
        """Weight of ``Omega_{eps0/2, r0/2}``, inside every scheduled domain."""
        return MajorantWeight(lattice, self.eps0 / 2, self.r0 / 2)


def schedule(delta0=0.02, eps0=0.5, r0=0.9, kappa=1.0, mu_exp=8.0):
    return DomainSchedule(delta0, eps0, r0, kappa, mu_exp)


class Cocycle:
    """Deck maps together with ``F_1 .. F_n``, each ``I + O(v)``."""

    __slots__ = ("deck", "F")

    def __init__(self, deck, F):
        F = tuple(F)
        if len(F) != deck.n:
            raise ValueError(f"need {deck.n} matrices, got {len(F)}")
        for Fi in F:
            if not isinstance(Fi, MatrixSeries):
                raise TypeError("cocycle entries must be MatrixSeries")
            F[0]._check(Fi)
        spec = F[0].spec
        if (spec.n, spec.d) != (deck.n, deck.d):
            raise ValueError(f"deck maps (n={deck.n}, d={deck.d}) do not match {spec}")
        eye = F[0].identity_like()
        for i, Fi in enumerate(F, 1):
            if _has_v_free_part(Fi - eye):
                raise BadJet(f"F_{i}(h, 0) is not the identity")
        self.deck = deck
        self.F = F

    @classmethod
    def from_f(cls, deck, f):
        eye = f[0].identity_like()
        return cls(deck, [eye + fi for fi in f])

    @classmethod
    def identity(cls, deck, spec, ell):
        eye = MatrixSeries.identity(spec, ell)
        return cls(deck, [eye] * deck.n)

    @property
    def f(self):
        eye = self.F[0].identity_like()
        return tuple(Fi - eye for Fi in self.F)

    @property
    def spec(self):
        return self.F[0].spec

    @property
    def ell(self):
        return self.F[0].ell

    @property
    def n(self):
        return len(self.F)


def automorphy_residual(c, weight=None):
    """``max_{i<j} ||F_j(tau_i) F_i - F_i(tau_j) F_j||``.

    Expanded in ``f`` so that the identity parts cancel exactly.
    """
    f = c.f
    worst = 0.0
    for i in range(c.n):
        for j in range(i + 1, c.n):
            fj_ti = compose_deck(f[j], i + 1, c.deck)
            fi_tj = compose_deck(f[i], j + 1, c.deck)
            left = fj_ti + f[i] + mul(fj_ti, f[i])[0]
            right = fi_tj + f[j] + mul(fi_tj, f[j])[0]
            worst = max(worst, majorant_norm(left - right, weight))
    return worst


def conjugate(c, Phi, weight=None):
    """``Phi(tau_i) F_i Phi^-1 - I`` for every ``i`` and the truncation loss."""
    inv, loss = neumann_inverse(Phi, weight)
    eye = Phi.identity_like()
    out = []
    for i, Fi in enumerate(c.F, 1):
        a, l1 = mul(compose_deck(Phi, i, c.deck), Fi, weight)
        b, l2 = mul(a, inv, weight)
        loss += l1 + l2
        out.append(b - eye)
    return out, loss


@dataclass
class StepRecord:
    k: int
    m: int
    delta_k: float
    eps_k: float
    r_k: float
    f_in_norm: float
    f_norm: float
    phi_norm: float
    min_vdeg: int
    automorphy_res: float
    trunc_loss: float
    min_divisor: float
    gain: float
    composed_norms: list
    feasible: bool
    decay_hypothesis: bool
    decay_conclusion: bool

    CSV_FIELDS = ("k", "m", "delta_k", "eps_k", "r_k", "f_norm", "phi_norm",
                  "min_vdeg", "automorphy_res", "trunc_loss")

    def csv_row(self):
        return [getattr(self, name) for name in self.CSV_FIELDS]


def newton_step(c, k, sched, settings=SolverSettings()):
    """One Newton step; returns ``(Phi, c_plus, record)``.

    Requires ``f_i = O(v**(m+1))`` for ``m = 2**k - 1``.  Raises
    :class:`DegreeOverflow` when ``m + 1 > m_max``, i.e. the jet is exhausted.
    """
    spec = c.spec
    m = 2 ** k - 1
    if m + 1 > spec.m_max:
        raise DegreeOverflow(f"step {k} needs degree {m + 1} > m_max = {spec.m_max}")
    f = c.f
    if lowest_degree(f) < m + 1:
        raise BadJet(f"step {k} needs f = O(v^{m + 1}), lowest degree is {lowest_degree(f)}")
    lattice = c.deck.lattice
    w_in = sched.weight(lattice, k)
    w_out = sched.weight(lattice, k + 1)
    q = min(2 * m + 1, spec.m_max)

    sol = solve_cohomology([-jet_truncate(fi, q) for fi in f], c.deck, settings, weight=w_in)
    phi = sol.G
    Phi = phi.identity_like() + phi
    inv, loss = neumann_inverse(Phi, w_out)
    new_f = []
    for i, fi in enumerate(f, 1):
        head, l1 = mul(compose_deck(phi, i, c.deck), fi, w_out)
        fp, l2 = mul(head + (fi - jet_truncate(fi, q)), inv, w_out)
        loss += l1 + l2
        new_f.append(fp)
    c_plus = Cocycle.from_f(c.deck, new_f)

    f_in = max(majorant_norm(fi, w_in) for fi in f)
    f_out = max(majorant_norm(fi, w_out) for fi in new_f)
    deg = lowest_degree(new_f)
    delta = sched.delta(k)
    # feasibility with the observed solver gain standing in for C' delta^-(tau+nu)
    feasible = sol.gain * math.exp(-(m + 1) * delta) * delta ** sched.mu_exp < 0.5
    rec = StepRecord(
        k=k, m=m, delta_k=delta, eps_k=w_in.eps, r_k=w_in.r,
        f_in_norm=f_in, f_norm=f_out, phi_norm=majorant_norm(phi, w_in),
        min_vdeg=spec.m_max + 1 if deg == math.inf else int(deg),
        automorphy_res=automorphy_residual(c_plus, w_out), trunc_loss=loss,
        min_divisor=sol.min_divisor, gain=sol.gain, composed_norms=sol.composed_norms,
        feasible=feasible,
        decay_hypothesis=f_in <= delta ** sched.mu_exp,
        decay_conclusion=f_out <= sched.delta(k + 1) ** sched.mu_exp,
    )
    return Phi, c_plus, rec


@dataclass
class ConvergenceReport:
    steps: list
    phi_inf: MatrixSeries = field(repr=False)
    initial_f_norm: float
    final_f_norm: float
    final_residual: float
    final_loss: float
    stop_reason: str
    verdict: str
    k0: int | None
    decay_violations: list

    @property
    def residual_norms(self):
        """``[||f_0||, ||f_1||, ...]``: entry norm then the norm after each step."""
        return [self.initial_f_norm] + [s.f_norm for s in self.steps]

    def summary(self):
        return {
            "verdict": self.verdict,
            "stop_reason": self.stop_reason,
            "steps": len(self.steps),
            "initial_f_norm": self.initial_f_norm,
            "final_f_norm": self.final_f_norm,
            "final_residual": self.final_residual,
            "final_truncation_loss": self.final_loss,
            "k0": self.k0,
            "decay_violations": list(self.decay_violations),
            "convergence_order": convergence_order(self.residual_norms),
            "min_divisors": [s.min_divisor for s in self.steps],
            "solver_gains": [s.gain for s in self.steps],
        }


def convergence_order(norms):
    """Least-squares slope of ``log e_{k+1}`` against ``log e_k`` over positive pairs."""
    pairs = [(a, b) for a, b in zip(norms, norms[1:]) if a > 0 and b > 0]
    if len(pairs) < 2:
        return math.nan
    x = np.log([p[0] for p in pairs])
    y = np.log([p[1] for p in pairs])
    return float(np.polyfit(x, y, 1)[0])


def trivialize(c, sched, settings=SolverSettings(), tol=1e-12, max_steps=20,
               verify_tol=1e-10):
    """Run Newton steps until ``max_i ||f_i|| <= tol``, jet exhaustion or ``max_steps``.

    Returns ``(Phi_inf, report)``.  The final residual is recomputed from the
    original cocycle on ``Omega_{eps0/2, r0/2}``; the verdict is
    ``"converged"`` when it is at most ``verify_tol``.  Raises
    :class:`Diverged` when the residual norm grows on two consecutive steps.
    """
    lattice = c.deck.lattice
    Phi_inf = MatrixSeries.identity(c.spec, c.ell)
    cur = c
    steps, violations = [], []
    k0 = None
    f0 = max(majorant_norm(fi, sched.weight(lattice, 0)) for fi in c.f)
    norms = [f0]
    stop = "max-steps"
    for k in range(max_steps):
        if norms[-1] <= tol:
            stop = "tolerance"
            break
        if 2 ** k > c.spec.m_max:
            stop = "jet-exhausted"
            break
        Phi, cur, rec = newton_step(cur, k, sched, settings)
        Phi_inf = mul(Phi, Phi_inf)[0]
        steps.append(rec)
        norms.append(rec.f_norm)
        if k0 is None and rec.decay_hypothesis and rec.feasible:
            k0 = k
        if k0 is not None and rec.decay_hypothesis and not rec.decay_conclusion:
            violations.append(k)
            log.warning("decay criterion failed at step %d: %.3e > %.3e",
                        k, rec.f_norm, sched.delta(k + 1) ** sched.mu_exp)
        log.info("step %d: |f| %.3e -> %.3e, |phi| %.3e, min divisor %.3e",
                 k, rec.f_in_norm, rec.f_norm, rec.phi_norm, rec.min_divisor)
        if len(norms) >= 3 and norms[-1] > norms[-2] > norms[-3]:
            raise Diverged(f"residual grew on steps {k - 1} and {k}: "
                           f"{norms[-3]:.3e} -> {norms[-2]:.3e} -> {norms[-1]:.3e}")
    else:
        if norms[-1] <= tol:
            stop = "tolerance"
        elif 2 ** max_steps > c.spec.m_max:
            stop = "jet-exhausted"

    w_final = sched.final_weight(lattice)
    res, loss = conjugate(c, Phi_inf, w_final)
    final = max(majorant_norm(r, w_final) for r in res)
    verdict = "converged" if final <= verify_tol else (
        "truncation-limited" if stop == "jet-exhausted" else "not-converged")
    report = ConvergenceReport(
        steps=steps, phi_inf=Phi_inf, initial_f_norm=f0, final_f_norm=norms[-1],
        final_residual=final, final_loss=loss, stop_reason=stop, verdict=verdict,
        k0=k0, decay_violations=violations,
    )
    return Phi_inf, report
