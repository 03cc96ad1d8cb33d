import math

import numpy as np
import pytest

from conftest import make_deck
from torikam.cocycle_lab import (
    SynthesisSpec, inject_resonance, random_near_identity, synthesize_cocycle,
)
from torikam.errors import BadJet, DegreeOverflow, Diverged, ResonantMode, ScheduleError
from torikam.newton import (
    Cocycle, DomainSchedule, automorphy_residual, conjugate, convergence_order, newton_step,
    schedule, schedule_values, trivialize,
)
from torikam.series import (
    FourierTaylorSeries, MatrixSeries, TruncationSpec, jet_truncate, majorant_norm, mul,
)


# -- schedule ---------------------------------------------------------------

def test_schedule_examples():
    s = schedule(delta0=0.01, r0=0.9)
    assert s.r(1) == pytest.approx(0.9 * math.exp(-0.05), rel=1e-15)
    # delta0 = 0.1 breaks r_k > r0/2, so only the raw formula is evaluated
    delta, _, _ = schedule_values(0.1, 0.5, 0.9, 1.0, 2)
    assert list(delta) == pytest.approx([0.1, 0.025, 0.1 / 9])
    with pytest.raises(ScheduleError):
        DomainSchedule(0.1, eps0=0.99, r0=0.9, kappa=2.0)
    s = schedule(delta0=0.08, eps0=0.9, r0=0.9, kappa=2.0)
    assert s.r_limit == pytest.approx(0.9 * math.exp(-5 * 0.08 * math.pi ** 2 / 6))
    assert s.r_limit > 0.45


def test_schedule_recurrence_matches_closed_form():
    s = schedule(delta0=0.02, eps0=0.5, r0=0.9, kappa=1.0)
    eps, r = s.eps0, s.r0
    for k in range(30):
        assert s.eps(k) == pytest.approx(eps, rel=1e-14)
        assert s.r(k) == pytest.approx(r, rel=1e-14)
        eps -= 5 * s.delta(k) / s.kappa
        r *= math.exp(-5 * s.delta(k))
    delta, eps_a, r_a = s.arrays(29)
    assert eps_a[-1] == pytest.approx(s.eps(29), rel=1e-13)
    assert r_a[-1] == pytest.approx(s.r(29), rel=1e-13)


def test_schedule_rejects():
    with pytest.raises(ScheduleError):
        schedule(delta0=0.5, kappa=1.0)
    with pytest.raises(ScheduleError):
        schedule(delta0=0.0)
    with pytest.raises(ScheduleError):
        schedule(eps0=1.5)
    with pytest.raises(ScheduleError):
        schedule(kappa=0.0)
    with pytest.raises(ScheduleError):
        # eps fine with large kappa, r fails: 5 * 0.09 * pi^2/6 > log 2
        schedule(delta0=0.09, eps0=0.9, kappa=100.0)


# -- cocycle ----------------------------------------------------------------

def test_cocycle_requires_identity_at_zero_section():
    deck = make_deck()
    spec = TruncationSpec(0, 3)
    with pytest.raises(BadJet):
        Cocycle(deck, [MatrixSeries.identity(spec, 2) * 2.0])
    with pytest.raises(ValueError):
        Cocycle(deck, [])


def test_automorphy_examples(deck2):
    spec = TruncationSpec(3, 3, n=2)
    assert automorphy_residual(Cocycle.identity(deck2, spec, 2)) == 0.0
    c1 = synthesize_cocycle(random_near_identity(SynthesisSpec(seed=1), TruncationSpec(0, 4)),
                            make_deck())
    assert automorphy_residual(c1) == 0.0
    Psi = random_near_identity(SynthesisSpec(seed=2, amplitude=1e-2, fourier_support=1), spec)
    c = synthesize_cocycle(Psi, deck2)
    assert automorphy_residual(c) <= 1e-12
    # a random non-cocycle fails
    bump = np.zeros_like(c.F[0].data)
    bump[(0, 1) + spec.index((0, 0), (1,))] = 1e-3
    bad = Cocycle(deck2, [c.F[0] + MatrixSeries(spec, bump), c.F[1]])
    assert automorphy_residual(bad) > 1e-6


# -- newton_step ------------------------------------------------------------

def test_step_on_trivial_cocycle():
    deck = make_deck()
    spec = TruncationSpec(0, 4)
    c = Cocycle.identity(deck, spec, 2)
    Phi, cp, rec = newton_step(c, 0, schedule())
    assert Phi == MatrixSeries.identity(spec, 2)
    assert all(a == b for a, b in zip(cp.F, c.F))
    assert rec.f_norm == 0


def test_step_single_mode_scalar(backend):
    deck = make_deck()
    spec = TruncationSpec(0, 8)
    eta = 1e-2
    f = MatrixSeries(spec, FourierTaylorSeries.monomial(spec, (0,), (1,), eta).data[None, None])
    c = Cocycle.from_f(deck, [f])
    sched = schedule()
    Phi, cp, rec = newton_step(c, 0, sched)
    mu = deck.mu[0, 0]
    phi = (Phi - Phi.identity_like()).entry(0, 0)
    assert abs(phi[(0,), (1,)] - (-eta / (mu - 1))) <= 1e-16
    assert phi.nnz == 1
    assert lowest_deg(cp) >= 1
    _, cp2, _ = newton_step(cp, 1, sched)
    assert lowest_deg(cp2) >= 3
    assert rec.phi_norm <= rec.f_in_norm / rec.min_divisor


def lowest_deg(c):
    degs = [fi.min_degree for fi in c.f if fi.min_degree is not None]
    return min(degs) if degs else math.inf


def test_step_matches_direct_conjugation(backend):
    deck = make_deck(tau=0.1 + 0.6j)
    spec = TruncationSpec(6, 6)
    Psi = random_near_identity(SynthesisSpec(seed=3, amplitude=3e-2, fourier_support=1), spec)
    c = synthesize_cocycle(Psi, deck)
    sched = schedule()
    Phi, cp, _ = newton_step(c, 0, sched)
    direct, _ = conjugate(c, Phi)
    for a, b in zip(cp.f, direct):
        assert majorant_norm(a - b) <= 1e-14


def test_step_precondition_and_overflow():
    deck = make_deck()
    spec = TruncationSpec(0, 4)
    Psi = random_near_identity(SynthesisSpec(seed=4), spec)
    c = synthesize_cocycle(Psi, deck)
    with pytest.raises(BadJet):
        newton_step(c, 1, schedule())  # f still has degree-1 terms
    with pytest.raises(DegreeOverflow):
        newton_step(c, 3, schedule())


# -- trivialize -------------------------------------------------------------

def test_trivialize_identity():
    deck = make_deck()
    spec = TruncationSpec(0, 8)
    Phi, rep = trivialize(Cocycle.identity(deck, spec, 2), schedule())
    assert Phi == MatrixSeries.identity(spec, 2)
    assert rep.steps == [] and rep.verdict == "converged" and rep.final_residual == 0


def test_trivialize_recovers_generator(backend):
    deck = make_deck()
    spec = TruncationSpec(0, 32)
    Psi = random_near_identity(SynthesisSpec(seed=5, amplitude=1e-2), spec)
    c = synthesize_cocycle(Psi, deck)
    Phi, rep = trivialize(c, schedule(), tol=0.0)
    assert rep.verdict == "converged"
    assert rep.final_residual <= 1e-10
    # non-resonant: the trivialization normalized by Phi(h, 0) = I is unique
    assert np.abs(Phi.data - Psi.data).max() <= 1e-12


def test_trivialize_jet_bookkeeping_and_product(backend):
    deck = make_deck()
    spec = TruncationSpec(0, 32)
    c = synthesize_cocycle(random_near_identity(SynthesisSpec(seed=6), spec), deck)
    sched = schedule()
    # replay the steps by hand, checking the left product against each iterate
    Phi_acc = MatrixSeries.identity(spec, 2)
    cur = c
    for k in range(5):
        Phi, cur, rec = newton_step(cur, k, sched)
        Phi_acc = mul(Phi, Phi_acc)[0]
        assert rec.min_vdeg >= 2 ** (k + 1) - 1
        via_product, _ = conjugate(c, Phi_acc)
        for a, b in zip(cur.f, via_product):
            assert majorant_norm(a - b) <= 1e-12
    _, rep = trivialize(c, sched, tol=0.0)
    for s in rep.steps:
        assert s.min_vdeg >= min(2 ** (s.k + 1) - 1, spec.m_max + 1)


def test_trivialize_resonant_input_fails():
    deck = make_deck(theta=1 / 3)
    spec = TruncationSpec(0, 8)
    c = synthesize_cocycle(random_near_identity(SynthesisSpec(seed=7, max_degree=2), spec), deck)
    c = inject_resonance(c, ((0,), (3,)), 1e-3)
    with pytest.raises(ResonantMode) as ei:
        trivialize(c, schedule())
    assert ((0,), (3,)) in ei.value.modes


def test_trivialize_diverges_on_wild_input():
    # near 1/4 the degree-4 and degree-8 divisors are tiny, so large data
    # makes the residual grow on two consecutive steps
    deck = make_deck(theta=0.25 + 1e-5)
    spec = TruncationSpec(0, 32)
    rng = np.random.default_rng(8)
    data = np.zeros((2, 2) + spec.shape, dtype=complex)
    data[..., 0, 1:] = rng.normal(size=(2, 2, spec.m_max)) * 0.5
    c = Cocycle.from_f(deck, [MatrixSeries(spec, data)])
    with pytest.raises(Diverged):
        trivialize(c, schedule(), tol=0.0)


def test_convergence_order_helper():
    e = [1e-2]
    for _ in range(5):
        e.append(e[-1] ** 2)
    assert convergence_order(e) == pytest.approx(2.0)
    assert math.isnan(convergence_order([1.0, 0.0]))


def test_decay_monitor_after_k0():
    deck = make_deck()
    spec = TruncationSpec(0, 64)
    c = synthesize_cocycle(random_near_identity(SynthesisSpec(seed=1), spec), deck)
    _, rep = trivialize(c, schedule(), tol=0.0)
    assert rep.k0 is not None
    assert rep.decay_violations == []
    for s in rep.steps:
        if s.k >= rep.k0 and s.decay_hypothesis:
            assert s.decay_conclusion


def test_jet_truncate_consistency_in_step():
    deck = make_deck()
    spec = TruncationSpec(0, 8)
    c = synthesize_cocycle(random_near_identity(SynthesisSpec(seed=9), spec), deck)
    _, cp, _ = newton_step(c, 0, schedule())
    for fi in cp.f:
        assert jet_truncate(fi, 1).is_zero
