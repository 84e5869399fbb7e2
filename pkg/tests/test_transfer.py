import cmath
import math

import numpy as np
import pytest

from qlab.glrep import fundamental_rep, trivial_rep, verma_rep
from qlab.lax import canonical_lax
from qlab.oscillator import NormalOrderedOp as Op, extrapolated_trace, weighted_trace
from qlab.tensor import comm_norm
from qlab.transfer import (
    OperatorPolynomial, TwistConfig, alternating_sum_T, bgg_eigen_check,
    build_Q, build_T_box, build_T_plus, build_X, build_X_plus, build_twist_D,
    fit_operator_polynomial, number_operator, transfer_at,
)

TW2 = TwistConfig((0.7, -0.7))
TW3 = TwistConfig((0.7, -0.4, -0.3))


# -- twist configuration ---------------------------------------------------------

def test_twist_must_sum_to_zero():
    with pytest.raises(ValueError):
        TwistConfig((0.5, 0.1))


def test_damped_twist_keeps_zero_sum_and_orders_imaginary_parts():
    d = TW3.damped(0.1)
    assert abs(sum(d.phis)) < 1e-12
    imags = [p.imag for p in d.phis]
    assert imags == sorted(imags) and imags[0] < imags[-1]


def test_degenerate_twist_rejected():
    with pytest.raises(ValueError, match="degenerate"):
        build_Q(3, 1, (1,), TwistConfig((0.4, 0.4, -0.8)))


# -- boundary twist operator -----------------------------------------------------

def test_twist_full_set_is_diagonal_phase_matrix():
    rep = fundamental_rep((1, 2, 3))
    D = build_twist_D(3, (1, 2, 3), rep, TW3)
    assert D.carrier_weights == tuple(cmath.exp(1j * p) for p in TW3.phis)
    assert not D.q and not D.plain_modes


def test_twist_single_index_is_pure_oscillator():
    D = build_twist_D(3, (2,), trivial_rep((2,)), TW3)
    assert D.carrier_weights == (1.0,)
    assert set(D.q) == {("o", 2, 1), ("o", 2, 3)}
    assert D.q[("o", 2, 1)] == pytest.approx(cmath.exp(-1j * (TW3.phi(2) - TW3.phi(1))))
    assert not D.plain_modes


@pytest.mark.parametrize("rep_kind", ["verma", "fundamental"])
def test_twist_conjugation_property(rep_kind):
    if rep_kind == "verma":
        rep = verma_rep((0.4, -0.2), labels=(1, 2), tag="v")
    else:
        rep = fundamental_rep((1, 2))
    D = build_twist_D(3, (1, 2), rep, TW3)
    L = canonical_lax(3, (1, 2), rep)
    assert D.conjugation_residual(L, TW3, 0.37) < 1e-12


# -- trivial anchors -------------------------------------------------------------

@pytest.mark.parametrize("n,tw", [(2, TW2), (3, TW3)])
@pytest.mark.parametrize("L", [1, 2, 3])
def test_trivial_q_anchors(n, tw, L):
    dim = n ** L
    q_empty = build_Q(n, L, (), tw)
    assert np.max(np.abs(q_empty.at(0.41).to_dense() - np.eye(dim))) < 1e-13
    q_full = build_Q(n, L, tuple(range(1, n + 1)), tw)
    assert abs(q_full.sigma) < 1e-13
    for z in (0.83, -0.27):
        diff = q_full.at(z).to_dense() - z ** L * np.eye(dim)
        assert np.max(np.abs(diff)) < 1e-13


# -- closed-form one-site oracles -----------------------------------------------

def test_one_site_single_index_q_closed_form():
    q1 = build_Q(2, 1, (1,), TW2)
    assert q1.sigma == pytest.approx(TW2.phi(1))
    g = cmath.exp(-1j * (TW2.phi(1) - TW2.phi(2)))
    pole = g / (1 - g)
    for z in (0.83, -0.4):
        expect = np.diag([z - 0.5 - pole, 1.0])
        assert np.max(np.abs(q1.poly_at(z).to_dense() - expect)) < 1e-13


def test_one_site_box_transfer_closed_form():
    tb = build_T_box(2, 1, TW2)
    w1, w2 = cmath.exp(1j * TW2.phi(1)), cmath.exp(1j * TW2.phi(2))
    for z in (0.83, -0.4):
        expect = np.diag([w1 * (z + 1) + w2 * z, w1 * z + w2 * (z + 1)])
        assert np.max(np.abs(tb.at(z).to_dense() - expect)) < 1e-13


def test_degree_equals_chain_length():
    tb = build_T_box(2, 3, TW2)
    assert tb.degree == 3
    assert tb.coeffs[3].norm() > 0.1


# -- monodromy entry expansion ---------------------------------------------------

def test_sector_filter_matches_direct_expansion():
    rep = trivial_rep((1,))
    lax = canonical_lax(2, (1,), rep)
    D = build_twist_D(2, (1,), rep, TW2)
    a = transfer_at(2, 2, lax, D, 0.41, sector_filter=True)
    b = transfer_at(2, 2, lax, D, 0.41, sector_filter=False)
    assert (a - b).norm() < 1e-14


# -- commuting family and conservation -------------------------------------------

def test_family_members_commute_pairwise():
    ops = [build_Q(3, 2, I, TW3).at(0.3)
           for I in [(1,), (2,), (3,), (1, 2), (1, 3), (2, 3)]]
    ops.append(build_T_box(3, 2, TW3).at(-0.52))
    ops.append(build_Q(3, 2, (1, 2), TW3).at(-1.1))
    worst = max(comm_norm(x, y) for i, x in enumerate(ops) for y in ops[i + 1:])
    assert worst < 1e-10


def test_family_conserves_letter_counts():
    for a in (1, 2, 3):
        N = number_operator(3, 2, a)
        assert comm_norm(build_Q(3, 2, (1, 3), TW3).at(0.3), N) < 1e-12
        assert comm_norm(build_T_box(3, 2, TW3).at(0.3), N) < 1e-12


def test_sector_eigenvalue_degree():
    # on the (m1, m2) sector the single-index polynomial has degree m1
    q1 = build_Q(2, 2, (1,), TW2)
    # state |22> (index 3) lies in sector (0,2): constant eigenvalue
    assert abs(q1.coeffs[1].data.get((3, 3), 0.0)) < 1e-12
    assert abs(q1.coeffs[0].data.get((3, 3), 0.0) - 1.0) < 1e-10
    # state |11> (index 0) lies in sector (2,0): monic degree-2 eigenvalue
    assert abs(q1.coeffs[2].data.get((0, 0), 0.0) - 1.0) < 1e-10


# -- hybrid operators with highest-weight carriers --------------------------------

def test_x_plus_matches_x_for_dominant_weight_after_alternation():
    # one-site exactness of the alternating resolution without any damping
    z = 0.83
    alt = alternating_sum_T(2, 1, (1.0, 0.0), TW2, z).to_dense()
    ref = build_T_box(2, 1, TW2).at(z).to_dense()
    assert np.max(np.abs(alt - ref)) < 1e-12


def test_trivial_weight_alternation_telescopes():
    # weight (0,0): the finite carrier is trivial, so the signed sum must
    # collapse onto the trivial-carrier transfer operator
    z = 0.4
    alt = alternating_sum_T(2, 1, (0.0, 0.0), TW2, z).to_dense()
    ref = build_X(2, 1, (1, 2), trivial_rep((1, 2)), TW2).at(z).to_dense()
    assert np.max(np.abs(alt - ref)) < 1e-12


@pytest.mark.parametrize("L", [1, 2])
def test_bgg_extrapolated_residual(L):
    assert bgg_eigen_check(2, L, (1.0, 0.0), TW2) < 1e-6


def test_bgg_three_point_schedule_is_coarser():
    # documents why the default schedule is longer than three points
    r3 = bgg_eigen_check(2, 1, (1.0, 0.0), TW2, etas=(0.2, 0.1, 0.05))
    assert 1e-6 < r3 < 1e-3


def test_x_plus_commutes_with_q():
    xp = build_X_plus(3, 2, (1, 2), (0.4, -0.1), TW3.damped(0.15))
    q = build_Q(3, 2, (1, 2), TW3.damped(0.15))
    assert comm_norm(xp.at(0.3), q.at(-0.7)) < 1e-10


# -- polynomial plumbing ---------------------------------------------------------

def test_fit_recovers_known_polynomial():
    from qlab.tensor import QuantumOperator
    c0 = QuantumOperator(2, {(0, 0): 2.0, (1, 0): -0.5})
    c2 = QuantumOperator(2, {(1, 1): 1.0 + 1.0j})
    def f(z):
        return c0 + c2 * (z * z)
    poly = fit_operator_polynomial(2, 0.25, 2, f)
    assert (poly.coeffs[0] - c0).norm() < 1e-12
    assert poly.coeffs[1].norm() < 1e-12
    assert (poly.coeffs[2] - c2).norm() < 1e-12
    z = 0.63
    assert (poly.at(z) - f(z) * cmath.exp(1j * z * 0.25)).norm() < 1e-12


def test_polynomial_derivative():
    from qlab.tensor import QuantumOperator
    eye = QuantumOperator.identity(1)
    poly = OperatorPolynomial(1, 0.0, [eye * 1.0, eye * 2.0, eye * 3.0])
    dp = poly.derivative()
    z = 0.7
    expect = 2.0 + 6.0 * z
    assert abs(dp.poly_at(z).data[(0, 0)] - expect) < 1e-13


# -- trace-method consistency ------------------------------------------------------

def test_closed_form_trace_agrees_with_extrapolated_numeric():
    rng = np.random.default_rng(7)
    modes = [("m", 1, 2), ("m", 2, 1)]
    qs = {modes[0]: cmath.exp(0.9j), modes[1]: cmath.exp(-1.4j)}
    for _ in range(10):
        x = Op.scalar(complex(rng.normal(), rng.normal()))
        for m in modes:
            k = int(rng.integers(0, 3))
            x = x * (Op.creator(m) ** k) * (Op.annihilator(m) ** k)
        exact = weighted_trace(x, qs)
        numeric = extrapolated_trace(x, qs)
        assert abs(exact - numeric) < 1e-6
