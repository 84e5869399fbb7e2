import numpy as np
import pytest

from qlab.tensor import (
    QuantumOperator, kron, kron_all, permutation_op, site_operator,
    basis_states, state_index, occupation, comm_norm,
)


def random_op(dim, rng):
    return QuantumOperator.from_dense(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))


def test_identity_and_matrix_unit():
    eye = QuantumOperator.identity(3)
    assert np.allclose(eye.to_dense(), np.eye(3))
    e01 = QuantumOperator.matrix_unit(2, 0, 1)
    dense = np.zeros((2, 2))
    dense[0, 1] = 1
    assert np.allclose(e01.to_dense(), dense)


def test_matmul_agrees_with_dense():
    rng = np.random.default_rng(0)
    a, b = random_op(5, rng), random_op(5, rng)
    assert np.allclose((a @ b).to_dense(), a.to_dense() @ b.to_dense())


def test_add_scale_dagger():
    rng = np.random.default_rng(1)
    a, b = random_op(4, rng), random_op(4, rng)
    assert np.allclose((a + 2.5 * b).to_dense(), a.to_dense() + 2.5 * b.to_dense())
    assert np.allclose(a.dagger().to_dense(), a.to_dense().conj().T)


def test_kron_matches_numpy():
    rng = np.random.default_rng(2)
    a, b = random_op(2, rng), random_op(3, rng)
    assert np.allclose(kron(a, b).to_dense(), np.kron(a.to_dense(), b.to_dense()))


def test_permutation_op_swaps_factors():
    n = 3
    p = permutation_op(n).to_dense()
    rng = np.random.default_rng(3)
    x, y = rng.normal(size=n), rng.normal(size=n)
    assert np.allclose(p @ np.kron(x, y), np.kron(y, x))
    assert np.allclose(p @ p, np.eye(n * n))


def test_permutation_as_sum_of_matrix_units():
    n = 3
    acc = QuantumOperator.zero(n * n)
    for a in range(n):
        for b in range(n):
            acc = acc + kron(QuantumOperator.matrix_unit(n, a, b),
                             QuantumOperator.matrix_unit(n, b, a))
    assert (acc - permutation_op(n)).norm() < 1e-14


def test_site_operator_embedding():
    n, L = 2, 3
    sz = QuantumOperator.from_dense(np.diag([1.0, -1.0]))
    full = site_operator(sz, 2, L).to_dense()
    expect = np.kron(np.eye(2), np.kron(np.diag([1.0, -1.0]), np.eye(2)))
    assert np.allclose(full, expect)


def test_state_index_base_n_site1_most_significant():
    assert state_index((1, 0, 2), 3) == 1 * 9 + 0 * 3 + 2
    states = list(basis_states(3, 2))
    assert states[0] == (0, 0) and states[-1] == (2, 2)
    assert [state_index(s, 3) for s in states] == list(range(9))


def test_occupation_counts():
    assert occupation((0, 2, 0, 1), 3) == (2, 1, 1)


def test_comm_norm_zero_for_commuting():
    d1 = QuantumOperator.from_dense(np.diag([1.0, 2.0, 3.0]))
    d2 = QuantumOperator.from_dense(np.diag([5.0, -1.0, 0.5]))
    assert comm_norm(d1, d2) == 0.0
    off = QuantumOperator.matrix_unit(3, 0, 1)
    assert comm_norm(d1, off) > 0.5


def test_drop_tolerance():
    op = QuantumOperator(2, {(0, 0): 1e-16, (1, 1): 1.0})
    assert (0, 0) not in op.data and (1, 1) in op.data
