import numpy as np
import pytest

from sqwalk.state import (
    WalkConfig,
    WalkState,
    norm_squared,
    uniform_initial_state,
    vertex_probability,
)
from sqwalk.util import is_unitary
from sqwalk.walk import (
    CoinPair,
    ShiftRule,
    apply_marked_coin,
    apply_shift,
    evolve_ideal,
    grover_coin,
    ideal_series,
    random_unitary,
)


def test_grover_coin_small():
    np.testing.assert_array_equal(grover_coin(1), [[1.0]])
    np.testing.assert_array_equal(grover_coin(2), [[0.0, 1.0], [1.0, 0.0]])
    g4 = grover_coin(4)
    np.testing.assert_allclose(np.diag(g4), -0.5)
    assert g4[0, 1] == 0.5
    assert g4[3, 2] == 0.5


@pytest.mark.parametrize("n", [1, 2, 3, 5, 10])
def test_grover_coin_unitary_involution(n: int):
    g = grover_coin(n)
    assert is_unitary(g)
    np.testing.assert_allclose(g @ g, np.eye(n), atol=1e-12)


def test_random_unitary():
    rng = np.random.default_rng(7)
    for n in (2, 3, 6):
        assert is_unitary(random_unitary(n, rng))


def test_coin_pair_validation():
    with pytest.raises(ValueError):
        CoinPair(np.eye(2), 2 * np.eye(2))
    with pytest.raises(ValueError):
        CoinPair(np.eye(2), np.eye(3))
    pair = CoinPair.standard(3)
    assert pair.n == 3
    np.testing.assert_array_equal(pair.c1, -np.eye(3))


def test_marked_coin_at_target():
    cfg = WalkConfig(n=3, target=5)
    out = apply_marked_coin(WalkState.basis(3, d=1, x=5), cfg, CoinPair.standard(3))
    assert out.amplitudes[5, 1] == -1.0
    assert norm_squared(out) == pytest.approx(1.0, abs=1e-12)


def test_marked_coin_unmarked_n2():
    cfg = WalkConfig(n=2, target=0)
    out = apply_marked_coin(WalkState.basis(2, d=0, x=3), cfg, CoinPair.standard(2))
    np.testing.assert_array_equal(out.amplitudes[3], [0.0, 1.0])


def test_marked_coin_uniform_state():
    n = 4
    cfg = WalkConfig(n=n, target=6)
    state = uniform_initial_state(n)
    out = apply_marked_coin(state, cfg, CoinPair.standard(n))
    unmarked = np.arange(2**n) != 6
    np.testing.assert_allclose(out.amplitudes[unmarked], state.amplitudes[unmarked], atol=1e-15)
    np.testing.assert_allclose(out.amplitudes[6], -state.amplitudes[6], atol=1e-15)


def test_marked_coin_dimension_mismatch():
    with pytest.raises(ValueError):
        apply_marked_coin(uniform_initial_state(3), WalkConfig(n=3), CoinPair.standard(2))
    with pytest.raises(ValueError):
        apply_marked_coin(uniform_initial_state(3), WalkConfig(n=4), CoinPair.standard(4))


def test_marked_coin_squares_to_identity():
    rng = np.random.default_rng(0)
    n = 3
    cfg = WalkConfig(n=n, target=2)
    amps = rng.normal(size=(8, 3)) + 1j * rng.normal(size=(8, 3))
    state = WalkState(amps / np.linalg.norm(amps))
    pair = CoinPair.standard(n)
    twice = apply_marked_coin(apply_marked_coin(state, cfg, pair), cfg, pair)
    np.testing.assert_allclose(twice.amplitudes, state.amplitudes, atol=1e-12)


def test_shift_examples():
    out = apply_shift(WalkState.basis(3, d=1, x=0b001))
    assert out == WalkState.basis(3, d=1, x=0b011)
    out = apply_shift(WalkState.basis(2, d=0, x=0b00))
    assert out == WalkState.basis(2, d=0, x=0b01)


def test_shift_involution():
    rng = np.random.default_rng(1)
    amps = rng.normal(size=(32, 5)) + 1j * rng.normal(size=(32, 5))
    state = WalkState(amps / np.linalg.norm(amps))
    assert apply_shift(apply_shift(state)) == state


def test_shift_rule_bijective():
    rule = ShiftRule(4)
    flip, dirs = rule.source_index
    flat = (flip * 4 + dirs).ravel()
    assert sorted(flat.tolist()) == list(range(4 * 16))
    for d in range(4):
        for x in range(16):
            d2, x2 = rule.destination(d, x)
            assert rule.destination(d2, x2) == (d, x)


def test_evolve_ideal_zero_steps():
    state = uniform_initial_state(4)
    assert evolve_ideal(state, WalkConfig(n=4), 0) == state
    with pytest.raises(ValueError):
        evolve_ideal(state, WalkConfig(n=4), -1)


def test_evolve_ideal_n6_search():
    cfg = WalkConfig(n=6)
    state = evolve_ideal(uniform_initial_state(6), cfg, 9)
    p = vertex_probability(state, cfg.target)
    assert p >= 0.25
    assert p >= 10 * 2.0**-6


def test_ideal_search_n8():
    series = ideal_series(WalkConfig(n=8), 40)
    assert series[0] == pytest.approx(2.0**-8, abs=1e-15)
    assert np.max(series) >= 0.3
    assert abs(int(np.argmax(series)) - 18) <= 2
    # the series agrees with stepping the state
    state = evolve_ideal(uniform_initial_state(8), WalkConfig(n=8), 18)
    assert vertex_probability(state, 0) == pytest.approx(series[18], abs=1e-12)


def test_norm_preservation_long_run():
    cfg = WalkConfig(n=4, target=9)
    state = evolve_ideal(uniform_initial_state(4), cfg, 1000)
    assert norm_squared(state) == pytest.approx(1.0, abs=1e-10)


def test_norm_preservation_random_pair():
    rng = np.random.default_rng(5)
    pair = CoinPair.random(3, rng)
    state = evolve_ideal(uniform_initial_state(3), WalkConfig(n=3, target=4), 200, pair)
    assert norm_squared(state) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("target", [1, 5, 0b100110, 63])
def test_target_relabelling_symmetry(target: int):
    reference = ideal_series(WalkConfig(n=6, target=0), 30)
    series = ideal_series(WalkConfig(n=6, target=target), 30)
    np.testing.assert_allclose(series, reference, rtol=0, atol=1e-12)


def test_bit_permutation_covariance():
    n = 5
    perm = [3, 0, 4, 1, 2]
    target = 0b01101
    # bit d of the target moves to bit perm[d]
    permuted_target = sum(((target >> d) & 1) << perm[d] for d in range(n))
    reference = ideal_series(WalkConfig(n=n, target=target), 25)
    series = ideal_series(WalkConfig(n=n, target=permuted_target), 25)
    np.testing.assert_allclose(series, reference, rtol=0, atol=1e-12)
