import math

import numpy as np
import pytest

from sqwalk.noise import (
    AveragedSeries,
    DirectionalLoss,
    PhaseField,
    PhaseHistory,
    PhaseModel,
    UniformLoss,
    apply_loss,
    apply_phase_field,
    evolve_with_history,
    run_ensemble,
    run_trajectory,
    run_trajectory_with_norm,
    sample_phase_field,
    simulate_pmax,
    simulate_pmax_batch,
    step_noisy,
)
from sqwalk.runutils import sample_rng
from sqwalk.state import (
    WalkConfig,
    WalkState,
    norm_squared,
    uniform_initial_state,
)
from sqwalk.util import InfeasibleParameterError
from sqwalk.walk import CoinPair, evolve_ideal, ideal_series

# loss
# ==================================================


def test_uniform_loss_identity_and_total():
    state = uniform_initial_state(3)
    assert apply_loss(state, UniformLoss(1.0)) == state
    assert norm_squared(apply_loss(state, UniformLoss(0.0))) == 0.0


def test_directional_loss_diagonal():
    out = apply_loss(WalkState.basis(2, d=1, x=2), DirectionalLoss((1.0, 0.5)))
    assert out.amplitudes[2, 1] == 0.5


def test_loss_validation():
    with pytest.raises(InfeasibleParameterError):
        UniformLoss(1.2)
    with pytest.raises(InfeasibleParameterError):
        DirectionalLoss((0.9, -0.1))
    with pytest.raises(ValueError):
        DirectionalLoss(())
    with pytest.raises(ValueError):
        apply_loss(uniform_initial_state(3), DirectionalLoss((0.9, 0.8)))


def test_loss_serialization():
    loss = DirectionalLoss((0.9, 0.95, 1.0))
    assert DirectionalLoss.load(loss.serialize()) == loss
    assert UniformLoss.load(UniformLoss(0.3).serialize()) == UniformLoss(0.3)


@pytest.mark.parametrize("n", [4, 6, 8])
@pytest.mark.parametrize("eta", [0.9, 0.99])
def test_uniform_loss_factorization(n: int, eta: float):
    cfg = WalkConfig(n=n)
    pair = CoinPair.standard(n)
    ideal = uniform_initial_state(n)
    lossy = uniform_initial_state(n)
    loss = UniformLoss(eta)
    for t in range(1, 51):
        ideal = evolve_ideal(ideal, cfg, 1, pair)
        lossy = step_noisy(lossy, cfg, pair, loss=loss)
        if t % 10 == 0:
            np.testing.assert_allclose(
                lossy.amplitudes, eta**t * ideal.amplitudes, rtol=0, atol=1e-12
            )


def test_loss_commutes_with_step():
    cfg = WalkConfig(n=4, target=3)
    pair = CoinPair.standard(4)
    loss = UniformLoss(0.8)
    state = uniform_initial_state(4)
    step_then_loss = apply_loss(step_noisy(state, cfg, pair), loss)
    loss_then_step = step_noisy(apply_loss(state, loss), cfg, pair)
    np.testing.assert_allclose(
        step_then_loss.amplitudes, loss_then_step.amplitudes, rtol=0, atol=1e-14
    )


def test_uniform_loss_probability_scaling():
    cfg = WalkConfig(n=6)
    eta = 0.95
    lossy = run_trajectory(cfg, loss=UniformLoss(eta), t_max=30)
    ideal = ideal_series(cfg, 30)
    t = np.arange(31)
    np.testing.assert_allclose(lossy, eta ** (2 * t) * ideal, rtol=1e-12, atol=1e-15)


def test_directional_permutation_symmetry():
    etas = (0.7, 0.95, 0.85, 1.0, 0.6)
    cfg = WalkConfig(n=5)
    reference = run_trajectory(cfg, loss=DirectionalLoss(etas), t_max=25)
    for perm in ([4, 3, 2, 1, 0], [1, 0, 3, 2, 4]):
        permuted = tuple(etas[i] for i in perm)
        series = run_trajectory(cfg, loss=DirectionalLoss(permuted), t_max=25)
        np.testing.assert_allclose(series, reference, rtol=0, atol=1e-10)


def test_loss_never_increases_norm():
    _, norms = run_trajectory_with_norm(
        WalkConfig(n=4), loss=DirectionalLoss((0.9, 1.0, 0.7, 0.99)), t_max=40
    )
    assert norms[0] == pytest.approx(1.0, abs=1e-14)
    assert np.all(np.diff(norms) <= 1e-14)


# phases
# ==================================================


def test_phase_model_from_degrees():
    model = PhaseModel.from_degrees("static", "gaussian", 6.0)
    assert model.sigma == pytest.approx(6.0 * math.pi / 180.0, abs=1e-15)
    assert PhaseModel.load(model.serialize()) == model


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(regime="sometimes", distribution="gaussian"),
        dict(regime="static", distribution="cauchy"),
        dict(regime="static", distribution="gaussian", sigma=-0.1),
    ],
)
def test_phase_model_invalid(kwargs: dict):
    with pytest.raises(ValueError):
        PhaseModel(**kwargs)


def test_sample_phase_field_zero_sigma():
    field = sample_phase_field(3, PhaseModel("static", "gaussian", 0.0), sample_rng(1, 0))
    assert field.phases.shape == (8, 3)
    assert np.all(field.phases == 0.0)


def test_sample_phase_field_deterministic():
    model = PhaseModel("fluctuating", "uniform")
    a = sample_phase_field(4, model, sample_rng(9, 2))
    b = sample_phase_field(4, model, sample_rng(9, 2))
    np.testing.assert_array_equal(a.phases, b.phases)
    assert np.all((a.phases >= 0.0) & (a.phases < 2 * np.pi))


def test_gaussian_phase_statistics():
    sigma = 0.1
    draws = PhaseModel("static", "gaussian", sigma).sample(sample_rng(0, 0), (10**5,))
    assert abs(np.mean(draws)) <= 5 / math.sqrt(1e5) * sigma
    assert np.std(draws) == pytest.approx(sigma, rel=0.02)


def test_apply_phase_field():
    state = uniform_initial_state(3)
    assert apply_phase_field(state, PhaseField.zeros(3)) == state

    flipped = apply_phase_field(state, PhaseField(np.full((8, 3), np.pi)))
    np.testing.assert_allclose(flipped.amplitudes, -state.amplitudes, atol=1e-15)

    phases = np.zeros((4, 2))
    phases[0, 0] = np.pi / 2
    out = apply_phase_field(WalkState.basis(2, d=0, x=0), PhaseField(phases))
    assert out.amplitudes[0, 0] == pytest.approx(1j, abs=1e-15)

    with pytest.raises(ValueError):
        apply_phase_field(state, PhaseField.zeros(2))


def test_phase_field_norm():
    rng = np.random.default_rng(2)
    state = uniform_initial_state(4)
    out = apply_phase_field(state, PhaseField(rng.normal(scale=10.0, size=(16, 4))))
    assert norm_squared(out) == pytest.approx(1.0, abs=1e-14)


def test_step_noisy_special_cases():
    cfg = WalkConfig(n=4, target=2)
    pair = CoinPair.standard(4)
    state = uniform_initial_state(4)
    assert step_noisy(state, cfg, pair) == evolve_ideal(state, cfg, 1, pair)

    lossy = step_noisy(state, cfg, pair, loss=UniformLoss(0.9))
    assert norm_squared(lossy) == pytest.approx(0.81, abs=1e-12)

    loss = DirectionalLoss((0.9, 0.8, 1.0, 0.5))
    assert step_noisy(state, cfg, pair, loss=loss, field=PhaseField.zeros(4)) == step_noisy(
        state, cfg, pair, loss=loss
    )


def test_phase_history():
    field = PhaseField.zeros(3)
    history = PhaseHistory.static(field, 4)
    assert len(history) == 4
    assert history.step(1) is field
    with pytest.raises(IndexError):
        history.step(5)
    with pytest.raises(ValueError):
        PhaseHistory((PhaseField.zeros(2), PhaseField.zeros(3)))


# trajectories and ensembles
# ==================================================


def test_trajectory_initial_value():
    for n in (2, 5):
        p = run_trajectory(WalkConfig(n=n), t_max=0)
        assert p.shape == (1,)
        assert p[0] == pytest.approx(2.0**-n, abs=1e-15)


def test_trajectory_zero_sigma_is_ideal():
    cfg = WalkConfig(n=5, target=7)
    model = PhaseModel("fluctuating", "gaussian", 0.0)
    p = run_trajectory(cfg, phase_model=model, t_max=30, rng=sample_rng(0, 0))
    np.testing.assert_allclose(p, ideal_series(cfg, 30), rtol=0, atol=1e-14)


def test_trajectory_requires_rng():
    with pytest.raises(ValueError):
        run_trajectory(WalkConfig(n=3), phase_model=PhaseModel("static", "uniform"), t_max=3)


def test_static_trajectory_deterministic():
    cfg = WalkConfig(n=4)
    model = PhaseModel.from_degrees("static", "gaussian", 10.0)
    a = run_trajectory(cfg, phase_model=model, t_max=50, rng=sample_rng(42, 3))
    b = run_trajectory(cfg, phase_model=model, t_max=50, rng=sample_rng(42, 3))
    np.testing.assert_array_equal(a, b)


def test_static_trajectory_matches_history_replay():
    cfg = WalkConfig(n=3, target=5)
    model = PhaseModel.from_degrees("static", "gaussian", 20.0)
    p = run_trajectory(cfg, phase_model=model, t_max=6, rng=sample_rng(11, 0))
    # the static regime draws exactly one field, before the first step
    field = sample_phase_field(3, model, sample_rng(11, 0))
    state = evolve_with_history(uniform_initial_state(3), cfg, PhaseHistory.static(field, 6))
    assert float(np.sum(np.abs(state.amplitudes[5]) ** 2)) == pytest.approx(p[6], abs=1e-12)


def test_fluctuating_trajectory_matches_history_replay():
    cfg = WalkConfig(n=3)
    model = PhaseModel("fluctuating", "uniform")
    p = run_trajectory(cfg, phase_model=model, t_max=5, rng=sample_rng(4, 1))
    rng = sample_rng(4, 1)
    history = PhaseHistory(tuple(sample_phase_field(3, model, rng) for _ in range(5)))
    state = evolve_with_history(uniform_initial_state(3), cfg, history)
    assert float(np.sum(np.abs(state.amplitudes[0]) ** 2)) == pytest.approx(p[5], abs=1e-12)


def test_ensemble_single_sample():
    cfg = WalkConfig(n=4)
    model = PhaseModel.from_degrees("static", "gaussian", 8.0)
    series = run_ensemble(cfg, phase_model=model, t_max=20, samples=1, master_seed=3)
    single = run_trajectory(cfg, phase_model=model, t_max=20, rng=sample_rng(3, 0))
    np.testing.assert_array_equal(series.mean_p, single)
    assert np.all(series.stderr == 0.0)
    assert series.samples == 1


def test_ensemble_zero_sigma():
    cfg = WalkConfig(n=5)
    series = run_ensemble(
        cfg, phase_model=PhaseModel("static", "gaussian", 0.0), t_max=25, samples=50
    )
    np.testing.assert_allclose(series.mean_p, ideal_series(cfg, 25), rtol=0, atol=1e-14)
    assert np.all(series.stderr == 0.0)


def test_ensemble_member_matches_trajectory():
    cfg = WalkConfig(n=3)
    model = PhaseModel.from_degrees("fluctuating", "gaussian", 15.0)
    # members 0 and 70 fall in different chunks
    probs = [
        run_trajectory(cfg, phase_model=model, t_max=10, rng=sample_rng(8, k)) for k in range(80)
    ]
    series = run_ensemble(cfg, phase_model=model, t_max=10, samples=80, master_seed=8)
    np.testing.assert_allclose(series.mean_p, np.mean(probs, axis=0), rtol=0, atol=1e-12)


def test_ensemble_independent_of_threads():
    cfg = WalkConfig(n=3)
    model = PhaseModel.from_degrees("static", "gaussian", 12.0)
    serial = run_ensemble(cfg, phase_model=model, t_max=15, samples=150, master_seed=1, threads=1)
    parallel = run_ensemble(
        cfg, phase_model=model, t_max=15, samples=150, master_seed=1, threads=3
    )
    np.testing.assert_array_equal(serial.mean_p, parallel.mean_p)
    np.testing.assert_array_equal(serial.stderr, parallel.stderr)


def test_ensemble_classical_limit():
    cfg = WalkConfig(n=6)
    series = run_ensemble(
        cfg,
        phase_model=PhaseModel("fluctuating", "uniform"),
        t_max=50,
        samples=2000,
        master_seed=42,
    )
    assert abs(series.mean_p[50] - 2.0**-6) <= 5 * series.stderr[50]
    assert np.all((series.mean_p >= 0.0) & (series.mean_p <= 1.0))


def test_ensemble_invalid():
    with pytest.raises(ValueError):
        run_ensemble(WalkConfig(n=3), t_max=3, samples=0)


def test_averaged_series():
    probs = np.array([[0.1, 0.2, 0.3], [0.3, 0.2, 0.5]])
    series = AveragedSeries.from_samples(probs)
    np.testing.assert_allclose(series.mean_p, [0.2, 0.2, 0.4])
    np.testing.assert_allclose(series.stderr, [0.1, 0.0, 0.1], atol=1e-15)
    assert series.window_mean(1, 2) == pytest.approx(0.3)
    assert list(series.to_frame().columns) == ["t", "mean_p", "stderr"]
    with pytest.raises(ValueError):
        series.window_mean(2, 3)


# maximum success probability
# ==================================================


def test_simulate_pmax_ideal():
    cfg = WalkConfig(n=8)
    p_max, t_argmax = simulate_pmax(cfg, None, 0, 40)
    series = ideal_series(cfg, 40)
    assert p_max == np.max(series)
    assert t_argmax == int(np.argmax(series))


def test_simulate_pmax_batch_matches_single():
    cfg = WalkConfig(n=5)
    etas = np.array([[0.9, 0.95, 1.0, 0.8, 0.99], [0.97] * 5, [0.5, 0.6, 0.7, 0.8, 0.9]])
    horizons = np.array([20, 15, 10])
    p_max, t_argmax = simulate_pmax_batch(cfg, etas, horizons, t_min=1)
    for row, horizon, p, t in zip(etas, horizons, p_max, t_argmax):
        p_single, t_single = simulate_pmax(cfg, DirectionalLoss(tuple(row)), 1, int(horizon))
        assert p == pytest.approx(p_single, abs=1e-12)
        assert t == t_single


def test_simulate_pmax_batch_validation():
    cfg = WalkConfig(n=3)
    with pytest.raises(ValueError):
        simulate_pmax_batch(cfg, np.ones((2, 4)), np.array([5, 5]))
    with pytest.raises(ValueError):
        simulate_pmax_batch(cfg, np.full((1, 3), 1.5), np.array([5]))
    with pytest.raises(ValueError):
        simulate_pmax_batch(cfg, np.ones((1, 3)), np.array([0]), t_min=1)
