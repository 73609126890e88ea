"""Data model, interchange format, and standardization."""

import numpy as np
import pytest
from sklearn.exceptions import NotFittedError

from koopctl import (
    EnvSpec,
    ScalingParams,
    StateScaler,
    Trajectory,
    TrajectoryFormatError,
    TrajectorySet,
    apply_scaling,
    fit_scaling,
    invert_scaling,
    one_hot_encode,
    parse_trajectory_file,
    serialize_trajectory_file,
)

ENV = EnvSpec(
    name="toy", state_dim=2, action_count=3, state_labels=("a", "b")
)


def make_traj(rng, T=5, d=2, q=3, checkpoint=0, seed=0):
    return Trajectory(
        states=rng.standard_normal((T, d)),
        actions=rng.integers(q, size=T - 1),
        total_reward=float(rng.standard_normal()),
        checkpoint=checkpoint,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def test_env_spec_validation():
    with pytest.raises(ValueError):
        EnvSpec(name="e", state_dim=0, action_count=2, state_labels=())
    with pytest.raises(ValueError):
        EnvSpec(name="e", state_dim=1, action_count=1, state_labels=("x",))
    with pytest.raises(ValueError):
        EnvSpec(name="e", state_dim=2, action_count=2, state_labels=("x",))


def test_trajectory_needs_two_states():
    with pytest.raises(ValueError):
        Trajectory(
            states=np.zeros((1, 2)),
            actions=np.array([], dtype=int),
            total_reward=0.0,
            checkpoint=0,
            seed=0,
        )


def test_trajectory_action_count_must_match():
    with pytest.raises(ValueError, match="expected 2 actions"):
        Trajectory(
            states=np.zeros((3, 2)),
            actions=np.array([0], dtype=int),
            total_reward=0.0,
            checkpoint=0,
            seed=0,
        )


def test_trajectory_rejects_negative_action_and_tags():
    with pytest.raises(ValueError):
        Trajectory(
            states=np.zeros((2, 2)),
            actions=np.array([-1]),
            total_reward=0.0,
            checkpoint=0,
            seed=0,
        )
    with pytest.raises(ValueError):
        Trajectory(
            states=np.zeros((2, 2)),
            actions=np.array([0]),
            total_reward=0.0,
            checkpoint=-1,
            seed=0,
        )


def test_trajectory_rejects_non_finite_states():
    states = np.zeros((3, 2))
    states[1, 0] = np.nan
    with pytest.raises(ValueError):
        Trajectory(
            states=states,
            actions=np.array([0, 1]),
            total_reward=0.0,
            checkpoint=0,
            seed=0,
        )


def test_trajectory_arrays_are_frozen():
    traj = make_traj(np.random.default_rng(0))
    with pytest.raises(ValueError):
        traj.states[0, 0] = 1.0
    with pytest.raises(ValueError):
        traj.actions[0] = 1
    assert traj.length == 5
    assert traj.n_transitions == 4


def test_trajectory_set_validation():
    rng = np.random.default_rng(1)
    with pytest.raises(ValueError):
        TrajectorySet(env=ENV, trajectories=())
    with pytest.raises(ValueError, match="state dimension"):
        TrajectorySet(env=ENV, trajectories=(make_traj(rng, d=3),))
    with pytest.raises(ValueError, match="valid range"):
        TrajectorySet(env=ENV, trajectories=(make_traj(rng, q=5),))


def test_trajectory_set_rewards_and_iteration():
    rng = np.random.default_rng(2)
    trajs = tuple(make_traj(rng) for _ in range(4))
    ts = TrajectorySet(env=ENV, trajectories=trajs)
    assert len(ts) == 4
    assert list(ts) == list(trajs)
    np.testing.assert_array_equal(
        ts.rewards(), [t.total_reward for t in trajs]
    )


# ---------------------------------------------------------------------------
# Interchange format
# ---------------------------------------------------------------------------

def random_set(rng, n_traj=5):
    trajs = tuple(
        make_traj(rng, T=int(rng.integers(2, 12)), checkpoint=int(rng.integers(4)), seed=int(rng.integers(4)))
        for _ in range(n_traj)
    )
    return TrajectorySet(env=ENV, trajectories=trajs, meta={"k": 1, "s": "x"})


def test_round_trip_identity_on_random_sets():
    rng = np.random.default_rng(3)
    for _ in range(25):
        original = random_set(rng)
        parsed = parse_trajectory_file(serialize_trajectory_file(original))
        assert parsed.env == original.env
        assert parsed.meta == original.meta
        assert len(parsed) == len(original)
        for got, want in zip(parsed, original):
            np.testing.assert_array_equal(got.states, want.states)
            np.testing.assert_array_equal(got.actions, want.actions)
            assert got.total_reward == want.total_reward
            assert (got.checkpoint, got.seed) == (want.checkpoint, want.seed)


def test_serialized_form_is_round_trip_fixed_point():
    rng = np.random.default_rng(4)
    data = serialize_trajectory_file(random_set(rng))
    assert serialize_trajectory_file(parse_trajectory_file(data)) == data


def test_parse_rejects_empty_and_bad_header():
    with pytest.raises(TrajectoryFormatError) as exc:
        parse_trajectory_file(b"")
    assert exc.value.line == 1
    with pytest.raises(TrajectoryFormatError) as exc:
        parse_trajectory_file(b'{"format":"something-else"}\n')
    assert exc.value.line == 1
    with pytest.raises(TrajectoryFormatError):
        parse_trajectory_file(b'{"format":"koopctl-traj-v1"}\n')


def test_parse_reports_offending_line_number():
    good = serialize_trajectory_file(random_set(np.random.default_rng(5), n_traj=3))
    lines = good.decode().strip().split("\n")
    lines[2] = lines[2][:-1]  # truncate one record mid-JSON
    with pytest.raises(TrajectoryFormatError) as exc:
        parse_trajectory_file("\n".join(lines))
    assert exc.value.line == 3


def test_parse_rejects_non_finite_literals():
    header = '{"format":"koopctl-traj-v1","env":{"name":"toy","state_dim":2,"action_count":3,"state_labels":["a","b"]}}'
    record = '{"checkpoint":0,"seed":0,"reward":0.0,"states":[[0,0],[NaN,0]],"actions":[0]}'
    with pytest.raises(TrajectoryFormatError) as exc:
        parse_trajectory_file(header + "\n" + record)
    assert exc.value.line == 2


def test_parse_rejects_ragged_states_and_bad_actions():
    header = '{"format":"koopctl-traj-v1","env":{"name":"toy","state_dim":2,"action_count":3,"state_labels":["a","b"]}}'
    ragged = '{"checkpoint":0,"seed":0,"reward":0.0,"states":[[0,0],[0]],"actions":[0]}'
    with pytest.raises(TrajectoryFormatError, match="line 2"):
        parse_trajectory_file(header + "\n" + ragged)
    fractional = '{"checkpoint":0,"seed":0,"reward":0.0,"states":[[0,0],[0,0]],"actions":[0.5]}'
    with pytest.raises(TrajectoryFormatError, match="integers"):
        parse_trajectory_file(header + "\n" + fractional)
    out_of_range = '{"checkpoint":0,"seed":0,"reward":0.0,"states":[[0,0],[0,0]],"actions":[3]}'
    with pytest.raises(TrajectoryFormatError, match="out of range"):
        parse_trajectory_file(header + "\n" + out_of_range)


def test_parse_rejects_missing_fields_and_headerless_trajectories():
    header = '{"format":"koopctl-traj-v1","env":{"name":"toy","state_dim":2,"action_count":3,"state_labels":["a","b"]}}'
    with pytest.raises(TrajectoryFormatError, match="no trajectories"):
        parse_trajectory_file(header)
    missing = '{"checkpoint":0,"seed":0,"states":[[0,0],[0,0]],"actions":[0]}'
    with pytest.raises(TrajectoryFormatError, match="reward"):
        parse_trajectory_file(header + "\n" + missing)


# ---------------------------------------------------------------------------
# Action encoding
# ---------------------------------------------------------------------------

def test_one_hot_encode():
    np.testing.assert_array_equal(one_hot_encode(2, 4), [0.0, 0.0, 1.0, 0.0])
    with pytest.raises(ValueError):
        one_hot_encode(4, 4)
    with pytest.raises(ValueError):
        one_hot_encode(-1, 4)


# ---------------------------------------------------------------------------
# Standardization
# ---------------------------------------------------------------------------

def test_fit_scaling_pools_all_states():
    rng = np.random.default_rng(6)
    trajs = tuple(make_traj(rng, T=int(rng.integers(3, 9))) for _ in range(4))
    ts = TrajectorySet(env=ENV, trajectories=trajs)
    stacked = np.vstack([t.states for t in trajs])
    params = fit_scaling(ts)
    np.testing.assert_allclose(params.mean, stacked.mean(axis=0))
    # Population standard deviation, not the sample one.
    np.testing.assert_allclose(params.scale, stacked.std(axis=0, ddof=0))


def test_fit_scaling_zero_variance_coordinate_gets_unit_scale():
    states = np.column_stack([np.arange(6.0), np.full(6, 3.25)])
    traj = Trajectory(
        states=states,
        actions=np.zeros(5, dtype=int),
        total_reward=0.0,
        checkpoint=0,
        seed=0,
    )
    params = fit_scaling(TrajectorySet(env=ENV, trajectories=(traj,)))
    assert params.scale[1] == 1.0
    scaled = apply_scaling(
        TrajectorySet(env=ENV, trajectories=(traj,)), params
    )
    np.testing.assert_array_equal(scaled.trajectories[0].states[:, 1], 0.0)


def test_apply_invert_scaling_round_trip():
    rng = np.random.default_rng(7)
    ts = random_set(rng)
    params = fit_scaling(ts)
    back = invert_scaling(apply_scaling(ts, params), params)
    for got, want in zip(back, ts):
        np.testing.assert_allclose(got.states, want.states, atol=1e-12)


def test_scaling_params_validation():
    with pytest.raises(ValueError):
        ScalingParams(mean=np.zeros(2), scale=np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        ScalingParams(mean=np.zeros(2), scale=np.ones(3))


def test_apply_scaling_dimension_mismatch():
    ts = random_set(np.random.default_rng(8))
    with pytest.raises(ValueError):
        apply_scaling(ts, ScalingParams(mean=np.zeros(3), scale=np.ones(3)))


def test_state_scaler_matches_pooled_convention():
    rng = np.random.default_rng(9)
    X = rng.standard_normal((40, 3))
    X[:, 2] = 1.5  # constant column
    scaler = StateScaler().fit(X)
    np.testing.assert_allclose(scaler.mean_, X.mean(axis=0))
    assert scaler.scale_[2] == 1.0
    Y = scaler.transform(X)
    np.testing.assert_array_equal(Y[:, 2], 0.0)
    np.testing.assert_allclose(scaler.inverse_transform(Y), X, atol=1e-12)
    params = scaler.params()
    np.testing.assert_array_equal(params.mean, scaler.mean_)


def test_state_scaler_not_fitted_and_mismatch():
    with pytest.raises(NotFittedError):
        StateScaler().transform(np.zeros((2, 2)))
    scaler = StateScaler().fit(np.random.default_rng(10).standard_normal((5, 2)))
    with pytest.raises(ValueError):
        scaler.transform(np.zeros((2, 3)))


def test_state_scaler_sklearn_params():
    scaler = StateScaler()
    assert scaler.get_params() == {}
    cloned = type(scaler)(**scaler.get_params())
    assert isinstance(cloned, StateScaler)
