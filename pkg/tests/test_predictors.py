import numpy as np
import pytest

from trajbench import (
    ConfigError,
    ConstantVelocityModel,
    DataError,
    PredictiveSocialForceModel,
    Scenario,
    ScenarioAgent,
    SocialForceModel,
    VelocityFilter,
    ade,
    estimate_velocity,
    fde,
    generate_synthetic,
    make_predictor,
    project_goal,
    synthetic_dataset,
)
from trajbench.predictors.forces import anticipatory_acceleration


def single_agent_scenario(velocity=(1.0, 0.0), dt=0.4, o_p=8, t_p=12, start=(0.0, 0.0)):
    velocity = np.asarray(velocity, dtype=float)
    k = np.arange(o_p + t_p, dtype=float) - (o_p - 1)
    positions = np.asarray(start) + k[:, None] * dt * velocity
    agent = ScenarioAgent(0, 0, positions[:o_p], positions[o_p:], True)
    return Scenario(o_p - 1, dt, o_p, t_p, (agent,))


def rigid_transform(scenario, theta, shift):
    rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    shift = np.asarray(shift, dtype=float)
    agents = tuple(
        ScenarioAgent(
            a.agent_id,
            a.original_id,
            a.observed @ rot.T + shift,
            None if a.future is None else a.future @ rot.T + shift,
            a.is_target,
        )
        for a in scenario.agents
    )
    moved = Scenario(
        scenario.anchor,
        scenario.dt,
        scenario.observation_frames,
        scenario.prediction_frames,
        agents,
        scenario.environment,
    )
    return moved, rot, shift


# ---------------------------------------------------------------------------
# velocity filter


def test_filter_weights_match_oracle_and_normalize():
    w = VelocityFilter(sigma=1.5).weights(7)
    t = np.arange(1, 8, dtype=float)
    g = np.exp(-(t**2) / 4.5)
    np.testing.assert_allclose(w, g / g.sum(), atol=1e-12)
    assert abs(w.sum() - 1.0) <= 1e-12
    assert np.all(np.diff(w) < 0)  # strictly decreasing in t


def test_constant_velocity_recovered_exactly():
    observed = np.arange(8)[:, None] * 0.4 * np.array([1.0, 0.0])
    np.testing.assert_allclose(estimate_velocity(observed, 0.4), [1.0, 0.0], atol=1e-12)


def test_single_recent_difference_weighting():
    # only the most recent difference is nonzero: the estimate is w(1) of it
    observed = np.zeros((8, 2))
    observed[-1] = [0.4, 0.0]
    v = estimate_velocity(observed, 0.4)
    assert v[0] == pytest.approx(0.5803, abs=2e-4)
    assert v[1] == 0.0


def test_stationary_track_estimates_zero():
    np.testing.assert_array_equal(estimate_velocity(np.zeros((8, 2)), 0.4), [0.0, 0.0])


def test_velocity_needs_two_observations():
    with pytest.raises(DataError):
        estimate_velocity(np.zeros((1, 2)), 0.4)


def test_last_difference_filter():
    observed = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 0.5]])
    v = estimate_velocity(observed, 0.5, VelocityFilter(sigma=None))
    np.testing.assert_allclose(v, [0.0, 1.0])


# ---------------------------------------------------------------------------
# goal projection


def test_goal_projection_forty_steps():
    np.testing.assert_allclose(project_goal([0, 0], [1, 0], dt=0.4), [16.0, 0.0])
    np.testing.assert_allclose(project_goal([2, 3], [0, 0], dt=0.4), [2.0, 3.0])
    np.testing.assert_allclose(project_goal([1, 1], [0, -0.5], dt=0.4), [1.0, -7.0])


# ---------------------------------------------------------------------------
# constant velocity model


def test_cvm_exact_on_straight_line():
    scenario = single_agent_scenario()
    prediction = ConstantVelocityModel().predict(scenario)
    points = prediction.for_agent(0).points
    np.testing.assert_allclose(points[:, 0], 0.4 * np.arange(1, 13), atol=1e-12)
    gt = scenario.agents[0].future
    assert ade(points, gt) <= 1e-12
    assert fde(points, gt) <= 1e-12


def test_cvm_stationary_agent_stays_put():
    observed = np.tile([1.5, -2.0], (8, 1))
    agent = ScenarioAgent(0, 0, observed, np.tile([1.5, -2.0], (12, 1)), True)
    scenario = Scenario(7, 0.4, 8, 12, (agent,))
    points = ConstantVelocityModel().predict(scenario).for_agent(0).points
    np.testing.assert_array_equal(points, np.tile([1.5, -2.0], (12, 1)))


def test_cvm_chord_error_on_arc_matches_closed_form():
    # quarter-circle ground truth: CVM continues along the tangent
    radius, dt = 5.0, 0.4
    omega = 1.0 / radius
    t_all = np.arange(20) * dt
    arc = radius * np.stack([np.cos(omega * t_all), np.sin(omega * t_all)], axis=1)
    agent = ScenarioAgent(0, 0, arc[:8], arc[8:], True)
    scenario = Scenario(7, dt, 8, 12, (agent,))
    points = ConstantVelocityModel(filter_sigma=None).predict(scenario).for_agent(0).points
    # closed form: straight line from arc end along the last chord direction
    direction = (arc[7] - arc[6]) / dt
    expected = arc[7] + np.arange(1, 13)[:, None] * dt * direction
    np.testing.assert_allclose(points, expected, atol=1e-12)
    assert fde(points, arc[8:]) > 0.05


# ---------------------------------------------------------------------------
# force models


def test_forces_reduce_to_cvm_for_single_agent():
    scenario = single_agent_scenario(velocity=(0.9, -0.3))
    cvm_points = ConstantVelocityModel().predict(scenario).for_agent(0).points
    for model in (SocialForceModel(), PredictiveSocialForceModel()):
        points = model.predict(scenario).for_agent(0).points
        np.testing.assert_allclose(points, cvm_points, atol=1e-6)


def test_opposing_agents_keep_more_distance_than_cvm():
    scenario = generate_synthetic("opposing")
    cvm = ConstantVelocityModel().predict(scenario)
    sof = SocialForceModel().predict(scenario)

    def min_distance(prediction):
        a = prediction.for_agent(0).points
        b = prediction.for_agent(1).points
        return np.linalg.norm(a - b, axis=1).min()

    assert min_distance(sof) > min_distance(cvm)


def test_distant_agents_behave_like_singletons():
    near = single_agent_scenario(start=(0.0, 0.0))
    far_agent = ScenarioAgent(
        1, 1, near.agents[0].observed + [0.0, 50.0], near.agents[0].future + [0.0, 50.0], True
    )
    pair = Scenario(7, 0.4, 8, 12, (near.agents[0], far_agent))
    model = SocialForceModel(repulsion_range=0.5)
    solo = model.predict(near).for_agent(0).points
    joint = model.predict(pair).for_agent(0).points
    np.testing.assert_allclose(joint, solo, atol=1e-3)


def test_anticipation_triggers_only_on_converging_courses():
    p = np.array([[-0.4, 0.0], [0.4, 0.2]])
    v = np.array([[1.0, 0.0], [-1.0, 0.0]])
    towards = anticipatory_acceleration(p, v, radius=0.35, horizon=4.0, strength=2.0, personal_distance=0.5)
    away = anticipatory_acceleration(p, -v, radius=0.35, horizon=4.0, strength=2.0, personal_distance=0.5)
    assert np.linalg.norm(towards, axis=1).min() > 0
    np.testing.assert_array_equal(away, 0.0)


def test_anticipation_respects_horizon():
    p = np.array([[-10.0, 0.0], [10.0, 0.2]])  # collision ~9.7 s out
    v = np.array([[1.0, 0.0], [-1.0, 0.0]])
    none = anticipatory_acceleration(p, v, radius=0.35, horizon=4.0, strength=2.0, personal_distance=0.5)
    np.testing.assert_array_equal(none, 0.0)
    some = anticipatory_acceleration(p, v, radius=0.35, horizon=12.0, strength=2.0, personal_distance=0.5)
    assert np.linalg.norm(some, axis=1).min() > 0


def test_crossing_agents_deviate_laterally_before_crossing():
    scenario = generate_synthetic("crossing")
    kara = PredictiveSocialForceModel().predict(scenario)
    cvm = ConstantVelocityModel().predict(scenario)
    ka = kara.for_agent(0).points
    kb = kara.for_agent(1).points
    closest = int(np.argmin(np.linalg.norm(ka - kb, axis=1)))
    # CVM lateral displacement is analytically zero on these straight courses
    assert abs(cvm.for_agent(0).points[closest, 1] - 0.0) < 1e-12
    assert abs(kara.for_agent(0).points[closest, 1]) > 1e-3
    assert abs(kara.for_agent(1).points[closest, 0] - 0.2) > 1e-3


def test_rigid_transform_equivariance():
    scenario = generate_synthetic("opposing")
    for model in (SocialForceModel(), PredictiveSocialForceModel()):
        base = model.predict(scenario)
        moved, rot, shift = rigid_transform(scenario, theta=0.7, shift=(3.1, -2.4))
        transformed = model.predict(moved)
        for agent_id in (0, 1):
            np.testing.assert_allclose(
                transformed.for_agent(agent_id).points,
                base.for_agent(agent_id).points @ rot.T + shift,
                atol=1e-9,
            )


def test_halving_sub_dt_barely_moves_waypoints():
    for kind in ("chasing", "opposing", "crossing"):
        scenario = generate_synthetic(kind)
        for cls in (SocialForceModel, PredictiveSocialForceModel):
            coarse = cls(sub_dt=0.1).predict(scenario)
            fine = cls(sub_dt=0.05).predict(scenario)
            for agent_id in (0, 1):
                delta = np.abs(coarse.for_agent(agent_id).points - fine.for_agent(agent_id).points)
                assert delta.max() < 0.05, (kind, cls.__name__)


def test_prediction_is_deterministic_bit_for_bit():
    scenario = generate_synthetic("opposing")
    model = SocialForceModel()
    a = model.predict(scenario).for_agent(0).points
    b = model.predict(scenario).for_agent(0).points
    assert np.array_equal(a, b)


def test_invalid_parameters_rejected():
    scenario = generate_synthetic("opposing")
    with pytest.raises(DataError):
        SocialForceModel(relaxation_time=-1.0).predict(scenario)
    with pytest.raises(DataError):
        SocialForceModel(anisotropy=1.5).predict(scenario)
    with pytest.raises(DataError):
        SocialForceModel(sub_dt=1.0).predict(scenario)  # exceeds the 0.4 s frame
    with pytest.raises(DataError):
        PredictiveSocialForceModel(horizon=0.0).predict(scenario)


def test_obstacle_repulsion_pushes_away_from_wall():
    from trajbench.data import EnvironmentModel

    grid = np.full((1, 3), 255, dtype=np.int16)
    grid[0, 2] = 0  # occupied cell centered at (2.5, 0.5)
    env = EnvironmentModel(resolution=1.0, origin=np.array([0.0, 0.0]), grid=grid)
    base = single_agent_scenario(velocity=(1.0, 0.0), start=(0.0, 0.5))
    scenario = Scenario(7, 0.4, 8, 12, base.agents, env)
    with_wall = SocialForceModel(obstacle_strength=5.0).predict(scenario).for_agent(0).points
    without = SocialForceModel(obstacle_strength=0.0).predict(scenario).for_agent(0).points
    assert with_wall[-1, 0] < without[-1, 0]  # slowed down approaching the wall


# ---------------------------------------------------------------------------
# synthetic fixtures


def test_opposing_fixture_matches_documented_geometry():
    scenario = generate_synthetic("opposing")
    first = scenario.agents[0].observed
    np.testing.assert_allclose(first[:, 0], -3.2 + 0.4 * np.arange(8), atol=1e-12)
    np.testing.assert_allclose(first[:, 1], 0.0)
    second = scenario.agents[1].observed
    np.testing.assert_allclose(second[:, 0], 3.2 - 0.4 * np.arange(8), atol=1e-12)
    np.testing.assert_allclose(second[:, 1], 0.2)


def test_chasing_fixture_same_line_one_meter_gap():
    scenario = generate_synthetic("chasing")
    a, b = (agent.observed for agent in scenario.agents)
    np.testing.assert_allclose(b - a, np.tile([1.0, 0.0], (8, 1)), atol=1e-12)


def test_crossing_fixture_meets_at_origin_simultaneously():
    scenario = generate_synthetic("crossing")
    # both agents reach the meeting area 5 frames past the anchor (2 s at 1 m/s)
    a_future = scenario.agents[0].future
    b_future = scenario.agents[1].future
    assert a_future[4, 0] == pytest.approx(0.0, abs=1e-12)
    assert b_future[4, 1] == pytest.approx(0.0, abs=1e-12)


def test_synthetic_ground_truth_is_straight_continuation():
    for kind in ("chasing", "opposing", "crossing"):
        scenario = generate_synthetic(kind)
        prediction = ConstantVelocityModel().predict(scenario)
        for agent in scenario.agents:
            assert ade(prediction.for_agent(agent.agent_id).points, agent.future) <= 1e-9


def test_unknown_synthetic_kind():
    with pytest.raises(ConfigError):
        generate_synthetic("tailgating")


def test_synthetic_dataset_round_trips_through_extraction():
    from trajbench import ScenarioSpec, extract_scenarios

    ds = synthetic_dataset("crossing")
    scenarios = extract_scenarios(ds, ScenarioSpec(8, 12, min_agents=2))
    assert len(scenarios) == 1
    assert scenarios[0].n_agents == 2


def test_make_predictor_registry():
    assert isinstance(make_predictor("cvm"), ConstantVelocityModel)
    sof = make_predictor("social_force", {"repulsion_strength": 3.5})
    assert sof.repulsion_strength == 3.5
    with pytest.raises(ConfigError):
        make_predictor("nonexistent")
    with pytest.raises(ConfigError):
        make_predictor("cvm", {"bogus": 1})
