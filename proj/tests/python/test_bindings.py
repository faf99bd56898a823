import json
import math

import pytest

import mvnav


@pytest.fixture(scope="module")
def corridor():
    return mvnav.load_map("benchmark:corridor", 128, 6.0)


def test_action_table_is_the_square_boundary():
    table = mvnav.action_table()
    assert len(table) == 40
    assert len(set(table)) == 40
    assert all(max(abs(dx), abs(dy)) == 5 for dx, dy in table)


def test_reward_values():
    cfg = mvnav.EnvConfig()
    assert mvnav.reward(0.0, 5.0, True, False, cfg) == 1000.0
    assert mvnav.reward(100.0, 5.0, False, False, cfg) == pytest.approx(-0.6)
    assert mvnav.reward(100.0, 5.0, False, True, cfg) == pytest.approx(-10.6)


def test_corridor_step(corridor):
    cfg = mvnav.corridor_benchmark_config()
    assert corridor.free_cell_count() == 7518
    state = mvnav.reset(corridor, cfg, seed=3)
    assert corridor.is_free(*state.position)
    result = mvnav.step(state, 0, corridor, cfg)
    assert result.next_state.step_count == 1
    with pytest.raises(mvnav.InputError):
        mvnav.step(state, 40, corridor, cfg)


def test_session_messages_and_replay():
    s = mvnav.Session("benchmark:corridor", "builtin:straight", seed=1)
    reply, _ = s.handle_message(json.dumps({"type": "bogus"}))
    assert json.loads(reply[0])["type"] == "error"
    s.handle_message(json.dumps({"type": "start"}))
    for _ in range(30):
        s.tick()
    state = json.loads(s.state_message())
    assert state["type"] == "state"
    assert state["tick"] == 30
    assert state["mode"] in ("AUTO", "MANUAL")
    assert mvnav.replay_json(s.recording_json()) == s.session_log_csv()


def test_metrics_and_stats():
    n = 1000
    t = [2 * math.pi * i / n for i in range(n)]
    x = [100 * math.cos(v) for v in t]
    y = [100 * math.sin(v) for v in t]
    assert mvnav.gracefulness(t, x, y) == pytest.approx(-2.0, abs=0.01)
    w, p = mvnav.shapiro_wilk([1.0, 2.0, 4.0])
    assert w == pytest.approx(0.9642857, abs=1e-6)
    u, p = mvnav.mann_whitney_u([1.0, 2.0], [3.0, 4.0])
    assert u == 0.0
    assert p == pytest.approx(1 / 3)


def test_magnet_critical_distance():
    d = mvnav.critical_distance()
    assert d > 0
    cfg = mvnav.MagnetConfig()
    assert mvnav.axial_force(cfg, d) > mvnav.axial_force(cfg, 2 * d)
