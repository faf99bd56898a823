#include <doctest.h>

#include <algorithm>

#include "helpers.hpp"
#include "mvnav/error.hpp"
#include "mvnav/semi_auto.hpp"

using namespace mvnav;

namespace {

struct Fixture {
  OccupancyGrid grid = testing::open_grid(400, 400, 5.0);
  ControllerContext ctx;
  ControllerState ctrl;

  explicit Fixture(Vec2 start = {100, 100}, Vec2 target = {350, 350}) {
    ctx.grid = &grid;
    ctx.env.agent_radius = 5.0;
    ctx.policy = straight_line_selector();
    EnvState s;
    s.position = s.start = start;
    s.target = target;
    ctrl = make_controller(s);
  }
};

bool has(const std::vector<ControllerEvent>& ev, EventKind k) {
  return std::any_of(ev.begin(), ev.end(), [&](const ControllerEvent& e) { return e.kind == k; });
}

}  // namespace

TEST_CASE("manual increments scale by tau and clamp per component") {
  Fixture f;
  f.ctx.config.tau = 2.0;
  f.ctrl.mode = ControlMode::Manual;
  auto r = manual_step(f.ctrl, {{0, 0}, 1}, f.ctx);  // first input only initializes
  CHECK(r.increment == Vec2{0, 0});
  CHECK(f.ctrl.position == Vec2{100, 100});
  r = manual_step(f.ctrl, {{10, -5}, 2}, f.ctx);
  CHECK(r.increment == Vec2{20, -10});
  CHECK(f.ctrl.position == Vec2{120, 90});
  r = manual_step(f.ctrl, {{40, 0}, 3}, f.ctx);
  CHECK(r.increment == Vec2{50, 10});  // raw (60, 10)
  CHECK(f.ctrl.position == Vec2{170, 100});
  r = manual_step(f.ctrl, {{-100, 0}, 4}, f.ctx);
  CHECK(r.increment == Vec2{-50, 0});

  CHECK_THROWS_AS(manual_step(f.ctrl, {{0, 0}, 4}, f.ctx), InputError);
  f.ctrl.mode = ControlMode::Auto;
  CHECK_THROWS_AS(manual_step(f.ctrl, {{0, 0}, 9}, f.ctx), InputError);
}

TEST_CASE("increment examples") {
  struct Case {
    double tau, cap;
    Vec2 dm, expected;
  };
  for (const auto& c : {Case{1.0, 100.0, {10, 0}, {10, 0}}, Case{0.5, 100.0, {10, 4}, {5, 2}},
                        Case{1.0, 100.0, {1e6, 0}, {100, 0}}}) {
    Fixture f({200, 200}, {390, 390});
    f.ctx.config.tau = c.tau;
    f.ctx.config.increment_cap = c.cap;
    f.ctrl.mode = ControlMode::Manual;
    manual_step(f.ctrl, {{0, 0}, 1}, f.ctx);
    CHECK(manual_step(f.ctrl, {c.dm, 2}, f.ctx).increment == c.expected);
  }
}

TEST_CASE("blocked manual moves count collisions and leave the robot in place") {
  Fixture f({10, 100});
  f.ctrl.mode = ControlMode::Manual;
  manual_step(f.ctrl, {{0, 0}, 1}, f.ctx);
  const auto r = manual_step(f.ctrl, {{-8, 0}, 2}, f.ctx);
  CHECK(r.collided);
  CHECK(f.ctrl.position == Vec2{10, 100});
  CHECK(f.ctrl.collisions == 1);
  const auto still = manual_step(f.ctrl, {{-8, 0}, 3}, f.ctx);  // zero increment is not a collision
  CHECK_FALSE(still.collided);
  CHECK(f.ctrl.collisions == 1);
}

TEST_CASE("manual increments telescope to the hand displacement") {
  Fixture f({200, 200}, {390 - 5, 390 - 5});
  f.ctrl.mode = ControlMode::Manual;
  Rng rng(6);
  Vec2 hand{0, 0};
  const Vec2 first = hand;
  Vec2 total{0, 0};
  manual_step(f.ctrl, {hand, 0}, f.ctx);
  for (std::uint64_t t = 1; t <= 200; ++t) {
    Vec2 next = hand + Vec2{(uniform01(rng) - 0.5) * 6, (uniform01(rng) - 0.5) * 6};
    // keep the robot well inside the open area
    const Vec2 cand = Vec2{200, 200} + (next - first);
    if (!f.grid.is_free(cand)) next = hand;
    total += manual_step(f.ctrl, {next, t}, f.ctx).increment;
    hand = next;
  }
  CHECK(total.x == doctest::Approx(hand.x - first.x));
  CHECK(total.y == doctest::Approx(hand.y - first.y));
  CHECK(f.ctrl.position.x == doctest::Approx(200 + hand.x - first.x));
}

TEST_CASE("switch boundary is inclusive") {
  for (auto [offset, expect] : {std::pair{3.0, true}, {10.0, true}, {11.0, false}}) {
    Fixture f;
    f.ctrl.position = {200 + offset, 200};
    f.ctrl.switch_armed = true;
    const CriticalArea area{{200, 200}, 10.0};
    CHECK(check_switch(f.ctrl, area) == expect);
    CHECK((f.ctrl.mode == ControlMode::Manual) == expect);
    CHECK(f.ctrl.switch_armed == !expect);
    if (expect) {
      REQUIRE(f.ctrl.history.size() == 1);
      CHECK(f.ctrl.history[0].to == ControlMode::Manual);
      CHECK_FALSE(check_switch(f.ctrl, area));  // fires once
    }
  }
  Fixture disarmed;
  disarmed.ctrl.position = {200, 200};
  CHECK_FALSE(check_switch(disarmed.ctrl, {{200, 200}, 10.0}));
}

TEST_CASE("autopilot drives to the critical area, hands over, and resumes") {
  Fixture f({100, 100}, {350, 100});
  const auto area = mark_critical_area(f.ctrl, f.grid, {200, 100}, 12.0);
  CHECK(area.eps == 12.0);
  CHECK(f.ctrl.switch_armed);

  // hand-traced: (100,100) -> 105 -> 110 -> 115 along +x
  for (int k = 1; k <= 3; ++k) {
    const auto ev = tick(f.ctrl, std::nullopt, f.ctx);
    CHECK(has(ev, EventKind::Moved));
    CHECK(f.ctrl.position == Vec2{100.0 + 5 * k, 100});
    CHECK(f.ctrl.tick == std::uint64_t(k));
  }
  int guard = 0;
  while (f.ctrl.mode == ControlMode::Auto && guard++ < 100) tick(f.ctrl, std::nullopt, f.ctx);
  CHECK(f.ctrl.mode == ControlMode::Manual);
  CHECK(distance(f.ctrl.position, {200, 100}) <= 12.0);
  CHECK(f.ctrl.position == Vec2{190, 100});
  CHECK_FALSE(f.ctrl.switch_armed);

  // MANUAL without input holds position
  const Vec2 held = f.ctrl.position;
  CHECK(tick(f.ctrl, std::nullopt, f.ctx).empty());
  CHECK(f.ctrl.position == held);

  const auto ev = re_arm(f.ctrl);
  REQUIRE(ev.size() == 1);
  CHECK(ev[0].kind == EventKind::ModeChanged);
  CHECK(f.ctrl.mode == ControlMode::Auto);
  bool arrived = false;
  for (int k = 0; k < 200 && !arrived; ++k) arrived = has(tick(f.ctrl, std::nullopt, f.ctx), EventKind::Arrived);
  CHECK(arrived);
  CHECK(f.ctrl.done);
  CHECK(f.ctrl.mode == ControlMode::Auto);
  CHECK(f.ctrl.switch_armed);  // re-armed once it left the area
  CHECK(f.ctrl.history.size() == 2);
}

TEST_CASE("marking again re-arms the switch") {
  Fixture f({100, 100}, {350, 100});
  mark_critical_area(f.ctrl, f.grid, {120, 100}, 10.0);
  while (f.ctrl.mode == ControlMode::Auto) tick(f.ctrl, std::nullopt, f.ctx);
  CHECK_FALSE(f.ctrl.switch_armed);
  re_arm(f.ctrl);
  mark_critical_area(f.ctrl, f.grid, {200, 100}, 10.0);
  CHECK(f.ctrl.switch_armed);
  int guard = 0;
  while (f.ctrl.mode == ControlMode::Auto && guard++ < 100) tick(f.ctrl, std::nullopt, f.ctx);
  CHECK(distance(f.ctrl.position, {200, 100}) <= 10.0);

  CHECK_THROWS_AS(mark_critical_area(f.ctrl, f.grid, {1, 1}, 10.0), InputError);
  CHECK_THROWS_AS(mark_critical_area(f.ctrl, f.grid, {200, 200}, 0.0), InputError);
}

TEST_CASE("takeover and re_arm are idempotent") {
  Fixture f;
  CHECK(takeover(f.ctrl).size() == 1);
  CHECK(takeover(f.ctrl).empty());
  CHECK(f.ctrl.mode == ControlMode::Manual);
  CHECK(re_arm(f.ctrl).size() == 1);
  CHECK(re_arm(f.ctrl).empty());
  CHECK(f.ctrl.history.size() == 2);
  CHECK(f.ctrl.history[0].reason == "operator takeover");
}

TEST_CASE("manual arrival ends the session") {
  Fixture f({100, 100}, {130, 100});
  takeover(f.ctrl);
  tick(f.ctrl, OperatorInput{{0, 0}, 1}, f.ctx);
  const auto ev = tick(f.ctrl, OperatorInput{{25, 0}, 2}, f.ctx);
  CHECK(has(ev, EventKind::Arrived));
  CHECK(f.ctrl.done);
  CHECK(tick(f.ctrl, OperatorInput{{50, 0}, 3}, f.ctx).empty());
  CHECK(f.ctrl.position == Vec2{125, 100});
}

TEST_CASE("input queue drops the oldest entry and drains in timestamp order") {
  InputQueue q(3);
  CHECK(q.push({{1, 0}, 5}));
  CHECK(q.push({{2, 0}, 3}));
  CHECK(q.push({{3, 0}, 3}));
  CHECK_FALSE(q.push({{4, 0}, 1}));
  CHECK(q.size() == 3);
  const auto out = q.drain();
  REQUIRE(out.size() == 3);
  CHECK(out[0].delta.x == 4);
  CHECK(out[1].delta.x == 2);  // stable among equal stamps
  CHECK(out[2].delta.x == 3);
  CHECK(q.size() == 0);
  CHECK(InputQueue(0).capacity() == 1);
}
