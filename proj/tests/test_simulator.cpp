//  Copyright 2026 The Katalite Authors
//
//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.

#include "doctest.h"
#include "katalite/designs.hpp"
#include "katalite/simulator.hpp"

using namespace katalite;

namespace {

const SequentialSpec &bench(const std::string &name) { return *find_benchmark(name); }

bool has_witness(const SimReport &r, const std::string &kind) {
  for (const auto &w : r.witnesses)
    if (w.kind == kind) return true;
  return false;
}

}  // namespace

TEST_CASE("two-way gossip makes replicas equal") {
  const auto &tp = bench("two-phase-set");
  auto d = designs::classic_two_phase_set();
  auto reps = initial_replicas(d, 2);
  std::vector<OpValue> applied;
  step(tp, d, reps, Event::apply(0, {1, 1}), applied);
  step(tp, d, reps, Event::apply(1, {1, 2}), applied);
  CHECK_FALSE(semantic_eq(d.state_type, reps[0].state, reps[1].state));
  step(tp, d, reps, Event::gossip(0, 1), applied);
  step(tp, d, reps, Event::gossip(1, 0), applied);
  CHECK(semantic_eq(d.state_type, reps[0].state, reps[1].state));
  CHECK(reps[0].seen == std::vector<uint8_t>{1, 1});
}

TEST_CASE("lamport stamping") {
  const auto &lww = bench("lww-register");
  auto d = designs::lww_register();
  Schedule s;
  s.replicas = 2;
  s.events = {Event::apply(0, {1}), Event::gossip(0, 1), Event::apply(1, {2}),
              Event::gossip(1, 0), Event::query_all({})};
  auto r = run(d, lww, s);
  REQUIRE(r.applied.size() == 2);
  CHECK(r.applied[0] == OpValue{1, 1});
  CHECK(r.applied[1] == OpValue{2, 2});
  // Oracle: folding the stamped ops in either order.
  Value folded = fold_crdt(lww, d, r.applied, {});
  CHECK(eval_query_star(lww, d, folded, {}) == Value::integer(2));
  REQUIRE(r.queries.size() == 1);
  for (const auto &a : r.queries[0].answers) CHECK(a == Value::integer(2));
  CHECK(r.converged);
  CHECK(r.witnesses.empty());
  CHECK(r.replicas[0].clock == 2);
  CHECK(r.replicas[1].clock == 2);
}

TEST_CASE("concurrent writes with equal stamps") {
  const auto &lww = bench("lww-register");
  auto d = designs::lww_register();
  Schedule s;
  s.replicas = 2;
  s.events = {Event::apply(0, {3}), Event::apply(1, {2}), Event::gossip(0, 1),
              Event::gossip(1, 0), Event::query_all({})};
  auto r = run(d, lww, s);
  CHECK(r.converged);
  CHECK(r.queries[0].answers[0] == r.queries[0].answers[1]);
  CHECK(r.queries[0].expected[0] == std::optional<Value>(r.queries[0].answers[0]));
}

TEST_CASE("fixtures") {
  const auto &tp = bench("two-phase-set");
  auto classic = designs::classic_two_phase_set();
  auto naive = designs::naive_set();
  auto left = run(classic, tp, fixture_schedule("fig1-left"));
  CHECK(left.converged);
  for (const auto &a : left.queries.at(0).answers) CHECK(a == Value::boolean(false));
  for (const auto &name : fixture_names()) {
    auto good = run(classic, tp, fixture_schedule(name));
    CHECK_MESSAGE(good.converged, name);
    CHECK_MESSAGE(good.witnesses.empty(), name);
    auto bad = run(naive, tp, fixture_schedule(name));
    CHECK_MESSAGE(has_witness(bad, "spec"), name);
  }
  auto mid = run(naive, tp, fixture_schedule("fig1-middle"));
  CHECK_FALSE(mid.witnesses.empty());
  CHECK_THROWS_AS(fixture_schedule("no-such-scenario"), ScheduleError);
}

TEST_CASE("single replica is trivially convergent") {
  for (const auto &d : designs::reference()) {
    const auto &spec = bench(d.spec);
    auto r = run(d, spec, random_schedule(spec, 1, 30, 0.3, 4));
    CHECK(r.converged);
    CHECK(check_convergence(r));
  }
}

TEST_CASE("random schedules converge and match the sequential answers") {
  for (const auto &d : designs::reference()) {
    const auto &spec = bench(d.spec);
    for (uint64_t seed = 0; seed < 10; ++seed) {
      auto r = run(d, spec, random_schedule(spec, 3, 100, 0.3, seed));
      CHECK_MESSAGE(r.converged, d.name, " seed ", seed);
      CHECK_MESSAGE(r.witnesses.empty(), d.name, " seed ", seed);
      REQUIRE_FALSE(r.queries.empty());
    }
  }
}

TEST_CASE("counters count exactly") {
  const auto &gc = bench("general-counter");
  auto d = designs::general_counter();
  for (uint64_t seed = 0; seed < 20; ++seed) {
    auto s = random_schedule(gc, 3, 100, 0.3, seed);
    int64_t net = 0;
    for (const auto &e : s.events)
      if (e.kind == Event::Kind::Apply) net += e.args[0] == 1 ? 1 : -1;
    auto r = run(d, gc, s);
    for (const auto &rep : r.replicas)
      CHECK(eval_query_star(gc, d, rep.state, {}) == Value::integer(net));
  }
  const auto &g = bench("grow-only-counter");
  auto dg = designs::grow_only_counter();
  auto r = run(dg, g, random_schedule(g, 3, 57, 0.3, 1));
  CHECK(eval_query_star(g, dg, r.replicas[2].state, {}) == Value::integer(57));
}

TEST_CASE("runs are deterministic") {
  const auto &tp = bench("two-phase-set");
  auto d = designs::map_two_phase_set();
  auto a = random_schedule(tp, 3, 100, 0.3, 0), b = random_schedule(tp, 3, 100, 0.3, 0);
  CHECK(schedule_to_json(tp, a) == schedule_to_json(tp, b));
  CHECK(sim_report_to_json(tp, d, run(d, tp, a)) == sim_report_to_json(tp, d, run(d, tp, b)));
  auto c = random_schedule(tp, 3, 100, 0.3, 1);
  CHECK(schedule_to_json(tp, a) != schedule_to_json(tp, c));
}

TEST_CASE("schedule json round trip") {
  const auto &aw = bench("add-wins-set");
  auto s = random_schedule(aw, 3, 20, 0.5, 9);
  auto back = schedule_from_json(aw, schedule_to_json(aw, s));
  CHECK(schedule_to_json(aw, back) == schedule_to_json(aw, s));
  CHECK(back.events.size() == s.events.size());
}

TEST_CASE("bad events are rejected") {
  const auto &tp = bench("two-phase-set");
  auto d = designs::classic_two_phase_set();
  auto reps = initial_replicas(d, 2);
  std::vector<OpValue> applied;
  CHECK_THROWS_AS(step(tp, d, reps, Event::apply(2, {1, 1}), applied), ScheduleError);
  CHECK_THROWS_AS(step(tp, d, reps, Event::apply(0, {1}), applied), ScheduleError);
  CHECK_THROWS_AS(step(tp, d, reps, Event::gossip(0, 5), applied), ScheduleError);
  CHECK_THROWS_AS(initial_replicas(d, 0), ScheduleError);
  CHECK(applied.empty());
}

TEST_CASE("sequential answer arranges ops in order") {
  const auto &tp = bench("two-phase-set");
  CHECK(sequential_answer(tp, {{0, 1}, {1, 1}}, {1}) == std::optional<Value>(Value::boolean(false)));
  CHECK(sequential_answer(tp, {{1, 1}}, {1}) == std::optional<Value>(Value::boolean(true)));
  CHECK(sequential_answer(tp, {}, {1}) == std::optional<Value>(Value::boolean(false)));
}
