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

#include <algorithm>
#include <set>

#include "doctest.h"
#include "katalite/designs.hpp"
#include "katalite/verifier.hpp"
#include "support.hpp"

namespace kt = katalite::testing;
using namespace katalite;
using LT = LatticeType;

namespace {

const SequentialSpec &bench(const std::string &name) { return *find_benchmark(name); }

OpValue ins(int64_t v) { return {1, v}; }
OpValue rem(int64_t v) { return {0, v}; }

size_t brute_force_tp_logs(int max_len) {
  std::vector<OpValue> ops = {rem(1), rem(2), ins(1), ins(2)};
  size_t count = 1;
  std::vector<std::vector<OpValue>> layer = {{}};
  for (int len = 1; len <= max_len; ++len) {
    std::vector<std::vector<OpValue>> next;
    for (const auto &log : layer)
      for (const auto &o : ops) {
        bool ok = true;
        for (const auto &p : log) ok = ok && kt::tp_order(p, o);
        if (!ok) continue;
        auto l = log;
        l.push_back(o);
        next.push_back(std::move(l));
      }
    count += next.size();
    layer = std::move(next);
  }
  return count;
}

}  // namespace

TEST_CASE("log_in_order") {
  const auto &tp = bench("two-phase-set");
  CHECK(log_in_order(tp, {ins(1), rem(1)}));
  CHECK_FALSE(log_in_order(tp, {rem(1), ins(1)}));
  CHECK(log_in_order(tp, {}));
  const auto &aw = bench("add-wins-set");
  CHECK(log_in_order(aw, {{1, 1, 1}, {0, 1, 2}}));
  CHECK_FALSE(log_in_order(aw, {{1, 1, 2}, {0, 1, 1}}));
}

TEST_CASE("fold examples") {
  const auto &tp = bench("two-phase-set");
  auto classic = designs::classic_two_phase_set();
  CHECK(fold_crdt(tp, classic, {ins(1)}, {}) ==
        Value::tuple({Value::set({1}), Value::set({})}));
  for (const auto &d : designs::reference())
    CHECK(fold_crdt(bench(d.spec), d, {}, {}) == d.init);
  const auto &gc = bench("general-counter");
  auto counter = designs::general_counter();
  Value s = fold_crdt(gc, counter, {{1}, {1}}, {0, 0});
  CHECK(s.as_tuple()[0] == Value::map({{0, Value::integer(2)}}));
  CHECK(s.as_tuple()[1] == Value::map({}));
  CHECK(eval_query_star(gc, counter, s, {}) == Value::integer(2));
  Value s2 = fold_crdt(gc, counter, {{1}, {0}, {1}}, {0, 1, 1});
  CHECK(eval_query_star(gc, counter, s2, {}) == Value::integer(1));
}

TEST_CASE("fold is the join of transition outputs") {
  for (const auto &d : designs::reference()) {
    const auto &spec = bench(d.spec);
    if (spec.flags.non_idempotent) continue;
    Universe u = Universe::of_size(spec, 2);
    auto tree = build_log_tree(spec, u, 3);
    for (size_t n = 0; n < tree.nodes.size(); n += 7) {
      auto log = tree.log_of(static_cast<int>(n));
      Value acc = d.init;
      for (const auto &op : log) acc = join(d.state_type, acc, eval_f_star(spec, d, op, acc, 0));
      CHECK(fold_crdt(spec, d, log, {}) == acc);
    }
  }
}

TEST_CASE("log tree holds every in-order log") {
  const auto &tp = bench("two-phase-set");
  auto tree = build_log_tree(tp, Universe::of_size(tp, 2), 3);
  CHECK(tree.nodes.size() == brute_force_tp_logs(3));
  CHECK_FALSE(tree.truncated);
  std::set<std::vector<OpValue>> seen;
  for (size_t n = 0; n < tree.nodes.size(); ++n) {
    auto log = tree.log_of(static_cast<int>(n));
    CHECK(log_in_order(tp, log));
    CHECK(static_cast<int>(log.size()) == tree.nodes[n].depth);
    CHECK(seen.insert(log).second);
  }
  for (size_t n = 1; n < tree.nodes.size(); ++n)
    CHECK(tree.nodes[n - 1].depth <= tree.nodes[n].depth);
}

TEST_CASE("naive set fails with a shortest counterexample") {
  const auto &tp = bench("two-phase-set");
  auto naive = designs::naive_set();
  int oracle = kt::brute_force_naive_min(2, 4);
  REQUIRE(oracle == 2);
  Verdict v = check_bounded(tp, naive, Universe::of_size(tp, 2), 2);
  REQUIRE(v.kind == VerdictKind::Fail);
  REQUIRE(v.cex.has_value());
  CHECK(static_cast<int>(v.cex->log.size()) == oracle);
  auto min = minimize_counterexample(tp, naive, *v.cex);
  CHECK(static_cast<int>(min.log.size()) <= oracle);
  CHECK(min.log.size() == 2);
  CHECK(min.log[0][0] == 1);
  CHECK(min.log[1][0] == 0);
  CHECK(min.log[0][1] == min.log[1][1]);
  CHECK(replay_fails(tp, naive, min));
  // Larger bounds still report a shortest trace first.
  Verdict v3 = check_bounded(tp, naive, Universe::of_size(tp, 3), 4);
  REQUIRE(v3.kind == VerdictKind::Fail);
  CHECK(v3.cex->log.size() == 2);
}

TEST_CASE("minimization") {
  const auto &tp = bench("two-phase-set");
  auto naive = designs::naive_set();
  Counterexample c;
  c.log = {ins(2), ins(1), rem(1)};
  c.prefix_index = 3;
  c.query = {1};
  c.expected = Value::boolean(false);
  REQUIRE(replay_fails(tp, naive, c));
  auto m = minimize_counterexample(tp, naive, c);
  CHECK(m.log == std::vector<OpValue>{ins(1), rem(1)});
  CHECK(replay_fails(tp, naive, m));
  auto again = minimize_counterexample(tp, naive, m);
  CHECK(again.log == m.log);
  // The same trace is not a failure for a correct design.
  auto fixed = designs::map_two_phase_set();
  CHECK_FALSE(replay_fails(tp, fixed, m));
}

TEST_CASE("map two-phase set and add-wins set pass") {
  const auto &tp = bench("two-phase-set");
  Verdict v = check_bounded(tp, designs::map_two_phase_set(), Universe::of_size(tp, 3), 4);
  CHECK(v.kind == VerdictKind::Pass);
  CHECK(v.log_bound == 4);
  CHECK(v.checks > 0);
  const auto &aw = bench("add-wins-set");
  CHECK(check_bounded(aw, designs::add_wins_set(), Universe::of_size(aw, 2), 3).kind ==
        VerdictKind::Pass);
}

TEST_CASE("wrong designs fail") {
  // Add-wins logic against the remove-wins spec and vice versa.
  const auto &aw = bench("add-wins-set");
  const auto &rw = bench("remove-wins-set");
  CHECK(check_bounded(rw, designs::add_wins_set(), Universe::of_size(rw, 2), 3).kind ==
        VerdictKind::Fail);
  CHECK(check_bounded(aw, designs::remove_wins_set(), Universe::of_size(aw, 2), 3).kind ==
        VerdictKind::Fail);
  const auto &ew = bench("enable-wins-flag");
  CHECK(check_bounded(ew, designs::disable_wins_flag(), Universe::of_size(ew, 2), 3).kind ==
        VerdictKind::Fail);
}

TEST_CASE("pass is monotone in the bound") {
  for (const auto &d : designs::reference()) {
    const auto &spec = bench(d.spec);
    for (int b = 0; b <= 3; ++b)
      CHECK_MESSAGE(check_bounded(spec, d, Universe::of_size(spec, 2), b).kind ==
                        VerdictKind::Pass,
                    d.name);
  }
}

TEST_CASE("budget exhaustion is inconclusive") {
  const auto &tp = bench("two-phase-set");
  Verdict v = check_bounded(tp, designs::map_two_phase_set(), Universe::of_size(tp, 3), 4, 10);
  CHECK(v.kind == VerdictKind::Inconclusive);
  CHECK_FALSE(v.reason.empty());
}

TEST_CASE("permutation invariance") {
  const auto &tp = bench("two-phase-set");
  CHECK(check_permutation_invariance(tp, designs::classic_two_phase_set(), {{ins(1), rem(2)}}));
  const auto &lww = bench("lww-register");
  auto reg = designs::lww_register();
  std::vector<OpValue> log = {{1, 1}, {2, 2}};
  CHECK(fold_crdt(lww, reg, log, {}) == fold_crdt(lww, reg, {log[1], log[0]}, {}));
  CHECK(check_permutation_invariance(lww, reg, {log}));
}

TEST_CASE("universe shape") {
  const auto &aw = bench("add-wins-set");
  Universe u = Universe::of_size(aw, 3);
  CHECK(u.opaque_values == std::vector<int64_t>{1, 2, 3});
  CHECK(u.clock_values == std::vector<int64_t>{1, 2, 3});
  CHECK(u.node_ids == std::vector<int64_t>{0, 1});
  CHECK(Universe::of_size(aw, 1).node_ids == std::vector<int64_t>{0});
  // add in {0,1} x v in 1..3 x t in 1..3
  CHECK(universe_ops(aw, u).size() == 18);
  CHECK(universe_queries(aw, u).size() == 3);
}

TEST_CASE("design json round trip") {
  for (const auto &d : designs::reference()) {
    CrdtDesign back = design_from_json(design_to_json(d));
    CHECK(design_to_json(back) == design_to_json(d));
    CHECK(back.state_type == d.state_type);
    CHECK(back.init == d.init);
    CHECK_NOTHROW(validate_design(bench(d.spec), back));
    CHECK_FALSE(design_pretty(bench(d.spec), d).empty());
  }
}

TEST_CASE("verdict json names the counterexample") {
  const auto &tp = bench("two-phase-set");
  Verdict v = check_bounded(tp, designs::naive_set(), Universe::of_size(tp, 2), 2);
  json j = verdict_to_json(tp, v);
  CHECK(j.at("verdict") == "fail");
  CHECK(j.at("counterexample").is_object());
  CHECK(j.at("log_bound") == 2);
}
