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
#include "katalite/synthesizer.hpp"

using namespace katalite;
using LT = LatticeType;

namespace {

const SequentialSpec &bench(const std::string &name) { return *find_benchmark(name); }

SearchConfig quick(int workers = 2) {
  SearchConfig c;
  c.workers = workers;
  c.max_depth = 3;
  return c;
}

bool passes(const SequentialSpec &spec, const CrdtDesign &d, int n = 3, int bound = 4) {
  return check_bounded(spec, d, Universe::of_size(spec, n), bound).kind == VerdictKind::Pass;
}

}  // namespace

TEST_CASE("two-phase set over a flag map") {
  const auto &tp = bench("two-phase-set");
  CexCache cache;
  TypeReport rep;
  LT st = LT::map(Scalar::Opaque, LT::or_bool());
  auto d = synth_for_state(tp, st, 3, 2, quick(), cache, &rep);
  REQUIRE(d.has_value());
  CHECK(d->state_type == st);
  CHECK(passes(tp, *d));
  // Same observable behaviour as the hand-written map design.
  auto ref = designs::map_two_phase_set();
  Universe u = Universe::of_size(tp, 3);
  auto tree = build_log_tree(tp, u, 3);
  for (size_t n = 0; n < tree.nodes.size(); ++n) {
    auto log = tree.log_of(static_cast<int>(n));
    for (const auto &q : tree.queries)
      CHECK(eval_query_star(tp, *d, fold_crdt(tp, *d, log, {}), q) ==
            eval_query_star(tp, ref, fold_crdt(tp, ref, log, {}), q));
  }
  CHECK(rep.query_candidates > 0);
}

TEST_CASE("grow-only set over a set") {
  const auto &gs = bench("grow-only-set");
  CexCache cache;
  auto d = synth_for_state(gs, LT::set(Scalar::Opaque), 3, 2, quick(), cache);
  REQUIRE(d.has_value());
  for (int64_t v : {1, 2}) {
    CHECK(eval_f_star(gs, *d, {1, v}, d->init, 0) == Value::set({v}));
    CHECK(eval_f_star(gs, *d, {0, v}, d->init, 0) == Value::set({}));
    CHECK(eval_query_star(gs, *d, Value::set({v}), {v}) == Value::boolean(true));
    CHECK(eval_query_star(gs, *d, Value::set({}), {v}) == Value::boolean(false));
  }
}

TEST_CASE("two-phase set has no boolean design") {
  const auto &tp = bench("two-phase-set");
  CexCache cache;
  for (int depth = 1; depth <= 4; ++depth) {
    TypeReport rep;
    CHECK_FALSE(synth_for_state(tp, LT::or_bool(), depth, 2, quick(), cache, &rep).has_value());
    CHECK(rep.outcome == "exhausted");
  }
}

TEST_CASE("phase 2") {
  const auto &tp = bench("two-phase-set");
  CexCache cache;
  SearchConfig cfg = quick();
  CHECK(phase2_check(tp, designs::classic_two_phase_set(), 4, cfg, &cache).kind ==
        VerdictKind::Pass);
  CHECK(cache.size() == 0);
  // Grow-only logic passes single-op logs but not phase 2.
  auto naive = designs::naive_set();
  CHECK(passes(tp, naive, 3, 1));
  Verdict v = phase2_check(tp, naive, 3, cfg, &cache);
  CHECK(v.kind == VerdictKind::Fail);
  CHECK(cache.size() == 1);
  auto rec = cache.since(0).at(0);
  CHECK(answer_query(tp, run_sequential(tp, rec.log), rec.query) == rec.expected);
  CHECK_FALSE(cache.append(rec));
}

TEST_CASE("a bound-1 phase 1 escalates") {
  const auto &tp = bench("two-phase-set");
  SearchConfig cfg = quick();
  cfg.initial_log_bound = 1;
  CexCache cache;
  TypeReport rep;
  auto d = synth_type(tp, LT::set(Scalar::Opaque), 3, cfg, cache, rep);
  // No single set implements the two-phase set; the wrong phase-1 winners
  // are rejected by phase 2 until the ceiling.
  CHECK_FALSE(d.has_value());
  CHECK(rep.escalations >= 1);
  CHECK(rep.phase2_checks == rep.escalations);
  CHECK(cache.size() >= 1);

  TypeReport rep2;
  CexCache cache2;
  auto m = synth_type(tp, LT::map(Scalar::Opaque, LT::or_bool()), 3, cfg, cache2, rep2);
  REQUIRE(m.has_value());
  CHECK(rep2.outcome == "found");
  CHECK(rep2.escalations == rep2.final_log_bound - cfg.initial_log_bound);
  CHECK(m->provenance.verified_log_bound == rep2.final_log_bound + cfg.phase2_log_bound_delta);
  CHECK(passes(tp, *m));
}

TEST_CASE("cached traces are genuine sequential answers") {
  const auto &tp = bench("two-phase-set");
  SearchConfig cfg = quick();
  cfg.initial_log_bound = 1;
  CexCache cache;
  TypeReport rep;
  synth_type(tp, LT::set(Scalar::Opaque), 3, cfg, cache, rep);
  REQUIRE(cache.size() >= 1);
  for (const auto &r : cache.since(0)) {
    CHECK(log_in_order(tp, r.log));
    CHECK(answer_query(tp, run_sequential(tp, r.log), r.query) == r.expected);
  }
}

TEST_CASE("search on the grow-only set") {
  const auto &gs = bench("grow-only-set");
  auto r = search(gs, quick());
  REQUIRE(r.found);
  REQUIRE(r.designs.size() == 1);
  CHECK(r.designs[0].state_type == LT::set(Scalar::Opaque));
  CHECK(passes(gs, r.designs[0]));
  CHECK(r.types_explored > 0);
  CHECK(r.phase1_passes >= 1);
  auto again = search(gs, quick(4));
  REQUIRE(again.found);
  CHECK(design_to_json(again.designs[0]).dump() == design_to_json(r.designs[0]).dump());
  auto one = search_all(gs, quick(), 1);
  REQUIRE(one.designs.size() == 1);
  CHECK(design_to_json(one.designs[0]).dump() == design_to_json(r.designs[0]).dump());
}

TEST_CASE("racing mode finds a correct design") {
  const auto &tp = bench("two-phase-set");
  SearchConfig cfg = quick(4);
  cfg.deterministic = false;
  auto r = search(tp, cfg);
  REQUIRE(r.found);
  CHECK(passes(tp, r.designs[0]));
}

TEST_CASE("hinted search stays on the hint") {
  const auto &tp = bench("two-phase-set");
  SearchConfig cfg = quick();
  cfg.max_depth = 4;
  cfg.hint_state = LT::free_tuple({LT::set(Scalar::Opaque), LT::set(Scalar::Opaque)});
  CHECK(candidate_state_types(tp, 4, cfg) == std::vector<LT>{*cfg.hint_state});
  auto r = search(tp, cfg);
  REQUIRE(r.found);
  CHECK(r.designs[0].state_type == *cfg.hint_state);
  CHECK(passes(tp, r.designs[0]));
}

TEST_CASE("timeout") {
  const auto &gc = bench("general-counter");
  SearchConfig cfg = quick();
  cfg.max_depth = 6;
  cfg.timeout_s = 0.2;
  auto r = search(gc, cfg);
  CHECK_FALSE(r.found);
  CHECK(r.timed_out);
  CHECK(r.wall_ms < 20'000);
}

TEST_CASE("design classes and dead components") {
  CHECK(design_class(LT::or_bool()) == "scalar");
  CHECK(design_class(LT::set(Scalar::Opaque)) == "set");
  CHECK(design_class(LT::map(Scalar::Opaque, LT::or_bool())) == "map");
  CHECK(design_class(LT::lex(LT::or_bool(), LT::or_bool())) == "lex");
  CHECK(design_class(designs::classic_two_phase_set().state_type) == "tuple");

  const auto &tp = bench("two-phase-set");
  CHECK(dead_components(tp, designs::classic_two_phase_set()).empty());
  CHECK(dead_components(bench("lww-register"), designs::lww_register()).empty());
  // A map design padded with a constant boolean in front.
  auto m = designs::map_two_phase_set();
  CrdtDesign padded = m;
  padded.state_type = LT::lex(LT::or_bool(), m.state_type);
  padded.init = Value::tuple({Value::boolean(false), m.init});
  padded.f_star = t_tuple({t_bool(false), m.f_star});
  padded.query_star = t_not(t_map_get(t_tuple_get(t_var(kStateVar), 1), t_var("v"), t_bool(true)));
  REQUIRE(passes(tp, padded, 2, 3));
  CHECK(dead_components(tp, padded) == std::vector<int>{0});
}

TEST_CASE("report json carries the counters") {
  const auto &gs = bench("grow-only-set");
  SearchConfig cfg = quick();
  auto r = search(gs, cfg);
  json j = report_to_json(gs, r, cfg);
  CHECK(j.dump().find("full_checks") != std::string::npos);
  CHECK(j.dump().find("cache_hits") != std::string::npos);
}
