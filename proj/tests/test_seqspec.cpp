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

#include <set>

#include "doctest.h"
#include "katalite/seqspec.hpp"
#include "katalite/verifier.hpp"

using namespace katalite;

namespace {

const SequentialSpec &bench(const char *name) {
  const SequentialSpec *s = find_benchmark(name);
  REQUIRE(s != nullptr);
  return *s;
}

// Evaluates the user ordering (without the timestamp clause) directly.
bool user_order(const SequentialSpec &spec, const OpValue &a, const OpValue &b) {
  Env env;
  auto sig = spec.signature();
  for (size_t i = 0; i < sig.size(); ++i) env.bind("o1." + sig[i].name, field_value(sig[i].sort, a[i]));
  for (size_t i = 0; i < sig.size(); ++i) env.bind("o2." + sig[i].name, field_value(sig[i].sort, b[i]));
  return eval(*spec.op_order, env).as_bool();
}

}  // namespace

TEST_CASE("nine benchmarks with their flags") {
  auto all = builtin_benchmarks();
  CHECK(all.size() == 9);
  std::set<std::string> names;
  for (const auto &s : all) {
    names.insert(s.name);
    CHECK_NOTHROW(validate_spec(s));
  }
  CHECK(names.size() == 9);
  CHECK(bench("two-phase-set").flags == Flags{false, false});
  CHECK(bench("grow-only-counter").flags.non_idempotent);
  CHECK(bench("general-counter").flags.non_idempotent);
  CHECK(bench("lww-register").flags.timestamps);
  CHECK(bench("add-wins-set").flags.timestamps);
  CHECK(bench("enable-wins-flag").flags.timestamps);
  CHECK(find_benchmark("bench:grow-only-set") == find_benchmark("grow-only-set"));
  CHECK(find_benchmark("nope") == nullptr);
}

TEST_CASE("effective op order") {
  const auto &tp = bench("two-phase-set");
  CHECK(effective_op_order(tp) == tp.op_order);
  const auto &aw = bench("add-wins-set");
  // Strictly increasing timestamps are ordered whatever the kinds.
  for (int64_t a : {0, 1})
    for (int64_t b : {0, 1}) CHECK(order_holds(aw, {a, 1, 1}, {b, 1, 2}));
  CHECK_FALSE(order_holds(aw, {1, 1, 2}, {1, 1, 1}));
  // Equal timestamps fall back to the user ordering.
  for (const auto &o : {OpValue{0, 1, 1}, OpValue{1, 2, 1}})
    CHECK(order_holds(aw, o, o) == user_order(aw, o, o));
  CHECK_FALSE(order_holds(aw, {1, 1, 1}, {0, 1, 1}));
  CHECK(order_holds(aw, {0, 1, 1}, {1, 1, 1}));
}

TEST_CASE("effective precondition") {
  const auto &aw = bench("add-wins-set");
  CHECK(precondition_holds(aw, {1, 1, 1}));
  CHECK_FALSE(precondition_holds(aw, {1, 1, 0}));
  const auto &tp = bench("two-phase-set");
  CHECK(effective_precondition(tp) == tp.op_precondition);
  CHECK(precondition_holds(tp, {1, 1}));

  SequentialSpec guarded = aw;
  guarded.op_precondition = t_geq(t_var("o.v"), t_int(1, Scalar::Opaque));
  CHECK(effective_precondition(guarded)->op == Op::And);
  CHECK_FALSE(precondition_holds(guarded, {1, 0, 1}));
  CHECK_FALSE(precondition_holds(guarded, {1, 1, 0}));
  CHECK(precondition_holds(guarded, {1, 1, 1}));
}

TEST_CASE("sequential runs") {
  const auto &tp = bench("two-phase-set");
  CHECK(answer_query(tp, run_sequential(tp, {}), {1}) == Value::boolean(false));
  std::vector<OpValue> ins_rem = {{1, 1}, {0, 1}};
  CHECK(answer_query(tp, run_sequential(tp, ins_rem), {1}) == Value::boolean(false));
  CHECK(order_holds(tp, {1, 1}, {0, 1}));
  CHECK_FALSE(order_holds(tp, {0, 1}, {1, 1}));

  const auto &gs = bench("grow-only-set");
  CHECK(order_holds(gs, {0, 2}, {1, 2}));
  CHECK(answer_query(gs, run_sequential(gs, {{0, 2}, {1, 2}}), {2}) == Value::boolean(true));

  const auto &gc = bench("general-counter");
  CHECK(answer_query(gc, run_sequential(gc, {{1}, {1}, {0}}), {}) == Value::integer(1));
  const auto &lww = bench("lww-register");
  CHECK(answer_query(lww, run_sequential(lww, {{3, 1}, {2, 2}}), {}) == Value::integer(2));
  const auto &ew = bench("enable-wins-flag");
  CHECK(answer_query(ew, run_sequential(ew, {}), {}) == Value::boolean(true));
  CHECK(answer_query(ew, run_sequential(ew, {{0, 1}}), {}) == Value::boolean(false));
}

TEST_CASE("every benchmark ordering is transitive on the small universe") {
  for (const auto &s : builtin_benchmarks())
    CHECK_MESSAGE(!check_order_transitive(s, Universe::of_size(s, 3)).has_value(), s.name);
}

TEST_CASE("an intransitive ordering is reported") {
  SequentialSpec s = bench("lww-register");
  s.flags.timestamps = false;
  // o1.v != o2.v holds for (1,2) and (2,1) but not (1,1).
  s.op_order = t_not(t_eq(t_var("o1.v"), t_var("o2.v")));
  CHECK(check_order_transitive(s, Universe::of_size(s, 2)).has_value());
}

TEST_CASE("spec json round trip") {
  for (const auto &s : builtin_benchmarks()) {
    SequentialSpec back = spec_from_json(spec_to_json(s));
    CHECK(spec_to_json(back) == spec_to_json(s));
    CHECK(back.flags == s.flags);
    CHECK(back.signature() == s.signature());
  }
  CHECK(load_spec("bench:two-phase-set").name == "two-phase-set");
  CHECK_THROWS(load_spec("bench:missing"));
}

TEST_CASE("invalid specs are rejected") {
  SequentialSpec s = bench("two-phase-set");
  s.query = t_var("state");
  CHECK_THROWS_AS(validate_spec(s), SpecError);
  s = bench("two-phase-set");
  s.op_fields.push_back({"v", Scalar::Int});
  CHECK_THROWS_AS(validate_spec(s), SpecError);
  s = bench("add-wins-set");
  s.op_fields.push_back({"t", Scalar::Clock});
  CHECK_THROWS_AS(validate_spec(s), SpecError);
}

TEST_CASE("constants include literals from the ordering") {
  auto c = bench("two-phase-set").constants();
  CHECK(std::count(c.begin(), c.end(), 0) == 1);
  CHECK(std::count(c.begin(), c.end(), 1) == 1);
}
