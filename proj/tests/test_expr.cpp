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

#include <random>

#include "doctest.h"
#include "katalite/designs.hpp"
#include "katalite/expr.hpp"
#include "support.hpp"

namespace kt = katalite::testing;
using namespace katalite;
using LT = LatticeType;

namespace {

Value I(int64_t x) { return Value::integer(x); }
Value B(bool b) { return Value::boolean(b); }

}  // namespace

TEST_CASE("typecheck examples") {
  SortEnv env = {{"v", Sort::of(Scalar::Opaque)},
                 {"a", Sort::of(Scalar::Enum)},
                 {"x", Sort::of(Scalar::Int)},
                 {"c", Sort::of(Scalar::Clock)}};
  CHECK_THROWS_AS(typecheck(*t_add(t_var("v"), t_int(1)), env), TypeError);
  CHECK_THROWS_AS(typecheck(*t_add(t_var("c"), t_int(1, Scalar::Clock)), env), TypeError);
  CHECK_THROWS_AS(typecheck(*t_gt(t_var("a"), t_int(0, Scalar::Enum)), env), TypeError);
  CHECK(typecheck(*t_eq(t_var("a"), t_int(1, Scalar::Enum)), env) == Sort::boolean());
  CHECK(typecheck(*t_member(t_var("x"), t_empty_set(Scalar::Int)), env) == Sort::boolean());
  CHECK(typecheck(*t_gt(t_var("c"), t_int(0, Scalar::Clock)), env) == Sort::boolean());
  CHECK(typecheck(*t_add(t_var("x"), t_int(1)), env) == Sort::of(Scalar::Int));
  CHECK_THROWS_AS(typecheck(*t_var("nope"), env), TypeError);
  CHECK_THROWS_AS(typecheck(*t_ite(t_var("x"), t_int(1), t_int(2)), env), TypeError);
  CHECK_THROWS_AS(typecheck(*t_ite(t_bool(true), t_int(1), t_bool(false)), env), TypeError);
}

TEST_CASE("eval examples") {
  LT flags = LT::map(Scalar::Opaque, LT::or_bool());
  Env env;
  env.bind("m", Value::map({{1, B(true)}}));
  env.bind("n", Value::map({{0, I(3)}, {1, I(4)}}));
  CHECK(eval(*t_map_get(t_var("m"), t_int(2, Scalar::Opaque), t_bool(true)), env) == B(true));
  CHECK(eval(*t_map_get(t_var("m"), t_int(1, Scalar::Opaque), t_bool(false)), env) == B(true));
  CHECK(eval(*t_reduce(t_var("n"), Reducer::Sum, t_int(0)), env) == I(7));
  CHECK(eval(*t_ite(t_bool(true), t_int(1), t_int(2)), env) == I(1));
  CHECK(eval(*t_sub(t_int(1), t_int(3)), env) == I(-2));
  CHECK(eval(*t_diff(t_union(t_singleton(t_int(1)), t_singleton(t_int(2))),
                     t_singleton(t_int(1))),
             env) == Value::set({2}));
  CHECK(eval(*t_subset(t_empty_set(Scalar::Int), t_singleton(t_int(1))), env) == B(true));
  CHECK(eval(*t_tuple_get(t_tuple({t_int(4), t_bool(false)}), 1), env) == B(false));
  CHECK(eval(*t_lattice_bottom(flags), env) == Value::map({}));
  CHECK_THROWS(eval(*t_var("unbound"), env));
}

TEST_CASE("depth examples") {
  CHECK(term_depth(*t_int(0)) == 1);
  CHECK(term_depth(*t_ite(t_var("b"), t_var("x"), t_var("y"))) == 2);
  CHECK(term_size(*t_ite(t_var("b"), t_var("x"), t_var("y"))) == 4);
  // Regression value for the timestamped add-wins query.
  CHECK(term_depth(*designs::add_wins_set().query_star) == 5);
  CHECK(term_depth(*designs::map_two_phase_set().query_star) == 3);
}

TEST_CASE("reductions match a direct fold in any key order") {
  std::mt19937_64 rng(19);
  LT inner = LT::max_int(Scalar::Int);
  LT m = LT::map(Scalar::Int, inner);
  for (int i = 0; i < 300; ++i) {
    Value v = kt::gen_value(m, rng);
    int64_t sum = 0;
    Value acc = kt::ref_bottom(inner);
    // Fold in reverse key order; the reducers must not care.
    for (auto it = v.as_map().rbegin(); it != v.as_map().rend(); ++it) {
      sum += it->second.as_int();
      acc = kt::ref_join(inner, acc, it->second);
    }
    Env env;
    env.bind("m", v);
    CHECK(eval(*t_reduce(t_var("m"), Reducer::Sum, t_int(0)), env) == I(sum));
    CHECK(eval(*t_reduce(t_var("m"), Reducer::JoinAll, t_int(0), inner), env) == acc);
  }
  Env env;
  env.bind("b", Value::map({{1, B(true)}, {2, B(false)}}));
  CHECK(eval(*t_reduce(t_var("b"), Reducer::OrAll, t_bool(false)), env) == B(true));
  CHECK(eval(*t_reduce(t_var("b"), Reducer::AndAll, t_bool(true)), env) == B(false));
}

TEST_CASE("map join union joins shared keys") {
  LT lt = LT::map(Scalar::Opaque, LT::max_int(Scalar::Clock));
  Sort s = Sort::lattice(lt);
  Env env;
  env.bind("a", Value::map({{1, I(2)}, {2, I(5)}}));
  env.bind("b", Value::map({{1, I(4)}}));
  CHECK(eval(*t_map_join(s, t_var("a"), t_var("b")), env) ==
        Value::map({{1, I(4)}, {2, I(5)}}));
}

TEST_CASE("shipped terms round trip through json and typecheck") {
  for (const auto &d : designs::reference()) {
    for (const auto &t : {d.f_star, d.query_star}) {
      auto back = term_from_json(term_to_json(*t));
      CHECK(term_equal(*back, *t));
      CHECK(term_hash(*back) == term_hash(*t));
      CHECK_FALSE(pretty(*t).empty());
    }
  }
}

TEST_CASE("sort json round trip") {
  std::vector<Sort> sorts = {Sort::boolean(), Sort::set_of(Scalar::Clock),
                             Sort::map_of(Scalar::Int, Sort::of(Scalar::Opaque)),
                             Sort::tuple_of({Sort::boolean(), Sort::of(Scalar::Int)}),
                             Sort::lattice(LT::map(Scalar::NodeId, LT::max_int(Scalar::Int)))};
  for (const auto &s : sorts) CHECK(sort_from_json(sort_to_json(s)) == s);
}
