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
#include "katalite/grammar.hpp"
#include "support.hpp"

namespace kt = katalite::testing;
using namespace katalite;
using LT = LatticeType;

namespace {

const SequentialSpec &bench(const char *name) { return *find_benchmark(name); }

bool contains(const std::vector<LT> &ts, const LT &t) {
  return std::find(ts.begin(), ts.end(), t) != ts.end();
}

// Builds the bank the synthesizer would use for one role.
TermBank make_bank(const SequentialSpec &spec, Role role, const LT &state, int depth,
                   const Sort &target) {
  GrammarConfig cfg;
  cfg.depth = depth;
  cfg.constants = spec.constants();
  cfg.flags = spec.flags;
  cfg.role = role;
  cfg.targets = {target};
  Universe u = Universe::of_size(spec, 3);
  TermBank bank(cfg, make_samples(spec, role, state, u, 16), state);
  bank.grow_to(depth);
  return bank;
}

bool bank_has_behaviour(const TermBank &bank, const Sort &s, int depth, const Term &t) {
  auto sig = bank.signature(t);
  for (const auto *e : bank.upto(s, depth))
    if (e->sig == sig) return true;
  return false;
}

}  // namespace

TEST_CASE("state types at small depths") {
  auto d2 = enumerate_state_types(2, std::vector<Scalar>(kAllScalars.begin(), kAllScalars.end()));
  CHECK(contains(d2, LT::set(Scalar::Opaque)));
  CHECK(contains(d2, LT::map(Scalar::Opaque, LT::or_bool())));
  CHECK_FALSE(contains(d2, LT::lex(LT::max_int(Scalar::Clock), LT::or_bool())));
  auto d3 = enumerate_state_types(3, {Scalar::Clock, Scalar::Enum});
  CHECK(contains(d3, LT::lex(LT::max_int(Scalar::Clock), LT::or_bool())));
  for (const auto &t : d3) {
    CHECK_NOTHROW(check_well_formed(t));
    CHECK(lattice_depth(t) <= 3);
  }
}

TEST_CASE("depth-2 state types match a brute-force enumeration") {
  const auto &sc = kt::all_scalars();
  auto got = enumerate_state_types(2, sc);
  std::set<std::string> names;
  for (const auto &t : got) names.insert(to_string(t));
  CHECK(names.size() == got.size());
  CHECK(names == kt::brute_force_state_types(2, sc));
  // Regression value from the brute force above.
  CHECK(got.size() == 30);
}

TEST_CASE("depth-3 state types match a brute-force enumeration on two sorts") {
  std::vector<Scalar> sc = {Scalar::Opaque, Scalar::Clock};
  auto got = enumerate_state_types(3, sc);
  std::set<std::string> names;
  for (const auto &t : got) names.insert(to_string(t));
  CHECK(names == kt::brute_force_state_types(3, sc));
}

TEST_CASE("state type enumeration is ordered and deterministic") {
  std::vector<Scalar> sc = {Scalar::Opaque, Scalar::Enum};
  auto a = enumerate_state_types(3, sc), b = enumerate_state_types(3, sc);
  CHECK(a == b);
  for (size_t i = 1; i < a.size(); ++i) CHECK(lattice_size(a[i - 1]) <= lattice_size(a[i]));
  for (const auto &t : enumerate_state_types(3, sc, 3)) CHECK(lattice_size(t) <= 3);
}

TEST_CASE("initial states") {
  auto ob = enumerate_initial_states(LT::or_bool(), {0, 1});
  CHECK(ob == std::vector<Value>{Value::boolean(false), Value::boolean(true)});
  LT lex = LT::lex(LT::max_int(Scalar::Clock), LT::or_bool());
  auto ls = enumerate_initial_states(lex, {0, 1});
  CHECK(ls.front() == bottom(lex));
  CHECK(std::count(ls.begin(), ls.end(),
                   Value::tuple({Value::integer(0), Value::boolean(true)})) == 1);
  LT m = LT::map(Scalar::Opaque, LT::or_bool());
  CHECK(enumerate_initial_states(m, {0, 1, 2}) == std::vector<Value>{Value::map({})});
  for (const auto &v : ls) CHECK(validate(lex, v));
}

TEST_CASE("reference designs are derivable") {
  for (const auto &d : designs::reference()) {
    const SequentialSpec &spec = *find_benchmark(d.spec);
    GrammarConfig cfg;
    cfg.depth = d.f_star->depth;
    cfg.constants = spec.constants();
    cfg.flags = spec.flags;
    cfg.role = Role::StateTransition;
    SortEnv fe = f_star_env(spec, d.state_type);
    CHECK_MESSAGE(derivable(*d.f_star, cfg, fe, typecheck(*d.f_star, fe)), d.name);
    cfg.depth = d.f_star->depth - 1;
    CHECK_FALSE(derivable(*d.f_star, cfg, fe, typecheck(*d.f_star, fe)));
    cfg.role = Role::Query;
    cfg.depth = d.query_star->depth;
    SortEnv qe = query_star_env(spec, d.state_type);
    CHECK_MESSAGE(derivable(*d.query_star, cfg, qe, spec.query_sort), d.name);
    cfg.depth = d.query_star->depth - 1;
    CHECK_FALSE(derivable(*d.query_star, cfg, qe, spec.query_sort));
  }
}

TEST_CASE("reductions are not transition productions") {
  const auto &gc = bench("grow-only-counter");
  auto d = designs::grow_only_counter();
  GrammarConfig cfg;
  cfg.depth = 4;
  cfg.flags = gc.flags;
  cfg.role = Role::StateTransition;
  SortEnv env = f_star_env(gc, d.state_type);
  auto bad = t_singleton_map(Sort::lattice(d.state_type), t_var(kNodeVar),
                             t_reduce(t_var(kStateVar), Reducer::Sum, t_int(0)));
  CHECK_FALSE(derivable(*bad, cfg, env, Sort::lattice(d.state_type)));
}

TEST_CASE("grow-only set transition bank has the singleton") {
  const auto &gs = bench("grow-only-set");
  LT st = LT::set(Scalar::Opaque);
  Sort s = Sort::lattice(st);
  auto bank = make_bank(gs, Role::StateTransition, st, 2, s);
  CHECK(bank_has_behaviour(bank, s, 2, *t_singleton(t_var("v"))));
  CHECK(bank_has_behaviour(bank, s, 1, *t_empty_set(Scalar::Opaque)));
}

TEST_CASE("map two-phase query is in the depth-3 query bank") {
  const auto &tp = bench("two-phase-set");
  auto d = designs::map_two_phase_set();
  auto bank = make_bank(tp, Role::Query, d.state_type, 3, tp.query_sort);
  CHECK(bank_has_behaviour(bank, tp.query_sort, 3, *d.query_star));
  CHECK_FALSE(bank.truncated());
}

TEST_CASE("counter difference query is in the depth-4 query bank") {
  const auto &gc = bench("general-counter");
  auto d = designs::general_counter();
  auto bank = make_bank(gc, Role::Query, d.state_type, 4, gc.query_sort);
  CHECK(bank_has_behaviour(bank, gc.query_sort, 4, *d.query_star));
}

TEST_CASE("bank entries typecheck and are observationally distinct") {
  const auto &tp = bench("two-phase-set");
  LT st = LT::map(Scalar::Opaque, LT::or_bool());
  auto bank = make_bank(tp, Role::Query, st, 3, tp.query_sort);
  SortEnv env = query_star_env(tp, st);
  for (const auto &s : bank.sorts()) {
    std::set<std::string> sigs;
    for (const auto &e : bank.entries(s)) {
      CHECK(typecheck(*e.term, env) == s);
      std::string key;
      for (const auto &v : e.sig) key += to_string(v) + ";";
      CHECK(sigs.insert(key).second);
      CHECK(bank.signature(*e.term) == e.sig);
    }
  }
}

TEST_CASE("seed conditions are non-constant") {
  const auto &tp = bench("two-phase-set");
  LT st = LT::set(Scalar::Opaque);
  auto bank = make_bank(tp, Role::StateTransition, st, 2, Sort::lattice(st));
  REQUIRE_FALSE(bank.seeds().empty());
  for (const auto &e : bank.seeds()) {
    bool any_t = false, any_f = false;
    for (const auto &v : e.sig) (v.as_bool() ? any_t : any_f) = true;
    CHECK((any_t && any_f));
  }
}

TEST_CASE("relevant scalars") {
  auto rs = relevant_scalars(bench("grow-only-counter"));
  CHECK(std::count(rs.begin(), rs.end(), Scalar::NodeId) == 1);
  auto tp = relevant_scalars(bench("two-phase-set"));
  CHECK(std::count(tp.begin(), tp.end(), Scalar::Opaque) == 1);
}
