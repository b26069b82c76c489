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

#include "katalite/designs.hpp"

namespace katalite::designs {

namespace {

using LT = LatticeType;

TermPtr state() { return t_var(kStateVar); }
TermPtr is_one(const char *field) {
  return t_eq(t_var(field), t_int(1, Scalar::Enum));
}
TermPtr empty(const LT &t) {
  if (t.kind == LT::Kind::LSet) return t_empty_set(t.scalar);
  return t_empty_map(Sort::lattice(t));
}

CrdtDesign make(const char *name, const char *spec, LT type, Value init,
                TermPtr f, TermPtr q, Flags flags) {
  CrdtDesign d;
  d.name = name;
  d.spec = spec;
  d.state_type = std::move(type);
  d.init = std::move(init);
  d.f_star = std::move(f);
  d.query_star = std::move(q);
  d.flags = flags;
  return d;
}

// (Map(Opaque, MaxInt(Clock)), Map(Opaque, MaxInt(Clock))) keyed by value,
// storing the latest add / remove timestamps.
CrdtDesign timestamped_set(const char *name, const char *spec, bool add_wins) {
  LT slot = LT::map(Scalar::Opaque, LT::max_int(Scalar::Clock));
  LT type = LT::free_tuple({slot, slot});
  auto one = t_singleton_map(Sort::lattice(slot), t_var("v"), t_var("t"));
  auto f = t_ite(is_one("add"), t_tuple({one, empty(slot)}),
                 t_tuple({empty(slot), one}));
  auto zero = t_int(0, Scalar::Clock);
  auto t1 = t_map_get(t_tuple_get(state(), 0), t_var("v"), zero);
  auto t2 = t_map_get(t_tuple_get(state(), 1), t_var("v"), zero);
  auto q = add_wins ? t_and(t_geq(t1, t2), t_gt(t1, zero)) : t_gt(t1, t2);
  return make(name, spec, type, bottom(type), f, q, {true, false});
}

CrdtDesign flag(const char *name, const char *spec, bool enable_wins) {
  LT type = LT::lex(LT::max_int(Scalar::Clock), LT::or_bool());
  // The boolean component records the winning kind of operation: enables
  // for the enable-wins flag, disables for the disable-wins flag.
  auto bit = t_eq(t_var("enable"), t_int(enable_wins ? 1 : 0, Scalar::Enum));
  auto f = t_tuple({t_var("t"), bit});
  auto q = enable_wins ? t_tuple_get(state(), 1) : t_not(t_tuple_get(state(), 1));
  Value init = Value::tuple({Value::integer(0), Value::boolean(enable_wins)});
  return make(name, spec, type, init, f, q, {true, false});
}

}  // namespace

CrdtDesign classic_two_phase_set() {
  LT set = LT::set(Scalar::Opaque);
  LT type = LT::free_tuple({set, set});
  auto one = t_singleton(t_var("v"));
  auto f = t_ite(is_one("add"), t_tuple({one, empty(set)}),
                 t_tuple({empty(set), one}));
  auto q = t_member(t_var("v"),
                    t_diff(t_tuple_get(state(), 0), t_tuple_get(state(), 1)));
  return make("classic-two-phase-set", "two-phase-set", type, bottom(type), f,
              q, {});
}

CrdtDesign map_two_phase_set() {
  LT type = LT::map(Scalar::Opaque, LT::or_bool());
  Sort s = Sort::lattice(type);
  auto f = t_ite(is_one("add"), t_singleton_map(s, t_var("v"), t_bool(false)),
                 t_singleton_map(s, t_var("v"), t_bool(true)));
  auto q = t_not(t_map_get(state(), t_var("v"), t_bool(true)));
  return make("map-two-phase-set", "two-phase-set", type, bottom(type), f, q,
              {});
}

CrdtDesign add_wins_set() {
  return timestamped_set("add-wins-set", "add-wins-set", true);
}

CrdtDesign remove_wins_set() {
  return timestamped_set("remove-wins-set", "remove-wins-set", false);
}

CrdtDesign general_counter() {
  LT slot = LT::map(Scalar::NodeId, LT::max_int(Scalar::Int));
  LT type = LT::free_tuple({slot, slot});
  Sort s = Sort::lattice(slot);
  auto node = t_var(kNodeVar);
  auto part = [&](int i) {
    auto cur = t_map_get(t_tuple_get(state(), i), node, t_int(0));
    return t_singleton_map(s, node, t_add(cur, t_int(1)));
  };
  auto f = t_ite(is_one("inc"), t_tuple({part(0), empty(slot)}),
                 t_tuple({empty(slot), part(1)}));
  auto sum = [&](int i) {
    return t_reduce(t_tuple_get(state(), i), Reducer::Sum, t_int(0));
  };
  auto q = t_sub(sum(0), sum(1));
  return make("general-counter", "general-counter", type, bottom(type), f, q,
              {false, true});
}

CrdtDesign grow_only_counter() {
  LT type = LT::map(Scalar::NodeId, LT::max_int(Scalar::Int));
  auto node = t_var(kNodeVar);
  auto f = t_singleton_map(Sort::lattice(type), node,
                           t_add(t_map_get(state(), node, t_int(0)), t_int(1)));
  auto q = t_reduce(state(), Reducer::Sum, t_int(0));
  return make("grow-only-counter", "grow-only-counter", type, bottom(type), f,
              q, {false, true});
}

CrdtDesign grow_only_set() {
  LT type = LT::set(Scalar::Opaque);
  auto f = t_ite(is_one("add"), t_singleton(t_var("v")), empty(type));
  auto q = t_member(t_var("v"), state());
  return make("grow-only-set", "grow-only-set", type, bottom(type), f, q, {});
}

CrdtDesign lww_register() {
  LT type = LT::lex(LT::max_int(Scalar::Clock), LT::max_int(Scalar::Opaque));
  auto f = t_tuple({t_var("t"), t_var("v")});
  auto q = t_tuple_get(state(), 1);
  return make("lww-register", "lww-register", type, bottom(type), f, q,
              {true, false});
}

CrdtDesign enable_wins_flag() {
  return flag("enable-wins-flag", "enable-wins-flag", true);
}

CrdtDesign disable_wins_flag() {
  return flag("disable-wins-flag", "disable-wins-flag", false);
}

CrdtDesign naive_set() {
  CrdtDesign d = grow_only_set();
  d.name = "naive-set";
  d.spec = "two-phase-set";
  return d;
}

std::vector<CrdtDesign> reference() {
  return {classic_two_phase_set(), map_two_phase_set(), add_wins_set(),
          remove_wins_set(),       general_counter(),   grow_only_counter(),
          grow_only_set(),         lww_register(),      enable_wins_flag(),
          disable_wins_flag()};
}

const CrdtDesign *find(const std::string &name) {
  static const std::vector<CrdtDesign> kAll = [] {
    auto v = reference();
    v.push_back(naive_set());
    return v;
  }();
  for (const auto &d : kAll)
    if (d.name == name) return &d;
  return nullptr;
}

}  // namespace katalite::designs
