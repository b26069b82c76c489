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

#include "katalite/expr.hpp"

#include <algorithm>
#include <array>
#include <functional>

#include <fmt/format.h>

namespace katalite {

namespace {

using LKind = LatticeType::Kind;

constexpr std::array<const char *, 27> kOpNames = {
    "BoolLit", "IntLit",      "Var",          "And",          "Or",
    "Not",     "Eq",          "Gt",           "Geq",          "Add",
    "Sub",     "Ite",         "EmptySet",     "Singleton",    "Union",
    "Diff",    "Member",      "Subset",       "EmptyMap",     "SingletonMap",
    "MapJoinUnion", "MapGetDefault", "TupleGet", "TupleMake", "LatticeJoin",
    "LatticeBottom", "Reduce"};

constexpr std::array<const char *, 4> kReducerNames = {"Sum", "OrAll", "AndAll",
                                                       "JoinAll"};

size_t mix(size_t h, size_t x) {
  return h ^ (x + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

TermPtr node(Op op, std::vector<TermPtr> args) {
  Term t;
  t.op = op;
  t.args = std::move(args);
  return make_term(std::move(t));
}

[[noreturn]] void bad(const Term &t, const std::string &why) {
  throw TypeError(fmt::format("ill-sorted {} node: {}", op_name(t.op), why));
}

SetVal sorted_union(const SetVal &a, const SetVal &b) {
  SetVal out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(),
                 std::back_inserter(out));
  return out;
}

}  // namespace

// ---------------------------------------------------------------- sorts

std::strong_ordering Sort::operator<=>(const Sort &o) const {
  if (auto c = kind <=> o.kind; c != 0) return c;
  if (auto c = scalar <=> o.scalar; c != 0) return c;
  if (auto c = std::lexicographical_compare_three_way(kids.begin(), kids.end(),
                                                      o.kids.begin(), o.kids.end());
      c != 0)
    return c;
  return std::lexicographical_compare_three_way(lat.begin(), lat.end(),
                                                o.lat.begin(), o.lat.end());
}

Sort Sort::lattice(const LatticeType &t) {
  switch (t.kind) {
    case LKind::OrBool:
    case LKind::NegBool:
      return boolean();
    case LKind::MaxInt:
      return of(t.scalar);
    case LKind::LSet:
      return set_of(t.scalar);
    case LKind::LMap:
      return {Kind::Lattice, t.scalar, {}, {t}};
    case LKind::LexProduct:
    case LKind::FreeTuple: {
      std::vector<Sort> parts;
      for (const auto &k : t.kids) parts.push_back(lattice(k));
      return tuple_of(std::move(parts));
    }
  }
  return boolean();
}

Sort Sort::map_value() const {
  if (kind == Kind::MapOf) return kids.at(0);
  if (kind == Kind::Lattice) return lattice(lat.at(0).kids.at(0));
  throw TypeError("map_value on non-map sort " + to_string(*this));
}

std::string to_string(const Sort &s) {
  switch (s.kind) {
    case Sort::Kind::Scalar:
      return scalar_name(s.scalar);
    case Sort::Kind::SetOf:
      return fmt::format("Set({})", scalar_name(s.scalar));
    case Sort::Kind::MapOf:
      return fmt::format("Map({}, {})", scalar_name(s.scalar),
                         to_string(s.kids[0]));
    case Sort::Kind::TupleOf: {
      std::string out = "Tuple(";
      for (size_t i = 0; i < s.kids.size(); ++i) {
        if (i) out += ", ";
        out += to_string(s.kids[i]);
      }
      return out + ")";
    }
    case Sort::Kind::Lattice:
      return to_string(s.lat[0]);
  }
  return "?";
}

json sort_to_json(const Sort &s) {
  switch (s.kind) {
    case Sort::Kind::Scalar:
      return json(scalar_name(s.scalar));
    case Sort::Kind::SetOf:
      return {{"kind", "SetOf"}, {"elem", scalar_name(s.scalar)}};
    case Sort::Kind::MapOf:
      return {{"kind", "MapOf"},
              {"key", scalar_name(s.scalar)},
              {"value", sort_to_json(s.kids[0])}};
    case Sort::Kind::TupleOf: {
      json parts = json::array();
      for (const auto &k : s.kids) parts.push_back(sort_to_json(k));
      return {{"kind", "TupleOf"}, {"parts", parts}};
    }
    case Sort::Kind::Lattice:
      return {{"kind", "Lattice"}, {"lattice", lattice_to_json(s.lat[0])}};
  }
  return {};
}

Sort sort_from_json(const json &j) {
  if (j.is_string()) return Sort::of(scalar_from_name(j.get<std::string>()));
  if (!j.is_object() || !j.contains("kind"))
    throw TypeError("sort must be a scalar name or an object with 'kind'");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "SetOf")
    return Sort::set_of(scalar_from_name(j.at("elem").get<std::string>()));
  if (kind == "MapOf")
    return Sort::map_of(scalar_from_name(j.at("key").get<std::string>()),
                        sort_from_json(j.at("value")));
  if (kind == "TupleOf") {
    std::vector<Sort> parts;
    for (const auto &p : j.at("parts")) parts.push_back(sort_from_json(p));
    return Sort::tuple_of(std::move(parts));
  }
  if (kind == "Lattice") return Sort::lattice(lattice_from_json(j.at("lattice")));
  throw TypeError("unknown sort kind '" + kind + "'");
}

// ---------------------------------------------------------------- terms

const char *op_name(Op op) { return kOpNames[static_cast<size_t>(op)]; }
const char *reducer_name(Reducer r) {
  return kReducerNames[static_cast<size_t>(r)];
}

TermPtr make_term(Term t) {
  t.size = 1;
  int d = 0;
  for (const auto &a : t.args) {
    t.size += a->size;
    d = std::max(d, a->depth);
  }
  t.depth = d + 1;
  return std::make_shared<const Term>(std::move(t));
}

TermPtr t_bool(bool b) {
  Term t;
  t.op = Op::BoolLit;
  t.value = b ? 1 : 0;
  t.sort = Sort::boolean();
  return make_term(std::move(t));
}

TermPtr t_int(int64_t v, Scalar s) {
  Term t;
  t.op = Op::IntLit;
  t.value = v;
  t.sort = Sort::of(s);
  return make_term(std::move(t));
}

TermPtr t_var(const std::string &name) {
  Term t;
  t.op = Op::Var;
  t.name = name;
  return make_term(std::move(t));
}

TermPtr t_and(TermPtr a, TermPtr b) { return node(Op::And, {a, b}); }
TermPtr t_or(TermPtr a, TermPtr b) { return node(Op::Or, {a, b}); }
TermPtr t_not(TermPtr a) { return node(Op::Not, {a}); }
TermPtr t_eq(TermPtr a, TermPtr b) { return node(Op::Eq, {a, b}); }
TermPtr t_gt(TermPtr a, TermPtr b) { return node(Op::Gt, {a, b}); }
TermPtr t_geq(TermPtr a, TermPtr b) { return node(Op::Geq, {a, b}); }
TermPtr t_add(TermPtr a, TermPtr b) { return node(Op::Add, {a, b}); }
TermPtr t_sub(TermPtr a, TermPtr b) { return node(Op::Sub, {a, b}); }
TermPtr t_ite(TermPtr c, TermPtr a, TermPtr b) {
  return node(Op::Ite, {c, a, b});
}

TermPtr t_empty_set(Scalar elem) {
  Term t;
  t.op = Op::EmptySet;
  t.sort = Sort::set_of(elem);
  return make_term(std::move(t));
}
TermPtr t_singleton(TermPtr x) { return node(Op::Singleton, {x}); }
TermPtr t_union(TermPtr a, TermPtr b) { return node(Op::Union, {a, b}); }
TermPtr t_diff(TermPtr a, TermPtr b) { return node(Op::Diff, {a, b}); }
TermPtr t_member(TermPtr x, TermPtr s) { return node(Op::Member, {x, s}); }
TermPtr t_subset(TermPtr a, TermPtr b) { return node(Op::Subset, {a, b}); }

TermPtr t_empty_map(Sort map_sort) {
  Term t;
  t.op = Op::EmptyMap;
  t.sort = std::move(map_sort);
  return make_term(std::move(t));
}

TermPtr t_singleton_map(Sort map_sort, TermPtr k, TermPtr v) {
  Term t;
  t.op = Op::SingletonMap;
  t.sort = std::move(map_sort);
  t.args = {k, v};
  return make_term(std::move(t));
}

TermPtr t_map_join(Sort map_sort, TermPtr a, TermPtr b) {
  Term t;
  t.op = Op::MapJoinUnion;
  if (!map_sort.is_lattice_map())
    throw TypeError("MapJoinUnion needs a lattice map sort");
  t.lattice = {map_sort.map_lattice()};
  t.sort = std::move(map_sort);
  t.args = {a, b};
  return make_term(std::move(t));
}

TermPtr t_map_get(TermPtr m, TermPtr k, TermPtr dflt) {
  return node(Op::MapGetDefault, {m, k, dflt});
}

TermPtr t_tuple_get(TermPtr tup, int index) {
  Term t;
  t.op = Op::TupleGet;
  t.index = index;
  t.args = {tup};
  return make_term(std::move(t));
}

TermPtr t_tuple(std::vector<TermPtr> parts) {
  return node(Op::TupleMake, std::move(parts));
}

TermPtr t_lattice_join(const LatticeType &lt, TermPtr a, TermPtr b) {
  Term t;
  t.op = Op::LatticeJoin;
  t.lattice = {lt};
  t.args = {a, b};
  return make_term(std::move(t));
}

TermPtr t_lattice_bottom(const LatticeType &lt) {
  Term t;
  t.op = Op::LatticeBottom;
  t.lattice = {lt};
  return make_term(std::move(t));
}

TermPtr t_reduce(TermPtr map, Reducer r, TermPtr init,
                 std::optional<LatticeType> value_lattice) {
  Term t;
  t.op = Op::Reduce;
  t.reducer = r;
  if (r == Reducer::JoinAll) {
    if (!value_lattice) throw TypeError("JoinAll needs the value lattice");
    t.lattice = {*value_lattice};
  }
  t.args = {map, init};
  return make_term(std::move(t));
}

bool term_equal(const Term &a, const Term &b) {
  if (&a == &b) return true;
  if (a.op != b.op || a.value != b.value || a.index != b.index ||
      a.reducer != b.reducer || a.name != b.name || a.sort != b.sort ||
      a.lattice != b.lattice || a.args.size() != b.args.size())
    return false;
  for (size_t i = 0; i < a.args.size(); ++i)
    if (!term_equal(*a.args[i], *b.args[i])) return false;
  return true;
}

size_t term_hash(const Term &t) {
  size_t h = static_cast<size_t>(t.op) * 131;
  h = mix(h, std::hash<int64_t>{}(t.value));
  h = mix(h, static_cast<size_t>(t.index));
  h = mix(h, std::hash<std::string>{}(t.name));
  for (const auto &a : t.args) h = mix(h, term_hash(*a));
  return h;
}

// ---------------------------------------------------------------- typing

const Sort *lookup_sort(const SortEnv &env, const std::string &name) {
  for (const auto &[n, s] : env)
    if (n == name) return &s;
  return nullptr;
}

Sort typecheck(const Term &t, const SortEnv &env) {
  std::vector<Sort> as;
  if (t.op != Op::Ite) {
    as.reserve(t.args.size());
    for (const auto &a : t.args) as.push_back(typecheck(*a, env));
  }
  auto arity = [&](size_t n) {
    if (t.args.size() != n) bad(t, fmt::format("expected {} arguments", n));
  };
  auto want = [&](const Sort &s, const Sort &expected, const char *what) {
    if (s != expected)
      bad(t, fmt::format("{} has sort {}, expected {}", what, to_string(s),
                         to_string(expected)));
  };
  const Sort kBool = Sort::boolean();
  switch (t.op) {
    case Op::BoolLit:
      return kBool;
    case Op::IntLit:
      if (!t.sort.is_scalar() || t.sort.scalar == Scalar::Bool)
        bad(t, "integer literal needs an integer-like sort");
      if (scalar_nonneg(t.sort.scalar) && t.value < 0)
        bad(t, "negative literal of a non-negative sort");
      return t.sort;
    case Op::Var: {
      const Sort *s = lookup_sort(env, t.name);
      if (!s) throw TypeError("unbound variable '" + t.name + "'");
      return *s;
    }
    case Op::And:
    case Op::Or:
      arity(2);
      want(as[0], kBool, "left operand");
      want(as[1], kBool, "right operand");
      return kBool;
    case Op::Not:
      arity(1);
      want(as[0], kBool, "operand");
      return kBool;
    case Op::Eq:
      arity(2);
      if (!as[0].is_scalar()) bad(t, "equality is defined on scalar sorts only");
      want(as[1], as[0], "right operand");
      return kBool;
    case Op::Gt:
    case Op::Geq:
      arity(2);
      if (!as[0].is_scalar() || !scalar_ordered(as[0].scalar))
        bad(t, "comparison on " + to_string(as[0]));
      want(as[1], as[0], "right operand");
      return kBool;
    case Op::Add:
    case Op::Sub:
      arity(2);
      if (!as[0].is_scalar(Scalar::Int)) bad(t, "arithmetic on " + to_string(as[0]));
      want(as[1], as[0], "right operand");
      return as[0];
    case Op::Ite: {
      arity(3);
      want(typecheck(*t.args[0], env), kBool, "condition");
      Sort a = typecheck(*t.args[1], env);
      want(typecheck(*t.args[2], env), a, "else branch");
      return a;
    }
    case Op::EmptySet:
      if (!t.sort.is_set()) bad(t, "annotation must be a set sort");
      return t.sort;
    case Op::Singleton:
      arity(1);
      if (!as[0].is_scalar()) bad(t, "set elements are scalars");
      return Sort::set_of(as[0].scalar);
    case Op::Union:
    case Op::Diff:
      arity(2);
      if (!as[0].is_set()) bad(t, "operand is not a set");
      want(as[1], as[0], "right operand");
      return as[0];
    case Op::Member:
      arity(2);
      if (!as[1].is_set()) bad(t, "second operand is not a set");
      want(as[0], Sort::of(as[1].scalar), "element");
      return kBool;
    case Op::Subset:
      arity(2);
      if (!as[0].is_set()) bad(t, "operand is not a set");
      want(as[1], as[0], "right operand");
      return kBool;
    case Op::EmptyMap:
      if (!t.sort.is_map()) bad(t, "annotation must be a map sort");
      return t.sort;
    case Op::SingletonMap:
      arity(2);
      if (!t.sort.is_map()) bad(t, "annotation must be a map sort");
      want(as[0], Sort::of(t.sort.map_key()), "key");
      want(as[1], t.sort.map_value(), "value");
      return t.sort;
    case Op::MapJoinUnion:
      arity(2);
      if (!t.sort.is_lattice_map() || t.lattice.size() != 1 ||
          t.lattice[0] != t.sort.map_lattice())
        bad(t, "needs a lattice map annotation");
      want(as[0], t.sort, "left operand");
      want(as[1], t.sort, "right operand");
      return t.sort;
    case Op::MapGetDefault: {
      arity(3);
      if (!as[0].is_map()) bad(t, "first operand is not a map");
      want(as[1], Sort::of(as[0].map_key()), "key");
      Sort v = as[0].map_value();
      want(as[2], v, "default");
      return v;
    }
    case Op::TupleGet:
      arity(1);
      if (!as[0].is_tuple()) bad(t, "operand is not a tuple");
      if (t.index < 0 || t.index >= static_cast<int>(as[0].kids.size()))
        bad(t, "index out of range");
      return as[0].kids[t.index];
    case Op::TupleMake:
      if (t.args.size() < 2) bad(t, "tuples have at least two parts");
      return Sort::tuple_of(as);
    case Op::LatticeJoin: {
      arity(2);
      if (t.lattice.size() != 1) bad(t, "missing lattice annotation");
      Sort s = Sort::lattice(t.lattice[0]);
      want(as[0], s, "left operand");
      want(as[1], s, "right operand");
      return s;
    }
    case Op::LatticeBottom:
      if (t.lattice.size() != 1) bad(t, "missing lattice annotation");
      return Sort::lattice(t.lattice[0]);
    case Op::Reduce: {
      arity(2);
      if (!as[0].is_map()) bad(t, "reduction over a non-map");
      Sort v = as[0].map_value();
      switch (t.reducer) {
        case Reducer::Sum:
          want(v, Sort::of(Scalar::Int), "map values");
          break;
        case Reducer::OrAll:
        case Reducer::AndAll:
          want(v, kBool, "map values");
          break;
        case Reducer::JoinAll:
          if (!as[0].is_lattice_map() || t.lattice.size() != 1 ||
              t.lattice[0] != as[0].map_lattice().kids[0])
            bad(t, "JoinAll needs a lattice map and its value lattice");
          break;
      }
      want(as[1], v, "initial value");
      return v;
    }
  }
  bad(t, "unknown node");
}

// ---------------------------------------------------------------- eval

void Env::bind(const std::string &name, Value v) {
  for (size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) {
      values[i] = std::move(v);
      return;
    }
  }
  names.push_back(name);
  values.push_back(std::move(v));
}

const Value *Env::find(const std::string &name) const {
  for (size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return &values[i];
  return nullptr;
}

Value apply_node(const Term &n, const Value *const *a) {
  switch (n.op) {
    case Op::BoolLit:
      return Value::boolean(n.value != 0);
    case Op::IntLit:
      return Value::integer(n.value);
    case Op::Var:
      throw EvalError("apply_node on a variable");
    case Op::And:
      return Value::boolean(a[0]->as_bool() && a[1]->as_bool());
    case Op::Or:
      return Value::boolean(a[0]->as_bool() || a[1]->as_bool());
    case Op::Not:
      return Value::boolean(!a[0]->as_bool());
    case Op::Eq:
      return Value::boolean(a[0]->scalar_key() == a[1]->scalar_key());
    case Op::Gt:
      return Value::boolean(a[0]->as_int() > a[1]->as_int());
    case Op::Geq:
      return Value::boolean(a[0]->as_int() >= a[1]->as_int());
    case Op::Add:
      return Value::integer(a[0]->as_int() + a[1]->as_int());
    case Op::Sub:
      return Value::integer(a[0]->as_int() - a[1]->as_int());
    case Op::Ite:
      return a[0]->as_bool() ? *a[1] : *a[2];
    case Op::EmptySet:
      return Value::set({});
    case Op::Singleton:
      return Value::set({a[0]->scalar_key()});
    case Op::Union:
      return Value::set(sorted_union(a[0]->as_set(), a[1]->as_set()));
    case Op::Diff: {
      const auto &x = a[0]->as_set();
      const auto &y = a[1]->as_set();
      SetVal out;
      std::set_difference(x.begin(), x.end(), y.begin(), y.end(),
                          std::back_inserter(out));
      return Value::set(std::move(out));
    }
    case Op::Member: {
      const auto &s = a[1]->as_set();
      return Value::boolean(
          std::binary_search(s.begin(), s.end(), a[0]->scalar_key()));
    }
    case Op::Subset: {
      // Strict inclusion.
      const auto &x = a[0]->as_set();
      const auto &y = a[1]->as_set();
      return Value::boolean(x.size() < y.size() &&
                            std::includes(y.begin(), y.end(), x.begin(), x.end()));
    }
    case Op::EmptyMap:
      return Value::map({});
    case Op::SingletonMap:
      return Value::map({{a[0]->scalar_key(), *a[1]}});
    case Op::MapJoinUnion:
      return join(n.lattice.at(0), *a[0], *a[1]);
    case Op::MapGetDefault: {
      const Value *hit = map_find(a[0]->as_map(), a[1]->scalar_key());
      return hit ? *hit : *a[2];
    }
    case Op::TupleGet: {
      const auto &tv = a[0]->as_tuple();
      if (n.index < 0 || n.index >= static_cast<int>(tv.size()))
        throw EvalError("tuple index out of range");
      return tv[n.index];
    }
    case Op::TupleMake: {
      TupleVal tv;
      tv.reserve(n.args.size());
      for (size_t i = 0; i < n.args.size(); ++i) tv.push_back(*a[i]);
      return Value::tuple(std::move(tv));
    }
    case Op::LatticeJoin:
      return join(n.lattice.at(0), *a[0], *a[1]);
    case Op::LatticeBottom:
      return bottom(n.lattice.at(0));
    case Op::Reduce: {
      const auto &m = a[0]->as_map();
      switch (n.reducer) {
        case Reducer::Sum: {
          int64_t acc = a[1]->as_int();
          for (const auto &e : m) acc += e.second.as_int();
          return Value::integer(acc);
        }
        case Reducer::OrAll: {
          bool acc = a[1]->as_bool();
          for (const auto &e : m) acc = acc || e.second.as_bool();
          return Value::boolean(acc);
        }
        case Reducer::AndAll: {
          bool acc = a[1]->as_bool();
          for (const auto &e : m) acc = acc && e.second.as_bool();
          return Value::boolean(acc);
        }
        case Reducer::JoinAll: {
          Value acc = *a[1];
          for (const auto &e : m) join_into(n.lattice.at(0), acc, e.second);
          return acc;
        }
      }
      break;
    }
  }
  throw EvalError(std::string("cannot apply ") + op_name(n.op));
}

namespace {

// Evaluates t, returning a reference either into env or into tmp. Variable
// reads, tuple projections and map lookups avoid copying the state.
const Value &eval_ref(const Term &t, const Env &env, Value &tmp) {
  switch (t.op) {
    case Op::Var: {
      const Value *v = env.find(t.name);
      if (!v) throw EvalError("unbound variable '" + t.name + "'");
      return *v;
    }
    case Op::Ite: {
      Value c;
      bool cond = eval_ref(*t.args[0], env, c).as_bool();
      return eval_ref(cond ? *t.args[1] : *t.args[2], env, tmp);
    }
    case Op::And: {
      Value a;
      if (!eval_ref(*t.args[0], env, a).as_bool()) return tmp = Value::boolean(false);
      return tmp = Value::boolean(eval_ref(*t.args[1], env, a).as_bool());
    }
    case Op::Or: {
      Value a;
      if (eval_ref(*t.args[0], env, a).as_bool()) return tmp = Value::boolean(true);
      return tmp = Value::boolean(eval_ref(*t.args[1], env, a).as_bool());
    }
    case Op::TupleGet: {
      Value local;
      const Value &r = eval_ref(*t.args[0], env, local);
      const auto &tv = r.as_tuple();
      if (t.index < 0 || t.index >= static_cast<int>(tv.size()))
        throw EvalError("tuple index out of range");
      if (&r != &local) return tv[t.index];
      Value out = tv[t.index];
      return tmp = std::move(out);
    }
    case Op::MapGetDefault: {
      Value local, key;
      const Value &m = eval_ref(*t.args[0], env, local);
      const Value *hit = map_find(m.as_map(), eval_ref(*t.args[1], env, key).scalar_key());
      if (hit) {
        if (&m != &local) return *hit;
        Value out = *hit;
        return tmp = std::move(out);
      }
      return eval_ref(*t.args[2], env, tmp);
    }
    default:
      break;
  }
  if (t.args.size() <= 3) {
    std::array<Value, 3> scratch;
    std::array<const Value *, 3> ptrs{};
    for (size_t i = 0; i < t.args.size(); ++i)
      ptrs[i] = &eval_ref(*t.args[i], env, scratch[i]);
    return tmp = apply_node(t, ptrs.data());
  }
  std::vector<Value> scratch(t.args.size());
  std::vector<const Value *> ptrs(t.args.size());
  for (size_t i = 0; i < t.args.size(); ++i)
    ptrs[i] = &eval_ref(*t.args[i], env, scratch[i]);
  return tmp = apply_node(t, ptrs.data());
}

}  // namespace

Value eval(const Term &t, const Env &env) {
  Value tmp;
  const Value &r = eval_ref(t, env, tmp);
  if (&r == &tmp) return tmp;
  return r;
}

// ---------------------------------------------------------------- json

json term_to_json(const Term &t) {
  json j;
  j["op"] = op_name(t.op);
  switch (t.op) {
    case Op::BoolLit:
      j["value"] = t.value != 0;
      break;
    case Op::IntLit:
      j["value"] = t.value;
      j["sort"] = sort_to_json(t.sort);
      break;
    case Op::Var:
      j["name"] = t.name;
      break;
    case Op::TupleGet:
      j["index"] = t.index;
      break;
    case Op::Reduce:
      j["reducer"] = reducer_name(t.reducer);
      if (!t.lattice.empty()) j["lattice"] = lattice_to_json(t.lattice[0]);
      break;
    case Op::EmptySet:
    case Op::EmptyMap:
    case Op::SingletonMap:
    case Op::MapJoinUnion:
      j["sort"] = sort_to_json(t.sort);
      break;
    case Op::LatticeJoin:
    case Op::LatticeBottom:
      j["lattice"] = lattice_to_json(t.lattice.at(0));
      break;
    default:
      break;
  }
  if (!t.args.empty()) {
    json args = json::array();
    for (const auto &a : t.args) args.push_back(term_to_json(*a));
    j["args"] = args;
  }
  return j;
}

TermPtr term_from_json(const json &j) {
  if (!j.is_object() || !j.contains("op"))
    throw TypeError("term must be an object with 'op'");
  const std::string name = j.at("op").get<std::string>();
  auto it = std::find_if(kOpNames.begin(), kOpNames.end(),
                         [&](const char *n) { return name == n; });
  if (it == kOpNames.end()) throw TypeError("unknown term op '" + name + "'");
  Term t;
  t.op = static_cast<Op>(it - kOpNames.begin());
  if (j.contains("args"))
    for (const auto &a : j.at("args")) t.args.push_back(term_from_json(a));
  switch (t.op) {
    case Op::BoolLit:
      t.value = j.at("value").get<bool>() ? 1 : 0;
      t.sort = Sort::boolean();
      break;
    case Op::IntLit:
      t.value = j.at("value").get<int64_t>();
      t.sort = j.contains("sort") ? sort_from_json(j.at("sort"))
                                  : Sort::of(Scalar::Int);
      break;
    case Op::Var:
      t.name = j.at("name").get<std::string>();
      break;
    case Op::TupleGet:
      t.index = j.at("index").get<int>();
      break;
    case Op::Reduce: {
      const std::string r = j.at("reducer").get<std::string>();
      auto rit = std::find_if(kReducerNames.begin(), kReducerNames.end(),
                              [&](const char *n) { return r == n; });
      if (rit == kReducerNames.end())
        throw TypeError("unknown reducer '" + r + "'");
      t.reducer = static_cast<Reducer>(rit - kReducerNames.begin());
      if (j.contains("lattice")) t.lattice = {lattice_from_json(j.at("lattice"))};
      break;
    }
    case Op::EmptySet:
    case Op::EmptyMap:
    case Op::SingletonMap:
      t.sort = sort_from_json(j.at("sort"));
      break;
    case Op::MapJoinUnion:
      t.sort = sort_from_json(j.at("sort"));
      if (!t.sort.is_lattice_map())
        throw TypeError("MapJoinUnion needs a lattice map sort");
      t.lattice = {t.sort.map_lattice()};
      break;
    case Op::LatticeJoin:
    case Op::LatticeBottom:
      t.lattice = {lattice_from_json(j.at("lattice"))};
      break;
    default:
      break;
  }
  return make_term(std::move(t));
}

// ---------------------------------------------------------------- pretty

namespace {

bool needs_parens(const Term &t) {
  switch (t.op) {
    case Op::And:
    case Op::Or:
    case Op::Eq:
    case Op::Gt:
    case Op::Geq:
    case Op::Add:
    case Op::Sub:
    case Op::Union:
    case Op::Diff:
    case Op::Member:
    case Op::Subset:
    case Op::MapJoinUnion:
    case Op::LatticeJoin:
    case Op::Ite:
      return true;
    default:
      return false;
  }
}

std::string sub(const Term &t) {
  std::string s = pretty(t);
  return needs_parens(t) ? "(" + s + ")" : s;
}

std::string bin(const Term &t, const char *op) {
  return sub(*t.args[0]) + " " + op + " " + sub(*t.args[1]);
}

}  // namespace

std::string pretty(const Term &t) {
  switch (t.op) {
    case Op::BoolLit:
      return t.value ? "true" : "false";
    case Op::IntLit:
      return std::to_string(t.value);
    case Op::Var:
      return t.name;
    case Op::And:
      return bin(t, "∧");
    case Op::Or:
      return bin(t, "∨");
    case Op::Not:
      return "¬" + sub(*t.args[0]);
    case Op::Eq:
      return bin(t, "=");
    case Op::Gt:
      return bin(t, ">");
    case Op::Geq:
      return bin(t, "≥");
    case Op::Add:
      return bin(t, "+");
    case Op::Sub:
      return bin(t, "-");
    case Op::Ite:
      return "if " + pretty(*t.args[0]) + " then " + pretty(*t.args[1]) +
             " else " + pretty(*t.args[2]);
    case Op::EmptySet:
    case Op::EmptyMap:
      return "{}";
    case Op::Singleton:
      return "{" + pretty(*t.args[0]) + "}";
    case Op::Union:
      return bin(t, "∪");
    case Op::Diff:
      return bin(t, "∖");
    case Op::Member:
      return bin(t, "∈");
    case Op::Subset:
      return bin(t, "⊂");
    case Op::SingletonMap:
      return "{" + pretty(*t.args[0]) + ": " + pretty(*t.args[1]) + "}";
    case Op::MapJoinUnion:
    case Op::LatticeJoin:
      return bin(t, "⊔");
    case Op::MapGetDefault:
      return sub(*t.args[0]) + "[" + pretty(*t.args[1]) +
             ", default=" + pretty(*t.args[2]) + "]";
    case Op::TupleGet:
      return sub(*t.args[0]) + "." + std::to_string(t.index);
    case Op::TupleMake: {
      std::string s = "(";
      for (size_t i = 0; i < t.args.size(); ++i) {
        if (i) s += ", ";
        s += pretty(*t.args[i]);
      }
      return s + ")";
    }
    case Op::LatticeBottom:
      return "⊥";
    case Op::Reduce: {
      const char *f = "+";
      if (t.reducer == Reducer::OrAll) f = "∨";
      if (t.reducer == Reducer::AndAll) f = "∧";
      if (t.reducer == Reducer::JoinAll) f = "⊔";
      return fmt::format("reduce(values({}), {}, {})", pretty(*t.args[0]), f,
                         pretty(*t.args[1]));
    }
  }
  return "?";
}

}  // namespace katalite
