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

#include "katalite/seqspec.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <fmt/format.h>

namespace katalite {

Value field_value(Scalar s, int64_t x) {
  return s == Scalar::Bool ? Value::boolean(x != 0) : Value::integer(x);
}

namespace {

void harvest(const Term &t, std::set<int64_t> &out) {
  if (t.op == Op::IntLit) out.insert(t.value);
  for (const auto &a : t.args) harvest(*a, out);
}

void expect_sort(const Term &t, const SortEnv &env, const Sort &want,
                 const char *what) {
  Sort got;
  try {
    got = typecheck(t, env);
  } catch (const TypeError &e) {
    throw SpecError(fmt::format("{}: {}", what, e.what()));
  }
  if (got != want)
    throw SpecError(fmt::format("{} has sort {}, expected {}", what,
                                to_string(got), to_string(want)));
}

bool has_lattice(const Sort &s) {
  if (s.kind == Sort::Kind::Lattice) return true;
  for (const auto &k : s.kids)
    if (has_lattice(k)) return true;
  return false;
}

TermPtr o(const char *side, const char *field) {
  return t_var(fmt::format("{}.{}", side, field));
}

TermPtr lit(int64_t v, Scalar s) { return t_int(v, s); }

}  // namespace

std::vector<Field> SequentialSpec::signature() const {
  std::vector<Field> sig = op_fields;
  if (flags.timestamps) sig.push_back({"t", Scalar::Clock});
  return sig;
}

std::vector<int64_t> SequentialSpec::constants() const {
  std::set<int64_t> out = {0, 1};
  for (const auto &t : {initial_state, transition, query, op_order, op_precondition})
    if (t) harvest(*t, out);
  return {out.begin(), out.end()};
}

SortEnv transition_env(const SequentialSpec &spec) {
  SortEnv env = {{kStateVar, spec.state_sort}};
  for (const auto &f : spec.signature()) env.emplace_back(f.name, Sort::of(f.sort));
  return env;
}

SortEnv query_env(const SequentialSpec &spec) {
  SortEnv env = {{kStateVar, spec.state_sort}};
  for (const auto &f : spec.query_fields) env.emplace_back(f.name, Sort::of(f.sort));
  return env;
}

SortEnv order_env(const SequentialSpec &spec) {
  SortEnv env;
  for (const char *side : {"o1", "o2"})
    for (const auto &f : spec.signature())
      env.emplace_back(fmt::format("{}.{}", side, f.name), Sort::of(f.sort));
  return env;
}

SortEnv precondition_env(const SequentialSpec &spec) {
  SortEnv env;
  for (const auto &f : spec.signature())
    env.emplace_back("o." + f.name, Sort::of(f.sort));
  return env;
}

void validate_spec(const SequentialSpec &spec) {
  if (spec.name.empty()) throw SpecError("spec needs a name");
  if (!spec.initial_state || !spec.transition || !spec.query ||
      !spec.op_order || !spec.op_precondition)
    throw SpecError("spec is missing a term");
  std::set<std::string> names;
  for (const auto &f : spec.op_fields) {
    if (!names.insert(f.name).second)
      throw SpecError("duplicate op field '" + f.name + "'");
    if (f.name == "t" && spec.flags.timestamps)
      throw SpecError("field 't' is reserved for the implicit timestamp");
    if (f.name == kStateVar || f.name == kNodeVar)
      throw SpecError("field name '" + f.name + "' is reserved");
  }
  names.clear();
  for (const auto &f : spec.query_fields) {
    if (!names.insert(f.name).second)
      throw SpecError("duplicate query field '" + f.name + "'");
    if (f.name == kStateVar) throw SpecError("query field 'state' is reserved");
  }
  if (has_lattice(spec.state_sort) || has_lattice(spec.query_sort))
    throw SpecError("sequential sorts may not mention lattices");
  if (!spec.query_sort.is_scalar())
    throw SpecError("query answers must be scalar");
  expect_sort(*spec.initial_state, {}, spec.state_sort, "initial_state");
  expect_sort(*spec.transition, transition_env(spec), spec.state_sort,
              "transition");
  expect_sort(*spec.query, query_env(spec), spec.query_sort, "query");
  expect_sort(*spec.op_order, order_env(spec), Sort::boolean(), "op_order");
  expect_sort(*spec.op_precondition, precondition_env(spec), Sort::boolean(),
              "op_precondition");
  for (const auto &[field, vals] : spec.enum_values) {
    auto it = std::find_if(spec.op_fields.begin(), spec.op_fields.end(),
                           [&](const Field &f) { return f.name == field; });
    auto qt = std::find_if(spec.query_fields.begin(), spec.query_fields.end(),
                           [&](const Field &f) { return f.name == field; });
    if (it == spec.op_fields.end() && qt == spec.query_fields.end())
      throw SpecError("enum_values names unknown field '" + field + "'");
    if (vals.empty()) throw SpecError("enum_values for '" + field + "' is empty");
  }
}

TermPtr effective_op_order(const SequentialSpec &spec) {
  if (!spec.flags.timestamps) return spec.op_order;
  auto t1 = t_var("o1.t");
  auto t2 = t_var("o2.t");
  return t_or(t_gt(t2, t1), t_and(t_eq(t1, t2), spec.op_order));
}

TermPtr effective_precondition(const SequentialSpec &spec) {
  if (!spec.flags.timestamps) return spec.op_precondition;
  auto pos = t_gt(t_var("o.t"), t_int(0, Scalar::Clock));
  if (spec.op_precondition->op == Op::BoolLit && spec.op_precondition->value)
    return pos;
  return t_and(spec.op_precondition, pos);
}

Env op_env(const SequentialSpec &spec, const OpValue &op) {
  Env env;
  auto sig = spec.signature();
  for (size_t i = 0; i < sig.size(); ++i)
    env.bind(sig[i].name, field_value(sig[i].sort, op.at(i)));
  return env;
}

bool precondition_holds(const SequentialSpec &spec, const OpValue &op) {
  Env env;
  auto sig = spec.signature();
  for (size_t i = 0; i < sig.size(); ++i)
    env.bind("o." + sig[i].name, field_value(sig[i].sort, op.at(i)));
  return eval(*effective_precondition(spec), env).as_bool();
}

bool order_holds(const SequentialSpec &spec, const OpValue &a,
                 const OpValue &b) {
  Env env;
  auto sig = spec.signature();
  for (size_t i = 0; i < sig.size(); ++i)
    env.bind("o1." + sig[i].name, field_value(sig[i].sort, a.at(i)));
  for (size_t i = 0; i < sig.size(); ++i)
    env.bind("o2." + sig[i].name, field_value(sig[i].sort, b.at(i)));
  return eval(*effective_op_order(spec), env).as_bool();
}

Value initial_state(const SequentialSpec &spec) {
  return eval(*spec.initial_state, Env{});
}

Value apply_op(const SequentialSpec &spec, const Value &state,
               const OpValue &op) {
  Env env = op_env(spec, op);
  env.bind(kStateVar, state);
  return eval(*spec.transition, env);
}

Value run_sequential(const SequentialSpec &spec,
                     const std::vector<OpValue> &log) {
  Value s = initial_state(spec);
  for (const auto &op : log) s = apply_op(spec, s, op);
  return s;
}

Value answer_query(const SequentialSpec &spec, const Value &state,
                   const QueryValue &q) {
  Env env;
  env.bind(kStateVar, state);
  for (size_t i = 0; i < spec.query_fields.size(); ++i)
    env.bind(spec.query_fields[i].name,
             field_value(spec.query_fields[i].sort, q.at(i)));
  return eval(*spec.query, env);
}

// ---------------------------------------------------------------- benchmarks

namespace {

SequentialSpec set_spec(const char *name, const char *title, bool timestamps,
                        TermPtr order) {
  SequentialSpec s;
  s.name = name;
  s.title = title;
  s.op_fields = {{"add", Scalar::Enum}, {"v", Scalar::Opaque}};
  s.query_fields = {{"v", Scalar::Opaque}};
  s.query_sort = Sort::boolean();
  s.state_sort = Sort::set_of(Scalar::Opaque);
  s.initial_state = t_empty_set(Scalar::Opaque);
  auto st = t_var(kStateVar);
  auto v = t_var("v");
  s.transition = t_ite(t_eq(t_var("add"), lit(1, Scalar::Enum)),
                       t_union(st, t_singleton(v)), t_diff(st, t_singleton(v)));
  s.query = t_member(v, st);
  s.op_order = std::move(order);
  s.op_precondition = t_bool(true);
  s.flags.timestamps = timestamps;
  s.enum_values["add"] = {0, 1};
  s.notes = "add = 1 inserts v, any other value removes v";
  return s;
}

SequentialSpec flag_spec(const char *name, const char *title, int64_t first,
                         int64_t second) {
  SequentialSpec s;
  s.name = name;
  s.title = title;
  s.op_fields = {{"enable", Scalar::Enum}};
  s.query_sort = Sort::boolean();
  s.state_sort = Sort::boolean();
  s.initial_state = t_bool(true);
  s.transition = t_eq(t_var("enable"), lit(1, Scalar::Enum));
  s.query = t_var(kStateVar);
  // Equal timestamps: `first` kind of operation is ordered before `second`.
  s.op_order = t_or(t_eq(o("o1", "enable"), lit(first, Scalar::Enum)),
                    t_eq(o("o2", "enable"), lit(second, Scalar::Enum)));
  s.op_precondition = t_bool(true);
  s.flags.timestamps = true;
  s.enum_values["enable"] = {0, 1};
  s.notes = "single boolean flag, starts enabled; enable = 1 enables";
  return s;
}

SequentialSpec counter_spec(bool general) {
  SequentialSpec s;
  s.name = general ? "general-counter" : "grow-only-counter";
  s.title = general ? "General Counter" : "Grow-Only Counter";
  s.query_sort = Sort::of(Scalar::Int);
  s.state_sort = Sort::of(Scalar::Int);
  s.initial_state = t_int(0);
  auto st = t_var(kStateVar);
  if (general) {
    s.op_fields = {{"inc", Scalar::Enum}};
    s.transition = t_ite(t_eq(t_var("inc"), lit(1, Scalar::Enum)),
                         t_add(st, t_int(1)), t_sub(st, t_int(1)));
    s.enum_values["inc"] = {0, 1};
    s.notes = "inc = 1 increments, any other value decrements";
  } else {
    s.transition = t_add(st, t_int(1));
    s.notes = "every operation increments";
  }
  s.query = st;
  s.op_order = t_bool(true);
  s.op_precondition = t_bool(true);
  s.flags.non_idempotent = true;
  return s;
}

SequentialSpec lww_spec() {
  SequentialSpec s;
  s.name = "lww-register";
  s.title = "Last-Writer-Wins Register";
  s.op_fields = {{"v", Scalar::Opaque}};
  s.query_sort = Sort::of(Scalar::Opaque);
  s.state_sort = Sort::of(Scalar::Opaque);
  s.initial_state = t_int(0, Scalar::Opaque);
  s.transition = t_var("v");
  s.query = t_var(kStateVar);
  // Concurrent writes with equal timestamps resolve toward the larger value.
  s.op_order = t_geq(o("o2", "v"), o("o1", "v"));
  s.op_precondition = t_bool(true);
  s.flags.timestamps = true;
  s.notes = "write replaces the register, read returns it";
  return s;
}

}  // namespace

std::vector<SequentialSpec> builtin_benchmarks() {
  std::vector<SequentialSpec> out;
  out.push_back(counter_spec(false));
  out.push_back(counter_spec(true));
  out.push_back(flag_spec("enable-wins-flag", "Enable-Wins Flag", 0, 1));
  out.push_back(flag_spec("disable-wins-flag", "Disable-Wins Flag", 1, 0));
  out.push_back(lww_spec());
  {
    auto ne1 = t_not(t_eq(o("o1", "add"), lit(1, Scalar::Enum)));
    auto e2 = t_eq(o("o2", "add"), lit(1, Scalar::Enum));
    out.push_back(set_spec("grow-only-set", "Grow-Only Set", false,
                           t_or(ne1, e2)));
  }
  {
    auto e1 = t_eq(o("o1", "add"), lit(1, Scalar::Enum));
    auto ne2 = t_not(t_eq(o("o2", "add"), lit(1, Scalar::Enum)));
    out.push_back(set_spec("two-phase-set", "Two-Phase Set", false,
                           t_or(e1, ne2)));
  }
  out.push_back(set_spec(
      "add-wins-set", "Add-Wins Set", true,
      t_or(t_eq(o("o1", "add"), lit(0, Scalar::Enum)),
           t_eq(o("o2", "add"), lit(1, Scalar::Enum)))));
  out.push_back(set_spec(
      "remove-wins-set", "Remove-Wins Set", true,
      t_or(t_eq(o("o1", "add"), lit(1, Scalar::Enum)),
           t_eq(o("o2", "add"), lit(0, Scalar::Enum)))));
  return out;
}

const SequentialSpec *find_benchmark(const std::string &name) {
  static const std::vector<SequentialSpec> kBench = builtin_benchmarks();
  std::string key = name;
  if (key.rfind("bench:", 0) == 0) key = key.substr(6);
  for (const auto &s : kBench)
    if (s.name == key) return &s;
  return nullptr;
}

// ---------------------------------------------------------------- json

namespace {

json fields_to_json(const std::vector<Field> &fs) {
  json arr = json::array();
  for (const auto &f : fs)
    arr.push_back({{"name", f.name}, {"sort", scalar_name(f.sort)}});
  return arr;
}

std::vector<Field> fields_from_json(const json &j) {
  std::vector<Field> out;
  for (const auto &f : j)
    out.push_back({f.at("name").get<std::string>(),
                   scalar_from_name(f.at("sort").get<std::string>())});
  return out;
}

}  // namespace

json spec_to_json(const SequentialSpec &spec) {
  json j;
  j["format_version"] = 1;
  j["name"] = spec.name;
  if (!spec.title.empty()) j["title"] = spec.title;
  j["op_fields"] = fields_to_json(spec.op_fields);
  j["query_fields"] = fields_to_json(spec.query_fields);
  j["query_sort"] = sort_to_json(spec.query_sort);
  j["state_sort"] = sort_to_json(spec.state_sort);
  j["initial_state"] = term_to_json(*spec.initial_state);
  j["transition"] = term_to_json(*spec.transition);
  j["query"] = term_to_json(*spec.query);
  j["op_order"] = term_to_json(*spec.op_order);
  j["op_precondition"] = term_to_json(*spec.op_precondition);
  j["flags"] = {{"timestamps", spec.flags.timestamps},
                {"non_idempotent", spec.flags.non_idempotent}};
  if (!spec.enum_values.empty()) j["enum_values"] = spec.enum_values;
  if (!spec.notes.empty()) j["notes"] = spec.notes;
  return j;
}

SequentialSpec spec_from_json(const json &j) {
  SequentialSpec s;
  try {
    if (j.value("format_version", 0) != 1)
      throw SpecError("unsupported spec format_version (expected 1)");
    s.name = j.at("name").get<std::string>();
    s.title = j.value("title", s.name);
    s.op_fields = fields_from_json(j.at("op_fields"));
    s.query_fields = fields_from_json(j.value("query_fields", json::array()));
    s.query_sort = sort_from_json(j.at("query_sort"));
    s.state_sort = sort_from_json(j.at("state_sort"));
    s.initial_state = term_from_json(j.at("initial_state"));
    s.transition = term_from_json(j.at("transition"));
    s.query = term_from_json(j.at("query"));
    s.op_order = j.contains("op_order") ? term_from_json(j.at("op_order"))
                                        : t_bool(true);
    s.op_precondition = j.contains("op_precondition")
                            ? term_from_json(j.at("op_precondition"))
                            : t_bool(true);
    if (j.contains("flags")) {
      s.flags.timestamps = j.at("flags").value("timestamps", false);
      s.flags.non_idempotent = j.at("flags").value("non_idempotent", false);
    }
    if (j.contains("enum_values"))
      s.enum_values =
          j.at("enum_values").get<std::map<std::string, std::vector<int64_t>>>();
    s.notes = j.value("notes", "");
  } catch (const json::exception &e) {
    throw SpecError(std::string("malformed spec: ") + e.what());
  } catch (const TypeError &e) {
    throw SpecError(std::string("malformed spec: ") + e.what());
  }
  validate_spec(s);
  return s;
}

SequentialSpec load_spec(const std::string &ref) {
  if (ref.rfind("bench:", 0) == 0) {
    const SequentialSpec *b = find_benchmark(ref);
    if (!b) throw SpecError("unknown benchmark '" + ref + "'");
    return *b;
  }
  std::ifstream in(ref);
  if (!in) throw SpecError("cannot open spec file '" + ref + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception &e) {
    throw SpecError("invalid JSON in '" + ref + "': " + e.what());
  }
  return spec_from_json(j);
}

json scalar_tuple_to_json(const std::vector<Field> &sig,
                          const std::vector<int64_t> &vals) {
  json j = json::object();
  for (size_t i = 0; i < sig.size() && i < vals.size(); ++i) {
    if (sig[i].sort == Scalar::Bool)
      j[sig[i].name] = vals[i] != 0;
    else
      j[sig[i].name] = vals[i];
  }
  return j;
}

std::vector<int64_t> scalar_tuple_from_json(const std::vector<Field> &sig,
                                            const json &j) {
  std::vector<int64_t> out;
  for (const auto &f : sig) {
    if (!j.contains(f.name)) throw SpecError("missing field '" + f.name + "'");
    const auto &x = j.at(f.name);
    out.push_back(x.is_boolean() ? (x.get<bool>() ? 1 : 0) : x.get<int64_t>());
  }
  return out;
}

json plain_value_to_json(const Sort &s, const Value &v) {
  switch (s.kind) {
    case Sort::Kind::Scalar:
      if (v.is_bool()) return json(v.as_bool());
      return json(v.as_int());
    case Sort::Kind::SetOf: {
      json arr = json::array();
      for (int64_t x : v.as_set())
        arr.push_back(s.scalar == Scalar::Bool ? json(x != 0) : json(x));
      return arr;
    }
    case Sort::Kind::MapOf: {
      json arr = json::array();
      for (const auto &[k, x] : v.as_map())
        arr.push_back(json::array({k, plain_value_to_json(s.kids[0], x)}));
      return arr;
    }
    case Sort::Kind::TupleOf: {
      json arr = json::array();
      for (size_t i = 0; i < s.kids.size(); ++i)
        arr.push_back(plain_value_to_json(s.kids[i], v.as_tuple()[i]));
      return arr;
    }
    case Sort::Kind::Lattice:
      return value_to_json(s.lat[0], v);
  }
  return {};
}

std::string op_to_string(const SequentialSpec &spec, const OpValue &op) {
  auto sig = spec.signature();
  std::string s = "(";
  for (size_t i = 0; i < sig.size(); ++i) {
    if (i) s += ", ";
    s += fmt::format("{}={}", sig[i].name, op.at(i));
  }
  return s + ")";
}

}  // namespace katalite
