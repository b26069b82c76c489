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

#include "katalite/verifier.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <unordered_map>

#include <fmt/format.h>

namespace katalite {

namespace {

template <typename F>
void cartesian(const std::vector<const std::vector<int64_t> *> &doms, F &&emit) {
  std::vector<int64_t> cur(doms.size());
  std::vector<size_t> idx(doms.size(), 0);
  for (const auto *d : doms)
    if (d->empty()) return;
  while (true) {
    for (size_t i = 0; i < doms.size(); ++i) cur[i] = (*doms[i])[idx[i]];
    emit(cur);
    size_t k = doms.size();
    while (k > 0) {
      --k;
      if (++idx[k] < doms[k]->size()) break;
      idx[k] = 0;
      if (k == 0) return;
    }
    if (doms.empty()) return;
  }
}

// Interns values to dense ids.
struct Interner {
  std::unordered_map<Value, int32_t, ValueHash> ids;
  std::vector<Value> values;
  int32_t intern(Value v) {
    auto it = ids.find(v);
    if (it != ids.end()) return it->second;
    int32_t id = static_cast<int32_t>(values.size());
    ids.emplace(v, id);
    values.push_back(std::move(v));
    return id;
  }
};

}  // namespace

// ---------------------------------------------------------------- designs

SortEnv f_star_env(const SequentialSpec &spec, const LatticeType &state) {
  SortEnv env;
  for (const auto &f : spec.signature()) env.emplace_back(f.name, Sort::of(f.sort));
  if (spec.flags.non_idempotent) {
    env.emplace_back(kStateVar, Sort::lattice(state));
    env.emplace_back(kNodeVar, Sort::of(Scalar::NodeId));
  }
  return env;
}

SortEnv query_star_env(const SequentialSpec &spec, const LatticeType &state) {
  SortEnv env = {{kStateVar, Sort::lattice(state)}};
  for (const auto &f : spec.query_fields) env.emplace_back(f.name, Sort::of(f.sort));
  return env;
}

void validate_design(const SequentialSpec &spec, const CrdtDesign &d) {
  try {
    check_well_formed(d.state_type);
  } catch (const TypeError &e) {
    throw SpecError(std::string("state type: ") + e.what());
  }
  if (!d.f_star || !d.query_star) throw SpecError("design is missing a term");
  if (d.flags.non_idempotent != spec.flags.non_idempotent)
    throw SpecError("design and spec disagree on non-idempotence");
  if (!validate(d.state_type, d.init))
    throw SpecError("initial state does not validate against the state type");
  try {
    Sort fs = typecheck(*d.f_star, f_star_env(spec, d.state_type));
    if (fs != Sort::lattice(d.state_type))
      throw SpecError("f* has sort " + to_string(fs) + ", expected " +
                      to_string(Sort::lattice(d.state_type)));
    Sort qs = typecheck(*d.query_star, query_star_env(spec, d.state_type));
    if (qs != spec.query_sort)
      throw SpecError("query* has sort " + to_string(qs) + ", expected " +
                      to_string(spec.query_sort));
  } catch (const TypeError &e) {
    throw SpecError(std::string("design: ") + e.what());
  }
}

json design_to_json(const CrdtDesign &d) {
  json j;
  j["format_version"] = 1;
  j["name"] = d.name;
  j["spec"] = d.spec;
  j["state_type"] = lattice_to_json(d.state_type);
  j["init"] = value_to_json(d.state_type, d.init);
  j["f_star"] = term_to_json(*d.f_star);
  j["query_star"] = term_to_json(*d.query_star);
  j["flags"] = {{"timestamps", d.flags.timestamps},
                {"non_idempotent", d.flags.non_idempotent}};
  j["provenance"] = {{"grammar_depth", d.provenance.grammar_depth},
                     {"verified_log_bound", d.provenance.verified_log_bound},
                     {"verified_universe", d.provenance.verified_universe}};
  return j;
}

CrdtDesign design_from_json(const json &j) {
  CrdtDesign d;
  try {
    if (j.value("format_version", 0) != 1)
      throw SpecError("unsupported design format_version (expected 1)");
    d.name = j.value("name", "");
    d.spec = j.value("spec", "");
    d.state_type = lattice_from_json(j.at("state_type"));
    d.init = value_from_json(d.state_type, j.at("init"));
    d.f_star = term_from_json(j.at("f_star"));
    d.query_star = term_from_json(j.at("query_star"));
    if (j.contains("flags")) {
      d.flags.timestamps = j.at("flags").value("timestamps", false);
      d.flags.non_idempotent = j.at("flags").value("non_idempotent", false);
    }
    if (j.contains("provenance")) {
      const auto &p = j.at("provenance");
      d.provenance.grammar_depth = p.value("grammar_depth", 0);
      d.provenance.verified_log_bound = p.value("verified_log_bound", 0);
      d.provenance.verified_universe = p.value("verified_universe", 0);
    }
  } catch (const json::exception &e) {
    throw SpecError(std::string("malformed design: ") + e.what());
  } catch (const TypeError &e) {
    throw SpecError(std::string("malformed design: ") + e.what());
  }
  return d;
}

CrdtDesign load_design(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open design file '" + path + "'");
  try {
    return design_from_json(json::parse(in));
  } catch (const json::parse_error &e) {
    throw SpecError("invalid JSON in '" + path + "': " + e.what());
  }
}

std::string design_pretty(const SequentialSpec &spec, const CrdtDesign &d) {
  std::string op_args = "state";
  for (const auto &f : spec.signature()) op_args += ", " + f.name;
  if (spec.flags.non_idempotent) op_args += std::string(", ") + kNodeVar;
  std::string q_args = "state";
  for (const auto &f : spec.query_fields) q_args += ", " + f.name;
  std::string out;
  out += fmt::format("crdt {}\n", d.name.empty() ? spec.name : d.name);
  out += fmt::format("  state type:    {}\n", to_string(d.state_type));
  out += fmt::format("  initial state: {}\n", to_string(d.init));
  out += "  merge(a, b):   a ⊔ b\n";
  out += fmt::format("  operation({}):\n    state ⊔ {}\n", op_args, pretty(*d.f_star));
  out += fmt::format("  query({}):\n    {}\n", q_args, pretty(*d.query_star));
  return out;
}

// ---------------------------------------------------------------- universe

Universe Universe::of_size(const SequentialSpec &spec, int n) {
  Universe u;
  u.size = n;
  for (int i = 1; i <= n; ++i) {
    u.opaque_values.push_back(i);
    u.clock_values.push_back(i);
  }
  for (int i = 0; i < std::max(1, n - 1); ++i) u.node_ids.push_back(i);
  for (int i = 0; i < n; ++i) u.int_values.push_back(i);
  u.enum_values = spec.enum_values;
  std::set<int64_t> e = {0, 1};
  for (int64_t c : spec.constants())
    if (c >= 0) e.insert(c);
  u.enum_default.assign(e.begin(), e.end());
  return u;
}

const std::vector<int64_t> &Universe::domain(const Field &f) const {
  static const std::vector<int64_t> kBools = {0, 1};
  switch (f.sort) {
    case Scalar::Bool:
      return kBools;
    case Scalar::Int:
      return int_values;
    case Scalar::Opaque:
      return opaque_values;
    case Scalar::Clock:
      return clock_values;
    case Scalar::NodeId:
      return node_ids;
    case Scalar::Enum: {
      auto it = enum_values.find(f.name);
      return it != enum_values.end() ? it->second : enum_default;
    }
  }
  return kBools;
}

json Universe::to_json() const {
  return {{"size", size},
          {"opaque_values", opaque_values},
          {"clock_values", clock_values},
          {"node_ids", node_ids},
          {"int_values", int_values},
          {"enum_values", enum_values},
          {"enum_default", enum_default}};
}

std::vector<OpValue> universe_ops(const SequentialSpec &spec, const Universe &u) {
  std::vector<const std::vector<int64_t> *> doms;
  for (const auto &f : spec.signature()) doms.push_back(&u.domain(f));
  std::vector<OpValue> out;
  cartesian(doms, [&](const std::vector<int64_t> &v) {
    if (precondition_holds(spec, v)) out.push_back(v);
  });
  return out;
}

std::vector<QueryValue> universe_queries(const SequentialSpec &spec,
                                         const Universe &u) {
  std::vector<const std::vector<int64_t> *> doms;
  for (const auto &f : spec.query_fields) doms.push_back(&u.domain(f));
  std::vector<QueryValue> out;
  cartesian(doms, [&](const std::vector<int64_t> &v) { out.push_back(v); });
  return out;
}

std::optional<std::vector<OpValue>> check_order_transitive(
    const SequentialSpec &spec, const Universe &u) {
  auto ops = universe_ops(spec, u);
  size_t n = ops.size();
  std::vector<uint8_t> rel(n * n);
  for (size_t a = 0; a < n; ++a)
    for (size_t b = 0; b < n; ++b) rel[a * n + b] = order_holds(spec, ops[a], ops[b]);
  for (size_t a = 0; a < n; ++a)
    for (size_t b = 0; b < n; ++b) {
      if (!rel[a * n + b]) continue;
      for (size_t c = 0; c < n; ++c)
        if (rel[b * n + c] && !rel[a * n + c])
          return std::vector<OpValue>{ops[a], ops[b], ops[c]};
    }
  return std::nullopt;
}

// ---------------------------------------------------------------- semantics

const char *verdict_name(VerdictKind k) {
  switch (k) {
    case VerdictKind::Pass:
      return "pass";
    case VerdictKind::Fail:
      return "fail";
    case VerdictKind::Inconclusive:
      return "inconclusive";
  }
  return "?";
}

bool log_in_order(const SequentialSpec &spec, const std::vector<OpValue> &log) {
  for (size_t i = 0; i < log.size(); ++i) {
    if (log[i].size() != spec.signature().size()) return false;
    if (!precondition_holds(spec, log[i])) return false;
    if (i > 0 && !order_holds(spec, log[i - 1], log[i])) return false;
  }
  return true;
}

Value eval_f_star(const SequentialSpec &spec, const CrdtDesign &d,
                  const OpValue &op, const Value &state, int64_t node) {
  Env env;
  auto sig = spec.signature();
  for (size_t i = 0; i < sig.size(); ++i)
    env.bind(sig[i].name, field_value(sig[i].sort, op.at(i)));
  if (spec.flags.non_idempotent) {
    env.bind(kStateVar, state);
    env.bind(kNodeVar, Value::integer(node));
  }
  return eval(*d.f_star, env);
}

Value eval_query_star(const SequentialSpec &spec, const CrdtDesign &d,
                      const Value &state, const QueryValue &q) {
  Env env;
  env.bind(kStateVar, state);
  for (size_t i = 0; i < spec.query_fields.size(); ++i)
    env.bind(spec.query_fields[i].name,
             field_value(spec.query_fields[i].sort, q.at(i)));
  return eval(*d.query_star, env);
}

Value fold_crdt(const SequentialSpec &spec, const CrdtDesign &d,
                const std::vector<OpValue> &log,
                const std::vector<int64_t> &node_assignment) {
  Value s = d.init;
  for (size_t i = 0; i < log.size(); ++i) {
    int64_t node = i < node_assignment.size() ? node_assignment[i] : 0;
    try {
      Value f = eval_f_star(spec, d, log[i], s, node);
      join_into(d.state_type, s, f);
    } catch (const std::exception &e) {
      throw EvalError(fmt::format("f* failed at log index {}: {}", i, e.what()));
    }
  }
  return s;
}

// ---------------------------------------------------------------- log tree

std::vector<OpValue> LogTree::log_of(int node) const {
  std::vector<OpValue> out;
  for (int n = node; n > 0; n = nodes[n].parent) out.push_back(ops[nodes[n].op]);
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<int64_t> LogTree::nodes_of(int node) const {
  std::vector<int64_t> out;
  for (int n = node; n > 0; n = nodes[n].parent)
    out.push_back(node_ids[nodes[n].node]);
  std::reverse(out.begin(), out.end());
  return out;
}

LogTree build_log_tree(const SequentialSpec &spec, const Universe &u,
                       int log_bound, int64_t max_nodes) {
  LogTree t;
  t.ops = universe_ops(spec, u);
  t.queries = universe_queries(spec, u);
  t.node_ids = spec.flags.non_idempotent ? u.node_ids : std::vector<int64_t>{0};
  t.bound = log_bound;
  t.universe = u.size;
  size_t n = t.ops.size();
  t.may_follow.assign(n, std::vector<uint8_t>(n, 0));
  for (size_t a = 0; a < n; ++a)
    for (size_t b = 0; b < n; ++b)
      t.may_follow[a][b] = order_holds(spec, t.ops[a], t.ops[b]);

  Interner seq;
  std::unordered_map<int64_t, int32_t> step;  // (seq id, op) -> seq id
  auto answers_for = [&](int32_t id) {
    while (t.answers.size() <= static_cast<size_t>(id)) {
      const Value &s = seq.values[t.answers.size()];
      std::vector<Value> row;
      row.reserve(t.queries.size());
      for (const auto &q : t.queries) row.push_back(answer_query(spec, s, q));
      t.answers.push_back(std::move(row));
    }
  };
  LogTree::Node root;
  root.seq = seq.intern(initial_state(spec));
  answers_for(root.seq);
  t.nodes.push_back(root);

  size_t level_begin = 0, level_end = 1;
  for (int depth = 1; depth <= log_bound; ++depth) {
    for (size_t p = level_begin; p < level_end; ++p) {
      const LogTree::Node parent = t.nodes[p];
      for (size_t o = 0; o < n; ++o) {
        if (parent.op >= 0 && !t.may_follow[parent.op][o]) continue;
        int64_t key = static_cast<int64_t>(parent.seq) * static_cast<int64_t>(n) +
                      static_cast<int64_t>(o);
        int32_t next;
        auto it = step.find(key);
        if (it != step.end()) {
          next = it->second;
        } else {
          next = seq.intern(apply_op(spec, seq.values[parent.seq], t.ops[o]));
          step.emplace(key, next);
          answers_for(next);
        }
        for (size_t k = 0; k < t.node_ids.size(); ++k) {
          if (static_cast<int64_t>(t.nodes.size()) >= max_nodes) {
            t.truncated = true;
            t.seq_states = seq.values;
            return t;
          }
          LogTree::Node c;
          c.parent = static_cast<int32_t>(p);
          c.op = static_cast<int32_t>(o);
          c.node = static_cast<int32_t>(k);
          c.depth = depth;
          c.seq = next;
          t.nodes.push_back(c);
        }
      }
    }
    level_begin = level_end;
    level_end = t.nodes.size();
  }
  t.seq_states = std::move(seq.values);
  return t;
}

Verdict check_tree(const SequentialSpec &spec, const CrdtDesign &d,
                   const LogTree &tree, int64_t budget) {
  Verdict v;
  v.log_bound = tree.bound;
  v.universe = tree.universe;
  const int64_t nq = static_cast<int64_t>(tree.queries.size());
  if (tree.truncated) {
    v.kind = VerdictKind::Inconclusive;
    v.reason = "log tree exceeded its node limit";
    return v;
  }
  if (static_cast<int64_t>(tree.nodes.size()) * nq > budget) {
    v.kind = VerdictKind::Inconclusive;
    v.reason = fmt::format("{} prefix-query checks exceed the budget of {}",
                           static_cast<int64_t>(tree.nodes.size()) * nq, budget);
    return v;
  }
  Interner crdt;
  const int64_t nops = static_cast<int64_t>(tree.ops.size());
  const int64_t nnodes = static_cast<int64_t>(tree.node_ids.size());
  std::unordered_map<int64_t, int32_t> step;
  std::vector<std::vector<Value>> qcache;
  std::vector<int32_t> state_of(tree.nodes.size());
  state_of[0] = crdt.intern(d.init);
  std::vector<Value> fop;  // idempotent: f* does not read the state
  if (!spec.flags.non_idempotent) {
    for (const auto &op : tree.ops) fop.push_back(eval_f_star(spec, d, op, d.init, 0));
  }
  for (size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto &nd = tree.nodes[i];
    int32_t sid;
    if (i == 0) {
      sid = state_of[0];
    } else {
      int32_t ps = state_of[nd.parent];
      int64_t key = (static_cast<int64_t>(ps) * nops + nd.op) * nnodes + nd.node;
      auto it = step.find(key);
      if (it != step.end()) {
        sid = it->second;
      } else {
        Value s = crdt.values[ps];
        if (spec.flags.non_idempotent)
          join_into(d.state_type, s,
                    eval_f_star(spec, d, tree.ops[nd.op], s, tree.node_ids[nd.node]));
        else
          join_into(d.state_type, s, fop[nd.op]);
        sid = crdt.intern(std::move(s));
        step.emplace(key, sid);
      }
      state_of[i] = sid;
    }
    if (qcache.size() <= static_cast<size_t>(sid)) qcache.resize(sid + 1);
    if (qcache[sid].empty() && nq > 0) {
      qcache[sid].reserve(nq);
      for (const auto &q : tree.queries)
        qcache[sid].push_back(eval_query_star(spec, d, crdt.values[sid], q));
    }
    const auto &expected = tree.answers[nd.seq];
    for (int64_t q = 0; q < nq; ++q) {
      ++v.checks;
      if (qcache[sid][q] != expected[q]) {
        Counterexample c;
        c.log = tree.log_of(static_cast<int>(i));
        c.node_assignment = spec.flags.non_idempotent
                                ? tree.nodes_of(static_cast<int>(i))
                                : std::vector<int64_t>{};
        c.prefix_index = nd.depth;
        c.query = tree.queries[q];
        c.expected = expected[q];
        c.actual = qcache[sid][q];
        v.kind = VerdictKind::Fail;
        v.cex = std::move(c);
        return v;
      }
    }
  }
  v.kind = VerdictKind::Pass;
  return v;
}

Verdict check_bounded(const SequentialSpec &spec, const CrdtDesign &d,
                      const Universe &u, int log_bound, int64_t budget) {
  LogTree tree = build_log_tree(spec, u, log_bound, budget + 1);
  return check_tree(spec, d, tree, budget);
}

bool replay_fails(const SequentialSpec &spec, const CrdtDesign &d,
                  Counterexample &cex) {
  std::vector<OpValue> prefix(cex.log.begin(), cex.log.begin() + cex.prefix_index);
  Value seq = run_sequential(spec, prefix);
  Value crdt = fold_crdt(spec, d, prefix, cex.node_assignment);
  Value want = answer_query(spec, seq, cex.query);
  Value got = eval_query_star(spec, d, crdt, cex.query);
  cex.expected = want;
  cex.actual = got;
  return want != got;
}

bool check_permutation_invariance(const SequentialSpec &spec,
                                  const CrdtDesign &d,
                                  const std::vector<std::vector<OpValue>> &logs) {
  for (const auto &log : logs) {
    Value ref = fold_crdt(spec, d, log, {});
    std::vector<size_t> perm(log.size());
    std::iota(perm.begin(), perm.end(), 0);
    while (std::next_permutation(perm.begin(), perm.end())) {
      std::vector<OpValue> p;
      for (size_t i : perm) p.push_back(log[i]);
      if (!semantic_eq(d.state_type, ref, fold_crdt(spec, d, p, {}))) return false;
    }
  }
  return true;
}

namespace {

// First failing (prefix, query) of a log, if any.
std::optional<Counterexample> first_failure(const SequentialSpec &spec,
                                            const CrdtDesign &d,
                                            const std::vector<OpValue> &log,
                                            const std::vector<int64_t> &nodes,
                                            const std::vector<QueryValue> &queries) {
  Value seq = initial_state(spec);
  Value crdt = d.init;
  for (size_t i = 0; i <= log.size(); ++i) {
    if (i > 0) {
      seq = apply_op(spec, seq, log[i - 1]);
      int64_t node = i - 1 < nodes.size() ? nodes[i - 1] : 0;
      join_into(d.state_type, crdt, eval_f_star(spec, d, log[i - 1], crdt, node));
    }
    for (const auto &q : queries) {
      Value want = answer_query(spec, seq, q);
      Value got = eval_query_star(spec, d, crdt, q);
      if (want != got) {
        Counterexample c;
        c.log.assign(log.begin(), log.begin() + i);
        if (!nodes.empty()) c.node_assignment.assign(nodes.begin(), nodes.begin() + i);
        c.prefix_index = static_cast<int>(i);
        c.query = q;
        c.expected = want;
        c.actual = got;
        return c;
      }
    }
  }
  return std::nullopt;
}

}  // namespace

Counterexample minimize_counterexample(const SequentialSpec &spec,
                                       const CrdtDesign &d,
                                       const Counterexample &cex) {
  // Only the recorded query is tracked while shrinking.
  std::vector<QueryValue> queries = {cex.query};
  std::vector<OpValue> log(cex.log.begin(), cex.log.begin() + cex.prefix_index);
  std::vector<int64_t> nodes = cex.node_assignment;
  if (nodes.size() > log.size()) nodes.resize(log.size());
  auto best = first_failure(spec, d, log, nodes, queries);
  if (!best) return cex;
  log = best->log;
  nodes = best->node_assignment;
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 0; i < log.size(); ++i) {
      std::vector<OpValue> l2 = log;
      l2.erase(l2.begin() + i);
      std::vector<int64_t> n2 = nodes;
      if (!n2.empty()) n2.erase(n2.begin() + i);
      if (!log_in_order(spec, l2)) continue;
      auto f = first_failure(spec, d, l2, n2, queries);
      if (f) {
        best = f;
        log = f->log;
        nodes = f->node_assignment;
        changed = true;
        break;
      }
    }
  }
  return *best;
}

json counterexample_to_json(const SequentialSpec &spec, const Counterexample &c) {
  json log = json::array();
  auto sig = spec.signature();
  for (const auto &op : c.log) log.push_back(scalar_tuple_to_json(sig, op));
  json j = {{"log", log},
            {"node_assignment", c.node_assignment},
            {"prefix_index", c.prefix_index},
            {"query", scalar_tuple_to_json(spec.query_fields, c.query)},
            {"expected", plain_value_to_json(spec.query_sort, c.expected)},
            {"actual", plain_value_to_json(spec.query_sort, c.actual)}};
  return j;
}

json verdict_to_json(const SequentialSpec &spec, const Verdict &v) {
  json j = {{"verdict", verdict_name(v.kind)},
            {"log_bound", v.log_bound},
            {"universe", v.universe},
            {"checks", v.checks}};
  if (v.cex) j["counterexample"] = counterexample_to_json(spec, *v.cex);
  if (!v.reason.empty()) j["reason"] = v.reason;
  return j;
}

}  // namespace katalite
