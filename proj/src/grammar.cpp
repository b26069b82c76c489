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

#include "katalite/grammar.hpp"

#include <algorithm>
#include <functional>
#include <random>
#include <set>
#include <unordered_set>

namespace katalite {

namespace {

using LKind = LatticeType::Kind;

void sort_scalars(const Sort &s, std::set<Scalar> &out) {
  switch (s.kind) {
    case Sort::Kind::Scalar:
    case Sort::Kind::SetOf:
      out.insert(s.scalar);
      break;
    case Sort::Kind::MapOf:
      out.insert(s.scalar);
      sort_scalars(s.kids[0], out);
      break;
    case Sort::Kind::TupleOf:
      for (const auto &k : s.kids) sort_scalars(k, out);
      break;
    case Sort::Kind::Lattice:
      sort_scalars(Sort::of(s.scalar), out);
      sort_scalars(s.map_value(), out);
      break;
  }
}

bool is_f_role(Role r) { return r == Role::StateTransition; }

// Values an integer literal of the sort may take.
std::vector<int64_t> literals(Scalar s, const std::vector<int64_t> &constants) {
  std::set<int64_t> out;
  switch (s) {
    case Scalar::Int:
      out = {0, 1};
      out.insert(constants.begin(), constants.end());
      break;
    case Scalar::Enum:
      out = {0, 1};
      for (int64_t c : constants)
        if (c >= 0) out.insert(c);
      break;
    case Scalar::Clock:
      out = {0};
      break;
    default:
      break;
  }
  return {out.begin(), out.end()};
}

std::vector<int64_t> scalar_domain(Scalar s, const Universe &u) {
  std::set<int64_t> out;
  switch (s) {
    case Scalar::Bool:
      out = {0, 1};
      break;
    case Scalar::Int:
      out.insert(u.int_values.begin(), u.int_values.end());
      out.insert(u.size);
      break;
    case Scalar::Opaque:
      out.insert(u.opaque_values.begin(), u.opaque_values.end());
      break;
    case Scalar::Clock:
      out.insert(0);
      out.insert(u.clock_values.begin(), u.clock_values.end());
      break;
    case Scalar::Enum:
      out.insert(u.enum_default.begin(), u.enum_default.end());
      for (const auto &[name, vals] : u.enum_values)
        out.insert(vals.begin(), vals.end());
      break;
    case Scalar::NodeId:
      out.insert(u.node_ids.begin(), u.node_ids.end());
      break;
  }
  return {out.begin(), out.end()};
}

Value random_state(const LatticeType &t, const Universe &u, std::mt19937_64 &rng) {
  auto pick = [&](const std::vector<int64_t> &d) {
    return d[std::uniform_int_distribution<size_t>(0, d.size() - 1)(rng)];
  };
  auto coin = [&] { return (rng() & 1) != 0; };
  switch (t.kind) {
    case LKind::OrBool:
    case LKind::NegBool:
      return Value::boolean(coin());
    case LKind::MaxInt: {
      auto d = scalar_domain(t.scalar, u);
      d.push_back(0);
      return Value::integer(pick(d));
    }
    case LKind::LSet: {
      SetVal s;
      for (int64_t x : scalar_domain(t.scalar, u))
        if (coin()) s.push_back(x);
      return Value::set(std::move(s));
    }
    case LKind::LMap: {
      MapVal m;
      for (int64_t k : scalar_domain(t.scalar, u))
        if (coin()) m.emplace_back(k, random_state(t.kids[0], u, rng));
      return Value::map(std::move(m));
    }
    case LKind::LexProduct: {
      Value a = random_state(t.kids[0], u, rng);
      Value b = (rng() % 4 == 0) ? bottom(t.kids[1]) : random_state(t.kids[1], u, rng);
      return Value::tuple({std::move(a), std::move(b)});
    }
    case LKind::FreeTuple: {
      TupleVal tv;
      for (const auto &k : t.kids) tv.push_back(random_state(k, u, rng));
      return Value::tuple(std::move(tv));
    }
  }
  return bottom(t);
}

std::vector<Value> leaf_variants(const LatticeType &t,
                                 const std::vector<int64_t> &constants) {
  switch (t.kind) {
    case LKind::OrBool:
      return {Value::boolean(false), Value::boolean(true)};
    case LKind::NegBool:
      return {Value::boolean(true), Value::boolean(false)};
    case LKind::MaxInt: {
      std::vector<Value> out;
      for (int64_t c : literals(t.scalar, constants))
        if (c >= 0) out.push_back(Value::integer(c));
      if (out.empty()) out.push_back(Value::integer(0));
      return out;
    }
    case LKind::LSet:
    case LKind::LMap:
      return {bottom(t)};
    case LKind::LexProduct:
    case LKind::FreeTuple: {
      std::vector<std::vector<Value>> parts;
      for (const auto &k : t.kids) parts.push_back(leaf_variants(k, constants));
      std::vector<Value> out;
      std::vector<size_t> idx(parts.size(), 0);
      while (true) {
        TupleVal tv;
        for (size_t i = 0; i < parts.size(); ++i) tv.push_back(parts[i][idx[i]]);
        out.push_back(Value::tuple(std::move(tv)));
        size_t i = parts.size();
        while (i > 0) {
          --i;
          if (++idx[i] < parts[i].size()) break;
          idx[i] = 0;
          if (i == 0) return out;
        }
      }
    }
  }
  return {bottom(t)};
}

// Largest size a type of the given depth can have.
int max_size_for_depth(int d) {
  int m = 1;
  for (int i = 2; i <= d; ++i) m = 1 + 2 * m;
  int best = m;
  for (int k = 2; k <= d; ++k) {
    int inner = 1;
    for (int i = 2; i <= d - k + 1; ++i) inner = 1 + 2 * inner;
    best = std::max(best, k - 1 + k * inner);
  }
  return best;
}

bool seed_shaped(const Term &c, const SortEnv &env) {
  auto input_var = [&](const Term &t) {
    return t.op == Op::Var && t.name != kStateVar && t.name != kNodeVar &&
           lookup_sort(env, t.name) != nullptr;
  };
  if (input_var(c)) return lookup_sort(env, c.name)->is_scalar(Scalar::Bool);
  if (c.op == Op::Eq && input_var(*c.args[0]))
    return c.args[1]->op == Op::IntLit || input_var(*c.args[1]);
  return false;
}

bool is_state_path(const Term &t) {
  if (t.op == Op::Var) return t.name == kStateVar;
  return t.op == Op::TupleGet && is_state_path(*t.args[0]);
}

}  // namespace

const char *role_name(Role r) {
  switch (r) {
    case Role::StateTransition:
      return "transition";
    case Role::Query:
      return "query";
    case Role::InitialState:
      return "init";
  }
  return "?";
}

// ---------------------------------------------------------------- types

std::vector<Scalar> relevant_scalars(const SequentialSpec &spec) {
  std::set<Scalar> s;
  for (const auto &f : spec.signature()) s.insert(f.sort);
  for (const auto &f : spec.query_fields) s.insert(f.sort);
  sort_scalars(spec.state_sort, s);
  sort_scalars(spec.query_sort, s);
  if (spec.flags.non_idempotent) s.insert(Scalar::NodeId);
  std::vector<Scalar> out;
  for (Scalar x : kAllScalars)
    if (s.count(x)) out.push_back(x);
  return out;
}

std::vector<LatticeType> enumerate_state_types(int depth,
                                               const std::vector<Scalar> &sorts,
                                               int max_size) {
  if (depth < 1) return {};
  int cap = std::min(max_size, max_size_for_depth(depth));
  // by_size[s]: non-tuple types of size s and depth <= depth.
  std::vector<std::vector<LatticeType>> by_size(cap + 1);
  for (int s = 1; s <= cap; ++s) {
    auto &out = by_size[s];
    if (s == 1) {
      out.push_back(LatticeType::or_bool());
      out.push_back(LatticeType::neg_bool());
    }
    if (s == 2 && depth >= 2) {
      for (Scalar b : sorts)
        if (maxint_base(b)) out.push_back(LatticeType::max_int(b));
      for (Scalar e : sorts) out.push_back(LatticeType::set(e));
    }
    if (s >= 3) {
      for (Scalar k : sorts)
        for (const auto &v : by_size[s - 2])
          if (1 + std::max(1, lattice_depth(v)) <= depth)
            out.push_back(LatticeType::map(k, v));
      for (int i = 1; i <= s - 2; ++i)
        for (const auto &a : by_size[i])
          for (const auto &b : by_size[s - 1 - i])
            if (1 + std::max(lattice_depth(a), lattice_depth(b)) <= depth)
              out.push_back(LatticeType::lex(a, b));
    }
  }
  std::vector<LatticeType> all;
  for (const auto &v : by_size) all.insert(all.end(), v.begin(), v.end());
  std::sort(all.begin(), all.end());
  std::vector<LatticeType> result = all;

  // FreeTuples: nondecreasing element index, arity >= 2.
  std::vector<int> sz, dp;
  for (const auto &t : all) {
    sz.push_back(lattice_size(t));
    dp.push_back(lattice_depth(t));
  }
  std::vector<int> pick;
  std::function<void(size_t, int, int)> rec = [&](size_t from, int sum, int maxd) {
    int k = static_cast<int>(pick.size());
    if (k >= 2) {
      std::vector<LatticeType> elems;
      for (int i : pick) elems.push_back(all[i]);
      result.push_back(LatticeType::free_tuple(std::move(elems)));
    }
    for (size_t i = from; i < all.size(); ++i) {
      int nk = k + 1;
      int nsize = nk - 1 + sum + sz[i];
      int nd = std::max(maxd, dp[i]) + nk - 1;
      if (nsize > cap || nd > depth) continue;
      pick.push_back(static_cast<int>(i));
      rec(i, sum + sz[i], std::max(maxd, dp[i]));
      pick.pop_back();
    }
  };
  rec(0, 0, 0);

  std::stable_sort(result.begin(), result.end(),
                   [](const LatticeType &a, const LatticeType &b) {
                     int sa = lattice_size(a), sb = lattice_size(b);
                     if (sa != sb) return sa < sb;
                     return a < b;
                   });
  return result;
}

std::vector<Value> enumerate_initial_states(const LatticeType &t,
                                            const std::vector<int64_t> &constants) {
  auto out = leaf_variants(t, constants);
  // leaf_variants starts at bottom for every kind; keep it first and unique.
  Value b = bottom(t);
  std::vector<Value> res = {b};
  for (auto &v : out)
    if (v != b && std::find(res.begin(), res.end(), v) == res.end())
      res.push_back(std::move(v));
  return res;
}

std::vector<Value> sample_states(const LatticeType &t, const Universe &u,
                                 int count, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Value> out = {bottom(t)};
  std::unordered_set<Value, ValueHash> seen(out.begin(), out.end());
  for (int attempt = 0; attempt < count * 20 && static_cast<int>(out.size()) < count;
       ++attempt) {
    Value v = random_state(t, u, rng);
    if (seen.insert(v).second) out.push_back(std::move(v));
  }
  return out;
}

Samples make_samples(const SequentialSpec &spec, Role role,
                     const LatticeType &state_type, const Universe &u,
                     int n_states, uint64_t seed) {
  Samples s;
  auto sig = spec.signature();
  auto op_row = [&](const OpValue &op) {
    std::vector<Value> row;
    for (size_t i = 0; i < sig.size(); ++i) row.push_back(field_value(sig[i].sort, op[i]));
    return row;
  };
  if (role == Role::Query) {
    s.vars = query_star_env(spec, state_type);
    auto states = sample_states(state_type, u, n_states, seed);
    auto queries = universe_queries(spec, u);
    for (const auto &st : states)
      for (const auto &q : queries) {
        std::vector<Value> row = {st};
        for (size_t i = 0; i < spec.query_fields.size(); ++i)
          row.push_back(field_value(spec.query_fields[i].sort, q[i]));
        s.rows.push_back(std::move(row));
      }
    return s;
  }
  s.vars = f_star_env(spec, state_type);
  auto ops = universe_ops(spec, u);
  if (!spec.flags.non_idempotent) {
    for (const auto &op : ops) s.rows.push_back(op_row(op));
    return s;
  }
  auto states = sample_states(state_type, u, n_states, seed);
  for (const auto &op : ops)
    for (int64_t n : u.node_ids)
      for (const auto &st : states) {
        auto row = op_row(op);
        row.push_back(st);
        row.push_back(Value::integer(n));
        s.rows.push_back(std::move(row));
      }
  return s;
}

// ---------------------------------------------------------------- seeds

std::vector<BankEntry> seed_conditions(const GrammarConfig &cfg,
                                       const Samples &samples) {
  const size_t n = samples.rows.size();
  std::vector<BankEntry> cands;
  auto column = [&](size_t vi) {
    std::vector<Value> c(n);
    for (size_t r = 0; r < n; ++r) c[r] = samples.rows[r][vi];
    return c;
  };
  std::vector<size_t> inputs;
  for (size_t i = 0; i < samples.vars.size(); ++i) {
    const auto &[name, sort] = samples.vars[i];
    if (name == kStateVar || name == kNodeVar || !sort.is_scalar()) continue;
    inputs.push_back(i);
  }
  for (size_t vi : inputs) {
    const auto &[name, sort] = samples.vars[vi];
    if (sort.is_scalar(Scalar::Bool)) cands.push_back({t_var(name), column(vi)});
  }
  for (size_t vi : inputs) {
    const auto &[name, sort] = samples.vars[vi];
    if (sort.is_scalar(Scalar::Bool)) continue;
    auto col = column(vi);
    for (int64_t lit : literals(sort.scalar, cfg.constants)) {
      std::vector<Value> sig(n);
      for (size_t r = 0; r < n; ++r) sig[r] = Value::boolean(col[r].scalar_key() == lit);
      cands.push_back({t_eq(t_var(name), t_int(lit, sort.scalar)), std::move(sig)});
    }
  }
  for (size_t a = 0; a < inputs.size(); ++a)
    for (size_t b = a + 1; b < inputs.size(); ++b) {
      const auto &[na, sa] = samples.vars[inputs[a]];
      const auto &[nb, sb] = samples.vars[inputs[b]];
      if (sa != sb) continue;
      auto ca = column(inputs[a]), cb = column(inputs[b]);
      std::vector<Value> sig(n);
      for (size_t r = 0; r < n; ++r)
        sig[r] = Value::boolean(ca[r].scalar_key() == cb[r].scalar_key());
      cands.push_back({t_eq(t_var(na), t_var(nb)), std::move(sig)});
    }
  std::vector<BankEntry> out;
  for (auto &c : cands) {
    bool constant = std::all_of(c.sig.begin(), c.sig.end(),
                                [&](const Value &v) { return v == c.sig[0]; });
    if (constant) continue;
    std::vector<Value> neg(n);
    for (size_t r = 0; r < n; ++r) neg[r] = Value::boolean(!c.sig[r].as_bool());
    bool dup = std::any_of(out.begin(), out.end(), [&](const BankEntry &e) {
      return e.sig == c.sig || e.sig == neg;
    });
    if (!dup) out.push_back(std::move(c));
  }
  return out;
}

// ---------------------------------------------------------------- bank

TermBank::TermBank(GrammarConfig cfg, Samples samples,
                   std::optional<LatticeType> state_type)
    : cfg_(std::move(cfg)), samples_(std::move(samples)),
      state_type_(std::move(state_type)) {
  collect_sorts();
  build_seeds();
  build_leaves();
  depth_ = 1;
}

void TermBank::add_sort(const Sort &s) {
  if (index_.count(s)) return;
  index_[s] = 0;
  switch (s.kind) {
    case Sort::Kind::Scalar:
      break;
    case Sort::Kind::SetOf:
      add_sort(Sort::of(s.scalar));
      break;
    case Sort::Kind::MapOf:
    case Sort::Kind::Lattice:
      add_sort(Sort::of(s.scalar));
      add_sort(s.map_value());
      break;
    case Sort::Kind::TupleOf:
      for (const auto &k : s.kids) add_sort(k);
      break;
  }
}

void TermBank::collect_sorts() {
  add_sort(Sort::boolean());
  for (const auto &[name, sort] : samples_.vars) add_sort(sort);
  if (state_type_) add_sort(Sort::lattice(*state_type_));
  for (const auto &t : cfg_.targets) add_sort(t);
  sorts_.clear();
  for (auto &[s, idx] : index_) {
    idx = sorts_.size();
    sorts_.push_back(s);
  }
  banks_.assign(sorts_.size(), {});
}

void TermBank::build_seeds() { seeds_ = seed_conditions(cfg_, samples_); }

std::vector<Value> TermBank::const_sig(const Value &v) const {
  return std::vector<Value>(samples_.rows.size(), v);
}

std::vector<Value> TermBank::apply(
    const Term &node, const std::vector<const std::vector<Value> *> &kids) const {
  const size_t n = samples_.rows.size();
  std::vector<Value> out(n);
  const Value *ptrs[8];
  for (size_t r = 0; r < n; ++r) {
    for (size_t i = 0; i < kids.size(); ++i) ptrs[i] = &(*kids[i])[r];
    out[r] = apply_node(node, ptrs);
  }
  return out;
}

bool TermBank::sig_valid(const LatticeType &lt, const std::vector<Value> &sig) const {
  for (const auto &v : sig)
    if (!validate(lt, v)) return false;
  return true;
}

std::vector<Value> TermBank::signature(const Term &t) const {
  std::vector<Value> out;
  out.reserve(samples_.rows.size());
  Env env;
  for (const auto &[name, sort] : samples_.vars) env.bind(name, Value());
  for (const auto &row : samples_.rows) {
    env.values = row;
    out.push_back(eval(t, env));
  }
  return out;
}

bool TermBank::insert(SortBank &b, Cand c) {
  size_t h = ValueVecHash{}(c.sig);
  auto &bucket = b.seen[h];
  for (int i : bucket)
    if (b.entries[i].sig == c.sig) return false;
  bucket.push_back(static_cast<int>(b.entries.size()));
  b.entries.push_back({std::move(c.term), std::move(c.sig)});
  return true;
}

namespace {

// Per-sort staging area for one level: keeps the smallest term per
// signature until the level is complete.
struct Pending {
  std::vector<std::pair<TermPtr, std::vector<Value>>> items;
  std::unordered_map<size_t, std::vector<int>> by_hash;
  int64_t offered = 0;
};

}  // namespace

void TermBank::build_leaves() {
  const size_t nrows = samples_.rows.size();
  const bool f_role = is_f_role(cfg_.role);
  const bool nonidem = f_role && cfg_.flags.non_idempotent;
  std::vector<std::vector<Cand>> level(sorts_.size());
  auto push = [&](const Sort &s, TermPtr t, std::vector<Value> sig) {
    auto it = index_.find(s);
    if (it == index_.end()) return;
    level[it->second].push_back({std::move(t), std::move(sig)});
  };
  for (size_t vi = 0; vi < samples_.vars.size(); ++vi) {
    const auto &[name, sort] = samples_.vars[vi];
    if (nonidem && name == kStateVar) continue;
    std::vector<Value> col(nrows);
    for (size_t r = 0; r < nrows; ++r) col[r] = samples_.rows[r][vi];
    push(sort, t_var(name), std::move(col));
  }
  for (const auto &s : sorts_) {
    if (s.is_scalar(Scalar::Bool)) {
      push(s, t_bool(false), const_sig(Value::boolean(false)));
      push(s, t_bool(true), const_sig(Value::boolean(true)));
    } else if (s.is_scalar()) {
      for (int64_t lit : literals(s.scalar, cfg_.constants))
        push(s, t_int(lit, s.scalar), const_sig(Value::integer(lit)));
    } else if (s.is_set()) {
      push(s, t_empty_set(s.scalar), const_sig(Value::set({})));
    } else if (s.is_lattice_map() && f_role) {
      push(s, t_empty_map(s), const_sig(Value::map({})));
    }
  }
  for (size_t i = 0; i < sorts_.size(); ++i) {
    auto &b = banks_[i];
    b.level_end = {0};
    for (auto &c : level[i]) insert(b, std::move(c));
    b.level_end.push_back(static_cast<int>(b.entries.size()));
  }

  // Non-idempotent transitions read NodeID-keyed maps of the state.
  state_paths_.clear();
  if (nonidem && state_type_) {
    size_t si = 0;
    while (samples_.vars[si].first != kStateVar) ++si;
    std::vector<Value> col(nrows);
    for (size_t r = 0; r < nrows; ++r) col[r] = samples_.rows[r][si];
    std::function<void(TermPtr, const Sort &, const std::vector<Value> &)> walk =
        [&](TermPtr t, const Sort &s, const std::vector<Value> &sig) {
          if (s.is_lattice_map() && s.map_key() == Scalar::NodeId) {
            state_paths_.push_back({t, sig});
          } else if (s.is_tuple()) {
            for (size_t k = 0; k < s.kids.size(); ++k) {
              auto sub = t_tuple_get(t, static_cast<int>(k));
              walk(sub, s.kids[k], apply(*sub, {&sig}));
            }
          }
        };
    walk(t_var(kStateVar), Sort::lattice(*state_type_), col);
  }
}

void TermBank::grow_to(int depth) {
  while (depth_ < depth) {
    build_level(depth_ + 1);
    ++depth_;
  }
}

void TermBank::build_level(int k) {
  const bool f_role = is_f_role(cfg_.role);
  const bool query = cfg_.role == Role::Query;
  const bool nonidem = f_role && cfg_.flags.non_idempotent;
  std::vector<Pending> pend(sorts_.size());

  // [0, all) are usable children; [fresh, all) have depth exactly k - 1.
  auto all = [&](size_t si) { return banks_[si].level_end[k - 1]; };
  auto fresh = [&](size_t si) { return banks_[si].level_end[k - 2]; };
  auto entry = [&](size_t si, int i) -> const BankEntry & { return banks_[si].entries[i]; };
  auto sidx = [&](const Sort &s) -> int {
    auto it = index_.find(s);
    return it == index_.end() ? -1 : static_cast<int>(it->second);
  };

  // Returns false once the sort's level is full.
  auto offer = [&](size_t si, const Term &proto,
                   std::vector<const std::vector<Value> *> kid_sigs,
                   const std::function<TermPtr()> &build, int size) -> bool {
    Pending &p = pend[si];
    if (++p.offered > cfg_.level_cap) {
      truncated_ = true;
      return false;
    }
    std::vector<Value> sig = apply(proto, kid_sigs);
    size_t h = ValueVecHash{}(sig);
    auto &b = banks_[si];
    if (auto it = b.seen.find(h); it != b.seen.end())
      for (int i : it->second)
        if (b.entries[i].sig == sig) return true;
    auto &bucket = p.by_hash[h];
    for (int i : bucket)
      if (p.items[i].second == sig) {
        if (size < p.items[i].first->size) p.items[i].first = build();
        return true;
      }
    bucket.push_back(static_cast<int>(p.items.size()));
    p.items.emplace_back(build(), std::move(sig));
    return true;
  };

  auto proto_of = [](Op op) {
    Term t;
    t.op = op;
    return t;
  };

  // Binary production over (A, B) with at least one child of depth k - 1.
  auto pairs = [&](size_t target, int ai, int bi, const Term &proto,
                   const std::function<TermPtr(TermPtr, TermPtr)> &mk,
                   bool commutative, bool strict) {
    int nA = all(ai), sA = fresh(ai), nB = all(bi), sB = fresh(bi);
    for (int i = 0; i < nA; ++i) {
      int j0 = i >= sA ? 0 : sB;
      if (commutative) j0 = std::max(j0, strict ? i + 1 : i);
      for (int j = j0; j < nB; ++j) {
        if (!commutative && ai == bi && i == j && strict) continue;
        const auto &a = entry(ai, i);
        const auto &b = entry(bi, j);
        if (!offer(target, proto, {&a.sig, &b.sig},
                   [&] { return mk(a.term, b.term); },
                   1 + a.term->size + b.term->size))
          return;
      }
    }
  };
  auto unary = [&](size_t target, int ai, const Term &proto,
                   const std::function<TermPtr(TermPtr)> &mk) {
    for (int i = fresh(ai); i < all(ai); ++i) {
      const auto &a = entry(ai, i);
      if (!offer(target, proto, {&a.sig}, [&] { return mk(a.term); },
                 1 + a.term->size))
        return;
    }
  };

  for (size_t si = 0; si < sorts_.size(); ++si) {
    const Sort &S = sorts_[si];

    if (S.is_scalar(Scalar::Bool)) {
      int b = static_cast<int>(si);
      unary(si, b, proto_of(Op::Not), t_not);
      pairs(si, b, b, proto_of(Op::And), t_and, true, true);
      pairs(si, b, b, proto_of(Op::Or), t_or, true, true);
      for (size_t ti = 0; ti < sorts_.size(); ++ti) {
        const Sort &T = sorts_[ti];
        int t = static_cast<int>(ti);
        if (T.is_scalar()) {
          pairs(si, t, t, proto_of(Op::Eq), t_eq, true, true);
          if (scalar_ordered(T.scalar)) {
            pairs(si, t, t, proto_of(Op::Gt), t_gt, false, true);
            pairs(si, t, t, proto_of(Op::Geq), t_geq, false, true);
          }
        } else if (T.is_set()) {
          int e = sidx(Sort::of(T.scalar));
          if (e >= 0) pairs(si, e, t, proto_of(Op::Member), t_member, false, false);
          pairs(si, t, t, proto_of(Op::Subset), t_subset, false, true);
        }
      }
    }
    if (S.is_scalar(Scalar::Int)) {
      int n = static_cast<int>(si);
      pairs(si, n, n, proto_of(Op::Add), t_add, true, false);
      pairs(si, n, n, proto_of(Op::Sub), t_sub, false, true);
    }

    // Reductions (queries only).
    if (query) {
      for (size_t mi = 0; mi < sorts_.size(); ++mi) {
        const Sort &M = sorts_[mi];
        if (!M.is_lattice_map() || M.map_value() != S) continue;
        const LatticeType &vl = M.map_lattice().kids[0];
        std::vector<std::pair<Reducer, TermPtr>> reds;
        if (M.map_key() == Scalar::NodeId && S.is_scalar(Scalar::Int))
          reds.emplace_back(Reducer::Sum, t_int(0));
        if (M.map_key() == Scalar::NodeId && S.is_scalar(Scalar::Bool)) {
          reds.emplace_back(Reducer::OrAll, t_bool(false));
          reds.emplace_back(Reducer::AndAll, t_bool(true));
        }
        reds.emplace_back(Reducer::JoinAll, t_lattice_bottom(vl));
        for (auto &[r, init] : reds) {
          auto isig = const_sig(eval(*init, Env{}));
          Term proto = proto_of(Op::Reduce);
          proto.reducer = r;
          if (r == Reducer::JoinAll) proto.lattice = {vl};
          int m = static_cast<int>(mi);
          for (int i = fresh(m); i < all(m); ++i) {
            const auto &e = entry(m, i);
            if (!offer(si, proto, {&e.sig, &isig},
                       [&] {
                         return t_reduce(e.term, r, init,
                                         r == Reducer::JoinAll
                                             ? std::optional<LatticeType>(vl)
                                             : std::nullopt);
                       },
                       1 + e.term->size + init->size))
              break;
          }
        }
      }
    }

    // Tuple projections.
    for (size_t ti = 0; ti < sorts_.size(); ++ti) {
      const Sort &T = sorts_[ti];
      if (!T.is_tuple()) continue;
      for (size_t c = 0; c < T.kids.size(); ++c) {
        if (T.kids[c] != S) continue;
        Term proto = proto_of(Op::TupleGet);
        proto.index = static_cast<int>(c);
        unary(si, static_cast<int>(ti), proto,
              [c](TermPtr a) { return t_tuple_get(a, static_cast<int>(c)); });
      }
    }

    // Map lookups.
    Term mgd = proto_of(Op::MapGetDefault);
    if (query) {
      for (size_t mi = 0; mi < sorts_.size(); ++mi) {
        const Sort &M = sorts_[mi];
        if (!M.is_map() || M.map_value() != S) continue;
        int m = static_cast<int>(mi), key = sidx(Sort::of(M.map_key()));
        int d = static_cast<int>(si);
        if (key < 0) continue;
        bool full = false;
        for (int i = 0; i < all(m) && !full; ++i)
          for (int j = 0; j < all(key) && !full; ++j) {
            bool old = i < fresh(m) && j < fresh(key);
            for (int l = old ? fresh(d) : 0; l < all(d); ++l) {
              const auto &a = entry(m, i), &b = entry(key, j), &c = entry(d, l);
              if (!offer(si, mgd, {&a.sig, &b.sig, &c.sig},
                         [&] { return t_map_get(a.term, b.term, c.term); },
                         1 + a.term->size + b.term->size + c.term->size)) {
                full = true;
                break;
              }
            }
          }
      }
    } else if (nonidem) {
      int nid = sidx(Sort::of(Scalar::NodeId));
      const BankEntry *node_var = nullptr;
      if (nid >= 0)
        for (const auto &e : banks_[nid].entries)
          if (e.term->op == Op::Var && e.term->name == kNodeVar) node_var = &e;
      for (const auto &p : state_paths_) {
        Sort M = typecheck(*p.term, samples_.vars);
        if (M.map_value() != S || !node_var) continue;
        int d = static_cast<int>(si);
        bool path_fresh = std::max(p.term->depth, 1) == k - 1;
        for (int l = path_fresh ? 0 : fresh(d); l < all(d); ++l) {
          const auto &c = entry(d, l);
          if (!offer(si, mgd, {&p.sig, &node_var->sig, &c.sig},
                     [&] { return t_map_get(p.term, node_var->term, c.term); },
                     1 + p.term->size + 1 + c.term->size))
            break;
        }
      }
    }

    // Conditionals on non-Boolean scalars, guarded by seed conditions.
    if (S.is_scalar() && !S.is_scalar(Scalar::Bool)) {
      int u = static_cast<int>(si);
      Term proto = proto_of(Op::Ite);
      bool full = false;
      for (const auto &sd : seeds_) {
        if (sd.term->depth > k - 1) continue;
        bool sfresh = sd.term->depth == k - 1;
        for (int i = 0; i < all(u) && !full; ++i)
          for (int j = (sfresh || i >= fresh(u)) ? 0 : fresh(u); j < all(u); ++j) {
            if (i == j) continue;
            const auto &a = entry(u, i), &b = entry(u, j);
            if (!offer(si, proto, {&sd.sig, &a.sig, &b.sig},
                       [&] { return t_ite(sd.term, a.term, b.term); },
                       1 + sd.term->size + a.term->size + b.term->size)) {
              full = true;
              break;
            }
          }
        if (full) break;
      }
    }

    if (S.is_set()) {
      int e = sidx(Sort::of(S.scalar)), s = static_cast<int>(si);
      if (e >= 0) unary(si, e, proto_of(Op::Singleton), t_singleton);
      pairs(si, s, s, proto_of(Op::Union), t_union, true, true);
      pairs(si, s, s, proto_of(Op::Diff), t_diff, false, true);
    }

    if (S.is_lattice_map() && f_role) {
      int key = sidx(Sort::of(S.map_key())), val = sidx(S.map_value());
      const LatticeType &vl = S.map_lattice().kids[0];
      Term proto = proto_of(Op::SingletonMap);
      proto.sort = S;
      if (key >= 0 && val >= 0) {
        std::vector<int> keys;
        for (int i = 0; i < all(key); ++i) {
          const auto &t = *entry(key, i).term;
          if (nonidem && S.map_key() == Scalar::NodeId &&
              !(t.op == Op::Var && t.name == kNodeVar))
            continue;
          keys.push_back(i);
        }
        bool full = false;
        for (int i : keys) {
          for (int j = i >= fresh(key) ? 0 : fresh(val); j < all(val); ++j) {
            const auto &a = entry(key, i), &b = entry(val, j);
            if (!sig_valid(vl, b.sig)) continue;
            if (!offer(si, proto, {&a.sig, &b.sig},
                       [&] { return t_singleton_map(S, a.term, b.term); },
                       1 + a.term->size + b.term->size)) {
              full = true;
              break;
            }
          }
          if (full) break;
        }
      }
      Term join = proto_of(Op::MapJoinUnion);
      join.sort = S;
      join.lattice = {S.map_lattice()};
      int m = static_cast<int>(si);
      pairs(si, m, m, join,
            [S](TermPtr a, TermPtr b) { return t_map_join(S, a, b); }, true, true);
    }

    // Tuple construction for tuples stored as map values.
    if (S.is_tuple() && f_role) {
      bool map_value = false;
      for (const auto &M : sorts_)
        if (M.is_lattice_map() && M.map_value() == S) map_value = true;
      if (map_value) {
        std::vector<int> kid(S.kids.size());
        for (size_t c = 0; c < kid.size(); ++c) kid[c] = sidx(S.kids[c]);
        std::vector<int> idx(kid.size(), 0);
        Term proto = proto_of(Op::TupleMake);
        bool any_empty = std::any_of(kid.begin(), kid.end(),
                                     [&](int x) { return x < 0 || all(x) == 0; });
        while (!any_empty) {
          bool has_fresh = false;
          for (size_t c = 0; c < kid.size(); ++c)
            if (idx[c] >= fresh(kid[c])) has_fresh = true;
          if (has_fresh) {
            std::vector<const std::vector<Value> *> sigs;
            int size = 1;
            for (size_t c = 0; c < kid.size(); ++c) {
              sigs.push_back(&entry(kid[c], idx[c]).sig);
              size += entry(kid[c], idx[c]).term->size;
            }
            proto.args.assign(kid.size(), nullptr);
            if (!offer(si, proto, sigs,
                       [&] {
                         std::vector<TermPtr> parts;
                         for (size_t c = 0; c < kid.size(); ++c)
                           parts.push_back(entry(kid[c], idx[c]).term);
                         return t_tuple(std::move(parts));
                       },
                       size))
              break;
          }
          size_t c = kid.size();
          bool done = true;
          while (c > 0) {
            --c;
            if (++idx[c] < all(kid[c])) {
              done = false;
              break;
            }
            idx[c] = 0;
          }
          if (done) break;
        }
      }
    }
  }

  for (size_t si = 0; si < sorts_.size(); ++si) {
    auto &items = pend[si].items;
    std::stable_sort(items.begin(), items.end(), [](const auto &a, const auto &b) {
      return a.first->size < b.first->size;
    });
    auto &b = banks_[si];
    for (auto &[t, sig] : items) insert(b, {std::move(t), std::move(sig)});
    b.level_end.push_back(static_cast<int>(b.entries.size()));
  }
}

std::vector<const BankEntry *> TermBank::upto(const Sort &s, int d) const {
  std::vector<const BankEntry *> out;
  auto it = index_.find(s);
  if (it == index_.end()) return out;
  const auto &b = banks_[it->second];
  int end = b.level_end[std::min<int>(d, static_cast<int>(b.level_end.size()) - 1)];
  for (int i = 0; i < end; ++i) out.push_back(&b.entries[i]);
  std::stable_sort(out.begin(), out.end(), [](const BankEntry *a, const BankEntry *b) {
    return a->term->size < b->term->size;
  });
  return out;
}

const std::vector<BankEntry> &TermBank::entries(const Sort &s) const {
  return bank(s).entries;
}

size_t TermBank::total_terms() const {
  size_t n = 0;
  for (const auto &b : banks_) n += b.entries.size();
  return n;
}

std::vector<TermPtr> enumerate_terms(const GrammarConfig &cfg,
                                     const Samples &samples,
                                     const Sort &result_sort,
                                     std::optional<LatticeType> state_type) {
  GrammarConfig c = cfg;
  c.targets.push_back(result_sort);
  TermBank bank(c, samples, std::move(state_type));
  bank.grow_to(cfg.depth);
  std::vector<TermPtr> out;
  for (const auto *e : bank.upto(result_sort, cfg.depth)) out.push_back(e->term);
  return out;
}

// ---------------------------------------------------------------- membership

namespace {

enum Ctx : unsigned { kRoot = 1, kTupleOk = 2 };

struct Membership {
  const GrammarConfig &cfg;
  const SortEnv &env;
  bool f_role, query, nonidem;

  bool lit_ok(const Term &t) const {
    if (!t.sort.is_scalar()) return false;
    auto lits = literals(t.sort.scalar, cfg.constants);
    return std::find(lits.begin(), lits.end(), t.value) != lits.end();
  }

  bool check(const Term &t, unsigned ctx) const {
    auto kids = [&](unsigned c) {
      for (const auto &a : t.args)
        if (!check(*a, c)) return false;
      return true;
    };
    switch (t.op) {
      case Op::BoolLit:
        return true;
      case Op::IntLit:
        return lit_ok(t);
      case Op::Var:
        if (nonidem && t.name == kStateVar) return false;
        return lookup_sort(env, t.name) != nullptr;
      case Op::Ite: {
        if (!seed_shaped(*t.args[0], env)) return false;
        Sort s = typecheck(t, env);
        bool scalar_inner = s.is_scalar() && !s.is_scalar(Scalar::Bool);
        if (!(ctx & kRoot) && !scalar_inner) return false;
        if (s.is_scalar(Scalar::Bool) && !f_role) return false;
        unsigned c = scalar_inner ? 0u : unsigned(kTupleOk);
        return check(*t.args[1], c) && check(*t.args[2], c);
      }
      case Op::TupleMake:
        if (!(ctx & kTupleOk)) return false;
        return kids(f_role ? unsigned(kTupleOk) : 0u);
      case Op::EmptyMap:
      case Op::MapJoinUnion:
        return f_role && kids(0);
      case Op::SingletonMap:
        if (!f_role) return false;
        if (nonidem && t.sort.map_key() == Scalar::NodeId &&
            !(t.args[0]->op == Op::Var && t.args[0]->name == kNodeVar))
          return false;
        return check(*t.args[0], 0) && check(*t.args[1], kTupleOk);
      case Op::MapGetDefault:
        if (query) return kids(0);
        if (!nonidem) return false;
        return is_state_path(*t.args[0]) && t.args[1]->op == Op::Var &&
               t.args[1]->name == kNodeVar && check(*t.args[2], kTupleOk);
      case Op::Reduce: {
        if (!query) return false;
        Sort m = typecheck(*t.args[0], env);
        const Term &init = *t.args[1];
        switch (t.reducer) {
          case Reducer::Sum:
            if (m.map_key() != Scalar::NodeId || init.op != Op::IntLit || init.value != 0)
              return false;
            break;
          case Reducer::OrAll:
            if (m.map_key() != Scalar::NodeId || init.op != Op::BoolLit || init.value != 0)
              return false;
            break;
          case Reducer::AndAll:
            if (m.map_key() != Scalar::NodeId || init.op != Op::BoolLit || init.value != 1)
              return false;
            break;
          case Reducer::JoinAll:
            if (init.op != Op::LatticeBottom) return false;
            break;
        }
        return check(*t.args[0], 0);
      }
      case Op::LatticeJoin:
      case Op::LatticeBottom:
        return false;
      default:
        return kids(0);
    }
  }
};

}  // namespace

bool derivable(const Term &t, const GrammarConfig &cfg, const SortEnv &env,
               const Sort &result_sort) {
  try {
    if (typecheck(t, env) != result_sort) return false;
  } catch (const TypeError &) {
    return false;
  }
  if (t.depth > cfg.depth) return false;
  bool f_role = is_f_role(cfg.role);
  Membership m{cfg, env, f_role, cfg.role == Role::Query,
               f_role && cfg.flags.non_idempotent};
  unsigned ctx = kRoot | (f_role ? unsigned(kTupleOk) : 0u);
  try {
    return m.check(t, ctx);
  } catch (const TypeError &) {
    return false;
  }
}

}  // namespace katalite
