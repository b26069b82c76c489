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

#include "katalite/synthesizer.hpp"

#include <algorithm>
#include <chrono>
#include <climits>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <thread>
#include <unordered_map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace katalite {

namespace {

using LKind = LatticeType::Kind;
using SteadyClock = std::chrono::steady_clock;

double now_s() {
  return std::chrono::duration<double>(SteadyClock::now().time_since_epoch()).count();
}

// ---------------------------------------------------------------- trees

// Phase-1 log tree plus lookups used by the search.
struct P1Tree {
  LogTree tree;
  std::vector<int> ans_id;  // per sequential state: interned answer row
  std::unordered_map<uint64_t, int32_t> child;
  std::map<OpValue, int> op_index;
  std::map<QueryValue, int> query_index;
  std::map<int64_t, int> node_index;

  uint64_t key(int parent, int op, int node) const {
    return (static_cast<uint64_t>(parent) * tree.ops.size() + op) *
               tree.node_ids.size() +
           node;
  }
  int seq(int n) const { return tree.nodes[n].seq; }
};

std::shared_ptr<P1Tree> make_p1(const SequentialSpec &spec, int n, int bound) {
  auto p = std::make_shared<P1Tree>();
  p->tree = build_log_tree(spec, Universe::of_size(spec, n), bound);
  std::unordered_map<std::vector<Value>, int, ValueVecHash> ids;
  for (const auto &row : p->tree.answers)
    p->ans_id.push_back(ids.emplace(row, static_cast<int>(ids.size())).first->second);
  for (size_t i = 0; i < p->tree.ops.size(); ++i) p->op_index[p->tree.ops[i]] = i;
  for (size_t i = 0; i < p->tree.queries.size(); ++i)
    p->query_index[p->tree.queries[i]] = i;
  for (size_t i = 0; i < p->tree.node_ids.size(); ++i)
    p->node_index[p->tree.node_ids[i]] = i;
  for (size_t i = 1; i < p->tree.nodes.size(); ++i) {
    const auto &nd = p->tree.nodes[i];
    p->child[p->key(nd.parent, nd.op, nd.node)] = static_cast<int32_t>(i);
  }
  return p;
}

// Trees shared by the workers of one search.
class TreeStore {
 public:
  explicit TreeStore(const SequentialSpec &spec) : spec_(spec) {}

  std::shared_ptr<const P1Tree> phase1(int n, int bound) {
    std::lock_guard<std::mutex> lk(mu_);
    auto &slot = p1_[{n, bound}];
    if (!slot) slot = make_p1(spec_, n, bound);
    return slot;
  }

  std::shared_ptr<const LogTree> phase2(int n, int bound, int64_t budget) {
    std::lock_guard<std::mutex> lk(mu_);
    auto &slot = p2_[{n, bound}];
    if (!slot) {
      Universe u = Universe::of_size(spec_, n);
      int64_t nq = std::max<int64_t>(1, universe_queries(spec_, u).size());
      slot = std::make_shared<LogTree>(
          build_log_tree(spec_, u, bound, budget / nq + 1));
    }
    return slot;
  }

 private:
  const SequentialSpec &spec_;
  std::mutex mu_;
  std::map<std::pair<int, int>, std::shared_ptr<const P1Tree>> p1_;
  std::map<std::pair<int, int>, std::shared_ptr<const LogTree>> p2_;
};

// ---------------------------------------------------------------- folding

struct InvalidCandidate {};

// CRDT states reached on the phase-1 tree for one (init, f*) pair.
struct Fold {
  std::vector<Value> states;
  std::unordered_map<Value, int, ValueHash> ids;
  std::vector<int> sid;      // per tree node; -1 when outside the mask
  std::vector<int> sid_ans;  // per state: answer row id
  std::unordered_map<uint64_t, int> memo;

  void reset(size_t nodes) {
    states.clear();
    ids.clear();
    sid.assign(nodes, -1);
    sid_ans.clear();
    memo.clear();
  }
  int intern(Value &&v) {
    auto [it, fresh] = ids.emplace(v, static_cast<int>(states.size()));
    if (fresh) {
      states.push_back(std::move(v));
      sid_ans.push_back(-1);
    }
    return it->second;
  }
};

// Walks the tree (restricted to mask when given) and fails as soon as one
// CRDT state is reached by two logs with different answer rows: no query
// can then be correct.
template <typename Next>
bool fold_check(const P1Tree &t, const std::vector<uint8_t> *mask,
                const Value &init, Fold &f, Next &&next) {
  const auto &nodes = t.tree.nodes;
  f.reset(nodes.size());
  int s0 = f.intern(Value(init));
  f.sid[0] = s0;
  f.sid_ans[s0] = t.ans_id[t.seq(0)];
  const uint64_t nops = t.tree.ops.size(), nn = t.tree.node_ids.size();
  for (size_t n = 1; n < nodes.size(); ++n) {
    if (mask && !(*mask)[n]) continue;
    const auto &nd = nodes[n];
    int ps = f.sid[nd.parent];
    uint64_t key = (static_cast<uint64_t>(ps) * nops + nd.op) * nn + nd.node;
    int s;
    if (auto it = f.memo.find(key); it != f.memo.end()) {
      s = it->second;
    } else {
      s = f.intern(next(ps, nd.op, nd.node));
      f.memo.emplace(key, s);
    }
    f.sid[n] = s;
    int a = t.ans_id[t.seq(n)];
    if (f.sid_ans[s] == -1)
      f.sid_ans[s] = a;
    else if (f.sid_ans[s] != a)
      return false;
  }
  return true;
}

// ---------------------------------------------------------------- bodies

struct Body {
  TermPtr term;
  std::vector<Value> own;
  const std::vector<Value> *sig = nullptr;  // per transition sample row
  int size = 0;
};

// Transition bodies of one lattice type with depth <= d, in size order.
// Products are generated lazily by total size.
class BodySource {
 public:
  BodySource(const TermBank &bank, const LatticeType &lt, int d, bool want_sig,
             size_t cap)
      : bank_(bank), lt_(lt), want_sig_(want_sig), cap_(cap) {
    if (lt.kind == LKind::LexProduct || lt.kind == LKind::FreeTuple) {
      tuple_ = true;
      if (d < 2) return;
      for (const auto &k : lt.kids) {
        kids_.push_back(std::make_unique<BodySource>(bank, k, d - 1, want_sig, cap));
        auto &src = *kids_.back();
        std::vector<std::pair<int, std::vector<const Body *>>> groups;
        for (size_t i = 0;; ++i) {
          const Body *b = src.at(i);
          if (!b) break;
          if (groups.empty() || groups.back().first != b->size)
            groups.push_back({b->size, {}});
          groups.back().second.push_back(b);
        }
        if (groups.empty()) {
          kids_.clear();
          groups_.clear();
          return;
        }
        groups_.push_back(std::move(groups));
      }
      int lo = 1, hi = 1;
      for (const auto &g : groups_) {
        lo += g.front().first;
        hi += g.back().first;
      }
      cur_size_ = lo;
      max_size_ = hi;
      return;
    }
    Sort s = Sort::lattice(lt);
    if (!bank.has_sort(s)) return;
    for (const BankEntry *e : bank.upto(s, d)) {
      bool ok = true;
      for (const auto &v : e->sig)
        if (!validate(lt, v)) {
          ok = false;
          break;
        }
      if (!ok) continue;
      Body b;
      b.term = e->term;
      b.sig = &e->sig;
      b.size = e->term->size;
      out_.push_back(std::move(b));
    }
  }

  const Body *at(size_t i) {
    while (i >= out_.size()) {
      if (!tuple_ || out_.size() >= cap_ || !produce()) return nullptr;
    }
    return &out_[i];
  }

 private:
  // Emits up to a chunk of products; false when exhausted.
  bool produce() {
    const size_t k = groups_.size();
    if (k == 0) return false;
    size_t before = out_.size();
    while (out_.size() - before < 4096 && out_.size() < cap_) {
      if (assign_.empty()) {
        if (cur_size_ > max_size_) break;
        plan_size(cur_size_);
        ++cur_size_;
        if (assign_.empty()) continue;
        a_pos_ = 0;
        odo_.assign(k, 0);
      }
      const auto &as = assign_[a_pos_];
      std::vector<const Body *> parts(k);
      for (size_t c = 0; c < k; ++c) parts[c] = groups_[c][as[c]].second[odo_[c]];
      emit(parts);
      // Advance the odometer, then the size assignment.
      size_t c = k;
      bool carry = true;
      while (carry && c > 0) {
        --c;
        if (++odo_[c] < groups_[c][as[c]].second.size())
          carry = false;
        else
          odo_[c] = 0;
      }
      if (carry && ++a_pos_ >= assign_.size()) assign_.clear();
    }
    return out_.size() > before;
  }

  // All group choices whose sizes add up to total - 1.
  void plan_size(int total) {
    assign_.clear();
    std::vector<int> cur(groups_.size());
    std::function<void(size_t, int)> rec = [&](size_t c, int rem) {
      if (c == groups_.size()) {
        if (rem == 0) assign_.push_back(cur);
        return;
      }
      for (size_t g = 0; g < groups_[c].size(); ++g) {
        int sz = groups_[c][g].first;
        if (sz > rem) break;
        cur[c] = static_cast<int>(g);
        rec(c + 1, rem - sz);
      }
    };
    rec(0, total - 1);
  }

  void emit(const std::vector<const Body *> &parts) {
    Body b;
    std::vector<TermPtr> terms;
    b.size = 1;
    for (const auto *p : parts) {
      terms.push_back(p->term);
      b.size += p->size;
    }
    b.term = t_tuple(std::move(terms));
    if (want_sig_) {
      size_t rows = parts[0]->sig->size();
      b.own.resize(rows);
      for (size_t r = 0; r < rows; ++r) {
        TupleVal tv;
        tv.reserve(parts.size());
        for (const auto *p : parts) tv.push_back((*p->sig)[r]);
        b.own[r] = Value::tuple(std::move(tv));
      }
    }
    out_.push_back(std::move(b));
    out_.back().sig = want_sig_ ? &out_.back().own : nullptr;
  }

  const TermBank &bank_;
  LatticeType lt_;
  bool want_sig_;
  size_t cap_;
  bool tuple_ = false;
  std::deque<Body> out_;
  std::vector<std::unique_ptr<BodySource>> kids_;
  std::vector<std::vector<std::pair<int, std::vector<const Body *>>>> groups_;
  int cur_size_ = 0, max_size_ = -1;
  std::vector<std::vector<int>> assign_;
  size_t a_pos_ = 0;
  std::vector<size_t> odo_;
};

// Bodies of a source that pass a filter, pulled lazily in size order.
struct Survivors {
  BodySource *src = nullptr;
  std::function<bool(const Body &)> keep;
  size_t next = 0;
  bool done = false;
  std::vector<const Body *> list;
  int64_t *examined = nullptr;

  void pull(int max_size) {
    while (!done) {
      const Body *b = src->at(next);
      if (!b) {
        done = true;
        break;
      }
      if (b->size > max_size) break;
      ++next;
      if (examined) ++*examined;
      if (keep(*b)) list.push_back(b);
    }
  }
  int max_listed() const { return list.empty() ? 0 : list.back()->size; }
};

// Pairs (x, y) of survivors in order of size(x) + size(y).
class PairStream {
 public:
  PairStream(Survivors *a, Survivors *b) : a_(a), b_(b) {}

  bool next(const Body *&x, const Body *&y) {
    while (true) {
      if (iy_ < ys_.size()) {
        x = xs_[ix_];
        y = ys_[iy_++];
        return true;
      }
      // Move to the next x for this total, or to the next total.
      if (!advance()) return false;
    }
  }

 private:
  bool advance() {
    while (true) {
      if (total_ == 0) {
        total_ = 2;
        start_total();
      } else if (++ix_ >= xs_.size()) {
        if (a_->done && b_->done && total_ > a_->max_listed() + b_->max_listed())
          return false;
        ++total_;
        start_total();
      }
      if (ix_ < xs_.size()) {
        int want = total_ - xs_[ix_]->size;
        ys_.clear();
        for (const Body *b : b_->list)
          if (b->size == want) ys_.push_back(b);
        iy_ = 0;
        if (!ys_.empty()) return true;
      }
    }
  }

  void start_total() {
    a_->pull(total_ - 1);
    b_->pull(total_ - 1);
    xs_.clear();
    for (const Body *b : a_->list)
      if (b->size < total_) xs_.push_back(b);
    ix_ = 0;
  }

  Survivors *a_, *b_;
  int total_ = 0;
  std::vector<const Body *> xs_, ys_;
  size_t ix_ = 0, iy_ = 0;
};

// ---------------------------------------------------------------- phase 1

struct Phase1 {
  Phase1(const SequentialSpec &spec, const LatticeType &type, int depth,
         const SearchConfig &cfg, CexCache &cache, TypeReport &rep,
         const StopToken *stop, const P1Tree &t)
      : spec(spec), type(type), depth(depth), cfg(cfg), cache(cache), rep(rep),
        stop(stop), t(t) {}

  const SequentialSpec &spec;
  const LatticeType &type;
  int depth;
  const SearchConfig &cfg;
  CexCache &cache;
  TypeReport &rep;
  const StopToken *stop;
  const P1Tree &t;

  bool idem = !spec.flags.non_idempotent;
  std::vector<Field> sig = spec.signature();
  std::vector<std::vector<Value>> op_fields;  // per tree op
  std::vector<int> op_row;                     // idempotent: tree op -> sample row
  std::unique_ptr<TermBank> fbank, qbank;
  std::vector<const BankEntry *> queries;
  std::vector<std::vector<Value>> query_fields;
  Fold fold;
  // Cached traces mapped onto this tree: (node, query).
  std::vector<std::pair<int, int>> replay;
  std::set<std::pair<int, int>> replay_keys;
  size_t cache_seen = 0;
  double started = now_s();

  bool halted() {
    if (stop && stop->expired()) {
      rep.outcome = stop->timed_out() ? "timeout" : "cancelled";
      return true;
    }
    if (cfg.candidate_time_budget_s > 0 &&
        now_s() - started > cfg.candidate_time_budget_s) {
      rep.outcome = "budget";
      return true;
    }
    return false;
  }

  void setup() {
    Universe u2 = Universe::of_size(spec, cfg.universe + cfg.phase2_universe_delta);
    for (const auto &op : t.tree.ops) {
      std::vector<Value> row;
      for (size_t i = 0; i < sig.size(); ++i) row.push_back(field_value(sig[i].sort, op[i]));
      op_fields.push_back(std::move(row));
    }
    Samples fs = make_samples(spec, Role::StateTransition, type, u2,
                              cfg.transition_sample_states, cfg.seed);
    if (idem) {
      auto ops2 = universe_ops(spec, u2);
      std::map<OpValue, int> row_of;
      for (size_t i = 0; i < ops2.size(); ++i) row_of[ops2[i]] = i;
      for (const auto &op : t.tree.ops) op_row.push_back(row_of.at(op));
    }
    GrammarConfig gf;
    gf.depth = depth;
    gf.constants = spec.constants();
    gf.flags = spec.flags;
    gf.role = Role::StateTransition;
    gf.targets = {Sort::lattice(type)};
    fbank = std::make_unique<TermBank>(gf, std::move(fs), type);
    fbank->grow_to(depth);

    GrammarConfig gq = gf;
    gq.role = Role::Query;
    gq.targets = {spec.query_sort};
    Samples qs = make_samples(spec, Role::Query, type, u2, cfg.query_sample_states,
                              cfg.seed);
    qbank = std::make_unique<TermBank>(gq, std::move(qs), type);
    qbank->grow_to(depth);
    queries = qbank->upto(spec.query_sort, depth);
    for (const auto &q : t.tree.queries) {
      std::vector<Value> row;
      for (size_t i = 0; i < spec.query_fields.size(); ++i)
        row.push_back(field_value(spec.query_fields[i].sort, q[i]));
      query_fields.push_back(std::move(row));
    }
  }

  // ----- transition evaluation

  Value step_idem(int ps, const Value &fv) {
    Value v = fold.states[ps];
    join_into(type, v, fv);
    return v;
  }

  Value step_eval(const Term &f, int ps, int op, int node) {
    Env env;
    for (size_t i = 0; i < sig.size(); ++i) env.bind(sig[i].name, op_fields[op][i]);
    env.bind(kStateVar, fold.states[ps]);
    env.bind(kNodeVar, Value::integer(t.tree.node_ids[node]));
    Value fv = eval(f, env);
    if (!validate(type, fv)) throw InvalidCandidate{};
    Value v = fold.states[ps];
    join_into(type, v, fv);
    return v;
  }

  bool check_plain(const Body &b, const Value &init,
                   const std::vector<uint8_t> *mask) {
    try {
      if (idem)
        return fold_check(t, mask, init, fold, [&](int ps, int op, int) {
          return step_idem(ps, (*b.sig)[op_row[op]]);
        });
      return fold_check(t, mask, init, fold, [&](int ps, int op, int node) {
        return step_eval(*b.term, ps, op, node);
      });
    } catch (const InvalidCandidate &) {
      return false;
    }
  }

  bool check_ite(const std::vector<uint8_t> &cond, const Body &x, const Body &y,
                 const TermPtr &term, const Value &init) {
    try {
      if (idem)
        return fold_check(t, nullptr, init, fold, [&](int ps, int op, int) {
          const Body &b = cond[op] ? x : y;
          return step_idem(ps, (*b.sig)[op_row[op]]);
        });
      return fold_check(t, nullptr, init, fold, [&](int ps, int op, int node) {
        return step_eval(*term, ps, op, node);
      });
    } catch (const InvalidCandidate &) {
      return false;
    }
  }

  // ----- queries

  void refresh_replay() {
    if (!cfg.use_cache) return;
    for (auto &r : cache.since(cache_seen)) {
      ++cache_seen;
      if (static_cast<int>(r.log.size()) > t.tree.bound) continue;
      auto qi = t.query_index.find(r.query);
      if (qi == t.query_index.end()) continue;
      int node = 0;
      bool ok = true;
      for (size_t i = 0; i < r.log.size() && ok; ++i) {
        auto oi = t.op_index.find(r.log[i]);
        int64_t nid = i < r.node_assignment.size() ? r.node_assignment[i] : 0;
        auto ni = t.node_index.find(nid);
        if (oi == t.op_index.end() || ni == t.node_index.end()) {
          ok = false;
          break;
        }
        auto c = t.child.find(t.key(node, oi->second, ni->second));
        if (c == t.child.end()) ok = false;
        else node = c->second;
      }
      if (!ok) continue;
      if (replay_keys.insert({node, qi->second}).second)
        replay.emplace_back(node, qi->second);
    }
  }

  bool answer_matches(const Term &q, const Value &state, int qi, const Value &want) {
    Env env;
    env.bind(kStateVar, state);
    for (size_t i = 0; i < spec.query_fields.size(); ++i)
      env.bind(spec.query_fields[i].name, query_fields[qi][i]);
    return eval(q, env) == want;
  }

  // Tries query candidates in size order against the current fold.
  TermPtr find_query() {
    // Distinct reached states with their first (shortest) node.
    std::vector<std::pair<int, int>> table;
    std::vector<uint8_t> seen(fold.states.size(), 0);
    for (size_t n = 0; n < fold.sid.size(); ++n) {
      int s = fold.sid[n];
      if (s >= 0 && !seen[s]) {
        seen[s] = 1;
        table.emplace_back(s, static_cast<int>(n));
      }
    }
    const size_t nq = t.tree.queries.size();
    for (const BankEntry *qe : queries) {
      const Term &q = *qe->term;
      ++rep.query_candidates;
      if (cfg.use_cache) {
        refresh_replay();
        bool rejected = false;
        for (auto it = replay.rbegin(); it != replay.rend(); ++it) {
          auto [node, qi] = *it;
          if (!answer_matches(q, fold.states[fold.sid[node]], qi,
                              t.tree.answers[t.seq(node)][qi])) {
            rejected = true;
            break;
          }
        }
        if (rejected) {
          ++rep.cache_hits;
          continue;
        }
      }
      ++rep.full_checks;
      bool ok = true;
      for (auto [s, node] : table) {
        for (size_t qi = 0; qi < nq && ok; ++qi) {
          const Value &want = t.tree.answers[t.seq(node)][qi];
          if (!answer_matches(q, fold.states[s], static_cast<int>(qi), want)) {
            ok = false;
            CexRecord r{t.tree.log_of(node), t.tree.nodes_of(node),
                        t.tree.queries[qi], want};
            if (cfg.use_cache) cache.append(std::move(r));
          }
        }
        if (!ok) break;
      }
      if (ok) return qe->term;
    }
    return nullptr;
  }

  // ----- driver

  std::optional<CrdtDesign> run() {
    setup();
    const Sort root = Sort::lattice(type);
    bool scalar_root = root.is_scalar() && !root.is_scalar(Scalar::Bool);
    std::vector<std::vector<uint8_t>> seed_vals;  // per seed, per tree op
    std::vector<const BankEntry *> seeds;
    if (!scalar_root) {
      for (const auto &sd : fbank->seeds()) {
        if (sd.term->depth > depth - 1) continue;
        std::vector<uint8_t> v;
        for (size_t op = 0; op < t.tree.ops.size(); ++op) {
          Env env;
          for (size_t i = 0; i < sig.size(); ++i) env.bind(sig[i].name, op_fields[op][i]);
          v.push_back(eval(*sd.term, env).as_bool() ? 1 : 0);
        }
        seeds.push_back(&sd);
        seed_vals.push_back(std::move(v));
      }
    }
    const size_t cap = static_cast<size_t>(cfg.max_transition_candidates) + 1;

    for (const Value &init : enumerate_initial_states(type, spec.constants())) {
      int64_t examined = 0;
      BodySource plain(*fbank, type, depth, idem, cap);
      size_t plain_pos = 0;
      bool plain_done = false;

      // Conditional roots: one survivor pair stream per seed, in seed order.
      struct SeedStream {
        std::vector<uint8_t> mask_a, mask_b;
        std::unique_ptr<BodySource> src_a, src_b;
        Survivors a, b;
        std::unique_ptr<PairStream> pairs;
      };
      std::vector<std::unique_ptr<SeedStream>> streams;
      size_t seed_pos = 0;
      for (size_t si = 0; si < seeds.size(); ++si) {
        auto ss = std::make_unique<SeedStream>();
        const auto &nodes = t.tree.nodes;
        ss->mask_a.assign(nodes.size(), 0);
        ss->mask_b.assign(nodes.size(), 0);
        ss->mask_a[0] = ss->mask_b[0] = 1;
        for (size_t n = 1; n < nodes.size(); ++n) {
          bool c = seed_vals[si][nodes[n].op];
          ss->mask_a[n] = ss->mask_a[nodes[n].parent] && c;
          ss->mask_b[n] = ss->mask_b[nodes[n].parent] && !c;
        }
        ss->src_a = std::make_unique<BodySource>(*fbank, type, depth - 1, idem, cap);
        ss->src_b = std::make_unique<BodySource>(*fbank, type, depth - 1, idem, cap);
        SeedStream *raw = ss.get();
        ss->a.src = raw->src_a.get();
        ss->a.keep = [this, raw, &init](const Body &b) {
          ++rep.transition_candidates;
          bool ok = check_plain(b, init, &raw->mask_a);
          if (!ok) ++rep.prunes;
          return ok;
        };
        ss->b.src = raw->src_b.get();
        ss->b.keep = [this, raw, &init](const Body &b) {
          ++rep.transition_candidates;
          bool ok = check_plain(b, init, &raw->mask_b);
          if (!ok) ++rep.prunes;
          return ok;
        };
        ss->a.examined = ss->b.examined = &examined;
        ss->pairs = std::make_unique<PairStream>(&ss->a, &ss->b);
        streams.push_back(std::move(ss));
      }

      bool turn_plain = true;
      while (true) {
        if (halted()) return std::nullopt;
        if (examined > cfg.max_transition_candidates) {
          rep.outcome = "budget";
          break;
        }
        bool ite_done = seed_pos >= streams.size();
        if (plain_done && ite_done) break;
        bool use_plain = plain_done ? false : (ite_done ? true : turn_plain);
        turn_plain = !turn_plain;

        TermPtr f;
        bool passed = false;
        if (use_plain) {
          const Body *b = plain.at(plain_pos++);
          if (!b) {
            plain_done = true;
            continue;
          }
          ++examined;
          ++rep.transition_candidates;
          passed = check_plain(*b, init, nullptr);
          f = b->term;
        } else {
          SeedStream &ss = *streams[seed_pos];
          const Body *x, *y;
          if (!ss.pairs->next(x, y)) {
            ++seed_pos;
            continue;
          }
          if (x->sig && y->sig && *x->sig == *y->sig) continue;
          ++examined;
          ++rep.transition_candidates;
          f = t_ite(seeds[seed_pos]->term, x->term, y->term);
          passed = check_ite(seed_vals[seed_pos], *x, *y, f, init);
        }
        if (!passed) {
          ++rep.prunes;
          continue;
        }
        TermPtr q = find_query();
        if (!q) continue;
        ++rep.phase1_passes;
        CrdtDesign d;
        d.name = spec.name + "-" + design_class(type);
        d.spec = spec.name;
        d.state_type = type;
        d.init = init;
        d.f_star = f;
        d.query_star = q;
        d.flags = spec.flags;
        d.provenance.grammar_depth = depth;
        return d;
      }
    }
    if (rep.outcome.empty()) rep.outcome = "exhausted";
    return std::nullopt;
  }
};

std::optional<CrdtDesign> phase1_with(const SequentialSpec &spec,
                                      const LatticeType &type, int depth,
                                      int log_bound, const SearchConfig &cfg,
                                      CexCache &cache, TypeReport &rep,
                                      const StopToken *stop, TreeStore &store) {
  auto tree = store.phase1(cfg.universe, log_bound);
  Phase1 p(spec, type, depth, cfg, cache, rep, stop, *tree);
  return p.run();
}

void cache_counterexample(CexCache *cache, const Verdict &v) {
  if (!cache || !v.cex) return;
  cache->append({v.cex->log, v.cex->node_assignment, v.cex->query, v.cex->expected});
}

std::optional<CrdtDesign> synth_type_with(const SequentialSpec &spec,
                                          const LatticeType &type, int depth,
                                          const SearchConfig &cfg, CexCache &cache,
                                          TypeReport &rep, const StopToken *stop,
                                          TreeStore &store) {
  auto t0 = SteadyClock::now();
  rep.state_type = type;
  rep.depth = depth;
  int p1 = cfg.initial_log_bound;
  int p2 = p1 + cfg.phase2_log_bound_delta;
  const int u2 = cfg.universe + cfg.phase2_universe_delta;
  std::optional<CrdtDesign> out;
  while (true) {
    rep.final_log_bound = p1;
    rep.outcome.clear();
    auto d = phase1_with(spec, type, depth, p1, cfg, cache, rep, stop, store);
    if (!d) break;
    ++rep.phase2_checks;
    auto tree = store.phase2(u2, p2, cfg.phase2_budget);
    Verdict v = check_tree(spec, *d, *tree, cfg.phase2_budget);
    if (v.kind == VerdictKind::Pass) {
      d->provenance = {depth, p2, u2};
      rep.outcome = "found";
      out = std::move(d);
      break;
    }
    if (v.kind == VerdictKind::Inconclusive)
      spdlog::warn("phase 2 inconclusive for {} at bound {}: {}", to_string(type),
                   p2, v.reason);
    if (cfg.use_cache) cache_counterexample(&cache, v);
    ++rep.escalations;
    ++p1;
    ++p2;
    if (p1 > cfg.max_log_bound) {
      rep.outcome = "ceiling";
      break;
    }
  }
  rep.ms = std::chrono::duration<double, std::milli>(SteadyClock::now() - t0).count();
  return out;
}

unsigned worker_count(const SearchConfig &cfg) {
  if (cfg.workers > 0) return cfg.workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

bool references_component(const Term &t, int i) {
  if (t.op == Op::TupleGet && t.index == i && t.args[0]->op == Op::Var &&
      t.args[0]->name == kStateVar)
    return true;
  for (const auto &a : t.args)
    if (references_component(*a, i)) return true;
  return false;
}

}  // namespace

// ---------------------------------------------------------------- public

json SearchConfig::to_json() const {
  json j = {{"max_depth", max_depth},
            {"universe", universe},
            {"initial_log_bound", initial_log_bound},
            {"max_log_bound", max_log_bound},
            {"phase2_log_bound_delta", phase2_log_bound_delta},
            {"phase2_universe_delta", phase2_universe_delta},
            {"workers", workers},
            {"deterministic", deterministic},
            {"use_cache", use_cache},
            {"max_state_size", max_state_size},
            {"max_transition_candidates", max_transition_candidates},
            {"candidate_time_budget_s", candidate_time_budget_s},
            {"timeout_s", timeout_s},
            {"seed", seed}};
  j["hint_state"] = hint_state ? lattice_to_json(*hint_state) : json(nullptr);
  return j;
}

bool CexCache::append(CexRecord r) {
  std::lock_guard<std::mutex> lk(mu_);
  if (!keys_.insert({r.log, r.node_assignment, r.query}).second) return false;
  recs_.push_back(std::move(r));
  return true;
}

std::vector<CexRecord> CexCache::since(size_t from) const {
  std::lock_guard<std::mutex> lk(mu_);
  if (from >= recs_.size()) return {};
  return {recs_.begin() + from, recs_.end()};
}

size_t CexCache::size() const {
  std::lock_guard<std::mutex> lk(mu_);
  return recs_.size();
}

void SearchReport::add(const TypeReport &t) {
  transition_candidates += t.transition_candidates;
  query_candidates += t.query_candidates;
  prunes += t.prunes;
  full_checks += t.full_checks;
  cache_hits += t.cache_hits;
  phase1_passes += t.phase1_passes;
  phase2_checks += t.phase2_checks;
  escalations += t.escalations;
  ++types_explored;
  types.push_back(t);
}

json report_to_json(const SequentialSpec &spec, const SearchReport &r,
                    const SearchConfig &cfg) {
  json designs = json::array();
  for (const auto &d : r.designs) designs.push_back(design_to_json(d));
  json types = json::array();
  for (const auto &t : r.types)
    types.push_back({{"state_type", to_string(t.state_type)},
                     {"depth", t.depth},
                     {"outcome", t.outcome},
                     {"transition_candidates", t.transition_candidates},
                     {"query_candidates", t.query_candidates},
                     {"prunes", t.prunes},
                     {"full_checks", t.full_checks},
                     {"cache_hits", t.cache_hits},
                     {"phase1_passes", t.phase1_passes},
                     {"phase2_checks", t.phase2_checks},
                     {"escalations", t.escalations},
                     {"final_log_bound", t.final_log_bound},
                     {"ms", t.ms}});
  return {{"format_version", 1},
          {"spec", spec.name},
          {"found", r.found},
          {"timed_out", r.timed_out},
          {"reason", r.reason},
          {"designs", designs},
          {"config", cfg.to_json()},
          {"totals",
           {{"transition_candidates", r.transition_candidates},
            {"query_candidates", r.query_candidates},
            {"prunes", r.prunes},
            {"full_checks", r.full_checks},
            {"cache_hits", r.cache_hits},
            {"phase1_passes", r.phase1_passes},
            {"phase2_checks", r.phase2_checks},
            {"escalations", r.escalations},
            {"cache_size", r.cache_size},
            {"types_explored", r.types_explored},
            {"wall_ms", r.wall_ms}}},
          {"types", types},
          {"notes", r.notes}};
}

bool StopToken::timed_out() const { return deadline > 0 && now_s() > deadline; }

bool StopToken::expired() const {
  if (stop && stop->load(std::memory_order_relaxed)) return true;
  if (best && best->load(std::memory_order_relaxed) < index) return true;
  return timed_out();
}

std::optional<CrdtDesign> synth_for_state(const SequentialSpec &spec,
                                          const LatticeType &state_type,
                                          int depth, int log_bound,
                                          const SearchConfig &cfg,
                                          CexCache &cache, TypeReport *report,
                                          const StopToken *stop) {
  check_well_formed(state_type);
  TreeStore store(spec);
  TypeReport local;
  TypeReport &rep = report ? *report : local;
  rep.state_type = state_type;
  rep.depth = depth;
  rep.final_log_bound = log_bound;
  return phase1_with(spec, state_type, depth, log_bound, cfg, cache, rep, stop, store);
}

Verdict phase2_check(const SequentialSpec &spec, const CrdtDesign &design,
                     int log_bound, const SearchConfig &cfg, CexCache *cache) {
  Universe u = Universe::of_size(spec, cfg.universe + cfg.phase2_universe_delta);
  Verdict v = check_bounded(spec, design, u, log_bound, cfg.phase2_budget);
  if (v.kind == VerdictKind::Fail) cache_counterexample(cache, v);
  return v;
}

std::optional<CrdtDesign> synth_type(const SequentialSpec &spec,
                                     const LatticeType &state_type, int depth,
                                     const SearchConfig &cfg, CexCache &cache,
                                     TypeReport &report, const StopToken *stop) {
  check_well_formed(state_type);
  TreeStore store(spec);
  return synth_type_with(spec, state_type, depth, cfg, cache, report, stop, store);
}

std::vector<LatticeType> candidate_state_types(const SequentialSpec &spec,
                                               int depth,
                                               const SearchConfig &cfg) {
  if (cfg.hint_state) return {*cfg.hint_state};
  return enumerate_state_types(depth, relevant_scalars(spec), cfg.max_state_size);
}

std::string design_class(const LatticeType &t) {
  switch (t.kind) {
    case LKind::OrBool:
    case LKind::NegBool:
    case LKind::MaxInt:
      return "scalar";
    case LKind::LSet:
      return "set";
    case LKind::LexProduct:
      return "lex";
    case LKind::LMap:
      return "map";
    case LKind::FreeTuple:
      return "tuple";
  }
  return "?";
}

std::vector<int> dead_components(const SequentialSpec &spec, const CrdtDesign &d) {
  std::vector<int> out;
  const auto &st = d.state_type;
  if (st.kind != LKind::FreeTuple && st.kind != LKind::LexProduct) return out;
  const int k = static_cast<int>(st.kids.size());
  // A component is redundant when, over the states reached by small logs,
  // it is determined by the remaining components.
  LogTree tree = build_log_tree(spec, Universe::of_size(spec, 2), 3);
  std::vector<Value> states(tree.nodes.size());
  states[0] = d.init;
  for (size_t n = 1; n < tree.nodes.size(); ++n) {
    const auto &nd = tree.nodes[n];
    const Value &prev = states[nd.parent];
    states[n] = join(st, prev, eval_f_star(spec, d, tree.ops[nd.op], prev,
                                           tree.node_ids[nd.node]));
  }
  std::vector<uint8_t> moved(k, 0);
  for (int i = 0; i < k; ++i) {
    std::unordered_map<Value, Value, ValueHash> rest_to_i;
    for (const auto &v : states) {
      TupleVal rest = v.as_tuple();
      Value own = rest[i];
      rest.erase(rest.begin() + i);
      auto [it, fresh] = rest_to_i.emplace(Value::tuple(std::move(rest)), own);
      if (!fresh && it->second != own) {
        moved[i] = 1;
        break;
      }
    }
  }
  for (int i = 0; i < k; ++i) {
    bool unread = st.kind == LKind::FreeTuple &&
                  !references_component(*d.query_star, i) &&
                  !references_component(*d.f_star, i);
    if (!moved[i] || unread) out.push_back(i);
  }
  return out;
}

namespace {

struct Pool {
  const SequentialSpec &spec;
  const SearchConfig &cfg;
  CexCache &cache;
  TreeStore &store;
  double deadline;
};

// First success at one depth. Deterministic mode returns the lowest index
// that succeeds; racing mode returns whichever finishes first.
std::optional<std::pair<int64_t, CrdtDesign>> run_first(
    Pool &pool, const std::vector<LatticeType> &types, int depth,
    std::vector<TypeReport> &reports, bool &timed_out) {
  std::atomic<int64_t> next{0};
  std::atomic<int64_t> best{INT64_MAX};
  std::atomic<bool> stop{false};
  std::mutex mu;
  std::optional<std::pair<int64_t, CrdtDesign>> winner;
  std::vector<std::optional<TypeReport>> reps(types.size());
  auto work = [&] {
    while (true) {
      int64_t i = next.fetch_add(1);
      if (i >= static_cast<int64_t>(types.size()) || stop.load()) return;
      if (best.load() < i) continue;
      StopToken tok;
      tok.stop = &stop;
      tok.best = pool.cfg.deterministic ? &best : nullptr;
      tok.index = i;
      tok.deadline = pool.deadline;
      TypeReport rep;
      auto d = synth_type_with(pool.spec, types[i], depth, pool.cfg, pool.cache, rep,
                               &tok, pool.store);
      std::lock_guard<std::mutex> lk(mu);
      reps[i] = rep;
      if (rep.outcome == "timeout") stop = true;
      if (d && i < best.load()) {
        best = i;
        winner = {i, *d};
        if (!pool.cfg.deterministic) stop = true;
      }
    }
  };
  unsigned n = std::min<unsigned>(worker_count(pool.cfg), types.size());
  std::vector<std::thread> th;
  for (unsigned w = 0; w + 1 < n; ++w) th.emplace_back(work);
  work();
  for (auto &x : th) x.join();
  for (auto &r : reps)
    if (r) {
      if (r->outcome == "timeout") timed_out = true;
      reports.push_back(*r);
    }
  return winner;
}

}  // namespace

SearchReport search(const SequentialSpec &spec, const SearchConfig &cfg) {
  auto t0 = SteadyClock::now();
  SearchReport out;
  CexCache cache;
  TreeStore store(spec);
  Pool pool{spec, cfg, cache, store, cfg.timeout_s > 0 ? now_s() + cfg.timeout_s : 0};
  out.notes.push_back(fmt::format(
      "phase-2 growth replaces invariant depth: universe +{}, log bound +{}, +1 per "
      "escalation",
      cfg.phase2_universe_delta, cfg.phase2_log_bound_delta));
  for (int depth = 2; depth <= cfg.max_depth && !out.found; ++depth) {
    auto types = candidate_state_types(spec, depth, cfg);
    spdlog::info("depth {}: {} state types", depth, types.size());
    std::vector<TypeReport> reps;
    bool timed_out = false;
    auto w = run_first(pool, types, depth, reps, timed_out);
    for (const auto &r : reps) out.add(r);
    if (w) {
      out.found = true;
      out.designs.push_back(w->second);
    } else if (timed_out) {
      out.timed_out = true;
      out.reason = "timeout";
      break;
    }
  }
  if (!out.found && out.reason.empty())
    out.reason = fmt::format("no design up to depth {}", cfg.max_depth);
  out.cache_size = cache.size();
  out.wall_ms = std::chrono::duration<double, std::milli>(SteadyClock::now() - t0).count();
  return out;
}

SearchReport search_all(const SequentialSpec &spec, const SearchConfig &cfg, int k) {
  if (k < 1) throw std::invalid_argument("search_all needs k >= 1");
  auto t0 = SteadyClock::now();
  SearchReport out;
  CexCache cache;
  TreeStore store(spec);
  Pool pool{spec, cfg, cache, store, cfg.timeout_s > 0 ? now_s() + cfg.timeout_s : 0};
  std::set<std::string> filled;
  for (int depth = 2; depth <= cfg.max_depth; ++depth) {
    if (static_cast<int>(out.designs.size()) >= k) break;
    std::vector<LatticeType> types;
    for (auto &t : candidate_state_types(spec, depth, cfg))
      if (!filled.count(design_class(t))) types.push_back(t);
    // Results are accepted in index order; a class is filled by its lowest
    // index success, so higher indices of that class are skipped.
    std::vector<std::optional<TypeReport>> reps(types.size());
    std::vector<std::optional<CrdtDesign>> found(types.size());
    std::vector<uint8_t> finished(types.size(), 0);
    std::map<std::string, int64_t> class_best;
    std::atomic<int64_t> next{0};
    std::atomic<bool> stop{false};
    std::mutex mu;
    bool timed_out = false;
    // Number of designs decided so far from a finished prefix.
    auto decided = [&]() {
      int count = static_cast<int>(out.designs.size());
      std::set<std::string> seen = filled;
      for (size_t i = 0; i < types.size(); ++i) {
        if (!finished[i]) return count;
        if (found[i] && !seen.count(design_class(types[i]))) {
          seen.insert(design_class(types[i]));
          ++count;
        }
      }
      return count;
    };
    auto work = [&] {
      while (true) {
        int64_t i = next.fetch_add(1);
        if (i >= static_cast<int64_t>(types.size()) || stop.load()) return;
        std::string cls = design_class(types[i]);
        {
          std::lock_guard<std::mutex> lk(mu);
          auto it = class_best.find(cls);
          if (it != class_best.end() && it->second < i) {
            finished[i] = 1;
            continue;
          }
        }
        StopToken tok;
        tok.stop = &stop;
        tok.deadline = pool.deadline;
        tok.index = i;
        TypeReport rep;
        auto d = synth_type_with(spec, types[i], depth, cfg, cache, rep, &tok, store);
        if (d && !dead_components(spec, *d).empty()) {
          rep.outcome = "dead-component";
          d.reset();
        }
        std::lock_guard<std::mutex> lk(mu);
        reps[i] = rep;
        found[i] = d;
        finished[i] = 1;
        if (rep.outcome == "timeout") {
          timed_out = true;
          stop = true;
        }
        if (d) {
          auto it = class_best.find(cls);
          if (it == class_best.end() || i < it->second) class_best[cls] = i;
        }
        if (decided() >= k) stop = true;
      }
    };
    unsigned n = std::min<unsigned>(worker_count(cfg), std::max<size_t>(1, types.size()));
    std::vector<std::thread> th;
    for (unsigned w = 0; w + 1 < n; ++w) th.emplace_back(work);
    work();
    for (auto &x : th) x.join();
    for (auto &r : reps)
      if (r) out.add(*r);
    for (size_t i = 0; i < types.size(); ++i) {
      if (static_cast<int>(out.designs.size()) >= k) break;
      if (!finished[i]) break;
      std::string cls = design_class(types[i]);
      if (found[i] && !filled.count(cls)) {
        filled.insert(cls);
        out.designs.push_back(*found[i]);
      }
    }
    if (timed_out) {
      out.timed_out = true;
      out.reason = "timeout";
      break;
    }
  }
  out.found = !out.designs.empty();
  if (!out.found && out.reason.empty())
    out.reason = fmt::format("no design up to depth {}", cfg.max_depth);
  out.cache_size = cache.size();
  out.wall_ms = std::chrono::duration<double, std::milli>(SteadyClock::now() - t0).count();
  return out;
}

}  // namespace katalite
