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

#ifndef KATALITE_VERIFIER_HPP_
#define KATALITE_VERIFIER_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "katalite/seqspec.hpp"

namespace katalite {

struct Provenance {
  int grammar_depth = 0;
  int verified_log_bound = 0;
  int verified_universe = 0;
  bool operator==(const Provenance &) const = default;
};

struct CrdtDesign {
  std::string name;
  std::string spec;  // benchmark / spec name the design targets
  LatticeType state_type;
  Value init;
  TermPtr f_star;
  TermPtr query_star;
  Flags flags;
  Provenance provenance;
};

// Typing environments for the synthesized functions.
SortEnv f_star_env(const SequentialSpec &spec, const LatticeType &state);
SortEnv query_star_env(const SequentialSpec &spec, const LatticeType &state);

// Typechecks f*/query* and validates init. Throws SpecError.
void validate_design(const SequentialSpec &spec, const CrdtDesign &d);

json design_to_json(const CrdtDesign &d);
CrdtDesign design_from_json(const json &j);
CrdtDesign load_design(const std::string &path);
std::string design_pretty(const SequentialSpec &spec, const CrdtDesign &d);

// Finite domains standing in for solver quantifiers.
struct Universe {
  std::vector<int64_t> opaque_values;
  std::vector<int64_t> clock_values;
  std::vector<int64_t> node_ids;
  std::vector<int64_t> int_values;
  std::map<std::string, std::vector<int64_t>> enum_values;  // per field
  std::vector<int64_t> enum_default;  // fields without an explicit domain
  int size = 0;                       // the N this universe was built from

  // N opaque values 1..N, clocks 1..N, node ids 0..N-2 (at least one),
  // ints 0..N-1; enum fields use the spec's domain or {0,1} plus constants.
  static Universe of_size(const SequentialSpec &spec, int n);
  const std::vector<int64_t> &domain(const Field &f) const;
  json to_json() const;
};

// All precondition-valid ops / all query tuples, in lexicographic order.
std::vector<OpValue> universe_ops(const SequentialSpec &spec, const Universe &u);
std::vector<QueryValue> universe_queries(const SequentialSpec &spec,
                                         const Universe &u);

// Returns a violating (a, b, c) triple if the effective order is not
// transitive over the universe's valid ops.
std::optional<std::vector<OpValue>> check_order_transitive(
    const SequentialSpec &spec, const Universe &u);

struct Counterexample {
  std::vector<OpValue> log;
  std::vector<int64_t> node_assignment;
  int prefix_index = 0;  // the mismatch is observed after log[0..prefix_index)
  QueryValue query;
  Value expected;
  Value actual;
};

enum class VerdictKind { Pass, Fail, Inconclusive };
const char *verdict_name(VerdictKind k);

struct Verdict {
  VerdictKind kind = VerdictKind::Pass;
  std::optional<Counterexample> cex;
  int log_bound = 0;
  int universe = 0;
  int64_t checks = 0;  // prefix-query comparisons performed
  std::string reason;  // Inconclusive / error detail
};

inline constexpr int64_t kDefaultCheckBudget = 5'000'000;

bool log_in_order(const SequentialSpec &spec, const std::vector<OpValue> &log);

// In non-idempotent mode node_assignment supplies the nodeID per op; it may
// be empty in idempotent mode.
Value fold_crdt(const SequentialSpec &spec, const CrdtDesign &d,
                const std::vector<OpValue> &log,
                const std::vector<int64_t> &node_assignment);

Value eval_f_star(const SequentialSpec &spec, const CrdtDesign &d,
                  const OpValue &op, const Value &state, int64_t node);
Value eval_query_star(const SequentialSpec &spec, const CrdtDesign &d,
                      const Value &state, const QueryValue &q);

// Every in-order, valid log of length <= bound, laid out breadth first so
// that the first failing node yields a shortest counterexample. Node 0 is
// the empty log. Expected answers are precomputed per node.
struct LogTree {
  struct Node {
    int32_t parent = -1;
    int32_t op = -1;     // index into ops
    int32_t node = 0;    // index into node_ids
    int32_t depth = 0;
    int32_t seq = 0;     // index into seq_states
  };
  std::vector<OpValue> ops;
  std::vector<QueryValue> queries;
  std::vector<int64_t> node_ids;  // {0} in idempotent mode
  std::vector<Node> nodes;
  std::vector<Value> seq_states;              // interned sequential states
  std::vector<std::vector<Value>> answers;    // per seq state, per query
  std::vector<std::vector<uint8_t>> may_follow;  // [a][b]: b allowed after a
  int bound = 0;
  int universe = 0;
  bool truncated = false;  // hit max_nodes

  std::vector<OpValue> log_of(int node) const;
  std::vector<int64_t> nodes_of(int node) const;
};

LogTree build_log_tree(const SequentialSpec &spec, const Universe &u,
                       int log_bound, int64_t max_nodes = 20'000'000);

// Replays a design against a prebuilt tree.
Verdict check_tree(const SequentialSpec &spec, const CrdtDesign &d,
                   const LogTree &tree, int64_t budget = kDefaultCheckBudget);

Verdict check_bounded(const SequentialSpec &spec, const CrdtDesign &d,
                      const Universe &u, int log_bound,
                      int64_t budget = kDefaultCheckBudget);

// Re-evaluates one counterexample; true if it still exhibits a mismatch at
// the recorded prefix (the stored actual value is refreshed).
bool replay_fails(const SequentialSpec &spec, const CrdtDesign &d,
                  Counterexample &cex);

// Checks every permutation of every log; idempotent designs only.
bool check_permutation_invariance(const SequentialSpec &spec,
                                  const CrdtDesign &d,
                                  const std::vector<std::vector<OpValue>> &logs);

// Greedy subsequence removal keeping the log in-order, valid and failing.
Counterexample minimize_counterexample(const SequentialSpec &spec,
                                       const CrdtDesign &d,
                                       const Counterexample &cex);

json counterexample_to_json(const SequentialSpec &spec, const Counterexample &c);
json verdict_to_json(const SequentialSpec &spec, const Verdict &v);

}  // namespace katalite

#endif  // KATALITE_VERIFIER_HPP_
