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

#ifndef KATALITE_GRAMMAR_HPP_
#define KATALITE_GRAMMAR_HPP_

#include <climits>
#include <cstdint>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "katalite/verifier.hpp"

namespace katalite {

enum class Role { StateTransition, Query, InitialState };
const char *role_name(Role r);

struct GrammarConfig {
  int depth = 2;
  std::vector<int64_t> constants = {0, 1};
  Flags flags;
  Role role = Role::StateTransition;
  // Sorts to enumerate besides those reachable from the variables.
  std::vector<Sort> targets;
  // Candidates generated per sort and level before the level is cut short.
  int64_t level_cap = 400'000;
};

// ------------------------------------------------------------ state types

// Scalar sorts that may appear inside candidate state types: the sorts of
// every op/query field, of the sequential state and answer, plus NodeID in
// non-idempotent mode.
std::vector<Scalar> relevant_scalars(const SequentialSpec &spec);

// Every top-level lattice type with depth <= depth and size <= max_size,
// ordered by (size, structure). FreeTuple elements are kept in
// nondecreasing order, so permuted tuples are emitted once.
std::vector<LatticeType> enumerate_state_types(int depth,
                                               const std::vector<Scalar> &sorts,
                                               int max_size = INT_MAX);

// Bottom first, then leaf variants (Booleans, small integer literals);
// sets and maps only empty.
std::vector<Value> enumerate_initial_states(const LatticeType &t,
                                            const std::vector<int64_t> &constants);

// Deterministic pseudo-random states drawn from the universe's domains;
// bottom first.
std::vector<Value> sample_states(const LatticeType &t, const Universe &u,
                                 int count, uint64_t seed = 1);

// ------------------------------------------------------------ terms

// Evaluation points for observational deduplication: one row per point,
// values aligned with vars.
struct Samples {
  SortEnv vars;
  std::vector<std::vector<Value>> rows;
};

// Idempotent transitions: every op of the universe (exact). Non-idempotent
// transitions: ops x node ids x sampled states. Queries: sampled states x
// every query of the universe.
Samples make_samples(const SequentialSpec &spec, Role role,
                     const LatticeType &state_type, const Universe &u,
                     int n_states, uint64_t seed = 1);

struct BankEntry {
  TermPtr term;
  std::vector<Value> sig;  // value at every sample row
};

// Bottom-up enumerator. Terms are built level by level (level = depth) and
// a term is kept only if its values on the samples differ from every term
// kept before it; within a level smaller terms win.
class TermBank {
 public:
  // state_type is required for Query and non-idempotent StateTransition.
  TermBank(GrammarConfig cfg, Samples samples,
           std::optional<LatticeType> state_type);

  void grow_to(int depth);
  int depth() const { return depth_; }
  bool truncated() const { return truncated_; }

  const std::vector<Sort> &sorts() const { return sorts_; }
  bool has_sort(const Sort &s) const { return index_.count(s) != 0; }
  // Entries of the sort with depth <= d, sorted by (size, generation order).
  std::vector<const BankEntry *> upto(const Sort &s, int d) const;
  const std::vector<BankEntry> &entries(const Sort &s) const;
  // Conditions allowed in conditionals.
  const std::vector<BankEntry> &seeds() const { return seeds_; }
  const Samples &samples() const { return samples_; }
  size_t total_terms() const;

  // Signature of an arbitrary term on the samples (used for root terms).
  std::vector<Value> signature(const Term &t) const;

 private:
  struct SortBank {
    std::vector<BankEntry> entries;
    std::vector<int> level_end;  // level_end[k] = #entries with depth <= k
    std::unordered_map<size_t, std::vector<int>> seen;
  };
  struct Cand {
    TermPtr term;
    std::vector<Value> sig;
  };

  SortBank &bank(const Sort &s) { return banks_[index_.at(s)]; }
  const SortBank &bank(const Sort &s) const { return banks_[index_.at(s)]; }
  void add_sort(const Sort &s);
  void collect_sorts();
  void build_leaves();
  void build_seeds();
  void build_level(int k);
  bool insert(SortBank &b, Cand c);
  std::vector<Value> const_sig(const Value &v) const;
  std::vector<Value> apply(const Term &node,
                           const std::vector<const std::vector<Value> *> &kids) const;
  bool sig_valid(const LatticeType &lt, const std::vector<Value> &sig) const;

  GrammarConfig cfg_;
  Samples samples_;
  std::optional<LatticeType> state_type_;
  std::vector<Sort> sorts_;
  std::map<Sort, size_t> index_;
  std::vector<SortBank> banks_;
  std::vector<BankEntry> seeds_;
  // Non-idempotent transitions read the state only through these paths.
  std::vector<BankEntry> state_paths_;
  int depth_ = 0;
  bool truncated_ = false;
};

// Conditions for top-level conditionals: Boolean inputs, equalities of
// integer-like inputs with literals, and equalities between inputs of the
// same sort. Deduplicated on the samples; constant conditions and
// complements of earlier conditions are dropped.
std::vector<BankEntry> seed_conditions(const GrammarConfig &cfg,
                                       const Samples &samples);

// Convenience: every term of result_sort with depth <= cfg.depth in size
// order (observationally deduplicated on the given samples).
std::vector<TermPtr> enumerate_terms(const GrammarConfig &cfg,
                                     const Samples &samples,
                                     const Sort &result_sort,
                                     std::optional<LatticeType> state_type);

// Syntactic membership: does the term respect the production rules for the
// role (conditional placement, tuple construction, state access in
// non-idempotent transitions, reductions only in queries) within cfg.depth?
bool derivable(const Term &t, const GrammarConfig &cfg, const SortEnv &env,
               const Sort &result_sort);

}  // namespace katalite

#endif  // KATALITE_GRAMMAR_HPP_
