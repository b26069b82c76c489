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

#ifndef KATALITE_SYNTHESIZER_HPP_
#define KATALITE_SYNTHESIZER_HPP_

#include <atomic>
#include <cstdint>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "katalite/grammar.hpp"

namespace katalite {

struct SearchConfig {
  int max_depth = 4;
  int universe = 3;  // phase-1 universe size N
  int initial_log_bound = 2;
  int max_log_bound = 5;  // phase-1 escalation ceiling
  int phase2_log_bound_delta = 2;
  int phase2_universe_delta = 1;
  int workers = 0;  // 0: hardware concurrency
  bool deterministic = true;
  bool use_cache = true;
  int max_state_size = 7;
  // Transition candidates examined per (state type, depth, initial state).
  int64_t max_transition_candidates = 300'000;
  double candidate_time_budget_s = 0;  // per state type and depth; 0 = none
  double timeout_s = 0;                // whole search; 0 = none
  uint64_t seed = 1;                   // sample states for deduplication
  int query_sample_states = 64;
  int transition_sample_states = 16;
  int64_t phase2_budget = kDefaultCheckBudget;
  std::optional<LatticeType> hint_state;

  json to_json() const;
};

struct CexRecord {
  std::vector<OpValue> log;
  std::vector<int64_t> node_assignment;
  QueryValue query;
  Value expected;
  bool operator==(const CexRecord &) const = default;
};

// Append-only, shared by all workers of a search.
class CexCache {
 public:
  // Returns false for duplicates.
  bool append(CexRecord r);
  // Records [from, size()).
  std::vector<CexRecord> since(size_t from) const;
  size_t size() const;

 private:
  mutable std::mutex mu_;
  std::vector<CexRecord> recs_;
  std::set<std::tuple<std::vector<OpValue>, std::vector<int64_t>, QueryValue>> keys_;
};

struct TypeReport {
  LatticeType state_type;
  int depth = 0;
  std::string outcome;  // found / exhausted / budget / ceiling / cancelled / timeout
  int64_t transition_candidates = 0;
  int64_t query_candidates = 0;
  int64_t prunes = 0;        // transitions rejected by state distinguishability
  int64_t full_checks = 0;   // query candidates checked against the whole table
  int64_t cache_hits = 0;    // query candidates rejected by a cached trace
  int64_t phase1_passes = 0;
  int64_t phase2_checks = 0;
  int escalations = 0;
  int final_log_bound = 0;
  double ms = 0;
};

struct SearchReport {
  std::vector<CrdtDesign> designs;
  bool found = false;
  bool timed_out = false;
  std::string reason;
  int64_t transition_candidates = 0;
  int64_t query_candidates = 0;
  int64_t prunes = 0;
  int64_t full_checks = 0;
  int64_t cache_hits = 0;
  int64_t phase1_passes = 0;
  int64_t phase2_checks = 0;
  int64_t escalations = 0;
  size_t cache_size = 0;
  int types_explored = 0;
  double wall_ms = 0;
  std::vector<TypeReport> types;
  std::vector<std::string> notes;

  void add(const TypeReport &t);
};

json report_to_json(const SequentialSpec &spec, const SearchReport &r,
                    const SearchConfig &cfg);

// Cooperative stop signal shared by the workers of one search.
struct StopToken {
  const std::atomic<bool> *stop = nullptr;
  // Deterministic mode: give up once a lower-indexed type has succeeded.
  const std::atomic<int64_t> *best = nullptr;
  int64_t index = 0;
  double deadline = 0;  // steady-clock seconds; 0 = none
  bool timed_out() const;
  bool expired() const;
};

// Phase 1 for one state type at one grammar depth: the first (init, f*,
// query*) that matches the specification on every log of the phase-1 tree.
// New counterexamples are appended to the cache.
std::optional<CrdtDesign> synth_for_state(const SequentialSpec &spec,
                                          const LatticeType &state_type,
                                          int depth, int log_bound,
                                          const SearchConfig &cfg,
                                          CexCache &cache,
                                          TypeReport *report = nullptr,
                                          const StopToken *stop = nullptr);

// Phase 2: enlarged universe and log bound. A failing trace is cached.
Verdict phase2_check(const SequentialSpec &spec, const CrdtDesign &design,
                     int log_bound, const SearchConfig &cfg, CexCache *cache);

// Phase 1 plus phase 2 with escalation, for one state type and depth.
std::optional<CrdtDesign> synth_type(const SequentialSpec &spec,
                                     const LatticeType &state_type, int depth,
                                     const SearchConfig &cfg, CexCache &cache,
                                     TypeReport &report,
                                     const StopToken *stop = nullptr);

// State types considered at a depth, in exploration order.
std::vector<LatticeType> candidate_state_types(const SequentialSpec &spec,
                                               int depth,
                                               const SearchConfig &cfg);

SearchReport search(const SequentialSpec &spec, const SearchConfig &cfg);

// Up to k verified designs with pairwise distinct top-level state shapes
// (scalar, set, lexicographic pair, map, tuple).
SearchReport search_all(const SequentialSpec &spec, const SearchConfig &cfg,
                        int k);

// Top-level shape used by search_all.
std::string design_class(const LatticeType &t);

// Product components whose value on states reached by small logs is a
// function of the other components, plus FreeTuple components never
// projected by f* or query*.
std::vector<int> dead_components(const SequentialSpec &spec, const CrdtDesign &d);

}  // namespace katalite

#endif  // KATALITE_SYNTHESIZER_HPP_
