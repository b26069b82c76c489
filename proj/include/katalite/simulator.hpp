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

#ifndef KATALITE_SIMULATOR_HPP_
#define KATALITE_SIMULATOR_HPP_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "katalite/verifier.hpp"

namespace katalite {

class ScheduleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Replica {
  int64_t node_id = 0;
  Value state;
  int64_t clock = 0;  // Lamport clock
  std::vector<uint8_t> seen;  // per Apply event id: delivered here
};

struct Event {
  enum class Kind { Apply, Gossip, QueryAll };
  Kind kind = Kind::Apply;
  int replica = 0;  // Apply target
  int from = 0, to = 0;
  OpValue args;      // user fields only; the timestamp is stamped on Apply
  QueryValue query;  // QueryAll

  static Event apply(int replica, OpValue args);
  static Event gossip(int from, int to);
  static Event query_all(QueryValue q);
};

struct Schedule {
  std::string name;
  int replicas = 1;
  uint64_t seed = 0;
  std::vector<Event> events;
};

struct QueryRow {
  size_t event = 0;
  QueryValue query;
  std::vector<Value> answers;  // per replica
  // Sequential answer over the ops each replica has seen, when an in-order
  // arrangement of those ops exists.
  std::vector<std::optional<Value>> expected;
};

struct Witness {
  // "state": final states differ; "answer": replicas that saw the same ops
  // answer differently; "spec": an answer differs from the sequential one;
  // "monotonicity": a replica's state decreased.
  std::string kind;
  size_t event = 0;
  int a = 0, b = -1;
  std::string detail;
};

struct SimReport {
  LatticeType state_type;
  std::vector<Replica> replicas;
  std::vector<OpValue> applied;  // stamped ops, in Apply order
  std::vector<QueryRow> queries;
  std::vector<Witness> witnesses;
  bool converged = false;
};

std::vector<Replica> initial_replicas(const CrdtDesign &d, int n);

// Applies one event to the replica set. Throws ScheduleError on an invalid
// target or an op whose precondition fails.
void step(const SequentialSpec &spec, const CrdtDesign &d,
          std::vector<Replica> &replicas, const Event &e,
          std::vector<OpValue> &applied);

SimReport run(const CrdtDesign &d, const SequentialSpec &spec,
              const Schedule &schedule);

// op_count Apply events interleaved with gossip at the given rate, then an
// all-pairs gossip round and one QueryAll per query of the small universe.
Schedule random_schedule(const SequentialSpec &spec, int replicas, int op_count,
                         double gossip_rate, uint64_t seed);

bool check_convergence(const SimReport &r);

// Two-Phase Set scenarios with two replicas: "fig1-left" (add and remove
// of one element on different replicas), "fig1-middle" (gossip between an
// add and the remove of the same element), "fig1-gossip" (the same ops,
// gossip only at the end).
Schedule fixture_schedule(const std::string &name);
std::vector<std::string> fixture_names();

// Sequential answer for a multiset of ops, using a greedy in-order
// arrangement; nullopt when none is found.
std::optional<Value> sequential_answer(const SequentialSpec &spec,
                                       const std::vector<OpValue> &ops,
                                       const QueryValue &q);

json schedule_to_json(const SequentialSpec &spec, const Schedule &s);
Schedule schedule_from_json(const SequentialSpec &spec, const json &j);
json sim_report_to_json(const SequentialSpec &spec, const CrdtDesign &d,
                        const SimReport &r);

}  // namespace katalite

#endif  // KATALITE_SIMULATOR_HPP_
