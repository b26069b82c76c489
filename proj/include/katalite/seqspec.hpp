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

#ifndef KATALITE_SEQSPEC_HPP_
#define KATALITE_SEQSPEC_HPP_

#include <map>
#include <string>
#include <vector>

#include "katalite/expr.hpp"

namespace katalite {

class SpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Field {
  std::string name;
  Scalar sort = Scalar::Int;
  bool operator==(const Field &) const = default;
};

struct Flags {
  bool timestamps = false;
  bool non_idempotent = false;
  bool operator==(const Flags &) const = default;
};

// Concrete operation / query arguments, positionally aligned with the
// signature. Bool fields are stored as 0/1.
using OpValue = std::vector<int64_t>;
using QueryValue = std::vector<int64_t>;

struct SequentialSpec {
  std::string name;   // short id, e.g. "two-phase-set"
  std::string title;  // display name
  std::vector<Field> op_fields;  // user fields; "t" is appended implicitly
  std::vector<Field> query_fields;
  Sort query_sort;
  Sort state_sort;
  TermPtr initial_state;
  TermPtr transition;       // over {state, op fields}
  TermPtr query;            // over {state, query fields}
  TermPtr op_order;         // over {o1.f, o2.f}; user ordering only
  TermPtr op_precondition;  // over {o.f}
  Flags flags;
  std::map<std::string, std::vector<int64_t>> enum_values;
  std::string notes;

  // Explicit fields plus the implicit timestamp "t".
  std::vector<Field> signature() const;
  // Integer literals harvested from every spec term, plus 0 and 1.
  std::vector<int64_t> constants() const;
};

// Name of the implicit node id bound for f* in non-idempotent mode.
inline constexpr const char *kNodeVar = "nodeID";
inline constexpr const char *kStateVar = "state";

SortEnv transition_env(const SequentialSpec &spec);
SortEnv query_env(const SequentialSpec &spec);
SortEnv order_env(const SequentialSpec &spec);
SortEnv precondition_env(const SequentialSpec &spec);

// Typechecks every term and the structural invariants. Throws SpecError.
void validate_spec(const SequentialSpec &spec);

TermPtr effective_op_order(const SequentialSpec &spec);
TermPtr effective_precondition(const SequentialSpec &spec);

// Runtime value of a scalar field (Bool fields are stored as 0/1).
Value field_value(Scalar s, int64_t x);

Env op_env(const SequentialSpec &spec, const OpValue &op);
bool precondition_holds(const SequentialSpec &spec, const OpValue &op);
bool order_holds(const SequentialSpec &spec, const OpValue &a, const OpValue &b);

Value initial_state(const SequentialSpec &spec);
Value apply_op(const SequentialSpec &spec, const Value &state, const OpValue &op);
Value run_sequential(const SequentialSpec &spec, const std::vector<OpValue> &log);
Value answer_query(const SequentialSpec &spec, const Value &state,
                   const QueryValue &q);

std::vector<SequentialSpec> builtin_benchmarks();
// Accepts "two-phase-set" or "bench:two-phase-set".
const SequentialSpec *find_benchmark(const std::string &name);

json spec_to_json(const SequentialSpec &spec);
SequentialSpec spec_from_json(const json &j);
// Loads "bench:<name>" or a *.spec.json path.
SequentialSpec load_spec(const std::string &ref);

json scalar_tuple_to_json(const std::vector<Field> &sig,
                          const std::vector<int64_t> &vals);
std::vector<int64_t> scalar_tuple_from_json(const std::vector<Field> &sig,
                                            const json &j);
// Sort-directed JSON for sequential values (query answers, states).
json plain_value_to_json(const Sort &s, const Value &v);
std::string op_to_string(const SequentialSpec &spec, const OpValue &op);

}  // namespace katalite

#endif  // KATALITE_SEQSPEC_HPP_
