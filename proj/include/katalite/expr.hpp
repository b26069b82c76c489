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

#ifndef KATALITE_EXPR_HPP_
#define KATALITE_EXPR_HPP_

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "katalite/lattice.hpp"

namespace katalite {

struct Sort {
  enum class Kind : uint8_t { Scalar, SetOf, MapOf, TupleOf, Lattice };
  Kind kind = Kind::Scalar;
  katalite::Scalar scalar = katalite::Scalar::Bool;  // scalar / elem / key
  std::vector<Sort> kids;                            // MapOf value, tuple parts
  std::vector<LatticeType> lat;                      // Lattice payload (0 or 1)

  static Sort of(katalite::Scalar s) { return {Kind::Scalar, s, {}, {}}; }
  static Sort boolean() { return of(katalite::Scalar::Bool); }
  static Sort set_of(katalite::Scalar e) { return {Kind::SetOf, e, {}, {}}; }
  static Sort map_of(katalite::Scalar k, Sort v) {
    return {Kind::MapOf, k, {std::move(v)}, {}};
  }
  static Sort tuple_of(std::vector<Sort> parts) {
    return {Kind::TupleOf, katalite::Scalar::Bool, std::move(parts), {}};
  }
  // Lattice sorts are canonicalized on construction (see canon_lattice).
  static Sort lattice(const LatticeType &t);

  bool is_scalar() const { return kind == Kind::Scalar; }
  bool is_scalar(katalite::Scalar s) const {
    return kind == Kind::Scalar && scalar == s;
  }
  bool is_set() const { return kind == Kind::SetOf; }
  bool is_map() const { return kind == Kind::MapOf || kind == Kind::Lattice; }
  bool is_lattice_map() const { return kind == Kind::Lattice; }
  bool is_tuple() const { return kind == Kind::TupleOf; }
  // Only meaningful for maps.
  katalite::Scalar map_key() const { return scalar; }
  Sort map_value() const;
  const LatticeType &map_lattice() const { return lat.at(0); }

  bool operator==(const Sort &) const = default;
  std::strong_ordering operator<=>(const Sort &o) const;
};

std::string to_string(const Sort &s);
json sort_to_json(const Sort &s);
Sort sort_from_json(const json &j);

enum class Op : uint8_t {
  BoolLit,
  IntLit,
  Var,
  And,
  Or,
  Not,
  Eq,
  Gt,
  Geq,
  Add,
  Sub,
  Ite,
  EmptySet,
  Singleton,
  Union,
  Diff,
  Member,
  Subset,
  EmptyMap,
  SingletonMap,
  MapJoinUnion,
  MapGetDefault,
  TupleGet,
  TupleMake,
  LatticeJoin,
  LatticeBottom,
  Reduce
};

enum class Reducer : uint8_t { Sum, OrAll, AndAll, JoinAll };

const char *op_name(Op op);
const char *reducer_name(Reducer r);

struct Term;
using TermPtr = std::shared_ptr<const Term>;

// Immutable AST node. Size and depth are cached at construction; a leaf has
// depth 1 and every node costs 1.
struct Term {
  Op op = Op::BoolLit;
  int64_t value = 0;       // BoolLit/IntLit payload
  int index = 0;           // TupleGet
  Reducer reducer = Reducer::Sum;
  std::string name;        // Var
  Sort sort;               // IntLit, EmptySet, EmptyMap, SingletonMap
  std::vector<LatticeType> lattice;  // LatticeJoin/Bottom, JoinAll, MapJoinUnion
  std::vector<TermPtr> args;
  int size = 1;
  int depth = 1;
};

// Constructors.
TermPtr make_term(Term t);
TermPtr t_bool(bool b);
TermPtr t_int(int64_t v, Scalar s = Scalar::Int);
TermPtr t_var(const std::string &name);
TermPtr t_and(TermPtr a, TermPtr b);
TermPtr t_or(TermPtr a, TermPtr b);
TermPtr t_not(TermPtr a);
TermPtr t_eq(TermPtr a, TermPtr b);
TermPtr t_gt(TermPtr a, TermPtr b);
TermPtr t_geq(TermPtr a, TermPtr b);
TermPtr t_add(TermPtr a, TermPtr b);
TermPtr t_sub(TermPtr a, TermPtr b);
TermPtr t_ite(TermPtr c, TermPtr a, TermPtr b);
TermPtr t_empty_set(Scalar elem);
TermPtr t_singleton(TermPtr x);
TermPtr t_union(TermPtr a, TermPtr b);
TermPtr t_diff(TermPtr a, TermPtr b);
TermPtr t_member(TermPtr x, TermPtr s);
TermPtr t_subset(TermPtr a, TermPtr b);
TermPtr t_empty_map(Sort map_sort);
TermPtr t_singleton_map(Sort map_sort, TermPtr k, TermPtr v);
TermPtr t_map_join(Sort map_sort, TermPtr a, TermPtr b);
TermPtr t_map_get(TermPtr m, TermPtr k, TermPtr dflt);
TermPtr t_tuple_get(TermPtr t, int index);
TermPtr t_tuple(std::vector<TermPtr> parts);
TermPtr t_lattice_join(const LatticeType &lt, TermPtr a, TermPtr b);
TermPtr t_lattice_bottom(const LatticeType &lt);
// For JoinAll pass the map's value lattice; otherwise it is ignored.
TermPtr t_reduce(TermPtr map, Reducer r, TermPtr init,
                 std::optional<LatticeType> value_lattice = std::nullopt);

inline int term_size(const Term &t) { return t.size; }
inline int term_depth(const Term &t) { return t.depth; }

bool term_equal(const Term &a, const Term &b);
size_t term_hash(const Term &t);

// Typing environment: ordered (name, sort) pairs.
using SortEnv = std::vector<std::pair<std::string, Sort>>;
const Sort *lookup_sort(const SortEnv &env, const std::string &name);

// Returns the (canonical) sort or throws TypeError naming the offending node.
Sort typecheck(const Term &t, const SortEnv &env);

// Evaluation environment with positional lookup by name.
struct Env {
  std::vector<std::string> names;
  std::vector<Value> values;

  void bind(const std::string &name, Value v);
  const Value *find(const std::string &name) const;
};

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Value eval(const Term &t, const Env &env);

// Applies a non-variable node to already evaluated children. Ite selects
// between args[1] and args[2]. Shared by eval and the enumerator.
Value apply_node(const Term &node, const Value *const *args);

json term_to_json(const Term &t);
TermPtr term_from_json(const json &j);

// Human-readable infix rendering.
std::string pretty(const Term &t);

}  // namespace katalite

#endif  // KATALITE_EXPR_HPP_
