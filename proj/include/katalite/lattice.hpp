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

#ifndef KATALITE_LATTICE_HPP_
#define KATALITE_LATTICE_HPP_

#include <array>
#include <compare>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

namespace katalite {

using json = nlohmann::json;

enum class Scalar : uint8_t { Bool, Int, Opaque, Clock, Enum, NodeId };

inline constexpr std::array<Scalar, 6> kAllScalars = {
    Scalar::Bool, Scalar::Int,  Scalar::Opaque,
    Scalar::Clock, Scalar::Enum, Scalar::NodeId};

const char *scalar_name(Scalar s);
Scalar scalar_from_name(std::string_view name);

// Comparison (> and >=) is defined on Int, Opaque and Clock.
inline bool scalar_ordered(Scalar s) {
  return s == Scalar::Int || s == Scalar::Opaque || s == Scalar::Clock;
}
inline bool scalar_arith(Scalar s) { return s == Scalar::Int; }
inline bool scalar_nonneg(Scalar s) {
  return s == Scalar::Clock || s == Scalar::NodeId;
}
// Bases admitted under MaxInt.
inline bool maxint_base(Scalar s) { return scalar_ordered(s); }

class TypeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Value;
using SetVal = std::vector<int64_t>;                   // sorted, unique
using MapVal = std::vector<std::pair<int64_t, Value>>;  // sorted by key
using TupleVal = std::vector<Value>;

// Runtime value shared by the sequential and the lattice side. Booleans used
// as set elements or map keys are stored as 0/1.
struct Value {
  std::variant<bool, int64_t, SetVal, MapVal, TupleVal> v;

  Value() : v(false) {}
  static Value boolean(bool b) {
    Value r;
    r.v = b;
    return r;
  }
  static Value integer(int64_t i) {
    Value r;
    r.v = i;
    return r;
  }
  static Value set(SetVal s);
  static Value map(MapVal m);
  static Value tuple(TupleVal t);

  bool is_bool() const { return v.index() == 0; }
  bool is_int() const { return v.index() == 1; }
  bool is_set() const { return v.index() == 2; }
  bool is_map() const { return v.index() == 3; }
  bool is_tuple() const { return v.index() == 4; }

  bool as_bool() const;
  int64_t as_int() const;
  const SetVal &as_set() const;
  const MapVal &as_map() const;
  const TupleVal &as_tuple() const;
  // Scalars as a single integer (bool -> 0/1).
  int64_t scalar_key() const;
};

bool operator==(const Value &a, const Value &b);
bool operator<(const Value &a, const Value &b);
inline bool operator!=(const Value &a, const Value &b) { return !(a == b); }

size_t hash_value(const Value &v);
struct ValueHash {
  size_t operator()(const Value &v) const { return hash_value(v); }
};
struct ValueVecHash {
  size_t operator()(const std::vector<Value> &vs) const;
};

std::string to_string(const Value &v);

// Lookup in a map value; nullptr when absent.
const Value *map_find(const MapVal &m, int64_t key);

struct LatticeType {
  enum class Kind : uint8_t {
    OrBool,
    NegBool,
    MaxInt,
    LSet,
    LexProduct,
    LMap,
    FreeTuple
  };
  Kind kind = Kind::OrBool;
  Scalar scalar = Scalar::Bool;  // MaxInt base, LSet element, LMap key
  std::vector<LatticeType> kids;  // LMap value, product components

  static LatticeType or_bool() { return {Kind::OrBool, Scalar::Bool, {}}; }
  static LatticeType neg_bool() { return {Kind::NegBool, Scalar::Bool, {}}; }
  static LatticeType max_int(Scalar base) { return {Kind::MaxInt, base, {}}; }
  static LatticeType set(Scalar elem) { return {Kind::LSet, elem, {}}; }
  static LatticeType map(Scalar key, LatticeType value) {
    return {Kind::LMap, key, {std::move(value)}};
  }
  static LatticeType lex(LatticeType a, LatticeType b) {
    return {Kind::LexProduct, Scalar::Bool, {std::move(a), std::move(b)}};
  }
  static LatticeType free_tuple(std::vector<LatticeType> elems) {
    return {Kind::FreeTuple, Scalar::Bool, std::move(elems)};
  }

  bool operator==(const LatticeType &) const = default;
  // Kind first, then scalar, then components.
  std::strong_ordering operator<=>(const LatticeType &o) const;
};

// Throws TypeError when a type violates the grammar (bad MaxInt base,
// FreeTuple below the top level, arity < 2).
void check_well_formed(const LatticeType &t, bool top_level = true);

int lattice_depth(const LatticeType &t);
int lattice_size(const LatticeType &t);
std::string to_string(const LatticeType &t);

Value bottom(const LatticeType &t);
Value join(const LatticeType &t, const Value &a, const Value &b);
void join_into(const LatticeType &t, Value &acc, const Value &b);
bool leq(const LatticeType &t, const Value &a, const Value &b);
bool semantic_eq(const LatticeType &t, const Value &a, const Value &b);
bool validate(const LatticeType &t, const Value &v);
bool validate_scalar(Scalar s, const Value &v);

json lattice_to_json(const LatticeType &t);
LatticeType lattice_from_json(const json &j);
json value_to_json(const LatticeType &t, const Value &v);
Value value_from_json(const LatticeType &t, const json &j);

struct GenConfig {
  int64_t int_lo = -8;
  int64_t int_hi = 8;
  int64_t nonneg_hi = 8;  // clocks, node ids, MaxInt payloads
  int max_elems = 3;
};

Value random_scalar(Scalar s, std::mt19937_64 &rng, const GenConfig &cfg);
Value random_value(const LatticeType &t, std::mt19937_64 &rng,
                   const GenConfig &cfg = {});

}  // namespace katalite

#endif  // KATALITE_LATTICE_HPP_
