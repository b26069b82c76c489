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

#include "katalite/lattice.hpp"

#include <algorithm>
#include <functional>

#include <fmt/format.h>

namespace katalite {

std::strong_ordering LatticeType::operator<=>(const LatticeType &o) const {
  if (auto c = kind <=> o.kind; c != 0) return c;
  if (auto c = scalar <=> o.scalar; c != 0) return c;
  return std::lexicographical_compare_three_way(kids.begin(), kids.end(),
                                                o.kids.begin(), o.kids.end());
}

namespace {

using Kind = LatticeType::Kind;

constexpr std::array<const char *, 6> kScalarNames = {
    "Bool", "Int", "OpaqueInt", "ClockInt", "EnumInt", "NodeID"};

size_t mix(size_t h, size_t x) {
  return h ^ (x + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

[[noreturn]] void shape_error(const LatticeType &t, const Value &v) {
  throw TypeError(fmt::format("value {} does not match lattice {}",
                              to_string(v), to_string(t)));
}

SetVal set_union(const SetVal &a, const SetVal &b) {
  SetVal out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(),
                 std::back_inserter(out));
  return out;
}

}  // namespace

const char *scalar_name(Scalar s) {
  return kScalarNames[static_cast<size_t>(s)];
}

Scalar scalar_from_name(std::string_view name) {
  for (Scalar s : kAllScalars)
    if (name == scalar_name(s)) return s;
  // Short aliases accepted on input.
  if (name == "Opaque") return Scalar::Opaque;
  if (name == "Clock") return Scalar::Clock;
  if (name == "Enum") return Scalar::Enum;
  throw TypeError(fmt::format("unknown scalar sort '{}'", name));
}

// ---------------------------------------------------------------- Value

Value Value::set(SetVal s) {
  Value r;
  r.v = std::move(s);
  return r;
}
Value Value::map(MapVal m) {
  Value r;
  r.v = std::move(m);
  return r;
}
Value Value::tuple(TupleVal t) {
  Value r;
  r.v = std::move(t);
  return r;
}

bool Value::as_bool() const {
  if (!is_bool()) throw TypeError("expected bool, got " + to_string(*this));
  return std::get<bool>(v);
}
int64_t Value::as_int() const {
  if (!is_int()) throw TypeError("expected int, got " + to_string(*this));
  return std::get<int64_t>(v);
}
const SetVal &Value::as_set() const {
  if (!is_set()) throw TypeError("expected set, got " + to_string(*this));
  return std::get<SetVal>(v);
}
const MapVal &Value::as_map() const {
  if (!is_map()) throw TypeError("expected map, got " + to_string(*this));
  return std::get<MapVal>(v);
}
const TupleVal &Value::as_tuple() const {
  if (!is_tuple()) throw TypeError("expected tuple, got " + to_string(*this));
  return std::get<TupleVal>(v);
}
int64_t Value::scalar_key() const {
  if (is_bool()) return std::get<bool>(v) ? 1 : 0;
  return as_int();
}

bool operator==(const Value &a, const Value &b) { return a.v == b.v; }
bool operator<(const Value &a, const Value &b) { return a.v < b.v; }

size_t hash_value(const Value &v) {
  size_t h = v.v.index() * 0x51ed27ULL;
  switch (v.v.index()) {
    case 0:
      return mix(h, std::get<bool>(v.v));
    case 1:
      return mix(h, std::hash<int64_t>{}(std::get<int64_t>(v.v)));
    case 2:
      for (int64_t x : std::get<SetVal>(v.v)) h = mix(h, std::hash<int64_t>{}(x));
      return mix(h, 2);
    case 3:
      for (const auto &[k, x] : std::get<MapVal>(v.v))
        h = mix(mix(h, std::hash<int64_t>{}(k)), hash_value(x));
      return mix(h, 3);
    default:
      for (const auto &x : std::get<TupleVal>(v.v)) h = mix(h, hash_value(x));
      return mix(h, 4);
  }
}

size_t ValueVecHash::operator()(const std::vector<Value> &vs) const {
  size_t h = vs.size();
  for (const auto &v : vs) h = mix(h, hash_value(v));
  return h;
}

std::string to_string(const Value &v) {
  switch (v.v.index()) {
    case 0:
      return std::get<bool>(v.v) ? "true" : "false";
    case 1:
      return std::to_string(std::get<int64_t>(v.v));
    case 2: {
      std::string s = "{";
      bool first = true;
      for (int64_t x : std::get<SetVal>(v.v)) {
        if (!first) s += ", ";
        first = false;
        s += std::to_string(x);
      }
      return s + "}";
    }
    case 3: {
      std::string s = "{";
      bool first = true;
      for (const auto &[k, x] : std::get<MapVal>(v.v)) {
        if (!first) s += ", ";
        first = false;
        s += std::to_string(k) + ": " + to_string(x);
      }
      return s + "}";
    }
    default: {
      std::string s = "(";
      bool first = true;
      for (const auto &x : std::get<TupleVal>(v.v)) {
        if (!first) s += ", ";
        first = false;
        s += to_string(x);
      }
      return s + ")";
    }
  }
}

const Value *map_find(const MapVal &m, int64_t key) {
  auto it = std::lower_bound(
      m.begin(), m.end(), key,
      [](const std::pair<int64_t, Value> &e, int64_t k) { return e.first < k; });
  if (it == m.end() || it->first != key) return nullptr;
  return &it->second;
}

// ---------------------------------------------------------------- types

void check_well_formed(const LatticeType &t, bool top_level) {
  switch (t.kind) {
    case Kind::OrBool:
    case Kind::NegBool:
      if (!t.kids.empty()) throw TypeError("boolean lattice takes no children");
      return;
    case Kind::MaxInt:
      if (!maxint_base(t.scalar))
        throw TypeError(fmt::format("MaxInt over {} is not allowed",
                                    scalar_name(t.scalar)));
      return;
    case Kind::LSet:
      if (!t.kids.empty()) throw TypeError("LSet takes no lattice children");
      return;
    case Kind::LMap:
      if (t.kids.size() != 1) throw TypeError("LMap needs one value type");
      check_well_formed(t.kids[0], false);
      return;
    case Kind::LexProduct:
      if (t.kids.size() != 2) throw TypeError("LexProduct needs two components");
      check_well_formed(t.kids[0], false);
      check_well_formed(t.kids[1], false);
      return;
    case Kind::FreeTuple:
      if (!top_level) throw TypeError("FreeTuple only at the top level");
      if (t.kids.size() < 2) throw TypeError("FreeTuple arity must be >= 2");
      for (const auto &k : t.kids) check_well_formed(k, false);
      return;
  }
}

// A scalar sort counts as one level, so Set(OpaqueInt) has depth 2. A
// FreeTuple of k elements nests k-1 binary tuples.
int lattice_depth(const LatticeType &t) {
  switch (t.kind) {
    case Kind::OrBool:
    case Kind::NegBool:
      return 1;
    case Kind::MaxInt:
    case Kind::LSet:
      return 2;
    case Kind::LMap:
      return 1 + std::max(1, lattice_depth(t.kids[0]));
    case Kind::LexProduct:
      return 1 + std::max(lattice_depth(t.kids[0]), lattice_depth(t.kids[1]));
    case Kind::FreeTuple: {
      int d = 0;
      for (const auto &k : t.kids) d = std::max(d, lattice_depth(k));
      return d + static_cast<int>(t.kids.size()) - 1;
    }
  }
  return 0;
}

int lattice_size(const LatticeType &t) {
  switch (t.kind) {
    case Kind::OrBool:
    case Kind::NegBool:
      return 1;
    case Kind::MaxInt:
    case Kind::LSet:
      return 2;
    case Kind::LMap:
      return 2 + lattice_size(t.kids[0]);
    case Kind::LexProduct:
      return 1 + lattice_size(t.kids[0]) + lattice_size(t.kids[1]);
    case Kind::FreeTuple: {
      int s = static_cast<int>(t.kids.size()) - 1;
      for (const auto &k : t.kids) s += lattice_size(k);
      return s;
    }
  }
  return 0;
}

std::string to_string(const LatticeType &t) {
  switch (t.kind) {
    case Kind::OrBool:
      return "OrBool";
    case Kind::NegBool:
      return "NegBool";
    case Kind::MaxInt:
      return fmt::format("MaxInt<{}>", scalar_name(t.scalar));
    case Kind::LSet:
      return fmt::format("Set<{}>", scalar_name(t.scalar));
    case Kind::LMap:
      return fmt::format("Map<{}, {}>", scalar_name(t.scalar),
                         to_string(t.kids[0]));
    case Kind::LexProduct:
      return fmt::format("LexicalProduct<{}, {}>", to_string(t.kids[0]),
                         to_string(t.kids[1]));
    case Kind::FreeTuple: {
      std::string s = "FreeTuple<";
      for (size_t i = 0; i < t.kids.size(); ++i) {
        if (i) s += ", ";
        s += to_string(t.kids[i]);
      }
      return s + ">";
    }
  }
  return "?";
}

// ---------------------------------------------------------------- lattice ops

Value bottom(const LatticeType &t) {
  switch (t.kind) {
    case Kind::OrBool:
      return Value::boolean(false);
    case Kind::NegBool:
      return Value::boolean(true);
    case Kind::MaxInt:
      return Value::integer(0);
    case Kind::LSet:
      return Value::set({});
    case Kind::LMap:
      return Value::map({});
    case Kind::LexProduct:
    case Kind::FreeTuple: {
      TupleVal out;
      out.reserve(t.kids.size());
      for (const auto &k : t.kids) out.push_back(bottom(k));
      return Value::tuple(std::move(out));
    }
  }
  return {};
}

void join_into(const LatticeType &t, Value &acc, const Value &b) {
  switch (t.kind) {
    case Kind::OrBool:
      if (!acc.is_bool() || !b.is_bool()) shape_error(t, b);
      acc.v = std::get<bool>(acc.v) || std::get<bool>(b.v);
      return;
    case Kind::NegBool:
      if (!acc.is_bool() || !b.is_bool()) shape_error(t, b);
      acc.v = std::get<bool>(acc.v) && std::get<bool>(b.v);
      return;
    case Kind::MaxInt:
      if (!acc.is_int() || !b.is_int()) shape_error(t, b);
      acc.v = std::max(std::get<int64_t>(acc.v), std::get<int64_t>(b.v));
      return;
    case Kind::LSet: {
      if (!acc.is_set() || !b.is_set()) shape_error(t, b);
      const auto &bs = std::get<SetVal>(b.v);
      auto &as = std::get<SetVal>(acc.v);
      if (bs.empty()) return;
      if (as.empty()) {
        as = bs;
        return;
      }
      as = set_union(as, bs);
      return;
    }
    case Kind::LMap: {
      if (!acc.is_map() || !b.is_map()) shape_error(t, b);
      const auto &bm = std::get<MapVal>(b.v);
      if (bm.empty()) return;
      auto &am = std::get<MapVal>(acc.v);
      MapVal out;
      out.reserve(am.size() + bm.size());
      size_t i = 0, j = 0;
      while (i < am.size() || j < bm.size()) {
        if (j == bm.size() || (i < am.size() && am[i].first < bm[j].first)) {
          out.push_back(std::move(am[i++]));
        } else if (i == am.size() || bm[j].first < am[i].first) {
          out.push_back(bm[j++]);
        } else {
          out.push_back(std::move(am[i]));
          join_into(t.kids[0], out.back().second, bm[j].second);
          ++i;
          ++j;
        }
      }
      am = std::move(out);
      return;
    }
    case Kind::LexProduct: {
      if (!acc.is_tuple() || !b.is_tuple()) shape_error(t, b);
      auto &a = std::get<TupleVal>(acc.v);
      const auto &bb = std::get<TupleVal>(b.v);
      if (a.size() != 2 || bb.size() != 2) shape_error(t, b);
      if (a[0] == bb[0]) {
        join_into(t.kids[1], a[1], bb[1]);
        return;
      }
      Value j0 = join(t.kids[0], a[0], bb[0]);
      if (j0 == a[0]) return;  // a strictly above b
      if (j0 == bb[0]) {       // b strictly above a
        a = bb;
        return;
      }
      // Incomparable first components: the least upper bound restarts the
      // second component from bottom.
      a[0] = std::move(j0);
      a[1] = bottom(t.kids[1]);
      return;
    }
    case Kind::FreeTuple: {
      if (!acc.is_tuple() || !b.is_tuple()) shape_error(t, b);
      auto &a = std::get<TupleVal>(acc.v);
      const auto &bb = std::get<TupleVal>(b.v);
      if (a.size() != t.kids.size() || bb.size() != t.kids.size())
        shape_error(t, b);
      for (size_t i = 0; i < a.size(); ++i) join_into(t.kids[i], a[i], bb[i]);
      return;
    }
  }
}

Value join(const LatticeType &t, const Value &a, const Value &b) {
  Value out = a;
  join_into(t, out, b);
  return out;
}

bool semantic_eq(const LatticeType &t, const Value &a, const Value &b) {
  if (!validate(t, a) || !validate(t, b))
    throw TypeError("semantic_eq on values outside " + to_string(t));
  return a == b;
}

bool leq(const LatticeType &t, const Value &a, const Value &b) {
  return semantic_eq(t, join(t, a, b), b);
}

bool validate_scalar(Scalar s, const Value &v) {
  if (s == Scalar::Bool) return v.is_bool();
  if (!v.is_int()) return false;
  if (scalar_nonneg(s)) return std::get<int64_t>(v.v) >= 0;
  return true;
}

namespace {
bool valid_elem(Scalar s, int64_t x) {
  if (s == Scalar::Bool) return x == 0 || x == 1;
  if (scalar_nonneg(s)) return x >= 0;
  return true;
}
}  // namespace

bool validate(const LatticeType &t, const Value &v) {
  switch (t.kind) {
    case Kind::OrBool:
    case Kind::NegBool:
      return v.is_bool();
    case Kind::MaxInt:
      // Payloads are non-negative so that 0 is a genuine bottom.
      return v.is_int() && std::get<int64_t>(v.v) >= 0;
    case Kind::LSet: {
      if (!v.is_set()) return false;
      const auto &s = std::get<SetVal>(v.v);
      for (size_t i = 0; i < s.size(); ++i) {
        if (!valid_elem(t.scalar, s[i])) return false;
        if (i && s[i - 1] >= s[i]) return false;
      }
      return true;
    }
    case Kind::LMap: {
      if (!v.is_map()) return false;
      const auto &m = std::get<MapVal>(v.v);
      for (size_t i = 0; i < m.size(); ++i) {
        if (!valid_elem(t.scalar, m[i].first)) return false;
        if (i && m[i - 1].first >= m[i].first) return false;
        if (!validate(t.kids[0], m[i].second)) return false;
      }
      return true;
    }
    case Kind::LexProduct:
    case Kind::FreeTuple: {
      if (!v.is_tuple()) return false;
      const auto &tv = std::get<TupleVal>(v.v);
      if (tv.size() != t.kids.size()) return false;
      for (size_t i = 0; i < tv.size(); ++i)
        if (!validate(t.kids[i], tv[i])) return false;
      return true;
    }
  }
  return false;
}

// ---------------------------------------------------------------- json

json lattice_to_json(const LatticeType &t) {
  switch (t.kind) {
    case Kind::OrBool:
      return {{"kind", "OrBool"}};
    case Kind::NegBool:
      return {{"kind", "NegBool"}};
    case Kind::MaxInt:
      return {{"kind", "MaxInt"}, {"base", scalar_name(t.scalar)}};
    case Kind::LSet:
      return {{"kind", "LSet"}, {"elem", scalar_name(t.scalar)}};
    case Kind::LMap:
      return {{"kind", "LMap"},
              {"key", scalar_name(t.scalar)},
              {"value", lattice_to_json(t.kids[0])}};
    case Kind::LexProduct:
      return {{"kind", "LexProduct"},
              {"first", lattice_to_json(t.kids[0])},
              {"second", lattice_to_json(t.kids[1])}};
    case Kind::FreeTuple: {
      json elems = json::array();
      for (const auto &k : t.kids) elems.push_back(lattice_to_json(k));
      return {{"kind", "FreeTuple"}, {"elements", elems}};
    }
  }
  return {};
}

LatticeType lattice_from_json(const json &j) {
  if (!j.is_object() || !j.contains("kind"))
    throw TypeError("lattice type must be an object with 'kind'");
  const std::string kind = j.at("kind").get<std::string>();
  LatticeType t;
  if (kind == "OrBool") {
    t = LatticeType::or_bool();
  } else if (kind == "NegBool") {
    t = LatticeType::neg_bool();
  } else if (kind == "MaxInt") {
    t = LatticeType::max_int(scalar_from_name(j.at("base").get<std::string>()));
  } else if (kind == "LSet") {
    t = LatticeType::set(scalar_from_name(j.at("elem").get<std::string>()));
  } else if (kind == "LMap") {
    t = LatticeType::map(scalar_from_name(j.at("key").get<std::string>()),
                         lattice_from_json(j.at("value")));
  } else if (kind == "LexProduct") {
    t = LatticeType::lex(lattice_from_json(j.at("first")),
                         lattice_from_json(j.at("second")));
  } else if (kind == "FreeTuple") {
    std::vector<LatticeType> elems;
    for (const auto &e : j.at("elements")) elems.push_back(lattice_from_json(e));
    t = LatticeType::free_tuple(std::move(elems));
  } else {
    throw TypeError("unknown lattice kind '" + kind + "'");
  }
  return t;
}

namespace {
json scalar_value_json(Scalar s, int64_t x) {
  if (s == Scalar::Bool) return json(x != 0);
  return json(x);
}
int64_t scalar_value_parse(Scalar s, const json &j) {
  if (s == Scalar::Bool) {
    if (!j.is_boolean()) throw TypeError("expected boolean element");
    return j.get<bool>() ? 1 : 0;
  }
  if (!j.is_number_integer()) throw TypeError("expected integer element");
  return j.get<int64_t>();
}
}  // namespace

json value_to_json(const LatticeType &t, const Value &v) {
  if (!validate(t, v)) shape_error(t, v);
  switch (t.kind) {
    case Kind::OrBool:
    case Kind::NegBool:
      return json(v.as_bool());
    case Kind::MaxInt:
      return json(v.as_int());
    case Kind::LSet: {
      json arr = json::array();
      for (int64_t x : v.as_set()) arr.push_back(scalar_value_json(t.scalar, x));
      return arr;
    }
    case Kind::LMap: {
      json arr = json::array();
      for (const auto &[k, x] : v.as_map())
        arr.push_back(json::array(
            {scalar_value_json(t.scalar, k), value_to_json(t.kids[0], x)}));
      return arr;
    }
    case Kind::LexProduct:
    case Kind::FreeTuple: {
      json arr = json::array();
      for (size_t i = 0; i < t.kids.size(); ++i)
        arr.push_back(value_to_json(t.kids[i], v.as_tuple()[i]));
      return arr;
    }
  }
  return {};
}

Value value_from_json(const LatticeType &t, const json &j) {
  Value out;
  switch (t.kind) {
    case Kind::OrBool:
    case Kind::NegBool:
      if (!j.is_boolean()) throw TypeError("expected boolean lattice value");
      out = Value::boolean(j.get<bool>());
      break;
    case Kind::MaxInt:
      if (!j.is_number_integer()) throw TypeError("expected integer value");
      out = Value::integer(j.get<int64_t>());
      break;
    case Kind::LSet: {
      if (!j.is_array()) throw TypeError("expected set array");
      SetVal s;
      for (const auto &e : j) s.push_back(scalar_value_parse(t.scalar, e));
      std::sort(s.begin(), s.end());
      s.erase(std::unique(s.begin(), s.end()), s.end());
      out = Value::set(std::move(s));
      break;
    }
    case Kind::LMap: {
      if (!j.is_array()) throw TypeError("expected map entry array");
      MapVal m;
      for (const auto &e : j) {
        if (!e.is_array() || e.size() != 2)
          throw TypeError("map entries are [key, value] pairs");
        m.emplace_back(scalar_value_parse(t.scalar, e[0]),
                       value_from_json(t.kids[0], e[1]));
      }
      std::sort(m.begin(), m.end(),
                [](const auto &a, const auto &b) { return a.first < b.first; });
      for (size_t i = 1; i < m.size(); ++i)
        if (m[i - 1].first == m[i].first) throw TypeError("duplicate map key");
      out = Value::map(std::move(m));
      break;
    }
    case Kind::LexProduct:
    case Kind::FreeTuple: {
      if (!j.is_array() || j.size() != t.kids.size())
        throw TypeError("tuple arity mismatch for " + to_string(t));
      TupleVal tv;
      for (size_t i = 0; i < t.kids.size(); ++i)
        tv.push_back(value_from_json(t.kids[i], j[i]));
      out = Value::tuple(std::move(tv));
      break;
    }
  }
  if (!validate(t, out)) shape_error(t, out);
  return out;
}

// ---------------------------------------------------------------- generation

Value random_scalar(Scalar s, std::mt19937_64 &rng, const GenConfig &cfg) {
  if (s == Scalar::Bool) return Value::boolean(rng() & 1);
  int64_t lo = scalar_nonneg(s) ? 0 : cfg.int_lo;
  int64_t hi = scalar_nonneg(s) ? cfg.nonneg_hi : cfg.int_hi;
  std::uniform_int_distribution<int64_t> d(lo, hi);
  return Value::integer(d(rng));
}

Value random_value(const LatticeType &t, std::mt19937_64 &rng,
                   const GenConfig &cfg) {
  std::uniform_int_distribution<int> count(0, cfg.max_elems);
  switch (t.kind) {
    case Kind::OrBool:
    case Kind::NegBool:
      return Value::boolean(rng() & 1);
    case Kind::MaxInt: {
      std::uniform_int_distribution<int64_t> d(0, cfg.nonneg_hi);
      return Value::integer(d(rng));
    }
    case Kind::LSet: {
      SetVal s;
      int n = count(rng);
      for (int i = 0; i < n; ++i)
        s.push_back(random_scalar(t.scalar, rng, cfg).scalar_key());
      std::sort(s.begin(), s.end());
      s.erase(std::unique(s.begin(), s.end()), s.end());
      return Value::set(std::move(s));
    }
    case Kind::LMap: {
      MapVal m;
      int n = count(rng);
      for (int i = 0; i < n; ++i) {
        int64_t k = random_scalar(t.scalar, rng, cfg).scalar_key();
        if (map_find(m, k)) continue;
        m.emplace_back(k, random_value(t.kids[0], rng, cfg));
        std::sort(m.begin(), m.end(),
                  [](const auto &a, const auto &b) { return a.first < b.first; });
      }
      return Value::map(std::move(m));
    }
    case Kind::LexProduct:
    case Kind::FreeTuple: {
      TupleVal tv;
      for (const auto &k : t.kids) tv.push_back(random_value(k, rng, cfg));
      return Value::tuple(std::move(tv));
    }
  }
  return {};
}

}  // namespace katalite
