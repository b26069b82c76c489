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

// Test-side generators and reference oracles. Nothing here calls into the
// library's own join/enumeration code, so comparisons against it are
// independent.

#ifndef KATALITE_TESTS_SUPPORT_HPP_
#define KATALITE_TESTS_SUPPORT_HPP_

#include <algorithm>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "katalite/lattice.hpp"

namespace katalite::testing {

using LT = LatticeType;
using K = LatticeType::Kind;

inline const std::vector<Scalar> &all_scalars() {
  static const std::vector<Scalar> v = {Scalar::Bool,  Scalar::Int,  Scalar::Opaque,
                                        Scalar::Clock, Scalar::Enum, Scalar::NodeId};
  return v;
}

inline bool ordered_base(Scalar s) {
  return s == Scalar::Int || s == Scalar::Opaque || s == Scalar::Clock;
}

// ---------------------------------------------------------------- types

inline LT random_type(std::mt19937_64 &rng, int depth, bool top = true) {
  auto pick = [&](size_t n) { return static_cast<size_t>(rng() % n); };
  const auto &sc = all_scalars();
  std::vector<int> kinds = {0, 1};
  if (depth >= 2) kinds.insert(kinds.end(), {2, 3, 4, 5});
  if (depth >= 3 && top) kinds.push_back(6);
  switch (kinds[pick(kinds.size())]) {
    case 0: return LT::or_bool();
    case 1: return LT::neg_bool();
    case 2: {
      std::vector<Scalar> bases = {Scalar::Int, Scalar::Opaque, Scalar::Clock};
      return LT::max_int(bases[pick(3)]);
    }
    case 3: return LT::set(sc[pick(sc.size())]);
    case 4: return LT::map(sc[pick(sc.size())], random_type(rng, depth - 1, false));
    case 5:
      return LT::lex(random_type(rng, depth - 1, false), random_type(rng, depth - 1, false));
    default: {
      std::vector<LT> kids = {random_type(rng, depth - 2, false),
                              random_type(rng, depth - 2, false)};
      return LT::free_tuple(std::move(kids));
    }
  }
}

// ---------------------------------------------------------------- values

// Small domains so that random triples collide often.
inline int64_t random_scalar_key(Scalar s, std::mt19937_64 &rng) {
  switch (s) {
    case Scalar::Bool:
    case Scalar::Enum:
    case Scalar::NodeId: return static_cast<int64_t>(rng() % 2);
    default: return static_cast<int64_t>(rng() % 4);
  }
}

inline Value gen_value(const LT &t, std::mt19937_64 &rng) {
  switch (t.kind) {
    case K::OrBool:
    case K::NegBool: return Value::boolean(rng() % 2);
    case K::MaxInt: return Value::integer(static_cast<int64_t>(rng() % 5));
    case K::LSet: {
      std::set<int64_t> s;
      for (int i = 0, n = static_cast<int>(rng() % 4); i < n; ++i)
        s.insert(random_scalar_key(t.scalar, rng));
      return Value::set({s.begin(), s.end()});
    }
    case K::LMap: {
      std::map<int64_t, Value> m;
      for (int i = 0, n = static_cast<int>(rng() % 4); i < n; ++i)
        m[random_scalar_key(t.scalar, rng)] = gen_value(t.kids[0], rng);
      return Value::map({m.begin(), m.end()});
    }
    case K::LexProduct:
    case K::FreeTuple: {
      TupleVal tv;
      for (const auto &k : t.kids) tv.push_back(gen_value(k, rng));
      return Value::tuple(std::move(tv));
    }
  }
  return {};
}

// Every value of t over a universe of size n: keys 1..n (two-valued sorts
// keep {0,1}), MaxInt payloads 0..n.
inline std::vector<Value> all_values(const LT &t, int n = 2) {
  auto keys = [n](Scalar s) -> std::vector<int64_t> {
    if (s == Scalar::Bool || s == Scalar::Enum || s == Scalar::NodeId) return {0, 1};
    std::vector<int64_t> out;
    for (int i = 1; i <= n; ++i) out.push_back(i);
    return out;
  };
  switch (t.kind) {
    case K::OrBool:
    case K::NegBool: return {Value::boolean(false), Value::boolean(true)};
    case K::MaxInt: {
      std::vector<Value> out;
      for (int i = 0; i <= n; ++i) out.push_back(Value::integer(i));
      return out;
    }
    case K::LSet: {
      auto ks = keys(t.scalar);
      std::vector<Value> out;
      for (int mask = 0; mask < (1 << ks.size()); ++mask) {
        SetVal s;
        for (size_t i = 0; i < ks.size(); ++i)
          if (mask >> i & 1) s.push_back(ks[i]);
        out.push_back(Value::set(s));
      }
      return out;
    }
    case K::LMap: {
      auto ks = keys(t.scalar);
      auto vs = all_values(t.kids[0], n);
      std::vector<Value> out;
      // Each key is absent or bound to one of vs.
      std::vector<size_t> pos(ks.size(), 0);
      while (true) {
        MapVal m;
        for (size_t i = 0; i < ks.size(); ++i)
          if (pos[i] > 0) m.push_back({ks[i], vs[pos[i] - 1]});
        out.push_back(Value::map(m));
        size_t i = 0;
        while (i < ks.size() && ++pos[i] > vs.size()) pos[i++] = 0;
        if (i == ks.size()) break;
      }
      return out;
    }
    case K::LexProduct:
    case K::FreeTuple: {
      std::vector<Value> out = {Value::tuple({})};
      for (const auto &k : t.kids) {
        std::vector<Value> next;
        for (const auto &prefix : out)
          for (const auto &v : all_values(k, n)) {
            TupleVal tv = prefix.as_tuple();
            tv.push_back(v);
            next.push_back(Value::tuple(std::move(tv)));
          }
        out = std::move(next);
      }
      return out;
    }
  }
  return {};
}

// ---------------------------------------------------------------- oracle

inline Value ref_bottom(const LT &t) {
  switch (t.kind) {
    case K::OrBool: return Value::boolean(false);
    case K::NegBool: return Value::boolean(true);
    case K::MaxInt: return Value::integer(0);
    case K::LSet: return Value::set({});
    case K::LMap: return Value::map({});
    default: {
      TupleVal tv;
      for (const auto &k : t.kids) tv.push_back(ref_bottom(k));
      return Value::tuple(std::move(tv));
    }
  }
}

inline Value ref_join(const LT &t, const Value &a, const Value &b);

// a <= b in the lattice order, from the join oracle.
inline bool ref_leq(const LT &t, const Value &a, const Value &b) {
  return ref_join(t, a, b) == b;
}

// Written from the textbook definitions with std containers.
inline Value ref_join(const LT &t, const Value &a, const Value &b) {
  switch (t.kind) {
    case K::OrBool: return Value::boolean(a.as_bool() || b.as_bool());
    case K::NegBool: return Value::boolean(a.as_bool() && b.as_bool());
    case K::MaxInt: return Value::integer(std::max(a.as_int(), b.as_int()));
    case K::LSet: {
      std::set<int64_t> s(a.as_set().begin(), a.as_set().end());
      s.insert(b.as_set().begin(), b.as_set().end());
      return Value::set({s.begin(), s.end()});
    }
    case K::LMap: {
      std::map<int64_t, Value> m(a.as_map().begin(), a.as_map().end());
      for (const auto &[k, v] : b.as_map()) {
        auto it = m.find(k);
        if (it == m.end())
          m.emplace(k, v);
        else
          it->second = ref_join(t.kids[0], it->second, v);
      }
      return Value::map({m.begin(), m.end()});
    }
    case K::LexProduct: {
      const auto &x = a.as_tuple(), &y = b.as_tuple();
      const LT &f = t.kids[0], &s = t.kids[1];
      bool xy = ref_leq(f, x[0], y[0]), yx = ref_leq(f, y[0], x[0]);
      if (xy && yx) return Value::tuple({x[0], ref_join(s, x[1], y[1])});
      if (yx) return a;
      if (xy) return b;
      return Value::tuple({ref_join(f, x[0], y[0]), ref_bottom(s)});
    }
    case K::FreeTuple: {
      TupleVal out;
      for (size_t i = 0; i < t.kids.size(); ++i)
        out.push_back(ref_join(t.kids[i], a.as_tuple()[i], b.as_tuple()[i]));
      return Value::tuple(std::move(out));
    }
  }
  return {};
}

// ---------------------------------------------------------------- state types

// Depth and size rules of the state-type grammar, restated.
inline int ref_depth(const LT &t) {
  switch (t.kind) {
    case K::OrBool:
    case K::NegBool: return 1;
    case K::MaxInt:
    case K::LSet: return 2;
    case K::LMap: return 1 + std::max(1, ref_depth(t.kids[0]));
    case K::LexProduct: return 1 + std::max(ref_depth(t.kids[0]), ref_depth(t.kids[1]));
    case K::FreeTuple: {
      int d = 0;
      for (const auto &k : t.kids) d = std::max(d, ref_depth(k));
      return d + static_cast<int>(t.kids.size()) - 1;
    }
  }
  return 0;
}

// Brute force: every non-tuple type within depth, then every ordered
// sequence of them as a tuple, canonicalized by sorting the elements.
inline std::set<std::string> brute_force_state_types(int depth,
                                                     const std::vector<Scalar> &sorts) {
  std::function<std::vector<LT>(int)> inner = [&](int d) {
    std::vector<LT> out = {LT::or_bool(), LT::neg_bool()};
    if (d < 2) return out;
    for (Scalar s : sorts) {
      if (ordered_base(s)) out.push_back(LT::max_int(s));
      out.push_back(LT::set(s));
    }
    auto sub = inner(d - 1);
    for (Scalar k : sorts)
      for (const auto &v : sub) out.push_back(LT::map(k, v));
    for (const auto &a : sub)
      for (const auto &b : sub) out.push_back(LT::lex(a, b));
    return out;
  };
  std::set<std::string> names;
  auto base = inner(depth);
  for (const auto &t : base)
    if (ref_depth(t) <= depth) names.insert(to_string(t));
  // A k-tuple has depth max(element depth) + k - 1.
  for (int k = 2; k <= depth; ++k) {
    std::vector<LT> elems;
    for (const auto &t : base)
      if (ref_depth(t) <= depth - k + 1) elems.push_back(t);
    std::vector<size_t> idx(k, 0);
    while (true) {
      std::vector<LT> seq;
      for (size_t i : idx) seq.push_back(elems[i]);
      std::sort(seq.begin(), seq.end());
      names.insert(to_string(LT::free_tuple(seq)));
      int i = 0;
      while (i < k && ++idx[i] == elems.size()) idx[i++] = 0;
      if (i == k) break;
    }
  }
  return names;
}

// ---------------------------------------------------------------- sets

// Two-phase set ops are (add, v). Membership restated by hand: present iff
// the last op on v inserted it.
inline bool tp_contains(const std::vector<std::vector<int64_t>> &log, int64_t v) {
  bool in = false;
  for (const auto &o : log)
    if (o[1] == v) in = o[0] == 1;
  return in;
}
// A single grow-only set never forgets an insert.
inline bool naive_contains(const std::vector<std::vector<int64_t>> &log, int64_t v) {
  for (const auto &o : log)
    if (o[0] == 1 && o[1] == v) return true;
  return false;
}
// Removes may not be followed by inserts.
inline bool tp_order(const std::vector<int64_t> &a, const std::vector<int64_t> &b) {
  return a[0] == 1 || b[0] != 1;
}

// Length of the shortest in-order log over values {1..n} on which the
// grow-only design answers differently from the two-phase set; 0 if none up
// to max_len.
inline int brute_force_naive_min(int n, int max_len) {
  using Log = std::vector<std::vector<int64_t>>;
  Log ops;
  for (int64_t a : {0, 1})
    for (int64_t v = 1; v <= n; ++v) ops.push_back({a, v});
  std::vector<Log> layer = {{}};
  for (int len = 1; len <= max_len; ++len) {
    std::vector<Log> next;
    for (const auto &log : layer)
      for (const auto &o : ops) {
        bool ok = true;
        for (const auto &p : log) ok = ok && tp_order(p, o);
        if (!ok) continue;
        auto l = log;
        l.push_back(o);
        for (int64_t q = 1; q <= n; ++q)
          if (tp_contains(l, q) != naive_contains(l, q)) return len;
        next.push_back(std::move(l));
      }
    layer = std::move(next);
  }
  return 0;
}

}  // namespace katalite::testing

#endif  // KATALITE_TESTS_SUPPORT_HPP_
