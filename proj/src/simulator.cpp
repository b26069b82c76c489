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

#include "katalite/simulator.hpp"

#include <algorithm>
#include <map>
#include <random>

#include <fmt/format.h>

namespace katalite {

Event Event::apply(int replica, OpValue args) {
  Event e;
  e.kind = Kind::Apply;
  e.replica = replica;
  e.args = std::move(args);
  return e;
}

Event Event::gossip(int from, int to) {
  Event e;
  e.kind = Kind::Gossip;
  e.from = from;
  e.to = to;
  return e;
}

Event Event::query_all(QueryValue q) {
  Event e;
  e.kind = Kind::QueryAll;
  e.query = std::move(q);
  return e;
}

std::vector<Replica> initial_replicas(const CrdtDesign &d, int n) {
  if (n < 1) throw ScheduleError("need at least one replica");
  std::vector<Replica> out(n);
  for (int i = 0; i < n; ++i) {
    out[i].node_id = i;
    out[i].state = d.init;
  }
  return out;
}

void step(const SequentialSpec &spec, const CrdtDesign &d,
          std::vector<Replica> &replicas, const Event &e,
          std::vector<OpValue> &applied) {
  const int n = static_cast<int>(replicas.size());
  auto check_index = [&](int i) {
    if (i < 0 || i >= n) throw ScheduleError(fmt::format("no replica {}", i));
  };
  switch (e.kind) {
    case Event::Kind::Apply: {
      check_index(e.replica);
      Replica &r = replicas[e.replica];
      if (e.args.size() != spec.op_fields.size())
        throw ScheduleError(fmt::format("op has {} fields, expected {}",
                                        e.args.size(), spec.op_fields.size()));
      OpValue op = e.args;
      int64_t clock = r.clock + 1;
      if (spec.flags.timestamps) op.push_back(clock);
      if (!precondition_holds(spec, op))
        throw ScheduleError("precondition fails for " + op_to_string(spec, op));
      r.clock = clock;
      r.state = join(d.state_type, r.state, eval_f_star(spec, d, op, r.state, r.node_id));
      applied.push_back(std::move(op));
      for (auto &x : replicas) x.seen.resize(applied.size(), 0);
      r.seen.back() = 1;
      break;
    }
    case Event::Kind::Gossip: {
      check_index(e.from);
      check_index(e.to);
      const Replica &src = replicas[e.from];
      Replica &dst = replicas[e.to];
      if (e.from == e.to) break;
      dst.state = join(d.state_type, dst.state, src.state);
      dst.clock = std::max(dst.clock, src.clock);
      for (size_t i = 0; i < dst.seen.size(); ++i) dst.seen[i] |= src.seen[i];
      break;
    }
    case Event::Kind::QueryAll:
      if (e.query.size() != spec.query_fields.size())
        throw ScheduleError("query has the wrong number of fields");
      break;
  }
}

std::optional<Value> sequential_answer(const SequentialSpec &spec,
                                       const std::vector<OpValue> &ops,
                                       const QueryValue &q) {
  // Stable insertion by the strict part of the op order, then a check that
  // the arrangement is in order.
  auto before = [&](const OpValue &a, const OpValue &b) {
    return order_holds(spec, a, b) && !order_holds(spec, b, a);
  };
  std::vector<OpValue> log;
  for (const auto &op : ops) {
    size_t pos = log.size();
    while (pos > 0 && before(op, log[pos - 1])) --pos;
    log.insert(log.begin() + pos, op);
  }
  if (!log_in_order(spec, log)) return std::nullopt;
  return answer_query(spec, run_sequential(spec, log), q);
}

SimReport run(const CrdtDesign &d, const SequentialSpec &spec,
              const Schedule &schedule) {
  SimReport rep;
  rep.state_type = d.state_type;
  rep.replicas = initial_replicas(d, schedule.replicas);
  // Sequential answers keyed by the delivered-op mask and query.
  std::map<std::pair<std::vector<uint8_t>, QueryValue>, std::optional<Value>> memo;
  for (size_t ei = 0; ei < schedule.events.size(); ++ei) {
    const Event &e = schedule.events[ei];
    std::vector<Value> before;
    for (const auto &r : rep.replicas) before.push_back(r.state);
    step(spec, d, rep.replicas, e, rep.applied);
    for (size_t i = 0; i < rep.replicas.size(); ++i)
      if (!leq(d.state_type, before[i], rep.replicas[i].state))
        rep.witnesses.push_back({"monotonicity", ei, static_cast<int>(i), -1,
                                 "state moved down the lattice"});
    if (e.kind != Event::Kind::QueryAll) continue;
    QueryRow row;
    row.event = ei;
    row.query = e.query;
    for (size_t i = 0; i < rep.replicas.size(); ++i) {
      const Replica &r = rep.replicas[i];
      row.answers.push_back(eval_query_star(spec, d, r.state, e.query));
      auto key = std::make_pair(r.seen, e.query);
      auto it = memo.find(key);
      if (it == memo.end()) {
        std::vector<OpValue> ops;
        for (size_t k = 0; k < r.seen.size(); ++k)
          if (r.seen[k]) ops.push_back(rep.applied[k]);
        it = memo.emplace(key, sequential_answer(spec, ops, e.query)).first;
      }
      row.expected.push_back(it->second);
      if (it->second && *it->second != row.answers.back())
        rep.witnesses.push_back(
            {"spec", ei, static_cast<int>(i), -1,
             fmt::format("answer {} but the sequential answer is {}",
                         to_string(row.answers.back()), to_string(*it->second))});
    }
    for (size_t i = 0; i < rep.replicas.size(); ++i)
      for (size_t j = i + 1; j < rep.replicas.size(); ++j)
        if (rep.replicas[i].seen == rep.replicas[j].seen &&
            row.answers[i] != row.answers[j])
          rep.witnesses.push_back(
              {"answer", ei, static_cast<int>(i), static_cast<int>(j),
               fmt::format("same ops delivered, answers {} and {}",
                           to_string(row.answers[i]), to_string(row.answers[j]))});
    rep.queries.push_back(std::move(row));
  }
  rep.converged = check_convergence(rep);
  if (!rep.converged) {
    const auto &lt = d.state_type;
    for (size_t i = 0; i < rep.replicas.size(); ++i)
      for (size_t j = i + 1; j < rep.replicas.size(); ++j)
        if (!semantic_eq(lt, rep.replicas[i].state, rep.replicas[j].state))
          rep.witnesses.push_back(
              {"state", schedule.events.size(), static_cast<int>(i),
               static_cast<int>(j),
               fmt::format("{} vs {}", to_string(rep.replicas[i].state),
                           to_string(rep.replicas[j].state))});
  }
  return rep;
}

bool check_convergence(const SimReport &r) {
  for (size_t i = 0; i < r.replicas.size(); ++i)
    for (size_t j = i + 1; j < r.replicas.size(); ++j)
      if (!semantic_eq(r.state_type, r.replicas[i].state, r.replicas[j].state))
        return false;
  return true;
}

Schedule random_schedule(const SequentialSpec &spec, int replicas, int op_count,
                         double gossip_rate, uint64_t seed) {
  if (replicas < 1) throw ScheduleError("need at least one replica");
  Schedule s;
  s.name = fmt::format("random-{}", seed);
  s.replicas = replicas;
  s.seed = seed;
  std::mt19937_64 rng(seed);
  auto pick = [&](size_t n) { return static_cast<size_t>(rng() % n); };
  auto coin = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  Universe u = Universe::of_size(spec, 3);
  int applies = 0;
  while (applies < op_count) {
    if (replicas > 1 && coin() < gossip_rate) {
      int from = static_cast<int>(pick(replicas));
      int to = static_cast<int>(pick(replicas - 1));
      if (to >= from) ++to;
      s.events.push_back(Event::gossip(from, to));
      continue;
    }
    OpValue args;
    for (int attempt = 0; attempt < 100; ++attempt) {
      args.clear();
      for (const auto &f : spec.op_fields) {
        const auto &dom = u.domain(f);
        args.push_back(dom[pick(dom.size())]);
      }
      OpValue probe = args;
      if (spec.flags.timestamps) probe.push_back(1);
      if (precondition_holds(spec, probe)) break;
    }
    s.events.push_back(Event::apply(static_cast<int>(pick(replicas)), args));
    ++applies;
  }
  // Quiescence: replica r-1 collects everything, then every replica has
  // heard from it.
  for (int i = 0; i < replicas; ++i)
    for (int j = 0; j < replicas; ++j)
      if (i != j) s.events.push_back(Event::gossip(i, j));
  for (const auto &q : universe_queries(spec, u)) s.events.push_back(Event::query_all(q));
  return s;
}

std::vector<std::string> fixture_names() {
  return {"fig1-left", "fig1-middle", "fig1-gossip"};
}

Schedule fixture_schedule(const std::string &name) {
  // Two-Phase Set op fields are (add, v); add = 1 inserts, 0 removes.
  Schedule s;
  s.name = name;
  s.replicas = 2;
  auto ins = [](int r, int64_t v) { return Event::apply(r, {1, v}); };
  auto rem = [](int r, int64_t v) { return Event::apply(r, {0, v}); };
  if (name == "fig1-left") {
    s.events = {ins(0, 1), rem(1, 1), Event::gossip(0, 1), Event::gossip(1, 0),
                Event::query_all({1})};
  } else if (name == "fig1-middle") {
    s.events = {ins(0, 1),           ins(1, 2),           Event::gossip(1, 0),
                rem(1, 2),           Event::gossip(0, 1), Event::gossip(1, 0),
                Event::query_all({1}), Event::query_all({2})};
  } else if (name == "fig1-gossip") {
    s.events = {ins(0, 1),           ins(1, 2),           rem(1, 2),
                Event::gossip(0, 1), Event::gossip(1, 0), Event::query_all({1}),
                Event::query_all({2})};
  } else {
    throw ScheduleError("unknown scenario '" + name + "'");
  }
  return s;
}

json schedule_to_json(const SequentialSpec &spec, const Schedule &s) {
  json ev = json::array();
  for (const auto &e : s.events) {
    switch (e.kind) {
      case Event::Kind::Apply:
        ev.push_back({{"apply",
                       {{"replica", e.replica},
                        {"op", scalar_tuple_to_json(spec.op_fields, e.args)}}}});
        break;
      case Event::Kind::Gossip:
        ev.push_back({{"gossip", {{"from", e.from}, {"to", e.to}}}});
        break;
      case Event::Kind::QueryAll:
        ev.push_back({{"query_all", scalar_tuple_to_json(spec.query_fields, e.query)}});
        break;
    }
  }
  return {{"name", s.name}, {"replicas", s.replicas}, {"seed", s.seed}, {"events", ev}};
}

Schedule schedule_from_json(const SequentialSpec &spec, const json &j) {
  Schedule s;
  s.name = j.value("name", "");
  s.replicas = j.at("replicas").get<int>();
  s.seed = j.value("seed", uint64_t{0});
  for (const auto &e : j.at("events")) {
    if (e.contains("apply")) {
      const auto &a = e.at("apply");
      s.events.push_back(Event::apply(a.at("replica").get<int>(),
                                      scalar_tuple_from_json(spec.op_fields, a.at("op"))));
    } else if (e.contains("gossip")) {
      const auto &g = e.at("gossip");
      s.events.push_back(Event::gossip(g.at("from").get<int>(), g.at("to").get<int>()));
    } else if (e.contains("query_all")) {
      s.events.push_back(
          Event::query_all(scalar_tuple_from_json(spec.query_fields, e.at("query_all"))));
    } else {
      throw ScheduleError("unknown event " + e.dump());
    }
  }
  return s;
}

json sim_report_to_json(const SequentialSpec &spec, const CrdtDesign &d,
                        const SimReport &r) {
  json reps = json::array();
  for (const auto &x : r.replicas)
    reps.push_back({{"node_id", x.node_id},
                    {"clock", x.clock},
                    {"state", value_to_json(d.state_type, x.state)}});
  json qs = json::array();
  for (const auto &row : r.queries) {
    json ans = json::array(), exp = json::array();
    for (const auto &a : row.answers) ans.push_back(plain_value_to_json(spec.query_sort, a));
    for (const auto &e : row.expected)
      exp.push_back(e ? plain_value_to_json(spec.query_sort, *e) : json(nullptr));
    qs.push_back({{"event", row.event},
                  {"query", scalar_tuple_to_json(spec.query_fields, row.query)},
                  {"answers", ans},
                  {"expected", exp}});
  }
  json ws = json::array();
  for (const auto &w : r.witnesses) {
    json x = {{"kind", w.kind}, {"event", w.event}, {"replica", w.a}, {"detail", w.detail}};
    if (w.b >= 0) x["other"] = w.b;
    ws.push_back(std::move(x));
  }
  json ops = json::array();
  for (const auto &op : r.applied) ops.push_back(scalar_tuple_to_json(spec.signature(), op));
  return {{"format_version", 1},
          {"design", d.name},
          {"spec", spec.name},
          {"converged", r.converged},
          {"replicas", reps},
          {"applied", ops},
          {"queries", qs},
          {"witnesses", ws}};
}

}  // namespace katalite
