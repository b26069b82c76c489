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

// katalite: command-line driver.
//
// Exit codes: 0 success, 1 verification failure or nothing found,
// 2 inconclusive or timeout, 3 usage / input error.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "katalite/designs.hpp"
#include "katalite/grammar.hpp"
#include "katalite/simulator.hpp"
#include "katalite/synthesizer.hpp"

namespace {

using namespace katalite;

constexpr int kOk = 0, kFail = 1, kInconclusive = 2, kUsage = 3;

struct Globals {
  std::string format = "pretty";
  std::string log_level = "warn";
  bool json() const { return format == "json"; }
};

void emit_json(const json &j) { std::cout << j.dump(2) << "\n"; }

// "ref:<name>" for a shipped design, otherwise a *.design.json path.
CrdtDesign resolve_design(const std::string &ref) {
  if (ref.rfind("ref:", 0) == 0) {
    const CrdtDesign *d = designs::find(ref.substr(4));
    if (!d) throw SpecError("unknown reference design '" + ref + "'");
    return *d;
  }
  return load_design(ref);
}

// Inline JSON or @path.
LatticeType parse_type_arg(const std::string &arg) {
  std::string text = arg;
  if (!arg.empty() && arg[0] == '@') {
    std::ifstream in(arg.substr(1));
    if (!in) throw SpecError("cannot open '" + arg.substr(1) + "'");
    text.assign(std::istreambuf_iterator<char>(in), {});
  }
  try {
    LatticeType t = lattice_from_json(json::parse(text));
    check_well_formed(t);
    return t;
  } catch (const json::exception &e) {
    throw SpecError(std::string("bad state type: ") + e.what());
  }
}

void write_file(const std::string &path, const std::string &text) {
  std::ofstream out(path);
  if (!out) throw SpecError("cannot write '" + path + "'");
  out << text;
}

// ---------------------------------------------------------------- bench

int cmd_bench_list(const Globals &g) {
  auto benches = builtin_benchmarks();
  if (g.json()) {
    json arr = json::array();
    for (const auto &s : benches) {
      json refs = json::array();
      for (const auto &d : designs::reference())
        if (d.spec == s.name) refs.push_back(d.name);
      arr.push_back({{"name", s.name},
                     {"title", s.title},
                     {"timestamps", s.flags.timestamps},
                     {"non_idempotent", s.flags.non_idempotent},
                     {"op_fields", s.op_fields.size()},
                     {"query_fields", s.query_fields.size()},
                     {"reference_designs", refs}});
    }
    emit_json(arr);
    return kOk;
  }
  fmt::print("{:<20} {:<28} {:<11} {:<15} {}\n", "name", "title", "timestamps",
             "non-idempotent", "reference designs");
  for (const auto &s : benches) {
    std::string refs;
    for (const auto &d : designs::reference())
      if (d.spec == s.name) refs += (refs.empty() ? "" : ", ") + d.name;
    fmt::print("{:<20} {:<28} {:<11} {:<15} {}\n", s.name, s.title,
               s.flags.timestamps ? "yes" : "no", s.flags.non_idempotent ? "yes" : "no",
               refs);
  }
  return kOk;
}

// ---------------------------------------------------------------- spec

int cmd_spec_show(const Globals &, const std::string &ref) {
  SequentialSpec s = load_spec(ref);
  validate_spec(s);
  emit_json(spec_to_json(s));
  return kOk;
}

int cmd_spec_validate(const Globals &g, const std::string &ref) {
  SequentialSpec s = load_spec(ref);
  validate_spec(s);
  if (g.json())
    emit_json({{"valid", true}, {"name", s.name}});
  else
    fmt::print("{}: valid\n", s.name);
  return kOk;
}

// ---------------------------------------------------------------- verify

struct VerifyOpts {
  std::string spec, design;
  int universe = 3;
  int log_bound = 4;
  bool minimize = true;
};

int cmd_verify(const Globals &g, const VerifyOpts &o) {
  SequentialSpec spec = load_spec(o.spec);
  validate_spec(spec);
  CrdtDesign d = resolve_design(o.design);
  validate_design(spec, d);
  Verdict v = check_bounded(spec, d, Universe::of_size(spec, o.universe), o.log_bound);
  if (v.cex && o.minimize) v.cex = minimize_counterexample(spec, d, *v.cex);
  if (g.json()) {
    emit_json(verdict_to_json(spec, v));
  } else {
    fmt::print("{}: {} (universe {}, log bound {}, {} checks)\n", d.name,
               verdict_name(v.kind), v.universe, v.log_bound, v.checks);
    if (v.cex) std::cout << counterexample_to_json(spec, *v.cex).dump(2) << "\n";
    if (!v.reason.empty()) fmt::print("reason: {}\n", v.reason);
  }
  switch (v.kind) {
    case VerdictKind::Pass: return kOk;
    case VerdictKind::Fail: return kFail;
    case VerdictKind::Inconclusive: return kInconclusive;
  }
  return kFail;
}

// ---------------------------------------------------------------- synthesize

struct SynthOpts {
  std::string spec;
  int max_depth = 4;
  int log_bound = 2;
  int universe = 3;
  int threads = 0;
  bool deterministic = false;
  bool racing = false;
  int all = 0;
  std::string hint;
  double timeout = 0;
  std::string report;
  std::string out_dir = ".";
  bool no_cache = false;
  bool no_write = false;
  bool grammar_stats = false;
};

int cmd_synthesize(const Globals &g, const SynthOpts &o) {
  SequentialSpec spec = load_spec(o.spec);
  validate_spec(spec);
  SearchConfig cfg;
  cfg.max_depth = o.max_depth;
  cfg.initial_log_bound = o.log_bound;
  cfg.universe = o.universe;
  cfg.workers = o.threads;
  cfg.deterministic = !o.racing;
  cfg.timeout_s = o.timeout;
  cfg.use_cache = !o.no_cache;
  if (!o.hint.empty()) cfg.hint_state = parse_type_arg(o.hint);
  if (o.grammar_stats) {
    for (int d = 2; d <= cfg.max_depth; ++d)
      spdlog::info("depth {}: {} candidate state types", d,
                   candidate_state_types(spec, d, cfg).size());
  }
  SearchReport r = o.all > 0 ? search_all(spec, cfg, o.all) : search(spec, cfg);
  json rep = report_to_json(spec, r, cfg);
  if (!o.report.empty()) write_file(o.report, rep.dump(2) + "\n");
  std::vector<std::string> files;
  if (!o.no_write)
    for (const auto &d : r.designs) {
      std::string path = o.out_dir + "/" + d.name + ".design.json";
      write_file(path, design_to_json(d).dump(2) + "\n");
      files.push_back(path);
    }
  if (g.json()) {
    rep["design_files"] = files;
    emit_json(rep);
  } else {
    for (const auto &d : r.designs) std::cout << design_pretty(spec, d) << "\n";
    for (const auto &f : files) fmt::print("wrote {}\n", f);
    fmt::print("{} state types explored, {} transition candidates, {} full checks, "
               "{} cache hits, {:.0f} ms\n",
               r.types_explored, r.transition_candidates, r.full_checks, r.cache_hits,
               r.wall_ms);
    if (!r.found) fmt::print("no design: {}\n", r.reason);
  }
  if (r.found) return kOk;
  return r.timed_out ? kInconclusive : kFail;
}

// ---------------------------------------------------------------- simulate

struct SimOpts {
  std::string spec, design, scenario;
  int replicas = 3;
  int ops = 100;
  double gossip_rate = 0.3;
  uint64_t seed = 0;
};

int cmd_simulate(const Globals &g, const SimOpts &o) {
  SequentialSpec spec = load_spec(o.spec);
  validate_spec(spec);
  CrdtDesign d = resolve_design(o.design);
  validate_design(spec, d);
  Schedule s = o.scenario.empty()
                   ? random_schedule(spec, o.replicas, o.ops, o.gossip_rate, o.seed)
                   : fixture_schedule(o.scenario);
  SimReport r = run(d, spec, s);
  if (g.json()) {
    json j = sim_report_to_json(spec, d, r);
    j["schedule"] = schedule_to_json(spec, s);
    emit_json(j);
  } else {
    fmt::print("{} on {}: {} events, {} replicas, {}\n", d.name, s.name,
               s.events.size(), s.replicas, r.converged ? "converged" : "diverged");
    for (const auto &rep : r.replicas)
      fmt::print("  node {} (clock {}): {}\n", rep.node_id, rep.clock,
                 to_string(rep.state));
    for (const auto &w : r.witnesses)
      fmt::print("  witness [{}] event {} replica {}: {}\n", w.kind, w.event, w.a,
                 w.detail);
  }
  return r.converged && r.witnesses.empty() ? kOk : kFail;
}

// ---------------------------------------------------------------- grammar

struct GrammarOpts {
  std::string spec, state, role = "transition";
  int depth = 3;
  int count = 20;
};

int cmd_grammar_dump(const Globals &g, const GrammarOpts &o) {
  SequentialSpec spec = load_spec(o.spec);
  validate_spec(spec);
  LatticeType type = parse_type_arg(o.state);
  Role role = o.role == "query" ? Role::Query : Role::StateTransition;
  GrammarConfig cfg;
  cfg.depth = o.depth;
  cfg.constants = spec.constants();
  cfg.flags = spec.flags;
  cfg.role = role;
  Sort target = role == Role::Query ? spec.query_sort : Sort::lattice(type);
  cfg.targets = {target};
  Samples samples = make_samples(spec, role, type, Universe::of_size(spec, 4), 16);
  TermBank bank(cfg, std::move(samples), type);
  bank.grow_to(o.depth);
  auto terms = bank.upto(target, o.depth);
  json arr = json::array();
  int shown = 0;
  for (const auto *e : terms) {
    if (shown++ >= o.count) break;
    if (g.json())
      arr.push_back({{"size", e->term->size}, {"depth", e->term->depth},
                     {"term", pretty(*e->term)}});
    else
      fmt::print("{:>4} d{} {}\n", e->term->size, e->term->depth, pretty(*e->term));
  }
  if (g.json())
    emit_json({{"role", role_name(role)},
               {"sort", to_string(target)},
               {"total", terms.size()},
               {"truncated", bank.truncated()},
               {"terms", arr}});
  else
    fmt::print("{} of {} terms of sort {}{}\n", std::min<size_t>(o.count, terms.size()),
               terms.size(), to_string(target), bank.truncated() ? " (truncated)" : "");
  return kOk;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"katalite: synthesize and check state-based CRDTs"};
  app.require_subcommand(1);
  // Global flags are accepted after the subcommand too.
  app.fallthrough();
  Globals g;
  app.add_option("--format", g.format, "Output format")
      ->check(CLI::IsMember({"json", "pretty"}));
  app.add_option("--log-level", g.log_level, "trace|debug|info|warn|error|off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  auto *bench = app.add_subcommand("bench", "Built-in benchmarks");
  bench->require_subcommand(1);
  auto *bench_list = bench->add_subcommand("list", "List the benchmark specs");

  auto *spec_cmd = app.add_subcommand("spec", "Sequential specifications");
  spec_cmd->require_subcommand(1);
  std::string spec_ref;
  auto *spec_show = spec_cmd->add_subcommand("show", "Print the normalized spec");
  spec_show->add_option("spec", spec_ref, "bench:<name> or a .spec.json path")->required();
  auto *spec_validate = spec_cmd->add_subcommand("validate", "Validate a spec");
  spec_validate->add_option("spec", spec_ref)->required();

  VerifyOpts vo;
  auto *verify = app.add_subcommand("verify", "Bounded check of a design");
  verify->add_option("--spec", vo.spec)->required();
  verify->add_option("--design", vo.design, "ref:<name> or a .design.json path")
      ->required();
  verify->add_option("--universe", vo.universe)->check(CLI::Range(1, 16));
  verify->add_option("--log-bound", vo.log_bound)->check(CLI::Range(0, 12));
  verify->add_flag("!--no-minimize", vo.minimize, "Keep the first counterexample");

  SynthOpts so;
  auto *synth = app.add_subcommand("synthesize", "Search for a design");
  synth->add_option("--spec", so.spec)->required();
  synth->add_option("--max-depth", so.max_depth)->check(CLI::Range(2, 10));
  synth->add_option("--log-bound", so.log_bound, "Initial phase-1 log bound")
      ->check(CLI::Range(1, 8));
  synth->add_option("--universe", so.universe)->check(CLI::Range(1, 8));
  synth->add_option("--threads", so.threads)
      ->envname("KATALITE_THREADS")
      ->check(CLI::Range(0, 1024));
  synth->add_flag("--deterministic", so.deterministic,
                  "Lowest-index winner (default)");
  synth->add_flag("--racing", so.racing, "First finished worker wins")
      ->excludes("--deterministic");
  synth->add_option("--all", so.all, "Collect up to K structurally distinct designs")
      ->check(CLI::Range(1, 16));
  synth->add_option("--hint-state", so.hint, "State type as JSON or @file");
  synth->add_option("--timeout", so.timeout, "Seconds")->check(CLI::NonNegativeNumber);
  synth->add_option("--report", so.report, "Write the search report here");
  synth->add_option("--out-dir", so.out_dir, "Directory for design files");
  synth->add_flag("--no-write", so.no_write, "Do not write design files");
  synth->add_flag("--no-cache", so.no_cache, "Disable the counterexample cache");
  synth->add_flag("--grammar-stats", so.grammar_stats,
                  "Log candidate state type counts per depth");

  SimOpts mo;
  auto *sim = app.add_subcommand("simulate", "Run replicas under a schedule");
  sim->add_option("--spec", mo.spec)->required();
  sim->add_option("--design", mo.design)->required();
  sim->add_option("--replicas", mo.replicas)->check(CLI::Range(1, 64));
  sim->add_option("--ops", mo.ops)->check(CLI::Range(0, 1000000));
  sim->add_option("--gossip-rate", mo.gossip_rate)->check(CLI::Range(0.0, 1.0));
  sim->add_option("--seed", mo.seed);
  sim->add_option("--scenario", mo.scenario)
      ->check(CLI::IsMember(fixture_names()));

  GrammarOpts go;
  auto *gram = app.add_subcommand("grammar", "Inspect the candidate grammar");
  gram->require_subcommand(1);
  auto *gdump = gram->add_subcommand("dump", "Print the first candidates in size order");
  gdump->add_option("--spec", go.spec)->required();
  gdump->add_option("--state", go.state, "State type as JSON or @file")->required();
  gdump->add_option("--role", go.role)->check(CLI::IsMember({"transition", "query"}));
  gdump->add_option("--depth", go.depth)->check(CLI::Range(1, 8));
  gdump->add_option("-n,--count", go.count)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  auto logger = spdlog::stderr_color_mt("katalite");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(g.log_level));

  try {
    if (bench_list->parsed()) return cmd_bench_list(g);
    if (spec_show->parsed()) return cmd_spec_show(g, spec_ref);
    if (spec_validate->parsed()) return cmd_spec_validate(g, spec_ref);
    if (verify->parsed()) return cmd_verify(g, vo);
    if (synth->parsed()) return cmd_synthesize(g, so);
    if (sim->parsed()) return cmd_simulate(g, mo);
    if (gdump->parsed()) return cmd_grammar_dump(g, go);
  } catch (const std::exception &e) {
    spdlog::error("{}", e.what());
    return kUsage;
  }
  return kUsage;
}
