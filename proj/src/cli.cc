/* Copyright 2026 The Pipeplan Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "pipeplan/cli.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "CLI11.hpp"
#include "pipeplan/errors.h"
#include "pipeplan/partitioner.h"
#include "pipeplan/profile.h"
#include "pipeplan/schedule.h"
#include "pipeplan/simulator.h"

namespace pipeplan {

using nlohmann::json;
namespace fs = std::filesystem;

json ManifestToJson(const RunManifest& manifest) {
  return {{"command", manifest.command},
          {"inputs", manifest.inputs},
          {"tool_version", manifest.tool_version},
          {"seed", manifest.seed}};
}

std::vector<RegimeResult> CompareRegimes(const CostContext& ctx,
                                         std::int64_t num_minibatches) {
  auto simulate = [&](const Plan& plan, int max_inflight) {
    SimConfig cfg;
    cfg.plan = plan;
    cfg.max_inflight = max_inflight;
    cfg.num_minibatches = num_minibatches;
    return MeasureThroughput(Run(cfg, ctx).report);
  };

  const double single = simulate(DataParallelPlan(ctx, 1), 0);
  const Plan straight = Solve(ctx, {.max_replication = 1});
  const Plan full = Solve(ctx);
  const Plan data_parallel = DataParallelPlan(ctx, ctx.hw().num_machines);

  std::vector<RegimeResult> out;
  auto add = [&](std::string name, const Plan& plan, int max_inflight) {
    const double thr = simulate(plan, max_inflight);
    out.push_back({std::move(name), ConfigString(plan), thr, thr / single});
  };
  add("model_parallel", straight, 1);
  add("straight_pipeline", straight, 0);
  add("pipeline_parallel", full, 0);
  add("data_parallel", data_parallel, 0);
  return out;
}

namespace {

struct HardwareFlags {
  int machines = 1;
  double bandwidth = 1.25e9;
  double bytes_per_elem = 4.0;

  HardwareSpec spec() const { return {machines, bandwidth, bytes_per_elem}; }
};

void AddHardwareFlags(CLI::App* cmd, HardwareFlags& hw) {
  cmd->add_option("--machines", hw.machines, "Number of machines M")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--bandwidth", hw.bandwidth, "Link bandwidth in bytes/s")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--bytes-per-elem", hw.bytes_per_elem,
                  "Bytes per activation/parameter element")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

std::string Num(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

void WriteJson(const fs::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << doc.dump(2) << "\n";
}

fs::path PrepareOutDir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw FormatError("cannot create output directory " + dir);
  return p;
}

std::string StageList(const Plan& plan) {
  std::ostringstream os;
  for (std::size_t k = 0; k < plan.stages.size(); ++k) {
    const Stage& s = plan.stages[k];
    if (k) os << ' ';
    os << '[' << s.first_layer << '-' << s.last_layer << "]x" << s.replication;
  }
  return os.str();
}

Plan LoadPlan(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open plan file " + path.string());
  try {
    return PlanFromJson(json::parse(in));
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

int CmdSynth(const std::string& kind, int layers, std::uint64_t seed,
             const std::string& out_path, std::ostream& out) {
  const ModelProfile p = SynthProfile(ParseSynthKind(kind), layers, seed);
  SaveProfile(p, out_path);
  out << "profile: " << out_path << "\n"
      << "layers: " << p.num_layers() << "\n";
  return kExitOk;
}

struct PlanArgs {
  std::string profile;
  HardwareFlags hw;
  bool force_all = false;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
};

int CmdPlan(const PlanArgs& a, std::ostream& out) {
  const CostContext ctx(LoadProfile(a.profile), a.hw.spec());
  const Plan plan = Solve(ctx, {.force_all_machines = a.force_all});
  const double bsp = ctx.CommVolumeBsp(ctx.hw().num_machines);
  const double pp = ctx.CommVolumePipeline(plan);

  RunManifest manifest{"plan",
                       {{"profile", a.profile},
                        {"machines", std::to_string(a.hw.machines)},
                        {"bandwidth", Num(a.hw.bandwidth)},
                        {"bytes_per_elem", Num(a.hw.bytes_per_elem)},
                        {"force_all_machines", a.force_all ? "true" : "false"}},
                       kToolVersion,
                       a.seed};
  json doc = PlanToJson(plan);
  doc["manifest"] = ManifestToJson(manifest);
  doc["predicted_throughput"] = 1.0 / plan.bottleneck_time;
  doc["comm_bytes_bsp"] = bsp;
  doc["comm_bytes_pipeline"] = pp;
  const fs::path path = PrepareOutDir(a.out_dir) / "plan.json";
  WriteJson(path, doc);

  out << "config: " << ConfigString(plan) << "\n"
      << "stages: " << StageList(plan) << "\n"
      << "bottleneck_time: " << Num(plan.bottleneck_time) << "\n"
      << "noam: " << plan.noam << "\n"
      << "machines_used: " << plan.machines_used << "\n"
      << "predicted_throughput: " << Num(1.0 / plan.bottleneck_time) << "\n"
      << "comm_bytes_bsp: " << Num(bsp) << "\n"
      << "comm_bytes_pipeline: " << Num(pp) << "\n"
      << "comm_reduction: ";
  if (bsp > 0.0) {
    out << std::fixed << std::setprecision(2) << 100.0 * (1.0 - pp / bsp) << "%\n"
        << std::defaultfloat;
  } else {
    out << "n/a (no comm)\n";
  }
  out << "plan_file: " << path.string() << "\n";
  return kExitOk;
}

struct SimulateArgs {
  std::string plan;
  std::string profile;
  HardwareFlags hw;
  std::string mode = "stash";
  std::int64_t minibatches = 100;
  int max_inflight = 0;
  bool no_overlap = false;
  bool expect_naive = false;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
};

int CmdSimulate(const SimulateArgs& a, std::ostream& out) {
  const ModelProfile profile = LoadProfile(a.profile);
  const Plan plan = LoadPlan(a.plan);
  ValidatePlan(plan, profile.num_layers());
  HardwareSpec hw = a.hw.spec();
  hw.num_machines = std::max(hw.num_machines, plan.machines_used);
  const CostContext ctx(profile, hw);

  SimConfig cfg;
  cfg.plan = plan;
  cfg.mode = ParseVersionMode(a.mode);
  cfg.max_inflight = a.max_inflight;
  cfg.num_minibatches = a.minibatches;
  cfg.overlap_comm = !a.no_overlap;
  const SimResult result = Run(cfg, ctx);
  const int inflight = a.max_inflight == 0 ? plan.noam : a.max_inflight;

  json staleness;
  bool passed = true;
  std::string staleness_line;
  if (plan.is_straight()) {
    const std::vector<StalenessViolation> violations =
        StalenessCheck(result.ledger, cfg.mode, plan.num_stages(), inflight);
    passed = violations.empty();
    staleness = {{"checked", true}, {"violations", violations.size()}};
    staleness_line = passed ? "pass (0 violations)"
                            : "FAIL (" + std::to_string(violations.size()) +
                                  " violations)";
  } else {
    staleness = {{"checked", false}, {"violations", 0}};
    staleness_line = "n/a (replicated plan)";
  }

  RunManifest manifest{"simulate",
                       {{"plan", a.plan},
                        {"profile", a.profile},
                        {"bandwidth", Num(a.hw.bandwidth)},
                        {"bytes_per_elem", Num(a.hw.bytes_per_elem)},
                        {"mode", std::string(VersionModeName(cfg.mode))},
                        {"minibatches", std::to_string(a.minibatches)},
                        {"max_inflight", std::to_string(inflight)},
                        {"overlap_comm", cfg.overlap_comm ? "true" : "false"}},
                       kToolVersion,
                       a.seed};
  json doc = ReportToJson(result.report);
  doc["manifest"] = ManifestToJson(manifest);
  doc["staleness"] = staleness;
  doc["analytic_throughput"] = 1.0 / plan.bottleneck_time;
  const fs::path dir = PrepareOutDir(a.out_dir);
  WriteJson(dir / "report.json", doc);
  {
    std::ofstream trace(dir / "trace.csv");
    WriteTraceCsv(result.trace, trace);
    std::ofstream schedule(dir / "schedule.csv");
    WriteScheduleCsv(BuildSchedule(plan, inflight, a.minibatches), schedule);
  }

  const SimReport& r = result.report;
  out << "mode: " << VersionModeName(cfg.mode) << "\n"
      << "config: " << ConfigString(plan) << "\n"
      << "makespan: " << Num(r.makespan) << "\n";
  if (r.has_steady_window) {
    out << "steady_throughput: " << Num(r.steady_throughput) << "\n"
        << "analytic_throughput: " << Num(1.0 / plan.bottleneck_time) << "\n"
        << "relative_error: " << Num(CompareAnalytic(r, plan)) << "\n";
  } else {
    out << "steady_throughput: n/a (no steady window)\n";
  }
  out << "utilization:";
  for (double u : r.per_worker_utilization) out << ' ' << Num(u);
  out << "\npeak_inflight:";
  for (int v : r.peak_inflight_per_stage) out << ' ' << v;
  out << "\npeak_versions:";
  for (int v : r.peak_versions_per_stage) out << ' ' << v;
  out << "\ncomm_bytes_total: " << Num(r.comm_bytes_total) << "\n"
      << "staleness: " << staleness_line << "\n"
      << "output_dir: " << dir.string() << "\n";

  if (passed) return kExitOk;
  if (cfg.mode == VersionMode::kNaive && a.expect_naive) return kExitOk;
  return kExitSimulation;
}

struct CompareArgs {
  std::string profile;
  HardwareFlags hw;
  std::int64_t minibatches = 200;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
};

int CmdCompare(const CompareArgs& a, std::ostream& out) {
  const CostContext ctx(LoadProfile(a.profile), a.hw.spec());
  const std::vector<RegimeResult> rows = CompareRegimes(ctx, a.minibatches);

  json table = json::array();
  std::size_t config_width = 8;
  for (const RegimeResult& row : rows) {
    config_width = std::max(config_width, row.config.size() + 2);
  }
  const int cw = static_cast<int>(config_width);
  out << std::left << std::setw(20) << "regime" << std::setw(cw) << "config"
      << std::setw(16) << "throughput" << "speedup\n";
  for (const RegimeResult& row : rows) {
    out << std::setw(20) << row.name << std::setw(cw) << row.config << std::setw(16)
        << Num(row.throughput) << std::fixed << std::setprecision(3) << row.speedup
        << "x\n"
        << std::defaultfloat;
    table.push_back({{"regime", row.name},
                     {"config", row.config},
                     {"throughput", row.throughput},
                     {"speedup", row.speedup}});
  }
  RunManifest manifest{"compare",
                       {{"profile", a.profile},
                        {"machines", std::to_string(a.hw.machines)},
                        {"bandwidth", Num(a.hw.bandwidth)},
                        {"bytes_per_elem", Num(a.hw.bytes_per_elem)},
                        {"minibatches", std::to_string(a.minibatches)}},
                       kToolVersion,
                       a.seed};
  const json doc = {{"manifest", ManifestToJson(manifest)}, {"regimes", table}};
  WriteJson(PrepareOutDir(a.out_dir) / "compare.json", doc);
  return kExitOk;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Pipeline-parallel training planner and simulator", "pipeplan"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  std::string synth_kind = "vgg_like";
  int synth_layers = 16;
  std::uint64_t synth_seed = 0;
  std::string synth_out = "profile.json";
  CLI::App* synth = app.add_subcommand("synth", "Write a synthetic profile");
  synth->add_option("--kind", synth_kind, "uniform | vgg_like | inception_like")
      ->capture_default_str();
  synth->add_option("--layers", synth_layers, "Number of layers")->capture_default_str();
  synth->add_option("--seed", synth_seed, "Generator seed")->capture_default_str();
  synth->add_option("--out", synth_out, "Output profile path")->capture_default_str();

  PlanArgs plan_args;
  CLI::App* plan = app.add_subcommand("plan", "Partition a profile into stages");
  plan->add_option("profile", plan_args.profile, "Profile JSON")->required();
  AddHardwareFlags(plan, plan_args.hw);
  plan->add_flag("--force-all-machines", plan_args.force_all,
                 "Use exactly --machines workers");
  plan->add_option("--out-dir", plan_args.out_dir, "Output directory")
      ->capture_default_str();
  plan->add_option("--seed", plan_args.seed, "Recorded in the manifest")
      ->capture_default_str();

  SimulateArgs sim_args;
  CLI::App* simulate = app.add_subcommand("simulate", "Simulate a plan");
  simulate->add_option("plan", sim_args.plan, "Plan JSON from `plan`")->required();
  simulate->add_option("profile", sim_args.profile, "Profile JSON")->required();
  AddHardwareFlags(simulate, sim_args.hw);
  simulate->add_option("--mode", sim_args.mode, "naive | stash | vsync")
      ->capture_default_str();
  simulate->add_option("--minibatches", sim_args.minibatches, "Minibatches to run")
      ->capture_default_str();
  simulate->add_option("--max-inflight", sim_args.max_inflight,
                       "Admitted minibatches per input worker (0 = NOAM)")
      ->capture_default_str();
  simulate->add_flag("--no-overlap", sim_args.no_overlap,
                     "Block senders until transfers complete");
  simulate->add_flag("--expect-naive", sim_args.expect_naive,
                     "Exit 0 when naive mode shows staleness violations");
  simulate->add_option("--out-dir", sim_args.out_dir, "Output directory")
      ->capture_default_str();
  simulate->add_option("--seed", sim_args.seed, "Recorded in the manifest")
      ->capture_default_str();

  CompareArgs cmp_args;
  CLI::App* compare =
      app.add_subcommand("compare", "Simulated speedups of execution regimes");
  compare->add_option("profile", cmp_args.profile, "Profile JSON")->required();
  AddHardwareFlags(compare, cmp_args.hw);
  compare->add_option("--minibatches", cmp_args.minibatches, "Minibatches per run")
      ->capture_default_str();
  compare->add_option("--out-dir", cmp_args.out_dir, "Output directory")
      ->capture_default_str();
  compare->add_option("--seed", cmp_args.seed, "Recorded in the manifest")
      ->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*synth) return CmdSynth(synth_kind, synth_layers, synth_seed, synth_out, out);
    if (*plan) return CmdPlan(plan_args, out);
    if (*simulate) return CmdSimulate(sim_args, out);
    if (*compare) return CmdCompare(cmp_args, out);
  } catch (const SimulationError& e) {
    err << "simulation error: " << e.what() << "\n";
    return kExitSimulation;
  } catch (const ConsistencyError& e) {
    err << "simulation error: " << e.what() << "\n";
    return kExitSimulation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitUsage;
}

}  // namespace pipeplan
