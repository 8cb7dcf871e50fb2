#include "mlrel/cli.hpp"

#include <cmath>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mlrel/diagnostics.hpp"
#include "mlrel/errors.hpp"
#include "mlrel/estimators.hpp"
#include "mlrel/generator.hpp"
#include "mlrel/io.hpp"
#include "mlrel/level_selection.hpp"
#include "mlrel/simulator.hpp"

namespace mlrel::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

struct Options {
  std::uint64_t seed = 1;
  double eps = 0.0625;
  std::string eps_preset;
  double z = 1.96;
  int n = 10;
  double shape = 1.0;
  double scale_min = 2.0;
  double scale_max = 10.0;
  std::optional<double> repair_rate;
  double p_series = 1.0 / 3.0;
  double p_parallel = 1.0 / 3.0;
  double p_bridge = 1.0 / 3.0;
  std::size_t cap = kDefaultCutsetCap;
  std::string method = "lattice";
  std::string system;
  std::string partition;
  std::string out;
  std::string csv;
  std::string report;
  std::string manifest;
  std::size_t pilot = kDefaultPilotSamples;
  std::optional<int> levels;
  unsigned workers = 1;
  std::uint64_t batch = 2048;
  bool repairable = false;
  bool timing = false;
  bool all_levels = false;
  bool no_manifest = false;
  std::uint64_t samples = 1000;
  std::optional<std::uint64_t> mc_samples;
  std::optional<double> horizon;
  std::vector<double> eps_grid;
  std::string cost = "auto";
};

struct Context {
  const std::vector<std::string>& args;
  std::ostream& out;
  std::ostream& err;
  std::vector<std::string> outputs;
};

void emit(Context& ctx, const std::string& path, const std::string& text) {
  if (path.empty()) {
    ctx.out << text;
    return;
  }
  write_file_atomic(path, text);
  ctx.outputs.push_back(path);
}

std::string sibling(const std::string& path, const std::string& suffix) {
  if (path.empty()) return {};
  const fs::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

double resolved_eps(const Options& o) {
  if (o.eps_preset.empty()) return o.eps;
  return o.eps_preset == "coarse" ? 0x1p-4 : 0x1p-7;
}

CostBasis resolved_basis(const Options& o) {
  if (o.cost == "proxy") return CostBasis::kProxy;
  if (o.cost == "work") return CostBasis::kWork;
  if (o.cost == "seconds") return CostBasis::kSeconds;
  return o.repairable ? CostBasis::kWork : CostBasis::kProxy;
}

RunOptions run_options(const Options& o) {
  RunOptions r;
  r.seed = o.seed;
  r.workers = o.workers;
  r.batch_size = o.batch;
  r.timing = o.timing || o.cost == "seconds";
  return r;
}

CutsetMethod resolved_method(const Options& o) {
  return o.method == "paths" ? CutsetMethod::kPathDualization : CutsetMethod::kSeparatorLattice;
}

// Loads the system, fills in missing cut sets and applies a repair override.
System load_system(Options& o, bool need_cuts) {
  System sys = parse_system(read_text_file(o.system));
  validate_network(sys.network);
  if (need_cuts && sys.cutsets.empty())
    sys.cutsets = enumerate_min_cutsets(sys.network, o.cap, resolved_method(o));
  if (o.repair_rate) {
    for (auto& c : sys.components) c.repair = Distribution::exponential(*o.repair_rate);
    o.repairable = true;
  }
  if (o.repairable)
    for (std::size_t i = 0; i < sys.components.size(); ++i)
      if (!sys.components[i].repair)
        throw ParameterError("component " + std::to_string(i + 1) +
                             " has no repair distribution (use --repair-rate)");
  return sys;
}

LevelPartition obtain_partition(const System& sys, const Options& o) {
  if (!o.partition.empty())
    return parse_partition(read_text_file(o.partition), cutset_fingerprint(sys.cutsets));
  RngStream rng(o.seed, make_stream_id(StreamPurpose::kPilot, 0, 0));
  const PilotData pilot = pilot_scores(sys, o.pilot, rng, o.repairable);
  return build_partition(pilot, o.levels);
}

void cmd_generate(Context& ctx, Options& o) {
  GrowthConfig cfg;
  cfg.target_components = o.n;
  cfg.p_series = o.p_series;
  cfg.p_parallel = o.p_parallel;
  cfg.p_bridge = o.p_bridge;
  cfg.shape = o.shape;
  cfg.scale_min = o.scale_min;
  cfg.scale_max = o.scale_max;
  cfg.repair_rate = o.repair_rate;
  cfg.seed = o.seed;
  cfg.cutset_cap = o.cap;
  const System sys = grow(cfg);
  emit(ctx, o.out, dump_system(sys));
  if (!o.out.empty())
    ctx.out << "system: " << sys.component_count() << " components, " << sys.cutsets.size()
            << " minimal cut sets\n";
}

void cmd_cutsets(Context& ctx, Options& o) {
  System sys = load_system(o, false);
  sys.cutsets = enumerate_min_cutsets(sys.network, o.cap, resolved_method(o));
  emit(ctx, o.out, dump_system(sys));
  if (!o.out.empty()) ctx.out << "cut sets: " << sys.cutsets.size() << "\n";
}

void cmd_select_levels(Context& ctx, Options& o) {
  const System sys = load_system(o, true);
  RngStream rng(o.seed, make_stream_id(StreamPurpose::kPilot, 0, 0));
  const PilotData pilot = pilot_scores(sys, o.pilot, rng, o.repairable);
  const LevelPartition part = build_partition(pilot, o.levels);
  emit(ctx, o.out, dump_partition(part, cutset_fingerprint(sys.cutsets)));
  if (!o.out.empty()) {
    ctx.out << "levels:";
    for (auto s : part.sizes()) ctx.out << ' ' << s;
    ctx.out << "\n";
  }
}

void report_estimate(Context& ctx, const Options& o, const EstimateResult& r) {
  emit(ctx, o.out, dump_estimate(r, o.timing));
  const std::string csv = o.csv.empty() ? sibling(o.out, ".levels.csv") : o.csv;
  if (!csv.empty()) emit(ctx, csv, level_csv(r.levels));
  if (!o.out.empty())
    ctx.out << r.method << " estimate " << format_double(r.estimate) << " (variance "
            << format_double(r.variance) << ", bias " << format_double(r.bias)
            << ", cost proxy " << format_double(total_cost(r).proxy) << ")\n";
}

void cmd_mc(Context& ctx, Options& o) {
  const System sys = load_system(o, true);
  McConfig cfg;
  cfg.eps = resolved_eps(o);
  cfg.z = o.z;
  cfg.pilot_samples = o.pilot;
  report_estimate(ctx, o, run_mc(sys, cfg, run_options(o), o.repairable));
}

void cmd_mlmc(Context& ctx, Options& o) {
  const System sys = load_system(o, true);
  const LevelPartition part = obtain_partition(sys, o);
  MlmcConfig cfg;
  cfg.eps = resolved_eps(o);
  cfg.all_levels = o.all_levels;
  report_estimate(ctx, o, run_mlmc(sys, part, cfg, run_options(o), o.repairable));
}

void cmd_simulate(Context& ctx, Options& o) {
  const System sys = load_system(o, true);
  std::vector<std::uint32_t> all(sys.cutsets.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<std::uint32_t>(i);
  RngStream rng(o.seed, make_stream_id(StreamPurpose::kSimulate, 0, 0));
  std::vector<SimulatedSample> samples(o.samples);
  if (o.repairable) {
    const RepairEngine engine(sys, all, all);
    RepairEngine::Workspace ws;
    for (auto& s : samples) {
      const auto run = engine.run(rng, ws, o.horizon);
      s.lifetime = run.fine;
      s.repairs = run.repairs;
    }
  } else {
    const LifetimeSampler sampler(sys);
    std::vector<double> scratch(static_cast<std::size_t>(sys.component_count()));
    for (auto& s : samples) s.lifetime = sampler.sample(all, rng, scratch);
  }
  emit(ctx, o.out, simulate_csv(samples));
}

std::vector<LevelStats> level_statistics(const System& sys, const Options& o) {
  const LevelPartition part = obtain_partition(sys, o);
  const auto sampler = make_level_sampler(sys, part, o.repairable);
  return sample_all_levels(*sampler, o.samples, run_options(o));
}

void cmd_diagnose(Context& ctx, Options& o) {
  const System sys = load_system(o, true);
  const auto stats = level_statistics(sys, o);
  emit(ctx, o.out, diagnose_csv(stats, level_costs(stats, CostBasis::kWork)));
  const std::string report = o.report.empty() ? sibling(o.out, ".rates.json") : o.report;
  if (stats.size() < 3) {
    ctx.err << "fewer than three levels: no rate fit\n";
    return;
  }
  const RateReport rates = fit_rates(stats, resolved_basis(o));
  if (!report.empty()) emit(ctx, report, dump_rates(rates));
  if (!o.out.empty())
    ctx.out << "alpha " << format_double(rates.alpha) << ", beta " << format_double(rates.beta)
            << ", gamma " << format_double(rates.gamma) << "\n";
}

void cmd_speedup(Context& ctx, Options& o) {
  const System sys = load_system(o, true);
  const auto stats = level_statistics(sys, o);
  const auto exact = make_exact_sampler(sys, o.repairable);
  const auto mc = sample_all_levels(*exact, o.mc_samples.value_or(o.samples), run_options(o));
  const CostBasis basis = resolved_basis(o);
  double mc_cost = level_costs(mc, basis).front();
  // The exact sampler over all cut sets costs what the top level costs
  // under the nominal proxy.
  if (basis == CostBasis::kProxy) mc_cost = static_cast<double>(sys.cutsets.size());
  std::vector<double> grid = o.eps_grid;
  if (grid.empty())
    for (int e = -7; e <= 7; ++e) grid.push_back(std::ldexp(1.0, e));
  emit(ctx, o.out, speedup_csv(speedup_curve(mc[0].variance(), mc_cost, stats, basis, grid)));
}

void cmd_replay(Context& ctx, Options& o) {
  const auto j = nlohmann::json::parse(read_text_file(o.manifest), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw FormatError("manifest: invalid JSON");
  const auto it = j.find("argv");
  if (it == j.end() || !it->is_array()) throw FormatError("manifest.argv: missing");
  std::vector<std::string> args;
  for (const auto& a : *it) {
    if (!a.is_string()) throw FormatError("manifest.argv: expected strings");
    args.push_back(a.get<std::string>());
  }
  if (args.empty() || args.front() == "replay")
    throw FormatError("manifest.argv: not a replayable command");
  const int code = run(args, ctx.out, ctx.err);
  if (code != kOk) throw Error("replayed command failed with exit code " + std::to_string(code));
}

void write_manifest(Context& ctx, const std::string& command, const Options& o) {
  if (o.no_manifest || ctx.outputs.empty()) return;
  ordered_json m;
  m["tool"] = "mlrel";
  m["subcommand"] = command;
  m["argv"] = ctx.args;
  m["seed"] = o.seed;
  m["eps"] = resolved_eps(o);
  m["repairable"] = o.repairable;
  m["distribution"] = {{"shape", o.shape},
                       {"scale_min", o.scale_min},
                       {"scale_max", o.scale_max},
                       {"repair_rate", o.repair_rate ? ordered_json(*o.repair_rate)
                                                     : ordered_json(nullptr)}};
  m["system"] = o.system;
  m["partition"] = o.partition;
  m["workers"] = o.workers;
  m["outputs"] = ctx.outputs;
  const std::string path = o.manifest.empty() ? ctx.outputs.front() + ".manifest.json" : o.manifest;
  write_file_atomic(path, m.dump(2) + "\n");
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--seed", o.seed, "Random seed");
  sub->add_option("--out", o.out, "Output file (stdout when omitted)");
  sub->add_option("--cap", o.cap, "Cut-set enumeration cap");
  sub->add_flag("--no-manifest", o.no_manifest, "Do not write a run manifest");
}

void add_system(CLI::App* sub, Options& o) {
  sub->add_option("--system", o.system, "System file")->required();
  sub->add_option("--repair-rate", o.repair_rate,
                  "Give every component an Exponential repair clock (implies --repairable)")
      ->check(CLI::NonNegativeNumber);
  sub->add_flag("--repairable", o.repairable, "Simulate the failure/repair process");
}

void add_estimation(CLI::App* sub, Options& o) {
  sub->add_option("--workers", o.workers, "Concurrent batch executors")->check(CLI::PositiveNumber);
  sub->add_option("--batch", o.batch, "Samples per batch")->check(CLI::PositiveNumber);
  sub->add_flag("--timing", o.timing, "Record wall-clock timings");
}

void add_levels(CLI::App* sub, Options& o) {
  sub->add_option("--partition", o.partition, "Partition file from select-levels");
  sub->add_option("--pilot", o.pilot, "Pilot sample count N'")->check(CLI::PositiveNumber);
  sub->add_option("--levels", o.levels, "Top level L")->check(CLI::NonNegativeNumber);
}

void add_eps(CLI::App* sub, Options& o) {
  sub->add_option("--eps", o.eps, "Target accuracy")->check(CLI::PositiveNumber);
  sub->add_option("--eps-preset", o.eps_preset, "coarse (2^-4) or fine (2^-7)")
      ->check(CLI::IsMember({"coarse", "fine"}));
}

void add_cost(CLI::App* sub, Options& o) {
  sub->add_option("--cost", o.cost, "Cost basis for rate fits: auto, proxy, work or seconds")
      ->check(CLI::IsMember({"auto", "proxy", "work", "seconds"}));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Multilevel Monte Carlo for system reliability", "mlrel"};
  app.require_subcommand(1);

  auto* generate = app.add_subcommand("generate", "Grow a random two-terminal system");
  add_common(generate, o);
  generate->add_option("--n", o.n, "Number of components")->check(CLI::PositiveNumber);
  generate->add_option("--shape", o.shape, "Weibull shape")->check(CLI::PositiveNumber);
  generate->add_option("--scale-min", o.scale_min, "Lower bound of the Weibull scale");
  generate->add_option("--scale-max", o.scale_max, "Upper bound of the Weibull scale");
  generate->add_option("--repair-rate", o.repair_rate, "Exponential repair rate")
      ->check(CLI::NonNegativeNumber);
  generate->add_option("--p-series", o.p_series, "Series move probability");
  generate->add_option("--p-parallel", o.p_parallel, "Parallel move probability");
  generate->add_option("--p-bridge", o.p_bridge, "Bridge move probability");

  auto* cutsets = app.add_subcommand("cutsets", "Enumerate minimal cut sets of a system file");
  add_common(cutsets, o);
  cutsets->add_option("--system", o.system, "System file")->required();
  cutsets->add_option("--method", o.method, "lattice or paths")
      ->check(CLI::IsMember({"lattice", "paths"}));

  auto* select = app.add_subcommand("select-levels", "Build the nested level partition");
  add_common(select, o);
  add_system(select, o);
  select->add_option("--pilot", o.pilot, "Pilot sample count N'")->check(CLI::PositiveNumber);
  select->add_option("--levels", o.levels, "Top level L")->check(CLI::NonNegativeNumber);

  auto* mc = app.add_subcommand("mc", "Standard Monte Carlo estimate");
  add_common(mc, o);
  add_system(mc, o);
  add_estimation(mc, o);
  add_eps(mc, o);
  mc->add_option("--pilot", o.pilot, "Variance pilot size")->check(CLI::PositiveNumber);
  mc->add_option("--z", o.z, "Confidence quantile")->check(CLI::PositiveNumber);
  mc->add_option("--csv", o.csv, "Per-level CSV output");

  auto* mlmc = app.add_subcommand("mlmc", "Adaptive multilevel Monte Carlo estimate");
  add_common(mlmc, o);
  add_system(mlmc, o);
  add_estimation(mlmc, o);
  add_eps(mlmc, o);
  add_levels(mlmc, o);
  mlmc->add_option("--csv", o.csv, "Per-level CSV output");
  mlmc->add_flag("--all-levels", o.all_levels, "Sample every level (no truncation bias)");

  auto* simulate = app.add_subcommand("simulate", "Raw lifetime samples as CSV");
  add_common(simulate, o);
  add_system(simulate, o);
  simulate->add_option("--samples,--n", o.samples, "Number of samples")->check(CLI::PositiveNumber);
  simulate->add_option("--horizon", o.horizon, "Truncation horizon for repairable runs");

  auto* diagnose = app.add_subcommand("diagnose", "Per-level diagnostics and rate fits");
  add_common(diagnose, o);
  add_system(diagnose, o);
  add_estimation(diagnose, o);
  add_levels(diagnose, o);
  add_cost(diagnose, o);
  diagnose->add_option("--samples", o.samples, "Samples per level")->check(CLI::Range(2, 1 << 30));
  diagnose->add_option("--report", o.report, "Rate report JSON output");

  auto* speedup = app.add_subcommand("speedup", "MLMC versus MC speedup curve");
  add_common(speedup, o);
  add_system(speedup, o);
  add_estimation(speedup, o);
  add_levels(speedup, o);
  add_cost(speedup, o);
  speedup->add_option("--samples", o.samples, "Samples per level")->check(CLI::Range(2, 1 << 30));
  speedup->add_option("--mc-samples", o.mc_samples, "Samples of the exact lifetime");
  speedup->add_option("--eps-grid", o.eps_grid, "Target accuracies")->check(CLI::PositiveNumber);

  auto* replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  replay->add_option("--manifest", o.manifest, "Manifest file")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  Context ctx{args, out, err, {}};
  CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  try {
    if (name == "generate") cmd_generate(ctx, o);
    else if (name == "cutsets") cmd_cutsets(ctx, o);
    else if (name == "select-levels") cmd_select_levels(ctx, o);
    else if (name == "mc") cmd_mc(ctx, o);
    else if (name == "mlmc") cmd_mlmc(ctx, o);
    else if (name == "simulate") cmd_simulate(ctx, o);
    else if (name == "diagnose") cmd_diagnose(ctx, o);
    else if (name == "speedup") cmd_speedup(ctx, o);
    else if (name == "replay") {
      cmd_replay(ctx, o);
      return kOk;
    }
    write_manifest(ctx, name, o);
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << "\n";
    return kFormat;
  } catch (const StructureError& e) {
    err << "format error: " << e.what() << "\n";
    return kFormat;
  } catch (const IndexError& e) {
    err << "format error: " << e.what() << "\n";
    return kFormat;
  } catch (const CapacityError& e) {
    err << "capacity exceeded: " << e.what() << "\n";
    return kCapacity;
  } catch (const ContractError& e) {
    err << "contract violation: " << e.what() << "\n";
    return kContract;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}

}  // namespace mlrel::cli
