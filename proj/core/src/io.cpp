#include "mlrel/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mlrel/errors.hpp"

namespace mlrel {

using nlohmann::json;
using nlohmann::ordered_json;

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

ordered_json number_or_null(double x) {
  return std::isfinite(x) ? ordered_json(x) : ordered_json(nullptr);
}

const json& field(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw FormatError(path + ": expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw FormatError(path + "." + key + ": missing");
  return *it;
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw FormatError(path + ": expected a number");
  return v.get<double>();
}

std::int64_t as_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw FormatError(path + ": expected an integer");
  return v.get<std::int64_t>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw FormatError(path + ": expected a string");
  return v.get<std::string>();
}

const json& as_array(const json& v, const std::string& path) {
  if (!v.is_array()) throw FormatError(path + ": expected an array");
  return v;
}

std::string at(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

json parse_json(std::string_view text, const char* what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw FormatError(std::string(what) + ": invalid JSON (" + e.what() + ")");
  }
}

ordered_json dist_to_json(const Distribution& d) {
  ordered_json j;
  if (d.kind == DistKind::kWeibull) {
    j["kind"] = "weibull";
    j["shape"] = d.shape;
    j["scale"] = d.scale;
  } else {
    j["kind"] = "exponential";
    j["rate"] = d.rate;
  }
  return j;
}

Distribution dist_from_json(const json& j, const std::string& path) {
  const std::string kind = as_string(field(j, "kind", path), path + ".kind");
  Distribution d;
  if (kind == "weibull") {
    d.kind = DistKind::kWeibull;
    d.shape = as_number(field(j, "shape", path), path + ".shape");
    d.scale = as_number(field(j, "scale", path), path + ".scale");
    d.rate = 0.0;
  } else if (kind == "exponential") {
    d.kind = DistKind::kExponential;
    d.rate = as_number(field(j, "rate", path), path + ".rate");
    d.shape = 1.0;
    d.scale = d.rate > 0.0 ? 1.0 / d.rate : kNever;
  } else {
    throw FormatError(path + ".kind: unknown distribution '" + kind + "'");
  }
  try {
    d.validate();
  } catch (const ParameterError& e) {
    throw FormatError(path + ": " + e.what());
  }
  return d;
}

const char* move_name(MoveKind k) {
  switch (k) {
    case MoveKind::kSeries: return "series";
    case MoveKind::kParallel: return "parallel";
    case MoveKind::kBridge: return "bridge";
  }
  return "series";
}

std::pair<int, int> edge_from_json(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) throw FormatError(path + ": expected a pair");
  return {static_cast<int>(as_int(j[0], path + "[0]")),
          static_cast<int>(as_int(j[1], path + "[1]"))};
}

}  // namespace

std::string dump_system(const System& sys) {
  ordered_json j;
  j["source"] = sys.network.source();
  j["sink"] = sys.network.sink();
  ordered_json comps = ordered_json::array();
  for (std::size_t i = 0; i < sys.components.size(); ++i) {
    ordered_json c;
    c["id"] = i + 1;
    c["lifetime"] = dist_to_json(sys.components[i].lifetime);
    c["repair"] = sys.components[i].repair ? dist_to_json(*sys.components[i].repair)
                                           : ordered_json(nullptr);
    comps.push_back(std::move(c));
  }
  j["components"] = std::move(comps);
  ordered_json edges = ordered_json::array();
  for (const auto& [a, b] : sys.network.edges) edges.push_back({a, b});
  j["edges"] = std::move(edges);
  if (!sys.cutsets.empty()) {
    ordered_json cuts = ordered_json::array();
    for (const auto& c : sys.cutsets) cuts.push_back(std::vector<int>(c.begin(), c.end()));
    j["cutsets"] = std::move(cuts);
  }
  if (!sys.move_log.empty()) {
    ordered_json log = ordered_json::array();
    for (const auto& m : sys.move_log) {
      ordered_json e;
      e["kind"] = move_name(m.kind);
      if (m.kind == MoveKind::kBridge) {
        e["edge_a"] = {m.edge_a.first, m.edge_a.second};
        e["edge_b"] = {m.edge_b.first, m.edge_b.second};
      } else {
        e["target"] = m.target;
      }
      e["added"] = m.added;
      log.push_back(std::move(e));
    }
    j["move_log"] = std::move(log);
  }
  return j.dump(2) + "\n";
}

System parse_system(std::string_view text) {
  const json j = parse_json(text, "system");
  if (!j.is_object()) throw FormatError("system: expected an object");
  System sys;
  const json& comps = as_array(field(j, "components", "system"), "system.components");
  const int n = static_cast<int>(comps.size());
  if (n < 1) throw FormatError("system.components: at least one component required");
  sys.network.component_count = n;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const std::string path = at("system.components", i);
    const auto id = as_int(field(comps[i], "id", path), path + ".id");
    if (id != static_cast<std::int64_t>(i) + 1)
      throw FormatError(path + ".id: expected " + std::to_string(i + 1));
    Component c;
    c.lifetime = dist_from_json(field(comps[i], "lifetime", path), path + ".lifetime");
    const auto rep = comps[i].find("repair");
    if (rep != comps[i].end() && !rep->is_null())
      c.repair = dist_from_json(*rep, path + ".repair");
    sys.components.push_back(c);
  }
  if (as_int(field(j, "source", "system"), "system.source") != 0)
    throw FormatError("system.source: expected 0");
  if (as_int(field(j, "sink", "system"), "system.sink") != n + 1)
    throw FormatError("system.sink: expected " + std::to_string(n + 1));
  const json& edges = as_array(field(j, "edges", "system"), "system.edges");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto e = edge_from_json(edges[i], at("system.edges", i));
    if (e.first < 0 || e.first > n + 1 || e.second < 0 || e.second > n + 1)
      throw FormatError(at("system.edges", i) + ": node out of range");
    sys.network.edges.push_back(e);
  }
  if (const auto it = j.find("cutsets"); it != j.end() && !it->is_null()) {
    const json& cuts = as_array(*it, "system.cutsets");
    for (std::size_t i = 0; i < cuts.size(); ++i) {
      const std::string path = at("system.cutsets", i);
      std::vector<int> ids;
      for (std::size_t k = 0; k < as_array(cuts[i], path).size(); ++k) {
        const auto id = as_int(cuts[i][k], at(path, k));
        if (id < 1 || id > n) throw FormatError(at(path, k) + ": component id out of range");
        ids.push_back(static_cast<int>(id));
      }
      try {
        sys.cutsets.emplace_back(std::move(ids));
      } catch (const IndexError& e) {
        throw FormatError(path + ": " + e.what());
      }
    }
  }
  if (const auto it = j.find("move_log"); it != j.end() && !it->is_null()) {
    const json& log = as_array(*it, "system.move_log");
    for (std::size_t i = 0; i < log.size(); ++i) {
      const std::string path = at("system.move_log", i);
      GrowthMove m;
      const std::string kind = as_string(field(log[i], "kind", path), path + ".kind");
      if (kind == "series" || kind == "parallel") {
        m.kind = kind == "series" ? MoveKind::kSeries : MoveKind::kParallel;
        m.target = static_cast<int>(as_int(field(log[i], "target", path), path + ".target"));
      } else if (kind == "bridge") {
        m.kind = MoveKind::kBridge;
        m.edge_a = edge_from_json(field(log[i], "edge_a", path), path + ".edge_a");
        m.edge_b = edge_from_json(field(log[i], "edge_b", path), path + ".edge_b");
      } else {
        throw FormatError(path + ".kind: unknown move '" + kind + "'");
      }
      m.added = static_cast<int>(as_int(field(log[i], "added", path), path + ".added"));
      sys.move_log.push_back(m);
    }
  }
  return sys;
}

std::uint64_t cutset_fingerprint(std::span<const CutSet> cuts) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xFF;
      h *= 0x100000001b3ull;
    }
  };
  mix(cuts.size());
  for (const auto& c : cuts) {
    mix(c.size());
    for (int id : c) mix(static_cast<std::uint64_t>(id));
  }
  return h;
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string dump_partition(const LevelPartition& partition, std::uint64_t fingerprint) {
  ordered_json j;
  j["cut_count"] = partition.cut_count;
  j["fingerprint"] = hex64(fingerprint);
  j["pilot_cost"] = partition.pilot_cost;
  j["levels"] = partition.levels;
  ordered_json scores = ordered_json::array();
  for (const auto& s : partition.added_scores) {
    ordered_json row = ordered_json::array();
    for (double x : s) row.push_back(number_or_null(x));
    scores.push_back(std::move(row));
  }
  j["added_scores"] = std::move(scores);
  return j.dump() + "\n";
}

LevelPartition parse_partition(std::string_view text, std::uint64_t expected_fingerprint) {
  const json j = parse_json(text, "partition");
  LevelPartition p;
  const auto count = as_int(field(j, "cut_count", "partition"), "partition.cut_count");
  if (count < 1) throw FormatError("partition.cut_count: must be positive");
  p.cut_count = static_cast<std::size_t>(count);
  const std::string fp = as_string(field(j, "fingerprint", "partition"), "partition.fingerprint");
  if (fp != hex64(expected_fingerprint))
    throw ContractError("partition was built for a different cut-set list");
  if (const auto it = j.find("pilot_cost"); it != j.end())
    p.pilot_cost = as_number(*it, "partition.pilot_cost");
  const json& levels = as_array(field(j, "levels", "partition"), "partition.levels");
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const std::string path = at("partition.levels", l);
    std::vector<std::uint32_t> row;
    for (std::size_t k = 0; k < as_array(levels[l], path).size(); ++k) {
      const auto v = as_int(levels[l][k], at(path, k));
      if (v < 0 || v >= count) throw FormatError(at(path, k) + ": cut index out of range");
      row.push_back(static_cast<std::uint32_t>(v));
    }
    p.levels.push_back(std::move(row));
  }
  if (const auto it = j.find("added_scores"); it != j.end()) {
    const json& scores = as_array(*it, "partition.added_scores");
    for (std::size_t l = 0; l < scores.size(); ++l) {
      std::vector<double> row;
      for (const auto& v : as_array(scores[l], at("partition.added_scores", l)))
        row.push_back(v.is_null() ? kNever : as_number(v, at("partition.added_scores", l)));
      p.added_scores.push_back(std::move(row));
    }
  }
  validate_partition(p, p.cut_count);
  return p;
}

std::string dump_estimate(const EstimateResult& result, bool timing) {
  const CostSummary cost = total_cost(result);
  ordered_json j;
  j["method"] = result.method;
  j["repairable"] = result.repairable;
  j["eps"] = result.eps;
  j["estimate"] = number_or_null(result.estimate);
  j["variance"] = number_or_null(result.variance);
  j["bias"] = number_or_null(result.bias);
  j["mse"] = number_or_null(result.mse());
  j["cost_proxy"] = cost.proxy;
  j["sampling_cost_proxy"] = cost.sampling_proxy;
  j["pilot_cost"] = cost.pilot;
  j["wall_seconds"] = timing ? ordered_json(cost.wall_seconds) : ordered_json(nullptr);
  ordered_json levels = ordered_json::array();
  for (const auto& s : result.levels) {
    ordered_json l;
    l["level"] = s.level;
    l["N"] = s.samples();
    l["mean"] = number_or_null(s.mean());
    l["var"] = number_or_null(s.variance());
    l["cost"] = s.kappa();
    l["cut_count"] = s.cut_count;
    l["cost_weight"] = s.cost_weight;
    l["coupling_violations"] = s.coupling_violations;
    l["truncated"] = s.truncated;
    l["kappa_seconds"] = timing ? number_or_null(s.kappa_seconds()) : ordered_json(nullptr);
    levels.push_back(std::move(l));
  }
  j["levels"] = std::move(levels);
  return j.dump(2) + "\n";
}

std::string level_csv(std::span<const LevelStats> levels) {
  std::string out = "level,N,mean,var,cost,cut_count\n";
  for (const auto& s : levels) {
    out += std::to_string(s.level) + ',' + std::to_string(s.samples()) + ',' +
           format_double(s.mean()) + ',' + format_double(s.variance()) + ',' +
           format_double(s.kappa()) + ',' + std::to_string(s.cut_count) + '\n';
  }
  return out;
}

std::string simulate_csv(std::span<const SimulatedSample> samples) {
  std::string out = "sample_index,lifetime,n_repairs\n";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out += std::to_string(i) + ',' + format_double(samples[i].lifetime) + ',' +
           std::to_string(samples[i].repairs) + '\n';
  }
  return out;
}

std::string diagnose_csv(std::span<const LevelStats> levels, std::span<const double> cost_proxy) {
  if (cost_proxy.size() != levels.size()) throw ParameterError("cost series length mismatch");
  std::string out = "level,mean,var,cost_proxy,kappa_seconds\n";
  for (std::size_t l = 0; l < levels.size(); ++l) {
    out += std::to_string(levels[l].level) + ',' + format_double(levels[l].mean()) + ',' +
           format_double(levels[l].variance()) + ',' + format_double(cost_proxy[l]) + ',' +
           format_double(levels[l].kappa_seconds()) + '\n';
  }
  return out;
}

namespace {

ordered_json fit_to_json(const LinearFit& f) {
  ordered_json j;
  j["slope"] = f.slope;
  j["intercept"] = f.intercept;
  j["level"] = f.x;
  j["log2_value"] = f.y;
  j["residuals"] = f.residuals;
  return j;
}

}  // namespace

std::string dump_rates(const RateReport& report) {
  ordered_json j;
  j["alpha"] = report.alpha;
  j["beta"] = report.beta;
  j["gamma"] = report.gamma;
  j["mean_fit"] = fit_to_json(report.mean_fit);
  j["var_fit"] = fit_to_json(report.var_fit);
  j["cost_fit"] = fit_to_json(report.cost_fit);
  j["excluded_levels"] = report.excluded_levels;
  return j.dump(2) + "\n";
}

std::string speedup_csv(std::span<const SpeedupPoint> points) {
  std::string out = "eps,top_level,speedup\n";
  for (const auto& p : points)
    out += format_double(p.eps) + ',' + std::to_string(p.top_level) + ',' +
           format_double(p.speedup) + '\n';
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path.string() + ": cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(tmp.string() + ": cannot open for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw Error(tmp.string() + ": write failed");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace mlrel
