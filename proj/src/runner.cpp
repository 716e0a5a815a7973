#include "meyerlab/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "meyerlab/ergodic.hpp"
#include "meyerlab/scheme_io.hpp"
#include "meyerlab/stats.hpp"
#include "meyerlab/transverse.hpp"

namespace meyerlab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string brief(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

enum class Sign { Positive, NonNegative, Any };

// Typed access to the params object; every key must be declared up front.
class Params {
 public:
  Params(const json& j, const std::string& experiment, std::set<std::string> allowed) : j_(j) {
    if (!j.is_object()) config_error("'params' must be an object");
    allowed.insert("seed");
    for (const auto& [key, _] : j.items()) {
      if (!allowed.count(key)) config_error("unknown key 'params." + key + "' for experiment '" + experiment + "'");
    }
    if (!j.contains("seed")) config_error("missing key 'params.seed' (seed is mandatory)");
    if (!j["seed"].is_number_unsigned()) config_error("'params.seed' must be a non-negative integer");
    seed_ = j["seed"].get<std::uint64_t>();
  }

  std::uint64_t seed() const { return seed_; }
  bool has(const std::string& key) const { return j_.contains(key); }

  double num(const std::string& key, double fallback, Sign sign = Sign::Positive) const {
    if (!j_.contains(key)) return fallback;
    const json& v = j_[key];
    if (!v.is_number()) config_error("'params." + key + "' must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x) || (sign == Sign::Positive && !(x > 0.0)) || (sign == Sign::NonNegative && x < 0.0)) {
      config_error("'params." + key + "' must be " + (sign == Sign::Positive ? "positive" : "non-negative"));
    }
    return x;
  }

  std::size_t count(const std::string& key, std::size_t fallback) const {
    if (!j_.contains(key)) return fallback;
    const json& v = j_[key];
    if (!v.is_number_unsigned() || v.get<std::uint64_t>() == 0) config_error("'params." + key + "' must be a positive integer");
    return v.get<std::size_t>();
  }

  Vec vec(const std::string& key, Vec fallback) const {
    if (!j_.contains(key)) return fallback;
    return read_vec(j_[key], key);
  }

  Box box(const std::string& key, Box fallback) const {
    if (!j_.contains(key)) return fallback;
    return read_box(j_[key], key);
  }

  std::vector<Box> boxes(const std::string& key, std::vector<Box> fallback) const {
    if (!j_.contains(key)) return fallback;
    if (!j_[key].is_array() || j_[key].empty()) config_error("'params." + key + "' must be a non-empty array of boxes");
    std::vector<Box> out;
    for (const auto& b : j_[key]) out.push_back(read_box(b, key));
    return out;
  }

 private:
  static Vec read_vec(const json& v, const std::string& key) {
    if (!v.is_array()) config_error("'params." + key + "' must be an array of numbers");
    Vec out;
    for (const auto& x : v) {
      if (!x.is_number()) config_error("'params." + key + "' must be an array of numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }

  static Box read_box(const json& v, const std::string& key) {
    if (!v.is_object() || v.size() != 2 || !v.contains("lo") || !v.contains("hi")) {
      config_error("'params." + key + "' must be a box {\"lo\": [...], \"hi\": [...]}");
    }
    Vec lo = read_vec(v["lo"], key + ".lo"), hi = read_vec(v["hi"], key + ".hi");
    if (lo.size() != hi.size()) config_error("'params." + key + "' lo and hi differ in length");
    return Box(std::move(lo), std::move(hi));
  }

  const json& j_;
  std::uint64_t seed_ = 0;
};

class Csv {
 public:
  Csv(const fs::path& path, const std::vector<std::string>& header) : out_(path, std::ios::binary) {
    if (!out_) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    row_strings(header);
  }
  void row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    for (double v : values) cells.push_back(fmt(v));
    row_strings(cells);
  }

 private:
  void row_strings(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }
  std::ofstream out_;
};

struct Context {
  const ExperimentConfig& config;
  const Scheme& scheme;
  const Params& params;
  RunReport& report;

  fs::path artifact(const std::string& name) {
    report.artifacts.push_back(name);
    return config.output_dir / name;
  }
  void check(std::string name, bool pass, std::string detail) {
    report.assertions.push_back({std::move(name), pass, std::move(detail)});
  }
  Vec window_center() const {
    Vec c(scheme.m());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = 0.5 * (scheme.window().box.lo()[i] + scheme.window().box.hi()[i]);
    return c;
  }
  TransversalPoint point(const std::string& key) const {
    return TransversalPoint::make(scheme, params.vec(key, window_center()));
  }
  double default_eta() const { return 0.05 * scheme.window().box.min_side(); }
  ConvenientSequence sequence(double t_max_default) const {
    const double t_max = params.num("t_max", t_max_default);
    return ConvenientSequence::linear(scheme.d(), params.num("t_min", t_max / 10), t_max, params.count("steps", 10));
  }
};

void run_gen(Context& cx) {
  const Box region = cx.params.box("box", Box::centered(cx.scheme.d(), cx.params.num("t", 10)));
  const Patch p = model_set(cx.scheme, cx.point("w"), region);
  std::ofstream out(cx.artifact("points.csv"), std::ios::binary);
  write_patch_csv(out, p);
  cx.check("non-empty patch", !p.empty(), std::to_string(p.size()) + " points");
}

void run_check_delone(Context& cx) {
  const double t = cx.params.num("t", 100);
  const double inner = cx.params.num("region", t / 2);
  const Patch p = model_set(cx.scheme, cx.point("w"), Box::centered(cx.scheme.d(), t));
  const double gap = min_gap(p);
  const double cover = covering_radius(p, Box::centered(cx.scheme.d(), inner), cx.params.num("grid_step", 0.01));
  Csv csv(cx.artifact("delone.csv"), {"points", "min_gap", "covering_radius"});
  csv.row({static_cast<double>(p.size()), gap, cover});
  cx.check("uniformly discrete", gap > 0.0, "min_gap " + brief(gap));
  cx.check("relatively dense", std::isfinite(cover), "covering_radius " + brief(cover));
}

void run_check_approx_lattice(Context& cx) {
  const double t = cx.params.num("t", 200);
  const Vec radii = cx.params.vec("radii", {25.0, 50.0});
  const double cube_radius = cx.params.num("cube_radius", 20);
  const double margin_radius = cx.params.num("margin_radius", 10);
  const Patch p = model_set(cx.scheme, cx.point("w"), Box::centered(cx.scheme.d(), t));
  const Patch lambda = difference_set(p, t);
  const Patch cube = iterated_sumset(lambda, 3, cube_radius);
  const double g1 = min_gap(lambda), g3 = min_gap(cube);
  const double acc = accumulation_margin(cube, cube, margin_radius);
  Csv csv(cx.artifact("approx_lattice.csv"), {"radius", "success", "F_size", "uncovered"});
  std::vector<std::size_t> sizes;
  bool all_success = true;
  for (double r : radii) {
    const WitnessReport w = approx_subgroup_witness(lambda, r);
    csv.row({r, w.success ? 1.0 : 0.0, static_cast<double>(w.F.size()), static_cast<double>(w.uncovered.size())});
    sizes.push_back(w.F.size());
    all_success = all_success && w.success;
  }
  Csv gaps(cx.artifact("approx_lattice_gaps.csv"), {"min_gap_lambda", "min_gap_lambda3", "accumulation_margin"});
  gaps.row({g1, g3, acc});
  cx.check("min_gap(lambda) > 0", g1 > 0.0, brief(g1));
  cx.check("min_gap(lambda^3) > 0", g3 > 0.0, brief(g3));
  cx.check("accumulation_margin > 0", acc > 0.0, brief(acc));
  cx.check("witness found at every radius", all_success, "");
  cx.check("|F| independent of radius", std::all_of(sizes.begin(), sizes.end(), [&](std::size_t s) { return s == sizes.front(); }),
           "|F| at first radius " + std::to_string(sizes.empty() ? 0 : sizes.front()));
}

void write_trace(Context& cx, const std::string& name, const std::vector<DensityRow>& rows,
                 const std::vector<std::string>& header) {
  Csv csv(cx.artifact(name), header);
  for (const auto& r : rows) csv.row({r.t, r.count, r.volume, r.ratio});
}

void run_density(Context& cx) {
  const auto seq = cx.sequence(1e4);
  const auto z = cx.point("w");
  const auto trace = lower_density([&](const Box& b) { return model_set(cx.scheme, z, b); }, seq);
  write_trace(cx, "density_trace.csv", trace.rows, {"t", "count", "volume", "ratio"});
  const double predicted = predicted_density(cx.scheme);
  const double rel = std::abs(trace.estimate - predicted) / predicted;
  cx.check("lower density matches window formula", rel <= cx.params.num("tol", 0.01),
           "estimate " + brief(trace.estimate) + " predicted " + brief(predicted) + " rel_err " + brief(rel));
}

void run_intersect_density(Context& cx) {
  const auto seq = cx.sequence(1e4);
  const auto rows = intersection_density_experiment(cx.scheme, cx.params.count("r", 2), cx.params.count("trials", 20),
                                                    seq, cx.params.seed(), cx.params.num("eta", cx.default_eta()));
  Csv csv(cx.artifact("intersection.csv"), {"trial", "predicted", "empirical", "rel_err"});
  double worst = 0.0;
  bool positive = true;
  for (const auto& r : rows) {
    csv.row({static_cast<double>(r.trial), r.predicted, r.empirical, r.rel_err});
    worst = std::max(worst, r.rel_err);
    positive = positive && r.predicted > 0.0 && r.empirical > 0.0;
  }
  cx.check("positive intersection density", positive, "");
  cx.check("empirical matches prediction", worst <= cx.params.num("tol", 0.02), "max rel_err " + brief(worst));
}

void run_recurrence(Context& cx) {
  const std::size_t r = cx.params.count("r", 2), trials = cx.params.count("trials", 1);
  const double eps = cx.params.num("eps", 0.05), t_max = cx.params.num("t_max", 1e4);
  const double min_norm = cx.params.num("min_norm", 100, Sign::NonNegative);
  const double eta = cx.params.num("eta", 0.1);
  RecurrenceOptions opt;
  opt.max_hits = cx.params.has("max_hits") ? cx.params.count("max_hits", 0) : 0;
  opt.diagnostic_radius = cx.params.num("diagnostic_radius", 10);
  std::vector<std::string> header{"trial", "k"};
  for (std::size_t i = 0; i < cx.scheme.d(); ++i) header.push_back("g" + std::to_string(i));
  for (std::size_t i = 0; i < cx.scheme.d() + cx.scheme.m(); ++i) header.push_back("c" + std::to_string(i));
  header.insert(header.end(), {"internal_norm", "patch_dist_max"});
  Csv csv(cx.artifact("recurrence.csv"), header);
  std::size_t with_hits = 0;
  bool below = true;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    Rng rng = make_rng(cx.params.seed(), trial);
    std::vector<TransversalPoint> zs;
    for (std::size_t k = 0; k < r; ++k) zs.push_back(sample_transversal(cx.scheme, rng, eta));
    std::vector<RecurrenceHit> hits;
    try {
      hits = recurrence_search(cx.scheme, zs, eps, min_norm, t_max, opt);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoHits) throw;
      cx.check("trial " + std::to_string(trial) + " has hits", false, e.what());
      continue;
    }
    ++with_hits;
    for (std::size_t k = 0; k < hits.size(); ++k) {
      std::vector<double> row{static_cast<double>(trial), static_cast<double>(k)};
      row.insert(row.end(), hits[k].g.begin(), hits[k].g.end());
      for (auto c : hits[k].coeffs) row.push_back(static_cast<double>(c));
      row.push_back(hits[k].internal_norm);
      row.push_back(*std::max_element(hits[k].patch_dists.begin(), hits[k].patch_dists.end()));
      csv.row(row);
      below = below && hits[k].internal_norm < eps;
    }
  }
  cx.check("every trial has a hit", with_hits == trials, std::to_string(with_hits) + "/" + std::to_string(trials));
  cx.check("internal norms below eps", below, "");
}

void run_poincare(Context& cx) {
  const Vec schedule = cx.params.vec("eps_schedule", {0.1, 0.05, 0.02});
  const auto trials = transverse_poincare_experiment(cx.scheme, cx.params.count("trials", 10), schedule,
                                                     cx.params.seed(), cx.params.num("eta", 0.15),
                                                     cx.params.num("t_max", 1e5));
  Csv csv(cx.artifact("staircase.csv"), {"trial", "k", "eps", "g_norm", "internal_norm", "patch_dist_max"});
  std::size_t complete = 0;
  for (const auto& t : trials) {
    for (const auto& s : t.steps) {
      csv.row({static_cast<double>(t.trial), static_cast<double>(s.k), s.eps, s.g_norm, s.internal_norm, s.patch_dist_max});
    }
    complete += t.complete ? 1 : 0;
  }
  cx.check("full staircase in every trial", complete == trials.size(),
           std::to_string(complete) + "/" + std::to_string(trials.size()));
}

void run_ergodic_avg(Context& cx) {
  const auto seq = cx.sequence(1e4);
  const Box B = cx.params.box("B", cx.scheme.window().box);
  if (B.dim() != cx.scheme.m()) config_error("'params.B' must have the internal dimension");
  const auto trace = transversal_average(cx.scheme, cx.point("w"),
                                         [&](std::span<const double> w) { return B.contains(w) ? 1.0 : 0.0; }, seq);
  write_trace(cx, "average_trace.csv", trace.rows, {"t", "sum", "volume", "average"});
  const double exact = box_intersect(B, cx.scheme.window().box).volume() / cx.scheme.covolume();
  const double rel = exact > 0.0 ? std::abs(trace.estimate - exact) / exact : std::abs(trace.estimate);
  cx.check("average matches nu(B)", rel <= cx.params.num("tol", 0.01),
           "estimate " + brief(trace.estimate) + " exact " + brief(exact));
}

void run_transverse_identity(Context& cx) {
  const std::size_t d = cx.scheme.d();
  const Box A = cx.params.box("A", Box(Vec(d, 0.0), Vec(d, 1.0)));
  const Box B = cx.params.box("B", cx.scheme.window().box);
  if (A.dim() != d || B.dim() != cx.scheme.m()) config_error("'params.A' / 'params.B' have the wrong dimension");
  const TestFn f = TestFn::indicator(A, B);
  const std::size_t n = cx.params.count("n_samples", 100000), seeds = cx.params.count("seeds", 1);
  const double z_max = cx.params.num("z_max", 3.0);
  Csv csv(cx.artifact("identity.csv"), {"seed", "lhs", "stderr", "rhs", "z", "n"});
  std::vector<double> zs;
  json first;
  for (std::size_t i = 0; i < seeds; ++i) {
    const auto rep = verify_transverse_identity(cx.scheme, f, n, cx.params.seed() + i);
    csv.row({static_cast<double>(rep.seed), rep.lhs, rep.std_error, rep.rhs, rep.z, static_cast<double>(rep.n)});
    zs.push_back(rep.z);
    if (i == 0) {
      first = {{"lhs", rep.lhs}, {"stderr", rep.std_error}, {"rhs", rep.rhs}, {"z", rep.z}, {"n", rep.n}, {"seed", rep.seed}};
      cx.check("|z| within bound", std::abs(rep.z) <= z_max, "z " + brief(rep.z));
    }
  }
  std::ofstream(cx.artifact("identity.json"), std::ios::binary) << first.dump(2) << '\n';
  if (seeds >= 5) {
    const auto ks = ks_test_normal(zs);
    cx.check("z-scores standard normal (KS)", ks.p_value >= cx.params.num("alpha", 0.01),
             "D " + brief(ks.statistic) + " p " + brief(ks.p_value));
  }
}

void run_stages_check(Context& cx) {
  const std::size_t r = cx.params.count("r", 2);
  const Box& W = cx.scheme.window().box;
  Vec mid(W.lo());
  for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = W.lo()[i] + 0.5 * W.side(i);
  Vec left_hi(W.hi());
  left_hi[0] = mid[0];
  const auto A = cx.params.boxes("A", std::vector<Box>(r, Box(W.lo(), left_hi)));
  if (A.size() != r) config_error("'params.A' must list r boxes");
  std::vector<TransversalPoint> zs;
  if (cx.params.has("zs")) {
    const Vec flat = cx.params.vec("zs", {});
    if (flat.size() != r * cx.scheme.m()) config_error("'params.zs' must hold r * m numbers");
    for (std::size_t k = 0; k < r; ++k) {
      zs.push_back(TransversalPoint::make(cx.scheme, Vec(flat.begin() + static_cast<long>(k * cx.scheme.m()),
                                                         flat.begin() + static_cast<long>((k + 1) * cx.scheme.m()))));
    }
  }
  const auto rep = stages_check(cx.scheme, zs, A, cx.params.num("t", 1e4), cx.params.count("n_samples", 100000));
  Csv csv(cx.artifact("stages.csv"), {"direct", "staged", "relative_deviation", "exact", "orbit_density", "orbit_predicted"});
  csv.row({rep.direct, rep.staged, rep.relative_deviation, rep.exact, rep.orbit_density, rep.orbit_predicted});
  cx.check("two restrictions agree", rep.relative_deviation <= cx.params.num("tol", 0.02),
           "direct " + brief(rep.direct) + " staged " + brief(rep.staged));
}

void run_verify_convenient(Context& cx) {
  const auto dim = cx.params.count("dim", cx.scheme.d());
  const auto seq = ConvenientSequence::linear(dim, cx.params.num("t_min", 10), cx.params.num("t_max", 1e4),
                                              cx.params.count("steps", 10));
  const auto rep = verify_convenient(seq, static_cast<int>(cx.params.count("n_max", 100)));
  Csv csv(cx.artifact("convenient.csv"), {"n", "delta", "epsilon", "epsilon_bound", "containment", "degenerate"});
  for (const auto& r : rep.rows) {
    csv.row({static_cast<double>(r.n), r.delta, r.epsilon, r.epsilon_bound, r.containment ? 1.0 : 0.0, r.degenerate ? 1.0 : 0.0});
  }
  cx.check("containment and ratio bounds", rep.pass, "");
}

struct ExperimentSpec {
  std::set<std::string> keys;
  std::function<void(Context&)> run;
};

const std::map<std::string, ExperimentSpec>& experiments() {
  static const std::map<std::string, ExperimentSpec> table{
      {"gen", {{"w", "t", "box"}, run_gen}},
      {"check-delone", {{"w", "t", "region", "grid_step"}, run_check_delone}},
      {"check-approx-lattice", {{"w", "t", "radii", "cube_radius", "margin_radius"}, run_check_approx_lattice}},
      {"density", {{"w", "t_min", "t_max", "steps", "tol"}, run_density}},
      {"intersect-density", {{"r", "trials", "t_min", "t_max", "steps", "eta", "tol"}, run_intersect_density}},
      {"recurrence",
       {{"r", "trials", "eps", "min_norm", "t_max", "eta", "max_hits", "diagnostic_radius"}, run_recurrence}},
      {"poincare", {{"trials", "eps_schedule", "eta", "t_max"}, run_poincare}},
      {"ergodic-avg", {{"w", "B", "t_min", "t_max", "steps", "tol"}, run_ergodic_avg}},
      {"transverse-identity", {{"A", "B", "n_samples", "seeds", "z_max", "alpha"}, run_transverse_identity}},
      {"stages-check", {{"r", "A", "zs", "t", "n_samples", "tol"}, run_stages_check}},
      {"verify-convenient", {{"dim", "t_min", "t_max", "steps", "n_max"}, run_verify_convenient}},
  };
  return table;
}

}  // namespace

bool RunReport::pass() const {
  return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.pass; });
}

ExperimentConfig parse_config(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) config_error("config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "scheme" && key != "experiment" && key != "params" && key != "output_dir") {
      config_error("unknown key '" + key + "'");
    }
  }
  for (const char* key : {"scheme", "experiment", "params", "output_dir"}) {
    if (!j.contains(key)) config_error(std::string("missing key '") + key + "'");
  }
  if (!j["scheme"].is_string()) config_error("'scheme' must be a path string");
  if (!j["experiment"].is_string()) config_error("'experiment' must be a string");
  if (!j["output_dir"].is_string()) config_error("'output_dir' must be a path string");
  ExperimentConfig c;
  c.raw = j;
  c.scheme_path = j["scheme"].get<std::string>();
  if (c.scheme_path.is_relative() && !base_dir.empty()) c.scheme_path = base_dir / c.scheme_path;
  c.experiment = j["experiment"].get<std::string>();
  const auto it = experiments().find(c.experiment);
  if (it == experiments().end()) config_error("unknown experiment '" + c.experiment + "'");
  c.params = j["params"];
  c.output_dir = j["output_dir"].get<std::string>();
  Params(c.params, c.experiment, it->second.keys);  // validates keys and seed
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    config_error("malformed config JSON in " + path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path());
}

RunReport run(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const auto it = experiments().find(config.experiment);
  if (it == experiments().end()) config_error("unknown experiment '" + config.experiment + "'");
  const Params params(config.params, config.experiment, it->second.keys);
  const Scheme scheme = load_scheme(config.scheme_path);
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + config.output_dir.string() + ": " + ec.message());

  RunReport report;
  Context cx{config, scheme, params, report};
  try {
    it->second.run(cx);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError || e.code() == ErrorCode::IoError) throw;
    throw Error(e.code(), "experiment '" + config.experiment + "': " + e.what());
  }

  json assertions = json::array();
  for (const auto& a : report.assertions) assertions.push_back({{"name", a.name}, {"pass", a.pass}, {"detail", a.detail}});
  json artifacts = json::array();
  for (const auto& a : report.artifacts) artifacts.push_back(a.string());
  const json manifest{{"version", kVersion},
                      {"experiment", config.experiment},
                      {"seed", params.seed()},
                      {"config", config.raw},
                      {"scheme", scheme_to_json(scheme)},
                      {"artifacts", artifacts},
                      {"assertions", assertions},
                      {"pass", report.pass()}};
  std::ofstream(config.output_dir / "manifest.json", std::ios::binary) << manifest.dump(2) << '\n';
  report.artifacts.push_back("manifest.json");
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

json validate_scheme(const fs::path& path) {
  const Scheme s = load_scheme(path);
  const auto dense = internal_density_check(s);
  return {{"d", s.d()},
          {"m", s.m()},
          {"covolume", s.covolume()},
          {"window_volume", s.window().volume()},
          {"predicted_density", predicted_density(s)},
          {"internal_density", {{"radii", dense.radii}, {"min_internal_norm", dense.min_internal_norm}, {"dense", dense.dense}}}};
}

}  // namespace meyerlab
