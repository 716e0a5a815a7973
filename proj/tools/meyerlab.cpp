// Command-line entry point.

#include <cstdio>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "meyerlab/cutproject.hpp"
#include "meyerlab/runner.hpp"
#include "meyerlab/scheme_io.hpp"

using namespace meyerlab;

namespace {

constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

bool is_input_error(ErrorCode c) {
  return c == ErrorCode::ConfigError || c == ErrorCode::IoError || c == ErrorCode::InvalidArgument ||
         c == ErrorCode::DimensionMismatch || c == ErrorCode::SingularBasis;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::ConfigError, "not a number: '" + item + "'");
    }
  }
  return out;
}

int cmd_run(const std::string& path, const std::string& out_override) {
  ExperimentConfig config = load_config(path);
  if (!out_override.empty()) config.output_dir = out_override;
  const RunReport rep = run(config);
  for (const auto& a : rep.assertions) {
    std::cout << (a.pass ? "PASS " : "FAIL ") << a.name << (a.detail.empty() ? "" : ": " + a.detail) << '\n';
  }
  for (const auto& a : rep.artifacts) std::cout << "wrote " << (config.output_dir / a).string() << '\n';
  std::fprintf(stderr, "wall time %.3f s\n", rep.wall_seconds);
  return rep.pass() ? 0 : kExitFail;
}

int cmd_validate(const std::string& path) {
  std::cout << validate_scheme(path).dump(2) << '\n';
  return 0;
}

int cmd_gen(const std::string& path, const std::string& box, const std::string& offset, const std::string& out) {
  const Scheme s = load_scheme(path);
  const Vec bounds = parse_list(box);
  if (bounds.size() != 2 * s.d()) throw Error(ErrorCode::ConfigError, "--box needs d lower bounds then d upper bounds");
  const Box region(Vec(bounds.begin(), bounds.begin() + static_cast<long>(s.d())),
                   Vec(bounds.begin() + static_cast<long>(s.d()), bounds.end()));
  Vec w = offset.empty() ? Vec(s.m(), 0.0) : parse_list(offset);
  if (offset.empty()) {
    for (std::size_t i = 0; i < s.m(); ++i) w[i] = 0.5 * (s.window().box.lo()[i] + s.window().box.hi()[i]);
  }
  const Patch p = model_set(s, TransversalPoint::make(s, w), region);
  if (out.empty()) {
    write_patch_csv(std::cout, p);
  } else {
    std::ofstream f(out, std::ios::binary);
    if (!f) throw Error(ErrorCode::IoError, "cannot write " + out);
    write_patch_csv(f, p);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cut-and-project model sets, hulls and transverse measures"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string config_path, out_dir;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment config");
  run_cmd->add_option("config", config_path, "JSON config file")->required();
  run_cmd->add_option("--out", out_dir, "Override output_dir");

  std::string scheme_path;
  auto* validate_cmd = app.add_subcommand("validate", "Print scheme diagnostics");
  validate_cmd->add_option("scheme", scheme_path, "Scheme JSON file")->required();

  std::string gen_scheme, box, offset, gen_out;
  auto* gen_cmd = app.add_subcommand("gen", "Write the model set in a box as CSV");
  gen_cmd->add_option("scheme", gen_scheme, "Scheme JSON file")->required();
  gen_cmd->add_option("--box", box, "lo_1,..,lo_d,hi_1,..,hi_d")->required();
  gen_cmd->add_option("--offset", offset, "internal parameter w_1,..,w_m (default: window centre)");
  gen_cmd->add_option("-o,--out", gen_out, "output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run_cmd) return cmd_run(config_path, out_dir);
    if (*validate_cmd) return cmd_validate(scheme_path);
    if (*gen_cmd) return cmd_gen(gen_scheme, box, offset, gen_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return is_input_error(e.code()) ? kExitConfig : kExitFail;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFail;
  }
  return 0;
}
