#include "sweep/oracles.hpp"
#include "sweep/scenario.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

namespace {

int run_file(const std::string& path, const char* forced_mode) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "cannot open config file: " << path << "\n";
    return 2;
  }
  sweep::Json j;
  try {
    j = sweep::Json::parse(in);
  } catch (const std::exception& e) {
    std::cerr << "config parse error: " << e.what() << "\n";
    return 2;
  }
  if (forced_mode) j["mode"] = forced_mode;
  auto diags = sweep::validate_config(j);
  if (!diags.empty()) {
    for (const auto& d : diags) std::cerr << "validation: " << d << "\n";
    return 2;
  }
  try {
    int code = sweep::run_scenario(sweep::parse_config(j));
    if (code == 4) std::cerr << "check failed (see report.json)\n";
    return code;
  } catch (const sweep::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const sweep::Error& e) {
    std::cerr << "solver error " << e.what() << "\n";
    return 3;
  }
}

int run_oracle(const std::string& name, const std::vector<double>& params) {
  if (name == "reflected_bm_moments") {
    if (params.size() != 1) {
      std::cerr << "usage: sweep oracle reflected_bm_moments <t>\n";
      return 2;
    }
    auto [mean, var] = sweep::oracle::reflected_bm_moments(params[0]);
    std::cout << "mean " << mean << "\nvariance " << var << "\n";
    return 0;
  }
  if (name == "skorokhod_1d") {
    // params: x0 followed by the h samples
    if (params.size() < 2) {
      std::cerr << "usage: sweep oracle skorokhod_1d <x0> <h_0> <h_1> ...\n";
      return 2;
    }
    std::vector<double> h(params.begin() + 1, params.end());
    auto x = sweep::oracle::skorokhod_1d(h, params[0]);
    for (double v : x) std::cout << v << "\n";
    return 0;
  }
  if (name == "simplex_min_norm") {
    // params: resolution, d, then m vectors of length d
    if (params.size() < 3) {
      std::cerr << "usage: sweep oracle simplex_min_norm <resolution> <d> <v...>\n";
      return 2;
    }
    double res = params[0];
    std::size_t d = std::size_t(params[1]);
    if ((params.size() - 2) % d != 0) {
      std::cerr << "vector data not a multiple of d\n";
      return 2;
    }
    std::vector<std::vector<double>> v;
    for (std::size_t i = 2; i < params.size(); i += d)
      v.emplace_back(params.begin() + i, params.begin() + i + d);
    auto r = sweep::oracle::simplex_min_norm_grid(v, res);
    std::cout << "xi " << r.value[0] << " error_bound " << r.error_bound << "\n";
    return 0;
  }
  std::cerr << "unknown oracle: " << name << "\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sweeping-process toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "run a scenario config");
  run->add_option("config", config_path, "scenario JSON file")->required();

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "schema-check a config without computing");
  validate->add_option("config", validate_path, "scenario JSON file")->required();

  std::string check_path;
  auto* check = app.add_subcommand("check", "run the hypothesis checks of a config");
  check->add_option("config", check_path, "scenario JSON file")->required();

  std::string oracle_name;
  std::vector<double> oracle_params;
  auto* oracle = app.add_subcommand("oracle", "evaluate a reference oracle");
  oracle->add_option("name", oracle_name, "oracle name")->required();
  oracle->add_option("params", oracle_params, "numeric parameters");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return run_file(config_path, nullptr);
  if (check->parsed()) return run_file(check_path, "check");
  if (validate->parsed()) {
    std::ifstream in(validate_path);
    if (!in) {
      std::cerr << "cannot open config file: " << validate_path << "\n";
      return 2;
    }
    try {
      sweep::Json j = sweep::Json::parse(in);
      auto diags = sweep::validate_config(j);
      for (const auto& d : diags) std::cout << d << "\n";
      if (diags.empty()) std::cout << "ok\n";
    } catch (const std::exception& e) {
      std::cout << "parse error: " << e.what() << "\n";
    }
    return 0;
  }
  if (oracle->parsed()) return run_oracle(oracle_name, oracle_params);
  return 2;
}
