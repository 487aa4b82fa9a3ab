// brlab: run a verification experiment or print exponent predictions.
//
//   brlab run <experiment> [--config FILE] [--seed U64] [--out PATH] [--format csv|json] [--key value ...]
//   brlab predict --n N --k K --p P1,P2,... [--gamma G1,...] [--format text|json]
//
// Exit status: 0 pass, 1 fail, 2 invalid configuration, 3 budget exceeded,
// 4 unwritable output.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>

#include "brlab/cli.hpp"

namespace cli = brlab::cli;
using cli::json;

namespace {

std::string dashed(std::string key) {
  for (char& c : key) {
    if (c == '_') c = '-';
  }
  return key;
}

json read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw cli::ConfigError("cannot read config file " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw cli::ConfigError("config file " + path + ": " + e.what());
  }
}

void print_summary(const cli::Report& r) {
  for (const cli::Check& c : r.checks) {
    std::cerr << (c.pass ? "PASS " : "FAIL ") << r.experiment << " " << c.name << " = " << cli::format_double(c.value)
              << " (" << c.relation << " " << cli::format_double(c.limit) << ")\n";
  }
}

int predict(const std::string& format, int n, int k, const std::vector<double>& p, const std::vector<double>& gamma) {
  std::vector<double> ps = p;
  if (ps.size() == 1 && k > 1) ps.assign(static_cast<std::size_t>(k), p.front());
  if (k > 0 && ps.size() != static_cast<std::size_t>(k)) {
    throw cli::ConfigError("--p lists " + std::to_string(ps.size()) + " exponents but --k is " + std::to_string(k));
  }
  const brlab::ExponentTable t = brlab::predict_exponents(n, ps, gamma);
  json out = {{"n", t.n},
              {"k", t.k},
              {"p", t.p},
              {"gamma", t.gamma},
              {"p_out", t.p_out},
              {"alpha_threshold", t.alpha_threshold},
              {"critical_index", t.critical_index},
              {"sign_change_p", t.sign_change_p}};
  if (!gamma.empty()) {
    out["weighted_threshold"] = t.weighted_threshold;
    out["weighted_gamma"] = t.weighted_gamma;
  }
  if (format == "json") {
    std::cout << cli::to_json_text(out);
  } else {
    for (const auto& [key, value] : out.items()) {
      if (value.is_array()) {
        if (value.empty()) continue;
        std::cout << key << " ";
        for (std::size_t i = 0; i < value.size(); ++i) std::cout << (i ? "," : "") << cli::format_double(value[i].get<double>());
        std::cout << "\n";
      } else {
        std::cout << key << " " << (value.is_number_float() ? cli::format_double(value.get<double>()) : value.dump()) << "\n";
      }
    }
  }
  return cli::exit_pass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bochner-Riesz verification experiments"};
  app.require_subcommand(1);

  CLI::App* run = app.add_subcommand("run", "run one experiment and write its report");
  std::string experiment, config_path, out_path, format = "json";
  run->add_option("experiment", experiment, "experiment name")->required()->check(CLI::IsMember(cli::experiments()));
  run->add_option("--config", config_path, "JSON config file; flags override its values");
  run->add_option("--out", out_path, "report path (default: standard output)");
  run->add_option("--format", format, "report format")->check(CLI::IsMember({"csv", "json"}));

  // Every config key of every experiment is a flag; values are parsed
  // against the selected experiment's defaults.
  std::set<std::string> keys;
  for (const std::string& e : cli::experiments()) {
    const json d = cli::defaults(e);
    for (const auto& [key, value] : d.items()) keys.insert(key);
  }
  std::map<std::string, std::string> raw;
  std::map<std::string, CLI::Option*> opts;
  for (const std::string& key : keys) opts[key] = run->add_option("--" + dashed(key), raw[key], key);

  CLI::App* pred = app.add_subcommand("predict", "print the exponent table");
  int n = 2, k = 0;
  std::vector<double> p, gamma;
  std::string pformat = "text";
  pred->add_option("--n", n, "dimension")->required();
  pred->add_option("--k", k, "number of inputs (default: length of --p)");
  pred->add_option("--p", p, "input exponents")->required()->delimiter(',');
  pred->add_option("--gamma", gamma, "weights of the first inputs")->delimiter(',');
  pred->add_option("--format", pformat, "output format")->check(CLI::IsMember({"text", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::exit_pass : cli::exit_config;
  }

  try {
    if (pred->parsed()) return predict(pformat, n, k, p, gamma);

    std::map<std::string, std::string> flags;
    for (const auto& [key, opt] : opts) {
      if (opt->count() > 0) flags[key] = raw[key];
    }
    const json file = config_path.empty() ? json() : read_config(config_path);
    const json config = cli::merge_config(experiment, file, flags);
    const cli::Report report = cli::run(experiment, config);
    const std::string text = format == "csv" ? cli::to_csv_text(report) : cli::to_json_text(cli::to_json(report));
    if (out_path.empty()) {
      std::cout << text;
    } else {
      cli::write_atomic(out_path, text);
    }
    print_summary(report);
    return report.pass() ? cli::exit_pass : cli::exit_fail;
  } catch (const cli::ConfigError& e) {
    std::cerr << "brlab: " << e.what() << "\n";
    return cli::exit_config;
  } catch (const brlab::DomainError& e) {
    std::cerr << "brlab: invalid configuration: " << e.what() << "\n";
    return cli::exit_config;
  } catch (const brlab::NyquistError& e) {
    std::cerr << "brlab: invalid configuration: " << e.what() << "\n";
    return cli::exit_config;
  } catch (const brlab::BudgetError& e) {
    std::cerr << "brlab: " << e.what() << " (required " << e.required() << " lattice points)\n";
    return cli::exit_budget;
  } catch (const cli::OutputError& e) {
    std::cerr << "brlab: " << e.what() << "\n";
    return cli::exit_unwritable;
  } catch (const brlab::ConvergenceError& e) {
    std::cerr << "brlab: " << e.what() << " (achieved " << e.achieved() << ")\n";
    return cli::exit_fail;
  }
}
