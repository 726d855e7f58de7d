#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "http_server.hpp"
#include "smbo/bench.hpp"
#include "smbo/errors.hpp"
#include "smbo/service.hpp"
#include "smbo/study.hpp"

namespace smbo::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json read_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_json_atomic(const std::string& path, const json& doc) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
    out << doc.dump(2) << '\n';
    if (!out) throw std::runtime_error("write to '" + tmp + "' failed");
  }
  fs::rename(tmp, path);
}

Study load_study(const std::string& path) { return Study::from_json(read_json(path)); }

void save_study(const std::string& path, const Study& study) { write_json_atomic(path, study.to_json()); }

double parse_y(const std::string& text) {
  char* end = nullptr;
  const double y = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size()) throw ValidationError("--y must be a number, got '" + text + "'");
  return y;
}

json best_json(const Study& study) {
  const auto inc = study.incumbent();
  if (!inc) return nullptr;
  return {{"x", study.space().point_to_json(inc->x)}, {"y", inc->y}, {"iteration", inc->index + 1}};
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sequential model-based (Bayesian) optimization over mixed design spaces"};
  app.name("smbo");
  app.require_subcommand(1);

  // space validate <file>
  auto* space_cmd = app.add_subcommand("space", "Design-space documents")->require_subcommand(1);
  std::string space_file;
  auto* space_validate = space_cmd->add_subcommand("validate", "Parse and validate a design-space document");
  space_validate->add_option("file", space_file, "JSON list of parameter records")->required();

  // study ...
  auto* study_cmd = app.add_subcommand("study", "Study lifecycle on a JSON study file")->require_subcommand(1);
  std::string study_file = "study.json";
  study_cmd->add_option("--study,-s", study_file, "Study document path")->capture_default_str();

  std::string init_space, init_config;
  std::optional<std::uint64_t> seed_opt;
  bool force = false;
  auto* study_init = study_cmd->add_subcommand("init", "Create a study from a space and optional config");
  study_init->add_option("--space", init_space, "Design-space document")->required();
  study_init->add_option("--config", init_config, "Study configuration document");
  study_init->add_option("--seed", seed_opt, "Override the configured seed");
  study_init->add_flag("--force", force, "Overwrite an existing study file");

  std::size_t q = 0;
  auto* study_suggest = study_cmd->add_subcommand("suggest", "Propose the next design(s)");
  study_suggest->add_option("--q", q, "Batch size (default: configured q)");

  std::string x_text, y_text, source_text;
  auto* study_observe = study_cmd->add_subcommand("observe", "Record an evaluated design");
  study_observe->add_option("--x", x_text, "Design as a JSON object {name: value}")->required();
  study_observe->add_option("--y", y_text, "Observed objective value")->required();
  study_observe->add_option("--source", source_text, "algorithm | human-override | initialization");

  std::size_t k = 5;
  auto* study_slate = study_cmd->add_subcommand("slate", "Top-k candidates with posterior annotations");
  study_slate->add_option("--k", k, "Slate size")->capture_default_str();

  std::string mode = "observed";
  auto* study_best = study_cmd->add_subcommand("best", "Recommend the best design");
  study_best->add_option("--mode", mode, "observed | model")->capture_default_str();

  std::size_t budget = 0;
  std::string objective = "builtin:wavy2d";
  auto* study_run = study_cmd->add_subcommand("run", "Optimize a built-in objective until the budget is used");
  study_run->add_option("--budget", budget, "Total evaluations, initial design included")->required();
  study_run->add_option("--objective", objective, "Objective to evaluate")->capture_default_str();
  study_run->add_option("--seed", seed_opt, "Seed for a newly created study");

  study_cmd->add_subcommand("show", "Print the study document");
  study_cmd->add_subcommand("stop", "Stop the study");

  // bench run <config>
  auto* bench_cmd = app.add_subcommand("bench", "Benchmark experiments")->require_subcommand(1);
  std::string bench_config, bench_output;
  auto* bench_run = bench_cmd->add_subcommand("run", "Run a benchmark configuration");
  bench_run->add_option("config", bench_config, "Benchmark configuration document")->required();
  bench_run->add_option("--output", bench_output, "Per-run CSV path (overrides the config)");

  // serve
  std::string addr = "127.0.0.1:8080";
  std::string data_dir;
  auto* serve_cmd = app.add_subcommand("serve", "Run the ask-tell HTTP service");
  serve_cmd->add_option("--addr", addr, "host:port to listen on")->capture_default_str();
  serve_cmd->add_option("--data-dir", data_dir, "Study directory (default $SMBO_DATA_DIR or ./smbo-data)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (space_validate->parsed()) {
      const auto space = DesignSpace::parse(read_json(space_file));
      out << json{{"valid", true}, {"parameters", space.size()}, {"embedded_dim", space.embedded_dim()}}.dump() << '\n';
      return 0;
    }

    if (study_init->parsed()) {
      if (fs::exists(study_file) && !force) {
        throw ValidationError("'" + study_file + "' exists; pass --force to overwrite");
      }
      json config = init_config.empty() ? json::object() : read_json(init_config);
      if (seed_opt) config["seed"] = *seed_opt;
      Study study(DesignSpace::parse(read_json(init_space)), StudyConfig::from_json(config));
      save_study(study_file, study);
      out << json{{"study", study_file}, {"state", to_string(study.state())}}.dump() << '\n';
      return 0;
    }

    if (study_run->parsed()) {
      const auto obj = bench::builtin_objective(objective);
      std::optional<Study> study;
      if (fs::exists(study_file)) {
        study = load_study(study_file);
        if (!(study->space() == obj.space)) throw ValidationError("study space does not match the objective");
        if (seed_opt && *seed_opt != study->config().seed) {
          throw ValidationError("--seed differs from the existing study's seed");
        }
      } else {
        StudyConfig config;
        config.seed = seed_opt.value_or(0);
        study.emplace(obj.space, config);
      }
      if (budget < 1) throw ValidationError("--budget must be >= 1");
      run(*study, obj.evaluate, StoppingRule::with_budget(budget),
          [&](const Study& s) { save_study(study_file, s); });
      out << json{{"observations", study->history().size()}, {"best", best_json(*study)}}.dump() << '\n';
      return 0;
    }

    if (study_cmd->parsed()) {
      Study study = load_study(study_file);
      if (study_suggest->parsed()) {
        const auto pts = study.suggest(q);
        save_study(study_file, study);
        json arr = json::array();
        for (const auto& p : pts) arr.push_back(study.space().point_to_json(p));
        out << json{{"suggestions", arr}}.dump() << '\n';
      } else if (study_observe->parsed()) {
        json xj;
        try {
          xj = json::parse(x_text);
        } catch (const json::parse_error&) {
          throw ValidationError("--x must be a JSON object");
        }
        const auto x = study.space().point_from_json(xj);
        std::optional<Source> src;
        if (!source_text.empty()) src = source_from_string(source_text);
        const auto& obs = study.observe(x, parse_y(y_text), src);
        save_study(study_file, study);
        out << json{{"iteration", obs.iteration}, {"source", to_string(obs.source)}, {"best", best_json(study)}}.dump()
            << '\n';
      } else if (study_slate->parsed()) {
        if (k < 1) throw ValidationError("--k must be >= 1");
        json arr = json::array();
        for (const auto& e : study.hitl_slate(k)) {
          arr.push_back({{"x", study.space().point_to_json(e.x)}, {"score", e.score}, {"mean", e.mean}, {"std", e.stddev}});
        }
        out << json{{"slate", arr}}.dump() << '\n';
      } else if (study_best->parsed()) {
        const auto m = recommend_mode_from_string(mode);
        const auto x = study.recommend_best(m);
        json res{{"mode", to_string(m)}, {"x", study.space().point_to_json(x)}};
        if (m == RecommendMode::observed) res["y"] = study.incumbent()->y;
        out << res.dump() << '\n';
      } else if (study_cmd->get_subcommand("show")->parsed()) {
        out << study.to_json().dump(2) << '\n';
      } else if (study_cmd->get_subcommand("stop")->parsed()) {
        study.stop();
        save_study(study_file, study);
        out << json{{"state", to_string(study.state())}}.dump() << '\n';
      }
      return 0;
    }

    if (bench_run->parsed()) {
      auto config = bench::BenchmarkConfig::from_json(read_json(bench_config));
      if (!bench_output.empty()) config.output = bench_output;
      const auto table = bench::run_benchmark(config);
      json summary = json::object();
      for (const auto& m : config.methods) {
        bool any = false;
        for (const auto& r : table.rows) any = any || r.method == m;
        if (any) summary[m] = table.mean_final_simple_regret(m);
      }
      out << json{{"f_star", table.f_star},
                  {"mean_final_simple_regret", summary},
                  {"failures", table.failures},
                  {"output", config.output}}
                 .dump()
          << '\n';
      return table.failures.empty() ? 0 : 1;
    }

    if (serve_cmd->parsed()) {
      const auto colon = addr.rfind(':');
      if (colon == std::string::npos) throw ValidationError("--addr must be host:port");
      const std::string host = addr.substr(0, colon);
      int port = 0;
      try {
        port = std::stoi(addr.substr(colon + 1));
      } catch (const std::exception&) {
        throw ValidationError("--addr has an invalid port");
      }
      const fs::path dir = data_dir.empty() ? service::data_directory("smbo-data") : fs::path(data_dir);
      service::StudyStore store(dir);
      service::Api api(store);
      service::HttpServer server(api);
      const int bound = server.bind(host, port);
      if (bound < 0) throw std::runtime_error("cannot bind " + addr);
      err << "serving " << dir.string() << " on " << host << ':' << bound << std::endl;
      return server.listen() ? 0 : 1;
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const StateError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const json::exception& e) {
    err << "error: invalid document: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace smbo::cli
