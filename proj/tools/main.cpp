#include <chrono>
#include <iostream>

#include <CLI11.hpp>

#include "runner.hpp"

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kModel = 3, kInvariant = 4, kOther = 5 };

void add_shared_options(CLI::App& app, mutforest::cli::RunOptions& o, std::string& out_dir) {
  app.add_option("--model", o.model, "Model JSON file")->required()->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "Base seed (64-bit)");
  app.add_option("--reps", o.reps, "Number of replicates");
  app.add_option("--workers", o.workers, "Worker threads; never changes results")->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "Output directory")->required();
  app.add_option("--eps", o.eps, "Series tolerance");
  app.add_option("--horizon", o.horizon, "Time horizon");
  app.add_option("--budget", o.budget, "Vertex budget (discrete) or population cap (continuous)");
  app.add_option("--engine", o.engine, "walk|forest, direct|lamperti or direct|representation");
  app.add_option("--roots", o.roots, "Root counts per type, e.g. 1,0")->delimiter(',');
  app.add_option("--direction", o.direction, "Direction w, e.g. 1,0")->delimiter(',');
  app.add_option("--scales", o.scales, "Scales n, e.g. 50,100,200")->delimiter(',');
  app.add_option("--times", o.times, "Observation times or grid")->delimiter(',');
  app.add_option("--alpha", o.alphas, "Laplace arguments")->delimiter(',');
  app.add_option("--type", o.type, "Type (1-based)");
  app.add_option("--target", o.target, "Target type (1-based)");
  app.add_option("--exact-until", o.exact_until, "Growth: exact simulation below this population");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mutations in multitype branching forests"};
  app.require_subcommand(1);
  mutforest::cli::RunOptions opts;
  std::string out_dir;

  for (const char* name : {"mutation-law", "simulate-discrete", "direction-asymptotics", "simulate-ct", "growth"}) {
    auto* sub = app.add_subcommand(name);
    add_shared_options(*sub, opts, out_dir);
    sub->callback([&opts, name] { opts.command = name; });
  }
  auto* emergence = app.add_subcommand("emergence", "Emergence times along a mutation chain");
  emergence->require_subcommand(1);
  for (const char* name : {"tau", "theta", "bound", "ladder", "laplace", "expectation"}) {
    auto* sub = emergence->add_subcommand(name);
    add_shared_options(*sub, opts, out_dir);
    sub->callback([&opts, name] {
      opts.command = "emergence";
      opts.subcommand = name;
    });
  }

  CLI11_PARSE(app, argc, argv);

  try {
    const auto start = std::chrono::steady_clock::now();
    const auto out = mutforest::cli::run(opts);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    mutforest::cli::write_outputs(out_dir, opts, out, seconds);
    for (const auto& line : out.summary) std::cout << line << '\n';
    std::cout << "wrote " << out.files.size() + 1 << " files to " << out_dir << '\n';
    return kOk;
  } catch (const mutforest::cli::ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return kConfig;
  } catch (const mutforest::cli::ModelError& e) {
    std::cerr << "model validation failed: " << e.what() << '\n';
    return kModel;
  } catch (const mutforest::cli::InvariantError& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return kInvariant;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
}
