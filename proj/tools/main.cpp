// spcl: command-line front end for data generation, training and evaluation.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "spcl/config.hpp"
#include "spcl/data.hpp"
#include "spcl/error.hpp"
#include "spcl/gradsuite.hpp"
#include "spcl/trainer.hpp"

namespace fs = std::filesystem;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kData = 3, kNumerical = 4 };

struct ConfigArgs {
  std::string path;
  std::vector<std::string> overrides;

  void attach(CLI::App* cmd) {
    cmd->add_option("-c,--config", path, "JSON config file (missing keys keep their defaults)");
    cmd->add_option("--set", overrides, "Override a config key, e.g. --set steps=500")->take_all();
  }

  spcl::TrainConfig resolve() const {
    auto cfg = path.empty() ? spcl::TrainConfig{} : spcl::load_config(path);
    spcl::apply_overrides(cfg, overrides);
    cfg.validate();
    return cfg;
  }
};

void write_config_snapshot(const spcl::TrainConfig& cfg, const fs::path& out) {
  fs::create_directories(out);
  std::ofstream(out / "config.json") << spcl::config_to_json(cfg) << "\n";
}

// `dir` may be a dataset root (with test/) or a directory of test samples.
fs::path test_directory(const fs::path& dir) { return fs::is_directory(dir / "test") ? dir / "test" : dir; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SPCL semi-supervised segmentation"};
  app.require_subcommand(1);

  ConfigArgs gen_args, train_args, sweep_args, ablate_args;
  std::string out_dir, data_dir, checkpoint, suite, json_out;
  bool verbose = false;
  std::size_t instances = 50;
  std::uint64_t gc_seed = 0;
  double tolerance = 1e-4;

  auto* gen = app.add_subcommand("gen-data", "Write a synthetic dataset as SEG1 files");
  gen_args.attach(gen);
  gen->add_option("-o,--out", out_dir, "Dataset root")->required();

  auto* train = app.add_subcommand("train", "Train a model and write report.json, metrics.csv and a checkpoint");
  train_args.attach(train);
  train->add_option("-d,--data", data_dir, "Dataset root")->required();
  train->add_option("-o,--out", out_dir, "Run directory")->required();
  train->add_flag("-v,--verbose", verbose, "Print a line per evaluation");

  auto* eval = app.add_subcommand("eval", "Score a checkpoint on a test split");
  eval->add_option("-k,--checkpoint", checkpoint, "Checkpoint file")->required();
  eval->add_option("-d,--data", data_dir, "Dataset root or test directory")->required();
  eval->add_option("-o,--out", json_out, "Write the metrics JSON here as well as to stdout");

  auto* grad = app.add_subcommand("grad-check", "Finite-difference audit of all loss gradients");
  grad->add_option("-n,--instances", instances, "Random instances per loss")->check(CLI::PositiveNumber);
  grad->add_option("-s,--seed", gc_seed, "Base seed");
  grad->add_option("-t,--tolerance", tolerance, "Largest accepted relative error");

  auto* sweep = app.add_subcommand("sweep", "Train over the gamma_s x gamma_t grid, write results.csv");
  sweep_args.attach(sweep);
  sweep->add_option("-d,--data", data_dir, "Dataset root")->required();
  sweep->add_option("-o,--out", out_dir, "Output directory")->required();

  auto* ablate = app.add_subcommand("ablate", "Run an ablation suite over the configured seeds, write results.csv");
  ablate_args.attach(ablate);
  ablate->add_option("--suite", suite, "components | relation | bcl_vs_infonce")->required();
  ablate->add_option("-d,--data", data_dir, "Dataset root")->required();
  ablate->add_option("-o,--out", out_dir, "Output directory")->required();
  ablate->add_flag("-v,--verbose", verbose, "Print a line per run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (*gen) {
      const auto cfg = gen_args.resolve();
      const auto ds = spcl::data::generate(cfg.split_spec(), cfg.generator_options());
      spcl::data::save_dataset(out_dir, ds);
      write_config_snapshot(cfg, out_dir);
      std::printf("wrote %zu labeled, %zu unlabeled, %zu test samples to %s\n", ds.labeled.size(),
                  ds.unlabeled.size(), ds.test.size(), out_dir.c_str());
    } else if (*train) {
      const auto cfg = train_args.resolve();
      write_config_snapshot(cfg, out_dir);
      spcl::trainer::TrainOptions opts;
      opts.out_dir = out_dir;
      opts.verbose = verbose;
      const auto report = spcl::trainer::train(cfg, fs::path(data_dir), opts);
      std::printf("%s\n", spcl::trainer::metrics_json(report.final_metrics).c_str());
    } else if (*eval) {
      const auto m = spcl::trainer::evaluate(checkpoint, test_directory(data_dir));
      const auto text = spcl::trainer::metrics_json(m);
      std::printf("%s\n", text.c_str());
      if (!json_out.empty()) std::ofstream(json_out) << text << "\n";
    } else if (*grad) {
      const auto results = spcl::run_gradient_suite(instances, gc_seed);
      bool ok = true;
      for (const auto& r : results) {
        const bool pass = r.max_error < tolerance;
        ok = ok && pass;
        std::printf("%-10s instances=%zu max_rel_error=%.3e %s\n", r.name.c_str(), r.instances, r.max_error,
                    pass ? "ok" : "FAIL");
      }
      if (!ok) return kNumerical;
    } else if (*sweep) {
      const auto cfg = sweep_args.resolve();
      write_config_snapshot(cfg, out_dir);
      const auto rows = spcl::trainer::sweep(cfg, spcl::data::load_dataset(data_dir));
      spcl::trainer::write_sweep_csv(rows, fs::path(out_dir) / "results.csv");
      std::printf("wrote %zu rows to %s\n", rows.size(), (fs::path(out_dir) / "results.csv").c_str());
    } else if (*ablate) {
      const auto cfg = ablate_args.resolve();
      spcl::trainer::ablation_configs(cfg, suite);  // reject unknown suites before loading data
      write_config_snapshot(cfg, out_dir);
      const auto rows = spcl::trainer::ablate(cfg, spcl::data::load_dataset(data_dir), suite, verbose);
      spcl::trainer::write_ablation_csv(rows, fs::path(out_dir) / "results.csv");
      for (const auto& r : rows) std::printf("%-16s dice %.4f  jaccard %.4f  hd95 %.3f\n", r.name.c_str(), r.dice, r.jaccard, r.hd95);
    }
  } catch (const spcl::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const spcl::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kData;
  } catch (const spcl::ShapeError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kData;
  } catch (const spcl::NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kOk;
}
