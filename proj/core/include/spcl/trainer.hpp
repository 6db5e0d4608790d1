#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "spcl/config.hpp"
#include "spcl/data.hpp"
#include "spcl/metrics.hpp"
#include "spcl/net.hpp"
#include "spcl/sampling.hpp"
#include "spcl/subdivision.hpp"

namespace spcl::trainer {

// Loss values of one training batch. total is the exact value that was
// back-propagated.
struct LossBreakdown {
  double total = 0.0;
  double sup = 0.0;
  double unsup = 0.0;
  double icl = 0.0;
  double bcl = 0.0;
  double alpha = 0.0;
};

struct StepStats {
  std::size_t step = 0;  // 0-based
  LossBreakdown loss;
  std::size_t anchors = 0;
  std::size_t inner_items = 0;
  std::size_t boundary_items = 0;
  std::size_t dropped = 0;
};

// Read-only view of one training step, handed to an observer after the
// samples have been drawn and the losses evaluated.
struct StepTrace {
  std::size_t step;
  std::span<const sampling::AnchorSource> sources;  // labeled images first, then unlabeled
  const sampling::AnchorSet& anchors;
  const sampling::ContrastSamples& samples;
  const sampling::MemoryBank& bank;
  const subdivision::UnconcernedRelation& relation;
  double gamma_s;
  double gamma_t;
  const LossBreakdown& loss;
};

using StepObserver = std::function<void(const StepTrace&)>;

struct EvalRow {
  std::size_t step = 0;  // completed optimisation steps
  double dice = 0.0;
  double jaccard = 0.0;
  double hd95 = 0.0;
  bool hd95_defined = false;
  LossBreakdown loss;  // the batch of the last completed step
};

struct RunReport {
  TrainConfig config;
  std::vector<EvalRow> rows;
  metrics::SegMetrics final_metrics;
  std::vector<StepStats> steps;
  double wall_seconds = 0.0;
};

struct TrainOptions {
  std::filesystem::path out_dir;  // empty: write nothing
  StepObserver observer;
  bool verbose = false;
  net::ModelParams* final_params = nullptr;  // receives the trained student
};

// Teacher-student SPCL training on in-memory data. Throws NumericalError on a
// non-finite loss (after writing diagnostic/ under out_dir when set).
RunReport train(const TrainConfig& config, const data::Dataset& dataset, const TrainOptions& options = {});
RunReport train(const TrainConfig& config, const std::filesystem::path& data_dir, const TrainOptions& options = {});

// Argmax predictions of `params` scored against every labeled test sample.
metrics::SegMetrics evaluate(const net::ModelParams& params, const std::vector<data::Sample>& test,
                             std::size_t num_classes);
metrics::SegMetrics evaluate(const std::filesystem::path& checkpoint, const std::filesystem::path& test_dir);

struct SweepRow {
  double gamma_s = 0.0;
  double gamma_t = 0.0;
  metrics::SegMetrics metrics;
};

// One seeded run per (gamma_s, gamma_t) pair of the config grid. The config's
// own (gamma_s, gamma_t) is appended when it is not already a grid point.
std::vector<SweepRow> sweep(const TrainConfig& config, const data::Dataset& dataset);

struct AblationRow {
  std::string name;
  TrainConfig config;
  std::vector<std::uint64_t> seeds;
  std::vector<double> dice_per_seed;
  double dice = 0.0;  // means over seeds
  double jaccard = 0.0;
  double hd95 = 0.0;
};

// Config matrices: "components" (5 rows), "relation" (Neg, Pos, US),
// "bcl_vs_infonce" (2 rows). Throws ConfigError on any other name.
std::vector<TrainConfig> ablation_configs(const TrainConfig& base, const std::string& suite,
                                          std::vector<std::string>* names = nullptr);
std::vector<AblationRow> ablate(const TrainConfig& config, const data::Dataset& dataset, const std::string& suite,
                                bool verbose = false);

void write_report_json(const RunReport& report, const std::filesystem::path& path);
void write_metrics_csv(const RunReport& report, const std::filesystem::path& path);
void write_step_csv(const RunReport& report, const std::filesystem::path& path);
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path);
void write_ablation_csv(const std::vector<AblationRow>& rows, const std::filesystem::path& path);
std::string metrics_json(const metrics::SegMetrics& m, int indent = 2);

}  // namespace spcl::trainer
