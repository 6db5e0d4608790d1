#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "spcl/data.hpp"
#include "spcl/losses.hpp"
#include "spcl/net.hpp"
#include "spcl/sampling.hpp"
#include "spcl/subdivision.hpp"

namespace spcl {

enum class BoundaryLoss { Bcl, InfoNce };

// Every hyperparameter of a run. Keys in JSON are the field names below.
struct TrainConfig {
  // loss weights and schedule
  double tau = 0.5;
  double lambda_u = 0.3;
  double lambda_c = 0.1;
  double alpha_max = 0.1;
  std::int64_t alpha_ramp_steps = -1;  // negative: 40% of `steps`

  // reliable-aware anchor thresholds
  double gamma_s = 0.75;
  double gamma_t = 0.95;

  // optimisation
  double lr = 0.05;
  double momentum = 0.9;
  std::size_t steps = 2000;
  std::size_t labeled_per_batch = 4;
  std::size_t unlabeled_per_batch = 4;
  double ema_beta = 0.999;
  bool ema_warmup = true;  // decay is min(ema_beta, 1 - 1/(step + 1)) when set
  double student_noise = 0.3;  // Gaussian sd added to the student's view of unlabeled images
  std::uint64_t seed = 0;
  std::size_t eval_every = 100;

  // contrastive sampling
  std::size_t k_anchor = 32;
  std::size_t k_pos = 8;
  std::size_t k_neg = 64;
  std::size_t q_cap = 256;
  std::size_t boundary_thickness = 1;
  bool include_background_anchors = false;

  // network
  std::size_t embed_dim = 32;
  std::size_t enc1 = 16;
  std::size_t enc2 = 32;
  std::size_t proj_hidden = 32;

  // ablation switches
  bool use_unsup = true;
  bool use_icl = true;
  bool use_bcl = true;
  subdivision::RelationMode relation = subdivision::RelationMode::Unconcerned;
  BoundaryLoss boundary_loss = BoundaryLoss::Bcl;

  // synthetic data (gen-data)
  std::size_t num_classes = 4;
  std::size_t image_height = 64;
  std::size_t image_width = 64;
  std::size_t train_images = 80;
  double labeled_fraction = 0.1;
  std::size_t test_images = 40;
  double noise_level = 0.15;
  std::uint64_t data_seed = 0;

  // sweep / ablate
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::vector<double> sweep_gamma_s{0.65, 0.75, 0.85};
  std::vector<double> sweep_gamma_t{0.9, 0.95, 0.99};

  void validate() const;  // throws ConfigError

  std::size_t resolved_alpha_ramp() const;
  losses::LossConfig loss_config() const;
  net::NetConfig net_config() const;
  sampling::AnchorOptions anchor_options() const;
  data::SplitSpec split_spec() const;
  data::GeneratorOptions generator_options() const;
  bool contrastive() const { return use_icl || use_bcl; }
};

std::string_view to_string(BoundaryLoss loss);
BoundaryLoss parse_boundary_loss(std::string_view text);

// JSON text of the full config, defaults included.
std::string config_to_json(const TrainConfig& config, int indent = 2);
// Unknown keys and ill-typed values throw ConfigError. Missing keys keep defaults.
TrainConfig config_from_json(std::string_view text, TrainConfig base = {});
TrainConfig load_config(const std::filesystem::path& path);

// `key=value` where value is parsed as JSON when possible and as a bare string otherwise.
void apply_override(TrainConfig& config, std::string_view assignment);
void apply_overrides(TrainConfig& config, const std::vector<std::string>& assignments);

}  // namespace spcl
