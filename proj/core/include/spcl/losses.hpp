#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "spcl/grid.hpp"
#include "spcl/sampling.hpp"
#include "spcl/tensor.hpp"

namespace spcl::losses {

using sampling::ContrastSamples;
using tensor::Tape;
using tensor::Tensor;

// Smoothing added to both numerator and denominator of every soft Dice ratio.
inline constexpr double kDiceSmoothing = 1e-6;

struct LossConfig {
  double tau = 0.5;
  double lambda_u = 0.3;
  double lambda_c = 0.1;
  double alpha_max = 0.1;
  std::size_t alpha_ramp_steps = 800;
  double gamma_t = 0.95;

  void validate() const;
};

// alpha_max * min(1, step / alpha_ramp_steps); alpha_max when the ramp is 0.
double alpha_at(const LossConfig& config, std::size_t step);

// ---- Scalar forms over similarity values (no tape) -------------------------

// InfoNCE with unconcerned samples for one anchor: the mean over positives of
// -log(e^{p/tau} / (e^{p/tau} + sum_n e^{n/tau})). Zero when there are no negatives.
double icl_anchor_value(std::span<const double> positives, std::span<const double> negatives, double tau);

// log(1 + sum_p e^{-p} * sum_n e^{n}).
double bcl_anchor_value(std::span<const double> positives, std::span<const double> negatives);

struct LowerBound {
  double loss;
  double bound;
};

// Single-positive ICL loss and its Jensen lower bound
// -p/tau + log|N| + mean(N)/tau. Requires at least one negative.
LowerBound icl_lower_bound(double positive, std::span<const double> negatives, double tau);

struct SimilarityGrads {
  std::vector<double> positive;  // dL/dY+ , all <= 0
  std::vector<double> negative;  // dL/dY- , all >= 0
};

// Closed-form gradients of the boundary loss with respect to every similarity.
SimilarityGrads bcl_similarity_grads(std::span<const double> positives, std::span<const double> negatives);

// |dL/dY+_i| / |dL/dY-_j| for the chosen positive i and negative j.
double bcl_gradient_ratio(std::span<const double> positives, std::span<const double> negatives,
                          std::size_t i = 0, std::size_t j = 0);

// ---- Taped forms ------------------------------------------------------------

// anchor [D, 1] against rows [n, D] -> [n, 1] dot products.
Tensor similarities(Tape& tape, const Tensor& anchor, const Tensor& rows);

Tensor icl_term(Tape& tape, const Tensor& positive_sims, const Tensor& negative_sims, double tau);
Tensor bcl_term(Tape& tape, const Tensor& positive_sims, const Tensor& negative_sims);

// Means of the per-anchor terms; exactly 0 (constant) for an empty batch.
Tensor icl_loss(Tape& tape, const ContrastSamples& samples, double tau);
Tensor bcl_loss(Tape& tape, const ContrastSamples& samples);

// 1 - mean_c (2 sum(p_c y_c) + eps) / (sum p_c + sum y_c + eps), sums over
// pixels where mask is set (all pixels when mask is empty).
Tensor soft_dice_loss(Tape& tape, const Tensor& probs, const LabelMap& labels, std::span<const std::uint8_t> mask = {});

// -mean log p[y] over the image.
Tensor cross_entropy(Tape& tape, const Tensor& probs, const LabelMap& labels);

// (cross entropy + soft Dice) / 2.
Tensor supervised_loss(Tape& tape, const Tensor& probs, const LabelMap& labels);

// Soft Dice against the teacher's argmax restricted to pixels whose teacher
// confidence is >= gamma_t; constant 0 when no pixel qualifies.
Tensor unsupervised_loss(Tape& tape, const Tensor& student_probs, const Tensor& teacher_probs, double gamma_t);

struct LossTerms {
  Tensor sup;
  Tensor unsup;
  Tensor icl;
  Tensor bcl;
};

// sup + lambda_u * unsup + lambda_c * ((1 - alpha) * icl + alpha * bcl).
Tensor combine(Tape& tape, const LossTerms& terms, const LossConfig& config, double alpha);
Tensor unified_loss(Tape& tape, const LossTerms& terms, const LossConfig& config, std::size_t step);

}  // namespace spcl::losses
