#include "spcl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "spcl/error.hpp"
#include "spcl/ops.hpp"

namespace spcl::losses {

namespace ts = spcl::tensor;

void LossConfig::validate() const {
  if (!(tau > 0.0)) throw ConfigError("loss config: tau must be > 0");
  if (!(lambda_u >= 0.0) || !(lambda_c >= 0.0)) throw ConfigError("loss config: lambda_u and lambda_c must be >= 0");
  if (!(alpha_max >= 0.0 && alpha_max <= 1.0)) throw ConfigError("loss config: alpha_max must lie in [0, 1]");
  if (!(gamma_t > 0.0 && gamma_t <= 1.0)) throw ConfigError("loss config: gamma_t must lie in (0, 1]");
}

double alpha_at(const LossConfig& config, std::size_t step) {
  if (config.alpha_ramp_steps == 0) return config.alpha_max;
  const double progress = static_cast<double>(step) / static_cast<double>(config.alpha_ramp_steps);
  return config.alpha_max * std::min(1.0, progress);
}

double icl_anchor_value(std::span<const double> positives, std::span<const double> negatives, double tau) {
  if (positives.empty() || negatives.empty()) return 0.0;
  double negative_mass = 0.0;
  for (double n : negatives) negative_mass += std::exp(n / tau);
  double total = 0.0;
  for (double p : positives) total += std::log(std::exp(p / tau) + negative_mass) - p / tau;
  return total / static_cast<double>(positives.size());
}

double bcl_anchor_value(std::span<const double> positives, std::span<const double> negatives) {
  double sr_pos = 0.0, sr_neg = 0.0;
  for (double p : positives) sr_pos += std::exp(-p);
  for (double n : negatives) sr_neg += std::exp(n);
  return std::log1p(sr_pos * sr_neg);
}

LowerBound icl_lower_bound(double positive, std::span<const double> negatives, double tau) {
  if (negatives.empty()) throw ConfigError("icl_lower_bound: need at least one negative");
  const double mean_negative =
      std::accumulate(negatives.begin(), negatives.end(), 0.0) / static_cast<double>(negatives.size());
  const double p = positive;
  return {icl_anchor_value(std::span<const double>(&p, 1), negatives, tau),
          -positive / tau + std::log(static_cast<double>(negatives.size())) + mean_negative / tau};
}

SimilarityGrads bcl_similarity_grads(std::span<const double> positives, std::span<const double> negatives) {
  double sr_pos = 0.0, sr_neg = 0.0;
  for (double p : positives) sr_pos += std::exp(-p);
  for (double n : negatives) sr_neg += std::exp(n);
  const double denom = 1.0 + sr_pos * sr_neg;
  SimilarityGrads g;
  for (double p : positives) g.positive.push_back(-sr_neg * std::exp(-p) / denom);
  for (double n : negatives) g.negative.push_back(sr_pos * std::exp(n) / denom);
  return g;
}

double bcl_gradient_ratio(std::span<const double> positives, std::span<const double> negatives, std::size_t i,
                          std::size_t j) {
  const auto g = bcl_similarity_grads(positives, negatives);
  return std::abs(g.positive.at(i)) / std::abs(g.negative.at(j));
}

Tensor similarities(Tape& tape, const Tensor& anchor, const Tensor& rows) { return ts::matmul(tape, rows, anchor); }

namespace {

void require_finite(const Tensor& t, const char* what) {
  for (double v : t.values()) {
    if (!std::isfinite(v)) throw NumericalError(std::string(what) + ": non-finite similarity");
  }
}

// Repeats a scalar tensor into a [n, 1] column.
Tensor broadcast_column(Tape& tape, const Tensor& scalar, std::size_t n) {
  return ts::matmul(tape, Tensor::full({n, 1}, 1.0), ts::reshape(tape, scalar, {1, 1}));
}

Tensor column(Tape& tape, const Tensor& t) { return t.rank() == 2 ? t : ts::reshape(tape, t, {t.size(), 1}); }

template <typename Term>
Tensor mean_over_anchors(Tape& tape, const ContrastSamples& samples, Term term) {
  if (samples.empty()) return Tensor::scalar(0.0);
  Tensor total;
  for (const auto& item : samples.items) {
    auto pos = similarities(tape, item.embedding, item.positives);
    auto neg = similarities(tape, item.embedding, item.negatives);
    auto t = term(pos, neg);
    total = total.defined() ? ts::add(tape, total, t) : t;
  }
  return ts::scale(tape, total, 1.0 / static_cast<double>(samples.size()));
}

}  // namespace

Tensor icl_term(Tape& tape, const Tensor& positive_sims, const Tensor& negative_sims, double tau) {
  require_finite(positive_sims, "icl_loss");
  require_finite(negative_sims, "icl_loss");
  if (negative_sims.size() == 0) return Tensor::scalar(0.0);
  auto pos = column(tape, positive_sims);
  auto scaled_pos = ts::scale(tape, pos, 1.0 / tau);
  auto negative_mass = ts::sum(tape, ts::exp(tape, ts::scale(tape, negative_sims, 1.0 / tau)));
  auto denom = ts::add(tape, ts::exp(tape, scaled_pos), broadcast_column(tape, negative_mass, pos.dim(0)));
  return ts::mean(tape, ts::sub(tape, ts::log(tape, denom), scaled_pos));
}

Tensor bcl_term(Tape& tape, const Tensor& positive_sims, const Tensor& negative_sims) {
  require_finite(positive_sims, "bcl_loss");
  require_finite(negative_sims, "bcl_loss");
  auto sr_pos = ts::sum(tape, ts::exp(tape, ts::scale(tape, positive_sims, -1.0)));
  auto sr_neg = ts::sum(tape, ts::exp(tape, negative_sims));
  return ts::log(tape, ts::add_scalar(tape, ts::mul(tape, sr_pos, sr_neg), 1.0));
}

Tensor icl_loss(Tape& tape, const ContrastSamples& samples, double tau) {
  return mean_over_anchors(tape, samples, [&](const Tensor& p, const Tensor& n) { return icl_term(tape, p, n, tau); });
}

Tensor bcl_loss(Tape& tape, const ContrastSamples& samples) {
  return mean_over_anchors(tape, samples, [&](const Tensor& p, const Tensor& n) { return bcl_term(tape, p, n); });
}

Tensor soft_dice_loss(Tape& tape, const Tensor& probs, const LabelMap& labels, std::span<const std::uint8_t> mask) {
  const auto classes = probs.dim(0);
  const auto plane = probs.size() / classes;
  if (labels.size() != plane) {
    throw ShapeError("soft_dice_loss: labels of size " + std::to_string(labels.size()) + " vs probabilities " +
                     ts::to_string(probs.shape()));
  }
  if (!mask.empty() && mask.size() != plane) throw ShapeError("soft_dice_loss: mask size mismatch");

  std::vector<double> target(classes * plane, 0.0);
  std::vector<double> weights(classes * plane, 0.0);
  std::vector<double> target_sum(classes, 0.0);
  for (std::size_t i = 0; i < plane; ++i) {
    if (!mask.empty() && !mask[i]) continue;
    for (std::size_t c = 0; c < classes; ++c) weights[c * plane + i] = 1.0;
    const auto y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw DataError("soft_dice_loss: label " + std::to_string(y) + " at pixel " + std::to_string(i) + " out of range");
    }
    target[static_cast<std::size_t>(y) * plane + i] = 1.0;
    target_sum[static_cast<std::size_t>(y)] += 1.0;
  }
  const Tensor target_t(probs.shape(), std::move(target));
  Tensor weighted = mask.empty() ? probs : ts::mul(tape, probs, Tensor(probs.shape(), std::move(weights)));

  auto intersection = ts::sum_positions(tape, ts::mul(tape, weighted, target_t));
  auto mass = ts::sum_positions(tape, weighted);
  for (auto& v : target_sum) v += kDiceSmoothing;
  auto numerator = ts::add_scalar(tape, ts::scale(tape, intersection, 2.0), kDiceSmoothing);
  auto denominator = ts::add(tape, mass, Tensor({classes}, std::move(target_sum)));
  auto dice = ts::mean(tape, ts::div(tape, numerator, denominator));
  return ts::add_scalar(tape, ts::scale(tape, dice, -1.0), 1.0);
}

Tensor cross_entropy(Tape& tape, const Tensor& probs, const LabelMap& labels) {
  const auto classes = probs.dim(0);
  const auto plane = probs.size() / classes;
  if (labels.size() != plane) throw ShapeError("cross_entropy: label map does not match probabilities");
  std::vector<std::size_t> picks(plane);
  for (std::size_t i = 0; i < plane; ++i) {
    const auto y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw DataError("cross_entropy: label " + std::to_string(y) + " at pixel " + std::to_string(i) + " out of range");
    }
    picks[i] = static_cast<std::size_t>(y) * plane + i;
  }
  return ts::scale(tape, ts::mean(tape, ts::log(tape, ts::take(tape, probs, picks))), -1.0);
}

Tensor supervised_loss(Tape& tape, const Tensor& probs, const LabelMap& labels) {
  auto ce = cross_entropy(tape, probs, labels);
  auto dice = soft_dice_loss(tape, probs, labels);
  return ts::scale(tape, ts::add(tape, ce, dice), 0.5);
}

Tensor unsupervised_loss(Tape& tape, const Tensor& student_probs, const Tensor& teacher_probs, double gamma_t) {
  if (student_probs.shape() != teacher_probs.shape()) {
    throw ShapeError("unsupervised_loss: student " + ts::to_string(student_probs.shape()) + " vs teacher " +
                     ts::to_string(teacher_probs.shape()));
  }
  const auto classes = teacher_probs.dim(0);
  const auto plane = teacher_probs.size() / classes;
  auto tv = teacher_probs.values();
  LabelMap pseudo(1, plane, 0);
  std::vector<std::uint8_t> mask(plane, 0);
  bool any = false;
  for (std::size_t i = 0; i < plane; ++i) {
    std::int32_t best = 0;
    double best_p = tv[i];
    for (std::size_t c = 1; c < classes; ++c) {
      if (tv[c * plane + i] > best_p) {
        best_p = tv[c * plane + i];
        best = static_cast<std::int32_t>(c);
      }
    }
    pseudo[i] = best;
    mask[i] = best_p >= gamma_t;
    any = any || mask[i];
  }
  if (!any) return Tensor::scalar(0.0);
  return soft_dice_loss(tape, student_probs, pseudo, mask);
}

Tensor combine(Tape& tape, const LossTerms& terms, const LossConfig& config, double alpha) {
  auto contrast = ts::add(tape, ts::scale(tape, terms.icl, 1.0 - alpha), ts::scale(tape, terms.bcl, alpha));
  auto total = ts::add(tape, terms.sup, ts::scale(tape, terms.unsup, config.lambda_u));
  return ts::add(tape, total, ts::scale(tape, contrast, config.lambda_c));
}

Tensor unified_loss(Tape& tape, const LossTerms& terms, const LossConfig& config, std::size_t step) {
  return combine(tape, terms, config, alpha_at(config, step));
}

}  // namespace spcl::losses
