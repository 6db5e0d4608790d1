#include "spcl/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "json.hpp"
#include "spcl/checkpoint.hpp"
#include "spcl/error.hpp"
#include "spcl/losses.hpp"
#include "spcl/ops.hpp"

namespace spcl::trainer {

using nlohmann::json;
using tensor::Tape;
using tensor::Tensor;

namespace {

// Independent random streams per (run seed, purpose, step).
enum Stream : std::uint64_t { kBatchStream = 1, kAnchorStream = 2, kDrawStream = 3, kNoiseStream = 4 };

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Tensor perturbed(const Tensor& image, double sd, std::mt19937_64& rng) {
  if (sd == 0.0) return image;
  std::normal_distribution<double> noise(0.0, sd);
  std::vector<double> v(image.values().begin(), image.values().end());
  for (auto& x : v) x += noise(rng);
  return Tensor(image.shape(), std::move(v));
}

std::uint64_t stream_seed(std::uint64_t seed, Stream stream, std::uint64_t step = 0) {
  return splitmix(splitmix(splitmix(seed) ^ stream) ^ step);
}

// Cycles through shuffled epochs of [0, n).
class IndexCycler {
 public:
  IndexCycler(std::size_t n, std::mt19937_64& rng) : order_(n), rng_(rng) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    reshuffle();
  }

  std::vector<std::size_t> next(std::size_t k) {
    std::vector<std::size_t> out;
    out.reserve(k);
    while (out.size() < k) {
      if (pos_ == order_.size()) reshuffle();
      out.push_back(order_[pos_++]);
    }
    return out;
  }

 private:
  void reshuffle() {
    std::shuffle(order_.begin(), order_.end(), rng_);
    pos_ = 0;
  }

  std::vector<std::size_t> order_;
  std::mt19937_64& rng_;
  std::size_t pos_ = 0;
};

// Per-step activation buffers are served from the heap rather than fresh mmaps.
void keep_large_buffers_on_heap() {
#if defined(__GLIBC__)
  static const bool done = [] {
    mallopt(M_MMAP_THRESHOLD, 256 << 20);
    mallopt(M_TRIM_THRESHOLD, 512 << 20);
    return true;
  }();
  (void)done;
#endif
}

Tensor mean_of(Tape& tape, const std::vector<Tensor>& terms) {
  if (terms.empty()) return Tensor::scalar(0.0);
  Tensor total = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) total = tensor::add(tape, total, terms[i]);
  return tensor::scale(tape, total, 1.0 / static_cast<double>(terms.size()));
}

void check_dataset(const TrainConfig& cfg, const data::Dataset& ds) {
  if (ds.labeled.empty()) throw DataError("dataset has no labeled training images");
  if (ds.test.empty()) throw DataError("dataset has no test images");
  if ((cfg.use_unsup || cfg.contrastive()) && ds.unlabeled.empty()) {
    throw DataError("dataset has no unlabeled images but unlabeled losses are enabled");
  }
  const auto check = [&](const data::Sample& s, bool need_label) {
    if (s.num_classes != cfg.num_classes) {
      throw DataError("sample '" + s.id + "' declares " + std::to_string(s.num_classes) +
                      " classes, config expects " + std::to_string(cfg.num_classes));
    }
    if (s.image.rank() != 3 || s.image.dim(0) != 1 || s.height() % 4 != 0 || s.width() % 4 != 0) {
      throw DataError("sample '" + s.id + "' has image shape " + tensor::to_string(s.image.shape()) +
                      ", expected [1, H, W] with H and W multiples of 4");
    }
    if (need_label && !s.label) throw DataError("sample '" + s.id + "' has no label");
  };
  for (const auto& s : ds.labeled) check(s, true);
  for (const auto& s : ds.unlabeled) check(s, false);
  for (const auto& s : ds.test) check(s, true);
}

double finite_or_nan(const Tensor& t) { return t.defined() ? t.item() : 0.0; }

bool all_finite(const LossBreakdown& l) {
  return std::isfinite(l.total) && std::isfinite(l.sup) && std::isfinite(l.unsup) && std::isfinite(l.icl) &&
         std::isfinite(l.bcl);
}

json loss_json(const LossBreakdown& l) {
  return {{"total", l.total}, {"sup", l.sup}, {"unsup", l.unsup}, {"icl", l.icl}, {"bcl", l.bcl}, {"alpha", l.alpha}};
}

void dump_batch(const std::filesystem::path& out_dir, std::size_t step, const std::vector<const data::Sample*>& batch,
                const LossBreakdown& loss, const std::string& reason) {
  if (out_dir.empty()) return;
  const auto dir = out_dir / "diagnostic";
  std::filesystem::create_directories(dir);
  json ids = json::array();
  for (const auto* s : batch) {
    data::save_sample(dir / (s->id + ".seg1"), *s);
    ids.push_back(s->id);
  }
  const json doc = {{"step", step}, {"reason", reason}, {"batch", ids}, {"loss", loss_json(loss)}};
  std::ofstream(dir / "diagnostic.json") << doc.dump(2) << "\n";
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << text;
}

json seg_json(const metrics::SegMetrics& m) {
  json per_class = json::array();
  for (std::size_t c = 0; c < m.per_class.size(); ++c) {
    const auto& pc = m.per_class[c];
    per_class.push_back({{"class", c},
                         {"dice", pc.dice},
                         {"jaccard", pc.jaccard},
                         {"hd95", pc.hd95_defined ? json(pc.hd95) : json(nullptr)},
                         {"hd95_images", pc.hd95_count}});
  }
  return {{"dice", m.dice},
          {"jaccard", m.jaccard},
          {"hd95", m.hd95_defined ? json(m.hd95) : json(nullptr)},
          {"images", m.images},
          {"per_class", per_class}};
}

}  // namespace

RunReport train(const TrainConfig& cfg, const data::Dataset& ds, const TrainOptions& options) {
  cfg.validate();
  check_dataset(cfg, ds);
  keep_large_buffers_on_heap();
  const auto start = std::chrono::steady_clock::now();

  const auto C = cfg.num_classes;
  const auto ncfg = cfg.net_config();
  const auto lcfg = cfg.loss_config();
  const auto anchor_opts = cfg.anchor_options();
  const bool need_unlabeled = cfg.use_unsup || cfg.contrastive();

  auto student = net::init_params(ncfg, cfg.seed);
  auto teacher = student.clone(false);
  std::vector<std::vector<double>> velocity;
  for (const auto& [name, p] : student.entries()) velocity.emplace_back(p.size(), 0.0);

  sampling::MemoryBank bank(2 * C, cfg.embed_dim, cfg.q_cap);
  const subdivision::UnconcernedRelation relation(C, !cfg.include_background_anchors, cfg.relation);

  // Ground-truth subdivision and one-hot references never change.
  std::vector<subdivision::SubclassMap> labeled_maps;
  std::vector<Tensor> labeled_onehot;
  for (const auto& s : ds.labeled) {
    labeled_maps.push_back(subdivision::extract_boundaries(*s.label, C, cfg.boundary_thickness));
    labeled_onehot.push_back(sampling::one_hot(*s.label, C));
  }

  std::mt19937_64 batch_rng(stream_seed(cfg.seed, kBatchStream));
  IndexCycler labeled_cycle(ds.labeled.size(), batch_rng);
  IndexCycler unlabeled_cycle(std::max<std::size_t>(ds.unlabeled.size(), 1), batch_rng);

  RunReport report;
  report.config = cfg;
  report.steps.reserve(cfg.steps);

  for (std::size_t step = 0; step < cfg.steps; ++step) {
    Tape tape;
    student.zero_grad();
    const auto lab_idx = labeled_cycle.next(cfg.labeled_per_batch);
    const auto unl_idx = need_unlabeled ? unlabeled_cycle.next(cfg.unlabeled_per_batch) : std::vector<std::size_t>{};

    std::vector<const data::Sample*> batch;
    for (auto i : lab_idx) batch.push_back(&ds.labeled[i]);
    for (auto i : unl_idx) batch.push_back(&ds.unlabeled[i]);

    LossBreakdown loss;
    StepStats stats;
    stats.step = step;
    Tensor total;
    try {
      std::vector<net::NetworkOutput> sl, su, tu;
      for (auto i : lab_idx) sl.push_back(net::forward(tape, student, ds.labeled[i].image, cfg.contrastive()));
      std::mt19937_64 noise_rng(stream_seed(cfg.seed, kNoiseStream, step));
      for (auto i : unl_idx) {
        const auto& clean = ds.unlabeled[i].image;
        su.push_back(net::forward(tape, student, perturbed(clean, cfg.student_noise, noise_rng), cfg.contrastive()));
        tu.push_back(net::forward(tape, teacher, ds.unlabeled[i].image, false));
      }

      std::vector<Tensor> sup_terms;
      for (std::size_t k = 0; k < lab_idx.size(); ++k) {
        sup_terms.push_back(losses::supervised_loss(tape, sl[k].probabilities, *ds.labeled[lab_idx[k]].label));
      }
      losses::LossTerms terms;
      terms.sup = mean_of(tape, sup_terms);
      terms.unsup = Tensor::scalar(0.0);
      terms.icl = Tensor::scalar(0.0);
      terms.bcl = Tensor::scalar(0.0);

      if (cfg.use_unsup) {
        std::vector<Tensor> unsup_terms;
        for (std::size_t k = 0; k < unl_idx.size(); ++k) {
          unsup_terms.push_back(
              losses::unsupervised_loss(tape, su[k].probabilities, tu[k].probabilities, cfg.gamma_t));
        }
        terms.unsup = mean_of(tape, unsup_terms);
      }

      sampling::AnchorSet anchors;
      sampling::ContrastSamples samples;
      std::vector<subdivision::SubclassMap> pseudo_maps;
      std::vector<sampling::AnchorSource> sources;
      if (cfg.contrastive()) {
        pseudo_maps.reserve(unl_idx.size());
        for (const auto& t : tu) {
          pseudo_maps.push_back(
              subdivision::extract_boundaries(net::pseudo_label(t).labels, C, cfg.boundary_thickness));
        }
        for (std::size_t k = 0; k < lab_idx.size(); ++k) {
          sources.push_back(
              {sl[k].probabilities, labeled_onehot[lab_idx[k]], sl[k].embeddings, &labeled_maps[lab_idx[k]]});
        }
        for (std::size_t k = 0; k < unl_idx.size(); ++k) {
          sources.push_back({su[k].probabilities, tu[k].probabilities, su[k].embeddings, &pseudo_maps[k]});
        }
        for (const auto& src : sources) {
          const auto centroids =
              sampling::compute_centroids(src.embeddings, *src.subclasses, src.reference_probs, cfg.gamma_t);
          sampling::bank_push(bank, centroids);
        }
        anchors = sampling::select_anchors(tape, sources, anchor_opts, stream_seed(cfg.seed, kAnchorStream, step));
        samples = sampling::draw_samples(anchors, bank, relation, cfg.k_pos, cfg.k_neg,
                                         stream_seed(cfg.seed, kDrawStream, step));
        const auto inner = samples.restricted_to(subdivision::Region::Inner);
        const auto boundary = samples.restricted_to(subdivision::Region::Boundary);
        stats.anchors = anchors.size();
        stats.inner_items = inner.size();
        stats.boundary_items = boundary.size();
        stats.dropped = samples.dropped;
        if (cfg.use_icl) terms.icl = losses::icl_loss(tape, inner, cfg.tau);
        if (cfg.use_bcl) {
          terms.bcl = cfg.boundary_loss == BoundaryLoss::Bcl ? losses::bcl_loss(tape, boundary)
                                                             : losses::icl_loss(tape, boundary, cfg.tau);
        }
      }

      const double alpha = cfg.use_icl && cfg.use_bcl ? losses::alpha_at(lcfg, step) : (cfg.use_bcl ? 1.0 : 0.0);
      total = losses::combine(tape, terms, lcfg, alpha);
      loss = {total.item(), finite_or_nan(terms.sup), finite_or_nan(terms.unsup), finite_or_nan(terms.icl),
              finite_or_nan(terms.bcl), alpha};
      if (!all_finite(loss)) {
        throw NumericalError("non-finite loss at step " + std::to_string(step) + ": total=" + fmt(loss.total) +
                             " sup=" + fmt(loss.sup) + " unsup=" + fmt(loss.unsup) + " icl=" + fmt(loss.icl) +
                             " bcl=" + fmt(loss.bcl));
      }
      if (options.observer) {
        options.observer(StepTrace{step, sources, anchors, samples, bank, relation, cfg.gamma_s, cfg.gamma_t, loss});
      }
    } catch (const NumericalError& e) {
      dump_batch(options.out_dir, step, batch, loss, e.what());
      throw;
    }

    tape.backward(total);
    std::size_t k = 0;
    for (const auto& [name, p] : student.entries()) {
      auto& v = velocity[k++];
      auto w = p.mutable_values();
      if (!p.has_grad()) {
        for (std::size_t i = 0; i < w.size(); ++i) {
          v[i] *= cfg.momentum;
          w[i] -= cfg.lr * v[i];
        }
        continue;
      }
      const auto g = p.grad();
      for (std::size_t i = 0; i < w.size(); ++i) {
        v[i] = cfg.momentum * v[i] + g[i];
        w[i] -= cfg.lr * v[i];
      }
    }
    for (const auto& [name, p] : student.entries()) {
      for (double x : p.values()) {
        if (!std::isfinite(x)) {
          dump_batch(options.out_dir, step, batch, loss, "non-finite parameter in " + name);
          throw NumericalError("non-finite parameter in '" + name + "' after step " + std::to_string(step));
        }
      }
    }
    const double beta =
        cfg.ema_warmup ? std::min(cfg.ema_beta, 1.0 - 1.0 / static_cast<double>(step + 1)) : cfg.ema_beta;
    net::ema_update(teacher, student, beta);

    stats.loss = loss;
    report.steps.push_back(stats);

    const std::size_t done = step + 1;
    if (done % cfg.eval_every == 0 || done == cfg.steps) {
      const auto m = evaluate(student, ds.test, C);
      report.rows.push_back({done, m.dice, m.jaccard, m.hd95, m.hd95_defined, loss});
      report.final_metrics = m;
      if (options.verbose) {
        std::fprintf(stderr, "step %5zu  loss %.4f (sup %.4f unsup %.4f icl %.4f bcl %.4f)  dice %.4f  hd95 %.3f\n",
                     done, loss.total, loss.sup, loss.unsup, loss.icl, loss.bcl, m.dice, m.hd95);
      }
    }
  }

  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!options.out_dir.empty()) {
    std::filesystem::create_directories(options.out_dir);
    net::save_checkpoint(options.out_dir / "checkpoint.spck", student);
    write_report_json(report, options.out_dir / "report.json");
    write_metrics_csv(report, options.out_dir / "metrics.csv");
    write_step_csv(report, options.out_dir / "steps.csv");
  }
  if (options.final_params) *options.final_params = student;
  return report;
}

RunReport train(const TrainConfig& config, const std::filesystem::path& data_dir, const TrainOptions& options) {
  return train(config, data::load_dataset(data_dir), options);
}

metrics::SegMetrics evaluate(const net::ModelParams& params, const std::vector<data::Sample>& test,
                             std::size_t num_classes) {
  metrics::MetricAccumulator acc(num_classes);
  for (const auto& s : test) {
    if (!s.label) throw DataError("test sample '" + s.id + "' has no label");
    Tape tape;
    const auto out = net::forward(tape, params, s.image, false);
    if (out.probabilities.dim(0) != num_classes) {
      throw DataError("model predicts " + std::to_string(out.probabilities.dim(0)) + " classes, test data has " +
                      std::to_string(num_classes));
    }
    acc.add(net::pseudo_label(out).labels, *s.label);
  }
  return acc.result();
}

metrics::SegMetrics evaluate(const std::filesystem::path& checkpoint, const std::filesystem::path& test_dir) {
  if (!std::filesystem::exists(checkpoint)) throw DataError("checkpoint '" + checkpoint.string() + "' not found");
  const auto params = net::load_checkpoint(checkpoint);
  const auto test = data::load_dir(test_dir);
  if (test.empty()) throw DataError("no .seg1 samples in '" + test_dir.string() + "'");
  return evaluate(params, test, test.front().num_classes);
}

std::vector<SweepRow> sweep(const TrainConfig& config, const data::Dataset& dataset) {
  config.validate();
  std::vector<std::pair<double, double>> grid;
  for (double gs : config.sweep_gamma_s) {
    for (double gt : config.sweep_gamma_t) grid.emplace_back(gs, gt);
  }
  const std::pair<double, double> home{config.gamma_s, config.gamma_t};
  if (std::find(grid.begin(), grid.end(), home) == grid.end()) grid.push_back(home);

  std::vector<SweepRow> rows;
  for (const auto& [gs, gt] : grid) {
    auto c = config;
    c.gamma_s = gs;
    c.gamma_t = gt;
    rows.push_back({gs, gt, train(c, dataset).final_metrics});
  }
  return rows;
}

std::vector<TrainConfig> ablation_configs(const TrainConfig& base, const std::string& suite,
                                          std::vector<std::string>* names) {
  std::vector<TrainConfig> out;
  std::vector<std::string> labels;
  auto add = [&](std::string name, auto edit) {
    auto c = base;
    edit(c);
    out.push_back(c);
    labels.push_back(std::move(name));
  };
  auto switches = [](bool unsup, bool icl, bool bcl) {
    return [=](TrainConfig& c) {
      c.use_unsup = unsup;
      c.use_icl = icl;
      c.use_bcl = bcl;
    };
  };
  if (suite == "components") {
    add("sup", switches(false, false, false));
    add("sup+unsup", switches(true, false, false));
    add("sup+unsup+icl", switches(true, true, false));
    add("sup+unsup+bcl", switches(true, false, true));
    add("spcl", switches(true, true, true));
  } else if (suite == "relation") {
    for (auto mode : {subdivision::RelationMode::Negative, subdivision::RelationMode::Positive,
                      subdivision::RelationMode::Unconcerned}) {
      add(std::string(subdivision::to_string(mode)), [mode](TrainConfig& c) {
        c.use_unsup = c.use_icl = c.use_bcl = true;
        c.relation = mode;
      });
    }
  } else if (suite == "bcl_vs_infonce") {
    for (auto loss : {BoundaryLoss::InfoNce, BoundaryLoss::Bcl}) {
      add(std::string(to_string(loss)), [loss](TrainConfig& c) {
        c.use_unsup = c.use_icl = c.use_bcl = true;
        c.boundary_loss = loss;
      });
    }
  } else {
    throw ConfigError("unknown ablation suite '" + suite + "' (expected components, relation or bcl_vs_infonce)");
  }
  if (names) *names = std::move(labels);
  return out;
}

std::vector<AblationRow> ablate(const TrainConfig& config, const data::Dataset& dataset, const std::string& suite,
                                bool verbose) {
  config.validate();
  std::vector<std::string> names;
  const auto configs = ablation_configs(config, suite, &names);
  std::vector<AblationRow> rows;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    AblationRow row;
    row.name = names[i];
    row.config = configs[i];
    row.seeds = config.seeds;
    std::size_t hd_runs = 0;
    for (auto seed : config.seeds) {
      auto c = configs[i];
      c.seed = seed;
      const auto m = train(c, dataset).final_metrics;
      row.dice_per_seed.push_back(m.dice);
      row.dice += m.dice;
      row.jaccard += m.jaccard;
      if (m.hd95_defined) {
        row.hd95 += m.hd95;
        ++hd_runs;
      }
      if (verbose) std::fprintf(stderr, "%s seed %llu: dice %.4f\n", row.name.c_str(), (unsigned long long)seed, m.dice);
    }
    const double n = static_cast<double>(config.seeds.size());
    row.dice /= n;
    row.jaccard /= n;
    row.hd95 = hd_runs ? row.hd95 / static_cast<double>(hd_runs) : 0.0;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string metrics_json(const metrics::SegMetrics& m, int indent) { return seg_json(m).dump(indent); }

void write_report_json(const RunReport& report, const std::filesystem::path& path) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"step", r.step},
                    {"dice", r.dice},
                    {"jaccard", r.jaccard},
                    {"hd95", r.hd95_defined ? json(r.hd95) : json(nullptr)},
                    {"loss", loss_json(r.loss)}});
  }
  const json doc = {{"config", json::parse(config_to_json(report.config))},
                    {"rows", rows},
                    {"final", seg_json(report.final_metrics)},
                    {"steps", report.steps.size()},
                    {"wall_seconds", report.wall_seconds}};
  write_text(path, doc.dump(2) + "\n");
}

void write_metrics_csv(const RunReport& report, const std::filesystem::path& path) {
  std::string out = "step,dice,jaccard,hd95,loss_total,loss_sup,loss_unsup,loss_icl,loss_bcl,alpha\n";
  for (const auto& r : report.rows) {
    out += std::to_string(r.step) + "," + fmt(r.dice) + "," + fmt(r.jaccard) + "," +
           (r.hd95_defined ? fmt(r.hd95) : std::string()) + "," + fmt(r.loss.total) + "," + fmt(r.loss.sup) + "," +
           fmt(r.loss.unsup) + "," + fmt(r.loss.icl) + "," + fmt(r.loss.bcl) + "," + fmt(r.loss.alpha) + "\n";
  }
  write_text(path, out);
}

void write_step_csv(const RunReport& report, const std::filesystem::path& path) {
  std::string out = "step,loss_total,loss_sup,loss_unsup,loss_icl,loss_bcl,alpha,anchors,inner,boundary,dropped\n";
  for (const auto& s : report.steps) {
    out += std::to_string(s.step) + "," + fmt(s.loss.total) + "," + fmt(s.loss.sup) + "," + fmt(s.loss.unsup) + "," +
           fmt(s.loss.icl) + "," + fmt(s.loss.bcl) + "," + fmt(s.loss.alpha) + "," + std::to_string(s.anchors) + "," +
           std::to_string(s.inner_items) + "," + std::to_string(s.boundary_items) + "," + std::to_string(s.dropped) +
           "\n";
  }
  write_text(path, out);
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path) {
  std::string out = "gamma_s,gamma_t,dice,jaccard,hd95\n";
  for (const auto& r : rows) {
    out += fmt(r.gamma_s) + "," + fmt(r.gamma_t) + "," + fmt(r.metrics.dice) + "," + fmt(r.metrics.jaccard) + "," +
           (r.metrics.hd95_defined ? fmt(r.metrics.hd95) : std::string()) + "\n";
  }
  write_text(path, out);
}

void write_ablation_csv(const std::vector<AblationRow>& rows, const std::filesystem::path& path) {
  std::string out = "name,use_unsup,use_icl,use_bcl,relation,boundary_loss,seeds,dice,jaccard,hd95,dice_per_seed\n";
  for (const auto& r : rows) {
    std::string seeds, per_seed;
    for (std::size_t i = 0; i < r.seeds.size(); ++i) {
      seeds += (i ? ";" : "") + std::to_string(r.seeds[i]);
      per_seed += (i ? ";" : "") + fmt(r.dice_per_seed[i]);
    }
    out += r.name + "," + (r.config.use_unsup ? "1" : "0") + "," + (r.config.use_icl ? "1" : "0") + "," +
           (r.config.use_bcl ? "1" : "0") + "," + std::string(subdivision::to_string(r.config.relation)) + "," +
           std::string(to_string(r.config.boundary_loss)) + "," + seeds + "," + fmt(r.dice) + "," + fmt(r.jaccard) +
           "," + fmt(r.hd95) + "," + per_seed + "\n";
  }
  write_text(path, out);
}

}  // namespace spcl::trainer
