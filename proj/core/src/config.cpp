#include "spcl/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "json.hpp"
#include "spcl/error.hpp"

namespace spcl {

using nlohmann::json;

namespace {

struct Field {
  const char* name;
  std::function<json(const TrainConfig&)> get;
  std::function<void(TrainConfig&, const json&)> set;
};

template <typename T>
T as(const json& value, const char* name) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!value.is_boolean()) throw ConfigError("");
      return value.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (value.is_number_integer()) {
        const auto v = value.get<std::int64_t>();
        if (std::is_unsigned_v<T> && v < 0) throw ConfigError("");
        return static_cast<T>(v);
      }
      if (value.is_number_float()) {
        const double d = value.get<double>();
        if (d != std::floor(d) || (std::is_unsigned_v<T> && d < 0)) throw ConfigError("");
        return static_cast<T>(d);
      }
      throw ConfigError("");
    } else {
      return value.get<T>();
    }
  } catch (const std::exception&) {
    throw ConfigError(std::string("config key '") + name + "': invalid value " + value.dump());
  }
}

template <typename T>
Field plain(const char* name, T TrainConfig::*member) {
  return {name, [member](const TrainConfig& c) { return json(c.*member); },
          [member, name](TrainConfig& c, const json& v) { c.*member = as<T>(v, name); }};
}

template <typename T>
Field list(const char* name, std::vector<T> TrainConfig::*member) {
  return {name, [member](const TrainConfig& c) { return json(c.*member); },
          [member, name](TrainConfig& c, const json& v) {
            if (!v.is_array()) throw ConfigError(std::string("config key '") + name + "': expected an array");
            std::vector<T> out;
            for (const auto& item : v) out.push_back(as<T>(item, name));
            c.*member = std::move(out);
          }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      plain("tau", &TrainConfig::tau),
      plain("lambda_u", &TrainConfig::lambda_u),
      plain("lambda_c", &TrainConfig::lambda_c),
      plain("alpha_max", &TrainConfig::alpha_max),
      plain("alpha_ramp_steps", &TrainConfig::alpha_ramp_steps),
      plain("gamma_s", &TrainConfig::gamma_s),
      plain("gamma_t", &TrainConfig::gamma_t),
      plain("lr", &TrainConfig::lr),
      plain("momentum", &TrainConfig::momentum),
      plain("steps", &TrainConfig::steps),
      plain("labeled_per_batch", &TrainConfig::labeled_per_batch),
      plain("unlabeled_per_batch", &TrainConfig::unlabeled_per_batch),
      plain("ema_beta", &TrainConfig::ema_beta),
      plain("ema_warmup", &TrainConfig::ema_warmup),
      plain("student_noise", &TrainConfig::student_noise),
      plain("seed", &TrainConfig::seed),
      plain("eval_every", &TrainConfig::eval_every),
      plain("k_anchor", &TrainConfig::k_anchor),
      plain("k_pos", &TrainConfig::k_pos),
      plain("k_neg", &TrainConfig::k_neg),
      plain("q_cap", &TrainConfig::q_cap),
      plain("boundary_thickness", &TrainConfig::boundary_thickness),
      plain("include_background_anchors", &TrainConfig::include_background_anchors),
      plain("embed_dim", &TrainConfig::embed_dim),
      plain("enc1", &TrainConfig::enc1),
      plain("enc2", &TrainConfig::enc2),
      plain("proj_hidden", &TrainConfig::proj_hidden),
      plain("use_unsup", &TrainConfig::use_unsup),
      plain("use_icl", &TrainConfig::use_icl),
      plain("use_bcl", &TrainConfig::use_bcl),
      {"relation", [](const TrainConfig& c) { return json(std::string(subdivision::to_string(c.relation))); },
       [](TrainConfig& c, const json& v) {
         if (!v.is_string()) throw ConfigError("config key 'relation': expected US, Pos or Neg");
         try {
           c.relation = subdivision::parse_relation_mode(v.get<std::string>());
         } catch (const Error& e) {
           throw ConfigError(std::string("config key 'relation': ") + e.what());
         }
       }},
      {"boundary_loss", [](const TrainConfig& c) { return json(std::string(to_string(c.boundary_loss))); },
       [](TrainConfig& c, const json& v) {
         if (!v.is_string()) throw ConfigError("config key 'boundary_loss': expected bcl or infonce");
         c.boundary_loss = parse_boundary_loss(v.get<std::string>());
       }},
      plain("num_classes", &TrainConfig::num_classes),
      plain("image_height", &TrainConfig::image_height),
      plain("image_width", &TrainConfig::image_width),
      plain("train_images", &TrainConfig::train_images),
      plain("labeled_fraction", &TrainConfig::labeled_fraction),
      plain("test_images", &TrainConfig::test_images),
      plain("noise_level", &TrainConfig::noise_level),
      plain("data_seed", &TrainConfig::data_seed),
      list("seeds", &TrainConfig::seeds),
      list("sweep_gamma_s", &TrainConfig::sweep_gamma_s),
      list("sweep_gamma_t", &TrainConfig::sweep_gamma_t),
  };
  return table;
}

const Field& field(std::string_view name) {
  for (const auto& f : fields()) {
    if (name == f.name) return f;
  }
  throw ConfigError("unknown config key '" + std::string(name) + "'");
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

bool in_unit_interval(double v) { return v > 0.0 && v <= 1.0; }

}  // namespace

std::string_view to_string(BoundaryLoss loss) { return loss == BoundaryLoss::Bcl ? "bcl" : "infonce"; }

BoundaryLoss parse_boundary_loss(std::string_view text) {
  if (text == "bcl") return BoundaryLoss::Bcl;
  if (text == "infonce") return BoundaryLoss::InfoNce;
  throw ConfigError("boundary_loss must be 'bcl' or 'infonce', got '" + std::string(text) + "'");
}

void TrainConfig::validate() const {
  loss_config().validate();
  require(in_unit_interval(gamma_s), "gamma_s must lie in (0, 1]");
  require(in_unit_interval(gamma_t), "gamma_t must lie in (0, 1]");
  require(lr > 0.0 && std::isfinite(lr), "lr must be a positive finite number");
  require(momentum >= 0.0 && momentum < 1.0, "momentum must lie in [0, 1)");
  require(steps > 0, "steps must be > 0");
  require(labeled_per_batch > 0, "labeled_per_batch must be > 0");
  require(!use_unsup && !contrastive() ? true : unlabeled_per_batch > 0,
          "unlabeled_per_batch must be > 0 when unlabeled losses are enabled");
  require(ema_beta >= 0.0 && ema_beta <= 1.0, "ema_beta must lie in [0, 1]");
  require(eval_every > 0, "eval_every must be > 0");
  require(k_anchor > 0 && k_pos > 0 && k_neg > 0, "k_anchor, k_pos and k_neg must be > 0");
  require(q_cap > 0, "q_cap must be > 0");
  require(boundary_thickness > 0, "boundary_thickness must be > 0");
  require(embed_dim > 0 && enc1 > 0 && enc2 > 0 && proj_hidden > 0, "network widths must be > 0");
  require(num_classes >= 3 && num_classes <= 255, "num_classes must lie in [3, 255]");
  require(image_height % 4 == 0 && image_width % 4 == 0 && image_height > 0 && image_width > 0,
          "image_height and image_width must be positive multiples of 4");
  require(noise_level >= 0.0, "noise_level must be >= 0");
  require(student_noise >= 0.0, "student_noise must be >= 0");
  require(!seeds.empty(), "seeds must not be empty");
  require(!sweep_gamma_s.empty() && !sweep_gamma_t.empty(), "sweep grids must not be empty");
  for (double g : sweep_gamma_s) require(in_unit_interval(g), "sweep_gamma_s values must lie in (0, 1]");
  for (double g : sweep_gamma_t) require(in_unit_interval(g), "sweep_gamma_t values must lie in (0, 1]");
  split_spec().validate();
}

std::size_t TrainConfig::resolved_alpha_ramp() const {
  if (alpha_ramp_steps >= 0) return static_cast<std::size_t>(alpha_ramp_steps);
  return static_cast<std::size_t>(std::llround(0.4 * static_cast<double>(steps)));
}

losses::LossConfig TrainConfig::loss_config() const {
  losses::LossConfig c;
  c.tau = tau;
  c.lambda_u = lambda_u;
  c.lambda_c = lambda_c;
  c.alpha_max = alpha_max;
  c.alpha_ramp_steps = resolved_alpha_ramp();
  c.gamma_t = gamma_t;
  return c;
}

net::NetConfig TrainConfig::net_config() const {
  net::NetConfig c;
  c.num_classes = num_classes;
  c.embed_dim = embed_dim;
  c.enc1 = enc1;
  c.enc2 = enc2;
  c.proj_hidden = proj_hidden;
  return c;
}

sampling::AnchorOptions TrainConfig::anchor_options() const {
  return {gamma_s, gamma_t, k_anchor, !include_background_anchors};
}

data::SplitSpec TrainConfig::split_spec() const {
  return {train_images, labeled_fraction, test_images, data_seed};
}

data::GeneratorOptions TrainConfig::generator_options() const {
  return {image_height, image_width, num_classes, noise_level};
}

std::string config_to_json(const TrainConfig& config, int indent) {
  json out = json::object();
  for (const auto& f : fields()) out[f.name] = f.get(config);
  return out.dump(indent);
}

TrainConfig config_from_json(std::string_view text, TrainConfig base) {
  json parsed;
  try {
    parsed = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!parsed.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : parsed.items()) field(key).set(base, value);
  return base;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

void apply_override(TrainConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override '" + std::string(assignment) + "' is not of the form key=value");
  }
  const auto key = assignment.substr(0, eq);
  const std::string raw(assignment.substr(eq + 1));
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  field(key).set(config, value);
}

void apply_overrides(TrainConfig& config, const std::vector<std::string>& assignments) {
  for (const auto& a : assignments) apply_override(config, a);
}

}  // namespace spcl
