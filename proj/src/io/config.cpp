#include "contactdyn/io/config.hpp"

#include <openssl/evp.h>

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "contactdyn/error.hpp"

namespace contactdyn::io {

namespace {

//! Reads fields of one JSON object and remembers which keys were consumed.
class Fields {
 public:
  Fields(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail(ErrorCode::kConfig, where_ + ": expected a JSON object");
  }

  template <class T>
  void get(const char* key, T& out) {
    used_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kConfig, where_ + "." + key + ": " + e.what());
    }
  }

  template <class E, class Parse>
  void get_enum(const char* key, E& out, Parse parse) {
    std::string s;
    get(key, s);
    if (!s.empty()) out = parse(s);
  }

  const Json* sub(const char* key) {
    used_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) fail(ErrorCode::kConfig, where_ + ": unknown key '" + k + "'");
    }
  }

 private:
  const Json& j_;
  std::string where_;
  std::set<std::string> used_;
};

std::string rule_name(tactile::ContactRule r) { return r == tactile::ContactRule::kL1Sum ? "l1-sum" : "magnitude"; }

tactile::ContactRule rule_from(const std::string& s) {
  if (s == "l1-sum") return tactile::ContactRule::kL1Sum;
  if (s == "magnitude") return tactile::ContactRule::kMagnitude;
  fail(ErrorCode::kConfig, "unknown contact rule '" + s + "'");
}

void merge_tactile(tactile::TactileConfig& c, const Json& j) {
  Fields f(j, "tactile");
  f.get("window_s", c.window_s);
  f.get("threshold", c.threshold);
  f.get("noise_sigma", c.noise_sigma);
  f.get("bias_sigma", c.bias_sigma);
  f.get_enum("rule", c.rule, rule_from);
  f.finish();
}

void merge_policy(sim::PolicyConfig& c, const Json& j) {
  Fields f(j, "policy");
  f.get("approach_min", c.approach_min);
  f.get("approach_max", c.approach_max);
  f.get("lateral_max", c.lateral_max);
  f.get("speed_min", c.speed_min);
  f.get("speed_max", c.speed_max);
  f.get("start_max", c.start_max);
  f.get("release_min", c.release_min);
  f.get("release_max", c.release_max);
  f.get("object_offset", c.object_offset);
  f.finish();
}

void merge_data(DataConfig& c, const Json& j) {
  Fields f(j, "data");
  f.get("T", c.T);
  f.get("stride", c.stride);
  f.get("n_sim", c.n_sim);
  f.get("n_real", c.n_real);
  f.get("n_test", c.n_test);
  f.finish();
}

void merge_rollout(eval::RolloutConfig& c, const Json& j) {
  Fields f(j, "rollout");
  f.get("total_horizon", c.total_horizon);
  f.get("h_apply", c.h_apply);
  f.get_enum("feedback", c.feedback, eval::feedback_from_string);
  f.get("seed", c.seed);
  f.finish();
}

void merge_metrics(eval::MetricsConfig& c, const Json& j) {
  Fields f(j, "metrics");
  f.get("d_max", c.d_max);
  f.get("success_threshold", c.success_threshold);
  f.finish();
}

}  // namespace

void RunConfig::validate() const {
  if (data.T < model.K + model.H + 1) fail(ErrorCode::kConfig, "data.T must be >= K + H + 1");
  if (data.stride < 1 || data.n_sim < 0 || data.n_real < 0 || data.n_test < 0) {
    fail(ErrorCode::kConfig, "data: stride >= 1 and non-negative counts required");
  }
  if (sim.domain != sim::Domain::kSim || real.domain != sim::Domain::kRealTwin) {
    fail(ErrorCode::kConfig, "env: 'sim' and 'real' sections must keep their domains");
  }
  sim.validate();
  real.validate();
  if (sim.action_dim() != model.action_dim || real.action_dim() != model.action_dim) {
    fail(ErrorCode::kConfig, "model.action_dim must equal 2 x env fingers");
  }
  model.validate();
  pretrain.validate();
  finetune.validate();
  if (finetune.learning_rate >= pretrain.learning_rate) {
    fail(ErrorCode::kConfig, "finetune learning rate must be below the pretrain learning rate");
  }
  rollout.validate(model.H);
  metrics.validate();
}

Json to_json(const sim::EnvConfig& c) {
  return Json{{"domain", sim::to_string(c.domain)},
              {"dt", c.dt},
              {"substeps", c.substeps},
              {"half_x", c.half_x},
              {"half_y", c.half_y},
              {"half_z", c.half_z},
              {"randomize_extents", c.randomize_extents},
              {"mass", c.mass},
              {"mu", c.mu},
              {"mu_finger", c.mu_finger},
              {"k_n", c.k_n},
              {"damping", c.damping},
              {"tangential_gain", c.tangential_gain},
              {"finger_radius", c.finger_radius},
              {"fingers", c.fingers},
              {"sigma_a", c.sigma_a},
              {"sigma_s_pos", c.sigma_s_pos},
              {"sigma_s_rot", c.sigma_s_rot},
              {"latency", c.latency},
              {"label_mode", sim::to_string(c.label_mode)},
              {"workspace", c.workspace},
              {"cloud_points", c.cloud_points},
              {"perturb", c.perturb},
              {"perturb_interval", c.perturb_interval},
              {"perturb_pos", c.perturb_pos},
              {"perturb_rot", c.perturb_rot},
              {"gravity", c.gravity},
              {"tactile",
               {{"window_s", c.tactile.window_s},
                {"threshold", c.tactile.threshold},
                {"noise_sigma", c.tactile.noise_sigma},
                {"bias_sigma", c.tactile.bias_sigma},
                {"rule", rule_name(c.tactile.rule)}}}};
}

void merge(sim::EnvConfig& c, const Json& j) {
  Fields f(j, "env");
  f.get_enum("domain", c.domain, sim::domain_from_string);
  f.get("dt", c.dt);
  f.get("substeps", c.substeps);
  f.get("half_x", c.half_x);
  f.get("half_y", c.half_y);
  f.get("half_z", c.half_z);
  f.get("randomize_extents", c.randomize_extents);
  f.get("mass", c.mass);
  f.get("mu", c.mu);
  f.get("mu_finger", c.mu_finger);
  f.get("k_n", c.k_n);
  f.get("damping", c.damping);
  f.get("tangential_gain", c.tangential_gain);
  f.get("finger_radius", c.finger_radius);
  f.get("fingers", c.fingers);
  f.get("sigma_a", c.sigma_a);
  f.get("sigma_s_pos", c.sigma_s_pos);
  f.get("sigma_s_rot", c.sigma_s_rot);
  f.get("latency", c.latency);
  f.get_enum("label_mode", c.label_mode, sim::label_mode_from_string);
  f.get("workspace", c.workspace);
  f.get("cloud_points", c.cloud_points);
  f.get("perturb", c.perturb);
  f.get("perturb_interval", c.perturb_interval);
  f.get("perturb_pos", c.perturb_pos);
  f.get("perturb_rot", c.perturb_rot);
  f.get("gravity", c.gravity);
  if (const Json* t = f.sub("tactile")) merge_tactile(c.tactile, *t);
  f.finish();
}

Json to_json(const sim::PolicyConfig& c) {
  return Json{{"approach_min", c.approach_min}, {"approach_max", c.approach_max}, {"lateral_max", c.lateral_max},
              {"speed_min", c.speed_min},       {"speed_max", c.speed_max},       {"start_max", c.start_max},
              {"release_min", c.release_min},   {"release_max", c.release_max},   {"object_offset", c.object_offset}};
}

Json to_json(const model::ModelConfig& c) {
  return Json{{"kind", model::to_string(c.kind)},
              {"K", c.K},
              {"H", c.H},
              {"action_dim", c.action_dim},
              {"latent", c.latent},
              {"contact_dim", c.contact_dim},
              {"point_dim", c.point_dim},
              {"point_hidden", c.point_hidden},
              {"temporal_hidden", c.temporal_hidden},
              {"contact_seq_dim", c.contact_seq_dim},
              {"cond_dim", c.cond_dim},
              {"time_embed_dim", c.time_embed_dim},
              {"diffusion_steps", c.diffusion_steps},
              {"schedule", model::to_string(c.schedule)},
              {"beta_start", c.beta_start},
              {"beta_end", c.beta_end},
              {"unet_c1", c.unet_c1},
              {"unet_c2", c.unet_c2},
              {"contact_head_hidden", c.contact_head_hidden},
              {"contact_proj_hidden", c.contact_proj_hidden},
              {"conditioning", model::to_string(c.conditioning)},
              {"stop_gradient", c.stop_gradient},
              {"temporal", model::to_string(c.temporal)}};
}

void merge(model::ModelConfig& c, const Json& j) {
  Fields f(j, "model");
  f.get_enum("kind", c.kind, model::kind_from_string);
  f.get("K", c.K);
  f.get("H", c.H);
  f.get("action_dim", c.action_dim);
  f.get("latent", c.latent);
  f.get("contact_dim", c.contact_dim);
  f.get("point_dim", c.point_dim);
  f.get("point_hidden", c.point_hidden);
  f.get("temporal_hidden", c.temporal_hidden);
  f.get("contact_seq_dim", c.contact_seq_dim);
  f.get("cond_dim", c.cond_dim);
  f.get("time_embed_dim", c.time_embed_dim);
  f.get("diffusion_steps", c.diffusion_steps);
  f.get_enum("schedule", c.schedule, model::schedule_from_string);
  f.get("beta_start", c.beta_start);
  f.get("beta_end", c.beta_end);
  f.get("unet_c1", c.unet_c1);
  f.get("unet_c2", c.unet_c2);
  f.get("contact_head_hidden", c.contact_head_hidden);
  f.get("contact_proj_hidden", c.contact_proj_hidden);
  f.get_enum("conditioning", c.conditioning, model::conditioning_from_string);
  f.get("stop_gradient", c.stop_gradient);
  f.get_enum("temporal", c.temporal, model::temporal_from_string);
  f.finish();
}

model::ModelConfig model_config_from_json(const Json& j) {
  model::ModelConfig c;
  merge(c, j);
  c.validate();
  return c;
}

Json to_json(const training::TrainConfig& c) {
  return Json{{"phase", training::to_string(c.phase)},
              {"learning_rate", c.learning_rate},
              {"lr_final_fraction", c.lr_final_fraction},
              {"lambda", c.lambda},
              {"batch_size", c.batch_size},
              {"epochs", c.epochs},
              {"seed", c.seed},
              {"val_fraction", c.val_fraction},
              {"stride", c.stride},
              {"fit_normalization", c.fit_normalization}};
}

void merge(training::TrainConfig& c, const Json& j) {
  Fields f(j, "training");
  f.get_enum("phase", c.phase, training::phase_from_string);
  f.get("learning_rate", c.learning_rate);
  f.get("lr_final_fraction", c.lr_final_fraction);
  f.get("lambda", c.lambda);
  f.get("batch_size", c.batch_size);
  f.get("epochs", c.epochs);
  f.get("seed", c.seed);
  f.get("val_fraction", c.val_fraction);
  f.get("stride", c.stride);
  f.get("fit_normalization", c.fit_normalization);
  f.finish();
}

Json to_json(const eval::RolloutConfig& c) {
  return Json{{"total_horizon", c.total_horizon},
              {"h_apply", c.h_apply},
              {"feedback", eval::to_string(c.feedback)},
              {"seed", c.seed}};
}

Json to_json(const eval::MetricsConfig& c) {
  return Json{{"d_max", c.d_max}, {"success_threshold", c.success_threshold}, {"mse_convention", eval::kMseConvention}};
}

Json to_json(const RunConfig& c) {
  return Json{{"seed", c.seed},
              {"data",
               {{"T", c.data.T},
                {"stride", c.data.stride},
                {"n_sim", c.data.n_sim},
                {"n_real", c.data.n_real},
                {"n_test", c.data.n_test}}},
              {"env", {{"sim", to_json(c.sim)}, {"real", to_json(c.real)}}},
              {"policy", to_json(c.policy)},
              {"model", to_json(c.model)},
              {"pretrain", to_json(c.pretrain)},
              {"finetune", to_json(c.finetune)},
              {"rollout", to_json(c.rollout)},
              {"metrics", to_json(c.metrics)}};
}

void merge(RunConfig& c, const Json& j) {
  Fields f(j, "config");
  f.get("seed", c.seed);
  if (const Json* d = f.sub("data")) merge_data(c.data, *d);
  if (const Json* e = f.sub("env")) {
    Fields fe(*e, "env");
    if (const Json* s = fe.sub("sim")) merge(c.sim, *s);
    if (const Json* r = fe.sub("real")) merge(c.real, *r);
    fe.finish();
  }
  if (const Json* p = f.sub("policy")) merge_policy(c.policy, *p);
  if (const Json* m = f.sub("model")) merge(c.model, *m);
  if (const Json* p = f.sub("pretrain")) merge(c.pretrain, *p);
  if (const Json* p = f.sub("finetune")) merge(c.finetune, *p);
  if (const Json* r = f.sub("rollout")) merge_rollout(c.rollout, *r);
  if (const Json* m = f.sub("metrics")) {
    Json copy = *m;
    copy.erase("mse_convention");
    merge_metrics(c.metrics, copy);
  }
  f.finish();
}

RunConfig load_run_config(const std::string& path) {
  RunConfig c;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::kMissingFile, "config file not found: " + path);
    Json j;
    try {
      j = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kConfig, "config file " + path + " is not valid JSON: " + e.what());
    }
    merge(c, j);
  }
  c.validate();
  return c;
}

bool apply_seed_override(RunConfig& c) {
  const char* s = std::getenv("CONTACTDYN_SEED");
  if (!s || !*s) return false;
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (errno != 0 || *end != '\0' || s[0] == '-') fail(ErrorCode::kConfig, std::string("CONTACTDYN_SEED is not a seed: ") + s);
  c.seed = v;
  return true;
}

std::string sha256_hex(const void* data, std::size_t n) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data, n, md, &len, EVP_sha256(), nullptr) != 1) fail(ErrorCode::kGeneric, "sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

std::string sha256_hex(const std::string& s) { return sha256_hex(s.data(), s.size()); }

std::string config_hash(const Json& j) { return sha256_hex(j.dump()); }

}  // namespace contactdyn::io
