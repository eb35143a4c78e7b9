#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "contactdyn/geometry/se3.hpp"
#include "contactdyn/model/schedule.hpp"
#include "contactdyn/num/graph.hpp"
#include "contactdyn/num/params.hpp"
#include "contactdyn/sim/dataset.hpp"

namespace contactdyn::model {

//! Two direct regressors and two diffusion predictors.
enum class ModelKind { kDirectMlp, kDirectUnet, kDiffusion, kDiffusionContact };
enum class Conditioning { kPredicted, kTeacherForced };
enum class TemporalEncoder { kFlatMlp, kPerStepMean };

std::string to_string(ModelKind k);
ModelKind kind_from_string(const std::string& s);
std::string to_string(Conditioning c);
Conditioning conditioning_from_string(const std::string& s);
std::string to_string(TemporalEncoder e);
TemporalEncoder temporal_from_string(const std::string& s);

struct ModelConfig {
  ModelKind kind = ModelKind::kDiffusionContact;
  int K = 9;
  int H = 8;
  int action_dim = 4;
  int latent = 512;
  int contact_dim = 64;
  int point_dim = 128;
  int point_hidden = 64;
  int temporal_hidden = 256;
  int contact_seq_dim = 32;
  int cond_dim = 128;
  int time_embed_dim = 32;
  int diffusion_steps = 100;
  ScheduleKind schedule = ScheduleKind::kLinear;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  int unet_c1 = 32;
  int unet_c2 = 64;
  std::vector<int> contact_head_hidden;  //!< empty: single affine map
  int contact_proj_hidden = 32;
  Conditioning conditioning = Conditioning::kPredicted;
  bool stop_gradient = false;            //!< block diffusion-loss gradient into Stage I
  TemporalEncoder temporal = TemporalEncoder::kFlatMlp;

  int step_features() const { return 6 + 2 * action_dim; }
  int history_features() const { return (K + 1) * step_features(); }
  bool has_contact_head() const { return kind == ModelKind::kDiffusionContact; }
  bool is_diffusion() const { return kind == ModelKind::kDiffusion || kind == ModelKind::kDiffusionContact; }
  int condition_features() const { return latent + (has_contact_head() ? contact_dim : 0); }
  void validate() const;

  //! Reduced widths for CPU-scale experiments.
  static ModelConfig desk();
};

//! Normalized network inputs for a batch of windows.
struct BatchInputs {
  num::Tensor history;   //!< [B, (K+1) * step_features]
  num::Tensor contacts;  //!< [B, K+1]
  num::Tensor cloud;     //!< [B * N, 3]
  std::size_t batch = 0;
  std::size_t points = 0;
};

struct BatchTargets {
  num::Tensor contacts;  //!< [B, H]
  num::Tensor x0;        //!< [B, H, 6], normalized increments
};

struct ContactStage {
  num::Var probabilities;  //!< [B, H]
  num::Var logits;
  num::Var feature;        //!< [B, d_c]
};

//! Future contacts plus the contact feature they induce.
struct ContactForecast {
  std::vector<double> probabilities;
  std::vector<double> feature;
};

struct ChunkPrediction {
  ContactForecast contacts;                      //!< probabilities empty for kinds without Stage I
  std::vector<geom::PoseIncrement> increments;   //!< H
  std::vector<geom::Pose> poses;                 //!< s_{t+1..t+H}
};

//! Two-stage contact-aware dynamics model and its baseline variants.
class DynamicsModel {
 public:
  DynamicsModel(ModelConfig config, std::uint64_t init_seed);

  const ModelConfig& config() const { return config_; }
  const NoiseSchedule& schedule() const { return schedule_; }
  num::ParameterSet& params() { return params_; }
  const num::ParameterSet& params() const { return params_; }

  //! Fits the non-trainable input/target normalization from training windows.
  void fit_normalization(std::span<const sim::HistoryWindow* const> windows);

  BatchInputs make_inputs(std::span<const sim::HistoryWindow* const> windows) const;
  BatchTargets make_targets(std::span<const sim::HistoryWindow* const> windows) const;

  //! z_t [B, latent]: pose history is expressed relative to the anchor pose.
  num::Var encode_and_fuse(num::Graph& g, const BatchInputs& in) const;
  //! Stage I; `teacher` ([B, H] ground-truth labels) replaces the predicted
  //! probabilities as projector input in teacher-forced mode.
  ContactStage predict_contacts(num::Graph& g, num::Var z, const num::Tensor* teacher = nullptr) const;
  //! h_t = [z_t ; f_c] for the contact model, z_t otherwise.
  num::Var condition(num::Graph& g, num::Var z, const ContactStage* contacts) const;
  //! FiLM-conditioned 1-D U-Net over the horizon; x [B, H, 6], t one step per row.
  num::Var noise_predict(num::Graph& g, num::Var x, std::span<const int> t, num::Var h) const;
  //! Direct regressors: normalized x0 estimate [B, H, 6] from h = z_t.
  num::Var regress(num::Graph& g, num::Var h) const;

  //! Ancestral DDPM sampling of normalized increments given conditions h [B, C].
  //! Draw order: x_T first, then one noise tensor per step t = T..2.
  num::Tensor sample_normalized(const num::Tensor& h, std::uint64_t seed) const;
  //! Physical-unit increments [B, H, 6] sampled (or regressed) from conditions.
  num::Tensor sample_increments(const num::Tensor& h, std::uint64_t seed) const;

  //! encode -> contacts -> sample -> apply increments to each window's anchor.
  std::vector<ChunkPrediction> predict(std::span<const sim::HistoryWindow* const> windows, std::uint64_t seed) const;
  ChunkPrediction predict(const sim::HistoryWindow& window, std::uint64_t seed) const;

  num::Tensor denormalize(const num::Tensor& x0_normalized) const;

 private:
  void build();
  num::Var dense(num::Graph& g, const std::string& name, num::Var x) const;
  num::Var film_block(num::Graph& g, const std::string& name, num::Var x, num::Var cond, std::size_t stride) const;

  ModelConfig config_;
  NoiseSchedule schedule_;
  num::ParameterSet params_;
  std::uint64_t init_seed_;
};

//! Relative per-step features of one window (unnormalized).
std::vector<double> history_features(const sim::HistoryWindow& w, const ModelConfig& cfg);

}  // namespace contactdyn::model
