#include "contactdyn/model/model.hpp"

#include <algorithm>
#include <cmath>

#include "contactdyn/error.hpp"
#include "contactdyn/rng.hpp"

namespace contactdyn::model {

using num::Graph;
using num::Shape;
using num::Tensor;
using num::Var;

namespace {

constexpr int kIncrementDims = 6;

Tensor glorot(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> u(-limit, limit);
  Tensor t(std::move(shape));
  for (double& v : t.storage()) v = u(rng);
  return t;
}

}  // namespace

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::kDirectMlp: return "direct-MLP";
    case ModelKind::kDirectUnet: return "direct-UNet";
    case ModelKind::kDiffusion: return "diffusion-UNet";
    case ModelKind::kDiffusionContact: return "diffusion-UNet-with-contact";
  }
  return "?";
}

ModelKind kind_from_string(const std::string& s) {
  for (ModelKind k : {ModelKind::kDirectMlp, ModelKind::kDirectUnet, ModelKind::kDiffusion, ModelKind::kDiffusionContact}) {
    if (s == to_string(k)) return k;
  }
  fail(ErrorCode::kConfig, "unknown model kind '" + s + "'");
}

std::string to_string(Conditioning c) { return c == Conditioning::kPredicted ? "predicted" : "teacher-forced"; }

Conditioning conditioning_from_string(const std::string& s) {
  if (s == "predicted") return Conditioning::kPredicted;
  if (s == "teacher-forced") return Conditioning::kTeacherForced;
  fail(ErrorCode::kConfig, "unknown conditioning mode '" + s + "'");
}

std::string to_string(TemporalEncoder e) { return e == TemporalEncoder::kFlatMlp ? "flat-mlp" : "per-step-mean"; }

TemporalEncoder temporal_from_string(const std::string& s) {
  if (s == "flat-mlp") return TemporalEncoder::kFlatMlp;
  if (s == "per-step-mean") return TemporalEncoder::kPerStepMean;
  fail(ErrorCode::kConfig, "unknown temporal encoder '" + s + "'");
}

void ModelConfig::validate() const {
  auto check = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::kConfig, "model: " + what);
  };
  check(K >= 0 && H >= 1, "K >= 0 and H >= 1 required");
  check(action_dim >= 1, "action_dim must be positive");
  check(latent > 0 && contact_dim > 0 && point_dim > 0 && point_hidden > 0 && temporal_hidden > 0 &&
            contact_seq_dim > 0 && cond_dim > 0 && contact_proj_hidden > 0 && unet_c1 > 0 && unet_c2 > 0,
        "dimensions must be positive");
  check(time_embed_dim >= 2 && time_embed_dim % 2 == 0, "time_embed_dim must be even");
  check(diffusion_steps >= 2, "diffusion_steps must be >= 2");
  for (int h : contact_head_hidden) check(h > 0, "contact head widths must be positive");
  if (kind != ModelKind::kDirectMlp) check(H % 4 == 0, "the U-Net needs H divisible by 4");
}

ModelConfig ModelConfig::desk() {
  ModelConfig c;
  c.latent = 128;
  c.contact_dim = 32;
  c.point_dim = 32;
  c.point_hidden = 32;
  c.temporal_hidden = 128;
  c.contact_seq_dim = 16;
  c.cond_dim = 64;
  c.unet_c1 = 32;
  c.unet_c2 = 64;
  return c;
}

std::vector<double> history_features(const sim::HistoryWindow& w, const ModelConfig& cfg) {
  const std::size_t steps = static_cast<std::size_t>(cfg.K + 1);
  if (w.poses.size() != steps || w.joints.size() != steps || w.actions.size() != steps || w.contacts.size() != steps) {
    fail(ErrorCode::kShape, "history window length does not match K + 1 = " + std::to_string(steps));
  }
  const geom::Pose& anchor = w.anchor();
  const geom::Mat3 Rt = anchor.R.transpose();
  std::vector<double> f;
  f.reserve(static_cast<std::size_t>(cfg.history_features()));
  for (std::size_t k = 0; k < steps; ++k) {
    if (w.joints[k].size() != cfg.action_dim || w.actions[k].size() != cfg.action_dim) {
      fail(ErrorCode::kShape, "window joint/action dimension does not match the model");
    }
    const geom::Vec3 dp = w.poses[k].p - anchor.p;
    const geom::Vec3 dw = geom::log_map(w.poses[k].R * Rt);
    for (int i = 0; i < 3; ++i) f.push_back(dp[i]);
    for (int i = 0; i < 3; ++i) f.push_back(dw[i]);
    for (int i = 0; i < cfg.action_dim; ++i) f.push_back(w.joints[k][i] - anchor.p[i % 2]);
    for (int i = 0; i < cfg.action_dim; ++i) f.push_back(w.actions[k][i]);
  }
  for (double v : f) {
    if (!std::isfinite(v)) fail(ErrorCode::kNonFinite, "non-finite history feature");
  }
  return f;
}

DynamicsModel::DynamicsModel(ModelConfig config, std::uint64_t init_seed)
    : config_(std::move(config)),
      schedule_(config_.diffusion_steps, config_.schedule, config_.beta_start, config_.beta_end),
      init_seed_(init_seed) {
  config_.validate();
  build();
}

void DynamicsModel::build() {
  Rng rng = make_rng(init_seed_, "init");
  const auto& c = config_;
  auto su = [](int v) { return static_cast<std::size_t>(v); };
  auto add_dense = [&](const std::string& name, int in, int out, double bias = 0.0) {
    params_.add(name + ".w", glorot({su(in), su(out)}, su(in), su(out), rng));
    params_.add(name + ".b", Tensor({su(out)}, bias));
  };
  auto add_conv = [&](const std::string& name, int k, int in, int out) {
    params_.add(name + ".w", glorot({su(k), su(in), su(out)}, su(k * in), su(k * out), rng));
    params_.add(name + ".b", Tensor({su(out)}, 0.0));
  };

  // encoders
  if (c.temporal == TemporalEncoder::kFlatMlp) {
    add_dense("temporal.l1", c.history_features(), c.temporal_hidden);
  } else {
    add_dense("temporal.l1", c.step_features(), c.temporal_hidden);
  }
  add_dense("temporal.l2", c.temporal_hidden, c.temporal_hidden);
  add_dense("cseq", c.K + 1, c.contact_seq_dim);
  add_dense("point.l1", 3, c.point_hidden);
  add_dense("point.l2", c.point_hidden, c.point_dim);
  add_dense("point.proj", c.point_dim, c.point_dim);
  add_dense("fusion.l1", c.temporal_hidden + c.contact_seq_dim + c.point_dim, c.latent);
  add_dense("fusion.l2", c.latent, c.latent);

  if (c.has_contact_head()) {
    int in = c.latent;
    for (std::size_t i = 0; i < c.contact_head_hidden.size(); ++i) {
      add_dense("contact.head." + std::to_string(i), in, c.contact_head_hidden[i]);
      in = c.contact_head_hidden[i];
    }
    add_dense("contact.head.out", in, c.H);
    add_dense("contact.proj.l1", c.H, c.contact_proj_hidden);
    add_dense("contact.proj.l2", c.contact_proj_hidden, c.contact_dim);
  }

  if (c.kind == ModelKind::kDirectMlp) {
    add_dense("mlp.l1", c.latent, c.latent);
    add_dense("mlp.out", c.latent, c.H * kIncrementDims);
  } else {
    add_dense("unet.cond_h", c.condition_features(), c.cond_dim);
    add_dense("unet.cond_t", c.time_embed_dim, c.cond_dim);
    auto add_block = [&](const std::string& name, int in, int out) {
      add_conv(name + ".conv", 3, in, out);
      add_dense(name + ".gamma", c.cond_dim, out, 1.0);
      add_dense(name + ".beta", c.cond_dim, out);
    };
    add_block("unet.enc1", kIncrementDims, c.unet_c1);
    add_block("unet.enc2", c.unet_c1, c.unet_c2);
    add_block("unet.mid", c.unet_c2, c.unet_c2);
    add_block("unet.dec2", 2 * c.unet_c2, c.unet_c2);
    add_block("unet.dec1", c.unet_c2 + c.unet_c1, c.unet_c1);
    add_conv("unet.out", 1, c.unet_c1 + kIncrementDims, kIncrementDims);
  }

  params_.add("norm.hist_mean", Tensor({su(c.history_features())}, 0.0), false);
  params_.add("norm.hist_std", Tensor({su(c.history_features())}, 1.0), false);
  params_.add("norm.cloud_scale", Tensor({1}, 1.0), false);
  params_.add("norm.x0_scale", Tensor({su(kIncrementDims)}, 1.0), false);
}

void DynamicsModel::fit_normalization(std::span<const sim::HistoryWindow* const> windows) {
  if (windows.empty()) fail(ErrorCode::kInvalidArgument, "fit_normalization: no windows");
  const std::size_t F = static_cast<std::size_t>(config_.history_features());
  std::vector<double> sum(F, 0.0), sq(F, 0.0);
  double cloud_sq = 0.0;
  std::size_t cloud_n = 0;
  std::vector<double> x0_sq(kIncrementDims, 0.0);
  std::size_t x0_n = 0;
  for (const auto* w : windows) {
    const auto f = history_features(*w, config_);
    for (std::size_t i = 0; i < F; ++i) {
      sum[i] += f[i];
      sq[i] += f[i] * f[i];
    }
    for (const auto& q : *w->cloud) {
      cloud_sq += q.squaredNorm();
      cloud_n += 3;
    }
    for (const auto& inc : w->target_increments) {
      for (int i = 0; i < 3; ++i) {
        x0_sq[static_cast<std::size_t>(i)] += inc.dp[i] * inc.dp[i];
        x0_sq[static_cast<std::size_t>(i + 3)] += inc.w[i] * inc.w[i];
      }
      ++x0_n;
    }
  }
  const double n = static_cast<double>(windows.size());
  Tensor& mean = params_.value("norm.hist_mean");
  Tensor& stdv = params_.value("norm.hist_std");
  for (std::size_t i = 0; i < F; ++i) {
    mean[i] = sum[i] / n;
    const double var = std::max(0.0, sq[i] / n - mean[i] * mean[i]);
    stdv[i] = var > 1e-16 ? std::sqrt(var) : 1.0;
  }
  const double cs = cloud_n ? std::sqrt(cloud_sq / static_cast<double>(cloud_n)) : 1.0;
  params_.value("norm.cloud_scale")[0] = cs > 0.0 ? cs : 1.0;
  Tensor& xs = params_.value("norm.x0_scale");
  double max_rms = 0.0;
  for (int i = 0; i < kIncrementDims; ++i) {
    xs[static_cast<std::size_t>(i)] = x0_n ? std::sqrt(x0_sq[static_cast<std::size_t>(i)] / static_cast<double>(x0_n)) : 0.0;
    max_rms = std::max(max_rms, xs[static_cast<std::size_t>(i)]);
  }
  if (max_rms <= 0.0) max_rms = 1.0;
  for (double& v : xs.storage()) v = std::max(v, 1e-3 * max_rms);
}

BatchInputs DynamicsModel::make_inputs(std::span<const sim::HistoryWindow* const> windows) const {
  if (windows.empty()) fail(ErrorCode::kShape, "empty batch");
  const std::size_t B = windows.size();
  const std::size_t F = static_cast<std::size_t>(config_.history_features());
  const std::size_t C = static_cast<std::size_t>(config_.K + 1);
  const std::size_t N = windows[0]->cloud ? windows[0]->cloud->size() : 0;
  if (N == 0) fail(ErrorCode::kShape, "window has no point cloud");
  const Tensor& mean = params_.value("norm.hist_mean");
  const Tensor& stdv = params_.value("norm.hist_std");
  const double cs = params_.value("norm.cloud_scale")[0];
  BatchInputs in;
  in.batch = B;
  in.points = N;
  in.history = Tensor({B, F});
  in.contacts = Tensor({B, C});
  in.cloud = Tensor({B * N, 3});
  for (std::size_t b = 0; b < B; ++b) {
    const auto& w = *windows[b];
    const auto f = history_features(w, config_);
    for (std::size_t i = 0; i < F; ++i) in.history[b * F + i] = (f[i] - mean[i]) / stdv[i];
    for (std::size_t i = 0; i < C; ++i) in.contacts[b * C + i] = static_cast<double>(w.contacts[i]);
    if (!w.cloud || w.cloud->size() != N) fail(ErrorCode::kShape, "point clouds in a batch must have equal size");
    for (std::size_t n = 0; n < N; ++n)
      for (int d = 0; d < 3; ++d) {
        const double v = (*w.cloud)[n][d];
        if (!std::isfinite(v)) fail(ErrorCode::kNonFinite, "non-finite point cloud coordinate");
        in.cloud[(b * N + n) * 3 + static_cast<std::size_t>(d)] = v / cs;
      }
  }
  return in;
}

BatchTargets DynamicsModel::make_targets(std::span<const sim::HistoryWindow* const> windows) const {
  const std::size_t B = windows.size();
  const std::size_t H = static_cast<std::size_t>(config_.H);
  const Tensor& xs = params_.value("norm.x0_scale");
  BatchTargets t;
  t.contacts = Tensor({B, H});
  t.x0 = Tensor({B, H, static_cast<std::size_t>(kIncrementDims)});
  for (std::size_t b = 0; b < B; ++b) {
    const auto& w = *windows[b];
    if (w.target_contacts.size() != H || w.target_increments.size() != H) {
      fail(ErrorCode::kShape, "window horizon does not match H = " + std::to_string(H));
    }
    for (std::size_t k = 0; k < H; ++k) {
      t.contacts[b * H + k] = static_cast<double>(w.target_contacts[k]);
      const auto& inc = w.target_increments[k];
      double* row = t.x0.data() + (b * H + k) * kIncrementDims;
      for (int i = 0; i < 3; ++i) {
        row[i] = inc.dp[i] / xs[static_cast<std::size_t>(i)];
        row[i + 3] = inc.w[i] / xs[static_cast<std::size_t>(i + 3)];
      }
    }
  }
  return t;
}

Var DynamicsModel::dense(Graph& g, const std::string& name, Var x) const {
  return g.affine(x, g.param(params_, name + ".w"), g.param(params_, name + ".b"));
}

Var DynamicsModel::encode_and_fuse(Graph& g, const BatchInputs& in) const {
  const auto& c = config_;
  const std::size_t B = in.batch;
  if (in.history.shape() != Shape{B, static_cast<std::size_t>(c.history_features())} ||
      in.contacts.shape() != Shape{B, static_cast<std::size_t>(c.K + 1)} ||
      in.cloud.shape() != Shape{B * in.points, 3}) {
    fail(ErrorCode::kShape, "encode_and_fuse: batch inputs do not match the model configuration");
  }
  Var hist = g.input(in.history);
  Var temporal;
  if (c.temporal == TemporalEncoder::kFlatMlp) {
    temporal = g.silu(dense(g, "temporal.l1", hist));
  } else {
    const std::size_t steps = static_cast<std::size_t>(c.K + 1);
    Var per_step = g.silu(dense(g, "temporal.l1", g.reshape(hist, {B, steps, static_cast<std::size_t>(c.step_features())})));
    Var pooled = g.gather(per_step, 1, {0});
    for (std::size_t k = 1; k < steps; ++k) pooled = g.add(pooled, g.gather(per_step, 1, {k}));
    temporal = g.scale(g.reshape(pooled, {B, static_cast<std::size_t>(c.temporal_hidden)}), 1.0 / static_cast<double>(steps));
  }
  temporal = dense(g, "temporal.l2", temporal);

  Var cseq = g.silu(dense(g, "cseq", g.input(in.contacts)));

  Var pts = g.silu(dense(g, "point.l1", g.input(in.cloud)));
  pts = dense(g, "point.l2", pts);
  pts = g.max_points(g.reshape(pts, {B, in.points, static_cast<std::size_t>(c.point_dim)}));
  pts = dense(g, "point.proj", pts);

  Var fused = g.silu(dense(g, "fusion.l1", g.concat({temporal, cseq, pts})));
  return dense(g, "fusion.l2", fused);
}

ContactStage DynamicsModel::predict_contacts(Graph& g, Var z, const Tensor* teacher) const {
  if (!config_.has_contact_head()) fail(ErrorCode::kInvalidArgument, "model kind has no contact predictor");
  Var x = z;
  for (std::size_t i = 0; i < config_.contact_head_hidden.size(); ++i) {
    x = g.silu(dense(g, "contact.head." + std::to_string(i), x));
  }
  ContactStage out;
  out.logits = dense(g, "contact.head.out", x);
  out.probabilities = g.sigmoid(out.logits);
  Var proj_in = out.probabilities;
  if (teacher) {
    if (teacher->shape() != g.shape(out.probabilities)) fail(ErrorCode::kShape, "teacher contacts shape mismatch");
    proj_in = g.input(*teacher);
  } else if (config_.stop_gradient) {
    proj_in = g.detach(out.probabilities);
  }
  out.feature = dense(g, "contact.proj.l2", g.silu(dense(g, "contact.proj.l1", proj_in)));
  return out;
}

Var DynamicsModel::condition(Graph& g, Var z, const ContactStage* contacts) const {
  if (!config_.has_contact_head()) return z;
  if (!contacts) fail(ErrorCode::kInvalidArgument, "contact model needs its Stage I output");
  return g.concat({z, contacts->feature});
}

Var DynamicsModel::film_block(Graph& g, const std::string& name, Var x, Var cond, std::size_t stride) const {
  Var y = g.conv1d(x, g.param(params_, name + ".conv.w"), g.param(params_, name + ".conv.b"), stride);
  y = g.layer_norm(y);
  y = g.mul_bcast(y, dense(g, name + ".gamma", cond));
  y = g.add_bcast(y, dense(g, name + ".beta", cond));
  return g.silu(y);
}

Var DynamicsModel::noise_predict(Graph& g, Var x, std::span<const int> t, Var h) const {
  const auto& c = config_;
  if (c.kind == ModelKind::kDirectMlp) fail(ErrorCode::kInvalidArgument, "MLP baseline has no U-Net");
  const Shape& xs = g.shape(x);
  const std::size_t H = static_cast<std::size_t>(c.H);
  if (xs.size() != 3 || xs[1] != H || xs[2] != kIncrementDims || t.size() != xs[0]) {
    fail(ErrorCode::kShape, "noise_predict: x must be [B, H, 6] with one step per row");
  }
  const std::size_t B = xs[0];
  const std::size_t E = static_cast<std::size_t>(c.time_embed_dim);
  Tensor temb({B, E});
  for (std::size_t b = 0; b < B; ++b) {
    const auto e = timestep_embedding(static_cast<double>(t[b]), c.time_embed_dim);
    std::copy(e.begin(), e.end(), temb.data() + b * E);
  }
  Var cond = g.silu(g.add(dense(g, "unet.cond_h", h), dense(g, "unet.cond_t", g.input(std::move(temb)))));

  auto upsample = [&](Var v) {
    const std::size_t L = g.shape(v)[1];
    std::vector<std::size_t> idx(2 * L);
    for (std::size_t i = 0; i < 2 * L; ++i) idx[i] = i / 2;
    return g.gather(v, 1, std::move(idx));
  };
  Var e1 = film_block(g, "unet.enc1", x, cond, 1);
  Var e2 = film_block(g, "unet.enc2", e1, cond, 2);
  Var mid = film_block(g, "unet.mid", e2, cond, 2);
  Var d2 = film_block(g, "unet.dec2", g.concat({upsample(mid), e2}), cond, 1);
  Var d1 = film_block(g, "unet.dec1", g.concat({upsample(d2), e1}), cond, 1);
  // the raw input rides along to the output: every block normalizes away its scale
  return g.conv1d(g.concat({d1, x}), g.param(params_, "unet.out.w"), g.param(params_, "unet.out.b"), 1);
}

Var DynamicsModel::regress(Graph& g, Var h) const {
  const auto& c = config_;
  const std::size_t B = g.shape(h)[0];
  const std::size_t H = static_cast<std::size_t>(c.H);
  switch (c.kind) {
    case ModelKind::kDirectMlp: {
      Var y = dense(g, "mlp.out", g.silu(dense(g, "mlp.l1", h)));
      return g.reshape(y, {B, H, kIncrementDims});
    }
    case ModelKind::kDirectUnet: {
      Var x = g.input(Tensor({B, H, kIncrementDims}));
      const std::vector<int> t(B, 0);
      return noise_predict(g, x, t, h);
    }
    default:
      fail(ErrorCode::kInvalidArgument, "regress() is for direct baselines only");
  }
}

Tensor DynamicsModel::sample_normalized(const Tensor& h, std::uint64_t seed) const {
  const std::size_t B = h.dim(0);
  const std::size_t H = static_cast<std::size_t>(config_.H);
  if (!config_.is_diffusion()) {
    Graph g;
    return g.value(regress(g, g.input(h)));
  }
  Rng rng = make_rng(seed, "sampler");
  std::normal_distribution<double> gauss(0.0, 1.0);
  Tensor x({B, H, kIncrementDims});
  for (double& v : x.storage()) v = gauss(rng);
  const int T = schedule_.steps();
  Graph g;
  for (int t = T; t >= 1; --t) {
    g.reset();
    const std::vector<int> ts(B, t);
    const Tensor eps_hat = g.value(noise_predict(g, g.input(x), ts, g.input(h)));
    const double alpha = schedule_.alpha(t);
    const double coef = schedule_.beta(t) / std::sqrt(1.0 - schedule_.alpha_bar(t));
    const double inv_sqrt_alpha = 1.0 / std::sqrt(alpha);
    const double sigma = t > 1 ? std::sqrt(schedule_.posterior_variance(t)) : 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = inv_sqrt_alpha * (x[i] - coef * eps_hat[i]);
    }
    if (t > 1) {
      for (double& v : x.storage()) v += sigma * gauss(rng);
    }
    if (!x.all_finite()) fail(ErrorCode::kNonFinite, "reverse diffusion diverged at step " + std::to_string(t));
  }
  return x;
}

Tensor DynamicsModel::denormalize(const Tensor& x0n) const {
  const Tensor& xs = params_.value("norm.x0_scale");
  Tensor out = x0n;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= xs[i % kIncrementDims];
  return out;
}

Tensor DynamicsModel::sample_increments(const Tensor& h, std::uint64_t seed) const {
  if (h.rank() != 2 || h.dim(1) != static_cast<std::size_t>(config_.condition_features())) {
    fail(ErrorCode::kShape, "sample_increments: condition must be [B, " + std::to_string(config_.condition_features()) + "]");
  }
  return denormalize(sample_normalized(h, seed));
}

std::vector<ChunkPrediction> DynamicsModel::predict(std::span<const sim::HistoryWindow* const> windows,
                                                    std::uint64_t seed) const {
  const BatchInputs in = make_inputs(windows);
  Graph g;
  Var z = encode_and_fuse(g, in);
  ContactStage stage;
  const bool contact = config_.has_contact_head();
  if (contact) stage = predict_contacts(g, z, nullptr);
  const Tensor h = g.value(condition(g, z, contact ? &stage : nullptr));
  const Tensor inc = sample_increments(h, seed);

  const std::size_t B = windows.size();
  const std::size_t H = static_cast<std::size_t>(config_.H);
  std::vector<ChunkPrediction> out(B);
  for (std::size_t b = 0; b < B; ++b) {
    auto& p = out[b];
    if (contact) {
      const Tensor& probs = g.value(stage.probabilities);
      const Tensor& feat = g.value(stage.feature);
      const std::size_t D = feat.dim(1);
      p.contacts.probabilities.assign(probs.data() + b * H, probs.data() + (b + 1) * H);
      p.contacts.feature.assign(feat.data() + b * D, feat.data() + (b + 1) * D);
    }
    for (std::size_t k = 0; k < H; ++k) {
      const double* r = inc.data() + (b * H + k) * kIncrementDims;
      p.increments.push_back({geom::Vec3(r[0], r[1], r[2]), geom::Vec3(r[3], r[4], r[5])});
    }
    p.poses = geom::apply_increments(windows[b]->anchor(), p.increments);
  }
  return out;
}

ChunkPrediction DynamicsModel::predict(const sim::HistoryWindow& window, std::uint64_t seed) const {
  const sim::HistoryWindow* ptr = &window;
  return predict(std::span<const sim::HistoryWindow* const>(&ptr, 1), seed).front();
}

}  // namespace contactdyn::model
