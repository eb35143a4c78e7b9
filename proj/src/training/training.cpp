#include "contactdyn/training/training.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "contactdyn/error.hpp"
#include "contactdyn/num/optimizer.hpp"

namespace contactdyn::training {

using num::Graph;
using num::Tensor;
using num::Var;

std::string to_string(Phase p) { return p == Phase::kPretrain ? "pretrain" : "finetune"; }

Phase phase_from_string(const std::string& s) {
  if (s == "pretrain") return Phase::kPretrain;
  if (s == "finetune") return Phase::kFinetune;
  fail(ErrorCode::kConfig, "unknown training phase '" + s + "'");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail(ErrorCode::kConfig, "training: lr must be > 0");
  if (!(lr_final_fraction > 0.0 && lr_final_fraction <= 1.0))
    fail(ErrorCode::kConfig, "training: lr_final_fraction must be in (0, 1]");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail(ErrorCode::kConfig, "training: lambda must be >= 0");
  if (batch_size < 1) fail(ErrorCode::kConfig, "training: batch_size must be >= 1");
  if (epochs < 0) fail(ErrorCode::kConfig, "training: epochs must be >= 0");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) fail(ErrorCode::kConfig, "training: val_fraction must be in [0, 1)");
  if (stride < 1) fail(ErrorCode::kConfig, "training: stride must be >= 1");
}

TrainConfig TrainConfig::pretrain() { return TrainConfig{}; }

TrainConfig TrainConfig::finetune() {
  TrainConfig c;
  c.phase = Phase::kFinetune;
  c.learning_rate = 1e-4;
  c.fit_normalization = false;
  return c;
}

JointLoss record_joint_loss(Graph& g, const model::DynamicsModel& m, std::span<const sim::HistoryWindow* const> batch,
                            double lambda, Rng& t_rng, Rng& eps_rng) {
  if (batch.empty()) fail(ErrorCode::kInvalidArgument, "joint_loss: empty batch");
  const auto& cfg = m.config();
  const model::BatchInputs in = m.make_inputs(batch);
  const model::BatchTargets tg = m.make_targets(batch);
  const std::size_t B = batch.size();

  Var z = m.encode_and_fuse(g, in);
  JointLoss out;
  model::ContactStage stage;
  if (cfg.has_contact_head()) {
    const bool teacher = cfg.conditioning == model::Conditioning::kTeacherForced;
    stage = m.predict_contacts(g, z, teacher ? &tg.contacts : nullptr);
    out.contact = g.bce(stage.probabilities, g.input(tg.contacts));
  } else {
    out.contact = g.input(Tensor::scalar(0.0));
  }
  Var h = m.condition(g, z, cfg.has_contact_head() ? &stage : nullptr);

  if (cfg.is_diffusion()) {
    std::uniform_int_distribution<int> td(1, m.schedule().steps());
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<int> ts(B);
    for (auto& t : ts) t = td(t_rng);
    Tensor eps(tg.x0.shape());
    for (double& v : eps.storage()) v = gauss(eps_rng);
    const std::size_t per = tg.x0.size() / B;
    Tensor xt(tg.x0.shape());
    for (std::size_t b = 0; b < B; ++b) {
      const double ab = m.schedule().alpha_bar(ts[b]);
      const double sa = std::sqrt(ab), sn = std::sqrt(1.0 - ab);
      for (std::size_t i = b * per; i < (b + 1) * per; ++i) xt[i] = sa * tg.x0[i] + sn * eps[i];
    }
    Var eps_hat = m.noise_predict(g, g.input(std::move(xt)), ts, h);
    out.diffusion = g.mse(eps_hat, g.input(std::move(eps)));
  } else {
    out.diffusion = g.mse(m.regress(g, h), g.input(tg.x0));
  }
  out.total = g.add(out.contact, g.scale(out.diffusion, lambda));
  return out;
}

LossValues joint_loss(model::DynamicsModel& m, std::span<const sim::HistoryWindow* const> batch, double lambda,
                      std::uint64_t seed, bool with_gradients) {
  Rng t_rng = make_rng(seed, "diffusion-t");
  Rng eps_rng = make_rng(seed, "diffusion-noise");
  Graph g;
  const JointLoss l = record_joint_loss(g, m, batch, lambda, t_rng, eps_rng);
  LossValues v{g.value(l.total).item(), g.value(l.contact).item(), g.value(l.diffusion).item()};
  if (with_gradients) {
    m.params().zero_grad();
    g.backward(l.total, m.params());
  }
  return v;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_trajectories(std::size_t n, double val_fraction,
                                                                                 std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng = make_rng(seed, "split");
  std::shuffle(idx.begin(), idx.end(), rng);
  std::size_t n_val = static_cast<std::size_t>(std::floor(val_fraction * static_cast<double>(n)));
  if (n_val >= n) n_val = n > 0 ? n - 1 : 0;
  std::vector<std::size_t> val(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train(idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
  std::sort(val.begin(), val.end());
  std::sort(train.begin(), train.end());
  return {train, val};
}

namespace {

std::vector<sim::HistoryWindow> windows_of(const std::vector<sim::Trajectory>& data,
                                           const std::vector<std::size_t>& which, int K, int H, int stride) {
  std::vector<sim::HistoryWindow> out;
  for (std::size_t i : which) {
    auto w = sim::build_history_windows(data[i], K, H, stride, i);
    std::move(w.begin(), w.end(), std::back_inserter(out));
  }
  return out;
}

void check_finite(const LossValues& v, int epoch) {
  if (!std::isfinite(v.total) || !std::isfinite(v.contact) || !std::isfinite(v.diffusion)) {
    fail(ErrorCode::kNonFinite, "training diverged: non-finite loss in epoch " + std::to_string(epoch));
  }
}

}  // namespace

LossReport train_phase(model::DynamicsModel& m, const std::vector<sim::Trajectory>& data, const TrainConfig& cfg,
                       const EpochCallback& on_epoch) {
  cfg.validate();
  LossReport report;
  if (data.empty()) fail(ErrorCode::kInvalidArgument, "train_phase: empty dataset");
  if (cfg.epochs == 0) return report;

  const auto& mc = m.config();
  auto [train_idx, val_idx] = split_trajectories(data.size(), cfg.val_fraction, cfg.seed);
  const auto train_w = windows_of(data, train_idx, mc.K, mc.H, cfg.stride);
  const auto val_w = windows_of(data, val_idx, mc.K, mc.H, cfg.stride);
  if (train_w.empty()) fail(ErrorCode::kInvalidArgument, "train_phase: trajectories too short for any window");

  std::vector<const sim::HistoryWindow*> train_ptr, val_ptr;
  for (const auto& w : train_w) train_ptr.push_back(&w);
  for (const auto& w : val_w) val_ptr.push_back(&w);
  if (cfg.fit_normalization) m.fit_normalization(train_ptr);

  num::Adam adam(m.params(), {cfg.learning_rate});
  Rng shuffle_rng = make_rng(cfg.seed, "shuffle");
  Rng t_rng = make_rng(cfg.seed, "diffusion-t");
  Rng eps_rng = make_rng(cfg.seed, "diffusion-noise");
  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
  const std::size_t total_steps = static_cast<std::size_t>(cfg.epochs) * ((train_ptr.size() + bs - 1) / bs);
  Graph g;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<const sim::HistoryWindow*> order = train_ptr;
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double sum_c = 0.0, sum_d = 0.0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t n = std::min(bs, order.size() - start);
      std::span<const sim::HistoryWindow* const> batch(order.data() + start, n);
      g.reset();
      const JointLoss l = record_joint_loss(g, m, batch, cfg.lambda, t_rng, eps_rng);
      const double lc = g.value(l.contact).item(), ld = g.value(l.diffusion).item();
      check_finite({g.value(l.total).item(), lc, ld}, epoch);
      m.params().zero_grad();
      g.backward(l.total, m.params());
      if (cfg.lr_final_fraction < 1.0) {
        const double progress = static_cast<double>(adam.steps()) / static_cast<double>(total_steps);
        const double decay = 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
        adam.set_learning_rate(cfg.learning_rate * (cfg.lr_final_fraction + (1.0 - cfg.lr_final_fraction) * decay));
      }
      adam.step(m.params());
      sum_c += lc * static_cast<double>(n);
      sum_d += ld * static_cast<double>(n);
    }
    EpochReport er;
    er.epoch = epoch;
    const double N = static_cast<double>(order.size());
    er.train.contact = sum_c / N;
    er.train.diffusion = sum_d / N;
    er.train.total = er.train.contact + cfg.lambda * er.train.diffusion;
    er.steps = adam.steps();
    check_finite(er.train, epoch);

    if (!val_ptr.empty()) {
      Rng vt = make_rng(cfg.seed, "validation-t");
      Rng ve = make_rng(cfg.seed, "validation-noise");
      double vc = 0.0, vd = 0.0;
      for (std::size_t start = 0; start < val_ptr.size(); start += bs) {
        const std::size_t n = std::min(bs, val_ptr.size() - start);
        g.reset();
        const JointLoss l = record_joint_loss(g, m, {val_ptr.data() + start, n}, cfg.lambda, vt, ve);
        vc += g.value(l.contact).item() * static_cast<double>(n);
        vd += g.value(l.diffusion).item() * static_cast<double>(n);
      }
      er.has_validation = true;
      er.validation.contact = vc / static_cast<double>(val_ptr.size());
      er.validation.diffusion = vd / static_cast<double>(val_ptr.size());
      er.validation.total = er.validation.contact + cfg.lambda * er.validation.diffusion;
    }
    report.epochs.push_back(er);
    if (on_epoch) on_epoch(er, m);
  }
  return report;
}

}  // namespace contactdyn::training
