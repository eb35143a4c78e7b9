#include "contactdyn/eval/rollout.hpp"

#include <algorithm>

#include "contactdyn/error.hpp"
#include "contactdyn/rng.hpp"

namespace contactdyn::eval {

std::string to_string(ContactFeedback f) { return f == ContactFeedback::kOracle ? "oracle" : "self-predicted"; }

ContactFeedback feedback_from_string(const std::string& s) {
  if (s == "oracle") return ContactFeedback::kOracle;
  if (s == "self-predicted") return ContactFeedback::kSelfPredicted;
  fail(ErrorCode::kConfig, "unknown contact feedback '" + s + "'");
}

void RolloutConfig::validate(int H) const {
  if (total_horizon < 1) fail(ErrorCode::kConfig, "rollout: total horizon must be >= 1");
  if (h_apply < 1 || h_apply > H) fail(ErrorCode::kConfig, "rollout: h_apply must be in [1, H]");
}

RolloutConfig RolloutConfig::defaults(int H) {
  RolloutConfig c;
  c.total_horizon = 5 * H;
  c.h_apply = std::max(1, H / 2);
  return c;
}

std::vector<RolloutResult> rollout_long_horizon(const model::DynamicsModel& m,
                                                std::span<const sim::Trajectory* const> trajs,
                                                const RolloutConfig& cfg) {
  const auto& mc = m.config();
  cfg.validate(mc.H);
  const std::size_t K = static_cast<std::size_t>(mc.K);
  const std::size_t total = static_cast<std::size_t>(cfg.total_horizon);
  for (const auto* tr : trajs) {
    if (tr->steps() < K + 1 + total) {
      fail(ErrorCode::kInvalidArgument, "rollout: trajectory of " + std::to_string(tr->steps()) +
                                            " steps is too short for K + 1 + T_roll = " +
                                            std::to_string(K + 1 + total));
    }
  }
  const bool self = cfg.feedback == ContactFeedback::kSelfPredicted && mc.has_contact_head();
  const std::size_t B = trajs.size();
  // rolling pose / contact logs, indexed like the trajectory
  std::vector<std::vector<geom::Pose>> poses(B);
  std::vector<std::vector<int>> contacts(B);
  std::vector<RolloutResult> out(B);
  for (std::size_t b = 0; b < B; ++b) {
    poses[b].assign(trajs[b]->poses.begin(), trajs[b]->poses.begin() + static_cast<std::ptrdiff_t>(K + 1));
    contacts[b].assign(trajs[b]->contacts.begin(), trajs[b]->contacts.begin() + static_cast<std::ptrdiff_t>(K + 1));
    out[b].start = K;
  }
  std::size_t t = K;
  int chunk = 0;
  std::vector<sim::HistoryWindow> windows(B);
  std::vector<const sim::HistoryWindow*> ptrs(B);
  while (t < K + total) {
    for (std::size_t b = 0; b < B; ++b) {
      auto& w = windows[b];
      const auto& tr = *trajs[b];
      w.trajectory = b;
      w.t = t;
      w.cloud = tr.cloud;
      const auto lo = static_cast<std::ptrdiff_t>(t - K), hi = static_cast<std::ptrdiff_t>(t + 1);
      w.poses.assign(poses[b].begin() + lo, poses[b].begin() + hi);
      w.contacts.assign(contacts[b].begin() + lo, contacts[b].begin() + hi);
      w.joints.assign(tr.joints.begin() + lo, tr.joints.begin() + hi);
      w.actions.assign(tr.actions.begin() + lo, tr.actions.begin() + hi);
      ptrs[b] = &w;
    }
    const auto preds = m.predict(ptrs, derive_seed(cfg.seed, "chunk-" + std::to_string(chunk)));
    const std::size_t n = std::min(static_cast<std::size_t>(cfg.h_apply), K + total - t);
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t k = 0; k < n; ++k) {
        poses[b].push_back(preds[b].poses[k]);
        int c = trajs[b]->contacts[t + 1 + k];
        if (self) {
          const double p = preds[b].contacts.probabilities[k];
          c = p >= 0.5 ? 1 : 0;
          out[b].probabilities.push_back(p);
        }
        contacts[b].push_back(c);
        out[b].contacts.push_back(c);
      }
    }
    t += n;
    ++chunk;
  }
  for (std::size_t b = 0; b < B; ++b) {
    out[b].poses.assign(poses[b].begin() + static_cast<std::ptrdiff_t>(K + 1), poses[b].end());
  }
  return out;
}

RolloutResult rollout_long_horizon(const model::DynamicsModel& m, const sim::Trajectory& traj,
                                   const RolloutConfig& cfg) {
  const sim::Trajectory* ptr = &traj;
  return rollout_long_horizon(m, std::span<const sim::Trajectory* const>(&ptr, 1), cfg).front();
}

MetricsReport evaluate_rollouts(const model::DynamicsModel& m, const std::vector<sim::Trajectory>& test,
                                const RolloutConfig& rcfg, const MetricsConfig& mcfg) {
  std::vector<const sim::Trajectory*> ptrs;
  for (const auto& t : test) ptrs.push_back(&t);
  const auto results = rollout_long_horizon(m, ptrs, rcfg);
  std::vector<SequencePair> pairs(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    const std::size_t t0 = results[i].start;
    pairs[i].anchor = test[i].poses[t0];
    pairs[i].pred = results[i].poses;
    pairs[i].gt.assign(test[i].poses.begin() + static_cast<std::ptrdiff_t>(t0 + 1),
                       test[i].poses.begin() + static_cast<std::ptrdiff_t>(t0 + 1 + results[i].poses.size()));
    pairs[i].cloud = test[i].cloud.get();
  }
  return compute_metrics(pairs, mcfg);
}

MetricsReport evaluate_open_loop(const model::DynamicsModel& m, const std::vector<sim::Trajectory>& test, int stride,
                                 std::uint64_t seed, const MetricsConfig& mcfg, std::size_t batch) {
  const auto& mc = m.config();
  const auto windows = sim::build_history_windows(test, mc.K, mc.H, stride);
  if (windows.empty()) fail(ErrorCode::kInvalidArgument, "open-loop evaluation: no windows");
  std::vector<SequencePair> pairs;
  pairs.reserve(windows.size());
  batch = std::max<std::size_t>(batch, 1);
  for (std::size_t start = 0, chunk = 0; start < windows.size(); start += batch, ++chunk) {
    const std::size_t n = std::min(batch, windows.size() - start);
    std::vector<const sim::HistoryWindow*> ptrs;
    for (std::size_t i = 0; i < n; ++i) ptrs.push_back(&windows[start + i]);
    const auto preds = m.predict(ptrs, derive_seed(seed, "open-loop-" + std::to_string(chunk)));
    for (std::size_t i = 0; i < n; ++i) {
      const auto& w = windows[start + i];
      pairs.push_back({w.anchor(), preds[i].poses, w.target_poses, w.cloud.get()});
    }
  }
  return compute_metrics(pairs, mcfg);
}

}  // namespace contactdyn::eval
