#include "contactdyn/eval/metrics.hpp"

#include <cmath>
#include <cstdio>

#include "contactdyn/error.hpp"
#include "contactdyn/geometry/add_s.hpp"

namespace contactdyn::eval {

void MetricsConfig::validate() const {
  if (!(d_max > 0.0)) fail(ErrorCode::kConfig, "metrics: d_max must be > 0");
  if (!(success_threshold > 0.0)) fail(ErrorCode::kConfig, "metrics: success threshold must be > 0");
}

MetricsConfig MetricsConfig::for_workspace(double extent) {
  MetricsConfig c;
  c.d_max = 0.1 * extent;
  c.success_threshold = 0.05 * extent;
  return c;
}

namespace {

struct Accum {
  double sq = 0.0;
  std::size_t n = 0;
  std::vector<double> dist;
};

SequenceMetrics evaluate(const SequencePair& p, const MetricsConfig& cfg, Accum& acc) {
  if (p.pred.size() != p.gt.size()) {
    fail(ErrorCode::kShape, "metrics: predicted and ground-truth sequences differ in length");
  }
  if (p.pred.empty()) fail(ErrorCode::kShape, "metrics: empty sequence");
  if (!p.cloud || p.cloud->empty()) fail(ErrorCode::kShape, "metrics: missing point cloud");
  std::vector<geom::Pose> a{p.anchor}, b{p.anchor};
  a.insert(a.end(), p.pred.begin(), p.pred.end());
  b.insert(b.end(), p.gt.begin(), p.gt.end());
  const auto ia = geom::encode_increments(a);
  const auto ib = geom::encode_increments(b);
  double sq = 0.0;
  for (std::size_t k = 0; k < ia.size(); ++k) {
    sq += (ia[k].dp - ib[k].dp).squaredNorm() + (ia[k].w - ib[k].w).squaredNorm();
  }
  const auto adds = geom::add_s_auc(p.pred, p.gt, *p.cloud, cfg.d_max);
  SequenceMetrics m;
  m.mse = sq / static_cast<double>(6 * ia.size());
  m.auc = adds.auc;
  m.endpoint_error = (p.pred.back().p - p.gt.back().p).norm();
  m.success = m.endpoint_error < cfg.success_threshold;
  acc.sq += sq;
  acc.n += 6 * ia.size();
  acc.dist.insert(acc.dist.end(), adds.per_frame.begin(), adds.per_frame.end());
  return m;
}

}  // namespace

SequenceMetrics sequence_metrics(const SequencePair& pair, const MetricsConfig& cfg) {
  cfg.validate();
  Accum acc;
  return evaluate(pair, cfg, acc);
}

MetricsReport compute_metrics(std::span<const SequencePair> pairs, const MetricsConfig& cfg) {
  cfg.validate();
  if (pairs.empty()) fail(ErrorCode::kShape, "metrics: no sequences");
  MetricsReport r;
  r.config = cfg;
  Accum acc;
  std::size_t ok = 0;
  for (const auto& p : pairs) {
    r.per_sequence.push_back(evaluate(p, cfg, acc));
    ok += r.per_sequence.back().success ? 1 : 0;
  }
  r.sequences = pairs.size();
  r.frames = acc.dist.size();
  r.mse = acc.sq / static_cast<double>(acc.n);
  r.auc = geom::auc_from_distances(acc.dist, cfg.d_max);
  r.success = 100.0 * static_cast<double>(ok) / static_cast<double>(pairs.size());
  return r;
}

std::string format_cell(double mse, double auc) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f MSE / %.2f ADD-S", mse, auc);
  return buf;
}

}  // namespace contactdyn::eval
