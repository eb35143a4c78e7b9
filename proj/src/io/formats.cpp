#include "contactdyn/io/formats.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "contactdyn/error.hpp"

namespace contactdyn::io {

namespace fs = std::filesystem;

void write_file_atomic(const std::string& path, const std::string& bytes) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kGeneric, "cannot open " + tmp + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::kGeneric, "write failed: " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) fail(ErrorCode::kGeneric, "rename " + tmp + " -> " + path + ": " + ec.message());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kMissingFile, "file not found: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---- datasets ----

sim::Domain DatasetFile::domain() const {
  try {
    return sim::domain_from_string(manifest.at("domain").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("dataset manifest has no domain: ") + e.what());
  }
}

Json dataset_manifest(const RunConfig& cfg, sim::Domain domain, std::size_t count, std::uint64_t seed) {
  const Json env = to_json(cfg.env(domain));
  return Json{{"format", "contactdyn-dataset"},
              {"version", kDatasetVersion},
              {"domain", sim::to_string(domain)},
              {"count", count},
              {"K", cfg.model.K},
              {"H", cfg.model.H},
              {"T", cfg.data.T},
              {"seed", seed},
              {"env_config_hash", config_hash(env)},
              {"config", to_json(cfg)}};
}

namespace {

Json vec_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vec_from(const Json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

Json trajectory_to_json(const sim::Trajectory& t) {
  t.validate();
  Json cloud = Json::array();
  if (t.cloud) {
    for (const auto& p : *t.cloud) cloud.push_back({p.x(), p.y(), p.z()});
  }
  Json s = Json::array(), q = Json::array(), a = Json::array(), forces = Json::array();
  for (const auto& pose : t.poses) {
    Json row = {pose.p.x(), pose.p.y(), pose.p.z()};
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) row.push_back(pose.R(r, c));
    s.push_back(std::move(row));
  }
  for (const auto& v : t.joints) q.push_back(vec_json(v));
  for (const auto& v : t.actions) a.push_back(vec_json(v));
  for (const auto& step : t.forces) {
    Json fs_ = Json::array();
    for (const auto& f : step) fs_.push_back({f.x(), f.y(), f.z()});
    forces.push_back(std::move(fs_));
  }
  return Json{{"domain", sim::to_string(t.domain)},
              {"seed", t.seed},
              {"cloud", std::move(cloud)},
              {"s", std::move(s)},
              {"q", std::move(q)},
              {"a", std::move(a)},
              {"c", t.contacts},
              {"forces", std::move(forces)}};
}

sim::Trajectory trajectory_from_json(const Json& j) {
  sim::Trajectory t;
  try {
    t.domain = sim::domain_from_string(j.at("domain").get<std::string>());
    t.seed = j.at("seed").get<std::uint64_t>();
    auto cloud = std::make_shared<geom::PointCloud>();
    for (const auto& p : j.at("cloud")) {
      const auto v = p.get<std::vector<double>>();
      if (v.size() != 3) fail(ErrorCode::kFormat, "cloud point must have 3 coordinates");
      cloud->emplace_back(v[0], v[1], v[2]);
    }
    t.cloud = std::move(cloud);
    for (const auto& row : j.at("s")) {
      const auto v = row.get<std::vector<double>>();
      if (v.size() != 12) fail(ErrorCode::kFormat, "pose record must have 12 numbers");
      geom::Pose pose;
      pose.p = geom::Vec3(v[0], v[1], v[2]);
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) pose.R(r, c) = v[static_cast<std::size_t>(3 + 3 * r + c)];
      t.poses.push_back(pose);
    }
    for (const auto& v : j.at("q")) t.joints.push_back(vec_from(v));
    for (const auto& v : j.at("a")) t.actions.push_back(vec_from(v));
    t.contacts = j.at("c").get<std::vector<int>>();
    for (const auto& step : j.at("forces")) {
      std::vector<tactile::FingerForce> fs_;
      for (const auto& f : step) {
        const auto v = f.get<std::vector<double>>();
        if (v.size() != 3) fail(ErrorCode::kFormat, "force record must have 3 components");
        fs_.emplace_back(v[0], v[1], v[2]);
      }
      t.forces.push_back(std::move(fs_));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("malformed trajectory record: ") + e.what());
  }
  try {
    t.validate();
  } catch (const Error& e) {
    fail(ErrorCode::kFormat, std::string("invalid trajectory record: ") + e.what());
  }
  return t;
}

std::string dataset_to_string(const DatasetFile& d) {
  if (d.manifest.value("count", std::size_t{0}) != d.trajectories.size()) {
    fail(ErrorCode::kFormat, "dataset manifest count does not match the trajectory list");
  }
  std::string out = d.manifest.dump();
  out.push_back('\n');
  for (const auto& t : d.trajectories) {
    out += trajectory_to_json(t).dump();
    out.push_back('\n');
  }
  return out;
}

DatasetFile dataset_from_string(const std::string& text) {
  DatasetFile d;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::kFormat, "dataset file is empty");
  try {
    d.manifest = Json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("dataset manifest is not valid JSON: ") + e.what());
  }
  if (!d.manifest.is_object() || d.manifest.value("format", "") != "contactdyn-dataset") {
    fail(ErrorCode::kFormat, "not a dataset file");
  }
  if (d.manifest.value("version", -1) != kDatasetVersion) fail(ErrorCode::kFormat, "unsupported dataset version");
  const sim::Domain domain = d.domain();
  std::size_t count = 0;
  try {
    count = d.manifest.at("count").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("dataset manifest has no count: ") + e.what());
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kFormat, "dataset line " + std::to_string(lineno) + ": " + e.what());
    }
    d.trajectories.push_back(trajectory_from_json(j));
    if (d.trajectories.back().domain != domain) {
      fail(ErrorCode::kFormat, "dataset line " + std::to_string(lineno) + ": domain differs from manifest");
    }
  }
  if (d.trajectories.size() != count) {
    fail(ErrorCode::kFormat, "dataset has " + std::to_string(d.trajectories.size()) + " records, manifest says " +
                                 std::to_string(count));
  }
  if (d.manifest.contains("config") && d.manifest.contains("env_config_hash")) {
    RunConfig cfg;
    merge(cfg, d.manifest.at("config"));
    if (config_hash(to_json(cfg.env(domain))) != d.manifest.at("env_config_hash").get<std::string>()) {
      fail(ErrorCode::kFormat, "dataset env_config_hash does not match its embedded configuration");
    }
  }
  return d;
}

void write_dataset(const std::string& path, const DatasetFile& d) { write_file_atomic(path, dataset_to_string(d)); }

DatasetFile read_dataset(const std::string& path) { return dataset_from_string(read_file(path)); }

// ---- checkpoints ----

std::optional<std::string> CheckpointFile::parent_hash() const {
  const auto it = manifest.find("parent_hash");
  if (it == manifest.end() || it->is_null()) return std::nullopt;
  return it->get<std::string>();
}

std::string checkpoint_to_string(const model::DynamicsModel& m, const CheckpointInfo& info) {
  const auto& ps = m.params();
  Json tensors = Json::array();
  std::string blob;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const auto& v = ps.value(i);
    tensors.push_back({{"name", ps.name(i)}, {"shape", v.shape()}, {"trainable", ps.trainable(i)}});
    for (double x : v.values()) {
      const float f = static_cast<float>(x);
      std::uint32_t u;
      std::memcpy(&u, &f, 4);
      for (int b = 0; b < 4; ++b) blob.push_back(static_cast<char>((u >> (8 * b)) & 0xFF));
    }
  }
  Json manifest{{"format", "contactdyn-checkpoint"},
                {"version", kCheckpointVersion},
                {"precision", "float32-le"},
                {"model", to_json(m.config())},
                {"phase", training::to_string(info.phase)},
                {"epoch", info.epoch},
                {"seed", info.seed},
                {"parent_hash", info.parent_hash ? Json(*info.parent_hash) : Json(nullptr)},
                {"tensors", std::move(tensors)},
                {"blob_bytes", blob.size()},
                {"blob_sha256", sha256_hex(blob)},
                {"config", info.config}};
  if (info.phase == training::Phase::kFinetune && !info.parent_hash) {
    fail(ErrorCode::kInvalidArgument, "finetune checkpoints need a parent hash");
  }
  return manifest.dump() + "\n" + blob;
}

CheckpointFile checkpoint_from_string(const std::string& bytes) {
  const auto nl = bytes.find('\n');
  if (nl == std::string::npos) fail(ErrorCode::kFormat, "checkpoint has no manifest line");
  Json manifest;
  try {
    manifest = Json::parse(bytes.substr(0, nl));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("checkpoint manifest is not valid JSON: ") + e.what());
  }
  if (!manifest.is_object() || manifest.value("format", "") != "contactdyn-checkpoint") {
    fail(ErrorCode::kFormat, "not a checkpoint file");
  }
  if (manifest.value("version", -1) != kCheckpointVersion) fail(ErrorCode::kFormat, "unsupported checkpoint version");
  const std::string blob = bytes.substr(nl + 1);
  model::ModelConfig mc;
  try {
    mc = model_config_from_json(manifest.at("model"));
    if (blob.size() != manifest.at("blob_bytes").get<std::size_t>()) {
      fail(ErrorCode::kFormat, "checkpoint blob is truncated or padded: " + std::to_string(blob.size()) +
                                   " bytes, manifest says " + std::to_string(manifest.at("blob_bytes").get<std::size_t>()));
    }
    if (sha256_hex(blob) != manifest.at("blob_sha256").get<std::string>()) {
      fail(ErrorCode::kFormat, "checkpoint blob hash mismatch");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("checkpoint manifest incomplete: ") + e.what());
  }
  CheckpointFile out{manifest, model::DynamicsModel(mc, 0), sha256_hex(bytes)};
  auto& ps = out.model.params();
  const Json& tensors = manifest.at("tensors");
  if (tensors.size() != ps.size()) fail(ErrorCode::kShape, "checkpoint tensor count does not match the model config");
  std::size_t off = 0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const Json& t = tensors[i];
    auto& v = ps.value(i);
    if (t.at("name").get<std::string>() != ps.name(i) || t.at("shape").get<num::Shape>() != v.shape()) {
      fail(ErrorCode::kShape, "checkpoint tensor '" + t.at("name").get<std::string>() + "' does not match the model");
    }
    if (off + 4 * v.size() > blob.size()) fail(ErrorCode::kFormat, "checkpoint blob is truncated");
    for (double& x : v.storage()) {
      std::uint32_t u = 0;
      for (int b = 0; b < 4; ++b) u |= static_cast<std::uint32_t>(static_cast<unsigned char>(blob[off + b])) << (8 * b);
      float f;
      std::memcpy(&f, &u, 4);
      if (!std::isfinite(f)) fail(ErrorCode::kNonFinite, "checkpoint contains a non-finite value");
      x = f;
      off += 4;
    }
  }
  if (off != blob.size()) fail(ErrorCode::kFormat, "checkpoint blob has trailing bytes");
  return out;
}

std::string write_checkpoint(const std::string& path, const model::DynamicsModel& m, const CheckpointInfo& info) {
  const std::string bytes = checkpoint_to_string(m, info);
  write_file_atomic(path, bytes);
  return sha256_hex(bytes);
}

CheckpointFile read_checkpoint(const std::string& path) { return checkpoint_from_string(read_file(path)); }

// ---- reports ----

namespace {

Json loss_json(const training::LossValues& v) {
  return Json{{"L", v.total}, {"L_cnt", v.contact}, {"L_diff", v.diffusion}};
}

}  // namespace

Json to_json(const training::EpochReport& e) {
  Json j{{"epoch", e.epoch}, {"steps", e.steps}, {"train", loss_json(e.train)}};
  j["validation"] = e.has_validation ? loss_json(e.validation) : Json(nullptr);
  return j;
}

Json to_json(const eval::MetricsReport& r, bool per_sequence) {
  Json j{{"mse", r.mse},
         {"add_s_auc", r.auc},
         {"success_rate", r.success},
         {"sequences", r.sequences},
         {"frames", r.frames},
         {"metrics", to_json(r.config)}};
  if (per_sequence) {
    Json rows = Json::array();
    for (const auto& s : r.per_sequence) {
      rows.push_back({{"mse", s.mse}, {"add_s_auc", s.auc}, {"endpoint_error", s.endpoint_error}, {"success", s.success}});
    }
    j["per_sequence"] = std::move(rows);
  }
  return j;
}

Json to_json(const eval::BaselineTable& t) {
  Json rows = Json::array();
  for (auto kind : t.kinds) {
    Json row{{"kind", model::to_string(kind)}};
    for (auto regime : eval::kAllRegimes) {
      const auto m = t.median(kind, regime);
      const auto o = t.median(kind, regime, true);
      Json cell = Json(nullptr);
      if (m) {
        cell = {{"mse", m->mse},
                {"add_s_auc", m->auc},
                {"success_rate", m->success},
                {"seeds", m->seeds},
                {"cell", eval::format_cell(m->mse, m->auc)}};
        if (o) cell["open_loop"] = {{"mse", o->mse}, {"add_s_auc", o->auc}, {"success_rate", o->success}};
      }
      row[eval::to_string(regime)] = std::move(cell);
    }
    rows.push_back(std::move(row));
  }
  Json cells = Json::array();
  for (const auto& c : t.cells) {
    Json j{{"kind", model::to_string(c.kind)},
           {"regime", eval::to_string(c.regime)},
           {"seed", c.seed},
           {"ok", c.ok}};
    if (c.ok) {
      j["rollout"] = to_json(c.rollout, false);
      j["open_loop"] = to_json(c.open_loop, false);
    } else {
      j["diagnostic"] = c.diagnostic;
    }
    cells.push_back(std::move(j));
  }
  return Json{{"columns", {"sim-only", "real-only", "real-finetune"}},
              {"metrics", {"mse", "add_s_auc"}},
              {"mse_convention", eval::kMseConvention},
              {"rows", std::move(rows)},
              {"cells", std::move(cells)}};
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string metrics_csv(const eval::MetricsReport& r) {
  std::string out = "sequence,mse,add_s_auc,endpoint_error,success\n";
  for (std::size_t i = 0; i < r.per_sequence.size(); ++i) {
    const auto& s = r.per_sequence[i];
    out += std::to_string(i) + "," + num(s.mse) + "," + num(s.auc) + "," + num(s.endpoint_error) + "," +
           (s.success ? "1" : "0") + "\n";
  }
  out += "all," + num(r.mse) + "," + num(r.auc) + ",," + num(r.success) + "\n";
  return out;
}

std::string baselines_csv(const eval::BaselineTable& t) {
  std::string out = "kind,regime,seed,ok,rollout_mse,rollout_add_s_auc,rollout_success,open_loop_mse,open_loop_add_s_auc\n";
  for (const auto& c : t.cells) {
    out += model::to_string(c.kind) + "," + eval::to_string(c.regime) + "," + std::to_string(c.seed) + "," +
           (c.ok ? "1" : "0") + ",";
    if (c.ok) {
      out += num(c.rollout.mse) + "," + num(c.rollout.auc) + "," + num(c.rollout.success) + "," + num(c.open_loop.mse) +
             "," + num(c.open_loop.auc);
    } else {
      out += ",,,,";
    }
    out += "\n";
  }
  for (auto kind : t.kinds) {
    for (auto regime : eval::kAllRegimes) {
      const auto m = t.median(kind, regime);
      const auto o = t.median(kind, regime, true);
      out += model::to_string(kind) + "," + eval::to_string(regime) + ",median," + (m ? "1," : "0,");
      if (m && o) {
        out += num(m->mse) + "," + num(m->auc) + "," + num(m->success) + "," + num(o->mse) + "," + num(o->auc);
      } else {
        out += ",,,,";
      }
      out += "\n";
    }
  }
  return out;
}

std::string rollouts_to_string(const Json& header, const std::vector<sim::Trajectory>& trajs,
                               const std::vector<eval::RolloutResult>& results) {
  std::string out = header.dump() + "\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    Json s = Json::array();
    for (const auto& pose : r.poses) {
      Json row = {pose.p.x(), pose.p.y(), pose.p.z()};
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) row.push_back(pose.R(a, b));
      s.push_back(std::move(row));
    }
    Json j{{"trajectory", i},
           {"seed", trajs[i].seed},
           {"start", r.start},
           {"s", std::move(s)},
           {"c", r.contacts},
           {"c_prob", r.probabilities}};
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace contactdyn::io
