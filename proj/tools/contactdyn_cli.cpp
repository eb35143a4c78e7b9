// contactdyn command-line entry point.
#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "contactdyn/error.hpp"
#include "contactdyn/eval/baselines.hpp"
#include "contactdyn/eval/rollout.hpp"
#include "contactdyn/io/config.hpp"
#include "contactdyn/io/formats.hpp"
#include "contactdyn/io/selfcheck.hpp"
#include "contactdyn/rng.hpp"
#include "contactdyn/training/training.hpp"

using namespace contactdyn;
using io::Json;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "JSON run configuration (overlays the defaults)");
  app->add_option("--seed", c.seed, "root seed (otherwise CONTACTDYN_SEED, then the config)");
  app->add_flag("-q,--quiet", c.quiet, "no progress output on stderr");
}

io::RunConfig resolve(const Common& c) {
  io::RunConfig cfg = io::load_run_config(c.config_path);
  io::apply_seed_override(cfg);
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

void progress(const Common& c, const std::string& msg) {
  if (!c.quiet) std::cerr << msg << std::endl;
}

std::string sibling(const std::string& path, const std::string& ext) {
  const auto dot = path.rfind('.');
  const auto slash = path.rfind('/');
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) return path.substr(0, dot) + ext;
  return path + ext;
}

// ---- gen-data ----

struct GenData {
  Common common;
  std::string domain = "sim";
  int n = 100;
  std::optional<int> T;
  std::string out;
};

int run_gen_data(const GenData& o) {
  io::RunConfig cfg = resolve(o.common);
  if (o.T) cfg.data.T = *o.T;
  if (o.n < 0) fail(ErrorCode::kInvalidArgument, "--n must be >= 0");
  cfg.validate();
  const sim::Domain domain = sim::domain_from_string(o.domain);
  const std::uint64_t base = derive_seed(cfg.seed, "data");
  progress(o.common, "generating " + std::to_string(o.n) + " " + o.domain + " trajectories");
  io::DatasetFile d;
  d.trajectories = sim::generate_dataset(cfg.env(domain), o.n, cfg.data.T, cfg.policy, base, cfg.model.K, cfg.model.H);
  d.manifest = io::dataset_manifest(cfg, domain, d.trajectories.size(), cfg.seed);
  d.manifest["trajectory_seed_base"] = base;
  d.manifest["contact_fraction"] = d.trajectories.empty() ? 0.0 : sim::contact_fraction(d.trajectories);
  io::write_dataset(o.out, d);
  progress(o.common, "wrote " + o.out);
  return 0;
}

// ---- train / finetune ----

struct Train {
  Common common;
  std::string data;
  std::string init;  // finetune only
  std::string out;
  std::string log;
  std::string kind;
  std::optional<int> epochs;
  std::optional<double> lr;
};

int run_train(const Train& o, bool finetune) {
  io::RunConfig cfg = resolve(o.common);
  training::TrainConfig tc = finetune ? cfg.finetune : cfg.pretrain;
  tc.phase = finetune ? training::Phase::kFinetune : training::Phase::kPretrain;
  if (o.epochs) tc.epochs = *o.epochs;
  if (o.lr) tc.learning_rate = *o.lr;
  tc.seed = derive_seed(cfg.seed, finetune ? "finetune" : "train");
  if (finetune) {
    tc.fit_normalization = false;
    if (tc.learning_rate >= cfg.pretrain.learning_rate) {
      fail(ErrorCode::kConfig, "finetune learning rate must be below the pretrain learning rate");
    }
  }
  tc.validate();

  const io::DatasetFile data = io::read_dataset(o.data);
  if (finetune && data.domain() != sim::Domain::kRealTwin) {
    fail(ErrorCode::kDomainMismatch, "finetune expects a real-twin dataset, got '" + sim::to_string(data.domain()) + "'");
  }

  std::optional<io::CheckpointFile> parent;
  std::optional<model::DynamicsModel> m;
  if (finetune) {
    parent.emplace(io::read_checkpoint(o.init));
    m.emplace(parent->model);
    cfg.model = m->config();
  } else {
    if (!o.kind.empty()) cfg.model.kind = model::kind_from_string(o.kind);
    cfg.validate();
    m.emplace(cfg.model, derive_seed(cfg.seed, "init"));
  }
  if (finetune) cfg.finetune = tc; else cfg.pretrain = tc;
  const Json effective = io::to_json(cfg);

  const std::string log_path = o.log.empty() ? sibling(o.out, ".log.jsonl") : o.log;
  std::string log = Json{{"config", effective},
                         {"phase", training::to_string(tc.phase)},
                         {"dataset", o.data},
                         {"parent_hash", parent ? Json(parent->hash) : Json(nullptr)}}
                        .dump() +
                    "\n";
  const auto report = training::train_phase(*m, data.trajectories, tc, [&](const training::EpochReport& e, const model::DynamicsModel&) {
    log += io::to_json(e).dump() + "\n";
    std::ostringstream ss;
    ss << "epoch " << e.epoch << " L=" << e.train.total << " L_cnt=" << e.train.contact << " L_diff=" << e.train.diffusion;
    if (e.has_validation) ss << " val L=" << e.validation.total;
    progress(o.common, ss.str());
  });
  io::write_file_atomic(log_path, log);

  io::CheckpointInfo info;
  info.phase = tc.phase;
  info.epoch = static_cast<int>(report.epochs.size());
  info.seed = cfg.seed;
  info.config = effective;
  if (parent) info.parent_hash = parent->hash;
  const std::string hash = io::write_checkpoint(o.out, *m, info);
  progress(o.common, "wrote " + o.out + " (sha256 " + hash + ")");
  return 0;
}

// ---- rollout / eval ----

struct Eval {
  Common common;
  std::string ckpt;
  std::string data;
  std::string out;
  std::string feedback;
  std::string mode = "both";
  std::optional<int> horizon;
  std::optional<int> h_apply;
};

eval::RolloutConfig rollout_config(const io::RunConfig& cfg, const Eval& o, int H) {
  eval::RolloutConfig rc = cfg.rollout;
  if (o.horizon) rc.total_horizon = *o.horizon;
  if (o.h_apply) rc.h_apply = *o.h_apply;
  if (!o.feedback.empty()) rc.feedback = eval::feedback_from_string(o.feedback);
  rc.seed = derive_seed(cfg.seed, "rollout");
  rc.validate(H);
  return rc;
}

int run_rollout(const Eval& o) {
  io::RunConfig cfg = resolve(o.common);
  const io::CheckpointFile ck = io::read_checkpoint(o.ckpt);
  const io::DatasetFile data = io::read_dataset(o.data);
  const auto rc = rollout_config(cfg, o, ck.model.config().H);
  std::vector<const sim::Trajectory*> ptrs;
  for (const auto& t : data.trajectories) ptrs.push_back(&t);
  const auto results = eval::rollout_long_horizon(ck.model, ptrs, rc);
  const Json header{{"config", io::to_json(cfg)},
                    {"rollout", io::to_json(rc)},
                    {"checkpoint", o.ckpt},
                    {"checkpoint_hash", ck.hash},
                    {"dataset", o.data}};
  io::write_file_atomic(o.out, io::rollouts_to_string(header, data.trajectories, results));
  progress(o.common, "wrote " + o.out);
  return 0;
}

int run_eval(const Eval& o) {
  io::RunConfig cfg = resolve(o.common);
  const io::CheckpointFile ck = io::read_checkpoint(o.ckpt);
  const io::DatasetFile data = io::read_dataset(o.data);
  if (o.mode != "both" && o.mode != "open-loop" && o.mode != "rollout") {
    fail(ErrorCode::kUsage, "--mode must be open-loop, rollout or both");
  }
  const auto rc = rollout_config(cfg, o, ck.model.config().H);
  Json report{{"config", io::to_json(cfg)},
              {"checkpoint", o.ckpt},
              {"checkpoint_hash", ck.hash},
              {"dataset", o.data},
              {"rollout_config", io::to_json(rc)}};
  std::string csv;
  if (o.mode != "rollout") {
    const auto r = eval::evaluate_open_loop(ck.model, data.trajectories, cfg.data.stride, derive_seed(cfg.seed, "open-loop"),
                                            cfg.metrics);
    report["open_loop"] = io::to_json(r);
    report["open_loop"]["cell"] = eval::format_cell(r.mse, r.auc);
    csv = io::metrics_csv(r);
    progress(o.common, "open-loop: " + eval::format_cell(r.mse, r.auc));
  }
  if (o.mode != "open-loop") {
    const auto r = eval::evaluate_rollouts(ck.model, data.trajectories, rc, cfg.metrics);
    report["rollout"] = io::to_json(r);
    report["rollout"]["cell"] = eval::format_cell(r.mse, r.auc);
    csv = io::metrics_csv(r);
    progress(o.common, "rollout: " + eval::format_cell(r.mse, r.auc) + ", success " + std::to_string(r.success) + "%");
  }
  io::write_file_atomic(o.out, report.dump(2) + "\n");
  io::write_file_atomic(sibling(o.out, ".csv"), csv);
  progress(o.common, "wrote " + o.out);
  return 0;
}

// ---- baselines ----

struct Baselines {
  Common common;
  std::string sim, real, test, out;
  std::string kinds = "all";
  std::vector<std::uint64_t> seeds;
  std::optional<int> pretrain_epochs, finetune_epochs;
};

int run_baselines(const Baselines& o) {
  io::RunConfig cfg = resolve(o.common);
  std::vector<model::ModelKind> kinds;
  if (o.kinds == "all") {
    kinds = {model::ModelKind::kDirectMlp, model::ModelKind::kDirectUnet, model::ModelKind::kDiffusion,
             model::ModelKind::kDiffusionContact};
  } else {
    std::stringstream ss(o.kinds);
    std::string k;
    while (std::getline(ss, k, ',')) kinds.push_back(model::kind_from_string(k));
  }
  if (kinds.empty()) fail(ErrorCode::kUsage, "--kinds is empty");
  const auto sim_d = io::read_dataset(o.sim);
  const auto real_d = io::read_dataset(o.real);
  const auto test_d = io::read_dataset(o.test);
  if (sim_d.domain() != sim::Domain::kSim) fail(ErrorCode::kDomainMismatch, "--sim must be a sim dataset");
  if (real_d.domain() != sim::Domain::kRealTwin || test_d.domain() != sim::Domain::kRealTwin) {
    fail(ErrorCode::kDomainMismatch, "--real and --test must be real-twin datasets");
  }
  eval::SuiteConfig sc;
  sc.model = cfg.model;
  sc.pretrain = cfg.pretrain;
  sc.finetune = cfg.finetune;
  if (o.pretrain_epochs) sc.pretrain.epochs = *o.pretrain_epochs;
  if (o.finetune_epochs) sc.finetune.epochs = *o.finetune_epochs;
  sc.rollout = cfg.rollout;
  sc.metrics = cfg.metrics;
  sc.eval_stride = cfg.data.stride;
  sc.seeds.clear();
  if (o.seeds.empty()) {
    for (int i = 0; i < 3; ++i) sc.seeds.push_back(derive_seed(cfg.seed, "suite-" + std::to_string(i)));
  } else {
    sc.seeds = o.seeds;
  }
  const auto table = eval::baseline_suite(sim_d.trajectories, real_d.trajectories, test_d.trajectories, kinds, sc,
                                          [&](const std::string& s) { progress(o.common, s); });
  Json report = io::to_json(table);
  report["config"] = io::to_json(cfg);
  report["datasets"] = {{"sim", o.sim}, {"real", o.real}, {"test", o.test}};
  io::write_file_atomic(o.out, report.dump(2) + "\n");
  io::write_file_atomic(sibling(o.out, ".csv"), io::baselines_csv(table));
  progress(o.common, "wrote " + o.out);
  for (const auto& c : table.cells) {
    if (!c.ok) return static_cast<int>(ErrorCode::kGeneric);
  }
  return 0;
}

// ---- selfcheck ----

int run_selfcheck(const Common& c) {
  const io::RunConfig cfg = resolve(c);
  bool ok = true;
  for (const auto& r : io::run_selfcheck(cfg.seed)) {
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
    ok = ok && r.pass;
  }
  return ok ? 0 : static_cast<int>(ErrorCode::kGeneric);
}

void print_error(ErrorCode code, const std::string& msg) {
  std::cerr << Json{{"error", error_name(code)}, {"code", static_cast<int>(code)}, {"message", msg}}.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contact-aware dynamics: data generation, training and evaluation"};
  app.require_subcommand(1);

  GenData gen;
  auto* g = app.add_subcommand("gen-data", "simulate trajectories and write a dataset");
  add_common(g, gen.common);
  g->add_option("--domain", gen.domain, "sim | real-twin")->check(CLI::IsMember({"sim", "real-twin"}));
  g->add_option("--n", gen.n, "number of trajectories");
  g->add_option("--T", gen.T, "steps per trajectory");
  g->add_option("--out", gen.out, "output dataset (JSON-lines)")->required();

  Train tr, ft;
  auto* t = app.add_subcommand("train", "train a model from scratch");
  add_common(t, tr.common);
  t->add_option("--data", tr.data, "training dataset")->required();
  t->add_option("--out", tr.out, "output checkpoint")->required();
  t->add_option("--log", tr.log, "training log (default: <out>.log.jsonl)");
  t->add_option("--kind", tr.kind, "direct-MLP | direct-UNet | diffusion-UNet | diffusion-UNet-with-contact");
  t->add_option("--epochs", tr.epochs, "epochs");
  t->add_option("--lr", tr.lr, "learning rate");

  auto* f = app.add_subcommand("finetune", "fine-tune a checkpoint on real-twin data");
  add_common(f, ft.common);
  f->add_option("--data", ft.data, "real-twin dataset")->required();
  f->add_option("--init", ft.init, "parent checkpoint")->required();
  f->add_option("--out", ft.out, "output checkpoint")->required();
  f->add_option("--log", ft.log, "training log (default: <out>.log.jsonl)");
  f->add_option("--epochs", ft.epochs, "epochs");
  f->add_option("--lr", ft.lr, "learning rate");

  Eval ro, ev;
  auto add_eval = [](CLI::App* a, Eval& e) {
    add_common(a, e.common);
    a->add_option("--ckpt", e.ckpt, "checkpoint")->required();
    a->add_option("--data", e.data, "dataset to roll out on")->required();
    a->add_option("--out", e.out, "output file")->required();
    a->add_option("--feedback", e.feedback, "self-predicted | oracle");
    a->add_option("--horizon", e.horizon, "total rollout horizon");
    a->add_option("--h-apply", e.h_apply, "steps committed per chunk");
  };
  auto* r = app.add_subcommand("rollout", "receding-horizon rollouts (JSON-lines)");
  add_eval(r, ro);
  auto* e = app.add_subcommand("eval", "metrics report (JSON + CSV)");
  add_eval(e, ev);
  e->add_option("--mode", ev.mode, "open-loop | rollout | both");

  Baselines bl;
  auto* b = app.add_subcommand("baselines", "train and compare all model kinds under three regimes");
  add_common(b, bl.common);
  b->add_option("--sim", bl.sim, "sim training dataset")->required();
  b->add_option("--real", bl.real, "real-twin training dataset")->required();
  b->add_option("--test", bl.test, "real-twin test dataset")->required();
  b->add_option("--out", bl.out, "report (JSON; CSV alongside)")->required();
  b->add_option("--kinds", bl.kinds, "all or a comma-separated list");
  b->add_option("--seeds", bl.seeds, "training seeds (default: three derived from the root seed)");
  b->add_option("--pretrain-epochs", bl.pretrain_epochs, "epochs for sim-only training");
  b->add_option("--finetune-epochs", bl.finetune_epochs, "epochs for finetune and real-only training");

  Common sc;
  auto* s = app.add_subcommand("selfcheck", "run the property self-check suite");
  add_common(s, sc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    if (err.get_exit_code() == 0) return app.exit(err);
    print_error(ErrorCode::kUsage, err.what());
    return static_cast<int>(ErrorCode::kUsage);
  }

  try {
    if (*g) return run_gen_data(gen);
    if (*t) return run_train(tr, false);
    if (*f) return run_train(ft, true);
    if (*r) return run_rollout(ro);
    if (*e) return run_eval(ev);
    if (*b) return run_baselines(bl);
    if (*s) return run_selfcheck(sc);
  } catch (const Error& err) {
    print_error(err.code(), err.what());
    return static_cast<int>(err.code());
  } catch (const std::exception& err) {
    print_error(ErrorCode::kGeneric, err.what());
    return static_cast<int>(ErrorCode::kGeneric);
  }
  return 0;
}
