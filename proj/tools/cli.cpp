/*
 * Copyright (c) 2026 The VSA Authors
 *
 * Licensed under the Apache License, Version 2.0;
 * You may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an 'AS IS' BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>

#include "vsa/checkpoint.hpp"
#include "vsa/data.hpp"
#include "vsa/dataset_io.hpp"
#include "vsa/diagnostics.hpp"
#include "vsa/errors.hpp"
#include "vsa/image_io.hpp"
#include "vsa/probe.hpp"
#include "vsa/run_config.hpp"
#include "vsa/train.hpp"

namespace vsa::cli {

namespace {

namespace fs = std::filesystem;

struct ConfigFlags {
  std::string file;
  std::vector<std::string> overrides;

  void attach(CLI::App& cmd) {
    cmd.add_option("--config", file, "INI run configuration")->check(CLI::ExistingFile);
    cmd.add_option("--set", overrides, "Override one key, section.key=value (repeatable)");
  }

  // defaults <- `base` text <- --config file <- --set overrides
  RunConfig resolve(const std::string& base = {}) const {
    RunConfig cfg = base.empty() ? RunConfig{} : parse_run_config(base);
    if (!file.empty()) {
      const auto from_file = load_run_config(file);
      const auto text = serialize_run_config(from_file);
      cfg = parse_run_config(text);
    }
    for (const auto& o : overrides) apply_override(cfg, o);
    return cfg;
  }
};

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string scientific(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3e", v);
  return buf;
}

template <typename T>
struct Loaded {
  VsaConfig config;
  VsaWeights<T> weights;
  std::string run_config;
};

template <typename T>
Loaded<T> load_model(const std::string& path) {
  const auto ck = read_checkpoint(path);
  return Loaded<T>{ck.config, import_weights<T>(ck.config, ck.tensors), ck.run_config};
}

// ---- gen-data ---------------------------------------------------------------

struct GenDataArgs {
  std::size_t classes = kNumShapeClasses;
  std::size_t objects = 256;
  std::size_t test_objects = 64;
  std::size_t views = 12;
  std::size_t size = 32;
  std::uint64_t seed = 0;
  double jitter = 0.0;
  std::size_t workers = 1;
  std::string out;
};

int gen_data(const GenDataArgs& a, std::ostream& out) {
  GenerateOptions opt;
  opt.num_classes = a.classes;
  opt.views = a.views;
  opt.image_size = a.size;
  opt.seed = a.seed;
  opt.pose_jitter = a.jitter;
  opt.workers = a.workers;
  struct Split {
    const char* name;
    std::size_t count;
    std::size_t first;
  };
  for (const auto& split : {Split{"train", a.objects, 0}, Split{"test", a.test_objects, a.objects}}) {
    opt.num_objects = split.count;
    opt.first_object = split.first;
    const auto data = generate_dataset(opt);
    const fs::path path = fs::path(a.out) / (std::string(split.name) + ".vsad");
    write_dataset(path, data);
    out << split.name << ": " << data.size() << " objects x " << data.views << " views (" << a.size << "x" << a.size
        << "), " << fs::file_size(path) << " bytes -> " << path.string() << '\n';
  }
  return kSuccess;
}

// ---- pretrain ---------------------------------------------------------------

struct PretrainArgs {
  ConfigFlags config;
  std::string data;
  std::optional<std::size_t> epochs;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string resume;
  std::size_t stop_after = 0;
  std::optional<std::size_t> checkpoint_every;
  bool quiet = false;
};

template <typename T>
int pretrain_as(const RunConfig& cfg, const Dataset& data, const PretrainArgs& a, std::ostream& out,
                std::ostream& err) {
  PretrainOptions opt;
  opt.model = cfg.model;
  opt.optim = cfg.pretrain;
  opt.sampler = cfg.sampler;
  opt.augment = cfg.augment;
  opt.seed = cfg.seed;
  opt.stop_after = a.stop_after;
  opt.checkpoint_every = cfg.checkpoint_every;
  opt.out_dir = cfg.out_dir;
  opt.run_config = serialize_run_config(cfg);
  opt.workers = cfg.workers;
  const auto spe = steps_per_epoch(data.size(), std::min(cfg.pretrain.batch_size, data.size()));
  if (!a.quiet) {
    opt.on_step = [&err, spe](const StepRecord& r) {
      if ((r.step + 1) % spe == 0) {
        err << "epoch " << (r.step + 1) / spe << " step " << r.step + 1 << " lr " << scientific(r.lr) << " loss "
            << fixed(r.loss) << '\n';
      }
    };
  }
  std::optional<CheckpointFile> resume;
  if (!a.resume.empty()) resume = read_checkpoint(a.resume);
  const auto result = pretrain<T>(data, opt, resume ? &*resume : nullptr);
  out << "steps " << result.step << "/" << result.total_steps;
  if (!result.curve.empty()) {
    out << " final loss " << fixed(result.curve.back().loss) << " smoothed " << fixed(smoothed_loss(result.curve, 20));
  }
  out << '\n';
  if (!cfg.out_dir.empty()) out << "checkpoint -> " << (fs::path(cfg.out_dir) / kCheckpointFile).string() << '\n';
  return kSuccess;
}

int pretrain_cmd(const PretrainArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig cfg = a.config.resolve();
  if (!a.data.empty()) cfg.train_data = a.data;
  if (a.epochs) cfg.pretrain.total_epochs = *a.epochs;
  if (cfg.pretrain.warmup_epochs > cfg.pretrain.total_epochs) cfg.pretrain.warmup_epochs = cfg.pretrain.total_epochs;
  if (!a.out.empty()) cfg.out_dir = a.out;
  if (a.seed) cfg.seed = *a.seed;
  if (a.checkpoint_every) cfg.checkpoint_every = *a.checkpoint_every;
  if (cfg.train_data.empty()) throw std::invalid_argument("no training data: pass --data or set data.train_data");
  const auto data = read_dataset(cfg.train_data);
  cfg.model.n_views = data.views;
  if (!cfg.out_dir.empty()) save_run_config(fs::path(cfg.out_dir) / "run_config.ini", cfg);
  return cfg.precision == Precision::fp64 ? pretrain_as<double>(cfg, data, a, out, err)
                                          : pretrain_as<float>(cfg, data, a, out, err);
}

// ---- probe / finetune -------------------------------------------------------

struct ClassifyArgs {
  ConfigFlags config;
  std::string checkpoint;
  bool scratch = false;
  std::string train;
  std::string test;
  std::optional<std::size_t> views;
  std::optional<std::size_t> epochs;
  std::optional<std::uint64_t> seed;
  bool shuffle_labels = false;
  std::string out;
};

template <typename T>
int classify_as(bool finetuning, RunConfig cfg, const ClassifyArgs& a, std::ostream& out) {
  const auto train = read_dataset(cfg.train_data);
  const auto test = read_dataset(cfg.test_data);
  VsaConfig model;
  VsaWeights<T> weights;
  if (a.scratch) {
    model = cfg.model;
    model.n_views = train.views;
    weights = VsaWeights<T>::init(model, cfg.seed);
  } else {
    auto loaded = load_model<T>(a.checkpoint);
    model = loaded.config;
    weights = std::move(loaded.weights);
  }
  ClassifyOptions opt;
  opt.optim = finetuning ? cfg.finetune : cfg.probe;
  opt.views = cfg.probe_views;
  opt.seed = cfg.seed;
  opt.shuffle_labels = a.shuffle_labels;
  opt.augment = cfg.augment;
  opt.workers = cfg.workers;
  const auto result = finetuning ? finetune(model, weights, train, test, opt) : linear_probe(model, weights, train, test, opt);

  if (!cfg.out_dir.empty()) {
    fs::create_directories(cfg.out_dir);
    save_run_config(fs::path(cfg.out_dir) / "run_config.ini", cfg);
    std::ofstream log(fs::path(cfg.out_dir) / kMetricsFile, std::ios::trunc);
    if (!log) throw IoError("cannot write " + (fs::path(cfg.out_dir) / kMetricsFile).string());
    for (std::size_t i = 0; i < result.curve.size(); ++i) {
      log << format_metric(result.curve[i]);
      if (i + 1 == result.curve.size()) log << ',' << result.test_accuracy;
      log << '\n';
    }
  }
  out << (finetuning ? "finetune" : "linear probe") << (a.scratch ? " (scratch)" : "") << ": train accuracy "
      << fixed(100.0 * result.train_accuracy, 2) << "% test accuracy " << fixed(100.0 * result.test_accuracy, 2)
      << "%\n";
  return kSuccess;
}

int classify_cmd(bool finetuning, const ClassifyArgs& a, std::ostream& out) {
  if (a.scratch == !a.checkpoint.empty()) throw std::invalid_argument("pass exactly one of --checkpoint or --scratch");
  std::string base;
  if (!a.checkpoint.empty()) base = read_checkpoint(a.checkpoint).run_config;
  RunConfig cfg = a.config.resolve(base);
  if (!a.train.empty()) cfg.train_data = a.train;
  if (!a.test.empty()) cfg.test_data = a.test;
  if (a.views) cfg.probe_views = *a.views;
  if (a.seed) cfg.seed = *a.seed;
  if (a.epochs) {
    auto& o = finetuning ? cfg.finetune : cfg.probe;
    o.total_epochs = *a.epochs;
    o.warmup_epochs = std::min(o.warmup_epochs, o.total_epochs);
  }
  cfg.out_dir = a.out;
  if (cfg.train_data.empty() || cfg.test_data.empty()) {
    throw std::invalid_argument("need both --train and --test datasets");
  }
  return cfg.precision == Precision::fp64 ? classify_as<double>(finetuning, cfg, a, out)
                                          : classify_as<float>(finetuning, cfg, a, out);
}

// ---- synth ------------------------------------------------------------------

struct SynthArgs {
  std::string checkpoint;
  std::string data;
  std::size_t object = 0;
  std::vector<std::size_t> source_views{0};
  std::size_t target_view = 0;
  std::string out;
};

int synth_cmd(const SynthArgs& a, std::ostream& out) {
  auto loaded = load_model<float>(a.checkpoint);
  const auto data = read_dataset(a.data);
  auto config = loaded.config;
  config.num_source_views = a.source_views.size();
  config.mask_ratio = 0.0;
  check_compatible(config, data);
  if (a.object >= data.size()) {
    throw std::out_of_range("object " + std::to_string(a.object) + " is out of range [0, " +
                            std::to_string(data.size()) + ")");
  }
  auto check_view = [&](std::size_t v) {
    if (v >= data.views) {
      throw std::out_of_range("view " + std::to_string(v) + " is out of range [0, " + std::to_string(data.views) + ")");
    }
  };
  for (auto v : a.source_views) check_view(v);
  check_view(a.target_view);

  const auto& sample = data.samples[a.object];
  const auto& shape = data.image;
  const Shape batch_shape{1, shape.channels, shape.height, shape.width};
  std::vector<Tensor<float>> sources;
  std::vector<std::vector<PoseInput>> source_poses;
  std::vector<RgbImage> panels;
  for (auto v : a.source_views) {
    const auto view = sample.view(v, shape);
    sources.emplace_back(batch_shape, std::vector<float>(view.begin(), view.end()));
    source_poses.push_back({PoseInput{v, sample.poses[v]}});
    panels.push_back(to_rgb(view, shape));
  }
  const std::vector<PoseInput> target_pose{PoseInput{a.target_view, sample.poses[a.target_view]}};
  const auto target_view = sample.view(a.target_view, shape);
  const Tensor<float> target(batch_shape, std::vector<float>(target_view.begin(), target_view.end()));

  NoGradGuard<float> no_grad;
  Rng rng(0);
  const auto synthesized = synthesize(sources, source_poses, target_pose, config, loaded.weights, 0.0, rng);
  const double err = mse(synthesized, target).item();
  panels.push_back(to_rgb(synthesized.data(), shape));
  panels.push_back(to_rgb(target_view, shape));
  write_ppm(a.out, hstack(panels));
  out << "object " << sample.object_id << " (" << shape_class_name(sample.label) << "), target view "
      << a.target_view << ": mse " << fixed(err) << " -> " << a.out << '\n';
  return kSuccess;
}

// ---- gradcheck --------------------------------------------------------------

struct GradcheckArgs {
  std::string level = "all";
  std::string inject_fault;
  std::uint64_t seed = 0;
};

int gradcheck_cmd(const GradcheckArgs& a, std::ostream& out) {
  std::vector<CheckLevel> levels;
  if (a.level == "all") {
    levels = {CheckLevel::ops, CheckLevel::blocks, CheckLevel::model};
  } else {
    levels = {parse_check_level(a.level)};
  }
  const auto start = std::chrono::steady_clock::now();
  bool ok = true;
  for (auto level : levels) {
    const auto report = run_gradcheck(level, a.seed, a.inject_fault);
    for (const auto& item : report.items) {
      char line[160];
      std::snprintf(line, sizeof(line), "[%-6s] %-26s max rel err %.3e  (tol %.0e, %zu entries)  %s",
                    std::string(to_string(level)).c_str(), item.name.c_str(), item.max_rel_error, item.tolerance,
                    item.entries, item.passed() ? "ok" : "FAIL");
      out << line << '\n';
    }
    ok = ok && report.passed();
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out << (ok ? "gradcheck passed" : "gradcheck FAILED") << " in " << fixed(seconds, 2) << " s";
  if (!a.inject_fault.empty()) out << " (fault injected into '" << a.inject_fault << "')";
  out << '\n';
  return ok ? kSuccess : kCheckFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pose-conditioned view-synthesis pretraining for multi-view images"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "vsa 0.1.0");

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Render the procedural multi-view train/test datasets");
  gen_cmd->add_option("--classes", gen.classes, "Number of shape classes")->check(CLI::Range(1, 8));
  gen_cmd->add_option("--objects", gen.objects, "Training objects");
  gen_cmd->add_option("--test-objects", gen.test_objects, "Test objects");
  gen_cmd->add_option("--views", gen.views, "Views per object")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--size", gen.size, "Image side in pixels")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.seed, "Master seed");
  gen_cmd->add_option("--jitter", gen.jitter, "Per-camera pose jitter in degrees")->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--workers", gen.workers, "Rendering threads")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();

  PretrainArgs pre;
  auto* pre_cmd = app.add_subcommand("pretrain", "Pretrain the encoder by view synthesis");
  pre.config.attach(*pre_cmd);
  pre_cmd->add_option("--data", pre.data, "Training dataset file");
  pre_cmd->add_option("--epochs", pre.epochs, "Total pretraining epochs");
  pre_cmd->add_option("--out", pre.out, "Output directory (metrics, checkpoint, config)");
  pre_cmd->add_option("--seed", pre.seed, "Run seed");
  pre_cmd->add_option("--resume", pre.resume, "Continue from a checkpoint")->check(CLI::ExistingFile);
  pre_cmd->add_option("--stop-after", pre.stop_after, "Stop after this many total steps");
  pre_cmd->add_option("--checkpoint-every", pre.checkpoint_every, "Checkpoint cadence in steps");
  pre_cmd->add_flag("--quiet", pre.quiet, "No per-epoch progress");

  ClassifyArgs probe_args, finetune_args;
  auto add_classify = [&](const char* name, const char* help, ClassifyArgs& c) {
    auto* cmd = app.add_subcommand(name, help);
    c.config.attach(*cmd);
    cmd->add_option("--checkpoint", c.checkpoint, "Pretrained checkpoint");
    cmd->add_flag("--scratch", c.scratch, "Use a randomly initialized encoder instead of a checkpoint");
    cmd->add_option("--train", c.train, "Training dataset file");
    cmd->add_option("--test", c.test, "Test dataset file");
    cmd->add_option("--views", c.views, "Views averaged per prediction (0 = all)");
    cmd->add_option("--epochs", c.epochs, "Training epochs");
    cmd->add_option("--seed", c.seed, "Run seed");
    cmd->add_flag("--shuffle-labels", c.shuffle_labels, "Train on permuted labels (chance-level control)");
    cmd->add_option("--out", c.out, "Output directory for metrics");
    return cmd;
  };
  auto* probe_cmd = add_classify("probe", "Linear probe on the frozen encoder", probe_args);
  auto* finetune_cmd = add_classify("finetune", "End-to-end fine-tuning of encoder and classifier", finetune_args);

  SynthArgs syn;
  auto* syn_cmd = app.add_subcommand("synth", "Write a source | synthesized | target image strip");
  syn_cmd->add_option("--checkpoint", syn.checkpoint, "Pretrained checkpoint")->required();
  syn_cmd->add_option("--data", syn.data, "Dataset file")->required();
  syn_cmd->add_option("--object", syn.object, "Object index in the dataset");
  syn_cmd->add_option("--source-views", syn.source_views, "Source view indices (comma separated)")
      ->delimiter(',')
      ->expected(1, 16);
  syn_cmd->add_option("--target-view", syn.target_view, "Target view index");
  syn_cmd->add_option("--out", syn.out, "Output PPM file")->required();

  GradcheckArgs gc;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient checks at fp64");
  gc_cmd->add_option("--level", gc.level, "ops, blocks, model or all")
      ->check(CLI::IsMember({"ops", "blocks", "model", "all"}));
  gc_cmd->add_option("--inject-fault", gc.inject_fault, "Corrupt one op's backward rule (negative control)");
  gc_cmd->add_option("--seed", gc.seed, "Seed for the random inputs");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsageError;
  }

  try {
    if (gen_cmd->parsed()) return gen_data(gen, out);
    if (pre_cmd->parsed()) return pretrain_cmd(pre, out, err);
    if (probe_cmd->parsed()) return classify_cmd(false, probe_args, out);
    if (finetune_cmd->parsed()) return classify_cmd(true, finetune_args, out);
    if (syn_cmd->parsed()) return synth_cmd(syn, out);
    if (gc_cmd->parsed()) return gradcheck_cmd(gc, out);
  } catch (const TrainingError& e) {
    err << "error: " << e.what() << '\n';
    return kCheckFailure;
  } catch (const std::logic_error& e) {
    // invalid_argument and out_of_range are usage errors; other logic errors
    // are failed internal checks.
    const bool usage = dynamic_cast<const std::invalid_argument*>(&e) != nullptr ||
                       dynamic_cast<const std::out_of_range*>(&e) != nullptr;
    err << "error: " << e.what() << '\n';
    return usage ? kUsageError : kCheckFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }
  return kUsageError;
}

}  // namespace vsa::cli
