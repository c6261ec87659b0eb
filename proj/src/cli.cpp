#include "softseg/cli.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "softseg/checkpoint.hpp"
#include "softseg/dataio.hpp"
#include "softseg/metrics.hpp"
#include "softseg/report.hpp"
#include "softseg/synth.hpp"
#include "softseg/train.hpp"

namespace softseg::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

double snap_threshold(double v) { return std::round(v * 1e9) / 1e9; }

std::string format_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

struct GenDataOptions {
  std::string out;
  SynthConfig synth;
  std::string shape = "ellipse";
};

struct FuseOptions {
  std::string manifest;
  std::string out;
};

struct TrainOptions {
  std::string manifest;
  std::string out;
  std::string config;
  std::string loss = "ce";
  std::size_t epochs = 40;
  std::size_t batch = 8;
  std::uint64_t seed = 0;
  std::size_t base_channels = 16;
  std::size_t depth = 2;
  double vflip_prob = 0.5;
  bool no_augment = false;
};

struct EvalOptions {
  std::string manifest;
  std::string checkpoint;
  std::string thresholds = "0.1:0.9:0.1";
  std::string out;
  std::string split = "val";
};

int cmd_gen_data(const GenDataOptions& o, std::ostream& out) {
  SynthConfig cfg = o.synth;
  cfg.shape = parse_shape_family(o.shape);
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const SynthSummary s = generate_synthetic(cfg, o.out);
  out << s.manifest_path.string() << "\n";
  return kExitOk;
}

int cmd_fuse(const FuseOptions& o, std::ostream& out) {
  const Manifest m = read_manifest(o.manifest);
  const std::vector<LoadedCase> cases = load_cases(m);
  const fs::path dir(o.out);
  for (const LoadedCase& c : cases) {
    write_raster(dir / (c.id + "_fused.sseg"), to_raster(c.fused));
    write_raster(dir / (c.id + "_variance.sseg"), to_raster(variance_map(c.fused)));
  }
  out << "fused " << cases.size() << " cases into " << dir.string() << "\n";
  return kExitOk;
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::string s = "epoch,train_loss,val_loss,val_dsc_mean,val_dsc_std,lr\n";
  for (const EpochRecord& r : history)
    s += std::to_string(r.epoch) + "," + format_g(r.train_loss) + "," + format_g(r.val_loss) + "," +
         format_g(r.val_dsc_mean) + "," + format_g(r.val_dsc_std) + "," + format_g(r.lr) + "\n";
  return s;
}

int cmd_train(const TrainOptions& o, const CLI::App& sub, std::ostream& out, std::ostream& err) {
  TinyUNetConfig model;
  TrainConfig cfg;
  if (!o.config.empty()) {
    json doc;
    try {
      doc = json::parse(read_file(o.config));
    } catch (const json::parse_error& e) {
      throw UsageError("invalid --config JSON: " + std::string(e.what()));
    }
    try {
      config_from_json(doc, model, cfg);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  // Explicit flags override the config file.
  if (o.config.empty() || sub.count("--loss")) cfg.loss = parse_loss(o.loss);
  if (o.config.empty() || sub.count("--epochs")) cfg.epochs = o.epochs;
  if (o.config.empty() || sub.count("--batch")) cfg.batch_size = o.batch;
  if (o.config.empty() || sub.count("--seed")) cfg.seed = o.seed;
  if (o.config.empty() || sub.count("--base-channels")) model.base_channels = o.base_channels;
  if (o.config.empty() || sub.count("--depth")) model.depth = o.depth;
  if (o.config.empty() || sub.count("--vflip-prob")) cfg.augment.vflip_prob = o.vflip_prob;
  if (sub.count("--no-augment")) cfg.augment.enabled = false;

  const Manifest m = read_manifest(o.manifest);
  const std::vector<LoadedCase> cases = load_cases(m);
  if (!cases.empty()) model.input_channels = cases.front().image.channels;
  try {
    cfg.validate();
    model.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const Dataset data = split_dataset(cases);

  TrainResult result;
  try {
    result = train(data, model, cfg, [&](const EpochRecord& r) {
      out << "epoch " << r.epoch << " loss " << format_g(r.train_loss) << " val_loss "
          << format_g(r.val_loss) << " val_dsc " << format_g(r.val_dsc_mean) << " +- "
          << format_g(r.val_dsc_std) << "\n";
    });
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << " at epoch " << e.epoch() << ", step " << e.step() << "\n";
    return kExitRuntime;
  }

  const fs::path ckpt(o.out);
  write_checkpoint(ckpt, result.params);
  json sidecar = config_to_json(model, cfg);
  sidecar["seed"] = cfg.seed;
  sidecar["parameter_count"] = parameter_count(model);
  write_file_atomic(sidecar_path(ckpt), sidecar.dump(2) + "\n");
  write_file_atomic(history_path(ckpt), history_csv(result.history));
  out << "wrote " << ckpt.string() << "\n";
  return kExitOk;
}

int cmd_eval(const EvalOptions& o, std::ostream& out) {
  const std::vector<double> thresholds = parse_thresholds(o.thresholds);

  const fs::path ckpt(o.checkpoint);
  if (!fs::exists(ckpt)) throw IoError("checkpoint not found: " + ckpt.string());
  if (!fs::exists(sidecar_path(ckpt)))
    throw IoError("checkpoint config not found: " + sidecar_path(ckpt).string());
  TinyUNetConfig model;
  TrainConfig cfg;
  const json sidecar = json::parse(read_file(sidecar_path(ckpt)));
  config_from_json(sidecar, model, cfg);
  const Parameters params = read_checkpoint(ckpt);
  try {
    check_parameters(model, params);
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error("checkpoint does not match its config: " + std::string(e.what()));
  }

  const Manifest m = read_manifest(o.manifest);
  std::vector<LoadedCase> all = load_cases(m);
  std::vector<const LoadedCase*> cases;
  bool any_val = false;
  for (const LoadedCase& c : all) any_val = any_val || (c.split && *c.split == Split::val);
  for (const LoadedCase& c : all) {
    const bool is_val = c.split && *c.split == Split::val;
    if (o.split == "all" || (o.split == "val" && (is_val || !any_val)) ||
        (o.split == "train" && !is_val))
      cases.push_back(&c);
  }
  if (cases.empty()) throw std::runtime_error("no cases selected for evaluation");
  for (const LoadedCase* c : cases)
    if (c->image.channels != model.input_channels)
      throw std::runtime_error("case '" + c->id + "' has " + std::to_string(c->image.channels) +
                               " channels, checkpoint expects " + std::to_string(model.input_channels));

  EvaluationReport report;
  report.sweeps.resize(cases.size());
  report.ged.resize(cases.size());
  std::vector<std::string> errors(cases.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cases.size(); i = next++) {
      try {
        const LoadedCase& c = *cases[i];
        const SoftMask pred = predict(model, params, c.image);
        report.sweeps[i] = CaseSweep{c.id, threshold_sweep(pred, c.fused, thresholds).rows};
        report.ged[i] = CaseGed{c.id, ged_squared_deterministic(c.annotations, threshold(pred, 0.5))};
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const unsigned n_threads = std::max(1u, std::min<unsigned>(evaluation_threads(),
                                                             static_cast<unsigned>(cases.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  for (std::size_t i = 0; i < cases.size(); ++i)
    if (!errors[i].empty()) throw std::runtime_error("case '" + cases[i]->id + "': " + errors[i]);

  std::vector<std::vector<MetricRow>> rows;
  for (const CaseSweep& s : report.sweeps) rows.push_back(s.rows);
  report.summary = summarize_sweeps(rows);
  report.metadata = {{"seed", cfg.seed},
                     {"loss", loss_name(cfg.loss)},
                     {"split", o.split},
                     {"cases", cases.size()},
                     {"thresholds", thresholds},
                     {"ged_threshold", 0.5},
                     {"model", sidecar.at("model")}};
  write_report(o.out, report);
  out << "evaluated " << cases.size() << " cases into " << o.out << "\n";
  return kExitOk;
}

}  // namespace

std::vector<double> parse_thresholds(const std::string& text) {
  std::vector<double> out;
  auto to_double = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw UsageError("invalid threshold '" + s + "' in '" + text + "'");
    return v;
  };
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw UsageError("threshold range must be start:stop:step, got '" + text + "'");
    const double start = to_double(parts[0]), stop = to_double(parts[1]), step = to_double(parts[2]);
    if (!(step > 0.0) || stop < start) throw UsageError("threshold range '" + text + "' is empty");
    const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (std::size_t i = 0; i < n; ++i) out.push_back(snap_threshold(start + static_cast<double>(i) * step));
  } else {
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ',');) out.push_back(snap_threshold(to_double(p)));
  }
  if (out.empty()) throw UsageError("no thresholds given");
  for (double t : out)
    if (!(t > 0.0 && t < 1.0)) throw UsageError("threshold " + format_g(t) + " outside (0,1)");
  return out;
}

unsigned evaluation_threads() {
  if (const char* env = std::getenv("SOFTSEG_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Soft-label segmentation toolkit: fuse annotations, train, evaluate", "softseg"};
  app.require_subcommand(1);

  GenDataOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic multi-annotator dataset");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--cases", gen.synth.cases, "Number of cases")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--annotators", gen.synth.annotators, "Annotators per case")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--size", gen.synth.size, "Image width and height")->check(CLI::Range(8, 4096));
  gen_cmd->add_option("--seed", gen.synth.seed, "Random seed");
  gen_cmd->add_option("--shape", gen.shape, "Shape family")->check(CLI::IsMember({"ellipse", "blob"}));
  gen_cmd->add_option("--boundary-noise", gen.synth.boundary_noise, "Annotator boundary noise (pixels)")
      ->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--annotator-bias", gen.synth.annotator_bias, "Annotator offset scale (pixels)")
      ->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--image-noise", gen.synth.image_noise, "Image intensity noise")
      ->check(CLI::NonNegativeNumber);

  FuseOptions fuse;
  auto* fuse_cmd = app.add_subcommand("fuse", "Write fused soft labels and variance maps");
  fuse_cmd->add_option("--manifest", fuse.manifest, "Dataset manifest")->required();
  fuse_cmd->add_option("--out", fuse.out, "Output directory")->required();

  TrainOptions tr;
  auto* train_cmd = app.add_subcommand("train", "Train the segmentation network");
  train_cmd->add_option("--manifest", tr.manifest, "Dataset manifest")->required();
  train_cmd->add_option("--out", tr.out, "Checkpoint path")->required();
  train_cmd->add_option("--config", tr.config, "Training config JSON");
  train_cmd->add_option("--loss", tr.loss, "Loss: ce or dice")->check(CLI::IsMember({"ce", "dice"}));
  train_cmd->add_option("--epochs", tr.epochs, "Epochs")->check(CLI::PositiveNumber);
  train_cmd->add_option("--batch", tr.batch, "Images per batch")->check(CLI::PositiveNumber);
  train_cmd->add_option("--seed", tr.seed, "Random seed");
  train_cmd->add_option("--base-channels", tr.base_channels, "Channels at full resolution")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--depth", tr.depth, "Down/up levels")->check(CLI::Range(1, 8));
  train_cmd->add_option("--vflip-prob", tr.vflip_prob, "Vertical flip probability")->check(CLI::Range(0.0, 1.0));
  train_cmd->add_flag("--no-augment", tr.no_augment, "Disable augmentation");

  EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "Threshold sweep and GED report");
  eval_cmd->add_option("--manifest", ev.manifest, "Dataset manifest")->required();
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "Checkpoint path")->required();
  eval_cmd->add_option("--thresholds", ev.thresholds, "start:stop:step or comma list");
  eval_cmd->add_option("--out", ev.out, "Report directory")->required();
  eval_cmd->add_option("--split", ev.split, "Cases to evaluate: val, train or all")
      ->check(CLI::IsMember({"val", "train", "all"}));

  std::vector<std::string> argv_storage{"softseg"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (std::string& s : argv_storage) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen_cmd) return cmd_gen_data(gen, out);
    if (*fuse_cmd) return cmd_fuse(fuse, out);
    if (*train_cmd) return cmd_train(tr, *train_cmd, out, err);
    if (*eval_cmd) return cmd_eval(ev, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace softseg::cli
