#include "advshape/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "advshape/dataset.hpp"
#include "advshape/errors.hpp"
#include "advshape/model.hpp"
#include "advshape/png_io.hpp"
#include "advshape/report.hpp"
#include "advshape/search.hpp"
#include "advshape/shaping.hpp"
#include "advshape/sweep.hpp"

namespace advshape {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string pct(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

struct DatasetFlags {
  std::uint64_t seed = 11;
  int count = 64;
  int size = 32;
  int classes = 3;
  std::string png_dir;
  std::string label_file;
};

void add_dataset_flags(CLI::App* cmd, DatasetFlags& flags) {
  cmd->add_option("--dataset-seed", flags.seed, "Toy dataset generation seed");
  cmd->add_option("--count", flags.count, "Toy dataset image count");
  cmd->add_option("--size", flags.size, "Toy dataset image size in pixels");
  cmd->add_option("--classes", flags.classes, "Toy dataset class count (2-5)");
  cmd->add_option("--png-dir", flags.png_dir, "Directory of PNG images (instead of toy data)");
  cmd->add_option("--labels", flags.label_file, "CSV label file: filename,label");
}

DatasetSource dataset_from_flags(const DatasetFlags& flags) {
  DatasetSource src;
  if (!flags.png_dir.empty() || !flags.label_file.empty()) {
    if (flags.png_dir.empty() || flags.label_file.empty()) {
      throw UsageError("--png-dir and --labels must be given together");
    }
    src.kind = DatasetSource::Kind::PngDir;
    src.png_dir = flags.png_dir;
    src.label_file = flags.label_file;
  } else {
    src.kind = DatasetSource::Kind::Toy;
    src.seed = flags.seed;
    src.count = flags.count;
    src.size = flags.size;
    src.class_count = flags.classes;
  }
  return src;
}

void apply_schedule_json(const json& j, StrengthSchedule& sched) {
  if (j.contains("initial")) sched.initial = j.at("initial").get<double>();
  if (j.contains("step")) sched.step = j.at("step").get<double>();
  if (j.contains("boost")) sched.failure_boost = j.at("boost").get<double>();
  if (j.contains("min_strength")) sched.min_strength = j.at("min_strength").get<double>();
  if (j.contains("max_attempts")) sched.max_attempts = j.at("max_attempts").get<int>();
}

/// JSON config file for `sweep`; explicit flags override these values.
void apply_config_file(const std::string& path, SweepConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DecodeError("config file is not valid JSON: " + std::string(e.what()));
  }

  try {
    if (j.contains("attacks")) {
      cfg.attacks.clear();
      for (const auto& name : j.at("attacks")) {
        cfg.attacks.push_back(attack_from_name(name.get<std::string>()));
      }
    }
    if (j.contains("alphas")) cfg.alphas = j.at("alphas").get<std::vector<double>>();
    if (j.contains("sigma")) cfg.sigma = j.at("sigma").get<double>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("workers")) cfg.workers = j.at("workers").get<int>();
    if (j.contains("keep_images")) cfg.keep_images = j.at("keep_images").get<bool>();
    if (j.contains("model")) cfg.model_path = j.at("model").get<std::string>();
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("dataset")) {
      const json& d = j.at("dataset");
      const std::string kind = d.value("kind", "toy");
      if (kind == "toy") {
        cfg.dataset.kind = DatasetSource::Kind::Toy;
        if (d.contains("seed")) cfg.dataset.seed = d.at("seed").get<std::uint64_t>();
        if (d.contains("count")) cfg.dataset.count = d.at("count").get<int>();
        if (d.contains("size")) cfg.dataset.size = d.at("size").get<int>();
        if (d.contains("classes")) cfg.dataset.class_count = d.at("classes").get<int>();
      } else if (kind == "png") {
        cfg.dataset.kind = DatasetSource::Kind::PngDir;
        cfg.dataset.png_dir = d.at("dir").get<std::string>();
        cfg.dataset.label_file = d.at("labels").get<std::string>();
      } else {
        throw DecodeError("config dataset.kind must be \"toy\" or \"png\"");
      }
    }
    if (j.contains("fgsm")) apply_schedule_json(j.at("fgsm"), cfg.fgsm_schedule);
    if (j.contains("mim")) {
      const json& m = j.at("mim");
      apply_schedule_json(m, cfg.mim_schedule);
      if (m.contains("iterations")) cfg.attack_params.mim.iterations = m.at("iterations").get<int>();
      if (m.contains("decay")) cfg.attack_params.mim.decay = m.at("decay").get<double>();
    }
    if (j.contains("cw")) {
      const json& c = j.at("cw");
      apply_schedule_json(c, cfg.cw_schedule);
      if (c.contains("c")) cfg.attack_params.cw.c = c.at("c").get<double>();
      if (c.contains("kappa")) cfg.attack_params.cw.kappa = c.at("kappa").get<double>();
      if (c.contains("step_size")) cfg.attack_params.cw.step_size = c.at("step_size").get<double>();
    }
  } catch (const json::exception& e) {
    throw DecodeError("config file has a bad field: " + std::string(e.what()));
  }
}

void print_search_result(std::ostream& out, const char* tag, const SearchResult& r) {
  out << tag << ": success=" << (r.success ? "true" : "false");
  if (r.success) {
    out << " l2=" << num(r.best_l2) << " strength=" << num(r.strength_at_best)
        << " fallback=" << (r.fallback_used ? "true" : "false");
  }
  out << " attempts=" << r.attempts << "\n";
}

int run_train(const DatasetFlags& dflags, const std::string& out_path, std::uint64_t model_seed,
              TrainConfig tcfg, std::ostream& out) {
  const ToyDataset data =
      generate_toy_dataset(dflags.seed, dflags.count, dflags.size, dflags.classes);
  Model model = make_toy_classifier(dflags.size, dflags.classes, model_seed);
  const TrainResult result = train(model, data, tcfg);
  save_model(result.model, out_path);
  out << "trained " << dflags.classes << "-class model on " << dflags.count << " images: accuracy "
      << num(result.accuracy) << ", mean loss " << num(result.mean_loss) << "\n";
  out << "saved: " << out_path << "\n";
  return 0;
}

int run_report(const std::string& input, std::ostream& out) {
  const std::vector<ImprovementColumn> columns = load_improvement_columns(input);
  const ImprovementTable table = improvement_table(columns);
  for (const ImprovementRow& row : table.rows) {
    out << row.label << ": baseline " << num(row.baseline_mean) << ", best alpha "
        << num(row.best_alpha) << ", best mean " << num(row.best_mean) << ", improvement "
        << pct(row.improvement_pct) << "%\n";
  }
  out << "mean improvement: " << pct(table.mean_improvement_pct) << "%\n";
  return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adversarial image generation with YUV chroma scaling and Gaussian masking"};
  app.require_subcommand(1);

  // train
  CLI::App* train_cmd = app.add_subcommand("train", "Train the toy classifier and save it");
  DatasetFlags train_data;
  add_dataset_flags(train_cmd, train_data);
  std::string train_out;
  std::uint64_t model_seed = 101;
  TrainConfig tcfg;
  tcfg.seed = 7;
  train_cmd->add_option("--out", train_out, "Output model path")->required();
  train_cmd->add_option("--model-seed", model_seed, "Weight initialization seed");
  train_cmd->add_option("--seed", tcfg.seed, "Training shuffle seed");
  train_cmd->add_option("--epochs", tcfg.epochs, "Training epochs");
  train_cmd->add_option("--lr", tcfg.learning_rate, "Learning rate");
  train_cmd->add_option("--batch", tcfg.batch_size, "Mini-batch size");

  // shared attack/schedule flags (attack + sweep)
  struct AttackFlags {
    std::vector<std::string> attacks{"fgsm", "mim", "cw"};
    double sigma = 0.0;
    MimConfig mim;
    CwConfig cw;
    StrengthSchedule fgsm_sched = StrengthSchedule::defaults_for(AttackKind::Fgsm);
    StrengthSchedule mim_sched = StrengthSchedule::defaults_for(AttackKind::Mim);
    StrengthSchedule cw_sched = StrengthSchedule::defaults_for(AttackKind::CwL2);
  };
  const auto add_attack_flags = [](CLI::App* cmd, AttackFlags& f) {
    cmd->add_option("--sigma", f.sigma, "Gaussian mask sigma in pixels (0: auto)");
    cmd->add_option("--mim-iterations", f.mim.iterations, "MIM iteration count T");
    cmd->add_option("--mim-decay", f.mim.decay, "MIM momentum decay mu");
    cmd->add_option("--cw-c", f.cw.c, "C&W margin weight c");
    cmd->add_option("--cw-kappa", f.cw.kappa, "C&W confidence margin kappa");
    cmd->add_option("--cw-step", f.cw.step_size, "C&W gradient descent step size");
    cmd->add_option("--fgsm-initial", f.fgsm_sched.initial, "FGSM schedule: initial epsilon");
    cmd->add_option("--fgsm-step", f.fgsm_sched.step, "FGSM schedule: epsilon decrement");
    cmd->add_option("--fgsm-boost", f.fgsm_sched.failure_boost, "FGSM schedule: failure boost");
    cmd->add_option("--fgsm-attempts", f.fgsm_sched.max_attempts, "FGSM schedule: attempt budget");
    cmd->add_option("--mim-initial", f.mim_sched.initial, "MIM schedule: initial epsilon");
    cmd->add_option("--mim-step", f.mim_sched.step, "MIM schedule: epsilon decrement");
    cmd->add_option("--mim-attempts", f.mim_sched.max_attempts, "MIM schedule: attempt budget");
    cmd->add_option("--cw-initial", f.cw_sched.initial, "C&W schedule: initial iterations");
    cmd->add_option("--cw-step-iters", f.cw_sched.step, "C&W schedule: iteration increment");
    cmd->add_option("--cw-attempts", f.cw_sched.max_attempts, "C&W schedule: attempt budget");
  };

  // attack (single image)
  CLI::App* attack_cmd = app.add_subcommand("attack", "Search one image for minimal noise");
  DatasetFlags attack_data;
  add_dataset_flags(attack_cmd, attack_data);
  AttackFlags attack_flags;
  add_attack_flags(attack_cmd, attack_flags);
  std::string attack_model, attack_image, attack_out_dir;
  int attack_label = -1, toy_index = -1;
  double attack_alpha = 0.6;
  std::string attack_kind_name = "fgsm";
  attack_cmd->add_option("--model", attack_model, "Model file")->required();
  attack_cmd->add_option("--image", attack_image, "Input PNG (requires --label)");
  attack_cmd->add_option("--label", attack_label, "True class of --image");
  attack_cmd->add_option("--toy-index", toy_index, "Attack the i-th toy dataset image instead");
  attack_cmd->add_option("--attack", attack_kind_name, "fgsm, mim or cw");
  attack_cmd->add_option("--alpha", attack_alpha, "Chroma noise scale in [0,1]");
  attack_cmd->add_option("--out-dir", attack_out_dir, "Write original/baseline/shaped PNGs here");

  // sweep
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Run the full attack x alpha grid");
  DatasetFlags sweep_data;
  add_dataset_flags(sweep_cmd, sweep_data);
  AttackFlags sweep_flags;
  add_attack_flags(sweep_cmd, sweep_flags);
  std::string sweep_model, sweep_out, sweep_config;
  std::vector<double> sweep_alphas;
  std::uint64_t sweep_seed = 0;
  int sweep_workers = 0;
  bool sweep_keep_images = false;
  sweep_cmd->add_option("--model", sweep_model, "Model file");
  sweep_cmd->add_option("--out", sweep_out, "Output directory for report.csv/report.json");
  sweep_cmd->add_option("--config", sweep_config, "JSON config file (flags override it)");
  sweep_cmd->add_option("--attacks", sweep_flags.attacks, "Attacks to run")->delimiter(',');
  sweep_cmd->add_option("--alphas", sweep_alphas, "Alpha values")->delimiter(',');
  sweep_cmd->add_option("--seed", sweep_seed, "Sweep seed (recorded; seeds toy data unless --dataset-seed)");
  sweep_cmd->add_option("--workers", sweep_workers, "Worker threads (0: ADVSHAPE_WORKERS or 1)");
  sweep_cmd->add_flag("--keep-images", sweep_keep_images, "Also write per-cell PNGs");

  // report
  CLI::App* report_cmd = app.add_subcommand("report", "Print improvement table from a report or fixture");
  std::string report_input;
  report_cmd->add_option("--input", report_input, "report.json or fixture file")->required();

  // enhance
  CLI::App* enhance_cmd =
      app.add_subcommand("enhance", "Shape the noise between an original and adversarial PNG");
  std::string enh_image, enh_adv, enh_out, enh_model;
  double enh_alpha = 0.6, enh_sigma = 0.0;
  int enh_label = -1;
  enhance_cmd->add_option("--image", enh_image, "Original PNG")->required();
  enhance_cmd->add_option("--adv", enh_adv, "Adversarial PNG (noise = adv - image)")->required();
  enhance_cmd->add_option("--out", enh_out, "Output PNG")->required();
  enhance_cmd->add_option("--alpha", enh_alpha, "Chroma noise scale in [0,1]");
  enhance_cmd->add_option("--sigma", enh_sigma, "Mask sigma in pixels (0: auto)");
  enhance_cmd->add_option("--model", enh_model, "Optional model to classify the result");
  enhance_cmd->add_option("--label", enh_label, "True class for the optional model check");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (train_cmd->parsed()) {
      return run_train(train_data, train_out, model_seed, tcfg, out);
    }

    if (attack_cmd->parsed()) {
      const Model model = load_model(attack_model);
      RgbImage img;
      int label = attack_label;
      if (!attack_image.empty()) {
        if (label < 0) throw UsageError("--image requires --label");
        img = load_png(attack_image);
      } else if (toy_index >= 0) {
        const ToyDataset data = generate_toy_dataset(attack_data.seed, attack_data.count,
                                                     attack_data.size, attack_data.classes);
        if (toy_index >= static_cast<int>(data.images.size())) {
          throw UsageError("--toy-index out of range");
        }
        img = data.images[toy_index];
        label = data.labels[toy_index];
      } else {
        throw UsageError("attack needs --image or --toy-index");
      }

      AttackConfig attack;
      attack.kind = attack_from_name(attack_kind_name);
      attack.mim = attack_flags.mim;
      attack.cw = attack_flags.cw;
      const StrengthSchedule& sched = attack.kind == AttackKind::Fgsm ? attack_flags.fgsm_sched
                                      : attack.kind == AttackKind::Mim ? attack_flags.mim_sched
                                                                       : attack_flags.cw_sched;
      const double sigma =
          attack_flags.sigma > 0.0 ? attack_flags.sigma : default_sigma(img.width, img.height);
      const GaussianMask mask = make_mask(img.width, img.height, sigma);
      const ShapeConfig shape{attack_alpha, sigma};

      const SearchResult result =
          search_with_fallback(model, img, label, attack, shape, mask, sched);
      print_search_result(out, attack_name(attack.kind).c_str(), result);
      if (!attack_out_dir.empty() && result.success) {
        std::vector<CellImages> cells(1);
        cells[0].image_id = toy_index >= 0 ? toy_index : 0;
        cells[0].attack = attack_name(attack.kind);
        cells[0].alpha = attack_alpha;
        cells[0].original = img;
        cells[0].shaped = result.best_image;
        emit_images(cells, attack_out_dir);
      }
      return result.success ? 0 : 1;
    }

    if (sweep_cmd->parsed()) {
      SweepConfig cfg;
      if (!sweep_config.empty()) apply_config_file(sweep_config, cfg);

      // Flags override the config file only when actually given.
      const auto given = [&](const char* name) { return sweep_cmd->count(name) > 0; };
      if (given("--model")) cfg.model_path = sweep_model;
      if (given("--out")) cfg.output_dir = sweep_out;
      if (given("--seed")) cfg.seed = sweep_seed;
      if (given("--workers")) cfg.workers = sweep_workers;
      if (given("--keep-images")) cfg.keep_images = sweep_keep_images;
      if (given("--sigma")) cfg.sigma = sweep_flags.sigma;
      if (given("--alphas")) cfg.alphas = sweep_alphas;
      if (given("--attacks")) {
        cfg.attacks.clear();
        for (const std::string& name : sweep_flags.attacks) {
          cfg.attacks.push_back(attack_from_name(name));
        }
      }
      if (given("--png-dir") || given("--labels")) {
        DatasetFlags flags = sweep_data;
        cfg.dataset = dataset_from_flags(flags);
      } else {
        if (sweep_config.empty()) cfg.dataset = dataset_from_flags(sweep_data);
        if (given("--dataset-seed")) cfg.dataset.seed = sweep_data.seed;
        else if (given("--seed")) cfg.dataset.seed = sweep_seed;
        if (given("--count")) cfg.dataset.count = sweep_data.count;
        if (given("--size")) cfg.dataset.size = sweep_data.size;
        if (given("--classes")) cfg.dataset.class_count = sweep_data.classes;
      }
      if (given("--mim-iterations")) cfg.attack_params.mim.iterations = sweep_flags.mim.iterations;
      if (given("--mim-decay")) cfg.attack_params.mim.decay = sweep_flags.mim.decay;
      if (given("--cw-c")) cfg.attack_params.cw.c = sweep_flags.cw.c;
      if (given("--cw-kappa")) cfg.attack_params.cw.kappa = sweep_flags.cw.kappa;
      if (given("--cw-step")) cfg.attack_params.cw.step_size = sweep_flags.cw.step_size;
      if (given("--fgsm-initial")) cfg.fgsm_schedule.initial = sweep_flags.fgsm_sched.initial;
      if (given("--fgsm-step")) cfg.fgsm_schedule.step = sweep_flags.fgsm_sched.step;
      if (given("--fgsm-boost")) cfg.fgsm_schedule.failure_boost = sweep_flags.fgsm_sched.failure_boost;
      if (given("--fgsm-attempts")) cfg.fgsm_schedule.max_attempts = sweep_flags.fgsm_sched.max_attempts;
      if (given("--mim-initial")) cfg.mim_schedule.initial = sweep_flags.mim_sched.initial;
      if (given("--mim-step")) cfg.mim_schedule.step = sweep_flags.mim_sched.step;
      if (given("--mim-attempts")) cfg.mim_schedule.max_attempts = sweep_flags.mim_sched.max_attempts;
      if (given("--cw-initial")) cfg.cw_schedule.initial = sweep_flags.cw_sched.initial;
      if (given("--cw-step-iters")) cfg.cw_schedule.step = sweep_flags.cw_sched.step;
      if (given("--cw-attempts")) cfg.cw_schedule.max_attempts = sweep_flags.cw_sched.max_attempts;

      const SweepReport report = run_sweep(cfg);
      out << "images: " << report.image_count << " kept, " << report.skipped_images.size()
          << " skipped\n";
      for (const AttackAggregate& agg : report.aggregates) {
        out << agg.attack << ": baseline " << num(agg.baseline_mean) << ", best alpha "
            << num(agg.best_alpha) << ", best mean " << num(agg.best_mean) << ", improvement "
            << pct(agg.improvement_pct) << "%, fallback rate " << num(agg.fallback_rate) << "\n";
      }
      out << "mean improvement: " << pct(report.mean_improvement_pct) << "%\n";
      if (!cfg.output_dir.empty()) out << "report written to " << cfg.output_dir << "\n";
      return 0;
    }

    if (report_cmd->parsed()) {
      return run_report(report_input, out);
    }

    if (enhance_cmd->parsed()) {
      const RgbImage original = load_png(enh_image);
      const RgbImage adversarial = load_png(enh_adv);
      if (original.width != adversarial.width || original.height != adversarial.height) {
        throw UsageError("enhance: image sizes differ");
      }
      const NoiseField noise = image_difference(adversarial, original);
      const double sigma =
          enh_sigma > 0.0 ? enh_sigma : default_sigma(original.width, original.height);
      const GaussianMask mask = make_mask(original.width, original.height, sigma);
      const RgbImage shaped = compose_adversarial(original, noise, {enh_alpha, sigma}, mask);
      save_png(shaped, enh_out);
      out << "l2 before: " << num(l2_distance(adversarial, original))
          << ", after: " << num(l2_distance(shaped, original)) << "\n";
      if (!enh_model.empty()) {
        const Model model = load_model(enh_model);
        const int predicted = predict_class(model, shaped);
        out << "predicted class: " << predicted;
        if (enh_label >= 0) {
          out << " (" << (predicted != enh_label ? "still adversarial" : "back to true class")
              << ")";
        }
        out << "\n";
      }
      return 0;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ModelFormatError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const ModelVersionError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const DecodeError& e) {
    err << "error: " << e.what() << "\n";
    return 4;
  } catch (const UnsupportedFormatError& e) {
    err << "error: " << e.what() << "\n";
    return 4;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return 5;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  err << app.help();
  return 2;
}

}  // namespace advshape
