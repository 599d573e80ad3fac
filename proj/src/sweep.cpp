#include "advshape/sweep.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "advshape/errors.hpp"
#include "advshape/png_io.hpp"
#include "advshape/shaping.hpp"

namespace advshape {

namespace {

namespace fs = std::filesystem;

std::string alpha_label(double alpha) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", alpha);
  return buf;
}

/// Index-scheduled worker pool; output slots are preassigned so scheduling
/// never affects results. The first exception wins and is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int count = static_cast<int>(std::min<std::size_t>(workers, n));
  pool.reserve(count);
  for (int t = 0; t < count; ++t) pool.emplace_back(body);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

const StrengthSchedule& schedule_for(const SweepConfig& cfg, AttackKind kind) {
  switch (kind) {
    case AttackKind::Fgsm: return cfg.fgsm_schedule;
    case AttackKind::Mim: return cfg.mim_schedule;
    case AttackKind::CwL2: return cfg.cw_schedule;
  }
  throw UsageError("unknown attack kind");
}

/// Attack-level failures (degenerate gradients, numeric blowups) become
/// failed cells rather than aborting the sweep.
SearchResult guarded_search(const Model& model, const RgbImage& img, int label,
                            const AttackConfig& attack, const ShapeConfig& shape,
                            const GaussianMask& mask, const StrengthSchedule& sched,
                            bool shaping_enabled) {
  try {
    return search_minimal(model, img, label, attack, shape, mask, sched, shaping_enabled);
  } catch (const DegenerateGradientError&) {
    return SearchResult{};
  } catch (const NumericError&) {
    return SearchResult{};
  }
}

}  // namespace

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("ADVSHAPE_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<int>(v);
  }
  return 1;
}

ToyDataset load_png_dataset(const std::string& dir, const std::string& label_file) {
  std::ifstream in(label_file);
  if (!in) throw IoError("cannot open label file: " + label_file);

  ToyDataset data;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const std::size_t comma = line.rfind(',');
    if (comma == std::string::npos) {
      throw DecodeError("label file line " + std::to_string(line_no) + ": expected filename,label");
    }
    const std::string name = line.substr(0, comma);
    int label = 0;
    try {
      label = std::stoi(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw DecodeError("label file line " + std::to_string(line_no) + ": bad label");
    }
    if (label < 0) throw DecodeError("label file line " + std::to_string(line_no) + ": bad label");
    data.images.push_back(load_png((fs::path(dir) / name).string()));
    data.labels.push_back(label);
    data.class_count = std::max(data.class_count, label + 1);
  }
  if (data.images.empty()) throw DecodeError("label file lists no images: " + label_file);
  return data;
}

SweepReport run_sweep(const SweepConfig& cfg, const Model& model, const ToyDataset& data,
                      std::vector<CellImages>* cells) {
  if (cfg.attacks.empty()) throw UsageError("sweep: attack list is empty");
  if (cfg.alphas.empty()) throw UsageError("sweep: alpha list is empty");
  for (double a : cfg.alphas) {
    if (a < 0.0 || a > 1.0) throw UsageError("sweep: alpha values must be in [0,1]");
  }
  if (data.images.empty()) throw UsageError("sweep: dataset is empty");

  SweepReport report;
  report.seed = cfg.seed;
  for (AttackKind kind : cfg.attacks) report.attacks.push_back(attack_name(kind));
  report.alphas = cfg.alphas;

  // Kept = clean images the model classifies correctly; the rest are
  // reported, not attacked.
  std::vector<int> kept;
  for (std::size_t i = 0; i < data.images.size(); ++i) {
    if (predict_class(model, data.images[i]) == data.labels[i]) {
      kept.push_back(static_cast<int>(i));
    } else {
      report.skipped_images.push_back(static_cast<int>(i));
    }
  }
  report.image_count = static_cast<int>(kept.size());
  if (kept.empty()) {
    finalize_report(report);
    return report;
  }

  // One mask per distinct image size.
  std::vector<GaussianMask> masks(kept.size());
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const RgbImage& img = data.images[kept[k]];
    const double sigma = cfg.sigma > 0.0 ? cfg.sigma : default_sigma(img.width, img.height);
    bool found = false;
    for (std::size_t j = 0; j < k; ++j) {
      if (masks[j].width == img.width && masks[j].height == img.height) {
        masks[k] = masks[j];
        found = true;
        break;
      }
    }
    if (!found) masks[k] = make_mask(img.width, img.height, sigma);
  }
  report.sigma = cfg.sigma > 0.0 ? cfg.sigma : masks[0].sigma;

  const int workers = resolve_workers(cfg.workers);
  const std::size_t n_attacks = cfg.attacks.size();
  const std::size_t n_alphas = cfg.alphas.size();
  const std::size_t n_base = kept.size() * n_attacks;

  // Pass 1: one baseline (unshaped) search per (image, attack).
  std::vector<SearchResult> baselines(n_base);
  parallel_for(n_base, workers, [&](std::size_t job) {
    const std::size_t k = job / n_attacks;
    const AttackKind kind = cfg.attacks[job % n_attacks];
    AttackConfig attack = cfg.attack_params;
    attack.kind = kind;
    const ShapeConfig shape{1.0, masks[k].sigma};
    baselines[job] = guarded_search(model, data.images[kept[k]], data.labels[kept[k]], attack,
                                    shape, masks[k], schedule_for(cfg, kind), false);
  });

  // Pass 2: one shaped search per (image, attack, alpha), then per-cell
  // fallback against the shared baseline (identical to search_with_fallback
  // because searches are deterministic).
  const std::size_t n_cells = n_base * n_alphas;
  std::vector<SweepRow> rows(n_cells);
  std::vector<CellImages> cell_images(cells && cfg.keep_images ? n_cells : 0);
  parallel_for(n_cells, workers, [&](std::size_t job) {
    const std::size_t base_job = job / n_alphas;
    const std::size_t k = base_job / n_attacks;
    const AttackKind kind = cfg.attacks[base_job % n_attacks];
    const double alpha = cfg.alphas[job % n_alphas];
    const RgbImage& img = data.images[kept[k]];
    const int label = data.labels[kept[k]];

    AttackConfig attack = cfg.attack_params;
    attack.kind = kind;
    const ShapeConfig shape{alpha, masks[k].sigma};
    SearchResult shaped = guarded_search(model, img, label, attack, shape, masks[k],
                                         schedule_for(cfg, kind), true);
    const SearchResult& baseline = baselines[base_job];

    const bool use_baseline =
        baseline.success && (!shaped.success || baseline.best_l2 < shaped.best_l2);
    const SearchResult& chosen = use_baseline ? baseline : shaped;

    SweepRow row;
    row.image_id = kept[k];
    row.attack = attack_name(kind);
    row.alpha = round_sig6(alpha);
    row.baseline_l2 = round_sig6(baseline.success ? baseline.best_l2 : 0.0);
    row.shaped_l2 = round_sig6(chosen.success ? chosen.best_l2 : 0.0);
    row.strength = round_sig6(chosen.success ? chosen.strength_at_best : 0.0);
    row.attempts = chosen.attempts;
    row.success = chosen.success;
    row.fallback_used = use_baseline;
    rows[job] = std::move(row);

    if (!cell_images.empty()) {
      CellImages ci;
      ci.image_id = kept[k];
      ci.attack = attack_name(kind);
      ci.alpha = alpha;
      ci.original = img;
      if (baseline.success) ci.baseline = baseline.best_image;
      if (chosen.success) ci.shaped = chosen.best_image;
      cell_images[job] = std::move(ci);
    }
  });

  report.rows = std::move(rows);
  finalize_report(report);
  if (cells && cfg.keep_images) {
    cells->insert(cells->end(), cell_images.begin(), cell_images.end());
  }
  return report;
}

SweepReport run_sweep(const SweepConfig& cfg) {
  if (cfg.model_path.empty()) throw UsageError("sweep: model path is required");
  const Model model = load_model(cfg.model_path);

  ToyDataset data;
  if (cfg.dataset.kind == DatasetSource::Kind::Toy) {
    data = generate_toy_dataset(cfg.dataset.seed, cfg.dataset.count, cfg.dataset.size,
                                cfg.dataset.class_count);
  } else {
    data = load_png_dataset(cfg.dataset.png_dir, cfg.dataset.label_file);
  }

  std::vector<CellImages> cells;
  SweepReport report = run_sweep(cfg, model, data, &cells);

  if (!cfg.output_dir.empty()) {
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec) throw IoError("cannot create output directory: " + cfg.output_dir);
    write_report_csv(report, (fs::path(cfg.output_dir) / "report.csv").string());
    write_report_json(report, (fs::path(cfg.output_dir) / "report.json").string());
    if (cfg.keep_images) emit_images(cells, cfg.output_dir);
  }
  return report;
}

void emit_images(const std::vector<CellImages>& cells, const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory: " + out_dir);

  for (const CellImages& cell : cells) {
    const std::string stem =
        std::to_string(cell.image_id) + "_" + cell.attack + "_";
    const std::string suffix = "_" + alpha_label(cell.alpha) + ".png";
    const auto emit = [&](const RgbImage& img, const char* variant) {
      if (img.pixel_count() == 0) return;
      save_png(img, (fs::path(out_dir) / (stem + variant + suffix)).string());
    };
    emit(cell.original, "original");
    emit(cell.baseline, "baseline");
    emit(cell.shaped, "shaped");
  }
}

}  // namespace advshape
