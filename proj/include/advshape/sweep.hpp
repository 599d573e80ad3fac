#ifndef ADVSHAPE_SWEEP_HPP
#define ADVSHAPE_SWEEP_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "advshape/attacks.hpp"
#include "advshape/dataset.hpp"
#include "advshape/model.hpp"
#include "advshape/report.hpp"
#include "advshape/search.hpp"

namespace advshape {

/// Where sweep images come from: the built-in generator, or a directory of
/// PNGs with a "filename,label" CSV.
struct DatasetSource {
  enum class Kind { Toy, PngDir } kind = Kind::Toy;
  std::uint64_t seed = 11;
  int count = 64;
  int size = 32;
  int class_count = 3;
  std::string png_dir;
  std::string label_file;
};

struct SweepConfig {
  std::vector<AttackKind> attacks = {AttackKind::Fgsm, AttackKind::Mim, AttackKind::CwL2};
  std::vector<double> alphas = {1.0, 0.8, 0.6, 0.4, 0.2, 0.0};
  double sigma = 0.0;  // <= 0: default_sigma per image size
  AttackConfig attack_params;
  StrengthSchedule fgsm_schedule = StrengthSchedule::defaults_for(AttackKind::Fgsm);
  StrengthSchedule mim_schedule = StrengthSchedule::defaults_for(AttackKind::Mim);
  StrengthSchedule cw_schedule = StrengthSchedule::defaults_for(AttackKind::CwL2);
  std::string model_path;
  DatasetSource dataset;
  std::string output_dir;  // empty: no files written
  std::uint64_t seed = 0;  // recorded in the report
  int workers = 0;         // 0: ADVSHAPE_WORKERS env var, else 1
  bool keep_images = false;
};

/// Pixel data behind one report cell, for PNG emission.
struct CellImages {
  int image_id = 0;
  std::string attack;
  double alpha = 0.0;
  RgbImage original;
  RgbImage baseline;
  RgbImage shaped;
};

/// Effective worker count: explicit value, else the ADVSHAPE_WORKERS
/// environment variable, else 1.
int resolve_workers(int requested);

/// Full sweep over (image, attack, alpha): one baseline search per
/// (image, attack), one shaped search per cell, fallback semantics per cell.
/// Clean-misclassified images are skipped and listed in the report. The
/// returned report is finalized (sorted rows, aggregates). When cells is
/// non-null and cfg.keep_images is set, per-cell images are appended to it.
SweepReport run_sweep(const SweepConfig& cfg, const Model& model, const ToyDataset& data,
                      std::vector<CellImages>* cells = nullptr);

/// Loads the model and dataset from cfg, runs the sweep, and writes
/// report.csv / report.json (plus PNGs when keep_images) into output_dir.
SweepReport run_sweep(const SweepConfig& cfg);

/// Writes <id>_<attack>_<variant>_<alpha>.png for variants original,
/// baseline, shaped.
void emit_images(const std::vector<CellImages>& cells, const std::string& out_dir);

/// Loads a PNG directory dataset: label_file lines are "filename,label".
ToyDataset load_png_dataset(const std::string& dir, const std::string& label_file);

}  // namespace advshape

#endif  // ADVSHAPE_SWEEP_HPP
