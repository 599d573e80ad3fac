#ifndef ADVSHAPE_REPORT_HPP
#define ADVSHAPE_REPORT_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace advshape {

/// One (image, attack, alpha) cell. shaped_l2 and the flags describe the
/// fallback-resolved result: the lower-L2 of the shaped and baseline
/// searches, fallback_used = true when the unshaped baseline won.
struct SweepRow {
  int image_id = 0;
  std::string attack;
  double alpha = 0.0;
  double baseline_l2 = 0.0;
  double shaped_l2 = 0.0;
  double strength = 0.0;
  int attempts = 0;
  bool success = false;
  bool fallback_used = false;
};

struct AttackAggregate {
  std::string attack;
  double baseline_mean = 0.0;
  std::vector<std::pair<double, double>> alpha_means;  // (alpha, mean shaped L2)
  double best_alpha = 0.0;
  double best_mean = 0.0;
  double improvement_pct = 0.0;
  double fallback_rate = 0.0;
  double improved_fraction = 0.0;  // images whose best-alpha cell beats baseline
};

struct SweepReport {
  std::uint64_t seed = 0;
  double sigma = 0.0;
  std::vector<std::string> attacks;
  std::vector<double> alphas;
  int image_count = 0;
  std::vector<int> skipped_images;  // clean-misclassified, excluded upstream
  std::vector<SweepRow> rows;
  std::vector<AttackAggregate> aggregates;
  double mean_improvement_pct = 0.0;
};

/// Round through the 6-significant-digit decimal form used in every report
/// file. Rows are rounded at creation so aggregates recompute exactly from
/// serialized data.
double round_sig6(double v);

/// Sorts rows by (image_id, attack, alpha) and recomputes aggregates and the
/// overall mean improvement from the rows.
void finalize_report(SweepReport& report);

/// Fixed header: image_id,attack,alpha,baseline_l2,shaped_l2,strength,
/// attempts,success,fallback_used. Floats use 6 significant digits.
void write_report_csv(const SweepReport& report, const std::string& path);

/// Full structure including aggregates, schema "advshape-report-v1",
/// sorted keys.
void write_report_json(const SweepReport& report, const std::string& path);
SweepReport read_report_json(const std::string& path);

/// One attack/network column of a Table-1-shaped summary: a baseline mean L2
/// and the mean L2 at each alpha.
struct ImprovementColumn {
  std::string label;
  double baseline_mean = 0.0;
  std::vector<std::pair<double, double>> alpha_means;
};

struct ImprovementRow {
  std::string label;
  double baseline_mean = 0.0;
  double best_alpha = 0.0;
  double best_mean = 0.0;
  double improvement_pct = 0.0;
};

struct ImprovementTable {
  std::vector<ImprovementRow> rows;
  double mean_improvement_pct = 0.0;
};

/// improvement = 100*(baseline - min alpha mean)/baseline per column, best
/// alpha = argmin with ties to the larger alpha. Throws UsageError on an
/// empty table or a nonpositive baseline.
ImprovementTable improvement_table(const std::vector<ImprovementColumn>& columns);

/// Reads columns from either a fixture file ({"columns": [...]}) or a sweep
/// report written by write_report_json.
std::vector<ImprovementColumn> load_improvement_columns(const std::string& path);

}  // namespace advshape

#endif  // ADVSHAPE_REPORT_HPP
