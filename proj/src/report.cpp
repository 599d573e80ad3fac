#include "advshape/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "advshape/errors.hpp"

namespace advshape {

namespace {

using json = nlohmann::json;

std::string format_sig6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

bool row_order(const SweepRow& a, const SweepRow& b) {
  if (a.image_id != b.image_id) return a.image_id < b.image_id;
  if (a.attack != b.attack) return a.attack < b.attack;
  return a.alpha < b.alpha;
}

json aggregate_to_json(const AttackAggregate& agg) {
  json j;
  j["attack"] = agg.attack;
  j["baseline_mean"] = agg.baseline_mean;
  json means = json::array();
  for (const auto& [alpha, mean] : agg.alpha_means) means.push_back({alpha, mean});
  j["alpha_means"] = means;
  j["best_alpha"] = agg.best_alpha;
  j["best_mean"] = agg.best_mean;
  j["improvement_pct"] = agg.improvement_pct;
  j["fallback_rate"] = agg.fallback_rate;
  j["improved_fraction"] = agg.improved_fraction;
  return j;
}

AttackAggregate aggregate_from_json(const json& j) {
  AttackAggregate agg;
  agg.attack = j.at("attack").get<std::string>();
  agg.baseline_mean = j.at("baseline_mean").get<double>();
  for (const auto& pair : j.at("alpha_means")) {
    agg.alpha_means.emplace_back(pair.at(0).get<double>(), pair.at(1).get<double>());
  }
  agg.best_alpha = j.at("best_alpha").get<double>();
  agg.best_mean = j.at("best_mean").get<double>();
  agg.improvement_pct = j.at("improvement_pct").get<double>();
  agg.fallback_rate = j.at("fallback_rate").get<double>();
  agg.improved_fraction = j.at("improved_fraction").get<double>();
  return agg;
}

}  // namespace

double round_sig6(double v) {
  if (!std::isfinite(v)) return v;
  return std::strtod(format_sig6(v).c_str(), nullptr);
}

void finalize_report(SweepReport& report) {
  std::sort(report.rows.begin(), report.rows.end(), row_order);

  report.aggregates.clear();
  for (const std::string& attack : report.attacks) {
    AttackAggregate agg;
    agg.attack = attack;

    std::map<int, double> baselines;                    // image -> baseline L2
    std::map<double, std::pair<double, int>> by_alpha;  // alpha -> (sum, count)
    for (const SweepRow& row : report.rows) {
      if (row.attack != attack) continue;
      baselines[row.image_id] = row.baseline_l2;
      auto& [sum, count] = by_alpha[row.alpha];
      sum += row.shaped_l2;
      ++count;
    }
    if (baselines.empty()) continue;

    double baseline_sum = 0.0;
    for (const auto& [id, l2] : baselines) baseline_sum += l2;
    agg.baseline_mean = round_sig6(baseline_sum / baselines.size());

    for (const auto& [alpha, acc] : by_alpha) {
      agg.alpha_means.emplace_back(alpha, round_sig6(acc.first / acc.second));
    }

    // argmin over alpha means, ties to the larger alpha (map iterates
    // ascending, so >= keeps the later, larger alpha).
    std::size_t best = 0;
    for (std::size_t i = 1; i < agg.alpha_means.size(); ++i) {
      if (agg.alpha_means[i].second <= agg.alpha_means[best].second) best = i;
    }
    agg.best_alpha = agg.alpha_means[best].first;
    agg.best_mean = agg.alpha_means[best].second;
    agg.improvement_pct =
        agg.baseline_mean > 0.0
            ? round_sig6(100.0 * (agg.baseline_mean - agg.best_mean) / agg.baseline_mean)
            : 0.0;

    int total = 0, fallbacks = 0, improved = 0, at_best = 0;
    for (const SweepRow& row : report.rows) {
      if (row.attack != attack) continue;
      ++total;
      if (row.fallback_used) ++fallbacks;
      if (row.alpha == agg.best_alpha) {
        ++at_best;
        if (row.shaped_l2 < row.baseline_l2) ++improved;
      }
    }
    agg.fallback_rate = total > 0 ? round_sig6(static_cast<double>(fallbacks) / total) : 0.0;
    agg.improved_fraction =
        at_best > 0 ? round_sig6(static_cast<double>(improved) / at_best) : 0.0;

    report.aggregates.push_back(std::move(agg));
  }

  double pct_sum = 0.0;
  for (const auto& agg : report.aggregates) pct_sum += agg.improvement_pct;
  report.mean_improvement_pct =
      report.aggregates.empty() ? 0.0 : round_sig6(pct_sum / report.aggregates.size());
}

void write_report_csv(const SweepReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: byte-identical on every platform
  if (!out) throw IoError("cannot open report for writing: " + path);
  out << "image_id,attack,alpha,baseline_l2,shaped_l2,strength,attempts,success,fallback_used\n";
  for (const SweepRow& row : report.rows) {
    out << row.image_id << ',' << row.attack << ',' << format_sig6(row.alpha) << ','
        << format_sig6(row.baseline_l2) << ',' << format_sig6(row.shaped_l2) << ','
        << format_sig6(row.strength) << ',' << row.attempts << ','
        << (row.success ? "true" : "false") << ',' << (row.fallback_used ? "true" : "false")
        << '\n';
  }
  if (!out) throw IoError("report write failed: " + path);
}

void write_report_json(const SweepReport& report, const std::string& path) {
  json j;
  j["schema"] = "advshape-report-v1";
  j["seed"] = report.seed;
  j["sigma"] = report.sigma;
  j["attacks"] = report.attacks;
  j["alphas"] = report.alphas;
  j["image_count"] = report.image_count;
  j["skipped_images"] = report.skipped_images;

  json rows = json::array();
  for (const SweepRow& row : report.rows) {
    json r;
    r["image_id"] = row.image_id;
    r["attack"] = row.attack;
    r["alpha"] = row.alpha;
    r["baseline_l2"] = row.baseline_l2;
    r["shaped_l2"] = row.shaped_l2;
    r["strength"] = row.strength;
    r["attempts"] = row.attempts;
    r["success"] = row.success;
    r["fallback_used"] = row.fallback_used;
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);

  json aggs = json::array();
  for (const auto& agg : report.aggregates) aggs.push_back(aggregate_to_json(agg));
  j["aggregates"] = std::move(aggs);
  j["mean_improvement_pct"] = report.mean_improvement_pct;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open report for writing: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("report write failed: " + path);
}

SweepReport read_report_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open report: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DecodeError("report is not valid JSON: " + std::string(e.what()));
  }

  try {
    if (j.at("schema").get<std::string>() != "advshape-report-v1") {
      throw DecodeError("unknown report schema");
    }
    SweepReport report;
    report.seed = j.at("seed").get<std::uint64_t>();
    report.sigma = j.at("sigma").get<double>();
    report.attacks = j.at("attacks").get<std::vector<std::string>>();
    report.alphas = j.at("alphas").get<std::vector<double>>();
    report.image_count = j.at("image_count").get<int>();
    report.skipped_images = j.at("skipped_images").get<std::vector<int>>();
    for (const auto& r : j.at("rows")) {
      SweepRow row;
      row.image_id = r.at("image_id").get<int>();
      row.attack = r.at("attack").get<std::string>();
      row.alpha = r.at("alpha").get<double>();
      row.baseline_l2 = r.at("baseline_l2").get<double>();
      row.shaped_l2 = r.at("shaped_l2").get<double>();
      row.strength = r.at("strength").get<double>();
      row.attempts = r.at("attempts").get<int>();
      row.success = r.at("success").get<bool>();
      row.fallback_used = r.at("fallback_used").get<bool>();
      report.rows.push_back(std::move(row));
    }
    for (const auto& a : j.at("aggregates")) report.aggregates.push_back(aggregate_from_json(a));
    report.mean_improvement_pct = j.at("mean_improvement_pct").get<double>();
    return report;
  } catch (const json::exception& e) {
    throw DecodeError("report is missing fields: " + std::string(e.what()));
  }
}

ImprovementTable improvement_table(const std::vector<ImprovementColumn>& columns) {
  if (columns.empty()) throw UsageError("improvement_table: no columns");

  ImprovementTable table;
  double pct_sum = 0.0;
  for (const auto& col : columns) {
    if (col.baseline_mean <= 0.0) {
      throw UsageError("improvement_table: baseline mean must be positive (" + col.label + ")");
    }
    if (col.alpha_means.empty()) {
      throw UsageError("improvement_table: column has no alpha entries (" + col.label + ")");
    }
    auto sorted = col.alpha_means;
    std::sort(sorted.begin(), sorted.end());
    std::size_t best = 0;
    for (std::size_t i = 1; i < sorted.size(); ++i) {
      if (sorted[i].second <= sorted[best].second) best = i;
    }
    ImprovementRow row;
    row.label = col.label;
    row.baseline_mean = col.baseline_mean;
    row.best_alpha = sorted[best].first;
    row.best_mean = sorted[best].second;
    row.improvement_pct =
        100.0 * (col.baseline_mean - row.best_mean) / col.baseline_mean;
    pct_sum += row.improvement_pct;
    table.rows.push_back(std::move(row));
  }
  table.mean_improvement_pct = pct_sum / columns.size();
  return table;
}

std::vector<ImprovementColumn> load_improvement_columns(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DecodeError("not valid JSON: " + std::string(e.what()));
  }

  std::vector<ImprovementColumn> columns;
  try {
    if (j.contains("columns")) {
      for (const auto& c : j.at("columns")) {
        ImprovementColumn col;
        col.label = c.at("label").get<std::string>();
        col.baseline_mean = c.at("baseline").get<double>();
        for (const auto& pair : c.at("alphas")) {
          col.alpha_means.emplace_back(pair.at(0).get<double>(), pair.at(1).get<double>());
        }
        columns.push_back(std::move(col));
      }
    } else if (j.contains("aggregates")) {
      for (const auto& a : j.at("aggregates")) {
        const AttackAggregate agg = aggregate_from_json(a);
        ImprovementColumn col;
        col.label = agg.attack;
        col.baseline_mean = agg.baseline_mean;
        col.alpha_means = agg.alpha_means;
        columns.push_back(std::move(col));
      }
    } else {
      throw DecodeError("file has neither \"columns\" nor \"aggregates\": " + path);
    }
  } catch (const json::exception& e) {
    throw DecodeError("improvement data is missing fields: " + std::string(e.what()));
  }
  return columns;
}

}  // namespace advshape
