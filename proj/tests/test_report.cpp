#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "advshape/errors.hpp"
#include "advshape/report.hpp"

using namespace advshape;
namespace fs = std::filesystem;

namespace {

const std::string kFixture = std::string(ADVSHAPE_DATA_DIR) + "/table1.json";

std::string temp_path(const std::string& name) {
  return (fs::temp_directory_path() / ("advshape_test_" + name)).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

SweepRow make_row(int id, const std::string& attack, double alpha, double baseline, double shaped,
                  bool fallback) {
  SweepRow row;
  row.image_id = id;
  row.attack = attack;
  row.alpha = alpha;
  row.baseline_l2 = baseline;
  row.shaped_l2 = shaped;
  row.strength = 0.04;
  row.attempts = 7;
  row.success = true;
  row.fallback_used = fallback;
  return row;
}

}  // namespace

TEST_SUITE("report") {

TEST_CASE("round_sig6 keeps six significant digits") {
  CHECK(round_sig6(1.0 / 3.0) == 0.333333);
  CHECK(round_sig6(2.0 / 3.0) == 0.666667);
  CHECK(round_sig6(123456789.0) == 123457000.0);
  CHECK(round_sig6(-0.000123456789) == -0.000123457);
  CHECK(round_sig6(0.0) == 0.0);
  CHECK(round_sig6(42.0) == 42.0);
  // Idempotent: a rounded value survives another pass.
  CHECK(round_sig6(round_sig6(9.8765432)) == round_sig6(9.8765432));
}

TEST_CASE("the shipped reference table produces the expected improvements") {
  std::vector<ImprovementColumn> cols = load_improvement_columns(kFixture);
  REQUIRE(cols.size() == 9);
  ImprovementTable table = improvement_table(cols);
  REQUIRE(table.rows.size() == 9);

  double best_fgsm_res = -1.0, best_cw_incres = -1.0;
  for (const ImprovementRow& row : table.rows) {
    if (row.label == "FGSM/Res50V3") best_fgsm_res = row.improvement_pct;
    if (row.label == "C&W/IncresV2") best_cw_incres = row.improvement_pct;
  }
  CHECK(best_fgsm_res == doctest::Approx(41.27).epsilon(0.0005));
  CHECK(best_cw_incres == doctest::Approx(5.88).epsilon(0.002));
  CHECK(table.mean_improvement_pct == doctest::Approx(22.05).epsilon(0.0005));
}

TEST_CASE("improvement argmin resolves ties toward the larger alpha") {
  ImprovementColumn col;
  col.label = "tied";
  col.baseline_mean = 2.0;
  col.alpha_means = {{0.2, 1.5}, {0.8, 1.5}, {0.5, 1.7}};
  ImprovementTable table = improvement_table({col});
  CHECK(table.rows[0].best_alpha == 0.8);
  CHECK(table.rows[0].best_mean == 1.5);
  CHECK(table.rows[0].improvement_pct == doctest::Approx(25.0).epsilon(1e-9));
}

TEST_CASE("improvement table rejects degenerate input") {
  CHECK_THROWS_AS(improvement_table({}), UsageError);
  ImprovementColumn col;
  col.label = "bad";
  col.baseline_mean = 0.0;
  col.alpha_means = {{0.5, 1.0}};
  CHECK_THROWS_AS(improvement_table({col}), UsageError);
  col.baseline_mean = 1.0;
  col.alpha_means.clear();
  CHECK_THROWS_AS(improvement_table({col}), UsageError);
}

TEST_CASE("finalize_report computes the aggregates from the rows") {
  SweepReport report;
  report.attacks = {"fgsm"};
  report.alphas = {1.0, 0.5};
  report.image_count = 2;
  // Deliberately unsorted input rows.
  report.rows = {
      make_row(1, "fgsm", 1.0, 1.0, 0.8, false),
      make_row(0, "fgsm", 0.5, 2.0, 2.0, true),
      make_row(0, "fgsm", 1.0, 2.0, 1.5, false),
      make_row(1, "fgsm", 0.5, 1.0, 1.0, true),
  };
  finalize_report(report);

  CHECK(report.rows[0].image_id == 0);  // sorted by image, then attack, then alpha
  CHECK(report.rows[0].alpha == 0.5);
  CHECK(report.rows[3].image_id == 1);

  REQUIRE(report.aggregates.size() == 1);
  const AttackAggregate& agg = report.aggregates[0];
  CHECK(agg.baseline_mean == 1.5);
  REQUIRE(agg.alpha_means.size() == 2);
  CHECK(agg.alpha_means[0].first == 0.5);
  CHECK(agg.alpha_means[0].second == 1.5);
  CHECK(agg.alpha_means[1].second == 1.15);
  CHECK(agg.best_alpha == 1.0);
  CHECK(agg.best_mean == 1.15);
  CHECK(agg.improvement_pct == round_sig6(100.0 * (1.5 - 1.15) / 1.5));
  CHECK(agg.fallback_rate == 0.5);
  CHECK(agg.improved_fraction == 1.0);  // both images improve at alpha 1
  CHECK(report.mean_improvement_pct == agg.improvement_pct);
}

TEST_CASE("csv output matches the fixed layout byte for byte") {
  SweepReport report;
  report.attacks = {"fgsm"};
  report.alphas = {0.6};
  report.image_count = 1;
  report.rows = {make_row(3, "fgsm", 0.6, 1.25, 0.5, false)};
  finalize_report(report);

  const std::string path = temp_path("report.csv");
  write_report_csv(report, path);
  CHECK(slurp(path) ==
        "image_id,attack,alpha,baseline_l2,shaped_l2,strength,attempts,success,fallback_used\n"
        "3,fgsm,0.6,1.25,0.5,0.04,7,true,false\n");
  fs::remove(path);
}

TEST_CASE("json report roundtrips exactly") {
  SweepReport report;
  report.seed = 42;
  report.sigma = 20.334448;
  report.attacks = {"fgsm", "cw"};
  report.alphas = {1.0, 0.5};
  report.image_count = 2;
  report.skipped_images = {5};
  report.rows = {
      make_row(0, "cw", 0.5, 1.2, 1.1, false),   make_row(0, "cw", 1.0, 1.2, 0.9, false),
      make_row(0, "fgsm", 0.5, 2.0, 1.8, false), make_row(0, "fgsm", 1.0, 2.0, 1.9, false),
      make_row(1, "cw", 0.5, 1.4, 1.4, true),    make_row(1, "cw", 1.0, 1.4, 1.0, false),
      make_row(1, "fgsm", 0.5, 2.4, 2.2, false), make_row(1, "fgsm", 1.0, 2.4, 2.4, true),
  };
  finalize_report(report);

  const std::string p1 = temp_path("report_a.json");
  const std::string p2 = temp_path("report_b.json");
  write_report_json(report, p1);
  SweepReport loaded = read_report_json(p1);
  write_report_json(loaded, p2);
  CHECK(slurp(p1) == slurp(p2));

  CHECK(loaded.seed == report.seed);
  CHECK(loaded.sigma == report.sigma);
  CHECK(loaded.attacks == report.attacks);
  CHECK(loaded.alphas == report.alphas);
  CHECK(loaded.skipped_images == report.skipped_images);
  REQUIRE(loaded.rows.size() == report.rows.size());
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    CHECK(loaded.rows[i].image_id == report.rows[i].image_id);
    CHECK(loaded.rows[i].shaped_l2 == report.rows[i].shaped_l2);
    CHECK(loaded.rows[i].success == report.rows[i].success);
  }
  REQUIRE(loaded.aggregates.size() == report.aggregates.size());
  CHECK(loaded.mean_improvement_pct == report.mean_improvement_pct);

  // Re-finalizing the loaded report reproduces the same aggregates: the rows
  // were rounded before aggregation, so nothing drifts through the file.
  SweepReport again = loaded;
  finalize_report(again);
  for (std::size_t i = 0; i < again.aggregates.size(); ++i) {
    CHECK(again.aggregates[i].baseline_mean == loaded.aggregates[i].baseline_mean);
    CHECK(again.aggregates[i].best_mean == loaded.aggregates[i].best_mean);
    CHECK(again.aggregates[i].improvement_pct == loaded.aggregates[i].improvement_pct);
  }

  // A sweep report is also a valid improvement-column source.
  std::vector<ImprovementColumn> cols = load_improvement_columns(p1);
  REQUIRE(cols.size() == 2);
  CHECK(cols[0].label == "fgsm");
  CHECK(cols[0].baseline_mean == report.aggregates[0].baseline_mean);

  fs::remove(p1);
  fs::remove(p2);
}

TEST_CASE("report readers reject broken files") {
  const std::string path = temp_path("broken.json");
  SUBCASE("missing file") {
    CHECK_THROWS_AS(read_report_json(temp_path("nope.json")), IoError);
    CHECK_THROWS_AS(load_improvement_columns(temp_path("nope.json")), IoError);
  }
  SUBCASE("not json") {
    std::ofstream(path, std::ios::binary) << "][";
    CHECK_THROWS_AS(read_report_json(path), DecodeError);
    CHECK_THROWS_AS(load_improvement_columns(path), DecodeError);
    fs::remove(path);
  }
  SUBCASE("wrong schema") {
    std::ofstream(path, std::ios::binary) << R"({"schema":"other-v9"})";
    CHECK_THROWS_AS(read_report_json(path), DecodeError);
    fs::remove(path);
  }
  SUBCASE("neither columns nor aggregates") {
    std::ofstream(path, std::ios::binary) << R"({"stuff":[]})";
    CHECK_THROWS_AS(load_improvement_columns(path), DecodeError);
    fs::remove(path);
  }
}

}  // TEST_SUITE
