#include <doctest.h>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "npb/errors.hpp"
#include "npb/ingest.hpp"
#include "npb/pipeline.hpp"
#include "npb/simgen.hpp"

using namespace npb;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("npb_test_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

std::string write_simulated_input(const TempDir& dir, std::uint64_t seed,
                                  std::int64_t intensity = 800) {
  BookingSimSpec spec;
  spec.intensity = intensity;
  spec.seed = seed;
  spec.beta_post = 0.1;
  spec.alpha_post = 0.35;
  spec.alpha_pre = -0.4;
  spec.zeta_post = -0.07;
  const BookingTable t = simulate_bookings(spec);
  const std::string path = (dir.path / "bookings.csv").string();
  std::ofstream os(path, std::ios::binary);
  write_bookings(os, t);
  return path;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::string> dir_files(const fs::path& p) {
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(p)) {
    names.push_back(e.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

}  // namespace

TEST_CASE("config validation rejects inconsistent settings") {
  PipelineConfig c;
  c.input_path = "in.csv";
  c.out_dir = "out";
  CHECK_NOTHROW(validate(c));

  PipelineConfig bad = c;
  bad.input_path = "";
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);

  bad = c;
  bad.out_dir = "";
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);

  bad = c;
  bad.threshold = 1;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);

  bad = c;
  bad.cap = 27;  // below the threshold
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);

  bad = c;
  bad.phases.pre_end = Date(2021, 7, 1);  // after restr_end
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);

  bad = c;
  bad.stages = {"descriptives", "frequencies"};
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
}

TEST_CASE("single-stage run writes exactly its own outputs") {
  TempDir dir("single_stage");
  const std::string input = write_simulated_input(dir, 51);

  PipelineConfig c;
  c.input_path = input;
  c.out_dir = (dir.path / "out").string();
  c.stages = {"descriptives"};
  const RunReport rep = run_pipeline(c);
  REQUIRE(rep.ok);
  REQUIRE(rep.stages.size() == 2);  // ingest + descriptives
  CHECK(rep.stages[0].name == "ingest");
  CHECK(rep.stages[1].name == "descriptives");

  const auto files = dir_files(dir.path / "out");
  REQUIRE(files.size() == 3);
  CHECK(files[0] == "descriptives.csv");
  CHECK(files[1] == "monthly_series.csv");
  CHECK(files[2] == "run_summary.json");

  // provenance mirrored into the summary
  const auto summary = nlohmann::json::parse(slurp(dir.path / "out" / "run_summary.json"));
  CHECK(summary["ok"] == true);
  CHECK(summary["ingest"]["rows_read"].get<std::int64_t>() == rep.rows_read);
  CHECK(summary["ingest"]["rows_dropped"].get<std::int64_t>() == rep.rows_dropped);
}

TEST_CASE("full run produces the complete report set and is byte-stable") {
  TempDir dir("full_run");
  const std::string input = write_simulated_input(dir, 52);

  PipelineConfig c;
  c.input_path = input;
  c.out_dir = (dir.path / "out").string();
  const RunReport rep = run_pipeline(c);
  REQUIRE(rep.ok);
  REQUIRE(rep.error_kind.empty());
  REQUIRE(rep.stages.size() == 6);
  for (const auto& st : rep.stages) CHECK(st.ok);

  const std::vector<std::string> expect = {
      "density_ranking.csv",    "descriptives.csv",
      "hurdle_impact.csv",      "hurdle_logit_or.csv",
      "hurdle_nb_irr.csv",      "irr_table.csv",
      "monthly_series.csv",     "nb_monthly_overlay.csv",
      "run_summary.json",       "sarima_acf.csv",
      "sarima_coefficients.csv","sarima_ljung_box.csv",
      "sarima_lr_test.csv",     "sarima_model_selection.csv",
      "sarima_residuals.csv"};
  CHECK(dir_files(dir.path / "out") == expect);

  // second run into a fresh directory: every file byte-identical
  PipelineConfig c2 = c;
  c2.out_dir = (dir.path / "out2").string();
  const RunReport rep2 = run_pipeline(c2);
  REQUIRE(rep2.ok);
  for (const auto& name : expect) {
    CHECK(slurp(dir.path / "out" / name) == slurp(dir.path / "out2" / name));
  }
}

TEST_CASE("a failing stage halts the pipeline and is recorded honestly") {
  TempDir dir("halting");
  // all stays identical: density stage must fail with a data error
  const std::string input = (dir.path / "degenerate.csv").string();
  {
    std::ofstream os(input, std::ios::binary);
    os << "nights,weight,created_date\n";
    for (int m = 1; m <= 12; ++m) {
      for (int year : {2019, 2020, 2021, 2022}) {
        os << "5,10," << year << "-" << (m < 10 ? "0" : "") << m << "-15\n";
      }
    }
  }

  PipelineConfig c;
  c.input_path = input;
  c.out_dir = (dir.path / "out").string();
  const RunReport rep = run_pipeline(c);
  CHECK_FALSE(rep.ok);
  CHECK(rep.error_kind == "data");

  REQUIRE(rep.stages.size() == 3);  // ingest, descriptives, density: then halt
  CHECK(rep.stages[0].ok);
  CHECK(rep.stages[1].ok);
  CHECK_FALSE(rep.stages[2].ok);
  CHECK(rep.stages[2].name == "density");
  CHECK(!rep.stages[2].message.empty());

  // failed run still writes the summary, flagged not-ok
  const auto summary = nlohmann::json::parse(slurp(dir.path / "out" / "run_summary.json"));
  CHECK(summary["ok"] == false);
  CHECK(summary["error_kind"] == "data");
}

TEST_CASE("missing input is a data error, not a crash") {
  TempDir dir("missing_input");
  PipelineConfig c;
  c.input_path = (dir.path / "nope.csv").string();
  c.out_dir = (dir.path / "out").string();
  const RunReport rep = run_pipeline(c);
  CHECK_FALSE(rep.ok);
  CHECK(rep.error_kind == "data");
  REQUIRE(!rep.stages.empty());
  CHECK_FALSE(rep.stages[0].ok);
}

TEST_CASE("JSON format emits parseable documents with nulls for blanks") {
  TempDir dir("json_mode");
  const std::string input = write_simulated_input(dir, 53);

  PipelineConfig c;
  c.input_path = input;
  c.out_dir = (dir.path / "out").string();
  c.format = ReportFormat::Json;
  const RunReport rep = run_pipeline(c);
  REQUIRE(rep.ok);

  for (const auto& e : fs::directory_iterator(dir.path / "out")) {
    if (e.path().extension() != ".json") continue;
    const auto doc = nlohmann::json::parse(slurp(e.path()));  // throws on bad JSON
    CHECK((doc.is_array() || doc.is_object()));
  }

  // sigma2 has no standard error: its se cell must be null, not "" or 0
  const auto coeffs =
      nlohmann::json::parse(slurp(dir.path / "out" / "sarima_coefficients.json"));
  bool saw_sigma2 = false;
  for (const auto& row : coeffs) {
    if (row["parameter"] == "sigma2") {
      saw_sigma2 = true;
      CHECK(row["se"].is_null());
    } else {
      CHECK(row["se"].is_number());
    }
  }
  CHECK(saw_sigma2);
}

TEST_CASE("CSV and JSON runs agree numerically") {
  TempDir dir("format_agreement");
  const std::string input = write_simulated_input(dir, 54, 400);

  PipelineConfig c;
  c.input_path = input;
  c.out_dir = (dir.path / "csv").string();
  c.stages = {"nb"};
  REQUIRE(run_pipeline(c).ok);

  PipelineConfig j = c;
  j.out_dir = (dir.path / "json").string();
  j.format = ReportFormat::Json;
  REQUIRE(run_pipeline(j).ok);

  // parse the CSV irr_table and compare each ratio against the JSON document
  std::ifstream csv(dir.path / "csv" / "irr_table.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header.substr(0, 6) == "label,");
  const auto js = nlohmann::json::parse(slurp(dir.path / "json" / "irr_table.json"));
  size_t row_idx = 0;
  std::string line;
  while (std::getline(csv, line)) {
    REQUIRE(row_idx < js.size());
    const auto fields = [&] {
      std::vector<std::string> out;
      std::istringstream ls(line);
      std::string f;
      while (std::getline(ls, f, ',')) out.push_back(f);
      return out;
    }();
    CHECK(fields[0] == js[row_idx]["label"].get<std::string>());
    CHECK(std::stod(fields[1]) ==
          doctest::Approx(js[row_idx]["irr"].get<double>()).epsilon(1e-9));
    ++row_idx;
  }
  CHECK(row_idx == js.size());
}

TEST_CASE("dummy-free seasonal report has no LR comparison") {
  TempDir dir("sarima_null_only");
  SarimaSimSpec spec;
  spec.n_months = 72;
  spec.seed = 31;
  const MonthlySeries s = simulate_sarima(spec);

  fs::create_directories(dir.path / "out");  // standalone writers expect it
  std::vector<std::string> warnings;
  const auto files = write_sarima_reports(s, false, (dir.path / "out").string(),
                                          ReportFormat::Csv, &warnings);
  for (const auto& f : files) {
    CHECK(f.find("lr_test") == std::string::npos);
  }

  // model selection holds a single row
  std::ifstream sel(dir.path / "out" / "sarima_model_selection.csv");
  std::string header, row, extra;
  REQUIRE(std::getline(sel, header));
  REQUIRE(std::getline(sel, row));
  CHECK_FALSE(std::getline(sel, extra));
}

TEST_CASE("density report honors the family filter") {
  TempDir dir("density_family");
  BookingSimSpec spec;
  spec.intensity = 300;
  spec.n_months = 24;
  spec.seed = 77;
  const BookingTable t = simulate_bookings(spec);

  fs::create_directories(dir.path / "out");
  const auto files = write_density_reports(t, "lognormal", true,
                                           (dir.path / "out").string(),
                                           ReportFormat::Csv);
  REQUIRE(files.size() == 2);

  std::ifstream rank(dir.path / "out" / "density_ranking.csv");
  std::string header, row, extra;
  REQUIRE(std::getline(rank, header));
  REQUIRE(std::getline(rank, row));
  CHECK(row.substr(0, 9) == "lognormal");
  CHECK_FALSE(std::getline(rank, extra));

  CHECK_THROWS_AS((void)write_density_reports(t, "weibull", false,
                                              (dir.path / "out").string(),
                                              ReportFormat::Csv),
                  std::invalid_argument);
}
