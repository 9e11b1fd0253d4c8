#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "npb/errors.hpp"
#include "npb/ingest.hpp"
#include "npb/pipeline.hpp"
#include "npb/sarima.hpp"
#include "npb/simgen.hpp"

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

std::string ym_str(std::int64_t ym) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d", int(ym / 12), int(ym % 12) + 1);
  return buf;
}

// "pre_end=YYYY-MM-DD,restr_end=YYYY-MM-DD"; either key may be omitted.
npb::PhaseBoundaries parse_phases(const std::string& arg) {
  npb::PhaseBoundaries b;
  size_t start = 0;
  while (start < arg.size()) {
    const size_t comma = arg.find(',', start);
    const size_t end = comma == std::string::npos ? arg.size() : comma;
    const std::string piece = arg.substr(start, end - start);
    const size_t eq = piece.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("--phases expects key=value pairs, got '" + piece + "'");
    }
    const std::string key = piece.substr(0, eq);
    const std::string value = piece.substr(eq + 1);
    if (key == "pre_end") {
      b.pre_end = npb::parse_date(value);
    } else if (key == "restr_end") {
      b.restr_end = npb::parse_date(value);
    } else {
      throw std::invalid_argument("--phases keys are pre_end and restr_end, got '" + key + "'");
    }
    start = end + 1;
  }
  return b;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw npb::DataError("cannot open spec file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_report(const npb::PipelineConfig& config) {
  const npb::RunReport report = npb::run_pipeline(config);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  if (report.ok) return 0;
  for (const auto& s : report.stages) {
    if (!s.ok && !s.message.empty()) {
      std::cerr << "stage " << s.name << " failed: " << s.message << '\n';
    }
  }
  return report.error_kind == "numerical" ? 3 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stay-length analytics for weighted booking records"};
  app.require_subcommand(1);

  std::string input;
  std::string out = ".";
  std::string phases_arg;
  std::string format = "csv";
  int cap = 180;
  int threshold = 28;

  auto add_common = [&](CLI::App* sub, bool with_cap) {
    sub->add_option("--input", input, "bookings CSV (nights,weight,created_date)")
        ->required();
    sub->add_option("--out", out, "output directory (default: current)");
    sub->add_option("--phases", phases_arg,
                    "phase boundaries, pre_end=YYYY-MM-DD,restr_end=YYYY-MM-DD");
    sub->add_option("--format", format, "report format")
        ->check(CLI::IsMember({"csv", "json"}));
    if (with_cap) sub->add_option("--cap", cap, "longest stay retained, nights");
  };

  CLI::App* sc_desc =
      app.add_subcommand("descriptives", "Per-phase stay statistics and the monthly series");
  add_common(sc_desc, true);
  bool no_collapse = false;
  sc_desc->add_flag("--no-collapse", no_collapse,
                    "keep duplicate (nights, created_date) rows separate");

  CLI::App* sc_dist =
      app.add_subcommand("fit-dist", "Stay-length density fits ranked by AIC");
  add_common(sc_dist, true);
  std::string family = "all";
  sc_dist->add_option("--family", family, "lognormal, gamma, pln, or all")
      ->check(CLI::IsMember({"lognormal", "gamma", "pln", "all"}));
  bool overlay = false;
  sc_dist->add_flag("--overlay", overlay,
                    "also write ECDF vs fitted-CDF points for the best family");

  CLI::App* sc_nb =
      app.add_subcommand("fit-nb", "Count regression: IRR table and monthly overlay");
  add_common(sc_nb, true);

  CLI::App* sc_logit =
      app.add_subcommand("fit-logit", "Long-stay gate: odds-ratio table");
  add_common(sc_logit, true);
  sc_logit->add_option("--threshold", threshold, "long-stay threshold, nights");

  CLI::App* sc_hurdle =
      app.add_subcommand("fit-hurdle", "Two-part long-stay model and impact table");
  add_common(sc_hurdle, true);
  sc_hurdle->add_option("--threshold", threshold, "long-stay threshold, nights");

  CLI::App* sc_sarima =
      app.add_subcommand("fit-sarima", "Seasonal MA model on a monthly series file");
  sc_sarima->add_option("--input", input, "monthly series CSV (month,wmean,wsd,total_weight)")
      ->required();
  sc_sarima->add_option("--out", out, "output directory (default: current)");
  sc_sarima->add_option("--phases", phases_arg,
                        "phase boundaries, pre_end=YYYY-MM-DD,restr_end=YYYY-MM-DD");
  sc_sarima->add_option("--format", format, "report format")
      ->check(CLI::IsMember({"csv", "json"}));
  bool no_dummies = false;
  sc_sarima->add_flag("--no-dummies", no_dummies, "fit without phase regressors");

  CLI::App* sc_sim =
      app.add_subcommand("simulate", "Generate synthetic data from a spec file");
  std::string spec_path;
  std::string sim_out;
  std::uint64_t seed = 0;
  sc_sim->add_option("--spec", spec_path, "key-value spec file")->required();
  sc_sim->add_option("--out", sim_out, "output file")->required();
  CLI::Option* seed_opt = sc_sim->add_option("--seed", seed, "override the spec seed");

  CLI::App* sc_report = app.add_subcommand("report", "Run the full pipeline");
  add_common(sc_report, true);
  sc_report->add_option("--threshold", threshold, "long-stay threshold, nights");
  std::vector<std::string> stages;
  sc_report->add_option("--stages", stages,
                        "subset of descriptives,density,nb,hurdle,sarima")
      ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    npb::PipelineConfig config;
    config.input_path = input;
    config.out_dir = out;
    config.phases = parse_phases(phases_arg);
    config.cap = cap;
    config.threshold = threshold;
    config.format = format == "json" ? npb::ReportFormat::Json : npb::ReportFormat::Csv;
    config.collapse = !no_collapse;

    if (app.got_subcommand(sc_desc)) {
      config.stages = {"descriptives"};
      return run_report(config);
    }
    if (app.got_subcommand(sc_nb)) {
      config.stages = {"nb"};
      return run_report(config);
    }
    if (app.got_subcommand(sc_hurdle)) {
      config.stages = {"hurdle"};
      return run_report(config);
    }
    if (app.got_subcommand(sc_report)) {
      config.stages = stages;
      return run_report(config);
    }

    npb::IngestOptions opts;
    opts.phases = config.phases;
    opts.cap = config.cap;

    if (app.got_subcommand(sc_dist)) {
      const npb::BookingTable table = npb::load_bookings_file(input, opts);
      std::filesystem::create_directories(out);
      for (const auto& f :
           npb::write_density_reports(table, family, overlay, out, config.format)) {
        std::cout << "wrote " << f << '\n';
      }
      return 0;
    }
    if (app.got_subcommand(sc_logit)) {
      const npb::BookingTable table = npb::load_bookings_file(input, opts);
      std::filesystem::create_directories(out);
      std::vector<std::string> warnings;
      const auto files =
          npb::write_logit_report(table, threshold, out, config.format, &warnings);
      for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
      for (const auto& f : files) std::cout << "wrote " << f << '\n';
      return 0;
    }
    if (app.got_subcommand(sc_sarima)) {
      const npb::MonthlySeries series =
          npb::make_monthly_series(npb::load_monthly_series_file(input), config.phases);
      std::filesystem::create_directories(out);
      std::vector<std::string> warnings;
      const auto files =
          npb::write_sarima_reports(series, !no_dummies, out, config.format, &warnings);
      for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
      for (const auto& f : files) std::cout << "wrote " << f << '\n';
      return 0;
    }
    if (app.got_subcommand(sc_sim)) {
      const std::string text = read_file(spec_path);
      const std::string kind = npb::spec_kind(text);
      std::ofstream os(sim_out, std::ios::binary);
      if (!os) throw npb::DataError("cannot write output file: " + sim_out);
      if (kind == "bookings") {
        npb::BookingSimSpec spec = npb::parse_booking_spec(text);
        if (seed_opt->count() > 0) spec.seed = seed;
        npb::write_bookings(os, npb::simulate_bookings(spec));
      } else {
        npb::SarimaSimSpec spec = npb::parse_sarima_spec(text);
        if (seed_opt->count() > 0) spec.seed = seed;
        const npb::MonthlySeries series = npb::simulate_sarima(spec);
        os << "month,wmean,wsd,total_weight\n";
        for (Eigen::Index t = 0; t < series.values.size(); ++t) {
          os << ym_str(series.start_ym + t) << ',' << fmt(series.values(t))
             << ",0,1\n";
        }
      }
      std::cout << "wrote " << sim_out << '\n';
      return 0;
    }
  } catch (const npb::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const npb::NumericError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
