#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "npb/ingest.hpp"
#include "npb/sarima.hpp"

namespace npb {

enum class ReportFormat { Csv, Json };

struct PipelineConfig {
  std::string input_path;
  std::string out_dir;
  PhaseBoundaries phases;
  int cap = 180;
  int threshold = 28;
  // Subset of {"descriptives","density","nb","hurdle","sarima"}; empty runs
  // everything, in that order.
  std::vector<std::string> stages;
  ReportFormat format = ReportFormat::Csv;
  bool collapse = true;
};

void validate(const PipelineConfig& config);

struct StageStatus {
  std::string name;
  bool ok = false;
  std::string message;            // error text on failure
  double seconds = 0.0;           // wall clock, reported to stdout only
  std::vector<std::string> outputs;  // files this stage wrote
};

struct RunReport {
  std::vector<StageStatus> stages;
  std::vector<std::string> warnings;
  bool ok = false;
  std::string error_kind;  // "data" or "numerical" when a stage failed
  // Ingest provenance, mirrored into the run summary.
  std::int64_t rows_read = 0;
  std::int64_t rows_dropped = 0;
  std::int64_t weight_dropped = 0;
};

// Runs ingest plus the selected stages in order, halting after the first
// failure. Output files land in config.out_dir; a deliberately
// timing-free run_summary.json goes alongside them so reruns are
// byte-identical.
RunReport run_pipeline(const PipelineConfig& config);

// The summary serialization used for run_summary.json (no timings).
void write_run_summary(std::ostream& out, const RunReport& report);

// Writes the SARIMA report files (coefficients, model selection, LR test,
// residuals, ACF, Ljung-Box) for an already-built series and returns their
// names. with_dummies=false fits only the dummy-free model and skips the LR
// comparison. Shared by the pipeline stage and the standalone subcommand.
std::vector<std::string> write_sarima_reports(const MonthlySeries& series,
                                              bool with_dummies,
                                              const std::string& out_dir,
                                              ReportFormat format,
                                              std::vector<std::string>* warnings);

// Density ranking table, plus CDF overlay points for the top-ranked family
// when `overlay` is set. `family` is lognormal, gamma, pln, or all.
std::vector<std::string> write_density_reports(const BookingTable& table,
                                               const std::string& family,
                                               bool overlay,
                                               const std::string& out_dir,
                                               ReportFormat format);

// Odds-ratio table for the long-stay gate fitted on its own.
std::vector<std::string> write_logit_report(const BookingTable& table,
                                            int threshold,
                                            const std::string& out_dir,
                                            ReportFormat format,
                                            std::vector<std::string>* warnings);

}  // namespace npb
