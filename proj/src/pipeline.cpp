#include "npb/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>

#include "npb/densfit.hpp"
#include "npb/errors.hpp"
#include "npb/glm.hpp"
#include "npb/hurdle.hpp"
#include "npb/sarima.hpp"
#include "npb/wstats.hpp"

namespace npb {

namespace {

using ordered_json = nlohmann::ordered_json;

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

// One tabular report: fixed columns, rows of preformatted cells. Serialized
// as CSV or as a JSON array of objects depending on the run format.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<bool> numeric;  // per column, drives JSON typing
};

void write_table(const std::string& path, const Table& t, ReportFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write output file: " + path);
  if (format == ReportFormat::Csv) {
    for (size_t j = 0; j < t.columns.size(); ++j) {
      out << (j ? "," : "") << t.columns[j];
    }
    out << '\n';
    for (const auto& row : t.rows) {
      for (size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << row[j];
      out << '\n';
    }
  } else {
    ordered_json arr = ordered_json::array();
    for (const auto& row : t.rows) {
      ordered_json obj;
      for (size_t j = 0; j < row.size(); ++j) {
        if (row[j].empty()) {
          obj[t.columns[j]] = nullptr;
        } else if (t.numeric[j]) {
          obj[t.columns[j]] = std::stod(row[j]);
        } else {
          obj[t.columns[j]] = row[j];
        }
      }
      arr.push_back(obj);
    }
    out << arr.dump(2) << '\n';
  }
}

std::string table_ext(ReportFormat f) { return f == ReportFormat::Csv ? ".csv" : ".json"; }

struct StageContext {
  const PipelineConfig& config;
  const BookingTable& table;
  std::vector<std::string>* warnings;
  std::vector<std::string> outputs;

  void emit(const std::string& stem, const Table& t) {
    const std::string name = stem + table_ext(config.format);
    write_table((std::filesystem::path(config.out_dir) / name).string(), t,
                config.format);
    outputs.push_back(name);
  }
};

void stage_descriptives(StageContext& ctx) {
  Table desc;
  desc.columns = {"phase", "mean", "median", "p25", "p75", "sd", "total_weight"};
  desc.numeric = {false, true, true, true, true, true, true};
  for (const auto& d : phase_descriptives(ctx.table)) {
    desc.rows.push_back({phase_name(d.phase), fmt(d.mean), fmt(d.median),
                         fmt(d.p25), fmt(d.p75), fmt(d.sd),
                         std::to_string(d.total_weight)});
  }
  ctx.emit("descriptives", desc);

  Table monthly;
  monthly.columns = {"month", "wmean", "wsd", "total_weight"};
  monthly.numeric = {false, true, true, true};
  for (const auto& p : monthly_aggregate(ctx.table)) {
    monthly.rows.push_back({ym_str(p.ym_index), fmt(p.wmean), fmt(p.wsd),
                            std::to_string(p.total_weight)});
  }
  ctx.emit("monthly_series", monthly);
}

void stage_density(StageContext& ctx) {
  const auto files = write_density_reports(ctx.table, "all", false,
                                           ctx.config.out_dir, ctx.config.format);
  ctx.outputs.insert(ctx.outputs.end(), files.begin(), files.end());
}

Table ratio_table(const GlmFit& fit, const char* ratio_col) {
  Table t;
  t.columns = {"label", ratio_col, "ci_low", "ci_high"};
  t.numeric = {false, true, true, true};
  for (const auto& r : rate_ratios(fit)) {
    t.rows.push_back({r.label, fmt(r.ratio), fmt(r.ci_low), fmt(r.ci_high)});
  }
  return t;
}

void stage_nb(StageContext& ctx) {
  const DesignMatrix design = build_design(ctx.table);
  const auto n = Eigen::Index(ctx.table.records.size());
  Eigen::VectorXd y(n), w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    y(i) = double(ctx.table.records[size_t(i)].nights);
    w(i) = double(ctx.table.records[size_t(i)].weight);
  }
  const GlmFit fit = fit_weighted_glm(design, y, w, GlmFamily::NegBin);
  if (!fit.converged) ctx.warnings->push_back("nb: fit did not converge");
  ctx.emit("irr_table", ratio_table(fit, "irr"));

  Table overlay;
  overlay.columns = {"month", "observed", "predicted"};
  overlay.numeric = {false, true, true};
  for (const auto& p : predict_monthly_mean(fit, ctx.table)) {
    overlay.rows.push_back({ym_str(p.ym_index), fmt(p.observed), fmt(p.predicted)});
  }
  ctx.emit("nb_monthly_overlay", overlay);
}

void stage_hurdle(StageContext& ctx) {
  const HurdleFit fit = fit_hurdle(ctx.table, ctx.config.threshold);
  if (!fit.logit_part.converged) {
    ctx.warnings->push_back("hurdle: logistic part did not converge");
  }
  if (!fit.nb_part.converged) {
    ctx.warnings->push_back("hurdle: negative-binomial part did not converge");
  }
  ctx.emit("hurdle_logit_or", ratio_table(fit.logit_part, "odds_ratio"));
  ctx.emit("hurdle_nb_irr", ratio_table(fit.nb_part, "irr"));

  Table impact;
  impact.columns = {"phase", "prevalence", "conditional_mean", "contribution",
                    "excess_vs_pre"};
  impact.numeric = {false, true, true, true, true};
  for (const auto& row : combined_impact(fit, Phase::PreCovid)) {
    impact.rows.push_back({phase_name(row.phase), fmt(row.prevalence),
                           fmt(row.conditional_mean), fmt(row.contribution),
                           fmt(row.excess_vs_ref)});
  }
  ctx.emit("hurdle_impact", impact);
}

void stage_sarima(StageContext& ctx) {
  const MonthlySeries series =
      make_monthly_series(monthly_aggregate(ctx.table), ctx.config.phases);
  const auto files = write_sarima_reports(series, true, ctx.config.out_dir,
                                          ctx.config.format, ctx.warnings);
  ctx.outputs.insert(ctx.outputs.end(), files.begin(), files.end());
}

const std::vector<std::string> kAllStages = {"descriptives", "density", "nb",
                                             "hurdle", "sarima"};

}  // namespace

std::vector<std::string> write_sarima_reports(const MonthlySeries& series,
                                              bool with_dummies,
                                              const std::string& out_dir,
                                              ReportFormat format,
                                              std::vector<std::string>* warnings) {
  const SarimaFit main_fit = fit_sarima(series, with_dummies);
  if (main_fit.boundary_warning && warnings) {
    warnings->push_back(
        "sarima: seasonal MA estimate on the invertibility boundary; "
        "standard errors are unreliable");
  }
  if (!main_fit.converged && warnings) {
    warnings->push_back("sarima: optimizer did not converge");
  }

  std::vector<std::string> outputs;
  auto emit = [&](const std::string& stem, const Table& t) {
    const std::string name = stem + table_ext(format);
    write_table((std::filesystem::path(out_dir) / name).string(), t, format);
    outputs.push_back(name);
  };

  Table coef;
  coef.columns = {"parameter", "estimate", "se"};
  coef.numeric = {false, true, true};
  coef.rows.push_back({"ma1", fmt(main_fit.ma1), fmt(main_fit.se(0))});
  coef.rows.push_back({"sma12", fmt(main_fit.sma12), fmt(main_fit.se(1))});
  for (Eigen::Index j = 0; j < main_fit.beta.size(); ++j) {
    coef.rows.push_back({main_fit.labels[size_t(2 + j)], fmt(main_fit.beta(j)),
                         fmt(main_fit.se(2 + j))});
  }
  coef.rows.push_back({"sigma2", fmt(main_fit.sigma2), ""});
  emit("sarima_coefficients", coef);

  Table sel;
  sel.columns = {"model", "k", "loglik", "aic", "aicc", "bic"};
  sel.numeric = {false, true, true, true, true, true};
  auto sel_row = [&](const char* name, const SarimaFit& f) {
    sel.rows.push_back({name, std::to_string(f.k), fmt(f.loglik), fmt(f.aic),
                        fmt(f.aicc), fmt(f.bic)});
  };
  if (with_dummies) {
    const SarimaFit null_fit = fit_sarima(series, false);
    sel_row("full", main_fit);
    sel_row("null", null_fit);
    emit("sarima_model_selection", sel);

    const LrTest lr = lr_test(main_fit, null_fit);
    Table lrt;
    lrt.columns = {"statistic", "dof", "p_value"};
    lrt.numeric = {true, true, true};
    lrt.rows.push_back({fmt(lr.statistic), std::to_string(lr.dof), fmt(lr.p_value)});
    emit("sarima_lr_test", lrt);
  } else {
    sel_row("null", main_fit);
    emit("sarima_model_selection", sel);
  }

  Table resid;
  resid.columns = {"month", "residual"};
  resid.numeric = {false, true};
  for (Eigen::Index t = 0; t < main_fit.residuals.size(); ++t) {
    resid.rows.push_back(
        {ym_str(series.start_ym + 13 + t), fmt(main_fit.residuals(t))});
  }
  emit("sarima_residuals", resid);

  const DiagnosticsReport diag = residual_diagnostics(main_fit);
  Table acf;
  acf.columns = {"lag", "acf", "bound"};
  acf.numeric = {true, true, true};
  for (Eigen::Index k = 0; k < diag.acf.size(); ++k) {
    acf.rows.push_back({std::to_string(k + 1), fmt(diag.acf(k)),
                        fmt(diag.acf_bound)});
  }
  emit("sarima_acf", acf);

  Table lb;
  lb.columns = {"max_lag", "statistic", "dof", "p_value"};
  lb.numeric = {true, true, true, true};
  for (size_t i = 0; i < diag.lb.size(); ++i) {
    lb.rows.push_back({std::to_string(diag.lb[i].dof + 2), fmt(diag.lb[i].statistic),
                       std::to_string(diag.lb[i].dof), fmt(diag.lb[i].p_value)});
  }
  emit("sarima_ljung_box", lb);
  return outputs;
}

std::vector<std::string> write_density_reports(const BookingTable& table,
                                               const std::string& family,
                                               bool overlay,
                                               const std::string& out_dir,
                                               ReportFormat format) {
  std::vector<FamilyKind> kinds;
  if (family == "all") {
    kinds = {FamilyKind::LogNormal, FamilyKind::Gamma, FamilyKind::PoissonLogNormal};
  } else if (family == "lognormal") {
    kinds = {FamilyKind::LogNormal};
  } else if (family == "gamma") {
    kinds = {FamilyKind::Gamma};
  } else if (family == "pln") {
    kinds = {FamilyKind::PoissonLogNormal};
  } else {
    throw std::invalid_argument("unknown family '" + family +
                                "' (expected lognormal, gamma, pln, or all)");
  }

  std::vector<DensityFit> fits;
  fits.reserve(kinds.size());
  for (FamilyKind kind : kinds) fits.push_back(fit_weighted(kind, table));
  const std::vector<RankedFit> ranked =
      fits.size() > 1 ? rank_models(fits)
                      : std::vector<RankedFit>{{fits.front(), 0.0}};

  std::vector<std::string> outputs;
  auto emit = [&](const std::string& stem, const Table& t) {
    const std::string name = stem + table_ext(format);
    write_table((std::filesystem::path(out_dir) / name).string(), t, format);
    outputs.push_back(name);
  };

  Table t;
  t.columns = {"family", "k", "loglik", "aic", "bic", "delta_aic", "p1", "p2"};
  t.numeric = {false, true, true, true, true, true, true, true};
  for (const auto& r : ranked) {
    t.rows.push_back({family_name(r.fit.family.kind), "2", fmt(r.fit.loglik),
                      fmt(r.fit.aic), fmt(r.fit.bic), fmt(r.delta_aic),
                      fmt(r.fit.family.p1), fmt(r.fit.family.p2)});
  }
  emit("density_ranking", t);

  if (overlay) {
    Table pts;
    pts.columns = {"y", "ecdf", "fitted_cdf"};
    pts.numeric = {true, true, true};
    for (const auto& p : overlay_points(ranked.front().fit, table)) {
      pts.rows.push_back({fmt(p.y), fmt(p.ecdf), fmt(p.fitted_cdf)});
    }
    emit("density_overlay", pts);
  }
  return outputs;
}

std::vector<std::string> write_logit_report(const BookingTable& table,
                                            int threshold,
                                            const std::string& out_dir,
                                            ReportFormat format,
                                            std::vector<std::string>* warnings) {
  const DesignMatrix design = build_design(table);
  const auto n = Eigen::Index(table.records.size());
  Eigen::VectorXd y(n), w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    y(i) = table.records[size_t(i)].nights >= threshold ? 1.0 : 0.0;
    w(i) = double(table.records[size_t(i)].weight);
  }
  const GlmFit fit = fit_weighted_glm(design, y, w, GlmFamily::Logistic);
  if (!fit.converged && warnings) {
    warnings->push_back("logit: fit did not converge");
  }

  std::vector<std::string> outputs;
  const std::string name = std::string("logit_or") + table_ext(format);
  write_table((std::filesystem::path(out_dir) / name).string(),
              ratio_table(fit, "odds_ratio"), format);
  outputs.push_back(name);
  return outputs;
}

void validate(const PipelineConfig& config) {
  if (config.input_path.empty()) throw std::invalid_argument("config: input path is empty");
  if (config.out_dir.empty()) throw std::invalid_argument("config: output directory is empty");
  if (!(config.phases.pre_end < config.phases.restr_end)) {
    throw std::invalid_argument("config: phase boundaries must be strictly ordered");
  }
  if (config.threshold < 2) throw std::invalid_argument("config: threshold must be >= 2");
  if (config.cap < config.threshold) {
    throw std::invalid_argument("config: cap must be >= threshold");
  }
  for (const auto& s : config.stages) {
    if (std::find(kAllStages.begin(), kAllStages.end(), s) == kAllStages.end()) {
      throw std::invalid_argument("config: unknown stage '" + s + "'");
    }
  }
}

RunReport run_pipeline(const PipelineConfig& config) {
  validate(config);
  std::filesystem::create_directories(config.out_dir);

  RunReport report;
  report.ok = true;

  IngestOptions opts;
  opts.phases = config.phases;
  opts.cap = config.cap;
  opts.collapse = config.collapse;
  BookingTable table;

  const std::vector<std::string>& stages =
      config.stages.empty() ? kAllStages : config.stages;

  auto run_stage = [&](const std::string& name, const std::function<void(StageContext&)>& fn) {
    StageStatus status;
    status.name = name;
    StageContext ctx{config, table, &report.warnings, {}};
    const auto t0 = std::chrono::steady_clock::now();
    try {
      fn(ctx);
      status.ok = true;
    } catch (const DataError& e) {
      status.message = e.what();
      report.error_kind = "data";
    } catch (const NumericError& e) {
      status.message = e.what();
      report.error_kind = "numerical";
    }
    status.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    status.outputs = ctx.outputs;
    std::cout << "stage " << name << ": "
              << (status.ok ? "ok" : "failed") << " ("
              << fmt(status.seconds) << " s)\n";
    report.stages.push_back(status);
    report.ok = report.ok && status.ok;
    return status.ok;
  };

  bool proceed = run_stage("ingest", [&](StageContext&) {
    table = load_bookings_file(config.input_path, opts);
    report.rows_read = table.rows_read;
    report.rows_dropped = table.rows_dropped;
    report.weight_dropped = table.weight_dropped;
  });

  for (const auto& name : stages) {
    if (!proceed) break;
    if (name == "descriptives") proceed = run_stage(name, stage_descriptives);
    else if (name == "density") proceed = run_stage(name, stage_density);
    else if (name == "nb") proceed = run_stage(name, stage_nb);
    else if (name == "hurdle") proceed = run_stage(name, stage_hurdle);
    else if (name == "sarima") proceed = run_stage(name, stage_sarima);
  }

  std::ofstream summary(std::filesystem::path(config.out_dir) / "run_summary.json",
                        std::ios::binary);
  if (!summary) throw DataError("cannot write run summary in " + config.out_dir);
  write_run_summary(summary, report);
  return report;
}

void write_run_summary(std::ostream& out, const RunReport& report) {
  ordered_json j;
  j["ok"] = report.ok;
  if (!report.error_kind.empty()) j["error_kind"] = report.error_kind;
  j["ingest"]["rows_read"] = report.rows_read;
  j["ingest"]["rows_dropped"] = report.rows_dropped;
  j["ingest"]["weight_dropped"] = report.weight_dropped;
  j["stages"] = ordered_json::array();
  for (const auto& s : report.stages) {
    ordered_json stage;
    stage["name"] = s.name;
    stage["ok"] = s.ok;
    if (!s.message.empty()) stage["error"] = s.message;
    stage["outputs"] = s.outputs;
    j["stages"].push_back(stage);
  }
  j["warnings"] = report.warnings;
  out << j.dump(2) << '\n';
}

}  // namespace npb
