#include "npb/hurdle.hpp"

#include <cmath>

#include "npb/accum.hpp"
#include "npb/errors.hpp"

namespace npb {

HurdleFit fit_hurdle(const BookingTable& table, int threshold) {
  if (table.records.empty()) throw DataError("fit_hurdle: empty table");
  if (threshold < 2) throw std::invalid_argument("fit_hurdle: threshold must be >= 2");

  HurdleFit fit;
  fit.threshold = threshold;
  fit.month_mass.setZero();

  BookingTable long_part;
  const auto n = Eigen::Index(table.records.size());
  Eigen::VectorXd gate(n), w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = table.records[size_t(i)];
    gate(i) = r.nights >= threshold ? 1.0 : 0.0;
    w(i) = double(r.weight);
    fit.month_mass(int(r.phase), r.month - 1) += double(r.weight);
    if (r.nights >= threshold) long_part.records.push_back(r);
  }
  if (long_part.records.empty()) {
    throw DataError("fit_hurdle: no stays reach the long-stay threshold");
  }

  const DesignMatrix design = build_design(table);
  fit.logit_part = fit_weighted_glm(design, gate, w, GlmFamily::Logistic);

  const DesignMatrix long_design = build_design(long_part);
  const auto m = Eigen::Index(long_part.records.size());
  Eigen::VectorXd ly(m), lw(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    ly(i) = double(long_part.records[size_t(i)].nights);
    lw(i) = double(long_part.records[size_t(i)].weight);
  }
  fit.nb_part = fit_weighted_glm(long_design, ly, lw, GlmFamily::NegBin);
  return fit;
}

double prevalence(const HurdleFit& fit, Phase phase, int month) {
  const double eta = fit.logit_part.coefficients.dot(design_row(phase, month));
  return 1.0 / (1.0 + std::exp(-eta));
}

double conditional_mean(const HurdleFit& fit, Phase phase, int month) {
  return std::exp(fit.nb_part.coefficients.dot(design_row(phase, month)));
}

std::vector<ImpactRow> combined_impact(const HurdleFit& fit, Phase reference) {
  std::vector<std::pair<double, double>> components;
  std::vector<bool> present(3, false);
  for (int p = 0; p < 3; ++p) {
    double mass = 0.0, prev = 0.0, mean = 0.0;
    for (int m = 0; m < 12; ++m) {
      const double cell = fit.month_mass(p, m);
      if (cell <= 0.0) continue;
      mass += cell;
      prev += cell * prevalence(fit, Phase(p), m + 1);
      mean += cell * conditional_mean(fit, Phase(p), m + 1);
    }
    present[size_t(p)] = mass > 0.0;
    components.push_back(mass > 0.0 ? std::make_pair(prev / mass, mean / mass)
                                    : std::make_pair(0.0, 0.0));
  }
  if (!present[size_t(int(reference))]) {
    throw DataError("combined_impact: reference phase has no bookings");
  }
  auto rows = impact_rows_from(components, int(reference));
  std::vector<ImpactRow> out;
  for (int p = 0; p < 3; ++p) {
    if (present[size_t(p)]) out.push_back(rows[size_t(p)]);
  }
  return out;
}

std::vector<ImpactRow> impact_rows_from(
    const std::vector<std::pair<double, double>>& components, int reference_index) {
  if (reference_index < 0 || size_t(reference_index) >= components.size()) {
    throw std::invalid_argument("impact_rows_from: reference index out of range");
  }
  const double ref_contribution = components[size_t(reference_index)].first *
                                  components[size_t(reference_index)].second;
  std::vector<ImpactRow> out;
  for (size_t p = 0; p < components.size(); ++p) {
    ImpactRow row;
    row.phase = Phase(int(p));
    row.prevalence = components[p].first;
    row.conditional_mean = components[p].second;
    row.contribution = row.prevalence * row.conditional_mean;
    row.excess_vs_ref = row.contribution - ref_contribution;
    out.push_back(row);
  }
  return out;
}

EmpiricalDecomposition empirical_decomposition(const BookingTable& table,
                                               int threshold) {
  if (table.records.empty()) throw DataError("empirical_decomposition: empty table");
  CompensatedSum<> w_long, w_short, s_long, s_short;
  for (const auto& r : table.records) {
    const double w = double(r.weight);
    if (r.nights >= threshold) {
      w_long.add(w);
      s_long.add(w * double(r.nights));
    } else {
      w_short.add(w);
      s_short.add(w * double(r.nights));
    }
  }
  const double wl = w_long.value(), ws = w_short.value();
  EmpiricalDecomposition d;
  d.total_mean = (s_long.value() + s_short.value()) / (wl + ws);
  d.long_share = wl / (wl + ws);
  d.long_mean = wl > 0.0 ? s_long.value() / wl : 0.0;
  d.short_mean = ws > 0.0 ? s_short.value() / ws : 0.0;
  return d;
}

}  // namespace npb
