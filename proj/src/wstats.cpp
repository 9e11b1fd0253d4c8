#include "npb/wstats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "npb/accum.hpp"
#include "npb/errors.hpp"

namespace npb {

WeightedSample to_weighted_sample(const BookingTable& table) {
  const auto n = Eigen::Index(table.records.size());
  WeightedSample s;
  s.values.resize(n);
  s.weights.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    s.values(i) = double(table.records[size_t(i)].nights);
    s.weights(i) = double(table.records[size_t(i)].weight);
  }
  return s;
}

void validate(const WeightedSample& s) {
  if (s.values.size() == 0) throw DataError("weighted sample is empty");
  if (s.values.size() != s.weights.size()) {
    throw DataError("weighted sample: values and weights differ in length");
  }
  if ((s.weights.array() <= 0.0).any()) {
    throw DataError("weighted sample: weights must be positive");
  }
}

double weighted_mean(const WeightedSample& s) {
  validate(s);
  CompensatedSum<> num, den;
  for (Eigen::Index i = 0; i < s.values.size(); ++i) {
    num.add(s.weights(i) * s.values(i));
    den.add(s.weights(i));
  }
  return num.value() / den.value();
}

double weighted_variance(const WeightedSample& s) {
  const double mean = weighted_mean(s);
  CompensatedSum<> num, den;
  for (Eigen::Index i = 0; i < s.values.size(); ++i) {
    const double d = s.values(i) - mean;
    num.add(s.weights(i) * d * d);
    den.add(s.weights(i));
  }
  return num.value() / den.value();
}

double weighted_sd(const WeightedSample& s) {
  return std::sqrt(weighted_variance(s));
}

double weighted_quantile(const WeightedSample& s, double p) {
  validate(s);
  if (!(p > 0.0 && p <= 1.0)) {
    throw std::invalid_argument("weighted_quantile: p must lie in (0, 1]");
  }
  const auto n = s.values.size();
  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return s.values(a) < s.values(b);
  });

  // inf{ y : F_w(y) >= p } with F_w right-continuous. Comparing cumulative
  // weight against p * W reproduces, for integer weights, the ceil(p*N)
  // order statistic of the expanded sample, including its rounding.
  CompensatedSum<> total;
  for (Eigen::Index i = 0; i < n; ++i) total.add(s.weights(i));
  const double target = p * total.value();

  CompensatedSum<> cum;
  for (Eigen::Index idx : order) {
    cum.add(s.weights(idx));
    if (cum.value() >= target) return s.values(idx);
  }
  return s.values(order.back());  // guard against rounding shortfall at p = 1
}

std::vector<PhaseDescriptives> phase_descriptives(const BookingTable& table) {
  std::vector<PhaseDescriptives> out;
  for (Phase phase : {Phase::PreCovid, Phase::Restriction, Phase::PostVaccine}) {
    WeightedSample s;
    std::vector<double> v, w;
    std::int64_t total = 0;
    for (const auto& r : table.records) {
      if (r.phase != phase) continue;
      v.push_back(double(r.nights));
      w.push_back(double(r.weight));
      total += r.weight;
    }
    if (v.empty()) continue;
    s.values = Eigen::Map<Eigen::VectorXd>(v.data(), Eigen::Index(v.size()));
    s.weights = Eigen::Map<Eigen::VectorXd>(w.data(), Eigen::Index(w.size()));

    PhaseDescriptives d;
    d.phase = phase;
    d.mean = weighted_mean(s);
    d.median = weighted_quantile(s, 0.5);
    d.p25 = weighted_quantile(s, 0.25);
    d.p75 = weighted_quantile(s, 0.75);
    d.sd = weighted_sd(s);
    d.total_weight = total;
    out.push_back(d);
  }
  return out;
}

}  // namespace npb
