#pragma once

/// @file stats.hpp
/// Monte Carlo comparison harness: Kolmogorov–Smirnov tests, moment bands
/// and pass/fail reports.

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qtrack/phase_space.hpp"

namespace qtrack {

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Asymptotic Kolmogorov survival function Q(λ) = 2 Σ (−1)^{k−1} e^{−2k²λ²}.
double kolmogorov_survival(double lambda);

KsResult ks_one_sample(std::vector<double> sample, const std::function<double(double)>& cdf);
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

struct Criterion {
  std::string name;
  double observed = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string detail;
};

struct ComparisonReport {
  std::vector<Criterion> criteria;

  bool all_pass() const;
  void add(Criterion c) { criteria.push_back(std::move(c)); }
  void merge(const ComparisonReport& other, const std::string& prefix = "");
  nlohmann::json to_json() const;
};

struct CompareOptions {
  double n_sigma = 4.0;
  double ks_alpha = 1e-3;
  bool second_moments = true;
  bool ks = true;
  std::string label;
};

/// Rows are samples, columns are coordinates. Compares all means, all
/// second joint moments E[x_i x_j] (|Δ| ≤ n_sigma·σ_MC) and the KS test of
/// every marginal. Throws on empty samples or mismatched widths.
ComparisonReport compare_distributions(const Mat& a, const Mat& b, const CompareOptions& options = {});

/// Sample mean of each column against @p expected with n_sigma·sd/√n bands.
ComparisonReport compare_mean(const Mat& sample, const Vec& expected, double n_sigma,
                              const std::string& label);

Vec column_means(const Mat& sample);
Mat sample_covariance(const Mat& sample);

/// Covariance of @p sample against @p expected: each entry's Monte Carlo
/// standard error is estimated from the products (x_i − x̄_i)(x_j − x̄_j).
ComparisonReport compare_covariance(const Mat& sample, const Mat& expected, double n_sigma,
                                    const std::string& label);

}  // namespace qtrack
