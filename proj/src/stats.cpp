#include "qtrack/stats.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qtrack {
namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

// Stephens' finite-n correction to the asymptotic statistic.
double ks_p_value(double d, double n_eff) {
  const double root = std::sqrt(n_eff);
  return kolmogorov_survival((root + 0.12 + 0.11 / root) * d);
}

}  // namespace

double kolmogorov_survival(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-16 * std::abs(sum)) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_one_sample(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw Error("KS test needs a non-empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return {d, ks_p_value(d, n)};
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw Error("KS test needs non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return {d, ks_p_value(d, na * nb / (na + nb))};
}

bool ComparisonReport::all_pass() const {
  return std::all_of(criteria.begin(), criteria.end(), [](const Criterion& c) { return c.pass; });
}

void ComparisonReport::merge(const ComparisonReport& other, const std::string& prefix) {
  for (auto c : other.criteria) {
    if (!prefix.empty()) c.name = prefix + c.name;
    criteria.push_back(std::move(c));
  }
}

nlohmann::json ComparisonReport::to_json() const {
  nlohmann::json out;
  out["all_pass"] = all_pass();
  out["criteria"] = nlohmann::json::array();
  for (const auto& c : criteria) {
    out["criteria"].push_back({{"name", c.name},
                               {"observed", c.observed},
                               {"tolerance", c.tolerance},
                               {"pass", c.pass},
                               {"detail", c.detail}});
  }
  return out;
}

Vec column_means(const Mat& sample) { return sample.colwise().mean().transpose(); }

Mat sample_covariance(const Mat& sample) {
  if (sample.rows() < 2) throw Error("covariance needs at least two samples");
  const Mat centred = sample.rowwise() - sample.colwise().mean();
  return centred.transpose() * centred / double(sample.rows() - 1);
}

ComparisonReport compare_distributions(const Mat& a, const Mat& b, const CompareOptions& options) {
  if (a.rows() < 2 || b.rows() < 2) throw Error("compare_distributions needs at least two samples each");
  if (a.cols() != b.cols() || a.cols() == 0) throw Error("compare_distributions: sample widths differ");
  const double na = double(a.rows()), nb = double(b.rows());
  const std::string tag = options.label.empty() ? "" : options.label + ".";

  ComparisonReport report;
  const Vec ma = column_means(a), mb = column_means(b);
  const Mat ca = sample_covariance(a), cb = sample_covariance(b);
  for (Eigen::Index i = 0; i < a.cols(); ++i) {
    const double sigma = std::sqrt(ca(i, i) / na + cb(i, i) / nb);
    const double delta = std::abs(ma(i) - mb(i));
    report.add({tag + "mean[" + std::to_string(i) + "]", delta, options.n_sigma * sigma,
                delta <= options.n_sigma * sigma || (sigma == 0.0 && delta == 0.0),
                "|Δmean| vs " + fmt(options.n_sigma) + "σ_MC"});
  }
  if (options.second_moments) {
    for (Eigen::Index i = 0; i < a.cols(); ++i) {
      for (Eigen::Index j = i; j < a.cols(); ++j) {
        const Vec pa = a.col(i).cwiseProduct(a.col(j));
        const Vec pb = b.col(i).cwiseProduct(b.col(j));
        const double va = (pa.array() - pa.mean()).square().sum() / (na - 1);
        const double vb = (pb.array() - pb.mean()).square().sum() / (nb - 1);
        const double sigma = std::sqrt(va / na + vb / nb);
        const double delta = std::abs(pa.mean() - pb.mean());
        report.add({tag + "E[x" + std::to_string(i) + "x" + std::to_string(j) + "]", delta,
                    options.n_sigma * sigma, delta <= options.n_sigma * sigma,
                    "|Δ second moment| vs " + fmt(options.n_sigma) + "σ_MC"});
      }
    }
  }
  if (options.ks) {
    for (Eigen::Index i = 0; i < a.cols(); ++i) {
      std::vector<double> xa(a.col(i).data(), a.col(i).data() + a.rows());
      std::vector<double> xb(b.col(i).data(), b.col(i).data() + b.rows());
      const auto ks = ks_two_sample(std::move(xa), std::move(xb));
      report.add({tag + "ks[" + std::to_string(i) + "]", ks.p_value, options.ks_alpha,
                  ks.p_value >= options.ks_alpha, "KS D = " + fmt(ks.statistic) + ", p-value vs α"});
    }
  }
  return report;
}

ComparisonReport compare_mean(const Mat& sample, const Vec& expected, double n_sigma,
                              const std::string& label) {
  if (sample.rows() < 2 || sample.cols() != expected.size()) throw Error("compare_mean: bad shapes");
  ComparisonReport report;
  const Vec m = column_means(sample);
  const Mat c = sample_covariance(sample);
  for (Eigen::Index i = 0; i < sample.cols(); ++i) {
    const double sigma = std::sqrt(c(i, i) / double(sample.rows()));
    const double delta = std::abs(m(i) - expected(i));
    report.add({label + "[" + std::to_string(i) + "]", delta, n_sigma * sigma,
                delta <= n_sigma * sigma, "|mean − expected| vs " + fmt(n_sigma) + "σ_MC"});
  }
  return report;
}

ComparisonReport compare_covariance(const Mat& sample, const Mat& expected, double n_sigma,
                                    const std::string& label) {
  const auto n = sample.rows();
  if (n < 2 || expected.rows() != sample.cols() || expected.cols() != sample.cols()) {
    throw Error("compare_covariance: bad shapes");
  }
  ComparisonReport report;
  const Mat centred = sample.rowwise() - sample.colwise().mean();
  const Mat cov = sample_covariance(sample);
  for (Eigen::Index i = 0; i < sample.cols(); ++i) {
    for (Eigen::Index j = i; j < sample.cols(); ++j) {
      const Vec prod = centred.col(i).cwiseProduct(centred.col(j));
      const double se = std::sqrt((prod.array() - prod.mean()).square().sum() / double(n - 1) / double(n));
      const double delta = std::abs(cov(i, j) - expected(i, j));
      report.add({label + "[" + std::to_string(i) + "," + std::to_string(j) + "]", delta,
                  n_sigma * se, delta <= n_sigma * se, "|Δcov| vs " + fmt(n_sigma) + "σ_MC"});
    }
  }
  return report;
}

}  // namespace qtrack
