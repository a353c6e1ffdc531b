#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>

#include "json.hpp"
#include "keyforge/synth.hpp"

namespace keyforge::stats {

inline constexpr double kPValueFloor = 1e-300;

struct EffectSize {
  double d = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
};

// Pooled-SD Cohen's d with a normal-approximation 95% interval.
EffectSize cohens_d(std::span<const double> a, std::span<const double> b);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

// Above this many degrees of freedom the two-sided p uses the normal tail.
inline constexpr double kWelchNormalDf = 200.0;

WelchResult welch_t(std::span<const double> a, std::span<const double> b);

// Standard normal CDF.
double normal_cdf(double x);

// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

// Quantile of Beta(a, b) by bisection on incomplete_beta.
double beta_quantile(double p, double a, double b);

// Two-sided tail probability of Student's t with `df` degrees of freedom.
double student_t_two_sided(double t, double df);

struct Interval {
  double low = 0.0;
  double high = 1.0;
};

Interval clopper_pearson(std::int64_t successes, std::int64_t trials, double level = 0.95);

// Exact two-sided binomial test against p0 = 1/2: sums every outcome no more
// likely than the observed one. Floored at 1e-300.
double binomial_test_vs_half(std::int64_t successes, std::int64_t trials);

struct DistanceReport {
  double js = 0.0;
  double tv = 0.0;
  double ks = 0.0;
  int bin_count = 50;
  double bin_low = 0.0;
  double bin_high = 0.0;
};

DistanceReport distances(std::span<const double> a, std::span<const double> b, int bins = 50);

// Two-sample Kolmogorov-Smirnov statistic over the pooled points.
double ks_statistic(std::span<const double> a, std::span<const double> b);

// Bayes-optimal error between two equal-variance Gaussians at separation d.
double bayes_error_from_d(double d);

// Lower bound on classification error implied by total variation.
double dpi_lower_bound(double tv);

struct NonidentResult {
  double best_feature_auc = 0.5;
  std::string best_feature;
  double logistic_cv_auc = 0.5;
  EffectSize delta_effect;
  std::size_t n_per_arm = 0;
};

// Composed vs copy-type sessions from the same motor model. `copy_model`
// defaults to `model`; a different model gives the positive control.
NonidentResult nonident_harness(const synth::HumanMotorModel& model, std::size_t n, std::uint64_t seed,
                                const synth::HumanMotorModel* copy_model = nullptr, int keystrokes = 300);

nlohmann::json to_json(const EffectSize& e);
nlohmann::json to_json(const WelchResult& w);
nlohmann::json to_json(const DistanceReport& r);
nlohmann::json to_json(const NonidentResult& r);

}  // namespace keyforge::stats
