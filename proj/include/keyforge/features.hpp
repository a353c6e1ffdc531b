#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "keyforge/trace.hpp"

namespace keyforge::features {

inline constexpr double kPauseThresholdMs = 500.0;
inline constexpr double kBurstThresholdMs = 150.0;
inline constexpr int kEntropyBins = 50;
inline constexpr double kEntropyRangeMs = 2000.0;

// All dispersion statistics use population (divide-by-n) denominators.
double delta(std::span<const double> ikis);
double mean_iki(std::span<const double> ikis);
double var_iki(std::span<const double> ikis);
double pause_density(std::span<const double> ikis);
double burst_length(std::span<const double> ikis);
double iki_entropy(std::span<const double> ikis);
double digraph_var(std::span<const double> ikis);
double autocorr1(std::span<const double> ikis);
double skewness(std::span<const double> ikis);
// Excess kurtosis (Gaussian = 0).
double kurtosis(std::span<const double> ikis);

struct FeatureVector {
  double delta = 0.0;
  double mean_iki = 0.0;
  double var_iki = 0.0;
  double pause_density = 0.0;
  double burst_length = 0.0;
  double entropy = 0.0;
  double digraph_var = 0.0;
  double autocorr1 = 0.0;
  double skewness = 0.0;
  double kurtosis = 0.0;

  static constexpr std::size_t kCount = 10;
  // The first kDetectorCount fields are the detector features; the rest are
  // temporal-structure diagnostics.
  static constexpr std::size_t kDetectorCount = 7;

  std::array<double, kCount> as_array() const noexcept;
  std::array<double, kDetectorCount> detector_features() const noexcept;
};

// Column names in CSV order, matching FeatureVector::as_array().
inline constexpr std::array<std::string_view, FeatureVector::kCount> kFeatureNames = {
    "delta", "mean_iki", "var_iki", "pause_density", "burst_length",
    "entropy", "digraph_var", "autocorr1", "skewness", "kurtosis"};

FeatureVector from_ikis(std::span<const double> ikis);

// Trims, then computes every field. With zero IKI variance the three
// standardized diagnostics are reported as 0 instead of raising.
FeatureVector feature_vector(const Trace& trace);

struct SessionFeatures {
  std::string session_id;
  ProvenanceLabel label;
  FeatureVector features;
};

std::vector<SessionFeatures> extract_all(const std::vector<Trace>& traces);

// Per-session delta for every trace, in input order.
std::vector<double> deltas(const std::vector<Trace>& traces);

// session_id,label,<feature columns>
void write_feature_csv(const std::vector<SessionFeatures>& rows, std::ostream& out);

}  // namespace keyforge::features
