#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "keyforge/features.hpp"
#include "keyforge/stats.hpp"
#include "keyforge/trace.hpp"

namespace keyforge::report {

#ifdef KEYFORGE_VERSION
inline constexpr std::string_view kVersion = KEYFORGE_VERSION;
#else
inline constexpr std::string_view kVersion = "0.0.0";
#endif

// 64-bit FNV-1a, rendered as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

// {"toolkit", "version", "seed", "config_hash", "config"}; the hash covers config.dump().
nlohmann::ordered_json provenance(const nlohmann::ordered_json& config, std::uint64_t seed);

// Writes provenance next to `output` as `<output>.meta.json`.
void write_meta(const std::filesystem::path& output, const nlohmann::ordered_json& config, std::uint64_t seed);

// Per-session deltas keyed by condition name. "human" is the reference arm.
struct Conditions {
  std::vector<double> human;
  std::vector<double> automated;
  std::map<std::string, std::vector<double>> attacks;
  // Per-session detector features, same keys, used by the ablation table.
  std::vector<features::FeatureVector> human_features;
  std::vector<features::FeatureVector> automated_features;
  std::map<std::string, std::vector<features::FeatureVector>> attack_features;
};

Conditions load_conditions(const std::vector<Trace>& human, const std::vector<Trace>& automated,
                           const std::map<std::string, std::vector<Trace>>& attacks);

struct BaselineRow {
  std::string condition;
  std::size_t n = 0;
  double delta_mean = 0.0;
  double delta_sd = 0.0;
  // Fraction of sessions with delta above the threshold; attacks only.
  double bypass = std::nan("");
  stats::Interval bypass_ci;
  stats::EffectSize d_vs_human;
  bool has_effect = false;
};

struct Baseline {
  double threshold = 0.0;
  double far = 0.0;
  double frr = 0.0;
  double auc = 0.0;
  stats::WelchResult welch;
  std::vector<BaselineRow> rows;
};

Baseline baseline_table(const Conditions& c);
void write_baseline_csv(const Baseline& b, std::ostream& out);

// Rows are the seven detector features; columns are attacks then the automated control.
struct Ablation {
  std::vector<std::string> columns;
  std::vector<std::string> features;
  std::vector<std::vector<double>> d;
};

Ablation ablation_table(const Conditions& c);
void write_ablation_csv(const Ablation& a, std::ostream& out);

struct DistanceRow {
  std::string attack;
  stats::DistanceReport distance;
  double dpi_bound = 0.5;
};

std::vector<DistanceRow> distance_table(const Conditions& c);
void write_distance_csv(const std::vector<DistanceRow>& rows, std::ostream& out);

nlohmann::ordered_json bounds(const Baseline& b, const std::vector<DistanceRow>& distances);

// Overlaid delta histograms, one outline per condition, with the threshold marked.
std::string delta_histogram_svg(const Conditions& c, double threshold);

struct ReportOptions {
  std::vector<double> thresholds;
  nlohmann::ordered_json config;
  std::uint64_t seed = 42;
};

// Writes baseline.csv, operating.csv, ablation.csv, distances.csv, bounds.json,
// delta_hist.svg and report.meta.json into `dir`.
void write_report(const std::filesystem::path& dir, const Conditions& c, const ReportOptions& options);

}  // namespace keyforge::report
