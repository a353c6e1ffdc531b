#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "keyforge/features.hpp"

namespace keyforge::detect {

// Dense row-major feature matrix.
struct Dataset {
  std::size_t cols = 0;
  std::vector<double> values;
  std::vector<int> labels;  // 1 = HUMAN, 0 = AI

  std::size_t rows() const noexcept { return labels.size(); }
  std::span<const double> row(std::size_t i) const noexcept { return {values.data() + i * cols, cols}; }
  void add(std::span<const double> features, int label);
  Dataset subset(std::span<const std::size_t> rows) const;
};

// Rows from the seven detector features of each trace.
Dataset detector_dataset(const std::vector<Trace>& positives, const std::vector<Trace>& negatives);
std::vector<double> detector_row(const features::FeatureVector& f);

struct ThresholdResult {
  double threshold = 0.0;
  double far = 0.0;
  double frr = 0.0;
};

// Predict HUMAN iff delta > threshold.
struct ThresholdDetector {
  double threshold = 0.269;

  bool is_human(double delta) const noexcept { return delta > threshold; }
};

// Candidate thresholds are the midpoints of consecutive distinct pooled values.
// Minimizes |FAR - FRR|, then FAR + FRR, then the threshold itself.
ThresholdResult fit_eer_threshold(std::span<const double> human, std::span<const double> automated);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;
  double auc = 0.5;
};

// AUC is the Mann-Whitney probability P(pos > neg) + P(pos = neg) / 2.
RocCurve roc_auc(std::span<const double> positives, std::span<const double> negatives);
double auc(std::span<const double> positives, std::span<const double> negatives);

// Z-score constants fitted on a training fold; zero-variance columns are dropped.
struct Standardizer {
  std::vector<std::size_t> kept;
  std::vector<std::size_t> dropped;
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Dataset& data);
  std::vector<double> apply(std::span<const double> row) const;
};

struct LogisticConfig {
  // Inverse L2 strength (penalty ||w||^2 / (2 C n)).
  double c = 1.0;
  double tolerance = 1e-6;
  int max_iterations = 10000;
};

struct LogisticModel {
  Standardizer standardizer;
  std::vector<double> weights;
  double bias = 0.0;
  int iterations = 0;
  double gradient_norm = 0.0;

  double predict_proba(std::span<const double> row) const;
};

struct MlpConfig {
  std::vector<int> hidden = {64, 32};
  double learning_rate = 1e-3;
  double l2 = 1e-4;
  int epochs = 50;
  int batch_size = 64;
  std::uint64_t seed = 42;
};

// tanh hidden layers, sigmoid output, cross-entropy loss.
struct MlpModel {
  Standardizer standardizer;
  std::vector<int> sizes;  // input, hidden..., 1
  std::vector<double> params;
  double final_loss = 0.0;

  double predict_proba(std::span<const double> row) const;
};

LogisticModel train_logistic(const Dataset& data, const LogisticConfig& config = {});
MlpModel train_mlp(const Dataset& data, const MlpConfig& config = {});

// Objective and gradient on already-standardized rows; exposed for gradient checks.
double logistic_objective(const std::vector<double>& weights, double bias, const std::vector<std::vector<double>>& x,
                          const std::vector<int>& y, double l2, std::vector<double>* grad);
double mlp_objective(const std::vector<int>& sizes, const std::vector<double>& params,
                     const std::vector<std::vector<double>>& x, const std::vector<int>& y, double l2,
                     std::vector<double>* grad);
std::vector<double> mlp_init(const std::vector<int>& sizes, std::uint64_t seed);

// Fold index per row; classes are shuffled independently and dealt round-robin,
// the deal continuing from one class into the next.
std::vector<int> stratified_folds(const std::vector<int>& labels, int k, std::uint64_t seed);

enum class ClassifierKind { Logistic, Mlp };

struct CvReport {
  std::vector<double> fold_auc;
  std::vector<double> fold_accuracy;
  double mean_auc = 0.0;
  double mean_accuracy = 0.0;
};

CvReport cross_validate(const Dataset& data, ClassifierKind kind, int k = 5, std::uint64_t seed = 42);

struct AttackEvaluation {
  std::string name;
  std::size_t n = 0;
  double apr = 0.0;
  double mean_confidence = 0.0;
};

AttackEvaluation evaluate_attack(const ThresholdDetector& detector, const std::string& name,
                                 const std::vector<Trace>& corpus);
AttackEvaluation evaluate_attack(const LogisticModel& model, const std::string& name, const std::vector<Trace>& corpus);
AttackEvaluation evaluate_attack(const MlpModel& model, const std::string& name, const std::vector<Trace>& corpus);

template <typename Detector>
std::vector<AttackEvaluation> evaluate_attacks(const Detector& detector,
                                               const std::map<std::string, std::vector<Trace>>& corpora) {
  std::vector<AttackEvaluation> out;
  for (const auto& [name, corpus] : corpora) out.push_back(evaluate_attack(detector, name, corpus));
  return out;
}

struct OperatingRow {
  double threshold = 0.0;
  double frr = 0.0;
  std::map<std::string, double> apr;
};

struct OperatingTable {
  std::vector<OperatingRow> rows;
};

// Column names of the operating-table CSV after threshold,frr.
inline const std::vector<std::string> kSweepAttackColumns = {"histogram", "statistical", "lstm", "copytype"};

OperatingTable operating_sweep(std::span<const double> human_deltas,
                               const std::map<std::string, std::vector<double>>& attack_deltas,
                               std::span<const double> thresholds);

// threshold,frr,apr_histogram,apr_statistical,apr_lstm,apr_copytype; absent attacks leave empty cells.
void write_operating_csv(const OperatingTable& table, std::ostream& out);

nlohmann::json to_json(const LogisticModel& model);
nlohmann::json to_json(const MlpModel& model);
nlohmann::json to_json(const CvReport& report);
LogisticModel logistic_from_json(const nlohmann::json& doc);
MlpModel mlp_from_json(const nlohmann::json& doc);

}  // namespace keyforge::detect
