#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "keyforge/random.hpp"
#include "keyforge/trace.hpp"

namespace keyforge::seqmodel {

struct MdnLstmConfig {
  int embed_dim = 32;
  int hidden_units = 64;
  int layers = 2;
  int mixture_components = 5;
  double learning_rate = 1e-3;
  int epochs = 5;
  int batch_size = 64;
  std::uint64_t seed = 42;
  // Character inventory size including the reserved unknown-key slot; set by
  // train() from the corpus when left at 0.
  int vocab_size = 0;
  int bptt_window = 64;
  // Lower bound on mixture scales, in normalized IKI units.
  double sigma_floor = 1e-3;
  double val_fraction = 0.2;

  void validate() const;

  bool operator==(const MdnLstmConfig&) const = default;
};

// Per-step Gaussian mixture over the normalized IKI.
struct MixtureParams {
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> scales;
};

// Maps a raw head output [logits | means | log-scales] to mixture parameters.
// Temperature divides the component logits only; 0 selects argmax.
MixtureParams mixture_from_raw(std::span<const double> raw, int components, double sigma_floor,
                               double temperature = 1.0);

// -log sum_k w_k N(target; mu_k, sigma_k^2), evaluated with log-sum-exp.
double mdn_nll(const MixtureParams& params, double target);

struct TrainRecord {
  int epoch = 0;
  double train_nll = 0.0;
  double val_nll = 0.0;
};

struct Tensor {
  std::string name;
  std::vector<int> shape;
  std::size_t offset = 0;
  std::size_t size() const noexcept;

  bool operator==(const Tensor&) const = default;
};

class MdnLstmModel {
 public:
  MdnLstmModel() = default;
  // Fresh, seeded initialization: uniform in +-1/sqrt(fan_in).
  MdnLstmModel(MdnLstmConfig config, std::vector<std::uint32_t> vocab);

  const MdnLstmConfig& config() const noexcept { return config_; }
  const std::vector<std::uint32_t>& vocab() const noexcept { return vocab_; }
  const std::vector<Tensor>& tensors() const noexcept { return tensors_; }
  const Tensor& tensor(std::string_view name) const;

  std::span<const double> parameters() const noexcept { return params_; }
  std::span<double> parameters() noexcept { return params_; }

  // 0 is the unknown-key slot.
  int vocab_index(std::uint32_t key) const noexcept;

  double norm_mean() const noexcept { return norm_mean_; }
  double norm_std() const noexcept { return norm_std_; }
  void set_normalization(double mean, double stddev);

  bool trained() const noexcept { return trained_; }
  int epochs_run() const noexcept { return epochs_run_; }
  double final_nll() const noexcept { return final_nll_; }
  void mark_trained(int epochs_run, double final_nll);

  void save(const std::filesystem::path& path) const;
  static MdnLstmModel load(const std::filesystem::path& path);
  std::string to_json() const;
  static MdnLstmModel from_json(std::string_view text);

  bool operator==(const MdnLstmModel&) const = default;

 private:
  void build_layout();

  MdnLstmConfig config_;
  std::vector<std::uint32_t> vocab_;
  std::vector<Tensor> tensors_;
  std::vector<double> params_;
  double norm_mean_ = 0.0;
  double norm_std_ = 1.0;
  bool trained_ = false;
  int epochs_run_ = 0;
  double final_nll_ = 0.0;
};

// One training sequence in model units.
struct Sequence {
  std::vector<int> tokens;
  std::vector<double> prev;    // normalized previous IKI (0 at the first step)
  std::vector<double> target;  // normalized IKI to predict
};

Sequence encode(const MdnLstmModel& model, const Trace& trace);

// Mean per-step NLL over `sequences` with full backpropagation through time.
// Writes the gradient into `grad` (resized to the parameter count) when given.
double loss_and_gradient(const MdnLstmModel& model, const std::vector<Sequence>& sequences,
                         std::vector<double>* grad);

struct TrainResult {
  MdnLstmModel model;
  std::vector<TrainRecord> history;
};

TrainResult train(MdnLstmConfig config, const std::vector<Trace>& corpus);

// Autoregressive IKI sequence of length text.size() - 1, clipped to
// [kSampleMinMs, kSampleMaxMs].
inline constexpr double kSampleMinMs = 30.0;
inline constexpr double kSampleMaxMs = 3000.0;

IkiSequence sample(const MdnLstmModel& model, std::u32string_view text, double temperature, Rng& rng);
IkiSequence sample(const MdnLstmModel& model, std::u32string_view text, double temperature, std::uint64_t seed);

// Central differences (h = 1e-4) against loss_and_gradient on >= 200 random
// parameters. Returns the largest |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
double finite_diff_check(const MdnLstmModel& model, const std::vector<Trace>& corpus_slice,
                         std::size_t n_params = 200, std::uint64_t seed = 42);

}  // namespace keyforge::seqmodel
