#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "keyforge/random.hpp"
#include "keyforge/trace.hpp"

namespace keyforge::synth {

// Synthetic typist: lognormal base IKIs driven by AR(1) log-noise, with
// Bernoulli-injected lognormal pauses and a per-session location jitter.
struct HumanMotorModel {
  double log_mu = std::log(180.0);
  double log_sigma = 0.4;
  double ar_alpha = 0.3;
  double pause_prob = 0.05;
  double pause_log_mu = std::log(900.0);
  double pause_log_sigma = 0.5;
  double session_jitter = 0.1;
  std::uint64_t seed = 42;

  void validate() const;
};

// Calibrated default (log_sigma frozen by the calibration fixture in tests).
HumanMotorModel default_human_model();

enum class GeneratorKind { Human, Automated, Histogram, Statistical, Lstm, CopyType };

std::string_view to_string(GeneratorKind kind) noexcept;

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::Human;
  int n_sessions = 1;
  // Inclusive range; equal bounds give fixed-length sessions.
  int keystrokes_min = 300;
  int keystrokes_max = 300;
  std::uint64_t seed = 42;
  // Automated-injection interval support (ms).
  double uniform_low_ms = 30.0;
  double uniform_high_ms = 80.0;
  // Sampling temperature for the LSTM generator.
  double temperature = 1.0;

  static GeneratorSpec fixed(GeneratorKind kind, int n_sessions, int keystrokes, std::uint64_t seed);

  void validate(GeneratorKind expected) const;
};

inline constexpr int kMinGeneratorKeystrokes = 51;

// 95 printable ASCII characters, space through tilde.
std::u32string_view printable_alphabet() noexcept;

// Key codes for one session: the supplied text cycled to length, or the
// printable alphabet when text is empty.
std::vector<std::uint32_t> session_keys(std::u32string_view text, std::size_t length);

// Session length for session `index` under the spec's (possibly ranged) size.
std::size_t session_length(const GeneratorSpec& spec, std::size_t index);

std::string session_id(std::string_view prefix, std::size_t index);

// One session of motor-model intervals (length - 1 values) drawn from `rng`.
std::vector<double> human_intervals(const HumanMotorModel& model, std::size_t count, Rng& rng);

std::vector<Trace> gen_human(const HumanMotorModel& model, const GeneratorSpec& spec, std::u32string_view text = {});
std::vector<Trace> gen_automated(const GeneratorSpec& spec, std::u32string_view text = {});
// Same generative process as gen_human; only the label differs.
std::vector<Trace> gen_copy_type(const HumanMotorModel& model, const GeneratorSpec& spec, std::u32string_view text = {});

std::u32string to_u32(std::string_view utf8_ascii);

}  // namespace keyforge::synth
