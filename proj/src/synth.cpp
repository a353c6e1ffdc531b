#include "keyforge/synth.hpp"

#include <cstdio>

#include "keyforge/error.hpp"

namespace keyforge::synth {

namespace {

constexpr char32_t kAlphabet[] =
    U" !\"#$%&'()*+,-./0123456789:;<=>?@ABCDEFGHIJKLMNOPQRSTUVWXYZ[\\]^_`abcdefghijklmnopqrstuvwxyz{|}~";

std::vector<Trace> gen_motor(const HumanMotorModel& model, const GeneratorSpec& spec, std::u32string_view text,
                             ProvenanceLabel label, std::string_view prefix) {
  model.validate();
  std::vector<Trace> out;
  out.reserve(static_cast<std::size_t>(spec.n_sessions));
  for (std::size_t i = 0; i < static_cast<std::size_t>(spec.n_sessions); ++i) {
    const std::size_t n = session_length(spec, i);
    Rng rng = make_stream(spec.seed, i, stream::kSession);
    out.push_back(make_trace(session_id(prefix, i), label, session_keys(text, n), human_intervals(model, n - 1, rng)));
  }
  return out;
}

}  // namespace

void HumanMotorModel::validate() const {
  if (!(log_sigma > 0.0)) throw Error(ErrorKind::InvalidSpec, "log_sigma must be > 0");
  if (!(pause_prob >= 0.0 && pause_prob <= 0.2)) throw Error(ErrorKind::InvalidSpec, "pause_prob must lie in [0, 0.2]");
  if (!(ar_alpha >= 0.0 && ar_alpha <= 0.95)) throw Error(ErrorKind::InvalidSpec, "ar_alpha must lie in [0, 0.95]");
  if (!(pause_log_sigma >= 0.0)) throw Error(ErrorKind::InvalidSpec, "pause_log_sigma must be >= 0");
  if (!(session_jitter >= 0.0)) throw Error(ErrorKind::InvalidSpec, "session_jitter must be >= 0");
  if (!std::isfinite(log_mu) || !std::isfinite(pause_log_mu)) {
    throw Error(ErrorKind::InvalidSpec, "log locations must be finite");
  }
}

HumanMotorModel default_human_model() { return HumanMotorModel{}; }

std::string_view to_string(GeneratorKind kind) noexcept {
  switch (kind) {
    case GeneratorKind::Human: return "human";
    case GeneratorKind::Automated: return "automated";
    case GeneratorKind::Histogram: return "histogram";
    case GeneratorKind::Statistical: return "statistical";
    case GeneratorKind::Lstm: return "lstm";
    case GeneratorKind::CopyType: return "copytype";
  }
  return "unknown";
}

GeneratorSpec GeneratorSpec::fixed(GeneratorKind kind, int n_sessions, int keystrokes, std::uint64_t seed) {
  GeneratorSpec spec;
  spec.kind = kind;
  spec.n_sessions = n_sessions;
  spec.keystrokes_min = keystrokes;
  spec.keystrokes_max = keystrokes;
  spec.seed = seed;
  return spec;
}

void GeneratorSpec::validate(GeneratorKind expected) const {
  if (kind != expected) {
    throw Error(ErrorKind::InvalidSpec, "generator expects kind '" + std::string(to_string(expected)) + "', got '" +
                                            std::string(to_string(kind)) + "'");
  }
  if (n_sessions < 1) throw Error(ErrorKind::InvalidSpec, "n_sessions must be >= 1");
  if (keystrokes_min < kMinGeneratorKeystrokes) {
    throw Error(ErrorKind::InvalidSpec, "keystrokes_per_session must be >= 51");
  }
  if (keystrokes_max < keystrokes_min) throw Error(ErrorKind::InvalidSpec, "keystroke range is inverted");
  if (kind == GeneratorKind::Automated && !(uniform_low_ms > 0.0 && uniform_high_ms > uniform_low_ms)) {
    throw Error(ErrorKind::InvalidSpec, "automated interval support must satisfy 0 < low < high");
  }
  if (kind == GeneratorKind::Lstm && !(temperature >= 0.0)) {
    throw Error(ErrorKind::InvalidSpec, "temperature must be >= 0");
  }
}

std::u32string_view printable_alphabet() noexcept { return {kAlphabet, 95}; }

std::vector<std::uint32_t> session_keys(std::u32string_view text, std::size_t length) {
  const std::u32string_view source = text.empty() ? printable_alphabet() : text;
  std::vector<std::uint32_t> keys(length);
  for (std::size_t i = 0; i < length; ++i) keys[i] = static_cast<std::uint32_t>(source[i % source.size()]);
  return keys;
}

std::size_t session_length(const GeneratorSpec& spec, std::size_t index) {
  if (spec.keystrokes_min == spec.keystrokes_max) return static_cast<std::size_t>(spec.keystrokes_min);
  Rng rng = make_stream(spec.seed, index, stream::kSessionLength);
  std::uniform_int_distribution<int> pick(spec.keystrokes_min, spec.keystrokes_max);
  return static_cast<std::size_t>(pick(rng));
}

std::string session_id(std::string_view prefix, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", index);
  return std::string(prefix) + "-" + buf;
}

std::vector<double> human_intervals(const HumanMotorModel& model, std::size_t count, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const double location = model.log_mu + model.session_jitter * normal(rng);
  const double innovation = std::sqrt(1.0 - model.ar_alpha * model.ar_alpha);

  std::vector<double> out(count);
  double e = 0.0;
  for (std::size_t j = 0; j < count; ++j) {
    // Draw all three variates every step so the streams stay aligned whatever
    // the pause outcome.
    const double eps = normal(rng);
    const double u = unit(rng);
    const double zeta = normal(rng);
    e = (j == 0) ? eps : model.ar_alpha * e + innovation * eps;
    out[j] = (u < model.pause_prob) ? std::exp(model.pause_log_mu + model.pause_log_sigma * zeta)
                                    : std::exp(location + model.log_sigma * e);
  }
  return out;
}

std::vector<Trace> gen_human(const HumanMotorModel& model, const GeneratorSpec& spec, std::u32string_view text) {
  spec.validate(GeneratorKind::Human);
  return gen_motor(model, spec, text, ProvenanceLabel::HumanComposed, "human");
}

std::vector<Trace> gen_copy_type(const HumanMotorModel& model, const GeneratorSpec& spec, std::u32string_view text) {
  spec.validate(GeneratorKind::CopyType);
  return gen_motor(model, spec, text, ProvenanceLabel::HumanTranscribed, "copy");
}

std::vector<Trace> gen_automated(const GeneratorSpec& spec, std::u32string_view text) {
  spec.validate(GeneratorKind::Automated);
  std::vector<Trace> out;
  out.reserve(static_cast<std::size_t>(spec.n_sessions));
  for (std::size_t i = 0; i < static_cast<std::size_t>(spec.n_sessions); ++i) {
    const std::size_t n = session_length(spec, i);
    Rng rng = make_stream(spec.seed, i, stream::kSession);
    std::uniform_real_distribution<double> gap(spec.uniform_low_ms, spec.uniform_high_ms);
    std::vector<double> intervals(n - 1);
    for (double& v : intervals) v = gap(rng);
    out.push_back(make_trace(session_id("auto", i), ProvenanceLabel::Automated, session_keys(text, n), intervals));
  }
  return out;
}

std::u32string to_u32(std::string_view utf8) {
  std::u32string out;
  out.reserve(utf8.size());
  for (std::size_t i = 0; i < utf8.size();) {
    const auto c = static_cast<unsigned char>(utf8[i]);
    std::size_t len = 1;
    char32_t cp = c;
    if (c >= 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else if (c >= 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if (c >= 0xC0) {
      len = 2;
      cp = c & 0x1F;
    }
    if (i + len > utf8.size()) throw Error(ErrorKind::ParseError, "truncated UTF-8 sequence");
    for (std::size_t k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(utf8[i + k]) & 0x3F);
    out.push_back(cp);
    i += len;
  }
  return out;
}

}  // namespace keyforge::synth
