#include "keyforge/report.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "keyforge/detect.hpp"
#include "keyforge/error.hpp"
#include "keyforge/format.hpp"

namespace keyforge::report {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  return out;
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::string cell(double v) { return format_fixed(v, 6); }

std::vector<double> column(const std::vector<features::FeatureVector>& rows, std::size_t f) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.detector_features()[f]);
  return out;
}

// Cohen's d, or NaN when a feature is constant in both arms.
double safe_d(const std::vector<double>& a, const std::vector<double>& b) {
  try {
    return stats::cohens_d(a, b).d;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ZeroPooledVariance) return std::nan("");
    throw;
  }
}

}  // namespace

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[h & 0xf];
    h >>= 4;
  }
  return out;
}

nlohmann::ordered_json provenance(const nlohmann::ordered_json& config, std::uint64_t seed) {
  nlohmann::ordered_json meta;
  meta["toolkit"] = "keyforge";
  meta["version"] = std::string(kVersion);
  meta["seed"] = seed;
  meta["config_hash"] = fnv1a_hex(config.dump());
  meta["config"] = config;
  return meta;
}

void write_meta(const std::filesystem::path& output, const nlohmann::ordered_json& config, std::uint64_t seed) {
  auto out = open_out(output.string() + ".meta.json");
  out << provenance(config, seed).dump(2) << '\n';
}

Conditions load_conditions(const std::vector<Trace>& human, const std::vector<Trace>& automated,
                           const std::map<std::string, std::vector<Trace>>& attacks) {
  Conditions c;
  auto fill = [](const std::vector<Trace>& traces, std::vector<double>& deltas,
                 std::vector<features::FeatureVector>& feats) {
    for (const auto& t : traces) {
      feats.push_back(features::feature_vector(t));
      deltas.push_back(feats.back().delta);
    }
  };
  fill(human, c.human, c.human_features);
  fill(automated, c.automated, c.automated_features);
  for (const auto& [name, traces] : attacks) fill(traces, c.attacks[name], c.attack_features[name]);
  return c;
}

Baseline baseline_table(const Conditions& c) {
  if (c.human.size() < 2 || c.automated.size() < 2) {
    throw Error(ErrorKind::EmptySample, "baseline needs at least two human and two automated sessions");
  }
  Baseline b;
  const auto eer = detect::fit_eer_threshold(c.human, c.automated);
  b.threshold = eer.threshold;
  b.far = eer.far;
  b.frr = eer.frr;
  b.auc = detect::auc(c.human, c.automated);
  b.welch = stats::welch_t(c.human, c.automated);

  auto row = [&](const std::string& name, const std::vector<double>& d, bool attack) {
    BaselineRow r;
    r.condition = name;
    r.n = d.size();
    r.delta_mean = mean_of(d);
    r.delta_sd = sd_of(d);
    if (name != "human" && d.size() >= 2) {
      // Positive d means the human arm has the larger delta.
      r.d_vs_human = stats::cohens_d(c.human, d);
      r.has_effect = true;
    }
    if (attack && !d.empty()) {
      const auto pass = static_cast<std::int64_t>(std::count_if(d.begin(), d.end(), [&](double v) {
        return v > b.threshold;
      }));
      r.bypass = static_cast<double>(pass) / static_cast<double>(d.size());
      r.bypass_ci = stats::clopper_pearson(pass, static_cast<std::int64_t>(d.size()));
    }
    return r;
  };
  b.rows.push_back(row("human", c.human, false));
  b.rows.push_back(row("automated", c.automated, false));
  for (const auto& [name, d] : c.attacks) b.rows.push_back(row(name, d, true));
  return b;
}

void write_baseline_csv(const Baseline& b, std::ostream& out) {
  out << "condition,n,delta_mean,delta_sd,bypass,bypass_ci_low,bypass_ci_high,d_vs_human,d_ci_low,d_ci_high\n";
  for (const auto& r : b.rows) {
    out << r.condition << ',' << r.n << ',' << cell(r.delta_mean) << ',' << cell(r.delta_sd) << ',';
    if (std::isnan(r.bypass)) {
      out << ",,";
    } else {
      out << cell(r.bypass) << ',' << cell(r.bypass_ci.low) << ',' << cell(r.bypass_ci.high);
    }
    out << ',';
    if (r.has_effect) {
      out << cell(r.d_vs_human.d) << ',' << cell(r.d_vs_human.ci_low) << ',' << cell(r.d_vs_human.ci_high);
    } else {
      out << ",,";
    }
    out << '\n';
  }
}

Ablation ablation_table(const Conditions& c) {
  Ablation a;
  for (const auto& [name, f] : c.attack_features) a.columns.push_back(name);
  a.columns.push_back("control_automated");
  for (std::size_t f = 0; f < features::FeatureVector::kDetectorCount; ++f) {
    a.features.emplace_back(features::kFeatureNames[f]);
    const auto human = column(c.human_features, f);
    std::vector<double> row;
    for (const auto& [name, feats] : c.attack_features) row.push_back(safe_d(human, column(feats, f)));
    row.push_back(safe_d(human, column(c.automated_features, f)));
    a.d.push_back(std::move(row));
  }
  return a;
}

void write_ablation_csv(const Ablation& a, std::ostream& out) {
  out << "feature";
  for (const auto& c : a.columns) out << ',' << c;
  out << '\n';
  for (std::size_t i = 0; i < a.features.size(); ++i) {
    out << a.features[i];
    for (double d : a.d[i]) out << ',' << (std::isnan(d) ? std::string() : cell(d));
    out << '\n';
  }
}

std::vector<DistanceRow> distance_table(const Conditions& c) {
  std::vector<DistanceRow> rows;
  for (const auto& [name, d] : c.attacks) {
    DistanceRow r;
    r.attack = name;
    r.distance = stats::distances(c.human, d);
    r.dpi_bound = stats::dpi_lower_bound(r.distance.tv);
    rows.push_back(r);
  }
  return rows;
}

void write_distance_csv(const std::vector<DistanceRow>& rows, std::ostream& out) {
  out << "attack,js,tv,ks,dpi_error_bound,bins,bin_low,bin_high\n";
  for (const auto& r : rows) {
    out << r.attack << ',' << cell(r.distance.js) << ',' << cell(r.distance.tv) << ',' << cell(r.distance.ks) << ','
        << cell(r.dpi_bound) << ',' << r.distance.bin_count << ',' << cell(r.distance.bin_low) << ','
        << cell(r.distance.bin_high) << '\n';
  }
}

nlohmann::ordered_json bounds(const Baseline& b, const std::vector<DistanceRow>& distances) {
  nlohmann::ordered_json j;
  j["threshold"] = {{"value", b.threshold}, {"far", b.far}, {"frr", b.frr}, {"auc", b.auc}};
  j["welch_human_vs_automated"] = stats::to_json(b.welch);
  auto& bayes = j["bayes_error"] = nlohmann::ordered_json::array();
  auto& binom = j["bypass_tests"] = nlohmann::ordered_json::array();
  for (const auto& r : b.rows) {
    if (!r.has_effect) continue;
    const double d = std::fabs(r.d_vs_human.d);
    bayes.push_back({{"condition", r.condition}, {"abs_d", d}, {"error", stats::bayes_error_from_d(d)}});
    if (std::isnan(r.bypass)) continue;
    const auto k = static_cast<std::int64_t>(std::llround(r.bypass * static_cast<double>(r.n)));
    binom.push_back({{"condition", r.condition},
                     {"passed", k},
                     {"n", r.n},
                     {"ci_method", "clopper_pearson"},
                     {"ci_low", r.bypass_ci.low},
                     {"ci_high", r.bypass_ci.high},
                     {"binomial_p_vs_half", stats::binomial_test_vs_half(k, static_cast<std::int64_t>(r.n))},
                     {"p_floor", stats::kPValueFloor}});
  }
  auto& dpi = j["dpi_error_bound"] = nlohmann::ordered_json::array();
  for (const auto& r : distances) {
    dpi.push_back({{"attack", r.attack}, {"tv", r.distance.tv}, {"error_lower_bound", r.dpi_bound}});
  }
  return j;
}

std::string delta_histogram_svg(const Conditions& c, double threshold) {
  constexpr int kBins = 70;
  constexpr double kWidth = 760.0;
  constexpr double kHeight = 380.0;
  constexpr double kLeft = 50.0;
  constexpr double kRight = 170.0;
  constexpr double kTop = 20.0;
  constexpr double kBottom = 40.0;
  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
                                            "#e377c2", "#7f7f7f"};

  std::vector<std::pair<std::string, const std::vector<double>*>> series{{"human", &c.human},
                                                                         {"automated", &c.automated}};
  for (const auto& [name, d] : c.attacks) series.emplace_back(name, &d);

  double hi = 1.0;
  for (const auto& [name, d] : series) {
    for (double v : *d) hi = std::max(hi, v);
  }
  hi = std::min(4.0, std::ceil(hi * 10.0) / 10.0);
  const double bw = hi / kBins;

  std::vector<std::vector<double>> dens;
  double ymax = 0.0;
  for (const auto& [name, d] : series) {
    std::vector<double> h(kBins, 0.0);
    for (double v : *d) {
      const int i = std::clamp(static_cast<int>(v / bw), 0, kBins - 1);
      h[static_cast<std::size_t>(i)] += 1.0;
    }
    for (double& v : h) {
      v = d->empty() ? 0.0 : v / (static_cast<double>(d->size()) * bw);
      ymax = std::max(ymax, v);
    }
    dens.push_back(std::move(h));
  }
  if (ymax <= 0.0) ymax = 1.0;

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return format_fixed(kLeft + x / hi * pw, 2); };
  auto py = [&](double y) { return format_fixed(kTop + ph - y / ymax * ph, 2); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(hi) << "\" y2=\"" << py(0)
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(0) << "\" y2=\"" << py(ymax)
    << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= static_cast<int>(std::round(hi * 2)); ++t) {
    const double x = 0.5 * t;
    s << "<text x=\"" << px(x) << "\" y=\"" << format_fixed(kTop + ph + 16, 2) << "\" text-anchor=\"middle\">"
      << format_fixed(x, 1) << "</text>\n";
  }
  s << "<text x=\"" << format_fixed(kLeft + pw / 2, 2) << "\" y=\"" << format_fixed(kHeight - 6, 2)
    << "\" text-anchor=\"middle\">delta (CV of IKI)</text>\n";
  s << "<text x=\"14\" y=\"" << format_fixed(kTop + ph / 2, 2) << "\" transform=\"rotate(-90 14 "
    << format_fixed(kTop + ph / 2, 2) << ")\" text-anchor=\"middle\">density</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = kColors[k % std::size(kColors)];
    s << "<path fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" d=\"M" << px(0) << ',' << py(0);
    for (int i = 0; i < kBins; ++i) {
      const double y = dens[k][static_cast<std::size_t>(i)];
      s << " L" << px(i * bw) << ',' << py(y) << " L" << px((i + 1) * bw) << ',' << py(y);
    }
    s << " L" << px(hi) << ',' << py(0) << "\"/>\n";
    const double ly = kTop + 14.0 + 18.0 * static_cast<double>(k);
    s << "<line x1=\"" << format_fixed(kWidth - kRight + 14, 2) << "\" y1=\"" << format_fixed(ly - 4, 2)
      << "\" x2=\"" << format_fixed(kWidth - kRight + 34, 2) << "\" y2=\"" << format_fixed(ly - 4, 2)
      << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << format_fixed(kWidth - kRight + 40, 2) << "\" y=\"" << format_fixed(ly, 2) << "\">"
      << series[k].first << "</text>\n";
  }
  s << "<line x1=\"" << px(threshold) << "\" y1=\"" << py(0) << "\" x2=\"" << px(threshold) << "\" y2=\""
    << py(ymax) << "\" stroke=\"black\" stroke-dasharray=\"5,4\"/>\n";
  s << "<text x=\"" << px(threshold) << "\" y=\"" << format_fixed(kTop - 4, 2)
    << "\" text-anchor=\"middle\">T = " << format_fixed(threshold, 3) << "</text>\n";
  s << "</svg>\n";
  return s.str();
}

void write_report(const std::filesystem::path& dir, const Conditions& c, const ReportOptions& options) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create " + dir.string() + ": " + ec.message());

  const Baseline b = baseline_table(c);
  {
    auto out = open_out(dir / "baseline.csv");
    write_baseline_csv(b, out);
  }
  {
    auto out = open_out(dir / "operating.csv");
    detect::write_operating_csv(detect::operating_sweep(c.human, c.attacks, options.thresholds), out);
  }
  {
    auto out = open_out(dir / "ablation.csv");
    write_ablation_csv(ablation_table(c), out);
  }
  const auto dist = distance_table(c);
  {
    auto out = open_out(dir / "distances.csv");
    write_distance_csv(dist, out);
  }
  {
    auto out = open_out(dir / "bounds.json");
    out << bounds(b, dist).dump(2) << '\n';
  }
  {
    auto out = open_out(dir / "delta_hist.svg");
    out << delta_histogram_svg(c, b.threshold);
  }
  {
    auto out = open_out(dir / "report.meta.json");
    out << provenance(options.config, options.seed).dump(2) << '\n';
  }
}

}  // namespace keyforge::report
