#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "keyforge/attacks.hpp"
#include "keyforge/detect.hpp"
#include "keyforge/error.hpp"
#include "keyforge/features.hpp"
#include "keyforge/stats.hpp"
#include "keyforge/synth.hpp"
#include "keyforge/trace.hpp"

namespace py = pybind11;
using namespace keyforge;

namespace {

synth::GeneratorKind kind_from(const std::string& name) {
  static const std::map<std::string, synth::GeneratorKind> kinds = {
      {"human", synth::GeneratorKind::Human},       {"automated", synth::GeneratorKind::Automated},
      {"histogram", synth::GeneratorKind::Histogram}, {"statistical", synth::GeneratorKind::Statistical},
      {"lstm", synth::GeneratorKind::Lstm},         {"copytype", synth::GeneratorKind::CopyType}};
  const auto it = kinds.find(name);
  if (it == kinds.end()) throw Error(ErrorKind::InvalidSpec, "unknown generator kind " + name);
  return it->second;
}

synth::GeneratorSpec spec_for(const std::string& kind, int n, int keystrokes, std::uint64_t seed) {
  return synth::GeneratorSpec::fixed(kind_from(kind), n, keystrokes, seed);
}

py::dict feature_dict(const features::FeatureVector& f) {
  py::dict d;
  const auto values = f.as_array();
  for (std::size_t i = 0; i < values.size(); ++i) d[py::str(std::string(features::kFeatureNames[i]))] = values[i];
  return d;
}

}  // namespace

PYBIND11_MODULE(_keyforge, m) {
  m.doc() = "Keystroke timing features, synthetic corpora, forgery attacks and detectors.";
  m.attr("__version__") = KEYFORGE_VERSION;

  static py::exception<Error> error(m, "KeyforgeError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  py::class_<Trace>(m, "Trace")
      .def(py::init([](std::string id, const std::string& label, std::vector<std::uint32_t> keys,
                       std::vector<double> intervals_ms) {
             const auto parsed = parse_label(label);
             if (!parsed) throw Error(ErrorKind::SchemaError, "unknown label " + label);
             return make_trace(std::move(id), *parsed, keys, intervals_ms);
           }),
           py::arg("session_id"), py::arg("label"), py::arg("keys"), py::arg("intervals_ms"))
      .def_readonly("session_id", &Trace::session_id)
      .def_property_readonly("label", [](const Trace& t) { return std::string(to_string(t.label)); })
      .def_property_readonly("keys",
                             [](const Trace& t) {
                               std::vector<std::uint32_t> k;
                               for (const auto& e : t.events) k.push_back(e.key);
                               return k;
                             })
      .def_property_readonly("t_us",
                             [](const Trace& t) {
                               std::vector<std::int64_t> v;
                               for (const auto& e : t.events) v.push_back(e.t_us);
                               return v;
                             })
      .def_property_readonly("ikis", [](const Trace& t) { return extract_ikis(t).values; })
      .def("__len__", [](const Trace& t) { return t.events.size(); })
      .def("__eq__", [](const Trace& a, const Trace& b) { return a == b; });

  m.def("read_corpus", [](const std::string& path) { return read_corpus(std::filesystem::path(path)); });
  m.def("write_corpus",
        [](const std::vector<Trace>& c, const std::string& path) { write_corpus(c, std::filesystem::path(path)); });

  m.def("delta", [](const std::vector<double>& ikis) { return features::delta(ikis); });
  m.def("autocorr1", [](const std::vector<double>& ikis) { return features::autocorr1(ikis); });
  m.def("features_from_ikis", [](const std::vector<double>& ikis) { return feature_dict(features::from_ikis(ikis)); });
  m.def("features", [](const Trace& t) { return feature_dict(features::feature_vector(t)); });
  m.def("deltas", &features::deltas);
  m.attr("feature_names") = [] {
    std::vector<std::string> names;
    for (auto n : features::kFeatureNames) names.emplace_back(n);
    return names;
  }();

  m.def(
      "gen_human",
      [](int n, int keystrokes, std::uint64_t seed) {
        return synth::gen_human(synth::default_human_model(), spec_for("human", n, keystrokes, seed));
      },
      py::arg("n"), py::arg("keystrokes") = 300, py::arg("seed") = 42);
  m.def(
      "gen_automated",
      [](int n, int keystrokes, std::uint64_t seed) {
        return synth::gen_automated(spec_for("automated", n, keystrokes, seed));
      },
      py::arg("n"), py::arg("keystrokes") = 300, py::arg("seed") = 42);
  m.def(
      "gen_copy_type",
      [](int n, int keystrokes, std::uint64_t seed) {
        return synth::gen_copy_type(synth::default_human_model(), spec_for("copytype", n, keystrokes, seed));
      },
      py::arg("n"), py::arg("keystrokes") = 300, py::arg("seed") = 43);

  m.def(
      "attack_histogram",
      [](const std::vector<Trace>& source, int n, int keystrokes, std::uint64_t seed) {
        return attacks::attack_histogram(attacks::build_cdf(source), spec_for("histogram", n, keystrokes, seed));
      },
      py::arg("source"), py::arg("n"), py::arg("keystrokes") = 300, py::arg("seed") = 7);
  m.def(
      "attack_statistical",
      [](const std::vector<Trace>& source, int n, int keystrokes, std::uint64_t seed) {
        return attacks::attack_statistical(attacks::fit_stat_params(source),
                                           spec_for("statistical", n, keystrokes, seed));
      },
      py::arg("source"), py::arg("n"), py::arg("keystrokes") = 300, py::arg("seed") = 7);
  m.def("ar1_patch", &attacks::ar1_patch_corpus, py::arg("corpus"), py::arg("alpha") = 0.3);

  py::class_<detect::ThresholdResult>(m, "ThresholdResult")
      .def_readonly("threshold", &detect::ThresholdResult::threshold)
      .def_readonly("far", &detect::ThresholdResult::far)
      .def_readonly("frr", &detect::ThresholdResult::frr);
  m.def("fit_eer_threshold", [](const std::vector<double>& human, const std::vector<double>& automated) {
    return detect::fit_eer_threshold(human, automated);
  });
  m.def("auc", [](const std::vector<double>& pos, const std::vector<double>& neg) { return detect::auc(pos, neg); });
  m.def(
      "apr",
      [](const std::vector<Trace>& corpus, double threshold) {
        return detect::evaluate_attack(detect::ThresholdDetector{threshold}, "corpus", corpus).apr;
      },
      py::arg("corpus"), py::arg("threshold") = 0.269);

  py::class_<stats::EffectSize>(m, "EffectSize")
      .def_readonly("d", &stats::EffectSize::d)
      .def_readonly("ci_low", &stats::EffectSize::ci_low)
      .def_readonly("ci_high", &stats::EffectSize::ci_high);
  py::class_<stats::WelchResult>(m, "WelchResult")
      .def_readonly("t", &stats::WelchResult::t)
      .def_readonly("df", &stats::WelchResult::df)
      .def_readonly("p", &stats::WelchResult::p);
  py::class_<stats::DistanceReport>(m, "DistanceReport")
      .def_readonly("js", &stats::DistanceReport::js)
      .def_readonly("tv", &stats::DistanceReport::tv)
      .def_readonly("ks", &stats::DistanceReport::ks);
  py::class_<stats::Interval>(m, "Interval")
      .def_readonly("low", &stats::Interval::low)
      .def_readonly("high", &stats::Interval::high);
  py::class_<stats::NonidentResult>(m, "NonidentResult")
      .def_readonly("best_feature_auc", &stats::NonidentResult::best_feature_auc)
      .def_readonly("best_feature", &stats::NonidentResult::best_feature)
      .def_readonly("logistic_cv_auc", &stats::NonidentResult::logistic_cv_auc)
      .def_readonly("delta_effect", &stats::NonidentResult::delta_effect);

  m.def("cohens_d", [](const std::vector<double>& a, const std::vector<double>& b) { return stats::cohens_d(a, b); });
  m.def("welch_t", [](const std::vector<double>& a, const std::vector<double>& b) { return stats::welch_t(a, b); });
  m.def(
      "distances",
      [](const std::vector<double>& a, const std::vector<double>& b, int bins) { return stats::distances(a, b, bins); },
      py::arg("a"), py::arg("b"), py::arg("bins") = 50);
  m.def("clopper_pearson", &stats::clopper_pearson, py::arg("successes"), py::arg("trials"), py::arg("level") = 0.95);
  m.def("binomial_test_vs_half", &stats::binomial_test_vs_half);
  m.def("normal_cdf", &stats::normal_cdf);
  m.def("bayes_error_from_d", &stats::bayes_error_from_d);
  m.def("dpi_lower_bound", &stats::dpi_lower_bound);
  m.def(
      "nonident",
      [](std::size_t n, std::uint64_t seed, int keystrokes) {
        return stats::nonident_harness(synth::default_human_model(), n, seed, nullptr, keystrokes);
      },
      py::arg("n") = 200, py::arg("seed") = 42, py::arg("keystrokes") = 300);
}
