// keyforge: timing-forgery attacks and detector evaluation from the command line.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "keyforge/attacks.hpp"
#include "keyforge/detect.hpp"
#include "keyforge/error.hpp"
#include "keyforge/features.hpp"
#include "keyforge/format.hpp"
#include "keyforge/report.hpp"
#include "keyforge/seqmodel.hpp"
#include "keyforge/stats.hpp"
#include "keyforge/synth.hpp"
#include "keyforge/trace.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace keyforge;

namespace {

struct Global {
  std::uint64_t seed = 42;
  std::string out_dir = ".";
  std::string format = "csv";
};

struct Run {
  const Global& global;
  ordered_json config;

  fs::path output(const std::string& name) const {
    fs::path p(name);
    if (p.is_relative()) p = fs::path(global.out_dir) / p;
    if (p.has_parent_path()) {
      std::error_code ec;
      fs::create_directories(p.parent_path(), ec);
      if (ec) throw Error(ErrorKind::IoError, "cannot create " + p.parent_path().string());
    }
    return p;
  }

  bool json() const { return global.format == "json"; }
};

ordered_json option_values(const CLI::App& app, ordered_json& into) {
  for (const CLI::Option* opt : app.get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name == "config" || name.empty()) continue;
    if (opt->count() > 0) {
      const auto& r = opt->results();
      into[name] = r.size() == 1 ? ordered_json(r[0]) : ordered_json(r);
    } else {
      into[name] = opt->get_default_str();
    }
  }
  return into;
}

std::ofstream open_file(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + p.string());
  return out;
}

std::map<std::string, std::vector<Trace>> read_named(const std::vector<std::string>& specs) {
  std::map<std::string, std::vector<Trace>> out;
  for (const auto& s : specs) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == s.size()) {
      throw CLI::ValidationError("--attack", "expected NAME=PATH, got '" + s + "'");
    }
    out[s.substr(0, eq)] = read_corpus(fs::path(s.substr(eq + 1)));
  }
  return out;
}

std::vector<double> threshold_grid(const std::vector<double>& explicit_list, double start, double stop, double step) {
  if (!explicit_list.empty()) return explicit_list;
  if (!(step > 0.0) || stop < start) throw Error(ErrorKind::OutOfRange, "threshold grid needs step > 0, stop >= start");
  std::vector<double> out;
  for (int i = 0;; ++i) {
    const double t = std::round((start + i * step) * 1e9) / 1e9;
    if (t > stop + 1e-9) break;
    out.push_back(t);
  }
  return out;
}

void emit_rows(const Run& run, const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows, const ordered_json& doc) {
  auto out = open_file(path);
  if (run.json()) {
    out << doc.dump(2) << '\n';
  } else {
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n';
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
      out << '\n';
    }
  }
  report::write_meta(path, run.config, run.global.seed);
}

// ---- synth ------------------------------------------------------------------

struct SynthArgs {
  std::string kind = "human";
  int n = 100;
  int len = 300;
  int len_max = 0;
  double log_sigma = synth::default_human_model().log_sigma;
  double log_mu_shift = 0.0;
  std::string out;
};

void cmd_synth(const Run& run, const SynthArgs& a) {
  auto spec = synth::GeneratorSpec::fixed(synth::GeneratorKind::Human, a.n, a.len, run.global.seed);
  if (a.len_max > 0) spec.keystrokes_max = a.len_max;
  synth::HumanMotorModel model = synth::default_human_model();
  model.log_sigma = a.log_sigma;
  model.log_mu += a.log_mu_shift;
  model.seed = run.global.seed;
  std::vector<Trace> corpus;
  if (a.kind == "human") {
    corpus = synth::gen_human(model, spec);
  } else if (a.kind == "copytype") {
    spec.kind = synth::GeneratorKind::CopyType;
    corpus = synth::gen_copy_type(model, spec);
  } else {
    spec.kind = synth::GeneratorKind::Automated;
    corpus = synth::gen_automated(spec);
  }
  const fs::path path = run.output(a.out.empty() ? a.kind + ".jsonl" : a.out);
  write_corpus(corpus, path);
  report::write_meta(path, run.config, run.global.seed);
  std::cout << "wrote " << corpus.size() << " sessions to " << path.string() << '\n';
}

// ---- attack -----------------------------------------------------------------

struct AttackArgs {
  std::string kind;
  std::string source;
  int n = 500;
  int len = 300;
  double patch_ar1 = 0.0;
  std::string model;
  std::string save_model;
  int epochs = 5;
  double temperature = 1.0;
  std::string out;
};

void cmd_attack(const Run& run, const AttackArgs& a) {
  const auto source = read_corpus(fs::path(a.source));
  std::vector<Trace> corpus;
  if (a.kind == "histogram") {
    auto spec = synth::GeneratorSpec::fixed(synth::GeneratorKind::Histogram, a.n, a.len, run.global.seed);
    corpus = attacks::attack_histogram(attacks::build_cdf(source), spec);
  } else if (a.kind == "statistical") {
    auto spec = synth::GeneratorSpec::fixed(synth::GeneratorKind::Statistical, a.n, a.len, run.global.seed);
    corpus = attacks::attack_statistical(attacks::fit_stat_params(source), spec);
  } else {
    seqmodel::MdnLstmModel model;
    if (!a.model.empty()) {
      model = seqmodel::MdnLstmModel::load(fs::path(a.model));
    } else {
      seqmodel::MdnLstmConfig config;
      config.epochs = a.epochs;
      config.seed = run.global.seed;
      model = seqmodel::train(config, source).model;
      if (!a.save_model.empty()) model.save(run.output(a.save_model));
    }
    auto spec = synth::GeneratorSpec::fixed(synth::GeneratorKind::Lstm, a.n, a.len, run.global.seed);
    spec.temperature = a.temperature;
    corpus = attacks::attack_lstm(model, spec);
  }
  if (a.patch_ar1 != 0.0) corpus = attacks::ar1_patch_corpus(corpus, a.patch_ar1);
  const fs::path path = run.output(a.out.empty() ? a.kind + ".jsonl" : a.out);
  write_corpus(corpus, path);
  report::write_meta(path, run.config, run.global.seed);
  std::cout << "wrote " << corpus.size() << ' ' << a.kind << " attack sessions to " << path.string() << '\n';
}

// ---- features ---------------------------------------------------------------

void cmd_features(const Run& run, const std::string& in, const std::string& out_name) {
  const auto rows = features::extract_all(read_corpus(fs::path(in)));
  const fs::path path = run.output(out_name.empty() ? (run.json() ? "features.json" : "features.csv") : out_name);
  auto out = open_file(path);
  if (run.json()) {
    ordered_json doc = ordered_json::array();
    for (const auto& r : rows) {
      ordered_json o;
      o["session_id"] = r.session_id;
      o["label"] = std::string(to_string(r.label));
      const auto values = r.features.as_array();
      for (std::size_t i = 0; i < values.size(); ++i) o[std::string(features::kFeatureNames[i])] = values[i];
      doc.push_back(std::move(o));
    }
    out << doc.dump(2) << '\n';
  } else {
    features::write_feature_csv(rows, out);
  }
  out.close();
  report::write_meta(path, run.config, run.global.seed);
  std::cout << "wrote features for " << rows.size() << " sessions to " << path.string() << '\n';
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
  std::string kind = "logistic";
  std::string human;
  std::string automated;
  std::string out;
  int epochs = 5;
  bool cv = false;
};

void cmd_train(const Run& run, const TrainArgs& a) {
  const fs::path path = run.output(a.out.empty() ? a.kind + ".model.json" : a.out);
  const auto human = read_corpus(fs::path(a.human));
  if (a.kind == "lstm") {
    seqmodel::MdnLstmConfig config;
    config.epochs = a.epochs;
    config.seed = run.global.seed;
    const auto result = seqmodel::train(config, human);
    result.model.save(path);
    report::write_meta(path, run.config, run.global.seed);
    for (const auto& r : result.history) {
      std::cout << "epoch " << r.epoch << " train_nll " << format_fixed(r.train_nll, 4) << " val_nll "
                << format_fixed(r.val_nll, 4) << '\n';
    }
    return;
  }
  if (a.automated.empty()) throw CLI::ValidationError("--automated", "required for classifier training");
  const auto data = detect::detector_dataset(human, read_corpus(fs::path(a.automated)));
  const auto kind = a.kind == "mlp" ? detect::ClassifierKind::Mlp : detect::ClassifierKind::Logistic;
  nlohmann::json doc;
  if (kind == detect::ClassifierKind::Mlp) {
    detect::MlpConfig config;
    config.seed = run.global.seed;
    doc = detect::to_json(detect::train_mlp(data, config));
  } else {
    doc = detect::to_json(detect::train_logistic(data));
  }
  {
    auto out = open_file(path);
    out << doc.dump() << '\n';
  }
  report::write_meta(path, run.config, run.global.seed);
  if (a.cv) {
    const auto cv = detect::cross_validate(data, kind, 5, run.global.seed);
    std::cout << detect::to_json(cv).dump() << '\n';
  }
  std::cout << "wrote " << a.kind << " model to " << path.string() << '\n';
}

// ---- eval -------------------------------------------------------------------

void cmd_eval(const Run& run, const std::string& model_path, double threshold,
              const std::vector<std::string>& attack_specs, const std::string& out_name) {
  const auto corpora = read_named(attack_specs);
  std::vector<detect::AttackEvaluation> evals;
  if (model_path.empty()) {
    evals = detect::evaluate_attacks(detect::ThresholdDetector{threshold}, corpora);
  } else {
    std::ifstream in(model_path);
    if (!in) throw Error(ErrorKind::IoError, "cannot read " + model_path);
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::ParseError, model_path + ": " + e.what());
    }
    if (doc.value("format", "") == "keyforge.mlp") {
      evals = detect::evaluate_attacks(detect::mlp_from_json(doc), corpora);
    } else {
      evals = detect::evaluate_attacks(detect::logistic_from_json(doc), corpora);
    }
  }
  std::vector<std::vector<std::string>> rows;
  ordered_json doc = ordered_json::array();
  for (const auto& e : evals) {
    const auto k = static_cast<std::int64_t>(std::llround(e.apr * static_cast<double>(e.n)));
    const auto n = static_cast<std::int64_t>(e.n);
    const auto ci = n > 0 ? stats::clopper_pearson(k, n) : stats::Interval{0.0, 1.0};
    const double p = stats::binomial_test_vs_half(k, n);
    rows.push_back({e.name, std::to_string(e.n), format_fixed(e.apr, 6), format_fixed(e.mean_confidence, 6),
                    format_fixed(ci.low, 6), format_fixed(ci.high, 6), format_double(p)});
    doc.push_back({{"attack", e.name}, {"n", e.n}, {"apr", e.apr}, {"mean_confidence", e.mean_confidence},
                   {"ci_low", ci.low}, {"ci_high", ci.high}, {"binomial_p_vs_half", p}});
  }
  const fs::path path = run.output(out_name.empty() ? (run.json() ? "eval.json" : "eval.csv") : out_name);
  emit_rows(run, path, {"attack", "n", "apr", "mean_confidence", "ci_low", "ci_high", "binomial_p"}, rows, doc);
  for (const auto& r : rows) std::cout << r[0] << " apr " << r[2] << " confidence " << r[3] << '\n';
}

// ---- sweep / distances ------------------------------------------------------

std::map<std::string, std::vector<double>> attack_deltas(const std::vector<std::string>& specs) {
  std::map<std::string, std::vector<double>> out;
  for (const auto& [name, corpus] : read_named(specs)) out[name] = features::deltas(corpus);
  return out;
}

void cmd_sweep(const Run& run, const std::string& human, const std::vector<std::string>& attack_specs,
               const std::vector<double>& thresholds, const std::string& out_name) {
  const auto table = detect::operating_sweep(features::deltas(read_corpus(fs::path(human))),
                                             attack_deltas(attack_specs), thresholds);
  const fs::path path = run.output(out_name.empty() ? (run.json() ? "operating.json" : "operating.csv") : out_name);
  {
    auto out = open_file(path);
    if (run.json()) {
      ordered_json doc = ordered_json::array();
      for (const auto& r : table.rows) {
        ordered_json o{{"threshold", r.threshold}, {"frr", r.frr}};
        for (const auto& [name, v] : r.apr) o["apr_" + name] = v;
        doc.push_back(std::move(o));
      }
      out << doc.dump(2) << '\n';
    } else {
      detect::write_operating_csv(table, out);
    }
  }
  report::write_meta(path, run.config, run.global.seed);
  std::cout << "wrote " << table.rows.size() << " operating points to " << path.string() << '\n';
}

void cmd_distances(const Run& run, const std::string& human, const std::vector<std::string>& attack_specs, int bins,
                   const std::string& out_name) {
  const auto h = features::deltas(read_corpus(fs::path(human)));
  std::vector<std::vector<std::string>> rows;
  ordered_json doc = ordered_json::array();
  for (const auto& [name, d] : attack_deltas(attack_specs)) {
    const auto r = stats::distances(h, d, bins);
    const double bound = stats::dpi_lower_bound(r.tv);
    rows.push_back({name, format_fixed(r.js, 6), format_fixed(r.tv, 6), format_fixed(r.ks, 6),
                    format_fixed(bound, 6), std::to_string(r.bin_count)});
    ordered_json o{{"attack", name}};
    o.update(ordered_json(stats::to_json(r)));
    o["dpi_error_bound"] = bound;
    doc.push_back(std::move(o));
  }
  const fs::path path = run.output(out_name.empty() ? (run.json() ? "distances.json" : "distances.csv") : out_name);
  emit_rows(run, path, {"attack", "js", "tv", "ks", "dpi_error_bound", "bins"}, rows, doc);
  for (const auto& r : rows) std::cout << r[0] << " js " << r[1] << " tv " << r[2] << " ks " << r[3] << '\n';
}

// ---- nonident ---------------------------------------------------------------

void cmd_nonident(const Run& run, int n, int len, double control_shift, const std::string& out_name) {
  synth::HumanMotorModel model = synth::default_human_model();
  model.seed = run.global.seed;
  synth::HumanMotorModel shifted = model;
  shifted.log_mu += control_shift;
  const auto r = stats::nonident_harness(model, static_cast<std::size_t>(n), run.global.seed,
                                         control_shift != 0.0 ? &shifted : nullptr, len);
  const bool pass =
      r.best_feature_auc >= 0.45 && r.best_feature_auc <= 0.55 && std::fabs(r.delta_effect.d) < 0.1;
  ordered_json doc(stats::to_json(r));
  doc["control_log_mu_shift"] = control_shift;
  doc["auc_band"] = {0.45, 0.55};
  doc["within_band"] = pass;
  const fs::path path = run.output(out_name.empty() ? "nonident.json" : out_name);
  {
    auto out = open_file(path);
    out << doc.dump(2) << '\n';
  }
  report::write_meta(path, run.config, run.global.seed);
  std::cout << "best_feature " << r.best_feature << " auc " << format_fixed(r.best_feature_auc, 4)
            << " logistic_cv_auc " << format_fixed(r.logistic_cv_auc, 4) << " d " << format_fixed(r.delta_effect.d, 4)
            << ' ' << (pass ? "PASS" : "FAIL") << " [0.45, 0.55]\n";
}

// ---- report -----------------------------------------------------------------

void cmd_report(const Run& run, const std::string& human, const std::string& automated,
                const std::vector<std::string>& attack_specs, const std::vector<double>& thresholds,
                const std::string& out_name) {
  const auto c = report::load_conditions(read_corpus(fs::path(human)), read_corpus(fs::path(automated)),
                                         read_named(attack_specs));
  const fs::path dir = run.output(out_name.empty() ? "report" : out_name);
  report::ReportOptions options;
  options.thresholds = thresholds;
  options.config = run.config;
  options.seed = run.global.seed;
  report::write_report(dir, c, options);
  std::cout << "wrote report to " << dir.string() << '\n';
}

void print_error(const std::string& kind, const std::string& message, int code) {
  ordered_json j{{"error", kind}, {"message", message}, {"exit_code", code}};
  std::cerr << j.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Keystroke timing-forgery attacks and AI-authorship detector evaluation", "keyforge"};
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "TOML/INI run file supplying any option");
  app.set_version_flag("--version", std::string(report::kVersion));
  app.require_subcommand(1);
  app.fallthrough();

  Global global;
  app.add_option("--seed", global.seed, "Master RNG seed");
  app.add_option("--out-dir", global.out_dir, "Directory for relative output paths");
  app.add_option("--format", global.format, "Tabular output format")->check(CLI::IsMember({"csv", "json"}));

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Generate a labelled corpus");
  synth->add_option("--kind", synth_args.kind)->check(CLI::IsMember({"human", "automated", "copytype"}));
  synth->add_option("--n", synth_args.n, "Sessions")->check(CLI::PositiveNumber);
  synth->add_option("--len", synth_args.len, "Keystrokes per session (minimum when --len-max is set)");
  synth->add_option("--len-max", synth_args.len_max, "Upper keystroke bound; 0 = fixed length");
  synth->add_option("--log-sigma", synth_args.log_sigma, "Motor-model log-scale");
  synth->add_option("--log-mu-shift", synth_args.log_mu_shift, "Additive shift of the motor-model log location");
  synth->add_option("--out", synth_args.out, "Output JSONL");

  AttackArgs attack_args;
  auto* attack = app.add_subcommand("attack", "Forge attack traces from a human corpus");
  attack->add_option("--kind", attack_args.kind)
      ->required()
      ->check(CLI::IsMember({"histogram", "statistical", "lstm"}));
  attack->add_option("--source", attack_args.source, "Human corpus JSONL")->required()->check(CLI::ExistingFile);
  attack->add_option("--n", attack_args.n)->check(CLI::PositiveNumber);
  attack->add_option("--len", attack_args.len);
  attack->add_option("--patch-ar1", attack_args.patch_ar1, "Post-process with AR(1) patch of this alpha");
  attack->add_option("--model", attack_args.model, "Trained MDN-LSTM (lstm only)")->check(CLI::ExistingFile);
  attack->add_option("--save-model", attack_args.save_model, "Save the model trained on --source");
  attack->add_option("--epochs", attack_args.epochs, "Training epochs when no --model is given");
  attack->add_option("--temperature", attack_args.temperature);
  attack->add_option("--out", attack_args.out);

  std::string feat_in;
  std::string feat_out;
  auto* feats = app.add_subcommand("features", "Per-session feature table");
  feats->add_option("--in", feat_in)->required()->check(CLI::ExistingFile);
  feats->add_option("--out", feat_out);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train a detector or the MDN-LSTM");
  train->add_option("--kind", train_args.kind)->check(CLI::IsMember({"logistic", "mlp", "lstm"}));
  train->add_option("--human", train_args.human)->required()->check(CLI::ExistingFile);
  train->add_option("--automated", train_args.automated)->check(CLI::ExistingFile);
  train->add_option("--epochs", train_args.epochs);
  train->add_flag("--cv", train_args.cv, "Also print 5-fold stratified CV metrics");
  train->add_option("--out", train_args.out);

  std::string eval_model;
  double eval_threshold = 0.269;
  std::vector<std::string> eval_attacks;
  std::string eval_out;
  auto* eval = app.add_subcommand("eval", "Attack pass rates for a detector");
  eval->add_option("--model", eval_model, "Classifier JSON; omit to use the delta threshold")
      ->check(CLI::ExistingFile);
  eval->add_option("--threshold", eval_threshold)->check(CLI::PositiveNumber);
  eval->add_option("--attack", eval_attacks, "NAME=PATH, repeatable")->required();
  eval->add_option("--out", eval_out);

  std::string sweep_human;
  std::vector<std::string> sweep_attacks;
  std::vector<double> sweep_thresholds;
  double t_start = 0.27;
  double t_stop = 1.0;
  double t_step = 0.1;
  std::string sweep_out;
  auto* sweep = app.add_subcommand("sweep", "Operating-point table");
  sweep->add_option("--human", sweep_human)->required()->check(CLI::ExistingFile);
  sweep->add_option("--attack", sweep_attacks, "NAME=PATH, repeatable");
  sweep->add_option("--thresholds", sweep_thresholds, "Explicit ascending thresholds");
  sweep->add_option("--t-start", t_start);
  sweep->add_option("--t-stop", t_stop);
  sweep->add_option("--t-step", t_step);
  sweep->add_option("--out", sweep_out);

  std::string dist_human;
  std::vector<std::string> dist_attacks;
  int dist_bins = 50;
  std::string dist_out;
  auto* dist = app.add_subcommand("distances", "JS / TV / KS distances of attack deltas from human");
  dist->add_option("--human", dist_human)->required()->check(CLI::ExistingFile);
  dist->add_option("--attack", dist_attacks, "NAME=PATH, repeatable")->required();
  dist->add_option("--bins", dist_bins)->check(CLI::PositiveNumber);
  dist->add_option("--out", dist_out);

  int ni_n = 1000;
  int ni_len = 300;
  double ni_shift = 0.0;
  std::string ni_out;
  auto* nonident = app.add_subcommand("nonident", "Composed vs copy-type indistinguishability check");
  nonident->add_option("--n", ni_n, "Sessions per arm");
  nonident->add_option("--len", ni_len);
  nonident->add_option("--control-shift", ni_shift, "Shift the copy-type log location (violation control)");
  nonident->add_option("--out", ni_out);

  std::string rep_human;
  std::string rep_auto;
  std::vector<std::string> rep_attacks;
  std::vector<double> rep_thresholds;
  std::string rep_out;
  auto* rep = app.add_subcommand("report", "Write every table, the bounds and the delta plot");
  rep->add_option("--human", rep_human)->required()->check(CLI::ExistingFile);
  rep->add_option("--automated", rep_auto)->required()->check(CLI::ExistingFile);
  rep->add_option("--attack", rep_attacks, "NAME=PATH, repeatable");
  rep->add_option("--thresholds", rep_thresholds);
  rep->add_option("--t-start", t_start);
  rep->add_option("--t-stop", t_stop);
  rep->add_option("--t-step", t_step);
  rep->add_option("--out", rep_out, "Report directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    print_error("UsageError", e.what(), 1);
    return 1;
  }

  try {
    const CLI::App* sub = app.get_subcommands().front();
    ordered_json config;
    config["subcommand"] = sub->get_name();
    option_values(app, config);
    option_values(*sub, config);
    const Run run{global, config};

    if (sub == synth) {
      cmd_synth(run, synth_args);
    } else if (sub == attack) {
      cmd_attack(run, attack_args);
    } else if (sub == feats) {
      cmd_features(run, feat_in, feat_out);
    } else if (sub == train) {
      cmd_train(run, train_args);
    } else if (sub == eval) {
      cmd_eval(run, eval_model, eval_threshold, eval_attacks, eval_out);
    } else if (sub == sweep) {
      cmd_sweep(run, sweep_human, sweep_attacks, threshold_grid(sweep_thresholds, t_start, t_stop, t_step),
                sweep_out);
    } else if (sub == dist) {
      cmd_distances(run, dist_human, dist_attacks, dist_bins, dist_out);
    } else if (sub == nonident) {
      cmd_nonident(run, ni_n, ni_len, ni_shift, ni_out);
    } else if (sub == rep) {
      cmd_report(run, rep_human, rep_auto, rep_attacks, threshold_grid(rep_thresholds, t_start, t_stop, t_step),
                 rep_out);
    }
  } catch (const CLI::ParseError& e) {
    print_error("UsageError", e.what(), 1);
    return 1;
  } catch (const Error& e) {
    const int code = exit_code_for(e.kind());
    print_error(std::string(to_string(e.kind())), e.what(), code);
    return code;
  } catch (const fs::filesystem_error& e) {
    print_error("IoError", e.what(), 2);
    return 2;
  } catch (const std::exception& e) {
    print_error("InternalError", e.what(), 2);
    return 2;
  }
  return 0;
}
