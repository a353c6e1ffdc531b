#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "keyforge/attacks.hpp"
#include "keyforge/detect.hpp"
#include "keyforge/report.hpp"
#include "keyforge/synth.hpp"

using namespace keyforge;
using namespace keyforge::report;
using synth::GeneratorKind;
using synth::GeneratorSpec;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Conditions small_conditions() {
  const auto human =
      synth::gen_human(synth::default_human_model(), GeneratorSpec::fixed(GeneratorKind::Human, 120, 200, 42));
  const auto autos = synth::gen_automated(GeneratorSpec::fixed(GeneratorKind::Automated, 80, 200, 42));
  const auto hist =
      attacks::attack_histogram(attacks::build_cdf(human), GeneratorSpec::fixed(GeneratorKind::Histogram, 60, 200, 7));
  const auto stat = attacks::attack_statistical(attacks::fit_stat_params(human),
                                                GeneratorSpec::fixed(GeneratorKind::Statistical, 60, 200, 7));
  return load_conditions(human, autos, {{"histogram", hist}, {"statistical", stat}});
}

}  // namespace

TEST(Provenance, HashAndFields) {
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
  nlohmann::ordered_json config{{"subcommand", "synth"}, {"n", 3}};
  const auto meta = provenance(config, 7);
  EXPECT_EQ(meta.at("toolkit"), "keyforge");
  EXPECT_EQ(meta.at("version"), std::string(kVersion));
  EXPECT_EQ(meta.at("seed"), 7);
  EXPECT_EQ(meta.at("config_hash"), fnv1a_hex(config.dump()));
  EXPECT_EQ(meta.at("config"), config);
  config["n"] = 4;
  EXPECT_NE(provenance(config, 7).at("config_hash"), meta.at("config_hash"));
}

TEST(Baseline, SeparatedConditions) {
  const auto c = small_conditions();
  const auto b = baseline_table(c);
  EXPECT_EQ(b.far, 0.0);
  EXPECT_EQ(b.frr, 0.0);
  EXPECT_EQ(b.auc, 1.0);
  ASSERT_EQ(b.rows.size(), 4u);
  EXPECT_EQ(b.rows[0].condition, "human");
  EXPECT_FALSE(b.rows[0].has_effect);
  for (std::size_t i = 2; i < 4; ++i) {
    EXPECT_EQ(b.rows[i].bypass, 1.0);
    EXPECT_EQ(b.rows[i].bypass_ci.high, 1.0);
  }
  std::ostringstream out;
  write_baseline_csv(b, out);
  const auto text = out.str();
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "condition,n,delta_mean,delta_sd,bypass,bypass_ci_low,bypass_ci_high,d_vs_human,d_ci_low,d_ci_high");
  EXPECT_NE(text.find("\nhuman,120,"), std::string::npos);
}

TEST(Ablation, ShapeAndConstantFeature) {
  auto c = small_conditions();
  const auto a = ablation_table(c);
  EXPECT_EQ(a.columns, (std::vector<std::string>{"histogram", "statistical", "control_automated"}));
  EXPECT_EQ(a.features.size(), features::FeatureVector::kDetectorCount);
  for (const auto& row : a.d) EXPECT_EQ(row.size(), 3u);

  // A feature that is identical in both arms has no defined d.
  for (auto& f : c.human_features) f.pause_density = 0.0;
  for (auto& f : c.automated_features) f.pause_density = 0.0;
  const auto b = ablation_table(c);
  std::ostringstream out;
  write_ablation_csv(b, out);
  EXPECT_NE(out.str().find("\npause_density,"), std::string::npos);
  EXPECT_NE(out.str().find(",\n", out.str().find("\npause_density,")), std::string::npos);
}

TEST(Report, DirectoryContentsAndDeterminism) {
  const auto c = small_conditions();
  ReportOptions opt;
  opt.thresholds = {0.27, 0.5, 0.9};
  opt.config = {{"subcommand", "report"}};
  const auto root = std::filesystem::temp_directory_path() / "keyforge_report_test";
  std::filesystem::remove_all(root);
  write_report(root / "a", c, opt);
  write_report(root / "b", c, opt);
  for (const char* f : {"baseline.csv", "operating.csv", "ablation.csv", "distances.csv", "bounds.json",
                        "delta_hist.svg", "report.meta.json"}) {
    ASSERT_TRUE(std::filesystem::exists(root / "a" / f)) << f;
    EXPECT_EQ(slurp(root / "a" / f), slurp(root / "b" / f)) << f;
  }
  const auto svg = slurp(root / "a" / "delta_hist.svg");
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NE(svg.find(">histogram<"), std::string::npos);
  const auto bounds = nlohmann::json::parse(slurp(root / "a" / "bounds.json"));
  EXPECT_EQ(bounds.at("bypass_tests").size(), 2u);
  EXPECT_EQ(bounds.at("dpi_error_bound").size(), 2u);
  const auto op = slurp(root / "a" / "operating.csv");
  EXPECT_EQ(std::count(op.begin(), op.end(), '\n'), 4);
  std::filesystem::remove_all(root);
}
