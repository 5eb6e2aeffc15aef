#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "baygaze/bench.hpp"
#include "test_util.hpp"

namespace baygaze {
namespace {

ExperimentSpec tiny_spec() {
  ExperimentSpec s;
  s.seed = 5;
  s.train_count = 30;
  s.train_subjects = 3;
  s.test_count = 4;
  s.test_subjects = 1;
  s.stages = 2;
  s.ablation_stages = {1};
  s.m = 2;
  s.n = 3;
  s.sampler.burn_in = 4;
  s.sampler.interval = 2;
  s.sampler.num_samples = 3;
  s.sampler.batch_size = 8;
  s.optimizer.eval_every = 5;
  s.optimizer.batch_size = 8;
  s.noise_levels = {10.0, 40.0};
  s.occlusion_levels = {0.2};
  return s;
}

ResultRow row(const std::string& method, std::size_t stages, const std::string& kind, double level,
              double mean) {
  ResultRow r;
  r.method = method;
  r.stages = stages;
  r.kind = kind;
  r.level = level;
  r.condition = Condition{kind, level}.label();
  r.mean_error_deg = mean;
  r.std_error_deg = mean / 4.0;
  r.count = 10;
  return r;
}

ResultTable fixture_table() {
  ResultTable t;
  t.spec = ExperimentSpec{};
  t.spec.seed = 99;
  t.rows = {row("mle", 3, "clean", 0.0, 8.0), row("bayes", 3, "clean", 0.0, 6.0),
            row("mle", 3, "noise", 30.0, 12.5), row("bayes", 3, "noise", 30.0, 10.0),
            row("mle", 3, "occlusion", 0.2, 20.0), row("bayes", 3, "occlusion", 0.2, 15.0),
            row("bayes", 1, "clean", 0.0, 7.25)};
  t.rows[1].failed_draws = 17;
  t.rows[3].fallbacks = 2;
  t.improvements = compute_improvements(t.rows);
  t.test_hashes = {{"clean", "0123456789abcdef"}, {"noise30", "fedcba9876543210"}};
  return t;
}

TEST(Bench, NamesRoundTrip) {
  for (Method m : {Method::kMle, Method::kMap, Method::kBayes}) EXPECT_EQ(parse_method(method_name(m)), m);
  for (Split s : {Split::kCrossSubject, Split::kCrossDataset}) EXPECT_EQ(parse_split(split_name(s)), s);
  EXPECT_ERROR_CODE(parse_method("ml"), ErrorCode::kInvalidArgument);
  EXPECT_ERROR_CODE(parse_split("within"), ErrorCode::kInvalidArgument);
  EXPECT_EQ((Condition{"noise", 30.0}.label()), "noise30");
  EXPECT_EQ((Condition{"occlusion", 0.1}.label()), "occlusion10");
  EXPECT_EQ((Condition{"clean", 0.0}.label()), "clean");
}

TEST(Bench, SpecValidation) {
  EXPECT_NO_THROW(ExperimentSpec{}.validate());
  auto bad = [](auto mutate) {
    ExperimentSpec s;
    mutate(s);
    EXPECT_ERROR_CODE(s.validate(), ErrorCode::kInvalidArgument);
  };
  bad([](ExperimentSpec& s) { s.train_count = 1; });
  bad([](ExperimentSpec& s) { s.validation_fraction = 1.0; });
  bad([](ExperimentSpec& s) { s.methods.clear(); });
  bad([](ExperimentSpec& s) { s.stages = 0; });
  bad([](ExperimentSpec& s) { s.ablation_stages = {0}; });
  bad([](ExperimentSpec& s) { s.m = s.sampler.num_samples + 1; });
  bad([](ExperimentSpec& s) { s.n = 0; });
  bad([](ExperimentSpec& s) { s.prior_sigma = 0.0; });
  bad([](ExperimentSpec& s) { s.noise_levels = {-1.0}; });
  bad([](ExperimentSpec& s) { s.occlusion_levels = {1.5}; });
  bad([](ExperimentSpec& s) { s.sampler.beta = 0.0; });
}

TEST(Bench, ConditionOrder) {
  const auto c = ExperimentSpec{}.conditions();
  ASSERT_EQ(c.size(), 7u);
  EXPECT_EQ(c[0].label(), "clean");
  EXPECT_EQ(c[1].label(), "noise10");
  EXPECT_EQ(c[3].label(), "noise50");
  EXPECT_EQ(c[4].label(), "occlusion10");
  EXPECT_EQ(c[6].label(), "occlusion30");
}

TEST(Bench, CorruptionsShareRandomNumbersAcrossLevels) {
  ExperimentSpec spec = tiny_spec();
  DatasetConfig cfg;
  cfg.count = 3;
  cfg.subjects = 1;
  cfg.seed = 8;
  const auto test = generate_dataset(cfg);
  const auto clean = corrupt_test_set(spec, test, {"clean", 0.0});
  const auto low = corrupt_test_set(spec, test, {"noise", 10.0});
  const auto high = corrupt_test_set(spec, test, {"noise", 30.0});
  for (std::size_t i = 0; i < test.size(); ++i) {
    EXPECT_EQ(clean[i], test[i].raster);
    int checked = 0;
    for (std::size_t p = 0; p < clean[i].size(); ++p) {
      const double a = low[i].pixels[p], b = high[i].pixels[p];
      if (a <= 0.0 || a >= 1.0 || b <= 0.0 || b >= 1.0) continue;
      ASSERT_NEAR(b - clean[i].pixels[p], 3.0 * (a - clean[i].pixels[p]), 1e-12);
      ++checked;
    }
    EXPECT_GT(checked, 100);
  }
  // Occluders share their position: the smaller block sits inside the larger.
  const auto small = corrupt_test_set(spec, test, {"occlusion", 0.1});
  const auto large = corrupt_test_set(spec, test, {"occlusion", 0.3});
  for (std::size_t i = 0; i < test.size(); ++i) {
    for (std::size_t p = 0; p < clean[i].size(); ++p) {
      if (small[i].pixels[p] == 0.0 && clean[i].pixels[p] != 0.0) {
        EXPECT_EQ(large[i].pixels[p], 0.0);
      }
    }
  }
  EXPECT_NE(raster_digest(low), raster_digest(high));
  EXPECT_EQ(raster_digest(low), raster_digest(corrupt_test_set(spec, test, {"noise", 10.0})));
}

TEST(Bench, Improvements) {
  const auto imp = fixture_table().improvements;
  ASSERT_EQ(imp.size(), 3u);
  EXPECT_EQ(imp[0].condition, "clean");
  EXPECT_EQ(imp[0].baseline, "mle");
  EXPECT_DOUBLE_EQ(imp[0].percent, 25.0);
  EXPECT_DOUBLE_EQ(imp[1].percent, 20.0);
  EXPECT_DOUBLE_EQ(imp[2].percent, 25.0);
}

TEST(Bench, EmptyTableCsvIsHeaderOnly) {
  EXPECT_EQ(table_to_csv(ResultTable{}),
            "method,stages,condition,kind,level,mean_error_deg,std_error_deg,count,failed_draws,fallbacks\n");
  EXPECT_TRUE(table_plot_data(ResultTable{}).empty());
}

TEST(Bench, CsvAndPlotFixtures) {
  const ResultTable t = fixture_table();
  testing::expect_golden("results_fixture.csv", table_to_csv(t));
  const auto plots = table_plot_data(t);
  ASSERT_EQ(plots.size(), 3u);
  testing::expect_golden("results_fixture_plot_noise.dat", plots.at("noise"));
  EXPECT_NE(plots.at("stages").find("1 bayes 7.250000"), std::string::npos);
}

TEST(Bench, JsonRoundTrip) {
  ResultTable t = fixture_table();
  t.spec.supervise_all_stages = false;
  t.spec.split = Split::kCrossDataset;
  t.spec.methods = {Method::kBayes, Method::kMap};
  const std::string text = table_to_json(t);
  const ResultTable back = table_from_json(text);
  EXPECT_EQ(back.rows, t.rows);
  EXPECT_EQ(back.improvements, t.improvements);
  EXPECT_EQ(back.test_hashes, t.test_hashes);
  EXPECT_EQ(back.spec.seed, 99u);
  EXPECT_FALSE(back.spec.supervise_all_stages);
  EXPECT_EQ(back.spec.methods, t.spec.methods);
  EXPECT_EQ(table_to_json(back), text);
  EXPECT_EQ(text.find("wall_time"), std::string::npos);
}

TEST(Bench, JsonErrors) {
  EXPECT_ERROR_CODE(table_from_json("{"), ErrorCode::kFormatError);
  EXPECT_ERROR_CODE(table_from_json("{\"schema\": \"other\"}"), ErrorCode::kFormatError);
  std::string text = table_to_json(fixture_table());
  text.replace(text.find("\"method\": \"mle\""), 15, "\"method\": 7    ");
  EXPECT_ERROR_CODE(table_from_json(text), ErrorCode::kFormatError);
}

TEST(Bench, TinyExperimentIsDeterministicAcrossWorkers) {
  ExperimentSpec spec = tiny_spec();
  const ResultTable a = run_experiment(spec);
  spec.workers = 2;
  const ResultTable b = run_experiment(spec);
  EXPECT_EQ(table_to_csv(a), table_to_csv(b));
  EXPECT_EQ(table_to_json(a), table_to_json(b));

  // 3 methods x 4 conditions, plus the k = 1 ablation row.
  ASSERT_EQ(a.rows.size(), 13u);
  for (const auto& r : a.rows) {
    EXPECT_EQ(r.count, 4u);
    EXPECT_TRUE(std::isfinite(r.mean_error_deg));
    EXPECT_GE(r.mean_error_deg, 0.0);
  }
  EXPECT_NE(a.find("bayes", 1, "clean"), nullptr);
  EXPECT_NE(a.find("map", 2, "occlusion20"), nullptr);
  EXPECT_EQ(a.test_hashes.size(), 4u);
  EXPECT_EQ(a.improvements.size(), 8u);
}

TEST(Bench, AblationOnlyAndComparisonRequirements) {
  ExperimentSpec spec = tiny_spec();
  spec.ablation_stages = {};
  EXPECT_ERROR_CODE(ablate_stages(spec), ErrorCode::kInvalidArgument);
  spec.methods = {Method::kMle, Method::kMap};
  EXPECT_ERROR_CODE(compare_methods(spec), ErrorCode::kInvalidArgument);
  spec = tiny_spec();
  spec.ablation_stages = {1, 2};
  const ResultTable t = ablate_stages(spec);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0].stages, 1u);
  EXPECT_EQ(t.rows[1].stages, 2u);
  EXPECT_EQ(t.rows[1].method, "bayes");
}

TEST(Bench, EmitWritesEveryFile) {
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "baygaze_emit_test";
  std::filesystem::create_directories(dir);
  const auto files = emit(fixture_table(), (dir / "r").string());
  ASSERT_EQ(files.size(), 6u);
  for (const auto& f : files) EXPECT_TRUE(std::filesystem::exists(f)) << f;
  EXPECT_EQ(testing::read_file((dir / "r.csv").string()), table_to_csv(fixture_table()));
  EXPECT_NE(testing::read_file((dir / "r_timing.json").string()).find("wall_time_s"), std::string::npos);
  std::filesystem::remove_all(dir);
  EXPECT_ERROR_CODE(emit(fixture_table(), "/nonexistent/dir/r"), ErrorCode::kIoError);
}

}  // namespace
}  // namespace baygaze
