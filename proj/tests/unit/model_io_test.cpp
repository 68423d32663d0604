#include <filesystem>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "triad/domain/simulate.hpp"
#include "triad/explain/shap.hpp"
#include "triad/learn/gbdt.hpp"
#include "triad/learn/model_io.hpp"

namespace triad::learn {
namespace {

std::string expect_format_error(const std::string& text) {
  try {
    parse_model(text);
  } catch (const FormatError& e) {
    return e.what();
  }
  ADD_FAILURE() << "no FormatError";
  return {};
}

json stump_doc() {
  return json::parse(R"({"format_version":1,"schema":["x"],"base_margin":0.5,"learning_rate":0.1,
    "trees":[{"nodes":[
      {"id":0,"kind":"split","feature":0,"threshold":2,"left":1,"right":2,"missing_goes":"right","cover":40},
      {"id":1,"kind":"leaf","value":-1,"cover":30},
      {"id":2,"kind":"leaf","value":2,"cover":10}]}],
    "metadata":{"seed":3,"train_digest":"abc","config":null}})");
}

TEST(ModelIo, ParsesHandWrittenDocument) {
  auto m = ensemble_from_json(stump_doc());
  ASSERT_EQ(m.trees.size(), 1u);
  EXPECT_FALSE(m.trees[0].nodes[0].missing_left);
  std::vector<Value> row{std::nullopt};
  EXPECT_EQ(predict_margin(m, row), 2.5);
}

TEST(ModelIo, RandomEnsembleRoundTripIsBitExact) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto m = testing::random_ensemble(6, 20, 4, seed);
    auto back = parse_model(serialize_model(m));
    EXPECT_EQ(back, m);
    testing::RandomTreeBuilder cases(6, 4, seed + 100);
    for (int i = 0; i < 100; ++i) {
      auto row = cases.random_case();
      EXPECT_EQ(predict_margin(back, row), predict_margin(m, row));
    }
  }
}

TEST(ModelIo, TrainedModelThroughFile) {
  auto ds = simulate_cohort({.n = 500, .positive_rate = 0.2, .missing_rate = 0.05}, 1);
  auto m = train_gbdt(ds, {.rounds = 30, .seed = 2});
  const auto path = (std::filesystem::temp_directory_path() / "triad_model_io_test.json").string();
  save_model(m, path);
  auto back = load_model(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back, m);
  for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_EQ(predict_margin(back, ds.row(i)), predict_margin(m, ds.row(i)));
  EXPECT_EQ(serialize_model(back), serialize_model(m));
}

TEST(ModelIo, DanglingChild) {
  auto doc = stump_doc();
  doc["trees"][0]["nodes"][0]["right"] = 7;
  auto msg = expect_format_error(doc.dump());
  EXPECT_NE(msg.find("trees[0].nodes[0]"), std::string::npos) << msg;
}

TEST(ModelIo, CoverMismatch) {
  auto doc = stump_doc();
  doc["trees"][0]["nodes"][0]["cover"] = 41;
  auto msg = expect_format_error(doc.dump());
  EXPECT_NE(msg.find("trees[0].nodes[0]"), std::string::npos) << msg;
}

TEST(ModelIo, StructuralErrors) {
  auto bad_kind = stump_doc();
  bad_kind["trees"][0]["nodes"][1]["kind"] = "twig";
  EXPECT_NE(expect_format_error(bad_kind.dump()).find("trees[0].nodes[1]"), std::string::npos);

  auto version = stump_doc();
  version["format_version"] = 9;
  expect_format_error(version.dump());

  auto feature = stump_doc();
  feature["trees"][0]["nodes"][0]["feature"] = 3;
  expect_format_error(feature.dump());

  auto backwards = stump_doc();
  backwards["trees"][0]["nodes"][0]["left"] = 0;
  expect_format_error(backwards.dump());

  auto missing_goes = stump_doc();
  missing_goes["trees"][0]["nodes"][0]["missing_goes"] = "up";
  expect_format_error(missing_goes.dump());

  expect_format_error("{not json");
  expect_format_error(R"({"format_version":1})");
}

TEST(ModelIo, OrphanNode) {
  auto doc = stump_doc();
  doc["trees"][0]["nodes"].push_back({{"id", 3}, {"kind", "leaf"}, {"value", 0.0}, {"cover", 0}});
  EXPECT_NE(expect_format_error(doc.dump()).find("trees[0].nodes[3]"), std::string::npos);
}

TEST(ModelIo, AbsentCoversLoadButCannotBeExplained) {
  auto doc = stump_doc();
  for (auto& n : doc["trees"][0]["nodes"]) n.erase("cover");
  auto m = ensemble_from_json(doc);
  std::vector<Value> row{1.0};
  EXPECT_EQ(predict_margin(m, row), -0.5);
  EXPECT_THROW(explain::tree_shap(m, row), CoverMissing);
}

}  // namespace
}  // namespace triad::learn
