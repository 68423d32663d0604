#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "triad_cli.hpp"

namespace triad::cli {
namespace {

namespace fs = std::filesystem;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "triad");
  std::ostringstream out, err;
  const int code = run_command(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("triad_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  std::string p(const std::string& name) const { return (dir / name).string(); }
  fs::path dir;
};

TEST_F(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run({}).code, kUsage);
  EXPECT_EQ(run({"train", "--data", "x.csv"}).code, kUsage);
  EXPECT_EQ(run({"simulate", "--out", p("a"), "--kind", "other"}).code, kUsage);
  EXPECT_EQ(run({"--help"}).code, kOk);
}

TEST_F(Cli, DataErrorsExitTwo) {
  EXPECT_EQ(run({"evaluate", "--model", p("none"), "--data", p("none.csv")}).code, kDataError);
  std::ofstream(p("bad.csv")) << "bmi,age\n1,2\n";
  const auto r = run({"train", "--data", p("bad.csv"), "--out", p("m.json")});
  EXPECT_EQ(r.code, kDataError);
  EXPECT_FALSE(r.err.empty());
}

TEST_F(Cli, SimulateIsSeeded) {
  ASSERT_EQ(run({"simulate", "--n", "300", "--seed", "5", "--out", p("a.csv")}).code, kOk);
  ASSERT_EQ(run({"simulate", "--n", "300", "--seed", "5", "--out", p("b.csv")}).code, kOk);
  ASSERT_EQ(run({"simulate", "--n", "300", "--seed", "6", "--out", p("c.csv")}).code, kOk);
  EXPECT_EQ(slurp(p("a.csv")), slurp(p("b.csv")));
  EXPECT_NE(slurp(p("a.csv")), slurp(p("c.csv")));
}

TEST_F(Cli, TrainEvaluateExplain) {
  ASSERT_EQ(run({"simulate", "--n", "800", "--seed", "2", "--out", p("c.csv")}).code, kOk);
  std::ofstream(p("t.cfg")) << R"({"rounds": 30, "max_depth": 2})";
  const auto tr = run({"train", "--data", p("c.csv"), "--config", p("t.cfg"), "--out", p("m.model"), "--baseline"});
  ASSERT_EQ(tr.code, kOk) << tr.err;
  const auto report = json::parse(tr.out);
  EXPECT_EQ(report["trees"], 30);
  EXPECT_TRUE(report["test"]["auc"].is_number());
  EXPECT_TRUE(report["train"]["accuracy"].is_number());
  EXPECT_TRUE(report["baseline"]["auc"].is_number());
  const auto model = learn::load_model(p("m.model"));

  // same seed, same model bytes
  ASSERT_EQ(run({"train", "--data", p("c.csv"), "--config", p("t.cfg"), "--out", p("m2.model")}).code, kOk);
  EXPECT_EQ(slurp(p("m.model")), slurp(p("m2.model")));

  const auto ev = run({"evaluate", "--model", p("m.model"), "--data", p("c.csv"), "--report", p("ev.json")});
  ASSERT_EQ(ev.code, kOk);
  EXPECT_TRUE(ev.out.empty());
  EXPECT_EQ(json::parse(slurp(p("ev.json")))["metrics"]["n"], 800);

  std::ofstream(p("case.doc")) << R"({"case_id":"p1","raw":{"sex":"M","age":55,"height":165,"weight":87,"waist":101,
    "mean_sbp":116,"mean_dbp":68}})";
  const auto ex = run({"explain", "--model", p("m.model"), "--case", p("case.doc")});
  ASSERT_EQ(ex.code, kOk) << ex.err;
  const auto payload = json::parse(ex.out);
  const auto direct = explain::explain_case(model, learn::align(model.schema, case_from_json(json::parse(slurp(p("case.doc")))).features));
  EXPECT_EQ(payload, explain::to_json(direct));
  EXPECT_TRUE(payload.contains("contributions"));
}

TEST_F(Cli, GridsearchWithElimination) {
  ASSERT_EQ(run({"simulate", "--n", "400", "--seed", "1", "--out", p("c.csv")}).code, kOk);
  std::ofstream(p("grid.json")) << R"([{"rounds":10,"max_depth":1},{"rounds":20,"max_depth":2}])";
  const auto r = run({"gridsearch", "--data", p("c.csv"), "--grid", p("grid.json"), "--folds", "3", "--out",
                      p("best.json"), "--backward-elimination", "--min-features", "4"});
  ASSERT_EQ(r.code, kOk) << r.err;
  const auto report = json::parse(r.out);
  EXPECT_EQ(report["table"].size(), 2u);
  EXPECT_EQ(report["backward_elimination"].size(), 3u);  // 6 -> 5 -> 4 features
  EXPECT_EQ(json::parse(slurp(p("best.json"))), report["best"]);
}

TEST_F(Cli, PlotDataExports) {
  ASSERT_EQ(run({"simulate", "--n", "400", "--seed", "1", "--out", p("c.csv")}).code, kOk);
  std::ofstream(p("t.cfg")) << R"({"rounds": 10})";
  ASSERT_EQ(run({"train", "--data", p("c.csv"), "--config", p("t.cfg"), "--out", p("m.model")}).code, kOk);
  ASSERT_EQ(run({"summary-shap", "--model", p("m.model"), "--data", p("c.csv"), "--out", p("s.tsv")}).code, kOk);
  EXPECT_EQ(slurp(p("s.tsv")).substr(0, 18), "feature\tvalue\tphi\n");
  const auto r = run({"pd", "--model", p("m.model"), "--data", p("c.csv"), "--feature", "bmi", "--points", "5", "--out", p("pd.tsv")});
  ASSERT_EQ(r.code, kOk);
  EXPECT_EQ(json::parse(r.out)["grid"].size(), 5u);
  EXPECT_EQ(run({"pd", "--model", p("m.model"), "--data", p("c.csv"), "--feature", "nope", "--out", p("x.tsv")}).code,
            kDataError);
}

TEST_F(Cli, AnalyzeSurveyRecords) {
  ASSERT_EQ(run({"simulate", "--kind", "survey", "--n", "570", "--seed", "3", "--out", p("s.log")}).code, kOk);
  const auto r = run({"analyze-survey", "--scores", p("s.log"), "--out", p("report")});
  ASSERT_EQ(r.code, kOk) << r.err;
  const auto graph = json::parse(slurp(dir / "report" / "graph.json"));
  bool planted = false;
  for (const auto& e : graph["edges"]) planted |= e["from"] == "explanation_present" && e["to"] == "agree";
  EXPECT_TRUE(planted);
  EXPECT_EQ(json::parse(slurp(dir / "report" / "summary.json")).size(), 4u);
  EXPECT_NE(slurp(dir / "report" / "summary.tsv").find("All settings\t570\t"), std::string::npos);
  std::ofstream(p("bad.log")) << R"({"setting":"Q","agree":1,"understand":1,"use":1})" << "\n";
  EXPECT_EQ(run({"analyze-survey", "--scores", p("bad.log"), "--out", p("r2")}).code, kDataError);
}

TEST_F(Cli, MigrateStoreRenumbers) {
  {
    hosting::Store st(dir / "old");
    st.add_questionnaire({{"r1", "BI", "BI1", 3}, {"r2", "BI", "BI1", 4}});
  }
  // gap in the sequence
  auto log = hosting::read_log(dir / "old" / hosting::Store::kLogName);
  log[1]["seq"] = 7;
  std::ofstream(dir / "old" / hosting::Store::kLogName) << log[0].dump() << "\n" << log[1].dump() << "\n";
  const auto r = run({"migrate-store", "--from", p("old"), "--to", p("new")});
  ASSERT_EQ(r.code, kOk) << r.err;
  const auto migrated = hosting::read_log(dir / "new" / hosting::Store::kLogName);
  EXPECT_EQ(migrated[1]["seq"], 2);
  EXPECT_EQ(json::parse(r.out)["questionnaire"], 2);
  EXPECT_EQ(run({"migrate-store", "--from", p("old"), "--to", p("new")}).code, kDataError);

  const auto a = run({"analyze-survey", "--scores", p("new"), "--out", p("rep")});
  EXPECT_EQ(a.code, kDataError);  // no score records yet
}

}  // namespace
}  // namespace triad::cli
