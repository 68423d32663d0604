#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "triad/survey/survey.hpp"

namespace triad::survey {
namespace {

SurveyRecord rec(Setting s, int a, int u, int use, RiskCategory fr = RiskCategory::Low,
                 RiskCategory mr = RiskCategory::Low) {
  SurveyRecord r;
  r.setting = s;
  r.agree = a;
  r.understand = u;
  r.use = use;
  r.findrisk_risk = fr;
  r.model_risk = mr;
  return r;
}

// ---- normalization ----

TEST(Normalize, Endpoints) {
  const auto t = normalize_table({rec(Setting::A, 1, 3, 5, RiskCategory::Hi, RiskCategory::Mid)});
  EXPECT_EQ(t.rows[0][t.index_of("agree")], 0.0);
  EXPECT_EQ(t.rows[0][t.index_of("understand")], 0.5);
  EXPECT_EQ(t.rows[0][t.index_of("use")], 1.0);
  EXPECT_EQ(t.rows[0][t.index_of("findrisk_risk")], 1.0);
  EXPECT_EQ(t.rows[0][t.index_of("model_risk")], 0.5);
  EXPECT_EQ(t.rows[0][t.index_of("findrisk_present")], 0.0);
  EXPECT_EQ(t.rows[0][t.index_of("explanation_present")], 0.0);
}

TEST(Normalize, PresenceFollowsSetting) {
  const auto t = normalize_table({rec(Setting::B, 3, 3, 3), rec(Setting::C, 3, 3, 3)});
  EXPECT_EQ(t.column("findrisk_present"), (std::vector<double>{1.0, 1.0}));
  EXPECT_EQ(t.column("explanation_present"), (std::vector<double>{0.0, 1.0}));
}

TEST(Normalize, OutOfDomainThrows) {
  EXPECT_THROW(normalize_table({rec(Setting::A, 0, 3, 3)}), DomainError);
  EXPECT_THROW(normalize_table({rec(Setting::A, 3, 6, 3)}), DomainError);
  AnalysisTable bad = normalize_table({rec(Setting::A, 3, 3, 3)});
  bad.rows[0][bad.index_of("agree")] = 0.3;
  EXPECT_THROW(denormalize_table(bad), DomainError);
  EXPECT_THROW(bad.index_of("nope"), SchemaMismatch);
}

TEST(Normalize, RoundTripIsIdentity) {
  std::vector<SurveyRecord> all;
  for (auto s : {Setting::A, Setting::B, Setting::C})
    for (int k = 1; k <= 5; ++k)
      for (int c = 0; c < 3; ++c)
        all.push_back(rec(s, k, 6 - k, (k % 5) + 1, static_cast<RiskCategory>(c), static_cast<RiskCategory>(2 - c)));
  EXPECT_EQ(denormalize_table(normalize_table(all)), all);
}

// ---- score summaries ----

TEST(Summary, ZeroVariance) {
  const std::vector<double> xs{4, 4, 4};
  const auto m = mean_ci(xs);
  EXPECT_EQ(m.mean, 4.0);
  EXPECT_EQ(m.ci_low, 4.0);
  EXPECT_EQ(m.ci_high, 4.0);
  EXPECT_EQ(format_ci(m), "4.00 (4.00, 4.00)");
}

TEST(Summary, TwoPointInterval) {
  // s = sqrt(2), se = 1, so 4 ± 1.96
  const std::vector<double> xs{3, 5};
  const auto m = mean_ci(xs);
  EXPECT_EQ(m.n, 2u);
  EXPECT_NEAR(m.ci_low, 2.04, 1e-12);
  EXPECT_NEAR(m.ci_high, 5.96, 1e-12);
  EXPECT_EQ(format_ci(m), "4.00 (2.04, 5.96)");
}

TEST(Summary, RenderFormat) {
  EXPECT_EQ(format_ci({10, 3.93, 3.84, 4.02}), "3.93 (3.84, 4.02)");
}

TEST(Summary, IntervalSymmetricAndOrdered) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> k(1, 5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> xs(2 + trial);
    for (auto& x : xs) x = k(rng);
    const auto m = mean_ci(xs);
    EXPECT_LE(m.ci_low, m.mean);
    EXPECT_LE(m.mean, m.ci_high);
    EXPECT_NEAR(m.mean - m.ci_low, m.ci_high - m.mean, 1e-12);
  }
}

TEST(Summary, ReplicationShrinksWidthByFormula) {
  const std::vector<double> xs{1, 2, 4, 5, 5, 3};
  std::vector<double> x4;
  for (int r = 0; r < 4; ++r) x4.insert(x4.end(), xs.begin(), xs.end());
  const auto a = mean_ci(xs), b = mean_ci(x4);
  const double n = xs.size();
  // sample sd uses n-1, so the ratio is 1/2 only up to sqrt(4(n-1)/(4n-1))
  const double expected = 0.5 * std::sqrt(4.0 * (n - 1.0) / (4.0 * n - 1.0));
  EXPECT_NEAR((b.ci_high - b.ci_low) / (a.ci_high - a.ci_low), expected, 1e-12);
  EXPECT_EQ(b.mean, a.mean);
}

TEST(Summary, GroupsAndLabels) {
  std::vector<SurveyRecord> rs{rec(Setting::A, 2, 2, 2), rec(Setting::A, 4, 4, 4), rec(Setting::B, 3, 3, 3),
                               rec(Setting::B, 5, 5, 5), rec(Setting::C, 1, 1, 1), rec(Setting::C, 1, 1, 3)};
  const auto all = summarize_scores(rs, Grouping::All);
  ASSERT_EQ(all.size(), 1u);
  EXPECT_EQ(all[0].group, "All settings");
  EXPECT_EQ(all[0].agree.n, 6u);
  const auto by = summarize_scores(rs, Grouping::BySetting);
  ASSERT_EQ(by.size(), 3u);
  EXPECT_EQ(by[0].group, "Setting A");
  EXPECT_EQ(by[1].group, "Setting B");
  EXPECT_EQ(by[2].group, "Setting C");
  EXPECT_EQ(by[1].agree.mean, 4.0);
  EXPECT_EQ(by[2].use.mean, 2.0);
  const auto j = to_json(by);
  EXPECT_EQ(j[0]["agree"]["n"], 2);
  EXPECT_EQ(j[2]["group"], "Setting C");
}

TEST(Summary, SmallGroupIsInsufficient) {
  std::vector<SurveyRecord> rs{rec(Setting::A, 2, 2, 2), rec(Setting::A, 4, 4, 4), rec(Setting::B, 3, 3, 3)};
  try {
    summarize_scores(rs, Grouping::BySetting);
    FAIL();
  } catch (const InsufficientData& e) {
    EXPECT_NE(std::string(e.what()).find("Setting B"), std::string::npos);
  }
  EXPECT_NO_THROW(summarize_scores(rs, Grouping::All));
}

// ---- mutual information ----

TEST(MutualInformation, IdenticalUniformBinary) {
  const std::vector<double> x{0, 1, 0, 1, 1, 0};
  EXPECT_NEAR(mutual_information(x, x), std::log(2.0), 1e-12);
  EXPECT_EQ(mutual_information(x, x), entropy(x));
}

TEST(MutualInformation, TenRowJoint) {
  // 4×(0,0), 4×(1,1), 1×(0,1), 1×(1,0)
  const std::vector<double> x{0, 0, 0, 0, 1, 1, 1, 1, 0, 1};
  const std::vector<double> y{0, 0, 0, 0, 1, 1, 1, 1, 1, 0};
  const double expected = 0.8 * std::log(1.6) + 0.2 * std::log(0.4);
  EXPECT_NEAR(mutual_information(x, y), expected, 1e-12);
  EXPECT_NEAR(expected, 0.1927, 5e-5);
}

TEST(MutualInformation, ProductFixtureIsZero) {
  const std::vector<double> x{0, 0, 0, 1, 1, 1};
  const std::vector<double> y{0, 1, 2, 0, 1, 2};
  EXPECT_EQ(mutual_information(x, y), 0.0);
}

TEST(MutualInformation, LengthMismatch) {
  const std::vector<double> x{0, 1, 0}, y{0, 1};
  EXPECT_THROW(mutual_information(x, y), LengthMismatch);
}

TEST(MutualInformation, SymmetricNonnegativeAndBoundedByEntropy) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<int> kx(0, 1 + trial % 5), ky(0, 1 + trial % 3);
    const std::size_t n = 2 + trial % 40;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = kx(rng) / 4.0;
      y[i] = (trial % 2 && i % 3) ? x[i] : ky(rng) / 2.0;
    }
    const double a = mutual_information(x, y), b = mutual_information(y, x);
    EXPECT_EQ(a, b);
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, std::min(entropy(x), entropy(y)) + 1e-12);
    EXPECT_EQ(mutual_information(x, x), entropy(x));
  }
}

// ---- dependency graph ----

AnalysisTable table_of(std::vector<std::vector<double>> cols) {
  AnalysisTable t;
  t.columns = table_columns();
  for (std::size_t r = 0; r < cols[0].size(); ++r) {
    std::vector<double> row;
    for (const auto& c : cols) row.push_back(c[r]);
    t.rows.push_back(row);
  }
  return t;
}

TEST(Graph, ScoringOrderAgreeBeforeUse) {
  // agree and use identical; everything else constant
  const std::vector<double> v{0, 0.25, 0.5, 0.75, 1, 0, 1, 0.5};
  const std::vector<double> c(v.size(), 0.5);
  const auto g = build_graph(table_of({v, c, v, c, c, c, c}));
  ASSERT_EQ(g.edges.size(), 1u);
  EXPECT_EQ(g.edges[0].from, "agree");
  EXPECT_EQ(g.edges[0].to, "use");
  EXPECT_TRUE(g.undirected.empty());
}

TEST(Graph, ContextPointsToScoringAndContextPairsStayUndirected) {
  const std::vector<double> b{0, 1, 0, 1, 1, 0, 0, 1};
  const std::vector<double> c(b.size(), 0.5);
  // understand <- model_risk; findrisk_present -- explanation_present
  const auto g = build_graph(table_of({c, b, c, c, b, b, b}));
  EXPECT_NE(g.find_edge("model_risk", "understand"), nullptr);
  EXPECT_EQ(g.find_edge("understand", "model_risk"), nullptr);
  EXPECT_NE(g.find_edge("explanation_present", "understand"), nullptr);
  for (const auto& e : g.edges) EXPECT_TRUE(scoring_rank(e.to).has_value());
  EXPECT_EQ(g.undirected.size(), 3u);
}

TEST(Graph, ThresholdIsStrict) {
  const std::vector<double> x{0, 0, 0, 0, 1, 1, 1, 1, 0, 1};
  const std::vector<double> y{0, 0, 0, 0, 1, 1, 1, 1, 1, 0};
  const std::vector<double> c(x.size(), 0.0);
  const double mi = mutual_information(x, y);
  EXPECT_EQ(build_graph(table_of({x, y, c, c, c, c, c}), mi).edges.size(), 0u);
  EXPECT_EQ(build_graph(table_of({x, y, c, c, c, c, c}), std::nextafter(mi, 0.0)).edges.size(), 1u);
}

TEST(Graph, PlantedChainRecovered) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto g = build_graph(normalize_table(planted_survey(570, seed)));
    EXPECT_NE(g.find_edge("explanation_present", "agree"), nullptr) << seed;
    EXPECT_NE(g.find_edge("agree", "understand"), nullptr) << seed;
    EXPECT_NE(g.find_edge("understand", "use"), nullptr) << seed;
    EXPECT_EQ(g.find_edge("agree", "explanation_present"), nullptr) << seed;
  }
}

TEST(Graph, IndependentTableHasNoEdges) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto g = build_graph(independent_table(5000, seed));
    EXPECT_TRUE(g.edges.empty()) << seed;
    EXPECT_TRUE(g.undirected.empty()) << seed;
  }
}

TEST(Graph, Deterministic) {
  const auto t = normalize_table(planted_survey(300, 5));
  EXPECT_EQ(to_json(build_graph(t)).dump(), to_json(build_graph(t)).dump());
  EXPECT_THROW(build_graph(AnalysisTable{table_columns(), {}}), InsufficientData);
}

// ---- regressions ----

TEST(Ols, ExactFit) {
  const std::vector<double> x{0, 1, 2, 3, 4};
  std::vector<double> y;
  for (double v : x) y.push_back(2 * v);
  const auto f = ols({x}, y, "y");
  EXPECT_NEAR(f.weights[0], 2.0, 1e-12);
  EXPECT_NEAR(f.intercept, 0.0, 1e-12);
}

TEST(Ols, RecoversPlantedCoefficients) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> z(0.0, 1.0), noise(0.0, 0.01);
  std::vector<double> x1(1000), x2(1000), y(1000);
  for (int i = 0; i < 1000; ++i) {
    x1[i] = z(rng);
    x2[i] = z(rng);
    y[i] = x1[i] - x2[i] + noise(rng);
  }
  const auto f = ols({x1, x2}, y, "y");
  EXPECT_NEAR(f.weights[0], 1.0, 0.05);
  EXPECT_NEAR(f.weights[1], -1.0, 0.05);
  // residuals orthogonal to the intercept and each predictor
  double r0 = 0, r1 = 0, r2 = 0;
  for (int i = 0; i < 1000; ++i) {
    const double r = y[i] - f.intercept - f.weights[0] * x1[i] - f.weights[1] * x2[i];
    r0 += r;
    r1 += r * x1[i];
    r2 += r * x2[i];
  }
  EXPECT_NEAR(r0, 0.0, 1e-9);
  EXPECT_NEAR(r1, 0.0, 1e-9);
  EXPECT_NEAR(r2, 0.0, 1e-9);
}

TEST(Ols, DuplicatedColumnsAreRankDeficient) {
  const std::vector<double> x{0, 1, 2, 3, 4}, y{1, 0, 2, 5, 3};
  try {
    ols({x, x}, y, "use");
    FAIL();
  } catch (const RankDeficient& e) {
    EXPECT_EQ(e.node(), "use");
  }
  EXPECT_THROW(ols({x, x, x, x}, y, "use"), InsufficientData);
}

TEST(Regressions, EdgesGetCoefficients) {
  const auto t = normalize_table(planted_survey(570, 9));
  const auto g = fit_edge_regressions(build_graph(t), t);
  for (const auto& e : g.edges) EXPECT_TRUE(e.coefficient.has_value()) << e.from << "->" << e.to;
  EXPECT_GT(*g.find_edge("explanation_present", "agree")->coefficient, 0.0);
  // context nodes have no inbound edges and get no fit
  for (const auto& f : g.fits) EXPECT_TRUE(scoring_rank(f.node).has_value());
  const auto j = to_json(g);
  EXPECT_TRUE(j["edges"][0]["coef"].is_number());
  EXPECT_NE(to_text(g).find("explanation_present -> agree"), std::string::npos);
}

TEST(Regressions, MatchesDirectOls) {
  const auto t = normalize_table(planted_survey(400, 2));
  const auto g = fit_edge_regressions(build_graph(t), t);
  const auto in = g.inbound("use");
  ASSERT_FALSE(in.empty());
  std::vector<std::vector<double>> xs;
  for (const auto* e : in) xs.push_back(t.column(e->from));
  const auto f = ols(xs, t.column("use"), "use");
  for (std::size_t k = 0; k < in.size(); ++k) EXPECT_EQ(*in[k]->coefficient, f.weights[k]);
}

// ---- acceptance medians ----

std::vector<QuestionnaireResponse> item(const std::string& c, const std::string& i, std::vector<int> vs) {
  std::vector<QuestionnaireResponse> out;
  int r = 0;
  for (int v : vs) out.push_back({"r" + std::to_string(++r), c, i, v});
  return out;
}

TEST(Medians, OddAndEven) {
  EXPECT_EQ(lower_median({3, 4, 4}), 4);
  EXPECT_EQ(lower_median({2, 4}), 2);
  EXPECT_EQ(lower_median({4, 1, 3, 2}), 2);
  EXPECT_THROW(lower_median({}), InsufficientData);
}

TEST(Medians, ItemAndCriterionRows) {
  auto rs = item("BI", "BI1", {3, 4, 4});
  auto more = item("BI", "BI2", {1, 2});
  rs.insert(rs.end(), more.begin(), more.end());
  const auto rows = acceptance_medians(rs);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].item, "");
  EXPECT_EQ(rows[0].n, 5u);
  EXPECT_EQ(rows[0].median, 3);  // pooled {1,2,3,4,4}
  EXPECT_EQ(rows[0].max, 4);
  EXPECT_EQ(rows[0].min, 1);
  EXPECT_EQ(rows[1].item, "BI1");
  EXPECT_EQ(rows[1].median, 4);
  EXPECT_EQ(rows[1].max, 4);
  EXPECT_EQ(rows[1].min, 3);
  EXPECT_EQ(rows[2].median, 1);
  EXPECT_TRUE(to_json(rows)[0]["item"].is_null());
}

TEST(Medians, Errors) {
  EXPECT_THROW(acceptance_medians({}), InsufficientData);
  EXPECT_THROW(acceptance_medians(item("PU", "PU1", {3, 6})), DomainError);
}

TEST(Medians, SimulatedCriteriaShape) {
  const auto rs = simulate_questionnaire({{"BI", 3, 3}, {"IM", 3, 3}, {"PEOU", 4, 4}, {"PU", 4, 4}}, 30, 1);
  std::vector<int> medians;
  for (const auto& r : acceptance_medians(rs))
    if (r.item.empty()) medians.push_back(r.median);
  EXPECT_EQ(medians, (std::vector<int>{3, 3, 4, 4}));
}

}  // namespace
}  // namespace triad::survey
