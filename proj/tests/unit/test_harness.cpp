#include <cmath>
#include <set>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "oasis/config.hpp"
#include "oasis/error.hpp"
#include "oasis/harness.hpp"
#include "oasis/run_spec.hpp"
#include "oasis/trace_io.hpp"

using namespace oasis;
namespace fs = std::filesystem;

namespace {

const OracleKind kDet{OracleVariant::deterministic, 0};

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("oasis_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Generator, ExactMatchCountAndDeterminism) {
  SyntheticPoolParams p;
  p.N = 10000;
  p.num_matches = 50;
  p.seed = 3;
  const Pool a = generate_synthetic_pool(p), b = generate_synthetic_pool(p);
  int matches = 0;
  for (const auto& r : a.pairs()) matches += *r.true_label;
  EXPECT_EQ(matches, 50);
  EXPECT_EQ((10000 - matches) / matches, 199);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].score, b[i].score);
    EXPECT_EQ(a[i].true_label, b[i].true_label);
    EXPECT_EQ(a[i].predicted_label, b[i].predicted_label);
  }
  EXPECT_TRUE(a.scores_are_probabilities());
}

TEST(Generator, NoiselessThreshold) {
  SyntheticPoolParams p;
  p.N = 5000;
  p.num_matches = 200;
  p.noise = 0.0;
  const Pool pool = generate_synthetic_pool(p);
  for (const auto& r : pool.pairs())
    EXPECT_EQ(r.predicted_label, r.score > 0.5 ? 1 : 0);
}

TEST(Generator, RawScoresAreMonotoneInCalibrated) {
  SyntheticPoolParams p;
  p.N = 3000;
  p.num_matches = 30;
  p.seed = 8;
  const Pool cal = generate_synthetic_pool(p);
  p.score_model = ScoreModel::raw;
  const Pool raw = generate_synthetic_pool(p);
  EXPECT_FALSE(raw.scores_are_probabilities());
  for (std::size_t i = 0; i < cal.size(); ++i) {
    EXPECT_EQ(cal[i].true_label, raw[i].true_label);
    EXPECT_EQ(cal[i].predicted_label, raw[i].predicted_label);
    EXPECT_EQ(cal[i].true_match_prob, raw[i].true_match_prob);
    EXPECT_EQ(raw[i].score > 0, cal[i].score > 0.5);
  }
}

// Calibration: per-decile match rate within 0.05 of the decile midpoint.
// Labels are forced to an exact count, so the check uses a balanced pool whose
// adjustment is small.
TEST(Generator, CalibratedDeciles) {
  SyntheticPoolParams p;
  p.N = 100000;
  p.num_matches = 50000;
  p.seed = 1;
  p.separation_shape = 1.0;
  const Pool pool = generate_synthetic_pool(p);
  std::vector<double> n(10, 0), m(10, 0);
  for (const auto& r : pool.pairs()) {
    const int d = std::min(9, static_cast<int>(r.score * 10));
    n[d] += 1;
    m[d] += *r.true_label;
  }
  for (int d = 0; d < 10; ++d) {
    ASSERT_GT(n[d], 100);
    EXPECT_NEAR(m[d] / n[d], 0.05 + 0.1 * d, 0.05) << "decile " << d;
  }
}

TEST(Generator, ParameterErrors) {
  SyntheticPoolParams p;
  p.N = 10;
  p.num_matches = 11;
  EXPECT_THROW(generate_synthetic_pool(p), Error);
  p.N = 0;
  p.num_matches = 0;
  EXPECT_THROW(generate_synthetic_pool(p), Error);
  p.N = 10;
  p.noise = -1;
  EXPECT_THROW(generate_synthetic_pool(p), Error);
}

TEST(Subsample, IdentitySingletonAndHypergeometric) {
  SyntheticPoolParams p;
  p.N = 10000;
  p.num_matches = 50;
  const Pool pool = generate_synthetic_pool(p);
  const Pool all = subsample_pool(pool, pool.size(), 4);
  ASSERT_EQ(all.size(), pool.size());
  std::set<std::string> ids;
  for (const auto& r : all.pairs()) ids.insert(r.pair_id);
  EXPECT_EQ(ids.size(), pool.size());
  EXPECT_EQ(subsample_pool(pool, 1, 4).size(), 1u);
  EXPECT_THROW(subsample_pool(pool, 0, 4), Error);
  EXPECT_THROW(subsample_pool(pool, pool.size() + 1, 4), Error);

  // Mean 10, sd 2.8215 (tests/oracles/derive_expected.py); 200 seeds.
  double sum = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Pool s = subsample_pool(pool, 2000, seed);
    for (const auto& r : s.pairs()) sum += *r.true_label;
  }
  const double mean = sum / 200;
  EXPECT_NEAR(mean, 10.0, 3 * 2.821488273873907 / std::sqrt(200.0));
}

TEST(Metrics, LastObservationCarriedForward) {
  RunTrace tr;
  tr.records = {{1, 0, -1, 1, 0, 0, std::nullopt, 1},
                {2, 1, -1, 1, 1, 1, 1.0, 2},
                {3, 1, -1, 1, 1, 1, 1.0, 2},
                {4, 2, -1, 1, 0, 1, 0.5, 3}};
  EXPECT_FALSE(estimate_at_budget(tr, 1).has_value());
  EXPECT_EQ(estimate_at_budget(tr, 2), 1.0);
  EXPECT_EQ(estimate_at_budget(tr, 3), 0.5);
  EXPECT_EQ(estimate_at_budget(tr, 10), 0.5);
  EXPECT_FALSE(estimate_at_budget(tr, 0).has_value());
}

TEST(Metrics, RecomputableFromTraces) {
  SyntheticPoolParams p;
  p.N = 2000;
  p.num_matches = 30;
  const Pool pool = generate_synthetic_pool(p);
  const double F = true_f_measure(pool, 0.5);
  SamplerConfig c;
  c.strategy = Strategy::passive;
  c.iterations = 600;
  const auto runs = run_replications(pool, kDet, c, 40, 100, 2);
  const auto grid = budget_grid(50, 600);
  const MetricSeries m = aggregate_metrics("passive", runs, F, grid);
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) EXPECT_LE(m.fraction_defined[i], m.fraction_defined[i + 1]);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double err = 0;
    int n = 0;
    for (const auto& r : runs)
      if (auto e = estimate_at_budget(r, grid[i])) {
        err += std::abs(*e - F);
        ++n;
      }
    if (n == 0) continue;
    EXPECT_EQ(m.abs_err[i], err / n);
    EXPECT_GE(m.std_dev[i], 0.0);
  }
  std::ostringstream os;
  write_metrics(os, m);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "budget,abs_err,std_dev,fraction_defined,runs_reached,plotted");
}

TEST(Metrics, BudgetToReach) {
  MetricSeries m;
  m.budgets = {100, 200, 300, 400};
  m.abs_err = {0.01, 0.2, 0.04, 0.03};
  m.fraction_defined = {0.5, 0.96, 1, 1};
  m.first_reliable_budget = 200;
  EXPECT_EQ(budget_to_reach(m, 0.05), 300u);
  EXPECT_FALSE(budget_to_reach(m, 0.001).has_value());
}

TEST(Metrics, PerfectMatcherZeroError) {
  const Pool p = oasis::test::perfect_pool(400, 30);
  // Not stratified: its plug-in estimate is inexact when a stratum mixes matches and non-matches.
  for (auto s : {Strategy::oasis, Strategy::passive, Strategy::importance}) {
    SamplerConfig c;
    c.strategy = s;
    c.iterations = 300;
    const auto m = aggregate_metrics(to_string(s), run_replications(p, kDet, c, 10, 0), 1.0, budget_grid(20, 200));
    for (std::size_t i = 0; i < m.budgets.size(); ++i)
      if (m.fraction_defined[i] > 0) {
        EXPECT_EQ(m.abs_err[i], 0.0);
      }
  }
}

TEST(Replications, IndependentOfWorkerCount) {
  SyntheticPoolParams p;
  p.N = 3000;
  p.num_matches = 30;
  const Pool pool = generate_synthetic_pool(p);
  SamplerConfig c;
  c.iterations = 400;
  const auto one = run_replications(pool, kDet, c, 12, 7, 1);
  const auto four = run_replications(pool, kDet, c, 12, 7, 4);
  ASSERT_EQ(one.size(), four.size());
  for (std::size_t r = 0; r < one.size(); ++r) EXPECT_EQ(one[r].records, four[r].records);
}

TEST(Kl, ClosedForms) {
  Eigen::VectorXd p(2), q(2);
  p << 1, 0;
  q << 0.5, 0.5;
  EXPECT_DOUBLE_EQ(kl_divergence(p, q), std::log(2.0));
  EXPECT_EQ(kl_divergence(q, q), 0.0);
  Eigen::VectorXd z(2);
  z << 1, 0;
  EXPECT_TRUE(std::isinf(kl_divergence(q, z)));
}

TEST(Kl, SeriesFromRun) {
  SyntheticPoolParams p;
  p.N = 3000;
  p.num_matches = 30;
  const Pool pool = generate_synthetic_pool(p);
  SamplerConfig c;
  c.iterations = 2000;
  c.seed = 3;
  const RunTrace tr = run_oasis(pool, kDet, c);
  const Strata s = csf_stratify(pool, 30, 1000);
  const auto series = kl_to_optimal(tr, pool, s, 0.5, false, 100);
  ASSERT_EQ(series.size(), 20u);
  EXPECT_EQ(series.back().t, 2000u);
  for (const auto& pt : series) {
    EXPECT_GE(pt.kl, 0.0);
    EXPECT_GE(pt.pi_abs_err, 0.0);
  }
  // A posterior equal to the truth gives zero divergence: check the rates helper.
  const Eigen::VectorXd pi = true_stratum_rates(pool, s);
  EXPECT_EQ(pi.size(), static_cast<Eigen::Index>(s.count()));
  RunTrace passive = run_passive(pool, kDet, c);
  EXPECT_THROW(kl_to_optimal(passive, pool, s, 0.5), Error);
}

TEST(Experiment, ValidateAndRun) {
  ExperimentSpec spec;
  EXPECT_THROW(spec.validate(), Error);
  SyntheticPoolParams p;
  p.N = 1000;
  p.num_matches = 20;
  spec.pool = std::make_shared<const Pool>(generate_synthetic_pool(p));
  spec.strategies = {Strategy::oasis, Strategy::passive};
  SamplerConfig c;
  c.iterations = 300;
  spec.configs[Strategy::oasis] = c;
  EXPECT_THROW(spec.validate(), Error);  // passive has no config
  spec.configs[Strategy::passive] = c;
  spec.budgets = budget_grid(50, 300);
  spec.replications = 5;
  spec.keep_traces = true;
  const auto res = run_experiment(spec);
  EXPECT_EQ(res.metrics.size(), 2u);
  EXPECT_EQ(res.metrics[1].strategy, "passive");
  EXPECT_EQ(res.traces.at(Strategy::passive).size(), 5u);
  spec.replications = 0;
  EXPECT_THROW(spec.validate(), Error);
}

TEST(TraceIo, RoundTripExact) {
  SyntheticPoolParams p;
  p.N = 2000;
  p.num_matches = 20;
  const Pool pool = generate_synthetic_pool(p);
  for (auto s : {Strategy::oasis, Strategy::passive, Strategy::stratified, Strategy::importance}) {
    SamplerConfig c;
    c.strategy = s;
    c.iterations = 300;
    const RunTrace tr = run_sampler(pool, kDet, c);
    std::ostringstream out;
    write_trace(out, pool, tr);
    std::istringstream in(out.str());
    const RunTrace back = read_trace(in, pool);
    EXPECT_EQ(back.records, tr.records) << to_string(s);
    std::ostringstream again;
    write_trace(again, pool, back);
    EXPECT_EQ(again.str(), out.str());
  }
}

TEST(TraceIo, BlankCellsAndErrors) {
  const Pool pool = oasis::test::confusion_pool(1, 0, 0, 1);
  RunTrace tr;
  tr.records = {{1, 1, -1, 1.0, 0, 0, std::nullopt, 1}};
  std::ostringstream out;
  write_trace(out, pool, tr);
  EXPECT_EQ(out.str(), "t,pair_id,stratum,w,label,prediction,f_estimate,budget\n1,z1,,1,0,0,,1\n");
  std::istringstream bad("t,pair_id,stratum,w,label,prediction,f_estimate,budget\n1,nope,,1,0,0,,1\n");
  EXPECT_THROW(read_trace(bad, pool), Error);
  EXPECT_EQ(format_real(INFINITY), "inf");
  EXPECT_EQ(format_real(0.1), "0.1");
}

TEST(Config, FieldsRoundTrip) {
  SamplerConfig c;
  c.alpha = 0.3;
  c.epsilon = 0.01;
  c.eta = 7.5;
  c.tau = -0.25;
  c.max_budget = 123;
  c.prior_decay = true;
  c.seed = 99;
  c.strategy = Strategy::stratified;
  SamplerConfig d;
  for (const auto& [k, v] : config_entries(c)) {
    EXPECT_TRUE(is_config_field(k));
    set_config_field(d, k, v);
  }
  EXPECT_EQ(config_entries(d), config_entries(c));
  set_config_field(d, "eta", "none");
  EXPECT_FALSE(d.eta.has_value());
  set_config_field(d, "strata", "12");
  EXPECT_EQ(d.desired_K, 12u);
}

TEST(Config, Errors) {
  SamplerConfig c;
  try {
    set_config_field(c, "colour", "red");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::parameter);
    EXPECT_EQ(e.field(), "colour");
  }
  try {
    set_config_field(c, "alpha", "half");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::domain);
    EXPECT_EQ(e.field(), "alpha");
  }
  EXPECT_THROW(set_config_field(c, "iterations", "-3"), Error);
  EXPECT_THROW(set_config_field(c, "prior_decay", "maybe"), Error);
  c.alpha = 2;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Config, KeyValueText) {
  const auto kv = parse_key_values("# comment\n a = 1 \n\nb=two # trailing\n");
  ASSERT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv[0], (std::pair<std::string, std::string>{"a", "1"}));
  EXPECT_EQ(kv[1], (std::pair<std::string, std::string>{"b", "two"}));
  try {
    parse_key_values("a = 1\nbroken\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::schema);
    EXPECT_EQ(e.row(), 2u);
  }
}

TEST(RunSpec, SyntheticWithOverrides) {
  const RunSpec spec = parse_run_spec(
      "N = 1500\nmatches = 15\npool_seed = 2\nstrategies = oasis, is\nreplications = 3\n"
      "budget_step = 25\nbudget_limit = 100\niterations = 200\nis.alpha = 1\n");
  const auto& ex = spec.experiment;
  EXPECT_EQ(ex.pool->size(), 1500u);
  EXPECT_EQ(ex.strategies, (std::vector<Strategy>{Strategy::oasis, Strategy::importance}));
  EXPECT_EQ(ex.configs.at(Strategy::importance).alpha, 1.0);
  EXPECT_EQ(ex.configs.at(Strategy::oasis).alpha, 0.5);
  EXPECT_EQ(ex.configs.at(Strategy::oasis).iterations, 200u);
  EXPECT_EQ(ex.budgets, (std::vector<std::size_t>{25, 50, 75, 100}));
  EXPECT_NE(spec.pool_source.find("synthetic"), std::string::npos);
}

TEST(RunSpec, Errors) {
  EXPECT_THROW(parse_run_spec("pool = a.csv\nN = 10\n"), Error);
  EXPECT_THROW(parse_run_spec("N = 100\nmatches = 5\npassive.alpha = 1\n"), Error);
  EXPECT_THROW(parse_run_spec("N = 100\nmatches = 5\nbogus = 1\n"), Error);
  EXPECT_THROW(parse_run_spec("N = 100\nmatches = 5\nreplications = 0\n"), Error);
  try {
    parse_run_spec("pool = /nonexistent/pool.csv\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::io);
  }
}

TEST(RunSpec, WritesOutputs) {
  const fs::path dir = scratch_dir("runspec");
  SyntheticPoolParams p;
  p.N = 800;
  p.num_matches = 10;
  save_pool((dir / "pool.csv").string(), generate_synthetic_pool(p));
  {
    std::ofstream f(dir / "spec.conf");
    f << "pool = pool.csv\nstrategies = oasis,passive\nreplications = 2\nbudget_step = 20\n"
         "budget_limit = 60\niterations = 100\nkeep_traces = true\noutput_dir = "
      << (dir / "out").string() << "\n";
  }
  const RunSpec spec = load_run_spec((dir / "spec.conf").string());
  write_experiment(spec, run_experiment(spec.experiment));
  EXPECT_TRUE(fs::exists(dir / "out" / "metrics_oasis.csv"));
  EXPECT_TRUE(fs::exists(dir / "out" / "metrics_passive.csv"));
  EXPECT_TRUE(fs::exists(dir / "out" / "summary.txt"));
  EXPECT_TRUE(fs::exists(dir / "out" / "traces" / "passive_1.csv"));
  fs::remove_all(dir);
}
