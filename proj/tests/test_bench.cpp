#include "helpers.hpp"
#include "ide/bench/config.hpp"
#include "ide/bench/csv.hpp"
#include "ide/bench/experiments.hpp"
#include "ide/sdp_io.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace ide;
using namespace ide::bench;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::path(::testing::TempDir()) / ("ide_bench_" + name);
  fs::remove_all(dir);
  return dir;
}

bool is_number(const std::string& s) {
  if (s == "inf" || s == "-inf") return true;
  try {
    std::size_t pos = 0;
    std::stod(s, &pos);
    return pos == s.size();
  } catch (...) {
    return false;
  }
}

/// Checks a results file against the row schema; returns the data rows.
std::vector<std::vector<std::string>> validate_results(const fs::path& path) {
  const auto rows = read_csv(path);
  EXPECT_FALSE(rows.empty());
  if (rows.empty()) return {};
  EXPECT_EQ(rows.front(), result_header());
  std::vector<std::vector<std::string>> data(rows.begin() + 1, rows.end());
  for (const auto& r : data) {
    EXPECT_EQ(r.size(), result_header().size());
    if (r.size() != result_header().size()) continue;
    for (int i : {2, 3, 4, 7}) EXPECT_NO_THROW((void)std::stoll(r[static_cast<std::size_t>(i)]));
    EXPECT_TRUE(r[6] == "n/a" || is_number(r[6])) << r[6];
    EXPECT_NE(r[6], "nan");
    EXPECT_TRUE(is_number(r[8])) << r[8];
    EXPECT_TRUE(is_number(r[9])) << r[9];
    EXPECT_FALSE(r[10].empty());
  }
  return data;
}

std::string strip_timing(const fs::path& path, std::vector<std::string> timing_columns) {
  const auto rows = read_csv(path);
  std::vector<std::size_t> drop;
  for (std::size_t i = 0; i < rows.front().size(); ++i)
    for (const auto& name : timing_columns)
      if (rows.front()[i] == name) drop.push_back(i);
  std::string out;
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i)
      if (std::find(drop.begin(), drop.end(), i) == drop.end()) out += r[i] + ",";
    out += "\n";
  }
  return out;
}

ExperimentConfig small(Experiment e, const fs::path& dir) {
  auto c = ExperimentConfig::defaults(e);
  c.output_dir = dir;
  return c;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(BENCH_EXE) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Csv, EscapesDelimiters) {
  EXPECT_EQ(csv_escape("plain"), "plain");
  EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
  const fs::path dir = fresh_dir("csv");
  fs::create_directories(dir);
  {
    CsvWriter w(dir / "t.csv");
    w.row({"x,y", "q\"", "z"});
  }
  EXPECT_EQ(read_csv(dir / "t.csv").front(), (std::vector<std::string>{"x,y", "q\"", "z"}));
}

TEST(Csv, NumberFormatting) {
  EXPECT_EQ(num(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(num(0.5), "0.5");
  EXPECT_EQ(snr_field(std::nullopt), "n/a");
  EXPECT_EQ(snr_field(SnrMeasurement{0, true}), "inf");
  EXPECT_EQ(snr_field(SnrMeasurement{100, false}), "20");
}

TEST(Config, DefaultsMatchExperiments) {
  const auto e1 = ExperimentConfig::defaults(Experiment::exp1);
  EXPECT_EQ(e1.m, 1024);
  EXPECT_EQ(e1.resolved_n(), 409);
  EXPECT_EQ(e1.mp_iterations, (std::vector<int>{10, 100, 1000}));
  const auto e4 = ExperimentConfig::defaults(Experiment::exp4);
  EXPECT_EQ(e4.resolved_n(), 400);
  EXPECT_EQ(e4.schedules.size(), 2u);
  EXPECT_EQ(e4.ratio_points, 25);
  const auto e5 = ExperimentConfig::defaults(Experiment::exp5);
  EXPECT_EQ(e5.m, 500);
  EXPECT_EQ(e5.resolved_n() / e5.active_divisor, 25);
  EXPECT_EQ(ExperimentConfig::defaults(Experiment::exp3).m_points.size(), 7u);
}

TEST(Config, FileSectionsAndOverrides) {
  const fs::path dir = fresh_dir("cfg");
  fs::create_directories(dir);
  std::ofstream(dir / "c.ini") << "[common]\nseed = 7\ntrials = 3\n[exp4]\nm = 100\nn_ratio = 0.3\n"
                                  "schedule = general_10; 0.5, 0.1\nalgorithms = lp\n[exp1]\nm = 5\n";
  auto c = ExperimentConfig::defaults(Experiment::exp4);
  load_config_file(c, dir / "c.ini");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.trials, 3);
  EXPECT_EQ(c.m, 100);
  EXPECT_EQ(c.resolved_n(), 30);
  ASSERT_EQ(c.schedules.size(), 2u);
  EXPECT_EQ(c.schedules[1].values(), (std::vector<double>{0.5, 0.1}));
  EXPECT_EQ(c.algorithms, (std::vector<std::string>{"lp"}));
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, Rejections) {
  auto c = ExperimentConfig::defaults(Experiment::exp1);
  EXPECT_THROW(apply_key(c, "bogus", "1"), ConfigError);
  EXPECT_THROW(apply_key(c, "m", "ten"), ConfigError);
  EXPECT_THROW(apply_key(c, "schedule", "0.1, 0.2"), ConfigError);
  EXPECT_THROW(apply_key(c, "seed", "-4"), ConfigError);
  apply_key(c, "algorithms", "ide_s,magic");
  EXPECT_THROW(c.validate(), ConfigError);
  c = ExperimentConfig::defaults(Experiment::exp1);
  c.n = 2000;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ExperimentConfig::defaults(Experiment::exp1);
  c.trials = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(c.apply_scale(1.5), ConfigError);
  EXPECT_THROW(parse_experiment("exp9"), ConfigError);
}

TEST(Config, ScaleShrinksSizes) {
  auto c = ExperimentConfig::defaults(Experiment::exp4);
  c.apply_scale(0.1);
  EXPECT_EQ(c.m, 100);
  EXPECT_EQ(c.resolved_n(), 40);
  EXPECT_EQ(c.trials, 1);
  auto e3 = ExperimentConfig::defaults(Experiment::exp3);
  e3.apply_scale(0.5);
  EXPECT_EQ(e3.m_points.back(), 500);
}

TEST(Seeds, StreamsDiffer) {
  EXPECT_NE(stream_seed(1, Stream::dictionary), stream_seed(1, Stream::source));
  EXPECT_NE(stream_seed(1, Stream::dictionary), stream_seed(2, Stream::dictionary));
  EXPECT_EQ(stream_seed(5, Stream::source, 3), stream_seed(5, Stream::source, 3));
}

TEST(ParallelFor, CoversAllAndRethrows) {
  std::vector<int> hit(100, 0);
  parallel_for(hit.size(), 4, [&](std::size_t i) { hit[i] += 1; });
  EXPECT_EQ(std::count(hit.begin(), hit.end(), 1), 100);
  EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) { if (i == 5) throw std::runtime_error("x"); }),
               std::runtime_error);
}

TEST(Exp1, SmallRunFilesParse) {
  const fs::path dir = fresh_dir("exp1");
  auto c = small(Experiment::exp1, dir);
  c.m = 32;
  c.n = 13;
  c.mp_iterations = {5, 20};
  const auto out = run_experiment(c);
  EXPECT_EQ(out.failures, 0);
  const auto rows = validate_results(dir / "exp1_results.csv");
  EXPECT_EQ(rows.size(), 6u);  // mof, two mp, lp, ide_s, ide_x
  for (const auto& r : rows) {
    EXPECT_EQ(r[3], "32");
    EXPECT_EQ(r[4], "13");
  }
  const auto trace = read_csv(dir / "exp1_trace.csv");
  EXPECT_EQ(trace.size(), 1u + 2u * 6u);
  for (const auto& f : out.files) EXPECT_TRUE(fs::exists(f)) << f;
  EXPECT_TRUE(fs::exists(dir / "exp1_ide_s_iter6.dat"));
  EXPECT_TRUE(fs::exists(dir / "exp1_relerr_mp.dat"));
}

TEST(Reproducibility, IdenticalConfigGivesIdenticalBodies) {
  auto run_once = [](const std::string& name, int threads) {
    const fs::path dir = fresh_dir(name);
    auto c = small(Experiment::exp4, dir);
    c.m = 60;
    c.n = 24;
    c.trials = 3;
    c.ratio_points = 3;
    c.threads = threads;
    run_experiment(c);
    return strip_timing(dir / "exp4_results.csv", {"elapsed_seconds"}) +
           strip_timing(dir / "exp4_sparsity.csv", {});
  };
  const auto a = run_once("repro_a", 1);
  EXPECT_EQ(a, run_once("repro_b", 1));
  EXPECT_EQ(a, run_once("repro_c", 3));
}

TEST(Exp2, SingleSampleTemporalEqualsSpatial) {
  const fs::path dir = fresh_dir("exp2");
  auto c = small(Experiment::exp2, dir);
  c.cases = {{30, 0.6}};
  c.samples = 1;
  run_experiment(c);
  const auto results = validate_results(dir / "exp2_results.csv");
  const auto temporal = read_csv(dir / "exp2_temporal.csv");
  EXPECT_EQ(temporal.size(), 1u + 3u * 30u);
  // With one sample each source's temporal SNR is |s_i|^2 / (s_i - s_hat_i)^2;
  // recompute it from the same instance.
  const auto p = make_problem(gen_dictionary(18, 30, stream_seed(c.seed, Stream::dictionary, 0)),
                              make_source(c, 30, stream_seed(c.seed, Stream::source, 0)));
  const auto run = run_algorithm("ide_s", p, c, c.schedules.front());
  const Vector& s = p.truth()->values;
  for (Index i = 0; i < 30; ++i) {
    const auto& row = temporal[static_cast<std::size_t>(1 + i)];
    ASSERT_EQ(row[2], "ide_s");
    const double e = s[i] - run.report->estimate[i];
    if (e == 0.0) {
      EXPECT_EQ(row[4], "inf");
    } else {
      EXPECT_NEAR(std::stod(row[4]), 10 * std::log10(s[i] * s[i] / (e * e)), 1e-6);
    }
  }
}

TEST(Exp3, RowCountIsPointsTimesAlgorithms) {
  const fs::path dir = fresh_dir("exp3");
  auto c = small(Experiment::exp3, dir);
  c.m_points = {10, 20, 50};
  c.trials = 1;
  run_experiment(c);
  EXPECT_EQ(read_csv(dir / "exp3_timing.csv").size(), 1u + 3u * 5u);
  validate_results(dir / "exp3_results.csv");
}

TEST(Exp5, SingleSigmaRowCount) {
  const fs::path dir = fresh_dir("exp5");
  auto c = small(Experiment::exp5, dir);
  c.m = 60;
  c.n = 24;
  c.trials = 1;
  c.sigma_points = 1;
  run_experiment(c);
  EXPECT_EQ(read_csv(dir / "exp5_noise.csv").size(), 1u + 3u);
  const auto rows = validate_results(dir / "exp5_results.csv");
  EXPECT_EQ(rows.size(), 3u);
  for (const auto& r : rows) EXPECT_NE(r[6], "n/a");
}

TEST(Single, GeneratedInstanceAllAlgorithms) {
  const fs::path dir = fresh_dir("single");
  auto c = small(Experiment::single, dir);
  const auto out = run_experiment(c);
  EXPECT_EQ(out.failures, 0);
  validate_results(dir / "single_results.csv");
  for (const auto& alg : known_algorithms()) {
    const auto est = read_csv(dir / ("single_" + alg + ".dat"));
    EXPECT_EQ(est.size(), 1u + 64u) << alg;
  }
}

TEST(Single, SdpWithoutTruthReportsNa) {
  const fs::path dir = fresh_dir("single_sdp");
  fs::create_directories(dir);
  const auto base = test::random_problem(8, 20, 4);
  save_sdp((dir / "bare.sdp").string(), SparseProblem(base.dictionary(), base.mixture()));
  save_sdp((dir / "full.sdp").string(), base);
  auto c = small(Experiment::single, dir);
  c.mp_iterations = {10};
  c.problem_path = dir / "bare.sdp";
  run_experiment(c);
  for (const auto& r : validate_results(dir / "single_results.csv")) {
    EXPECT_EQ(r[6], "n/a");
    EXPECT_TRUE(is_number(r[8]));
  }
  c.problem_path = dir / "full.sdp";
  run_experiment(c);
  for (const auto& r : validate_results(dir / "single_results.csv")) EXPECT_NE(r[6], "n/a");
}

TEST(Cli, ExitCodes) {
  const fs::path dir = fresh_dir("cli");
  fs::create_directories(dir);
  const std::string out = " --out " + (dir / "o").string();
  EXPECT_EQ(run_cli("run --experiment single --scale 0.5" + out), 0);
  EXPECT_EQ(run_cli("run --experiment exp7" + out), 1);
  EXPECT_EQ(run_cli("run --experiment single --algorithms foo" + out), 1);
  EXPECT_EQ(run_cli("run --experiment single --schedule 0.1,0.3" + out), 1);
  EXPECT_EQ(run_cli("run --experiment single --scale 0" + out), 1);
  std::ofstream(dir / "bad.ini") << "[single]\nwhat = 1\n";
  EXPECT_EQ(run_cli("run --experiment single --config " + (dir / "bad.ini").string() + out), 1);
  EXPECT_EQ(run_cli("run --experiment single --config " + (dir / "missing.ini").string() + out), 3);
  std::ofstream(dir / "bad.sdp") << "2 5 0\n1 2\n";
  EXPECT_EQ(run_cli("run --experiment single --problem " + (dir / "bad.sdp").string() + out), 1);
  EXPECT_EQ(run_cli("run --experiment single --problem " + (dir / "none.sdp").string() + out), 3);
  std::ofstream(dir / "blocker") << "x";
  EXPECT_EQ(run_cli("run --experiment single --out " + (dir / "blocker").string()), 3);
  // An LP iteration cap of 1 cannot converge: a solver failure.
  std::ofstream(dir / "gen.sdp");
  EXPECT_EQ(run_cli("generate --n 6 --m 14 --out " + (dir / "gen.sdp").string()), 0);
  EXPECT_EQ(run_cli("run --experiment single --problem " + (dir / "gen.sdp").string() + out), 0);
}

TEST(Cli, SolverFailureIsExitTwo) {
  // A duplicated pair of atoms that both carry the strongest activity stays
  // in IDE-x's active set through every retry.
  const fs::path dir = fresh_dir("cli_fail");
  fs::create_directories(dir);
  Matrix a = gen_dictionary(6, 14, 12).matrix();
  a.col(3) = a.col(7);
  Vector s = Vector::Zero(14);
  s[3] = 1.0;
  s[7] = 1.0;
  s[10] = 0.6;
  const auto p = make_problem(Dictionary(a), {s, SourceModel::external});
  save_sdp((dir / "dup.sdp").string(), p);
  auto c = ExperimentConfig::defaults(Experiment::single);
  c.schedules = {ThresholdSchedule({0.5})};
  ASSERT_FALSE(run_algorithm("ide_x", p, c, c.schedules.front()).ok());
  EXPECT_EQ(run_cli("run --experiment single --algorithms ide_x --schedule 0.5 --problem " +
                    (dir / "dup.sdp").string() + " --out " + (dir / "o").string()),
            2);
}
