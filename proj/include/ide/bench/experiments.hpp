#pragma once

// Experiment runners. Each returns the rows it produced plus a count of
// solver failures; a failing algorithm is recorded in its row's status
// column and the run carries on.

#include "ide/baselines.hpp"
#include "ide/basis_pursuit.hpp"
#include "ide/bench/config.hpp"
#include "ide/bench/csv.hpp"
#include "ide/bench/parallel.hpp"
#include "ide/ide_solver.hpp"
#include "ide/metrics.hpp"
#include "ide/problem.hpp"
#include "ide/sdp_io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ide::bench {

// ---------------------------------------------------------------------------
// Seeds. Trial t of a run with base seed b uses b + t; independent random
// streams inside a trial (dictionary, source, noise) are split from it.

enum class Stream : std::uint64_t { dictionary = 1, source = 2, perturbation = 3 };

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t trial_seed, Stream stream, std::uint64_t sub = 0) {
  return splitmix64(splitmix64(trial_seed ^ (static_cast<std::uint64_t>(stream) << 56)) + sub);
}

// ---------------------------------------------------------------------------

struct AlgorithmRun {
  std::string algorithm;
  std::optional<SolveReport> report;
  std::string status = "ok";
  std::string message;

  bool ok() const { return report.has_value(); }
};

struct ExperimentOutcome {
  std::vector<std::filesystem::path> files;
  std::vector<ResultRow> rows;
  int failures = 0;
  std::vector<std::string> messages;
  std::string summary;  ///< human-readable table, printed by the CLI
};

inline int mp_steps(const ExperimentConfig& c) {
  return c.mp_iterations.empty() ? 100
                                 : *std::max_element(c.mp_iterations.begin(), c.mp_iterations.end());
}

inline AlgorithmRun run_algorithm(const std::string& name, const SparseProblem& problem,
                                  const ExperimentConfig& c, const ThresholdSchedule& schedule,
                                  bool record_estimates = false) {
  AlgorithmRun run{name};
  try {
    if (name == "ide_s" || name == "ide_x") {
      IdeOptions options;
      options.variant = name == "ide_s" ? IdeVariant::ide_s : IdeVariant::ide_x;
      options.s_method = c.s_method;
      options.record_estimates = record_estimates;
      run.report = ide_solve(problem, schedule, options);
    } else if (name == "mof") {
      run.report = mof_solve(problem);
    } else if (name == "mp") {
      MpConfig mp;
      mp.max_iterations = mp_steps(c);
      mp.reselect = c.mp_reselect;
      mp.snapshots = c.mp_iterations;
      run.report = mp_solve(problem, mp);
    } else if (name == "lp") {
      run.report = lp_solve(problem);
    } else {
      throw ConfigError("unknown algorithm '" + name + "'");
    }
  } catch (const Error& e) {
    run.status = "failed:" + std::string(to_string(e.code()));
    run.message = name + ": " + e.what();
  }
  return run;
}

inline void note_failure(ExperimentOutcome& out, const AlgorithmRun& run, std::string_view where) {
  if (run.ok()) return;
  ++out.failures;
  out.messages.push_back(fmt::format("{}: {}", where, run.message));
}

/// Row for a finished (or failed) run. `truth` overrides the problem's own
/// truth when the solver saw a different dictionary than the generator.
inline ResultRow make_row(std::string_view experiment, const AlgorithmRun& run, int trial,
                          const SparseProblem& problem, std::string parameter,
                          const Vector* truth = nullptr) {
  ResultRow row;
  row.experiment = std::string(experiment);
  row.algorithm = run.algorithm;
  row.trial = trial;
  row.m = problem.m();
  row.n = problem.n();
  row.parameter = std::move(parameter);
  row.status = run.status;
  if (!run.report) return row;
  const SolveReport& r = *run.report;
  if (!truth && problem.truth()) truth = &problem.truth()->values;
  if (truth) row.snr = spatial_snr(*truth, r.estimate);
  row.k_alpha_final = r.traces.empty() ? count_above(r.estimate) : r.traces.back().k_alpha;
  row.residual_rel = residual_ratio(problem.a(), problem.mixture(), r.estimate);
  row.elapsed_seconds = r.total_seconds;
  return row;
}

/// Row for matching pursuit stopped after `steps` steps.
inline ResultRow mp_row(std::string_view experiment, const AlgorithmRun& run, int trial,
                        const SparseProblem& problem, int steps) {
  ResultRow row = make_row(experiment, run, trial, problem, fmt::format("iterations={}", steps));
  if (!run.report || run.report->traces.empty()) return row;
  const auto& traces = run.report->traces;
  const auto idx = std::min<std::size_t>(static_cast<std::size_t>(steps), traces.size()) - 1;
  const IterationTrace& tr = traces[idx];
  row.snr = tr.snr;
  row.k_alpha_final = tr.k_alpha;
  row.residual_rel = tr.residual_rel;
  row.elapsed_seconds = tr.elapsed_seconds;
  return row;
}

/// Average of linear SNR values, reported in dB by the caller.
inline std::optional<SnrMeasurement> mean_snr(const std::vector<SnrMeasurement>& values) {
  if (values.empty()) return std::nullopt;
  double sum = 0.0;
  for (const auto& v : values) {
    if (v.infinite) return SnrMeasurement{std::numeric_limits<double>::infinity(), true};
    sum += v.linear;
  }
  return SnrMeasurement{sum / static_cast<double>(values.size()), false};
}

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

inline SourceVector make_source(const ExperimentConfig& c, Index m, std::uint64_t seed,
                                Index num_active = 0) {
  if (c.source == SourceModel::exact_k) {
    ExactKParams p = c.exact_k;
    if (num_active > 0) p.num_active = num_active;
    return gen_source_exact_k(m, p, seed);
  }
  return gen_source_mog(m, c.mog, seed);
}

/// Instance for trial `t`: fresh dictionary and source from derived streams.
inline SparseProblem make_instance(const ExperimentConfig& c, Index m, Index n, std::uint64_t t,
                                   Index num_active = 0, std::uint64_t sub = 0) {
  const std::uint64_t ts = c.seed + t;
  Dictionary dict = gen_dictionary(n, m, stream_seed(ts, Stream::dictionary, sub));
  return make_problem(dict, make_source(c, m, stream_seed(ts, Stream::source, sub), num_active), ts);
}

inline std::filesystem::path prepare_output(const ExperimentConfig& c) {
  std::filesystem::create_directories(c.output_dir);
  return c.output_dir;
}

inline void write_estimate(ExperimentOutcome& out, const std::filesystem::path& path,
                           const Vector& s, std::string_view comment) {
  std::vector<std::vector<double>> pts;
  pts.reserve(static_cast<std::size_t>(s.size()));
  for (Index i = 0; i < s.size(); ++i) pts.push_back({static_cast<double>(i + 1), s[i]});
  write_dat(path, pts, comment);
  out.files.push_back(path);
}

inline void finish_results(ExperimentOutcome& out, const ExperimentConfig& c) {
  const auto path = c.output_dir / (std::string(to_string(c.experiment)) + "_results.csv");
  write_results(path, out.rows);
  out.files.push_back(path);
}

inline std::string db_text(const std::optional<SnrMeasurement>& s) { return snr_field(s); }

// ---------------------------------------------------------------------------
// Experiment 1: one realization (per trial) of the mixture-of-Gaussians model,
// every algorithm, per-iteration traces and estimate dumps.

inline ExperimentOutcome run_exp1(const ExperimentConfig& c) {
  ExperimentOutcome out;
  const auto dir = prepare_output(c);
  const Index m = c.m;
  const Index n = c.resolved_n();
  const ThresholdSchedule& schedule = c.schedules.front();

  struct Trial {
    std::optional<SparseProblem> problem;
    std::vector<AlgorithmRun> runs;
  };
  std::vector<Trial> trials(static_cast<std::size_t>(c.trials));
  parallel_for(trials.size(), c.threads, [&](std::size_t t) {
    trials[t].problem.emplace(make_instance(c, m, n, t));
    for (const auto& alg : c.algorithms)
      trials[t].runs.push_back(run_algorithm(alg, *trials[t].problem, c, schedule, t == 0));
  });

  CsvWriter trace(dir / "exp1_trace.csv");
  trace.row({"trial", "algorithm", "iteration", "epsilon", "k_alpha", "iteration_seconds",
             "elapsed_seconds", "snr_db", "residual_rel"});
  for (std::size_t t = 0; t < trials.size(); ++t) {
    const SparseProblem& p = *trials[t].problem;
    for (const auto& run : trials[t].runs) {
      const int trial = static_cast<int>(t);
      note_failure(out, run, fmt::format("trial {}", t));
      if (run.algorithm == "mp") {
        for (int steps : c.mp_iterations) out.rows.push_back(mp_row("exp1", run, trial, p, steps));
      } else {
        const std::string param =
            run.algorithm.starts_with("ide") ? "schedule=" + schedule.name() : "-";
        out.rows.push_back(make_row("exp1", run, trial, p, param));
      }
      if (!run.report || !run.algorithm.starts_with("ide")) continue;
      for (const auto& tr : run.report->traces)
        trace.row({std::to_string(t), run.algorithm, std::to_string(tr.iteration), num(tr.epsilon),
                   std::to_string(tr.k_alpha), num(tr.iteration_seconds),
                   num(tr.elapsed_seconds), snr_field(tr.snr), num(tr.residual_rel)});
    }
  }
  out.files.push_back(dir / "exp1_trace.csv");
  finish_results(out, c);

  // Comparison table: medians over trials per (algorithm, parameter).
  std::vector<std::pair<std::string, std::string>> keys;
  std::map<std::pair<std::string, std::string>, std::vector<const ResultRow*>> groups;
  for (const auto& r : out.rows) {
    const auto key = std::make_pair(r.algorithm, r.parameter);
    if (!groups.count(key)) keys.push_back(key);
    groups[key].push_back(&r);
  }
  CsvWriter table(dir / "exp1_table.csv");
  table.row({"algorithm", "parameter", "median_snr_db", "median_k_alpha", "median_seconds",
             "trials_ok"});
  out.summary = fmt::format("{:<8} {:<22} {:>12} {:>8} {:>12}\n", "algo", "parameter",
                            "snr_db", "k_alpha", "seconds");
  for (const auto& key : keys) {
    std::vector<double> snr, ka, secs;
    for (const ResultRow* r : groups[key]) {
      if (r->status != "ok") continue;
      snr.push_back(r->snr ? r->snr->db() : std::numeric_limits<double>::quiet_NaN());
      ka.push_back(static_cast<double>(r->k_alpha_final));
      secs.push_back(r->elapsed_seconds);
    }
    table.row({key.first, key.second, num(median(snr)), num(median(ka)), num(median(secs)),
               std::to_string(snr.size())});
    out.summary += fmt::format("{:<8} {:<22} {:>12} {:>8} {:>12}\n", key.first, key.second,
                               num(median(snr)), num(median(ka)), num(median(secs)));
  }
  out.files.push_back(dir / "exp1_table.csv");

  // Plot data from the first realization.
  if (trials.empty()) return out;
  const SparseProblem& p0 = *trials.front().problem;
  write_estimate(out, dir / "exp1_truth.dat", p0.truth()->values, "index source");
  for (const auto& run : trials.front().runs) {
    if (!run.report) continue;
    const SolveReport& r = *run.report;
    if (run.algorithm.starts_with("ide")) {
      for (const auto& tr : r.traces)
        if (tr.estimate.size() > 0)
          write_estimate(out, dir / fmt::format("exp1_{}_iter{}.dat", run.algorithm, tr.iteration),
                         tr.estimate, fmt::format("index estimate (iteration {})", tr.iteration));
      std::vector<std::vector<double>> err;
      for (const auto& tr : r.traces) err.push_back({static_cast<double>(tr.iteration), tr.residual_rel});
      write_dat(dir / fmt::format("exp1_relerr_{}.dat", run.algorithm), err, "iteration relative_error");
      out.files.push_back(dir / fmt::format("exp1_relerr_{}.dat", run.algorithm));
    } else if (run.algorithm == "mp") {
      std::vector<std::vector<double>> err, snr;
      for (const auto& tr : r.traces) {
        err.push_back({static_cast<double>(tr.iteration), tr.residual_rel});
        snr.push_back({static_cast<double>(tr.iteration), tr.snr ? tr.snr->db() : 0.0});
        if (tr.estimate.size() > 0)
          write_estimate(out, dir / fmt::format("exp1_mp_{}.dat", tr.iteration), tr.estimate,
                         fmt::format("index estimate ({} steps)", tr.iteration));
      }
      write_dat(dir / "exp1_relerr_mp.dat", err, "step relative_error");
      write_dat(dir / "exp1_snr_mp.dat", snr, "step snr_db");
      out.files.push_back(dir / "exp1_relerr_mp.dat");
      out.files.push_back(dir / "exp1_snr_mp.dat");
    } else {
      write_estimate(out, dir / fmt::format("exp1_{}.dat", run.algorithm), r.estimate,
                     "index estimate");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Experiment 2: temporal SNR per source over many time samples, one fixed
// dictionary per (m, n/m) case. Each sample is normalized on its own.

inline ExperimentOutcome run_exp2(const ExperimentConfig& c) {
  ExperimentOutcome out;
  const auto dir = prepare_output(c);
  const ThresholdSchedule& schedule = c.schedules.front();
  const auto samples = static_cast<std::size_t>(c.samples);

  CsvWriter temporal(dir / "exp2_temporal.csv");
  temporal.row({"m", "n", "algorithm", "source", "snr_db"});
  CsvWriter summary(dir / "exp2_summary.csv");
  summary.row({"m", "n", "algorithm", "mean_snr_db", "sources"});
  out.summary = fmt::format("{:>6} {:>6} {:<8} {:>14}\n", "m", "n", "algo", "mean_snr_db");

  for (std::size_t ci = 0; ci < c.cases.size(); ++ci) {
    const Index m = c.cases[ci].m;
    const auto n = static_cast<Index>(std::floor(c.cases[ci].n_ratio * static_cast<double>(m)));
    const Dictionary dict = gen_dictionary(n, m, stream_seed(c.seed, Stream::dictionary, ci));
    Matrix truth(m, static_cast<Index>(samples));
    std::vector<Matrix> est(c.algorithms.size(), Matrix::Zero(m, static_cast<Index>(samples)));
    std::vector<std::vector<ResultRow>> rows(samples);
    std::vector<std::vector<AlgorithmRun>> runs(samples);
    parallel_for(samples, c.threads, [&](std::size_t j) {
      const std::uint64_t ts = c.seed + j;
      const SparseProblem p =
          make_problem(dict, make_source(c, m, stream_seed(ts, Stream::source, ci)), ts);
      truth.col(static_cast<Index>(j)) = p.truth()->values;
      for (std::size_t a = 0; a < c.algorithms.size(); ++a) {
        AlgorithmRun run = run_algorithm(c.algorithms[a], p, c, schedule);
        if (run.report) est[a].col(static_cast<Index>(j)) = run.report->estimate;
        rows[j].push_back(make_row("exp2", run, static_cast<int>(j), p,
                                   fmt::format("m={};n={}", m, n)));
        runs[j].push_back(std::move(run));
      }
    });
    for (std::size_t j = 0; j < samples; ++j) {
      for (const auto& run : runs[j]) note_failure(out, run, fmt::format("case {} sample {}", ci, j));
      for (auto& r : rows[j]) out.rows.push_back(std::move(r));
    }
    for (std::size_t a = 0; a < c.algorithms.size(); ++a) {
      const auto snr = temporal_snr(truth, est[a]);
      std::vector<std::vector<double>> pts;
      double sum = 0.0;
      int count = 0;
      for (std::size_t i = 0; i < snr.size(); ++i) {
        const bool defined = !std::isnan(snr[i].linear);
        const std::string field = defined ? snr_field(snr[i]) : "n/a";
        temporal.row({std::to_string(m), std::to_string(n), c.algorithms[a], std::to_string(i + 1), field});
        if (!defined) continue;
        pts.push_back({static_cast<double>(i + 1), snr[i].db()});
        sum += snr[i].db();
        ++count;
      }
      const double mean_db = count ? sum / count : std::numeric_limits<double>::quiet_NaN();
      summary.row({std::to_string(m), std::to_string(n), c.algorithms[a], num(mean_db),
                   std::to_string(count)});
      out.summary += fmt::format("{:>6} {:>6} {:<8} {:>14}\n", m, n, c.algorithms[a], num(mean_db));
      const auto path = dir / fmt::format("exp2_m{}_n{}_{}.dat", m, n, c.algorithms[a]);
      write_dat(path, pts, "source temporal_snr_db");
      out.files.push_back(path);
    }
  }
  out.files.push_back(dir / "exp2_temporal.csv");
  out.files.push_back(dir / "exp2_summary.csv");
  finish_results(out, c);
  return out;
}

// ---------------------------------------------------------------------------
// Experiment 3: mean solve time against problem size. Always one thread so
// the timings do not compete for cores.

inline ExperimentOutcome run_exp3(const ExperimentConfig& c) {
  ExperimentOutcome out;
  const auto dir = prepare_output(c);
  const ThresholdSchedule& schedule = c.schedules.front();
  const auto trials = static_cast<std::size_t>(c.trials);

  CsvWriter timing(dir / "exp3_timing.csv");
  timing.row({"m", "n", "algorithm", "mean_seconds", "trials_ok"});
  out.summary = fmt::format("{:>6} {:>6} {:<8} {:>14}\n", "m", "n", "algo", "mean_seconds");
  std::map<std::string, std::vector<std::vector<double>>> curves;

  for (std::size_t pi = 0; pi < c.m_points.size(); ++pi) {
    const Index m = c.m_points[pi];
    const auto n = static_cast<Index>(std::floor(c.n_ratio * static_cast<double>(m)));
    if (!(n > 0 && n < m)) throw ConfigError(fmt::format("m point {} gives n = {}", m, n));
    std::vector<double> total(c.algorithms.size(), 0.0);
    std::vector<int> ok(c.algorithms.size(), 0);
    for (std::size_t t = 0; t < trials; ++t) {
      const SparseProblem p = make_instance(c, m, n, t, 0, static_cast<std::uint64_t>(m));
      for (std::size_t a = 0; a < c.algorithms.size(); ++a) {
        const AlgorithmRun run = run_algorithm(c.algorithms[a], p, c, schedule);
        note_failure(out, run, fmt::format("m {} trial {}", m, t));
        const std::string param =
            run.algorithm == "mp" ? fmt::format("iterations={}", mp_steps(c)) : "m=" + std::to_string(m);
        out.rows.push_back(make_row("exp3", run, static_cast<int>(t), p, param));
        if (run.report) {
          total[a] += run.report->total_seconds;
          ++ok[a];
        }
      }
    }
    for (std::size_t a = 0; a < c.algorithms.size(); ++a) {
      const double mean = ok[a] ? total[a] / ok[a] : std::numeric_limits<double>::quiet_NaN();
      timing.row({std::to_string(m), std::to_string(n), c.algorithms[a], num(mean), std::to_string(ok[a])});
      out.summary += fmt::format("{:>6} {:>6} {:<8} {:>14}\n", m, n, c.algorithms[a], num(mean));
      curves[c.algorithms[a]].push_back({static_cast<double>(m), mean});
    }
  }
  out.files.push_back(dir / "exp3_timing.csv");
  for (const auto& [alg, pts] : curves) {
    const auto path = dir / fmt::format("exp3_{}.dat", alg);
    write_dat(path, pts, "m mean_seconds");
    out.files.push_back(path);
  }
  finish_results(out, c);
  return out;
}

// ---------------------------------------------------------------------------
// Experiment 4: exact-k sources swept over #act / (n/2), under every
// configured schedule. LP does not use a schedule and runs once per trial.

inline std::vector<double> linspace(double lo, double hi, int points) {
  std::vector<double> v;
  for (int i = 0; i < points; ++i)
    v.push_back(points == 1 ? lo : lo + (hi - lo) * i / (points - 1));
  return v;
}

inline std::vector<double> logspace(double lo, double hi, int points) {
  std::vector<double> v;
  for (double e : linspace(std::log10(lo), std::log10(hi), points)) v.push_back(std::pow(10.0, e));
  return v;
}

inline Index active_count(double ratio, Index n) {
  return std::max<Index>(1, static_cast<Index>(std::lround(ratio * static_cast<double>(n) / 2.0)));
}

inline ExperimentOutcome run_exp4(const ExperimentConfig& c) {
  ExperimentOutcome out;
  const auto dir = prepare_output(c);
  const Index m = c.m;
  const Index n = c.resolved_n();
  const auto ratios = linspace(c.ratio_min, c.ratio_max, c.ratio_points);
  const auto trials = static_cast<std::size_t>(c.trials);

  // One job per (ratio, trial); each holds its runs in a fixed order.
  struct Job {
    std::vector<AlgorithmRun> runs;
    std::vector<std::string> schedule;
    std::vector<ResultRow> rows;
  };
  std::vector<Job> jobs(ratios.size() * trials);
  parallel_for(jobs.size(), c.threads, [&](std::size_t j) {
    const std::size_t ri = j / trials;
    const std::size_t t = j % trials;
    const Index act = active_count(ratios[ri], n);
    const SparseProblem p = make_instance(c, m, n, t, act, ri);
    const std::string base = fmt::format("ratio={}", num(ratios[ri]));
    for (const auto& alg : c.algorithms) {
      if (alg.starts_with("ide")) {
        for (const auto& s : c.schedules) {
          jobs[j].runs.push_back(run_algorithm(alg, p, c, s));
          jobs[j].schedule.push_back(s.name());
          jobs[j].rows.push_back(make_row("exp4", jobs[j].runs.back(), static_cast<int>(t), p,
                                          base + ";schedule=" + s.name()));
        }
      } else {
        jobs[j].runs.push_back(run_algorithm(alg, p, c, c.schedules.front()));
        jobs[j].schedule.push_back("none");
        jobs[j].rows.push_back(make_row("exp4", jobs[j].runs.back(), static_cast<int>(t), p, base));
      }
    }
  });

  CsvWriter csv(dir / "exp4_sparsity.csv");
  csv.row({"ratio", "num_active", "algorithm", "schedule", "mean_snr_db", "trials_ok"});
  out.summary = fmt::format("{:>8} {:<8} {:<12} {:>12}\n", "ratio", "algo", "schedule", "mean_snr_db");
  std::map<std::string, std::vector<std::vector<double>>> curves;
  for (std::size_t ri = 0; ri < ratios.size(); ++ri) {
    std::vector<std::pair<std::string, std::string>> keys;
    std::map<std::pair<std::string, std::string>, std::vector<SnrMeasurement>> groups;
    for (std::size_t t = 0; t < trials; ++t) {
      Job& job = jobs[ri * trials + t];
      for (std::size_t k = 0; k < job.runs.size(); ++k) {
        note_failure(out, job.runs[k], fmt::format("ratio {} trial {}", num(ratios[ri]), t));
        const auto key = std::make_pair(job.runs[k].algorithm, job.schedule[k]);
        if (!groups.count(key)) keys.push_back(key);
        auto& g = groups[key];
        if (job.rows[k].snr) g.push_back(*job.rows[k].snr);
        out.rows.push_back(std::move(job.rows[k]));
      }
    }
    for (const auto& key : keys) {
      const auto mean = mean_snr(groups[key]);
      csv.row({num(ratios[ri]), std::to_string(active_count(ratios[ri], n)), key.first,
               key.second, snr_field(mean), std::to_string(groups[key].size())});
      out.summary += fmt::format("{:>8} {:<8} {:<12} {:>12}\n", num(ratios[ri]), key.first,
                                 key.second, snr_field(mean));
      const std::string curve = key.second == "none" ? key.first : key.first + "_" + key.second;
      curves[curve].push_back({ratios[ri], mean ? mean->db() : std::numeric_limits<double>::quiet_NaN()});
    }
  }
  out.files.push_back(dir / "exp4_sparsity.csv");
  for (const auto& [name, pts] : curves) {
    const auto path = dir / fmt::format("exp4_{}.dat", name);
    write_dat(path, pts, "ratio mean_snr_db");
    out.files.push_back(path);
  }
  finish_results(out, c);
  return out;
}

// ---------------------------------------------------------------------------
// Experiment 5: the solvers see a noisy copy of the dictionary that
// generated the mixture. Trial t keeps its dictionary and source across the
// noise levels, so the curves compare like with like.

inline ExperimentOutcome run_exp5(const ExperimentConfig& c) {
  ExperimentOutcome out;
  const auto dir = prepare_output(c);
  const Index m = c.m;
  const Index n = c.resolved_n();
  const Index act = std::max<Index>(1, n / c.active_divisor);
  const auto sigmas = logspace(c.sigma_min, c.sigma_max, c.sigma_points);
  const auto trials = static_cast<std::size_t>(c.trials);
  const ThresholdSchedule& schedule = c.schedules.front();

  struct Job {
    SnrMeasurement snr_a;
    std::vector<AlgorithmRun> runs;
    std::vector<ResultRow> rows;
  };
  std::vector<Job> jobs(sigmas.size() * trials);
  parallel_for(jobs.size(), c.threads, [&](std::size_t j) {
    const std::size_t si = j / trials;
    const std::size_t t = j % trials;
    const std::uint64_t ts = c.seed + t;
    const Dictionary clean = gen_dictionary(n, m, stream_seed(ts, Stream::dictionary));
    ExperimentConfig sc = c;
    sc.source = SourceModel::exact_k;
    const SourceVector s = make_source(sc, m, stream_seed(ts, Stream::source), act);
    const Vector x = clean.matrix() * s.values;
    Dictionary noisy =
        perturb_dictionary(clean, sigmas[si], stream_seed(ts, Stream::perturbation, si), c.perturbation);
    jobs[j].snr_a = frobenius_snr(clean.matrix(), noisy.matrix());
    const SparseProblem p(std::move(noisy), x, std::nullopt, ts);
    for (const auto& alg : c.algorithms) {
      jobs[j].runs.push_back(run_algorithm(alg, p, c, schedule));
      jobs[j].rows.push_back(make_row("exp5", jobs[j].runs.back(), static_cast<int>(t), p,
                                      fmt::format("sigma_a={}", num(sigmas[si])), &s.values));
    }
  });

  CsvWriter csv(dir / "exp5_noise.csv");
  csv.row({"sigma_a", "snr_a_db", "algorithm", "mean_snr_s_db", "trials_ok"});
  out.summary = fmt::format("{:>10} {:>10} {:<8} {:>14}\n", "sigma_a", "snr_a_db", "algo", "mean_snr_s_db");
  std::map<std::string, std::vector<std::vector<double>>> curves;
  for (std::size_t si = 0; si < sigmas.size(); ++si) {
    std::vector<SnrMeasurement> snr_a;
    std::vector<std::vector<SnrMeasurement>> snr_s(c.algorithms.size());
    for (std::size_t t = 0; t < trials; ++t) {
      Job& job = jobs[si * trials + t];
      snr_a.push_back(job.snr_a);
      for (std::size_t a = 0; a < job.runs.size(); ++a) {
        note_failure(out, job.runs[a], fmt::format("sigma_a {} trial {}", num(sigmas[si]), t));
        if (job.rows[a].snr) snr_s[a].push_back(*job.rows[a].snr);
        out.rows.push_back(std::move(job.rows[a]));
      }
    }
    const double a_db = mean_snr(snr_a)->db();
    for (std::size_t a = 0; a < c.algorithms.size(); ++a) {
      const auto mean = mean_snr(snr_s[a]);
      csv.row({num(sigmas[si]), num(a_db), c.algorithms[a], snr_field(mean),
               std::to_string(snr_s[a].size())});
      out.summary += fmt::format("{:>10} {:>10} {:<8} {:>14}\n", num(sigmas[si]), num(a_db),
                                 c.algorithms[a], snr_field(mean));
      curves[c.algorithms[a]].push_back(
          {a_db, mean ? mean->db() : std::numeric_limits<double>::quiet_NaN()});
    }
  }
  out.files.push_back(dir / "exp5_noise.csv");
  for (const auto& [alg, pts] : curves) {
    const auto path = dir / fmt::format("exp5_{}.dat", alg);
    write_dat(path, pts, "snr_a_db mean_snr_s_db");
    out.files.push_back(path);
  }
  finish_results(out, c);
  return out;
}

// ---------------------------------------------------------------------------
// Single instance, from a .sdp file or generated from the configuration.

inline ExperimentOutcome run_single(const ExperimentConfig& c) {
  ExperimentOutcome out;
  const auto dir = prepare_output(c);
  const SparseProblem p = c.problem_path ? load_sdp(c.problem_path->string())
                                         : make_instance(c, c.m, c.resolved_n(), 0);
  const ThresholdSchedule& schedule = c.schedules.front();
  out.summary = fmt::format("instance: n={} m={} seed={}{}\n", p.n(), p.m(), p.seed(),
                            p.truth() ? "" : " (no ground truth)");
  out.summary += fmt::format("{:<8} {:<16} {:>12} {:>8} {:>14} {:>12}  {}\n", "algo", "parameter",
                             "snr_db", "k_alpha", "residual_rel", "seconds", "status");
  for (const auto& alg : c.algorithms) {
    const AlgorithmRun run = run_algorithm(alg, p, c, schedule);
    note_failure(out, run, "single");
    std::vector<ResultRow> rows;
    if (alg == "mp") {
      for (int steps : c.mp_iterations) rows.push_back(mp_row("single", run, 0, p, steps));
    } else {
      rows.push_back(make_row("single", run, 0, p,
                              alg.starts_with("ide") ? "schedule=" + schedule.name() : "-"));
    }
    for (auto& r : rows) {
      out.summary += fmt::format("{:<8} {:<16} {:>12} {:>8} {:>14} {:>12}  {}\n", r.algorithm,
                                 r.parameter, snr_field(r.snr), r.k_alpha_final,
                                 num(r.residual_rel), num(r.elapsed_seconds), r.status);
      out.rows.push_back(std::move(r));
    }
    if (run.report) {
      for (const auto& w : run.report->warnings) out.messages.push_back(alg + ": " + w);
      write_estimate(out, dir / fmt::format("single_{}.dat", alg), run.report->estimate,
                     "index estimate");
    }
  }
  finish_results(out, c);
  return out;
}

inline ExperimentOutcome run_experiment(const ExperimentConfig& c) {
  c.validate();
  switch (c.experiment) {
    case Experiment::exp1: return run_exp1(c);
    case Experiment::exp2: return run_exp2(c);
    case Experiment::exp3: {
      ExperimentConfig serial = c;
      serial.threads = 1;
      return run_exp3(serial);
    }
    case Experiment::exp4: return run_exp4(c);
    case Experiment::exp5: return run_exp5(c);
    case Experiment::single: return run_single(c);
  }
  throw ConfigError("unknown experiment");
}

}  // namespace ide::bench
