#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "clickmine/actions.hpp"
#include "clickmine/encode.hpp"
#include "clickmine/ingest.hpp"
#include "clickmine/learn.hpp"
#include "clickmine/metrics.hpp"
#include "clickmine/simgen.hpp"
#include "clickmine/survival.hpp"

namespace clickmine {

struct PipelineConfig {
  // Input: either an event log or a simulated cohort.
  std::string events_path;
  std::string videos_path;
  std::string simulate;  // "" | "default" | path to a cohort config
  int sim_students = 1000;
  std::string activity_path;  // optional: student_id,did_exercises

  std::string out_dir;
  std::uint64_t seed = 7;

  SessionOptions session;
  EncodeOptions encode;
  int ngram_n = 4;
  int ngram_k = 100;
  MatchCosts costs;
  IpiConfig ipi;
  std::string patterns_path;  // optional taxonomy override

  bool do_actions = true;  // actions + metrics + trajectories
  bool do_learn = true;
  bool do_survival = true;
  bool do_report = true;
  std::vector<std::string> tasks{"engagement", "nextclick", "invideo", "course"};
  std::vector<std::string> modes{"raw", "summarized"};
  std::string task_video;  // session-level tasks; empty -> most complete sessions
  double lambda = 1.0;
  int nextclick_cap = 200;
  int folds_override = 0;      // 0 = per-task default (10/5/10/5)
  int rare_override = 0;       // 0 = per-task default (2/5/2/5)
  double hist_lo = -12.0, hist_hi = 12.0;  // report histogram range, width 1
};

struct PipelineResult {
  std::string out_dir;
  std::size_t n_events = 0;
  std::size_t n_sessions = 0;
  std::size_t n_complete = 0;
  std::size_t n_students = 0;
  std::string task_video;
  // flat stats for tests and callers: mean IPI per partition, z values,
  // task accuracies, baselines
  std::map<std::string, double> stats;
};

/// ingest -> encode -> actions -> metrics -> trajectories -> learn/survival
/// -> report, writing every artifact under out_dir.
PipelineResult run_pipeline(const PipelineConfig& config);

// -- config loaders ---------------------------------------------------------

/// Taxonomy override: JSON object category name -> list of pattern strings.
/// Categories absent from the file keep their defaults. Patterns must
/// tokenize and be at least n symbols long.
Taxonomy load_taxonomy(const std::string& path, int n);

IpiConfig load_ipi_config(const std::string& path);
std::string ipi_config_json(const IpiConfig& config);

/// Every effective default, including the IPI weight table and the category
/// pattern lists.
std::string show_config_text();

// -- table serialization ------------------------------------------------------

std::string sessions_csv(const std::vector<VideoSession>& sessions);
std::string sequences_csv(const std::vector<SymbolSequence>& seqs);
std::string dwell_csv(const std::vector<SymbolSequence>& seqs);
std::string actions_csv(const std::vector<ActionVector>& actions);
std::string metrics_csv(const std::vector<EngagementRecord>& records);
std::string trajectories_csv(const std::vector<Trajectory>& trajectories);
std::string ngrams_csv(const std::vector<std::pair<std::string, long long>>& ranked);
std::string person_weeks_csv(const PersonWeekTable& table);
PersonWeekTable read_person_weeks_csv(const std::string& path);
std::string hazards_csv(const CoxModel& model);

struct ZTestRow {
  std::string partition_a;
  std::string partition_b;
  ZTestResult result;
};
std::string ztests_csv(const std::vector<ZTestRow>& rows);

// -- report -------------------------------------------------------------------

/// (comparison, partition) -> per-session or per-student IPI values.
struct IpiPartition {
  std::string comparison;
  std::string partition;
  std::vector<double> values;
};

struct ReportOptions {
  double bin_width = 1.0;
  double lo = -12.0, hi = 12.0;
};

std::string ipi_histograms_csv(const std::vector<IpiPartition>& parts, const ReportOptions& opts);
std::string ipi_summary_csv(const std::vector<IpiPartition>& parts);

/// Builds the Figure 4/5-style partitions from written artifacts
/// (metrics.csv + sessions.csv + sequences.csv + videos.csv, with the
/// in-video side rescored over all sessions) and writes the report CSVs
/// plus ztests.csv under out_dir.
struct ReportInputs {
  std::string metrics_path;
  std::string sessions_path;
  std::string sequences_path;
  std::string videos_path;
  std::string activity_path;  // optional
  std::string out_dir;
  int ngram_n = 4;
  MatchCosts costs;
  IpiConfig ipi;
  ReportOptions opts;
};
void run_report_from_files(const ReportInputs& inputs);

}  // namespace clickmine
