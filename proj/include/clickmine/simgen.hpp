#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "clickmine/ingest.hpp"

namespace clickmine {

struct PlayrateHabits {
  double initial_rate = 1.0;
  double change_factor = 1.25;  // Rf multiplies, Rs divides
};

/// A student behavior profile: a Markov chain over the 8 click symbols plus
/// dwell, session-length, completion and weekly dropout parameters.
struct ArchetypeConfig {
  std::string name;
  // row-stochastic, rows/cols in symbol order Pl,Pa,Sf,Sb,SSf,SSb,Rf,Rs
  std::array<std::array<double, 8>, 8> transition{};
  std::array<double, 8> dwell_mean{};  // seconds past the floor
  double mean_symbols = 30.0;
  int min_symbols = 4;
  int max_symbols = 200;
  double completion_prob = 0.8;        // session reaches the video-end pause
  double weekly_dropout_hazard = 0.1;  // in [0, 1]
  PlayrateHabits playrate;
};

struct CourseStructure {
  int weeks = 6;
  int videos_per_week = 2;
  double video_length = 600.0;  // seconds
};

struct CohortConfig {
  std::vector<ArchetypeConfig> archetypes;
  std::vector<double> mix;  // proportions, sum to 1
  int n_students = 1000;
  CourseStructure course;
  std::uint64_t seed = 7;
};

struct TruthRow {
  std::string student_id;
  std::string archetype;
  int dropout_week = 0;  // 0 = survived to the final week
};

struct SimResult {
  std::vector<ClickEvent> events;
  std::vector<VideoMeta> meta;
  std::vector<TruthRow> truth;
};

/// Validates the config and emits an ingest-compatible event log with a
/// ground-truth sidecar. Byte-deterministic for a given config and seed.
SimResult simulate_cohort(const CohortConfig& config);

/// Shipped two-archetype cohort ("deep-processor" vs "skimmer") calibrated so
/// the deep archetype carries a clearly higher IPI.
CohortConfig default_cohort_config(int n_students = 1000, std::uint64_t seed = 7);

/// Stationary distribution of a transition matrix by power iteration.
std::array<double, 8> stationary_distribution(const std::array<std::array<double, 8>, 8>& transition);

CohortConfig load_cohort_config(const std::string& path);
std::string cohort_config_json(const CohortConfig& config);

std::string events_jsonl(const std::vector<ClickEvent>& events);
std::string truth_csv(const std::vector<TruthRow>& truth);
std::string videos_csv(const std::vector<VideoMeta>& meta);

}  // namespace clickmine
