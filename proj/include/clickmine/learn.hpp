#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "clickmine/actions.hpp"
#include "clickmine/encode.hpp"
#include "clickmine/metrics.hpp"

namespace clickmine {

struct FeatureVector {
  std::string instance_id;
  std::string group_id;  // student id; CV folds never split a group
  std::map<std::string, double> features;
  std::string label;
};

struct Dataset {
  std::vector<FeatureVector> instances;
  std::vector<std::string> class_names() const;  // sorted unique labels
};

enum class Task { Engagement, NextClick, InVideo, Course };
enum class FeatureMode { Raw, Summarized };

const char* task_name(Task t);
const char* mode_name(FeatureMode m);

/// One prepared session for the session-level tasks.
struct SessionUnit {
  const SymbolSequence* seq = nullptr;
  const ActionVector* actions = nullptr;  // levels assigned
  Level engagement_level = Level::Low;
  bool dropout = false;  // session lacks the video-end pause
};

/// One prepared student for the course task.
struct CourseUnit {
  const Trajectory* traj = nullptr;
  bool dropout = false;  // no video activity in the final course week
  // fraction of the student's videos at High/Low per category
  std::array<double, 2 * kNumCategories> action_fraction{};
};

Dataset make_engagement_dataset(const std::vector<SessionUnit>& units, FeatureMode mode);
/// One instance per position i >= 1 (capped); the label is the i-th symbol
/// and all features come from the prefix 0..i-1.
Dataset make_nextclick_dataset(const std::vector<SessionUnit>& units, FeatureMode mode,
                               int max_positions_per_session = 200);
Dataset make_invideo_dataset(const std::vector<SessionUnit>& units, FeatureMode mode);
Dataset make_course_dataset(const std::vector<CourseUnit>& units, FeatureMode mode);

/// Engagement of the first `prefix_len` symbols: (play + pause + post-seek
/// dwell) x duration-weighted mean playrate over played dwell.
double prefix_engagement(const SymbolSequence& seq, std::size_t prefix_len);

/// Names of features that appear (non-zero) in at least `threshold` training
/// instances. Computed on training folds only; applied to train and test.
std::set<std::string> prune_rare(const std::vector<FeatureVector>& train, int threshold);

struct LogRegModel {
  std::vector<std::string> classes;
  std::vector<std::string> feature_names;    // sorted
  std::vector<std::vector<double>> weights;  // [class][feature]
  std::vector<double> bias;                  // [class]
  double lambda = 1.0;
  std::map<std::string, double> class_costs;
  std::uint64_t seed = 0;
  int iterations = 0;
  bool converged = false;

  std::string to_json() const;
};

/// Cost-weighted regularized negative log-likelihood of one binary
/// one-vs-rest subproblem, with its analytic gradient. Feature order fixes
/// the weight layout. Exposed so tests can difference the objective.
double logreg_objective(const std::vector<FeatureVector>& data, const std::string& positive,
                        double lambda, const std::map<std::string, double>& class_costs,
                        const std::vector<std::string>& feature_order,
                        const std::vector<double>& w, double bias,
                        std::vector<double>* grad_w = nullptr, double* grad_b = nullptr);

/// One-vs-rest L2 logistic regression, minimized with L-BFGS plus Armijo
/// backtracking (monotone objective) to gradient norm <= gtol or max_iter.
/// The bias is unregularized. Throws when only one class is present.
LogRegModel train_logreg(const std::vector<FeatureVector>& train, double lambda,
                         const std::map<std::string, double>& class_costs,
                         std::uint64_t seed, int max_iter = 500, double gtol = 1e-6);

/// Normalized one-vs-rest probabilities (they sum to 1).
std::map<std::string, double> predict_proba(const LogRegModel& model,
                                            const std::map<std::string, double>& features);
std::string predict(const LogRegModel& model, const std::map<std::string, double>& features);

/// c_k = N / (K * N_k); the skew remedy used by the cost-sensitive variant.
std::map<std::string, double> inverse_frequency_costs(const std::vector<FeatureVector>& data);
std::map<std::string, double> uniform_costs(const std::vector<FeatureVector>& data);

/// Fold index per instance. Whole groups land in one fold; fold sizes are
/// balanced greedily by instance count. Deterministic given the seed.
std::vector<int> grouped_cv(const std::vector<FeatureVector>& instances, int k_folds,
                            std::uint64_t seed);

struct EvalReport {
  double accuracy = 0.0;
  double kappa = 0.0;
  double false_negative_rate = 0.0;
  bool kappa_degenerate = false;  // chance agreement was 1; kappa reported 0
  bool has_fnr = false;
};

/// Accuracy, Cohen's kappa and the false negative rate w.r.t. the positive
/// class (empty positive class: no FNR).
EvalReport evaluate(const std::vector<std::string>& predictions,
                    const std::vector<std::string>& labels,
                    const std::string& positive_class);

struct TaskConfig {
  int folds = 10;
  int rare_threshold = 2;
  double lambda = 1.0;
  bool cost_sensitive = false;
  std::uint64_t seed = 0;
  std::string positive_class;  // for the FNR
  int top_k_features = 10;
  int max_iter = 500;
};

struct TaskResult {
  std::vector<EvalReport> fold_reports;
  EvalReport mean;  // metric-wise average over folds
  // class -> top (feature, weight) pairs, weight descending
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, double>>>> top_features;
  LogRegModel final_model;  // trained on the full dataset
};

/// features -> prune_rare -> grouped CV -> train -> evaluate, averaged over
/// folds; the final model on all data supplies the per-class top features.
TaskResult run_task(const Dataset& dataset, const TaskConfig& config);

}  // namespace clickmine
