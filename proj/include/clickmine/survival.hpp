#pragma once

#include <string>
#include <vector>

namespace clickmine {

/// One at-risk interval (week-1, week] per student per active week.
struct PersonWeekTable {
  std::vector<std::string> covariate_names;
  struct Row {
    std::string student_id;
    int week = 1;
    int event = 0;  // 1 on the last active week of a dropout
    std::vector<double> x;
  };
  std::vector<Row> rows;
};

/// Weekly session-level observation feeding person-week construction.
struct SessionWeekObs {
  std::string student_id;
  int week = 1;
  double ipi = 0.0;
  bool rewatch_high = false;
  double vpp_pct = 0.0;
};

/// Builds a contiguous person-week record per student from first to last
/// active week (silent weeks carry forward the previous covariates). The
/// event marks the last active week unless the student reaches final_week.
/// IPI is standardized to zero mean / unit variance across all person-weeks.
PersonWeekTable build_person_weeks(const std::vector<SessionWeekObs>& obs, int final_week);

struct CoxCovariate {
  std::string name;
  double beta = 0.0;
  double se = 0.0;
  double hazard_ratio = 1.0;
  double p_value = 1.0;
};

struct CoxModel {
  std::vector<CoxCovariate> covariates;
  double log_partial_likelihood = 0.0;
  bool converged = false;
  int iterations = 0;
};

struct CoxOptions {
  int max_iter = 100;
  double gtol = 1e-8;
};

/// Cox proportional hazards on counting-process person-weeks with Breslow
/// handling of tied event weeks; Newton iterations with step halving; Wald
/// standard errors from the inverse information matrix. Throws when there
/// are no events or the information matrix is singular (naming the
/// offending covariate).
CoxModel fit_cox(const PersonWeekTable& table, const CoxOptions& opts = {});

/// Log partial likelihood at beta (exposed for oracle tests).
double cox_log_partial_likelihood(const PersonWeekTable& table,
                                  const std::vector<double>& beta);

/// Analytic gradient of the log partial likelihood (finite-difference checks).
std::vector<double> cox_gradient(const PersonWeekTable& table, const std::vector<double>& beta);

struct ZTestResult {
  double z = 0.0;
  double p = 1.0;
  double mean_a = 0.0, mean_b = 0.0;
  std::size_t n_a = 0, n_b = 0;
  bool small_sample = false;  // either side below 30
};

/// z = (mean_a - mean_b) / sqrt(s2_a/n_a + s2_b/n_b), two-sided normal p.
ZTestResult two_sample_z(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace clickmine
