#include "clickmine/survival.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "clickmine/stats.hpp"

namespace clickmine {

PersonWeekTable build_person_weeks(const std::vector<SessionWeekObs>& obs, int final_week) {
  if (final_week < 1) throw std::invalid_argument("final_week must be >= 1");

  struct WeekAgg {
    double ipi_sum = 0, rewatch_sum = 0, vpp_sum = 0;
    int n = 0;
  };
  std::map<std::string, std::map<int, WeekAgg>> students;
  for (const auto& o : obs) {
    auto& agg = students[o.student_id][o.week];
    agg.ipi_sum += o.ipi;
    agg.rewatch_sum += o.rewatch_high ? 1.0 : 0.0;
    agg.vpp_sum += o.vpp_pct;
    agg.n += 1;
  }

  PersonWeekTable table;
  table.covariate_names = {"ipi_std", "rewatch_high", "play_proportion"};
  for (const auto& [student, weeks] : students) {
    if (weeks.empty()) continue;
    const int first = weeks.begin()->first;
    const int last = weeks.rbegin()->first;
    const bool censored = last >= final_week;
    double ipi = 0, rewatch = 0, vpp = 0;
    for (int w = first; w <= last; ++w) {
      auto it = weeks.find(w);
      if (it != weeks.end()) {
        ipi = it->second.ipi_sum / it->second.n;
        rewatch = it->second.rewatch_sum / it->second.n >= 0.5 ? 1.0 : 0.0;
        vpp = it->second.vpp_sum / it->second.n;
      }
      // otherwise a silent week inside the active range: carry forward
      PersonWeekTable::Row row;
      row.student_id = student;
      row.week = w;
      row.event = (!censored && w == last) ? 1 : 0;
      row.x = {ipi, rewatch, vpp};
      table.rows.push_back(std::move(row));
    }
  }

  // Standardize the IPI column (population moments).
  if (!table.rows.empty()) {
    double m = 0;
    for (const auto& r : table.rows) m += r.x[0];
    m /= static_cast<double>(table.rows.size());
    double var = 0;
    for (const auto& r : table.rows) var += (r.x[0] - m) * (r.x[0] - m);
    var /= static_cast<double>(table.rows.size());
    const double sd = std::sqrt(var);
    for (auto& r : table.rows) r.x[0] = sd > 0 ? (r.x[0] - m) / sd : 0.0;
  }
  return table;
}

namespace {

struct RiskSets {
  // week -> indices of rows at risk that week; events listed separately
  std::vector<int> weeks;                       // weeks with >=1 event, ascending
  std::map<int, std::vector<int>> at_risk;      // for those weeks
  std::map<int, std::vector<int>> events;
};

RiskSets build_risk_sets(const PersonWeekTable& table) {
  RiskSets rs;
  std::map<int, std::vector<int>> by_week;
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    by_week[table.rows[i].week].push_back(static_cast<int>(i));
  for (const auto& [w, idx] : by_week) {
    std::vector<int> ev;
    for (int i : idx)
      if (table.rows[i].event == 1) ev.push_back(i);
    if (!ev.empty()) {
      rs.weeks.push_back(w);
      rs.at_risk[w] = idx;
      rs.events[w] = std::move(ev);
    }
  }
  return rs;
}

// Breslow log partial likelihood with gradient and information matrix.
double eval_partial_likelihood(const PersonWeekTable& table, const RiskSets& rs,
                               const Eigen::VectorXd& beta, Eigen::VectorXd* grad,
                               Eigen::MatrixXd* info) {
  const int p = static_cast<int>(beta.size());
  double ll = 0.0;
  if (grad) grad->setZero();
  if (info) info->setZero();

  for (int w : rs.weeks) {
    const auto& risk = rs.at_risk.at(w);
    const auto& ev = rs.events.at(w);
    const double d = static_cast<double>(ev.size());

    double s0 = 0.0;
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(p, p);
    for (int i : risk) {
      Eigen::Map<const Eigen::VectorXd> x(table.rows[i].x.data(), p);
      const double e = std::exp(beta.dot(x));
      s0 += e;
      if (grad) s1 += e * x;
      if (info) s2 += e * x * x.transpose();
    }
    for (int i : ev) {
      Eigen::Map<const Eigen::VectorXd> x(table.rows[i].x.data(), p);
      ll += beta.dot(x);
      if (grad) *grad += x;
    }
    ll -= d * std::log(s0);
    if (grad) *grad -= d * s1 / s0;
    if (info) *info += d * (s2 / s0 - (s1 / s0) * (s1 / s0).transpose());
  }
  return ll;
}

}  // namespace

double cox_log_partial_likelihood(const PersonWeekTable& table,
                                  const std::vector<double>& beta) {
  if (beta.size() != table.covariate_names.size())
    throw std::invalid_argument("beta size mismatch");
  const RiskSets rs = build_risk_sets(table);
  Eigen::Map<const Eigen::VectorXd> b(beta.data(), static_cast<int>(beta.size()));
  return eval_partial_likelihood(table, rs, b, nullptr, nullptr);
}

std::vector<double> cox_gradient(const PersonWeekTable& table, const std::vector<double>& beta) {
  if (beta.size() != table.covariate_names.size())
    throw std::invalid_argument("beta size mismatch");
  const RiskSets rs = build_risk_sets(table);
  Eigen::Map<const Eigen::VectorXd> b(beta.data(), static_cast<int>(beta.size()));
  Eigen::VectorXd g(static_cast<int>(beta.size()));
  eval_partial_likelihood(table, rs, b, &g, nullptr);
  return {g.data(), g.data() + g.size()};
}

CoxModel fit_cox(const PersonWeekTable& table, const CoxOptions& opts) {
  const int p = static_cast<int>(table.covariate_names.size());
  if (p == 0) throw std::invalid_argument("fit_cox: no covariates");
  for (const auto& r : table.rows)
    if (static_cast<int>(r.x.size()) != p)
      throw std::invalid_argument("fit_cox: ragged covariate row");

  const RiskSets rs = build_risk_sets(table);
  if (rs.weeks.empty()) throw std::invalid_argument("fit_cox: no events");

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd grad(p);
  Eigen::MatrixXd info(p, p);
  double ll = eval_partial_likelihood(table, rs, beta, &grad, &info);

  CoxModel model;
  for (int it = 0; it < opts.max_iter; ++it) {
    if (grad.norm() <= opts.gtol) {
      model.converged = true;
      break;
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 1e-12) {
      int worst = 0;
      ldlt.vectorD().minCoeff(&worst);
      throw std::runtime_error("fit_cox: singular information matrix (covariate '" +
                               table.covariate_names[worst] + "')");
    }
    const Eigen::VectorXd step = ldlt.solve(grad);

    // Step halving keeps the log partial likelihood non-decreasing.
    double scale = 1.0;
    bool improved = false;
    for (int half = 0; half < 40; ++half) {
      const Eigen::VectorXd cand = beta + scale * step;
      const double cand_ll = eval_partial_likelihood(table, rs, cand, nullptr, nullptr);
      if (cand_ll >= ll - 1e-14) {
        beta = cand;
        ll = cand_ll;
        improved = true;
        break;
      }
      scale *= 0.5;
    }
    model.iterations = it + 1;
    if (!improved) break;
    ll = eval_partial_likelihood(table, rs, beta, &grad, &info);
  }
  if (grad.norm() <= opts.gtol) model.converged = true;

  Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
  if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 1e-12) {
    int worst = 0;
    ldlt.vectorD().minCoeff(&worst);
    throw std::runtime_error("fit_cox: singular information matrix (covariate '" +
                             table.covariate_names[worst] + "')");
  }
  const Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(p, p));

  model.log_partial_likelihood = ll;
  for (int j = 0; j < p; ++j) {
    CoxCovariate c;
    c.name = table.covariate_names[j];
    c.beta = beta[j];
    c.se = std::sqrt(std::max(cov(j, j), 0.0));
    c.hazard_ratio = std::exp(beta[j]);
    c.p_value = c.se > 0 ? two_sided_p(c.beta / c.se) : 0.0;
    model.covariates.push_back(c);
  }
  return model;
}

ZTestResult two_sample_z(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("two_sample_z: empty sample");
  ZTestResult r;
  r.n_a = a.size();
  r.n_b = b.size();
  r.mean_a = mean(a);
  r.mean_b = mean(b);
  r.small_sample = a.size() < 30 || b.size() < 30;
  const double denom = std::sqrt(sample_variance(a) / static_cast<double>(a.size()) +
                                 sample_variance(b) / static_cast<double>(b.size()));
  const double diff = r.mean_a - r.mean_b;
  if (denom == 0.0) {
    if (diff == 0.0) {
      r.z = 0.0;
      r.p = 1.0;
    } else {
      r.z = diff > 0 ? std::numeric_limits<double>::infinity()
                     : -std::numeric_limits<double>::infinity();
      r.p = 0.0;
    }
    return r;
  }
  r.z = diff / denom;
  r.p = two_sided_p(r.z);
  return r;
}

}  // namespace clickmine
