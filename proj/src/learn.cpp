#include "clickmine/learn.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include "clickmine/rng.hpp"
#include "clickmine/stats.hpp"
#include "json.hpp"

namespace clickmine {

const char* task_name(Task t) {
  switch (t) {
    case Task::Engagement: return "engagement";
    case Task::NextClick: return "nextclick";
    case Task::InVideo: return "invideo";
    case Task::Course: return "course";
  }
  return "?";
}

const char* mode_name(FeatureMode m) { return m == FeatureMode::Raw ? "raw" : "summarized"; }

std::vector<std::string> Dataset::class_names() const {
  std::set<std::string> s;
  for (const auto& fv : instances) s.insert(fv.label);
  return {s.begin(), s.end()};
}

namespace {

void add_ngrams(std::map<std::string, double>& f, const std::vector<std::string>& tokens,
                int n, const std::string& prefix) {
  if (tokens.size() < static_cast<std::size_t>(n)) return;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string gram;
    for (int j = 0; j < n; ++j) {
      if (j) gram += '-';
      gram += tokens[i + j];
    }
    f[prefix + std::to_string(n) + "g:" + gram] += 1.0;
  }
}

std::vector<std::string> symbol_tokens(const std::vector<ClickSymbol>& symbols, std::size_t len) {
  std::vector<std::string> out;
  out.reserve(len);
  for (std::size_t i = 0; i < len; ++i) out.push_back(symbol_name(symbols[i]));
  return out;
}

void add_symbol_proportions(std::map<std::string, double>& f,
                            const std::vector<ClickSymbol>& symbols, std::size_t len) {
  if (len == 0) return;
  std::array<int, kNumSymbols> counts{};
  for (std::size_t i = 0; i < len; ++i) ++counts[static_cast<int>(symbols[i])];
  for (int s = 0; s < kNumSymbols; ++s)
    if (counts[s] > 0)
      f[std::string("prop:") + symbol_name(static_cast<ClickSymbol>(s))] =
          static_cast<double>(counts[s]) / static_cast<double>(len);
}

void add_action_indicators(std::map<std::string, double>& f, const ActionVector& v) {
  for (int c = 0; c < kNumCategories; ++c)
    f[std::string("act:") + category_name(static_cast<Category>(c)) + "=" +
      level_name(v.level[c])] = 1.0;
}

bool is_seek_symbol(ClickSymbol s) {
  return s == ClickSymbol::Sf || s == ClickSymbol::Sb || s == ClickSymbol::SSf ||
         s == ClickSymbol::SSb;
}

}  // namespace

double prefix_engagement(const SymbolSequence& seq, std::size_t prefix_len) {
  double play = 0, pause = 0, dwell = 0, rate_weighted = 0;
  prefix_len = std::min(prefix_len, seq.symbols.size());
  for (std::size_t j = 0; j < prefix_len; ++j) {
    const double d = seq.dwell[j];
    const ClickSymbol s = seq.symbols[j];
    if (is_seek_symbol(s)) {
      dwell += d;
    } else if (s == ClickSymbol::Pl) {
      play += d;
      rate_weighted += d * seq.rate[j];
    } else if (s == ClickSymbol::Pa) {
      pause += d;
    } else if (seq.playing[j]) {  // rate change while playing
      play += d;
      rate_weighted += d * seq.rate[j];
    } else {
      pause += d;
    }
  }
  if (play <= 0) return 0.0;
  return (play + pause + dwell) * (rate_weighted / play);
}

Dataset make_engagement_dataset(const std::vector<SessionUnit>& units, FeatureMode mode) {
  Dataset ds;
  for (const auto& u : units) {
    FeatureVector fv;
    fv.instance_id = u.seq->session_id;
    fv.group_id = u.seq->student_id;
    fv.label = level_name(u.engagement_level);
    if (mode == FeatureMode::Raw) {
      const auto toks = symbol_tokens(u.seq->symbols, u.seq->symbols.size());
      add_ngrams(fv.features, toks, 4, "");
      add_ngrams(fv.features, toks, 5, "");
      fv.features["len"] = static_cast<double>(u.seq->symbols.size());
    } else {
      add_action_indicators(fv.features, *u.actions);
    }
    ds.instances.push_back(std::move(fv));
  }
  return ds;
}

Dataset make_nextclick_dataset(const std::vector<SessionUnit>& units, FeatureMode mode,
                               int max_positions_per_session) {
  struct Slot {
    const SessionUnit* unit;
    std::size_t pos;  // predict symbols[pos] from the prefix before it
  };
  std::vector<Slot> slots;
  for (const auto& u : units) {
    const std::size_t len = u.seq->symbols.size();
    const std::size_t cap = std::min<std::size_t>(
        len > 0 ? len - 1 : 0, static_cast<std::size_t>(max_positions_per_session));
    for (std::size_t i = 1; i <= cap; ++i) slots.push_back({&u, i});
  }
  if (slots.empty()) return {};

  // Prefix engagement, dichotomized over all instances.
  std::vector<double> eng(slots.size());
  for (std::size_t s = 0; s < slots.size(); ++s)
    eng[s] = prefix_engagement(*slots[s].unit->seq, slots[s].pos);
  const std::vector<Level> eng_levels =
      slots.size() >= 2 ? median_split(eng) : std::vector<Level>{Level::Low};

  // Prefix-scored behavioral levels for the summarized setup.
  std::vector<ActionVector> prefix_actions;
  if (mode == FeatureMode::Summarized) {
    prefix_actions.reserve(slots.size());
    for (std::size_t s = 0; s < slots.size(); ++s) {
      const auto& sym = slots[s].unit->seq->symbols;
      std::vector<ClickSymbol> prefix(sym.begin(), sym.begin() + slots[s].pos);
      prefix_actions.push_back(score_stream("", prefix));
    }
    if (prefix_actions.size() >= 2) dichotomize(prefix_actions);
    else if (!prefix_actions.empty()) prefix_actions[0].levels_assigned = true;
  }

  Dataset ds;
  for (std::size_t s = 0; s < slots.size(); ++s) {
    const auto& slot = slots[s];
    const auto& sym = slot.unit->seq->symbols;
    FeatureVector fv;
    fv.instance_id = slot.unit->seq->session_id + "#" + std::to_string(slot.pos);
    fv.group_id = slot.unit->seq->student_id;
    fv.label = symbol_name(sym[slot.pos]);
    add_symbol_proportions(fv.features, sym, slot.pos);
    fv.features[std::string("eng:") + level_name(eng_levels[s])] = 1.0;
    if (mode == FeatureMode::Raw) {
      const auto toks = symbol_tokens(sym, slot.pos);
      add_ngrams(fv.features, toks, 4, "");
      add_ngrams(fv.features, toks, 5, "");
      fv.features["len"] = static_cast<double>(slot.pos);
    } else {
      add_action_indicators(fv.features, prefix_actions[s]);
    }
    ds.instances.push_back(std::move(fv));
  }
  return ds;
}

Dataset make_invideo_dataset(const std::vector<SessionUnit>& units, FeatureMode mode) {
  // Time spent after the last student click: for completed sessions this is
  // the gap to the automatic end pause; for dropouts the log simply ends.
  std::vector<double> last_dwell(units.size(), 0.0);
  for (std::size_t i = 0; i < units.size(); ++i) {
    const auto& seq = *units[i].seq;
    if (seq.ends_with_auto_pause && seq.symbols.size() >= 2)
      last_dwell[i] = seq.dwell[seq.symbols.size() - 2];
  }
  const std::vector<Level> dwell_levels =
      units.size() >= 2 ? median_split(last_dwell) : std::vector<Level>(units.size(), Level::Low);

  Dataset ds;
  for (std::size_t i = 0; i < units.size(); ++i) {
    const auto& u = units[i];
    const auto& sym = u.seq->symbols;
    FeatureVector fv;
    fv.instance_id = u.seq->session_id;
    fv.group_id = u.seq->student_id;
    fv.label = u.dropout ? "dropout" : "stay";

    add_symbol_proportions(fv.features, sym, sym.size());
    fv.features[std::string("eng:") + level_name(u.engagement_level)] = 1.0;
    // last student click, skipping a terminal auto end pause
    std::size_t last_idx = sym.size();
    if (u.seq->ends_with_auto_pause) {
      if (sym.size() >= 2) last_idx = sym.size() - 2;
    } else {
      last_idx = sym.size() - 1;
    }
    if (last_idx < sym.size())
      fv.features[std::string("last:") + symbol_name(sym[last_idx])] = 1.0;
    fv.features[std::string("lastdwell:") + level_name(dwell_levels[i])] = 1.0;

    if (mode == FeatureMode::Raw) {
      const auto toks = symbol_tokens(sym, sym.size());
      add_ngrams(fv.features, toks, 4, "");
      add_ngrams(fv.features, toks, 5, "");
      fv.features["len"] = static_cast<double>(sym.size());
    } else {
      add_action_indicators(fv.features, *u.actions);
    }
    ds.instances.push_back(std::move(fv));
  }
  return ds;
}

Dataset make_course_dataset(const std::vector<CourseUnit>& units, FeatureMode mode) {
  Dataset ds;
  for (const auto& u : units) {
    const auto& t = *u.traj;
    const std::size_t n = t.video_ids.size();
    const std::size_t prefix = n > 0 ? n - 1 : 0;
    FeatureVector fv;
    fv.instance_id = t.student_id;
    fv.group_id = t.student_id;
    fv.label = u.dropout ? "dropout" : "stay";

    std::vector<std::string> eng_toks, vpp_toks, ipi_toks;
    for (std::size_t i = 0; i < prefix; ++i) {
      eng_toks.push_back(t.engagement[i] == Level::High ? "H" : "L");
      vpp_toks.push_back(band_name(t.vpp[i]));
      ipi_toks.push_back(band_name(t.ipi[i]));
    }
    if (prefix > 0) {
      for (const auto& tok : eng_toks) fv.features["eng_prop:" + tok] += 1.0 / prefix;
      for (const auto& tok : vpp_toks) fv.features["vpp_prop:" + tok] += 1.0 / prefix;
      for (const auto& tok : ipi_toks) fv.features["ipi_prop:" + tok] += 1.0 / prefix;
    }
    if (n > 0) {
      fv.features[std::string("last_eng:") +
                  (t.engagement[n - 1] == Level::High ? "H" : "L")] = 1.0;
      fv.features[std::string("last_vpp:") + band_name(t.vpp[n - 1])] = 1.0;
      fv.features[std::string("last_ipi:") + band_name(t.ipi[n - 1])] = 1.0;
    }
    if (mode == FeatureMode::Raw) {
      add_ngrams(fv.features, eng_toks, 4, "eng_");
      add_ngrams(fv.features, eng_toks, 5, "eng_");
      add_ngrams(fv.features, vpp_toks, 4, "vpp_");
      add_ngrams(fv.features, vpp_toks, 5, "vpp_");
      add_ngrams(fv.features, ipi_toks, 4, "ipi_");
      add_ngrams(fv.features, ipi_toks, 5, "ipi_");
      fv.features["traj_len"] = static_cast<double>(prefix);
    } else {
      for (int c = 0; c < kNumCategories; ++c) {
        const auto* name = category_name(static_cast<Category>(c));
        if (u.action_fraction[2 * c] > 0)
          fv.features[std::string("act:") + name + "=High"] = u.action_fraction[2 * c];
        if (u.action_fraction[2 * c + 1] > 0)
          fv.features[std::string("act:") + name + "=Low"] = u.action_fraction[2 * c + 1];
      }
    }
    ds.instances.push_back(std::move(fv));
  }
  return ds;
}

std::set<std::string> prune_rare(const std::vector<FeatureVector>& train, int threshold) {
  if (threshold < 1) throw std::invalid_argument("prune_rare: threshold must be >= 1");
  std::map<std::string, int> seen_in;
  for (const auto& fv : train)
    for (const auto& [name, value] : fv.features)
      if (value != 0.0) ++seen_in[name];
  std::set<std::string> kept;
  for (const auto& [name, count] : seen_in)
    if (count >= threshold) kept.insert(name);
  return kept;
}

namespace {

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Sparse binary-label problem; the parameter vector is [w(0..d-1), b].
struct BinaryProblem {
  std::vector<int> rowptr, col;
  std::vector<double> val;
  std::vector<double> y;     // 0/1
  std::vector<double> cost;  // per-instance class cost
  int dim = 0;               // number of features (excl. bias)
  double lambda = 0.0;

  double eval(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const {
    const int n = static_cast<int>(y.size());
    grad.setZero();
    double f = 0.0;
    for (int i = 0; i < n; ++i) {
      double z = x[dim];
      for (int p = rowptr[i]; p < rowptr[i + 1]; ++p) z += val[p] * x[col[p]];
      f += cost[i] * (softplus(z) - y[i] * z);
      const double r = cost[i] * (sigmoid(z) - y[i]);
      for (int p = rowptr[i]; p < rowptr[i + 1]; ++p) grad[col[p]] += r * val[p];
      grad[dim] += r;
    }
    for (int j = 0; j < dim; ++j) {
      f += 0.5 * lambda * x[j] * x[j];
      grad[j] += lambda * x[j];
    }
    return f;
  }
};

struct LbfgsOutcome {
  Eigen::VectorXd x;
  int iterations = 0;
  bool converged = false;
};

LbfgsOutcome lbfgs_minimize(const BinaryProblem& prob, int max_iter, double gtol) {
  const int d = prob.dim + 1;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd g(d), g_new(d);
  double f = prob.eval(x, g);

  constexpr int kHistory = 10;
  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;

  LbfgsOutcome out;
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    if (g.norm() <= gtol) {
      out.converged = true;
      break;
    }
    // two-loop recursion
    Eigen::VectorXd q = g;
    std::vector<double> alpha(s_hist.size());
    for (int h = static_cast<int>(s_hist.size()) - 1; h >= 0; --h) {
      alpha[h] = rho_hist[h] * s_hist[h].dot(q);
      q -= alpha[h] * y_hist[h];
    }
    if (!s_hist.empty()) {
      const auto& s = s_hist.back();
      const auto& yv = y_hist.back();
      q *= s.dot(yv) / yv.dot(yv);
    }
    for (std::size_t h = 0; h < s_hist.size(); ++h) {
      const double beta = rho_hist[h] * y_hist[h].dot(q);
      q += (alpha[h] - beta) * s_hist[h];
    }
    Eigen::VectorXd dir = -q;
    double gd = g.dot(dir);
    if (!(gd < 0)) {  // not a descent direction; fall back to steepest descent
      dir = -g;
      gd = g.dot(dir);
    }

    // Armijo backtracking keeps the objective strictly non-increasing.
    double step = 1.0;
    double f_new = f;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      f_new = prob.eval(x + step * dir, g_new);
      if (f_new <= f + 1e-4 * step * gd) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no further progress possible at double precision

    const Eigen::VectorXd s = step * dir;
    const Eigen::VectorXd yv = g_new - g;
    x += s;
    f = f_new;
    g = g_new;
    const double sy = s.dot(yv);
    if (sy > 1e-12) {
      s_hist.push_back(s);
      y_hist.push_back(yv);
      rho_hist.push_back(1.0 / sy);
      if (s_hist.size() > kHistory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
  }
  if (g.norm() <= gtol) out.converged = true;
  out.x = x;
  out.iterations = iter;
  return out;
}

}  // namespace

double logreg_objective(const std::vector<FeatureVector>& data, const std::string& positive,
                        double lambda, const std::map<std::string, double>& class_costs,
                        const std::vector<std::string>& feature_order,
                        const std::vector<double>& w, double bias,
                        std::vector<double>* grad_w, double* grad_b) {
  if (w.size() != feature_order.size())
    throw std::invalid_argument("logreg_objective: weight/feature size mismatch");
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < feature_order.size(); ++i)
    index[feature_order[i]] = static_cast<int>(i);

  BinaryProblem prob;
  prob.dim = static_cast<int>(feature_order.size());
  prob.lambda = lambda;
  prob.rowptr.push_back(0);
  for (const auto& fv : data) {
    for (const auto& [name, v] : fv.features) {
      auto it = index.find(name);
      if (it == index.end()) continue;
      prob.col.push_back(it->second);
      prob.val.push_back(v);
    }
    prob.rowptr.push_back(static_cast<int>(prob.col.size()));
    auto it = class_costs.find(fv.label);
    prob.cost.push_back(it == class_costs.end() ? 1.0 : it->second);
    prob.y.push_back(fv.label == positive ? 1.0 : 0.0);
  }

  Eigen::VectorXd x(prob.dim + 1);
  for (int j = 0; j < prob.dim; ++j) x[j] = w[j];
  x[prob.dim] = bias;
  Eigen::VectorXd g(prob.dim + 1);
  const double f = prob.eval(x, g);
  if (grad_w) grad_w->assign(g.data(), g.data() + prob.dim);
  if (grad_b) *grad_b = g[prob.dim];
  return f;
}

LogRegModel train_logreg(const std::vector<FeatureVector>& train, double lambda,
                         const std::map<std::string, double>& class_costs,
                         std::uint64_t seed, int max_iter, double gtol) {
  if (lambda < 0) throw std::invalid_argument("train_logreg: lambda must be >= 0");
  LogRegModel model;
  model.lambda = lambda;
  model.seed = seed;
  model.class_costs = class_costs;

  std::set<std::string> labels, features;
  for (const auto& fv : train) {
    labels.insert(fv.label);
    for (const auto& [name, v] : fv.features)
      if (std::isfinite(v)) features.insert(name);
      else throw std::invalid_argument("non-finite feature value: " + name);
  }
  if (labels.size() < 2)
    throw std::invalid_argument("train_logreg: training set has a single class");
  model.classes = {labels.begin(), labels.end()};
  model.feature_names = {features.begin(), features.end()};

  std::map<std::string, int> index;
  for (std::size_t i = 0; i < model.feature_names.size(); ++i)
    index[model.feature_names[i]] = static_cast<int>(i);

  BinaryProblem prob;
  prob.dim = static_cast<int>(model.feature_names.size());
  prob.lambda = lambda;
  prob.rowptr.push_back(0);
  for (const auto& fv : train) {
    for (const auto& [name, v] : fv.features) {
      prob.col.push_back(index.at(name));
      prob.val.push_back(v);
    }
    prob.rowptr.push_back(static_cast<int>(prob.col.size()));
    auto it = class_costs.find(fv.label);
    prob.cost.push_back(it == class_costs.end() ? 1.0 : it->second);
  }

  model.converged = true;
  for (const auto& cls : model.classes) {
    prob.y.clear();
    for (const auto& fv : train) prob.y.push_back(fv.label == cls ? 1.0 : 0.0);
    const LbfgsOutcome res = lbfgs_minimize(prob, max_iter, gtol);
    std::vector<double> w(res.x.data(), res.x.data() + prob.dim);
    model.weights.push_back(std::move(w));
    model.bias.push_back(res.x[prob.dim]);
    model.iterations = std::max(model.iterations, res.iterations);
    model.converged = model.converged && res.converged;
  }
  return model;
}

std::map<std::string, double> predict_proba(const LogRegModel& model,
                                            const std::map<std::string, double>& features) {
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < model.feature_names.size(); ++i)
    index[model.feature_names[i]] = static_cast<int>(i);

  std::map<std::string, double> out;
  double total = 0.0;
  for (std::size_t k = 0; k < model.classes.size(); ++k) {
    double z = model.bias[k];
    for (const auto& [name, v] : features) {
      auto it = index.find(name);
      if (it != index.end()) z += model.weights[k][it->second] * v;
    }
    const double p = sigmoid(z);
    out[model.classes[k]] = p;
    total += p;
  }
  if (total > 0)
    for (auto& [cls, p] : out) p /= total;
  return out;
}

std::string predict(const LogRegModel& model, const std::map<std::string, double>& features) {
  const auto proba = predict_proba(model, features);
  std::string best;
  double best_p = -1.0;
  for (const auto& [cls, p] : proba)
    if (p > best_p) {
      best_p = p;
      best = cls;
    }
  return best;
}

std::map<std::string, double> inverse_frequency_costs(const std::vector<FeatureVector>& data) {
  std::map<std::string, double> counts;
  for (const auto& fv : data) counts[fv.label] += 1.0;
  const double n = static_cast<double>(data.size());
  const double k = static_cast<double>(counts.size());
  std::map<std::string, double> costs;
  for (const auto& [cls, nk] : counts) costs[cls] = n / (k * nk);
  return costs;
}

std::map<std::string, double> uniform_costs(const std::vector<FeatureVector>& data) {
  std::map<std::string, double> costs;
  for (const auto& fv : data) costs[fv.label] = 1.0;
  return costs;
}

std::vector<int> grouped_cv(const std::vector<FeatureVector>& instances, int k_folds,
                            std::uint64_t seed) {
  if (k_folds < 2) throw std::invalid_argument("grouped_cv: need at least 2 folds");
  std::map<std::string, std::vector<int>> groups;
  for (std::size_t i = 0; i < instances.size(); ++i)
    groups[instances[i].group_id].push_back(static_cast<int>(i));
  if (groups.size() < static_cast<std::size_t>(k_folds))
    throw std::invalid_argument("grouped_cv: fewer groups than folds");

  std::vector<const std::vector<int>*> order;
  order.reserve(groups.size());
  for (const auto& [g, idx] : groups) order.push_back(&idx);

  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng.uniform_index(i)]);
  std::stable_sort(order.begin(), order.end(),
                   [](const auto* a, const auto* b) { return a->size() > b->size(); });

  std::vector<std::size_t> fold_sizes(k_folds, 0);
  std::vector<int> assignment(instances.size(), -1);
  for (const auto* idx : order) {
    const int f = static_cast<int>(
        std::min_element(fold_sizes.begin(), fold_sizes.end()) - fold_sizes.begin());
    for (int i : *idx) assignment[i] = f;
    fold_sizes[f] += idx->size();
  }
  return assignment;
}

EvalReport evaluate(const std::vector<std::string>& predictions,
                    const std::vector<std::string>& labels,
                    const std::string& positive_class) {
  if (predictions.size() != labels.size() || labels.empty())
    throw std::invalid_argument("evaluate: predictions and labels must align and be non-empty");
  const double n = static_cast<double>(labels.size());

  std::map<std::string, double> pred_marginal, label_marginal;
  double agree = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    pred_marginal[predictions[i]] += 1.0;
    label_marginal[labels[i]] += 1.0;
    if (predictions[i] == labels[i]) agree += 1.0;
  }

  EvalReport r;
  r.accuracy = agree / n;
  double pe = 0.0;
  for (const auto& [cls, pm] : pred_marginal) {
    auto it = label_marginal.find(cls);
    if (it != label_marginal.end()) pe += (pm / n) * (it->second / n);
  }
  if (1.0 - pe < 1e-12) {
    r.kappa = 0.0;
    r.kappa_degenerate = true;
  } else {
    r.kappa = (r.accuracy - pe) / (1.0 - pe);
  }

  if (!positive_class.empty()) {
    r.has_fnr = true;
    double tp = 0.0, fn = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] != positive_class) continue;
      if (predictions[i] == positive_class) tp += 1.0;
      else fn += 1.0;
    }
    r.false_negative_rate = (tp + fn) > 0 ? fn / (tp + fn) : 0.0;
  }
  return r;
}

namespace {

std::vector<FeatureVector> restrict_features(const std::vector<FeatureVector>& data,
                                             const std::set<std::string>& kept) {
  std::vector<FeatureVector> out;
  out.reserve(data.size());
  for (const auto& fv : data) {
    FeatureVector r;
    r.instance_id = fv.instance_id;
    r.group_id = fv.group_id;
    r.label = fv.label;
    for (const auto& [name, v] : fv.features)
      if (kept.count(name)) r.features[name] = v;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

TaskResult run_task(const Dataset& dataset, const TaskConfig& config) {
  TaskResult result;
  const auto folds = grouped_cv(dataset.instances, config.folds, config.seed);

  double acc = 0, kappa = 0, fnr = 0;
  bool any_degenerate = false, has_fnr = false;
  for (int f = 0; f < config.folds; ++f) {
    std::vector<FeatureVector> train, test;
    for (std::size_t i = 0; i < dataset.instances.size(); ++i)
      (folds[i] == f ? test : train).push_back(dataset.instances[i]);

    const auto kept = prune_rare(train, config.rare_threshold);
    const auto train_r = restrict_features(train, kept);
    const auto costs = config.cost_sensitive ? inverse_frequency_costs(train_r)
                                             : uniform_costs(train_r);
    const LogRegModel model =
        train_logreg(train_r, config.lambda, costs, config.seed, config.max_iter);

    std::vector<std::string> preds, labels;
    for (const auto& fv : test) {
      preds.push_back(predict(model, fv.features));
      labels.push_back(fv.label);
    }
    const EvalReport rep = evaluate(preds, labels, config.positive_class);
    acc += rep.accuracy;
    kappa += rep.kappa;
    fnr += rep.false_negative_rate;
    any_degenerate = any_degenerate || rep.kappa_degenerate;
    has_fnr = rep.has_fnr;
    result.fold_reports.push_back(rep);
  }
  result.mean.accuracy = acc / config.folds;
  result.mean.kappa = kappa / config.folds;
  result.mean.false_negative_rate = fnr / config.folds;
  result.mean.kappa_degenerate = any_degenerate;
  result.mean.has_fnr = has_fnr;

  const auto kept_all = prune_rare(dataset.instances, config.rare_threshold);
  const auto all_r = restrict_features(dataset.instances, kept_all);
  const auto costs = config.cost_sensitive ? inverse_frequency_costs(all_r)
                                           : uniform_costs(all_r);
  result.final_model = train_logreg(all_r, config.lambda, costs, config.seed, config.max_iter);

  for (std::size_t k = 0; k < result.final_model.classes.size(); ++k) {
    std::vector<std::pair<std::string, double>> ranked;
    for (std::size_t j = 0; j < result.final_model.feature_names.size(); ++j)
      ranked.emplace_back(result.final_model.feature_names[j], result.final_model.weights[k][j]);
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    if (ranked.size() > static_cast<std::size_t>(config.top_k_features))
      ranked.resize(config.top_k_features);
    result.top_features.emplace_back(result.final_model.classes[k], std::move(ranked));
  }
  return result;
}

std::string LogRegModel::to_json() const {
  nlohmann::json j;
  j["classes"] = classes;
  j["lambda"] = lambda;
  j["seed"] = seed;
  j["iterations"] = iterations;
  j["converged"] = converged;
  j["class_costs"] = class_costs;
  for (std::size_t k = 0; k < classes.size(); ++k) {
    nlohmann::json wj;
    for (std::size_t f = 0; f < feature_names.size(); ++f)
      if (weights[k][f] != 0.0) wj[feature_names[f]] = weights[k][f];
    j["models"][classes[k]]["weights"] = wj;
    j["models"][classes[k]]["bias"] = bias[k];
  }
  return j.dump(2) + "\n";
}

}  // namespace clickmine
