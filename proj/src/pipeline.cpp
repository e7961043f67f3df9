#include "clickmine/pipeline.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>
#include <stdexcept>

#include "clickmine/csv.hpp"
#include "clickmine/stats.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace clickmine {

// ---------------------------------------------------------------------------
// table serialization
// ---------------------------------------------------------------------------

std::string sessions_csv(const std::vector<VideoSession>& sessions) {
  CsvWriter w;
  w.row({"session_id", "student_id", "video_id", "n_events", "has_end_pause"});
  for (const auto& s : sessions)
    w.row({s.session_id, s.student_id, s.video_id,
           fmt_int(static_cast<long long>(s.events.size())),
           s.has_end_pause ? "true" : "false"});
  return w.str();
}

std::string sequences_csv(const std::vector<SymbolSequence>& seqs) {
  CsvWriter w;
  w.row({"session_id", "student_id", "video_id", "sequence"});
  for (const auto& s : seqs)
    w.row({s.session_id, s.student_id, s.video_id, sequence_string(s.symbols)});
  return w.str();
}

std::string dwell_csv(const std::vector<SymbolSequence>& seqs) {
  CsvWriter w;
  w.row({"session_id", "index", "symbol", "dwell_seconds"});
  for (const auto& s : seqs)
    for (std::size_t i = 0; i < s.symbols.size(); ++i)
      w.row({s.session_id, fmt_int(static_cast<long long>(i)), symbol_name(s.symbols[i]),
             fmt_num(s.dwell[i])});
  return w.str();
}

std::string actions_csv(const std::vector<ActionVector>& actions) {
  CsvWriter w;
  w.row({"session_id", "rewatch_w", "rewatch", "skipping_w", "skipping", "fastwatch_w",
         "fastwatch", "slowwatch_w", "slowwatch", "clearconcept_w", "clearconcept",
         "checkback_w", "checkback", "playratetrans_w", "playratetrans"});
  for (const auto& a : actions) {
    std::vector<std::string> row{a.session_id};
    for (int c = 0; c < kNumCategories; ++c) {
      row.push_back(fmt_num(a.weight[c]));
      row.push_back(level_name(a.level[c]));
    }
    w.row(row);
  }
  return w.str();
}

std::string metrics_csv(const std::vector<EngagementRecord>& records) {
  CsvWriter w;
  w.row({"session_id", "engagement_seconds", "engagement_level", "vpp_pct", "vpp_bin", "ipi",
         "ipi_bin"});
  for (const auto& r : records)
    w.row({r.session_id, fmt_num(r.engagement_seconds), level_name(r.engagement_level),
           fmt_num(r.play_proportion_pct), band_name(r.vpp_bin), fmt_num(r.ipi),
           band_name(r.ipi_bin)});
  return w.str();
}

std::string trajectories_csv(const std::vector<Trajectory>& trajectories) {
  CsvWriter w;
  w.row({"student_id", "n_videos", "eng_traj", "vpp_traj", "ipi_traj"});
  for (const auto& t : trajectories)
    w.row({t.student_id, fmt_int(static_cast<long long>(t.video_ids.size())),
           t.engagement_string(), t.vpp_string(), t.ipi_string()});
  return w.str();
}

std::string ngrams_csv(const std::vector<std::pair<std::string, long long>>& ranked) {
  CsvWriter w;
  w.row({"rank", "ngram", "count"});
  for (std::size_t i = 0; i < ranked.size(); ++i)
    w.row({fmt_int(static_cast<long long>(i + 1)), ranked[i].first, fmt_int(ranked[i].second)});
  return w.str();
}

std::string person_weeks_csv(const PersonWeekTable& table) {
  CsvWriter w;
  std::vector<std::string> header{"student_id", "week", "event"};
  for (const auto& c : table.covariate_names) header.push_back(c);
  w.row(header);
  for (const auto& r : table.rows) {
    std::vector<std::string> row{r.student_id, fmt_int(r.week), fmt_int(r.event)};
    for (double x : r.x) row.push_back(fmt_num(x));
    w.row(row);
  }
  return w.str();
}

PersonWeekTable read_person_weeks_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  if (t.header.size() < 4)
    throw std::runtime_error("person_weeks: expected student_id,week,event,covariates...");
  const auto c_sid = t.col("student_id");
  const auto c_week = t.col("week");
  const auto c_event = t.col("event");
  PersonWeekTable out;
  std::vector<std::size_t> cov_cols;
  for (std::size_t i = 0; i < t.header.size(); ++i)
    if (i != c_sid && i != c_week && i != c_event) {
      cov_cols.push_back(i);
      out.covariate_names.push_back(t.header[i]);
    }
  for (const auto& row : t.rows) {
    PersonWeekTable::Row r;
    r.student_id = row.at(c_sid);
    r.week = std::stoi(row.at(c_week));
    r.event = std::stoi(row.at(c_event));
    for (auto c : cov_cols) r.x.push_back(std::stod(row.at(c)));
    out.rows.push_back(std::move(r));
  }
  return out;
}

std::string hazards_csv(const CoxModel& model) {
  CsvWriter w;
  w.row({"covariate", "beta", "se", "hazard_ratio", "p_value"});
  for (const auto& c : model.covariates)
    w.row({c.name, fmt_num(c.beta), fmt_num(c.se), fmt_num(c.hazard_ratio), fmt_num(c.p_value)});
  return w.str();
}

std::string ztests_csv(const std::vector<ZTestRow>& rows) {
  CsvWriter w;
  w.row({"partition_a", "partition_b", "n_a", "n_b", "mean_a", "mean_b", "z", "p"});
  for (const auto& r : rows)
    w.row({r.partition_a, r.partition_b, fmt_int(static_cast<long long>(r.result.n_a)),
           fmt_int(static_cast<long long>(r.result.n_b)), fmt_num(r.result.mean_a),
           fmt_num(r.result.mean_b), fmt_num(r.result.z), fmt_num(r.result.p)});
  return w.str();
}

std::string ipi_histograms_csv(const std::vector<IpiPartition>& parts, const ReportOptions& o) {
  const int nbins = std::max(1, static_cast<int>(std::round((o.hi - o.lo) / o.bin_width)));
  CsvWriter w;
  w.row({"comparison", "partition", "bin_lo", "bin_hi", "count"});
  for (const auto& p : parts) {
    std::vector<long long> counts(nbins, 0);
    for (double v : p.values) {
      int idx = static_cast<int>(std::floor((v - o.lo) / o.bin_width));
      idx = std::clamp(idx, 0, nbins - 1);  // outliers fold into the edge bins
      ++counts[idx];
    }
    for (int b = 0; b < nbins; ++b)
      w.row({p.comparison, p.partition, fmt_num(o.lo + b * o.bin_width),
             fmt_num(o.lo + (b + 1) * o.bin_width), fmt_int(counts[b])});
  }
  return w.str();
}

std::string ipi_summary_csv(const std::vector<IpiPartition>& parts) {
  CsvWriter w;
  w.row({"comparison", "partition", "n", "mean_ipi", "stddev"});
  for (const auto& p : parts) {
    const double m = p.values.empty() ? 0.0 : mean(p.values);
    const double sd = std::sqrt(sample_variance(p.values));
    w.row({p.comparison, p.partition, fmt_int(static_cast<long long>(p.values.size())),
           fmt_num(m), fmt_num(sd)});
  }
  return w.str();
}

// ---------------------------------------------------------------------------
// config loaders
// ---------------------------------------------------------------------------

using nlohmann::json;

Taxonomy load_taxonomy(const std::string& path, int n) {
  json j = json::parse(read_file(path));
  if (!j.is_object()) throw std::runtime_error("taxonomy config: expected a JSON object");
  Taxonomy t = default_taxonomy();
  for (auto& cat : t) {
    if (!j.contains(cat.name)) continue;
    std::vector<std::vector<ClickSymbol>> patterns;
    for (const auto& p : j.at(cat.name)) {
      auto syms = tokenize(p.get<std::string>());
      if (syms.size() < static_cast<std::size_t>(n))
        throw std::runtime_error("taxonomy config: pattern '" + p.get<std::string>() +
                                 "' shorter than n=" + std::to_string(n));
      patterns.push_back(std::move(syms));
    }
    if (patterns.empty())
      throw std::runtime_error("taxonomy config: category '" + cat.name + "' has no patterns");
    cat.patterns = std::move(patterns);
  }
  return t;
}

IpiConfig load_ipi_config(const std::string& path) {
  json j = json::parse(read_file(path));
  IpiConfig cfg;
  if (j.contains("weights")) {
    const auto& wj = j.at("weights");
    for (int c = 0; c < kNumCategories; ++c) {
      const char* name = category_name(static_cast<Category>(c));
      if (!wj.contains(name))
        throw std::runtime_error(std::string("ipi config: missing weight for ") + name);
      cfg.weight[c] = wj.at(name).get<double>();
    }
  }
  if (j.contains("bin_edges")) {
    const auto& e = j.at("bin_edges");
    if (!e.is_array() || e.size() != 3)
      throw std::runtime_error("ipi config: bin_edges must list 3 ascending values");
    for (int i = 0; i < 3; ++i) cfg.bin_edges[i] = e[i].get<double>();
    if (!(cfg.bin_edges[0] < cfg.bin_edges[1] && cfg.bin_edges[1] < cfg.bin_edges[2]))
      throw std::runtime_error("ipi config: bin_edges must be strictly ascending");
  }
  if (!(cfg.weight[static_cast<int>(Category::Skipping)] < 0))
    throw std::runtime_error("ipi config: Skipping weight must be negative");
  if (!(cfg.weight[static_cast<int>(Category::ClearConcept)] > 0))
    throw std::runtime_error("ipi config: ClearConcept weight must be positive");
  return cfg;
}

std::string ipi_config_json(const IpiConfig& config) {
  json j;
  for (int c = 0; c < kNumCategories; ++c)
    j["weights"][category_name(static_cast<Category>(c))] = config.weight[c];
  j["bin_edges"] = config.bin_edges;
  return j.dump(2) + "\n";
}

std::string show_config_text() {
  json j;
  j["session"] = {{"gap_seconds", 1800.0}, {"end_pause_eps", 1.0}};
  j["encode"] = {{"scroll_window", 1.0}, {"scroll_anchor", "pairwise"}};
  j["ngrams"] = {{"n", 4}, {"k", 100}};
  j["match_costs"] = {{"deletion", 0.1}, {"insertion", 1.0}, {"substitution", 1.0}};
  IpiConfig ipi;
  for (int c = 0; c < kNumCategories; ++c)
    j["ipi"]["weights"][category_name(static_cast<Category>(c))] = ipi.weight[c];
  j["ipi"]["bin_edges"] = ipi.bin_edges;
  j["vpp_bins"] = {{"VeryLow", "< 50"}, {"Low", "[50,100)"}, {"High", "[100,150)"},
                   {"VeryHigh", ">= 150"}};
  for (const auto& cat : default_taxonomy()) {
    std::vector<std::string> pats;
    for (const auto& p : cat.patterns) pats.push_back(sequence_string(p));
    j["taxonomy"][cat.name] = pats;
  }
  j["learn"] = {{"lambda", 1.0},
                {"nextclick_positions_cap", 200},
                {"folds", {{"engagement", 10}, {"nextclick", 5}, {"invideo", 10}, {"course", 5}}},
                {"rare_threshold",
                 {{"engagement", 2}, {"nextclick", 5}, {"invideo", 2}, {"course", 5}}},
                {"cost_sensitive", {{"invideo", true}, {"course", true}}}};
  j["report"] = {{"hist_range", {-12.0, 12.0}}, {"bin_width", 1.0}};
  j["survival"] = {{"covariates", {"ipi_std", "rewatch_high", "play_proportion"}}};
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// pipeline
// ---------------------------------------------------------------------------

namespace {

struct UnitData {  // one aggregated (student, video) viewing unit
  std::string student_id;
  std::string video_id;
  int week = 0;  // 0 = unknown
  int order = INT_MAX;
  double eng_seconds = 0.0;
  Level eng_level = Level::Low;
  double vpp_pct = 0.0;
  Band vpp_bin = Band::VeryLow;
  double ipi = 0.0;
  Band ipi_bin = Band::Low;
  ActionVector av;
};

std::vector<Level> split_or_low(const std::vector<double>& values) {
  // Per-video populations of one session cannot be median-split; the single
  // value lands Low, consistent with the <=-median tie rule.
  if (values.size() < 2) return std::vector<Level>(values.size(), Level::Low);
  return median_split(values);
}

double safe_mean(const std::vector<double>& v) { return v.empty() ? 0.0 : mean(v); }

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config) {
  if (config.out_dir.empty()) throw std::invalid_argument("pipeline: out_dir required");
  if (config.simulate.empty() && config.events_path.empty())
    throw std::invalid_argument("pipeline: provide --events or --simulate");

  fs::create_directories(config.out_dir);
  const auto out = [&](const std::string& name) { return (fs::path(config.out_dir) / name).string(); };

  std::vector<std::string> notes;
  PipelineResult result;
  result.out_dir = config.out_dir;

  // -- input ---------------------------------------------------------------
  std::vector<ClickEvent> events;
  std::vector<VideoMeta> meta;
  if (!config.simulate.empty()) {
    CohortConfig cohort = config.simulate == "default"
                              ? default_cohort_config(config.sim_students, config.seed)
                              : load_cohort_config(config.simulate);
    cohort.seed = config.seed;  // the CLI seed always governs
    SimResult sim = simulate_cohort(cohort);
    atomic_write(out("cohort_config.json"), cohort_config_json(cohort));
    atomic_write(out("events.jsonl"), events_jsonl(sim.events));
    atomic_write(out("videos.csv"), videos_csv(sim.meta));
    atomic_write(out("truth.csv"), truth_csv(sim.truth));
    events = std::move(sim.events);
    meta = std::move(sim.meta);
  } else {
    events = parse_events_file(config.events_path);
    if (config.videos_path.empty())
      throw std::invalid_argument("pipeline: --videos required with --events");
    meta = parse_videos_csv(config.videos_path);
  }
  result.n_events = events.size();

  std::map<std::string, const VideoMeta*> meta_by_id;
  for (const auto& m : meta) meta_by_id[m.video_id] = &m;
  int final_week = 0;
  for (const auto& m : meta) final_week = std::max(final_week, m.week_index);

  // -- sessions --------------------------------------------------------------
  SessionBuild build = build_sessions(events, meta, config.session);
  atomic_write(out("sessions.csv"), sessions_csv(build.sessions));
  result.n_sessions = build.sessions.size();
  for (const auto& [vid, len] : build.fallback_lengths)
    notes.push_back("video " + vid + ": no metadata; length resolved to max observed position " +
                    fmt_num(len));
  if (build.duplicates_removed > 0)
    notes.push_back(fmt_int(static_cast<long long>(build.duplicates_removed)) +
                    " exact duplicate events removed");

  // -- encode ----------------------------------------------------------------
  std::vector<VideoSession> sessions;  // encodable only
  std::vector<SymbolSequence> seqs;
  std::size_t skipped = 0;
  for (const auto& s : build.sessions) {
    try {
      SymbolSequence q = encode_session(s, config.encode);
      sessions.push_back(s);
      seqs.push_back(std::move(q));
    } catch (const std::exception&) {
      ++skipped;
    }
  }
  if (skipped > 0)
    notes.push_back(fmt_int(static_cast<long long>(skipped)) +
                    " sessions had no encodable events and were skipped");
  atomic_write(out("sequences.csv"), sequences_csv(seqs));
  atomic_write(out("dwell.csv"), dwell_csv(seqs));

  std::set<std::string> students;
  for (const auto& s : sessions) students.insert(s.student_id);
  result.n_students = students.size();

  std::vector<std::size_t> complete_idx, incomplete_idx;
  for (std::size_t i = 0; i < sessions.size(); ++i)
    (sessions[i].has_end_pause ? complete_idx : incomplete_idx).push_back(i);
  result.n_complete = complete_idx.size();

  const Taxonomy taxonomy = config.patterns_path.empty()
                                ? default_taxonomy()
                                : load_taxonomy(config.patterns_path, config.ngram_n);

  // mined n-grams, reported for audit only
  {
    std::vector<std::vector<ClickSymbol>> corpus;
    for (auto i : complete_idx) corpus.push_back(seqs[i].symbols);
    atomic_write(out("ngrams.csv"), ngrams_csv(mine_ngrams(corpus, config.ngram_n, config.ngram_k)));
  }

  if (!config.do_actions || complete_idx.size() < 2) {
    if (complete_idx.size() < 2)
      notes.push_back("fewer than 2 complete sessions; level-2/3 stages skipped");
    std::string summary = "clickmine pipeline\n";
    for (const auto& n : notes) summary += "note: " + n + "\n";
    atomic_write(out("run_summary.txt"), summary);
    return result;
  }

  // -- actions (complete sessions) --------------------------------------------
  std::vector<ActionVector> actions;
  actions.reserve(complete_idx.size());
  for (auto i : complete_idx)
    actions.push_back(score_stream(seqs[i].session_id, seqs[i].symbols, taxonomy,
                                   config.ngram_n, config.costs));
  dichotomize(actions);
  atomic_write(out("actions.csv"), actions_csv(actions));

  // -- session metrics ---------------------------------------------------------
  std::vector<EngagementRecord> records(complete_idx.size());
  {
    std::map<std::string, std::vector<std::size_t>> by_video;  // record index
    for (std::size_t k = 0; k < complete_idx.size(); ++k) {
      const auto& s = sessions[complete_idx[k]];
      EngagementRecord& r = records[k];
      r.session_id = s.session_id;
      r.student_id = s.student_id;
      r.video_id = s.video_id;
      r.engagement_seconds = engagement(s);
      r.play_proportion_pct =
          s.video_length > 0 ? video_play_proportion(s, s.video_length) : 0.0;
      r.vpp_bin = bin_vpp(r.play_proportion_pct);
      r.ipi = compute_ipi(actions[k], config.ipi);
      r.ipi_bin = bin_ipi(r.ipi, config.ipi);
      by_video[s.video_id].push_back(k);
    }
    for (const auto& [vid, idx] : by_video) {
      std::vector<double> vals;
      for (auto k : idx) vals.push_back(records[k].engagement_seconds);
      const auto levels = split_or_low(vals);
      for (std::size_t j = 0; j < idx.size(); ++j)
        records[idx[j]].engagement_level = levels[j];
    }
  }
  atomic_write(out("metrics.csv"), metrics_csv(records));

  // -- (student, video) units and trajectories ---------------------------------
  std::vector<UnitData> units;
  {
    std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> groups;
    for (auto i : complete_idx) groups[{sessions[i].student_id, sessions[i].video_id}].push_back(i);

    std::vector<ActionVector> unit_actions;
    for (const auto& [key, idx] : groups) {
      UnitData u;
      u.student_id = key.first;
      u.video_id = key.second;
      auto it = meta_by_id.find(key.second);
      if (it != meta_by_id.end()) {
        u.week = it->second->week_index;
        u.order = it->second->order_in_course;
      }
      std::vector<ClickSymbol> concat;
      PlayStats combined;
      double video_length = 0;
      std::vector<std::size_t> ordered = idx;
      std::sort(ordered.begin(), ordered.end(), [&](std::size_t a, std::size_t b) {
        return sessions[a].events.front().timestamp < sessions[b].events.front().timestamp;
      });
      for (auto i : ordered) {
        concat.insert(concat.end(), seqs[i].symbols.begin(), seqs[i].symbols.end());
        const PlayStats st = play_stats(sessions[i]);
        combined.play_seconds += st.play_seconds;
        combined.pause_seconds += st.pause_seconds;
        combined.seek_dwell_seconds += st.seek_dwell_seconds;
        combined.rate_weighted_play += st.rate_weighted_play;
        u.eng_seconds += engagement(sessions[i]);
        video_length = sessions[i].video_length;
      }
      u.vpp_pct = video_length > 0 && combined.play_seconds > 0
                      ? combined.play_seconds / video_length * 100.0 * combined.mean_playrate()
                      : 0.0;
      u.vpp_bin = bin_vpp(u.vpp_pct);
      unit_actions.push_back(
          score_stream(u.student_id + ":" + u.video_id, concat, taxonomy, config.ngram_n,
                       config.costs));
      units.push_back(std::move(u));
    }
    if (units.size() >= 2) {
      dichotomize(unit_actions);
    } else {
      for (auto& a : unit_actions) a.levels_assigned = true;
    }
    for (std::size_t k = 0; k < units.size(); ++k) {
      units[k].av = unit_actions[k];
      units[k].ipi = compute_ipi(unit_actions[k], config.ipi);
      units[k].ipi_bin = bin_ipi(units[k].ipi, config.ipi);
    }
    std::map<std::string, std::vector<std::size_t>> by_video;
    for (std::size_t k = 0; k < units.size(); ++k) by_video[units[k].video_id].push_back(k);
    for (const auto& [vid, idx] : by_video) {
      std::vector<double> vals;
      for (auto k : idx) vals.push_back(units[k].eng_seconds);
      const auto levels = split_or_low(vals);
      for (std::size_t j = 0; j < idx.size(); ++j) units[idx[j]].eng_level = levels[j];
    }
  }

  std::vector<StudentVideoRecord> sv_records;
  for (const auto& u : units)
    sv_records.push_back({u.student_id, u.video_id, u.order, u.eng_level, u.vpp_bin, u.ipi_bin});
  const std::vector<Trajectory> trajectories = build_trajectories(sv_records);
  atomic_write(out("trajectories.csv"), trajectories_csv(trajectories));

  // -- course dropout labels ----------------------------------------------------
  // last active week per student over all sessions (complete or not)
  std::map<std::string, int> last_active_week;
  for (const auto& s : build.sessions) {
    auto it = meta_by_id.find(s.video_id);
    if (it == meta_by_id.end()) continue;
    int& w = last_active_week[s.student_id];
    w = std::max(w, it->second->week_index);
  }
  std::map<std::string, bool> course_dropout;
  for (const auto& [sid, w] : last_active_week) course_dropout[sid] = w < final_week;

  // -- learn ---------------------------------------------------------------------
  if (config.do_learn) {
    // pick the session-task video: most complete sessions, ties by id
    std::string video = config.task_video;
    if (video.empty()) {
      std::map<std::string, std::size_t> counts;
      for (auto i : complete_idx) ++counts[sessions[i].video_id];
      std::size_t best = 0;
      for (const auto& [vid, c] : counts)
        if (c > best) {
          best = c;
          video = vid;
        }
    }
    result.task_video = video;

    std::map<std::size_t, std::size_t> complete_pos;  // session idx -> actions idx
    for (std::size_t k = 0; k < complete_idx.size(); ++k) complete_pos[complete_idx[k]] = k;

    CsvWriter ml_metrics;
    ml_metrics.row({"task", "mode", "fold", "accuracy", "kappa", "fnr"});
    CsvWriter ml_features;
    ml_features.row({"task", "mode", "class", "rank", "feature", "weight"});

    const std::set<std::string> wanted_modes(config.modes.begin(), config.modes.end());
    auto run_one = [&](const std::string& task, FeatureMode mode, const Dataset& ds,
                       TaskConfig cfg) {
      if (!wanted_modes.count(mode_name(mode))) return;
      std::set<std::string> groups, classes;
      for (const auto& fv : ds.instances) {
        groups.insert(fv.group_id);
        classes.insert(fv.label);
      }
      if (classes.size() < 2) {
        notes.push_back("task " + task + "/" + mode_name(mode) + ": single class; skipped");
        return;
      }
      if (config.folds_override > 0) cfg.folds = config.folds_override;
      if (config.rare_override > 0) cfg.rare_threshold = config.rare_override;
      cfg.folds = std::min<int>(cfg.folds, static_cast<int>(groups.size()));
      if (cfg.folds < 2) {
        notes.push_back("task " + task + "/" + mode_name(mode) + ": too few students; skipped");
        return;
      }
      cfg.seed = config.seed;
      cfg.lambda = config.lambda;
      const TaskResult res = run_task(ds, cfg);
      for (std::size_t f = 0; f < res.fold_reports.size(); ++f) {
        const auto& r = res.fold_reports[f];
        ml_metrics.row({task, mode_name(mode), fmt_int(static_cast<long long>(f)),
                        fmt_num(r.accuracy), fmt_num(r.kappa),
                        r.has_fnr ? fmt_num(r.false_negative_rate) : ""});
      }
      ml_metrics.row({task, mode_name(mode), "mean", fmt_num(res.mean.accuracy),
                      fmt_num(res.mean.kappa),
                      res.mean.has_fnr ? fmt_num(res.mean.false_negative_rate) : ""});
      for (const auto& [cls, feats] : res.top_features)
        for (std::size_t rank = 0; rank < feats.size(); ++rank)
          ml_features.row({task, mode_name(mode), cls, fmt_int(static_cast<long long>(rank + 1)),
                           feats[rank].first, fmt_num(feats[rank].second)});
      atomic_write(out(std::string("learn/model_") + task + "_" + mode_name(mode) + ".json"),
                   res.final_model.to_json());
      result.stats[std::string("acc_") + task + "_" + mode_name(mode)] = res.mean.accuracy;
      result.stats[std::string("kappa_") + task + "_" + mode_name(mode)] = res.mean.kappa;
      if (res.mean.has_fnr)
        result.stats[std::string("fnr_") + task + "_" + mode_name(mode)] =
            res.mean.false_negative_rate;
    };

    fs::create_directories(fs::path(config.out_dir) / "learn");
    const std::set<std::string> wanted(config.tasks.begin(), config.tasks.end());

    if (wanted.count("engagement") || wanted.count("nextclick")) {
      std::vector<SessionUnit> su;
      for (auto i : complete_idx) {
        if (sessions[i].video_id != video) continue;
        const std::size_t k = complete_pos[i];
        su.push_back({&seqs[i], &actions[k], records[k].engagement_level, false});
      }
      if (wanted.count("engagement")) {
        TaskConfig cfg;
        cfg.folds = 10;
        cfg.rare_threshold = 2;
        cfg.positive_class = "Low";
        run_one("engagement", FeatureMode::Raw, make_engagement_dataset(su, FeatureMode::Raw), cfg);
        run_one("engagement", FeatureMode::Summarized,
                make_engagement_dataset(su, FeatureMode::Summarized), cfg);
      }
      if (wanted.count("nextclick")) {
        TaskConfig cfg;
        cfg.folds = 5;
        cfg.rare_threshold = 5;
        run_one("nextclick", FeatureMode::Raw,
                make_nextclick_dataset(su, FeatureMode::Raw, config.nextclick_cap), cfg);
        run_one("nextclick", FeatureMode::Summarized,
                make_nextclick_dataset(su, FeatureMode::Summarized, config.nextclick_cap), cfg);
      }
    }

    if (wanted.count("invideo")) {
      // both populations: sessions with and without the end pause
      std::vector<std::size_t> vid_idx;
      for (std::size_t i = 0; i < sessions.size(); ++i)
        if (sessions[i].video_id == video) vid_idx.push_back(i);
      std::vector<ActionVector> av(vid_idx.size());
      std::vector<double> eng(vid_idx.size());
      for (std::size_t k = 0; k < vid_idx.size(); ++k) {
        av[k] = score_stream(seqs[vid_idx[k]].session_id, seqs[vid_idx[k]].symbols, taxonomy,
                             config.ngram_n, config.costs);
        eng[k] = engagement(sessions[vid_idx[k]]);
      }
      if (av.size() >= 2) dichotomize(av);
      const auto eng_levels = split_or_low(eng);
      std::vector<SessionUnit> su;
      for (std::size_t k = 0; k < vid_idx.size(); ++k)
        su.push_back({&seqs[vid_idx[k]], &av[k], eng_levels[k],
                      !sessions[vid_idx[k]].has_end_pause});
      TaskConfig cfg;
      cfg.folds = 10;
      cfg.rare_threshold = 2;
      cfg.cost_sensitive = true;
      cfg.positive_class = "dropout";
      run_one("invideo", FeatureMode::Raw, make_invideo_dataset(su, FeatureMode::Raw), cfg);
      run_one("invideo", FeatureMode::Summarized,
              make_invideo_dataset(su, FeatureMode::Summarized), cfg);
    }

    if (wanted.count("course")) {
      std::map<std::string, std::array<double, 2 * kNumCategories>> fractions;
      std::map<std::string, int> unit_counts;
      for (const auto& u : units) {
        auto& f = fractions[u.student_id];
        for (int c = 0; c < kNumCategories; ++c)
          f[2 * c + (u.av.level[c] == Level::High ? 0 : 1)] += 1.0;
        ++unit_counts[u.student_id];
      }
      for (auto& [sid, f] : fractions)
        for (double& x : f) x /= unit_counts[sid];

      std::vector<CourseUnit> cu;
      std::size_t n_drop = 0;
      for (const auto& t : trajectories) {
        auto it = course_dropout.find(t.student_id);
        if (it == course_dropout.end()) continue;
        CourseUnit u;
        u.traj = &t;
        u.dropout = it->second;
        u.action_fraction = fractions[t.student_id];
        if (u.dropout) ++n_drop;
        cu.push_back(u);
      }
      if (!cu.empty()) {
        const double drop_rate = static_cast<double>(n_drop) / cu.size();
        result.stats["baseline_course"] = std::max(drop_rate, 1.0 - drop_rate);
      }
      TaskConfig cfg;
      cfg.folds = 5;
      cfg.rare_threshold = 5;
      cfg.cost_sensitive = true;
      cfg.positive_class = "dropout";
      run_one("course", FeatureMode::Raw, make_course_dataset(cu, FeatureMode::Raw), cfg);
      run_one("course", FeatureMode::Summarized, make_course_dataset(cu, FeatureMode::Summarized),
              cfg);
    }

    atomic_write(out("learn/metrics.csv"), ml_metrics.str());
    atomic_write(out("learn/top_features.csv"), ml_features.str());
  }

  // -- survival ---------------------------------------------------------------
  if (config.do_survival) {
    std::vector<SessionWeekObs> obs;
    for (const auto& u : units) {
      if (u.week <= 0) continue;  // no week mapping for this video
      obs.push_back({u.student_id, u.week, u.ipi,
                     u.av.level[static_cast<int>(Category::Rewatch)] == Level::High, u.vpp_pct});
    }
    if (!obs.empty() && final_week >= 1) {
      const PersonWeekTable pw = build_person_weeks(obs, final_week);
      atomic_write(out("person_weeks.csv"), person_weeks_csv(pw));
      try {
        const CoxModel cox = fit_cox(pw);
        atomic_write(out("hazards.csv"), hazards_csv(cox));
        for (const auto& c : cox.covariates) result.stats["hr_" + c.name] = c.hazard_ratio;
      } catch (const std::exception& e) {
        notes.push_back(std::string("survival fit skipped: ") + e.what());
        atomic_write(out("hazards.csv"), "covariate,beta,se,hazard_ratio,p_value\n");
      }
    } else {
      notes.push_back("survival skipped: no week-mapped viewing units");
    }
  }

  // -- IPI partitions, z tests, report -----------------------------------------
  {
    std::vector<IpiPartition> parts;
    std::vector<ZTestRow> zrows;

    auto add_comparison = [&](const std::string& comparison, const std::string& name_a,
                              std::vector<double> a, const std::string& name_b,
                              std::vector<double> b, const char* stat_key) {
      if (a.empty() || b.empty()) {
        notes.push_back("comparison " + comparison + ": one side empty; skipped");
        return;
      }
      const ZTestResult z = two_sample_z(a, b);
      zrows.push_back({name_a, name_b, z});
      if (stat_key) {
        result.stats[std::string("mean_ipi_") + name_a] = z.mean_a;
        result.stats[std::string("mean_ipi_") + name_b] = z.mean_b;
        result.stats[std::string("z_") + stat_key] = z.z;
      }
      parts.push_back({comparison, name_a, std::move(a)});
      parts.push_back({comparison, name_b, std::move(b)});
    };

    {  // high vs low engagers (complete sessions)
      std::vector<double> hi, lo;
      for (const auto& r : records)
        (r.engagement_level == Level::High ? hi : lo).push_back(r.ipi);
      add_comparison("engagement", "engagement_high", std::move(hi), "engagement_low",
                     std::move(lo), "engagement");
    }

    {  // in-video dropouts vs non-dropouts (all sessions, rescored universe)
      std::vector<ActionVector> all_av;
      all_av.reserve(seqs.size());
      for (std::size_t i = 0; i < seqs.size(); ++i)
        all_av.push_back(score_stream(seqs[i].session_id, seqs[i].symbols, taxonomy,
                                      config.ngram_n, config.costs));
      if (all_av.size() >= 2) {
        dichotomize(all_av);
        std::vector<double> stay, drop;
        for (std::size_t i = 0; i < seqs.size(); ++i) {
          const double ipi = compute_ipi(all_av[i], config.ipi);
          (sessions[i].has_end_pause ? stay : drop).push_back(ipi);
        }
        add_comparison("invideo", "invideo_stay", std::move(stay), "invideo_dropout",
                       std::move(drop), "invideo");
      }
    }

    {  // course dropouts vs non-dropouts (per-student mean session IPI)
      std::map<std::string, std::vector<double>> per_student;
      for (const auto& r : records) per_student[r.student_id].push_back(r.ipi);
      std::vector<double> stay, drop;
      for (const auto& [sid, vals] : per_student) {
        auto it = course_dropout.find(sid);
        if (it == course_dropout.end()) continue;
        (it->second ? drop : stay).push_back(mean(vals));
      }
      add_comparison("course", "course_stay", std::move(stay), "course_dropout", std::move(drop),
                     "course");
    }

    if (!config.activity_path.empty()) {  // viewers vs active students
      CsvTable t = read_csv(config.activity_path);
      const auto c_sid = t.col("student_id");
      const auto c_act = t.col("did_exercises");
      std::map<std::string, bool> active;
      for (const auto& row : t.rows) active[row.at(c_sid)] = row.at(c_act) == "1";
      std::map<std::string, std::vector<double>> per_student;
      for (const auto& r : records) per_student[r.student_id].push_back(r.ipi);
      std::vector<double> viewers, actives;
      for (const auto& [sid, vals] : per_student) {
        auto it = active.find(sid);
        (it != active.end() && it->second ? actives : viewers).push_back(mean(vals));
      }
      add_comparison("activity", "viewers", std::move(viewers), "active", std::move(actives),
                     "activity");
    }

    atomic_write(out("ztests.csv"), ztests_csv(zrows));
    if (config.do_report) {
      fs::create_directories(fs::path(config.out_dir) / "report");
      ReportOptions ro{1.0, config.hist_lo, config.hist_hi};
      atomic_write(out("report/ipi_histograms.csv"), ipi_histograms_csv(parts, ro));
      atomic_write(out("report/ipi_summary.csv"), ipi_summary_csv(parts));
    }
  }

  // -- run summary ----------------------------------------------------------
  {
    std::ostringstream s;
    s << "clickmine pipeline\n";
    s << "seed: " << config.seed << "\n";
    s << "events: " << result.n_events << "\n";
    s << "sessions: " << result.n_sessions << " (complete: " << result.n_complete << ")\n";
    s << "students: " << result.n_students << "\n";
    if (!result.task_video.empty()) s << "session-task video: " << result.task_video << "\n";
    for (const auto& [k, v] : result.stats) s << k << ": " << fmt_num(v) << "\n";
    for (const auto& n : notes) s << "note: " << n << "\n";
    atomic_write(out("run_summary.txt"), s.str());
  }
  return result;
}

// ---------------------------------------------------------------------------
// report from written artifacts
// ---------------------------------------------------------------------------

void run_report_from_files(const ReportInputs& in) {
  fs::create_directories(in.out_dir);
  const auto out = [&](const std::string& name) { return (fs::path(in.out_dir) / name).string(); };

  CsvTable mt = read_csv(in.metrics_path);
  const auto m_sid = mt.col("session_id");
  const auto m_ipi = mt.col("ipi");
  const auto m_lvl = mt.col("engagement_level");

  CsvTable st = read_csv(in.sessions_path);
  const auto s_sid = st.col("session_id");
  const auto s_student = st.col("student_id");
  const auto s_video = st.col("video_id");
  const auto s_end = st.col("has_end_pause");

  struct SessInfo {
    std::string student, video;
    bool complete;
  };
  std::map<std::string, SessInfo> sess;
  for (const auto& row : st.rows)
    sess[row.at(s_sid)] = {row.at(s_student), row.at(s_video), row.at(s_end) == "true"};

  std::map<std::string, int> video_week;
  int final_week = 0;
  {
    CsvTable vt = read_csv(in.videos_path);
    const auto v_id = vt.col("video_id");
    const auto v_week = vt.col("week_index");
    for (const auto& row : vt.rows) {
      video_week[row.at(v_id)] = std::stoi(row.at(v_week));
      final_week = std::max(final_week, std::stoi(row.at(v_week)));
    }
  }

  std::vector<IpiPartition> parts;
  std::vector<ZTestRow> zrows;
  auto add = [&](const std::string& comparison, const std::string& na, std::vector<double> a,
                 const std::string& nb, std::vector<double> b) {
    if (a.empty() || b.empty()) return;
    zrows.push_back({na, nb, two_sample_z(a, b)});
    parts.push_back({comparison, na, std::move(a)});
    parts.push_back({comparison, nb, std::move(b)});
  };

  {  // engagement partition straight from metrics.csv
    std::vector<double> hi, lo;
    for (const auto& row : mt.rows)
      (row.at(m_lvl) == "High" ? hi : lo).push_back(std::stod(row.at(m_ipi)));
    add("engagement", "engagement_high", std::move(hi), "engagement_low", std::move(lo));
  }

  {  // in-video partition: rescore every sequence in one universe
    CsvTable qt = read_csv(in.sequences_path);
    const auto q_sid = qt.col("session_id");
    const auto q_seq = qt.col("sequence");
    std::vector<ActionVector> av;
    std::vector<bool> complete;
    for (const auto& row : qt.rows) {
      auto it = sess.find(row.at(q_sid));
      if (it == sess.end()) continue;
      av.push_back(score_stream(row.at(q_sid), tokenize(row.at(q_seq)), default_taxonomy(),
                                in.ngram_n, in.costs));
      complete.push_back(it->second.complete);
    }
    if (av.size() >= 2) {
      dichotomize(av);
      std::vector<double> stay, drop;
      for (std::size_t i = 0; i < av.size(); ++i)
        (complete[i] ? stay : drop).push_back(compute_ipi(av[i], in.ipi));
      add("invideo", "invideo_stay", std::move(stay), "invideo_dropout", std::move(drop));
    }
  }

  {  // course partition: per-student mean IPI, dropout = silent final week
    std::map<std::string, int> last_week;
    for (const auto& [sid, info] : sess) {
      auto it = video_week.find(info.video);
      if (it == video_week.end()) continue;
      int& w = last_week[info.student];
      w = std::max(w, it->second);
    }
    std::map<std::string, std::vector<double>> per_student;
    for (const auto& row : mt.rows) {
      auto it = sess.find(row.at(m_sid));
      if (it == sess.end()) continue;
      per_student[it->second.student].push_back(std::stod(row.at(m_ipi)));
    }
    std::vector<double> stay, drop;
    for (const auto& [sid, vals] : per_student) {
      auto it = last_week.find(sid);
      if (it == last_week.end()) continue;
      (it->second < final_week ? drop : stay).push_back(mean(vals));
    }
    add("course", "course_stay", std::move(stay), "course_dropout", std::move(drop));
  }

  if (!in.activity_path.empty()) {
    CsvTable at = read_csv(in.activity_path);
    const auto a_sid = at.col("student_id");
    const auto a_act = at.col("did_exercises");
    std::map<std::string, bool> active;
    for (const auto& row : at.rows) active[row.at(a_sid)] = row.at(a_act) == "1";
    std::map<std::string, std::vector<double>> per_student;
    for (const auto& row : mt.rows) {
      auto it = sess.find(row.at(m_sid));
      if (it == sess.end()) continue;
      per_student[it->second.student].push_back(std::stod(row.at(m_ipi)));
    }
    std::vector<double> viewers, actives;
    for (const auto& [sid, vals] : per_student) {
      auto it = active.find(sid);
      (it != active.end() && it->second ? actives : viewers).push_back(mean(vals));
    }
    add("activity", "viewers", std::move(viewers), "active", std::move(actives));
  }

  atomic_write(out("ztests.csv"), ztests_csv(zrows));
  atomic_write(out("ipi_histograms.csv"), ipi_histograms_csv(parts, in.opts));
  atomic_write(out("ipi_summary.csv"), ipi_summary_csv(parts));
}

}  // namespace clickmine
