// clickmine: MOOC video clickstream operationalization pipeline.
//
// Subcommands cover the full chain: encode raw player events into the
// 8-symbol alphabet, score the seven behavioral categories, compute the
// information processing index, build per-student trajectories, train the
// four prediction tasks, fit weekly dropout hazards, and emit report tables.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>

#include "CLI11.hpp"
#include "clickmine/csv.hpp"
#include "clickmine/pipeline.hpp"
#include "clickmine/stats.hpp"

namespace fs = std::filesystem;
using namespace clickmine;

namespace {

struct CommonKnobs {
  PipelineConfig cfg;
  std::string ipi_config_path;

  void add_session_flags(CLI::App* cmd) {
    cmd->add_option("--gap", cfg.session.gap_seconds, "Inactivity gap that splits sessions (s)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--end-pause-eps", cfg.session.end_pause_eps,
                    "Tolerance between pause position and video length (s)");
    cmd->add_option("--scroll-window", cfg.encode.scroll_window,
                    "Seeks closer than this merge into a scroll (s)");
    cmd->add_option_function<std::string>(
           "--scroll-anchor",
           [this](const std::string& v) {
             cfg.encode.anchor = v == "first" ? EncodeOptions::ScrollAnchor::FirstSeek
                                              : EncodeOptions::ScrollAnchor::Pairwise;
           },
           "Scroll window chaining: pairwise|first")
        ->check(CLI::IsMember({"pairwise", "first"}));
  }

  void add_actions_flags(CLI::App* cmd) {
    cmd->add_option("--n", cfg.ngram_n, "n-gram length for mining and cosine")->check(CLI::PositiveNumber);
    cmd->add_option("--k", cfg.ngram_k, "top-k mined n-grams")->check(CLI::PositiveNumber);
    cmd->add_option("--w-del", cfg.costs.deletion, "edit cost: delete a stream click");
    cmd->add_option("--w-ins", cfg.costs.insertion, "edit cost: insert a pattern click");
    cmd->add_option("--w-sub", cfg.costs.substitution, "edit cost: substitute a click");
    cmd->add_option("--patterns", cfg.patterns_path, "JSON taxonomy override");
  }

  void add_ipi_flag(CLI::App* cmd) {
    cmd->add_option("--ipi-config", ipi_config_path, "JSON IPI weight/bin config");
  }

  void resolve_ipi() {
    if (!ipi_config_path.empty()) cfg.ipi = load_ipi_config(ipi_config_path);
  }
};

std::vector<SymbolSequence> sequences_from_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  const auto c_sid = t.col("session_id");
  const auto c_student = t.col("student_id");
  const auto c_video = t.col("video_id");
  const auto c_seq = t.col("sequence");
  std::vector<SymbolSequence> out;
  for (const auto& row : t.rows) {
    SymbolSequence s;
    s.session_id = row.at(c_sid);
    s.student_id = row.at(c_student);
    s.video_id = row.at(c_video);
    s.symbols = tokenize(row.at(c_seq));
    out.push_back(std::move(s));
  }
  return out;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"MOOC video clickstream operationalization (clicks -> actions -> IPI)"};
  app.require_subcommand(0, 1);
  bool show_config = false;
  app.add_flag("--show-config", show_config, "Print every effective default and exit");

  // ---- encode ------------------------------------------------------------
  auto* c_encode = app.add_subcommand("encode", "Parse events and emit 8-symbol sequences");
  CommonKnobs k_encode;
  std::string enc_events, enc_videos, enc_out, enc_sessions_out, enc_dwell_out;
  c_encode->add_option("--events", enc_events, "JSONL event log")->required();
  c_encode->add_option("--videos", enc_videos, "videos metadata CSV");
  c_encode->add_option("--out", enc_out, "output sequences CSV")->required();
  c_encode->add_option("--sessions-out", enc_sessions_out, "output sessions CSV");
  c_encode->add_option("--dwell-out", enc_dwell_out, "output per-symbol dwell CSV");
  k_encode.add_session_flags(c_encode);

  // ---- actions -------------------------------------------------------------
  auto* c_actions = app.add_subcommand("actions", "Score the seven behavioral categories");
  CommonKnobs k_actions;
  std::string act_sequences, act_out, act_ngrams_out;
  c_actions->add_option("--sequences", act_sequences, "sequences CSV")->required();
  c_actions->add_option("--out", act_out, "output actions CSV")->required();
  c_actions->add_option("--ngrams-out", act_ngrams_out, "audit: mined top-k n-grams CSV");
  k_actions.add_actions_flags(c_actions);

  // ---- ipi -----------------------------------------------------------------
  auto* c_ipi = app.add_subcommand("ipi", "Information processing index per session");
  CommonKnobs k_ipi;
  std::string ipi_actions, ipi_out;
  c_ipi->add_option("--actions", ipi_actions, "actions CSV")->required();
  c_ipi->add_option("--out", ipi_out, "output CSV (session_id,ipi,ipi_bin)")->required();
  k_ipi.add_ipi_flag(c_ipi);

  // ---- engage ----------------------------------------------------------------
  auto* c_engage = app.add_subcommand("engage", "Engagement and video play proportion");
  CommonKnobs k_engage;
  std::string eng_events, eng_videos, eng_out, eng_ipi;
  c_engage->add_option("--events", eng_events, "JSONL event log")->required();
  c_engage->add_option("--videos", eng_videos, "videos metadata CSV");
  c_engage->add_option("--out", eng_out, "output CSV")->required();
  c_engage->add_option("--ipi", eng_ipi, "join an ipi CSV to emit the full metrics table");
  k_engage.add_session_flags(c_engage);

  // ---- traj ------------------------------------------------------------------
  auto* c_traj = app.add_subcommand("traj", "Per-student trajectories (runs ingest->metrics)");
  CommonKnobs k_traj;
  std::string traj_events, traj_videos;
  c_traj->add_option("--events", traj_events, "JSONL event log")->required();
  c_traj->add_option("--videos", traj_videos, "videos metadata CSV")->required();
  c_traj->add_option("--out-dir", k_traj.cfg.out_dir, "artifact directory")->required();
  k_traj.add_session_flags(c_traj);
  k_traj.add_actions_flags(c_traj);
  k_traj.add_ipi_flag(c_traj);

  // ---- train -------------------------------------------------------------------
  auto* c_train = app.add_subcommand("train", "Train one prediction task");
  CommonKnobs k_train;
  std::string train_events, train_videos, train_task = "course", train_mode = "both";
  c_train->add_option("--events", train_events, "JSONL event log")->required();
  c_train->add_option("--videos", train_videos, "videos metadata CSV")->required();
  c_train->add_option("--out-dir", k_train.cfg.out_dir, "artifact directory")->required();
  c_train->add_option("--task", train_task, "engagement|nextclick|invideo|course")
      ->check(CLI::IsMember({"engagement", "nextclick", "invideo", "course"}));
  c_train->add_option("--mode", train_mode, "raw|summarized|both")
      ->check(CLI::IsMember({"raw", "summarized", "both"}));
  c_train->add_option("--seed", k_train.cfg.seed, "RNG seed")->required();
  c_train->add_option("--lambda", k_train.cfg.lambda, "L2 strength");
  c_train->add_option("--folds", k_train.cfg.folds_override, "override CV folds");
  c_train->add_option("--rare-threshold", k_train.cfg.rare_override, "override rare-feature threshold");
  c_train->add_option("--video", k_train.cfg.task_video, "video for the session-level tasks");
  c_train->add_option("--nextclick-cap", k_train.cfg.nextclick_cap, "positions per session cap");
  k_train.add_session_flags(c_train);
  k_train.add_actions_flags(c_train);
  k_train.add_ipi_flag(c_train);

  // ---- survive ---------------------------------------------------------------
  auto* c_survive = app.add_subcommand("survive", "Weekly dropout proportional hazards");
  CommonKnobs k_survive;
  std::string sv_pw, sv_events, sv_videos, sv_out;
  c_survive->add_option("--person-weeks", sv_pw, "person_weeks CSV (skip building)");
  c_survive->add_option("--events", sv_events, "JSONL event log");
  c_survive->add_option("--videos", sv_videos, "videos metadata CSV");
  c_survive->add_option("--out", sv_out, "hazards CSV (with --person-weeks)");
  c_survive->add_option("--out-dir", k_survive.cfg.out_dir, "artifact directory (with --events)");
  k_survive.add_session_flags(c_survive);
  k_survive.add_actions_flags(c_survive);
  k_survive.add_ipi_flag(c_survive);

  // ---- ztest -----------------------------------------------------------------
  auto* c_ztest = app.add_subcommand("ztest", "Two-sample z tests between partitions");
  std::string zt_values, zt_out;
  c_ztest->add_option("--values", zt_values, "CSV with columns partition,value")->required();
  c_ztest->add_option("--out", zt_out, "output ztests CSV")->required();

  // ---- simulate ---------------------------------------------------------------
  auto* c_sim = app.add_subcommand("simulate", "Generate a synthetic cohort event log");
  std::string sim_config = "default", sim_out, sim_truth, sim_videos;
  int sim_students = 1000;
  std::uint64_t sim_seed = 0;
  c_sim->add_option("--config", sim_config, "cohort config JSON or 'default'");
  c_sim->add_option("--students", sim_students, "students (default config only)");
  c_sim->add_option("--seed", sim_seed, "RNG seed")->required();
  c_sim->add_option("--out", sim_out, "output events JSONL")->required();
  c_sim->add_option("--truth-out", sim_truth, "ground-truth sidecar CSV");
  c_sim->add_option("--videos-out", sim_videos, "videos metadata CSV");

  // ---- report -----------------------------------------------------------------
  auto* c_report = app.add_subcommand("report", "IPI histograms and z tests per partition");
  CommonKnobs k_report;
  ReportInputs rin;
  c_report->add_option("--metrics", rin.metrics_path, "metrics CSV")->required();
  c_report->add_option("--sessions", rin.sessions_path, "sessions CSV")->required();
  c_report->add_option("--sequences", rin.sequences_path, "sequences CSV")->required();
  c_report->add_option("--videos", rin.videos_path, "videos metadata CSV")->required();
  c_report->add_option("--activity", rin.activity_path, "student_id,did_exercises CSV");
  c_report->add_option("--out-dir", rin.out_dir, "report directory")->required();
  c_report->add_option("--hist-lo", rin.opts.lo, "histogram lower bound");
  c_report->add_option("--hist-hi", rin.opts.hi, "histogram upper bound");
  c_report->add_option("--n", rin.ngram_n, "n-gram length");
  k_report.add_ipi_flag(c_report);

  // ---- pipeline ----------------------------------------------------------------
  auto* c_pipe = app.add_subcommand("pipeline", "Full end-to-end run");
  CommonKnobs k_pipe;
  std::vector<std::string> pipe_tasks;
  bool no_learn = false, no_survival = false, no_report = false;
  c_pipe->add_option("--events", k_pipe.cfg.events_path, "JSONL event log");
  c_pipe->add_option("--videos", k_pipe.cfg.videos_path, "videos metadata CSV");
  c_pipe->add_option("--simulate", k_pipe.cfg.simulate, "cohort config JSON or 'default'");
  c_pipe->add_option("--students", k_pipe.cfg.sim_students, "students for --simulate default");
  c_pipe->add_option("--activity", k_pipe.cfg.activity_path, "student_id,did_exercises CSV");
  c_pipe->add_option("--out-dir", k_pipe.cfg.out_dir, "artifact directory")->required();
  c_pipe->add_option("--seed", k_pipe.cfg.seed, "RNG seed")->required();
  c_pipe->add_option("--tasks", pipe_tasks, "prediction tasks to run")->delimiter(',');
  c_pipe->add_option("--video", k_pipe.cfg.task_video, "video for the session-level tasks");
  c_pipe->add_option("--lambda", k_pipe.cfg.lambda, "L2 strength");
  c_pipe->add_option("--nextclick-cap", k_pipe.cfg.nextclick_cap, "positions per session cap");
  c_pipe->add_option("--folds", k_pipe.cfg.folds_override, "override CV folds");
  c_pipe->add_option("--rare-threshold", k_pipe.cfg.rare_override, "override rare threshold");
  c_pipe->add_flag("--no-learn", no_learn, "skip the prediction tasks");
  c_pipe->add_flag("--no-survival", no_survival, "skip the hazards fit");
  c_pipe->add_flag("--no-report", no_report, "skip report emission");
  c_pipe->add_option("--hist-lo", k_pipe.cfg.hist_lo, "histogram lower bound");
  c_pipe->add_option("--hist-hi", k_pipe.cfg.hist_hi, "histogram upper bound");
  k_pipe.add_session_flags(c_pipe);
  k_pipe.add_actions_flags(c_pipe);
  k_pipe.add_ipi_flag(c_pipe);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the usage message
    return 2;
  }

  if (show_config) {
    std::cout << show_config_text();
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return 2;
  }

  if (c_encode->parsed()) {
    auto events = parse_events_file(enc_events);
    std::vector<VideoMeta> meta;
    if (!enc_videos.empty()) meta = parse_videos_csv(enc_videos);
    SessionBuild build = build_sessions(events, meta, k_encode.cfg.session);
    std::vector<SymbolSequence> seqs;
    std::vector<VideoSession> kept;
    for (const auto& s : build.sessions) {
      try {
        seqs.push_back(encode_session(s, k_encode.cfg.encode));
        kept.push_back(s);
      } catch (const std::exception&) {
      }
    }
    atomic_write(enc_out, sequences_csv(seqs));
    if (!enc_sessions_out.empty()) atomic_write(enc_sessions_out, sessions_csv(build.sessions));
    if (!enc_dwell_out.empty()) atomic_write(enc_dwell_out, dwell_csv(seqs));
    std::cout << "encoded " << seqs.size() << " sessions\n";
    return 0;
  }

  if (c_actions->parsed()) {
    const auto seqs = sequences_from_csv(act_sequences);
    const Taxonomy taxonomy = k_actions.cfg.patterns_path.empty()
                                  ? default_taxonomy()
                                  : load_taxonomy(k_actions.cfg.patterns_path, k_actions.cfg.ngram_n);
    std::vector<ActionVector> av;
    for (const auto& s : seqs)
      av.push_back(score_stream(s.session_id, s.symbols, taxonomy, k_actions.cfg.ngram_n,
                                k_actions.cfg.costs));
    dichotomize(av);
    atomic_write(act_out, actions_csv(av));
    if (!act_ngrams_out.empty()) {
      std::vector<std::vector<ClickSymbol>> corpus;
      for (const auto& s : seqs) corpus.push_back(s.symbols);
      atomic_write(act_ngrams_out,
                   ngrams_csv(mine_ngrams(corpus, k_actions.cfg.ngram_n, k_actions.cfg.ngram_k)));
    }
    std::cout << "scored " << av.size() << " sessions\n";
    return 0;
  }

  if (c_ipi->parsed()) {
    k_ipi.resolve_ipi();
    CsvTable t = read_csv(ipi_actions);
    const auto c_sid = t.col("session_id");
    const std::array<const char*, kNumCategories> level_cols{
        "rewatch", "skipping", "fastwatch", "slowwatch", "clearconcept", "checkback",
        "playratetrans"};
    CsvWriter w;
    w.row({"session_id", "ipi", "ipi_bin"});
    for (const auto& row : t.rows) {
      ActionVector v;
      v.session_id = row.at(c_sid);
      for (int c = 0; c < kNumCategories; ++c)
        v.level[c] = row.at(t.col(level_cols[c])) == "High" ? Level::High : Level::Low;
      v.levels_assigned = true;
      const double ipi = compute_ipi(v, k_ipi.cfg.ipi);
      w.row({v.session_id, fmt_num(ipi), band_name(bin_ipi(ipi, k_ipi.cfg.ipi))});
    }
    atomic_write(ipi_out, w.str());
    std::cout << "computed IPI for " << t.rows.size() << " sessions\n";
    return 0;
  }

  if (c_engage->parsed()) {
    auto events = parse_events_file(eng_events);
    std::vector<VideoMeta> meta;
    if (!eng_videos.empty()) meta = parse_videos_csv(eng_videos);
    SessionBuild build = build_sessions(events, meta, k_engage.cfg.session);
    const auto [complete, incomplete] = filter_complete(build.sessions);

    std::map<std::string, std::pair<double, std::string>> ipi_by_session;  // ipi, bin
    if (!eng_ipi.empty()) {
      CsvTable t = read_csv(eng_ipi);
      const auto c_sid = t.col("session_id");
      const auto c_val = t.col("ipi");
      const auto c_bin = t.col("ipi_bin");
      for (const auto& row : t.rows)
        ipi_by_session[row.at(c_sid)] = {std::stod(row.at(c_val)), row.at(c_bin)};
    }

    std::vector<EngagementRecord> records(complete.size());
    std::map<std::string, std::vector<std::size_t>> by_video;
    for (std::size_t i = 0; i < complete.size(); ++i) {
      auto& r = records[i];
      r.session_id = complete[i].session_id;
      r.student_id = complete[i].student_id;
      r.video_id = complete[i].video_id;
      r.engagement_seconds = engagement(complete[i]);
      r.play_proportion_pct = complete[i].video_length > 0
                                  ? video_play_proportion(complete[i], complete[i].video_length)
                                  : 0.0;
      r.vpp_bin = bin_vpp(r.play_proportion_pct);
      by_video[r.video_id].push_back(i);
    }
    for (const auto& [vid, idx] : by_video) {
      std::vector<double> vals;
      for (auto i : idx) vals.push_back(records[i].engagement_seconds);
      const auto levels =
          vals.size() >= 2 ? median_split(vals) : std::vector<Level>(vals.size(), Level::Low);
      for (std::size_t j = 0; j < idx.size(); ++j) records[idx[j]].engagement_level = levels[j];
    }
    if (!eng_ipi.empty()) {
      for (auto& r : records) {
        auto it = ipi_by_session.find(r.session_id);
        if (it != ipi_by_session.end()) {
          r.ipi = it->second.first;
          r.ipi_bin = it->second.second == "VL"   ? Band::VeryLow
                      : it->second.second == "L"  ? Band::Low
                      : it->second.second == "H"  ? Band::High
                                                  : Band::VeryHigh;
        }
      }
      atomic_write(eng_out, metrics_csv(records));
    } else {
      CsvWriter w;
      w.row({"session_id", "student_id", "video_id", "engagement_seconds", "engagement_level",
             "vpp_pct", "vpp_bin"});
      for (const auto& r : records)
        w.row({r.session_id, r.student_id, r.video_id, fmt_num(r.engagement_seconds),
               level_name(r.engagement_level), fmt_num(r.play_proportion_pct),
               band_name(r.vpp_bin)});
      atomic_write(eng_out, w.str());
    }
    std::cout << "engagement for " << records.size() << " complete sessions ("
              << incomplete.size() << " without end pause)\n";
    return 0;
  }

  if (c_traj->parsed()) {
    k_traj.resolve_ipi();
    k_traj.cfg.events_path = traj_events;
    k_traj.cfg.videos_path = traj_videos;
    k_traj.cfg.do_learn = false;
    k_traj.cfg.do_survival = false;
    k_traj.cfg.do_report = false;
    const auto res = run_pipeline(k_traj.cfg);
    std::cout << "trajectories written to " << res.out_dir << "\n";
    return 0;
  }

  if (c_train->parsed()) {
    k_train.resolve_ipi();
    k_train.cfg.events_path = train_events;
    k_train.cfg.videos_path = train_videos;
    k_train.cfg.tasks = {train_task};
    if (train_mode != "both") k_train.cfg.modes = {train_mode};
    k_train.cfg.do_survival = false;
    k_train.cfg.do_report = false;
    const auto res = run_pipeline(k_train.cfg);
    for (const auto& [key, val] : res.stats)
      if (key.rfind("acc_", 0) == 0 || key.rfind("kappa_", 0) == 0 || key.rfind("fnr_", 0) == 0)
        std::cout << key << " = " << fmt_num(val) << "\n";
    return 0;
  }

  if (c_survive->parsed()) {
    if (!sv_pw.empty()) {
      if (sv_out.empty()) throw std::runtime_error("survive: --out required with --person-weeks");
      const PersonWeekTable pw = read_person_weeks_csv(sv_pw);
      const CoxModel model = fit_cox(pw);
      atomic_write(sv_out, hazards_csv(model));
      std::cout << "fit " << model.covariates.size() << " covariates over " << pw.rows.size()
                << " person-weeks\n";
      return 0;
    }
    if (sv_events.empty() || sv_videos.empty() || k_survive.cfg.out_dir.empty())
      throw std::runtime_error("survive: need --person-weeks or --events/--videos/--out-dir");
    k_survive.resolve_ipi();
    k_survive.cfg.events_path = sv_events;
    k_survive.cfg.videos_path = sv_videos;
    k_survive.cfg.do_learn = false;
    k_survive.cfg.do_report = false;
    const auto res = run_pipeline(k_survive.cfg);
    std::cout << "hazards written to " << res.out_dir << "\n";
    return 0;
  }

  if (c_ztest->parsed()) {
    CsvTable t = read_csv(zt_values);
    const auto c_part = t.col("partition");
    const auto c_val = t.col("value");
    std::map<std::string, std::vector<double>> groups;
    for (const auto& row : t.rows) groups[row.at(c_part)].push_back(std::stod(row.at(c_val)));
    std::vector<ZTestRow> rows;
    for (auto a = groups.begin(); a != groups.end(); ++a)
      for (auto b = std::next(a); b != groups.end(); ++b)
        rows.push_back({a->first, b->first, two_sample_z(a->second, b->second)});
    atomic_write(zt_out, ztests_csv(rows));
    std::cout << rows.size() << " z tests written\n";
    return 0;
  }

  if (c_sim->parsed()) {
    CohortConfig cfg = sim_config == "default" ? default_cohort_config(sim_students, sim_seed)
                                               : load_cohort_config(sim_config);
    cfg.seed = sim_seed;
    const SimResult sim = simulate_cohort(cfg);
    atomic_write(sim_out, events_jsonl(sim.events));
    if (!sim_truth.empty()) atomic_write(sim_truth, truth_csv(sim.truth));
    if (!sim_videos.empty()) atomic_write(sim_videos, videos_csv(sim.meta));
    std::cout << "simulated " << sim.truth.size() << " students, " << sim.events.size()
              << " events\n";
    return 0;
  }

  if (c_report->parsed()) {
    k_report.resolve_ipi();
    rin.ipi = k_report.cfg.ipi;
    run_report_from_files(rin);
    std::cout << "report written to " << rin.out_dir << "\n";
    return 0;
  }

  if (c_pipe->parsed()) {
    k_pipe.resolve_ipi();
    if (!pipe_tasks.empty()) k_pipe.cfg.tasks = pipe_tasks;
    k_pipe.cfg.do_learn = !no_learn;
    k_pipe.cfg.do_survival = !no_survival;
    k_pipe.cfg.do_report = !no_report;
    const auto res = run_pipeline(k_pipe.cfg);
    std::cout << "pipeline complete: " << res.n_sessions << " sessions (" << res.n_complete
              << " complete) from " << res.n_students << " students -> " << res.out_dir << "\n";
    return 0;
  }

  std::cerr << app.help();
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
