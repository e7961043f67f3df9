#include "clickmine/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "clickmine/csv.hpp"
#include "clickmine/encode.hpp"
#include "clickmine/rng.hpp"
#include "json.hpp"

namespace clickmine {

namespace {

// Keeping symbol starts at least this far apart guarantees that separately
// generated seeks never fall inside the 1 s scroll window (the second seek of
// a scroll sits 0.3 s after the first, so the next event is >= 1.2 s away).
constexpr double kDwellFloor = 1.5;
constexpr double kScrollGap = 0.3;

void validate(const CohortConfig& cfg) {
  if (cfg.archetypes.empty()) throw std::invalid_argument("cohort: no archetypes");
  if (cfg.archetypes.size() != cfg.mix.size())
    throw std::invalid_argument("cohort: mix size must match archetypes");
  double total = 0;
  for (double m : cfg.mix) {
    if (m < 0) throw std::invalid_argument("cohort: negative mix proportion");
    total += m;
  }
  if (std::fabs(total - 1.0) > 1e-9)
    throw std::invalid_argument("cohort: mix proportions must sum to 1");
  if (cfg.n_students < 1) throw std::invalid_argument("cohort: n_students must be >= 1");
  if (cfg.course.weeks < 1 || cfg.course.videos_per_week < 1)
    throw std::invalid_argument("cohort: course structure must be positive");
  if (cfg.course.video_length < 10)
    throw std::invalid_argument("cohort: video_length must be >= 10 s");
  for (const auto& a : cfg.archetypes) {
    for (int i = 0; i < 8; ++i) {
      double row = 0;
      for (int j = 0; j < 8; ++j) {
        if (a.transition[i][j] < 0)
          throw std::invalid_argument("archetype '" + a.name + "': negative transition entry");
        row += a.transition[i][j];
      }
      if (std::fabs(row - 1.0) > 1e-9)
        throw std::invalid_argument("archetype '" + a.name + "': transition row " +
                                    std::to_string(i) + " does not sum to 1");
    }
    if (a.weekly_dropout_hazard < 0 || a.weekly_dropout_hazard > 1)
      throw std::invalid_argument("archetype '" + a.name + "': hazard must be in [0,1]");
    if (a.completion_prob < 0 || a.completion_prob > 1)
      throw std::invalid_argument("archetype '" + a.name + "': completion_prob in [0,1]");
    for (double d : a.dwell_mean)
      if (d <= 0) throw std::invalid_argument("archetype '" + a.name + "': dwell means positive");
    if (a.mean_symbols < a.min_symbols)
      throw std::invalid_argument("archetype '" + a.name + "': mean_symbols < min_symbols");
    if (!(a.playrate.initial_rate > 0) || !(a.playrate.change_factor > 1))
      throw std::invalid_argument("archetype '" + a.name + "': bad playrate habits");
  }
}

int sample_index(Rng& rng, const double* probs, int n) {
  double u = rng.uniform();
  for (int i = 0; i < n; ++i) {
    u -= probs[i];
    if (u < 0) return i;
  }
  return n - 1;
}

struct SessionSim {
  const ArchetypeConfig* arch;
  double video_length;
  double lo, hi;  // position band

  double pos;
  double rate;
  double t;

  ClickEvent base(const std::string& student, const std::string& video, EventKind kind) const {
    ClickEvent e;
    e.student_id = student;
    e.video_id = video;
    e.timestamp = t;
    e.kind = kind;
    e.playrate = rate;
    return e;
  }
};

}  // namespace

std::array<double, 8> stationary_distribution(
    const std::array<std::array<double, 8>, 8>& transition) {
  std::array<double, 8> pi;
  pi.fill(1.0 / 8.0);
  for (int it = 0; it < 2000; ++it) {
    std::array<double, 8> next{};
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) next[j] += pi[i] * transition[i][j];
    double delta = 0;
    for (int j = 0; j < 8; ++j) {
      delta += std::fabs(next[j] - pi[j]);
      pi[j] = next[j];
    }
    if (delta < 1e-13) break;
  }
  return pi;
}

SimResult simulate_cohort(const CohortConfig& cfg) {
  validate(cfg);

  SimResult out;
  for (int w = 1; w <= cfg.course.weeks; ++w)
    for (int v = 1; v <= cfg.course.videos_per_week; ++v) {
      VideoMeta m;
      m.video_id = "w" + std::to_string(w) + "v" + std::to_string(v);
      m.video_length = cfg.course.video_length;
      m.week_index = w;
      m.order_in_course = (w - 1) * cfg.course.videos_per_week + v;
      out.meta.push_back(std::move(m));
    }

  std::vector<std::array<double, 8>> stationary;
  for (const auto& a : cfg.archetypes) stationary.push_back(stationary_distribution(a.transition));

  const int id_width = std::max<int>(4, static_cast<int>(std::to_string(cfg.n_students).size()));
  Rng master(cfg.seed);

  for (int s = 0; s < cfg.n_students; ++s) {
    Rng rng = master.fork(static_cast<std::uint64_t>(s) + 1);

    std::string sid = std::to_string(s + 1);
    sid = "s" + std::string(id_width - std::min<int>(id_width, sid.size()), '0') + sid;

    // archetype by mix proportions
    int ai = 0;
    {
      double u = rng.uniform(), acc = 0;
      for (std::size_t i = 0; i < cfg.mix.size(); ++i) {
        acc += cfg.mix[i];
        if (u < acc) {
          ai = static_cast<int>(i);
          break;
        }
        ai = static_cast<int>(i);
      }
    }
    const ArchetypeConfig& arch = cfg.archetypes[ai];

    // dropout week: student watches week w, then may leave before week w+1
    int last_week = cfg.course.weeks;
    int dropout_week = 0;
    for (int w = 1; w < cfg.course.weeks; ++w) {
      if (rng.bernoulli(arch.weekly_dropout_hazard)) {
        last_week = w;
        dropout_week = w;
        break;
      }
    }
    out.truth.push_back({sid, arch.name, dropout_week});

    for (int w = 1; w <= last_week; ++w) {
      for (int v = 1; v <= cfg.course.videos_per_week; ++v) {
        const std::string vid = "w" + std::to_string(w) + "v" + std::to_string(v);
        const double L = cfg.course.video_length;

        SessionSim sim;
        sim.arch = &arch;
        sim.video_length = L;
        sim.lo = L / 4.0;
        sim.hi = 3.0 * L / 4.0;
        sim.pos = sim.lo;
        sim.rate = arch.playrate.initial_rate;
        // week start + per-video slot + jitter keeps sessions well apart
        sim.t = (w - 1) * 7.0 * 86400.0 + (v - 1) * 7200.0 + rng.uniform(0.0, 1800.0);

        const bool completes = rng.bernoulli(arch.completion_prob);
        int n_symbols = arch.min_symbols +
                        static_cast<int>(rng.exponential(arch.mean_symbols - arch.min_symbols));
        n_symbols = std::min(n_symbols, arch.max_symbols);

        int sym = sample_index(rng, stationary[ai].data(), 8);
        for (int k = 0; k < n_symbols; ++k) {
          const double max_jump = L / 8.0;
          switch (static_cast<ClickSymbol>(sym)) {
            case ClickSymbol::Pl: {
              auto e = sim.base(sid, vid, EventKind::Play);
              e.position_to = sim.pos;
              out.events.push_back(e);
              break;
            }
            case ClickSymbol::Pa: {
              auto e = sim.base(sid, vid, EventKind::Pause);
              e.position_to = sim.pos;
              out.events.push_back(e);
              break;
            }
            case ClickSymbol::Sf:
            case ClickSymbol::Sb: {
              const bool fwd = static_cast<ClickSymbol>(sym) == ClickSymbol::Sf;
              const double jump = rng.uniform(0.5, max_jump);
              const double target = fwd ? sim.pos + jump : std::max(sim.pos - jump, L / 8.0);
              auto e = sim.base(sid, vid, EventKind::Seek);
              e.position_from = sim.pos;
              e.position_to = fwd ? target : std::min(target, sim.pos - 0.25);
              out.events.push_back(e);
              sim.pos = std::clamp(*e.position_to, sim.lo, sim.hi);
              break;
            }
            case ClickSymbol::SSf:
            case ClickSymbol::SSb: {
              const bool fwd = static_cast<ClickSymbol>(sym) == ClickSymbol::SSf;
              double cur = sim.pos;
              for (int hop = 0; hop < 2; ++hop) {
                const double jump = rng.uniform(0.25, max_jump / 2.0);
                const double target =
                    fwd ? cur + jump : std::max(std::min(cur - jump, cur - 0.25), L / 16.0);
                auto e = sim.base(sid, vid, EventKind::Seek);
                e.timestamp = sim.t + hop * kScrollGap;
                e.position_from = cur;
                e.position_to = target;
                out.events.push_back(e);
                cur = target;
              }
              sim.pos = std::clamp(cur, sim.lo, sim.hi);
              break;
            }
            case ClickSymbol::Rf:
            case ClickSymbol::Rs: {
              if (static_cast<ClickSymbol>(sym) == ClickSymbol::Rf)
                sim.rate *= arch.playrate.change_factor;
              else
                sim.rate /= arch.playrate.change_factor;
              auto e = sim.base(sid, vid, EventKind::Ratechange);
              e.position_to = sim.pos;
              out.events.push_back(e);
              break;
            }
          }
          const double dwell = kDwellFloor + rng.exponential(arch.dwell_mean[sym]);
          // playing advances the position
          if (static_cast<ClickSymbol>(sym) == ClickSymbol::Pl)
            sim.pos = std::clamp(sim.pos + dwell * sim.rate, sim.lo, sim.hi);
          sim.t += dwell;
          sym = sample_index(rng, arch.transition[sym].data(), 8);
        }

        if (completes) {
          auto e = sim.base(sid, vid, EventKind::Pause);
          e.position_to = L;
          out.events.push_back(e);
        }
      }
    }
  }
  return out;
}

CohortConfig default_cohort_config(int n_students, std::uint64_t seed) {
  CohortConfig cfg;
  cfg.n_students = n_students;
  cfg.seed = seed;
  cfg.course = {6, 2, 600.0};

  ArchetypeConfig deep;
  deep.name = "deep-processor";
  deep.transition = {{
      //                Pl    Pa    Sf    Sb    SSf   SSb   Rf    Rs
      /*from Pl */ {{0.05, 0.50, 0.02, 0.25, 0.00, 0.08, 0.00, 0.10}},
      /*from Pa */ {{0.55, 0.05, 0.02, 0.28, 0.00, 0.08, 0.00, 0.02}},
      /*from Sf */ {{0.40, 0.30, 0.05, 0.20, 0.00, 0.05, 0.00, 0.00}},
      /*from Sb */ {{0.35, 0.30, 0.02, 0.25, 0.00, 0.08, 0.00, 0.00}},
      /*from SSf*/ {{0.40, 0.30, 0.05, 0.20, 0.00, 0.05, 0.00, 0.00}},
      /*from SSb*/ {{0.35, 0.35, 0.00, 0.22, 0.00, 0.08, 0.00, 0.00}},
      /*from Rf */ {{0.40, 0.30, 0.00, 0.10, 0.00, 0.00, 0.00, 0.20}},
      /*from Rs */ {{0.45, 0.30, 0.00, 0.15, 0.00, 0.05, 0.00, 0.05}},
  }};
  deep.dwell_mean = {45.0, 18.0, 8.0, 8.0, 6.0, 6.0, 5.0, 5.0};
  deep.mean_symbols = 32.0;
  deep.min_symbols = 6;
  deep.completion_prob = 0.92;
  deep.weekly_dropout_hazard = 0.06;
  deep.playrate = {1.0, 1.25};

  ArchetypeConfig skim;
  skim.name = "skimmer";
  skim.transition = {{
      //                Pl    Pa    Sf    Sb    SSf   SSb   Rf    Rs
      /*from Pl */ {{0.05, 0.25, 0.40, 0.02, 0.10, 0.00, 0.15, 0.03}},
      /*from Pa */ {{0.50, 0.05, 0.30, 0.02, 0.05, 0.00, 0.08, 0.00}},
      /*from Sf */ {{0.25, 0.15, 0.40, 0.02, 0.10, 0.00, 0.08, 0.00}},
      /*from Sb */ {{0.30, 0.20, 0.35, 0.05, 0.05, 0.00, 0.05, 0.00}},
      /*from SSf*/ {{0.30, 0.15, 0.35, 0.02, 0.10, 0.00, 0.08, 0.00}},
      /*from SSb*/ {{0.30, 0.20, 0.35, 0.05, 0.05, 0.00, 0.05, 0.00}},
      /*from Rf */ {{0.35, 0.15, 0.25, 0.00, 0.05, 0.00, 0.12, 0.08}},
      /*from Rs */ {{0.30, 0.15, 0.30, 0.00, 0.05, 0.00, 0.20, 0.00}},
  }};
  skim.dwell_mean = {20.0, 8.0, 5.0, 5.0, 4.0, 4.0, 4.0, 4.0};
  skim.mean_symbols = 26.0;
  skim.min_symbols = 6;
  skim.completion_prob = 0.55;
  skim.weekly_dropout_hazard = 0.32;
  skim.playrate = {1.0, 1.25};

  cfg.archetypes = {deep, skim};
  cfg.mix = {0.5, 0.5};
  return cfg;
}

namespace {

using nlohmann::json;

ArchetypeConfig archetype_from_json(const json& j) {
  ArchetypeConfig a;
  a.name = j.at("name").get<std::string>();
  const auto& tr = j.at("transition");
  if (!tr.is_array() || tr.size() != 8)
    throw std::invalid_argument("archetype '" + a.name + "': transition must be 8x8");
  for (int i = 0; i < 8; ++i) {
    if (!tr[i].is_array() || tr[i].size() != 8)
      throw std::invalid_argument("archetype '" + a.name + "': transition must be 8x8");
    for (int k = 0; k < 8; ++k) a.transition[i][k] = tr[i][k].get<double>();
  }
  const auto& dw = j.at("dwell_mean");
  if (!dw.is_array() || dw.size() != 8)
    throw std::invalid_argument("archetype '" + a.name + "': dwell_mean must have 8 entries");
  for (int i = 0; i < 8; ++i) a.dwell_mean[i] = dw[i].get<double>();
  a.mean_symbols = j.value("mean_symbols", a.mean_symbols);
  a.min_symbols = j.value("min_symbols", a.min_symbols);
  a.max_symbols = j.value("max_symbols", a.max_symbols);
  a.completion_prob = j.value("completion_prob", a.completion_prob);
  a.weekly_dropout_hazard = j.value("weekly_dropout_hazard", a.weekly_dropout_hazard);
  if (j.contains("playrate")) {
    a.playrate.initial_rate = j["playrate"].value("initial_rate", 1.0);
    a.playrate.change_factor = j["playrate"].value("change_factor", 1.25);
  }
  return a;
}

json archetype_to_json(const ArchetypeConfig& a) {
  json j;
  j["name"] = a.name;
  j["transition"] = a.transition;
  j["dwell_mean"] = a.dwell_mean;
  j["mean_symbols"] = a.mean_symbols;
  j["min_symbols"] = a.min_symbols;
  j["max_symbols"] = a.max_symbols;
  j["completion_prob"] = a.completion_prob;
  j["weekly_dropout_hazard"] = a.weekly_dropout_hazard;
  j["playrate"] = {{"initial_rate", a.playrate.initial_rate},
                   {"change_factor", a.playrate.change_factor}};
  return j;
}

}  // namespace

CohortConfig load_cohort_config(const std::string& path) {
  json j = json::parse(read_file(path));
  CohortConfig cfg;
  cfg.n_students = j.value("n_students", cfg.n_students);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("course")) {
    cfg.course.weeks = j["course"].value("weeks", cfg.course.weeks);
    cfg.course.videos_per_week = j["course"].value("videos_per_week", cfg.course.videos_per_week);
    cfg.course.video_length = j["course"].value("video_length", cfg.course.video_length);
  }
  for (const auto& aj : j.at("archetypes")) {
    cfg.archetypes.push_back(archetype_from_json(aj));
    cfg.mix.push_back(aj.value("mix", 0.0));
  }
  return cfg;
}

std::string cohort_config_json(const CohortConfig& cfg) {
  json j;
  j["n_students"] = cfg.n_students;
  j["seed"] = cfg.seed;
  j["course"] = {{"weeks", cfg.course.weeks},
                 {"videos_per_week", cfg.course.videos_per_week},
                 {"video_length", cfg.course.video_length}};
  j["archetypes"] = json::array();
  for (std::size_t i = 0; i < cfg.archetypes.size(); ++i) {
    json aj = archetype_to_json(cfg.archetypes[i]);
    aj["mix"] = cfg.mix[i];
    j["archetypes"].push_back(aj);
  }
  return j.dump(2) + "\n";
}

std::string events_jsonl(const std::vector<ClickEvent>& events) {
  std::string out;
  for (const auto& e : events) {
    out += event_to_jsonl(e);
    out += '\n';
  }
  return out;
}

std::string truth_csv(const std::vector<TruthRow>& truth) {
  CsvWriter w;
  w.row({"student_id", "archetype", "true_dropout_week"});
  for (const auto& t : truth)
    w.row({t.student_id, t.archetype, fmt_int(t.dropout_week)});
  return w.str();
}

std::string videos_csv(const std::vector<VideoMeta>& meta) {
  CsvWriter w;
  w.row({"video_id", "video_length", "week_index", "order_in_course"});
  for (const auto& m : meta)
    w.row({m.video_id, fmt_num(m.video_length), fmt_int(m.week_index), fmt_int(m.order_in_course)});
  return w.str();
}

}  // namespace clickmine
