#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "clickmine/actions.hpp"
#include "clickmine/encode.hpp"
#include "clickmine/ingest.hpp"
#include "clickmine/metrics.hpp"
#include "clickmine/pipeline.hpp"
#include "clickmine/survival.hpp"

namespace py = pybind11;
using namespace clickmine;

namespace {

MatchCosts make_costs(double w_del, double w_ins, double w_sub) {
  return MatchCosts{w_del, w_ins, w_sub};
}

IpiConfig ipi_from_weights(const std::map<std::string, double>& weights) {
  IpiConfig cfg;
  for (const auto& [name, w] : weights) {
    bool found = false;
    for (int c = 0; c < kNumCategories; ++c)
      if (name == category_name(static_cast<Category>(c))) {
        cfg.weight[c] = w;
        found = true;
      }
    if (!found) throw std::invalid_argument("unknown category: " + name);
  }
  return cfg;
}

ActionVector vector_from_levels(const std::map<std::string, std::string>& levels) {
  ActionVector v;
  for (int c = 0; c < kNumCategories; ++c) {
    const std::string name = category_name(static_cast<Category>(c));
    auto it = levels.find(name);
    if (it == levels.end()) throw std::invalid_argument("missing level for category " + name);
    v.level[c] = it->second == "High" ? Level::High : Level::Low;
  }
  v.levels_assigned = true;
  return v;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Clickstream operationalization core: symbols, behavioral actions, IPI";

  m.def("tokenize",
        [](const std::string& s) {
          std::vector<std::string> out;
          for (auto sym : tokenize(s)) out.push_back(symbol_name(sym));
          return out;
        },
        py::arg("sequence"), "Split a concatenated symbol string into tokens");

  m.def("mine_ngrams",
        [](const std::vector<std::string>& sequences, int n, int k) {
          std::vector<std::vector<ClickSymbol>> corpus;
          for (const auto& s : sequences) corpus.push_back(tokenize(s));
          return mine_ngrams(corpus, n, k);
        },
        py::arg("sequences"), py::arg("n") = 4, py::arg("k") = 100);

  m.def("ngram_cosine",
        [](const std::string& pattern, const std::string& stream, int n) {
          return ngram_cosine(tokenize(pattern), tokenize(stream), n);
        },
        py::arg("pattern"), py::arg("stream"), py::arg("n") = 4);

  m.def("window_edit_distance",
        [](const std::string& stream, const std::string& pattern, double w_del, double w_ins,
           double w_sub) {
          return window_edit_distance(tokenize(stream), tokenize(pattern),
                                      make_costs(w_del, w_ins, w_sub));
        },
        py::arg("stream"), py::arg("pattern"), py::arg("w_del") = 0.1, py::arg("w_ins") = 1.0,
        py::arg("w_sub") = 1.0);

  m.def("pattern_weight",
        [](const std::string& pattern, const std::string& stream, int n, double w_del,
           double w_ins, double w_sub) {
          return pattern_weight(tokenize(pattern), tokenize(stream), n,
                                make_costs(w_del, w_ins, w_sub));
        },
        py::arg("pattern"), py::arg("stream"), py::arg("n") = 4, py::arg("w_del") = 0.1,
        py::arg("w_ins") = 1.0, py::arg("w_sub") = 1.0);

  m.def("category_weights",
        [](const std::string& stream, int n, double w_del, double w_ins, double w_sub) {
          const auto v = score_stream("", tokenize(stream), default_taxonomy(), n,
                                      make_costs(w_del, w_ins, w_sub));
          std::map<std::string, double> out;
          for (int c = 0; c < kNumCategories; ++c)
            out[category_name(static_cast<Category>(c))] = v.weight[c];
          return out;
        },
        py::arg("stream"), py::arg("n") = 4, py::arg("w_del") = 0.1, py::arg("w_ins") = 1.0,
        py::arg("w_sub") = 1.0, "Raw weights of the seven behavioral categories");

  m.def("compute_ipi",
        [](const std::map<std::string, std::string>& levels,
           const std::map<std::string, double>& weights) {
          return compute_ipi(vector_from_levels(levels),
                             weights.empty() ? IpiConfig{} : ipi_from_weights(weights));
        },
        py::arg("levels"), py::arg("weights") = std::map<std::string, double>{});

  m.def("bin_ipi",
        [](double ipi) { return std::string(band_name(bin_ipi(ipi))); }, py::arg("ipi"));

  m.def("encode_events",
        [](const std::string& events_jsonl_text, double gap, double scroll_window) {
          std::istringstream in(events_jsonl_text);
          const auto events = parse_events(in);
          SessionOptions so;
          so.gap_seconds = gap;
          EncodeOptions eo;
          eo.scroll_window = scroll_window;
          const auto build = build_sessions(events, {}, so);
          std::vector<std::map<std::string, std::string>> out;
          for (const auto& s : build.sessions) {
            const auto seq = encode_session(s, eo);
            out.push_back({{"session_id", s.session_id},
                           {"student_id", s.student_id},
                           {"video_id", s.video_id},
                           {"sequence", sequence_string(seq.symbols)}});
          }
          return out;
        },
        py::arg("events_jsonl"), py::arg("gap") = 1800.0, py::arg("scroll_window") = 1.0,
        "Parse a JSONL event log and return encoded session records");

  m.def("two_sample_z",
        [](const std::vector<double>& a, const std::vector<double>& b) {
          const auto r = two_sample_z(a, b);
          return py::make_tuple(r.z, r.p);
        },
        py::arg("a"), py::arg("b"));

  m.def("default_config_json", []() { return show_config_text(); },
        "Every effective default as JSON text");

  m.def("run_pipeline",
        [](const std::string& out_dir, std::uint64_t seed, const std::string& events_path,
           const std::string& videos_path, const std::string& simulate, int sim_students,
           bool learn, bool survival) {
          PipelineConfig cfg;
          cfg.out_dir = out_dir;
          cfg.seed = seed;
          cfg.events_path = events_path;
          cfg.videos_path = videos_path;
          cfg.simulate = simulate;
          cfg.sim_students = sim_students;
          cfg.do_learn = learn;
          cfg.do_survival = survival;
          const auto res = run_pipeline(cfg);
          py::dict d;
          d["out_dir"] = res.out_dir;
          d["n_events"] = res.n_events;
          d["n_sessions"] = res.n_sessions;
          d["n_complete"] = res.n_complete;
          d["n_students"] = res.n_students;
          for (const auto& [k, v] : res.stats) d[k.c_str()] = v;
          return d;
        },
        py::arg("out_dir"), py::arg("seed") = 7, py::arg("events_path") = "",
        py::arg("videos_path") = "", py::arg("simulate") = "default",
        py::arg("sim_students") = 200, py::arg("learn") = false, py::arg("survival") = true,
        "Run the artifact pipeline and return summary stats");
}
