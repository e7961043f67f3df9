#include "clickmine/metrics.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace clickmine {

const char* band_name(Band b) {
  switch (b) {
    case Band::VeryLow: return "VL";
    case Band::Low: return "L";
    case Band::High: return "H";
    case Band::VeryHigh: return "VH";
  }
  return "?";
}

double compute_ipi(const ActionVector& vector, const IpiConfig& config) {
  if (!vector.levels_assigned)
    throw std::invalid_argument("compute_ipi: action vector has no levels assigned");
  double ipi = 0.0;
  for (int c = 0; c < kNumCategories; ++c)
    ipi += vector.level[c] == Level::High ? config.weight[c] : -config.weight[c];
  return ipi;
}

Band bin_ipi(double ipi, const IpiConfig& config) {
  if (ipi < config.bin_edges[0]) return Band::VeryLow;
  if (ipi <= config.bin_edges[1]) return Band::Low;
  if (ipi <= config.bin_edges[2]) return Band::High;
  return Band::VeryHigh;
}

PlayStats play_stats(const VideoSession& session) {
  PlayStats st;
  bool playing = false;
  double rate = 1.0;
  for (std::size_t i = 0; i < session.events.size(); ++i) {
    const auto& e = session.events[i];
    switch (e.kind) {
      case EventKind::Play: playing = true; break;
      case EventKind::Pause: playing = false; break;
      default: break;
    }
    rate = e.playrate;
    if (i + 1 >= session.events.size()) break;
    const double dt = session.events[i + 1].timestamp - e.timestamp;
    if (dt <= 0) continue;
    if (e.kind == EventKind::Seek) {
      st.seek_dwell_seconds += dt;
    } else if (playing) {
      st.play_seconds += dt;
      st.rate_weighted_play += dt * rate;
    } else {
      st.pause_seconds += dt;
    }
  }
  return st;
}

double engagement(const VideoSession& session) {
  const PlayStats st = play_stats(session);
  if (st.play_seconds <= 0) return 0.0;
  return (st.play_seconds + st.pause_seconds + st.seek_dwell_seconds) * st.mean_playrate();
}

double video_play_proportion(const VideoSession& session, double video_length) {
  if (!(video_length > 0))
    throw std::invalid_argument("video_play_proportion: video_length must be positive");
  const PlayStats st = play_stats(session);
  if (st.play_seconds <= 0) return 0.0;
  return st.play_seconds / video_length * 100.0 * st.mean_playrate();
}

Band bin_vpp(double vpp_pct) {
  if (vpp_pct < 50.0) return Band::VeryLow;
  if (vpp_pct < 100.0) return Band::Low;
  if (vpp_pct < 150.0) return Band::High;
  return Band::VeryHigh;
}

std::vector<Level> equal_frequency_split(const std::vector<double>& values) {
  return median_split(values);
}

namespace {

std::string join_bands(const std::vector<Band>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += band_name(v[i]);
  }
  return out;
}

}  // namespace

std::string Trajectory::engagement_string() const {
  std::string out;
  for (std::size_t i = 0; i < engagement.size(); ++i) {
    if (i) out += ' ';
    out += engagement[i] == Level::High ? "H" : "L";
  }
  return out;
}

std::string Trajectory::vpp_string() const { return join_bands(vpp); }
std::string Trajectory::ipi_string() const { return join_bands(ipi); }

std::vector<Trajectory> build_trajectories(const std::vector<StudentVideoRecord>& records) {
  std::map<std::string, std::vector<const StudentVideoRecord*>> by_student;
  for (const auto& r : records) by_student[r.student_id].push_back(&r);

  std::vector<Trajectory> out;
  for (auto& [student, rows] : by_student) {
    std::sort(rows.begin(), rows.end(), [](const auto* a, const auto* b) {
      if (a->order_in_course != b->order_in_course)
        return a->order_in_course < b->order_in_course;
      return a->video_id < b->video_id;
    });
    Trajectory t;
    t.student_id = student;
    for (const auto* r : rows) {
      t.video_ids.push_back(r->video_id);
      t.engagement.push_back(r->engagement_level);
      t.vpp.push_back(r->vpp_bin);
      t.ipi.push_back(r->ipi_bin);
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace clickmine
