#include "clickmine/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "clickmine/csv.hpp"
#include "json.hpp"

namespace clickmine {

using nlohmann::json;

const char* kind_name(EventKind k) {
  switch (k) {
    case EventKind::Play: return "play";
    case EventKind::Pause: return "pause";
    case EventKind::Seek: return "seek";
    case EventKind::Ratechange: return "ratechange";
  }
  return "?";
}

std::optional<EventKind> kind_from_name(const std::string& s) {
  if (s == "play") return EventKind::Play;
  if (s == "pause") return EventKind::Pause;
  if (s == "seek") return EventKind::Seek;
  if (s == "ratechange") return EventKind::Ratechange;
  return std::nullopt;
}

namespace {

[[noreturn]] void fail(std::size_t line_no, const std::string& field, const std::string& what) {
  std::ostringstream ss;
  ss << "line " << line_no << ": field '" << field << "': " << what;
  throw ParseError(ss.str());
}

double require_number(const json& j, std::size_t line_no, const char* field) {
  if (!j.contains(field)) fail(line_no, field, "missing");
  const json& v = j.at(field);
  if (!v.is_number()) fail(line_no, field, "not a number");
  return v.get<double>();
}

std::string require_string(const json& j, std::size_t line_no, const char* field) {
  if (!j.contains(field)) fail(line_no, field, "missing");
  const json& v = j.at(field);
  if (!v.is_string()) fail(line_no, field, "not a string");
  std::string s = v.get<std::string>();
  if (s.empty()) fail(line_no, field, "empty");
  return s;
}

std::optional<double> optional_number(const json& j, std::size_t line_no, const char* field) {
  if (!j.contains(field) || j.at(field).is_null()) return std::nullopt;
  if (!j.at(field).is_number()) fail(line_no, field, "not a number");
  return j.at(field).get<double>();
}

}  // namespace

std::vector<ClickEvent> parse_events(std::istream& in) {
  std::vector<ClickEvent> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(line_no, "<record>", std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) fail(line_no, "<record>", "not an object");

    ClickEvent e;
    e.student_id = require_string(j, line_no, "student_id");
    e.video_id = require_string(j, line_no, "video_id");
    e.timestamp = require_number(j, line_no, "timestamp");
    if (e.timestamp < 0) fail(line_no, "timestamp", "negative");

    const std::string kind = require_string(j, line_no, "kind");
    auto k = kind_from_name(kind);
    if (!k) fail(line_no, "kind", "unknown kind '" + kind + "'");
    e.kind = *k;

    e.position_from = optional_number(j, line_no, "position_from");
    e.position_to = optional_number(j, line_no, "position_to");
    if (e.kind == EventKind::Seek) {
      if (!e.position_from) fail(line_no, "position_from", "required for seek");
      if (!e.position_to) fail(line_no, "position_to", "required for seek");
    }
    if (e.position_from && *e.position_from < 0) fail(line_no, "position_from", "negative");
    if (e.position_to && *e.position_to < 0) fail(line_no, "position_to", "negative");

    e.playrate = require_number(j, line_no, "playrate");
    if (!(e.playrate > 0)) fail(line_no, "playrate", "must be positive");

    events.push_back(std::move(e));
  }
  return events;
}

std::vector<ClickEvent> parse_events_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return parse_events(in);
}

std::vector<VideoMeta> parse_videos_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  const auto c_id = t.col("video_id");
  const auto c_len = t.col("video_length");
  const auto c_week = t.col("week_index");
  const auto c_ord = t.col("order_in_course");
  std::vector<VideoMeta> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    VideoMeta m;
    m.video_id = row.at(c_id);
    m.video_length = std::stod(row.at(c_len));
    m.week_index = std::stoi(row.at(c_week));
    m.order_in_course = std::stoi(row.at(c_ord));
    if (m.video_length <= 0)
      throw ParseError("videos row " + std::to_string(r + 2) + ": video_length must be positive");
    if (m.week_index < 1)
      throw ParseError("videos row " + std::to_string(r + 2) + ": week_index must be >= 1");
    out.push_back(std::move(m));
  }
  return out;
}

SessionBuild build_sessions(const std::vector<ClickEvent>& events,
                            const std::vector<VideoMeta>& meta,
                            const SessionOptions& opts) {
  if (!(opts.gap_seconds > 0)) throw std::invalid_argument("session gap must be positive");

  std::map<std::string, double> known_length;
  for (const auto& m : meta) known_length[m.video_id] = m.video_length;

  // Group by (student, video); the map keeps output order deterministic.
  std::map<std::pair<std::string, std::string>, std::vector<ClickEvent>> groups;
  for (const auto& e : events) groups[{e.student_id, e.video_id}].push_back(e);

  // Fallback length: maximum position seen anywhere on that video.
  std::map<std::string, double> fallback;
  for (const auto& e : events) {
    if (known_length.count(e.video_id)) continue;
    double& m = fallback[e.video_id];
    if (e.position_from) m = std::max(m, *e.position_from);
    if (e.position_to) m = std::max(m, *e.position_to);
  }

  SessionBuild out;
  for (auto& [key, group] : groups) {
    std::stable_sort(group.begin(), group.end(),
                     [](const ClickEvent& a, const ClickEvent& b) { return a.timestamp < b.timestamp; });
    // exact duplicates only
    auto last = std::unique(group.begin(), group.end());
    out.duplicates_removed += static_cast<std::size_t>(group.end() - last);
    group.erase(last, group.end());

    const bool known = known_length.count(key.second) > 0;
    const double length = known ? known_length[key.second] : fallback[key.second];

    std::size_t session_idx = 0;
    std::vector<ClickEvent> cur;
    auto flush = [&]() {
      if (cur.empty()) return;
      VideoSession s;
      s.student_id = key.first;
      s.video_id = key.second;
      s.session_id = key.first + ":" + key.second + "#" + std::to_string(session_idx++);
      s.video_length = length;
      s.length_from_fallback = !known;
      s.has_end_pause = false;
      for (const auto& e : cur) {
        if (e.kind == EventKind::Pause && e.position_to &&
            std::fabs(*e.position_to - length) <= opts.end_pause_eps)
          s.has_end_pause = true;
      }
      s.events = std::move(cur);
      cur.clear();
      out.sessions.push_back(std::move(s));
    };

    for (const auto& e : group) {
      if (!cur.empty() && e.timestamp - cur.back().timestamp > opts.gap_seconds) flush();
      cur.push_back(e);
    }
    flush();
  }
  for (auto& [vid, len] : fallback) out.fallback_lengths[vid] = len;
  return out;
}

std::pair<std::vector<VideoSession>, std::vector<VideoSession>> filter_complete(
    const std::vector<VideoSession>& sessions) {
  std::pair<std::vector<VideoSession>, std::vector<VideoSession>> out;
  for (const auto& s : sessions) (s.has_end_pause ? out.first : out.second).push_back(s);
  return out;
}

std::string event_to_jsonl(const ClickEvent& e) {
  // Hand-rolled so field order and float formatting stay byte-stable.
  std::string s = "{\"student_id\":\"" + e.student_id + "\",\"video_id\":\"" + e.video_id +
                  "\",\"timestamp\":" + fmt_num(e.timestamp) + ",\"kind\":\"" + kind_name(e.kind) + "\"";
  if (e.position_from) s += ",\"position_from\":" + fmt_num(*e.position_from);
  if (e.position_to) s += ",\"position_to\":" + fmt_num(*e.position_to);
  s += ",\"playrate\":" + fmt_num(e.playrate) + "}";
  return s;
}

}  // namespace clickmine
