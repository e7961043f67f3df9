#pragma once

#include <string>
#include <vector>

#include "clickmine/encode.hpp"
#include "clickmine/ingest.hpp"

namespace testutil {

using namespace clickmine;

inline ClickEvent play(double t, double pos = 0.0, double rate = 1.0,
                       const std::string& student = "s1", const std::string& video = "v1") {
  ClickEvent e;
  e.student_id = student;
  e.video_id = video;
  e.timestamp = t;
  e.kind = EventKind::Play;
  e.position_to = pos;
  e.playrate = rate;
  return e;
}

inline ClickEvent pause(double t, double pos = 0.0, double rate = 1.0,
                        const std::string& student = "s1", const std::string& video = "v1") {
  ClickEvent e;
  e.student_id = student;
  e.video_id = video;
  e.timestamp = t;
  e.kind = EventKind::Pause;
  e.position_to = pos;
  e.playrate = rate;
  return e;
}

inline ClickEvent seek(double t, double from, double to, double rate = 1.0,
                       const std::string& student = "s1", const std::string& video = "v1") {
  ClickEvent e;
  e.student_id = student;
  e.video_id = video;
  e.timestamp = t;
  e.kind = EventKind::Seek;
  e.position_from = from;
  e.position_to = to;
  e.playrate = rate;
  return e;
}

inline ClickEvent ratechange(double t, double rate,
                             const std::string& student = "s1", const std::string& video = "v1") {
  ClickEvent e;
  e.student_id = student;
  e.video_id = video;
  e.timestamp = t;
  e.kind = EventKind::Ratechange;
  e.playrate = rate;
  return e;
}

inline VideoSession session_of(std::vector<ClickEvent> events, double video_length = 1000.0,
                               const std::string& id = "s1:v1#0") {
  VideoSession s;
  s.session_id = id;
  s.student_id = events.empty() ? "s1" : events.front().student_id;
  s.video_id = events.empty() ? "v1" : events.front().video_id;
  s.video_length = video_length;
  for (const auto& e : events) {
    if (e.kind == EventKind::Pause && e.position_to &&
        std::abs(*e.position_to - video_length) <= 1.0)
      s.has_end_pause = true;
  }
  s.events = std::move(events);
  return s;
}

inline std::vector<ClickSymbol> syms(const std::string& s) { return clickmine::tokenize(s); }

}  // namespace testutil
