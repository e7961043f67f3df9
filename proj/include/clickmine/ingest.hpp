#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace clickmine {

enum class EventKind { Play, Pause, Seek, Ratechange };

const char* kind_name(EventKind k);
std::optional<EventKind> kind_from_name(const std::string& s);

/// One registered click on the video player.
struct ClickEvent {
  std::string student_id;
  std::string video_id;
  double timestamp = 0.0;  // wall clock seconds
  EventKind kind = EventKind::Play;
  std::optional<double> position_from;  // seeks only
  std::optional<double> position_to;    // seeks; current position for play/pause
  double playrate = 1.0;                // player rate after the event

  bool operator==(const ClickEvent&) const = default;
};

struct VideoMeta {
  std::string video_id;
  double video_length = 0.0;  // seconds
  int week_index = 1;
  int order_in_course = 1;
};

/// One contiguous viewing session of a student on a video.
struct VideoSession {
  std::string session_id;
  std::string student_id;
  std::string video_id;
  std::vector<ClickEvent> events;  // time ordered
  bool has_end_pause = false;
  double video_length = 0.0;       // resolved (metadata or fallback)
  bool length_from_fallback = false;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Parses line-delimited JSON event records. Each line carries the keys
/// student_id, video_id, timestamp, kind, position_from, position_to,
/// playrate (position_from/position_to may be omitted where not applicable).
/// Events are returned in input order; validation failures name the line
/// and the offending field.
std::vector<ClickEvent> parse_events(std::istream& in);
std::vector<ClickEvent> parse_events_file(const std::string& path);

std::vector<VideoMeta> parse_videos_csv(const std::string& path);

struct SessionOptions {
  double gap_seconds = 1800.0;     // inactivity that splits a session
  double end_pause_eps = 1.0;      // |pause position - video length| tolerance
};

struct SessionBuild {
  std::vector<VideoSession> sessions;
  // video_id -> resolved length for videos missing from the metadata
  // (maximum observed position across all of that video's events)
  std::map<std::string, double> fallback_lengths;
  std::size_t duplicates_removed = 0;
};

/// Groups events by (student, video), orders them by timestamp (stable on
/// ties), removes exact duplicates, and splits on inactivity gaps. A session
/// gets has_end_pause when it contains a pause within end_pause_eps of the
/// video length.
SessionBuild build_sessions(const std::vector<ClickEvent>& events,
                            const std::vector<VideoMeta>& meta,
                            const SessionOptions& opts = {});

/// Splits sessions into (complete, incomplete) by the end-pause flag.
std::pair<std::vector<VideoSession>, std::vector<VideoSession>> filter_complete(
    const std::vector<VideoSession>& sessions);

/// Serialized event record, one line, no trailing newline.
std::string event_to_jsonl(const ClickEvent& e);

}  // namespace clickmine
