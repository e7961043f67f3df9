#include <algorithm>
#include <map>
#include <sstream>

#include "clickmine/ingest.hpp"
#include "clickmine/rng.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace clickmine;
using namespace testutil;

TEST_SUITE_BEGIN("ingest");

TEST_CASE("parse_events maps a well-formed record") {
  std::istringstream in(
      R"({"student_id":"s1","video_id":"v1","timestamp":10.0,"kind":"play","position_to":0.0,"playrate":1.0})");
  const auto events = parse_events(in);
  REQUIRE(events.size() == 1);
  CHECK(events[0].student_id == "s1");
  CHECK(events[0].video_id == "v1");
  CHECK(events[0].timestamp == 10.0);
  CHECK(events[0].kind == EventKind::Play);
  CHECK(events[0].position_to == 0.0);
  CHECK(events[0].playrate == 1.0);
}

TEST_CASE("parse_events rejects invalid fields naming line and field") {
  SUBCASE("zero playrate") {
    std::istringstream in(
        "{\"student_id\":\"s1\",\"video_id\":\"v1\",\"timestamp\":1,\"kind\":\"play\",\"playrate\":0}");
    CHECK_THROWS_WITH_AS(parse_events(in), doctest::Contains("playrate"), ParseError);
  }
  SUBCASE("negative timestamp") {
    std::istringstream in(
        "{\"student_id\":\"s1\",\"video_id\":\"v1\",\"timestamp\":-2,\"kind\":\"play\",\"playrate\":1}");
    CHECK_THROWS_WITH_AS(parse_events(in), doctest::Contains("timestamp"), ParseError);
  }
  SUBCASE("error names the offending line") {
    std::istringstream in(
        "{\"student_id\":\"s1\",\"video_id\":\"v1\",\"timestamp\":1,\"kind\":\"play\",\"playrate\":1}\n"
        "not json\n");
    CHECK_THROWS_WITH_AS(parse_events(in), doctest::Contains("line 2"), ParseError);
  }
  SUBCASE("seek requires both positions") {
    std::istringstream in(
        "{\"student_id\":\"s1\",\"video_id\":\"v1\",\"timestamp\":1,\"kind\":\"seek\",\"position_to\":5,\"playrate\":1}");
    CHECK_THROWS_WITH_AS(parse_events(in), doctest::Contains("position_from"), ParseError);
  }
  SUBCASE("unknown kind") {
    std::istringstream in(
        "{\"student_id\":\"s1\",\"video_id\":\"v1\",\"timestamp\":1,\"kind\":\"scrub\",\"playrate\":1}");
    CHECK_THROWS_WITH_AS(parse_events(in), doctest::Contains("kind"), ParseError);
  }
}

TEST_CASE("parse_events preserves input order even when out of time order") {
  std::istringstream in(
      "{\"student_id\":\"s1\",\"video_id\":\"v1\",\"timestamp\":30,\"kind\":\"play\",\"playrate\":1}\n"
      "{\"student_id\":\"s1\",\"video_id\":\"v1\",\"timestamp\":10,\"kind\":\"pause\",\"position_to\":5,\"playrate\":1}\n"
      "{\"student_id\":\"s1\",\"video_id\":\"v1\",\"timestamp\":20,\"kind\":\"play\",\"playrate\":1}\n");
  const auto events = parse_events(in);
  REQUIRE(events.size() == 3);
  CHECK(events[0].timestamp == 30);
  CHECK(events[1].timestamp == 10);
  CHECK(events[2].timestamp == 20);
}

static std::vector<VideoMeta> one_video(double length = 1000.0) {
  return {{"v1", length, 1, 1}};
}

TEST_CASE("build_sessions groups within the gap") {
  std::vector<ClickEvent> ev{play(0), pause(60, 10), play(120), pause(180, 20), play(240)};
  const auto build = build_sessions(ev, one_video());
  REQUIRE(build.sessions.size() == 1);
  CHECK(build.sessions[0].events.size() == 5);
}

TEST_CASE("build_sessions splits on a 2-hour gap") {
  std::vector<ClickEvent> ev{play(0), pause(60, 10), play(120),
                             pause(120 + 7200 + 1, 20), play(120 + 7200 + 61)};
  const auto build = build_sessions(ev, one_video());
  REQUIRE(build.sessions.size() == 2);
  CHECK(build.sessions[0].events.size() == 3);
  CHECK(build.sessions[1].events.size() == 2);
  CHECK(build.sessions[0].session_id == "s1:v1#0");
  CHECK(build.sessions[1].session_id == "s1:v1#1");
}

TEST_CASE("end pause at the video length marks the session complete") {
  std::vector<ClickEvent> ev{play(0), pause(1000, 1000.0)};
  const auto build = build_sessions(ev, one_video(1000.0));
  REQUIRE(build.sessions.size() == 1);
  CHECK(build.sessions[0].has_end_pause);

  std::vector<ClickEvent> ev2{play(0), pause(900, 900.0)};
  const auto build2 = build_sessions(ev2, one_video(1000.0));
  CHECK_FALSE(build2.sessions[0].has_end_pause);
}

TEST_CASE("partition property: every event in exactly one session") {
  Rng rng(42);
  std::vector<ClickEvent> ev;
  for (int i = 0; i < 400; ++i) {
    const std::string student = "s" + std::to_string(rng.uniform_index(7));
    const std::string video = "v" + std::to_string(rng.uniform_index(3));
    // distinct timestamps guarantee no exact-duplicate removal interferes
    ev.push_back(play(i * 13.0 + rng.uniform(), 1.0, 1.0, student, video));
  }
  const auto build = build_sessions(ev, {});
  std::size_t total = 0;
  for (const auto& s : build.sessions) total += s.events.size();
  CHECK(total == ev.size());
  std::map<std::pair<std::string, std::string>, std::vector<ClickEvent>> grouped;
  for (const auto& s : build.sessions)
    for (const auto& e : s.events) grouped[{s.student_id, s.video_id}].push_back(e);
  for (const auto& e : ev) {
    const auto& g = grouped[{e.student_id, e.video_id}];
    CHECK(std::count(g.begin(), g.end(), e) == 1);
  }
}

TEST_CASE("order property and idempotence") {
  Rng rng(7);
  std::vector<ClickEvent> ev;
  for (int i = 0; i < 200; ++i)
    ev.push_back(play(rng.uniform(0, 4000.0), 1.0, 1.0, "s" + std::to_string(rng.uniform_index(3))));
  const auto build = build_sessions(ev, {});
  for (const auto& s : build.sessions)
    for (std::size_t i = 1; i < s.events.size(); ++i)
      CHECK(s.events[i - 1].timestamp <= s.events[i].timestamp);

  // feeding a session's own events back yields the identical session
  for (const auto& s : build.sessions) {
    const auto again = build_sessions(s.events, {});
    REQUIRE(again.sessions.size() == 1);
    CHECK(again.sessions[0].events == s.events);
  }
}

TEST_CASE("filter_complete is a pure partition") {
  std::vector<ClickEvent> ev;
  for (int i = 0; i < 10; ++i) {
    const std::string student = "s" + std::to_string(i);
    ev.push_back(play(0, 0, 1.0, student));
    if (i % 3 == 0) ev.push_back(pause(500, 1000.0, 1.0, student));
    else ev.push_back(pause(500, 300.0, 1.0, student));
  }
  const auto build = build_sessions(ev, one_video(1000.0));
  REQUIRE(build.sessions.size() == 10);
  const auto [complete, incomplete] = filter_complete(build.sessions);
  CHECK(complete.size() == 4);  // i = 0, 3, 6, 9
  CHECK(incomplete.size() == 6);
  for (const auto& s : complete) CHECK(s.has_end_pause);
  for (const auto& s : incomplete) CHECK_FALSE(s.has_end_pause);

  const auto [c2, i2] = filter_complete(complete);
  CHECK(c2.size() == complete.size());
  CHECK(i2.empty());
}

TEST_CASE("unknown video length falls back to the max observed position") {
  std::vector<ClickEvent> ev{play(0, 10.0), seek(30, 10.0, 640.0), pause(60, 640.0)};
  const auto build = build_sessions(ev, {});
  REQUIRE(build.sessions.size() == 1);
  CHECK(build.sessions[0].video_length == 640.0);
  CHECK(build.sessions[0].length_from_fallback);
  CHECK(build.sessions[0].has_end_pause);  // final pause sits at the fallback length
  CHECK(build.fallback_lengths.at("v1") == 640.0);
}

TEST_CASE("exact duplicate events are removed, ties keep input order") {
  std::vector<ClickEvent> ev{play(10, 0), play(10, 0), pause(10, 5)};
  const auto build = build_sessions(ev, one_video());
  REQUIRE(build.sessions.size() == 1);
  CHECK(build.sessions[0].events.size() == 2);
  CHECK(build.duplicates_removed == 1);
  CHECK(build.sessions[0].events[0].kind == EventKind::Play);
  CHECK(build.sessions[0].events[1].kind == EventKind::Pause);
}

TEST_SUITE_END();
