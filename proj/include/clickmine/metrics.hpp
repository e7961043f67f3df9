#pragma once

#include <array>
#include <string>
#include <vector>

#include "clickmine/actions.hpp"
#include "clickmine/ingest.hpp"

namespace clickmine {

enum class Band : std::uint8_t { VeryLow = 0, Low, High, VeryHigh };

const char* band_name(Band b);  // "VL", "L", "H", "VH"

/// Per-category signed weights plus the IPI bin edges.
struct IpiConfig {
  // Indexed by Category. Appetitive behaviors positive, aversive negative.
  std::array<double, kNumCategories> weight{
      /*Rewatch*/ 2.0,
      /*Skipping*/ -3.0,
      /*FastWatching*/ -2.0,
      /*SlowWatching*/ 1.0,
      /*ClearConcept*/ 3.0,
      /*CheckbackReference*/ 0.0,
      /*PlayrateTransition*/ -1.0,
  };
  // VeryLow < edges[0]; Low [edges[0], edges[1]]; High (edges[1], edges[2]];
  // VeryHigh > edges[2].
  std::array<double, 3> bin_edges{-1.0, 1.0, 3.0};
};

/// Signed sum over the seven categories: +weight when the category is High,
/// -weight when it is Low. Requires assigned levels.
double compute_ipi(const ActionVector& vector, const IpiConfig& config = {});

Band bin_ipi(double ipi, const IpiConfig& config = {});

/// Wall-clock seconds spent in each interval class, classified by the event
/// that opens the interval (seeks open dwell intervals; play/pause/ratechange
/// intervals follow the player state).
struct PlayStats {
  double play_seconds = 0.0;
  double pause_seconds = 0.0;
  double seek_dwell_seconds = 0.0;
  double rate_weighted_play = 0.0;  // integral of playrate over play intervals

  double mean_playrate() const {
    return play_seconds > 0 ? rate_weighted_play / play_seconds : 1.0;
  }
};

PlayStats play_stats(const VideoSession& session);

/// (play + pause + post-seek dwell wall time) x duration-weighted mean
/// playrate over play intervals. 0 when nothing was played.
double engagement(const VideoSession& session);

/// (play wall time / video length) x 100 x duration-weighted mean playrate.
double video_play_proportion(const VideoSession& session, double video_length);

/// VeryLow < 50, Low [50,100), High [100,150), VeryHigh >= 150.
Band bin_vpp(double vpp_pct);

/// Median split shared with the actions module: > median -> High.
/// Requires at least two values.
std::vector<Level> equal_frequency_split(const std::vector<double>& values);

struct EngagementRecord {
  std::string session_id;
  std::string student_id;
  std::string video_id;
  double engagement_seconds = 0.0;
  Level engagement_level = Level::Low;
  double play_proportion_pct = 0.0;
  Band vpp_bin = Band::VeryLow;
  double ipi = 0.0;
  Band ipi_bin = Band::Low;
};

struct Trajectory {
  std::string student_id;
  std::vector<std::string> video_ids;  // watch order
  std::vector<Level> engagement;       // H / L
  std::vector<Band> vpp;               // VL / L / H / VH
  std::vector<Band> ipi;               // VL / L / H / VH

  std::string engagement_string() const;  // "H L H"
  std::string vpp_string() const;
  std::string ipi_string() const;
};

/// One unit per (student, video) after any multi-session aggregation.
struct StudentVideoRecord {
  std::string student_id;
  std::string video_id;
  int order_in_course = 0;
  Level engagement_level = Level::Low;
  Band vpp_bin = Band::VeryLow;
  Band ipi_bin = Band::Low;
};

/// Groups records per student and emits the three aligned trajectory strings
/// in course order (ties broken by video id).
std::vector<Trajectory> build_trajectories(const std::vector<StudentVideoRecord>& records);

}  // namespace clickmine
