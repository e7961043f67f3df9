#pragma once

#include <string>
#include <vector>

#include "clickmine/ingest.hpp"

namespace clickmine {

/// Level-1 alphabet: Play, Pause, SeekFw, SeekBw, ScrollFw, ScrollBw,
/// RatechangeFast, RatechangeSlow.
enum class ClickSymbol { Pl, Pa, Sf, Sb, SSf, SSb, Rf, Rs };

inline constexpr int kNumSymbols = 8;

const char* symbol_name(ClickSymbol s);
std::string sequence_string(const std::vector<ClickSymbol>& symbols);

/// Parses a concatenated symbol string ("PlPaSSbPl") back into symbols.
/// Longest-match; throws on any residue that is not a valid token.
std::vector<ClickSymbol> tokenize(const std::string& s);

struct SymbolSequence {
  std::string session_id;
  std::string student_id;
  std::string video_id;
  std::vector<ClickSymbol> symbols;
  std::vector<double> dwell;    // seconds until the next symbol; last = 0
  std::vector<double> start;    // wall-clock of the symbol's first event
  std::vector<double> rate;     // playrate in effect during the dwell
  std::vector<bool> playing;    // player state during the dwell
  bool ends_with_auto_pause = false;
};

/// Rf when the rate increased, Rs when it decreased. Equal rates emit no
/// symbol; callers skip the event.
ClickSymbol classify_ratechange(double prev_rate, double new_rate);

struct EncodeOptions {
  double scroll_window = 1.0;  // seconds between seeks that form a scroll
  // Pairwise chains each seek to its predecessor; FirstSeek measures every
  // seek in the run against the run's first one.
  enum class ScrollAnchor { Pairwise, FirstSeek } anchor = ScrollAnchor::Pairwise;
  double end_pause_eps = 1.0;
};

/// Encodes a session into the 8-symbol sequence. Seeks to the same position
/// and no-op rate changes emit nothing; maximal runs of >=2 same-direction
/// seeks within the scroll window collapse to one scroll symbol carrying the
/// run's first timestamp. Throws when nothing is encodable.
SymbolSequence encode_session(const VideoSession& session, const EncodeOptions& opts = {});

std::vector<SymbolSequence> encode_sessions(const std::vector<VideoSession>& sessions,
                                            const EncodeOptions& opts = {});

}  // namespace clickmine
