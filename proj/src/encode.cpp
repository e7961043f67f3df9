#include "clickmine/encode.hpp"

#include <cmath>
#include <stdexcept>

namespace clickmine {

const char* symbol_name(ClickSymbol s) {
  switch (s) {
    case ClickSymbol::Pl: return "Pl";
    case ClickSymbol::Pa: return "Pa";
    case ClickSymbol::Sf: return "Sf";
    case ClickSymbol::Sb: return "Sb";
    case ClickSymbol::SSf: return "SSf";
    case ClickSymbol::SSb: return "SSb";
    case ClickSymbol::Rf: return "Rf";
    case ClickSymbol::Rs: return "Rs";
  }
  return "?";
}

std::string sequence_string(const std::vector<ClickSymbol>& symbols) {
  std::string out;
  for (auto s : symbols) out += symbol_name(s);
  return out;
}

std::vector<ClickSymbol> tokenize(const std::string& s) {
  std::vector<ClickSymbol> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (s.compare(i, 3, "SSf") == 0) { out.push_back(ClickSymbol::SSf); i += 3; continue; }
    if (s.compare(i, 3, "SSb") == 0) { out.push_back(ClickSymbol::SSb); i += 3; continue; }
    if (s.compare(i, 2, "Pl") == 0) { out.push_back(ClickSymbol::Pl); i += 2; continue; }
    if (s.compare(i, 2, "Pa") == 0) { out.push_back(ClickSymbol::Pa); i += 2; continue; }
    if (s.compare(i, 2, "Sf") == 0) { out.push_back(ClickSymbol::Sf); i += 2; continue; }
    if (s.compare(i, 2, "Sb") == 0) { out.push_back(ClickSymbol::Sb); i += 2; continue; }
    if (s.compare(i, 2, "Rf") == 0) { out.push_back(ClickSymbol::Rf); i += 2; continue; }
    if (s.compare(i, 2, "Rs") == 0) { out.push_back(ClickSymbol::Rs); i += 2; continue; }
    throw std::invalid_argument("invalid symbol string at offset " + std::to_string(i) + ": " + s);
  }
  return out;
}

ClickSymbol classify_ratechange(double prev_rate, double new_rate) {
  if (!(prev_rate > 0) || !(new_rate > 0))
    throw std::invalid_argument("playrates must be positive");
  if (new_rate == prev_rate)
    throw std::invalid_argument("classify_ratechange requires a rate change");
  return new_rate > prev_rate ? ClickSymbol::Rf : ClickSymbol::Rs;
}

namespace {

struct RawToken {
  ClickSymbol sym;
  double t;
  double rate_after;
  bool playing_after;
  bool is_seek;
  double position;  // pause position (end-pause detection), else 0
};

}  // namespace

SymbolSequence encode_session(const VideoSession& session, const EncodeOptions& opts) {
  std::vector<RawToken> raw;
  double rate = 1.0;    // player default before any event
  bool playing = false;
  for (const auto& e : session.events) {
    RawToken tok{ClickSymbol::Pl, e.timestamp, 0.0, false, false, 0.0};
    bool emit = true;
    switch (e.kind) {
      case EventKind::Play:
        tok.sym = ClickSymbol::Pl;
        playing = true;
        break;
      case EventKind::Pause:
        tok.sym = ClickSymbol::Pa;
        tok.position = e.position_to.value_or(0.0);
        playing = false;
        break;
      case EventKind::Seek:
        if (*e.position_to > *e.position_from) tok.sym = ClickSymbol::Sf;
        else if (*e.position_to < *e.position_from) tok.sym = ClickSymbol::Sb;
        else emit = false;  // no navigation happened
        tok.is_seek = emit;
        break;
      case EventKind::Ratechange:
        if (e.playrate == rate) emit = false;
        else tok.sym = classify_ratechange(rate, e.playrate);
        break;
    }
    rate = e.playrate;
    if (emit) {
      tok.rate_after = rate;
      tok.playing_after = playing;
      raw.push_back(tok);
    }
  }
  if (raw.empty())
    throw std::runtime_error("empty sequence: session " + session.session_id);

  SymbolSequence seq;
  seq.session_id = session.session_id;
  seq.student_id = session.student_id;
  seq.video_id = session.video_id;

  // Collapse maximal runs of >=2 same-direction seeks inside the window.
  std::size_t i = 0;
  while (i < raw.size()) {
    const RawToken& first = raw[i];
    std::size_t j = i + 1;
    if (first.is_seek) {
      while (j < raw.size() && raw[j].is_seek && raw[j].sym == first.sym) {
        const double anchor_t = opts.anchor == EncodeOptions::ScrollAnchor::Pairwise
                                    ? raw[j - 1].t
                                    : first.t;
        if (!(raw[j].t - anchor_t < opts.scroll_window)) break;
        ++j;
      }
    }
    const std::size_t run = j - i;
    ClickSymbol sym = first.sym;
    if (first.is_seek && run >= 2)
      sym = (first.sym == ClickSymbol::Sf) ? ClickSymbol::SSf : ClickSymbol::SSb;
    const RawToken& last = raw[j - 1];
    seq.symbols.push_back(sym);
    seq.start.push_back(first.t);
    seq.rate.push_back(last.rate_after);
    seq.playing.push_back(last.playing_after);
    i = j;
  }

  seq.dwell.resize(seq.symbols.size(), 0.0);
  for (std::size_t k = 0; k + 1 < seq.symbols.size(); ++k)
    seq.dwell[k] = seq.start[k + 1] - seq.start[k];

  if (seq.symbols.back() == ClickSymbol::Pa) {
    const RawToken& last = raw.back();
    seq.ends_with_auto_pause =
        last.sym == ClickSymbol::Pa &&
        std::fabs(last.position - session.video_length) <= opts.end_pause_eps;
  }
  return seq;
}

std::vector<SymbolSequence> encode_sessions(const std::vector<VideoSession>& sessions,
                                            const EncodeOptions& opts) {
  std::vector<SymbolSequence> out;
  out.reserve(sessions.size());
  for (const auto& s : sessions) out.push_back(encode_session(s, opts));
  return out;
}

}  // namespace clickmine
