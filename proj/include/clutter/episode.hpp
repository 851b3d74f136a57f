#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include "clutter/prng.hpp"
#include "clutter/scene_graph.hpp"

namespace clutter {

// One environment transition as recorded for replay. Generation actions use
// a (rule index, -1); exploration actions use (pick id, place id).
struct EpisodeStep {
  std::uint64_t obs_digest = 0;  // digest of the observation acted on
  int a = 0;
  int b = -1;
  double reward = 0.0;
  bool done = false;
};

struct EpisodeRecord {
  std::string env;  // "gen" or "exp"
  std::uint64_t seed = 0;
  std::uint64_t config_digest = 0;
  std::uint64_t final_digest = 0;  // observation after the last step
  std::vector<EpisodeStep> steps;

  double total_reward() const {
    double r = 0.0;
    for (const EpisodeStep& s : steps) r += s.reward;
    return r;
  }
};

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

inline std::uint64_t parse_hex64(const std::string& s) {
  return static_cast<std::uint64_t>(std::strtoull(s.c_str(), nullptr, 16));
}

inline std::string serialize(const EpisodeRecord& r) {
  std::ostringstream out;
  out << "episode 1\n";
  out << "env " << r.env << "\n";
  out << "seed " << r.seed << "\n";
  out << "config " << hex64(r.config_digest) << "\n";
  out << "final " << hex64(r.final_digest) << "\n";
  for (const EpisodeStep& s : r.steps)
    out << "step " << hex64(s.obs_digest) << " " << s.a << " " << s.b << " "
        << format_double(s.reward) << " " << (s.done ? 1 : 0) << "\n";
  out << "end\n";
  return out.str();
}

inline EpisodeRecord deserialize_episode(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  EpisodeRecord r;
  bool header = false, closed = false;
  while (std::getline(in, line)) {
    std::vector<std::string> tok = split_ws(line);
    if (tok.empty()) continue;
    if (!header) {
      if (tok.size() != 2 || tok[0] != "episode" || tok[1] != "1")
        throw ParseError("episode: bad header");
      header = true;
      continue;
    }
    if (tok[0] == "env" && tok.size() == 2) {
      r.env = tok[1];
    } else if (tok[0] == "seed" && tok.size() == 2) {
      r.seed = std::strtoull(tok[1].c_str(), nullptr, 10);
    } else if (tok[0] == "config" && tok.size() == 2) {
      r.config_digest = parse_hex64(tok[1]);
    } else if (tok[0] == "final" && tok.size() == 2) {
      r.final_digest = parse_hex64(tok[1]);
    } else if (tok[0] == "step" && tok.size() == 6) {
      EpisodeStep s;
      s.obs_digest = parse_hex64(tok[1]);
      s.a = std::atoi(tok[2].c_str());
      s.b = std::atoi(tok[3].c_str());
      s.reward = std::strtod(tok[4].c_str(), nullptr);
      s.done = tok[5] == "1";
      r.steps.push_back(s);
    } else if (tok[0] == "end" && tok.size() == 1) {
      closed = true;
    } else {
      throw ParseError("episode: bad line '" + line + "'");
    }
  }
  if (!closed) throw ParseError("episode: missing end");
  return r;
}

}  // namespace clutter
