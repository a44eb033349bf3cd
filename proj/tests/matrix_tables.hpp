#pragma once

// The published Phase I and Phase II matrices, transcribed once and shared
// by the unit tests and the acceptance binary.

#include <cstdio>
#include <iterator>
#include <string>
#include <vector>

#include "raftlab/plan.hpp"

namespace raftlab::testing {

// -1 marks an empty cell, which inherits the baseline's 4 cores / 16 GiB /
// unrestricted disk and network.
struct Phase1Row {
  const char* id;
  double cpu;
  double mem;
  bool disk;
  bool net;
};
inline constexpr Phase1Row kPhase1[] = {
    {"baseline", 4, 16, false, false}, {"C", 0.1, -1, false, false},
    {"M", -1, 0.5, false, false},      {"D", -1, -1, true, false},
    {"N", -1, -1, false, true},        {"CM", 0.1, 0.5, false, false},
    {"CN", 0.1, -1, false, true},      {"MN", -1, 0.5, false, true},
    {"CD", 0.1, -1, true, false},      {"MD", -1, 0.5, true, false},
    {"DN", -1, -1, true, true},        {"CMN", 0.1, 0.5, false, true},
    {"CMD", 0.1, 0.5, true, false},    {"CDN", 0.1, -1, true, true},
    {"MDN", -1, 0.5, true, true},      {"CMDN", 0.1, 0.5, true, true},
};
inline const DiskLimit kPhase1Disk{50, 100};
inline const NetworkLimit kPhase1Network{1500, 512};

struct Phase2Row {
  double cpu;
  double mem;
  double spot;
  double ondemand;
};
inline constexpr Phase2Row kPhase2[] = {
    {0.1, 1, 0.002548, 0.008493},  {0.1, 2, 0.003881, 0.012938}, {0.25, 2, 0.005703, 0.019010},
    {0.5, 2, 0.008739, 0.029130},  {0.5, 4, 0.011406, 0.038020}, {1, 4, 0.017478, 0.058260},
    {1, 8, 0.022812, 0.076040},    {2, 4, 0.029622, 0.098740},   {2, 8, 0.034956, 0.116520},
    {2, 16, 0.045624, 0.152080},   {4, 8, 0.059244, 0.197480},   {4, 16, 0.069912, 0.233040},
};

inline std::string phase2_id(std::size_t row) {
  char id[32];
  std::snprintf(id, sizeof id, "aws-%02zu", row + 1);
  return id;
}

// Every cell where the built-in matrices disagree with the tables.
inline std::vector<std::string> matrix_mismatches() {
  std::vector<std::string> out;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) out.push_back(what);
  };
  const auto p1 = builtin_phase1();
  check(p1.size() == std::size(kPhase1), "phase1 row count");
  for (std::size_t i = 0; i < std::min(p1.size(), std::size(kPhase1)); ++i) {
    const auto& c = p1[i];
    const auto& r = kPhase1[i];
    const std::string at = std::string("phase1 ") + r.id + ": ";
    check(c.id == r.id, at + "id");
    check(c.baseline == (i == 0), at + "baseline flag");
    check(c.cpu_limit == (r.cpu < 0 ? 4.0 : r.cpu), at + "cpu");
    check(c.memory_limit_gib == (r.mem < 0 ? 16.0 : r.mem), at + "memory");
    check(r.disk ? c.disk_limit == kPhase1Disk : !c.disk_limit, at + "disk");
    check(r.net ? c.network_limit == kPhase1Network : !c.network_limit, at + "network");
    check(!c.pricing, at + "pricing");
  }
  const auto p2 = builtin_phase2();
  check(p2.size() == std::size(kPhase2), "phase2 row count");
  for (std::size_t i = 0; i < std::min(p2.size(), std::size(kPhase2)); ++i) {
    const auto& c = p2[i];
    const auto& r = kPhase2[i];
    const std::string at = "phase2 row " + std::to_string(i + 1) + ": ";
    check(c.id == phase2_id(i), at + "id");
    check(c.baseline == (i + 1 == std::size(kPhase2)), at + "baseline flag");
    check(c.cpu_limit == r.cpu, at + "cpu");
    check(c.memory_limit_gib == r.mem, at + "memory");
    check(!c.disk_limit && !c.network_limit, at + "disk/network");
    check(c.pricing && c.pricing->spot_usd_per_hour == r.spot, at + "spot price");
    check(c.pricing && c.pricing->ondemand_usd_per_hour == r.ondemand, at + "on-demand price");
  }
  return out;
}

}  // namespace raftlab::testing
