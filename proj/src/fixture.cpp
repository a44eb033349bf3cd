#include <cmath>
#include <sstream>

#include "raftlab/prng.hpp"
#include "raftlab/sim.hpp"

namespace raftlab {

namespace {

std::string shell_quote(std::string_view s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  out += '\'';
  return out;
}

// Probability as a threshold on a uniform 32-bit draw.
std::uint64_t threshold(double p) {
  if (p <= 0.0) return 0;
  if (p >= 1.0) return std::uint64_t{1} << 32;
  return static_cast<std::uint64_t>(std::floor(p * 4294967296.0));
}

}  // namespace

std::string fixture_script(const Scenario& scenario) {
  scenario.suite.validate();
  const auto& tests = scenario.suite.tests;
  std::ostringstream sh;
  sh << "#!/bin/sh\n"
        "# Fake test suite generated by `raftlab fixture` for project "
     << shell_quote(scenario.project_name)
     << ".\n"
        "# Reads RAFT_SEED, RAFT_CONFIG_ID and RAFT_RUN_INDEX; prints a native report\n"
        "# (STATUS<TAB>test_id[<TAB>failure_kind]) on stdout. Exit status: 0 all pass,\n"
        "# 1 some test failed, 137 simulated crash (no report).\n"
        "seed=${RAFT_SEED:-0}\n"
        "run=${RAFT_RUN_INDEX:-0}\n"
        "seed=$(( seed & 4294967295 ))\n"
        "\n"
        "# xorshift32 rounds with a multiplicative finaliser over a per-draw key.\n"
        "draw() {\n"
        "  x=$(( ((seed ^ salt) + run * 2654435769 + $1 * 2246822507) & 4294967295 ))\n"
        "  for _ in 1 2 3 4; do\n"
        "    x=$(( x ^ ((x << 13) & 4294967295) ))\n"
        "    x=$(( x ^ (x >> 17) ))\n"
        "    x=$(( x ^ ((x << 5) & 4294967295) ))\n"
        "    x=$(( (x * 1597334677) & 4294967295 ))\n"
        "  done\n"
        "}\n"
        "\n"
        "case \"$RAFT_CONFIG_ID\" in\n";
  for (const auto& c : scenario.configs) {
    const std::uint64_t salt = fnv1a64(c.id.data(), c.id.size()) & 0xFFFFFFFFULL;
    const double cat = scenario.suite.catastrophic_prob.count(c.id)
                           ? scenario.suite.catastrophic_prob.at(c.id)
                           : 0.0;
    sh << "  " << shell_quote(c.id) << ")\n    salt=" << salt << "; crash=" << threshold(cat);
    for (std::size_t i = 0; i < tests.size(); ++i) {
      double p = 0.0;
      if (auto k = tests[i].fail_count.find(c.id); k != tests[i].fail_count.end())
        p = static_cast<double>(k->second) / static_cast<double>(scenario.runs_per_config);
      else if (auto f = tests[i].fail_prob.find(c.id); f != tests[i].fail_prob.end())
        p = f->second;
      sh << "; t" << i << '=' << threshold(p);
    }
    sh << " ;;\n";
  }
  sh << "  *)\n    echo \"unknown RAFT_CONFIG_ID '$RAFT_CONFIG_ID'\" >&2\n    exit 2 ;;\n"
        "esac\n"
        "\n"
        "draw 0\n"
        "if [ \"$x\" -lt \"$crash\" ]; then exit 137; fi\n"
        "failed=0\n";
  for (std::size_t i = 0; i < tests.size(); ++i) {
    const std::string id = shell_quote(tests[i].test_id);
    sh << "draw " << (i + 1) << "\nif [ \"$x\" -lt \"$t" << i
       << "\" ]; then\n  printf 'FAIL\\t%s\\tSimulatedFailure\\n' " << id
       << "\n  failed=1\nelse\n  printf 'PASS\\t%s\\n' " << id << "\nfi\n";
  }
  sh << "exit $failed\n";
  return sh.str();
}

}  // namespace raftlab
