#include "raftlab/sim.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "raftlab/error.hpp"
#include "raftlab/prng.hpp"

namespace raftlab {

namespace {

// 2020-01-01T00:00:00Z; simulated runs start here and follow back to back.
constexpr std::int64_t kSimEpochMillis = 1577836800000;

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

void SyntheticSuite::validate() const {
  if (tests.empty()) throw ValidationError("synthetic suite has no tests");
  if (duration_model.empty()) throw ValidationError("synthetic suite declares no configs");
  std::set<std::string> ids;
  for (const auto& [config, d] : duration_model) {
    if (!(std::isfinite(d.mean_seconds) && d.mean_seconds > 0.0))
      throw ValidationError("duration_model['" + config + "'].mean_seconds must be > 0");
    if (!(d.jitter_fraction >= 0.0 && d.jitter_fraction < 1.0))
      throw ValidationError("duration_model['" + config + "'].jitter_fraction must be in [0, 1)");
  }
  auto known = [&](const std::string& config) { return duration_model.count(config) != 0; };
  for (const auto& [config, p] : catastrophic_prob) {
    if (!known(config)) throw ValidationError("catastrophic_prob names unknown config '" + config + "'");
    if (!is_probability(p))
      throw ValidationError("catastrophic_prob['" + config + "'] must be in [0, 1]");
  }
  for (const auto& t : tests) {
    if (t.test_id.empty()) throw ValidationError("synthetic test with empty test_id");
    if (!ids.insert(t.test_id).second)
      throw ValidationError("duplicate synthetic test '" + t.test_id + "'");
    for (const auto& [config, p] : t.fail_prob) {
      if (!known(config))
        throw ValidationError("test '" + t.test_id + "' names unknown config '" + config + "'");
      if (!is_probability(p))
        throw ValidationError("test '" + t.test_id + "' fail_prob for '" + config +
                              "' must be in [0, 1]");
    }
    for (const auto& [config, k] : t.fail_count) {
      if (!known(config))
        throw ValidationError("test '" + t.test_id + "' names unknown config '" + config + "'");
      if (k < 0)
        throw ValidationError("test '" + t.test_id + "' fail_count must be non-negative");
    }
  }
}

std::vector<RunRecord> simulate_runs(const SyntheticSuite& suite, const std::string& config_id,
                                     std::int64_t n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("simulate_runs needs n >= 1");
  auto dm = suite.duration_model.find(config_id);
  if (dm == suite.duration_model.end())
    throw ValidationError("unknown config_id '" + config_id + "' for synthetic suite");
  const DurationModel duration = dm->second;
  const double cat_p = suite.catastrophic_prob.count(config_id)
                           ? suite.catastrophic_prob.at(config_id)
                           : 0.0;

  struct Slot {
    const SyntheticTest* test;
    bool exact;
    double prob;
    std::int64_t count;
  };
  std::vector<Slot> slots;
  for (const auto& t : suite.tests) {
    if (auto c = t.fail_count.find(config_id); c != t.fail_count.end()) {
      slots.push_back({&t, true, 0.0, c->second});
    } else if (auto p = t.fail_prob.find(config_id); p != t.fail_prob.end()) {
      slots.push_back({&t, false, p->second, 0});
    } else {
      throw ValidationError("test '" + t.test_id + "' has no behaviour for config '" + config_id +
                            "'");
    }
  }

  Xoshiro256 rng(seed);
  std::vector<RunRecord> runs(static_cast<std::size_t>(n));
  std::vector<std::size_t> valid;
  std::int64_t clock = kSimEpochMillis;
  for (std::int64_t i = 0; i < n; ++i) {
    RunRecord& r = runs[static_cast<std::size_t>(i)];
    r.project_name = suite.project_name;
    r.config_id = config_id;
    r.run_index = i;
    const bool catastrophic = rng.uniform() < cat_p;
    r.duration_seconds =
        duration.mean_seconds * (1.0 + duration.jitter_fraction * (2.0 * rng.uniform() - 1.0));
    r.started_at = Timestamp{clock};
    clock += std::llround(r.duration_seconds * 1000.0);
    r.outcomes.reserve(slots.size());
    for (const auto& s : slots) {
      TestOutcome o;
      o.test_id = s.test->test_id;
      if (!s.exact && rng.uniform() < s.prob) {
        o.status = TestStatus::Fail;
        o.failure_kind = "SimulatedFailure";
      }
      r.outcomes.push_back(std::move(o));
    }
    if (catastrophic) {
      r.validity = Validity::Catastrophic;
      r.exit_code = 137;
      r.outcomes.clear();
    } else {
      valid.push_back(static_cast<std::size_t>(i));
    }
  }

  for (std::size_t slot = 0; slot < slots.size(); ++slot) {
    const auto& s = slots[slot];
    if (!s.exact) continue;
    std::vector<std::size_t> pool = valid;
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(s.count), pool.size());
    for (std::size_t j = 0; j < k; ++j) {
      std::swap(pool[j], pool[j + rng.below(pool.size() - j)]);
      auto& o = runs[pool[j]].outcomes[slot];
      o.status = TestStatus::Fail;
      o.failure_kind = "SimulatedFailure";
    }
  }

  for (auto& r : runs) {
    if (!r.valid()) continue;
    const bool failed = std::any_of(r.outcomes.begin(), r.outcomes.end(),
                                    [](const TestOutcome& o) { return o.status == TestStatus::Fail; });
    r.exit_code = failed ? 1 : 0;
  }
  return runs;
}

void CurveParams::validate() const {
  if (!(is_probability(floor) && is_probability(ceiling) && floor <= ceiling))
    throw ValidationError("curve needs 0 <= floor <= ceiling <= 1");
  if (!(std::isfinite(steepness) && steepness > 0.0))
    throw ValidationError("curve steepness must be > 0");
  if (!std::isfinite(midpoint)) throw ValidationError("curve midpoint must be finite");
}

double raft_curve(double resource_level, const CurveParams& p) {
  if (!(resource_level >= 0.0 && resource_level <= 1.0))
    throw DomainError("resource level must lie in [0, 1]");
  p.validate();
  auto logistic = [&](double level) { return 1.0 / (1.0 + std::exp(p.steepness * (level - p.midpoint))); };
  const double top = logistic(0.0);
  const double bottom = logistic(1.0);
  double shape = (logistic(resource_level) - bottom) / (top - bottom);
  if (!std::isfinite(shape)) shape = resource_level < p.midpoint ? 1.0 : 0.0;
  shape = std::clamp(shape, 0.0, 1.0);
  return std::clamp(p.floor + (p.ceiling - p.floor) * shape, p.floor, p.ceiling);
}

double resource_level(const ThrottleConfig& config, const ThrottleConfig& baseline,
                      const std::vector<std::string>& resources) {
  auto ratio = [](const std::optional<double>& limit, const std::optional<double>& reference) {
    if (!limit) return 1.0;
    if (!reference) return 0.0;
    return std::clamp(*limit / *reference, 0.0, 1.0);
  };
  double level = 1.0;
  for (const auto& r : resources) {
    double l;
    if (r == "cpu")
      l = ratio(config.cpu_limit, baseline.cpu_limit);
    else if (r == "memory")
      l = ratio(config.memory_limit_gib, baseline.memory_limit_gib);
    else if (r == "disk")
      l = !config.disk_limit ? 1.0
          : !baseline.disk_limit
              ? 0.0
              : std::clamp(config.disk_limit->iops / baseline.disk_limit->iops, 0.0, 1.0);
    else if (r == "network")
      l = !config.network_limit ? 1.0
          : !baseline.network_limit
              ? 0.0
              : std::clamp(config.network_limit->download_kbps /
                               baseline.network_limit->download_kbps,
                           0.0, 1.0);
    else
      throw ValidationError("unknown resource '" + r + "' (expected cpu, memory, disk, network)");
    level = std::min(level, l);
  }
  return level;
}

const ThrottleConfig& Scenario::baseline() const {
  for (const auto& c : configs)
    if (c.baseline) return c;
  throw ValidationError("scenario has no baseline configuration");
}

std::uint64_t config_stream_seed(std::uint64_t seed, const std::string& config_id) {
  return derive_seed(seed, fnv1a64(config_id.data(), config_id.size()));
}

std::vector<RunRecord> simulate_dataset(const Scenario& scenario, std::uint64_t seed) {
  std::vector<RunRecord> all;
  all.reserve(scenario.configs.size() * static_cast<std::size_t>(scenario.runs_per_config));
  for (const auto& c : scenario.configs) {
    auto runs = simulate_runs(scenario.suite, c.id, scenario.runs_per_config,
                              config_stream_seed(seed, c.id));
    all.insert(all.end(), std::make_move_iterator(runs.begin()), std::make_move_iterator(runs.end()));
  }
  return all;
}

std::vector<std::string> affected_tests(const Scenario& scenario) {
  const std::string& base = scenario.baseline().id;
  auto behaviour = [](const SyntheticTest& t, const std::string& config) {
    if (auto c = t.fail_count.find(config); c != t.fail_count.end())
      return std::pair<bool, double>{true, static_cast<double>(c->second)};
    auto p = t.fail_prob.find(config);
    return std::pair<bool, double>{false, p == t.fail_prob.end() ? -1.0 : p->second};
  };
  std::vector<std::string> out;
  for (const auto& t : scenario.suite.tests) {
    const auto ref = behaviour(t, base);
    for (const auto& c : scenario.configs) {
      if (c.id == base) continue;
      if (behaviour(t, c.id) != ref) {
        out.push_back(t.test_id);
        break;
      }
    }
  }
  return out;
}

MonteCarloSummary monte_carlo(const Scenario& scenario, std::int64_t repetitions,
                              std::uint64_t base_seed, unsigned threads) {
  if (repetitions < 1) throw ValidationError("monte_carlo needs repetitions >= 1");
  scenario.suite.validate();
  scenario.params.validate();

  struct RepResult {
    std::int64_t flaky_baseline = 0;
    std::int64_t flaky_any = 0;
    std::vector<std::string> rafts;
  };
  std::vector<RepResult> results(static_cast<std::size_t>(repetitions));
  auto work = [&](std::int64_t first, std::int64_t stride) {
    for (std::int64_t r = first; r < repetitions; r += stride) {
      const auto records = simulate_dataset(scenario, base_seed + static_cast<std::uint64_t>(r));
      auto& out = results[static_cast<std::size_t>(r)];
      for (const auto& v : classify_rafts(records, scenario.params)) {
        out.flaky_baseline += v.is_flaky_baseline;
        out.flaky_any += v.is_flaky_any;
        if (v.is_raft) out.rafts.push_back(v.test_id);
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::int64_t>(threads, repetitions));
  if (threads <= 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (unsigned w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        try {
          work(w, threads);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  const auto affected_list = affected_tests(scenario);
  const std::set<std::string> affected(affected_list.begin(), affected_list.end());
  MonteCarloSummary s;
  s.repetitions = repetitions;
  s.affected_tests = static_cast<std::int64_t>(affected.size());
  s.unaffected_tests = static_cast<std::int64_t>(scenario.suite.tests.size()) - s.affected_tests;
  std::int64_t true_hits = 0, false_hits = 0, rafts = 0, fb = 0, fa = 0;
  for (const auto& t : scenario.suite.tests) s.raft_hits[t.test_id] = 0;
  for (const auto& r : results) {
    fb += r.flaky_baseline;
    fa += r.flaky_any;
    rafts += static_cast<std::int64_t>(r.rafts.size());
    for (const auto& id : r.rafts) {
      ++s.raft_hits[id];
      (affected.count(id) ? true_hits : false_hits) += 1;
    }
  }
  const double reps = static_cast<double>(repetitions);
  if (s.affected_tests > 0) s.raft_rate = true_hits / (reps * s.affected_tests);
  if (s.unaffected_tests > 0) s.false_raft_rate = false_hits / (reps * s.unaffected_tests);
  s.mean_flaky_baseline = fb / reps;
  s.mean_flaky_any = fa / reps;
  s.mean_rafts = rafts / reps;
  return s;
}

}  // namespace raftlab
