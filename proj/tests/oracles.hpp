#pragma once

// Independent reference implementations and random generators shared by
// the unit tests and the acceptance binary. Deliberately written differently
// from the library code they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "raftlab/records.hpp"
#include "raftlab/stats.hpp"

namespace raftlab::testing {

inline bool close_rel(double got, double want, double rel) {
  if (got == want) return true;
  const double scale = std::max(std::fabs(got), std::fabs(want));
  return std::fabs(got - want) <= rel * scale;
}

// Sum over cells of (O - E)^2 / E with E from the margins; p from erfc.
inline ChiSquareResult oracle_chi2(const ContingencyTable& t) {
  const double o[2][2] = {{double(t.baseline_fail), double(t.baseline_pass)},
                          {double(t.throttled_fail), double(t.throttled_pass)}};
  const double row[2] = {o[0][0] + o[0][1], o[1][0] + o[1][1]};
  const double col[2] = {o[0][0] + o[1][0], o[0][1] + o[1][1]};
  const double n = row[0] + row[1];
  if (col[0] == 0 || col[1] == 0) return {0.0, 1.0};
  long double x = 0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const long double e = (long double)row[i] * col[j] / n;
      x += (o[i][j] - e) * (o[i][j] - e) / e;
    }
  const double stat = static_cast<double>(x);
  return {stat, stat > 0 ? std::erfc(std::sqrt(stat / 2.0)) : 1.0};
}

// adjusted_i = min over j with p_j >= p_i of (m / r_j) * p_j, capped at 1,
// where r_j counts the p-values <= p_j.
inline std::vector<double> oracle_bh(const std::vector<double>& p) {
  const std::size_t m = p.size();
  std::vector<double> out(m, 1.0);
  for (std::size_t i = 0; i < m; ++i) {
    double best = 1.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (p[j] < p[i]) continue;
      std::size_t rank = 0;
      for (std::size_t k = 0; k < m; ++k) rank += p[k] <= p[j];
      best = std::min(best, static_cast<double>(m) / static_cast<double>(rank) * p[j]);
    }
    out[i] = best;
  }
  return out;
}

// Tables with both groups non-empty and totals up to max_total. Some draws
// are made degenerate on purpose.
inline ContingencyTable random_table(std::mt19937_64& rng, std::int64_t max_total) {
  std::uniform_int_distribution<std::int64_t> total(2, max_total);
  const std::int64_t n = total(rng);
  const std::int64_t n1 = std::uniform_int_distribution<std::int64_t>(1, n - 1)(rng);
  const std::int64_t n2 = n - n1;
  const int shape = static_cast<int>(rng() % 8);
  auto fails = [&](std::int64_t size) {
    switch (shape) {
      case 0: return std::int64_t{0};
      case 1: return size;
      default: return std::uniform_int_distribution<std::int64_t>(0, size)(rng);
    }
  };
  const std::int64_t f1 = fails(n1), f2 = fails(n2);
  return {f1, n1 - f1, f2, n2 - f2};
}

// Lengths 1..max_len; mixes uniform draws, tiny values, exact ties, 0 and 1.
inline std::vector<double> random_pvalues(std::mt19937_64& rng, std::size_t max_len) {
  const std::size_t n = 1 + rng() % max_len;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(n);
  for (auto& x : p) {
    switch (rng() % 10) {
      case 0: x = 0.0; break;
      case 1: x = 1.0; break;
      case 2: x = std::pow(10.0, -20.0 * u(rng)); break;
      case 3: x = std::round(u(rng) * 20.0) / 20.0; break;  // frequent ties
      default: x = u(rng);
    }
  }
  if (n > 1 && rng() % 4 == 0) p[n - 1] = p[0];
  return p;
}

// Random dataset: every config gets `runs` Valid runs of `tests` tests with
// a per-(test, config) failure probability; some tests are skipped in some
// runs.
inline std::vector<RunRecord> random_records(std::mt19937_64& rng,
                                             const std::vector<std::string>& configs,
                                             int tests, int runs) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> prob(static_cast<std::size_t>(tests),
                                        std::vector<double>(configs.size()));
  for (auto& row : prob)
    for (auto& p : row) {
      const auto r = rng() % 5;
      p = r == 0 ? 0.0 : r == 1 ? u(rng) : 0.3 * u(rng);
    }
  std::vector<RunRecord> out;
  for (std::size_t c = 0; c < configs.size(); ++c)
    for (int i = 0; i < runs; ++i) {
      RunRecord r;
      r.project_name = "rand";
      r.config_id = configs[c];
      r.run_index = i;
      r.duration_seconds = 1.0 + u(rng);
      for (int t = 0; t < tests; ++t) {
        if (rng() % 20 == 0) continue;
        TestOutcome o;
        o.test_id = "t" + std::to_string(t);
        o.status = u(rng) < prob[static_cast<std::size_t>(t)][c] ? TestStatus::Fail : TestStatus::Pass;
        r.outcomes.push_back(o);
      }
      if (r.outcomes.empty()) r.outcomes.push_back({"t0", TestStatus::Pass, {}, {}});
      out.push_back(std::move(r));
    }
  return out;
}

// Inclusive bounds of the central 99% of Binomial(n, p): the 0.5% and 99.5%
// quantiles (smallest k whose CDF reaches the level).
inline std::pair<std::int64_t, std::int64_t> binomial_99(std::int64_t n, double p) {
  std::vector<double> cdf(static_cast<std::size_t>(n + 1));
  double acc = 0.0;
  for (std::int64_t k = 0; k <= n; ++k) {
    const double logpmf = std::lgamma(double(n) + 1) - std::lgamma(double(k) + 1) -
                          std::lgamma(double(n - k) + 1) +
                          (k ? k * std::log(p) : 0.0) + (n - k ? (n - k) * std::log1p(-p) : 0.0);
    acc += std::exp(logpmf);
    cdf[static_cast<std::size_t>(k)] = acc;
  }
  auto quantile = [&](double q) {
    for (std::int64_t k = 0; k <= n; ++k)
      if (cdf[static_cast<std::size_t>(k)] >= q) return k;
    return n;
  };
  return {quantile(0.005), quantile(0.995)};
}

}  // namespace raftlab::testing
