#pragma once

// First-order stochastic dominance and likelihood-ratio checks between two
// effort rows of a conditional distribution, plus an exponential-tilt family
// generator that is ordered in the likelihood ratio by construction.

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "contractlab/model.hpp"

namespace contractlab {

struct OrderWitness {
  std::size_t a = 0;  // grid indices involved
  std::size_t b = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  std::string note;
};

struct OrderReport {
  bool holds = false;
  bool strict_somewhere = false;
  std::optional<OrderWitness> witness;
};

namespace detail {

inline void check_pair(const ConditionalDistribution& d, std::size_t lo, std::size_t hi) {
  if (!(lo < hi) || hi >= d.efforts())
    throw std::out_of_range(concat("effort pair (", lo, ", ", hi, ") invalid"));
}

// P[X > x_j] for every j.
inline std::vector<double> survival(const std::vector<double>& row) {
  std::vector<double> s(row.size(), 0.0);
  double acc = 0.0;
  for (std::size_t j = row.size(); j-- > 0;) {
    s[j] = acc;
    acc += row[j];
  }
  return s;
}

}  // namespace detail

// Row `hi` dominates row `lo` iff its survival function is weakly larger at
// every grid point and strictly larger somewhere.
inline OrderReport check_fosd(const ConditionalDistribution& d, std::size_t lo, std::size_t hi) {
  detail::check_pair(d, lo, hi);
  const auto s_lo = detail::survival(d.rows[lo]);
  const auto s_hi = detail::survival(d.rows[hi]);
  OrderReport rep;
  std::optional<OrderWitness> strict_site;
  for (std::size_t j = 0; j < s_lo.size(); ++j) {
    if (s_hi[j] < s_lo[j] - kProbabilityTolerance) {
      rep.holds = false;
      rep.witness = OrderWitness{j, j, s_hi[j], s_lo[j], "survival of higher effort below lower effort"};
      return rep;
    }
    if (!strict_site && s_hi[j] > s_lo[j] + kProbabilityTolerance)
      strict_site = OrderWitness{j, j, s_hi[j], s_lo[j], "strict dominance site"};
  }
  rep.strict_somewhere = strict_site.has_value();
  rep.holds = rep.strict_somewhere;
  if (rep.holds) {
    rep.witness = strict_site;
  } else {
    rep.witness = OrderWitness{0, 0, s_hi[0], s_lo[0], "no strict dominance site"};
  }
  return rep;
}

// Weak likelihood-ratio order in cross-product form, so zero cells follow the
// a/0 = infinity convention without dividing. For every pair y < x (grid
// indices b < a): f(y|lo) f(x|hi) >= f(y|hi) f(x|lo). The witness is the first
// violating pair in (b, a) order.
inline OrderReport check_mlrp(const ConditionalDistribution& d, std::size_t lo, std::size_t hi) {
  detail::check_pair(d, lo, hi);
  const auto& f = d.rows[lo];
  const auto& g = d.rows[hi];
  const std::size_t n = f.size();
  OrderReport rep;
  rep.holds = true;
  rep.strict_somewhere = n >= 2;
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t a = b + 1; a < n; ++a) {
      const double lhs = f[b] * g[a];
      const double rhs = g[b] * f[a];
      if (lhs < rhs - kProbabilityTolerance * kProbabilityTolerance) {
        rep.holds = false;
        rep.strict_somewhere = false;
        rep.witness = OrderWitness{b, a, lhs, rhs, "likelihood ratio decreases"};
        return rep;
      }
      if (!(lhs > rhs)) rep.strict_somewhere = false;
    }
  }
  return rep;
}

// Strict MLRP: every cross product strictly ordered.
inline bool check_strict_mlrp(const ConditionalDistribution& d, std::size_t lo, std::size_t hi) {
  const auto rep = check_mlrp(d, lo, hi);
  return rep.holds && rep.strict_somewhere;
}

// Independent route for positive rows: the likelihood ratio sequence
// L_j = f(x_j|hi) / f(x_j|lo) is non-decreasing.
inline bool check_mlrp_by_ratio(const ConditionalDistribution& d, std::size_t lo, std::size_t hi) {
  detail::check_pair(d, lo, hi);
  const auto& f = d.rows[lo];
  const auto& g = d.rows[hi];
  for (double p : f)
    if (!(p > 0.0)) throw std::domain_error("ratio form needs strictly positive rows");
  double prev = g[0] / f[0];
  for (std::size_t j = 1; j < f.size(); ++j) {
    const double r = g[j] / f[j];
    if (r < prev * (1.0 - 1e-12)) return false;
    prev = r;
  }
  return true;
}

// Implication harness: true iff (not MLRP) or FOSD.
inline bool check_mlrp_implies_fosd(const ConditionalDistribution& d, std::size_t lo, std::size_t hi) {
  return !check_mlrp(d, lo, hi).holds || check_fosd(d, lo, hi).holds;
}

// Diagnostic only: second differences (in index) of G_j / F_j, where F and G
// are the CDFs of the lower and higher effort rows.
struct CdfRatioDiagnostic {
  std::vector<double> ratio;
  std::vector<double> second_differences;
  bool convex = true;
};

inline CdfRatioDiagnostic cdf_ratio_diagnostic(const ConditionalDistribution& d, std::size_t lo,
                                               std::size_t hi) {
  detail::check_pair(d, lo, hi);
  CdfRatioDiagnostic out;
  double F = 0.0, G = 0.0;
  for (std::size_t j = 0; j < d.outcomes(); ++j) {
    F += d(lo, j);
    G += d(hi, j);
    if (F <= 0.0) throw std::domain_error("cdf ratio needs full support");
    out.ratio.push_back(G / F);
  }
  for (std::size_t j = 1; j + 1 < out.ratio.size(); ++j) {
    const double dd = out.ratio[j + 1] - 2.0 * out.ratio[j] + out.ratio[j - 1];
    out.second_differences.push_back(dd);
    if (dd < -1e-12) out.convex = false;
  }
  return out;
}

// Row for effort e proportional to base_j * exp(tilt * e * x_j / M). Rows are
// normalized in log space. base defaults to uniform weights.
inline ConditionalDistribution make_mlrp_family(const ProfitGrid& grid, const EffortGrid& effort,
                                                double tilt, std::vector<double> base = {}) {
  if (!(tilt > 0.0) || !std::isfinite(tilt)) throw std::invalid_argument("tilt must be > 0");
  if (effort.levels.empty() || grid.size() < 2) throw std::invalid_argument("empty grid");
  const double emax = std::max(std::abs(effort.levels.front()), std::abs(effort.levels.back()));
  if (tilt * emax >= 700.0) throw std::overflow_error("tilt * e_max must stay below 700");
  if (base.empty()) base.assign(grid.size(), 1.0);
  if (base.size() != grid.size()) throw std::invalid_argument("base weights not aligned with grid");
  for (double w : base)
    if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("base weights must be > 0");

  const double M = grid.max();
  ConditionalDistribution out;
  for (double e : effort.levels) {
    std::vector<double> logw(grid.size());
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < grid.size(); ++j) {
      logw[j] = std::log(base[j]) + tilt * e * grid[j] / M;
      mx = std::max(mx, logw[j]);
    }
    std::vector<double> row(grid.size());
    double sum = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      row[j] = std::exp(logw[j] - mx);
      sum += row[j];
    }
    for (double& p : row) p /= sum;
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace contractlab
