#pragma once

// One-dimensional Gaussian KDE, multi-way Jensen-Shannon divergence by
// quadrature, and correlation coefficients.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "bimanifold/errors.hpp"

namespace bimanifold {

namespace detail {

inline double sample_stddev(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (n - 1.0));
}

/// Order-independent sum: identical result for any permutation of `v`.
inline double sorted_sum(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return std::accumulate(v.begin(), v.end(), 0.0);
}

}  // namespace detail

/// Scott's rule in the power-law form h = sigma * n^(-1/5).
inline double scott_bandwidth(const std::vector<double>& samples) {
  if (samples.size() < 2) throw Error(ErrorCode::DegenerateSample, "bandwidth needs at least two samples");
  const double s = detail::sample_stddev(samples);
  if (!(s > 0.0) || !std::isfinite(s)) throw Error(ErrorCode::DegenerateSample, "samples have zero variance");
  return s * std::pow(static_cast<double>(samples.size()), -0.2);
}

class Kde1d {
 public:
  Kde1d(std::vector<double> samples, double bandwidth) : samples_(std::move(samples)), h_(bandwidth) {
    if (samples_.empty()) throw Error(ErrorCode::DegenerateSample, "KDE needs samples");
    if (!(h_ > 0.0) || !std::isfinite(h_)) throw Error(ErrorCode::InvalidArgument, "bandwidth must be positive");
    std::sort(samples_.begin(), samples_.end());
  }

  static Kde1d scott(std::vector<double> samples) {
    const double h = scott_bandwidth(samples);
    return {std::move(samples), h};
  }

  double bandwidth() const { return h_; }
  const std::vector<double>& samples() const { return samples_; }

  double operator()(double x) const {
    // Contributions beyond 40 bandwidths underflow.
    const auto lo = std::lower_bound(samples_.begin(), samples_.end(), x - 40 * h_);
    const auto hi = std::upper_bound(samples_.begin(), samples_.end(), x + 40 * h_);
    double s = 0.0;
    for (auto it = lo; it != hi; ++it) {
      const double u = (x - *it) / h_;
      s += std::exp(-0.5 * u * u);
    }
    return s / (static_cast<double>(samples_.size()) * h_ * std::sqrt(2 * std::numbers::pi));
  }

 private:
  std::vector<double> samples_;
  double h_;
};

/// Quadrature nodes: one or more disjoint uniform segments.
class Grid {
 public:
  struct Segment {
    double lo, hi;
    std::size_t n_points;
  };

  static Grid uniform(double lo, double hi, std::size_t n_points = 2048) {
    if (!(lo < hi)) throw Error(ErrorCode::InvalidArgument, "grid needs lo < hi");
    if (n_points < 16) throw Error(ErrorCode::InvalidArgument, "grid needs at least 16 points");
    Grid g;
    g.segments_.push_back({lo, hi, n_points});
    return g;
  }

  /// Covers every sample of every density by `pad` bandwidths. Distant
  /// clusters get separate segments; empty space between them is skipped.
  /// Node spacing is the finer of total_length / n_points and h_min / 8.
  static Grid covering(const std::vector<Kde1d>& kdes, std::size_t n_points = 2048, double pad = 6.0) {
    if (kdes.empty()) throw Error(ErrorCode::InvalidArgument, "no densities to cover");
    double h_max = 0.0, h_min = std::numeric_limits<double>::infinity();
    std::vector<double> pts;
    for (const Kde1d& k : kdes) {
      h_max = std::max(h_max, k.bandwidth());
      h_min = std::min(h_min, k.bandwidth());
      pts.insert(pts.end(), k.samples().begin(), k.samples().end());
    }
    std::sort(pts.begin(), pts.end());
    const double r = pad * h_max;
    std::vector<std::pair<double, double>> iv;
    for (double p : pts) {
      if (!iv.empty() && p - r <= iv.back().second) {
        iv.back().second = p + r;
      } else {
        iv.push_back({p - r, p + r});
      }
    }
    double total = 0.0;
    for (const auto& [a, b] : iv) total += b - a;
    const double dx = std::min(total / static_cast<double>(n_points), h_min / 8.0);
    Grid g;
    for (const auto& [a, b] : iv) {
      const auto n = static_cast<std::size_t>(std::ceil((b - a) / dx)) + 1;
      g.segments_.push_back({a, b, std::max<std::size_t>(n, 16)});
    }
    return g;
  }

  const std::vector<Segment>& segments() const { return segments_; }

  std::size_t size() const {
    std::size_t n = 0;
    for (const Segment& s : segments_) n += s.n_points;
    return n;
  }

  std::vector<double> nodes() const {
    std::vector<double> x;
    x.reserve(size());
    for (const Segment& s : segments_) {
      const double step = (s.hi - s.lo) / static_cast<double>(s.n_points - 1);
      for (std::size_t i = 0; i < s.n_points; ++i) x.push_back(s.lo + step * static_cast<double>(i));
    }
    return x;
  }

  /// Trapezoid rule over values given at nodes().
  double integrate(const std::vector<double>& f) const {
    double total = 0.0;
    std::size_t off = 0;
    for (const Segment& s : segments_) {
      const double step = (s.hi - s.lo) / static_cast<double>(s.n_points - 1);
      double acc = 0.5 * (f[off] + f[off + s.n_points - 1]);
      for (std::size_t i = 1; i + 1 < s.n_points; ++i) acc += f[off + i];
      total += acc * step;
      off += s.n_points;
    }
    return total;
  }

 private:
  std::vector<Segment> segments_;
};

namespace detail {

inline double entropy_on(const Grid& g, const std::vector<double>& p) {
  std::vector<double> f(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) f[i] = p[i] > 0.0 ? -p[i] * std::log(p[i]) : 0.0;
  return g.integrate(f);
}

}  // namespace detail

/// JS(P_1..P_m) = H(mean P) - mean H(P_i), in nats.
inline double js_divergence(const std::vector<Kde1d>& densities, const Grid& grid) {
  const std::size_t m = densities.size();
  if (m < 2) throw Error(ErrorCode::InvalidArgument, "divergence needs at least two densities");
  const std::vector<double> x = grid.nodes();
  std::vector<std::vector<double>> p(m, std::vector<double>(x.size()));
  std::vector<double> entropies;
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t i = 0; i < x.size(); ++i) p[k][i] = densities[k](x[i]);
    const double mass = grid.integrate(p[k]);
    if (!(std::abs(mass - 1.0) <= 1e-2)) {
      throw Error(ErrorCode::GridTooCoarse, "density integrates to " + std::to_string(mass) + " on the grid");
    }
    for (double& v : p[k]) v /= mass;
    entropies.push_back(detail::entropy_on(grid, p[k]));
  }
  std::vector<double> mix(x.size());
  std::vector<double> column(m);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t k = 0; k < m; ++k) column[k] = p[k][i];
    mix[i] = detail::sorted_sum(column) / static_cast<double>(m);
  }
  const double js = detail::entropy_on(grid, mix) - detail::sorted_sum(entropies) / static_cast<double>(m);
  return std::max(0.0, js);
}

inline double js_divergence(const std::vector<Kde1d>& densities) {
  return js_divergence(densities, Grid::covering(densities));
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorCode::DegenerateSample, "correlation needs two equal-length samples of size >= 2");
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw Error(ErrorCode::DegenerateSample, "correlation of a constant sample");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// 1-based ranks; ties share the mean of the ranks they span.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = rank;
    i = j + 1;
  }
  return r;
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw Error(ErrorCode::DegenerateSample, "correlation needs equal-length samples");
  return pearson(average_ranks(x), average_ranks(y));
}

enum class SeriesStatistic { Mean, Max };

inline double series_statistic(const std::vector<double>& s, SeriesStatistic stat) {
  if (s.empty()) throw Error(ErrorCode::DegenerateSample, "empty curvature series");
  if (stat == SeriesStatistic::Max) return *std::max_element(s.begin(), s.end());
  return std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
}

/// Three-way divergence between the per-rollout statistics of rollouts in
/// categories 0, 1 and 2 (full success, single-gripper success, box drop).
/// `category` holds each rollout's category index; others are ignored.
inline double outcome_conditioned_js(const std::vector<std::vector<double>>& series, const std::vector<int>& category,
                                     SeriesStatistic stat) {
  if (series.size() != category.size()) throw Error(ErrorCode::InvalidArgument, "one category per series");
  std::vector<std::vector<double>> groups(3);
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (category[i] >= 0 && category[i] < 3) {
      groups[static_cast<std::size_t>(category[i])].push_back(series_statistic(series[i], stat));
    }
  }
  for (std::size_t c = 0; c < 3; ++c) {
    if (groups[c].size() < 2) {
      throw Error(ErrorCode::InsufficientCategory,
                  "category " + std::to_string(c + 1) + " has " + std::to_string(groups[c].size()) + " rollouts");
    }
  }
  std::vector<Kde1d> kdes;
  for (std::vector<double>& g : groups) kdes.push_back(Kde1d::scott(std::move(g)));
  return js_divergence(kdes);
}

}  // namespace bimanifold
