#pragma once

// Brute-force reference computations used only by the tests. Each one follows a
// different route from the library code it checks.

#include "hiprobe/dataset.hpp"
#include "hiprobe/localizer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace oracle {

struct MeanVar {
  double mean = 0.0;
  double var = 0.0;
};

// Plain two-pass mean and population variance.
inline MeanVar two_pass(const std::vector<double>& xs) {
  MeanVar mv;
  for (double x : xs) mv.mean += x;
  mv.mean /= static_cast<double>(xs.size());
  for (double x : xs) mv.var += (x - mv.mean) * (x - mv.mean);
  mv.var /= static_cast<double>(xs.size());
  return mv;
}

// KL(N(mu_p, var_p) || N(mu_q, var_q)) by composite Simpson quadrature of
// p(x) * (log p(x) - log q(x)) over mu_p +- 14 sd_p.
inline double gaussian_kl_quadrature(double mu_p, double var_p, double mu_q, double var_q,
                                     int intervals = 20000) {
  const double pi = 3.14159265358979323846;
  const double sd_p = std::sqrt(var_p);
  const double lo = mu_p - 14.0 * sd_p;
  const double hi = mu_p + 14.0 * sd_p;
  const double h = (hi - lo) / intervals;
  const auto log_density = [&](double x, double mu, double var) {
    return -0.5 * std::log(2.0 * pi * var) - (x - mu) * (x - mu) / (2.0 * var);
  };
  const auto f = [&](double x) {
    const double lp = log_density(x, mu_p, var_p);
    return std::exp(lp) * (lp - log_density(x, mu_q, var_q));
  };
  double sum = f(lo) + f(hi);
  for (int i = 1; i < intervals; ++i) sum += f(lo + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

// Histogram entropy with explicit bin edges and a linear edge scan.
inline double histogram_entropy(const std::vector<double>& xs, int bins) {
  const double lo = *std::min_element(xs.begin(), xs.end());
  const double hi = *std::max_element(xs.begin(), xs.end());
  if (!(hi > lo)) return 0.0;
  std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
  for (int j = 0; j <= bins; ++j) edges[static_cast<std::size_t>(j)] = lo + j * (hi - lo) / bins;
  std::vector<int> counts(static_cast<std::size_t>(bins), 0);
  for (double x : xs) {
    int found = bins - 1;
    for (int j = 0; j < bins; ++j) {
      if (x >= edges[static_cast<std::size_t>(j)] && x < edges[static_cast<std::size_t>(j) + 1]) {
        found = j;
        break;
      }
    }
    ++counts[static_cast<std::size_t>(found)];
  }
  double h = 0.0;
  for (int c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(xs.size());
    h += -p * std::log(p) / std::log(2.0);
  }
  return h;
}

// Silhouette from a full distance matrix.
inline double silhouette(const std::vector<std::vector<double>>& points, const std::vector<int>& labels) {
  const std::size_t n = points.size();
  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t d = 0; d < points[i].size(); ++d) {
        s += (points[i][d] - points[j][d]) * (points[i][d] - points[j][d]);
      }
      dist[i][j] = std::sqrt(s);
    }
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double same = 0.0, other = 0.0;
    int n_same = 0, n_other = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      if (labels[j] == labels[i]) {
        same += dist[i][j];
        ++n_same;
      } else {
        other += dist[i][j];
        ++n_other;
      }
    }
    if (n_same == 0) continue;
    const double a = same / n_same;
    const double b = other / n_other;
    const double m = std::max(a, b);
    total += m > 0.0 ? (b - a) / m : 0.0;
  }
  return total / static_cast<double>(n);
}

// Binary cross-entropy written out sample by sample.
inline double bce(const std::vector<double>& w, double b, const std::vector<std::vector<double>>& x,
                  const std::vector<double>& y, double lambda) {
  double loss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double z = b;
    for (std::size_t d = 0; d < w.size(); ++d) z += w[d] * x[i][d];
    double p = 1.0 / (1.0 + std::exp(-z));
    p = std::min(std::max(p, 1e-12), 1.0 - 1e-12);
    loss += y[i] > 0.5 ? -std::log(p) : -std::log(1.0 - p);
  }
  double reg = 0.0;
  for (double v : w) reg += v * v;
  return loss / static_cast<double>(x.size()) + 0.5 * lambda * reg;
}

// Central finite-difference gradient.
inline std::vector<double> finite_difference(const std::function<double(const std::vector<double>&)>& f,
                                             std::vector<double> x, double step) {
  std::vector<double> g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double orig = x[k];
    x[k] = orig + step;
    const double up = f(x);
    x[k] = orig - step;
    const double down = f(x);
    x[k] = orig;
    g[k] = (up - down) / (2.0 * step);
  }
  return g;
}

// Direct evaluation of the truncated, renormalized Gaussian smoother.
inline std::vector<double> smooth(const std::vector<double>& raw, double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  const int n = static_cast<int>(raw.size());
  std::vector<double> out(raw.size());
  for (int i = 0; i < n; ++i) {
    double num = 0.0, den = 0.0;
    for (int j = 0; j < n; ++j) {
      if (std::abs(i - j) > radius) continue;
      const double w = std::exp(-(i - j) * (i - j) / (2.0 * sigma * sigma));
      num += w * raw[static_cast<std::size_t>(j)];
      den += w;
    }
    out[static_cast<std::size_t>(i)] = num / den;
  }
  return out;
}

// Per-frame comparison, then grouping of equal neighbours.
inline std::vector<hiprobe::AnomalySegment> segments(const std::vector<std::uint32_t>& frames,
                                                     const std::vector<double>& smoothed,
                                                     double threshold) {
  std::vector<int> flag(smoothed.size());
  for (std::size_t i = 0; i < smoothed.size(); ++i) flag[i] = smoothed[i] > threshold ? 1 : 0;
  std::vector<hiprobe::AnomalySegment> out;
  for (std::size_t i = 0; i < flag.size(); ++i) {
    if (i == 0 || flag[i] != flag[i - 1]) {
      if (!out.empty()) out.back().end_frame = frames[i] - 1;
      hiprobe::AnomalySegment s;
      s.start_frame = frames[i];
      s.kind = flag[i] ? hiprobe::SegmentKind::anomalous : hiprobe::SegmentKind::normal;
      s.peak_score = smoothed[i];
      out.push_back(s);
    } else {
      out.back().peak_score = std::max(out.back().peak_score, smoothed[i]);
    }
  }
  if (!out.empty()) out.back().end_frame = frames.back();
  return out;
}

// Fraction of (positive, negative) pairs ordered correctly; ties count half.
inline double auc_pairs(const std::vector<double>& scores, const std::vector<int>& labels) {
  double good = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) good += 1.0;
      else if (scores[i] == scores[j]) good += 0.5;
    }
  }
  return good / pairs;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  static std::mt19937_64 rng{std::random_device{}()};
  auto dir = std::filesystem::temp_directory_path() /
             ("hiprobe-" + tag + "-" + std::to_string(rng() % 1000000007ull));
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle
