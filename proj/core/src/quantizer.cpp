#include "ialf/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

namespace ialf::quantizer {

namespace {

constexpr std::uint64_t kSourceStreamTag = 0x5eed'0f'50'0c'e5ULL;
constexpr std::int64_t kSourcesPerChunk = 512;

double line_dist_sq(const CVector& a, const CVector& b) {
  return std::clamp(1.0 - std::norm(a.dot(b)), 0.0, 1.0);
}

CompositeGrassmannPoint draw_codeword(int n, int K, std::uint64_t seed, std::uint64_t index) {
  Rng rng = make_rng(seed, index);
  return grassmann::sample_uniform(n, K, rng);
}

CompositeGrassmannPoint point_from_table(const CMatrix& table, int K, std::uint64_t index) {
  std::vector<grassmann::GrassmannPoint> parts;
  parts.reserve(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    parts.emplace_back(table.col(static_cast<Eigen::Index>(index * K + k)));
  }
  return CompositeGrassmannPoint(std::move(parts));
}

void check_shape(const CompositeGrassmannPoint& x, const Codebook& cb) {
  if (x.dim() != cb.dim() || x.components() != cb.components()) {
    throw InvalidArgument("point shape (n=" + std::to_string(x.dim()) +
                          ", K=" + std::to_string(x.components()) +
                          ") does not match codebook (n=" + std::to_string(cb.dim()) +
                          ", K=" + std::to_string(cb.components()) + ")");
  }
}

double fit_slope(const std::vector<double>& xs, const std::vector<double>& ys,
                 double* intercept) {
  const double count = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= count;
  my /= count;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  const double slope = sxy / sxx;
  if (intercept) *intercept = my - slope * mx;
  return slope;
}

}  // namespace

Codebook::Codebook(int n, int K, int bits, std::uint64_t seed, CodebookMode mode)
    : n_(n), K_(K), bits_(bits), seed_(seed), mode_(mode) {
  if (n < 2 || K < 1) throw InvalidArgument("codebook needs n >= 2 and K >= 1");
  if (bits < 0 || bits > 62) throw InvalidArgument("codebook bits out of range");
  if (mode == CodebookMode::implicit) return;
  if (bits > kMaxMaterializedBits) {
    throw InvalidArgument("materialized codebooks are limited to " +
                          std::to_string(kMaxMaterializedBits) + " bits (asked for " +
                          std::to_string(bits) +
                          "); use implicit mode or the distortion oracle instead");
  }
  table_.resize(n, static_cast<Eigen::Index>(size() * static_cast<std::uint64_t>(K)));
  for (std::uint64_t i = 0; i < size(); ++i) {
    const auto word = draw_codeword(n, K, seed, i);
    for (int k = 0; k < K; ++k) table_.col(static_cast<Eigen::Index>(i * K + k)) = word[k].coords();
  }
}

Codebook::Codebook(int n, int K, int bits, std::uint64_t seed,
                   std::vector<CompositeGrassmannPoint> words)
    : n_(n), K_(K), bits_(bits), seed_(seed), mode_(CodebookMode::materialized) {
  if (bits < 0 || bits > kMaxMaterializedBits) throw InvalidArgument("codebook bits out of range");
  if (words.size() != size()) {
    throw InvalidArgument("codebook with " + std::to_string(bits) + " bits needs " +
                          std::to_string(size()) + " codewords, got " +
                          std::to_string(words.size()));
  }
  table_.resize(n, static_cast<Eigen::Index>(size() * static_cast<std::uint64_t>(K)));
  for (std::uint64_t i = 0; i < size(); ++i) {
    if (words[i].dim() != n || words[i].components() != K) {
      throw InvalidArgument("codeword " + std::to_string(i) + " has the wrong shape");
    }
    for (int k = 0; k < K; ++k) table_.col(static_cast<Eigen::Index>(i * K + k)) = words[i][k].coords();
  }
}

CompositeGrassmannPoint Codebook::codeword(std::uint64_t index) const {
  if (index >= size()) {
    throw InvalidArgument("codeword index " + std::to_string(index) + " out of range for " +
                          std::to_string(bits_) + "-bit codebook");
  }
  if (mode_ == CodebookMode::implicit) return draw_codeword(n_, K_, seed_, index);
  return point_from_table(table_, K_, index);
}

const CMatrix& Codebook::table() const {
  if (mode_ != CodebookMode::materialized) throw InvalidArgument("implicit codebook has no table");
  return table_;
}

std::int64_t FeedbackBudget::bits() const {
  if (K < 1 || R < 1 || L < 1) throw InvalidArgument("feedback budget needs K, R, L >= 1");
  if (!(power > 0.0)) throw InvalidArgument("feedback budget needs power > 0");
  if (alpha < 0.0 || alpha > 1.0) throw InvalidArgument("feedback fraction alpha must be in [0,1]");
  const double raw = alpha * K * (R * L - 1) * std::log2(power);
  return raw <= 0.0 ? 0 : static_cast<std::int64_t>(std::ceil(raw - 1e-9));
}

Codebook build_random_codebook(int n, int K, int bits, std::uint64_t seed, CodebookMode mode) {
  return Codebook(n, K, bits, seed, mode);
}

double min_pairwise_dist_sq(const Codebook& cb) {
  const CMatrix& table = cb.table();
  const int K = cb.components();
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t a = 0; a < cb.size(); ++a) {
    for (std::uint64_t b = a + 1; b < cb.size(); ++b) {
      double d = 0.0;
      for (int k = 0; k < K; ++k) {
        d += line_dist_sq(table.col(static_cast<Eigen::Index>(a * K + k)),
                          table.col(static_cast<Eigen::Index>(b * K + k)));
      }
      best = std::min(best, d);
    }
  }
  return best;
}

Codebook refine_maxmin(const Codebook& cb, int iterations, Rng& rng) {
  if (cb.mode() != CodebookMode::materialized) {
    throw InvalidArgument("refine_maxmin needs a materialized codebook");
  }
  std::vector<CompositeGrassmannPoint> words;
  words.reserve(cb.size());
  for (std::uint64_t i = 0; i < cb.size(); ++i) words.push_back(cb.codeword(i));
  if (words.size() < 2 || iterations <= 0) return cb;

  const auto nearest = [&](std::size_t idx) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < words.size(); ++j) {
      if (j != idx) best = std::min(best, grassmann::composite_dist_sq(words[idx], words[j]));
    }
    return best;
  };

  for (int it = 0; it < iterations; ++it) {
    double current = std::numeric_limits<double>::infinity();
    std::size_t worst_a = 0;
    std::size_t worst_b = 1;
    for (std::size_t a = 0; a < words.size(); ++a) {
      for (std::size_t b = a + 1; b < words.size(); ++b) {
        const double d = grassmann::composite_dist_sq(words[a], words[b]);
        if (d < current) {
          current = d;
          worst_a = a;
          worst_b = b;
        }
      }
    }
    const std::size_t victim = (it % 2 == 0) ? worst_b : worst_a;
    const CompositeGrassmannPoint saved = words[victim];
    words[victim] = grassmann::sample_uniform(cb.dim(), cb.components(), rng);
    // The redraw breaks the closest pair only if the new word sits farther than
    // `current` from everything; other pairs are untouched.
    if (!(nearest(victim) > current)) words[victim] = saved;
  }
  return Codebook(cb.dim(), cb.components(), cb.bits(), cb.seed(), std::move(words));
}

std::uint64_t encode(const CompositeGrassmannPoint& x, const Codebook& cb) {
  check_shape(x, cb);
  const int K = cb.components();
  double best = std::numeric_limits<double>::infinity();
  std::uint64_t best_index = 0;
  if (cb.mode() == CodebookMode::implicit) {
    for (std::uint64_t i = 0; i < cb.size(); ++i) {
      const auto word = cb.codeword(i);
      double d = 0.0;
      for (int k = 0; k < K && d <= best; ++k) d += line_dist_sq(x[k].coords(), word[k].coords());
      if (d < best) {
        best = d;
        best_index = i;
      }
    }
    return best_index;
  }
  const CMatrix& table = cb.table();
  for (std::uint64_t i = 0; i < cb.size(); ++i) {
    double d = 0.0;
    for (int k = 0; k < K && d <= best; ++k) {
      d += line_dist_sq(x[k].coords(), table.col(static_cast<Eigen::Index>(i * K + k)));
    }
    if (d < best) {
      best = d;
      best_index = i;
    }
  }
  return best_index;
}

CompositeGrassmannPoint decode(std::uint64_t index, const Codebook& cb) {
  return cb.codeword(index);
}

DistortionReport measure_distortion(const Codebook& cb, std::int64_t trials, std::uint64_t seed,
                                    int jobs) {
  if (trials < 1) throw InvalidArgument("measure_distortion needs trials >= 1");
  const auto chunks =
      static_cast<std::size_t>((trials + kSourcesPerChunk - 1) / kSourcesPerChunk);
  std::vector<double> sums(chunks, 0.0);
  std::vector<double> maxima(chunks, 0.0);
  parallel_for(chunks, jobs, [&](std::size_t c) {
    Rng rng = make_rng(seed, kSourceStreamTag, c);
    const std::int64_t begin = static_cast<std::int64_t>(c) * kSourcesPerChunk;
    const std::int64_t count = std::min(kSourcesPerChunk, trials - begin);
    for (std::int64_t t = 0; t < count; ++t) {
      const auto x = grassmann::sample_uniform(cb.dim(), cb.components(), rng);
      const double d = grassmann::composite_dist_sq(x, decode(encode(x, cb), cb));
      sums[c] += d;
      maxima[c] = std::max(maxima[c], d);
    }
  });
  DistortionReport report;
  report.trials = trials;
  report.bits = cb.bits();
  double total = 0.0;
  for (std::size_t c = 0; c < chunks; ++c) {
    total += sums[c];
    report.max_observed = std::max(report.max_observed, maxima[c]);
  }
  report.mean_observed = total / static_cast<double>(trials);
  return report;
}

double oracle_radius_sq(std::int64_t bits, int n, int K) {
  if (n < 2 || K < 1) throw InvalidArgument("oracle radius needs n >= 2 and K >= 1");
  if (bits <= 0) return 1.0;
  return std::min(1.0, std::exp2(-static_cast<double>(bits) / (static_cast<double>(K) * (n - 1))));
}

CompositeGrassmannPoint distortion_oracle_quantize(const CompositeGrassmannPoint& x,
                                                   std::int64_t bits, Rng& rng) {
  const int n = x.dim();
  const int K = x.components();
  const double radius = std::sqrt(oracle_radius_sq(bits, n, K));

  std::vector<CVector> tangents;
  tangents.reserve(static_cast<std::size_t>(K));
  double total_sq = 0.0;
  while (true) {
    tangents.clear();
    total_sq = 0.0;
    for (int k = 0; k < K; ++k) {
      const CVector& v = x[k].coords();
      CVector g = complex_gaussian(n, rng);
      g -= v * v.dot(g);
      total_sq += g.squaredNorm();
      tangents.push_back(std::move(g));
    }
    if (total_sq > 0.0) break;
  }
  const double total = std::sqrt(total_sq);

  std::vector<grassmann::GrassmannPoint> parts;
  parts.reserve(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    const CVector& v = x[k].coords();
    const double t_norm = tangents[static_cast<std::size_t>(k)].norm();
    const double s = std::min(1.0, radius * t_norm / total);
    CVector moved = std::sqrt(1.0 - s * s) * v;
    if (t_norm > 0.0) moved += (s / t_norm) * tangents[static_cast<std::size_t>(k)];
    parts.push_back(grassmann::GrassmannPoint::from_vector(moved));
  }
  return CompositeGrassmannPoint(std::move(parts));
}

CompositeGrassmannPoint distortion_oracle_quantize(const CompositeGrassmannPoint& x,
                                                   const FeedbackBudget& budget, Rng& rng) {
  if (x.dim() != budget.dim() || x.components() != budget.K) {
    throw InvalidArgument("oracle quantizer: point shape does not match the feedback budget");
  }
  return distortion_oracle_quantize(x, budget.bits(), rng);
}

ScalingFit distortion_scaling_fit(int n, int K, const std::vector<int>& bits_list,
                                  std::int64_t trials, std::uint64_t seed, int jobs) {
  const std::set<int> distinct(bits_list.begin(), bits_list.end());
  if (distinct.size() < 3) {
    throw InvalidArgument("distortion scaling fit needs at least 3 distinct bit budgets");
  }
  ScalingFit fit;
  std::vector<double> xs;
  std::vector<double> ys;
  for (const int bits : distinct) {
    const Codebook cb(n, K, bits, seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(bits + 1)),
                      CodebookMode::materialized);
    auto report = measure_distortion(cb, trials, seed + static_cast<std::uint64_t>(bits), jobs);
    xs.push_back(bits);
    ys.push_back(std::log2(report.mean_observed));
    fit.reports.push_back(report);
  }
  fit.slope = fit_slope(xs, ys, &fit.intercept);
  return fit;
}

double distortion_scaling_exponent(int n, int K, const std::vector<int>& bits_list,
                                   std::int64_t trials, std::uint64_t seed, int jobs) {
  return distortion_scaling_fit(n, K, bits_list, trials, seed, jobs).slope;
}

}  // namespace ialf::quantizer
