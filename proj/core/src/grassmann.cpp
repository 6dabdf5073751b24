#include "ialf/grassmann.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace ialf::grassmann {

namespace {

constexpr double kNormTolerance = 1e-12;
constexpr std::int64_t kChunkTrials = 1 << 16;

// Γ^K(n)/Γ(K(n−1)+1) · x^{K(n−1)} for x ∈ [0,1].
double closed_form_cdf(int n, int K, double x) {
  if (x <= 0.0) return 0.0;
  const double m = static_cast<double>(K) * (n - 1);
  const double log_value =
      K * std::lgamma(static_cast<double>(n)) - std::lgamma(m + 1.0) + m * std::log(x);
  return std::exp(log_value);
}

void check_shape(int n, int K) {
  if (n < 2) throw InvalidArgument("ambient dimension n must be >= 2, got " + std::to_string(n));
  if (K < 1) throw InvalidArgument("component count K must be >= 1, got " + std::to_string(K));
}

// d²(P₀, Q) for P₀ = (e₁, …, e₁) only needs |q_1|²/‖q‖² per component.
std::int64_t count_inside(int n, int K, double radius_sq, std::int64_t trials, Rng& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  std::int64_t inside = 0;
  for (std::int64_t t = 0; t < trials; ++t) {
    double dist = 0.0;
    for (int k = 0; k < K; ++k) {
      double first = 0.0;
      double total = 0.0;
      for (int j = 0; j < n; ++j) {
        const double re = normal(rng);
        const double im = normal(rng);
        const double mag = re * re + im * im;
        if (j == 0) first = mag;
        total += mag;
      }
      dist += 1.0 - first / total;
    }
    if (dist <= radius_sq) ++inside;
  }
  return inside;
}

}  // namespace

GrassmannPoint::GrassmannPoint(CVector coords) : coords_(std::move(coords)) {
  if (coords_.size() < 2) {
    throw InvalidArgument("Grassmann point needs dimension >= 2, got " +
                          std::to_string(coords_.size()));
  }
  const double norm_sq = coords_.squaredNorm();
  if (std::abs(norm_sq - 1.0) > kNormTolerance) {
    throw InvalidArgument("Grassmann point coordinates must have unit norm (|v|^2 = " +
                          std::to_string(norm_sq) + ")");
  }
}

GrassmannPoint GrassmannPoint::from_vector(const CVector& v) {
  const double norm = v.norm();
  if (!(norm > 0.0)) throw InvalidArgument("cannot normalize a zero vector onto G_{n,1}");
  return GrassmannPoint(v / norm);
}

CompositeGrassmannPoint::CompositeGrassmannPoint(std::vector<GrassmannPoint> parts)
    : parts_(std::move(parts)) {
  if (parts_.empty()) throw InvalidArgument("composite point needs at least one component");
  const int n = parts_.front().dim();
  for (const auto& p : parts_) {
    if (p.dim() != n) throw InvalidArgument("composite point components differ in dimension");
  }
}

double chordal_dist_sq(const GrassmannPoint& p, const GrassmannPoint& q) {
  if (p.dim() != q.dim()) {
    throw InvalidArgument("chordal distance between dimensions " + std::to_string(p.dim()) +
                          " and " + std::to_string(q.dim()));
  }
  const double overlap = std::norm(p.coords().dot(q.coords()));
  return std::clamp(1.0 - overlap, 0.0, 1.0);
}

double composite_dist_sq(const CompositeGrassmannPoint& p, const CompositeGrassmannPoint& q) {
  if (p.components() != q.components() || p.dim() != q.dim()) {
    throw InvalidArgument("composite distance between points of different shape");
  }
  double total = 0.0;
  for (int k = 0; k < p.components(); ++k) total += chordal_dist_sq(p[k], q[k]);
  return total;
}

GrassmannPoint sample_uniform_line(int n, Rng& rng) {
  if (n < 2) throw InvalidArgument("ambient dimension n must be >= 2");
  for (;;) {
    CVector g = complex_gaussian(n, rng);
    const double norm = g.norm();
    if (norm > 0.0) return GrassmannPoint(g / norm);
  }
}

CompositeGrassmannPoint sample_uniform(int n, int K, Rng& rng) {
  check_shape(n, K);
  std::vector<GrassmannPoint> parts;
  parts.reserve(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) parts.push_back(sample_uniform_line(n, rng));
  return CompositeGrassmannPoint(std::move(parts));
}

double ball_volume_normalized(const BallVolumeSpec& spec) {
  check_shape(spec.n, spec.K);
  if (spec.delta < 0.0) throw InvalidArgument("ball radius must be non-negative");
  const double x = spec.delta * spec.delta;
  if (x > 1.0) {
    throw InvalidArgument("closed-form ball volume requires delta^2 <= 1 (got " +
                          std::to_string(x) + "); use the Monte Carlo estimate");
  }
  return closed_form_cdf(spec.n, spec.K, x);
}

double u_density(int n, int K, double x) {
  check_shape(n, K);
  if (x < 0.0) return 0.0;
  if (x > 1.0) throw InvalidArgument("closed-form density of U is only available on [0,1]");
  const double m = static_cast<double>(K) * (n - 1);
  if (x == 0.0) return m > 1.0 ? 0.0 : static_cast<double>(n - 1);
  const double log_value = K * std::log(static_cast<double>(n - 1)) + (m - 1.0) * std::log(x) +
                           K * std::lgamma(static_cast<double>(n - 1)) - std::lgamma(m);
  return std::exp(log_value);
}

double u_cdf(int n, int K, double x) {
  check_shape(n, K);
  if (x < 0.0) return 0.0;
  if (x >= K) return 1.0;
  if (x > 1.0) {
    throw InvalidArgument("closed-form CDF of U is only available on [0,1]; "
                          "pass a seed for the Monte Carlo estimate");
  }
  return closed_form_cdf(n, K, x);
}

double u_cdf(int n, int K, double x, std::uint64_t seed, std::int64_t trials, int jobs) {
  check_shape(n, K);
  if (x < 0.0) return 0.0;
  if (x >= K) return 1.0;
  if (x <= 1.0) return closed_form_cdf(n, K, x);
  return empirical_ball_cdf(n, K, std::sqrt(x), trials, seed, jobs);
}

double empirical_ball_cdf(int n, int K, double delta, std::int64_t trials, std::uint64_t seed,
                          int jobs) {
  check_shape(n, K);
  if (trials < 1) throw InvalidArgument("empirical_ball_cdf needs trials >= 1");
  if (delta < 0.0) throw InvalidArgument("ball radius must be non-negative");
  const auto chunks = static_cast<std::size_t>((trials + kChunkTrials - 1) / kChunkTrials);
  std::vector<std::int64_t> counts(chunks, 0);
  parallel_for(chunks, jobs, [&](std::size_t c) {
    const std::int64_t begin = static_cast<std::int64_t>(c) * kChunkTrials;
    const std::int64_t size = std::min(kChunkTrials, trials - begin);
    Rng rng = make_rng(seed, c);
    counts[c] = count_inside(n, K, delta * delta, size, rng);
  });
  const std::int64_t inside = std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
  return static_cast<double>(inside) / static_cast<double>(trials);
}

double empirical_ball_cdf(int n, int K, double delta, std::int64_t trials, Rng& rng) {
  check_shape(n, K);
  if (trials < 1) throw InvalidArgument("empirical_ball_cdf needs trials >= 1");
  if (delta < 0.0) throw InvalidArgument("ball radius must be non-negative");
  return static_cast<double>(count_inside(n, K, delta * delta, trials, rng)) /
         static_cast<double>(trials);
}

}  // namespace ialf::grassmann
