#pragma once

#include <cstdint>
#include <vector>

#include "ialf/common.hpp"

/// Geometry of lines (G_{n,1}) and of the composite manifold G^K_{n,1}: chordal
/// distances, Haar sampling and exact normalized ball volumes.
namespace ialf::grassmann {

/// A complex line through the origin of C^n, stored as a unit-norm representative.
/// Two representatives differing by a unit-modulus factor denote the same point.
class GrassmannPoint {
 public:
  /// Takes `coords` as-is; throws unless ‖coords‖² = 1 within 1e-12 and n ≥ 2.
  explicit GrassmannPoint(CVector coords);

  /// Normalizes `v`; throws on a zero vector.
  static GrassmannPoint from_vector(const CVector& v);

  int dim() const { return static_cast<int>(coords_.size()); }
  const CVector& coords() const { return coords_; }

 private:
  CVector coords_;
};

/// Ordered K-tuple of lines sharing the same ambient dimension.
class CompositeGrassmannPoint {
 public:
  explicit CompositeGrassmannPoint(std::vector<GrassmannPoint> parts);

  int dim() const { return parts_.front().dim(); }
  int components() const { return static_cast<int>(parts_.size()); }
  const GrassmannPoint& operator[](int k) const { return parts_[static_cast<std::size_t>(k)]; }
  const std::vector<GrassmannPoint>& parts() const { return parts_; }

 private:
  std::vector<GrassmannPoint> parts_;
};

/// 1 − |p^H q|².
double chordal_dist_sq(const GrassmannPoint& p, const GrassmannPoint& q);

/// Σ_k d_c²(p_k, q_k).
double composite_dist_sq(const CompositeGrassmannPoint& p, const CompositeGrassmannPoint& q);

GrassmannPoint sample_uniform_line(int n, Rng& rng);
CompositeGrassmannPoint sample_uniform(int n, int K, Rng& rng);

struct BallVolumeSpec {
  int n = 2;
  int K = 1;
  double delta = 0.0;
};

/// Exact normalized volume Γ^K(n)/Γ(K(n−1)+1) · δ^{2K(n−1)} of a chordal ball
/// in G^K_{n,1}, evaluated in log-gamma form.  Requires 0 ≤ δ² ≤ 1.
double ball_volume_normalized(const BallVolumeSpec& spec);

/// Density of U = Σ_k X_k where X_k = d_c²(P_k, Q_k) for Q uniform.  Closed form
/// on [0,1]; zero below 0.  Throws for x > 1, where no closed form is implemented.
double u_density(int n, int K, double x);

/// CDF of U.  x < 0 → 0, x ≥ K → 1, x ∈ [0,1] closed form (identical code path
/// to ball_volume_normalized).  x ∈ (1, K) throws; use the Monte Carlo overload.
double u_cdf(int n, int K, double x);

/// As above, but x ∈ (1, K) is estimated by Monte Carlo with `trials` samples.
double u_cdf(int n, int K, double x, std::uint64_t seed, std::int64_t trials, int jobs = 1);

/// Fraction of `trials` uniform Q with d²(P₀, Q) ≤ δ², P₀ = (e₁, …, e₁).
/// Trials are split into fixed chunks with their own RNG streams, so the
/// result depends only on (seed, trials), never on `jobs`.
double empirical_ball_cdf(int n, int K, double delta, std::int64_t trials, std::uint64_t seed,
                          int jobs = 1);

/// Single-stream variant for callers that thread their own generator.
double empirical_ball_cdf(int n, int K, double delta, std::int64_t trials, Rng& rng);

}  // namespace ialf::grassmann
