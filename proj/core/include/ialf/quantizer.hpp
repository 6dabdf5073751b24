#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "ialf/grassmann.hpp"

/// Finite-rate codebooks on G^K_{n,1}, nearest-neighbour encoding, distortion
/// statistics and the feedback-bit budget N_f = ⌈α·K(RL−1)·log₂P⌉.
namespace ialf::quantizer {

using grassmann::CompositeGrassmannPoint;

enum class CodebookMode {
  materialized,  ///< all 2^bits codewords stored contiguously
  implicit,      ///< codeword i regenerated on demand from (seed, i)
};

/// Largest bit budget a materialized codebook accepts.
inline constexpr int kMaxMaterializedBits = 26;

/// Random codebook of 2^bits i.i.d. uniform points.  Codeword i is always drawn
/// from the RNG stream (seed, i), so materialized and implicit codebooks with
/// the same seed hold identical codewords.  Immutable after construction.
class Codebook {
 public:
  Codebook(int n, int K, int bits, std::uint64_t seed, CodebookMode mode);

  /// Materialized codebook from explicit codewords (import, refinement).
  Codebook(int n, int K, int bits, std::uint64_t seed, std::vector<CompositeGrassmannPoint> words);

  int dim() const { return n_; }
  int components() const { return K_; }
  int bits() const { return bits_; }
  std::uint64_t seed() const { return seed_; }
  CodebookMode mode() const { return mode_; }
  std::uint64_t size() const { return std::uint64_t{1} << bits_; }

  CompositeGrassmannPoint codeword(std::uint64_t index) const;

  /// Column block [index·K, index·K + K) of the n × (K·size) coordinate table.
  /// Materialized mode only.
  const CMatrix& table() const;

 private:
  int n_;
  int K_;
  int bits_;
  std::uint64_t seed_;
  CodebookMode mode_;
  CMatrix table_;
};

struct DistortionReport {
  double max_observed = 0.0;
  double mean_observed = 0.0;
  std::int64_t trials = 0;
  int bits = 0;
};

/// Inputs to the bit budget: users K, receive antennas R, taps L, power P
/// (linear) and scaling fraction α ∈ (0,1] (α = 0 means no feedback).
struct FeedbackBudget {
  int K = 3;
  int R = 1;
  int L = 2;
  double power = 1.0;
  double alpha = 1.0;

  /// ⌈α·K(RL−1)·log₂P⌉, clamped at 0.
  std::int64_t bits() const;
  /// n = RL, the ambient dimension of each fed-back direction.
  int dim() const { return R * L; }
};

/// 2^bits random codewords; materialized mode rejects bits > kMaxMaterializedBits.
Codebook build_random_codebook(int n, int K, int bits, std::uint64_t seed,
                               CodebookMode mode = CodebookMode::materialized);

/// Greedy max-min refinement: repeatedly redraw one end of the closest pair and
/// keep the redraw only if the packing's minimum distance does not shrink and
/// the old closest pair is broken.  Never decreases the minimum pairwise distance.
Codebook refine_maxmin(const Codebook& cb, int iterations, Rng& rng);

/// Smallest composite_dist_sq over distinct codeword pairs (materialized only).
double min_pairwise_dist_sq(const Codebook& cb);

/// Index of the nearest codeword; ties go to the lowest index.  Abandons a
/// candidate as soon as its partial distance exceeds the best so far.
std::uint64_t encode(const CompositeGrassmannPoint& x, const Codebook& cb);

CompositeGrassmannPoint decode(std::uint64_t index, const Codebook& cb);

/// Mean and max of d²(x, decode(encode(x))) over `trials` uniform sources.
DistortionReport measure_distortion(const Codebook& cb, std::int64_t trials, std::uint64_t seed,
                                    int jobs = 1);

/// δ*² = min(1, 2^{−bits/(K(n−1))}): the squared packing radius a maximal
/// code with `bits` bits achieves on G^K_{n,1}.
double oracle_radius_sq(std::int64_t bits, int n, int K);

/// Returns a point at composite distance exactly δ* from x, with the
/// perturbation drawn uniformly over the tangent directions at x.
CompositeGrassmannPoint distortion_oracle_quantize(const CompositeGrassmannPoint& x,
                                                   const FeedbackBudget& budget, Rng& rng);

/// Same as above with an explicit bit count.
CompositeGrassmannPoint distortion_oracle_quantize(const CompositeGrassmannPoint& x,
                                                   std::int64_t bits, Rng& rng);

struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<DistortionReport> reports;
};

/// Least-squares slope of log₂(mean squared distortion) against N_f for
/// random codebooks; the expected exponent is −1/(K(n−1)).
ScalingFit distortion_scaling_fit(int n, int K, const std::vector<int>& bits_list,
                                  std::int64_t trials, std::uint64_t seed, int jobs = 1);

double distortion_scaling_exponent(int n, int K, const std::vector<int>& bits_list,
                                   std::int64_t trials, std::uint64_t seed, int jobs = 1);

/// Text table: header line "ialf-codebook 1 n=<n> K=<K> bits=<bits> seed=<seed>",
/// then one line per (codeword, component) with 2n numbers re im re im ….
void write_codebook(std::ostream& out, const Codebook& cb);
Codebook read_codebook(std::istream& in);

}  // namespace ialf::quantizer
