#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "ialf/grassmann.hpp"
#include "ialf/quantizer.hpp"

/// K-user frequency-selective SIMO channels: tap generation, the OFDM tone
/// transform, and the receiver feedback / network-wide reconstruction path.
///
/// Indices are zero-based throughout: link (i, k) is transmitter k → receiver i.
namespace ialf::channel {

enum class TapDistribution {
  gaussian,            ///< CN(0,1) taps
  truncated_gaussian,  ///< CN(0,1) conditioned on |h| ≤ 3 (bounded with probability one)
};

/// Time-domain taps of every link.  taps(i, k) is the L×R matrix T_{i,k} whose
/// row l is h_{i,k}[l]^t and whose column m is c_{i,k}[m].
class ChannelRealization {
 public:
  ChannelRealization(int K, int R, int L, std::vector<CMatrix> taps, double noise_power = 1.0);

  int users() const { return K_; }
  int rx_antennas() const { return R_; }
  int tap_count() const { return L_; }
  double noise_power() const { return noise_power_; }
  const CMatrix& taps(int i, int k) const;

 private:
  int K_;
  int R_;
  int L_;
  double noise_power_;
  std::vector<CMatrix> taps_;
};

/// Per-tone channel vectors of every link.  tones(i, k) is N×R with row r equal
/// to h_{i,k}(r)^t.  The block-diagonal operator acting on a transmit vector is
/// H̄_{i,k} = diag{h^c(0), …, h^c(N−1)} (RN×N, tone-major: rows rR..rR+R−1 hold
/// tone r), so y = H̄ x applies the conjugated tone vectors.
class ToneChannel {
 public:
  ToneChannel(int K, int R, int N, std::vector<CMatrix> tones);

  int users() const { return K_; }
  int rx_antennas() const { return R_; }
  int tone_count() const { return N_; }
  const CMatrix& tones(int i, int k) const;

  /// Dense RN×N block-diagonal matrix H̄_{i,k}.
  CMatrix dense(int i, int k) const;
  /// h̄_{i,k} = [h(0)^t, …, h(N−1)^t]^t, length RN.
  CVector stacked(int i, int k) const;
  /// H̄_{i,k} · X for X with N rows, computed tone by tone.
  CMatrix apply(int i, int k, const CMatrix& X) const;

 private:
  int K_;
  int R_;
  int N_;
  std::vector<CMatrix> tones_;
};

struct FeedbackMessage {
  int user = 0;
  grassmann::CompositeGrassmannPoint point;  ///< Q̂_i = [v̂_{i,1}, …, v̂_{i,K}]
  std::int64_t bits = -1;                    ///< N_f; -1 for unquantized feedback
  std::optional<std::uint64_t> index;        ///< codeword id (codebook mode only)
};

/// What the network rebuilds from all feedback: W̃_{i,k} as a ToneChannel
/// (unit-norm stacked vectors) and the reshaped L×R matrices Q̂_{i,k}.
struct ReconstructedChannel {
  ToneChannel wtilde;
  std::vector<CMatrix> qhat;  ///< row-major over (i, k)
  int taps = 0;

  const CMatrix& qhat_matrix(int i, int k) const;
};

enum class FeedbackMode {
  perfect,   ///< Q̂_i = Q_i
  codebook,  ///< nearest-neighbour encoding over a shared codebook
  oracle,    ///< distortion oracle at the budget's packing radius
};

struct FeedbackConfig {
  FeedbackMode mode = FeedbackMode::perfect;
  std::shared_ptr<const quantizer::Codebook> codebook;  ///< codebook mode
  double power = 1.0;                                   ///< oracle mode: P
  double alpha = 1.0;                                   ///< oracle mode: bit fraction
};

ChannelRealization generate_channel(int K, int R, int L, std::uint64_t seed,
                                    TapDistribution dist = TapDistribution::gaussian,
                                    double noise_power = 1.0);

/// Unnormalized N-point DFT of each zero-padded tap column.  Requires N ≥ L.
ToneChannel to_tone_domain(const ChannelRealization& ch, int N);

/// vec(T_{i,k}) / ‖vec(T_{i,k})‖ with column-major stacking: entry (l, m) of T
/// lands at position m·L + l.
grassmann::GrassmannPoint vectorize_direction(const ChannelRealization& ch, int i, int k);

/// Q_i = [v_{i,1}, …, v_{i,K}].
grassmann::CompositeGrassmannPoint receiver_directions(const ChannelRealization& ch, int i);

/// Forms Q_i, quantizes it according to `config` and returns what receiver i
/// broadcasts.  The oracle draws its perturbation from `rng`.
FeedbackMessage receiver_feedback(const ChannelRealization& ch, int i,
                                  const FeedbackConfig& config, Rng& rng);

/// Rebuilds W̃_{i,k} for all links from one message per user: reshape v̂ to L×R,
/// zero-pad each column to N, DFT, scale by 1/√N so ‖w̃_{i,k}‖ = 1.
ReconstructedChannel reconstruct(const std::vector<FeedbackMessage>& msgs, int R, int N);

/// Text archive of a realization; see docs/formats.md.
void write_channel(std::ostream& out, const ChannelRealization& ch);
ChannelRealization read_channel(std::istream& in);

/// "a+bi" rendering used by the archive (shortest round-trip precision).
std::string format_complex(cplx z);
cplx parse_complex(const std::string& token);

}  // namespace ialf::channel
