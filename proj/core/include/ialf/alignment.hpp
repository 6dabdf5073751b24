#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ialf/channel.hpp"
#include "ialf/common.hpp"

/// Interference-alignment bookkeeping and beamformer construction against a
/// (possibly quantized) block-diagonal channel.
namespace ialf::alignment {

/// Stream dimensions of a K-user 1×R problem over N tones: user i sends d[i]
/// streams along N-length directions and decodes them with RN-length filters.
struct StreamLayout {
  int K = 0;
  int R = 1;
  int N = 0;
  std::vector<int> d;

  int total_streams() const;
  /// Σ d_i / N.
  double dof_sum() const;
};

/// The (Γ, N, d_i) parametrization: Γ = KR(K−R−1), N = (R+1)(n+1)^Γ,
/// d_i = R(n+1)^Γ for the first R+1 users and R·n^Γ for the rest.
struct IaParameters {
  int K = 0;
  int R = 0;
  int n = 0;
  std::int64_t gamma = 0;
  std::int64_t N = 0;
  std::vector<std::int64_t> d;

  /// d_i / N.
  double dof_target(int i) const;
  double dof_sum() const;
  /// KR/(R+1), the supremum of dof_sum() over n.
  double dof_sum_limit() const;
  /// Throws if N does not fit an int (the engines index tones with int).
  StreamLayout layout() const;
};

IaParameters ia_parameters(int K, int R, int n);

/// Closed-form three-user SISO layout: N = 2n+1 tones, d = (n+1, n, n).
StreamLayout cj3_layout(int n);

enum class Engine {
  leakage_min,  ///< alternating minimization of interference leakage
  cj3,          ///< closed-form 3-user construction on diagonal channels
};

struct AlignmentOptions {
  Engine engine = Engine::leakage_min;
  double tolerance = 1e-8;
  double c_min = 1e-6;
  int max_iters = 5000;
  /// Force v_1 = … = v_{R+1} and v_{R+2} = … = v_K (leakage-min only).
  bool shared_directions = false;
};

/// Unit-norm transmit directions v[k] (N × d_k) and unit-norm receive filters
/// u[i] (RN × d_i).  Immutable once built.
struct BeamformerSet {
  StreamLayout layout;
  std::vector<CMatrix> v;
  std::vector<CMatrix> u;
  double alignment_residual = 0.0;  ///< max |u^H W v| over conditions (b), (c)
  double min_signal = 0.0;          ///< min |u_i^m H W_ii v_i^m|, condition (a)
  double tolerance = 0.0;
  int iterations = 0;
};

/// Raised when an engine cannot meet its tolerance; carries the per-iteration
/// leakage trajectory (√ of the total leakage) for diagnosis.
class AlignmentError : public Error {
 public:
  AlignmentError(const std::string& what, double residual, std::vector<double> trajectory)
      : Error(what), residual_(residual), trajectory_(std::move(trajectory)) {}

  double residual() const { return residual_; }
  const std::vector<double>& trajectory() const { return trajectory_; }

 private:
  double residual_;
  std::vector<double> trajectory_;
};

/// Throws InvalidArgument unless every receiver can hold its d_i desired
/// dimensions next to the largest single interferer: d_i + max_{k≠i} d_k ≤ RN.
void check_feasible(const StreamLayout& layout);

/// Designs beamformers treating `w` as the true channel.
BeamformerSet build_beamformers(const channel::ToneChannel& w, const StreamLayout& layout,
                                const AlignmentOptions& options, Rng& rng);

/// For fixed transmit directions, filters in the least-interfered subspace of
/// dimension ≥ d_i, zero-forcing the user's own other streams.  Unit norm.
std::vector<CMatrix> zero_forcing_receivers(const channel::ToneChannel& w,
                                            const StreamLayout& layout,
                                            const std::vector<CMatrix>& v);

struct AlignmentReport {
  double max_self_leakage = 0.0;   ///< (b): |u_i^m H W_ii v_i^p|, p ≠ m
  double max_cross_leakage = 0.0;  ///< (c): |u_i^m H W_ik v_k^p|, k ≠ i
  double min_signal = 0.0;         ///< (a)
  double residual = 0.0;
  bool pass = false;
};

/// Recomputes every alignment inner product against `w`.  Passes iff the
/// residual is within `tolerance` (default: the set's own tolerance) and the
/// weakest desired term is at least c_min.
AlignmentReport verify_alignment(const BeamformerSet& bf, const channel::ToneChannel& w,
                                 double c_min, std::optional<double> tolerance = std::nullopt);

/// b = conj(u) ∘ (v ⊗ 1_R), so that u^H H̄ v = h̄^H b.
CVector pseudo_beamformer(const CVector& u, const CVector& v, int R);

/// MIMO → SIMO reduction after the reciprocity swap (M_t ≤ M_r).
struct MimoReduction {
  int K = 0;
  int Mt = 0;  ///< as given
  int Mr = 0;
  int L = 0;
  double power = 0.0;
  bool swapped = false;  ///< true when M_t > M_r and the roles were exchanged
  int R = 0;             ///< ⌊max/min⌋
  int virtual_users = 0;
  int discarded_rx_antennas = 0;
  double bits_per_virtual_user = 0.0;       ///< (K·min)(RL−1)·log₂P
  double bits_per_original_receiver = 0.0;  ///< min²·K(RL−1)·log₂P
  double dof_sum = 0.0;                     ///< K·min·R/(R+1)
};

MimoReduction mimo_reduce(int K, int Mt, int Mr, int L, double power);

}  // namespace ialf::alignment
