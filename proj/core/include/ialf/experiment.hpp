#pragma once

#include <cstdint>
#include <vector>

#include "ialf/alignment.hpp"
#include "ialf/channel.hpp"
#include "ialf/rates.hpp"

/// The generate → feedback → reconstruct → align → rate pipeline and the
/// seeded power sweeps built on it.
namespace ialf::experiment {

struct PipelineConfig {
  int K = 3;
  int R = 1;
  int L = 2;
  int n = 1;
  alignment::AlignmentOptions align;
  channel::FeedbackMode feedback = channel::FeedbackMode::perfect;
  /// Per-user bit fraction for oracle and codebook feedback.  Empty means 1.
  std::vector<double> alpha;
  channel::TapDistribution taps = channel::TapDistribution::gaussian;
  double noise = 1.0;
  /// Codebook feedback refuses budgets above this many bits.
  int max_codebook_bits = 20;

  /// Stream layout of the selected engine: (Γ, N, d) for leakage-min, the
  /// 2n+1 tone layout for cj3.
  alignment::StreamLayout layout() const;
  double alpha_of(int user) const;
  void validate() const;
};

struct PipelineResult {
  alignment::BeamformerSet beamformers;
  rates::RateReport rates;
  std::vector<std::int64_t> feedback_bits;  ///< per user, -1 for perfect feedback
  int alignment_attempts = 1;
};

/// Realization used for trial `trial` of a run seeded with `seed`.
channel::ChannelRealization trial_channel(const PipelineConfig& config, std::uint64_t seed,
                                          std::uint64_t trial);

/// Feedback for every receiver and the network's reconstruction from it.
channel::ReconstructedChannel feedback_round(const channel::ChannelRealization& ch,
                                             const PipelineConfig& config, double power,
                                             std::uint64_t seed, std::uint64_t stream,
                                             std::uint64_t substream,
                                             std::vector<std::int64_t>* bits = nullptr);

/// One full pipeline pass at a single power P.
PipelineResult run_pipeline(const channel::ChannelRealization& ch, const PipelineConfig& config,
                            double power, std::uint64_t seed, std::uint64_t stream = 0);

struct SweepConfig {
  PipelineConfig pipeline;
  std::vector<double> p_log2;
  int trials = 20;
  std::uint64_t seed = 1;
  int jobs = 1;
};

/// Trial averages at one power.  Per-user interference is the max over the
/// user's streams of I1 + I2; the stream columns are averages over streams.
struct SweepPoint {
  double p_log2 = 0.0;
  std::vector<double> user_rate;
  double sum_rate = 0.0;
  std::vector<double> user_interference;
  double max_interference = 0.0;
  std::vector<double> mean_signal;
  std::vector<double> mean_i1;
  std::vector<double> mean_i2;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  std::vector<rates::DofEstimate> user_fit;
  rates::DofEstimate sum_fit;
  std::vector<rates::BoundednessReport> user_interference_fit;
  rates::BoundednessReport interference_fit;
  double worst_residual = 0.0;
  double weakest_signal = 0.0;
  int alignment_retries = 0;
};

SweepResult dof_sweep(const SweepConfig& config);

}  // namespace ialf::experiment
