#include "ialf/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "ialf/quantizer.hpp"

namespace ialf::experiment {

namespace {

constexpr int kAlignmentAttempts = 3;
constexpr std::uint64_t kFeedbackBase = 1'000;
constexpr std::uint64_t kAlignBase = 1'000'000;

// Codebooks are shared by all users and trials of a run; keyed by bit count.
class CodebookCache {
 public:
  std::shared_ptr<const quantizer::Codebook> get(int n, int K, int bits, std::uint64_t seed) {
    std::lock_guard lock(mutex_);
    auto& slot = cache_[bits];
    if (!slot) {
      slot = std::make_shared<const quantizer::Codebook>(
          quantizer::build_random_codebook(n, K, bits, seed));
    }
    return slot;
  }

 private:
  std::mutex mutex_;
  std::map<int, std::shared_ptr<const quantizer::Codebook>> cache_;
};

CodebookCache& codebook_cache(std::uint64_t seed) {
  static std::mutex mutex;
  static std::map<std::uint64_t, std::unique_ptr<CodebookCache>> caches;
  std::lock_guard lock(mutex);
  auto& c = caches[seed];
  if (!c) c = std::make_unique<CodebookCache>();
  return *c;
}

alignment::BeamformerSet align_with_retries(const channel::ToneChannel& w,
                                            const PipelineConfig& config, std::uint64_t seed,
                                            std::uint64_t stream, std::uint64_t substream,
                                            int* attempts) {
  const auto layout = config.layout();
  for (int attempt = 0;; ++attempt) {
    Rng rng = make_rng(seed, stream, kAlignBase + substream * kAlignmentAttempts + attempt);
    try {
      auto bf = alignment::build_beamformers(w, layout, config.align, rng);
      if (attempts) *attempts = attempt + 1;
      return bf;
    } catch (const alignment::AlignmentError&) {
      // Only the random start differs between attempts; cj3 is deterministic.
      if (config.align.engine == alignment::Engine::cj3 || attempt + 1 == kAlignmentAttempts) throw;
    }
  }
}

}  // namespace

alignment::StreamLayout PipelineConfig::layout() const {
  if (align.engine == alignment::Engine::cj3) {
    if (K != 3 || R != 1) throw InvalidArgument("cj3 engine needs K=3 and R=1");
    return alignment::cj3_layout(n);
  }
  return alignment::ia_parameters(K, R, n).layout();
}

double PipelineConfig::alpha_of(int user) const {
  if (alpha.empty()) return 1.0;
  if (user < 0 || user >= static_cast<int>(alpha.size())) {
    throw InvalidArgument("alpha list must name every user");
  }
  return alpha[static_cast<std::size_t>(user)];
}

void PipelineConfig::validate() const {
  if (K < 2) throw InvalidArgument("K must be >= 2");
  if (R < 1 || L < 1 || n < 1) throw InvalidArgument("R, L and n must be >= 1");
  if (R * L < 2) throw InvalidArgument("R*L must be >= 2 for directions to carry information");
  if (!alpha.empty() && static_cast<int>(alpha.size()) != K) {
    throw InvalidArgument("alpha list has " + std::to_string(alpha.size()) +
                          " entries for K=" + std::to_string(K) + " users");
  }
  for (const double a : alpha) {
    if (!(a >= 0.0)) throw InvalidArgument("alpha must be non-negative");
  }
  if (!(noise > 0.0)) throw InvalidArgument("noise power must be positive");
  const auto lay = layout();
  if (lay.N < L) {
    throw InvalidArgument("N=" + std::to_string(lay.N) + " tones cannot hold L=" +
                          std::to_string(L) + " taps");
  }
  alignment::check_feasible(lay);
}

channel::ChannelRealization trial_channel(const PipelineConfig& config, std::uint64_t seed,
                                          std::uint64_t trial) {
  Rng rng = make_rng(seed, trial, 0);
  return channel::generate_channel(config.K, config.R, config.L, rng(), config.taps, config.noise);
}

channel::ReconstructedChannel feedback_round(const channel::ChannelRealization& ch,
                                             const PipelineConfig& config, double power,
                                             std::uint64_t seed, std::uint64_t stream,
                                             std::uint64_t substream,
                                             std::vector<std::int64_t>* bits) {
  const int K = ch.users();
  const int N = config.layout().N;
  std::vector<channel::FeedbackMessage> msgs;
  msgs.reserve(static_cast<std::size_t>(K));
  for (int i = 0; i < K; ++i) {
    channel::FeedbackConfig fb;
    fb.mode = config.feedback;
    fb.power = power;
    fb.alpha = config.alpha_of(i);
    if (fb.mode == channel::FeedbackMode::codebook) {
      const quantizer::FeedbackBudget budget{K, ch.rx_antennas(), ch.tap_count(), power, fb.alpha};
      const auto need = budget.bits();
      if (need > config.max_codebook_bits) {
        throw InvalidArgument("codebook feedback needs " + std::to_string(need) +
                              " bits, above the limit of " +
                              std::to_string(config.max_codebook_bits));
      }
      fb.codebook = codebook_cache(seed).get(budget.dim(), K, static_cast<int>(need), seed);
    }
    Rng rng = make_rng(seed, stream, kFeedbackBase + substream * static_cast<std::uint64_t>(K) + i);
    msgs.push_back(channel::receiver_feedback(ch, i, fb, rng));
  }
  if (bits) {
    bits->clear();
    for (const auto& m : msgs) bits->push_back(m.bits);
  }
  return channel::reconstruct(msgs, ch.rx_antennas(), N);
}

PipelineResult run_pipeline(const channel::ChannelRealization& ch, const PipelineConfig& config,
                            double power, std::uint64_t seed, std::uint64_t stream) {
  config.validate();
  if (ch.users() != config.K || ch.rx_antennas() != config.R || ch.tap_count() != config.L) {
    throw InvalidArgument("channel realization does not match the configured (K, R, L)");
  }
  const int N = config.layout().N;
  std::vector<std::int64_t> bits;
  const auto rec = feedback_round(ch, config, power, seed, stream, 0, &bits);
  int attempts = 1;
  auto bf = align_with_retries(rec.wtilde, config, seed, stream, 0, &attempts);
  const auto truth = channel::to_tone_domain(ch, N);
  auto report = rates::achievable_rates(truth, bf, power, ch.noise_power());
  return PipelineResult{std::move(bf), std::move(report), std::move(bits), attempts};
}

SweepResult dof_sweep(const SweepConfig& config) {
  const auto& pc = config.pipeline;
  pc.validate();
  if (config.p_log2.size() < 3) throw InvalidArgument("power grid needs at least 3 points");
  if (config.trials < 1) throw InvalidArgument("trials must be >= 1");
  const int K = pc.K;
  const int N = pc.layout().N;
  const std::size_t P = config.p_log2.size();
  const std::size_t T = static_cast<std::size_t>(config.trials);

  struct Slot {
    std::vector<rates::RateReport> reports;  // one per power
    double residual = 0.0;
    double min_signal = std::numeric_limits<double>::infinity();
    int retries = 0;
  };
  std::vector<Slot> slots(T);

  parallel_for(T, config.jobs, [&](std::size_t t) {
    Slot& slot = slots[t];
    const auto ch = trial_channel(pc, config.seed, t);
    const auto truth = channel::to_tone_domain(ch, N);
    const auto note = [&](const alignment::BeamformerSet& bf, int attempts) {
      slot.residual = std::max(slot.residual, bf.alignment_residual);
      slot.min_signal = std::min(slot.min_signal, bf.min_signal);
      slot.retries += attempts - 1;
    };
    if (pc.feedback == channel::FeedbackMode::perfect) {
      const auto rec = feedback_round(ch, pc, 1.0, config.seed, t, 0);
      int attempts = 1;
      const auto bf = align_with_retries(rec.wtilde, pc, config.seed, t, 0, &attempts);
      note(bf, attempts);
      for (std::size_t j = 0; j < P; ++j) {
        slot.reports.push_back(rates::achievable_rates(truth, bf, std::exp2(config.p_log2[j]),
                                                       ch.noise_power()));
      }
      return;
    }
    for (std::size_t j = 0; j < P; ++j) {
      const double power = std::exp2(config.p_log2[j]);
      const auto rec = feedback_round(ch, pc, power, config.seed, t, j);
      int attempts = 1;
      const auto bf = align_with_retries(rec.wtilde, pc, config.seed, t, j, &attempts);
      note(bf, attempts);
      slot.reports.push_back(rates::achievable_rates(truth, bf, power, ch.noise_power()));
    }
  });

  SweepResult out;
  out.weakest_signal = std::numeric_limits<double>::infinity();
  for (const auto& s : slots) {
    out.worst_residual = std::max(out.worst_residual, s.residual);
    out.weakest_signal = std::min(out.weakest_signal, s.min_signal);
    out.alignment_retries += s.retries;
  }

  const double inv = 1.0 / static_cast<double>(T);
  const std::size_t Ku = static_cast<std::size_t>(K);
  for (std::size_t j = 0; j < P; ++j) {
    SweepPoint pt;
    pt.p_log2 = config.p_log2[j];
    pt.user_rate.assign(Ku, 0.0);
    pt.user_interference.assign(Ku, 0.0);
    pt.mean_signal.assign(Ku, 0.0);
    pt.mean_i1.assign(Ku, 0.0);
    pt.mean_i2.assign(Ku, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
      const auto& rep = slots[t].reports[j];
      pt.sum_rate += inv * rep.sum_rate;
      pt.max_interference += inv * rep.max_interference();
      for (std::size_t i = 0; i < Ku; ++i) {
        pt.user_rate[i] += inv * rep.user_rate[i];
        pt.user_interference[i] += inv * rep.max_interference(static_cast<int>(i));
        const auto& streams = rep.terms[i];
        const double w = inv / static_cast<double>(streams.size());
        for (const auto& s : streams) {
          pt.mean_signal[i] += w * s.signal;
          pt.mean_i1[i] += w * s.i1;
          pt.mean_i2[i] += w * s.i2;
        }
      }
    }
    out.points.push_back(std::move(pt));
  }

  const auto series = [&](auto value) {
    std::vector<rates::DofPoint> pts;
    for (const auto& pt : out.points) pts.push_back({std::exp2(pt.p_log2), value(pt)});
    return pts;
  };
  out.sum_fit = rates::dof_fit(series([](const SweepPoint& p) { return p.sum_rate; }));
  out.interference_fit =
      rates::interference_boundedness(series([](const SweepPoint& p) { return p.max_interference; }));
  for (std::size_t i = 0; i < Ku; ++i) {
    out.user_fit.push_back(rates::dof_fit(series([i](const SweepPoint& p) { return p.user_rate[i]; })));
    out.user_interference_fit.push_back(rates::interference_boundedness(
        series([i](const SweepPoint& p) { return p.user_interference[i]; })));
  }
  return out;
}

}  // namespace ialf::experiment
