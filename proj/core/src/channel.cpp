#include "ialf/channel.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace ialf::channel {

namespace {

constexpr double kTruncationRadius = 3.0;

std::size_t link_index(int i, int k, int K) {
  return static_cast<std::size_t>(i) * static_cast<std::size_t>(K) + static_cast<std::size_t>(k);
}

void check_link(int i, int k, int K) {
  if (i < 0 || i >= K || k < 0 || k >= K) {
    throw InvalidArgument("link (" + std::to_string(i) + ", " + std::to_string(k) +
                          ") out of range for K=" + std::to_string(K));
  }
}

// Column-wise unnormalized DFT of the zero-padded rows of `taps` (L×R → N×R).
CMatrix zero_padded_dft(const CMatrix& taps, int N) {
  const auto L = taps.rows();
  CMatrix out = CMatrix::Zero(N, taps.cols());
  for (int r = 0; r < N; ++r) {
    for (Eigen::Index l = 0; l < L; ++l) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>((l * r) % N) / N;
      out.row(r) += std::polar(1.0, angle) * taps.row(l);
    }
  }
  return out;
}

cplx draw_tap(TapDistribution dist, Rng& rng) {
  for (;;) {
    const cplx h = complex_gaussian(1, rng)(0);
    if (dist == TapDistribution::gaussian || std::abs(h) <= kTruncationRadius) return h;
  }
}

}  // namespace

ChannelRealization::ChannelRealization(int K, int R, int L, std::vector<CMatrix> taps,
                                       double noise_power)
    : K_(K), R_(R), L_(L), noise_power_(noise_power), taps_(std::move(taps)) {
  if (K < 1 || R < 1 || L < 1) throw InvalidArgument("channel needs K, R, L >= 1");
  if (!(noise_power > 0.0)) throw InvalidArgument("noise power must be positive");
  if (taps_.size() != link_index(K, 0, K)) {
    throw InvalidArgument("channel needs K*K tap matrices, got " + std::to_string(taps_.size()));
  }
  for (const auto& t : taps_) {
    if (t.rows() != L || t.cols() != R) throw InvalidArgument("tap matrix must be L x R");
    if (!t.allFinite()) throw InvalidArgument("tap matrix has non-finite entries");
  }
}

const CMatrix& ChannelRealization::taps(int i, int k) const {
  check_link(i, k, K_);
  return taps_[link_index(i, k, K_)];
}

ToneChannel::ToneChannel(int K, int R, int N, std::vector<CMatrix> tones)
    : K_(K), R_(R), N_(N), tones_(std::move(tones)) {
  if (K < 1 || R < 1 || N < 1) throw InvalidArgument("tone channel needs K, R, N >= 1");
  if (tones_.size() != link_index(K, 0, K)) {
    throw InvalidArgument("tone channel needs K*K tone matrices");
  }
  for (const auto& t : tones_) {
    if (t.rows() != N || t.cols() != R) throw InvalidArgument("tone matrix must be N x R");
  }
}

const CMatrix& ToneChannel::tones(int i, int k) const {
  check_link(i, k, K_);
  return tones_[link_index(i, k, K_)];
}

CMatrix ToneChannel::dense(int i, int k) const {
  const CMatrix& f = tones(i, k);
  CMatrix out = CMatrix::Zero(static_cast<Eigen::Index>(R_) * N_, N_);
  for (int r = 0; r < N_; ++r) out.block(r * R_, r, R_, 1) = f.row(r).conjugate().transpose();
  return out;
}

CVector ToneChannel::stacked(int i, int k) const {
  const CMatrix& f = tones(i, k);
  CVector out(static_cast<Eigen::Index>(R_) * N_);
  for (int r = 0; r < N_; ++r) out.segment(r * R_, R_) = f.row(r).transpose();
  return out;
}

CMatrix ToneChannel::apply(int i, int k, const CMatrix& X) const {
  if (X.rows() != N_) throw InvalidArgument("ToneChannel::apply expects N rows");
  const CMatrix& f = tones(i, k);
  CMatrix out(static_cast<Eigen::Index>(R_) * N_, X.cols());
  for (int r = 0; r < N_; ++r) {
    out.middleRows(r * R_, R_) = f.row(r).conjugate().transpose() * X.row(r);
  }
  return out;
}

const CMatrix& ReconstructedChannel::qhat_matrix(int i, int k) const {
  const int K = wtilde.users();
  check_link(i, k, K);
  return qhat[link_index(i, k, K)];
}

ChannelRealization generate_channel(int K, int R, int L, std::uint64_t seed,
                                    TapDistribution dist, double noise_power) {
  if (K < 2) throw InvalidArgument("generate_channel needs K >= 2");
  if (R < 1 || L < 1) throw InvalidArgument("generate_channel needs R >= 1 and L >= 1");
  Rng rng = make_rng(seed);
  std::vector<CMatrix> taps;
  taps.reserve(link_index(K, 0, K));
  for (int i = 0; i < K; ++i) {
    for (int k = 0; k < K; ++k) {
      CMatrix t(L, R);
      for (int l = 0; l < L; ++l) {
        for (int m = 0; m < R; ++m) t(l, m) = draw_tap(dist, rng);
      }
      taps.push_back(std::move(t));
    }
  }
  return ChannelRealization(K, R, L, std::move(taps), noise_power);
}

ToneChannel to_tone_domain(const ChannelRealization& ch, int N) {
  if (N < ch.tap_count()) {
    throw InvalidArgument("tone count N=" + std::to_string(N) + " is smaller than L=" +
                          std::to_string(ch.tap_count()));
  }
  const int K = ch.users();
  std::vector<CMatrix> tones;
  tones.reserve(link_index(K, 0, K));
  for (int i = 0; i < K; ++i) {
    for (int k = 0; k < K; ++k) tones.push_back(zero_padded_dft(ch.taps(i, k), N));
  }
  return ToneChannel(K, ch.rx_antennas(), N, std::move(tones));
}

grassmann::GrassmannPoint vectorize_direction(const ChannelRealization& ch, int i, int k) {
  const CMatrix& t = ch.taps(i, k);
  const int L = ch.tap_count();
  const int R = ch.rx_antennas();
  if (R * L < 2) {
    throw InvalidArgument("a single-coefficient link (R*L = 1) has no direction to feed back");
  }
  CVector v(R * L);
  for (int m = 0; m < R; ++m) {
    for (int l = 0; l < L; ++l) v(m * L + l) = t(l, m);
  }
  const double norm = v.norm();
  if (!(norm > 0.0)) {
    throw InvalidArgument("link (" + std::to_string(i) + ", " + std::to_string(k) +
                          ") is identically zero; its direction is undefined");
  }
  return grassmann::GrassmannPoint(v / norm);
}

grassmann::CompositeGrassmannPoint receiver_directions(const ChannelRealization& ch, int i) {
  std::vector<grassmann::GrassmannPoint> parts;
  parts.reserve(static_cast<std::size_t>(ch.users()));
  for (int k = 0; k < ch.users(); ++k) parts.push_back(vectorize_direction(ch, i, k));
  return grassmann::CompositeGrassmannPoint(std::move(parts));
}

FeedbackMessage receiver_feedback(const ChannelRealization& ch, int i,
                                  const FeedbackConfig& config, Rng& rng) {
  if (i < 0 || i >= ch.users()) throw InvalidArgument("receiver index out of range");
  auto q = receiver_directions(ch, i);
  switch (config.mode) {
    case FeedbackMode::perfect:
      return FeedbackMessage{i, std::move(q), -1, std::nullopt};
    case FeedbackMode::codebook: {
      if (!config.codebook) throw InvalidArgument("codebook feedback without a codebook");
      const auto index = quantizer::encode(q, *config.codebook);
      return FeedbackMessage{i, quantizer::decode(index, *config.codebook),
                             config.codebook->bits(), index};
    }
    case FeedbackMode::oracle: {
      const quantizer::FeedbackBudget budget{ch.users(), ch.rx_antennas(), ch.tap_count(),
                                             config.power, config.alpha};
      const auto bits = budget.bits();
      return FeedbackMessage{i, quantizer::distortion_oracle_quantize(q, bits, rng), bits,
                             std::nullopt};
    }
  }
  throw InvalidArgument("unknown feedback mode");
}

ReconstructedChannel reconstruct(const std::vector<FeedbackMessage>& msgs, int R, int N) {
  if (msgs.empty()) throw InvalidArgument("reconstruct needs one feedback message per user");
  const int K = msgs.front().point.components();
  const int n = msgs.front().point.dim();
  if (R < 1 || n % R != 0) throw InvalidArgument("feedback dimension is not a multiple of R");
  const int L = n / R;
  if (N < L) throw InvalidArgument("tone count N is smaller than the tap count L");

  std::vector<const FeedbackMessage*> by_user(static_cast<std::size_t>(K), nullptr);
  for (const auto& m : msgs) {
    if (m.user < 0 || m.user >= K) throw InvalidArgument("feedback message for unknown user");
    if (m.point.components() != K || m.point.dim() != n) {
      throw InvalidArgument("feedback messages disagree on (n, K)");
    }
    by_user[static_cast<std::size_t>(m.user)] = &m;
  }
  for (int i = 0; i < K; ++i) {
    if (!by_user[static_cast<std::size_t>(i)]) {
      throw InvalidArgument("missing feedback message from user " + std::to_string(i));
    }
  }

  const double scale = 1.0 / std::sqrt(static_cast<double>(N));
  std::vector<CMatrix> tones;
  std::vector<CMatrix> qhat;
  tones.reserve(link_index(K, 0, K));
  qhat.reserve(link_index(K, 0, K));
  for (int i = 0; i < K; ++i) {
    const auto& point = by_user[static_cast<std::size_t>(i)]->point;
    for (int k = 0; k < K; ++k) {
      const CVector& v = point[k].coords();
      CMatrix q(L, R);
      for (int m = 0; m < R; ++m) {
        for (int l = 0; l < L; ++l) q(l, m) = v(m * L + l);
      }
      tones.push_back(scale * zero_padded_dft(q, N));
      qhat.push_back(std::move(q));
    }
  }
  return ReconstructedChannel{ToneChannel(K, R, N, std::move(tones)), std::move(qhat), L};
}

}  // namespace ialf::channel
