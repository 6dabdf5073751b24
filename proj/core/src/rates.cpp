#include "ialf/rates.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace ialf::rates {

namespace {

using alignment::BeamformerSet;
using channel::ToneChannel;

void check_shapes(const ToneChannel& h, const BeamformerSet& bf, double power) {
  const auto& lay = bf.layout;
  if (h.users() != lay.K || h.rx_antennas() != lay.R || h.tone_count() != lay.N) {
    throw InvalidArgument("channel and beamformers disagree on (K, R, N)");
  }
  if (static_cast<int>(bf.u.size()) != lay.K || static_cast<int>(bf.v.size()) != lay.K) {
    throw InvalidArgument("beamformer set needs one u and one v per user");
  }
  for (int k = 0; k < lay.K; ++k) {
    const int dk = lay.d[static_cast<std::size_t>(k)];
    if (bf.v[static_cast<std::size_t>(k)].rows() != lay.N ||
        bf.v[static_cast<std::size_t>(k)].cols() != dk ||
        bf.u[static_cast<std::size_t>(k)].rows() != static_cast<Eigen::Index>(lay.R) * lay.N ||
        bf.u[static_cast<std::size_t>(k)].cols() != dk) {
      throw InvalidArgument("beamformer dimensions do not match the stream layout");
    }
  }
  if (!(power >= 0.0)) throw InvalidArgument("power must be non-negative");
}

double stream_power(double power, const alignment::StreamLayout& lay, int k) {
  return power / (static_cast<double>(lay.K) * lay.d[static_cast<std::size_t>(k)]);
}

// Accumulates |gain(m, p)|² into terms, given the gain matrix between receiver
// i's filters and transmitter k's directions.
void accumulate(std::vector<StreamTerms>& terms, const CMatrix& gains, bool own, double p) {
  for (Eigen::Index m = 0; m < gains.rows(); ++m) {
    auto& t = terms[static_cast<std::size_t>(m)];
    for (Eigen::Index q = 0; q < gains.cols(); ++q) {
      const double g = p * std::norm(gains(m, q));
      if (!own) {
        t.i2 += g;
      } else if (q == m) {
        t.signal += g;
      } else {
        t.i1 += g;
      }
    }
  }
}

}  // namespace

std::vector<std::vector<StreamTerms>> interference_terms(const ToneChannel& h,
                                                         const BeamformerSet& bf, double power) {
  check_shapes(h, bf, power);
  const auto& lay = bf.layout;
  std::vector<std::vector<StreamTerms>> out(static_cast<std::size_t>(lay.K));
  for (int i = 0; i < lay.K; ++i) {
    auto& terms = out[static_cast<std::size_t>(i)];
    terms.resize(static_cast<std::size_t>(lay.d[static_cast<std::size_t>(i)]));
    const CMatrix& ui = bf.u[static_cast<std::size_t>(i)];
    for (int k = 0; k < lay.K; ++k) {
      const CMatrix gains = ui.adjoint() * h.apply(i, k, bf.v[static_cast<std::size_t>(k)]);
      accumulate(terms, gains, k == i, stream_power(power, lay, k));
    }
  }
  return out;
}

std::vector<std::vector<StreamTerms>> interference_terms_pseudo(const ToneChannel& h,
                                                                const BeamformerSet& bf,
                                                                double power) {
  check_shapes(h, bf, power);
  const auto& lay = bf.layout;
  std::vector<std::vector<StreamTerms>> out(static_cast<std::size_t>(lay.K));
  for (int i = 0; i < lay.K; ++i) {
    const CMatrix& ui = bf.u[static_cast<std::size_t>(i)];
    auto& terms = out[static_cast<std::size_t>(i)];
    terms.resize(static_cast<std::size_t>(ui.cols()));
    for (int k = 0; k < lay.K; ++k) {
      const CVector hbar = h.stacked(i, k);
      const CMatrix& vk = bf.v[static_cast<std::size_t>(k)];
      CMatrix gains(ui.cols(), vk.cols());
      for (Eigen::Index m = 0; m < ui.cols(); ++m) {
        for (Eigen::Index q = 0; q < vk.cols(); ++q) {
          gains(m, q) = hbar.dot(alignment::pseudo_beamformer(ui.col(m), vk.col(q), lay.R));
        }
      }
      accumulate(terms, gains, k == i, stream_power(power, lay, k));
    }
  }
  return out;
}

double user_rate(const std::vector<StreamTerms>& streams, int N, double noise) {
  if (N < 1) throw InvalidArgument("tone count must be >= 1");
  if (!(noise > 0.0)) throw InvalidArgument("noise power N_o must be positive");
  double sum = 0.0;
  for (const auto& s : streams) sum += std::log2(1.0 + s.signal / (s.i1 + s.i2 + noise));
  return sum / N;
}

RateReport achievable_rates(const ToneChannel& h, const BeamformerSet& bf, double power,
                            double noise) {
  if (!(noise > 0.0)) throw InvalidArgument("noise power N_o must be positive");
  RateReport report;
  report.terms = interference_terms(h, bf, power);
  report.noise = noise;
  for (const auto& streams : report.terms) {
    report.user_rate.push_back(user_rate(streams, bf.layout.N, noise));
    report.sum_rate += report.user_rate.back();
  }
  return report;
}

double RateReport::max_interference(int i) const {
  if (i < 0 || i >= static_cast<int>(terms.size())) throw InvalidArgument("user out of range");
  double worst = 0.0;
  for (const auto& s : terms[static_cast<std::size_t>(i)]) worst = std::max(worst, s.i1 + s.i2);
  return worst;
}

double RateReport::max_interference() const {
  double worst = 0.0;
  for (int i = 0; i < static_cast<int>(terms.size()); ++i) worst = std::max(worst, max_interference(i));
  return worst;
}

DofEstimate dof_fit(const std::vector<DofPoint>& points) {
  std::set<double> distinct;
  for (const auto& p : points) {
    if (!(p.power > 0.0)) throw InvalidArgument("dof_fit needs positive powers");
    if (!std::isfinite(p.value)) throw InvalidArgument("dof_fit got a non-finite value");
    distinct.insert(p.power);
  }
  if (distinct.size() < 3) throw InvalidArgument("dof_fit needs at least 3 distinct powers");

  const double count = static_cast<double>(points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& p : points) {
    mx += std::log2(p.power);
    my += p.value;
  }
  mx /= count;
  my /= count;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& p : points) {
    const double dx = std::log2(p.power) - mx;
    const double dy = p.value - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  DofEstimate est;
  est.slope = sxy / sxx;
  est.intercept = my - est.slope * mx;
  const double explained = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  est.fit_quality = std::clamp(explained, 0.0, 1.0);
  est.points = points;
  return est;
}

BoundednessReport interference_boundedness(const std::vector<DofPoint>& sweep, double floor,
                                           double threshold) {
  if (!(floor > 0.0)) throw InvalidArgument("interference floor must be positive");
  std::vector<DofPoint> logs;
  logs.reserve(sweep.size());
  for (const auto& p : sweep) {
    if (p.value < 0.0) throw InvalidArgument("interference power must be non-negative");
    logs.push_back({p.power, std::log2(std::max(p.value, floor))});
  }
  BoundednessReport report;
  report.fit = dof_fit(logs);
  report.floor = floor;
  report.threshold = threshold;
  report.pass = report.fit.slope <= threshold;
  return report;
}

}  // namespace ialf::rates
