#pragma once

#include <vector>

#include "ialf/alignment.hpp"
#include "ialf/channel.hpp"

/// Rates of beamformers evaluated against the true channel, with the
/// interference split into same-transmitter and cross-transmitter parts.
namespace ialf::rates {

struct StreamTerms {
  double signal = 0.0;
  double i1 = 0.0;  ///< from the user's own other streams
  double i2 = 0.0;  ///< from every other transmitter
};

/// terms[i][m] for receiver i, stream m.  Stream powers are P/(K·d_k) and the
/// receive filters are taken as given (unit norm from the alignment engines).
std::vector<std::vector<StreamTerms>> interference_terms(const channel::ToneChannel& h,
                                                         const alignment::BeamformerSet& bf,
                                                         double power);

/// Same decomposition built one pseudo-beamformer at a time, h̄^H b.  Slow;
/// kept as a cross-check of the blockwise path.
std::vector<std::vector<StreamTerms>> interference_terms_pseudo(const channel::ToneChannel& h,
                                                                const alignment::BeamformerSet& bf,
                                                                double power);

struct RateReport {
  std::vector<std::vector<StreamTerms>> terms;
  double noise = 1.0;
  std::vector<double> user_rate;  ///< bits per tone use
  double sum_rate = 0.0;

  /// max over streams of I1 + I2 at receiver i.
  double max_interference(int i) const;
  double max_interference() const;
};

RateReport achievable_rates(const channel::ToneChannel& h, const alignment::BeamformerSet& bf,
                            double power, double noise = 1.0);

/// (1/N) Σ_m log₂(1 + S/(I1+I2+N_o)).
double user_rate(const std::vector<StreamTerms>& streams, int N, double noise);

struct DofPoint {
  double power = 0.0;
  double value = 0.0;
};

struct DofEstimate {
  double slope = 0.0;
  double intercept = 0.0;
  double fit_quality = 0.0;  ///< R², 1 for collinear points
  std::vector<DofPoint> points;
};

/// Least-squares fit of value against log₂P.
DofEstimate dof_fit(const std::vector<DofPoint>& points);

struct BoundednessReport {
  DofEstimate fit;  ///< log₂(interference) against log₂P
  double floor = 0.0;
  double threshold = 0.1;
  bool pass = false;
};

/// Interference values below `floor` are clamped to it before taking logs, so
/// a sweep sitting at the numerical floor fits a slope of zero.
BoundednessReport interference_boundedness(const std::vector<DofPoint>& sweep,
                                           double floor = 1e-12, double threshold = 0.1);

}  // namespace ialf::rates
