#include "ialf/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

namespace ialf::alignment {

namespace {

using channel::ToneChannel;

constexpr std::int64_t kMaxTones = std::int64_t{1} << 24;

std::int64_t checked_pow(std::int64_t base, std::int64_t exp) {
  std::int64_t out = 1;
  for (std::int64_t e = 0; e < exp; ++e) {
    if (base != 0 && out > std::numeric_limits<std::int64_t>::max() / base) {
      throw InvalidArgument("IA parameters overflow: (n+1)^Gamma is too large");
    }
    out *= base;
  }
  return out;
}

void check_channel(const ToneChannel& w, const StreamLayout& layout) {
  if (w.users() != layout.K || w.rx_antennas() != layout.R || w.tone_count() != layout.N) {
    throw InvalidArgument("channel shape (K=" + std::to_string(w.users()) +
                          ", R=" + std::to_string(w.rx_antennas()) +
                          ", N=" + std::to_string(w.tone_count()) +
                          ") does not match the stream layout (K=" + std::to_string(layout.K) +
                          ", R=" + std::to_string(layout.R) + ", N=" + std::to_string(layout.N) + ")");
  }
  if (static_cast<int>(layout.d.size()) != layout.K) {
    throw InvalidArgument("stream layout needs one d_i per user");
  }
}

// Eigenvectors of the `count` smallest eigenvalues of a Hermitian matrix.
CMatrix smallest_eigenvectors(const CMatrix& hermitian, int count) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(hermitian);
  return solver.eigenvectors().leftCols(count);
}

CMatrix random_orthonormal(int rows, int cols, Rng& rng) {
  CMatrix g(rows, cols);
  for (int c = 0; c < cols; ++c) g.col(c) = complex_gaussian(rows, rng);
  Eigen::HouseholderQR<CMatrix> qr(g);
  return qr.householderQ() * CMatrix::Identity(rows, cols);
}

void normalize_columns(CMatrix& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const double norm = m.col(c).norm();
    if (norm > 0.0) m.col(c) /= norm;
  }
}

double total_leakage(const ToneChannel& w, const StreamLayout& layout,
                     const std::vector<CMatrix>& u, const std::vector<CMatrix>& v) {
  double sum = 0.0;
  for (int i = 0; i < layout.K; ++i) {
    for (int k = 0; k < layout.K; ++k) {
      if (k != i) sum += (u[i].adjoint() * w.apply(i, k, v[k])).squaredNorm();
    }
  }
  return sum;
}

// Groups of users forced to share transmit directions.
std::vector<std::vector<int>> direction_groups(const StreamLayout& layout, bool shared) {
  std::vector<std::vector<int>> groups;
  if (!shared) {
    for (int k = 0; k < layout.K; ++k) groups.push_back({k});
    return groups;
  }
  const int head = std::min(layout.K, layout.R + 1);
  std::vector<int> first(static_cast<std::size_t>(head));
  std::iota(first.begin(), first.end(), 0);
  groups.push_back(first);
  if (layout.K > head) {
    std::vector<int> rest(static_cast<std::size_t>(layout.K - head));
    std::iota(rest.begin(), rest.end(), head);
    groups.push_back(rest);
  }
  for (const auto& g : groups) {
    for (const int k : g) {
      if (layout.d[static_cast<std::size_t>(k)] != layout.d[static_cast<std::size_t>(g.front())]) {
        throw InvalidArgument("shared transmit directions need equal d within each group");
      }
    }
  }
  return groups;
}

BeamformerSet finish(const ToneChannel& w, const StreamLayout& layout, std::vector<CMatrix> v,
                     double tolerance, int iterations) {
  BeamformerSet bf;
  bf.layout = layout;
  bf.u = zero_forcing_receivers(w, layout, v);
  bf.v = std::move(v);
  bf.tolerance = tolerance;
  bf.iterations = iterations;
  const auto report = verify_alignment(bf, w, 0.0, tolerance);
  bf.alignment_residual = report.residual;
  bf.min_signal = report.min_signal;
  return bf;
}

BeamformerSet leakage_min(const ToneChannel& w, const StreamLayout& layout,
                          const AlignmentOptions& options, Rng& rng) {
  const int K = layout.K;
  const auto groups = direction_groups(layout, options.shared_directions);

  std::vector<CMatrix> v(static_cast<std::size_t>(K));
  for (const auto& g : groups) {
    const CMatrix init = random_orthonormal(layout.N, layout.d[static_cast<std::size_t>(g.front())], rng);
    for (const int k : g) v[static_cast<std::size_t>(k)] = init;
  }
  std::vector<CMatrix> u(static_cast<std::size_t>(K));
  const Eigen::Index rx_dim = static_cast<Eigen::Index>(layout.R) * layout.N;

  std::vector<double> trajectory;
  double residual = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= options.max_iters; ++it) {
    for (int i = 0; i < K; ++i) {
      CMatrix cov = CMatrix::Zero(rx_dim, rx_dim);
      for (int k = 0; k < K; ++k) {
        if (k == i) continue;
        const CMatrix image = w.apply(i, k, v[static_cast<std::size_t>(k)]);
        cov.noalias() += image * image.adjoint();
      }
      u[static_cast<std::size_t>(i)] = smallest_eigenvectors(cov, layout.d[static_cast<std::size_t>(i)]);
    }
    for (const auto& g : groups) {
      CMatrix cov = CMatrix::Zero(layout.N, layout.N);
      for (const int k : g) {
        for (int i = 0; i < K; ++i) {
          if (i == k) continue;
          // W_ik^H U_i, formed as (U_i^H W_ik)^H.
          const CMatrix back =
              (u[static_cast<std::size_t>(i)].adjoint() * w.dense(i, k)).adjoint();
          cov.noalias() += back * back.adjoint();
        }
      }
      const CMatrix dirs = smallest_eigenvectors(cov, layout.d[static_cast<std::size_t>(g.front())]);
      for (const int k : g) v[static_cast<std::size_t>(k)] = dirs;
    }

    const double leak = std::sqrt(total_leakage(w, layout, u, v));
    trajectory.push_back(leak);
    if (leak <= 0.1 * options.tolerance || it == options.max_iters) {
      auto bf = finish(w, layout, v, options.tolerance, it);
      residual = bf.alignment_residual;
      if (residual <= options.tolerance) return bf;
    }
  }
  throw AlignmentError("leakage-min did not reach residual " + std::to_string(options.tolerance) +
                           " within " + std::to_string(options.max_iters) +
                           " iterations (final residual " + std::to_string(residual) + ")",
                       residual, std::move(trajectory));
}

BeamformerSet closed_form_three_user(const ToneChannel& w, const StreamLayout& layout,
                                     const AlignmentOptions& options) {
  if (layout.K != 3 || layout.R != 1) {
    throw InvalidArgument("cj3 engine needs K=3 and R=1");
  }
  const int n = layout.d[1];
  if (n < 1 || layout.N != 2 * n + 1 || layout.d[0] != n + 1 || layout.d[2] != n) {
    throw InvalidArgument("cj3 engine needs the layout N=2n+1, d=(n+1, n, n)");
  }
  const int N = layout.N;
  // Diagonal of H̄_{i,k} for R = 1: the conjugated tone values.
  const auto diag = [&](int i, int k) -> CVector {
    CVector out = w.tones(i, k).col(0).conjugate();
    if ((out.array().abs() == 0.0).any()) {
      throw InvalidArgument("cj3 engine: channel has a spectral null on some tone");
    }
    return out;
  };
  const CVector d12 = diag(0, 1), d13 = diag(0, 2), d21 = diag(1, 0), d23 = diag(1, 2),
                d31 = diag(2, 0), d32 = diag(2, 1);

  // V2 = (H32^{-1} H31) X and V3 = (H13^{-1} H12) V2 keep interference from
  // transmitters 2 and 3 on one n-dim subspace at receiver 1; X = [w … T^{n-1} w]
  // and V1 = [w … T^n w] then fold both into H21 V1 / H31 V1 at receivers 2, 3.
  const CVector ratio_31_32 = d31.cwiseQuotient(d32);
  const CVector ratio_12_13 = d12.cwiseQuotient(d13);
  const CVector t = d23.cwiseQuotient(d21).cwiseProduct(ratio_12_13).cwiseProduct(ratio_31_32);

  CMatrix v1(N, n + 1);
  CVector power = CVector::Ones(N);
  for (int j = 0; j <= n; ++j) {
    v1.col(j) = power / power.norm();
    power = power.cwiseProduct(t);
    power /= power.norm();
  }
  CMatrix v2(N, n);
  CMatrix v3(N, n);
  for (int j = 0; j < n; ++j) {
    v2.col(j) = ratio_31_32.cwiseProduct(v1.col(j));
    v3.col(j) = ratio_12_13.cwiseProduct(v2.col(j));
  }
  normalize_columns(v2);
  normalize_columns(v3);
  return finish(w, layout, {v1, v2, v3}, options.tolerance, 0);
}

}  // namespace

int StreamLayout::total_streams() const { return std::accumulate(d.begin(), d.end(), 0); }

double StreamLayout::dof_sum() const {
  return static_cast<double>(total_streams()) / static_cast<double>(N);
}

double IaParameters::dof_target(int i) const {
  if (i < 0 || i >= K) throw InvalidArgument("user index out of range");
  return static_cast<double>(d[static_cast<std::size_t>(i)]) / static_cast<double>(N);
}

double IaParameters::dof_sum() const {
  const auto total = std::accumulate(d.begin(), d.end(), std::int64_t{0});
  return static_cast<double>(total) / static_cast<double>(N);
}

double IaParameters::dof_sum_limit() const {
  return static_cast<double>(K) * R / static_cast<double>(R + 1);
}

StreamLayout IaParameters::layout() const {
  if (N > kMaxTones) {
    throw InvalidArgument("N=" + std::to_string(N) + " tones is too large to simulate");
  }
  StreamLayout out{K, R, static_cast<int>(N), {}};
  for (const auto di : d) out.d.push_back(static_cast<int>(di));
  return out;
}

IaParameters ia_parameters(int K, int R, int n) {
  if (R < 1) throw InvalidArgument("R must be >= 1");
  if (n < 1) throw InvalidArgument("auxiliary parameter n must be >= 1");
  if (K <= R) {
    throw InvalidArgument("K=" + std::to_string(K) + " <= R=" + std::to_string(R) +
                          ": zero-forcing already attains K degrees of freedom, no alignment needed");
  }
  IaParameters p;
  p.K = K;
  p.R = R;
  p.n = n;
  p.gamma = static_cast<std::int64_t>(K) * R * (K - R - 1);
  const std::int64_t big = checked_pow(n + 1, p.gamma);
  const std::int64_t small = checked_pow(n, p.gamma);
  if (big > std::numeric_limits<std::int64_t>::max() / (R + 1)) {
    throw InvalidArgument("IA parameters overflow: N is too large");
  }
  p.N = (R + 1) * big;
  for (int i = 0; i < K; ++i) p.d.push_back(i < R + 1 ? R * big : R * small);
  return p;
}

StreamLayout cj3_layout(int n) {
  if (n < 1) throw InvalidArgument("cj3 layout needs n >= 1");
  return StreamLayout{3, 1, 2 * n + 1, {n + 1, n, n}};
}

void check_feasible(const StreamLayout& layout) {
  const int rx_dim = layout.R * layout.N;
  for (int i = 0; i < layout.K; ++i) {
    const int di = layout.d[static_cast<std::size_t>(i)];
    if (di < 1) throw InvalidArgument("every user needs d_i >= 1");
    if (di > layout.N) {
      throw InvalidArgument("user " + std::to_string(i) + " sends " + std::to_string(di) +
                            " streams over only N=" + std::to_string(layout.N) + " tones");
    }
    int largest = 0;
    for (int k = 0; k < layout.K; ++k) {
      if (k != i) largest = std::max(largest, layout.d[static_cast<std::size_t>(k)]);
    }
    if (di + largest > rx_dim) {
      throw InvalidArgument("receiver " + std::to_string(i) + " cannot separate d_i=" +
                            std::to_string(di) + " desired dimensions from an interferer of " +
                            std::to_string(largest) + " dimensions in RN=" +
                            std::to_string(rx_dim));
    }
  }
}

std::vector<CMatrix> zero_forcing_receivers(const ToneChannel& w, const StreamLayout& layout,
                                            const std::vector<CMatrix>& v) {
  check_channel(w, layout);
  const Eigen::Index rx_dim = static_cast<Eigen::Index>(layout.R) * layout.N;
  std::vector<CMatrix> u;
  u.reserve(static_cast<std::size_t>(layout.K));
  for (int i = 0; i < layout.K; ++i) {
    const int di = layout.d[static_cast<std::size_t>(i)];
    Eigen::Index cols = 0;
    for (int k = 0; k < layout.K; ++k) {
      if (k != i) cols += v[static_cast<std::size_t>(k)].cols();
    }
    CMatrix interference(rx_dim, cols);
    Eigen::Index at = 0;
    for (int k = 0; k < layout.K; ++k) {
      if (k == i) continue;
      const auto width = v[static_cast<std::size_t>(k)].cols();
      interference.middleCols(at, width) = w.apply(i, k, v[static_cast<std::size_t>(k)]);
      at += width;
    }

    // Least-interfered subspace: left singular vectors beyond the numerical
    // rank, and at least d_i of them.
    CMatrix basis = CMatrix::Identity(rx_dim, rx_dim);
    if (cols > 0) {
      Eigen::BDCSVD<CMatrix> svd(interference, Eigen::ComputeFullU);
      const auto& sigma = svd.singularValues();
      const double top = sigma.size() > 0 ? sigma(0) : 0.0;
      Eigen::Index rank = 0;
      for (Eigen::Index s = 0; s < sigma.size(); ++s) {
        if (sigma(s) > 1e-12 * std::max(top, 1.0)) ++rank;
      }
      const Eigen::Index room = std::max<Eigen::Index>(di, rx_dim - rank);
      basis = svd.matrixU().rightCols(room);
    }

    const CMatrix desired = basis.adjoint() * w.apply(i, i, v[static_cast<std::size_t>(i)]);
    Eigen::CompleteOrthogonalDecomposition<CMatrix> cod(desired.adjoint());
    CMatrix filters = basis * cod.pseudoInverse();
    normalize_columns(filters);
    u.push_back(std::move(filters));
  }
  return u;
}

BeamformerSet build_beamformers(const ToneChannel& w, const StreamLayout& layout,
                                const AlignmentOptions& options, Rng& rng) {
  check_channel(w, layout);
  check_feasible(layout);
  if (!(options.tolerance > 0.0)) throw InvalidArgument("alignment tolerance must be positive");
  if (options.max_iters < 1) throw InvalidArgument("max_iters must be >= 1");
  switch (options.engine) {
    case Engine::leakage_min:
      return leakage_min(w, layout, options, rng);
    case Engine::cj3: {
      auto bf = closed_form_three_user(w, layout, options);
      if (!(bf.alignment_residual <= options.tolerance)) {
        throw AlignmentError("cj3 construction residual " + std::to_string(bf.alignment_residual) +
                                 " exceeds tolerance " + std::to_string(options.tolerance),
                             bf.alignment_residual, {bf.alignment_residual});
      }
      return bf;
    }
  }
  throw InvalidArgument("unknown alignment engine");
}

AlignmentReport verify_alignment(const BeamformerSet& bf, const ToneChannel& w, double c_min,
                                 std::optional<double> tolerance) {
  check_channel(w, bf.layout);
  AlignmentReport report;
  report.min_signal = std::numeric_limits<double>::infinity();
  for (int i = 0; i < bf.layout.K; ++i) {
    const CMatrix& ui = bf.u[static_cast<std::size_t>(i)];
    for (int k = 0; k < bf.layout.K; ++k) {
      const CMatrix gains = ui.adjoint() * w.apply(i, k, bf.v[static_cast<std::size_t>(k)]);
      if (k != i) {
        report.max_cross_leakage = std::max(report.max_cross_leakage, gains.cwiseAbs().maxCoeff());
        continue;
      }
      for (Eigen::Index m = 0; m < gains.rows(); ++m) {
        for (Eigen::Index p = 0; p < gains.cols(); ++p) {
          const double mag = std::abs(gains(m, p));
          if (m == p) {
            report.min_signal = std::min(report.min_signal, mag);
          } else {
            report.max_self_leakage = std::max(report.max_self_leakage, mag);
          }
        }
      }
    }
  }
  report.residual = std::max(report.max_self_leakage, report.max_cross_leakage);
  const double tol = tolerance.value_or(bf.tolerance);
  report.pass = report.residual <= tol && report.min_signal >= c_min;
  return report;
}

CVector pseudo_beamformer(const CVector& u, const CVector& v, int R) {
  if (R < 1 || u.size() != static_cast<Eigen::Index>(R) * v.size()) {
    throw InvalidArgument("pseudo-beamformer needs length(u) = R * length(v)");
  }
  CVector b(u.size());
  for (Eigen::Index r = 0; r < v.size(); ++r) {
    for (int j = 0; j < R; ++j) b(r * R + j) = std::conj(u(r * R + j)) * v(r);
  }
  return b;
}

MimoReduction mimo_reduce(int K, int Mt, int Mr, int L, double power) {
  if (Mt < 1 || Mr < 1) throw InvalidArgument("antenna counts must be >= 1");
  if (L < 1) throw InvalidArgument("tap count L must be >= 1");
  if (!(power > 0.0)) throw InvalidArgument("power must be positive");
  MimoReduction out;
  out.K = K;
  out.Mt = Mt;
  out.Mr = Mr;
  out.L = L;
  out.power = power;
  out.swapped = Mt > Mr;
  const int lo = std::min(Mt, Mr);
  const int hi = std::max(Mt, Mr);
  out.R = hi / lo;
  if (K <= out.R) {
    throw InvalidArgument("K=" + std::to_string(K) + " <= R=" + std::to_string(out.R) +
                          ": zero-forcing regime, no alignment or feedback scaling applies");
  }
  out.virtual_users = K * lo;
  out.discarded_rx_antennas = hi - out.R * lo;
  const double per_log = static_cast<double>(out.R) * L - 1.0;
  const double log_p = std::log2(power);
  out.bits_per_virtual_user = static_cast<double>(K) * lo * per_log * log_p;
  out.bits_per_original_receiver = static_cast<double>(lo) * lo * K * per_log * log_p;
  out.dof_sum = static_cast<double>(K) * lo * out.R / (out.R + 1.0);
  return out;
}

}  // namespace ialf::alignment
