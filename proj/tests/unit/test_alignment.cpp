#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "ialf/alignment.hpp"
#include "ialf/channel.hpp"

using namespace ialf;
using namespace ialf::alignment;

namespace {

std::int64_t ipow(std::int64_t b, std::int64_t e) {
  std::int64_t r = 1;
  while (e-- > 0) r *= b;
  return r;
}

channel::ReconstructedChannel perfect_reconstruction(const channel::ChannelRealization& ch, int N) {
  std::vector<channel::FeedbackMessage> msgs;
  Rng rng = make_rng(0);
  for (int i = 0; i < ch.users(); ++i) msgs.push_back(channel::receiver_feedback(ch, i, {}, rng));
  return channel::reconstruct(msgs, ch.rx_antennas(), N);
}

BeamformerSet leakage_min_run(std::uint64_t seed, const AlignmentOptions& opts = {}) {
  const auto ch = channel::generate_channel(3, 1, 2, seed);
  const auto layout = ia_parameters(3, 1, 1).layout();
  const auto rec = perfect_reconstruction(ch, layout.N);
  Rng rng = make_rng(seed, 1);
  return build_beamformers(rec.wtilde, layout, opts, rng);
}

}  // namespace

TEST(IaParameters, ThreeUserSiso) {
  const auto p = ia_parameters(3, 1, 1);
  EXPECT_EQ(p.gamma, 3);
  EXPECT_EQ(p.N, 16);
  EXPECT_EQ(p.d, (std::vector<std::int64_t>{8, 8, 1}));
  EXPECT_DOUBLE_EQ(p.dof_sum(), 17.0 / 16.0);
  EXPECT_DOUBLE_EQ(p.dof_target(2), 1.0 / 16.0);
  EXPECT_DOUBLE_EQ(p.dof_sum_limit(), 1.5);
}

TEST(IaParameters, FourUserSiso) {
  const auto p = ia_parameters(4, 1, 1);
  EXPECT_EQ(p.gamma, 8);
  EXPECT_EQ(p.N, 512);
  EXPECT_EQ(p.d, (std::vector<std::int64_t>{256, 256, 1, 1}));
}

TEST(IaParameters, GeneralFormula) {
  for (int K = 2; K <= 5; ++K) {
    for (int R = 1; R < K && R <= 3; ++R) {
      for (int n = 1; n <= 2; ++n) {
        const std::int64_t gamma = std::int64_t{K} * R * (K - R - 1);
        if (gamma > 30) continue;
        const auto p = ia_parameters(K, R, n);
        EXPECT_EQ(p.gamma, gamma);
        EXPECT_EQ(p.N, (R + 1) * ipow(n + 1, gamma));
        for (int i = 0; i < K; ++i) {
          EXPECT_EQ(p.d[static_cast<std::size_t>(i)], i <= R ? R * ipow(n + 1, gamma) : R * ipow(n, gamma));
        }
        const auto total = std::accumulate(p.d.begin(), p.d.end(), std::int64_t{0});
        EXPECT_LE(static_cast<double>(total) / static_cast<double>(p.N), p.dof_sum_limit() + 1e-12);
        for (int i = 0; i < K; ++i) {
          for (int k = 0; k < K; ++k) {
            if (k != i) EXPECT_LE(p.d[static_cast<std::size_t>(i)] + p.d[static_cast<std::size_t>(k)], p.N * R);
          }
        }
      }
    }
  }
}

TEST(IaParameters, DofIncreasesTowardLimit) {
  for (const auto [K, R] : {std::pair{3, 1}, {4, 1}, {4, 2}}) {
    double prev = 0.0;
    for (int n = 1; n <= 4; ++n) {
      const auto p = ia_parameters(K, R, n);
      EXPECT_GT(p.dof_sum(), prev);
      EXPECT_LE(p.dof_sum(), p.dof_sum_limit());
      prev = p.dof_sum();
    }
  }
}

TEST(IaParameters, Errors) {
  try {
    ia_parameters(2, 2, 1);
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("zero-forcing"), std::string::npos);
  }
  EXPECT_THROW(ia_parameters(3, 1, 0), InvalidArgument);
  EXPECT_THROW(ia_parameters(3, 0, 1), InvalidArgument);
  EXPECT_THROW(ia_parameters(12, 1, 9), InvalidArgument);
  EXPECT_THROW(ia_parameters(4, 1, 9).layout(), InvalidArgument);
}

TEST(Layouts, Cj3AndFeasibility) {
  const auto l = cj3_layout(2);
  EXPECT_EQ(l.N, 5);
  EXPECT_EQ(l.d, (std::vector<int>{3, 2, 2}));
  EXPECT_DOUBLE_EQ(l.dof_sum(), 7.0 / 5.0);
  EXPECT_THROW(cj3_layout(0), InvalidArgument);

  EXPECT_NO_THROW(check_feasible(ia_parameters(3, 1, 1).layout()));
  EXPECT_NO_THROW(check_feasible(l));
  EXPECT_THROW(check_feasible(StreamLayout{3, 1, 16, {10, 8, 1}}), InvalidArgument);
  EXPECT_THROW(check_feasible(StreamLayout{3, 2, 4, {5, 1, 1}}), InvalidArgument);
  EXPECT_THROW(check_feasible(StreamLayout{3, 1, 4, {0, 1, 1}}), InvalidArgument);
}

TEST(LeakageMin, AlignsPerfectFeedback) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto bf = leakage_min_run(seed);
    EXPECT_LE(bf.alignment_residual, 1e-8);
    EXPECT_GE(bf.min_signal, 1e-6);
    for (const auto& v : bf.v) {
      for (Eigen::Index c = 0; c < v.cols(); ++c) EXPECT_NEAR(v.col(c).norm(), 1.0, 1e-12);
    }
    for (const auto& u : bf.u) {
      for (Eigen::Index c = 0; c < u.cols(); ++c) EXPECT_NEAR(u.col(c).norm(), 1.0, 1e-12);
    }
  }
}

TEST(LeakageMin, SameSeedSameBeamformers) {
  const auto a = leakage_min_run(4);
  const auto b = leakage_min_run(4);
  EXPECT_EQ(a.v[0], b.v[0]);
  EXPECT_EQ(a.u[2], b.u[2]);
  EXPECT_EQ(a.iterations, b.iterations);
}

TEST(LeakageMin, SharedDirectionsAreShared) {
  AlignmentOptions opts;
  opts.shared_directions = true;
  const auto bf = leakage_min_run(6, opts);
  EXPECT_EQ(bf.v[0], bf.v[1]);
  EXPECT_LE(bf.alignment_residual, 1e-8);
}

TEST(LeakageMin, FailureCarriesTrajectory) {
  AlignmentOptions opts;
  opts.max_iters = 3;
  opts.tolerance = 1e-14;
  try {
    leakage_min_run(1, opts);
    FAIL();
  } catch (const AlignmentError& e) {
    EXPECT_EQ(e.trajectory().size(), 3u);
    EXPECT_GT(e.residual(), 1e-14);
  }
}

TEST(ZeroForcing, ExactForFixedDirections) {
  // Aligned directions from the engine: recomputed filters are exact.
  const auto ch = channel::generate_channel(3, 1, 2, 30);
  const auto layout = ia_parameters(3, 1, 1).layout();
  const auto rec = perfect_reconstruction(ch, layout.N);
  Rng rng = make_rng(31);
  const auto bf = build_beamformers(rec.wtilde, layout, {}, rng);
  BeamformerSet redo = bf;
  redo.u = zero_forcing_receivers(rec.wtilde, layout, bf.v);
  EXPECT_LE(verify_alignment(redo, rec.wtilde, 1e-6).residual, 1e-9);

  // Random directions with room to spare: exact to round-off.
  const StreamLayout roomy{3, 2, 4, {1, 1, 1}};
  const auto ch2 = channel::generate_channel(3, 2, 2, 32);
  const auto w2 = perfect_reconstruction(ch2, 4).wtilde;
  BeamformerSet rnd;
  rnd.layout = roomy;
  rnd.tolerance = 1e-12;
  for (int k = 0; k < 3; ++k) rnd.v.push_back(complex_gaussian(4, rng).normalized());
  rnd.u = zero_forcing_receivers(w2, roomy, rnd.v);
  EXPECT_LE(verify_alignment(rnd, w2, 1e-6).residual, 1e-12);
}

TEST(Cj3, ClosedFormAlignsDeterministically) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto ch = channel::generate_channel(3, 1, 2, 40 + seed);
    const auto layout = cj3_layout(2);
    const auto rec = perfect_reconstruction(ch, layout.N);
    AlignmentOptions opts;
    opts.engine = Engine::cj3;
    opts.tolerance = 1e-9;
    Rng r1 = make_rng(1);
    Rng r2 = make_rng(2);
    const auto a = build_beamformers(rec.wtilde, layout, opts, r1);
    const auto b = build_beamformers(rec.wtilde, layout, opts, r2);
    EXPECT_LE(a.alignment_residual, 1e-9);
    EXPECT_GE(a.min_signal, 1e-6) << seed;
    EXPECT_EQ(a.v[0], b.v[0]);
    EXPECT_EQ(a.u[1], b.u[1]);
    EXPECT_TRUE(verify_alignment(a, rec.wtilde, 1e-6).pass) << seed;
  }
}

TEST(Cj3, RejectsOtherLayouts) {
  const auto ch = channel::generate_channel(3, 1, 2, 50);
  const auto rec = perfect_reconstruction(ch, 16);
  AlignmentOptions opts;
  opts.engine = Engine::cj3;
  Rng rng = make_rng(1);
  EXPECT_THROW(build_beamformers(rec.wtilde, ia_parameters(3, 1, 1).layout(), opts, rng),
               InvalidArgument);
  EXPECT_THROW(build_beamformers(rec.wtilde, cj3_layout(2), opts, rng), InvalidArgument);
}

TEST(Engines, BothVerifyOnThreeUserSiso) {
  const auto ch = channel::generate_channel(3, 1, 2, 60);
  Rng rng = make_rng(61);
  const auto lay_lm = ia_parameters(3, 1, 1).layout();
  const auto rec_lm = perfect_reconstruction(ch, lay_lm.N);
  const auto lm = build_beamformers(rec_lm.wtilde, lay_lm, {}, rng);
  EXPECT_TRUE(verify_alignment(lm, rec_lm.wtilde, 1e-6).pass);

  AlignmentOptions opts;
  opts.engine = Engine::cj3;
  const auto lay_cj = cj3_layout(1);
  const auto rec_cj = perfect_reconstruction(ch, lay_cj.N);
  const auto cj = build_beamformers(rec_cj.wtilde, lay_cj, opts, rng);
  EXPECT_TRUE(verify_alignment(cj, rec_cj.wtilde, 1e-6).pass);
}

TEST(Verify, PerturbedFiltersFail) {
  const auto ch = channel::generate_channel(3, 1, 2, 70);
  const auto layout = ia_parameters(3, 1, 1).layout();
  const auto rec = perfect_reconstruction(ch, layout.N);
  Rng rng = make_rng(71);
  auto bf = build_beamformers(rec.wtilde, layout, {}, rng);
  EXPECT_TRUE(verify_alignment(bf, rec.wtilde, 1e-6).pass);
  for (auto& u : bf.u) {
    for (Eigen::Index c = 0; c < u.cols(); ++c) u.col(c) += 1e-2 * complex_gaussian(static_cast<int>(u.rows()), rng);
  }
  const auto report = verify_alignment(bf, rec.wtilde, 1e-6);
  EXPECT_FALSE(report.pass);
  EXPECT_GT(report.residual, 1e-4);
  EXPECT_FALSE(verify_alignment(bf, rec.wtilde, 1e6, 1.0).pass);
}

TEST(Verify, PerfectFeedbackEqualsNormalizedTruth) {
  const auto ch = channel::generate_channel(3, 1, 2, 72);
  const auto layout = ia_parameters(3, 1, 1).layout();
  const auto rec = perfect_reconstruction(ch, layout.N);
  Rng rng = make_rng(73);
  const auto bf = build_beamformers(rec.wtilde, layout, {}, rng);

  const auto truth = channel::to_tone_domain(ch, layout.N);
  std::vector<CMatrix> tones;
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 3; ++k) tones.push_back(truth.tones(i, k) / truth.stacked(i, k).norm());
  }
  const channel::ToneChannel normalized(3, 1, layout.N, tones);
  const auto a = verify_alignment(bf, rec.wtilde, 1e-6);
  const auto b = verify_alignment(bf, normalized, 1e-6);
  EXPECT_EQ(a.pass, b.pass);
  EXPECT_NEAR(a.residual, b.residual, 1e-12);
  EXPECT_NEAR(a.min_signal, b.min_signal, 1e-12);
}

TEST(PseudoBeamformer, BasisVectorConvention) {
  CVector e1 = CVector::Zero(3);
  e1(0) = 1.0;
  EXPECT_EQ(pseudo_beamformer(e1, e1, 1), e1);
  CVector u = e1 * cplx(0.0, 1.0);
  EXPECT_EQ(pseudo_beamformer(u, e1, 1)(0), cplx(0.0, -1.0));
}

TEST(PseudoBeamformer, ReproducesFilteredChannel) {
  Rng rng = make_rng(80);
  for (int t = 0; t < 100; ++t) {
    const int R = 1 + t % 3;
    const int N = 2 + t % 5;
    const auto ch = channel::generate_channel(2, R, 2, 1000 + t);
    const auto tone = channel::to_tone_domain(ch, N);
    const CVector u = complex_gaussian(R * N, rng);
    const CVector v = complex_gaussian(N, rng);
    const cplx direct = u.dot(tone.dense(0, 1) * v);
    const cplx via_b = tone.stacked(0, 1).dot(pseudo_beamformer(u, v, R));
    EXPECT_LT(std::abs(direct - via_b), 1e-12 * (1.0 + std::abs(direct)));
    EXPECT_LE(pseudo_beamformer(u, v, R).norm(), u.norm() * v.cwiseAbs().maxCoeff() + 1e-12);
  }
  EXPECT_THROW(pseudo_beamformer(CVector::Ones(5), CVector::Ones(2), 2), InvalidArgument);
}

TEST(MimoReduce, ReferenceCases) {
  const auto a = mimo_reduce(3, 2, 4, 1, 1024.0);
  EXPECT_EQ(a.R, 2);
  EXPECT_EQ(a.virtual_users, 6);
  EXPECT_EQ(a.discarded_rx_antennas, 0);
  EXPECT_FALSE(a.swapped);
  EXPECT_DOUBLE_EQ(a.bits_per_original_receiver, 120.0);
  EXPECT_DOUBLE_EQ(a.bits_per_virtual_user, 60.0);

  const auto b = mimo_reduce(3, 1, 1, 2, 1024.0);
  EXPECT_EQ(b.R, 1);
  EXPECT_DOUBLE_EQ(b.bits_per_original_receiver, 30.0);

  const auto c = mimo_reduce(4, 2, 5, 3, 256.0);
  EXPECT_EQ(c.R, 2);
  EXPECT_EQ(c.discarded_rx_antennas, 1);
  EXPECT_DOUBLE_EQ(c.bits_per_original_receiver, 4.0 * 4 * 5 * 8);
}

TEST(MimoReduce, ReciprocitySymmetry) {
  for (int a = 1; a <= 4; ++a) {
    for (int b = 1; b <= 4; ++b) {
      const auto x = mimo_reduce(6, a, b, 2, 4096.0);
      const auto y = mimo_reduce(6, b, a, 2, 4096.0);
      EXPECT_EQ(x.bits_per_original_receiver, y.bits_per_original_receiver);
      EXPECT_EQ(x.bits_per_virtual_user, y.bits_per_virtual_user);
      EXPECT_EQ(x.R, y.R);
      EXPECT_EQ(x.swapped, a > b);
      if (a == b * x.R || b == a * x.R) EXPECT_EQ(x.discarded_rx_antennas, 0);
    }
  }
}

TEST(MimoReduce, Errors) {
  EXPECT_THROW(mimo_reduce(2, 1, 2, 1, 16.0), InvalidArgument);
  EXPECT_THROW(mimo_reduce(3, 0, 2, 1, 16.0), InvalidArgument);
  EXPECT_THROW(mimo_reduce(3, 1, 1, 0, 16.0), InvalidArgument);
  EXPECT_THROW(mimo_reduce(3, 1, 1, 1, 0.0), InvalidArgument);
}
