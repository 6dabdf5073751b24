// Acceptance suite: one PASS/FAIL line per criterion.
//
//   ialf_acceptance                 run every criterion
//   ialf_acceptance --criterion 4   run one (ctest registers each separately)
//   ialf_acceptance --jobs 4        worker threads for the Monte Carlo loops

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "ialf/alignment.hpp"
#include "ialf/channel.hpp"
#include "ialf/experiment.hpp"
#include "ialf/grassmann.hpp"
#include "ialf/quantizer.hpp"
#include "ialf/rates.hpp"

using namespace ialf;

namespace {

int g_jobs = 1;

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [miss]");
  }
};

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::vector<double> grid(int lo, int hi, int step = 1) {
  std::vector<double> g;
  for (int e = lo; e <= hi; e += step) g.push_back(e);
  return g;
}

experiment::SweepResult sweep(const experiment::PipelineConfig& pc, const std::vector<double>& p,
                              int trials = 20, std::uint64_t seed = 2024) {
  experiment::SweepConfig sc;
  sc.pipeline = pc;
  sc.p_log2 = p;
  sc.trials = trials;
  sc.seed = seed;
  sc.jobs = g_jobs;
  return experiment::dof_sweep(sc);
}

// 1. Closed-form ball volume against 10^6-sample Monte Carlo, 3 standard errors.
Outcome ball_volume() {
  Outcome o;
  const std::int64_t trials = 1'000'000;
  double worst_z = 0.0;
  int cells = 0, ok = 0;
  std::uint64_t seed = 11;
  for (const auto [n, K] : {std::pair{2, 1}, {2, 2}, {3, 2}, {2, 3}}) {
    for (const double d : {0.3, 0.5, 0.8}) {
      const double p = grassmann::ball_volume_normalized({n, K, d});
      const double emp = grassmann::empirical_ball_cdf(n, K, d, trials, seed++, g_jobs);
      const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
      const double z = std::abs(emp - p) / se;
      worst_z = std::max(worst_z, z);
      ++cells;
      ok += z <= 3.0;
    }
  }
  o.check(ok == cells, std::to_string(ok) + "/" + std::to_string(cells) + " cells within 3 SE");
  o.detail += fmt(", worst |z| = %.2f", worst_z);
  return o;
}

// 2. Random-codebook distortion exponent within 20% of -1/(K(n-1)).
Outcome distortion_scaling() {
  Outcome o;
  for (const auto [n, K] : {std::pair{2, 1}, {2, 2}, {3, 1}}) {
    const double target = -1.0 / (K * (n - 1.0));
    const double slope =
        quantizer::distortion_scaling_exponent(n, K, {6, 8, 10, 12, 14}, 10'000, 7, g_jobs);
    const double rel = std::abs(slope - target) / std::abs(target);
    o.check(rel <= 0.2, "(n=" + std::to_string(n) + ",K=" + std::to_string(K) + ") " +
                            fmt("slope %.4f vs %.4f", slope, target));
  }
  return o;
}

// 3. Alignment exactness for both engines on perfect feedback.
Outcome alignment_exactness() {
  Outcome o;
  experiment::PipelineConfig lm;
  int aligned = 0;
  double worst = 0.0;
  for (std::uint64_t t = 0; t < 20; ++t) {
    try {
      const auto r = experiment::run_pipeline(experiment::trial_channel(lm, 31, t), lm, 1024.0, 31, t);
      worst = std::max(worst, r.beamformers.alignment_residual);
      aligned += r.beamformers.alignment_residual <= 1e-8;
    } catch (const alignment::AlignmentError& e) {
      worst = std::max(worst, e.residual());
    }
  }
  o.check(aligned >= 19, "leakage-min " + std::to_string(aligned) + "/20 channels at <= 1e-8" +
                             fmt(" (worst %.2e)", worst));

  experiment::PipelineConfig cj;
  cj.align.engine = alignment::Engine::cj3;
  cj.align.tolerance = 1e-9;
  cj.n = 2;
  bool exact = true, repeatable = true;
  double cj_worst = 0.0, weakest = 1.0;
  for (std::uint64_t t = 0; t < 20; ++t) {
    const auto ch = experiment::trial_channel(cj, 32, t);
    try {
      const auto a = experiment::run_pipeline(ch, cj, 1024.0, 32, t);
      const auto b = experiment::run_pipeline(ch, cj, 1024.0, 99, t + 100);
      cj_worst = std::max(cj_worst, a.beamformers.alignment_residual);
      weakest = std::min(weakest, a.beamformers.min_signal);
      repeatable = repeatable && a.beamformers.v == b.beamformers.v && a.beamformers.u == b.beamformers.u;
    } catch (const alignment::AlignmentError& e) {
      exact = false;
      cj_worst = std::max(cj_worst, e.residual());
    }
  }
  o.check(exact && cj_worst <= 1e-9 && repeatable,
          fmt("cj3 worst residual %.2e over 20 channels", cj_worst) +
              (repeatable ? ", seed-independent" : ", NOT repeatable"));
  o.detail += fmt(", cj3 weakest signal %.2e", weakest);
  return o;
}

// 4. Perfect-CSI sum-rate slope over P = 2^4..2^14.
Outcome perfect_csi_dof() {
  Outcome o;
  const auto p = grid(4, 14);
  experiment::PipelineConfig lm;
  const double lm_target = alignment::ia_parameters(3, 1, 1).dof_sum();
  const auto a = sweep(lm, p);
  o.check(std::abs(a.sum_fit.slope - lm_target) <= 0.05,
          fmt("leakage-min slope %.4f vs %.4f", a.sum_fit.slope, lm_target));

  experiment::PipelineConfig cj;
  cj.align.engine = alignment::Engine::cj3;
  cj.n = 3;
  const double cj_target = alignment::cj3_layout(3).dof_sum();
  const auto b = sweep(cj, p);
  o.check(std::abs(b.sum_fit.slope - cj_target) <= 0.05,
          fmt("cj3 n=3 slope %.4f vs %.4f", b.sum_fit.slope, cj_target));

  // Context only: the same pipeline on a grid far into the high-SNR regime.
  const auto hi = grid(24, 40, 2);
  std::printf("  note C4: slopes over P = 2^24..2^40: leakage-min %.4f, cj3 n=3 %.4f\n",
              sweep(lm, hi).sum_fit.slope, sweep(cj, hi).sum_fit.slope);
  return o;
}

// 5. Oracle feedback at the full budget: bounded interference, unchanged slope.
Outcome limited_feedback() {
  Outcome o;
  const auto p = grid(4, 14);
  experiment::PipelineConfig perfect;
  experiment::PipelineConfig oracle;
  oracle.feedback = channel::FeedbackMode::oracle;
  const auto a = sweep(perfect, p);
  const auto b = sweep(oracle, p);
  o.check(b.interference_fit.fit.slope <= 0.1,
          fmt("max interference slope %.4f", b.interference_fit.fit.slope));
  o.check(std::abs(b.sum_fit.slope - a.sum_fit.slope) <= 0.05,
          fmt("sum slope %.4f vs perfect-CSI %.4f", b.sum_fit.slope, a.sum_fit.slope));
  return o;
}

// 6. Fractional feedback for user 1 only.
Outcome fractional_feedback() {
  Outcome o;
  const auto p = grid(4, 14);
  const auto layout = alignment::ia_parameters(3, 1, 1).layout();
  const double dof1 = static_cast<double>(layout.d[0]) / layout.N;
  experiment::PipelineConfig pc;
  pc.feedback = channel::FeedbackMode::oracle;
  pc.alpha = {1.0, 1.0, 1.0};
  const auto base = sweep(pc, p);
  for (const double a : {0.25, 0.5, 0.75, 1.0}) {
    pc.alpha = {a, 1.0, 1.0};
    const auto r = a == 1.0 ? base : sweep(pc, p);
    const double s1 = r.user_fit[0].slope;
    const double i1 = r.user_interference_fit[0].fit.slope;
    const double drift = std::max(std::abs(r.user_fit[1].slope - base.user_fit[1].slope),
                                  std::abs(r.user_fit[2].slope - base.user_fit[2].slope));
    const std::string tag = fmt("a=%.2f", a);
    o.check(std::abs(s1 - a * dof1) <= 0.1, tag + fmt(" user1 slope %.3f vs %.3f", s1, a * dof1));
    o.check(drift <= 0.1, tag + fmt(" users 2,3 drift %.3f", drift));
    o.check(std::abs(i1 - (1.0 - a)) <= 0.1, tag + fmt(" interference slope %.3f vs %.3f", i1, 1.0 - a));
  }
  return o;
}

// 7. MIMO reduction against a frozen hand-computed table.
Outcome mimo_arithmetic() {
  struct Row {
    int K, Mt, Mr, L, p_log2, R, virtual_users, discarded;
    double per_receiver, per_virtual;
  };
  const Row table[] = {
      {3, 2, 4, 1, 10, 2, 6, 0, 120, 60},   {3, 1, 1, 2, 10, 1, 3, 0, 30, 30},
      {4, 2, 5, 3, 8, 2, 8, 1, 640, 320},   {3, 1, 2, 2, 12, 2, 3, 0, 108, 108},
      {5, 3, 7, 2, 6, 2, 15, 1, 810, 270},  {4, 1, 3, 1, 16, 3, 4, 0, 128, 128},
      {6, 2, 2, 4, 10, 1, 12, 0, 720, 360}, {3, 4, 2, 2, 10, 2, 6, 0, 360, 180},
      {7, 3, 9, 1, 20, 3, 21, 0, 2520, 840}, {5, 5, 2, 3, 5, 2, 10, 1, 500, 250},
  };
  Outcome o;
  int ok = 0, symmetric = 0;
  for (const auto& row : table) {
    const auto r = alignment::mimo_reduce(row.K, row.Mt, row.Mr, row.L, std::exp2(row.p_log2));
    const auto s = alignment::mimo_reduce(row.K, row.Mr, row.Mt, row.L, std::exp2(row.p_log2));
    ok += r.R == row.R && r.virtual_users == row.virtual_users &&
          r.discarded_rx_antennas == row.discarded &&
          std::abs(r.bits_per_original_receiver - row.per_receiver) <= 1e-9 &&
          std::abs(r.bits_per_virtual_user - row.per_virtual) <= 1e-9;
    symmetric += s.bits_per_original_receiver == r.bits_per_original_receiver &&
                 s.bits_per_virtual_user == r.bits_per_virtual_user && s.R == r.R;
  }
  o.check(ok == 10, std::to_string(ok) + "/10 table rows");
  o.check(symmetric == 10, std::to_string(symmetric) + "/10 swapped pairs symmetric");
  return o;
}

// 8. Pipeline identities on 10^3 random instances.
Outcome pipeline_identities() {
  Outcome o;
  double unit = 0.0, parseval = 0.0, pseudo = 0.0, chain = 0.0;
  for (int t = 0; t < 1000; ++t) {
    Rng rng = make_rng(808, static_cast<std::uint64_t>(t));
    const int K = 2 + t % 3;
    const int R = 1 + (t / 3) % 3;
    const int L = 1 + (t / 9) % 4;
    const int N = L + (t / 36) % 6;
    if (R * L < 2) continue;
    const auto ch = channel::generate_channel(K, R, L, rng());
    const auto truth = channel::to_tone_domain(ch, N);

    channel::FeedbackConfig cfg;
    cfg.mode = channel::FeedbackMode::oracle;
    cfg.power = std::exp2(2 + t % 12);
    std::vector<channel::FeedbackMessage> msgs;
    for (int i = 0; i < K; ++i) msgs.push_back(channel::receiver_feedback(ch, i, cfg, rng));
    const auto rec = channel::reconstruct(msgs, R, N);

    for (int i = 0; i < K; ++i) {
      for (int k = 0; k < K; ++k) {
        unit = std::max(unit, std::abs(rec.wtilde.stacked(i, k).squaredNorm() - 1.0));
        const double taps = ch.taps(i, k).squaredNorm();
        parseval = std::max(parseval, std::abs(truth.tones(i, k).squaredNorm() - N * taps) / (N * taps));
        chain = std::max(chain, std::abs(truth.stacked(i, k).squaredNorm() / N - taps) / taps);
      }
    }
    const int i = t % K, k = (t / 7) % K;
    const CVector u = complex_gaussian(R * N, rng);
    const CVector v = complex_gaussian(N, rng);
    const cplx direct = u.dot(truth.dense(i, k) * v);
    const cplx via_b = truth.stacked(i, k).dot(alignment::pseudo_beamformer(u, v, R));
    pseudo = std::max(pseudo, std::abs(direct - via_b) / (1.0 + std::abs(direct)));
  }
  o.check(unit <= 1e-10, fmt("unit-norm w~ %.1e", unit));
  o.check(parseval <= 1e-10, fmt("Parseval %.1e", parseval));
  o.check(pseudo <= 1e-10, fmt("pseudo-beamformer %.1e", pseudo));
  o.check(chain <= 1e-10, fmt("norm chain %.1e", chain));
  return o;
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int a = 1; a < argc; ++a) {
    if (!std::strcmp(argv[a], "--criterion") && a + 1 < argc) {
      only = std::atoi(argv[++a]);
    } else if (!std::strcmp(argv[a], "--jobs") && a + 1 < argc) {
      g_jobs = std::max(1, std::atoi(argv[++a]));
    } else {
      std::fprintf(stderr, "usage: %s [--criterion N] [--jobs J]\n", argv[0]);
      return 2;
    }
  }

  const std::vector<Criterion> all{
      {1, "ball volume closed form vs Monte Carlo", ball_volume},
      {2, "random-codebook distortion exponent", distortion_scaling},
      {3, "alignment exactness", alignment_exactness},
      {4, "perfect-CSI DoF slope", perfect_csi_dof},
      {5, "bounded interference under oracle feedback", limited_feedback},
      {6, "fractional feedback tradeoff", fractional_feedback},
      {7, "MIMO reduction arithmetic", mimo_arithmetic},
      {8, "pipeline identities", pipeline_identities},
  };

  bool ok = true;
  bool ran = false;
  for (const auto& c : all) {
    if (only && c.id != only) continue;
    ran = true;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] C%d %s: %s (%.1fs)\n", out.pass ? "PASS" : "FAIL", c.id, c.name,
                out.detail.c_str(), secs);
    std::fflush(stdout);
    ok = ok && out.pass;
  }
  if (!ran) {
    std::fprintf(stderr, "no criterion %d\n", only);
    return 2;
  }
  return ok ? 0 : 1;
}
