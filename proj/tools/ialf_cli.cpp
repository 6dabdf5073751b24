#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ialf/alignment.hpp"
#include "ialf/channel.hpp"
#include "ialf/experiment.hpp"
#include "ialf/grassmann.hpp"
#include "ialf/quantizer.hpp"
#include "ialf/rates.hpp"
#include "options.hpp"

namespace {

using namespace ialf;

constexpr int kExitPass = 0;
constexpr int kExitAssert = 1;
constexpr int kExitUsage = 2;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// Options whose resolved values go into the CSV comment line.  Output paths
// and --jobs are left out so the bytes depend only on the experiment itself.
class Recorder {
 public:
  template <typename T>
  CLI::Option* add(CLI::App* app, const std::string& flag, T& var, const std::string& help) {
    entries_.push_back({flag.substr(2), [&var] {
                          std::ostringstream os;
                          os << var;
                          return os.str();
                        }});
    return app->add_option(flag, var, help)->capture_default_str();
  }

  CLI::Option* flag(CLI::App* app, const std::string& flag, bool& var, const std::string& help) {
    entries_.push_back({flag.substr(2), [&var] { return std::string(var ? "1" : "0"); }});
    return app->add_flag(flag, var, help);
  }

  std::string line(const std::string& subcommand) const {
    std::string out = "# ialf " IALF_VERSION " " + subcommand;
    for (const auto& [key, get] : entries_) out += " " + key + "=" + get();
    return out;
  }

 private:
  std::vector<std::pair<std::string, std::function<std::string()>>> entries_;
};

struct Output {
  std::string path;

  void write(const std::string& text) const {
    if (path.empty() || path == "-") {
      std::cout << text;
      std::cout.flush();
      return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write " + path);
    out << text;
  }
};

const char* kRateHeader = "seed,K,R,L,n,P_log2,alpha,user,rate,I1,I2,signal\n";

alignment::Engine parse_engine(const std::string& s) {
  if (s == "leakage-min") return alignment::Engine::leakage_min;
  if (s == "cj3") return alignment::Engine::cj3;
  throw InvalidArgument("unknown engine '" + s + "' (leakage-min | cj3)");
}

channel::FeedbackMode parse_feedback(const std::string& s) {
  if (s == "perfect") return channel::FeedbackMode::perfect;
  if (s == "oracle") return channel::FeedbackMode::oracle;
  if (s == "codebook") return channel::FeedbackMode::codebook;
  throw InvalidArgument("unknown feedback mode '" + s + "' (perfect | oracle | codebook)");
}

channel::TapDistribution parse_taps(const std::string& s) {
  if (s == "gaussian") return channel::TapDistribution::gaussian;
  if (s == "truncated") return channel::TapDistribution::truncated_gaussian;
  throw InvalidArgument("unknown tap distribution '" + s + "' (gaussian | truncated)");
}

// Flags shared by ia-run and dof-sweep.
struct PipelineFlags {
  int K = 3;
  int R = 1;
  int L = 2;
  int n = 1;
  std::string engine = "leakage-min";
  double align_tol = 1e-8;
  double c_min = 1e-6;
  int max_iters = 5000;
  bool shared = false;
  std::string taps = "gaussian";
  double noise = 1.0;
  std::uint64_t seed = 1;

  void add(CLI::App* app, Recorder& rec) {
    rec.add(app, "--K", K, "number of users");
    rec.add(app, "--R", R, "receive antennas per user");
    rec.add(app, "--L", L, "channel taps");
    rec.add(app, "--n", n, "auxiliary IA parameter (tones and streams)");
    rec.add(app, "--engine", engine, "alignment engine: leakage-min | cj3");
    rec.add(app, "--align-tol", align_tol, "alignment residual tolerance");
    rec.add(app, "--c-min", c_min, "smallest acceptable desired-signal gain");
    rec.add(app, "--max-iters", max_iters, "leakage-min iteration cap");
    rec.flag(app, "--shared-directions", shared, "share transmit directions within user groups");
    rec.add(app, "--taps", taps, "tap distribution: gaussian | truncated");
    rec.add(app, "--noise", noise, "noise power N_o");
    rec.add(app, "--seed", seed, "experiment seed");
  }

  experiment::PipelineConfig config() const {
    experiment::PipelineConfig pc;
    pc.K = K;
    pc.R = R;
    pc.L = L;
    pc.n = n;
    pc.align.engine = parse_engine(engine);
    pc.align.tolerance = align_tol;
    pc.align.c_min = c_min;
    pc.align.max_iters = max_iters;
    pc.align.shared_directions = shared;
    pc.taps = parse_taps(taps);
    pc.noise = noise;
    return pc;
  }
};

void rate_rows(std::ostream& os, std::uint64_t seed, const experiment::PipelineConfig& pc,
               double p_log2, double sum_alpha, const std::vector<double>& rate,
               const std::vector<double>& i1, const std::vector<double>& i2,
               const std::vector<double>& signal) {
  const std::string prefix = std::to_string(seed) + "," + std::to_string(pc.K) + "," +
                             std::to_string(pc.R) + "," + std::to_string(pc.L) + "," +
                             std::to_string(pc.n) + "," + num(p_log2) + ",";
  double total[4] = {0, 0, 0, 0};
  for (int i = 0; i < pc.K; ++i) {
    const auto u = static_cast<std::size_t>(i);
    os << prefix << num(pc.alpha_of(i)) << "," << i + 1 << "," << num(rate[u]) << ","
       << num(i1[u]) << "," << num(i2[u]) << "," << num(signal[u]) << "\n";
    total[0] += rate[u];
    total[1] += i1[u];
    total[2] += i2[u];
    total[3] += signal[u];
  }
  os << prefix << num(sum_alpha) << ",0," << num(total[0]) << "," << num(total[1]) << ","
     << num(total[2]) << "," << num(total[3]) << "\n";
}

// ---------------------------------------------------------------- volume-check

struct VolumeCheck {
  std::string pairs = "2:1,2:2,3:2,2:3";
  std::string deltas = "0.3,0.5,0.8";
  std::int64_t trials = 1'000'000;
  std::uint64_t seed = 1;

  int run(const Recorder& rec, int jobs, const Output& out) const {
    const auto grid = cli::parse_pairs(pairs);
    const auto ds = cli::parse_doubles(deltas);
    if (trials < 1) throw InvalidArgument("trials must be >= 1");
    for (const auto& [n, K] : grid) {
      if (n < 2 || K < 1) throw InvalidArgument("volume-check needs n >= 2 and K >= 1");
      for (const double d : ds) {
        if (d < 0.0 || d * d > K) {
          throw InvalidArgument("delta=" + num(d) + " is outside [0, sqrt(K)] for K=" +
                                std::to_string(K));
        }
      }
    }

    std::ostringstream os;
    os << rec.line("volume-check") << "\n";
    os << "n,K,delta,analytic,empirical,stderr,z,method,pass\n";
    bool all = true;
    std::uint64_t cell = 0;
    for (const auto& [n, K] : grid) {
      for (const double d : ds) {
        const std::uint64_t cell_seed = make_rng(seed, cell++)();
        const double empirical = grassmann::empirical_ball_cdf(n, K, d, trials, cell_seed, jobs);
        double analytic = 0.0;
        double se = 0.0;
        std::string method = "closed_form";
        if (d * d <= 1.0) {
          analytic = grassmann::ball_volume_normalized({n, K, d});
          se = std::sqrt(analytic * (1.0 - analytic) / static_cast<double>(trials));
        } else {
          // No closed form past δ² = 1: compare two independent estimates.
          method = "monte_carlo";
          analytic = grassmann::u_cdf(n, K, d * d, cell_seed ^ 0x5bd1e995u, trials, jobs);
          se = std::sqrt(2.0 * analytic * (1.0 - analytic) / static_cast<double>(trials));
        }
        const double diff = std::abs(empirical - analytic);
        const bool pass = diff <= 3.0 * se + 1e-12;
        const double z = se > 0.0 ? diff / se : 0.0;
        all = all && pass;
        os << n << "," << K << "," << num(d) << "," << num(analytic) << "," << num(empirical)
           << "," << num(se) << "," << num(z) << "," << method << "," << (pass ? 1 : 0) << "\n";
      }
    }
    out.write(os.str());
    return all ? kExitPass : kExitAssert;
  }
};

// ----------------------------------------------------------- quantizer-scaling

struct QuantizerScaling {
  std::string pairs = "2:1,2:2,3:1";
  std::string bits = "6,8,10,12,14";
  std::int64_t trials = 10'000;
  double tolerance = 0.2;
  std::uint64_t seed = 1;
  std::string slopes_out;
  std::string codebook_out;
  int export_bits = 4;

  int run(const Recorder& rec, int jobs, const Output& out) const {
    const auto grid = cli::parse_pairs(pairs);
    const auto bl = cli::parse_ints(bits);
    if (trials < 1) throw InvalidArgument("trials must be >= 1");
    for (const int b : bl) {
      if (b < 0 || b > quantizer::kMaxMaterializedBits) {
        throw InvalidArgument("bits must lie in [0, " +
                              std::to_string(quantizer::kMaxMaterializedBits) + "]");
      }
    }

    std::ostringstream os;
    std::ostringstream slopes;
    os << rec.line("quantizer-scaling") << "\n";
    os << "n,K,bits,mean_distortion,max_distortion,trials\n";
    slopes << rec.line("quantizer-scaling") << "\n";
    slopes << "n,K,slope,target,rel_error,pass\n";
    bool all = true;
    for (const auto& [n, K] : grid) {
      const auto fit = quantizer::distortion_scaling_fit(n, K, bl, trials, seed, jobs);
      for (const auto& r : fit.reports) {
        os << n << "," << K << "," << r.bits << "," << num(r.mean_observed) << ","
           << num(r.max_observed) << "," << r.trials << "\n";
      }
      const double target = -1.0 / (K * (n - 1.0));
      const double rel = std::abs(fit.slope - target) / std::abs(target);
      const bool pass = rel <= tolerance;
      all = all && pass;
      slopes << n << "," << K << "," << num(fit.slope) << "," << num(target) << "," << num(rel)
             << "," << (pass ? 1 : 0) << "\n";
      std::cerr << "n=" << n << " K=" << K << " slope=" << num(fit.slope)
                << " target=" << num(target) << (pass ? " ok" : " FAIL") << "\n";
    }
    out.write(os.str());
    if (!slopes_out.empty()) Output{slopes_out}.write(slopes.str());
    if (!codebook_out.empty()) {
      const auto [n, K] = grid.front();
      std::ofstream f(codebook_out, std::ios::binary);
      if (!f) throw InvalidArgument("cannot write " + codebook_out);
      quantizer::write_codebook(f, quantizer::build_random_codebook(n, K, export_bits, seed));
    }
    return all ? kExitPass : kExitAssert;
  }
};

// --------------------------------------------------------------------- ia-run

struct IaRun {
  PipelineFlags flags;
  double p_log2 = 10.0;
  std::string feedback = "perfect";
  std::string alpha = "1";
  std::uint64_t trial = 0;
  std::string channel_file;
  std::string channel_out;

  int run(const Recorder& rec, const Output& out) {
    auto pc = flags.config();
    pc.feedback = parse_feedback(feedback);
    const auto alphas = cli::parse_doubles(alpha);

    std::optional<channel::ChannelRealization> ch;
    if (!channel_file.empty()) {
      std::ifstream in(channel_file);
      if (!in) throw InvalidArgument("cannot open channel file " + channel_file);
      ch.emplace(channel::read_channel(in));
      pc.K = ch->users();
      pc.R = ch->rx_antennas();
      pc.L = ch->tap_count();
    }
    pc.alpha = alphas.size() == 1 ? std::vector<double>(static_cast<std::size_t>(pc.K), alphas[0])
                                   : alphas;
    pc.validate();
    if (!ch) ch.emplace(experiment::trial_channel(pc, flags.seed, trial));
    if (!channel_out.empty()) {
      std::ofstream f(channel_out, std::ios::binary);
      if (!f) throw InvalidArgument("cannot write " + channel_out);
      channel::write_channel(f, *ch);
    }

    const double power = std::exp2(p_log2);
    std::string failure;
    std::ostringstream os;
    os << rec.line("ia-run") << "\n" << kRateHeader;
    try {
      const auto result = experiment::run_pipeline(*ch, pc, power, flags.seed, trial);
      const auto& rep = result.rates;
      std::vector<double> i1, i2, sig;
      for (const auto& streams : rep.terms) {
        const double w = 1.0 / static_cast<double>(streams.size());
        double a = 0, b = 0, c = 0;
        for (const auto& s : streams) {
          a += w * s.i1;
          b += w * s.i2;
          c += w * s.signal;
        }
        i1.push_back(a);
        i2.push_back(b);
        sig.push_back(c);
      }
      rate_rows(os, flags.seed, pc, p_log2, alphas[0], rep.user_rate, i1, i2, sig);
      const auto& bf = result.beamformers;
      os << "# alignment residual=" << num(bf.alignment_residual)
         << " min_signal=" << num(bf.min_signal) << " iterations=" << bf.iterations
         << " attempts=" << result.alignment_attempts << "\n";
      if (bf.alignment_residual > pc.align.tolerance) {
        failure = "alignment residual " + num(bf.alignment_residual) + " exceeds tolerance";
      } else if (bf.min_signal < pc.align.c_min) {
        failure = "desired-signal gain " + num(bf.min_signal) + " is below c_min";
      }
    } catch (const alignment::AlignmentError& e) {
      os << "# alignment failed residual=" << num(e.residual()) << "\n";
      failure = e.what();
    }
    out.write(os.str());
    if (!failure.empty()) {
      std::cerr << "ia-run: " << failure << "\n";
      return kExitAssert;
    }
    return kExitPass;
  }
};

// ------------------------------------------------------------------ dof-sweep

struct DofSweep {
  PipelineFlags flags;
  std::string p_grid = "4:14";
  std::string feedback = "oracle";
  std::string alphas = "1";
  int alpha_user = 0;
  int trials = 20;
  std::string slopes_out;
  bool no_check = false;

  int run(const Recorder& rec, int jobs, const Output& out) const {
    auto base = flags.config();
    base.feedback = parse_feedback(feedback);
    base.validate();
    const auto grid = cli::parse_grid(p_grid);
    const auto as = cli::parse_doubles(alphas);
    if (alpha_user < 0 || alpha_user > base.K) {
      throw InvalidArgument("alpha-user must be 0 (all users) or in 1..K");
    }
    const auto layout = base.layout();

    std::ostringstream os;
    std::ostringstream slopes;
    os << rec.line("dof-sweep") << "\n" << kRateHeader;
    slopes << rec.line("dof-sweep") << "\n";
    slopes << "alpha,user,slope,intercept,fit_quality,interference_slope,target,pass\n";
    bool all = true;
    for (const double a : as) {
      experiment::SweepConfig sc;
      sc.pipeline = base;
      sc.pipeline.alpha.assign(static_cast<std::size_t>(base.K), 1.0);
      for (int i = 0; i < base.K; ++i) {
        if (alpha_user == 0 || alpha_user == i + 1) sc.pipeline.alpha[static_cast<std::size_t>(i)] = a;
      }
      sc.p_log2 = grid;
      sc.trials = trials;
      sc.seed = flags.seed;
      sc.jobs = jobs;
      const auto res = experiment::dof_sweep(sc);

      for (const auto& pt : res.points) {
        rate_rows(os, flags.seed, sc.pipeline, pt.p_log2, a, pt.user_rate, pt.mean_i1, pt.mean_i2,
                  pt.mean_signal);
      }

      const bool perfect = base.feedback == channel::FeedbackMode::perfect;
      double sum_target = 0.0;
      bool full_feedback = true;
      for (int i = 0; i < base.K; ++i) {
        const double ai = perfect ? 1.0 : sc.pipeline.alpha_of(i);
        full_feedback = full_feedback && ai >= 1.0;
        const double target = std::min(ai, 1.0) * layout.d[static_cast<std::size_t>(i)] / layout.N;
        sum_target += target;
        const auto& fit = res.user_fit[static_cast<std::size_t>(i)];
        const bool pass = std::abs(fit.slope - target) <= 0.1;
        all = all && pass;
        slopes << num(a) << "," << i + 1 << "," << num(fit.slope) << "," << num(fit.intercept) << ","
               << num(fit.fit_quality) << ","
               << num(res.user_interference_fit[static_cast<std::size_t>(i)].fit.slope) << ","
               << num(target) << "," << (pass ? 1 : 0) << "\n";
      }
      // The sum slope is only pinned when every user feeds back at full rate.
      const bool sum_pass = !full_feedback || std::abs(res.sum_fit.slope - sum_target) <= 0.05;
      all = all && sum_pass;
      slopes << num(a) << ",0," << num(res.sum_fit.slope) << "," << num(res.sum_fit.intercept) << ","
             << num(res.sum_fit.fit_quality) << "," << num(res.interference_fit.fit.slope) << ","
             << num(sum_target) << "," << (sum_pass ? 1 : 0) << "\n";
      std::cerr << "alpha=" << num(a) << " sum slope=" << num(res.sum_fit.slope)
                << " target=" << num(sum_target)
                << " interference slope=" << num(res.interference_fit.fit.slope) << "\n";
    }
    out.write(os.str());
    if (slopes_out.empty()) {
      std::cerr << slopes.str();
    } else {
      Output{slopes_out}.write(slopes.str());
    }
    return (all || no_check) ? kExitPass : kExitAssert;
  }
};

// ---------------------------------------------------------------- mimo-reduce

struct MimoReduce {
  int K = 3;
  int Mt = 2;
  int Mr = 4;
  int L = 1;
  double p_log2 = 10.0;

  int run(const Output& out) const {
    const auto r = alignment::mimo_reduce(K, Mt, Mr, L, std::exp2(p_log2));
    nlohmann::ordered_json j;
    j["K"] = r.K;
    j["Mt"] = r.Mt;
    j["Mr"] = r.Mr;
    j["L"] = r.L;
    j["P_log2"] = p_log2;
    j["swapped"] = r.swapped;
    j["R"] = r.R;
    j["virtual_users"] = r.virtual_users;
    j["virtual_rx_antennas"] = r.R;
    j["discarded_rx_antennas"] = r.discarded_rx_antennas;
    j["bits_per_virtual_user"] = r.bits_per_virtual_user;
    j["bits_per_original_receiver"] = r.bits_per_original_receiver;
    j["dof_sum"] = r.dof_sum;
    out.write(j.dump(2) + "\n");
    return kExitPass;
  }
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  try {
    args = cli::inject_config(args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  CLI::App app{"Interference alignment with limited feedback: experiment runner", "ialf"};
  app.set_version_flag("--version", IALF_VERSION);
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  int jobs = 1;
  Output out;
  std::string config_path;
  const auto common = [&](CLI::App* sub) {
    sub->add_option("--jobs", jobs, "worker threads (results do not depend on it)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out", out.path, "output file (default stdout)");
    sub->add_option("--config", config_path, "key = value file; command-line flags win");
  };

  Recorder vol_rec, q_rec, ia_rec, dof_rec;
  VolumeCheck vol;
  auto* vol_cmd = app.add_subcommand("volume-check", "closed-form ball volume against Monte Carlo");
  vol_rec.add(vol_cmd, "--pairs", vol.pairs, "n:K pairs");
  vol_rec.add(vol_cmd, "--delta", vol.deltas, "ball radii");
  vol_rec.add(vol_cmd, "--trials", vol.trials, "Monte Carlo samples per cell");
  vol_rec.add(vol_cmd, "--seed", vol.seed, "experiment seed");
  common(vol_cmd);

  QuantizerScaling qs;
  auto* q_cmd = app.add_subcommand("quantizer-scaling", "random-codebook distortion vs bits");
  q_rec.add(q_cmd, "--pairs", qs.pairs, "n:K pairs");
  q_rec.add(q_cmd, "--bits", qs.bits, "bit budgets");
  q_rec.add(q_cmd, "--trials", qs.trials, "sources per budget");
  q_rec.add(q_cmd, "--tolerance", qs.tolerance, "allowed relative error of the exponent");
  q_rec.add(q_cmd, "--seed", qs.seed, "experiment seed");
  q_rec.add(q_cmd, "--export-bits", qs.export_bits, "size of the exported codebook");
  q_cmd->add_option("--slopes-out", qs.slopes_out, "write fitted exponents here");
  q_cmd->add_option("--codebook-out", qs.codebook_out, "export a codebook for the first pair");
  common(q_cmd);

  IaRun ia;
  auto* ia_cmd = app.add_subcommand("ia-run", "one feedback/alignment/rate pass at fixed P");
  ia.flags.add(ia_cmd, ia_rec);
  ia_rec.add(ia_cmd, "--P-log2", ia.p_log2, "log2 of the total power P");
  ia_rec.add(ia_cmd, "--feedback", ia.feedback, "perfect | oracle | codebook");
  ia_rec.add(ia_cmd, "--alpha", ia.alpha, "bit fraction, one value or one per user");
  ia_rec.add(ia_cmd, "--trial", ia.trial, "trial index selecting the channel draw");
  ia_rec.add(ia_cmd, "--channel-file", ia.channel_file, "read the channel instead of drawing it");
  ia_cmd->add_option("--channel-out", ia.channel_out, "archive the channel used");
  common(ia_cmd);

  DofSweep dof;
  auto* dof_cmd = app.add_subcommand("dof-sweep", "rate slopes over a power grid");
  dof.flags.add(dof_cmd, dof_rec);
  dof_rec.add(dof_cmd, "--P-log2", dof.p_grid, "power grid: lo:hi[:step] or a list");
  dof_rec.add(dof_cmd, "--feedback", dof.feedback, "perfect | oracle | codebook");
  dof_rec.add(dof_cmd, "--alpha", dof.alphas, "bit fractions to sweep");
  dof_rec.add(dof_cmd, "--alpha-user", dof.alpha_user, "apply alpha to this user only (0: all)");
  dof_rec.add(dof_cmd, "--trials", dof.trials, "channel draws per power");
  dof_cmd->add_option("--slopes-out", dof.slopes_out, "write fitted slopes here (default stderr)");
  dof_cmd->add_flag("--no-check", dof.no_check, "exit 0 even when slopes miss their targets");
  common(dof_cmd);

  MimoReduce mimo;
  auto* mimo_cmd = app.add_subcommand("mimo-reduce", "MIMO to SIMO reduction and feedback budget");
  mimo_cmd->add_option("--K", mimo.K, "number of users")->capture_default_str();
  mimo_cmd->add_option("--Mt", mimo.Mt, "transmit antennas")->capture_default_str();
  mimo_cmd->add_option("--Mr", mimo.Mr, "receive antennas")->capture_default_str();
  mimo_cmd->add_option("--L", mimo.L, "channel taps")->capture_default_str();
  mimo_cmd->add_option("--P-log2", mimo.p_log2, "log2 of the total power P")->capture_default_str();
  common(mimo_cmd);

  std::vector<const char*> cargs;
  for (const auto& a : args) cargs.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*vol_cmd) return vol.run(vol_rec, jobs, out);
    if (*q_cmd) return qs.run(q_rec, jobs, out);
    if (*ia_cmd) return ia.run(ia_rec, out);
    if (*dof_cmd) return dof.run(dof_rec, jobs, out);
    if (*mimo_cmd) return mimo.run(out);
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitAssert;
  }
  return kExitUsage;
}
