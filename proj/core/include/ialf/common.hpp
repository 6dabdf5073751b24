#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ialf {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape or argument violations of an operation's preconditions.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

using Rng = std::mt19937_64;

/// Independent generator for stream `stream` of a seeded experiment.  Streams
/// with different (seed, stream, substream) triples are decorrelated through
/// std::seed_seq, so results never depend on how work is split across threads.
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t substream = 0);

/// Vector of i.i.d. CN(0,1) entries (real and imaginary parts each N(0, 1/2)).
CVector complex_gaussian(int n, Rng& rng);

/// Runs body(i) for i in [0, count) on up to `jobs` threads.  Work items are
/// handed out dynamically; callers must write results to per-index slots.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body);

}  // namespace ialf
