#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "ialf/quantizer.hpp"

namespace ialf::quantizer {

namespace {

constexpr const char* kMagic = "ialf-codebook";
constexpr int kFormatVersion = 1;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
T header_field(const std::string& token, const std::string& key) {
  const std::string prefix = key + "=";
  if (token.rfind(prefix, 0) != 0) {
    throw InvalidArgument("codebook header: expected '" + prefix + "...', got '" + token + "'");
  }
  std::istringstream value(token.substr(prefix.size()));
  T out{};
  if (!(value >> out)) throw InvalidArgument("codebook header: bad value in '" + token + "'");
  return out;
}

}  // namespace

void write_codebook(std::ostream& out, const Codebook& cb) {
  out << kMagic << ' ' << kFormatVersion << " n=" << cb.dim() << " K=" << cb.components()
      << " bits=" << cb.bits() << " seed=" << cb.seed() << '\n';
  for (std::uint64_t i = 0; i < cb.size(); ++i) {
    const auto word = cb.codeword(i);
    for (int k = 0; k < cb.components(); ++k) {
      const CVector& v = word[k].coords();
      for (Eigen::Index j = 0; j < v.size(); ++j) {
        if (j) out << ' ';
        out << format_double(v(j).real()) << ' ' << format_double(v(j).imag());
      }
      out << '\n';
    }
  }
}

Codebook read_codebook(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("codebook: empty input");
  std::istringstream header(line);
  std::string magic, n_tok, k_tok, bits_tok, seed_tok;
  int version = 0;
  if (!(header >> magic >> version >> n_tok >> k_tok >> bits_tok >> seed_tok) || magic != kMagic) {
    throw InvalidArgument("codebook: malformed header '" + line + "'");
  }
  if (version != kFormatVersion) {
    throw InvalidArgument("codebook: unsupported format version " + std::to_string(version));
  }
  const int n = header_field<int>(n_tok, "n");
  const int K = header_field<int>(k_tok, "K");
  const int bits = header_field<int>(bits_tok, "bits");
  const auto seed = header_field<std::uint64_t>(seed_tok, "seed");
  if (n < 2 || K < 1 || bits < 0 || bits > kMaxMaterializedBits) {
    throw InvalidArgument("codebook: header values out of range");
  }

  const std::uint64_t count = std::uint64_t{1} << bits;
  std::vector<CompositeGrassmannPoint> words;
  words.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::vector<grassmann::GrassmannPoint> parts;
    for (int k = 0; k < K; ++k) {
      if (!std::getline(in, line)) {
        throw InvalidArgument("codebook: truncated at codeword " + std::to_string(i));
      }
      std::istringstream row(line);
      CVector v(n);
      for (int j = 0; j < n; ++j) {
        double re = 0.0;
        double im = 0.0;
        if (!(row >> re >> im)) {
          throw InvalidArgument("codebook: short row for codeword " + std::to_string(i));
        }
        v(j) = cplx(re, im);
      }
      parts.emplace_back(v);
    }
    words.emplace_back(std::move(parts));
  }
  return Codebook(n, K, bits, seed, std::move(words));
}

}  // namespace ialf::quantizer
