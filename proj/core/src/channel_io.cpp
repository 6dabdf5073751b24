#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "ialf/channel.hpp"

namespace ialf::channel {

namespace {

constexpr const char* kMagic = "ialf-channel";
constexpr int kFormatVersion = 1;

double parse_double(std::string_view text, const std::string& context) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw InvalidArgument("cannot parse number '" + std::string(text) + "' in " + context);
  }
  return value;
}

template <typename T>
T header_value(std::istringstream& header, const std::string& key) {
  std::string token;
  if (!(header >> token) || token.rfind(key + "=", 0) != 0) {
    throw InvalidArgument("channel archive header: expected " + key + "=...");
  }
  std::istringstream value(token.substr(key.size() + 1));
  T out{};
  if (!(value >> out)) throw InvalidArgument("channel archive header: bad value for " + key);
  return out;
}

bool next_content_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    return true;
  }
  return false;
}

}  // namespace

std::string format_complex(cplx z) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g%+.17gi", z.real(), z.imag());
  return buf;
}

cplx parse_complex(const std::string& token) {
  if (token.size() < 2 || token.back() != 'i') {
    throw InvalidArgument("complex entry '" + token + "' is not of the form a+bi");
  }
  const std::string_view body(token.data(), token.size() - 1);
  std::size_t split = std::string_view::npos;
  for (std::size_t p = body.size(); p-- > 1;) {
    if ((body[p] == '+' || body[p] == '-') && body[p - 1] != 'e' && body[p - 1] != 'E') {
      split = p;
      break;
    }
  }
  if (split == std::string_view::npos) {
    throw InvalidArgument("complex entry '" + token + "' is not of the form a+bi");
  }
  std::string_view imag = body.substr(split);
  if (imag.front() == '+') imag.remove_prefix(1);
  return {parse_double(body.substr(0, split), token), parse_double(imag, token)};
}

void write_channel(std::ostream& out, const ChannelRealization& ch) {
  char noise[32];
  std::snprintf(noise, sizeof noise, "%.17g", ch.noise_power());
  out << kMagic << ' ' << kFormatVersion << " K=" << ch.users() << " R=" << ch.rx_antennas()
      << " L=" << ch.tap_count() << " noise_power=" << noise << '\n';
  for (int i = 0; i < ch.users(); ++i) {
    for (int k = 0; k < ch.users(); ++k) {
      out << "link " << i + 1 << ' ' << k + 1 << '\n';
      const CMatrix& t = ch.taps(i, k);
      for (Eigen::Index l = 0; l < t.rows(); ++l) {
        for (Eigen::Index m = 0; m < t.cols(); ++m) {
          if (m) out << ' ';
          out << format_complex(t(l, m));
        }
        out << '\n';
      }
    }
  }
}

ChannelRealization read_channel(std::istream& in) {
  std::string line;
  if (!next_content_line(in, line)) throw InvalidArgument("channel archive: empty input");
  std::istringstream header(line);
  std::string magic;
  int version = 0;
  if (!(header >> magic >> version) || magic != kMagic) {
    throw InvalidArgument("channel archive: malformed header '" + line + "'");
  }
  if (version != kFormatVersion) throw InvalidArgument("channel archive: unsupported version");
  const int K = header_value<int>(header, "K");
  const int R = header_value<int>(header, "R");
  const int L = header_value<int>(header, "L");
  const double noise = header_value<double>(header, "noise_power");
  if (K < 1 || R < 1 || L < 1) throw InvalidArgument("channel archive: bad dimensions");

  std::vector<CMatrix> taps(static_cast<std::size_t>(K) * K);
  std::vector<bool> seen(taps.size(), false);
  for (std::size_t count = 0; count < taps.size(); ++count) {
    if (!next_content_line(in, line)) throw InvalidArgument("channel archive: missing links");
    std::istringstream key(line);
    std::string word;
    int i = 0;
    int k = 0;
    if (!(key >> word >> i >> k) || word != "link" || i < 1 || i > K || k < 1 || k > K) {
      throw InvalidArgument("channel archive: bad link key '" + line + "'");
    }
    const auto slot = static_cast<std::size_t>(i - 1) * K + static_cast<std::size_t>(k - 1);
    if (seen[slot]) throw InvalidArgument("channel archive: duplicate link '" + line + "'");
    seen[slot] = true;
    CMatrix t(L, R);
    for (int l = 0; l < L; ++l) {
      if (!next_content_line(in, line)) throw InvalidArgument("channel archive: truncated link");
      std::istringstream row(line);
      for (int m = 0; m < R; ++m) {
        std::string entry;
        if (!(row >> entry)) throw InvalidArgument("channel archive: short tap row");
        t(l, m) = parse_complex(entry);
      }
    }
    taps[slot] = std::move(t);
  }
  return ChannelRealization(K, R, L, std::move(taps), noise);
}

}  // namespace ialf::channel
