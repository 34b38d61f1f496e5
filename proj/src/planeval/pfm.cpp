#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "planeval/depthraster.hpp"
#include "planeval/errors.hpp"

namespace planeval {

namespace {

static_assert(sizeof(float) == 4);

// Reads one whitespace-delimited header token starting at pos.
std::string next_token(const std::string& bytes, std::size_t& pos) {
  while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
  const std::size_t start = pos;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
  if (start == pos) fail(ErrorCode::MalformedHeader, "PFM header ended early");
  return bytes.substr(start, pos - start);
}

std::size_t parse_dim(const std::string& token) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(token, &used);
  } catch (const std::exception&) {
    fail(ErrorCode::MalformedHeader, "PFM dimension '" + token + "' is not an integer");
  }
  if (used != token.size() || v <= 0) {
    fail(ErrorCode::MalformedHeader, "PFM dimension '" + token + "' is invalid");
  }
  return static_cast<std::size_t>(v);
}

std::uint32_t byteswap32(std::uint32_t x) {
  return ((x & 0xFFu) << 24) | ((x & 0xFF00u) << 8) | ((x >> 8) & 0xFF00u) | (x >> 24);
}

}  // namespace

DepthRaster decode_pfm(const std::string& bytes) {
  std::size_t pos = 0;
  const std::string magic = next_token(bytes, pos);
  if (magic == "PF") fail(ErrorCode::UnsupportedChannels, "color PFM is not supported");
  if (magic != "Pf") fail(ErrorCode::MalformedHeader, "not a grayscale PFM (magic '" + magic + "')");
  const std::size_t width = parse_dim(next_token(bytes, pos));
  const std::size_t height = parse_dim(next_token(bytes, pos));
  const std::string scale_tok = next_token(bytes, pos);
  double scale = 0.0;
  try {
    std::size_t used = 0;
    scale = std::stod(scale_tok, &used);
    if (used != scale_tok.size()) throw std::invalid_argument(scale_tok);
  } catch (const std::exception&) {
    fail(ErrorCode::MalformedHeader, "PFM scale '" + scale_tok + "' is not a number");
  }
  if (scale == 0.0 || !std::isfinite(scale)) {
    fail(ErrorCode::MalformedHeader, "PFM scale must be nonzero");
  }
  // exactly one whitespace byte separates the header from the payload
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    fail(ErrorCode::TruncatedData, "PFM payload missing");
  }
  ++pos;

  const bool little = scale < 0.0;
  const std::size_t count = width * height;
  if (bytes.size() - pos < count * 4) {
    fail(ErrorCode::TruncatedData, "PFM payload has " + std::to_string(bytes.size() - pos) +
                                       " bytes, expected " + std::to_string(count * 4));
  }
  std::vector<double> values(count);
  for (std::size_t file_row = 0; file_row < height; ++file_row) {
    const std::size_t row = height - 1 - file_row;
    for (std::size_t col = 0; col < width; ++col) {
      std::uint32_t raw = 0;
      std::memcpy(&raw, bytes.data() + pos + (file_row * width + col) * 4, 4);
      if ((std::endian::native == std::endian::little) != little) raw = byteswap32(raw);
      values[row * width + col] = static_cast<double>(std::bit_cast<float>(raw));
    }
  }
  return DepthRaster(width, height, std::move(values));
}

std::string encode_pfm(const DepthRaster& r) {
  std::string out = "Pf\n" + std::to_string(r.width()) + " " + std::to_string(r.height()) +
                    "\n-1.0\n";
  const std::size_t header = out.size();
  out.resize(header + r.width() * r.height() * 4);
  char* dst = out.data() + header;
  for (std::size_t file_row = 0; file_row < r.height(); ++file_row) {
    const std::size_t row = r.height() - 1 - file_row;
    for (std::size_t col = 0; col < r.width(); ++col) {
      auto raw = std::bit_cast<std::uint32_t>(static_cast<float>(r.at(col, row)));
      if constexpr (std::endian::native != std::endian::little) raw = byteswap32(raw);
      std::memcpy(dst, &raw, 4);
      dst += 4;
    }
  }
  return out;
}

DepthRaster read_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_pfm(ss.str());
}

void write_pfm(const DepthRaster& r, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  const std::string bytes = encode_pfm(r);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace planeval
