#pragma once

// Binary PGM (P5) / PPM (P6) codec, maxval 255 only.

#include <cctype>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "flyswarm/error.hpp"
#include "flyswarm/image.hpp"

namespace flyswarm {

namespace detail {

class PnmHeaderReader {
 public:
  PnmHeaderReader(std::string_view bytes, std::size_t start) : bytes_(bytes), pos_(start) {}

  std::size_t offset() const { return pos_; }

  void skip_whitespace_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        return;
      }
    }
  }

  long read_uint(const char* field) {
    skip_whitespace_and_comments();
    const std::size_t start = pos_;
    long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000) throw ParseError(std::string("PNM ") + field + " too large", start);
      ++pos_;
    }
    if (pos_ == start) throw ParseError(std::string("PNM header: expected ") + field, start);
    return value;
  }

  /// Exactly one whitespace byte separates maxval from the raster.
  void expect_single_whitespace() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_])))
      throw ParseError("PNM header: expected whitespace before raster", pos_);
    ++pos_;
  }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Image load_pnm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
    throw ParseError("PNM: magic must be P5 or P6", 0);
  const int channels = bytes[1] == '5' ? 1 : 3;

  detail::PnmHeaderReader reader(bytes, 2);
  const long width = reader.read_uint("width");
  const long height = reader.read_uint("height");
  reader.skip_whitespace_and_comments();
  const std::size_t maxval_offset = reader.offset();
  const long maxval = reader.read_uint("maxval");
  if (maxval != 255) throw ParseError("PNM: maxval must be 255", maxval_offset);
  if (width <= 0 || height <= 0) throw ParseError("PNM: zero image dimension", 2);
  reader.expect_single_whitespace();

  const std::size_t data_offset = reader.offset();
  const std::size_t expected = static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * channels;
  if (bytes.size() - data_offset < expected) throw ParseError("PNM: truncated raster", bytes.size());

  std::vector<std::uint8_t> samples(expected);
  for (std::size_t i = 0; i < expected; ++i) samples[i] = static_cast<std::uint8_t>(bytes[data_offset + i]);
  return Image(static_cast<int>(width), static_cast<int>(height), channels, std::move(samples));
}

inline std::string save_pnm(const Image& img) {
  std::string out = (img.channels() == 1 ? "P5\n" : "P6\n") + std::to_string(img.width()) + " " +
                    std::to_string(img.height()) + "\n255\n";
  const auto s = img.samples();
  out.append(reinterpret_cast<const char*>(s.data()), s.size());
  return out;
}

inline Image read_pnm_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open image file: " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return load_pnm(bytes);
}

inline void write_pnm_file(const std::filesystem::path& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write image file: " + path.string());
  const std::string bytes = save_pnm(img);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InvalidInput("failed writing image file: " + path.string());
}

}  // namespace flyswarm
