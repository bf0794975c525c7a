#include "fpu/synthdata/pgm.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

#include "fpu/error.hpp"

namespace fpu::synthdata {

namespace {

class HeaderParser {
 public:
  HeaderParser(const std::string& bytes, const std::string& source) : bytes_(bytes), source_(source) {}

  void skip_separators() {
    while (pos_ < bytes_.size()) {
      const char ch = bytes_[pos_];
      if (ch == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(ch))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::uint64_t number(const char* what) {
    skip_separators();
    const std::size_t start = pos_;
    std::uint64_t value = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + static_cast<std::uint64_t>(bytes_[pos_] - '0');
      if (value > (1ULL << 32)) fail(std::string(what) + " is too large", start);
      ++pos_;
    }
    if (pos_ == start) fail(std::string("expected ") + what, start);
    return value;
  }

  [[noreturn]] void fail(const std::string& message, std::size_t offset) const {
    throw ParseError(source_ + ": malformed PGM: " + message, offset);
  }

  std::size_t pos_ = 0;

 private:
  const std::string& bytes_;
  const std::string& source_;
};

}  // namespace

std::string encode_pgm(const Pgm& pgm) {
  if (pgm.maxval == 0 || pgm.maxval > 65535) throw InvalidArgument("PGM maxval must lie in 1..65535");
  if (pgm.samples.size() != pgm.height * pgm.width) throw InvalidArgument("PGM sample count does not match size");
  std::string out = "P5\n" + std::to_string(pgm.width) + " " + std::to_string(pgm.height) + "\n" +
                    std::to_string(pgm.maxval) + "\n";
  const bool wide = pgm.maxval > 255;
  out.reserve(out.size() + pgm.samples.size() * (wide ? 2 : 1));
  for (std::uint16_t s : pgm.samples) {
    if (s > pgm.maxval) throw InvalidArgument("PGM sample exceeds maxval");
    if (wide) out.push_back(static_cast<char>(s >> 8));
    out.push_back(static_cast<char>(s & 0xFF));
  }
  return out;
}

Pgm decode_pgm(const std::string& bytes, const std::string& source) {
  HeaderParser in(bytes, source);
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') in.fail("missing P5 magic", 0);
  in.pos_ = 2;
  Pgm pgm;
  const std::size_t width_at = in.pos_;
  pgm.width = in.number("width");
  pgm.height = in.number("height");
  if (pgm.width == 0 || pgm.height == 0) in.fail("zero image dimension", width_at);
  const std::size_t maxval_at = in.pos_;
  const auto maxval = in.number("maxval");
  if (maxval == 0 || maxval > 65535) in.fail("maxval out of range", maxval_at);
  pgm.maxval = static_cast<std::uint32_t>(maxval);
  if (in.pos_ >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[in.pos_]))) {
    in.fail("expected whitespace before raster", in.pos_);
  }
  ++in.pos_;

  const bool wide = pgm.maxval > 255;
  const std::size_t count = pgm.height * pgm.width;
  const std::size_t need = count * (wide ? 2 : 1);
  const std::size_t have = bytes.size() - in.pos_;
  if (have < need) in.fail("truncated raster, expected " + std::to_string(need) + " bytes", bytes.size());
  if (have > need) in.fail("trailing bytes after raster", in.pos_ + need);

  pgm.samples.resize(count);
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data() + in.pos_);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint16_t s = wide ? static_cast<std::uint16_t>((data[2 * i] << 8) | data[2 * i + 1]) : data[i];
    if (s > pgm.maxval) in.fail("sample exceeds maxval", in.pos_ + i * (wide ? 2 : 1));
    pgm.samples[i] = s;
  }
  return pgm;
}

void write_pgm(const std::filesystem::path& path, const Pgm& pgm) {
  const std::string bytes = encode_pgm(pgm);
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open for writing: " + path.string());
  file.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!file) throw IoError("failed writing: " + path.string());
}

Pgm read_pgm(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open: " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  return decode_pgm(bytes, path.string());
}

Pgm to_pgm16(const Image& image) {
  Pgm pgm{image.height, image.width, 65535, std::vector<std::uint16_t>(image.size())};
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double v = image.pixels[i];
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("image intensity outside [0, 1] cannot be stored");
    pgm.samples[i] = static_cast<std::uint16_t>(std::lround(v * 65535.0));
  }
  return pgm;
}

Image from_pgm16(const Pgm& pgm) {
  if (pgm.maxval != 65535) throw InvalidArgument("expected a 16-bit PGM with maxval 65535");
  Image image(pgm.height, pgm.width);
  for (std::size_t i = 0; i < image.size(); ++i) image.pixels[i] = pgm.samples[i] / 65535.0;
  return image;
}

Pgm mask_to_pgm8(const Image& mask) {
  Pgm pgm{mask.height, mask.width, 255, std::vector<std::uint16_t>(mask.size())};
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const double v = mask.pixels[i];
    if (v != 0.0 && v != 1.0) throw InvalidArgument("mask values must be 0 or 1");
    pgm.samples[i] = v == 1.0 ? 255 : 0;
  }
  return pgm;
}

Image mask_from_pgm8(const Pgm& pgm) {
  if (pgm.maxval != 255) throw InvalidArgument("expected an 8-bit mask PGM with maxval 255");
  Image mask(pgm.height, pgm.width);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const auto s = pgm.samples[i];
    if (s != 0 && s != 255) throw InvalidArgument("mask PGM samples must be 0 or 255");
    mask.pixels[i] = s == 255 ? 1.0 : 0.0;
  }
  return mask;
}

}  // namespace fpu::synthdata
