#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fpu/synthdata/image.hpp"

namespace fpu::synthdata {

// Binary greymap (P5). maxval <= 255 stores one byte per pixel, otherwise two
// bytes big-endian.
struct Pgm {
  std::size_t height = 0;
  std::size_t width = 0;
  std::uint32_t maxval = 0;
  std::vector<std::uint16_t> samples;
};

std::string encode_pgm(const Pgm& pgm);
// Throws ParseError naming the byte offset of the first problem.
Pgm decode_pgm(const std::string& bytes, const std::string& source = "<memory>");

void write_pgm(const std::filesystem::path& path, const Pgm& pgm);
Pgm read_pgm(const std::filesystem::path& path);

// Intensities in [0,1] <-> 16-bit samples, value = round(intensity * 65535).
Pgm to_pgm16(const Image& image);
Image from_pgm16(const Pgm& pgm);
// Binary masks <-> 8-bit 0/255.
Pgm mask_to_pgm8(const Image& mask);
Image mask_from_pgm8(const Pgm& pgm);

}  // namespace fpu::synthdata
