#include "sparsevo/image_io.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <string>

#include "sparsevo/errors.hpp"

namespace sparsevo::io {

namespace {

std::uint32_t read_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void write_u32_le(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                              static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b.data(), b.size());
}

ImageTensor read_text(std::istream& in) {
  Shape shape;
  if (!(in >> shape.channels >> shape.width >> shape.height)) {
    throw ContractError("image: malformed text header");
  }
  if (shape.size() == 0) throw ContractError("image: zero dimension");
  std::vector<float> data(shape.size());
  for (auto& v : data) {
    long raw = 0;
    if (!(in >> raw)) throw ContractError("image: truncated text data");
    if (raw < 0 || raw > 255) throw ContractError("image: value outside [0, 255]");
    v = static_cast<float>(raw) / 255.0f;
  }
  return ImageTensor(shape, std::move(data));
}

ImageTensor read_binary(std::istream& in) {
  std::array<unsigned char, 12> header{};
  if (!in.read(reinterpret_cast<char*>(header.data()), header.size())) {
    throw ContractError("image: truncated binary header");
  }
  const Shape shape{read_u32_le(header.data()), read_u32_le(header.data() + 4),
                    read_u32_le(header.data() + 8)};
  if (shape.size() == 0) throw ContractError("image: zero dimension");
  std::vector<unsigned char> raw(shape.size());
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
    throw ContractError("image: truncated binary data");
  }
  std::vector<float> data(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) data[i] = static_cast<float>(raw[i]) / 255.0f;
  return ImageTensor(shape, std::move(data));
}

std::uint8_t to_byte(float v) { return static_cast<std::uint8_t>(std::lround(v * 255.0f)); }

}  // namespace

ImageTensor read_image(std::istream& in) {
  const int first = in.peek();
  if (first == std::char_traits<char>::eof()) throw ContractError("image: empty input");
  if (std::isdigit(first) || std::isspace(first)) return read_text(in);
  return read_binary(in);
}

ImageTensor read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContractError("image: cannot open " + path.string());
  return read_image(in);
}

void write_image_text(std::ostream& out, const ImageTensor& image) {
  out << image.channels() << ' ' << image.width() << ' ' << image.height() << '\n';
  for (std::size_t c = 0; c < image.channels(); ++c) {
    for (std::size_t m = 0; m < image.height(); ++m) {
      for (std::size_t n = 0; n < image.width(); ++n) {
        if (n) out << ' ';
        out << static_cast<int>(to_byte(image.at(c, n + image.width() * m)));
      }
      out << '\n';
    }
  }
}

void write_image_binary(std::ostream& out, const ImageTensor& image) {
  write_u32_le(out, static_cast<std::uint32_t>(image.channels()));
  write_u32_le(out, static_cast<std::uint32_t>(image.width()));
  write_u32_le(out, static_cast<std::uint32_t>(image.height()));
  for (float v : image.data()) out.put(static_cast<char>(to_byte(v)));
}

void write_image(const std::filesystem::path& path, const ImageTensor& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ContractError("image: cannot write " + path.string());
  if (path.extension() == ".bin") {
    write_image_binary(out, image);
  } else {
    write_image_text(out, image);
  }
}

}  // namespace sparsevo::io
