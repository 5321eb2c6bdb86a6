#pragma once

#include <filesystem>
#include <iosfwd>

#include "sparsevo/image.hpp"

namespace sparsevo::io {

// Two containers, both holding 8-bit values that load as v / 255:
//   text:   "C W H" header, then C*W*H integers in [0, 255], channel by channel,
//           rows of each channel in order.
//   binary: 12-byte header of three little-endian u32 (C, W, H), then C*W*H bytes.
// Loading sniffs the first byte: an ASCII digit or whitespace means text.

ImageTensor read_image(std::istream& in);
ImageTensor read_image(const std::filesystem::path& path);

void write_image_text(std::ostream& out, const ImageTensor& image);
void write_image_binary(std::ostream& out, const ImageTensor& image);
/// Binary when the extension is ".bin", text otherwise.
void write_image(const std::filesystem::path& path, const ImageTensor& image);

}  // namespace sparsevo::io
