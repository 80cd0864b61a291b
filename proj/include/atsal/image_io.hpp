#pragma once

#include <atsal/tensor.hpp>

#include <filesystem>
#include <iosfwd>

namespace atsal {

// Binary PNM: P5 (grayscale) loads as 1x1xHxW, P6 (RGB) as 1x3xHxW, values
// scaled to [0, 1] by maxval. Saving quantizes round(clamp(v, 0, 1) * 255).
Tensor read_pnm(std::istream& in);
void write_pnm(std::ostream& out, const Tensor& image);

// ATSF: magic "ATSF", u32 height, u32 width, u32 channels (little-endian),
// then planar float32 data.
Tensor read_atsf(std::istream& in);
void write_atsf(std::ostream& out, const Tensor& image);

// Dispatches on the file's magic bytes. Throws FormatError for anything else.
Tensor load_image(const std::filesystem::path& path);

// ".f32" writes ATSF; anything else writes PNM (P5 or P6 by channel count).
void save_image(const std::filesystem::path& path, const Tensor& image);

// Replicates a single-channel image into three channels; 3-channel input is
// returned unchanged.
Tensor as_rgb(const Tensor& image);

Tensor load_salmap(const std::filesystem::path& path);
void save_salmap(const Tensor& map, const std::filesystem::path& path);

} // namespace atsal
