#include <atsal/image_io.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace atsal {
namespace {

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string pnm_token(std::istream& in) {
  std::string token;
  int ch = in.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n')
        ch = in.get();
    } else if (std::isspace(ch)) {
      if (!token.empty())
        return token;
    } else {
      token.push_back(static_cast<char>(ch));
    }
    ch = in.get();
  }
  if (token.empty())
    throw FormatError("pnm: truncated header");
  return token;
}

std::size_t pnm_number(std::istream& in, const char* field) {
  const std::string t = pnm_token(in);
  if (t.empty() || !std::all_of(t.begin(), t.end(), [](unsigned char c) { return std::isdigit(c); }))
    throw FormatError(std::string("pnm: bad ") + field + " '" + t + "'");
  return std::stoul(t);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw FormatError("atsf: truncated header");
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

void require_single_image(const Tensor& image, const char* what) {
  if (image.shape().n != 1 || image.empty())
    throw DimensionError(std::string(what) + ": expected one non-empty image, got " +
                         image.shape().str());
}

} // namespace

Tensor read_pnm(std::istream& in) {
  char magic[2];
  if (!in.read(magic, 2) || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6'))
    throw FormatError("pnm: expected binary P5 or P6 magic");
  const std::size_t channels = magic[1] == '5' ? 1 : 3;
  const std::size_t width = pnm_number(in, "width");
  const std::size_t height = pnm_number(in, "height");
  const std::size_t maxval = pnm_number(in, "maxval");
  if (width == 0 || height == 0)
    throw FormatError("pnm: zero image extent");
  if (maxval == 0 || maxval > 65535)
    throw FormatError("pnm: maxval must lie in [1, 65535]");
  const std::size_t bytes = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(width * height * channels * bytes);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
    throw FormatError("pnm: truncated pixel data");
  Tensor out(Shape{1, channels, height, width});
  const float scale = 1.0f / static_cast<float>(maxval);
  for (std::size_t i = 0; i < height * width; ++i)
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t k = (i * channels + c) * bytes;
      const std::size_t v = bytes == 2 ? (std::size_t{raw[k]} << 8) | raw[k + 1] : raw[k];
      out.plane(0, c)[i] = static_cast<float>(v) * scale;
    }
  return out;
}

void write_pnm(std::ostream& out, const Tensor& image) {
  require_single_image(image, "write_pnm");
  const Shape& s = image.shape();
  if (s.c != 1 && s.c != 3)
    throw DimensionError("write_pnm: PNM holds 1 or 3 channels, got " + std::to_string(s.c));
  out << (s.c == 1 ? "P5" : "P6") << '\n' << s.w << ' ' << s.h << "\n255\n";
  std::vector<unsigned char> raw(s.h * s.w * s.c);
  for (std::size_t i = 0; i < s.h * s.w; ++i)
    for (std::size_t c = 0; c < s.c; ++c) {
      const float v = image.plane(0, c)[i];
      const float clamped = std::isnan(v) ? 0.0f : std::clamp(v, 0.0f, 1.0f);
      raw[i * s.c + c] = static_cast<unsigned char>(std::lround(clamped * 255.0f));
    }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

Tensor read_atsf(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "ATSF", 4) != 0)
    throw FormatError("atsf: bad magic");
  const std::size_t h = get_u32(in);
  const std::size_t w = get_u32(in);
  const std::size_t c = get_u32(in);
  if (h == 0 || w == 0 || c == 0)
    throw FormatError("atsf: zero extent in header");
  Tensor out(Shape{1, c, h, w});
  std::vector<unsigned char> raw(out.size() * 4);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
    throw FormatError("atsf: truncated data");
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::uint32_t bits = static_cast<std::uint32_t>(raw[4 * i]) |
                               static_cast<std::uint32_t>(raw[4 * i + 1]) << 8 |
                               static_cast<std::uint32_t>(raw[4 * i + 2]) << 16 |
                               static_cast<std::uint32_t>(raw[4 * i + 3]) << 24;
    float v;
    std::memcpy(&v, &bits, 4);
    out[i] = v;
  }
  return out;
}

void write_atsf(std::ostream& out, const Tensor& image) {
  require_single_image(image, "write_atsf");
  const Shape& s = image.shape();
  out.write("ATSF", 4);
  put_u32(out, static_cast<std::uint32_t>(s.h));
  put_u32(out, static_cast<std::uint32_t>(s.w));
  put_u32(out, static_cast<std::uint32_t>(s.c));
  for (const float v : image.data()) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
  }
}

Tensor load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InputError("cannot open '" + path.string() + "'");
  char magic[4] = {};
  in.read(magic, 4);
  in.clear();
  in.seekg(0);
  try {
    if (std::memcmp(magic, "ATSF", 4) == 0)
      return read_atsf(in);
    if (magic[0] == 'P' && (magic[1] == '5' || magic[1] == '6'))
      return read_pnm(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  throw FormatError(path.string() + ": not a P5/P6 or ATSF image");
}

void save_image(const std::filesystem::path& path, const Tensor& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw InputError("cannot write '" + path.string() + "'");
  if (path.extension() == ".f32")
    write_atsf(out, image);
  else
    write_pnm(out, image);
  if (!out)
    throw InputError("write failed for '" + path.string() + "'");
}

Tensor as_rgb(const Tensor& image) {
  const Shape s = image.shape();
  if (s.c == 3)
    return image;
  if (s.c != 1 || s.n != 1)
    throw DimensionError("as_rgb: expected a 1- or 3-channel image, got " + s.str());
  std::vector<float> rgb;
  rgb.reserve(3 * image.size());
  for (int k = 0; k < 3; ++k)
    rgb.insert(rgb.end(), image.data().begin(), image.data().end());
  return Tensor(Shape{1, 3, s.h, s.w}, std::move(rgb));
}

Tensor load_salmap(const std::filesystem::path& path) {
  Tensor map = load_image(path);
  if (map.shape().c != 1)
    throw FormatError(path.string() + ": saliency maps are single-channel, got " +
                      std::to_string(map.shape().c) + " channels");
  return map;
}

void save_salmap(const Tensor& map, const std::filesystem::path& path) {
  if (map.shape().c != 1)
    throw DimensionError("save_salmap: expected one channel, got " + map.shape().str());
  save_image(path, map);
}

} // namespace atsal
