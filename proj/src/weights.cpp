#include <atsal/weights.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

namespace atsal {
namespace {

constexpr char magic[4] = {'A', 'T', 'S', 'W'};

void put_u16(std::ostream& out, std::uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                              static_cast<unsigned char>(v >> 8)};
  out.write(reinterpret_cast<const char*>(b), 2);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i)
    b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 4);
}

void read_exact(std::istream& in, void* dst, std::size_t n, const char* what) {
  in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n)
    throw FormatError(std::string("weight file truncated while reading ") + what);
}

std::uint16_t get_u16(std::istream& in) {
  unsigned char b[2];
  read_exact(in, b, 2, "u16");
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t get_u32(std::istream& in, const char* what) {
  unsigned char b[4];
  read_exact(in, b, 4, what);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

} // namespace

void write_weights(std::ostream& out, const WeightStore& store) {
  out.write(magic, 4);
  put_u32(out, weight_file_version);
  put_u32(out, static_cast<std::uint32_t>(store.size()));
  for (const auto& [name, t] : store) {
    if (name.size() > std::numeric_limits<std::uint16_t>::max())
      throw ArgumentError("weight name too long: " + name.substr(0, 32) + "...");
    put_u16(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    const Shape& s = t.shape();
    for (std::size_t e : {s.n, s.c, s.h, s.w})
      put_u32(out, static_cast<std::uint32_t>(e));
    for (float v : t.data())
      put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  if (!out)
    throw FormatError("failed writing weight stream");
}

WeightStore read_weights(std::istream& in) {
  char head[4];
  read_exact(in, head, 4, "magic");
  if (std::memcmp(head, magic, 4) != 0)
    throw FormatError("not an ATSW weight file (bad magic)");
  const std::uint32_t version = get_u32(in, "version");
  if (version != weight_file_version)
    throw FormatError("unsupported ATSW version " + std::to_string(version));
  const std::uint32_t count = get_u32(in, "entry count");
  WeightStore store;
  for (std::uint32_t e = 0; e < count; ++e) {
    const std::uint16_t len = get_u16(in);
    std::string name(len, '\0');
    read_exact(in, name.data(), len, "entry name");
    Shape s{get_u32(in, "extent"), get_u32(in, "extent"), get_u32(in, "extent"),
            get_u32(in, "extent")};
    std::vector<float> data(s.size());
    for (float& v : data)
      v = std::bit_cast<float>(get_u32(in, "values"));
    if (!store.emplace(name, Tensor(s, std::move(data))).second)
      throw FormatError("duplicate weight entry: " + name);
  }
  return store;
}

void save_weights(const std::filesystem::path& path, const WeightStore& store) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw InputError("cannot open " + path.string() + " for writing");
  write_weights(out, store);
}

WeightStore load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InputError("cannot open weight file " + path.string());
  return read_weights(in);
}

std::vector<std::string> missing_prefixes(const WeightStore& store,
                                          std::span<const std::string> prefixes) {
  std::vector<std::string> missing;
  for (const std::string& p : prefixes) {
    auto it = store.lower_bound(p);
    if (it == store.end() || it->first.compare(0, p.size(), p) != 0)
      missing.push_back(p);
  }
  return missing;
}

WeightStore select_prefix(const WeightStore& store, const std::string& prefix) {
  WeightStore out;
  for (auto it = store.lower_bound(prefix);
       it != store.end() && it->first.compare(0, prefix.size(), prefix) == 0; ++it)
    out.emplace(it->first, it->second);
  return out;
}

} // namespace atsal
