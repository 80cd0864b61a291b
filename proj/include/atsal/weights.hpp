#pragma once

#include <atsal/tensor.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace atsal {

// ATSW binary weight file, little-endian:
//   "ATSW" | u32 version (=1) | u32 entry count |
//   per entry: u16 name length | UTF-8 name | 4 x u32 extents | f32 values
inline constexpr std::uint32_t weight_file_version = 1;

void write_weights(std::ostream& out, const WeightStore& store);
WeightStore read_weights(std::istream& in);

void save_weights(const std::filesystem::path& path, const WeightStore& store);
WeightStore load_weights(const std::filesystem::path& path);

// Prefixes (e.g. "attention/") for which the store holds no key at all.
std::vector<std::string> missing_prefixes(const WeightStore& store,
                                          std::span<const std::string> prefixes);

// Entries whose key starts with prefix; the prefix is kept.
WeightStore select_prefix(const WeightStore& store, const std::string& prefix);

} // namespace atsal
