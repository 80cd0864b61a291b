#pragma once

#include <atsal/tensor.hpp>

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

namespace testing {

inline double uniform(std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

template <typename T = float>
atsal::BasicTensor<T> random_tensor(atsal::Shape shape, std::mt19937_64& rng, double lo = -1.0,
                                    double hi = 1.0) {
  atsal::BasicTensor<T> t(shape);
  for (T& v : t.data())
    v = static_cast<T>(uniform(rng, lo, hi));
  return t;
}

// Fresh directory under the system temp path, removed on destruction.
class TempDir {
public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("atsal_test_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

} // namespace testing
