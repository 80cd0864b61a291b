#include <atsal/gemm.hpp>

#include <algorithm>
#include <vector>

namespace atsal {
namespace {

// Register tile: MR rows of A against NR columns of B, NR spanning two
// 512-bit vectors.
template <typename T>
struct Tile {
  static constexpr std::size_t mr = 8;
  static constexpr std::size_t nr = 128 / sizeof(T);
};

constexpr std::size_t kc_block = 256;
constexpr std::size_t mc_block = 96;
constexpr std::size_t nc_block = 2048;

// Packs an (mc x kc) block of op(A) into MR-row slivers, zero-padding the tail.
template <typename T>
void pack_a(Transpose trans, const T* a, std::size_t lda, std::size_t row0, std::size_t col0,
            std::size_t mc, std::size_t kc, T* out) {
  constexpr std::size_t mr = Tile<T>::mr;
  for (std::size_t i0 = 0; i0 < mc; i0 += mr) {
    const std::size_t rows = std::min(mr, mc - i0);
    for (std::size_t p = 0; p < kc; ++p) {
      for (std::size_t r = 0; r < mr; ++r) {
        T v{};
        if (r < rows) {
          const std::size_t i = row0 + i0 + r;
          const std::size_t j = col0 + p;
          v = trans == Transpose::no ? a[i * lda + j] : a[j * lda + i];
        }
        *out++ = v;
      }
    }
  }
}

// Packs a (kc x nc) block of op(B) into NR-column slivers, zero-padding the tail.
template <typename T>
void pack_b(Transpose trans, const T* b, std::size_t ldb, std::size_t row0, std::size_t col0,
            std::size_t kc, std::size_t nc, T* out) {
  constexpr std::size_t nr = Tile<T>::nr;
  for (std::size_t j0 = 0; j0 < nc; j0 += nr) {
    const std::size_t cols = std::min(nr, nc - j0);
    for (std::size_t p = 0; p < kc; ++p) {
      const std::size_t i = row0 + p;
      if (trans == Transpose::no) {
        const T* src = b + i * ldb + col0 + j0;
        std::size_t q = 0;
        for (; q < cols; ++q)
          out[q] = src[q];
        for (; q < nr; ++q)
          out[q] = T{};
      } else {
        std::size_t q = 0;
        for (; q < cols; ++q)
          out[q] = b[(col0 + j0 + q) * ldb + i];
        for (; q < nr; ++q)
          out[q] = T{};
      }
      out += nr;
    }
  }
}

template <typename T>
inline void micro_kernel(std::size_t kc, const T* __restrict a, const T* __restrict b,
                         T* __restrict acc_out) {
  constexpr std::size_t mr = Tile<T>::mr;
  constexpr std::size_t nr = Tile<T>::nr;
  T acc[mr][nr] = {};
  for (std::size_t p = 0; p < kc; ++p) {
    const T* bp = b + p * nr;
    const T* ap = a + p * mr;
#pragma GCC unroll 8
    for (std::size_t r = 0; r < mr; ++r) {
      const T ar = ap[r];
#pragma GCC unroll 32
      for (std::size_t q = 0; q < nr; ++q)
        acc[r][q] += ar * bp[q];
    }
  }
  for (std::size_t r = 0; r < mr; ++r)
    for (std::size_t q = 0; q < nr; ++q)
      acc_out[r * nr + q] = acc[r][q];
}

} // namespace

template <typename T>
void gemm(Transpose trans_a, Transpose trans_b, std::size_t m, std::size_t n, std::size_t k,
          const T* a, std::size_t lda, const T* b, std::size_t ldb, T* c, std::size_t ldc,
          bool accumulate) {
  constexpr std::size_t mr = Tile<T>::mr;
  constexpr std::size_t nr = Tile<T>::nr;
  if (m == 0 || n == 0)
    return;
  if (k == 0) {
    if (!accumulate)
      for (std::size_t i = 0; i < m; ++i)
        std::fill(c + i * ldc, c + i * ldc + n, T{});
    return;
  }

  thread_local std::vector<T> packed_a;
  thread_local std::vector<T> packed_b;
  packed_a.resize(((mc_block + mr - 1) / mr) * mr * kc_block);
  packed_b.resize(((nc_block + nr - 1) / nr) * nr * kc_block);
  T tile[mr * nr];

  for (std::size_t jc = 0; jc < n; jc += nc_block) {
    const std::size_t nc = std::min(nc_block, n - jc);
    for (std::size_t pc = 0; pc < k; pc += kc_block) {
      const std::size_t kc = std::min(kc_block, k - pc);
      const bool add = accumulate || pc > 0;
      pack_b(trans_b, b, ldb, pc, jc, kc, nc, packed_b.data());
      for (std::size_t ic = 0; ic < m; ic += mc_block) {
        const std::size_t mc = std::min(mc_block, m - ic);
        pack_a(trans_a, a, lda, ic, pc, mc, kc, packed_a.data());
        for (std::size_t jr = 0; jr < nc; jr += nr) {
          const std::size_t cols = std::min(nr, nc - jr);
          const T* bp = packed_b.data() + (jr / nr) * nr * kc;
          for (std::size_t ir = 0; ir < mc; ir += mr) {
            const std::size_t rows = std::min(mr, mc - ir);
            micro_kernel<T>(kc, packed_a.data() + (ir / mr) * mr * kc, bp, tile);
            for (std::size_t r = 0; r < rows; ++r) {
              T* crow = c + (ic + ir + r) * ldc + jc + jr;
              const T* trow = tile + r * nr;
              if (add)
                for (std::size_t q = 0; q < cols; ++q)
                  crow[q] += trow[q];
              else
                for (std::size_t q = 0; q < cols; ++q)
                  crow[q] = trow[q];
            }
          }
        }
      }
    }
  }
}

template void gemm<float>(Transpose, Transpose, std::size_t, std::size_t, std::size_t,
                          const float*, std::size_t, const float*, std::size_t, float*,
                          std::size_t, bool);
template void gemm<double>(Transpose, Transpose, std::size_t, std::size_t, std::size_t,
                           const double*, std::size_t, const double*, std::size_t, double*,
                           std::size_t, bool);

} // namespace atsal
