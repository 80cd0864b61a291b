#pragma once

#include <cstddef>

namespace atsal {

enum class Transpose { no, yes };

// C (m x n, leading dimension ldc) = op(A) * op(B) [+ C when accumulate].
// op(A) is m x k, op(B) is k x n. Row-major; lda/ldb are the row strides of
// A and B as stored (before the transpose is applied).
template <typename T>
void gemm(Transpose trans_a, Transpose trans_b, std::size_t m, std::size_t n, std::size_t k,
          const T* a, std::size_t lda, const T* b, std::size_t ldb, T* c, std::size_t ldc,
          bool accumulate);

} // namespace atsal
