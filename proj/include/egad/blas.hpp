#pragma once

#include <cstdint>

namespace egad {

// Run-level compute precision for the GEMM-backed kernels. Everything is
// stored as float64; f32 runs the matrix products in single precision, which
// is what full-size training uses. Gradient checks run under f64.
enum class Precision { f64, f32 };

namespace blas {

// C = alpha * op(A) * op(B) + beta * C, row-major.
// op(A) is m x k, op(B) is k x n, C is m x n; leading dims are the row widths
// of the stored (untransposed) matrices.
void gemm(Precision prec, bool trans_a, bool trans_b, std::int64_t m, std::int64_t n, std::int64_t k,
          double alpha, const double* a, std::int64_t lda, const double* b, std::int64_t ldb, double beta,
          double* c, std::int64_t ldc);

}  // namespace blas
}  // namespace egad
