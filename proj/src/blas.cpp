#include "egad/blas.hpp"

#include <cblas.h>

#include <cstdlib>
#include <vector>

namespace egad::blas {
namespace {

int configured_threads() {
  // Deterministic single-threaded kernels by default; EGAD_THREADS overrides.
  if (const char* env = std::getenv("EGAD_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return 1;
}

struct BlasInit {
  BlasInit() { openblas_set_num_threads(configured_threads()); }
};
const BlasInit blas_init;

thread_local std::vector<float> f32_a;
thread_local std::vector<float> f32_b;
thread_local std::vector<float> f32_c;

void to_f32(const double* src, std::int64_t n, std::vector<float>& dst) {
  dst.resize(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) dst[static_cast<std::size_t>(i)] = static_cast<float>(src[i]);
}

}  // namespace

void gemm(Precision prec, bool trans_a, bool trans_b, std::int64_t m, std::int64_t n, std::int64_t k,
          double alpha, const double* a, std::int64_t lda, const double* b, std::int64_t ldb, double beta,
          double* c, std::int64_t ldc) {
  const CBLAS_TRANSPOSE ta = trans_a ? CblasTrans : CblasNoTrans;
  const CBLAS_TRANSPOSE tb = trans_b ? CblasTrans : CblasNoTrans;
  if (m == 0 || n == 0) return;
  if (prec == Precision::f64) {
    cblas_dgemm(CblasRowMajor, ta, tb, static_cast<int>(m), static_cast<int>(n), static_cast<int>(k), alpha,
                a, static_cast<int>(lda), b, static_cast<int>(ldb), beta, c, static_cast<int>(ldc));
    return;
  }
  // f32 path: matrices are converted, multiplied in single precision, and the
  // result widened back. Conversion is O(mk + kn + mn) against an O(mkn)
  // product, so it vanishes for the layer sizes that matter.
  const std::int64_t a_rows = trans_a ? k : m;
  const std::int64_t b_rows = trans_b ? n : k;
  to_f32(a, a_rows * lda, f32_a);
  to_f32(b, b_rows * ldb, f32_b);
  f32_c.resize(static_cast<std::size_t>(m * ldc));
  if (beta != 0.0) {
    for (std::int64_t i = 0; i < m * ldc; ++i) f32_c[static_cast<std::size_t>(i)] = static_cast<float>(c[i]);
  }
  cblas_sgemm(CblasRowMajor, ta, tb, static_cast<int>(m), static_cast<int>(n), static_cast<int>(k),
              static_cast<float>(alpha), f32_a.data(), static_cast<int>(lda), f32_b.data(),
              static_cast<int>(ldb), static_cast<float>(beta), f32_c.data(), static_cast<int>(ldc));
  for (std::int64_t i = 0; i < m * ldc; ++i) c[i] = static_cast<double>(f32_c[static_cast<std::size_t>(i)]);
}

}  // namespace egad::blas
