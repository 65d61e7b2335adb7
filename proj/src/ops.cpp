#include "egad/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "egad/blas.hpp"
#include "egad/errors.hpp"

namespace egad {
namespace {

void check_rank(const NdArray& a, int rank, const char* what) {
  if (a.rank() != rank) {
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got shape " +
                     shape_str(a.shape()));
  }
}

// Geometry of one same-padded cross-correlation.
struct ConvGeom {
  std::int64_t batch, h, w, ci, kh, kw, co, oh, ow;
  std::int64_t pad_t, pad_l;
  int stride;
  std::int64_t col_rows() const { return batch * oh * ow; }
  std::int64_t col_cols() const { return kh * kw * ci; }
};

ConvGeom conv_geometry(const Shape& xs, const Shape& ks, int stride) {
  if (xs.size() != 4) throw ShapeError("conv2d: input must be [b,h,w,c], got " + shape_str(xs));
  if (ks.size() != 4) throw ShapeError("conv2d: kernel must be [kh,kw,c_in,c_out], got " + shape_str(ks));
  if (stride != 1 && stride != 2) throw ShapeError("conv2d: unsupported stride " + std::to_string(stride));
  ConvGeom g;
  g.batch = xs[0];
  g.h = xs[1];
  g.w = xs[2];
  g.ci = xs[3];
  g.kh = ks[0];
  g.kw = ks[1];
  g.co = ks[3];
  g.stride = stride;
  if (ks[2] != g.ci) {
    throw ShapeError("conv2d: channel mismatch, input " + shape_str(xs) + " vs kernel " + shape_str(ks));
  }
  g.oh = (g.h + stride - 1) / stride;
  g.ow = (g.w + stride - 1) / stride;
  const std::int64_t pad_h = std::max<std::int64_t>((g.oh - 1) * stride + g.kh - g.h, 0);
  const std::int64_t pad_w = std::max<std::int64_t>((g.ow - 1) * stride + g.kw - g.w, 0);
  g.pad_t = pad_h / 2;
  g.pad_l = pad_w / 2;
  return g;
}

// col: [b*oh*ow, kh*kw*ci]
void im2col(const NdArray& x, const ConvGeom& g, std::vector<double>& col) {
  col.assign(static_cast<std::size_t>(g.col_rows() * g.col_cols()), 0.0);
  const double* xd = x.data();
  double* cd = col.data();
  const std::int64_t row_stride = g.col_cols();
  for (std::int64_t b = 0; b < g.batch; ++b) {
    const double* xb = xd + b * g.h * g.w * g.ci;
    for (std::int64_t oy = 0; oy < g.oh; ++oy) {
      for (std::int64_t ox = 0; ox < g.ow; ++ox) {
        double* crow = cd + ((b * g.oh + oy) * g.ow + ox) * row_stride;
        for (std::int64_t ky = 0; ky < g.kh; ++ky) {
          const std::int64_t iy = oy * g.stride + ky - g.pad_t;
          if (iy < 0 || iy >= g.h) continue;
          for (std::int64_t kx = 0; kx < g.kw; ++kx) {
            const std::int64_t ix = ox * g.stride + kx - g.pad_l;
            if (ix < 0 || ix >= g.w) continue;
            std::memcpy(crow + (ky * g.kw + kx) * g.ci, xb + (iy * g.w + ix) * g.ci,
                        static_cast<std::size_t>(g.ci) * sizeof(double));
          }
        }
      }
    }
  }
}

// Scatter-add of a col matrix back into image layout; accumulation order is
// fixed, so results are deterministic.
void col2im_add(const std::vector<double>& col, const ConvGeom& g, NdArray& dx) {
  const double* cd = col.data();
  double* xd = dx.data();
  const std::int64_t row_stride = g.col_cols();
  for (std::int64_t b = 0; b < g.batch; ++b) {
    double* xb = xd + b * g.h * g.w * g.ci;
    for (std::int64_t oy = 0; oy < g.oh; ++oy) {
      for (std::int64_t ox = 0; ox < g.ow; ++ox) {
        const double* crow = cd + ((b * g.oh + oy) * g.ow + ox) * row_stride;
        for (std::int64_t ky = 0; ky < g.kh; ++ky) {
          const std::int64_t iy = oy * g.stride + ky - g.pad_t;
          if (iy < 0 || iy >= g.h) continue;
          for (std::int64_t kx = 0; kx < g.kw; ++kx) {
            const std::int64_t ix = ox * g.stride + kx - g.pad_l;
            if (ix < 0 || ix >= g.w) continue;
            const double* src = crow + (ky * g.kw + kx) * g.ci;
            double* dst = xb + (iy * g.w + ix) * g.ci;
            for (std::int64_t c = 0; c < g.ci; ++c) dst[c] += src[c];
          }
        }
      }
    }
  }
}

// y[b*oh*ow, co] = im2col(x) . kmat
NdArray conv_forward(Precision prec, const NdArray& x, const NdArray& k, const ConvGeom& g) {
  std::vector<double> col;
  im2col(x, g, col);
  NdArray y({g.batch, g.oh, g.ow, g.co});
  blas::gemm(prec, false, false, g.col_rows(), g.co, g.col_cols(), 1.0, col.data(), g.col_cols(), k.data(),
             g.co, 0.0, y.data(), g.co);
  return y;
}

// dx = col2im(dy . kmat^T); dy laid out as [b,oh,ow,co].
NdArray conv_backward_data(Precision prec, const NdArray& dy, const NdArray& k, const ConvGeom& g) {
  std::vector<double> dcol(static_cast<std::size_t>(g.col_rows() * g.col_cols()));
  blas::gemm(prec, false, true, g.col_rows(), g.col_cols(), g.co, 1.0, dy.data(), g.co, k.data(), g.co, 0.0,
             dcol.data(), g.col_cols());
  NdArray dx({g.batch, g.h, g.w, g.ci});
  col2im_add(dcol, g, dx);
  return dx;
}

// dk += im2col(x)^T . dy
void conv_backward_kernel_into(Precision prec, const NdArray& x, const NdArray& dy, const ConvGeom& g,
                               NdArray& dk_accum) {
  std::vector<double> col;
  im2col(x, g, col);
  blas::gemm(prec, true, false, g.col_cols(), g.co, g.col_rows(), 1.0, col.data(), g.col_cols(), dy.data(),
             g.co, 1.0, dk_accum.data(), g.co);
}

void check_binary_targets(const NdArray& targets) {
  for (std::int64_t i = 0; i < targets.size(); ++i) {
    const double v = targets[i];
    if (v != 0.0 && v != 1.0) {
      throw DataError("cross-entropy targets must be 0 or 1, got " + std::to_string(v));
    }
  }
}

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

const char* act_name(ActKind k) {
  switch (k) {
    case ActKind::linear: return "linear";
    case ActKind::relu: return "relu";
    case ActKind::leaky_relu: return "lrelu";
    case ActKind::tanh: return "tanh";
    case ActKind::sigmoid: return "sigmoid";
  }
  return "?";
}

Var matmul(Tape& t, Var a, Var b) {
  const NdArray& av = t.value(a);
  const NdArray& bv = t.value(b);
  check_rank(av, 2, "matmul lhs");
  check_rank(bv, 2, "matmul rhs");
  if (av.dim(1) != bv.dim(0)) {
    throw ShapeError("matmul: inner dims disagree, " + shape_str(av.shape()) + " vs " +
                     shape_str(bv.shape()));
  }
  const std::int64_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  NdArray y({m, n});
  blas::gemm(t.precision(), false, false, m, n, k, 1.0, av.data(), k, bv.data(), n, 0.0, y.data(), n);
  return t.record("matmul", std::move(y), {a, b}, [a, b, m, k, n](Tape& tp, Var self) {
    const NdArray& dy = tp.grad(self);
    if (tp.wants(a)) {
      blas::gemm(tp.precision(), false, true, m, k, n, 1.0, dy.data(), n, tp.value(b).data(), n, 1.0,
                 tp.grad(a).data(), k);
    }
    if (tp.wants(b)) {
      blas::gemm(tp.precision(), true, false, k, n, m, 1.0, tp.value(a).data(), k, dy.data(), n, 1.0,
                 tp.grad(b).data(), n);
    }
  });
}

Var add_bias(Tape& t, Var x, Var b) {
  const NdArray& xv = t.value(x);
  const NdArray& bv = t.value(b);
  check_rank(bv, 1, "add_bias bias");
  const std::int64_t f = bv.dim(0);
  if (xv.rank() < 1 || xv.dim(xv.rank() - 1) != f) {
    throw ShapeError("add_bias: last dim of " + shape_str(xv.shape()) + " vs bias " + shape_str(bv.shape()));
  }
  NdArray y = xv;
  const std::int64_t rows = y.size() / f;
  double* yd = y.data();
  const double* bd = bv.data();
  for (std::int64_t r = 0; r < rows; ++r) {
    double* row = yd + r * f;
    for (std::int64_t j = 0; j < f; ++j) row[j] += bd[j];
  }
  return t.record("add_bias", std::move(y), {x, b}, [x, b, f, rows](Tape& tp, Var self) {
    const NdArray& dy = tp.grad(self);
    if (tp.wants(x)) tp.accumulate(x, dy);
    if (tp.wants(b)) {
      NdArray& db = tp.grad(b);
      const double* d = dy.data();
      for (std::int64_t r = 0; r < rows; ++r) {
        const double* row = d + r * f;
        for (std::int64_t j = 0; j < f; ++j) db[j] += row[j];
      }
    }
  });
}

Var dense(Tape& t, Var x, Var w, Var b) { return add_bias(t, matmul(t, x, w), b); }

Var conv2d(Tape& t, Var x, Var k, int stride) {
  const ConvGeom g = conv_geometry(t.value(x).shape(), t.value(k).shape(), stride);
  NdArray y = conv_forward(t.precision(), t.value(x), t.value(k), g);
  return t.record("conv2d", std::move(y), {x, k}, [x, k, g](Tape& tp, Var self) {
    const NdArray& dy = tp.grad(self);
    if (tp.wants(x)) {
      tp.accumulate(x, conv_backward_data(tp.precision(), dy, tp.value(k), g));
    }
    if (tp.wants(k)) {
      conv_backward_kernel_into(tp.precision(), tp.value(x), dy, g, tp.grad(k));
    }
  });
}

Var conv2d_transpose(Tape& t, Var x, Var k, int stride) {
  const NdArray& xv = t.value(x);
  const NdArray& kv = t.value(k);
  check_rank(xv, 4, "conv2d_transpose input");
  check_rank(kv, 4, "conv2d_transpose kernel");
  if (kv.dim(3) != xv.dim(3)) {
    throw ShapeError("conv2d_transpose: channel mismatch, input " + shape_str(xv.shape()) + " vs kernel " +
                     shape_str(kv.shape()));
  }
  // Adjoint of the conv that maps [b, h*s, w*s, c_out] down to x's shape.
  const Shape big{xv.dim(0), xv.dim(1) * stride, xv.dim(2) * stride, kv.dim(2)};
  const ConvGeom g = conv_geometry(big, kv.shape(), stride);
  NdArray y = conv_backward_data(t.precision(), xv, kv, g);
  return t.record("conv2d_transpose", std::move(y), {x, k}, [x, k, g](Tape& tp, Var self) {
    const NdArray& dy = tp.grad(self);
    if (tp.wants(x)) {
      tp.accumulate(x, conv_forward(tp.precision(), dy, tp.value(k), g));
    }
    if (tp.wants(k)) {
      conv_backward_kernel_into(tp.precision(), dy, tp.value(x), g, tp.grad(k));
    }
  });
}

Var batch_norm(Tape& t, Var x, Var gamma, Var beta, Mode mode, NdArray& running_mean,
               NdArray& running_var, double momentum, double eps) {
  const NdArray& xv = t.value(x);
  if (xv.rank() < 2) throw ShapeError("batch_norm: need rank >= 2, got " + shape_str(xv.shape()));
  const std::int64_t f = xv.dim(xv.rank() - 1);
  const std::int64_t rows = xv.size() / f;
  const NdArray& gv = t.value(gamma);
  const NdArray& bv = t.value(beta);
  if (gv.size() != f || bv.size() != f || running_mean.size() != f || running_var.size() != f) {
    throw ShapeError("batch_norm: parameter size mismatch for feature dim " + std::to_string(f));
  }

  NdArray mean({f}), inv_std({f});
  if (mode == Mode::train) {
    if (xv.dim(0) < 2) {
      throw ShapeError("batch_norm: train mode requires batch >= 2, got " + std::to_string(xv.dim(0)));
    }
    NdArray var({f});
    const double* xd = xv.data();
    for (std::int64_t r = 0; r < rows; ++r) {
      const double* row = xd + r * f;
      for (std::int64_t j = 0; j < f; ++j) mean[j] += row[j];
    }
    for (std::int64_t j = 0; j < f; ++j) mean[j] /= static_cast<double>(rows);
    for (std::int64_t r = 0; r < rows; ++r) {
      const double* row = xd + r * f;
      for (std::int64_t j = 0; j < f; ++j) {
        const double d = row[j] - mean[j];
        var[j] += d * d;
      }
    }
    for (std::int64_t j = 0; j < f; ++j) var[j] /= static_cast<double>(rows);
    for (std::int64_t j = 0; j < f; ++j) inv_std[j] = 1.0 / std::sqrt(var[j] + eps);
    for (std::int64_t j = 0; j < f; ++j) {
      running_mean[j] = momentum * running_mean[j] + (1.0 - momentum) * mean[j];
      running_var[j] = momentum * running_var[j] + (1.0 - momentum) * var[j];
    }
  } else {
    mean = running_mean;
    for (std::int64_t j = 0; j < f; ++j) inv_std[j] = 1.0 / std::sqrt(running_var[j] + eps);
  }

  NdArray xhat(xv.shape());
  {
    const double* xd = xv.data();
    double* hd = xhat.data();
    for (std::int64_t r = 0; r < rows; ++r) {
      const double* row = xd + r * f;
      double* hrow = hd + r * f;
      for (std::int64_t j = 0; j < f; ++j) hrow[j] = (row[j] - mean[j]) * inv_std[j];
    }
  }
  NdArray y(xv.shape());
  {
    const double* hd = xhat.data();
    double* yd = y.data();
    const double* gd = gv.data();
    const double* bd = bv.data();
    for (std::int64_t r = 0; r < rows; ++r) {
      const double* hrow = hd + r * f;
      double* yrow = yd + r * f;
      for (std::int64_t j = 0; j < f; ++j) yrow[j] = gd[j] * hrow[j] + bd[j];
    }
  }

  const bool train = mode == Mode::train;
  return t.record("batch_norm", std::move(y), {x, gamma, beta},
                  [x, gamma, beta, xh = std::move(xhat), istd = std::move(inv_std), f, rows,
                   train](Tape& tp, Var self) {
                    const NdArray& dy = tp.grad(self);
                    const double* dyd = dy.data();
                    const double* hd = xh.data();
                    // d_beta and d_gamma reductions are shared by both modes
                    NdArray sum_dy({f}), sum_dy_h({f});
                    for (std::int64_t r = 0; r < rows; ++r) {
                      const double* drow = dyd + r * f;
                      const double* hrow = hd + r * f;
                      for (std::int64_t j = 0; j < f; ++j) {
                        sum_dy[j] += drow[j];
                        sum_dy_h[j] += drow[j] * hrow[j];
                      }
                    }
                    if (tp.wants(beta)) tp.accumulate(beta, sum_dy);
                    if (tp.wants(gamma)) tp.accumulate(gamma, sum_dy_h);
                    if (tp.wants(x)) {
                      NdArray& dx = tp.grad(x);
                      double* dxd = dx.data();
                      const double* gd = tp.value(gamma).data();
                      const double n = static_cast<double>(rows);
                      if (train) {
                        for (std::int64_t r = 0; r < rows; ++r) {
                          const double* drow = dyd + r * f;
                          const double* hrow = hd + r * f;
                          double* dxrow = dxd + r * f;
                          for (std::int64_t j = 0; j < f; ++j) {
                            dxrow[j] += gd[j] * istd[j] *
                                        (drow[j] - sum_dy[j] / n - hrow[j] * sum_dy_h[j] / n);
                          }
                        }
                      } else {
                        for (std::int64_t r = 0; r < rows; ++r) {
                          const double* drow = dyd + r * f;
                          double* dxrow = dxd + r * f;
                          for (std::int64_t j = 0; j < f; ++j) dxrow[j] += gd[j] * istd[j] * drow[j];
                        }
                      }
                    }
                  });
}

Var dropout(Tape& t, Var x, double rate, Mode mode, Rng* rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw ConfigError("dropout rate must be in [0,1), got " + std::to_string(rate));
  }
  if (rate == 0.0 || mode == Mode::infer) return x;
  if (!rng) throw ConfigError("dropout in train mode needs an rng");
  const NdArray& xv = t.value(x);
  NdArray mask(xv.shape());
  const double keep_scale = 1.0 / (1.0 - rate);
  for (std::int64_t i = 0; i < mask.size(); ++i) {
    mask[i] = rng->uniform() < rate ? 0.0 : keep_scale;
  }
  NdArray y(xv.shape());
  for (std::int64_t i = 0; i < y.size(); ++i) y[i] = xv[i] * mask[i];
  return t.record("dropout", std::move(y), {x}, [x, m = std::move(mask)](Tape& tp, Var self) {
    if (!tp.wants(x)) return;
    const NdArray& dy = tp.grad(self);
    NdArray& dx = tp.grad(x);
    for (std::int64_t i = 0; i < dx.size(); ++i) dx[i] += dy[i] * m[i];
  });
}

Var activation(Tape& t, ActKind kind, Var x, double leaky_slope) {
  if (kind == ActKind::linear) return x;
  const NdArray& xv = t.value(x);
  NdArray y(xv.shape());
  const std::int64_t n = xv.size();
  switch (kind) {
    case ActKind::relu:
      for (std::int64_t i = 0; i < n; ++i) y[i] = xv[i] > 0.0 ? xv[i] : 0.0;
      break;
    case ActKind::leaky_relu:
      for (std::int64_t i = 0; i < n; ++i) y[i] = xv[i] > 0.0 ? xv[i] : leaky_slope * xv[i];
      break;
    case ActKind::tanh:
      for (std::int64_t i = 0; i < n; ++i) y[i] = std::tanh(xv[i]);
      break;
    case ActKind::sigmoid:
      for (std::int64_t i = 0; i < n; ++i) y[i] = stable_sigmoid(xv[i]);
      break;
    case ActKind::linear:
      break;
  }
  return t.record(act_name(kind), std::move(y), {x}, [x, kind, leaky_slope](Tape& tp, Var self) {
    if (!tp.wants(x)) return;
    const NdArray& dy = tp.grad(self);
    const NdArray& yv = tp.value(self);
    const NdArray& xv = tp.value(x);
    NdArray& dx = tp.grad(x);
    const std::int64_t n = dx.size();
    switch (kind) {
      case ActKind::relu:
        // subgradient at 0 is 0
        for (std::int64_t i = 0; i < n; ++i) dx[i] += xv[i] > 0.0 ? dy[i] : 0.0;
        break;
      case ActKind::leaky_relu:
        for (std::int64_t i = 0; i < n; ++i) dx[i] += xv[i] > 0.0 ? dy[i] : leaky_slope * dy[i];
        break;
      case ActKind::tanh:
        for (std::int64_t i = 0; i < n; ++i) dx[i] += (1.0 - yv[i] * yv[i]) * dy[i];
        break;
      case ActKind::sigmoid:
        for (std::int64_t i = 0; i < n; ++i) dx[i] += yv[i] * (1.0 - yv[i]) * dy[i];
        break;
      case ActKind::linear:
        break;
    }
  });
}

Var concat(Tape& t, Var a, Var b, int axis) {
  const NdArray& av = t.value(a);
  const NdArray& bv = t.value(b);
  if (av.rank() != bv.rank()) {
    throw ShapeError("concat: rank mismatch " + shape_str(av.shape()) + " vs " + shape_str(bv.shape()));
  }
  if (axis < 0 || axis >= av.rank()) throw ShapeError("concat: bad axis " + std::to_string(axis));
  for (int i = 0; i < av.rank(); ++i) {
    if (i != axis && av.dim(i) != bv.dim(i)) {
      throw ShapeError("concat: non-axis dims differ, " + shape_str(av.shape()) + " vs " +
                       shape_str(bv.shape()));
    }
  }
  Shape out_shape = av.shape();
  out_shape[static_cast<std::size_t>(axis)] += bv.dim(axis);
  std::int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= av.dim(i);
  for (int i = axis + 1; i < av.rank(); ++i) inner *= av.dim(i);
  const std::int64_t a_blk = av.dim(axis) * inner;
  const std::int64_t b_blk = bv.dim(axis) * inner;
  NdArray y(out_shape);
  for (std::int64_t o = 0; o < outer; ++o) {
    std::memcpy(y.data() + o * (a_blk + b_blk), av.data() + o * a_blk,
                static_cast<std::size_t>(a_blk) * sizeof(double));
    std::memcpy(y.data() + o * (a_blk + b_blk) + a_blk, bv.data() + o * b_blk,
                static_cast<std::size_t>(b_blk) * sizeof(double));
  }
  return t.record("concat", std::move(y), {a, b}, [a, b, outer, a_blk, b_blk](Tape& tp, Var self) {
    const NdArray& dy = tp.grad(self);
    if (tp.wants(a)) {
      NdArray& da = tp.grad(a);
      for (std::int64_t o = 0; o < outer; ++o) {
        const double* src = dy.data() + o * (a_blk + b_blk);
        double* dst = da.data() + o * a_blk;
        for (std::int64_t i = 0; i < a_blk; ++i) dst[i] += src[i];
      }
    }
    if (tp.wants(b)) {
      NdArray& db = tp.grad(b);
      for (std::int64_t o = 0; o < outer; ++o) {
        const double* src = dy.data() + o * (a_blk + b_blk) + a_blk;
        double* dst = db.data() + o * b_blk;
        for (std::int64_t i = 0; i < b_blk; ++i) dst[i] += src[i];
      }
    }
  });
}

Var reshape(Tape& t, Var x, Shape shape) {
  NdArray y = t.value(x).reshaped(std::move(shape));
  return t.record("reshape", std::move(y), {x}, [x](Tape& tp, Var self) {
    if (!tp.wants(x)) return;
    const NdArray& dy = tp.grad(self);
    NdArray& dx = tp.grad(x);
    for (std::int64_t i = 0; i < dx.size(); ++i) dx[i] += dy[i];
  });
}

Var add(Tape& t, Var a, Var b) {
  const NdArray& av = t.value(a);
  const NdArray& bv = t.value(b);
  check_same_shape(av, bv, "add");
  NdArray y(av.shape());
  for (std::int64_t i = 0; i < y.size(); ++i) y[i] = av[i] + bv[i];
  return t.record("add", std::move(y), {a, b}, [a, b](Tape& tp, Var self) {
    const NdArray& dy = tp.grad(self);
    if (tp.wants(a)) tp.accumulate(a, dy);
    if (tp.wants(b)) tp.accumulate(b, dy);
  });
}

Var scale(Tape& t, Var x, double c) {
  const NdArray& xv = t.value(x);
  NdArray y(xv.shape());
  for (std::int64_t i = 0; i < y.size(); ++i) y[i] = c * xv[i];
  return t.record("scale", std::move(y), {x}, [x, c](Tape& tp, Var self) {
    if (!tp.wants(x)) return;
    const NdArray& dy = tp.grad(self);
    NdArray& dx = tp.grad(x);
    for (std::int64_t i = 0; i < dx.size(); ++i) dx[i] += c * dy[i];
  });
}

Var sum_all(Tape& t, Var x) {
  const NdArray& xv = t.value(x);
  double s = 0.0;
  for (std::int64_t i = 0; i < xv.size(); ++i) s += xv[i];
  return t.record("sum", NdArray::scalar(s), {x}, [x](Tape& tp, Var self) {
    if (!tp.wants(x)) return;
    const double g = tp.grad(self)[0];
    NdArray& dx = tp.grad(x);
    for (std::int64_t i = 0; i < dx.size(); ++i) dx[i] += g;
  });
}

namespace {

Var sigmoid_ce_impl(Tape& t, Var logits, const NdArray& targets, bool mean_over_batch) {
  const NdArray& lv = t.value(logits);
  check_same_shape(lv, targets, "sigmoid_cross_entropy");
  check_binary_targets(targets);
  const double denom = mean_over_batch ? static_cast<double>(lv.dim(0)) : 1.0;
  double total = 0.0;
  for (std::int64_t i = 0; i < lv.size(); ++i) total += sigmoid_ce_value(lv[i], targets[i]);
  return t.record(mean_over_batch ? "sigmoid_ce_mean" : "sigmoid_ce_sum", NdArray::scalar(total / denom),
                  {logits}, [logits, tg = targets, denom](Tape& tp, Var self) {
                    if (!tp.wants(logits)) return;
                    const double g = tp.grad(self)[0] / denom;
                    const NdArray& lv = tp.value(logits);
                    NdArray& dl = tp.grad(logits);
                    for (std::int64_t i = 0; i < dl.size(); ++i) {
                      dl[i] += g * (stable_sigmoid(lv[i]) - tg[i]);
                    }
                  });
}

}  // namespace

Var sigmoid_cross_entropy(Tape& t, Var logits, const NdArray& targets) {
  return sigmoid_ce_impl(t, logits, targets, true);
}

Var sigmoid_cross_entropy_sum(Tape& t, Var logits, const NdArray& targets) {
  return sigmoid_ce_impl(t, logits, targets, false);
}

Var l1_distance_sum(Tape& t, Var a, Var b) {
  const NdArray& av = t.value(a);
  const NdArray& bv = t.value(b);
  check_same_shape(av, bv, "l1_distance");
  double s = 0.0;
  for (std::int64_t i = 0; i < av.size(); ++i) s += std::abs(av[i] - bv[i]);
  return t.record("l1", NdArray::scalar(s), {a, b}, [a, b](Tape& tp, Var self) {
    const double g = tp.grad(self)[0];
    const NdArray& av = tp.value(a);
    const NdArray& bv = tp.value(b);
    const bool wa = tp.wants(a), wb = tp.wants(b);
    if (!wa && !wb) return;
    for (std::int64_t i = 0; i < av.size(); ++i) {
      const double s = sign_of(av[i] - bv[i]);
      if (wa) tp.grad(a)[i] += g * s;
      if (wb) tp.grad(b)[i] -= g * s;
    }
  });
}

double l1_distance(const NdArray& a, const NdArray& b) {
  check_same_shape(a, b, "l1_distance");
  double s = 0.0;
  for (std::int64_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

std::vector<double> l1_per_sample(const NdArray& a, const NdArray& b) {
  check_same_shape(a, b, "l1_per_sample");
  const std::int64_t batch = a.dim(0);
  const std::int64_t per = a.size() / batch;
  std::vector<double> out(static_cast<std::size_t>(batch), 0.0);
  for (std::int64_t i = 0; i < batch; ++i) {
    const double* pa = a.data() + i * per;
    const double* pb = b.data() + i * per;
    double s = 0.0;
    for (std::int64_t j = 0; j < per; ++j) s += std::abs(pa[j] - pb[j]);
    out[static_cast<std::size_t>(i)] = s;
  }
  return out;
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double sigmoid_ce_value(double logit, double target) {
  // max(l,0) - l*t + log(1 + exp(-|l|)), stable for any logit magnitude
  return std::max(logit, 0.0) - logit * target + std::log1p(std::exp(-std::abs(logit)));
}

std::vector<double> sigmoid_ce_per_sample(const NdArray& logits, double target) {
  std::vector<double> out(static_cast<std::size_t>(logits.size()));
  for (std::int64_t i = 0; i < logits.size(); ++i) {
    out[static_cast<std::size_t>(i)] = sigmoid_ce_value(logits[i], target);
  }
  return out;
}

NdArray sigmoid_values(const NdArray& logits) {
  NdArray out(logits.shape());
  for (std::int64_t i = 0; i < logits.size(); ++i) out[i] = stable_sigmoid(logits[i]);
  return out;
}

}  // namespace egad
