#pragma once

#include <vector>

#include "egad/ndarray.hpp"
#include "egad/rng.hpp"
#include "egad/tape.hpp"

namespace egad {

enum class Mode { train, infer };

enum class ActKind { linear, relu, leaky_relu, tanh, sigmoid };

const char* act_name(ActKind k);

// Variance guard for batch normalization. Small enough that normalized
// outputs pass unit-variance checks at 1e-6.
constexpr double kBnEps = 1e-8;

// --- recorded (differentiable) ops ---

Var matmul(Tape& t, Var a, Var b);
Var add_bias(Tape& t, Var x, Var b);  // b broadcast over the last axis
Var dense(Tape& t, Var x, Var w, Var b);

// Cross-correlation, NHWC, same-padding, output spatial dims = ceil(in/stride).
// x: [b,h,w,c_in], k: [kh,kw,c_in,c_out], stride in {1,2}.
Var conv2d(Tape& t, Var x, Var k, int stride);

// Adjoint of conv2d; output spatial dims = input dims * stride.
// x: [b,h,w,c_in], k: [kh,kw,c_out,c_in].
Var conv2d_transpose(Tape& t, Var x, Var k, int stride);

// Normalizes over all axes except the last. Train mode uses batch statistics
// and folds them into the running stats with `momentum`; infer mode uses the
// running stats. Requires batch >= 2 in train mode.
Var batch_norm(Tape& t, Var x, Var gamma, Var beta, Mode mode, NdArray& running_mean,
               NdArray& running_var, double momentum, double eps = kBnEps);

// Inverted dropout: train mode zeroes units with probability `rate` and scales
// survivors by 1/(1-rate); infer mode is the identity.
Var dropout(Tape& t, Var x, double rate, Mode mode, Rng* rng);

Var activation(Tape& t, ActKind kind, Var x, double leaky_slope = 0.1);

Var concat(Tape& t, Var a, Var b, int axis);
Var reshape(Tape& t, Var x, Shape shape);
Var add(Tape& t, Var a, Var b);
Var scale(Tape& t, Var x, double c);
Var sum_all(Tape& t, Var x);

// Mean over the batch (axis 0) of the numerically stable per-element
// cross-entropy against sigmoid(logits). Targets must be 0 or 1.
Var sigmoid_cross_entropy(Tape& t, Var logits, const NdArray& targets);
// Same, summed instead of batch-meaned.
Var sigmoid_cross_entropy_sum(Tape& t, Var logits, const NdArray& targets);

// Sum of absolute differences over all elements.
Var l1_distance_sum(Tape& t, Var a, Var b);

// --- plain (non-recorded) helpers ---

// L1 distance over all elements of one sample.
double l1_distance(const NdArray& a, const NdArray& b);
// Per-sample L1 along axis 0.
std::vector<double> l1_per_sample(const NdArray& a, const NdArray& b);

double stable_sigmoid(double x);
double sigmoid_ce_value(double logit, double target);
// Per-sample stable cross-entropy of logits [b] or [b,1] against a constant target.
std::vector<double> sigmoid_ce_per_sample(const NdArray& logits, double target);
NdArray sigmoid_values(const NdArray& logits);

}  // namespace egad
