#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mvqa/graph.hpp"
#include "mvqa/tensor.hpp"

// Differentiable operations on Graph nodes. Every function records one
// node (or returns its input unchanged) and throws DimensionError on
// incompatible shapes.
namespace mvqa::ops {

// |x| beyond this is clamped before tanh.
inline constexpr double kTanhClamp = 20.0;

enum class PoolKind { kMean, kMax };

// [m x k] * [k x n]. A rank-1 left operand is a row vector, a rank-1
// right operand a column vector; those extents are dropped from the
// result.
Var matmul(Var a, Var b);
Var transpose(Var a);

// Same shapes, or matrix + row vector broadcast over rows.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var tanh(Var a);
Var sigmoid(Var a);

// x * W + b.
Var affine(Var x, Var weight, Var bias);

// Concatenation on the last axis. Matrices need equal row counts.
Var concat(std::span<const Var> parts);
Var concat(std::initializer_list<Var> parts);

// Inverted dropout. Identity (the same node) outside training or at p == 0.
Var dropout(Var a, double p);

// Columns [begin, begin + count) of the last axis.
Var slice(Var a, std::size_t begin, std::size_t count);
Var row(Var matrix, std::size_t r);
// Places rank-1 `rows[i]` at row `positions[i]` of a [total x width]
// matrix; other rows are zero.
Var scatter_rows(std::span<const Var> rows,
                 std::span<const std::size_t> positions, std::size_t total);
// Rows `ids` of `table`.
Var gather_rows(Var table, std::span<const std::size_t> ids);
// Zeroes rows whose mask entry is false.
Var mask_rows(Var matrix, const Mask& mask);

// Softmax over valid positions, exactly 0 elsewhere.
Var masked_softmax(Var scores, const Mask& mask);
// Column-wise mean or max over valid rows.
Var pool(Var matrix, const Mask& mask, PoolKind kind);
// out[r] = max over valid columns of M[r, c] for valid rows, 0 for
// padded rows.
Var masked_row_max(Var matrix, const Mask& row_mask, const Mask& col_mask);

Var sum(Var a);
// Sum of squares, skipping the first `skip_rows` rows of a matrix.
Var sum_squares(Var a, std::size_t skip_rows = 0);
// sum_i weights[i] * items[i]; items share a shape, weights is [k].
Var weighted_sum(std::span<const Var> items, Var weights);
// v / sum(v).
Var normalize_sum(Var v);
Var pick(Var v, std::size_t index);

// [z0, z1] -> [p0, p1] with p1 = sigmoid(z1 - z0) and p0 = 1 - p1, so
// p0 + p1 == 1 in floating point.
Var binary_softmax(Var logits);
// -[y log p + (1 - y) log(1 - p)] with p clamped to [eps, 1 - eps].
Var binary_cross_entropy(Var p, double label, double eps = 1e-12);

// Window stack for a width-n convolution over rows of [L x d]: row l holds
// rows l - floor((n-1)/2) .. l + ceil((n-1)/2), zero outside [0, L).
Var unfold(Var matrix, std::size_t width);

// One LSTM step. gates_x: [4h] input projection (gate order i, f, o, g);
// state: [2h] previous (h, c); w_h: [h x 4h]; bias: [4h]. Returns the
// new [2h] (h, c).
Var lstm_cell(Var gates_x, Var state, Var w_h, Var bias);

}  // namespace mvqa::ops
