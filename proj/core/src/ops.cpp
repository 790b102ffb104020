#include "mvqa/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "mvqa/errors.hpp"

namespace mvqa::ops {
namespace {

[[noreturn]] void dim_error(const char* op, const Shape& a, const Shape& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " +
                       shape_string(a) + " and " + shape_string(b));
}

[[noreturn]] void dim_error(const char* op, const Shape& a) {
  throw DimensionError(std::string(op) + ": unsupported shape " +
                       shape_string(a));
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double clamped_tanh(double x) {
  return std::tanh(std::clamp(x, -kTanhClamp, kTanhClamp));
}

void check_mask(const char* op, const Mask& mask, std::size_t length) {
  if (mask.length() != length)
    throw DimensionError(std::string(op) + ": mask length " +
                         std::to_string(mask.length()) + " != " +
                         std::to_string(length));
  if (!mask.any())
    throw ContractViolation(std::string(op) + ": mask has no valid position");
}

// Operand as an (rows x cols) matrix for matmul.
struct MatDims {
  std::size_t rows, cols;
};

MatDims as_left(const Tensor& t) {
  if (t.rank() == 1) return {1, t.size()};
  if (t.rank() == 2) return {t.shape()[0], t.shape()[1]};
  dim_error("matmul", t.shape());
}

MatDims as_right(const Tensor& t) {
  if (t.rank() == 1) return {t.size(), 1};
  if (t.rank() == 2) return {t.shape()[0], t.shape()[1]};
  dim_error("matmul", t.shape());
}

// c[m x n] += a[m x k] * b[k x n]
void gemm(const double* a, const double* b, double* c, std::size_t m,
          std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

}  // namespace

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  MatDims da = as_left(av);
  MatDims db = as_right(bv);
  if (da.cols != db.rows) dim_error("matmul", av.shape(), bv.shape());
  const std::size_t m = da.rows, k = da.cols, n = db.cols;
  Shape out_shape;
  if (av.rank() == 2) out_shape.push_back(m);
  if (bv.rank() == 2) out_shape.push_back(n);
  Tensor out(out_shape);
  gemm(av.data().data(), bv.data().data(), out.data().data(), m, k, n);
  return a.graph().record(
      "matmul", std::move(out), {a, b}, [m, k, n](BackwardContext& ctx) {
        const double* g = ctx.grad().data().data();
        const double* A = ctx.input(0).data().data();
        const double* B = ctx.input(1).data().data();
        if (Tensor* ga = ctx.input_grad(0)) {
          double* dA = ga->data().data();
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
              double s = 0;
              const double* gi = g + i * n;
              const double* bp = B + p * n;
              for (std::size_t j = 0; j < n; ++j) s += gi[j] * bp[j];
              dA[i * k + p] += s;
            }
        }
        if (Tensor* gb = ctx.input_grad(1)) {
          double* dB = gb->data().data();
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
              double av = A[i * k + p];
              if (av == 0.0) continue;
              const double* gi = g + i * n;
              double* bp = dB + p * n;
              for (std::size_t j = 0; j < n; ++j) bp[j] += av * gi[j];
            }
        }
      });
}

Var transpose(Var a) {
  const Tensor& v = a.value();
  if (v.rank() != 2) dim_error("transpose", v.shape());
  const std::size_t r = v.shape()[0], c = v.shape()[1];
  Tensor out(Shape{c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.at(j, i) = v.at(i, j);
  return a.graph().record("transpose", std::move(out), {a},
                          [r, c](BackwardContext& ctx) {
                            Tensor* ga = ctx.input_grad(0);
                            const Tensor& g = ctx.grad();
                            for (std::size_t i = 0; i < r; ++i)
                              for (std::size_t j = 0; j < c; ++j)
                                ga->at(i, j) += g.at(j, i);
                          });
}

namespace {

Var binary_elementwise(const char* op, Var a, Var b, int kind) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  bool broadcast = false;
  if (av.shape() != bv.shape()) {
    if (kind == 0 && av.rank() == 2 && bv.rank() == 1 &&
        av.shape()[1] == bv.size())
      broadcast = true;
    else
      dim_error(op, av.shape(), bv.shape());
  }
  Tensor out(av.shape());
  const std::size_t n = av.size();
  const std::size_t w = bv.size();
  for (std::size_t i = 0; i < n; ++i) {
    double y = broadcast ? bv[i % w] : bv[i];
    out[i] = kind == 0 ? av[i] + y : kind == 1 ? av[i] - y : av[i] * y;
  }
  return a.graph().record(
      op, std::move(out), {a, b}, [kind, broadcast, n, w](BackwardContext& ctx) {
        const Tensor& g = ctx.grad();
        if (Tensor* ga = ctx.input_grad(0)) {
          if (kind == 2) {
            const Tensor& bv = ctx.input(1);
            for (std::size_t i = 0; i < n; ++i) (*ga)[i] += g[i] * bv[i];
          } else {
            for (std::size_t i = 0; i < n; ++i) (*ga)[i] += g[i];
          }
        }
        if (Tensor* gb = ctx.input_grad(1)) {
          if (kind == 2) {
            const Tensor& av = ctx.input(0);
            for (std::size_t i = 0; i < n; ++i) (*gb)[i] += g[i] * av[i];
          } else {
            double sign = kind == 1 ? -1.0 : 1.0;
            for (std::size_t i = 0; i < n; ++i)
              (*gb)[broadcast ? i % w : i] += sign * g[i];
          }
        }
      });
}

}  // namespace

Var add(Var a, Var b) { return binary_elementwise("add", a, b, 0); }
Var sub(Var a, Var b) { return binary_elementwise("sub", a, b, 1); }
Var mul(Var a, Var b) { return binary_elementwise("mul", a, b, 2); }

Var scale(Var a, double factor) {
  Tensor out = a.value();
  for (auto& x : out.data()) x *= factor;
  return a.graph().record("scale", std::move(out), {a},
                          [factor](BackwardContext& ctx) {
                            Tensor* ga = ctx.input_grad(0);
                            const Tensor& g = ctx.grad();
                            for (std::size_t i = 0; i < g.size(); ++i)
                              (*ga)[i] += factor * g[i];
                          });
}

Var tanh(Var a) {
  Tensor out = a.value();
  for (auto& x : out.data()) x = clamped_tanh(x);
  return a.graph().record("tanh", std::move(out), {a}, [](BackwardContext& ctx) {
    Tensor* ga = ctx.input_grad(0);
    const Tensor& g = ctx.grad();
    const Tensor& y = ctx.output();
    for (std::size_t i = 0; i < g.size(); ++i)
      (*ga)[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var sigmoid(Var a) {
  Tensor out = a.value();
  for (auto& x : out.data()) x = stable_sigmoid(x);
  return a.graph().record("sigmoid", std::move(out), {a},
                          [](BackwardContext& ctx) {
                            Tensor* ga = ctx.input_grad(0);
                            const Tensor& g = ctx.grad();
                            const Tensor& y = ctx.output();
                            for (std::size_t i = 0; i < g.size(); ++i)
                              (*ga)[i] += g[i] * y[i] * (1.0 - y[i]);
                          });
}

Var affine(Var x, Var weight, Var bias) {
  return add(matmul(x, weight), bias);
}

Var concat(std::initializer_list<Var> parts) {
  return concat(std::span<const Var>(parts.begin(), parts.size()));
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat: no operands");
  const Tensor& first = parts[0].value();
  const std::size_t rank = first.rank();
  if (rank != 1 && rank != 2) dim_error("concat", first.shape());
  const std::size_t rows = first.rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    if (v.rank() != rank || v.rows() != rows)
      dim_error("concat", first.shape(), v.shape());
    widths.push_back(v.cols());
    total += v.cols();
  }
  Tensor out(rank == 1 ? Shape{total} : Shape{rows, total});
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& v = parts[k].value();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(v.row(r).begin(), widths[k], out.row(r).begin() + offset);
    offset += widths[k];
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts[0].graph().record(
      "concat", std::move(out), std::move(inputs),
      [widths, rows](BackwardContext& ctx) {
        const Tensor& g = ctx.grad();
        std::size_t offset = 0;
        for (std::size_t k = 0; k < widths.size(); ++k) {
          if (Tensor* gk = ctx.input_grad(k)) {
            for (std::size_t r = 0; r < rows; ++r) {
              auto src = g.row(r).subspan(offset, widths[k]);
              auto dst = gk->row(r);
              for (std::size_t j = 0; j < widths[k]; ++j) dst[j] += src[j];
            }
          }
          offset += widths[k];
        }
      });
}

Var dropout(Var a, double p) {
  if (p < 0.0 || p >= 1.0)
    throw ContractViolation("dropout: rate must lie in [0, 1)");
  Graph& g = a.graph();
  if (!g.training() || p == 0.0) return a;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> keep(a.value().size());
  for (auto& k : keep) k = unif(g.rng()) >= p ? keep_scale : 0.0;
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= keep[i];
  return g.record("dropout", std::move(out), {a},
                  [keep = std::move(keep)](BackwardContext& ctx) {
                    Tensor* ga = ctx.input_grad(0);
                    const Tensor& gr = ctx.grad();
                    for (std::size_t i = 0; i < gr.size(); ++i)
                      (*ga)[i] += gr[i] * keep[i];
                  });
}

Var slice(Var a, std::size_t begin, std::size_t count) {
  const Tensor& v = a.value();
  if ((v.rank() != 1 && v.rank() != 2) || count == 0 ||
      begin + count > v.cols())
    throw DimensionError("slice: columns [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of " +
                         shape_string(v.shape()));
  const std::size_t rows = v.rows();
  Tensor out(v.rank() == 1 ? Shape{count} : Shape{rows, count});
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(v.row(r).begin() + begin, count, out.row(r).begin());
  return a.graph().record("slice", std::move(out), {a},
                          [begin, count, rows](BackwardContext& ctx) {
                            Tensor* ga = ctx.input_grad(0);
                            const Tensor& g = ctx.grad();
                            for (std::size_t r = 0; r < rows; ++r) {
                              auto dst = ga->row(r);
                              auto src = g.row(r);
                              for (std::size_t j = 0; j < count; ++j)
                                dst[begin + j] += src[j];
                            }
                          });
}

Var row(Var matrix, std::size_t r) {
  const Tensor& v = matrix.value();
  if (v.rank() != 2 || r >= v.shape()[0])
    throw DimensionError("row " + std::to_string(r) + " of " +
                         shape_string(v.shape()));
  auto src = v.row(r);
  Tensor out = Tensor::vector(std::vector<double>(src.begin(), src.end()));
  return matrix.graph().record("row", std::move(out), {matrix},
                               [r](BackwardContext& ctx) {
                                 Tensor* ga = ctx.input_grad(0);
                                 const Tensor& g = ctx.grad();
                                 auto dst = ga->row(r);
                                 for (std::size_t j = 0; j < g.size(); ++j)
                                   dst[j] += g[j];
                               });
}

Var scatter_rows(std::span<const Var> rows,
                 std::span<const std::size_t> positions, std::size_t total) {
  if (rows.empty() || rows.size() != positions.size())
    throw DimensionError("scatter_rows: rows/positions mismatch");
  const std::size_t width = rows[0].value().size();
  Tensor out(Shape{total, width});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Tensor& v = rows[i].value();
    if (v.rank() != 1 || v.size() != width)
      dim_error("scatter_rows", rows[0].value().shape(), v.shape());
    if (positions[i] >= total)
      throw DimensionError("scatter_rows: position out of range");
    std::copy(v.data().begin(), v.data().end(),
              out.row(positions[i]).begin());
  }
  std::vector<Var> inputs(rows.begin(), rows.end());
  std::vector<std::size_t> pos(positions.begin(), positions.end());
  return rows[0].graph().record(
      "scatter_rows", std::move(out), std::move(inputs),
      [pos = std::move(pos)](BackwardContext& ctx) {
        const Tensor& g = ctx.grad();
        for (std::size_t i = 0; i < pos.size(); ++i)
          if (Tensor* gi = ctx.input_grad(i)) {
            auto src = g.row(pos[i]);
            for (std::size_t j = 0; j < gi->size(); ++j) (*gi)[j] += src[j];
          }
      });
}

Var gather_rows(Var table, std::span<const std::size_t> ids) {
  const Tensor& t = table.value();
  if (t.rank() != 2) dim_error("gather_rows", t.shape());
  if (ids.empty()) throw DimensionError("gather_rows: no ids");
  const std::size_t d = t.shape()[1];
  Tensor out(Shape{ids.size(), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= t.shape()[0])
      throw DimensionError("gather_rows: id " + std::to_string(ids[i]) +
                           " outside table " + shape_string(t.shape()));
    std::copy_n(t.row(ids[i]).begin(), d, out.row(i).begin());
  }
  std::vector<std::size_t> idv(ids.begin(), ids.end());
  return table.graph().record(
      "gather_rows", std::move(out), {table},
      [idv = std::move(idv)](BackwardContext& ctx) {
        Tensor* gt = ctx.input_grad(0);
        const Tensor& g = ctx.grad();
        for (std::size_t i = 0; i < idv.size(); ++i) {
          auto dst = gt->row(idv[i]);
          auto src = g.row(i);
          for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
        }
      });
}

Var mask_rows(Var matrix, const Mask& mask) {
  const Tensor& v = matrix.value();
  if (v.rank() != 2 || mask.length() != v.shape()[0])
    throw DimensionError("mask_rows: mask length " +
                         std::to_string(mask.length()) + " vs " +
                         shape_string(v.shape()));
  Tensor out = v;
  for (std::size_t r = 0; r < v.shape()[0]; ++r)
    if (!mask[r]) std::fill(out.row(r).begin(), out.row(r).end(), 0.0);
  return matrix.graph().record("mask_rows", std::move(out), {matrix},
                               [mask](BackwardContext& ctx) {
                                 Tensor* ga = ctx.input_grad(0);
                                 const Tensor& g = ctx.grad();
                                 for (std::size_t r = 0; r < mask.length(); ++r) {
                                   if (!mask[r]) continue;
                                   auto dst = ga->row(r);
                                   auto src = g.row(r);
                                   for (std::size_t j = 0; j < dst.size(); ++j)
                                     dst[j] += src[j];
                                 }
                               });
}

Var masked_softmax(Var scores, const Mask& mask) {
  const Tensor& v = scores.value();
  if (v.rank() != 1) dim_error("masked_softmax", v.shape());
  check_mask("masked_softmax", mask, v.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i)
    if (mask[i]) top = std::max(top, v[i]);
  Tensor out(v.shape());
  double total = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (mask[i]) total += out[i] = std::exp(v[i] - top);
  for (auto& x : out.data()) x /= total;
  return scores.graph().record("masked_softmax", std::move(out), {scores},
                               [](BackwardContext& ctx) {
                                 Tensor* ga = ctx.input_grad(0);
                                 const Tensor& g = ctx.grad();
                                 const Tensor& y = ctx.output();
                                 double dot = 0;
                                 for (std::size_t i = 0; i < y.size(); ++i)
                                   dot += g[i] * y[i];
                                 for (std::size_t i = 0; i < y.size(); ++i)
                                   (*ga)[i] += y[i] * (g[i] - dot);
                               });
}

Var pool(Var matrix, const Mask& mask, PoolKind kind) {
  const Tensor& v = matrix.value();
  if (v.rank() != 2) dim_error("pool", v.shape());
  check_mask("pool", mask, v.shape()[0]);
  const std::size_t rows = v.shape()[0], d = v.shape()[1];
  Tensor out(Shape{d});
  if (kind == PoolKind::kMean) {
    const double count = static_cast<double>(mask.count());
    for (std::size_t r = 0; r < rows; ++r)
      if (mask[r])
        for (std::size_t j = 0; j < d; ++j) out[j] += v.at(r, j);
    for (auto& x : out.data()) x /= count;
    return matrix.graph().record("pool_mean", std::move(out), {matrix},
                                 [mask, count](BackwardContext& ctx) {
                                   Tensor* ga = ctx.input_grad(0);
                                   const Tensor& g = ctx.grad();
                                   for (std::size_t r = 0; r < mask.length(); ++r)
                                     if (mask[r])
                                       for (std::size_t j = 0; j < g.size(); ++j)
                                         ga->at(r, j) += g[j] / count;
                                 });
  }
  std::vector<std::size_t> arg(d, rows);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!mask[r]) continue;
    for (std::size_t j = 0; j < d; ++j)
      if (arg[j] == rows || v.at(r, j) > out[j]) {
        out[j] = v.at(r, j);
        arg[j] = r;
      }
  }
  return matrix.graph().record("pool_max", std::move(out), {matrix},
                               [arg = std::move(arg)](BackwardContext& ctx) {
                                 Tensor* ga = ctx.input_grad(0);
                                 const Tensor& g = ctx.grad();
                                 for (std::size_t j = 0; j < arg.size(); ++j)
                                   ga->at(arg[j], j) += g[j];
                               });
}

Var masked_row_max(Var matrix, const Mask& row_mask, const Mask& col_mask) {
  const Tensor& v = matrix.value();
  if (v.rank() != 2) dim_error("masked_row_max", v.shape());
  const std::size_t rows = v.shape()[0], cols = v.shape()[1];
  check_mask("masked_row_max", row_mask, rows);
  check_mask("masked_row_max", col_mask, cols);
  Tensor out(Shape{rows});
  std::vector<std::size_t> arg(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!row_mask[r]) continue;
    for (std::size_t c = 0; c < cols; ++c)
      if (col_mask[c] && (arg[r] == cols || v.at(r, c) > out[r])) {
        out[r] = v.at(r, c);
        arg[r] = c;
      }
  }
  return matrix.graph().record(
      "masked_row_max", std::move(out), {matrix},
      [arg = std::move(arg), cols](BackwardContext& ctx) {
        Tensor* ga = ctx.input_grad(0);
        const Tensor& g = ctx.grad();
        for (std::size_t r = 0; r < arg.size(); ++r)
          if (arg[r] != cols) ga->at(r, arg[r]) += g[r];
      });
}

Var sum(Var a) {
  double s = 0;
  for (double x : a.value().data()) s += x;
  return a.graph().record("sum", Tensor::scalar(s), {a},
                          [](BackwardContext& ctx) {
                            Tensor* ga = ctx.input_grad(0);
                            const double g = ctx.grad()[0];
                            for (auto& x : ga->data()) x += g;
                          });
}

Var sum_squares(Var a, std::size_t skip_rows) {
  const Tensor& v = a.value();
  const std::size_t begin = v.rank() == 2 ? skip_rows * v.cols() : 0;
  double s = 0;
  for (std::size_t i = begin; i < v.size(); ++i) s += v[i] * v[i];
  return a.graph().record("sum_squares", Tensor::scalar(s), {a},
                          [begin](BackwardContext& ctx) {
                            Tensor* ga = ctx.input_grad(0);
                            const Tensor& v = ctx.input(0);
                            const double g = ctx.grad()[0];
                            for (std::size_t i = begin; i < v.size(); ++i)
                              (*ga)[i] += 2.0 * g * v[i];
                          });
}

Var weighted_sum(std::span<const Var> items, Var weights) {
  const Tensor& w = weights.value();
  if (items.empty()) throw DimensionError("weighted_sum: no items");
  if (w.rank() != 1 || w.size() != items.size())
    throw DimensionError("weighted_sum: " + std::to_string(items.size()) +
                         " items with weights " + shape_string(w.shape()));
  const Shape& shape = items[0].value().shape();
  Tensor out(shape);
  for (std::size_t k = 0; k < items.size(); ++k) {
    const Tensor& v = items[k].value();
    if (v.shape() != shape) dim_error("weighted_sum", shape, v.shape());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] += w[k] * v[i];
  }
  std::vector<Var> inputs(items.begin(), items.end());
  inputs.push_back(weights);
  const std::size_t k_items = items.size();
  return weights.graph().record(
      "weighted_sum", std::move(out), std::move(inputs),
      [k_items](BackwardContext& ctx) {
        const Tensor& g = ctx.grad();
        const Tensor& w = ctx.input(k_items);
        Tensor* gw = ctx.input_grad(k_items);
        for (std::size_t k = 0; k < k_items; ++k) {
          const Tensor& v = ctx.input(k);
          if (Tensor* gk = ctx.input_grad(k))
            for (std::size_t i = 0; i < g.size(); ++i) (*gk)[i] += w[k] * g[i];
          if (gw) {
            double dot = 0;
            for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * v[i];
            (*gw)[k] += dot;
          }
        }
      });
}

Var normalize_sum(Var v) {
  const Tensor& x = v.value();
  double s = 0;
  for (double e : x.data()) s += e;
  if (s == 0.0) throw ContractViolation("normalize_sum: zero total");
  Tensor out = x;
  for (auto& e : out.data()) e /= s;
  return v.graph().record("normalize_sum", std::move(out), {v},
                          [s](BackwardContext& ctx) {
                            Tensor* gv = ctx.input_grad(0);
                            const Tensor& g = ctx.grad();
                            const Tensor& y = ctx.output();
                            double dot = 0;
                            for (std::size_t i = 0; i < y.size(); ++i)
                              dot += g[i] * y[i];
                            for (std::size_t i = 0; i < y.size(); ++i)
                              (*gv)[i] += (g[i] - dot) / s;
                          });
}

Var pick(Var v, std::size_t index) {
  const Tensor& x = v.value();
  if (index >= x.size())
    throw DimensionError("pick: index " + std::to_string(index) + " of " +
                         shape_string(x.shape()));
  return v.graph().record("pick", Tensor::scalar(x[index]), {v},
                          [index](BackwardContext& ctx) {
                            (*ctx.input_grad(0))[index] += ctx.grad()[0];
                          });
}

Var binary_softmax(Var logits) {
  const Tensor& z = logits.value();
  if (z.rank() != 1 || z.size() != 2) dim_error("binary_softmax", z.shape());
  const double p1 = stable_sigmoid(z[1] - z[0]);
  Tensor out = Tensor::vector({1.0 - p1, p1});
  return logits.graph().record("binary_softmax", std::move(out), {logits},
                               [](BackwardContext& ctx) {
                                 Tensor* gz = ctx.input_grad(0);
                                 const Tensor& g = ctx.grad();
                                 const double p1 = ctx.output()[1];
                                 const double d = p1 * (1.0 - p1) * (g[1] - g[0]);
                                 (*gz)[1] += d;
                                 (*gz)[0] -= d;
                               });
}

Var binary_cross_entropy(Var p, double label, double eps) {
  const Tensor& x = p.value();
  if (x.size() != 1) dim_error("binary_cross_entropy", x.shape());
  const double raw = x[0];
  const double pc = std::clamp(raw, eps, 1.0 - eps);
  const double loss =
      -(label * std::log(pc) + (1.0 - label) * std::log(1.0 - pc));
  const bool clamped = raw != pc;
  return p.graph().record(
      "binary_cross_entropy", Tensor::scalar(loss), {p},
      [label, pc, clamped](BackwardContext& ctx) {
        if (clamped) return;
        (*ctx.input_grad(0))[0] +=
            ctx.grad()[0] * (-label / pc + (1.0 - label) / (1.0 - pc));
      });
}

Var unfold(Var matrix, std::size_t width) {
  const Tensor& e = matrix.value();
  if (e.rank() != 2) dim_error("unfold", e.shape());
  if (width == 0) throw ContractViolation("unfold: window width must be >= 1");
  const std::size_t len = e.shape()[0], d = e.shape()[1];
  const std::ptrdiff_t left = static_cast<std::ptrdiff_t>((width - 1) / 2);
  Tensor out(Shape{len, width * d});
  for (std::size_t l = 0; l < len; ++l)
    for (std::size_t j = 0; j < width; ++j) {
      std::ptrdiff_t src = static_cast<std::ptrdiff_t>(l) - left +
                           static_cast<std::ptrdiff_t>(j);
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
      std::copy_n(e.row(static_cast<std::size_t>(src)).begin(), d,
                  out.row(l).begin() + j * d);
    }
  return matrix.graph().record(
      "unfold", std::move(out), {matrix},
      [len, d, width, left](BackwardContext& ctx) {
        Tensor* ge = ctx.input_grad(0);
        const Tensor& g = ctx.grad();
        for (std::size_t l = 0; l < len; ++l)
          for (std::size_t j = 0; j < width; ++j) {
            std::ptrdiff_t src = static_cast<std::ptrdiff_t>(l) - left +
                                 static_cast<std::ptrdiff_t>(j);
            if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
            auto dst = ge->row(static_cast<std::size_t>(src));
            auto from = g.row(l).subspan(j * d, d);
            for (std::size_t k = 0; k < d; ++k) dst[k] += from[k];
          }
      });
}

Var lstm_cell(Var gates_x, Var state, Var w_h, Var bias) {
  const Tensor& gx = gates_x.value();
  const Tensor& st = state.value();
  const Tensor& wh = w_h.value();
  const Tensor& b = bias.value();
  if (st.rank() != 1 || st.size() % 2 != 0) dim_error("lstm_cell", st.shape());
  const std::size_t h = st.size() / 2;
  if (gx.rank() != 1 || gx.size() != 4 * h)
    dim_error("lstm_cell", gx.shape(), st.shape());
  if (wh.rank() != 2 || wh.shape()[0] != h || wh.shape()[1] != 4 * h)
    dim_error("lstm_cell", wh.shape(), st.shape());
  if (b.shape() != gx.shape()) dim_error("lstm_cell", b.shape(), gx.shape());

  // gates: activated i, f, o, g; kept for the backward pass.
  std::vector<double> gates(4 * h);
  for (std::size_t j = 0; j < 4 * h; ++j) gates[j] = gx[j] + b[j];
  gemm(st.data().data(), wh.data().data(), gates.data(), 1, h, 4 * h);
  for (std::size_t j = 0; j < 3 * h; ++j) gates[j] = stable_sigmoid(gates[j]);
  for (std::size_t j = 3 * h; j < 4 * h; ++j) gates[j] = clamped_tanh(gates[j]);

  Tensor out(Shape{2 * h});
  std::vector<double> tanh_c(h);
  for (std::size_t j = 0; j < h; ++j) {
    const double c = gates[h + j] * st[h + j] + gates[j] * gates[3 * h + j];
    tanh_c[j] = clamped_tanh(c);
    out[j] = gates[2 * h + j] * tanh_c[j];
    out[h + j] = c;
  }
  return gates_x.graph().record(
      "lstm_cell", std::move(out), {gates_x, state, w_h, bias},
      [h, gates = std::move(gates),
       tanh_c = std::move(tanh_c)](BackwardContext& ctx) {
        const Tensor& g = ctx.grad();
        const Tensor& st = ctx.input(1);
        const Tensor& wh = ctx.input(2);
        std::vector<double> da(4 * h);
        std::vector<double> dc_prev(h);
        for (std::size_t j = 0; j < h; ++j) {
          const double i = gates[j], f = gates[h + j], o = gates[2 * h + j],
                       gg = gates[3 * h + j];
          const double dh = g[j];
          const double dc = g[h + j] + dh * o * (1.0 - tanh_c[j] * tanh_c[j]);
          da[j] = dc * gg * i * (1.0 - i);
          da[h + j] = dc * st[h + j] * f * (1.0 - f);
          da[2 * h + j] = dh * tanh_c[j] * o * (1.0 - o);
          da[3 * h + j] = dc * i * (1.0 - gg * gg);
          dc_prev[j] = dc * f;
        }
        if (Tensor* ggx = ctx.input_grad(0))
          for (std::size_t j = 0; j < 4 * h; ++j) (*ggx)[j] += da[j];
        if (Tensor* gb = ctx.input_grad(3))
          for (std::size_t j = 0; j < 4 * h; ++j) (*gb)[j] += da[j];
        if (Tensor* gwh = ctx.input_grad(2))
          for (std::size_t p = 0; p < h; ++p) {
            const double hp = st[p];
            if (hp == 0.0) continue;
            auto dst = gwh->row(p);
            for (std::size_t j = 0; j < 4 * h; ++j) dst[j] += hp * da[j];
          }
        if (Tensor* gs = ctx.input_grad(1)) {
          for (std::size_t p = 0; p < h; ++p) {
            auto wrow = wh.row(p);
            double s = 0;
            for (std::size_t j = 0; j < 4 * h; ++j) s += wrow[j] * da[j];
            (*gs)[p] += s;
          }
          for (std::size_t j = 0; j < h; ++j) (*gs)[h + j] += dc_prev[j];
        }
      });
}

}  // namespace mvqa::ops
