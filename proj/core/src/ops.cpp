#include "fusionpose/ops.hpp"

#include "fusionpose/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fusionpose::ad {
namespace {

Tape& tape_of(Var a) { return *a.tape; }

void same_tape(Var a, Var b, const char* op) {
  if (a.tape != b.tape) throw ContractError(std::string(op) + ": operands recorded on different tapes");
}

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected rank-2 operand, got " + shape_string(t.shape()));
  }
}

[[noreturn]] void mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + shape_string(a.shape()) +
                       " and " + shape_string(b.shape()));
}

void add_into(Tensor& dst, const Tensor& src) {
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

// Elementwise unary op with derivative expressed through input x and output y.
template <typename Fwd, typename Deriv>
Var unary(Var a, Fwd fwd, Deriv deriv) {
  Tensor out = a.value();
  for (double& v : out.data()) v = fwd(v);
  return tape_of(a).record(std::move(out), {a}, [a = a.id, deriv](Tape& t, std::size_t self) {
    if (!t.requires_grad(a)) return;
    const Tensor& x = t.value(a);
    const Tensor& y = t.value(self);
    const Tensor& gy = t.grad(self);
    Tensor& gx = t.grad(a);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i] * deriv(x[i], y[i]);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  same_tape(a, b, "matmul");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2(av, "matmul");
  require_rank2(bv, "matmul");
  if (av.cols() != bv.rows()) mismatch("matmul", av, bv);
  Tensor out({av.rows(), bv.cols()});
  out.map().noalias() = av.map() * bv.map();
  return tape_of(a).record(std::move(out), {a, b}, [a = a.id, b = b.id](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(a)) t.grad(a).map().noalias() += g.map() * t.value(b).map().transpose();
    if (t.requires_grad(b)) t.grad(b).map().noalias() += t.value(a).map().transpose() * g.map();
  });
}

Var matmul_nt(Var a, Var b) {
  same_tape(a, b, "matmul_nt");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2(av, "matmul_nt");
  require_rank2(bv, "matmul_nt");
  if (av.cols() != bv.cols()) mismatch("matmul_nt", av, bv);
  Tensor out({av.rows(), bv.rows()});
  out.map().noalias() = av.map() * bv.map().transpose();
  return tape_of(a).record(std::move(out), {a, b}, [a = a.id, b = b.id](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(a)) t.grad(a).map().noalias() += g.map() * t.value(b).map();
    if (t.requires_grad(b)) t.grad(b).map().noalias() += g.map().transpose() * t.value(a).map();
  });
}

Var transpose(Var a) {
  const Tensor& av = a.value();
  require_rank2(av, "transpose");
  Tensor out({av.cols(), av.rows()});
  out.map() = av.map().transpose();
  return tape_of(a).record(std::move(out), {a}, [a = a.id](Tape& t, std::size_t self) {
    if (t.requires_grad(a)) t.grad(a).map() += t.grad(self).map().transpose();
  });
}

Var add(Var a, Var b) {
  same_tape(a, b, "add");
  if (a.shape() != b.shape()) mismatch("add", a.value(), b.value());
  Tensor out = a.value();
  add_into(out, b.value());
  return tape_of(a).record(std::move(out), {a, b}, [a = a.id, b = b.id](Tape& t, std::size_t self) {
    if (t.requires_grad(a)) add_into(t.grad(a), t.grad(self));
    if (t.requires_grad(b)) add_into(t.grad(b), t.grad(self));
  });
}

Var sub(Var a, Var b) {
  same_tape(a, b, "sub");
  if (a.shape() != b.shape()) mismatch("sub", a.value(), b.value());
  Tensor out = a.value();
  auto o = out.data();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bv[i];
  return tape_of(a).record(std::move(out), {a, b}, [a = a.id, b = b.id](Tape& t, std::size_t self) {
    if (t.requires_grad(a)) add_into(t.grad(a), t.grad(self));
    if (t.requires_grad(b)) {
      const Tensor& g = t.grad(self);
      Tensor& gb = t.grad(b);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  same_tape(a, b, "mul");
  if (a.shape() != b.shape()) mismatch("mul", a.value(), b.value());
  Tensor out = a.value();
  auto o = out.data();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bv[i];
  return tape_of(a).record(std::move(out), {a, b}, [a = a.id, b = b.id](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(a)) {
      const Tensor& bv = t.value(b);
      Tensor& ga = t.grad(a);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.requires_grad(b)) {
      const Tensor& av = t.value(a);
      Tensor& gb = t.grad(b);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var scale(Var a, double s) { return affine(a, s, 0.0); }

Var affine(Var a, double s, double shift) {
  Tensor out = a.value();
  for (double& v : out.data()) v = s * v + shift;
  return tape_of(a).record(std::move(out), {a}, [a = a.id, s](Tape& t, std::size_t self) {
    if (!t.requires_grad(a)) return;
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += s * g[i];
  });
}

Var add_row(Var a, Var row) {
  same_tape(a, row, "add_row");
  const Tensor& av = a.value();
  const Tensor& rv = row.value();
  require_rank2(av, "add_row");
  if (rv.rank() != 2 || rv.rows() != 1 || rv.cols() != av.cols()) mismatch("add_row", av, rv);
  Tensor out = av;
  out.map().rowwise() += rv.map().row(0);
  return tape_of(a).record(std::move(out), {a, row}, [a = a.id, r = row.id](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(a)) add_into(t.grad(a), g);
    if (t.requires_grad(r)) t.grad(r).map().row(0) += g.map().colwise().sum();
  });
}

Var mul_row(Var a, Var row) {
  same_tape(a, row, "mul_row");
  const Tensor& av = a.value();
  const Tensor& rv = row.value();
  require_rank2(av, "mul_row");
  if (rv.rank() != 2 || rv.rows() != 1 || rv.cols() != av.cols()) mismatch("mul_row", av, rv);
  Tensor out = av;
  out.map().array().rowwise() *= rv.map().row(0).array();
  return tape_of(a).record(std::move(out), {a, row}, [a = a.id, r = row.id](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(a)) {
      t.grad(a).map().array() += g.map().array().rowwise() * t.value(r).map().row(0).array();
    }
    if (t.requires_grad(r)) {
      t.grad(r).map().row(0) += (g.map().array() * t.value(a).map().array()).matrix().colwise().sum();
    }
  });
}

Var relu(Var a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Var a) {
  return unary(a,
               [](double x) {
                 if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
                 const double e = std::exp(x);
                 return e / (1.0 + e);
               },
               [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary(a, [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

Var softmax_rows(Var a) {
  const Tensor& av = a.value();
  require_rank2(av, "softmax_rows");
  Tensor out = av;
  const std::size_t n = out.cols();
  for (std::size_t r = 0; r < out.rows(); ++r) {
    double* row = out.data().data() + r * n;
    const double mx = *std::max_element(row, row + n);
    double total = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      row[c] = std::exp(row[c] - mx);
      total += row[c];
    }
    for (std::size_t c = 0; c < n; ++c) row[c] /= total;
  }
  return tape_of(a).record(std::move(out), {a}, [a = a.id](Tape& t, std::size_t self) {
    if (!t.requires_grad(a)) return;
    const Tensor& y = t.value(self);
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(a);
    const std::size_t n = y.cols();
    for (std::size_t r = 0; r < y.rows(); ++r) {
      const std::size_t o = r * n;
      double dot = 0.0;
      for (std::size_t c = 0; c < n; ++c) dot += g[o + c] * y[o + c];
      for (std::size_t c = 0; c < n; ++c) ga[o + c] += y[o + c] * (g[o + c] - dot);
    }
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  same_tape(x, gain, "layer_norm");
  same_tape(x, bias, "layer_norm");
  const Tensor& xv = x.value();
  require_rank2(xv, "layer_norm");
  const std::size_t m = xv.rows();
  const std::size_t d = xv.cols();
  if (gain.value().size() != d || bias.value().size() != d) {
    mismatch("layer_norm", xv, gain.value());
  }
  // Saved per-row inverse std and the normalized input for the backward pass.
  Tensor xhat({m, d});
  std::vector<double> inv_std(m);
  Tensor out({m, d});
  const auto& gv = gain.value();
  const auto& bv = bias.value();
  for (std::size_t r = 0; r < m; ++r) {
    const double* row = xv.data().data() + r * d;
    double mu = 0.0;
    for (std::size_t c = 0; c < d; ++c) mu += row[c];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t c = 0; c < d; ++c) var += (row[c] - mu) * (row[c] - mu);
    var /= static_cast<double>(d);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < d; ++c) {
      const double h = (row[c] - mu) * inv_std[r];
      xhat[r * d + c] = h;
      out[r * d + c] = h * gv[c] + bv[c];
    }
  }
  return tape_of(x).record(
      std::move(out), {x, gain, bias},
      [x = x.id, gn = gain.id, bs = bias.id, xhat = std::move(xhat), inv_std = std::move(inv_std)](
          Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& gv = t.value(gn);
        const std::size_t m = xhat.rows();
        const std::size_t d = xhat.cols();
        if (t.requires_grad(gn) || t.requires_grad(bs)) {
          Tensor* ggain = t.requires_grad(gn) ? &t.grad(gn) : nullptr;
          Tensor* gbias = t.requires_grad(bs) ? &t.grad(bs) : nullptr;
          for (std::size_t r = 0; r < m; ++r) {
            for (std::size_t c = 0; c < d; ++c) {
              if (ggain) (*ggain)[c] += g[r * d + c] * xhat[r * d + c];
              if (gbias) (*gbias)[c] += g[r * d + c];
            }
          }
        }
        if (!t.requires_grad(x)) return;
        Tensor& gx = t.grad(x);
        std::vector<double> dxhat(d);
        for (std::size_t r = 0; r < m; ++r) {
          double s1 = 0.0, s2 = 0.0;
          for (std::size_t c = 0; c < d; ++c) {
            dxhat[c] = g[r * d + c] * gv[c];
            s1 += dxhat[c];
            s2 += dxhat[c] * xhat[r * d + c];
          }
          const double k = inv_std[r] / static_cast<double>(d);
          for (std::size_t c = 0; c < d; ++c) {
            gx[r * d + c] += k * (static_cast<double>(d) * dxhat[c] - s1 - xhat[r * d + c] * s2);
          }
        }
      });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw InvalidInput("concat_cols: no operands");
  const std::size_t m = parts[0].value().rows();
  std::size_t total = 0;
  std::vector<std::size_t> widths;
  for (const Var& p : parts) {
    same_tape(parts[0], p, "concat_cols");
    if (p.value().rows() != m) mismatch("concat_cols", parts[0].value(), p.value());
    widths.push_back(p.value().cols());
    total += widths.back();
  }
  Tensor out({m, total});
  std::size_t off = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    out.map().middleCols(static_cast<Eigen::Index>(off), static_cast<Eigen::Index>(widths[i])) =
        parts[i].value().map();
    off += widths[i];
  }
  std::vector<std::size_t> ids;
  for (const Var& p : parts) ids.push_back(p.id);
  return tape_of(parts[0]).record(std::move(out), parts,
                                  [ids, widths](Tape& t, std::size_t self) {
                                    const Tensor& g = t.grad(self);
                                    std::size_t off = 0;
                                    for (std::size_t i = 0; i < ids.size(); ++i) {
                                      if (t.requires_grad(ids[i])) {
                                        t.grad(ids[i]).map() += g.map().middleCols(
                                            static_cast<Eigen::Index>(off),
                                            static_cast<Eigen::Index>(widths[i]));
                                      }
                                      off += widths[i];
                                    }
                                  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw InvalidInput("concat_rows: no operands");
  const std::size_t n = parts[0].value().cols();
  std::size_t total = 0;
  std::vector<std::size_t> heights;
  for (const Var& p : parts) {
    same_tape(parts[0], p, "concat_rows");
    if (p.value().cols() != n) mismatch("concat_rows", parts[0].value(), p.value());
    heights.push_back(p.value().rows());
    total += heights.back();
  }
  Tensor out({total, n});
  std::size_t off = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    std::copy(parts[i].value().data().begin(), parts[i].value().data().end(),
              out.data().begin() + static_cast<std::ptrdiff_t>(off * n));
    off += heights[i];
  }
  std::vector<std::size_t> ids;
  for (const Var& p : parts) ids.push_back(p.id);
  return tape_of(parts[0]).record(std::move(out), parts,
                                  [ids, heights, n](Tape& t, std::size_t self) {
                                    const Tensor& g = t.grad(self);
                                    std::size_t off = 0;
                                    for (std::size_t i = 0; i < ids.size(); ++i) {
                                      if (t.requires_grad(ids[i])) {
                                        Tensor& gi = t.grad(ids[i]);
                                        for (std::size_t k = 0; k < gi.size(); ++k) gi[k] += g[off * n + k];
                                      }
                                      off += heights[i];
                                    }
                                  });
}

Var slice_rows(Var a, std::size_t begin, std::size_t count) {
  const Tensor& av = a.value();
  require_rank2(av, "slice_rows");
  if (count == 0 || begin + count > av.rows()) {
    throw DimensionError("slice_rows: rows [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of " + shape_string(av.shape()));
  }
  const std::size_t n = av.cols();
  Tensor out({count, n});
  std::copy_n(av.data().begin() + static_cast<std::ptrdiff_t>(begin * n), count * n, out.data().begin());
  return tape_of(a).record(std::move(out), {a}, [a = a.id, begin, n](Tape& t, std::size_t self) {
    if (!t.requires_grad(a)) return;
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(a);
    for (std::size_t k = 0; k < g.size(); ++k) ga[begin * n + k] += g[k];
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  const Tensor& av = a.value();
  require_rank2(av, "slice_cols");
  if (count == 0 || begin + count > av.cols()) {
    throw DimensionError("slice_cols: cols [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of " + shape_string(av.shape()));
  }
  Tensor out({av.rows(), count});
  out.map() = av.map().middleCols(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(count));
  return tape_of(a).record(std::move(out), {a}, [a = a.id, begin, count](Tape& t, std::size_t self) {
    if (!t.requires_grad(a)) return;
    t.grad(a).map().middleCols(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(count)) +=
        t.grad(self).map();
  });
}

Var max_rows(Var a) {
  const Tensor& av = a.value();
  require_rank2(av, "max_rows");
  const std::size_t m = av.rows();
  const std::size_t n = av.cols();
  Tensor out({1, n});
  std::vector<std::size_t> arg(n, 0);
  for (std::size_t c = 0; c < n; ++c) {
    double best = av[c];
    for (std::size_t r = 1; r < m; ++r) {
      if (av[r * n + c] > best) {
        best = av[r * n + c];
        arg[c] = r;
      }
    }
    out[c] = best;
  }
  return tape_of(a).record(std::move(out), {a}, [a = a.id, arg = std::move(arg)](Tape& t, std::size_t self) {
    if (!t.requires_grad(a)) return;
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(a);
    const std::size_t n = arg.size();
    for (std::size_t c = 0; c < n; ++c) ga[arg[c] * n + c] += g[c];
  });
}

Var mean_rows(Var a) {
  const Tensor& av = a.value();
  require_rank2(av, "mean_rows");
  const double inv = 1.0 / static_cast<double>(av.rows());
  Tensor out({1, av.cols()});
  out.map() = av.map().colwise().sum() * inv;
  return tape_of(a).record(std::move(out), {a}, [a = a.id, inv](Tape& t, std::size_t self) {
    if (!t.requires_grad(a)) return;
    t.grad(a).map().rowwise() += t.grad(self).map().row(0) * inv;
  });
}

Var repeat_rows(Var row, std::size_t n) {
  const Tensor& rv = row.value();
  if (rv.rank() != 2 || rv.rows() != 1) {
    throw DimensionError("repeat_rows: expected [1 x c], got " + shape_string(rv.shape()));
  }
  Tensor out({n, rv.cols()});
  out.map().rowwise() = rv.map().row(0);
  return tape_of(row).record(std::move(out), {row}, [r = row.id](Tape& t, std::size_t self) {
    if (!t.requires_grad(r)) return;
    t.grad(r).map().row(0) += t.grad(self).map().colwise().sum();
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return tape_of(a).record(Tensor::scalar(s), {a}, [a = a.id](Tape& t, std::size_t self) {
    if (!t.requires_grad(a)) return;
    const double g = t.grad(self)[0];
    for (double& v : t.grad(a).data()) v += g;
  });
}

Var reshape(Var a, Shape shape) {
  if (shape_size(shape) != a.value().size()) {
    throw DimensionError("reshape: cannot view " + shape_string(a.shape()) + " as " + shape_string(shape));
  }
  Tensor out = a.value().reshaped(std::move(shape));
  return tape_of(a).record(std::move(out), {a}, [a = a.id](Tape& t, std::size_t self) {
    if (!t.requires_grad(a)) return;
    add_into(t.grad(a), t.grad(self));
  });
}

Var row_norms(Var a) {
  const Tensor& av = a.value();
  require_rank2(av, "row_norms");
  const std::size_t m = av.rows();
  const std::size_t n = av.cols();
  Tensor out({m, 1});
  for (std::size_t r = 0; r < m; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < n; ++c) s += av[r * n + c] * av[r * n + c];
    out[r] = std::sqrt(s);
  }
  return tape_of(a).record(std::move(out), {a}, [a = a.id](Tape& t, std::size_t self) {
    if (!t.requires_grad(a)) return;
    const Tensor& x = t.value(a);
    const Tensor& y = t.value(self);
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(a);
    const std::size_t n = x.cols();
    for (std::size_t r = 0; r < x.rows(); ++r) {
      // Subgradient 0 at the origin.
      if (y[r] == 0.0) continue;
      const double k = g[r] / y[r];
      for (std::size_t c = 0; c < n; ++c) ga[r * n + c] += k * x[r * n + c];
    }
  });
}

Var stop_gradient(Var a) { return tape_of(a).constant(a.value()); }

Var im2col(Var image, const ConvGeometry& g) {
  const Tensor& iv = image.value();
  if (iv.rank() != 2 || iv.rows() != g.height * g.width || iv.cols() != g.channels) {
    throw DimensionError("im2col: image " + shape_string(iv.shape()) + " does not match " +
                         std::to_string(g.height) + "x" + std::to_string(g.width) + "x" +
                         std::to_string(g.channels));
  }
  const std::size_t oh = g.out_height();
  const std::size_t ow = g.out_width();
  const std::size_t k = g.kernel;
  const std::size_t cols = k * k * g.channels;
  Tensor out({oh * ow, cols}, 0.0);
  // Source element for every (output row, column), or npos for zero padding.
  std::vector<std::size_t> src(oh * ow * cols, std::numeric_limits<std::size_t>::max());
  for (std::size_t oy = 0; oy < oh; ++oy) {
    for (std::size_t ox = 0; ox < ow; ++ox) {
      const std::size_t orow = oy * ow + ox;
      for (std::size_t ky = 0; ky < k; ++ky) {
        const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.pad);
        if (iy < 0 || iy >= static_cast<long>(g.height)) continue;
        for (std::size_t kx = 0; kx < k; ++kx) {
          const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.pad);
          if (ix < 0 || ix >= static_cast<long>(g.width)) continue;
          const std::size_t pix = static_cast<std::size_t>(iy) * g.width + static_cast<std::size_t>(ix);
          for (std::size_t c = 0; c < g.channels; ++c) {
            const std::size_t col = (ky * k + kx) * g.channels + c;
            src[orow * cols + col] = pix * g.channels + c;
            out[orow * cols + col] = iv[pix * g.channels + c];
          }
        }
      }
    }
  }
  return tape_of(image).record(std::move(out), {image}, [a = image.id, src = std::move(src)](Tape& t, std::size_t self) {
    if (!t.requires_grad(a)) return;
    const Tensor& go = t.grad(self);
    Tensor& ga = t.grad(a);
    for (std::size_t i = 0; i < src.size(); ++i) {
      if (src[i] != std::numeric_limits<std::size_t>::max()) ga[src[i]] += go[i];
    }
  });
}

Var gather_rows(Var a, const RowGather& gather) {
  const Tensor& av = a.value();
  require_rank2(av, "gather_rows");
  if (gather.indices.size() != gather.weights.size() || gather.indices.empty()) {
    throw InvalidInput("gather_rows: index/weight lists must be non-empty and aligned");
  }
  const std::size_t n = av.cols();
  Tensor out({gather.indices.size(), n}, 0.0);
  for (std::size_t r = 0; r < gather.indices.size(); ++r) {
    const auto& idx = gather.indices[r];
    const auto& w = gather.weights[r];
    if (idx.size() != w.size()) throw InvalidInput("gather_rows: ragged index/weight row");
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (idx[k] >= av.rows()) throw DimensionError("gather_rows: row index out of range");
      for (std::size_t c = 0; c < n; ++c) out[r * n + c] += w[k] * av[idx[k] * n + c];
    }
  }
  return tape_of(a).record(std::move(out), {a}, [a = a.id, gather](Tape& t, std::size_t self) {
    if (!t.requires_grad(a)) return;
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(a);
    const std::size_t n = ga.cols();
    for (std::size_t r = 0; r < gather.indices.size(); ++r) {
      for (std::size_t k = 0; k < gather.indices[r].size(); ++k) {
        const double w = gather.weights[r][k];
        const std::size_t src = gather.indices[r][k];
        for (std::size_t c = 0; c < n; ++c) ga[src * n + c] += w * g[r * n + c];
      }
    }
  });
}

}  // namespace fusionpose::ad
