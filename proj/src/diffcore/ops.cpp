#include "pairpred/diffcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pairpred/errors.hpp"

namespace pairpred::diff {

namespace {

using detail::make_result;

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + to_string(a) + " and " + to_string(b));
}

std::size_t normalize_axis(const Tensor& t, int axis) {
  const int r = static_cast<int>(t.rank());
  const int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " + to_string(t.shape()));
  }
  return static_cast<std::size_t>(a);
}

// outer x len x inner decomposition around `axis`.
struct AxisSplit {
  std::size_t outer = 1, len = 1, inner = 1;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.len = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

Node& parent(Node& self, std::size_t i) { return *self.parents[i]; }

// Returns the right operand's period when it broadcasts over leading axes
// of the left one.
std::size_t broadcast_period(const char* op, const Shape& a, const Shape& b) {
  if (a == b) return numel(a);
  if (b.size() <= a.size() && std::equal(b.begin(), b.end(), a.end() - static_cast<std::ptrdiff_t>(b.size()))) {
    return numel(b);
  }
  shape_error(op, a, b);
}

template <typename F, typename G>
Tensor unary(const Tensor& a, F forward, G derivative) {
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = forward(av[i]);
  return make_result(a.shape(), std::move(out), {a}, [derivative](Node& self) {
    Node& p = parent(self, 0);
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * derivative(p.value[i], self.value[i]);
  });
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& w) {
  if (a.rank() < 1 || w.rank() != 2 || a.dim(-1) != w.dim(0)) shape_error("matmul", a.shape(), w.shape());
  const std::size_t k = w.dim(0), m = w.dim(1), rows = a.numel() / k;
  Shape out_shape = a.shape();
  out_shape.back() = m;
  std::vector<double> out(rows * m, 0.0);
  const double* av = a.values().data();
  const double* wv = w.values().data();
  for (std::size_t r = 0; r < rows; ++r) {
    double* o = out.data() + r * m;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double x = av[r * k + kk];
      if (x == 0.0) continue;
      const double* wr = wv + kk * m;
      for (std::size_t j = 0; j < m; ++j) o[j] += x * wr[j];
    }
  }
  return make_result(std::move(out_shape), std::move(out), {a, w}, [rows, k, m](Node& self) {
    Node& pa = parent(self, 0);
    Node& pw = parent(self, 1);
    const double* go = self.grad.data();
    if (pa.requires_grad) {
      auto& ga = pa.ensure_grad();
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t kk = 0; kk < k; ++kk) {
          const double* wr = pw.value.data() + kk * m;
          double acc = 0.0;
          for (std::size_t j = 0; j < m; ++j) acc += go[r * m + j] * wr[j];
          ga[r * k + kk] += acc;
        }
      }
    }
    if (pw.requires_grad) {
      auto& gw = pw.ensure_grad();
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t kk = 0; kk < k; ++kk) {
          const double x = pa.value[r * k + kk];
          if (x == 0.0) continue;
          double* gr = gw.data() + kk * m;
          for (std::size_t j = 0; j < m; ++j) gr[j] += x * go[r * m + j];
        }
      }
    }
  });
}

namespace {

inline void axpy(double x, const double* src, double* dst, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) dst[j] += x * src[j];
}

inline double dot(const double* u, const double* v, std::size_t n) {
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) acc += u[j] * v[j];
  return acc;
}

}  // namespace

Tensor bmm(const Tensor& a, const Tensor& b, bool transpose_b) {
  if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0)) shape_error("bmm", a.shape(), b.shape());
  const std::size_t batch = a.dim(0), n = a.dim(1), k = a.dim(2);
  const std::size_t m = transpose_b ? b.dim(1) : b.dim(2);
  if ((transpose_b ? b.dim(2) : b.dim(1)) != k) shape_error("bmm", a.shape(), b.shape());
  std::vector<double> out(batch * n * m, 0.0);
  const double* av = a.values().data();
  const double* bv = b.values().data();
  for (std::size_t s = 0; s < batch; ++s) {
    const double* as = av + s * n * k;
    const double* bs = bv + s * k * m;
    double* os = out.data() + s * n * m;
    for (std::size_t i = 0; i < n; ++i) {
      if (transpose_b) {
        for (std::size_t j = 0; j < m; ++j) os[i * m + j] = dot(as + i * k, bs + j * k, k);
      } else {
        for (std::size_t kk = 0; kk < k; ++kk) axpy(as[i * k + kk], bs + kk * m, os + i * m, m);
      }
    }
  }
  return make_result({batch, n, m}, std::move(out), {a, b}, [=](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    double* ga_all = pa.requires_grad ? pa.ensure_grad().data() : nullptr;
    double* gb_all = pb.requires_grad ? pb.ensure_grad().data() : nullptr;
    for (std::size_t s = 0; s < batch; ++s) {
      const double* go = self.grad.data() + s * n * m;
      const double* as = pa.value.data() + s * n * k;
      const double* bs = pb.value.data() + s * k * m;
      if (ga_all) {
        double* ga = ga_all + s * n * k;
        for (std::size_t i = 0; i < n; ++i) {
          if (transpose_b) {
            for (std::size_t j = 0; j < m; ++j) axpy(go[i * m + j], bs + j * k, ga + i * k, k);
          } else {
            for (std::size_t kk = 0; kk < k; ++kk) ga[i * k + kk] += dot(go + i * m, bs + kk * m, m);
          }
        }
      }
      if (gb_all) {
        double* gb = gb_all + s * k * m;
        for (std::size_t i = 0; i < n; ++i) {
          if (transpose_b) {
            for (std::size_t j = 0; j < m; ++j) axpy(go[i * m + j], as + i * k, gb + j * k, k);
          } else {
            for (std::size_t kk = 0; kk < k; ++kk) axpy(as[i * k + kk], go + i * m, gb + kk * m, m);
          }
        }
      }
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  const std::size_t period = broadcast_period("add", a.shape(), b.shape());
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t base = 0; base < av.size(); base += period)
    for (std::size_t j = 0; j < period; ++j) out[base + j] = av[base + j] + bv[j];
  return make_result(a.shape(), std::move(out), {a, b}, [period](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    if (pa.requires_grad) {
      auto& g = pa.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (pb.requires_grad) {
      auto& g = pb.ensure_grad();
      for (std::size_t base = 0; base < self.grad.size(); base += period)
        for (std::size_t j = 0; j < period; ++j) g[j] += self.grad[base + j];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  const std::size_t period = broadcast_period("sub", a.shape(), b.shape());
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] - bv[i % period];
  return make_result(a.shape(), std::move(out), {a, b}, [period](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    if (pa.requires_grad) {
      auto& g = pa.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (pb.requires_grad) {
      auto& g = pb.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i % period] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  const std::size_t period = broadcast_period("mul", a.shape(), b.shape());
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i % period];
  return make_result(a.shape(), std::move(out), {a, b}, [period](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    if (pa.requires_grad) {
      auto& g = pa.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb.value[i % period];
    }
    if (pb.requires_grad) {
      auto& g = pb.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i % period] += self.grad[i] * pa.value[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(a, [factor](double x) { return factor * x; }, [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double offset) {
  return unary(a, [offset](double x) { return x + offset; }, [](double, double) { return 1.0; });
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  const std::size_t ax = normalize_axis(parts[0], axis);
  Shape out_shape = parts[0].shape();
  out_shape[ax] = 0;
  std::vector<std::size_t> lens;
  for (const auto& p : parts) {
    if (p.rank() != out_shape.size()) shape_error("concat", parts[0].shape(), p.shape());
    for (std::size_t i = 0; i < out_shape.size(); ++i) {
      if (i != ax && p.shape()[i] != parts[0].shape()[i]) shape_error("concat", parts[0].shape(), p.shape());
    }
    lens.push_back(p.shape()[ax]);
    out_shape[ax] += p.shape()[ax];
  }
  const AxisSplit s = split_axis(out_shape, ax);
  std::vector<double> out(numel(out_shape));
  std::size_t offset = 0;
  for (std::size_t pi = 0; pi < parts.size(); ++pi) {
    const std::size_t block = lens[pi] * s.inner;
    const auto& pv = parts[pi].values();
    for (std::size_t o = 0; o < s.outer; ++o) {
      std::copy_n(pv.begin() + static_cast<std::ptrdiff_t>(o * block), block,
                  out.begin() + static_cast<std::ptrdiff_t>(o * s.len * s.inner + offset));
    }
    offset += block;
  }
  return make_result(std::move(out_shape), std::move(out), parts, [s, lens](Node& self) {
    std::size_t offset = 0;
    for (std::size_t pi = 0; pi < lens.size(); ++pi) {
      const std::size_t block = lens[pi] * s.inner;
      Node& p = parent(self, pi);
      if (p.requires_grad) {
        auto& g = p.ensure_grad();
        for (std::size_t o = 0; o < s.outer; ++o)
          for (std::size_t i = 0; i < block; ++i) g[o * block + i] += self.grad[o * s.len * s.inner + offset + i];
      }
      offset += block;
    }
  });
}

Tensor slice(const Tensor& a, int axis, std::size_t begin, std::size_t end) {
  const std::size_t ax = normalize_axis(a, axis);
  if (begin > end || end > a.shape()[ax]) {
    throw DimensionError("slice [" + std::to_string(begin) + ", " + std::to_string(end) + ") out of range for shape " +
                         to_string(a.shape()));
  }
  const AxisSplit s = split_axis(a.shape(), ax);
  Shape out_shape = a.shape();
  out_shape[ax] = end - begin;
  const std::size_t block = (end - begin) * s.inner;
  std::vector<double> out(s.outer * block);
  const auto& av = a.values();
  for (std::size_t o = 0; o < s.outer; ++o) {
    std::copy_n(av.begin() + static_cast<std::ptrdiff_t>(o * s.len * s.inner + begin * s.inner), block,
                out.begin() + static_cast<std::ptrdiff_t>(o * block));
  }
  return make_result(std::move(out_shape), std::move(out), {a}, [s, block, begin](Node& self) {
    auto& g = parent(self, 0).ensure_grad();
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t i = 0; i < block; ++i) g[o * s.len * s.inner + begin * s.inner + i] += self.grad[o * block + i];
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (numel(shape) != a.numel()) shape_error("reshape", a.shape(), shape);
  std::vector<double> out(a.values().begin(), a.values().end());
  return make_result(std::move(shape), std::move(out), {a}, [](Node& self) {
    auto& g = parent(self, 0).ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor sum(const Tensor& a, int axis) {
  const std::size_t ax = normalize_axis(a, axis);
  const AxisSplit s = split_axis(a.shape(), ax);
  Shape out_shape = a.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(ax));
  std::vector<double> out(s.outer * s.inner, 0.0);
  const auto& av = a.values();
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t l = 0; l < s.len; ++l)
      for (std::size_t i = 0; i < s.inner; ++i) out[o * s.inner + i] += av[(o * s.len + l) * s.inner + i];
  return make_result(std::move(out_shape), std::move(out), {a}, [s](Node& self) {
    auto& g = parent(self, 0).ensure_grad();
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t l = 0; l < s.len; ++l)
        for (std::size_t i = 0; i < s.inner; ++i) g[(o * s.len + l) * s.inner + i] += self.grad[o * s.inner + i];
  });
}

Tensor mean(const Tensor& a, int axis) {
  const std::size_t len = a.dim(axis);
  if (len == 0) throw DimensionError("mean over empty axis of shape " + to_string(a.shape()));
  return scale(sum(a, axis), 1.0 / static_cast<double>(len));
}

Tensor sum_all(const Tensor& a) {
  double acc = 0.0;
  for (double v : a.values()) acc += v;
  return make_result({}, {acc}, {a}, [](Node& self) {
    auto& g = parent(self, 0).ensure_grad();
    const double go = self.grad[0];
    for (auto& x : g) x += go;
  });
}

Tensor softmax(const Tensor& a, int axis) {
  const std::size_t ax = normalize_axis(a, axis);
  const AxisSplit s = split_axis(a.shape(), ax);
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t i = 0; i < s.inner; ++i) {
      const auto at = [&](std::size_t l) { return (o * s.len + l) * s.inner + i; };
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t l = 0; l < s.len; ++l) mx = std::max(mx, av[at(l)]);
      double z = 0.0;
      for (std::size_t l = 0; l < s.len; ++l) z += (out[at(l)] = std::exp(av[at(l)] - mx));
      for (std::size_t l = 0; l < s.len; ++l) out[at(l)] /= z;
    }
  return make_result(a.shape(), std::move(out), {a}, [s](Node& self) {
    auto& g = parent(self, 0).ensure_grad();
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t i = 0; i < s.inner; ++i) {
        const auto at = [&](std::size_t l) { return (o * s.len + l) * s.inner + i; };
        double dot = 0.0;
        for (std::size_t l = 0; l < s.len; ++l) dot += self.grad[at(l)] * self.value[at(l)];
        for (std::size_t l = 0; l < s.len; ++l) g[at(l)] += self.value[at(l)] * (self.grad[at(l)] - dot);
      }
  });
}

Tensor log_softmax(const Tensor& a) {
  const std::size_t len = a.dim(-1), rows = a.numel() / len;
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = av.data() + r * len;
    const double mx = *std::max_element(x, x + len);
    double z = 0.0;
    for (std::size_t l = 0; l < len; ++l) z += std::exp(x[l] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t l = 0; l < len; ++l) out[r * len + l] = x[l] - lse;
  }
  return make_result(a.shape(), std::move(out), {a}, [rows, len](Node& self) {
    auto& g = parent(self, 0).ensure_grad();
    for (std::size_t r = 0; r < rows; ++r) {
      double gs = 0.0;
      for (std::size_t l = 0; l < len; ++l) gs += self.grad[r * len + l];
      for (std::size_t l = 0; l < len; ++l)
        g[r * len + l] += self.grad[r * len + l] - std::exp(self.value[r * len + l]) * gs;
    }
  });
}

Tensor logsumexp(const Tensor& a) {
  const std::size_t len = a.dim(-1), rows = a.numel() / len;
  Shape out_shape(a.shape().begin(), a.shape().end() - 1);
  const auto& av = a.values();
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = av.data() + r * len;
    const double mx = *std::max_element(x, x + len);
    double z = 0.0;
    for (std::size_t l = 0; l < len; ++l) z += std::exp(x[l] - mx);
    out[r] = mx + std::log(z);
  }
  return make_result(std::move(out_shape), std::move(out), {a}, [rows, len](Node& self) {
    Node& p = parent(self, 0);
    auto& g = p.ensure_grad();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t l = 0; l < len; ++l)
        g[r * len + l] += self.grad[r] * std::exp(p.value[r * len + l] - self.value[r]);
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  const std::size_t d = x.dim(-1), rows = x.numel() / d;
  if (gain.shape() != Shape{d}) shape_error("layer_norm", x.shape(), gain.shape());
  if (bias.shape() != Shape{d}) shape_error("layer_norm", x.shape(), bias.shape());
  const auto& xv = x.values();
  const auto& gv = gain.values();
  const auto& bv = bias.values();
  std::vector<double> out(xv.size());
  // Saved for backward: normalized values and inverse std per row.
  auto xhat = std::make_shared<std::vector<double>>(xv.size());
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = xv.data() + r * d;
    double mu = 0.0;
    for (std::size_t i = 0; i < d; ++i) mu += xr[i];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t i = 0; i < d; ++i) var += (xr[i] - mu) * (xr[i] - mu);
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t i = 0; i < d; ++i) {
      const double h = (xr[i] - mu) * is;
      (*xhat)[r * d + i] = h;
      out[r * d + i] = h * gv[i] + bv[i];
    }
  }
  return make_result(x.shape(), std::move(out), {x, gain, bias}, [rows, d, xhat, inv_std](Node& self) {
    Node& px = parent(self, 0);
    Node& pg = parent(self, 1);
    Node& pb = parent(self, 2);
    const double* go = self.grad.data();
    if (pg.requires_grad || pb.requires_grad) {
      auto& gg = pg.ensure_grad();
      auto& gb = pb.ensure_grad();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t i = 0; i < d; ++i) {
          gg[i] += go[r * d + i] * (*xhat)[r * d + i];
          gb[i] += go[r * d + i];
        }
    }
    if (px.requires_grad) {
      auto& gx = px.ensure_grad();
      const double inv_d = 1.0 / static_cast<double>(d);
      for (std::size_t r = 0; r < rows; ++r) {
        double s1 = 0.0, s2 = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
          const double gh = go[r * d + i] * pg.value[i];
          s1 += gh;
          s2 += gh * (*xhat)[r * d + i];
        }
        for (std::size_t i = 0; i < d; ++i) {
          const double gh = go[r * d + i] * pg.value[i];
          gx[r * d + i] += (*inv_std)[r] * (gh - inv_d * s1 - (*xhat)[r * d + i] * inv_d * s2);
        }
      }
    }
  });
}

Tensor relu(const Tensor& a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor softplus(const Tensor& a) {
  const bool faulty = testing::softplus_fault_active();
  return unary(
      a, [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); },
      [faulty](double x, double) {
        const double sig = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
        return faulty ? 0.5 * sig : sig;
      });
}

Tensor exp(const Tensor& a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor square(const Tensor& a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& idx) {
  if (x.rank() != 2) throw DimensionError("gather_rows expects a matrix, got " + to_string(x.shape()));
  const std::size_t n = x.dim(0), d = x.dim(1);
  std::vector<double> out(idx.size() * d);
  const auto& xv = x.values();
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= n) throw DimensionError("gather_rows: row " + std::to_string(idx[r]) + " of " + to_string(x.shape()));
    std::copy_n(xv.begin() + static_cast<std::ptrdiff_t>(idx[r] * d), d, out.begin() + static_cast<std::ptrdiff_t>(r * d));
  }
  return make_result({idx.size(), d}, std::move(out), {x}, [idx, d](Node& self) {
    auto& g = parent(self, 0).ensure_grad();
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t i = 0; i < d; ++i) g[idx[r] * d + i] += self.grad[r * d + i];
  });
}

Tensor scatter_add_rows(const Tensor& x, const std::vector<std::size_t>& idx, std::size_t n_rows) {
  if (x.rank() != 2 || x.dim(0) != idx.size()) {
    throw DimensionError("scatter_add_rows: " + to_string(x.shape()) + " with " + std::to_string(idx.size()) +
                         " indices");
  }
  const std::size_t d = x.dim(1);
  std::vector<double> out(n_rows * d, 0.0);
  const auto& xv = x.values();
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= n_rows) throw DimensionError("scatter_add_rows: target row " + std::to_string(idx[r]) + " >= " +
                                               std::to_string(n_rows));
    for (std::size_t i = 0; i < d; ++i) out[idx[r] * d + i] += xv[r * d + i];
  }
  return make_result({n_rows, d}, std::move(out), {x}, [idx, d](Node& self) {
    auto& g = parent(self, 0).ensure_grad();
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t i = 0; i < d; ++i) g[r * d + i] += self.grad[idx[r] * d + i];
  });
}

}  // namespace pairpred::diff
