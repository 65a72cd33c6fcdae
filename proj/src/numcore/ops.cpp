#include "tfssl/numcore/ops.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <memory>

#include "tfssl/error.hpp"
#include "tfssl/numcore/vecmath.hpp"

namespace tfssl::numcore::ops {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

void RequireSameShape(const Var& a, const Var& b, const char* op) {
  Require(a.shape() == b.shape(), ErrorKind::kShape,
          std::string(op) + ": shape mismatch " + ShapeString(a.shape()) + " vs " +
              ShapeString(b.shape()));
}

double Sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double SoftplusValue(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

template <typename F, typename D>
Var Unary(const char* name, const Var& x, F f, D dfdx) {
  return x.graph().Apply(
      name, {x},
      [f](Node& n) {
        const Tensor& in = n.in(0);
        n.value = Tensor(in.shape());
        for (std::size_t i = 0; i < in.size(); ++i) n.value[i] = f(in[i]);
      },
      [dfdx](Node& n) {
        if (!n.inputs[0]->requires_grad) return;
        const Tensor& in = n.in(0);
        Tensor& g = n.in_grad(0);
        for (std::size_t i = 0; i < in.size(); ++i) g[i] += n.grad[i] * dfdx(in[i], n.value[i]);
      });
}

// Row count of a tensor viewed as [rows][last].
std::size_t Rows(const Shape& s) {
  if (s.empty()) return 1;
  return NumElements(s) / s.back();
}

// Shift applied to output position l for kernel tap k.
std::ptrdiff_t TapOffset(std::size_t k, std::size_t K, std::size_t dilation, Padding padding) {
  const auto kk = static_cast<std::ptrdiff_t>(k);
  const auto d = static_cast<std::ptrdiff_t>(dilation);
  if (padding == Padding::kCausal) return (kk - static_cast<std::ptrdiff_t>(K - 1)) * d;
  return (kk - static_cast<std::ptrdiff_t>((K - 1) / 2)) * d;
}

// Output rows [lo, hi) whose tap l + off lands inside [0, L).
std::pair<std::size_t, std::size_t> ValidRange(std::size_t L, std::ptrdiff_t off) {
  const auto Ls = static_cast<std::ptrdiff_t>(L);
  const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -off);
  const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(Ls, Ls - off);
  if (hi <= lo) return {0, 0};
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

}  // namespace

Var Identity(const Var& x) {
  return x.graph().Apply(
      "identity", {x}, [](Node& n) { n.value = n.in(0); },
      [](Node& n) {
        if (!n.inputs[0]->requires_grad) return;
        Tensor& g = n.in_grad(0);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
      });
}

Var Reshape(const Var& x, Shape shape) {
  Require(NumElements(shape) == x.value().size(), ErrorKind::kShape,
          "reshape: cannot view " + ShapeString(x.shape()) + " as " + ShapeString(shape));
  return x.graph().Apply(
      "reshape", {x}, [shape](Node& n) { n.value = n.in(0).Reshaped(shape); },
      [](Node& n) {
        if (!n.inputs[0]->requires_grad) return;
        Tensor& g = n.in_grad(0);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
      });
}

Var Add(const Var& a, const Var& b) {
  RequireSameShape(a, b, "add");
  return a.graph().Apply(
      "add", {a, b},
      [](Node& n) {
        n.value = n.in(0);
        const Tensor& y = n.in(1);
        for (std::size_t i = 0; i < y.size(); ++i) n.value[i] += y[i];
      },
      [](Node& n) {
        for (std::size_t k = 0; k < 2; ++k) {
          if (!n.inputs[k]->requires_grad) continue;
          Tensor& g = n.in_grad(k);
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
        }
      });
}

Var Sub(const Var& a, const Var& b) {
  RequireSameShape(a, b, "sub");
  return a.graph().Apply(
      "sub", {a, b},
      [](Node& n) {
        n.value = n.in(0);
        const Tensor& y = n.in(1);
        for (std::size_t i = 0; i < y.size(); ++i) n.value[i] -= y[i];
      },
      [](Node& n) {
        if (n.inputs[0]->requires_grad) {
          Tensor& g = n.in_grad(0);
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
        }
        if (n.inputs[1]->requires_grad) {
          Tensor& g = n.in_grad(1);
          for (std::size_t i = 0; i < g.size(); ++i) g[i] -= n.grad[i];
        }
      });
}

Var Mul(const Var& a, const Var& b) {
  RequireSameShape(a, b, "mul");
  return a.graph().Apply(
      "mul", {a, b},
      [](Node& n) {
        n.value = n.in(0);
        const Tensor& y = n.in(1);
        for (std::size_t i = 0; i < y.size(); ++i) n.value[i] *= y[i];
      },
      [](Node& n) {
        for (std::size_t k = 0; k < 2; ++k) {
          if (!n.inputs[k]->requires_grad) continue;
          const Tensor& other = n.in(1 - k);
          Tensor& g = n.in_grad(k);
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * other[i];
        }
      });
}

Var Scale(const Var& x, double s) {
  return x.graph().Apply(
      "scale", {x},
      [s](Node& n) {
        n.value = n.in(0);
        for (double& v : n.value.storage()) v *= s;
      },
      [s](Node& n) {
        if (!n.inputs[0]->requires_grad) return;
        Tensor& g = n.in_grad(0);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * n.grad[i];
      });
}

Var AddBias(const Var& x, const Var& bias) {
  Require(bias.value().rank() == 1 && x.value().rank() >= 1 && x.shape().back() == bias.dim(0),
          ErrorKind::kShape,
          "add_bias: " + ShapeString(x.shape()) + " + " + ShapeString(bias.shape()));
  return x.graph().Apply(
      "add_bias", {x, bias},
      [](Node& n) {
        n.value = n.in(0);
        const Tensor& b = n.in(1);
        const std::size_t C = b.size();
        for (std::size_t r = 0; r < n.value.size(); r += C)
          for (std::size_t c = 0; c < C; ++c) n.value[r + c] += b[c];
      },
      [](Node& n) {
        if (n.inputs[0]->requires_grad) {
          Tensor& g = n.in_grad(0);
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
        }
        if (n.inputs[1]->requires_grad) {
          Tensor& g = n.in_grad(1);
          const std::size_t C = g.size();
          for (std::size_t r = 0; r < n.grad.size(); r += C)
            for (std::size_t c = 0; c < C; ++c) g[c] += n.grad[r + c];
        }
      });
}

Var MulChannels(const Var& x, const Var& v) {
  Require(v.value().rank() == 1 && x.value().rank() >= 1 && x.shape().back() == v.dim(0),
          ErrorKind::kShape,
          "mul_channels: " + ShapeString(x.shape()) + " * " + ShapeString(v.shape()));
  return x.graph().Apply(
      "mul_channels", {x, v},
      [](Node& n) {
        n.value = n.in(0);
        const Tensor& s = n.in(1);
        const std::size_t C = s.size();
        for (std::size_t r = 0; r < n.value.size(); r += C)
          for (std::size_t c = 0; c < C; ++c) n.value[r + c] *= s[c];
      },
      [](Node& n) {
        const Tensor& x = n.in(0);
        const Tensor& s = n.in(1);
        const std::size_t C = s.size();
        if (n.inputs[0]->requires_grad) {
          Tensor& g = n.in_grad(0);
          for (std::size_t r = 0; r < g.size(); r += C)
            for (std::size_t c = 0; c < C; ++c) g[r + c] += n.grad[r + c] * s[c];
        }
        if (n.inputs[1]->requires_grad) {
          Tensor& g = n.in_grad(1);
          for (std::size_t r = 0; r < x.size(); r += C)
            for (std::size_t c = 0; c < C; ++c) g[c] += n.grad[r + c] * x[r + c];
        }
      });
}

Var RmsNorm(const Var& x, double eps) {
  Require(x.value().rank() >= 1 && x.shape().back() >= 1, ErrorKind::kShape,
          "rms_norm: " + ShapeString(x.shape()));
  const std::size_t C = x.shape().back();
  const std::size_t rows = x.value().size() / C;
  auto inv_rms = std::make_shared<std::vector<double>>(rows);
  return x.graph().Apply(
      "rms_norm", {x},
      [C, rows, eps, inv_rms](Node& n) {
        const Tensor& in = n.in(0);
        n.value = Tensor(in.shape());
        for (std::size_t r = 0; r < rows; ++r) {
          const double* v = in.data() + r * C;
          double ss = 0.0;
          for (std::size_t c = 0; c < C; ++c) ss += v[c] * v[c];
          const double k = 1.0 / std::sqrt(ss / double(C) + eps);
          (*inv_rms)[r] = k;
          for (std::size_t c = 0; c < C; ++c) n.value[r * C + c] = v[c] * k;
        }
      },
      [C, rows, inv_rms](Node& n) {
        if (!n.inputs[0]->requires_grad) return;
        Tensor& g = n.in_grad(0);
        for (std::size_t r = 0; r < rows; ++r) {
          const double* y = n.value.data() + r * C;
          const double* gy = n.grad.data() + r * C;
          double dot = 0.0;
          for (std::size_t c = 0; c < C; ++c) dot += gy[c] * y[c];
          dot /= double(C);
          const double k = (*inv_rms)[r];
          for (std::size_t c = 0; c < C; ++c) g[r * C + c] += k * (gy[c] - y[c] * dot);
        }
      });
}

Var Silu(const Var& x) {
  return x.graph().Apply(
      "silu", {x},
      [](Node& n) {
        const Tensor& in = n.in(0);
        n.value = Tensor(in.shape());
        VecSilu(in.data(), n.value.data(), in.size());
      },
      [](Node& n) {
        if (!n.inputs[0]->requires_grad) return;
        const Tensor& in = n.in(0);
        std::vector<double> sig(in.size());
        VecSigmoid(in.data(), sig.data(), in.size());
        Tensor& g = n.in_grad(0);
        for (std::size_t i = 0; i < in.size(); ++i)
          g[i] += n.grad[i] * sig[i] * (1.0 + in[i] * (1.0 - sig[i]));
      });
}

Var Tanh(const Var& x) {
  return Unary(
      "tanh", x, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Var Softplus(const Var& x) {
  return Unary(
      "softplus", x, [](double v) { return SoftplusValue(v); },
      [](double v, double) { return Sigmoid(v); });
}

Var Exp(const Var& x) {
  return Unary(
      "exp", x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Var MatMul(const Var& x, const Var& w) {
  Require(w.value().rank() == 2 && x.value().rank() >= 1 && x.shape().back() == w.dim(0),
          ErrorKind::kShape,
          "matmul: " + ShapeString(x.shape()) + " @ " + ShapeString(w.shape()));
  return x.graph().Apply(
      "matmul", {x, w},
      [](Node& n) {
        const Tensor& a = n.in(0);
        const Tensor& b = n.in(1);
        const std::size_t K = b.dim(0), M = b.dim(1), R = Rows(a.shape());
        Shape out = a.shape();
        out.back() = M;
        n.value = Tensor(out);
        MapMat(n.value.data(), R, M).noalias() =
            ConstMapMat(a.data(), R, K) * ConstMapMat(b.data(), K, M);
      },
      [](Node& n) {
        const Tensor& a = n.in(0);
        const Tensor& b = n.in(1);
        const std::size_t K = b.dim(0), M = b.dim(1), R = Rows(a.shape());
        ConstMapMat gy(n.grad.data(), R, M);
        if (n.inputs[0]->requires_grad) {
          Tensor& g = n.in_grad(0);
          MapMat(g.data(), R, K).noalias() += gy * ConstMapMat(b.data(), K, M).transpose();
        }
        if (n.inputs[1]->requires_grad) {
          Tensor& g = n.in_grad(1);
          MapMat(g.data(), K, M).noalias() += ConstMapMat(a.data(), R, K).transpose() * gy;
        }
      });
}

Var Conv1d(const Var& x, const Var& w, std::size_t dilation, Padding padding) {
  Require(x.value().rank() == 3 && w.value().rank() == 3 && x.dim(2) == w.dim(1),
          ErrorKind::kShape,
          "conv1d: " + ShapeString(x.shape()) + " * " + ShapeString(w.shape()));
  Require(dilation >= 1, ErrorKind::kInvalidArgument, "conv1d: dilation must be >= 1");
  Require(padding == Padding::kCausal || w.dim(0) % 2 == 1, ErrorKind::kInvalidArgument,
          "conv1d: same padding needs an odd kernel");
  return x.graph().Apply(
      "conv1d", {x, w},
      [dilation, padding](Node& n) {
        const Tensor& in = n.in(0);
        const Tensor& wt = n.in(1);
        const std::size_t N = in.dim(0), L = in.dim(1), Ci = in.dim(2);
        const std::size_t K = wt.dim(0), Co = wt.dim(2);
        n.value = Tensor({N, L, Co});
        for (std::size_t k = 0; k < K; ++k) {
          const auto off = TapOffset(k, K, dilation, padding);
          const auto [lo, hi] = ValidRange(L, off);
          if (hi == lo) continue;
          ConstMapMat wk(wt.data() + k * Ci * Co, Ci, Co);
          for (std::size_t b = 0; b < N; ++b) {
            const double* src = in.data() + (b * L + lo + off) * Ci;
            double* dst = n.value.data() + (b * L + lo) * Co;
            MapMat(dst, hi - lo, Co).noalias() += ConstMapMat(src, hi - lo, Ci) * wk;
          }
        }
      },
      [dilation, padding](Node& n) {
        const Tensor& in = n.in(0);
        const Tensor& wt = n.in(1);
        const std::size_t N = in.dim(0), L = in.dim(1), Ci = in.dim(2);
        const std::size_t K = wt.dim(0), Co = wt.dim(2);
        const bool gx = n.inputs[0]->requires_grad, gw = n.inputs[1]->requires_grad;
        Tensor* gin = gx ? &n.in_grad(0) : nullptr;
        Tensor* gwt = gw ? &n.in_grad(1) : nullptr;
        for (std::size_t k = 0; k < K; ++k) {
          const auto off = TapOffset(k, K, dilation, padding);
          const auto [lo, hi] = ValidRange(L, off);
          if (hi == lo) continue;
          ConstMapMat wk(wt.data() + k * Ci * Co, Ci, Co);
          for (std::size_t b = 0; b < N; ++b) {
            ConstMapMat gy(n.grad.data() + (b * L + lo) * Co, hi - lo, Co);
            if (gx) {
              MapMat(gin->data() + (b * L + lo + off) * Ci, hi - lo, Ci).noalias() +=
                  gy * wk.transpose();
            }
            if (gw) {
              MapMat(gwt->data() + k * Ci * Co, Ci, Co).noalias() +=
                  ConstMapMat(in.data() + (b * L + lo + off) * Ci, hi - lo, Ci).transpose() * gy;
            }
          }
        }
      });
}

Var DepthwiseConv1d(const Var& x, const Var& w, std::size_t dilation, Padding padding) {
  Require(x.value().rank() == 3 && w.value().rank() == 2 && x.dim(2) == w.dim(1),
          ErrorKind::kShape,
          "depthwise_conv1d: " + ShapeString(x.shape()) + " * " + ShapeString(w.shape()));
  Require(dilation >= 1, ErrorKind::kInvalidArgument, "depthwise_conv1d: dilation must be >= 1");
  Require(padding == Padding::kCausal || w.dim(0) % 2 == 1, ErrorKind::kInvalidArgument,
          "depthwise_conv1d: same padding needs an odd kernel");
  return x.graph().Apply(
      "depthwise_conv1d", {x, w},
      [dilation, padding](Node& n) {
        const Tensor& in = n.in(0);
        const Tensor& wt = n.in(1);
        const std::size_t N = in.dim(0), L = in.dim(1), C = in.dim(2), K = wt.dim(0);
        n.value = Tensor({N, L, C});
        for (std::size_t k = 0; k < K; ++k) {
          const auto off = TapOffset(k, K, dilation, padding);
          const auto [lo, hi] = ValidRange(L, off);
          const double* wk = wt.data() + k * C;
          for (std::size_t b = 0; b < N; ++b) {
            for (std::size_t l = lo; l < hi; ++l) {
              const double* src = in.data() + (b * L + l + off) * C;
              double* dst = n.value.data() + (b * L + l) * C;
              for (std::size_t c = 0; c < C; ++c) dst[c] += wk[c] * src[c];
            }
          }
        }
      },
      [dilation, padding](Node& n) {
        const Tensor& in = n.in(0);
        const Tensor& wt = n.in(1);
        const std::size_t N = in.dim(0), L = in.dim(1), C = in.dim(2), K = wt.dim(0);
        const bool gx = n.inputs[0]->requires_grad, gw = n.inputs[1]->requires_grad;
        Tensor* gin = gx ? &n.in_grad(0) : nullptr;
        Tensor* gwt = gw ? &n.in_grad(1) : nullptr;
        for (std::size_t k = 0; k < K; ++k) {
          const auto off = TapOffset(k, K, dilation, padding);
          const auto [lo, hi] = ValidRange(L, off);
          const double* wk = wt.data() + k * C;
          for (std::size_t b = 0; b < N; ++b) {
            for (std::size_t l = lo; l < hi; ++l) {
              const double* gy = n.grad.data() + (b * L + l) * C;
              const std::size_t src = (b * L + l + off) * C;
              if (gx) {
                double* gi = gin->data() + src;
                for (std::size_t c = 0; c < C; ++c) gi[c] += gy[c] * wk[c];
              }
              if (gw) {
                double* gk = gwt->data() + k * C;
                const double* xi = in.data() + src;
                for (std::size_t c = 0; c < C; ++c) gk[c] += gy[c] * xi[c];
              }
            }
          }
        }
      });
}

Var MeanPool(const Var& x, std::size_t factor) {
  Require(factor >= 1, ErrorKind::kInvalidArgument, "mean_pool: factor must be >= 1");
  Require(x.value().rank() >= 1 && x.dim(0) >= factor, ErrorKind::kShape,
          "mean_pool: " + std::to_string(x.value().rank() ? x.dim(0) : 0) +
              " rows is fewer than the pool factor " + std::to_string(factor));
  return x.graph().Apply(
      "mean_pool", {x},
      [factor](Node& n) {
        const Tensor& in = n.in(0);
        Shape out = in.shape();
        out[0] = in.dim(0) / factor;
        const std::size_t inner = in.Stride(0);
        n.value = Tensor(out);
        const double inv = 1.0 / static_cast<double>(factor);
        for (std::size_t r = 0; r < out[0]; ++r)
          for (std::size_t j = 0; j < factor; ++j) {
            const double* src = in.data() + (r * factor + j) * inner;
            double* dst = n.value.data() + r * inner;
            for (std::size_t i = 0; i < inner; ++i) dst[i] += inv * src[i];
          }
      },
      [factor](Node& n) {
        if (!n.inputs[0]->requires_grad) return;
        Tensor& g = n.in_grad(0);
        const std::size_t inner = g.Stride(0), rows = n.value.dim(0);
        const double inv = 1.0 / static_cast<double>(factor);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t j = 0; j < factor; ++j) {
            double* dst = g.data() + (r * factor + j) * inner;
            const double* src = n.grad.data() + r * inner;
            for (std::size_t i = 0; i < inner; ++i) dst[i] += inv * src[i];
          }
      });
}

Var Slice(const Var& x, std::size_t begin, std::size_t end) {
  Require(x.value().rank() >= 1 && begin < end && end <= x.dim(0), ErrorKind::kShape,
          "slice: bad range [" + std::to_string(begin) + "," + std::to_string(end) + ") of " +
              ShapeString(x.shape()));
  return x.graph().Apply(
      "slice", {x},
      [begin, end](Node& n) {
        const Tensor& in = n.in(0);
        Shape out = in.shape();
        out[0] = end - begin;
        const std::size_t inner = in.Stride(0);
        n.value = Tensor(out, std::vector<double>(in.data() + begin * inner, in.data() + end * inner));
      },
      [begin](Node& n) {
        if (!n.inputs[0]->requires_grad) return;
        Tensor& g = n.in_grad(0);
        const std::size_t off = begin * g.Stride(0);
        for (std::size_t i = 0; i < n.grad.size(); ++i) g[off + i] += n.grad[i];
      });
}

Var Reverse(const Var& x) {
  Require(x.value().rank() == 3, ErrorKind::kShape, "reverse: expects a rank-3 tensor");
  auto flip = [](const Tensor& src, Tensor& dst, bool accumulate) {
    const std::size_t N = src.dim(0), L = src.dim(1), C = src.dim(2);
    for (std::size_t b = 0; b < N; ++b)
      for (std::size_t l = 0; l < L; ++l) {
        const double* s = src.data() + (b * L + l) * C;
        double* d = dst.data() + (b * L + (L - 1 - l)) * C;
        for (std::size_t c = 0; c < C; ++c) d[c] = accumulate ? d[c] + s[c] : s[c];
      }
  };
  return x.graph().Apply(
      "reverse", {x},
      [flip](Node& n) {
        n.value = Tensor(n.in(0).shape());
        flip(n.in(0), n.value, false);
      },
      [flip](Node& n) {
        if (!n.inputs[0]->requires_grad) return;
        flip(n.grad, n.in_grad(0), true);
      });
}

Var Concat(const std::vector<Var>& xs) {
  Require(!xs.empty(), ErrorKind::kInvalidArgument, "concat: no inputs");
  const std::size_t rows = Rows(xs[0].shape());
  for (const Var& v : xs) {
    Shape lead(v.shape().begin(), v.shape().end() - 1);
    Shape lead0(xs[0].shape().begin(), xs[0].shape().end() - 1);
    Require(lead == lead0, ErrorKind::kShape, "concat: leading dimensions differ");
  }
  return xs[0].graph().Apply(
      "concat", xs,
      [rows](Node& n) {
        std::size_t total = 0;
        for (const auto& p : n.inputs) total += p->value.shape().back();
        Shape out = n.in(0).shape();
        out.back() = total;
        n.value = Tensor(out);
        std::size_t col = 0;
        for (const auto& p : n.inputs) {
          const std::size_t w = p->value.shape().back();
          for (std::size_t r = 0; r < rows; ++r)
            std::copy_n(p->value.data() + r * w, w, n.value.data() + r * total + col);
          col += w;
        }
      },
      [rows](Node& n) {
        const std::size_t total = n.value.shape().back();
        std::size_t col = 0;
        for (std::size_t k = 0; k < n.inputs.size(); ++k) {
          const std::size_t w = n.inputs[k]->value.shape().back();
          if (n.inputs[k]->requires_grad) {
            Tensor& g = n.in_grad(k);
            for (std::size_t r = 0; r < rows; ++r)
              for (std::size_t c = 0; c < w; ++c) g[r * w + c] += n.grad[r * total + col + c];
          }
          col += w;
        }
      });
}

Var SwapLeadingAxes(const Var& x) {
  Require(x.value().rank() == 3, ErrorKind::kShape, "swap_leading_axes: expects rank 3");
  auto swap = [](const Tensor& src, Tensor& dst, bool accumulate) {
    const std::size_t A = src.dim(0), B = src.dim(1), C = src.dim(2);
    for (std::size_t a = 0; a < A; ++a)
      for (std::size_t b = 0; b < B; ++b) {
        const double* s = src.data() + (a * B + b) * C;
        double* d = dst.data() + (b * A + a) * C;
        for (std::size_t c = 0; c < C; ++c) d[c] = accumulate ? d[c] + s[c] : s[c];
      }
  };
  return x.graph().Apply(
      "swap_leading_axes", {x},
      [swap](Node& n) {
        const Tensor& in = n.in(0);
        n.value = Tensor({in.dim(1), in.dim(0), in.dim(2)});
        swap(in, n.value, false);
      },
      [swap](Node& n) {
        if (!n.inputs[0]->requires_grad) return;
        swap(n.grad, n.in_grad(0), true);
      });
}

Var Sum(const Var& x) {
  return x.graph().Apply(
      "sum", {x}, [](Node& n) { n.value = Tensor::Scalar(n.in(0).Sum()); },
      [](Node& n) {
        if (!n.inputs[0]->requires_grad) return;
        Tensor& g = n.in_grad(0);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[0];
      });
}

Var Mean(const Var& x) {
  Require(x.value().size() > 0, ErrorKind::kShape, "mean of an empty tensor");
  return x.graph().Apply(
      "mean", {x},
      [](Node& n) {
        n.value = Tensor::Scalar(n.in(0).Sum() / static_cast<double>(n.in(0).size()));
      },
      [](Node& n) {
        if (!n.inputs[0]->requires_grad) return;
        Tensor& g = n.in_grad(0);
        const double s = n.grad[0] / static_cast<double>(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += s;
      });
}

Var Scan(const Var& a, const Var& b, const Var& c) {
  RequireSameShape(a, b, "scan");
  Require(a.value().rank() == 4 && c.value().rank() == 3 && c.dim(0) == a.dim(0) &&
              c.dim(1) == a.dim(1) && c.dim(2) == a.dim(3),
          ErrorKind::kShape,
          "scan: a " + ShapeString(a.shape()) + ", c " + ShapeString(c.shape()));
  return a.graph().Apply(
      "scan", {a, b, c},
      [](Node& n) {
        const Tensor& A = n.in(0);
        const Tensor& B = n.in(1);
        const Tensor& C = n.in(2);
        const std::size_t N = A.dim(0), L = A.dim(1), E = A.dim(2), S = A.dim(3);
        n.value = Tensor({N, L, E});
        n.aux = Tensor(A.shape());
        for (std::size_t bt = 0; bt < N; ++bt) {
          for (std::size_t t = 0; t < L; ++t) {
            const std::size_t row = (bt * L + t) * E * S;
            const double* c = C.data() + (bt * L + t) * S;
            for (std::size_t e = 0; e < E; ++e) {
              double acc = 0.0;
              for (std::size_t s = 0; s < S; ++s) {
                const std::size_t i = row + e * S + s;
                const double prev = t ? n.aux[i - E * S] : 0.0;
                const double h = A[i] * prev + B[i];
                n.aux[i] = h;
                acc += c[s] * h;
              }
              n.value[(bt * L + t) * E + e] = acc;
            }
          }
        }
      },
      [](Node& n) {
        const Tensor& A = n.in(0);
        const Tensor& C = n.in(2);
        const Tensor& H = n.aux;
        const std::size_t N = A.dim(0), L = A.dim(1), E = A.dim(2), S = A.dim(3);
        const bool ga = n.inputs[0]->requires_grad, gb = n.inputs[1]->requires_grad,
                   gc = n.inputs[2]->requires_grad;
        Tensor* gA = ga ? &n.in_grad(0) : nullptr;
        Tensor* gB = gb ? &n.in_grad(1) : nullptr;
        Tensor* gC = gc ? &n.in_grad(2) : nullptr;
        std::vector<double> gh(E * S);
        for (std::size_t bt = 0; bt < N; ++bt) {
          std::fill(gh.begin(), gh.end(), 0.0);
          for (std::size_t t = L; t-- > 0;) {
            const std::size_t row = (bt * L + t) * E * S;
            const double* c = C.data() + (bt * L + t) * S;
            for (std::size_t e = 0; e < E; ++e) {
              const double gy = n.grad[(bt * L + t) * E + e];
              for (std::size_t s = 0; s < S; ++s) {
                const std::size_t i = row + e * S + s;
                double& g = gh[e * S + s];
                g += c[s] * gy;
                if (gc) (*gC)[(bt * L + t) * S + s] += gy * H[i];
                if (gb) (*gB)[i] += g;
                if (ga) (*gA)[i] += g * (t ? H[i - E * S] : 0.0);
                g *= A[i];
              }
            }
          }
        }
      });
}

namespace {

// One step of the fused recurrence for all channels of a row:
// abar = exp(dt * A), h = abar * h + dt * u * B.
void ScanStep(const double* u, const double* dt, const double* A, const double* b, std::size_t E,
              std::size_t S, double* abar, double* h) {
  for (std::size_t e = 0; e < E; ++e)
    for (std::size_t s = 0; s < S; ++s) abar[e * S + s] = dt[e] * A[e * S + s];
  VecExp(abar, abar, E * S);
  for (std::size_t e = 0; e < E; ++e) {
    const double du = dt[e] * u[e];
    for (std::size_t s = 0; s < S; ++s) h[e * S + s] = abar[e * S + s] * h[e * S + s] + du * b[s];
  }
}

}  // namespace

Var SelectiveScan(const Var& u, const Var& delta, const Var& A, const Var& B, const Var& C) {
  RequireSameShape(u, delta, "selective_scan");
  RequireSameShape(B, C, "selective_scan");
  Require(u.value().rank() == 3 && A.value().rank() == 2 && B.value().rank() == 3 &&
              A.dim(0) == u.dim(2) && B.dim(0) == u.dim(0) && B.dim(1) == u.dim(1) &&
              B.dim(2) == A.dim(1),
          ErrorKind::kShape,
          "selective_scan: u " + ShapeString(u.shape()) + ", A " + ShapeString(A.shape()) +
              ", B " + ShapeString(B.shape()));
  return u.graph().Apply(
      "selective_scan", {u, delta, A, B, C},
      [](Node& n) {
        const Tensor& U = n.in(0);
        const Tensor& D = n.in(1);
        const Tensor& Am = n.in(2);
        const Tensor& Bm = n.in(3);
        const Tensor& Cm = n.in(4);
        const std::size_t N = U.dim(0), L = U.dim(1), E = U.dim(2), S = Am.dim(1);
        // A step that underflowed to zero just holds the state.
        for (double v : D.values())
          Require(v >= 0.0, ErrorKind::kNumeric, "selective_scan: negative step size");
        n.value = Tensor({N, L, E});
        std::vector<double> h(E * S), abar(E * S);
        for (std::size_t bt = 0; bt < N; ++bt) {
          std::fill(h.begin(), h.end(), 0.0);
          for (std::size_t t = 0; t < L; ++t) {
            const std::size_t r = bt * L + t;
            ScanStep(U.data() + r * E, D.data() + r * E, Am.data(), Bm.data() + r * S,
                     E, S, abar.data(), h.data());
            const double* c = Cm.data() + r * S;
            for (std::size_t e = 0; e < E; ++e) {
              double acc = 0.0;
              for (std::size_t s = 0; s < S; ++s) acc += c[s] * h[e * S + s];
              n.value[r * E + e] = acc;
            }
          }
        }
      },
      [](Node& n) {
        const Tensor& U = n.in(0);
        const Tensor& D = n.in(1);
        const Tensor& Am = n.in(2);
        const Tensor& Bm = n.in(3);
        const Tensor& Cm = n.in(4);
        const std::size_t N = U.dim(0), L = U.dim(1), E = U.dim(2), S = Am.dim(1);
        Tensor* gU = n.inputs[0]->requires_grad ? &n.in_grad(0) : nullptr;
        Tensor* gD = n.inputs[1]->requires_grad ? &n.in_grad(1) : nullptr;
        Tensor* gA = n.inputs[2]->requires_grad ? &n.in_grad(2) : nullptr;
        Tensor* gB = n.inputs[3]->requires_grad ? &n.in_grad(3) : nullptr;
        Tensor* gC = n.inputs[4]->requires_grad ? &n.in_grad(4) : nullptr;
        const std::size_t ES = E * S;
        // States and decays of one sequence are recomputed here rather than
        // kept from the forward pass.
        std::vector<double> hs((L + 1) * ES), abars(L * ES), gh(ES);
        for (std::size_t bt = 0; bt < N; ++bt) {
          std::fill(hs.begin(), hs.begin() + std::ptrdiff_t(ES), 0.0);
          for (std::size_t t = 0; t < L; ++t) {
            const std::size_t r = bt * L + t;
            std::copy_n(hs.data() + t * ES, ES, hs.data() + (t + 1) * ES);
            ScanStep(U.data() + r * E, D.data() + r * E, Am.data(), Bm.data() + r * S, E, S,
                     abars.data() + t * ES, hs.data() + (t + 1) * ES);
          }
          std::fill(gh.begin(), gh.end(), 0.0);
          for (std::size_t t = L; t-- > 0;) {
            const std::size_t r = bt * L + t;
            const double* b = Bm.data() + r * S;
            const double* c = Cm.data() + r * S;
            const double* h = hs.data() + (t + 1) * ES;
            const double* hp = hs.data() + t * ES;
            const double* ab = abars.data() + t * ES;
            for (std::size_t e = 0; e < E; ++e) {
              const double gy = n.grad[r * E + e];
              const double dt = D[r * E + e];
              const double ut = U[r * E + e];
              const double* a = Am.data() + e * S;
              double g_dt = 0.0, g_u = 0.0;
              for (std::size_t s = 0; s < S; ++s) {
                const std::size_t i = e * S + s;
                double& g = gh[i];
                g += c[s] * gy;
                if (gC) (*gC)[r * S + s] += gy * h[i];
                const double g_abar = g * hp[i] * ab[i];
                g_dt += g_abar * a[s] + g * b[s] * ut;
                if (gA) (*gA)[i] += g_abar * dt;
                if (gB) (*gB)[r * S + s] += g * dt * ut;
                g_u += g * dt * b[s];
                g *= ab[i];
              }
              if (gD) (*gD)[r * E + e] += g_dt;
              if (gU) (*gU)[r * E + e] += g_u;
            }
          }
        }
      });
}

Var MaskedMse(const Var& pred, const Tensor& target, const std::vector<bool>& mask) {
  Require(pred.value().rank() == 2 && pred.shape() == target.shape(), ErrorKind::kShape,
          "masked_mse: pred " + ShapeString(pred.shape()) + " vs target " +
              ShapeString(target.shape()));
  Require(mask.size() == pred.dim(0), ErrorKind::kShape, "masked_mse: mask length mismatch");
  std::size_t kept = 0;
  for (bool m : mask) kept += m ? 1 : 0;
  Require(kept > 0, ErrorKind::kData, "masked_mse: every frame is masked out");
  const double norm = 1.0 / static_cast<double>(kept * pred.dim(1));
  return pred.graph().Apply(
      "masked_mse", {pred},
      [target, mask, norm](Node& n) {
        const Tensor& p = n.in(0);
        const std::size_t M = p.dim(1);
        double acc = 0.0;
        for (std::size_t r = 0; r < p.dim(0); ++r) {
          if (!mask[r]) continue;
          for (std::size_t m = 0; m < M; ++m) {
            const double d = p[r * M + m] - target[r * M + m];
            acc += d * d;
          }
        }
        n.value = Tensor::Scalar(acc * norm);
      },
      [target, mask, norm](Node& n) {
        if (!n.inputs[0]->requires_grad) return;
        const Tensor& p = n.in(0);
        Tensor& g = n.in_grad(0);
        const std::size_t M = p.dim(1);
        for (std::size_t r = 0; r < p.dim(0); ++r) {
          if (!mask[r]) continue;
          for (std::size_t m = 0; m < M; ++m)
            g[r * M + m] += n.grad[0] * 2.0 * norm * (p[r * M + m] - target[r * M + m]);
        }
      });
}

}  // namespace tfssl::numcore::ops
