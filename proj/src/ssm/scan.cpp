#include "tfssl/ssm/scan.hpp"

#include <bit>
#include <cmath>

#include "tfssl/error.hpp"

namespace tfssl::ssm {
namespace {

struct Affine {
  double a = 1.0;
  double b = 0.0;
};

// `later` applied after `earlier`.
inline Affine Compose(const Affine& later, const Affine& earlier) {
  return {later.a * earlier.a, later.a * earlier.b + later.b};
}

void CheckFinite(const Tensor& y) {
  Require(y.AllFinite(), ErrorKind::kNumeric, "scan produced a non-finite state");
}

}  // namespace

void ScanInputs::Validate() const {
  Require(a.rank() == 3 && bx.shape() == a.shape(), ErrorKind::kShape,
          "scan inputs: a " + numcore::ShapeString(a.shape()) + " vs bx " +
              numcore::ShapeString(bx.shape()));
  Require(c.rank() == 2 && c.dim(0) == a.dim(0) && c.dim(1) == a.dim(2), ErrorKind::kShape,
          "scan inputs: c " + numcore::ShapeString(c.shape()) + " does not match a " +
              numcore::ShapeString(a.shape()));
}

Tensor ScanSequential(const ScanInputs& in) {
  in.Validate();
  const std::size_t L = in.steps(), E = in.channels(), S = in.state();
  Tensor y({L, E});
  std::vector<double> h(E * S, 0.0);
  for (std::size_t t = 0; t < L; ++t) {
    const double* a = in.a.data() + t * E * S;
    const double* b = in.bx.data() + t * E * S;
    const double* c = in.c.data() + t * S;
    for (std::size_t e = 0; e < E; ++e) {
      double acc = 0.0;
      for (std::size_t s = 0; s < S; ++s) {
        double& hs = h[e * S + s];
        hs = a[e * S + s] * hs + b[e * S + s];
        acc += c[s] * hs;
      }
      y[t * E + e] = acc;
    }
  }
  CheckFinite(y);
  return y;
}

Tensor ScanParallel(const ScanInputs& in) {
  in.Validate();
  const std::size_t L = in.steps(), E = in.channels(), S = in.state();
  const std::size_t P = std::bit_ceil(L);
  Tensor y({L, E});
  std::vector<Affine> elems(L), tree(P);
  for (std::size_t e = 0; e < E; ++e) {
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t t = 0; t < L; ++t) {
        const std::size_t i = (t * E + e) * S + s;
        elems[t] = {in.a[i], in.bx[i]};
      }
      std::copy(elems.begin(), elems.end(), tree.begin());
      std::fill(tree.begin() + static_cast<std::ptrdiff_t>(L), tree.end(), Affine{});
      // Up-sweep: tree[i] becomes the composition of its subtree.
      for (std::size_t d = 1; d < P; d *= 2)
        for (std::size_t i = 2 * d - 1; i < P; i += 2 * d) tree[i] = Compose(tree[i], tree[i - d]);
      // Down-sweep: exclusive prefix compositions.
      tree[P - 1] = Affine{};
      for (std::size_t d = P / 2; d >= 1; d /= 2) {
        for (std::size_t i = 2 * d - 1; i < P; i += 2 * d) {
          const Affine left = tree[i - d];
          tree[i - d] = tree[i];
          tree[i] = Compose(left, tree[i]);
        }
      }
      // Inclusive state from h_0 = 0: apply element t after its exclusive prefix.
      for (std::size_t t = 0; t < L; ++t) {
        const double h = Compose(elems[t], tree[t]).b;
        y[t * E + e] += in.c[t * S + s] * h;
      }
    }
  }
  CheckFinite(y);
  return y;
}

Tensor SsmKernel(const Tensor& a_bar, const Tensor& b_bar, const Tensor& c, std::size_t length) {
  Require(length >= 1, ErrorKind::kInvalidArgument, "kernel length must be >= 1");
  Require(a_bar.rank() == 2 && b_bar.shape() == a_bar.shape() && c.rank() == 1 &&
              c.dim(0) == a_bar.dim(1),
          ErrorKind::kShape, "ssm kernel: inconsistent shapes");
  const std::size_t E = a_bar.dim(0), S = a_bar.dim(1);
  Tensor K({length, E});
  for (std::size_t e = 0; e < E; ++e) {
    for (std::size_t s = 0; s < S; ++s) {
      double pw = b_bar[e * S + s];  // a^k b
      for (std::size_t k = 0; k < length; ++k) {
        K[k * E + e] += c[s] * pw;
        pw *= a_bar[e * S + s];
      }
    }
  }
  return K;
}

Tensor CausalConvolve(const Tensor& x, const Tensor& kernel) {
  Require(x.rank() == 2 && kernel.rank() == 2 && kernel.dim(1) == x.dim(1) &&
              kernel.dim(0) >= x.dim(0),
          ErrorKind::kShape, "causal convolve: kernel must cover the sequence");
  const std::size_t L = x.dim(0), E = x.dim(1);
  Tensor y({L, E});
  for (std::size_t t = 0; t < L; ++t)
    for (std::size_t k = 0; k <= t; ++k)
      for (std::size_t e = 0; e < E; ++e) y[t * E + e] += kernel[k * E + e] * x[(t - k) * E + e];
  return y;
}

}  // namespace tfssl::ssm
