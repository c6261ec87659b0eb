#include "softseg/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace softseg {

namespace {

void require_rank4(const Tensor& t, const char* op) {
  if (t.rank() != 4)
    throw std::invalid_argument(std::string(op) + ": expected a rank-4 NCHW tensor");
}

struct ConvDims {
  std::size_t batch, cin, cout, h, w, k;
};

// Valid output range [lo, hi) for an input offset d along an axis of length n.
inline void valid_range(std::ptrdiff_t d, std::size_t n, std::size_t& lo, std::size_t& hi) {
  lo = d < 0 ? static_cast<std::size_t>(-d) : 0;
  hi = d > 0 ? n - std::min(n, static_cast<std::size_t>(d)) : n;
}

inline std::size_t shifted(std::size_t i, std::ptrdiff_t d) {
  return static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) + d);
}

void conv_forward(const ConvDims& d, const double* x, const double* w, const double* b, double* y) {
  const std::size_t hw = d.h * d.w;
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(d.k / 2);
  for (std::size_t n = 0; n < d.batch; ++n) {
    for (std::size_t co = 0; co < d.cout; ++co) {
      double* yp = y + (n * d.cout + co) * hw;
      std::fill(yp, yp + hw, b[co]);
      for (std::size_t ci = 0; ci < d.cin; ++ci) {
        const double* xp = x + (n * d.cin + ci) * hw;
        const double* wp = w + (co * d.cin + ci) * d.k * d.k;
        for (std::size_t ky = 0; ky < d.k; ++ky) {
          const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - pad;
          std::size_t y0, y1;
          valid_range(dy, d.h, y0, y1);
          for (std::size_t kx = 0; kx < d.k; ++kx) {
            const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - pad;
            std::size_t x0, x1;
            valid_range(dx, d.w, x0, x1);
            const double wv = wp[ky * d.k + kx];
            for (std::size_t yy = y0; yy < y1; ++yy) {
              double* yr = yp + yy * d.w + x0;
              const double* xr = xp + shifted(yy, dy) * d.w + shifted(x0, dx);
              const std::size_t len = x1 - x0;
              for (std::size_t j = 0; j < len; ++j) yr[j] += wv * xr[j];
            }
          }
        }
      }
    }
  }
}

// Accumulates into gx (when non-null), gw and gb.
void conv_backward(const ConvDims& d, const double* x, const double* w, const double* gy,
                   double* gx, double* gw, double* gb) {
  const std::size_t hw = d.h * d.w;
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(d.k / 2);
  for (std::size_t n = 0; n < d.batch; ++n) {
    for (std::size_t co = 0; co < d.cout; ++co) {
      const double* gyp = gy + (n * d.cout + co) * hw;
      if (gb) {
        double s = 0.0;
        for (std::size_t i = 0; i < hw; ++i) s += gyp[i];
        gb[co] += s;
      }
      for (std::size_t ci = 0; ci < d.cin; ++ci) {
        const double* xp = x + (n * d.cin + ci) * hw;
        double* gxp = gx ? gx + (n * d.cin + ci) * hw : nullptr;
        const double* wp = w + (co * d.cin + ci) * d.k * d.k;
        double* gwp = gw ? gw + (co * d.cin + ci) * d.k * d.k : nullptr;
        for (std::size_t ky = 0; ky < d.k; ++ky) {
          const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - pad;
          std::size_t y0, y1;
          valid_range(dy, d.h, y0, y1);
          for (std::size_t kx = 0; kx < d.k; ++kx) {
            const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - pad;
            std::size_t x0, x1;
            valid_range(dx, d.w, x0, x1);
            const double wv = wp[ky * d.k + kx];
            double s0 = 0.0, s1 = 0.0;
            for (std::size_t yy = y0; yy < y1; ++yy) {
              const double* gr = gyp + yy * d.w + x0;
              const std::size_t src = shifted(yy, dy) * d.w + shifted(x0, dx);
              const double* xr = xp + src;
              const std::size_t len = x1 - x0;
              if (gxp) {
                double* gxr = gxp + src;
                for (std::size_t j = 0; j < len; ++j) gxr[j] += wv * gr[j];
              }
              if (gwp) {
                std::size_t j = 0;
                for (; j + 1 < len; j += 2) {
                  s0 += gr[j] * xr[j];
                  s1 += gr[j + 1] * xr[j + 1];
                }
                if (j < len) s0 += gr[j] * xr[j];
              }
            }
            if (gwp) gwp[ky * d.k + kx] += s0 + s1;
          }
        }
      }
    }
  }
}

}  // namespace

Tape::Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

Tape::Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Tape::Var Tape::variable(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = true;
  return push(std::move(n));
}

Tape::Var Tape::conv2d(Var x, Var w, Var b) {
  const Tensor& tx = value(x);
  const Tensor& tw = value(w);
  const Tensor& tb = value(b);
  require_rank4(tx, "conv2d");
  if (tw.rank() != 4 || tw.dim(2) != tw.dim(3) || tw.dim(2) % 2 == 0)
    throw std::invalid_argument("conv2d: weight must be [Co,Ci,K,K] with odd K");
  if (tw.dim(1) != tx.dim(1))
    throw std::invalid_argument("conv2d: weight expects " + std::to_string(tw.dim(1)) +
                                " input channels, got " + std::to_string(tx.dim(1)));
  if (tb.rank() != 1 || tb.dim(0) != tw.dim(0))
    throw std::invalid_argument("conv2d: bias must have one entry per output channel");
  const ConvDims d{tx.dim(0), tx.dim(1), tw.dim(0), tx.dim(2), tx.dim(3), tw.dim(2)};
  Node n;
  n.op = Op::conv2d;
  n.a = x;
  n.b = w;
  n.c = b;
  n.value = Tensor({d.batch, d.cout, d.h, d.w});
  conv_forward(d, tx.values.data(), tw.values.data(), tb.values.data(), n.value.values.data());
  n.needs_grad = nodes_[x].needs_grad || nodes_[w].needs_grad || nodes_[b].needs_grad;
  return push(std::move(n));
}

Tape::Var Tape::relu(Var x) {
  Node n;
  n.op = Op::relu;
  n.a = x;
  n.value = value(x);
  for (double& v : n.value.values) v = v > 0.0 ? v : 0.0;
  n.needs_grad = nodes_[x].needs_grad;
  return push(std::move(n));
}

Tape::Var Tape::avg_pool2(Var x) {
  const Tensor& tx = value(x);
  require_rank4(tx, "avg_pool2");
  const std::size_t planes = tx.dim(0) * tx.dim(1), h = tx.dim(2), w = tx.dim(3);
  if (h % 2 || w % 2) throw std::invalid_argument("avg_pool2: spatial dims must be even");
  const std::size_t oh = h / 2, ow = w / 2;
  Node n;
  n.op = Op::avg_pool2;
  n.a = x;
  n.value = Tensor({tx.dim(0), tx.dim(1), oh, ow});
  for (std::size_t p = 0; p < planes; ++p) {
    const double* src = tx.values.data() + p * h * w;
    double* dst = n.value.values.data() + p * oh * ow;
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t xx = 0; xx < ow; ++xx) {
        const double* r0 = src + 2 * y * w + 2 * xx;
        const double* r1 = r0 + w;
        dst[y * ow + xx] = 0.25 * ((r0[0] + r0[1]) + (r1[0] + r1[1]));
      }
  }
  n.needs_grad = nodes_[x].needs_grad;
  return push(std::move(n));
}

Tape::Var Tape::upsample2(Var x) {
  const Tensor& tx = value(x);
  require_rank4(tx, "upsample2");
  const std::size_t planes = tx.dim(0) * tx.dim(1), h = tx.dim(2), w = tx.dim(3);
  const std::size_t oh = 2 * h, ow = 2 * w;
  Node n;
  n.op = Op::upsample2;
  n.a = x;
  n.value = Tensor({tx.dim(0), tx.dim(1), oh, ow});
  for (std::size_t p = 0; p < planes; ++p) {
    const double* src = tx.values.data() + p * h * w;
    double* dst = n.value.values.data() + p * oh * ow;
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t xx = 0; xx < ow; ++xx) dst[y * ow + xx] = src[(y / 2) * w + xx / 2];
  }
  n.needs_grad = nodes_[x].needs_grad;
  return push(std::move(n));
}

Tape::Var Tape::concat_channels(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  require_rank4(ta, "concat_channels");
  require_rank4(tb, "concat_channels");
  if (ta.dim(0) != tb.dim(0) || ta.dim(2) != tb.dim(2) || ta.dim(3) != tb.dim(3))
    throw std::invalid_argument("concat_channels: batch and spatial dims must agree");
  const std::size_t batch = ta.dim(0), ca = ta.dim(1), cb = tb.dim(1), hw = ta.dim(2) * ta.dim(3);
  Node n;
  n.op = Op::concat;
  n.a = a;
  n.b = b;
  n.value = Tensor({batch, ca + cb, ta.dim(2), ta.dim(3)});
  for (std::size_t i = 0; i < batch; ++i) {
    auto out = n.value.values.begin() + static_cast<std::ptrdiff_t>(i * (ca + cb) * hw);
    auto ia = ta.values.begin() + static_cast<std::ptrdiff_t>(i * ca * hw);
    auto ib = tb.values.begin() + static_cast<std::ptrdiff_t>(i * cb * hw);
    out = std::copy(ia, ia + static_cast<std::ptrdiff_t>(ca * hw), out);
    std::copy(ib, ib + static_cast<std::ptrdiff_t>(cb * hw), out);
  }
  n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
  return push(std::move(n));
}

Tape::Var Tape::sigmoid(Var x) {
  Node n;
  n.op = Op::sigmoid;
  n.a = x;
  n.value = value(x);
  for (double& v : n.value.values) {
    if (v >= 0.0) {
      v = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      v = e / (1.0 + e);
    }
  }
  n.needs_grad = nodes_[x].needs_grad;
  return push(std::move(n));
}

void Tape::backward(Var output, std::span<const double> seed) {
  if (nodes_.empty()) throw std::logic_error("backward called on an empty tape (no forward pass)");
  if (output >= nodes_.size()) throw std::out_of_range("backward: unknown output node");
  if (seed.size() != nodes_[output].value.numel())
    throw std::invalid_argument("backward: seed has " + std::to_string(seed.size()) +
                                " values, output has " +
                                std::to_string(nodes_[output].value.numel()));
  for (Node& n : nodes_) {
    if (n.needs_grad)
      n.grad.assign(n.value.numel(), 0.0);
    else
      n.grad.clear();
  }
  if (!nodes_[output].needs_grad) return;
  std::copy(seed.begin(), seed.end(), nodes_[output].grad.begin());
  for (std::size_t i = output + 1; i-- > 0;) {
    const Node& n = nodes_[i];
    if (n.op != Op::leaf && n.needs_grad) backward_node(n);
  }
}

void Tape::backward_node(const Node& node) {
  const std::vector<double>& gy = node.grad;
  switch (node.op) {
    case Op::leaf:
      return;
    case Op::conv2d: {
      Node& nx = nodes_[node.a];
      Node& nw = nodes_[node.b];
      Node& nb = nodes_[node.c];
      const Tensor& tx = nx.value;
      const Tensor& tw = nw.value;
      const ConvDims d{tx.dim(0), tx.dim(1), tw.dim(0), tx.dim(2), tx.dim(3), tw.dim(2)};
      conv_backward(d, tx.values.data(), tw.values.data(), gy.data(),
                    nx.needs_grad ? nx.grad.data() : nullptr,
                    nw.needs_grad ? nw.grad.data() : nullptr,
                    nb.needs_grad ? nb.grad.data() : nullptr);
      return;
    }
    case Op::relu: {
      Node& nx = nodes_[node.a];
      if (!nx.needs_grad) return;
      for (std::size_t i = 0; i < gy.size(); ++i)
        if (nx.value.values[i] > 0.0) nx.grad[i] += gy[i];
      return;
    }
    case Op::avg_pool2: {
      Node& nx = nodes_[node.a];
      if (!nx.needs_grad) return;
      const Tensor& tx = nx.value;
      const std::size_t planes = tx.dim(0) * tx.dim(1), h = tx.dim(2), w = tx.dim(3);
      const std::size_t oh = h / 2, ow = w / 2;
      for (std::size_t p = 0; p < planes; ++p) {
        const double* g = gy.data() + p * oh * ow;
        double* gx = nx.grad.data() + p * h * w;
        for (std::size_t y = 0; y < h; ++y)
          for (std::size_t xx = 0; xx < w; ++xx) gx[y * w + xx] += 0.25 * g[(y / 2) * ow + xx / 2];
      }
      return;
    }
    case Op::upsample2: {
      Node& nx = nodes_[node.a];
      if (!nx.needs_grad) return;
      const Tensor& tx = nx.value;
      const std::size_t planes = tx.dim(0) * tx.dim(1), h = tx.dim(2), w = tx.dim(3);
      const std::size_t ow = 2 * w;
      for (std::size_t p = 0; p < planes; ++p) {
        const double* g = gy.data() + p * 4 * h * w;
        double* gx = nx.grad.data() + p * h * w;
        for (std::size_t y = 0; y < h; ++y)
          for (std::size_t xx = 0; xx < w; ++xx) {
            const double* r0 = g + 2 * y * ow + 2 * xx;
            const double* r1 = r0 + ow;
            gx[y * w + xx] += (r0[0] + r0[1]) + (r1[0] + r1[1]);
          }
      }
      return;
    }
    case Op::concat: {
      Node& na = nodes_[node.a];
      Node& nb = nodes_[node.b];
      const std::size_t batch = na.value.dim(0), ca = na.value.dim(1), cb = nb.value.dim(1);
      const std::size_t hw = na.value.dim(2) * na.value.dim(3);
      for (std::size_t i = 0; i < batch; ++i) {
        const double* g = gy.data() + i * (ca + cb) * hw;
        if (na.needs_grad) {
          double* dst = na.grad.data() + i * ca * hw;
          for (std::size_t j = 0; j < ca * hw; ++j) dst[j] += g[j];
        }
        if (nb.needs_grad) {
          double* dst = nb.grad.data() + i * cb * hw;
          for (std::size_t j = 0; j < cb * hw; ++j) dst[j] += g[ca * hw + j];
        }
      }
      return;
    }
    case Op::sigmoid: {
      Node& nx = nodes_[node.a];
      if (!nx.needs_grad) return;
      const std::vector<double>& p = node.value.values;
      for (std::size_t i = 0; i < gy.size(); ++i) nx.grad[i] += gy[i] * p[i] * (1.0 - p[i]);
      return;
    }
  }
}

}  // namespace softseg
