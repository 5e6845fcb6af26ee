#include "resmix/ops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>

#include "resmix/error.hpp"
#include "resmix/gemm.hpp"
#include "resmix/rng.hpp"

namespace resmix {

namespace {

constexpr std::array<std::string_view, 11> kOps = {
    "conv2d",  "batchnorm2d",     "relu", "dense", "global_avg_pool", "weighted_mixture",
    "softmax", "log_softmax_nll", "add",  "sum",   "dot_constant",
};

void require_rank(const Shape& s, std::size_t rank, const char* op, const char* what) {
  if (s.size() != rank) {
    throw ShapeError(std::string(op) + ": " + what + " must have rank " + std::to_string(rank) +
                     ", got " + shape_str(s));
  }
}

std::size_t sz(std::int64_t v) { return static_cast<std::size_t>(v); }

struct ConvGeometry {
  std::int64_t cin, h, w, kh, kw, ho, wo;
  int stride, pad;
  std::size_t k() const { return sz(cin * kh * kw); }
  std::size_t p() const { return sz(ho * wo); }
};

template <typename T>
void im2col(const ConvGeometry& g, const T* x, T* col) {
  const std::size_t P = g.p();
  for (std::int64_t c = 0; c < g.cin; ++c) {
    for (std::int64_t i = 0; i < g.kh; ++i) {
      for (std::int64_t j = 0; j < g.kw; ++j) {
        T* row = col + sz((c * g.kh + i) * g.kw + j) * P;
        for (std::int64_t oh = 0; oh < g.ho; ++oh) {
          const std::int64_t ih = oh * g.stride - g.pad + i;
          T* out = row + sz(oh * g.wo);
          if (ih < 0 || ih >= g.h) {
            std::fill(out, out + g.wo, T{0});
            continue;
          }
          const T* src = x + sz((c * g.h + ih) * g.w);
          for (std::int64_t ow = 0; ow < g.wo; ++ow) {
            const std::int64_t iw = ow * g.stride - g.pad + j;
            out[ow] = (iw >= 0 && iw < g.w) ? src[iw] : T{0};
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const ConvGeometry& g, const T* col, T* dx) {
  const std::size_t P = g.p();
  for (std::int64_t c = 0; c < g.cin; ++c) {
    for (std::int64_t i = 0; i < g.kh; ++i) {
      for (std::int64_t j = 0; j < g.kw; ++j) {
        const T* row = col + sz((c * g.kh + i) * g.kw + j) * P;
        for (std::int64_t oh = 0; oh < g.ho; ++oh) {
          const std::int64_t ih = oh * g.stride - g.pad + i;
          if (ih < 0 || ih >= g.h) continue;
          T* dst = dx + sz((c * g.h + ih) * g.w);
          const T* in = row + sz(oh * g.wo);
          for (std::int64_t ow = 0; ow < g.wo; ++ow) {
            const std::int64_t iw = ow * g.stride - g.pad + j;
            if (iw >= 0 && iw < g.w) dst[iw] += in[ow];
          }
        }
      }
    }
  }
}

}  // namespace

std::span<const std::string_view> differentiable_ops() { return kOps; }

std::int64_t conv_out_extent(std::int64_t in, std::int64_t kernel, int stride, int pad) {
  return (in + 2 * pad - kernel) / stride + 1;
}

template <typename T>
Var conv2d(Tape<T>& tape, Var input, Var weight, std::optional<Var> bias, int stride, int pad) {
  const Tensor<T>& x = tape.value(input);
  const Tensor<T>& w = tape.value(weight);
  require_rank(x.shape(), 4, "conv2d", "input");
  require_rank(w.shape(), 4, "conv2d", "weight");
  if (stride < 1 || pad < 0) {
    throw ShapeError("conv2d: stride must be >= 1 and pad >= 0, got stride " +
                     std::to_string(stride) + " pad " + std::to_string(pad));
  }
  if (w.dim(1) != x.dim(1)) {
    throw ShapeError("conv2d: weight Cin " + std::to_string(w.dim(1)) + " != input Cin " +
                     std::to_string(x.dim(1)) + " (input " + shape_str(x.shape()) + ", weight " +
                     shape_str(w.shape()) + ")");
  }
  if (x.dim(2) + 2 * pad < w.dim(2) || x.dim(3) + 2 * pad < w.dim(3)) {
    throw ShapeError("conv2d: padded input " + shape_str(x.shape()) + " with pad " +
                     std::to_string(pad) + " is smaller than kernel " + shape_str(w.shape()));
  }
  const std::int64_t cout = w.dim(0);
  if (bias && tape.value(*bias).shape() != Shape{cout}) {
    throw ShapeError("conv2d: bias shape " + shape_str(tape.value(*bias).shape()) +
                     " does not match Cout " + std::to_string(cout));
  }

  ConvGeometry g{x.dim(1), x.dim(2), x.dim(3), w.dim(2), w.dim(3), 0, 0, stride, pad};
  g.ho = conv_out_extent(g.h, g.kh, stride, pad);
  g.wo = conv_out_extent(g.w, g.kw, stride, pad);
  const std::int64_t n = x.dim(0);
  const std::size_t K = g.k(), P = g.p();
  const std::size_t in_stride = sz(g.cin * g.h * g.w);
  const std::size_t out_stride = sz(cout) * P;

  Tensor<T> out({n, cout, g.ho, g.wo});
  std::vector<T> col(K * P);
  for (std::int64_t s = 0; s < n; ++s) {
    im2col(g, x.ptr() + sz(s) * in_stride, col.data());
    T* o = out.ptr() + sz(s) * out_stride;
    detail::gemm_nn(sz(cout), P, K, w.ptr(), col.data(), o);
    if (bias) {
      const Tensor<T>& b = tape.value(*bias);
      for (std::int64_t c = 0; c < cout; ++c)
        for (std::size_t p = 0; p < P; ++p) o[sz(c) * P + p] += b[sz(c)];
    }
  }

  std::vector<Var> inputs{input, weight};
  if (bias) inputs.push_back(*bias);
  return tape.record(
      std::move(out), inputs,
      [=](const Tensor<T>&, const Tensor<T>& gout, Tape<T>& t) {
        const Tensor<T>& xv = t.value(input);
        const Tensor<T>& wv = t.value(weight);
        Tensor<T>* dx = t.grad_of(input);
        Tensor<T>* dw = t.grad_of(weight);
        Tensor<T>* db = bias ? t.grad_of(*bias) : nullptr;
        std::vector<T> col_buf(K * P);
        for (std::int64_t s = 0; s < n; ++s) {
          const T* go = gout.ptr() + sz(s) * out_stride;
          if (dw) {
            im2col(g, xv.ptr() + sz(s) * in_stride, col_buf.data());
            detail::gemm_nt(sz(cout), K, P, go, col_buf.data(), dw->ptr());
          }
          if (dx) {
            std::fill(col_buf.begin(), col_buf.end(), T{0});
            detail::gemm_tn(K, P, sz(cout), wv.ptr(), go, col_buf.data());
            col2im(g, col_buf.data(), dx->ptr() + sz(s) * in_stride);
          }
          if (db) {
            for (std::int64_t c = 0; c < cout; ++c) {
              T acc{0};
              for (std::size_t p = 0; p < P; ++p) acc += go[sz(c) * P + p];
              (*db)[sz(c)] += acc;
            }
          }
        }
      });
}

template <typename T>
Var batchnorm2d(Tape<T>& tape, Var input, Var gamma, Var beta, Tensor<T>& running_mean,
                Tensor<T>& running_var, Mode mode, const BatchNormOptions& opts) {
  const Tensor<T>& x = tape.value(input);
  require_rank(x.shape(), 4, "batchnorm2d", "input");
  const std::int64_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  const Shape cshape{c};
  if (tape.value(gamma).shape() != cshape || tape.value(beta).shape() != cshape ||
      running_mean.shape() != cshape || running_var.shape() != cshape) {
    throw ShapeError("batchnorm2d: per-channel tensors must have shape " + shape_str(cshape) +
                     " for input " + shape_str(x.shape()));
  }
  const std::size_t m = sz(n * hw);
  if (mode == Mode::Train && m < 2) {
    throw ShapeError("batchnorm2d: train mode needs N*H*W >= 2 per channel, input " +
                     shape_str(x.shape()));
  }
  const Tensor<T>& g = tape.value(gamma);
  const Tensor<T>& b = tape.value(beta);

  auto xhat = std::make_shared<Tensor<T>>(x.shape());
  auto invstd = std::make_shared<std::vector<T>>(sz(c));
  Tensor<T> out(x.shape());

  for (std::int64_t ch = 0; ch < c; ++ch) {
    T mean, var;
    if (mode == Mode::Train) {
      double s = 0.0;
      for (std::int64_t i = 0; i < n; ++i) {
        const T* p = x.ptr() + sz((i * c + ch) * hw);
        for (std::int64_t k = 0; k < hw; ++k) s += p[k];
      }
      const double mu = s / static_cast<double>(m);
      double ss = 0.0;
      for (std::int64_t i = 0; i < n; ++i) {
        const T* p = x.ptr() + sz((i * c + ch) * hw);
        for (std::int64_t k = 0; k < hw; ++k) {
          const double d = p[k] - mu;
          ss += d * d;
        }
      }
      const double biased = ss / static_cast<double>(m);
      mean = static_cast<T>(mu);
      var = static_cast<T>(biased);
      const double unbiased = ss / static_cast<double>(m - 1);
      running_mean[sz(ch)] =
          static_cast<T>((1.0 - opts.momentum) * running_mean[sz(ch)] + opts.momentum * mu);
      running_var[sz(ch)] =
          static_cast<T>((1.0 - opts.momentum) * running_var[sz(ch)] + opts.momentum * unbiased);
    } else {
      mean = running_mean[sz(ch)];
      var = running_var[sz(ch)];
    }
    const T is = static_cast<T>(1.0 / std::sqrt(static_cast<double>(var) + opts.eps));
    (*invstd)[sz(ch)] = is;
    for (std::int64_t i = 0; i < n; ++i) {
      const std::size_t base = sz((i * c + ch) * hw);
      for (std::int64_t k = 0; k < hw; ++k) {
        const T xh = (x[base + sz(k)] - mean) * is;
        (*xhat)[base + sz(k)] = xh;
        out[base + sz(k)] = g[sz(ch)] * xh + b[sz(ch)];
      }
    }
  }

  return tape.record(
      std::move(out), {input, gamma, beta},
      [=](const Tensor<T>&, const Tensor<T>& gout, Tape<T>& t) {
        const Tensor<T>& gv = t.value(gamma);
        Tensor<T>* dx = t.grad_of(input);
        Tensor<T>* dg = t.grad_of(gamma);
        Tensor<T>* db = t.grad_of(beta);
        for (std::int64_t ch = 0; ch < c; ++ch) {
          double sum_dy = 0.0, sum_dy_xhat = 0.0;
          for (std::int64_t i = 0; i < n; ++i) {
            const std::size_t base = sz((i * c + ch) * hw);
            for (std::int64_t k = 0; k < hw; ++k) {
              sum_dy += gout[base + sz(k)];
              sum_dy_xhat += gout[base + sz(k)] * (*xhat)[base + sz(k)];
            }
          }
          if (dg) (*dg)[sz(ch)] += static_cast<T>(sum_dy_xhat);
          if (db) (*db)[sz(ch)] += static_cast<T>(sum_dy);
          if (!dx) continue;
          const T scale = gv[sz(ch)] * (*invstd)[sz(ch)];
          if (mode == Mode::Train) {
            const T mean_dy = static_cast<T>(sum_dy / static_cast<double>(m));
            const T mean_dy_xhat = static_cast<T>(sum_dy_xhat / static_cast<double>(m));
            for (std::int64_t i = 0; i < n; ++i) {
              const std::size_t base = sz((i * c + ch) * hw);
              for (std::int64_t k = 0; k < hw; ++k) {
                const std::size_t e = base + sz(k);
                (*dx)[e] += scale * (gout[e] - mean_dy - (*xhat)[e] * mean_dy_xhat);
              }
            }
          } else {
            for (std::int64_t i = 0; i < n; ++i) {
              const std::size_t base = sz((i * c + ch) * hw);
              for (std::int64_t k = 0; k < hw; ++k) (*dx)[base + sz(k)] += scale * gout[base + sz(k)];
            }
          }
        }
      });
}

template <typename T>
Var relu(Tape<T>& tape, Var input) {
  const Tensor<T>& x = tape.value(input);
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > T{0} ? x[i] : T{0};
  if (tape.track_kinks()) {
    std::uint64_t h = x.size();
    std::uint64_t word = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      word = (word << 1) | (x[i] > T{0} ? 1u : 0u);
      if (i % 64 == 63) h = hash_combine(h, word), word = 0;
    }
    tape.note_kinks(hash_combine(h, word));
  }
  return tape.record(std::move(out), {input},
                     [=](const Tensor<T>& y, const Tensor<T>& gout, Tape<T>& t) {
                       Tensor<T>* dx = t.grad_of(input);
                       for (std::size_t i = 0; i < y.size(); ++i)
                         if (y[i] > T{0}) (*dx)[i] += gout[i];
                     });
}

template <typename T>
Var dense(Tape<T>& tape, Var input, Var weight, Var bias) {
  const Tensor<T>& x = tape.value(input);
  const Tensor<T>& w = tape.value(weight);
  require_rank(x.shape(), 2, "dense", "input");
  require_rank(w.shape(), 2, "dense", "weight");
  const std::int64_t n = x.dim(0), f = x.dim(1), o = w.dim(0);
  if (w.dim(1) != f) {
    throw ShapeError("dense: weight " + shape_str(w.shape()) + " expects " +
                     std::to_string(w.dim(1)) + " features, input " + shape_str(x.shape()) +
                     " has " + std::to_string(f));
  }
  const Tensor<T>& b = tape.value(bias);
  if (b.shape() != Shape{o}) {
    throw ShapeError("dense: bias " + shape_str(b.shape()) + " does not match output width " +
                     std::to_string(o));
  }
  Tensor<T> out({n, o});
  detail::gemm_nt(sz(n), sz(o), sz(f), x.ptr(), w.ptr(), out.ptr());
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < o; ++j) out[sz(i * o + j)] += b[sz(j)];

  return tape.record(std::move(out), {input, weight, bias},
                     [=](const Tensor<T>&, const Tensor<T>& gout, Tape<T>& t) {
                       if (Tensor<T>* dx = t.grad_of(input))
                         detail::gemm_nn(sz(n), sz(f), sz(o), gout.ptr(), t.value(weight).ptr(),
                                         dx->ptr());
                       if (Tensor<T>* dw = t.grad_of(weight))
                         detail::gemm_tn(sz(o), sz(f), sz(n), gout.ptr(), t.value(input).ptr(),
                                         dw->ptr());
                       if (Tensor<T>* db = t.grad_of(bias))
                         for (std::int64_t i = 0; i < n; ++i)
                           for (std::int64_t j = 0; j < o; ++j) (*db)[sz(j)] += gout[sz(i * o + j)];
                     });
}

template <typename T>
Var global_avg_pool(Tape<T>& tape, Var input) {
  const Tensor<T>& x = tape.value(input);
  require_rank(x.shape(), 4, "global_avg_pool", "input");
  const std::int64_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  Tensor<T> out({n, c});
  for (std::int64_t i = 0; i < n * c; ++i) {
    T acc{0};
    const T* p = x.ptr() + sz(i * hw);
    for (std::int64_t k = 0; k < hw; ++k) acc += p[k];
    out[sz(i)] = acc / static_cast<T>(hw);
  }
  return tape.record(std::move(out), {input},
                     [=](const Tensor<T>&, const Tensor<T>& gout, Tape<T>& t) {
                       Tensor<T>* dx = t.grad_of(input);
                       const T inv = T{1} / static_cast<T>(hw);
                       for (std::int64_t i = 0; i < n * c; ++i) {
                         const T gi = gout[sz(i)] * inv;
                         T* p = dx->ptr() + sz(i * hw);
                         for (std::int64_t k = 0; k < hw; ++k) p[k] += gi;
                       }
                     });
}

template <typename T>
Var weighted_mixture(Tape<T>& tape, std::span<const Var> experts, Var gates) {
  if (experts.empty()) throw ShapeError("weighted_mixture: needs at least one expert");
  const Shape& eshape = tape.value(experts[0]).shape();
  for (Var e : experts) {
    if (tape.value(e).shape() != eshape) {
      throw ShapeError("weighted_mixture: expert shapes differ: " + shape_str(eshape) + " vs " +
                       shape_str(tape.value(e).shape()));
    }
  }
  const Tensor<T>& g = tape.value(gates);
  const std::int64_t n = eshape.at(0);
  const std::int64_t e_count = static_cast<std::int64_t>(experts.size());
  if (g.shape() != Shape{n, e_count}) {
    throw ShapeError("weighted_mixture: gates " + shape_str(g.shape()) + " must be " +
                     shape_str({n, e_count}));
  }
  const std::size_t per = shape_numel(eshape) / sz(n);
  Tensor<T> out(eshape);
  for (std::int64_t e = 0; e < e_count; ++e) {
    const Tensor<T>& v = tape.value(experts[sz(e)]);
    for (std::int64_t i = 0; i < n; ++i) {
      const T gi = g[sz(i * e_count + e)];
      const T* src = v.ptr() + sz(i) * per;
      T* dst = out.ptr() + sz(i) * per;
      for (std::size_t k = 0; k < per; ++k) dst[k] += gi * src[k];
    }
  }
  std::vector<Var> inputs(experts.begin(), experts.end());
  inputs.push_back(gates);
  return tape.record(std::move(out), inputs,
                     [=](const Tensor<T>&, const Tensor<T>& gout, Tape<T>& t) {
                       const Tensor<T>& gv = t.value(gates);
                       Tensor<T>* dg = t.grad_of(gates);
                       for (std::int64_t e = 0; e < e_count; ++e) {
                         const Var ev = inputs[sz(e)];
                         const Tensor<T>& v = t.value(ev);
                         Tensor<T>* de = t.grad_of(ev);
                         for (std::int64_t i = 0; i < n; ++i) {
                           const T* go = gout.ptr() + sz(i) * per;
                           const T* src = v.ptr() + sz(i) * per;
                           if (de) {
                             const T gi = gv[sz(i * e_count + e)];
                             T* d = de->ptr() + sz(i) * per;
                             for (std::size_t k = 0; k < per; ++k) d[k] += gi * go[k];
                           }
                           if (dg) {
                             T acc{0};
                             for (std::size_t k = 0; k < per; ++k) acc += go[k] * src[k];
                             (*dg)[sz(i * e_count + e)] += acc;
                           }
                         }
                       }
                     });
}

template <typename T>
std::vector<T> softmax_row(std::span<const T> logits) {
  std::vector<T> p(logits.size());
  const T mx = *std::max_element(logits.begin(), logits.end());
  T total{0};
  for (std::size_t k = 0; k < logits.size(); ++k) total += (p[k] = std::exp(logits[k] - mx));
  for (auto& v : p) v /= total;
  return p;
}

template <typename T>
Var softmax(Tape<T>& tape, Var logits) {
  const Tensor<T>& x = tape.value(logits);
  require_rank(x.shape(), 2, "softmax", "logits");
  const std::int64_t n = x.dim(0), k = x.dim(1);
  Tensor<T> out(x.shape());
  for (std::int64_t i = 0; i < n; ++i) {
    auto p = softmax_row<T>(x.data().subspan(sz(i * k), sz(k)));
    std::copy(p.begin(), p.end(), out.ptr() + sz(i * k));
  }
  return tape.record(std::move(out), {logits},
                     [=](const Tensor<T>& y, const Tensor<T>& gout, Tape<T>& t) {
                       Tensor<T>* dx = t.grad_of(logits);
                       for (std::int64_t i = 0; i < n; ++i) {
                         T inner{0};
                         for (std::int64_t j = 0; j < k; ++j)
                           inner += gout[sz(i * k + j)] * y[sz(i * k + j)];
                         for (std::int64_t j = 0; j < k; ++j)
                           (*dx)[sz(i * k + j)] += y[sz(i * k + j)] * (gout[sz(i * k + j)] - inner);
                       }
                     });
}

template <typename T>
Var log_softmax_nll(Tape<T>& tape, Var logits, std::span<const int> labels) {
  const Tensor<T>& x = tape.value(logits);
  require_rank(x.shape(), 2, "log_softmax_nll", "logits");
  const std::int64_t n = x.dim(0), k = x.dim(1);
  if (labels.size() != sz(n)) {
    throw ShapeError("log_softmax_nll: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(n) + " rows");
  }
  auto probs = std::make_shared<Tensor<T>>(x.shape());
  auto lab = std::make_shared<std::vector<int>>(labels.begin(), labels.end());
  double loss = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const int y = labels[sz(i)];
    if (y < 0 || y >= k) {
      throw ShapeError("log_softmax_nll: label " + std::to_string(y) + " at row " +
                       std::to_string(i) + " outside [0, " + std::to_string(k) + ")");
    }
    const T* row = x.ptr() + sz(i * k);
    const T mx = *std::max_element(row, row + k);
    double total = 0.0;
    for (std::int64_t j = 0; j < k; ++j) total += std::exp(static_cast<double>(row[j] - mx));
    const double log_z = std::log(total);
    for (std::int64_t j = 0; j < k; ++j)
      (*probs)[sz(i * k + j)] = static_cast<T>(std::exp(static_cast<double>(row[j] - mx) - log_z));
    loss -= static_cast<double>(row[y] - mx) - log_z;
  }
  Tensor<T> out({1}, static_cast<T>(loss / static_cast<double>(n)));
  return tape.record(std::move(out), {logits},
                     [=](const Tensor<T>&, const Tensor<T>& gout, Tape<T>& t) {
                       Tensor<T>* dx = t.grad_of(logits);
                       const T scale = gout[0] / static_cast<T>(n);
                       for (std::int64_t i = 0; i < n; ++i) {
                         for (std::int64_t j = 0; j < k; ++j) {
                           const T onehot = (*lab)[sz(i)] == j ? T{1} : T{0};
                           (*dx)[sz(i * k + j)] += scale * ((*probs)[sz(i * k + j)] - onehot);
                         }
                       }
                     });
}

template <typename T>
Var add(Tape<T>& tape, Var a, Var b) {
  const Tensor<T>& x = tape.value(a);
  const Tensor<T>& y = tape.value(b);
  if (x.shape() != y.shape()) {
    throw ShapeError("add: shapes differ: " + shape_str(x.shape()) + " vs " + shape_str(y.shape()));
  }
  Tensor<T> out = x;
  out += y;
  return tape.record(std::move(out), {a, b},
                     [=](const Tensor<T>&, const Tensor<T>& gout, Tape<T>& t) {
                       if (Tensor<T>* da = t.grad_of(a)) *da += gout;
                       if (Tensor<T>* db = t.grad_of(b)) *db += gout;
                     });
}

template <typename T>
Var sum(Tape<T>& tape, Var input) {
  const Tensor<T>& x = tape.value(input);
  double acc = 0.0;
  for (T v : x.data()) acc += v;
  return tape.record(Tensor<T>({1}, static_cast<T>(acc)), {input},
                     [=](const Tensor<T>&, const Tensor<T>& gout, Tape<T>& t) {
                       Tensor<T>* dx = t.grad_of(input);
                       for (auto& v : dx->data()) v += gout[0];
                     });
}

template <typename T>
Var dot_constant(Tape<T>& tape, Var input, const Tensor<T>& weights) {
  const Tensor<T>& x = tape.value(input);
  if (x.shape() != weights.shape()) {
    throw ShapeError("dot_constant: shapes differ: " + shape_str(x.shape()) + " vs " +
                     shape_str(weights.shape()));
  }
  auto w = std::make_shared<Tensor<T>>(weights);
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += static_cast<double>(x[i]) * (*w)[i];
  return tape.record(Tensor<T>({1}, static_cast<T>(acc)), {input},
                     [=](const Tensor<T>&, const Tensor<T>& gout, Tape<T>& t) {
                       Tensor<T>* dx = t.grad_of(input);
                       for (std::size_t i = 0; i < dx->size(); ++i) (*dx)[i] += gout[0] * (*w)[i];
                     });
}

#define RESMIX_INSTANTIATE_OPS(T)                                                              \
  template Var conv2d<T>(Tape<T>&, Var, Var, std::optional<Var>, int, int);                   \
  template Var batchnorm2d<T>(Tape<T>&, Var, Var, Var, Tensor<T>&, Tensor<T>&, Mode,          \
                              const BatchNormOptions&);                                        \
  template Var relu<T>(Tape<T>&, Var);                                                         \
  template Var dense<T>(Tape<T>&, Var, Var, Var);                                              \
  template Var global_avg_pool<T>(Tape<T>&, Var);                                              \
  template Var weighted_mixture<T>(Tape<T>&, std::span<const Var>, Var);                       \
  template Var softmax<T>(Tape<T>&, Var);                                                      \
  template Var log_softmax_nll<T>(Tape<T>&, Var, std::span<const int>);                        \
  template Var add<T>(Tape<T>&, Var, Var);                                                     \
  template Var sum<T>(Tape<T>&, Var);                                                          \
  template Var dot_constant<T>(Tape<T>&, Var, const Tensor<T>&);                               \
  template std::vector<T> softmax_row<T>(std::span<const T>);

RESMIX_INSTANTIATE_OPS(float)
RESMIX_INSTANTIATE_OPS(double)

#undef RESMIX_INSTANTIATE_OPS

}  // namespace resmix
