#include "resmix/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "resmix/error.hpp"
#include "resmix/ops.hpp"
#include "resmix/rng.hpp"

namespace resmix::verify {

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-12});
}

nlohmann::json GradCheckReport::to_json() const {
  nlohmann::json t = nlohmann::json::array();
  for (const auto& c : tensors) {
    t.push_back({{"name", c.name},
                 {"checked", c.checked},
                 {"skipped", c.skipped},
                 {"max_rel_error", c.max_rel_error},
                 {"worst_index", c.worst_index},
                 {"analytic", c.analytic},
                 {"numeric", c.numeric}});
  }
  return {{"target", target},   {"dtype", dtype},     {"step", step},       {"threshold", threshold},
          {"tensors", t},       {"max_rel_error", max_rel_error}, {"failure", failure}, {"pass", pass}};
}

nlohmann::json GradCheckSuite::to_json() const {
  nlohmann::json r = nlohmann::json::array();
  for (const auto& rep : reports) r.push_back(rep.to_json());
  return {{"reports", std::move(r)}, {"pass", pass}};
}

namespace {

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed, std::size_t tensor) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (k == 0 || k >= n) return idx;
  Rng rng = Rng::stream(seed, "gradcheck", tensor);
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

struct Pass {
  double loss;
  std::uint64_t kinks;
};

Pass run(const LossFn& loss) {
  Tape<double> tape;
  tape.set_track_kinks(true);
  const Var l = loss(tape);
  const Tensor<double>& v = tape.value(l);
  if (v.size() != 1) throw ShapeError("gradcheck: loss must be a single element, got " + shape_str(v.shape()));
  return {v[0], tape.kink_signature()};
}

}  // namespace

GradCheckReport gradcheck(const std::string& target, ParameterSet<double>& params, const LossFn& loss,
                          const GradCheckOptions& opts) {
  GradCheckReport rep;
  rep.target = target;
  rep.step = opts.step;
  rep.threshold = opts.threshold;

  params.zero_grad();
  std::uint64_t base_kinks = 0;
  {
    Tape<double> tape;
    tape.set_track_kinks(true);
    const Var l = loss(tape);
    base_kinks = tape.kink_signature();
    tape.backward(l);
  }

  std::size_t tensor_id = 0;
  for (auto& p : params.params()) {
    TensorCheck tc;
    tc.name = p.name;
    const Tensor<double> analytic = p.grad;
    for (std::size_t i : sample_indices(p.value.size(), opts.samples_per_tensor, opts.seed, tensor_id)) {
      const double orig = p.value[i];
      p.value[i] = orig + opts.step;
      const Pass plus = run(loss);
      p.value[i] = orig - opts.step;
      const Pass minus = run(loss);
      p.value[i] = orig;
      if (plus.kinks != base_kinks || minus.kinks != base_kinks) {
        ++tc.skipped;
        continue;
      }
      const double numeric = (plus.loss - minus.loss) / (2 * opts.step);
      const double a = analytic[i];
      if (!std::isfinite(a) || !std::isfinite(numeric)) {
        rep.failure = "non-finite gradient at " + p.name + "[" + std::to_string(i) + "]";
        rep.pass = false;
        rep.tensors.push_back(tc);
        return rep;
      }
      const double err = relative_error(a, numeric);
      ++tc.checked;
      if (tc.checked == 1 || err > tc.max_rel_error) {
        tc.max_rel_error = err;
        tc.worst_index = i;
        tc.analytic = a;
        tc.numeric = numeric;
      }
    }
    rep.max_rel_error = std::max(rep.max_rel_error, tc.max_rel_error);
    rep.tensors.push_back(tc);
    ++tensor_id;
  }
  params.zero_grad();
  bool any_checked = false;
  for (const auto& t : rep.tensors) any_checked = any_checked || t.checked > 0;
  rep.pass = any_checked && rep.max_rel_error < opts.threshold;
  if (!any_checked) rep.failure = "every sampled scalar sat on a relu kink";
  return rep;
}

namespace {

Tensor<double> random_tensor(Rng& rng, Shape shape, double scale = 1.0) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.data()) v = scale * rng.normal();
  return t;
}

// Values with |v| in [0.1, 1], random sign.
Tensor<double> away_from_zero(Rng& rng, Shape shape) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.data()) v = (rng.below(2) ? 1.0 : -1.0) * (0.1 + 0.9 * rng.uniform());
  return t;
}

}  // namespace

GradCheckReport gradcheck_op(const std::string& op, const GradCheckOptions& opts) {
  Rng rng = Rng::stream(opts.seed, "gradcheck-fixture", hash_combine(0, op));
  ParameterSet<double> ps;
  auto input = [&](const std::string& name, Tensor<double> v) -> Parameter<double>& {
    return ps.add(name, std::move(v), false);
  };
  // Projection onto fixed weights in [0.5, 1.5) turns any output into a scalar
  // loss; positive weights keep summed gradients (bias, pooling) away from
  // zero, where relative error is ill-conditioned.
  auto project = [](Tape<double>& t, Var out, std::uint64_t seed) {
    Rng r = Rng::stream(seed, "gradcheck-projection");
    Tensor<double> w(t.value(out).shape());
    for (auto& v : w.data()) v = 0.5 + r.uniform();
    return dot_constant(t, out, w);
  };
  const std::uint64_t pseed = opts.seed;
  LossFn fn;

  if (op == "conv2d[s2p1]" || op == "conv2d") {
    auto& x = input("input", random_tensor(rng, {2, 3, 5, 5}));
    auto& w = input("weight", random_tensor(rng, {4, 3, 3, 3}));
    auto& b = input("bias", random_tensor(rng, {4}));
    fn = [&, pseed](Tape<double>& t) {
      return project(t, conv2d(t, t.parameter(x), t.parameter(w), t.parameter(b), 2, 1), pseed);
    };
  } else if (op == "conv2d[s1p0]") {
    auto& x = input("input", random_tensor(rng, {2, 2, 4, 4}));
    auto& w = input("weight", random_tensor(rng, {3, 2, 3, 3}));
    fn = [&, pseed](Tape<double>& t) {
      return project(t, conv2d(t, t.parameter(x), t.parameter(w), std::nullopt, 1, 0), pseed);
    };
  } else if (op == "conv2d[1x1s2]") {
    auto& x = input("input", random_tensor(rng, {2, 3, 4, 4}));
    auto& w = input("weight", random_tensor(rng, {2, 3, 1, 1}));
    fn = [&, pseed](Tape<double>& t) {
      return project(t, conv2d(t, t.parameter(x), t.parameter(w), std::nullopt, 2, 0), pseed);
    };
  } else if (op == "batchnorm2d") {
    auto& x = input("input", random_tensor(rng, {2, 3, 4, 4}));
    auto& g = input("gamma", random_tensor(rng, {3}));
    auto& b = input("beta", random_tensor(rng, {3}));
    auto rm = std::make_shared<Tensor<double>>(Shape{3}, 0.0);
    auto rv = std::make_shared<Tensor<double>>(Shape{3}, 1.0);
    fn = [&, rm, rv, pseed](Tape<double>& t) {
      return project(t, batchnorm2d(t, t.parameter(x), t.parameter(g), t.parameter(b), *rm, *rv, Mode::Train),
                     pseed);
    };
  } else if (op == "relu") {
    auto& x = input("input", away_from_zero(rng, {2, 3, 3, 3}));
    fn = [&, pseed](Tape<double>& t) { return project(t, relu(t, t.parameter(x)), pseed); };
  } else if (op == "dense") {
    auto& x = input("input", random_tensor(rng, {3, 5}));
    auto& w = input("weight", random_tensor(rng, {4, 5}));
    auto& b = input("bias", random_tensor(rng, {4}));
    fn = [&, pseed](Tape<double>& t) {
      return project(t, dense(t, t.parameter(x), t.parameter(w), t.parameter(b)), pseed);
    };
  } else if (op == "global_avg_pool") {
    auto& x = input("input", random_tensor(rng, {2, 3, 3, 3}));
    fn = [&, pseed](Tape<double>& t) { return project(t, global_avg_pool(t, t.parameter(x)), pseed); };
  } else if (op == "weighted_mixture") {
    auto& e0 = input("expert0", random_tensor(rng, {2, 3, 2, 2}));
    auto& e1 = input("expert1", random_tensor(rng, {2, 3, 2, 2}));
    auto& e2 = input("expert2", random_tensor(rng, {2, 3, 2, 2}));
    auto& g = input("gates", random_tensor(rng, {2, 3}));
    fn = [&, pseed](Tape<double>& t) {
      const std::vector<Var> ex{t.parameter(e0), t.parameter(e1), t.parameter(e2)};
      return project(t, weighted_mixture(t, std::span<const Var>(ex), t.parameter(g)), pseed);
    };
  } else if (op == "softmax") {
    auto& x = input("logits", random_tensor(rng, {3, 4}));
    fn = [&, pseed](Tape<double>& t) { return project(t, softmax(t, t.parameter(x)), pseed); };
  } else if (op == "log_softmax_nll") {
    auto& x = input("logits", random_tensor(rng, {4, 3}));
    const std::vector<int> labels{0, 2, 1, 2};
    fn = [&, labels](Tape<double>& t) {
      return log_softmax_nll(t, t.parameter(x), std::span<const int>(labels));
    };
  } else if (op == "add") {
    auto& a = input("a", random_tensor(rng, {2, 3, 2, 2}));
    auto& b = input("b", random_tensor(rng, {2, 3, 2, 2}));
    fn = [&, pseed](Tape<double>& t) { return project(t, add(t, t.parameter(a), t.parameter(b)), pseed); };
  } else if (op == "sum") {
    auto& x = input("input", random_tensor(rng, {2, 3, 2}));
    fn = [&](Tape<double>& t) { return sum(t, t.parameter(x)); };
  } else if (op == "dot_constant") {
    auto& x = input("input", random_tensor(rng, {2, 5}));
    fn = [&, pseed](Tape<double>& t) { return project(t, t.parameter(x), pseed); };
  } else {
    throw ValidationError("no gradcheck fixture for op '" + op + "'");
  }
  GradCheckOptions o = opts;
  o.samples_per_tensor = 0;
  return gradcheck(op, ps, fn, o);
}

GradCheckReport gradcheck_model(const nn::ModelConfig& cfg, int batch, int size, Mode mode,
                                const GradCheckOptions& opts) {
  auto net = nn::Network<double>::build(cfg, opts.seed);
  Rng rng = Rng::stream(opts.seed, "gradcheck-input");
  Tensor<double> x({batch, 3, size, size});
  for (auto& v : x.data()) v = rng.uniform();
  std::vector<int> labels(static_cast<std::size_t>(batch));
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 2);
  const nn::Network<double>& model = *net;
  LossFn fn = [&](Tape<double>& t) {
    const Var logits = model.forward(t, t.constant(x), mode);
    return log_softmax_nll(t, logits, std::span<const int>(labels));
  };
  const std::string tag = std::string(mode == Mode::Train ? "train" : "eval") + "," + std::to_string(batch) +
                          "x3x" + std::to_string(size) + "x" + std::to_string(size);
  return gradcheck(cfg.label() + "[" + tag + "]", net->params(), fn, opts);
}

GradCheckSuite gradcheck_suite(bool full, std::uint64_t seed) {
  GradCheckSuite s;
  GradCheckOptions op_opts;
  op_opts.step = 1e-5;
  op_opts.threshold = 1e-5;
  op_opts.seed = seed;
  for (std::string_view name : differentiable_ops()) {
    if (name == "conv2d") {
      for (const char* v : {"conv2d[s2p1]", "conv2d[s1p0]", "conv2d[1x1s2]"})
        s.reports.push_back(gradcheck_op(v, op_opts));
    } else {
      s.reports.push_back(gradcheck_op(std::string(name), op_opts));
    }
  }
  if (full) {
    GradCheckOptions m;
    m.step = 1e-4;
    m.threshold = 1e-5;
    m.samples_per_tensor = 64;
    m.seed = seed;
    s.reports.push_back(gradcheck_model(nn::ModelConfig::resmixnet(2, 1), 2, kModelCheckSize, Mode::Train, m));
  }
  s.pass = std::all_of(s.reports.begin(), s.reports.end(), [](const auto& r) { return r.pass; });
  return s;
}

// --- convolution oracle -------------------------------------------------------

template <typename T>
Tensor<T> conv_naive(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* bias, int stride, int pad) {
  const std::int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::int64_t O = w.dim(0), KH = w.dim(2), KW = w.dim(3);
  if (w.dim(1) != C) throw ShapeError("conv_naive: channel mismatch");
  const std::int64_t HO = (H + 2 * pad - KH) / stride + 1, WO = (W + 2 * pad - KW) / stride + 1;
  Tensor<T> out({N, O, HO, WO});
  for (std::int64_t n = 0; n < N; ++n)
    for (std::int64_t o = 0; o < O; ++o)
      for (std::int64_t i = 0; i < HO; ++i)
        for (std::int64_t j = 0; j < WO; ++j) {
          double acc = 0;
          for (std::int64_t c = 0; c < C; ++c)
            for (std::int64_t ky = 0; ky < KH; ++ky)
              for (std::int64_t kx = 0; kx < KW; ++kx) {
                const std::int64_t y = i * stride - pad + ky, xx = j * stride - pad + kx;
                if (y < 0 || y >= H || xx < 0 || xx >= W) continue;
                acc += static_cast<double>(x[x.offset4(n, c, y, xx)]) * static_cast<double>(w[w.offset4(o, c, ky, kx)]);
              }
          if (bias) acc += static_cast<double>((*bias)[static_cast<std::size_t>(o)]);
          out[out.offset4(n, o, i, j)] = static_cast<T>(acc);
        }
  return out;
}

nlohmann::json ConvDiffReport::to_json() const {
  return {{"trials", trials}, {"exact", exact}, {"max_abs_diff", max_abs_diff}, {"failures", failures}, {"pass", pass}};
}

ConvDiffReport conv_differential(int trials, std::uint64_t seed) {
  ConvDiffReport rep;
  for (int t = 0; t < trials; ++t) {
    Rng rng = Rng::stream(seed, "conv-diff", static_cast<std::uint64_t>(t));
    const int k = rng.below(2) ? 3 : 1;
    const int stride = static_cast<int>(rng.range(1, 2));
    const int pad = static_cast<int>(rng.range(0, 1));
    const std::int64_t n = rng.range(1, 3), cin = rng.range(1, 4), cout = rng.range(1, 5);
    const std::int64_t h = rng.range(k, 9), w = rng.range(k, 9);
    const bool with_bias = rng.below(2) == 1;
    Tensor<double> x({n, cin, h, w}), wt({cout, cin, k, k}), b({cout});
    for (auto& v : x.data()) v = rng.normal();
    for (auto& v : wt.data()) v = rng.normal();
    for (auto& v : b.data()) v = rng.normal();

    Tape<double> tape;
    std::optional<Var> bv;
    if (with_bias) bv = tape.constant(b);
    const Var y = conv2d(tape, tape.constant(x), tape.constant(wt), bv, stride, pad);
    const Tensor<double> ref = conv_naive(x, wt, with_bias ? &b : nullptr, stride, pad);
    const Tensor<double>& got = tape.value(y);
    ++rep.trials;
    double diff = got.shape() == ref.shape() ? 0.0 : INFINITY;
    if (got.shape() == ref.shape())
      for (std::size_t i = 0; i < got.size(); ++i) diff = std::max(diff, std::abs(got[i] - ref[i]));
    rep.max_abs_diff = std::max(rep.max_abs_diff, diff);
    if (got == ref) {
      ++rep.exact;
    } else {
      rep.failures.push_back("trial " + std::to_string(t) + ": input " + shape_str(x.shape()) + " kernel " +
                             std::to_string(k) + " stride " + std::to_string(stride) + " pad " + std::to_string(pad) +
                             " max diff " + std::to_string(diff));
    }
  }
  rep.pass = rep.trials > 0 && rep.exact == rep.trials;
  return rep;
}

// --- budget -------------------------------------------------------------------

nlohmann::json BudgetCheck::to_json() const {
  return {{"model", model}, {"count", count}, {"budget", budget}, {"pass", pass}};
}

BudgetCheck enforce_budget(const nn::ModelConfig& cfg) {
  BudgetCheck b;
  b.model = cfg.label();
  b.count = nn::count_params(cfg).total;
  b.budget = nn::resnet26_param_count();
  b.pass = b.count <= b.budget;
  return b;
}

template Tensor<float> conv_naive<float>(const Tensor<float>&, const Tensor<float>&, const Tensor<float>*, int, int);
template Tensor<double> conv_naive<double>(const Tensor<double>&, const Tensor<double>&, const Tensor<double>*, int,
                                           int);

}  // namespace resmix::verify
