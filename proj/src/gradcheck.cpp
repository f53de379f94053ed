#include "grfcnn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>

#include "grfcnn/errors.hpp"
#include "grfcnn/labels.hpp"
#include "grfcnn/layers.hpp"
#include "grfcnn/network.hpp"

namespace grfcnn {
namespace {

struct Probe {
  Tensor* value;
  const Tensor* analytic;
};

Tensor RandomTensor(const Shape& shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(shape);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

double Dot(const Tensor& a, const Tensor& b) {
  return std::inner_product(a.data().begin(), a.data().end(), b.data().begin(), 0.0);
}

// Perturbs sampled coordinates of each probed tensor in place and folds the
// worst relative error into `row`.
void CompareProbes(const std::vector<Probe>& probes, const std::function<double()>& loss,
                   const GradcheckOptions& opt, std::mt19937_64& rng, GradcheckRow& row) {
  for (const Probe& p : probes) {
    const std::size_t n = p.value->size();
    std::vector<std::size_t> coords(n);
    std::iota(coords.begin(), coords.end(), 0);
    if (n > opt.max_coordinates) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(opt.max_coordinates);
    }
    for (std::size_t i : coords) {
      double& x = p.value->data()[i];
      const double saved = x;
      x = saved + opt.epsilon;
      const double plus = loss();
      x = saved - opt.epsilon;
      const double minus = loss();
      x = saved;
      const double numeric = (plus - minus) / (2.0 * opt.epsilon);
      row.max_rel_error =
          std::max(row.max_rel_error, relative_error((*p.analytic)[i], numeric));
      row.checked += 1;
    }
  }
}

GradcheckRow CheckConv(const ModelConfig& cfg, const GradcheckOptions& opt) {
  GradcheckRow row{"conv", opt.trials, 0, 0.0, opt.tolerance, false};
  for (std::size_t t = 0; t < opt.trials; ++t) {
    std::mt19937_64 rng(opt.seed + t);
    const std::size_t stage = t % kConvStages;
    const std::size_t c_in = stage == 0 ? cfg.input_channels : cfg.filters(stage - 1);
    const std::size_t c_out = cfg.filters(stage);
    ConvLayer layer;
    layer.weights = RandomTensor({cfg.kernel, cfg.kernel, c_in, c_out}, rng);
    layer.bias = RandomTensor({c_out}, rng);
    Tensor x = RandomTensor({5 + t % 3, 4 + t % 2, c_in}, rng);
    ConvCache cache;
    const Tensor y = conv_forward(x, layer, &cache);
    const Tensor r = RandomTensor(y.shape(), rng);
    const ConvGrads g = conv_backward(r, cache, layer);
    const auto loss = [&] { return Dot(conv_forward(x, layer), r); };
    CompareProbes({{&x, &g.input}, {&layer.weights, &g.weights}, {&layer.bias, &g.bias}},
                  loss, opt, rng, row);
  }
  return row;
}

GradcheckRow CheckDense(const ModelConfig& cfg, const GradcheckOptions& opt) {
  GradcheckRow row{"dense", opt.trials, 0, 0.0, opt.tolerance, false};
  const Shape flat = activation_shapes(cfg)[2 * kConvStages];
  for (std::size_t t = 0; t < opt.trials; ++t) {
    std::mt19937_64 rng(opt.seed + 100 + t);
    // Alternate between the hidden and the output layer widths; the hidden
    // layer's fan-in is cut to keep the trial cheap.
    const bool hidden = t % 2 == 0;
    const std::size_t n_in = hidden ? std::min<std::size_t>(flat[0], 48) : cfg.hidden_units();
    const std::size_t n_out = hidden ? cfg.hidden_units() : cfg.classes;
    DenseLayer layer{RandomTensor({n_in, n_out}, rng), RandomTensor({n_out}, rng)};
    Tensor x = RandomTensor({n_in}, rng);
    const Tensor y = dense_forward(x, layer);
    const Tensor r = RandomTensor(y.shape(), rng);
    const DenseGrads g = dense_backward(r, x, layer);
    const auto loss = [&] { return Dot(dense_forward(x, layer), r); };
    CompareProbes({{&x, &g.input}, {&layer.weights, &g.weights}, {&layer.bias, &g.bias}},
                  loss, opt, rng, row);
  }
  return row;
}

GradcheckRow CheckRelu(const ModelConfig& cfg, const GradcheckOptions& opt) {
  GradcheckRow row{"relu", opt.trials, 0, 0.0, opt.tolerance, false};
  for (std::size_t t = 0; t < opt.trials; ++t) {
    std::mt19937_64 rng(opt.seed + 200 + t);
    Tensor x = RandomTensor({6, 4, cfg.filters(t % kConvStages)}, rng);
    const Tensor r = RandomTensor(x.shape(), rng);
    const Tensor g = relu_backward(r, x);
    const auto loss = [&] { return Dot(relu_forward(x), r); };
    CompareProbes({{&x, &g}}, loss, opt, rng, row);
  }
  return row;
}

GradcheckRow CheckMaxpool(const ModelConfig& cfg, const GradcheckOptions& opt) {
  GradcheckRow row{"maxpool", opt.trials, 0, 0.0, opt.tolerance, false};
  for (std::size_t t = 0; t < opt.trials; ++t) {
    std::mt19937_64 rng(opt.seed + 300 + t);
    // Odd sizes exercise the floor-discarded border.
    Tensor x = RandomTensor({6 + t % 3, 4 + t % 2, cfg.filters(t % kConvStages)}, rng);
    PoolCache cache;
    const Tensor y = maxpool_forward(x, cfg.pool_size, cfg.pool_stride, &cache);
    const Tensor r = RandomTensor(y.shape(), rng);
    const Tensor g = maxpool_backward(r, cache);
    const auto loss = [&] { return Dot(maxpool_forward(x, cfg.pool_size, cfg.pool_stride), r); };
    CompareProbes({{&x, &g}}, loss, opt, rng, row);
  }
  return row;
}

GradcheckRow CheckSoftmaxXent(const ModelConfig& cfg, const GradcheckOptions& opt) {
  GradcheckRow row{"softmax_xent", opt.trials, 0, 0.0, opt.tolerance, false};
  for (std::size_t t = 0; t < opt.trials; ++t) {
    std::mt19937_64 rng(opt.seed + 400 + t);
    Tensor logits = RandomTensor({cfg.classes}, rng, -3.0, 3.0);
    const Tensor target = OneHot(ClassFromIndex(t % kNumClasses));
    const Tensor g = softmax_xent_backward(softmax_xent_forward(logits, target).probs, target);
    const auto loss = [&] { return softmax_xent_forward(logits, target).loss; };
    CompareProbes({{&logits, &g}}, loss, opt, rng, row);
  }
  return row;
}

GradcheckRow CheckNetwork(const ModelConfig& cfg, const GradcheckOptions& opt) {
  GradcheckRow row{"network", 1, 0, 0.0, opt.network_tolerance, false};
  std::mt19937_64 rng(opt.seed + 500);
  Network net(cfg, opt.seed);
  const Tensor x = RandomTensor({cfg.input_height, cfg.input_width}, rng, 0.0, 1.0);
  const Tensor target = OneHot(ClassLabel::kPD2);
  Network::Workspace ws;
  net.ForwardLoss(x, target, ws);
  const Gradients g = net.Backward(ws, target);
  std::vector<Probe> probes;
  std::vector<ParamRef> params = net.Parameters();
  for (std::size_t i = 0; i < params.size(); ++i) probes.push_back({params[i].value, &g.tensors[i]});
  Network::Workspace scratch;
  const auto loss = [&] { return net.ForwardLoss(x, target, scratch).loss; };
  CompareProbes(probes, loss, opt, rng, row);
  return row;
}

}  // namespace

double relative_error(double analytic, double numeric) {
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  if (scale == 0.0) return 0.0;
  return std::abs(analytic - numeric) / scale;
}

std::vector<GradcheckRow> run_gradcheck(const GradcheckOptions& options) {
  if (options.trials == 0 || options.max_coordinates == 0) {
    throw UsageError("gradcheck needs at least one trial and one coordinate");
  }
  if (!(options.epsilon > 0.0) || !(options.tolerance > 0.0) ||
      !(options.network_tolerance > 0.0)) {
    throw UsageError("gradcheck epsilon and tolerances must be positive");
  }
  ModelConfig cfg;
  cfg.scale_divisor = options.scale_divisor;
  cfg.Validate();

  std::vector<GradcheckRow> rows = {CheckConv(cfg, options), CheckDense(cfg, options),
                                    CheckRelu(cfg, options), CheckMaxpool(cfg, options),
                                    CheckSoftmaxXent(cfg, options)};
  if (options.include_network) rows.push_back(CheckNetwork(cfg, options));
  for (GradcheckRow& r : rows) r.passed = r.max_rel_error <= r.tolerance;
  return rows;
}

std::string format_gradcheck_table(const std::vector<GradcheckRow>& rows) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof(line), "%-14s %7s %9s %14s %10s  %s\n", "layer", "trials",
                "checked", "max_rel_error", "tolerance", "result");
  os << line;
  for (const GradcheckRow& r : rows) {
    std::snprintf(line, sizeof(line), "%-14s %7zu %9zu %14.3e %10.1e  %s\n", r.name.c_str(),
                  r.trials, r.checked, r.max_rel_error, r.tolerance, r.passed ? "PASS" : "FAIL");
    os << line;
  }
  return os.str();
}

}  // namespace grfcnn
