#include "ovlab/nn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ovlab/error.hpp"
#include "ovlab/rng.hpp"

namespace ovlab {

void MlpSpec::validate() const {
  if (layer_sizes.size() < 2) {
    throw InvalidArgument("MLP needs at least input and output sizes");
  }
  for (std::size_t i = 0; i < layer_sizes.size(); ++i) {
    if (layer_sizes[i] == 0) {
      throw InvalidArgument("MLP layer " + std::to_string(i) + " has size 0");
    }
  }
}

std::vector<LayerSlice> layer_slices(const MlpSpec& spec) {
  spec.validate();
  std::vector<LayerSlice> slices;
  slices.reserve(spec.layer_count());
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
    LayerSlice s;
    s.in = spec.layer_sizes[l];
    s.out = spec.layer_sizes[l + 1];
    s.weight_offset = offset;
    s.bias_offset = offset + s.in * s.out;
    offset = s.bias_offset + s.out;
    slices.push_back(s);
  }
  return slices;
}

std::size_t parameter_count(const MlpSpec& spec) {
  auto slices = layer_slices(spec);
  return slices.back().bias_offset + slices.back().out;
}

Model::Model(MlpSpec spec, std::vector<double> theta)
    : spec_(std::move(spec)), theta_(std::move(theta)) {
  const std::size_t expected = parameter_count(spec_);
  if (theta_.size() != expected) {
    throw DimensionError("theta length " + std::to_string(theta_.size()) +
                         " != parameter count " + std::to_string(expected));
  }
}

Model init_model(const MlpSpec& spec, std::uint64_t seed) {
  std::vector<double> theta(parameter_count(spec), 0.0);
  Rng rng(seed);
  for (const auto& s : layer_slices(spec)) {
    const double scale = std::sqrt(2.0 / static_cast<double>(s.in));
    for (std::size_t k = 0; k < s.in * s.out; ++k) {
      theta[s.weight_offset + k] = scale * rng.normal();
    }
  }
  return Model(spec, std::move(theta));
}

namespace {

// Pre-activations of every layer plus the post-ReLU activations of the
// hidden layers; index 0 of `activations` is the input itself.
struct ForwardCache {
  std::vector<Matrix> pre;
  std::vector<Matrix> activations;
};

void affine(const Matrix& in, std::span<const double> theta, const LayerSlice& s,
            Matrix& out) {
  out = Matrix(in.rows(), s.out);
  const double* w = theta.data() + s.weight_offset;
  const double* b = theta.data() + s.bias_offset;
  for (std::size_t r = 0; r < in.rows(); ++r) {
    auto x = in.row(r);
    auto z = out.row(r);
    for (std::size_t o = 0; o < s.out; ++o) {
      const double* wo = w + o * s.in;
      double acc = b[o];
      for (std::size_t i = 0; i < s.in; ++i) acc += wo[i] * x[i];
      z[o] = acc;
    }
  }
}

void check_input(const Model& model, const Matrix& x) {
  if (x.cols() != model.spec().input_dim()) {
    throw DimensionError("input has " + std::to_string(x.cols()) + " columns, model expects " +
                         std::to_string(model.spec().input_dim()));
  }
}

ForwardCache forward_cached(const Model& model, const Matrix& x) {
  check_input(model, x);
  const auto slices = layer_slices(model.spec());
  ForwardCache cache;
  cache.pre.resize(slices.size());
  cache.activations.reserve(slices.size());
  cache.activations.push_back(x);
  for (std::size_t l = 0; l < slices.size(); ++l) {
    affine(cache.activations.back(), model.theta(), slices[l], cache.pre[l]);
    if (l + 1 < slices.size()) {
      Matrix a = cache.pre[l];
      for (double& v : a.data()) v = v > 0.0 ? v : 0.0;
      cache.activations.push_back(std::move(a));
    }
  }
  return cache;
}

double logsumexp(std::span<const double> z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - mx);
  return mx + std::log(s);
}

void check_batch(const Model& model, const Batch& batch) {
  check_input(model, batch.x);
  if (batch.t.rows() != batch.x.rows() || batch.t.cols() != model.spec().class_count()) {
    throw DimensionError("target matrix shape does not match batch/model");
  }
  if (batch.x.rows() == 0) throw DimensionError("empty batch");
}

}  // namespace

Matrix forward_logits(const Model& model, const Matrix& x) {
  check_input(model, x);
  const auto slices = layer_slices(model.spec());
  Matrix current = x;
  Matrix next;
  for (std::size_t l = 0; l < slices.size(); ++l) {
    affine(current, model.theta(), slices[l], next);
    if (l + 1 < slices.size()) {
      for (double& v : next.data()) v = v > 0.0 ? v : 0.0;
    }
    std::swap(current, next);
  }
  return current;
}

Matrix softmax(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto z = logits.row(r);
    auto p = out.row(r);
    if (z.empty()) continue;
    const double mx = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) {
      p[k] = std::exp(z[k] - mx);
      s += p[k];
    }
    for (double& v : p) v /= s;
  }
  return out;
}

double ce_loss(const Model& model, const Batch& batch) {
  check_batch(model, batch);
  const Matrix logits = forward_logits(model, batch.x);
  double total = 0.0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto z = logits.row(r);
    auto t = batch.t.row(r);
    const double lse = logsumexp(z);
    for (std::size_t k = 0; k < z.size(); ++k) {
      if (t[k] != 0.0) total += t[k] * (lse - z[k]);
    }
  }
  return total / static_cast<double>(logits.rows());
}

Gradient backprop(const Model& model, const Matrix& x, const Matrix& logit_grad) {
  const ForwardCache cache = forward_cached(model, x);
  const auto slices = layer_slices(model.spec());
  if (logit_grad.rows() != x.rows() || logit_grad.cols() != slices.back().out) {
    throw DimensionError("logit gradient shape does not match forward output");
  }
  Gradient grad{std::vector<double>(model.size(), 0.0)};
  auto theta = model.theta();

  Matrix delta = logit_grad;
  for (std::size_t li = slices.size(); li-- > 0;) {
    const LayerSlice& s = slices[li];
    const Matrix& a_prev = cache.activations[li];
    double* gw = grad.values.data() + s.weight_offset;
    double* gb = grad.values.data() + s.bias_offset;
    for (std::size_t r = 0; r < delta.rows(); ++r) {
      auto d = delta.row(r);
      auto a = a_prev.row(r);
      for (std::size_t o = 0; o < s.out; ++o) {
        if (d[o] == 0.0) continue;
        double* gwo = gw + o * s.in;
        for (std::size_t i = 0; i < s.in; ++i) gwo[i] += d[o] * a[i];
        gb[o] += d[o];
      }
    }
    if (li == 0) break;

    // delta_prev = (delta W) * relu'(z_prev); relu'(0) := 0.
    const double* w = theta.data() + s.weight_offset;
    const Matrix& z_prev = cache.pre[li - 1];
    Matrix prev(delta.rows(), s.in);
    for (std::size_t r = 0; r < delta.rows(); ++r) {
      auto d = delta.row(r);
      auto p = prev.row(r);
      for (std::size_t o = 0; o < s.out; ++o) {
        if (d[o] == 0.0) continue;
        const double* wo = w + o * s.in;
        for (std::size_t i = 0; i < s.in; ++i) p[i] += d[o] * wo[i];
      }
      auto z = z_prev.row(r);
      for (std::size_t i = 0; i < s.in; ++i) {
        if (z[i] <= 0.0) p[i] = 0.0;
      }
    }
    delta = std::move(prev);
  }
  return grad;
}

Gradient ce_grad(const Model& model, const Batch& batch) {
  check_batch(model, batch);
  const Matrix probs = softmax(forward_logits(model, batch.x));
  const double inv_m = 1.0 / static_cast<double>(batch.x.rows());
  Matrix upstream(probs.rows(), probs.cols());
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    auto p = probs.row(r);
    auto t = batch.t.row(r);
    double mass = 0.0;
    for (double v : t) mass += v;
    auto u = upstream.row(r);
    for (std::size_t k = 0; k < p.size(); ++k) u[k] = (mass * p[k] - t[k]) * inv_m;
  }
  return backprop(model, batch.x, upstream);
}

std::vector<double> finite_diff_grad(const Model& model, const Batch& batch, double h,
                                     std::span<const std::size_t> coords) {
  if (!(h > 0.0)) throw InvalidArgument("finite-difference step must be positive");
  Model probe = model;
  auto theta = probe.mutable_theta();
  std::vector<double> out;
  out.reserve(coords.size());
  for (std::size_t k : coords) {
    if (k >= theta.size()) throw DimensionError("coordinate out of range");
    const double original = theta[k];
    theta[k] = original + h;
    const double up = ce_loss(probe, batch);
    theta[k] = original - h;
    const double down = ce_loss(probe, batch);
    theta[k] = original;
    out.push_back((up - down) / (2.0 * h));
  }
  return out;
}

Gradient finite_diff_grad(const Model& model, const Batch& batch, double h) {
  std::vector<std::size_t> all(model.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return Gradient{finite_diff_grad(model, batch, h, all)};
}

Model perturbed(const Model& model, std::span<const double> delta) {
  if (delta.size() != model.size()) {
    throw DimensionError("update length " + std::to_string(delta.size()) +
                         " != parameter count " + std::to_string(model.size()));
  }
  std::vector<double> theta(model.theta().begin(), model.theta().end());
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] += delta[i];
  return Model(model.spec(), std::move(theta));
}

}  // namespace ovlab
