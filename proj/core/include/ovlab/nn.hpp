#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ovlab/matrix.hpp"

namespace ovlab {

// Layer sizes [d, h_1, ..., h_L, c]. Hidden layers use ReLU; the output layer
// is affine and produces logits.
struct MlpSpec {
  std::vector<std::size_t> layer_sizes;

  // Throws InvalidArgument unless there are >= 2 sizes, all >= 1.
  void validate() const;
  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t class_count() const { return layer_sizes.back(); }
  std::size_t layer_count() const { return layer_sizes.size() - 1; }

  friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

// Where one dense layer lives inside the flat parameter vector.
//
// Layout is normative: for each layer in order, the weight block
// (out x in, row-major, so W[o][i] sits at weight_offset + o * in + i)
// followed by the bias block (out entries).
struct LayerSlice {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
};

std::vector<LayerSlice> layer_slices(const MlpSpec& spec);
std::size_t parameter_count(const MlpSpec& spec);

class Model {
 public:
  // Throws DimensionError if theta does not match parameter_count(spec).
  Model(MlpSpec spec, std::vector<double> theta);

  const MlpSpec& spec() const { return spec_; }
  std::span<const double> theta() const { return theta_; }
  std::span<double> mutable_theta() { return theta_; }
  std::size_t size() const { return theta_.size(); }

  friend bool operator==(const Model&, const Model&) = default;

 private:
  MlpSpec spec_;
  std::vector<double> theta_;
};

// x: m x d inputs; t: m x c targets. Training targets are one-hot rows, but
// the loss and gradient accept any non-negative target rows.
struct Batch {
  Matrix x;
  Matrix t;
};

struct Gradient {
  std::vector<double> values;
};

struct Update {
  std::vector<double> delta;
  friend bool operator==(const Update&, const Update&) = default;
};

// He-style init: W ~ N(0, 2 / fan_in), biases zero. Deterministic in seed.
Model init_model(const MlpSpec& spec, std::uint64_t seed);

// Returns m x c logits.
Matrix forward_logits(const Model& model, const Matrix& x);

// Row-wise softmax with max subtraction.
Matrix softmax(const Matrix& logits);

// Mean over rows of sum_k t_k * (logsumexp(z) - z_k).
double ce_loss(const Model& model, const Batch& batch);

// Exact gradient of ce_loss with respect to theta.
Gradient ce_grad(const Model& model, const Batch& batch);

// Backpropagates an arbitrary upstream gradient on the logits (m x c) and sums
// the parameter gradient over rows.
Gradient backprop(const Model& model, const Matrix& x, const Matrix& logit_grad);

// Central differences of ce_loss, one coordinate at a time. The overload
// restricted to `coords` returns one value per listed coordinate.
Gradient finite_diff_grad(const Model& model, const Batch& batch, double h);
std::vector<double> finite_diff_grad(const Model& model, const Batch& batch, double h,
                                     std::span<const std::size_t> coords);

// theta + delta as a new model.
Model perturbed(const Model& model, std::span<const double> delta);

}  // namespace ovlab
