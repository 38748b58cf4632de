#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ovlab/nn.hpp"

namespace ovlab {

enum class OptimizerKind { kSgd, kAdam };

// Optimizer hyperparameters plus accumulated state. Treated as a value:
// `step` returns a new state and `preview_update` never touches it, which is
// what lets OV ask "what would this batch do" without side effects.
struct OptimizerState {
  OptimizerKind kind = OptimizerKind::kSgd;
  double learning_rate = 0.01;
  double momentum = 0.0;  // SGD only
  double beta1 = 0.9;     // Adam only
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step_count = 0;
  std::vector<double> velocity;       // SGD
  std::vector<double> first_moment;   // Adam
  std::vector<double> second_moment;  // Adam

  void validate() const;
  std::size_t size() const;
  // e.g. "adam(lr=0.001,beta1=0.9,beta2=0.999,eps=1e-08)"
  std::string descriptor() const;
};

OptimizerState make_sgd(double learning_rate, double momentum, std::size_t parameter_count);
OptimizerState make_adam(double learning_rate, std::size_t parameter_count, double beta1 = 0.9,
                         double beta2 = 0.999, double epsilon = 1e-8);

// The update `step` would apply, computed on the frozen state.
//   SGD:  delta = -lr * (momentum * velocity + grad)
//   Adam: one hypothetical step with bias correction for step_count + 1
Update preview_update(const OptimizerState& opt, const Gradient& grad);

struct StepResult {
  Model model;
  OptimizerState state;
  Update applied;  // bit-identical to preview_update on the pre-step state
};

StepResult step(const OptimizerState& opt, const Model& model, const Gradient& grad);

// In-place variant used by training loops. Returns the applied update.
Update apply_step(OptimizerState& opt, Model& model, const Gradient& grad);

}  // namespace ovlab
