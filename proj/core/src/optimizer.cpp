#include "ovlab/optimizer.hpp"

#include <cmath>
#include <sstream>

#include "ovlab/error.hpp"

namespace ovlab {

void OptimizerState::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidArgument("learning rate must be finite and non-negative");
  }
  if (kind == OptimizerKind::kSgd) {
    if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("momentum must be in [0, 1)");
  } else {
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw InvalidArgument("beta1 must be in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw InvalidArgument("beta2 must be in [0, 1)");
    if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
    if (first_moment.size() != second_moment.size()) {
      throw DimensionError("Adam moment vectors differ in length");
    }
  }
}

std::size_t OptimizerState::size() const {
  return kind == OptimizerKind::kSgd ? velocity.size() : first_moment.size();
}

std::string OptimizerState::descriptor() const {
  std::ostringstream os;
  if (kind == OptimizerKind::kSgd) {
    os << "sgd(lr=" << learning_rate << ",momentum=" << momentum << ")";
  } else {
    os << "adam(lr=" << learning_rate << ",beta1=" << beta1 << ",beta2=" << beta2
       << ",eps=" << epsilon << ")";
  }
  return os.str();
}

OptimizerState make_sgd(double learning_rate, double momentum, std::size_t parameter_count) {
  OptimizerState s;
  s.kind = OptimizerKind::kSgd;
  s.learning_rate = learning_rate;
  s.momentum = momentum;
  s.velocity.assign(parameter_count, 0.0);
  s.validate();
  return s;
}

OptimizerState make_adam(double learning_rate, std::size_t parameter_count, double beta1,
                         double beta2, double epsilon) {
  OptimizerState s;
  s.kind = OptimizerKind::kAdam;
  s.learning_rate = learning_rate;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.epsilon = epsilon;
  s.first_moment.assign(parameter_count, 0.0);
  s.second_moment.assign(parameter_count, 0.0);
  s.validate();
  return s;
}

namespace {

void check_lengths(const OptimizerState& opt, const Gradient& grad) {
  if (opt.size() != grad.values.size()) {
    throw DimensionError("gradient length " + std::to_string(grad.values.size()) +
                         " != optimizer state length " + std::to_string(opt.size()));
  }
}

// Single source of truth for the update rule. When `next` is non-null the
// advanced state is written there; preview passes nullptr.
Update compute_update(const OptimizerState& opt, const Gradient& grad, OptimizerState* next) {
  check_lengths(opt, grad);
  const std::size_t n = grad.values.size();
  Update u{std::vector<double>(n)};
  if (opt.kind == OptimizerKind::kSgd) {
    for (std::size_t i = 0; i < n; ++i) {
      const double v = opt.momentum * opt.velocity[i] + grad.values[i];
      u.delta[i] = -opt.learning_rate * v;
      if (next) next->velocity[i] = v;
    }
  } else {
    const double t = static_cast<double>(opt.step_count + 1);
    const double c1 = 1.0 - std::pow(opt.beta1, t);
    const double c2 = 1.0 - std::pow(opt.beta2, t);
    for (std::size_t i = 0; i < n; ++i) {
      const double g = grad.values[i];
      const double m = opt.beta1 * opt.first_moment[i] + (1.0 - opt.beta1) * g;
      const double v = opt.beta2 * opt.second_moment[i] + (1.0 - opt.beta2) * g * g;
      u.delta[i] = -opt.learning_rate * (m / c1) / (std::sqrt(v / c2) + opt.epsilon);
      if (next) {
        next->first_moment[i] = m;
        next->second_moment[i] = v;
      }
    }
  }
  if (next) next->step_count = opt.step_count + 1;
  return u;
}

}  // namespace

Update preview_update(const OptimizerState& opt, const Gradient& grad) {
  return compute_update(opt, grad, nullptr);
}

Update apply_step(OptimizerState& opt, Model& model, const Gradient& grad) {
  if (model.size() != grad.values.size()) {
    throw DimensionError("gradient length does not match model");
  }
  Update u = compute_update(opt, grad, &opt);
  auto theta = model.mutable_theta();
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] += u.delta[i];
  return u;
}

StepResult step(const OptimizerState& opt, const Model& model, const Gradient& grad) {
  StepResult r{model, opt, {}};
  r.applied = apply_step(r.state, r.model, grad);
  return r;
}

}  // namespace ovlab
