#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace ovlab {

enum class LossKind { kMse, kCe, kZo };

std::string_view to_string(LossKind kind);
// Accepts "mse", "ce", "zo" (case-sensitive). Throws InvalidArgument otherwise.
LossKind parse_loss_kind(std::string_view name);

using ProbVector = std::vector<double>;

// Outputs of K models for one sample, each a probability vector of length c.
struct EnsembleOutputs {
  std::vector<ProbVector> outputs;

  std::size_t size() const { return outputs.size(); }
  std::size_t dim() const { return outputs.empty() ? 0 : outputs.front().size(); }
};

// Probabilities are clamped to this floor before any logarithm.
inline constexpr double kProbFloor = 1e-12;

// One-hot at the maximum; ties go to the lowest index.
std::vector<double> hardmax(std::span<const double> v);
std::size_t argmax(std::span<const double> v);

// MSE: ||t - y||^2.  CE: sum_k t_k log(t_k / y_k) with 0 log 0 = 0.
// ZO: 1 if argmax(t) != argmax(y) else 0.
double eval_loss(LossKind kind, std::span<const double> t, std::span<const double> y);

// The "center" of the ensemble that minimizes the variance term:
// arithmetic mean (MSE), normalized geometric mean (CE), majority vote (ZO).
ProbVector expected_output(LossKind kind, const EnsembleOutputs& ens);

struct DecompResult {
  double expected_loss = 0.0;
  double bias = 0.0;
  double variance = 0.0;
  double beta = 1.0;
};

// E_j L(t, y_j) = L(t, ybar) + beta * E_j L(ybar, y_j).
// For ZO, beta is 1 when the vote is correct, otherwise minus the fraction of
// dissenting models (those disagreeing with the vote) that predict t; 0 when
// nobody dissents. Throws InvalidArgument if t is not one-hot for CE/ZO.
DecompResult decompose(LossKind kind, std::span<const double> t, const EnsembleOutputs& ens);

struct LabeledEnsemble {
  ProbVector target;
  EnsembleOutputs ensemble;
};

// Averages over samples of the per-sample decomposition.
struct EnsembleTerms {
  double expected_loss = 0.0;
  double bias = 0.0;
  double variance = 0.0;
  // Mean of beta * variance; equals `variance` for MSE and CE.
  double weighted_variance = 0.0;
  std::size_t samples = 0;
};

EnsembleTerms ensemble_bias_variance(LossKind kind, std::span<const LabeledEnsemble> per_sample);

// Checks that expected_output really minimizes mean_j L(y*, y_j) over the
// simplex. MSE/CE: against `trials` Dirichlet(1) probes. ZO: against every
// one-hot candidate.
bool argmin_check(LossKind kind, const EnsembleOutputs& ens, std::size_t trials,
                  std::uint64_t seed);

}  // namespace ovlab
