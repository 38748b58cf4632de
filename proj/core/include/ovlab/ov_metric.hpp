#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ovlab/dataset.hpp"
#include "ovlab/matrix.hpp"
#include "ovlab/nn.hpp"
#include "ovlab/optimizer.hpp"

namespace ovlab {

// Candidate logit sets whose mean squared norm falls at or below this are
// treated as degenerate: OV is undefined there.
inline constexpr double kOvDenominatorFloor = 1e-24;
inline constexpr std::size_t kDefaultJacobianCap = 20000;

// One hypothetical update per training batch, all taken from the same frozen
// model and optimizer state.
struct CandidateUpdateSet {
  std::vector<Update> updates;
  std::size_t source_batch_size = 0;
  std::string optimizer_descriptor;

  std::size_t size() const { return updates.size(); }
};

struct OvEstimate {
  double value = 0.0;             // E_x[OV(x)] over non-degenerate samples
  double numerator_mean = 0.0;    // E_x of the logit variance
  double denominator_mean = 0.0;  // E_x of the mean squared logit norm
  std::size_t n_batches = 0;
  std::size_t n_samples = 0;     // samples that contributed
  std::size_t n_degenerate = 0;  // samples skipped for a degenerate denominator
  std::size_t epoch = 0;
};

struct GradVarEstimate {
  double v_g = 0.0;
  double mean_update_norm_sq = 0.0;
  double norm_sq_of_mean_update = 0.0;
};

// |theta| x c, column j = d logit_j / d theta.
struct Jacobian {
  std::size_t params = 0;
  std::size_t classes = 0;
  std::vector<double> values;  // row-major: values[p * classes + j]

  double operator()(std::size_t p, std::size_t j) const { return values[p * classes + j]; }
};

// One seeded shuffle of the training indices, split into n_batches disjoint
// batches of size m. Throws InsufficientData if n_batches * m > n.
std::vector<Batch> draw_ov_batches(const TrainSplit& train, std::size_t m, std::size_t n_batches,
                                   std::uint64_t seed);

// The fixed set of training inputs OV is averaged over: min(n, count) rows
// chosen by a seeded shuffle, returned in ascending index order.
Matrix ov_sample_inputs(const TrainSplit& train, std::size_t count, std::uint64_t seed);

CandidateUpdateSet candidate_updates(const Model& model, const OptimizerState& opt,
                                     std::span<const Batch> batches);

// mean_b ||l_b - mean l||^2 / mean_b ||l_b||^2 for l_b = f(x; theta + delta_b).
// Throws UndefinedOv if the denominator is degenerate.
double ov_point(const Model& model, const CandidateUpdateSet& cand, std::span<const double> x);

// Mean of per-sample OV ratios over the rows of sample_xs. Degenerate samples
// are skipped and counted; throws UndefinedOv if every sample is degenerate.
// Summation runs over the sorted ratios, so row order does not matter.
OvEstimate ov_mean(const Model& model, const CandidateUpdateSet& cand, const Matrix& sample_xs);

GradVarEstimate grad_variance(const CandidateUpdateSet& cand);

Jacobian logit_jacobian(const Model& model, std::span<const double> x,
                        std::size_t cap = kDefaultJacobianCap);

// Linearized OV: mean_b ||J^T (delta_b - mean delta)||^2 / ||f(x; theta)||^2.
double ov_first_order(const Model& model, const CandidateUpdateSet& cand,
                      std::span<const double> x, std::size_t cap = kDefaultJacobianCap);

}  // namespace ovlab
