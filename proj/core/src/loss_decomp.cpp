#include "ovlab/loss_decomp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ovlab/error.hpp"
#include "ovlab/rng.hpp"

namespace ovlab {

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kMse: return "mse";
    case LossKind::kCe: return "ce";
    case LossKind::kZo: return "zo";
  }
  return "?";
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "mse") return LossKind::kMse;
  if (name == "ce") return LossKind::kCe;
  if (name == "zo") return LossKind::kZo;
  throw InvalidArgument("unknown loss '" + std::string(name) + "' (expected mse|ce|zo)");
}

std::size_t argmax(std::span<const double> v) {
  if (v.empty()) throw InvalidArgument("argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t k = 1; k < v.size(); ++k) {
    if (v[k] > v[best]) best = k;
  }
  return best;
}

std::vector<double> hardmax(std::span<const double> v) {
  std::vector<double> out(v.size(), 0.0);
  out[argmax(v)] = 1.0;
  return out;
}

namespace {

void check_same_dim(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) {
    throw DimensionError("probability vectors differ in length (" + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()) + ")");
  }
}

void check_ensemble(const EnsembleOutputs& ens) {
  if (ens.outputs.empty()) throw InvalidArgument("ensemble must contain at least one output");
  const std::size_t c = ens.dim();
  if (c == 0) throw DimensionError("ensemble outputs are empty vectors");
  for (const auto& y : ens.outputs) {
    if (y.size() != c) throw DimensionError("ensemble outputs differ in length");
  }
}

bool is_one_hot(std::span<const double> t) {
  std::size_t ones = 0;
  for (double v : t) {
    if (v == 1.0) {
      ++ones;
    } else if (v != 0.0) {
      return false;
    }
  }
  return ones == 1;
}

double clamp_prob(double p) { return std::clamp(p, kProbFloor, 1.0); }

// mean_j L(center, y_j)
double mean_loss_from(LossKind kind, std::span<const double> center, const EnsembleOutputs& ens) {
  double s = 0.0;
  for (const auto& y : ens.outputs) s += eval_loss(kind, center, y);
  return s / static_cast<double>(ens.size());
}

}  // namespace

double eval_loss(LossKind kind, std::span<const double> t, std::span<const double> y) {
  check_same_dim(t, y);
  switch (kind) {
    case LossKind::kMse: {
      double s = 0.0;
      for (std::size_t k = 0; k < t.size(); ++k) {
        const double d = t[k] - y[k];
        s += d * d;
      }
      return s;
    }
    case LossKind::kCe: {
      double s = 0.0;
      for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k] > 0.0) s += t[k] * (std::log(t[k]) - std::log(clamp_prob(y[k])));
      }
      return s;
    }
    case LossKind::kZo:
      return argmax(t) == argmax(y) ? 0.0 : 1.0;
  }
  return 0.0;
}

ProbVector expected_output(LossKind kind, const EnsembleOutputs& ens) {
  check_ensemble(ens);
  const std::size_t c = ens.dim();
  const double inv_k = 1.0 / static_cast<double>(ens.size());
  ProbVector out(c, 0.0);
  switch (kind) {
    case LossKind::kMse:
      for (const auto& y : ens.outputs) {
        for (std::size_t k = 0; k < c; ++k) out[k] += y[k];
      }
      for (double& v : out) v *= inv_k;
      break;
    case LossKind::kCe: {
      std::vector<double> mean_log(c, 0.0);
      for (const auto& y : ens.outputs) {
        for (std::size_t k = 0; k < c; ++k) mean_log[k] += std::log(clamp_prob(y[k]));
      }
      for (double& v : mean_log) v *= inv_k;
      // exp(mean log) / Z, shifted by the max so the largest term is exp(0).
      const double mx = *std::max_element(mean_log.begin(), mean_log.end());
      double z = 0.0;
      for (std::size_t k = 0; k < c; ++k) {
        out[k] = std::exp(mean_log[k] - mx);
        z += out[k];
      }
      for (double& v : out) v /= z;
      break;
    }
    case LossKind::kZo: {
      std::vector<double> votes(c, 0.0);
      for (const auto& y : ens.outputs) votes[argmax(y)] += 1.0;
      out = hardmax(votes);
      break;
    }
  }
  return out;
}

DecompResult decompose(LossKind kind, std::span<const double> t, const EnsembleOutputs& ens) {
  check_ensemble(ens);
  if (t.size() != ens.dim()) throw DimensionError("target length does not match ensemble");
  if ((kind == LossKind::kZo || kind == LossKind::kCe) && !is_one_hot(t)) {
    throw InvalidArgument("target must be one-hot for the " + std::string(to_string(kind)) +
                          " decomposition");
  }
  const ProbVector center = expected_output(kind, ens);

  DecompResult r;
  double total = 0.0;
  for (const auto& y : ens.outputs) total += eval_loss(kind, t, y);
  r.expected_loss = total / static_cast<double>(ens.size());
  r.bias = eval_loss(kind, t, center);
  // A divergence from the center; rounding can push it a hair below zero.
  r.variance = std::max(0.0, mean_loss_from(kind, center, ens));
  r.beta = 1.0;

  if (kind == LossKind::kZo) {
    const std::size_t truth = argmax(t);
    const std::size_t vote = argmax(center);
    if (vote != truth) {
      std::size_t dissent = 0;
      std::size_t dissent_correct = 0;
      for (const auto& y : ens.outputs) {
        const std::size_t pred = argmax(y);
        if (pred != vote) {
          ++dissent;
          if (pred == truth) ++dissent_correct;
        }
      }
      r.beta = dissent == 0 ? 0.0
                            : -static_cast<double>(dissent_correct) / static_cast<double>(dissent);
    }
  }
  return r;
}

EnsembleTerms ensemble_bias_variance(LossKind kind, std::span<const LabeledEnsemble> per_sample) {
  if (per_sample.empty()) throw InvalidArgument("ensemble_bias_variance needs at least one sample");
  const std::size_t c = per_sample.front().ensemble.dim();
  const std::size_t k = per_sample.front().ensemble.size();
  EnsembleTerms terms;
  for (const auto& s : per_sample) {
    if (s.ensemble.dim() != c || s.ensemble.size() != k) {
      throw DimensionError("inconsistent class count or ensemble size across samples");
    }
    const DecompResult d = decompose(kind, s.target, s.ensemble);
    terms.expected_loss += d.expected_loss;
    terms.bias += d.bias;
    terms.variance += d.variance;
    terms.weighted_variance += d.beta * d.variance;
  }
  const double n = static_cast<double>(per_sample.size());
  terms.expected_loss /= n;
  terms.bias /= n;
  terms.variance /= n;
  terms.weighted_variance /= n;
  terms.samples = per_sample.size();
  return terms;
}

bool argmin_check(LossKind kind, const EnsembleOutputs& ens, std::size_t trials,
                  std::uint64_t seed) {
  check_ensemble(ens);
  if (trials == 0) throw InvalidArgument("argmin_check needs at least one trial");
  constexpr double kTol = 1e-9;
  const std::size_t c = ens.dim();
  const double at_center = mean_loss_from(kind, expected_output(kind, ens), ens);

  if (kind == LossKind::kZo) {
    for (std::size_t cls = 0; cls < c; ++cls) {
      std::vector<double> candidate(c, 0.0);
      candidate[cls] = 1.0;
      if (mean_loss_from(kind, candidate, ens) < at_center - kTol) return false;
    }
    return true;
  }

  Rng rng(seed);
  std::vector<double> probe(c);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    double s = 0.0;
    for (double& v : probe) {
      v = rng.exponential();
      s += v;
    }
    for (double& v : probe) v /= s;
    if (mean_loss_from(kind, probe, ens) < at_center - kTol) return false;
  }
  return true;
}

}  // namespace ovlab
