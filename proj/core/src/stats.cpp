#include "ovlab/stats.hpp"

#include <cmath>

#include "ovlab/error.hpp"

namespace ovlab {

double pearson_r(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("pearson_r: series lengths differ");
  if (a.size() < 2) throw DimensionError("pearson_r needs at least 2 points");
  const double n = static_cast<double>(a.size());
  double mean_a = 0.0;
  double mean_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    mean_a += a[i];
    mean_b += b[i];
  }
  mean_a /= n;
  mean_b /= n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) throw ZeroVariance("pearson_r: a series has zero variance");
  return sab / std::sqrt(saa * sbb);
}

}  // namespace ovlab
