#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "ovlab/matrix.hpp"
#include "ovlab/nn.hpp"

namespace ovlab {

// Inputs plus one-hot targets.
struct LabeledSet {
  Matrix x;
  Matrix t;

  std::size_t size() const { return x.rows(); }
  Batch batch(std::span<const std::size_t> indices) const {
    return Batch{x.select_rows(indices), t.select_rows(indices)};
  }
};

// Distinct types for the two splits. Everything on the OV / early-stopping
// path accepts only TrainSplit, so a test split cannot reach it.
struct TrainSplit : LabeledSet {};
struct TestSplit : LabeledSet {};

struct Dataset {
  TrainSplit train;
  TestSplit test;  // may be empty (no rows)
  std::size_t class_count = 0;

  std::size_t input_dim() const { return train.x.cols(); }
  bool has_test() const { return test.size() > 0; }
  // Throws DimensionError/InvalidArgument if splits disagree or labels are
  // not one-hot rows of width class_count.
  void validate() const;
};

struct NoiseSpec {
  double fraction = 0.0;
  std::uint64_t seed = 0;
};

// Gaussian blobs around `classes` random unit-norm centers. Classes are
// balanced (counts differ by at most one, lower classes first) and rows are
// shuffled. spread is the per-coordinate standard deviation.
Dataset gen_blobs(std::size_t classes, std::size_t dim, std::size_t n_train, std::size_t n_test,
                  double spread, std::uint64_t seed);

// Big-endian IDX pair: images magic 2051 (u8 pixels scaled by 1/255),
// labels magic 2049 (one-hot over `classes`, default 10).
std::pair<Matrix, Matrix> load_idx(const std::filesystem::path& images,
                                   const std::filesystem::path& labels,
                                   std::size_t classes = 10);

// Headerless CSV: d feature columns followed by an integer label column.
// If classes == 0 the class count is max(label) + 1.
LabeledSet load_dataset_csv(const std::filesystem::path& path, std::size_t classes = 0);
void write_dataset_csv(const LabeledSet& set, const std::filesystem::path& path);

// Picks ceil(fraction * n) rows without replacement and permutes their
// labels among themselves. The global label multiset is preserved.
Matrix inject_label_noise(const Matrix& t, const NoiseSpec& spec);

// K independent draws without replacement of floor(frac * n) indices.
std::vector<std::vector<std::size_t>> subsample_train_sets(std::size_t n, std::size_t k,
                                                           double frac, std::uint64_t seed);

}  // namespace ovlab
