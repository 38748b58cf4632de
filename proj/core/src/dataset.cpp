#include "ovlab/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "ovlab/error.hpp"
#include "ovlab/rng.hpp"
#include "text.hpp"

namespace ovlab {

namespace {

void validate_split(const LabeledSet& s, std::size_t dim, std::size_t classes, const char* name) {
  if (s.t.rows() != s.x.rows()) {
    throw DimensionError(std::string(name) + ": input and label row counts differ");
  }
  if (s.size() == 0) return;
  if (s.x.cols() != dim) throw DimensionError(std::string(name) + ": feature width mismatch");
  if (s.t.cols() != classes) throw DimensionError(std::string(name) + ": label width mismatch");
  for (std::size_t r = 0; r < s.t.rows(); ++r) {
    std::size_t ones = 0;
    for (double v : s.t.row(r)) {
      if (v == 1.0) {
        ++ones;
      } else if (v != 0.0) {
        ones = 2;
        break;
      }
    }
    if (ones != 1) {
      throw InvalidArgument(std::string(name) + ": label row " + std::to_string(r) +
                            " is not one-hot");
    }
  }
}

std::size_t count_from_fraction_floor(double frac, std::size_t n) {
  // Guards against products such as 0.29 * 100 = 28.999999999999996.
  return static_cast<std::size_t>(std::floor(frac * static_cast<double>(n) + 1e-9));
}

std::size_t count_from_fraction_ceil(double frac, std::size_t n) {
  const double v = std::ceil(frac * static_cast<double>(n) - 1e-9);
  return std::min(n, static_cast<std::size_t>(std::max(0.0, v)));
}

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                        const std::filesystem::path& path) {
  if (bytes.size() < offset + 4) throw ParseError("truncated IDX header in " + path.string());
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

}  // namespace

void Dataset::validate() const {
  if (class_count < 2) throw InvalidArgument("dataset needs at least 2 classes");
  if (train.size() == 0) throw InvalidArgument("dataset has no training rows");
  validate_split(train, train.x.cols(), class_count, "train");
  validate_split(test, train.x.cols(), class_count, "test");
}

Dataset gen_blobs(std::size_t classes, std::size_t dim, std::size_t n_train, std::size_t n_test,
                  double spread, std::uint64_t seed) {
  if (classes < 2) throw InvalidArgument("gen_blobs needs at least 2 classes");
  if (dim < 1) throw InvalidArgument("gen_blobs needs dim >= 1");
  if (!(spread > 0.0) || !std::isfinite(spread)) throw InvalidArgument("spread must be > 0");
  if (n_train < classes) throw InvalidArgument("n_train must cover every class");

  Rng rng(seed);
  std::vector<std::vector<double>> centers;
  if (dim == 1) {
    for (std::size_t k = 0; k < classes; ++k) {
      centers.push_back({-1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(classes - 1)});
    }
  } else {
    // Unit-sphere centers, re-drawn (bounded number of times) when closer
    // than 0.5 to an earlier center.
    constexpr double kMinSeparation = 0.5;
    for (std::size_t k = 0; k < classes; ++k) {
      std::vector<double> c(dim);
      for (int attempt = 0; attempt < 1000; ++attempt) {
        double norm = 0.0;
        for (double& v : c) {
          v = rng.normal();
          norm += v * v;
        }
        norm = std::sqrt(norm);
        for (double& v : c) v /= norm;
        bool far = true;
        for (const auto& other : centers) {
          double d2 = 0.0;
          for (std::size_t i = 0; i < dim; ++i) d2 += (c[i] - other[i]) * (c[i] - other[i]);
          if (d2 < kMinSeparation * kMinSeparation) {
            far = false;
            break;
          }
        }
        if (far) break;
      }
      centers.push_back(c);
    }
  }

  auto make_split = [&](std::size_t n) {
    LabeledSet s{Matrix(n, dim), Matrix(n, classes)};
    std::size_t row = 0;
    for (std::size_t k = 0; k < classes; ++k) {
      const std::size_t count = n / classes + (k < n % classes ? 1 : 0);
      for (std::size_t i = 0; i < count; ++i, ++row) {
        for (std::size_t j = 0; j < dim; ++j) s.x(row, j) = centers[k][j] + spread * rng.normal();
        s.t(row, k) = 1.0;
      }
    }
    const auto order = rng.permutation(n);
    return LabeledSet{s.x.select_rows(order), s.t.select_rows(order)};
  };

  Dataset ds;
  ds.class_count = classes;
  static_cast<LabeledSet&>(ds.train) = make_split(n_train);
  static_cast<LabeledSet&>(ds.test) = make_split(n_test);
  if (n_test == 0) {
    ds.test.x = Matrix(0, dim);
    ds.test.t = Matrix(0, classes);
  }
  return ds;
}

std::pair<Matrix, Matrix> load_idx(const std::filesystem::path& images,
                                   const std::filesystem::path& labels, std::size_t classes) {
  constexpr std::uint32_t kImageMagic = 2051;
  constexpr std::uint32_t kLabelMagic = 2049;
  const auto img = read_all(images);
  const auto lab = read_all(labels);

  const std::uint32_t img_magic = read_be32(img, 0, images);
  if (img_magic != kImageMagic) {
    throw ParseError("bad magic " + std::to_string(img_magic) + " in " + images.string() +
                     " (expected 2051)");
  }
  const std::uint32_t lab_magic = read_be32(lab, 0, labels);
  if (lab_magic != kLabelMagic) {
    throw ParseError("bad magic " + std::to_string(lab_magic) + " in " + labels.string() +
                     " (expected 2049)");
  }

  const std::size_t n = read_be32(img, 4, images);
  const std::size_t rows = read_be32(img, 8, images);
  const std::size_t cols = read_be32(img, 12, images);
  const std::size_t n_labels = read_be32(lab, 4, labels);
  if (n != n_labels) {
    throw ParseError("count mismatch: " + std::to_string(n) + " images vs " +
                     std::to_string(n_labels) + " labels");
  }
  const std::size_t pixels = rows * cols;
  constexpr std::size_t kImageHeader = 16;
  constexpr std::size_t kLabelHeader = 8;
  if (img.size() < kImageHeader + n * pixels) {
    throw ParseError("truncated image data in " + images.string());
  }
  if (lab.size() < kLabelHeader + n) throw ParseError("truncated label data in " + labels.string());

  Matrix x(n, pixels);
  for (std::size_t i = 0; i < n * pixels; ++i) {
    x.data()[i] = static_cast<double>(img[kImageHeader + i]) / 255.0;
  }
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = lab[kLabelHeader + i];
  return {std::move(x), one_hot(y, classes)};
}

LabeledSet load_dataset_csv(const std::filesystem::path& path, std::size_t classes) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<double> features;
  std::vector<int> labels;
  std::size_t dim = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = detail::trim_cr(line);
    if (view.empty()) continue;
    const auto fields = detail::split(view, ',');
    if (fields.size() < 2) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": need at least one feature and a label");
    }
    if (dim == 0) dim = fields.size() - 1;
    if (fields.size() - 1 != dim) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(dim + 1) + " fields");
    }
    for (std::size_t i = 0; i < dim; ++i) {
      const auto v = detail::parse_double(fields[i]);
      if (!v) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad number '" +
                         std::string(fields[i]) + "'");
      }
      features.push_back(*v);
    }
    const auto label = detail::parse_int<int>(fields.back());
    if (!label || *label < 0) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad label '" +
                       std::string(fields.back()) + "'");
    }
    labels.push_back(*label);
  }
  if (labels.empty()) throw ParseError(path.string() + ": no rows");
  if (classes == 0) classes = static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end())) + 1;
  return LabeledSet{Matrix(labels.size(), dim, std::move(features)), one_hot(labels, classes)};
}

void write_dataset_csv(const LabeledSet& set, const std::filesystem::path& path) {
  std::ostringstream os;
  const auto labels = row_argmax(set.t);
  for (std::size_t r = 0; r < set.size(); ++r) {
    for (double v : set.x.row(r)) os << detail::format_double(v) << ',';
    os << labels[r] << '\n';
  }
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << os.str();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Matrix inject_label_noise(const Matrix& t, const NoiseSpec& spec) {
  if (!(spec.fraction >= 0.0 && spec.fraction <= 1.0)) {
    throw InvalidArgument("label-noise fraction must be in [0, 1]");
  }
  const std::size_t n = t.rows();
  const std::size_t k = count_from_fraction_ceil(spec.fraction, n);
  if (k == 0) return t;

  Rng rng(spec.seed);
  auto chosen = rng.permutation(n);
  chosen.resize(k);
  std::sort(chosen.begin(), chosen.end());
  auto source = chosen;
  rng.shuffle(source);

  Matrix out = t;
  for (std::size_t i = 0; i < k; ++i) {
    auto src = t.row(source[i]);
    auto dst = out.row(chosen[i]);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return out;
}

std::vector<std::vector<std::size_t>> subsample_train_sets(std::size_t n, std::size_t k,
                                                           double frac, std::uint64_t seed) {
  if (!(frac > 0.0 && frac <= 1.0)) throw InvalidArgument("subsample fraction must be in (0, 1]");
  if (k == 0) throw InvalidArgument("need at least one subsample");
  const std::size_t size = count_from_fraction_floor(frac, n);
  if (size == 0) throw InsufficientData("subsample would be empty");
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> out;
  out.reserve(k);
  for (std::size_t j = 0; j < k; ++j) {
    auto idx = rng.permutation(n);
    idx.resize(size);
    out.push_back(std::move(idx));
  }
  return out;
}

}  // namespace ovlab
