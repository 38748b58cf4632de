#include "ovlab_cli/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>

#include "ovlab/ovlab.hpp"

namespace ovlab::cli {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<std::size_t> parse_size_list(const std::string& text, const std::string& flag) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t v = 0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || res.ec != std::errc{} || res.ptr != item.data() + item.size() || v == 0) {
      throw CLI::ValidationError(flag, "expected a comma-separated list of positive integers, got '" +
                                           text + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw CLI::ValidationError(flag, "empty list");
  return out;
}

// "path.csv" or "images,labels" for an IDX pair.
LabeledSet load_split(const std::string& spec, std::size_t classes) {
  const auto comma = spec.find(',');
  if (comma == std::string::npos) return load_dataset_csv(spec, classes);
  auto [x, t] = load_idx(spec.substr(0, comma), spec.substr(comma + 1), classes ? classes : 10);
  return LabeledSet{std::move(x), std::move(t)};
}

Dataset load_data(const std::string& train_spec, const std::string& test_spec,
                  std::size_t classes) {
  LabeledSet train = load_split(train_spec, classes);
  LabeledSet test;
  if (!test_spec.empty()) {
    test = load_split(test_spec, classes);
    // With inferred class counts the two files may disagree; use the wider.
    if (classes == 0 && test.t.cols() != train.t.cols()) {
      const std::size_t c = std::max(test.t.cols(), train.t.cols());
      train = load_split(train_spec, c);
      test = load_split(test_spec, c);
    }
  }
  Dataset d;
  d.class_count = train.t.cols();
  static_cast<LabeledSet&>(d.train) = std::move(train);
  if (test.size() > 0) {
    static_cast<LabeledSet&>(d.test) = std::move(test);
  } else {
    d.test.x = Matrix(0, d.train.x.cols());
    d.test.t = Matrix(0, d.class_count);
  }
  d.validate();
  return d;
}

std::string default_test_out(const std::string& out) {
  fs::path p(out);
  if (p.extension() == ".csv") return p.replace_extension(".test.csv").string();
  return out + ".test.csv";
}

struct DataFlags {
  std::string data;
  std::string test;
  std::size_t classes = 0;
};

struct RunFlags {
  std::string arch = "2,16,16,3";
  std::string opt = "adam";
  double lr = 1e-3;
  double momentum = 0.0;
  std::size_t epochs = 100;
  std::size_t batch_size = 128;
  double label_noise = 0.0;
  std::size_t ov_batches = 10;
  std::size_t ov_batch_size = 0;
  std::size_t ov_samples = 1000;
  double ov_probe_lr = 0.0;
  std::uint64_t seed = 0;
};

void add_data_flags(CLI::App& app, DataFlags& f) {
  // Checked after parsing so that unknown flags are reported first.
  app.add_option("--data", f.data, "training data: CSV file or 'images,labels' IDX pair (required)");
  app.add_option("--test", f.test, "test data for reporting only, same formats (default: none)");
  app.add_option("--classes", f.classes, "class count (0 infers from labels, 10 for IDX)");
}

void add_run_flags(CLI::App& app, RunFlags& f) {
  app.add_option("--arch", f.arch, "comma-separated layer sizes, input first");
  app.add_option("--opt", f.opt, "optimizer")->check(CLI::IsMember({"sgd", "adam"}));
  app.add_option("--lr", f.lr, "learning rate")->check(CLI::NonNegativeNumber);
  app.add_option("--momentum", f.momentum, "SGD momentum")->check(CLI::Range(0.0, 0.999999));
  app.add_option("--epochs", f.epochs, "training epochs")->check(CLI::PositiveNumber);
  app.add_option("--batch-size", f.batch_size, "minibatch size")->check(CLI::PositiveNumber);
  app.add_option("--label-noise", f.label_noise, "fraction of training labels shuffled")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--ov-batches", f.ov_batches, "candidate batches per OV estimate")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 20));
  app.add_option("--ov-batch-size", f.ov_batch_size, "OV batch size (0 uses --batch-size)");
  app.add_option("--ov-samples", f.ov_samples, "training inputs averaged per OV estimate")
      ->check(CLI::PositiveNumber);
  app.add_option("--ov-probe-lr", f.ov_probe_lr,
                 "plain-SGD probe learning rate for OV (0 uses the live optimizer)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--seed", f.seed, "base seed");
}

RunConfig to_config(const RunFlags& f) {
  RunConfig cfg;
  cfg.arch = MlpSpec{parse_size_list(f.arch, "--arch")};
  cfg.optimizer = f.opt == "sgd" ? OptimizerKind::kSgd : OptimizerKind::kAdam;
  cfg.learning_rate = f.lr;
  cfg.momentum = f.momentum;
  cfg.epochs = f.epochs;
  cfg.batch_size = f.batch_size;
  cfg.label_noise = NoiseSpec{f.label_noise, derive_seed(f.seed, 5)};
  cfg.ov_batches = f.ov_batches;
  cfg.ov_batch_size = f.ov_batch_size;
  cfg.ov_samples = f.ov_samples;
  if (f.ov_probe_lr > 0.0) cfg.ov_probe_lr = f.ov_probe_lr;
  cfg.seed = f.seed;
  return cfg;
}

std::size_t display_epoch(const Trace& t, std::size_t index) { return t.rows.at(index).epoch; }

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Optimization variance, bias-variance tracing and validation-free early stopping"};
  app.name(args.empty() ? "ovlab" : fs::path(args[0]).filename().string());
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  // gen-data
  struct {
    std::size_t classes = 3;
    std::size_t dim = 2;
    std::size_t n_train = 3000;
    std::size_t n_test = 1000;
    double spread = 0.5;
    std::uint64_t seed = 0;
    std::string out = "data.csv";
    std::string test_out;
  } gen;
  CLI::App* gen_cmd = app.add_subcommand("gen-data", "write a Gaussian-blobs dataset as CSV");
  gen_cmd->add_option("--classes", gen.classes, "number of classes")->check(CLI::Range(2, 1000));
  gen_cmd->add_option("--dim", gen.dim, "input dimension")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--n-train", gen.n_train, "training rows")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--n-test", gen.n_test, "test rows (0 writes no test file)");
  gen_cmd->add_option("--spread", gen.spread, "per-coordinate standard deviation")
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.seed, "seed");
  gen_cmd->add_option("--out", gen.out, "training CSV path");
  gen_cmd->add_option("--test-out", gen.test_out, "test CSV path (default: <out>.test.csv)");

  // train
  DataFlags train_data;
  RunFlags train_run;
  std::string train_out = "trace.csv";
  bool no_ov = false;
  CLI::App* train_cmd = app.add_subcommand("train", "train one model and write its epoch trace");
  add_data_flags(*train_cmd, train_data);
  add_run_flags(*train_cmd, train_run);
  train_cmd->add_flag("--no-ov", no_ov, "skip OV measurement");
  train_cmd->add_option("--out", train_out, "trace CSV path");

  // decompose
  DataFlags dec_data;
  RunFlags dec_run;
  std::size_t dec_k = 5;
  double dec_frac = 0.5;
  std::string dec_loss = "zo";
  std::string dec_out = "decomp.csv";
  CLI::App* dec_cmd =
      app.add_subcommand("decompose", "train an ensemble on subsamples and trace bias/variance");
  add_data_flags(*dec_cmd, dec_data);
  add_run_flags(*dec_cmd, dec_run);
  dec_cmd->add_option("--k", dec_k, "ensemble members")->check(CLI::Range(2, 10000));
  dec_cmd->add_option("--frac", dec_frac, "fraction of the training set per member")
      ->check(CLI::Range(0.0, 1.0));
  dec_cmd->add_option("--loss", dec_loss, "loss to decompose")
      ->check(CLI::IsMember({"mse", "ce", "zo"}));
  dec_cmd->add_option("--out", dec_out, "trace CSV path");

  // earlystop
  DataFlags es_data;
  RunFlags es_run;
  std::size_t es_window = 10;
  std::size_t es_patience = 10;
  std::string es_out = "earlystop.csv";
  CLI::App* es_cmd = app.add_subcommand(
      "earlystop", "train, then pick the stopping epoch from smoothed OV on training data");
  add_data_flags(*es_cmd, es_data);
  add_run_flags(*es_cmd, es_run);
  es_cmd->add_option("--window", es_window, "moving-average window")->check(CLI::PositiveNumber);
  es_cmd->add_option("--patience", es_patience, "epochs without improvement before stopping")
      ->check(CLI::PositiveNumber);
  es_cmd->add_option("--out", es_out, "trace CSV path");

  // widthsweep
  DataFlags ws_data;
  RunFlags ws_run;
  std::string ws_widths = "4,8,16,32,64";
  std::string ws_out = "widthsweep.csv";
  CLI::App* ws_cmd = app.add_subcommand(
      "widthsweep", "train one model per hidden width and correlate final OV with test accuracy");
  add_data_flags(*ws_cmd, ws_data);
  add_run_flags(*ws_cmd, ws_run);
  ws_cmd->add_option("--widths", ws_widths, "comma-separated hidden widths");
  ws_cmd->add_option("--out", ws_out, "sweep CSV path");

  std::vector<std::string> rest(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(rest.begin(), rest.end());
  RunConfig cfg;
  std::vector<std::size_t> widths;
  try {
    app.parse(rest);
    if (!gen_cmd->parsed()) {
      const DataFlags& df = train_cmd->parsed() ? train_data
                            : dec_cmd->parsed() ? dec_data
                            : es_cmd->parsed()  ? es_data
                                                : ws_data;
      if (df.data.empty()) throw CLI::RequiredError("--data");
      const RunFlags& rf = train_cmd->parsed()  ? train_run
                           : dec_cmd->parsed()  ? dec_run
                           : es_cmd->parsed()   ? es_run
                                                : ws_run;
      cfg = to_config(rf);
      if (train_cmd->parsed()) cfg.measure_ov = !no_ov;
      if (ws_cmd->parsed()) widths = parse_size_list(ws_widths, "--widths");
    }
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (gen_cmd->parsed()) {
      const Dataset d = gen_blobs(gen.classes, gen.dim, gen.n_train, gen.n_test, gen.spread, gen.seed);
      write_dataset_csv(d.train, gen.out);
      out << "wrote " << d.train.size() << " training rows to " << gen.out << '\n';
      if (d.has_test()) {
        const std::string test_out = gen.test_out.empty() ? default_test_out(gen.out) : gen.test_out;
        write_dataset_csv(d.test, test_out);
        out << "wrote " << d.test.size() << " test rows to " << test_out << '\n';
      }
      return 0;
    }

    if (train_cmd->parsed()) {
      const Dataset d = load_data(train_data.data, train_data.test, train_data.classes);
      const Trace t = train_with_trace(d, cfg);
      write_trace_csv(t, train_out);
      const TraceRow& last = t.rows.back();
      out << "epochs=" << t.rows.size() << " train_ce=" << fmt(last.train_ce);
      if (last.test_zo) out << " test_error=" << fmt(*last.test_zo);
      if (last.ov) out << " ov=" << fmt(*last.ov);
      out << "\nwrote " << train_out << '\n';
      return 0;
    }

    if (dec_cmd->parsed()) {
      const Dataset d = load_data(dec_data.data, dec_data.test, dec_data.classes);
      const LossKind kind = parse_loss_kind(dec_loss);
      const Trace t = ensemble_trace(d, cfg, dec_k, dec_frac, kind);
      write_trace_csv(t, dec_out);
      const TraceRow& last = t.rows.back();
      out << "loss=" << dec_loss << " k=" << dec_k << " frac=" << fmt(dec_frac)
          << " final_bias=" << fmt(*last.bias) << " final_variance=" << fmt(*last.variance) << '\n'
          << "wrote " << dec_out << '\n';
      return 0;
    }

    if (es_cmd->parsed()) {
      const Dataset d = load_data(es_data.data, es_data.test, es_data.classes);
      cfg.measure_ov = true;
      const Trace t = train_with_trace(d, cfg);
      write_trace_csv(t, es_out);
      const EarlyStopConfig es{es_window, es_patience, StopMode::kMinimize};
      const StopPoint p = find_stop_epoch(t.column(&TraceRow::ov), es);
      out << "window=" << es_window << " patience=" << es_patience << '\n'
          << "best_epoch=" << display_epoch(t, p.best_epoch) << '\n'
          << "stop_epoch=" << display_epoch(t, p.stop_epoch) << '\n';
      if (d.has_test()) {
        // Test data is used here for reporting only; the stop decision above
        // came from the OV column.
        const auto acc = t.column(&TraceRow::test_acc);
        const StopPoint truth =
            find_stop_epoch(acc, EarlyStopConfig{1, es_patience, StopMode::kMaximize});
        const double at_best = *t.rows[p.best_epoch].test_zo;
        const double at_truth = *t.rows[truth.best_epoch].test_zo;
        out << "test_error_at_best=" << fmt(at_best) << '\n'
            << "groundtruth_best_epoch=" << display_epoch(t, truth.best_epoch) << '\n'
            << "groundtruth_test_error=" << fmt(at_truth) << '\n'
            << "test_error_gap=" << fmt(std::abs(at_best - at_truth)) << '\n';
      }
      out << "wrote " << es_out << '\n';
      return 0;
    }

    const Dataset d = load_data(ws_data.data, ws_data.test, ws_data.classes);
    const auto rows = width_sweep_rows(d, cfg, widths);
    write_text_atomic(format_width_sweep_csv(rows), ws_out);
    for (const auto& row : rows) {
      out << "width=" << row.width << " final_test_acc=" << fmt(row.final_test_acc)
          << " final_ov=" << fmt(row.final_ov) << '\n';
    }
    std::vector<double> ov;
    std::vector<double> acc;
    for (const auto& row : rows) {
      ov.push_back(row.final_ov);
      acc.push_back(row.final_test_acc);
    }
    out << "r=" << fmt(pearson_r(ov, acc)) << '\n' << "wrote " << ws_out << '\n';
    return 0;
  } catch (const CLI::ValidationError& e) {
    err << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace ovlab::cli
