#include "mlpart/mlpart.hpp"

#include <CLI11.hpp>

#include <glob.h>

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace mlpart;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> expand(const std::string& pattern) {
  glob_t g{};
  const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
  std::vector<std::string> out;
  if (rc == 0)
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  globfree(&g);
  if (out.empty()) throw FormatError("no file matches '" + pattern + "'");
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("invalid number '" + item + "' in list '" + s + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

KMode parse_mode(const std::string& s) {
  if (s == "penalized") return KMode::penalized();
  if (s == "known") return KMode::known_k();
  if (s.rfind("known:", 0) == 0) {
    const auto v = parse_list(s.substr(6));
    if (v.size() != 1 || v[0] < 1 || v[0] != static_cast<int>(v[0])) throw ConfigError("invalid K in '" + s + "'");
    return KMode::known_k(static_cast<int>(v[0]));
  }
  throw ConfigError("unknown mode '" + s + "' (expected known:K or penalized)");
}

Eigen::MatrixXd features_for(const Eigen::MatrixXd& x, const std::optional<HermiteConfig>& h) {
  return h ? embed_columns(x, *h) : x;
}

void print_value(double v) {
  if (std::isinf(v)) {
    std::cout << "inf\n";
    return;
  }
  std::cout << io::format_double(v) << "\n";
}

// ---------------------------------------------------------------------------

struct SynthCpdArgs {
  synth::ChangepointConfig cfg;
  std::uint64_t seed = 0;
  std::string prefix = "synth";
};

int run_synth_cpd(const SynthCpdArgs& a) {
  const auto s = synth::synth_changepoint(a.cfg, a.seed);
  io::write_dataset(a.prefix + ".csv", s.x);
  io::write_labels(a.prefix + ".labels.json", {s.truth, std::nullopt});
  return 0;
}

struct SynthVarArgs {
  int length = 400;
  std::string stds = "1,3";
  std::uint64_t seed = 0;
  std::string prefix = "synth";
};

int run_synth_var(const SynthVarArgs& a) {
  const auto s = synth::synth_varchange(a.length, parse_list(a.stds), a.seed);
  io::write_dataset(a.prefix + ".csv", s.x);
  io::write_labels(a.prefix + ".labels.json", {s.truth, std::nullopt});
  return 0;
}

struct SynthBlobArgs {
  synth::BlobImageConfig cfg;
  std::uint64_t seed = 0;
  std::string prefix = "blob";
};

int run_synth_blob(const SynthBlobArgs& a) {
  const auto s = synth::synth_blob_image(a.cfg, a.seed);
  io::write_dataset(a.prefix + ".csv", s.x);
  io::write_labels(a.prefix + ".labels.json", {s.truth, std::nullopt});
  return 0;
}

struct TrainArgs {
  std::string task = "changepoint";
  std::string metric = "diag";
  std::string reg = "l2";
  double reg_weight = 1e-3;
  std::string mode = "penalized";
  std::string data;
  std::string labels;
  bool partial = false;
  std::string hermite;
  std::string out = "model.json";
  int iters = 200;
  double step = 1.0;
  std::uint64_t seed = 0;
  std::string init = "pca";
  int outer = 10;
};

int run_train(const TrainArgs& a) {
  const Task task = io::task_from_string(a.task);
  const MetricKind kind = a.metric == "full" ? MetricKind::full : MetricKind::diagonal;
  TrainerConfig cfg;
  cfg.task = task;
  cfg.mode = parse_mode(a.mode);
  cfg.max_iters = a.iters;
  cfg.step0 = a.step;
  cfg.seed = a.seed;
  cfg.reg.weight = a.reg_weight;
  cfg.reg.kind = a.reg == "l1" ? RegKind::l1_diag : a.reg == "trace" ? RegKind::trace : RegKind::frobenius_sq;
  if (cfg.reg.kind == RegKind::l1_diag && kind != MetricKind::diagonal)
    throw ConfigError("--reg l1 requires --metric diag");
  if (task == Task::ncuts && !cfg.mode.known) throw ConfigError("ncuts training requires --mode known:K");

  std::optional<HermiteConfig> hermite;
  if (!a.hermite.empty()) {
    const auto v = parse_list(a.hermite);
    if (v.size() > 2 || v[0] < 1 || v[0] != static_cast<int>(v[0])) throw ConfigError("--hermite expects r[,sigma]");
    HermiteConfig h;
    h.order = static_cast<int>(v[0]);
    if (v.size() == 2) {
      if (!(v[1] > 0.0)) throw ConfigError("--hermite sigma must be > 0");
      h.sigma = v[1];
    }
    hermite = h;
  }

  const auto data_files = expand(a.data);
  const auto label_files = expand(a.labels);
  if (data_files.size() != label_files.size())
    throw ConfigError("--data and --labels match different numbers of files");

  std::vector<TrainingSample> samples;
  std::vector<Eigen::MatrixXd> feats;
  PartialLabels partial;
  for (std::size_t i = 0; i < data_files.size(); ++i) {
    Eigen::MatrixXd x = features_for(io::read_dataset(data_files[i]), hermite);
    auto lf = io::read_labels(label_files[i]);
    if (x.rows() != lf.partition.size())
      throw FormatError(label_files[i] + ": label count does not match " + data_files[i]);
    if (a.partial) {
      if (!lf.constraints) throw ConfigError(label_files[i] + ": --partial needs a constraints block");
      partial.constraints.push_back(*lf.constraints);
    }
    samples.push_back(TrainingSample::make(x, lf.partition, task));
    feats.push_back(samples.back().x);
  }

  const int dim = static_cast<int>(feats.front().cols());
  MetricModel init = a.init == "identity" ? MetricModel::identity(dim, kind, task, cfg.mode)
                                          : pca_init(feats, std::nullopt, kind, task, cfg.mode);
  init = init.with_feature_config(hermite);

  io::ModelFile out{init, {}};
  out.info.seed = a.seed;
  if (task == Task::ncuts) {
    CccpOptions opts;
    opts.outer_iters = a.outer;
    opts.inner_iters = a.iters;
    const auto r = train_ncuts_cccp(samples, cfg, init, opts);
    out.model = r.model;
    out.info.iterations = static_cast<int>(r.outer_objective.size()) - 1;
    out.info.final_objective = r.outer_objective.back();
  } else if (a.partial) {
    if (task != Task::changepoint) throw ConfigError("--partial is only supported for change-point training");
    PartialTrainOptions opts;
    opts.kind = kind;
    const auto r = train_partial(samples, partial, cfg, opts);
    out.model = r.model;
    out.info.iterations = r.rounds;
    std::vector<TrainingSample> completed;
    for (std::size_t i = 0; i < samples.size(); ++i)
      completed.push_back(TrainingSample::make(samples[i].x, r.completed.empty() ? samples[i].truth : r.completed[i], task));
    out.info.final_objective = structured_objective(completed, r.model, cfg).value;
  } else {
    const auto r = train(samples, cfg, init);
    out.model = r.model;
    out.info.iterations = r.iterations;
    out.info.final_objective = r.best_objective;
  }
  out.model = out.model.with_feature_config(hermite);
  io::write_model(a.out, out);
  print_value(out.info.final_objective);
  return 0;
}

struct DecodeArgs {
  std::string model;
  std::string data;
  int k = 0;
  int restarts = 20;
  std::uint64_t seed = 0;
  std::string out = "labels.json";
};

int run_decode(const DecodeArgs& a) {
  const auto mf = io::read_model(a.model);
  const Eigen::MatrixXd x = features_for(io::read_dataset(a.data), mf.model.feature_config());
  if (x.cols() != mf.model.dim()) throw FormatError(a.data + ": feature dimension does not match the model");
  DecodeOptions opts;
  if (a.k > 0) opts.k = a.k;
  opts.restarts = a.restarts;
  opts.seed = a.seed;
  io::write_labels(a.out, {decode(x, mf.model, opts), std::nullopt});
  return 0;
}

struct EvalArgs {
  std::string pred;
  std::string truth;
  std::string loss = "frobenius";
};

int run_eval(const EvalArgs& a) {
  const auto p = io::read_labels(a.pred).partition;
  const auto q = io::read_labels(a.truth).partition;
  if (p.size() != q.size()) throw FormatError("label files have different lengths");
  if (a.loss == "frobenius") {
    print_value(partition_loss(p, q));
  } else if (a.loss == "rand") {
    print_value(rand_index(p, q));
  } else if (a.loss == "hausdorff") {
    if (!p.sequential() || !q.sequential()) throw ConfigError("hausdorff loss needs sequential label files");
    print_value(hausdorff(p, q).distance);
  } else {
    throw ConfigError("unknown loss '" + a.loss + "'");
  }
  return 0;
}

int run_report(const std::string& path) {
  const auto mf = io::read_model(path);
  const auto& m = mf.model;
  std::cout << "kind " << (m.kind() == MetricKind::full ? "full" : "diagonal") << "\n";
  std::cout << "task " << io::to_string(m.task()) << "\n";
  std::cout << "dim " << m.dim() << "\n";
  if (m.kind() == MetricKind::diagonal) {
    std::cout << "diagonal\n";
    for (Eigen::Index i = 0; i < m.parameters().rows(); ++i) std::cout << io::format_double(m.parameters()(i, 0)) << "\n";
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m.matrix());
    const Eigen::VectorXd ev = eig.eigenvalues().reverse();
    std::cout << "eigenvalues\n";
    for (Eigen::Index i = 0; i < ev.size(); ++i) std::cout << io::format_double(ev(i)) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Metric learning for partitioning problems"};
  app.require_subcommand(1);

  SynthCpdArgs cpd;
  auto* c_cpd = app.add_subcommand("synth-cpd", "generate a multivariate change-point series");
  c_cpd->add_option("--dims", cpd.cfg.dims);
  c_cpd->add_option("--length", cpd.cfg.length);
  c_cpd->add_option("--relevant", cpd.cfg.relevant);
  c_cpd->add_option("--noise", cpd.cfg.noise);
  c_cpd->add_option("--k-min", cpd.cfg.k_min);
  c_cpd->add_option("--k-max", cpd.cfg.k_max);
  c_cpd->add_option("--seed", cpd.seed);
  c_cpd->add_option("--out-prefix", cpd.prefix);

  SynthVarArgs var;
  auto* c_var = app.add_subcommand("synth-var", "generate a series with piecewise-constant variance");
  c_var->add_option("--length", var.length);
  c_var->add_option("--stds", var.stds, "comma-separated standard deviations, one per segment");
  c_var->add_option("--seed", var.seed);
  c_var->add_option("--out-prefix", var.prefix);

  SynthBlobArgs blob;
  auto* c_blob = app.add_subcommand("synth-blob", "generate a two-region image as pixel features");
  c_blob->add_option("--height", blob.cfg.height);
  c_blob->add_option("--width", blob.cfg.width);
  c_blob->add_option("--noise", blob.cfg.noise);
  c_blob->add_option("--seed", blob.seed);
  c_blob->add_option("--out-prefix", blob.prefix);

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "learn a metric from labelled datasets");
  c_train->add_option("--task", tr.task)->check(CLI::IsMember({"changepoint", "cluster", "ncuts"}));
  c_train->add_option("--metric", tr.metric)->check(CLI::IsMember({"full", "diag"}));
  c_train->add_option("--reg", tr.reg)->check(CLI::IsMember({"l2", "l1", "trace"}));
  c_train->add_option("--reg-weight", tr.reg_weight);
  c_train->add_option("--mode", tr.mode, "known:K or penalized");
  c_train->add_option("--data", tr.data)->required();
  c_train->add_option("--labels", tr.labels)->required();
  c_train->add_flag("--partial", tr.partial, "use the constraints blocks of the label files");
  c_train->add_option("--hermite", tr.hermite, "r[,sigma]: embed every column with r Hermite functions");
  c_train->add_option("--out", tr.out);
  c_train->add_option("--iters", tr.iters);
  c_train->add_option("--step", tr.step);
  c_train->add_option("--seed", tr.seed);
  c_train->add_option("--init", tr.init)->check(CLI::IsMember({"pca", "identity"}));
  c_train->add_option("--outer", tr.outer, "outer iterations for ncuts");

  DecodeArgs dec;
  auto* c_dec = app.add_subcommand("decode", "partition a dataset under a trained metric");
  c_dec->add_option("--model", dec.model)->required();
  c_dec->add_option("--data", dec.data)->required();
  c_dec->add_option("--k", dec.k);
  c_dec->add_option("--restarts", dec.restarts);
  c_dec->add_option("--seed", dec.seed);
  c_dec->add_option("--out", dec.out);

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "compare two label files");
  c_eval->add_option("--pred", ev.pred)->required();
  c_eval->add_option("--truth", ev.truth)->required();
  c_eval->add_option("--loss", ev.loss)->check(CLI::IsMember({"frobenius", "rand", "hausdorff"}));

  std::string report_model;
  auto* c_report = app.add_subcommand("report", "print the metric for inspection");
  c_report->add_option("--model", report_model)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*c_cpd) return run_synth_cpd(cpd);
    if (*c_var) return run_synth_var(var);
    if (*c_blob) return run_synth_blob(blob);
    if (*c_train) return run_train(tr);
    if (*c_dec) return run_decode(dec);
    if (*c_eval) return run_eval(ev);
    if (*c_report) return run_report(report_model);
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const InfeasibleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
