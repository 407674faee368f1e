#pragma once

#include "mlpart/dp_solver.hpp"
#include "mlpart/error.hpp"
#include "mlpart/hermite.hpp"
#include "mlpart/metric_model.hpp"
#include "mlpart/partition.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/Dense>

#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace mlpart::io {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Numeric tables: one header line, then comma-separated rows.
// ---------------------------------------------------------------------------

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline Eigen::MatrixXd parse_table(std::istream& in, const std::string& origin = "<stream>") {
  std::string line;
  if (!std::getline(in, line)) throw FormatError(origin + ": missing header row");
  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const char* begin = cell.c_str();
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(begin, &end);
      while (end && (*end == ' ' || *end == '\t')) ++end;
      if (end == begin || *end != '\0' || errno == ERANGE || !std::isfinite(v))
        throw FormatError(origin + ":" + std::to_string(line_no) + ": invalid number '" + cell + "'");
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw FormatError(origin + ":" + std::to_string(line_no) + ": row length differs from the first row");
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.front().empty()) throw FormatError(origin + ": table has no data rows");
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return x;
}

inline Eigen::MatrixXd read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path + ": cannot open dataset");
  return parse_table(in, path);
}

inline void write_dataset(const std::string& path, const Eigen::MatrixXd& x) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(path + ": cannot open for writing");
  for (Eigen::Index c = 0; c < x.cols(); ++c) out << (c ? "," : "") << "x" << c;
  out << "\n";
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) out << (c ? "," : "") << format_double(x(r, c));
    out << "\n";
  }
}

// ---------------------------------------------------------------------------
// Label files
// ---------------------------------------------------------------------------

struct LabelFile {
  Partition partition;
  std::optional<SequentialConstraints> constraints;
};

inline json to_json(const LabelFile& f) {
  json j;
  j["type"] = f.partition.sequential() ? "sequential" : "cluster";
  j["labels"] = f.partition.labels();
  if (f.constraints) {
    json c;
    c["forced_breaks"] = f.constraints->forced_breaks;
    json intervals = json::array();
    for (const auto& [a, b] : f.constraints->forbidden_intervals) intervals.push_back({a, b});
    c["forbidden_intervals"] = intervals;
    j["constraints"] = c;
  }
  return j;
}

inline LabelFile label_file_from_json(const json& j, const std::string& origin = "<json>") {
  try {
    const std::string type = j.at("type").get<std::string>();
    if (type != "sequential" && type != "cluster") throw FormatError(origin + ": unknown label type '" + type + "'");
    auto labels = j.at("labels").get<std::vector<int>>();
    std::optional<SequentialConstraints> constraints;
    if (j.contains("constraints")) {
      const auto& c = j.at("constraints");
      SequentialConstraints sc;
      if (c.contains("forced_breaks")) sc.forced_breaks = c.at("forced_breaks").get<std::vector<int>>();
      if (c.contains("forbidden_intervals"))
        for (const auto& iv : c.at("forbidden_intervals")) {
          if (!iv.is_array() || iv.size() != 2) throw FormatError(origin + ": forbidden interval must be [a, b]");
          sc.forbidden_intervals.emplace_back(iv[0].get<int>(), iv[1].get<int>());
        }
      constraints = std::move(sc);
    }
    return {Partition(std::move(labels), type == "sequential"), std::move(constraints)};
  } catch (const FormatError&) {
    throw;
  } catch (const std::exception& e) {
    throw FormatError(origin + ": " + e.what());
  }
}

inline json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path + ": cannot open");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

inline void write_json(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(path + ": cannot open for writing");
  out << j.dump(2) << "\n";
}

inline LabelFile read_labels(const std::string& path) { return label_file_from_json(read_json(path), path); }

inline void write_labels(const std::string& path, const LabelFile& f) { write_json(path, to_json(f)); }

// ---------------------------------------------------------------------------
// Model files
// ---------------------------------------------------------------------------

struct TrainingInfo {
  int iterations = 0;
  double final_objective = 0.0;
  std::uint64_t seed = 0;
};

struct ModelFile {
  MetricModel model;
  TrainingInfo info;
};

inline std::string to_string(Task t) {
  switch (t) {
    case Task::changepoint: return "changepoint";
    case Task::cluster: return "cluster";
    case Task::ncuts: return "ncuts";
  }
  return "?";
}

inline Task task_from_string(const std::string& s) {
  if (s == "changepoint") return Task::changepoint;
  if (s == "cluster") return Task::cluster;
  if (s == "ncuts") return Task::ncuts;
  throw FormatError("unknown task '" + s + "'");
}

inline json to_json(const ModelFile& f) {
  const auto& m = f.model;
  json j;
  j["kind"] = m.kind() == MetricKind::full ? "full" : "diagonal";
  j["task"] = to_string(m.task());
  j["k_mode"] = m.k_mode().known ? json{{"type", "known"}, {"k", m.k_mode().k}} : json{{"type", "penalized"}};
  j["dim"] = m.dim();
  std::vector<double> values;
  const Eigen::MatrixXd& p = m.parameters();
  for (Eigen::Index r = 0; r < p.rows(); ++r)
    for (Eigen::Index c = 0; c < p.cols(); ++c) values.push_back(p(r, c));
  j[m.kind() == MetricKind::full ? "matrix" : "diagonal"] = values;
  if (m.feature_config()) {
    const auto& h = *m.feature_config();
    j["feature_config"] = {{"type", "hermite"},
                           {"order", h.order},
                           {"sigma", h.sigma ? json(*h.sigma) : json(nullptr)},
                           {"standardize", h.standardize}};
  } else {
    j["feature_config"] = nullptr;
  }
  j["training"] = {{"iterations", f.info.iterations}, {"final_objective", f.info.final_objective}, {"seed", f.info.seed}};
  return j;
}

inline ModelFile model_file_from_json(const json& j, const std::string& origin = "<json>") {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    const Task task = task_from_string(j.at("task").get<std::string>());
    const auto& km = j.at("k_mode");
    const std::string km_type = km.at("type").get<std::string>();
    KMode mode;
    if (km_type == "known") {
      mode = KMode::known_k(km.value("k", 0));
    } else if (km_type == "penalized") {
      mode = KMode::penalized();
    } else {
      throw FormatError(origin + ": unknown k_mode '" + km_type + "'");
    }
    const int dim = j.at("dim").get<int>();
    if (dim < 1) throw FormatError(origin + ": dim must be >= 1");
    std::optional<MetricModel> model;
    if (kind == "full") {
      const auto v = j.at("matrix").get<std::vector<double>>();
      if (v.size() != static_cast<std::size_t>(dim) * dim) throw FormatError(origin + ": matrix has wrong size");
      Eigen::MatrixXd b(dim, dim);
      for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) b(r, c) = v[static_cast<std::size_t>(r * dim + c)];
      model = MetricModel::full(b, task, mode);
    } else if (kind == "diagonal") {
      const auto v = j.at("diagonal").get<std::vector<double>>();
      if (v.size() != static_cast<std::size_t>(dim)) throw FormatError(origin + ": diagonal has wrong size");
      model = MetricModel::diagonal(Eigen::Map<const Eigen::VectorXd>(v.data(), dim), task, mode);
    } else {
      throw FormatError(origin + ": unknown metric kind '" + kind + "'");
    }
    if (!model->parameters().allFinite()) throw FormatError(origin + ": non-finite metric entries");
    if (j.contains("feature_config") && !j.at("feature_config").is_null()) {
      const auto& fc = j.at("feature_config");
      HermiteConfig h;
      h.order = fc.at("order").get<int>();
      if (fc.contains("sigma") && !fc.at("sigma").is_null()) h.sigma = fc.at("sigma").get<double>();
      h.standardize = fc.value("standardize", true);
      model = model->with_feature_config(h);
    }
    TrainingInfo info;
    if (j.contains("training")) {
      const auto& t = j.at("training");
      info.iterations = t.value("iterations", 0);
      info.final_objective = t.value("final_objective", 0.0);
      info.seed = t.value("seed", std::uint64_t{0});
    }
    return {*model, info};
  } catch (const FormatError&) {
    throw;
  } catch (const std::exception& e) {
    throw FormatError(origin + ": " + e.what());
  }
}

inline ModelFile read_model(const std::string& path) { return model_file_from_json(read_json(path), path); }

inline void write_model(const std::string& path, const ModelFile& f) { write_json(path, to_json(f)); }

}  // namespace mlpart::io
