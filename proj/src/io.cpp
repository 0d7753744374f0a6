#include "synthfid/io.hpp"

#include "synthfid/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace synthfid {
namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, int line) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end) throw ParseError("invalid number '" + s + "'", line);
  if (!std::isfinite(v)) throw ParseError("non-finite value '" + s + "'", line);
  return v;
}

json matrix_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

MatrixXd matrix_from_json(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(row.size()) != cols) throw InvalidDataError("archive: ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

VectorXd vector_from_json(const json& j) {
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j.at(static_cast<std::size_t>(i)).get<double>();
  return v;
}

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double from_nullable(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

FidelityDataset read_dataset_csv(std::istream& in, const std::string& source) {
  std::string line;
  int line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split(line);
      break;
    }
  }
  if (header.empty()) throw ParseError("empty input; expected header x0,...,fidelity,y", std::max(line_no, 1));
  if (header.size() < 3) throw ParseError("header needs at least x0,fidelity,y", line_no);
  const std::size_t dims = header.size() - 2;
  for (std::size_t d = 0; d < dims; ++d) {
    if (header[d] != "x" + std::to_string(d)) {
      throw ParseError("header column " + std::to_string(d) + " should be 'x" + std::to_string(d) +
                           "', found '" + header[d] + "'",
                       line_no);
    }
  }
  if (header[dims] != "fidelity" || header[dims + 1] != "y") {
    throw ParseError("header must end with 'fidelity,y'", line_no);
  }

  std::map<std::vector<double>, std::size_t> point_index;
  std::vector<std::vector<double>> points;
  std::map<std::pair<std::size_t, long>, double> values;
  long max_fidelity = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    if (fields.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                           std::to_string(fields.size()),
                       line_no);
    }
    std::vector<double> point(dims);
    for (std::size_t d = 0; d < dims; ++d) point[d] = parse_double(fields[d], line_no);
    long fid = 0;
    {
      const std::string& f = fields[dims];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), fid);
      if (f.empty() || ec != std::errc() || ptr != f.data() + f.size() || fid < 0) {
        throw ParseError("fidelity must be a non-negative integer, found '" + f + "'", line_no);
      }
    }
    const double y = parse_double(fields[dims + 1], line_no);
    auto [it, inserted] = point_index.try_emplace(point, points.size());
    if (inserted) points.push_back(point);
    if (!values.emplace(std::make_pair(it->second, fid), y).second) {
      throw ParseError("duplicate value for fidelity " + std::to_string(fid) + " at this point", line_no);
    }
    max_fidelity = std::max(max_fidelity, fid);
  }
  if (points.empty()) throw ParseError("no data rows", line_no + 1);

  const auto nx = static_cast<Eigen::Index>(points.size());
  const auto nt = static_cast<Eigen::Index>(max_fidelity + 1);
  MatrixXd x(nx, static_cast<Eigen::Index>(dims));
  MatrixXd y(nx, nt);
  for (Eigen::Index i = 0; i < nx; ++i) {
    for (std::size_t d = 0; d < dims; ++d) x(i, static_cast<Eigen::Index>(d)) = points[static_cast<std::size_t>(i)][d];
    for (Eigen::Index k = 0; k < nt; ++k) {
      auto it = values.find({static_cast<std::size_t>(i), static_cast<long>(k)});
      if (it == values.end()) {
        throw InvalidDataError("block design violated: fidelity " + std::to_string(k) +
                               " has no value at point " + std::to_string(i));
      }
      y(i, k) = it->second;
    }
  }
  return FidelityDataset(std::move(x), std::move(y), {}, source);
}

FidelityDataset read_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidDataError("cannot open '" + path + "'");
  return read_dataset_csv(in, path);
}

void write_dataset_csv(std::ostream& out, const FidelityDataset& data) {
  for (Eigen::Index d = 0; d < data.num_dims(); ++d) out << 'x' << d << ',';
  out << "fidelity,y\n";
  for (Eigen::Index k = 0; k < data.num_fidelities(); ++k) {
    for (Eigen::Index i = 0; i < data.num_points(); ++i) {
      for (Eigen::Index d = 0; d < data.num_dims(); ++d) out << format_double(data.x(i, d)) << ',';
      out << k << ',' << format_double(data.y(i, k)) << '\n';
    }
  }
}

void write_dataset_file(const std::string& path, const FidelityDataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidDataError("cannot write '" + path + "'");
  write_dataset_csv(out, data);
}

json fit_config_to_json(const FitConfig& c) {
  return {{"kernel", to_string(c.kernel)},
          {"mixtures", c.mixtures},
          {"restarts", c.restarts},
          {"max_iterations", c.max_iterations},
          {"gradient_tolerance", c.gradient_tolerance},
          {"seed", c.seed},
          {"noise", to_string(c.noise)},
          {"fixed_noise", c.fixed_noise},
          {"noise_floor_relative", c.noise_floor_relative}};
}

FitConfig fit_config_from_json(const json& j) {
  FitConfig c;
  c.kernel = kernel_kind_from_string(j.at("kernel").get<std::string>());
  c.mixtures = j.at("mixtures").get<int>();
  c.restarts = j.at("restarts").get<int>();
  c.max_iterations = j.at("max_iterations").get<int>();
  c.gradient_tolerance = j.at("gradient_tolerance").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  const auto noise = j.at("noise").get<std::string>();
  if (noise == "shared") c.noise = NoiseMode::Shared;
  else if (noise == "per-fidelity") c.noise = NoiseMode::PerFidelity;
  else if (noise == "fixed") c.noise = NoiseMode::Fixed;
  else throw InvalidDataError("archive: unknown noise mode '" + noise + "'");
  c.fixed_noise = j.at("fixed_noise").get<double>();
  c.noise_floor_relative = j.value("noise_floor_relative", c.noise_floor_relative);
  return c;
}

json model_to_json(const MogpModel& model, const FitConfig& config) {
  const auto& p = model.params();
  json kernel = {{"kind", to_string(p.kind)}};
  if (p.kind == KernelKind::Rbf) {
    kernel["lengthscales"] = vector_to_json(p.lengthscales);
    kernel["signal_variance"] = p.signal_variance;
  } else {
    json comps = json::array();
    for (const auto& c : p.components) {
      comps.push_back({{"weight", c.weight},
                       {"mean", vector_to_json(c.mean)},
                       {"variance", vector_to_json(c.variance)}});
    }
    kernel["components"] = std::move(comps);
  }
  const auto& d = model.diagnostics();
  json restarts = json::array();
  for (std::size_t i = 0; i < d.restart_final_lml.size(); ++i) {
    restarts.push_back({{"initial_lml", nullable(d.restart_initial_lml[i])},
                        {"final_lml", nullable(d.restart_final_lml[i])},
                        {"failure", d.restart_failures[i]}});
  }
  const auto& data = model.data();
  return {{"schema_version", kModelSchemaVersion},
          {"format", "synthfid-model"},
          {"kernel", std::move(kernel)},
          {"noise_variance", p.noise_variance},
          {"task_factor", matrix_to_json(model.task().factor())},
          {"task_covariance", matrix_to_json(model.task().covariance())},
          {"diagnostics",
           {{"log_marginal_likelihood", nullable(d.log_marginal_likelihood)},
            {"iterations", d.iterations},
            {"restarts_used", d.restarts_used},
            {"best_restart", d.best_restart},
            {"restarts", std::move(restarts)}}},
          {"config", fit_config_to_json(config)},
          {"data",
           {{"labels", data.labels},
            {"source", data.source},
            {"x", matrix_to_json(data.x)},
            {"y", matrix_to_json(data.y)}}}};
}

MogpModel model_from_json(const json& j) {
  try {
    if (j.at("schema_version").get<int>() != kModelSchemaVersion) {
      throw InvalidDataError("archive: unsupported schema version " + j.at("schema_version").dump());
    }
    const json& jd = j.at("data");
    auto data = std::make_shared<const FidelityDataset>(
        matrix_from_json(jd.at("x")), matrix_from_json(jd.at("y")),
        jd.at("labels").get<std::vector<std::string>>(), jd.at("source").get<std::string>());

    const json& jk = j.at("kernel");
    KernelHyperparams params;
    params.kind = kernel_kind_from_string(jk.at("kind").get<std::string>());
    if (params.kind == KernelKind::Rbf) {
      params.lengthscales = vector_from_json(jk.at("lengthscales"));
      params.signal_variance = jk.at("signal_variance").get<double>();
    } else {
      for (const auto& jc : jk.at("components")) {
        params.components.push_back({jc.at("weight").get<double>(), vector_from_json(jc.at("mean")),
                                     vector_from_json(jc.at("variance"))});
      }
    }
    params.noise_variance = j.at("noise_variance").get<std::vector<double>>();
    params.validate();
    TaskMatrix task = TaskMatrix::from_factor(matrix_from_json(j.at("task_factor")));

    FitDiagnostics diag;
    const json& jdiag = j.at("diagnostics");
    diag.log_marginal_likelihood = from_nullable(jdiag.at("log_marginal_likelihood"));
    diag.iterations = jdiag.at("iterations").get<int>();
    diag.restarts_used = jdiag.at("restarts_used").get<int>();
    diag.best_restart = jdiag.at("best_restart").get<int>();
    for (const auto& r : jdiag.at("restarts")) {
      diag.restart_initial_lml.push_back(from_nullable(r.at("initial_lml")));
      diag.restart_final_lml.push_back(from_nullable(r.at("final_lml")));
      diag.restart_failures.push_back(r.at("failure").get<std::string>());
    }
    const FitConfig config = fit_config_from_json(j.at("config"));
    return MogpModel::build(std::move(data), std::move(params), std::move(task), std::move(diag),
                            config.jitter);
  } catch (const json::exception& e) {
    throw InvalidDataError(std::string("archive: ") + e.what());
  }
}

FitConfig model_config_from_json(const json& j) {
  try {
    return fit_config_from_json(j.at("config"));
  } catch (const json::exception& e) {
    throw InvalidDataError(std::string("archive: ") + e.what());
  }
}

json sample_report(const SyntheticSample& s, const FidelityDataset& data) {
  json columns = data.labels;
  columns.push_back("prior_draw");
  return {{"seed", s.seed},
          {"prior_draw", to_string(s.basis.mode)},
          {"basis_columns", std::move(columns)},
          {"requested", vector_to_json(s.requested)},
          {"achieved", vector_to_json(s.achieved)},
          {"max_abs_error", (s.achieved - s.requested).cwiseAbs().maxCoeff()},
          {"heuristic_weights", vector_to_json(s.heuristic_weights)},
          {"heuristic_variance", s.heuristic_variance},
          {"mirrored_heuristic", s.mirrored_heuristic},
          {"realized_variance", s.realized_variance},
          {"coefficients", vector_to_json(s.coefficients)},
          {"implied_task_cross", vector_to_json(s.implied_task_cross)},
          {"basis_correlation", matrix_to_json(s.basis.correlation)}};
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidDataError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidDataError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidDataError("'" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace synthfid
