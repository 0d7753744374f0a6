#pragma once

#include "synthfid/dataset.hpp"
#include "synthfid/mogp.hpp"
#include "synthfid/sampler.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>

namespace synthfid {

/// Canonical float formatting: 17 significant digits, "%.17g".
std::string format_double(double v);

/// Long-format CSV with header `x0,...,x{d-1},fidelity,y`. Rows may come in
/// any order; every fidelity must be observed at every distinct point.
/// Throws ParseError (with line number) or InvalidDataError.
FidelityDataset read_dataset_csv(std::istream& in, const std::string& source = {});
FidelityDataset read_dataset_file(const std::string& path);

/// Writes fidelity-major rows, points in dataset order.
void write_dataset_csv(std::ostream& out, const FidelityDataset& data);
void write_dataset_file(const std::string& path, const FidelityDataset& data);

inline constexpr int kModelSchemaVersion = 1;

nlohmann::json fit_config_to_json(const FitConfig& config);
FitConfig fit_config_from_json(const nlohmann::json& j);

/// Model archive: schema version, hyperparameters, task factor, the training
/// data, fit diagnostics and the fit configuration.
nlohmann::json model_to_json(const MogpModel& model, const FitConfig& config);
MogpModel model_from_json(const nlohmann::json& j);
FitConfig model_config_from_json(const nlohmann::json& j);

nlohmann::json sample_report(const SyntheticSample& sample, const FidelityDataset& data);

void write_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::string& path);

}  // namespace synthfid
