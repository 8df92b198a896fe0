#pragma once

#include <string>

#include <json.hpp>

#include "covspec/fluctuations.hpp"
#include "covspec/measure.hpp"
#include "covspec/outliers.hpp"
#include "covspec/simulate.hpp"
#include "covspec/stieltjes.hpp"
#include "covspec/support.hpp"

namespace covspec::io {

using json = nlohmann::ordered_json;

// Canonical on-disk model format:
// {"c": float, "nu": [[t,w],...], "spikes": [[omega_sq, mult],...]}
json model_to_json(const measure::ModelSpec& spec);
measure::ModelSpec model_from_json(const json& j);
measure::ModelSpec load_model(const std::string& path);

json support_to_json(const support::SupportReport& rep);
json outliers_to_json(const std::vector<outliers::OutlierPrediction>& preds);
json fluctuation_to_json(const fluct::FluctuationReport& rep);
json density_meta_to_json(const stieltjes::DensityCurve& curve);
json density_experiment_to_json(const sim::DensityExperiment& exp);
json fluct_experiment_to_json(const sim::FluctuationExperiment& exp);

// CSV helpers: header row, '.' decimal separator, '\n' line endings,
// %.17g formatting. Output is byte-stable for identical inputs.
std::string format_double(double v);
void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

std::string density_csv(const stieltjes::DensityCurve& curve);
std::string xm_curve_csv(const support::XmCurve& curve);

}  // namespace covspec::io
