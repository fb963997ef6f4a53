#pragma once

#include <string>

#include "ssanova/inference.hpp"
#include "ssanova/solver.hpp"

namespace ssanova {

// Writes content to path via a temp file + rename, so readers never observe
// a partial file and failed runs leave no output behind.
void write_text_atomic(const std::string& path, const std::string& content);

std::string read_text(const std::string& path);

// One JSON document holding everything inference needs: spec, factors,
// subjects, knots, coefficients, smoothing parameters, variance estimates
// and the penalized normal-equations matrix. Numeric fields round-trip at
// full precision; the same fit serializes byte-identically.
std::string model_to_json(const FittedModel& model);
FittedModel model_from_json(const std::string& text);

void save_model(const FittedModel& model, const std::string& path);
FittedModel load_model(const std::string& path);

std::string report_to_json(const FitReport& report);
FitReport report_from_json(const std::string& text);

std::string regions_to_json(const RegionSet& regions);

}  // namespace ssanova
