#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mfgc/assumptions.hpp"
#include "mfgc/coupler.hpp"

namespace mfgc::cli {

/// Formats with 17 significant digits, enough to round-trip a double.
std::string format_double(double v);

/// Writes `t,x,value` rows, one per (time level, node), time-major.
template <class Tag>
void write_field_csv(const std::string& path, const std::vector<NodalField<Tag>>& traj, const TimeGrid& tgrid);

/// Reads a field file back into nt+1 slices on `grid`. Throws std::runtime_error on malformed input.
std::vector<std::vector<double>> read_field_csv(const std::string& path, std::size_t n);

nlohmann::json to_json(const DiagnosticsReport& d);
nlohmann::json to_json(const StructuralConstants& c);
nlohmann::json to_json(const AssumptionReport& r);

/// summary.json body: converged, outer_iterations, residual_history, diagnostics,
/// config_echo plus a few solver facts.
nlohmann::json summary_json(const SolveResult& result, const Model& model, const nlohmann::json& config_echo);

/// Serialises with non-finite numbers as the strings "inf", "-inf", "nan".
std::string dump(const nlohmann::json& j);

} // namespace mfgc::cli
