#pragma once

#include <cstdint>
#include <json.hpp>
#include <string>
#include <utility>
#include <vector>

#include "riffle/cold_spots.hpp"
#include "riffle/constants.hpp"
#include "riffle/hypergeometric.hpp"
#include "riffle/psi_class.hpp"
#include "riffle/shuffle.hpp"
#include "riffle/simplex.hpp"
#include "riffle/statistics.hpp"

namespace riffle::io {

using nlohmann::json;

inline constexpr const char* kVersion = "1.0.0";

/// Accepts JSON ({"type": ...}), a shorthand like "beta:2,16" or
/// "point:0.5,0.5", or a built-in name. ParseError carries line:column.
SimplexMeasure parse_measure(const std::string& text);
/// JSON ({"type": ...}) or shorthand: gsr, uniform_cut, bisection,
/// fixed_fraction:q..., multinomial:p..., explicit:3,2;2,3, measure:<measure>.
CutProcess parse_process(const std::string& text);

/// The ten reference measures, in table order.
std::vector<std::pair<std::string, SimplexMeasure>> table1_measures();

json to_json(const SimplexMeasure& mu);
json to_json(const CutProcess& process);
json to_json(const ConstantsBundle& b);
json to_json(const TvBoundReport& r);
json to_json(const ColdSpotSet& H);
json to_json(const PsiConstants& c);
json to_json(const NonconvexityReport& r);
json to_json(const ConcentrationRow& r);

std::uint64_t fnv1a(const std::string& text);

enum class Format { Csv, Json };
Format parse_format(const std::string& name);

/// Rows are flat JSON objects; CSV keeps the given column order and puts
/// config and meta on leading '#' lines.
std::string render(const json& config, const std::vector<std::string>& columns, const json& rows,
                   Format format);

/// {"error": code, "message": ...}
json error_json(const std::exception& e);

}  // namespace riffle::io
