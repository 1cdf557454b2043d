#pragma once

// CSV / JSON / SVG output for mission reports and decay results.

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dualnav/missions.hpp"
#include "dualnav/phases.hpp"
#include "dualnav/worldsim.hpp"

namespace dualnav {

inline constexpr int kReportSchemaVersion = 1;

// Columns: method,domain,weather,distance_m,time_s,completed,obstacles,
// predictions,corrections,random. Weather is written as kind:intensity.
std::string reports_csv(std::span<const MissionReport> reports);
// Fills only the CSV columns; label, route and failure are left empty.
std::vector<MissionReport> parse_reports_csv(std::string_view csv);

nlohmann::json report_to_json(const MissionReport& r);
MissionReport report_from_json(const nlohmann::json& j);
// {"schema": "dualnav.reports", "version": 1, "reports": [...]}
nlohmann::json reports_to_json(std::span<const MissionReport> reports);
std::vector<MissionReport> reports_from_json(const nlohmann::json& j);

std::string weather_label(const WeatherCondition& w);
WeatherCondition weather_from_label(std::string_view s);

// rule,update,min,q1,median,q3,max
std::string decay_csv(std::span<const DecayResult> results);

// Obstacles as circles, the route as a polyline plus one square per visited
// cell whose opacity grows with its visit count, and start/goal markers.
std::string route_svg(const MissionReport& report, const World& world, GridCoord start, GridCoord goal);

// Writes text to a file, throwing std::runtime_error if it cannot.
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace dualnav
