#include "dualnav/reports.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace dualnav {

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t begin = 0;
  while (true) {
    const auto end = s.find(sep, begin);
    out.push_back(s.substr(begin, end == std::string_view::npos ? std::string_view::npos : end - begin));
    if (end == std::string_view::npos) break;
    begin = end + 1;
  }
  return out;
}

double parse_double(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw std::invalid_argument("bad number '" + std::string(s) + "'");
  }
  return v;
}

int parse_int(std::string_view s) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw std::invalid_argument("bad integer '" + std::string(s) + "'");
  }
  return v;
}

constexpr std::string_view kCsvHeader =
    "method,domain,weather,distance_m,time_s,completed,obstacles,predictions,corrections,random";

}  // namespace

std::string weather_label(const WeatherCondition& w) {
  return fmt::format("{}:{}", to_string(w.kind), w.intensity);
}

WeatherCondition weather_from_label(std::string_view s) {
  const auto colon = s.find(':');
  if (colon == std::string_view::npos) return make_weather(weather_kind_from_string(s), 0.0);
  return make_weather(weather_kind_from_string(s.substr(0, colon)), parse_double(s.substr(colon + 1)));
}

std::string reports_csv(std::span<const MissionReport> reports) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : reports) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", r.method, to_string(r.domain),
                       weather_label(r.weather), r.distance_m, r.time_s, r.completed ? 1 : 0, r.obstacles,
                       r.predictions, r.corrections, r.random);
  }
  return out;
}

std::vector<MissionReport> parse_reports_csv(std::string_view csv) {
  auto lines = split(csv, '\n');
  if (lines.empty() || lines.front() != kCsvHeader) throw std::invalid_argument("unexpected report CSV header");
  std::vector<MissionReport> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = split(lines[i], ',');
    if (f.size() != 10) throw std::invalid_argument(fmt::format("report CSV line {} has {} fields", i + 1, f.size()));
    MissionReport r;
    r.method = std::string(f[0]);
    r.domain = domain_from_string(f[1]);
    r.weather = weather_from_label(f[2]);
    r.distance_m = parse_double(f[3]);
    r.time_s = parse_double(f[4]);
    r.completed = parse_int(f[5]) != 0;
    r.obstacles = parse_int(f[6]);
    r.predictions = parse_int(f[7]);
    r.corrections = parse_int(f[8]);
    r.random = parse_int(f[9]);
    out.push_back(std::move(r));
  }
  return out;
}

nlohmann::json report_to_json(const MissionReport& r) {
  nlohmann::json route = nlohmann::json::array();
  for (auto c : r.route) route.push_back({c.row, c.col});
  return {{"label", r.label},
          {"method", r.method},
          {"domain", to_string(r.domain)},
          {"weather", to_string(r.weather.kind)},
          {"intensity", r.weather.intensity},
          {"distance_m", r.distance_m},
          {"time_s", r.time_s},
          {"completed", r.completed},
          {"obstacles", r.obstacles},
          {"predictions", r.predictions},
          {"corrections", r.corrections},
          {"random", r.random},
          {"failure", r.failure},
          {"safety_violations", r.safety_violations},
          {"route", route}};
}

MissionReport report_from_json(const nlohmann::json& j) {
  MissionReport r;
  r.label = j.at("label").get<std::string>();
  r.method = j.at("method").get<std::string>();
  r.domain = domain_from_string(j.at("domain").get<std::string>());
  r.weather = make_weather(weather_kind_from_string(j.at("weather").get<std::string>()),
                           j.at("intensity").get<double>());
  r.distance_m = j.at("distance_m").get<double>();
  r.time_s = j.at("time_s").get<double>();
  r.completed = j.at("completed").get<bool>();
  r.obstacles = j.at("obstacles").get<int>();
  r.predictions = j.at("predictions").get<int>();
  r.corrections = j.at("corrections").get<int>();
  r.random = j.at("random").get<int>();
  r.failure = j.at("failure").get<std::string>();
  r.safety_violations = j.at("safety_violations").get<int>();
  for (const auto& c : j.at("route")) r.route.push_back({c.at(0).get<int>(), c.at(1).get<int>()});
  return r;
}

nlohmann::json reports_to_json(std::span<const MissionReport> reports) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& r : reports) list.push_back(report_to_json(r));
  return {{"schema", "dualnav.reports"}, {"version", kReportSchemaVersion}, {"reports", list}};
}

std::vector<MissionReport> reports_from_json(const nlohmann::json& j) {
  if (j.at("schema") != "dualnav.reports") throw std::invalid_argument("not a report document");
  if (j.at("version").get<int>() != kReportSchemaVersion) {
    throw std::invalid_argument("unsupported report schema version");
  }
  std::vector<MissionReport> out;
  for (const auto& r : j.at("reports")) out.push_back(report_from_json(r));
  return out;
}

std::string decay_csv(std::span<const DecayResult> results) {
  std::string out = "rule,update,min,q1,median,q3,max\n";
  for (const auto& res : results) {
    for (const auto& row : res.rows) {
      out += fmt::format("{},{},{},{},{},{},{}\n", to_string(res.rule), row.update, row.min, row.q1,
                         row.median, row.q3, row.max);
    }
  }
  return out;
}

std::string route_svg(const MissionReport& report, const World& world, GridCoord start, GridCoord goal) {
  constexpr double kScale = 4.0;
  const double w = world.spec().width_m * kScale;
  const double h = world.spec().height_m * kScale;
  std::ostringstream svg;
  svg << fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n", w, h, w,
      h);
  svg << fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"black\"/>\n", w, h);
  svg << "<g class=\"obstacles\" fill=\"red\">\n";
  for (const auto& o : world.obstacles()) {
    svg << fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"{}\"/>\n", o.x * kScale, o.y * kScale, o.radius * kScale);
  }
  svg << "</g>\n";

  std::map<GridCoord, int> visits;
  for (auto c : report.route) ++visits[c];
  int most = 1;
  for (const auto& [cell, n] : visits) most = std::max(most, n);
  svg << "<g class=\"visits\" fill=\"white\">\n";
  for (const auto& [cell, n] : visits) {
    svg << fmt::format(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" data-visits=\"{}\" fill-opacity=\"{:.4f}\"/>\n",
        cell.col * kScale, cell.row * kScale, kScale, kScale, n, 0.2 + 0.8 * n / most);
  }
  svg << "</g>\n";

  if (report.route.size() > 1) {
    svg << "<polyline class=\"route\" fill=\"none\" stroke=\"white\" stroke-width=\"1\" points=\"";
    for (std::size_t i = 0; i < report.route.size(); ++i) {
      const auto c = report.route[i];
      svg << (i ? " " : "") << (c.col + 0.5) * kScale << ',' << (c.row + 0.5) * kScale;
    }
    svg << "\"/>\n";
  }
  svg << fmt::format("<circle class=\"start\" cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"lime\"/>\n",
                     (start.col + 0.5) * kScale, (start.row + 0.5) * kScale, kScale);
  svg << fmt::format("<circle class=\"goal\" cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"yellow\"/>\n",
                     (goal.col + 0.5) * kScale, (goal.row + 0.5) * kScale, kScale);
  svg << "</svg>\n";
  return svg.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace dualnav
