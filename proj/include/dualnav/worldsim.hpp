#pragma once

// Procedural stand-in for the photo-realistic simulator: obstacle worlds,
// proximity sensing, a ray-cast grayscale camera and weather corruption.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dualnav/gridmap.hpp"

namespace dualnav {

enum class Domain { Forest, Plain, Savanna };
std::string_view to_string(Domain d);
Domain domain_from_string(std::string_view s);
// Obstacles per 100 m^2.
double default_density(Domain d);

enum class WeatherKind { Clear, Snow, Dust, Fog };
std::string_view to_string(WeatherKind w);
WeatherKind weather_kind_from_string(std::string_view s);

struct WeatherCondition {
  WeatherKind kind = WeatherKind::Clear;
  double intensity = 0.0;

  double visibility() const { return 1.0 - intensity; }
  friend bool operator==(const WeatherCondition&, const WeatherCondition&) = default;
};

// Throws std::invalid_argument unless intensity is one of 0, 0.15, 0.30 and
// Clear comes with intensity 0.
WeatherCondition make_weather(WeatherKind kind, double intensity);

struct WorldSpec {
  Domain domain = Domain::Forest;
  double width_m = 100.0;
  double height_m = 100.0;
  double obstacle_density = 12.0;
  int dynamic_count = 0;
  std::uint64_t seed = 0;
  double obstacle_radius = 0.3;
  // Cells kept free of obstacles.
  std::optional<GridCoord> start;
  std::optional<GridCoord> goal;

  friend bool operator==(const WorldSpec&, const WorldSpec&) = default;
};

struct Obstacle {
  double x = 0.0;
  double y = 0.0;
  double radius = 0.3;
  double vx = 0.0;
  double vy = 0.0;
  // Scales the rendered band height; 1 is a full-height trunk.
  double shade = 1.0;

  bool moving() const { return vx != 0.0 || vy != 0.0; }
  friend bool operator==(const Obstacle&, const Obstacle&) = default;
};

class GenerationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Immutable world snapshot. Static obstacles live behind a shared bucket
// index so that stepping the movers is cheap.
class World {
 public:
  World(WorldSpec spec, std::vector<Obstacle> obstacles);

  const WorldSpec& spec() const { return spec_; }
  int width_cells() const;
  int height_cells() const;
  bool contains(GridCoord c) const;

  std::size_t obstacle_count() const;
  std::span<const Obstacle> static_obstacles() const;
  std::span<const Obstacle> movers() const { return movers_; }
  // Static obstacles first, then movers.
  std::vector<Obstacle> obstacles() const;

  // Calls f for every obstacle whose centre lies within `range` of (x, y)
  // (plus every mover). Callers still do the exact geometry.
  template <class F>
  void for_each_near(double x, double y, double range, F&& f) const;

  World with_movers(std::vector<Obstacle> movers) const;

  friend bool operator==(const World& a, const World& b) {
    return a.spec_ == b.spec_ && a.obstacles() == b.obstacles();
  }

 private:
  struct StaticLayer {
    std::vector<Obstacle> obstacles;
    int bucket_cols = 0;
    int bucket_rows = 0;
    std::vector<std::uint32_t> offsets;
    std::vector<std::uint32_t> ids;
    double max_radius = 0.0;
  };

  World(WorldSpec spec, std::shared_ptr<const StaticLayer> statics, std::vector<Obstacle> movers);
  static std::shared_ptr<const StaticLayer> index(std::vector<Obstacle> obstacles, double w,
                                                  double h);

  WorldSpec spec_;
  std::shared_ptr<const StaticLayer> statics_;
  std::vector<Obstacle> movers_;
};

template <class F>
void World::for_each_near(double x, double y, double range, F&& f) const {
  const auto& s = *statics_;
  const double reach = range + s.max_radius;
  const int c0 = std::max(0, static_cast<int>(std::floor(x - reach)));
  const int c1 = std::min(s.bucket_cols - 1, static_cast<int>(std::floor(x + reach)));
  const int r0 = std::max(0, static_cast<int>(std::floor(y - reach)));
  const int r1 = std::min(s.bucket_rows - 1, static_cast<int>(std::floor(y + reach)));
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      const auto b = static_cast<std::size_t>(r) * s.bucket_cols + c;
      for (auto k = s.offsets[b]; k < s.offsets[b + 1]; ++k) f(s.obstacles[s.ids[k]]);
    }
  }
  for (const auto& m : movers_) f(m);
}

World generate_world(const WorldSpec& spec);
World step_dynamics(const World& world, double dt);

void to_json(nlohmann::json& j, const WorldSpec& s);
WorldSpec world_spec_from_json(const nlohmann::json& j);
nlohmann::json world_to_json(const World& w);
World world_from_json(const nlohmann::json& j);

// True when no obstacle disc overlaps the cell's 1 m square.
bool cell_is_clear(const World& world, GridCoord cell);

inline constexpr double kSenseRange = 1.0;

// Neighbour cells (action order N, S, E, W) whose square intersects an obstacle
// lying less than 1 m from the agent's cell centre.
std::vector<GridCoord> sense_obstacles(const World& world, GridCoord agent);

inline constexpr int kFrameSide = 84;
inline constexpr int kFramePixels = kFrameSide * kFrameSide;
inline constexpr double kCameraFovDeg = 90.0;
inline constexpr double kCameraRange = 20.0;

struct CameraFrame {
  std::vector<double> pixels = std::vector<double>(kFramePixels, 0.0);

  double at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * kFrameSide + col]; }
  double mean() const;
  friend bool operator==(const CameraFrame&, const CameraFrame&) = default;
};

double background_pixel(int row);
CameraFrame background_frame();
CameraFrame render_frame(const World& world, GridCoord agent, Action facing);
CameraFrame apply_weather(const CameraFrame& frame, const WeatherCondition& weather,
                          std::uint64_t seed);

// 8-bit binary PGM, value = round((p + 1) * 127.5).
void write_pgm(const CameraFrame& frame, const std::filesystem::path& path);

}  // namespace dualnav
