#include "dualnav/worldsim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

#include "dualnav/rng.hpp"

namespace dualnav {

std::string_view to_string(Domain d) {
  switch (d) {
    case Domain::Forest: return "forest";
    case Domain::Plain: return "plain";
    case Domain::Savanna: return "savanna";
  }
  return "forest";
}

Domain domain_from_string(std::string_view s) {
  if (s == "forest") return Domain::Forest;
  if (s == "plain") return Domain::Plain;
  if (s == "savanna") return Domain::Savanna;
  throw std::invalid_argument("unknown domain '" + std::string(s) + "'");
}

double default_density(Domain d) {
  switch (d) {
    case Domain::Forest: return 12.0;
    case Domain::Plain: return 1.0;
    case Domain::Savanna: return 2.0;
  }
  return 0.0;
}

std::string_view to_string(WeatherKind w) {
  switch (w) {
    case WeatherKind::Clear: return "clear";
    case WeatherKind::Snow: return "snow";
    case WeatherKind::Dust: return "dust";
    case WeatherKind::Fog: return "fog";
  }
  return "clear";
}

WeatherKind weather_kind_from_string(std::string_view s) {
  if (s == "clear") return WeatherKind::Clear;
  if (s == "snow") return WeatherKind::Snow;
  if (s == "dust") return WeatherKind::Dust;
  if (s == "fog") return WeatherKind::Fog;
  throw std::invalid_argument("unknown weather '" + std::string(s) + "'");
}

WeatherCondition make_weather(WeatherKind kind, double intensity) {
  const bool allowed = intensity == 0.0 || std::abs(intensity - 0.15) < 1e-12 ||
                       std::abs(intensity - 0.30) < 1e-12;
  if (!allowed) throw std::invalid_argument("weather intensity must be 0, 0.15 or 0.30");
  if (kind == WeatherKind::Clear && intensity != 0.0) {
    throw std::invalid_argument("clear weather has zero intensity");
  }
  if (intensity == 0.0) kind = WeatherKind::Clear;
  return {kind, intensity == 0.0 ? 0.0 : (intensity < 0.2 ? 0.15 : 0.30)};
}

// -------------------------------------------------------------------- World

World::World(WorldSpec spec, std::vector<Obstacle> obstacles) : spec_(std::move(spec)) {
  std::vector<Obstacle> statics;
  for (auto& o : obstacles) {
    if (!(o.radius > 0.0)) throw std::invalid_argument("obstacle radius must be positive");
    (o.moving() ? movers_ : statics).push_back(o);
  }
  statics_ = index(std::move(statics), spec_.width_m, spec_.height_m);
}

World::World(WorldSpec spec, std::shared_ptr<const StaticLayer> statics, std::vector<Obstacle> movers)
    : spec_(std::move(spec)), statics_(std::move(statics)), movers_(std::move(movers)) {}

std::shared_ptr<const World::StaticLayer> World::index(std::vector<Obstacle> obstacles, double w,
                                                       double h) {
  auto layer = std::make_shared<StaticLayer>();
  layer->bucket_cols = std::max(1, static_cast<int>(std::ceil(w)));
  layer->bucket_rows = std::max(1, static_cast<int>(std::ceil(h)));
  const auto buckets = static_cast<std::size_t>(layer->bucket_cols) * layer->bucket_rows;
  auto bucket_of = [&](const Obstacle& o) {
    const int c = std::clamp(static_cast<int>(std::floor(o.x)), 0, layer->bucket_cols - 1);
    const int r = std::clamp(static_cast<int>(std::floor(o.y)), 0, layer->bucket_rows - 1);
    return static_cast<std::size_t>(r) * layer->bucket_cols + c;
  };
  layer->offsets.assign(buckets + 1, 0);
  for (const auto& o : obstacles) {
    ++layer->offsets[bucket_of(o) + 1];
    layer->max_radius = std::max(layer->max_radius, o.radius);
  }
  for (std::size_t b = 0; b < buckets; ++b) layer->offsets[b + 1] += layer->offsets[b];
  layer->ids.resize(obstacles.size());
  auto fill = layer->offsets;
  for (std::uint32_t i = 0; i < obstacles.size(); ++i) layer->ids[fill[bucket_of(obstacles[i])]++] = i;
  layer->obstacles = std::move(obstacles);
  return layer;
}

int World::width_cells() const { return static_cast<int>(std::ceil(spec_.width_m)); }
int World::height_cells() const { return static_cast<int>(std::ceil(spec_.height_m)); }

bool World::contains(GridCoord c) const {
  return c.row >= 0 && c.col >= 0 && c.row < height_cells() && c.col < width_cells();
}

std::size_t World::obstacle_count() const { return statics_->obstacles.size() + movers_.size(); }

std::span<const Obstacle> World::static_obstacles() const { return statics_->obstacles; }

std::vector<Obstacle> World::obstacles() const {
  std::vector<Obstacle> all = statics_->obstacles;
  all.insert(all.end(), movers_.begin(), movers_.end());
  return all;
}

World World::with_movers(std::vector<Obstacle> movers) const {
  return World(spec_, statics_, std::move(movers));
}

namespace {

// Distance from (px, py) to the closed square of a grid cell.
double distance_to_cell(double px, double py, GridCoord cell) {
  const double qx = std::clamp(px, static_cast<double>(cell.col), cell.col + 1.0);
  const double qy = std::clamp(py, static_cast<double>(cell.row), cell.row + 1.0);
  return std::hypot(px - qx, py - qy);
}

bool disc_hits_cell(const Obstacle& o, GridCoord cell) {
  return distance_to_cell(o.x, o.y, cell) < o.radius;
}

}  // namespace

bool cell_is_clear(const World& world, GridCoord cell) {
  bool clear = true;
  world.for_each_near(cell.col + 0.5, cell.row + 0.5, 1.0, [&](const Obstacle& o) {
    if (disc_hits_cell(o, cell)) clear = false;
  });
  return clear;
}

World generate_world(const WorldSpec& spec) {
  if (!(spec.obstacle_density >= 0.0) || !std::isfinite(spec.obstacle_density)) {
    throw GenerationError("obstacle density must be a finite non-negative number");
  }
  if (!(spec.width_m > 0.0) || !(spec.height_m > 0.0)) {
    throw GenerationError("world dimensions must be positive");
  }
  if (spec.dynamic_count < 0 || (spec.dynamic_count > 0 && spec.domain != Domain::Savanna)) {
    throw GenerationError("moving obstacles are only generated for savanna worlds");
  }
  if (!(spec.obstacle_radius > 0.0)) throw GenerationError("obstacle radius must be positive");

  const double r = spec.obstacle_radius;
  const auto total = static_cast<std::size_t>(
      std::llround(spec.obstacle_density * spec.width_m * spec.height_m / 100.0));
  if (total + spec.dynamic_count > 0 && (spec.width_m < 2 * r || spec.height_m < 2 * r)) {
    throw GenerationError("world too small for obstacles of this radius");
  }

  Rng rng(spec.seed);
  auto keeps_clear = [&](const Obstacle& o) {
    return !(spec.start && disc_hits_cell(o, *spec.start)) &&
           !(spec.goal && disc_hits_cell(o, *spec.goal));
  };
  constexpr int kMaxAttempts = 10000;
  auto place = [&](Obstacle o) {
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
      o.x = rng.uniform(r, spec.width_m - r);
      o.y = rng.uniform(r, spec.height_m - r);
      if (keeps_clear(o)) return o;
    }
    throw GenerationError("cannot keep the start and goal cells clear at this density");
  };

  std::vector<Obstacle> obstacles;
  obstacles.reserve(total + spec.dynamic_count);
  for (std::size_t i = 0; i < total; ++i) {
    Obstacle o;
    o.radius = r;
    o = place(o);
    o.shade = rng.uniform(0.5, 1.0);
    obstacles.push_back(o);
  }
  for (int i = 0; i < spec.dynamic_count; ++i) {
    Obstacle o;
    o.radius = r;
    o = place(o);
    o.shade = rng.uniform(0.5, 1.0);
    const double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double speed = rng.uniform(0.5, 1.5);
    o.vx = speed * std::cos(heading);
    o.vy = speed * std::sin(heading);
    if (!o.moving()) o.vx = speed;
    obstacles.push_back(o);
  }
  return World(spec, std::move(obstacles));
}

World step_dynamics(const World& world, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_dynamics: dt must be positive");
  if (world.movers().empty()) return world;
  const double w = world.spec().width_m;
  const double h = world.spec().height_m;
  auto advance = [](double& p, double& v, double dt, double lo, double hi) {
    p += v * dt;
    // Bounce until inside; a single reflection suffices unless dt is huge.
    for (int i = 0; i < 8 && (p < lo || p > hi); ++i) {
      if (p < lo) p = 2 * lo - p;
      if (p > hi) p = 2 * hi - p;
      v = -v;
    }
    p = std::clamp(p, lo, hi);
  };
  std::vector<Obstacle> movers(world.movers().begin(), world.movers().end());
  for (auto& m : movers) {
    advance(m.x, m.vx, dt, m.radius, w - m.radius);
    advance(m.y, m.vy, dt, m.radius, h - m.radius);
  }
  return world.with_movers(std::move(movers));
}

void to_json(nlohmann::json& j, const WorldSpec& s) {
  j = {{"domain", to_string(s.domain)},
       {"width_m", s.width_m},
       {"height_m", s.height_m},
       {"obstacle_density", s.obstacle_density},
       {"dynamic_count", s.dynamic_count},
       {"seed", s.seed},
       {"obstacle_radius", s.obstacle_radius}};
  if (s.start) j["start"] = {s.start->row, s.start->col};
  if (s.goal) j["goal"] = {s.goal->row, s.goal->col};
}

WorldSpec world_spec_from_json(const nlohmann::json& j) {
  WorldSpec s;
  s.domain = domain_from_string(j.at("domain").get<std::string>());
  s.width_m = j.at("width_m").get<double>();
  s.height_m = j.at("height_m").get<double>();
  s.obstacle_density = j.at("obstacle_density").get<double>();
  s.dynamic_count = j.value("dynamic_count", 0);
  s.seed = j.value("seed", std::uint64_t{0});
  s.obstacle_radius = j.value("obstacle_radius", 0.3);
  if (j.contains("start")) s.start = GridCoord{j["start"].at(0).get<int>(), j["start"].at(1).get<int>()};
  if (j.contains("goal")) s.goal = GridCoord{j["goal"].at(0).get<int>(), j["goal"].at(1).get<int>()};
  return s;
}

nlohmann::json world_to_json(const World& w) {
  auto obstacles = nlohmann::json::array();
  for (const auto& o : w.obstacles()) {
    obstacles.push_back(
        {{"x", o.x}, {"y", o.y}, {"r", o.radius}, {"vx", o.vx}, {"vy", o.vy}, {"shade", o.shade}});
  }
  return {{"spec", w.spec()}, {"obstacles", std::move(obstacles)}};
}

World world_from_json(const nlohmann::json& j) {
  std::vector<Obstacle> obstacles;
  for (const auto& o : j.at("obstacles")) {
    obstacles.push_back({o.at("x").get<double>(), o.at("y").get<double>(), o.at("r").get<double>(),
                         o.value("vx", 0.0), o.value("vy", 0.0), o.value("shade", 1.0)});
  }
  return World(world_spec_from_json(j.at("spec")), std::move(obstacles));
}

std::vector<GridCoord> sense_obstacles(const World& world, GridCoord agent) {
  const double cx = agent.col + 0.5;
  const double cy = agent.row + 0.5;
  std::array<bool, kNumActions> hit{};
  world.for_each_near(cx, cy, kSenseRange + 1.0, [&](const Obstacle& o) {
    if (std::hypot(o.x - cx, o.y - cy) - o.radius >= kSenseRange) return;
    for (auto a : kActions) {
      if (disc_hits_cell(o, step(agent, a))) hit[static_cast<std::size_t>(index_of(a))] = true;
    }
  });
  std::vector<GridCoord> out;
  for (auto a : kActions) {
    const auto cell = step(agent, a);
    if (hit[static_cast<std::size_t>(index_of(a))] && world.contains(cell)) out.push_back(cell);
  }
  return out;
}

// ------------------------------------------------------------------- Camera

double CameraFrame::mean() const {
  double s = 0.0;
  for (double p : pixels) s += p;
  return s / static_cast<double>(pixels.size());
}

double background_pixel(int row) { return 1.0 - 0.8 * row / (kFrameSide - 1.0); }

CameraFrame background_frame() {
  CameraFrame f;
  for (int r = 0; r < kFrameSide; ++r) {
    std::fill_n(f.pixels.begin() + static_cast<std::ptrdiff_t>(r) * kFrameSide, kFrameSide,
                background_pixel(r));
  }
  return f;
}

namespace {

// Smallest t >= 0 with |o + t*d - c| = radius, or nothing.
std::optional<double> ray_hit(double ox, double oy, double dx, double dy, const Obstacle& c) {
  const double fx = ox - c.x;
  const double fy = oy - c.y;
  const double b = fx * dx + fy * dy;
  const double cc = fx * fx + fy * fy - c.radius * c.radius;
  if (cc <= 0.0) return 0.0;
  const double disc = b * b - cc;
  if (disc < 0.0) return std::nullopt;
  const double t = -b - std::sqrt(disc);
  if (t < 0.0) return std::nullopt;
  return t;
}

double facing_angle(Action a) {
  switch (a) {
    case Action::North: return -std::numbers::pi / 2;
    case Action::South: return std::numbers::pi / 2;
    case Action::East: return 0.0;
    case Action::West: return std::numbers::pi;
  }
  return 0.0;
}

}  // namespace

CameraFrame render_frame(const World& world, GridCoord agent, Action facing) {
  CameraFrame frame = background_frame();
  const double ox = agent.col + 0.5;
  const double oy = agent.row + 0.5;

  std::vector<Obstacle> candidates;
  world.for_each_near(ox, oy, kCameraRange + 1.0, [&](const Obstacle& o) {
    if (std::hypot(o.x - ox, o.y - oy) - o.radius <= kCameraRange) candidates.push_back(o);
  });
  if (candidates.empty()) return frame;

  const double heading = facing_angle(facing);
  const double fov = kCameraFovDeg * std::numbers::pi / 180.0;
  for (int col = 0; col < kFrameSide; ++col) {
    // y grows southwards, so a positive offset turns the ray to the right.
    const double angle = heading - fov / 2 + fov * (col + 0.5) / kFrameSide;
    const double dx = std::cos(angle);
    const double dy = std::sin(angle);
    double nearest = kCameraRange;
    const Obstacle* hit = nullptr;
    for (const auto& o : candidates) {
      if (auto t = ray_hit(ox, oy, dx, dy, o); t && *t < nearest) {
        nearest = *t;
        hit = &o;
      }
    }
    if (!hit) continue;
    const double closeness = 1.0 - nearest / kCameraRange;
    const int band = std::clamp(static_cast<int>(std::lround(kFrameSide * closeness * hit->shade)), 1,
                                kFrameSide);
    const int top = (kFrameSide - band) / 2;
    const double value = -1.0 + 2.0 * (nearest / kCameraRange);
    for (int row = top; row < top + band; ++row) {
      frame.pixels[static_cast<std::size_t>(row) * kFrameSide + col] = value;
    }
  }
  return frame;
}

CameraFrame apply_weather(const CameraFrame& frame, const WeatherCondition& weather,
                          std::uint64_t seed) {
  const double w = weather.intensity;
  if (weather.kind == WeatherKind::Clear || w == 0.0) return frame;
  CameraFrame out = frame;
  Rng rng(seed);
  switch (weather.kind) {
    case WeatherKind::Fog: {
      for (auto& p : out.pixels) p = (1.0 - w) * p + w * 0.8;
      const int radius = static_cast<int>(std::ceil(4.0 * w));
      if (radius == 0) break;
      // Separable box blur with the window clipped at the frame edges.
      CameraFrame tmp = out;
      for (int r = 0; r < kFrameSide; ++r) {
        for (int c = 0; c < kFrameSide; ++c) {
          double s = 0.0;
          int n = 0;
          for (int k = std::max(0, c - radius); k <= std::min(kFrameSide - 1, c + radius); ++k, ++n) {
            s += out.at(r, k);
          }
          tmp.pixels[static_cast<std::size_t>(r) * kFrameSide + c] = s / n;
        }
      }
      for (int r = 0; r < kFrameSide; ++r) {
        for (int c = 0; c < kFrameSide; ++c) {
          double s = 0.0;
          int n = 0;
          for (int k = std::max(0, r - radius); k <= std::min(kFrameSide - 1, r + radius); ++k, ++n) {
            s += tmp.at(k, c);
          }
          out.pixels[static_cast<std::size_t>(r) * kFrameSide + c] = s / n;
        }
      }
      break;
    }
    case WeatherKind::Dust:
      for (auto& p : out.pixels) {
        p = (1.0 - w) * p + w * 0.3;
        if (rng.uniform() < w / 2) p = 0.4;
      }
      break;
    case WeatherKind::Snow:
      for (auto& p : out.pixels) {
        p = (1.0 - w / 2) * p + (w / 2) * 0.9;
        if (rng.uniform() < w) p = 1.0;
      }
      break;
    case WeatherKind::Clear: break;
  }
  return out;
}

void write_pgm(const CameraFrame& frame, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P5\n" << kFrameSide << ' ' << kFrameSide << "\n255\n";
  for (double p : frame.pixels) {
    const auto v = static_cast<unsigned char>(std::clamp(std::lround((p + 1.0) * 127.5), 0L, 255L));
    out.put(static_cast<char>(v));
  }
}

}  // namespace dualnav
