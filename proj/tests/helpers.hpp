#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "dualnav/gridmap.hpp"
#include "dualnav/rng.hpp"

namespace testutil {

// Decision map after a random walk with random obstacles sprinkled in.
inline dualnav::LocalMap random_local_map(dualnav::Rng& rng, int world = 40) {
  using namespace dualnav;
  const GridCoord agent{static_cast<int>(rng.below(world)), static_cast<int>(rng.below(world))};
  const GridCoord goal{static_cast<int>(rng.below(world)), static_cast<int>(rng.below(world))};
  GlobalMap global(world, world, agent, goal);
  LocalMap m = spawn_local_map(global, agent, goal);
  const int walk = static_cast<int>(rng.below(12));
  for (int i = 0; i < walk; ++i) {
    if (auto next = apply_move(m, kActions[rng.below(4)])) m = *next;
  }
  const int blocks = static_cast<int>(rng.below(25));
  for (int i = 0; i < blocks; ++i) {
    m.mark_blocked({static_cast<int>(rng.below(10)), static_cast<int>(rng.below(10))});
  }
  return m;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("dualnav_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

}  // namespace testutil
