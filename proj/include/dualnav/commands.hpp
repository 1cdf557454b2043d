#pragma once

// The navbench commands: generate-world, train, evaluate, decay.

#include <ostream>

#include "dualnav/config.hpp"

namespace dualnav::cli {

enum ExitCode : int { kOk = 0, kError = 1, kUsage = 2, kCapHit = 3 };

// Each writes its artifacts under cfg.out and a short summary to `log`.
int cmd_generate_world(const RunConfig& cfg, std::ostream& log);
// kOk when the success streak was met, kCapHit when the episode cap ended it.
int cmd_train(const RunConfig& cfg, std::ostream& log);
int cmd_evaluate(const RunConfig& cfg, std::ostream& log);
int cmd_decay(const RunConfig& cfg, std::ostream& log);

// Parses argv (config file, NAV_SEED, flag overrides) and dispatches.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dualnav::cli
