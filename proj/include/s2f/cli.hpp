#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace s2f {

// Exit codes. train: 1 config, 2 data, 3 aborted. eval/predict: 1 checkpoint,
// 2 corpus. synth: 1 infeasible config. Malformed command lines give 64.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitCheckpoint = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitAborted = 3;
inline constexpr int kExitUsage = 64;

// args excludes the program name: {"train", "--config", "run.json"}.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace s2f
