#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fatou::cli {

/// Environment variable holding the default master seed.
inline constexpr const char* kSeedVariable = "FATOU_SEED";

struct Budgets {
  std::uint64_t ball_elements = 2'000'000;
  std::int64_t steps = 10'000'000;
  /// 0 when the operation draws no trajectories.
  std::uint64_t trajectories = 0;
};

/// Everything needed to re-run an operation. Output location and worker
/// count are not part of it; they do not change results.
struct ExperimentConfig {
  std::string command;
  std::string group = "free:2";
  std::string nu = "srw";
  std::uint64_t seed = 1;
  Budgets budgets;
  /// Remaining operation parameters as given on the command line.
  std::map<std::string, std::string> params;

  nlohmann::ordered_json to_json() const;
  /// Missing budgets take the defaults above.
  static ExperimentConfig from_json(const nlohmann::json& j);
  /// "key = value" lines accepted by --config.
  std::string to_text() const;
  /// FNV-1a of the canonical JSON, as 16 hex digits.
  std::string hash() const;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;
inline constexpr int kExitConfig = 2;

/// Runs one subcommand. args excludes the program name. Writes
/// report.json, metadata.json, config.txt and tables/*.csv under --out.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::vector<std::string> subcommands();

}  // namespace fatou::cli
