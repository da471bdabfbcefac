#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mmfnd/dataset.hpp"
#include "mmfnd/encoders.hpp"
#include "mmfnd/report.hpp"
#include "mmfnd/training.hpp"

namespace mmfnd {

inline constexpr int kRunConfigSchemaVersion = 1;
inline constexpr std::string_view kStubBackend = "stub";

struct RunPaths {
  std::optional<std::filesystem::path> manifest;
  std::optional<std::filesystem::path> image_root;
  std::optional<std::filesystem::path> cache_dir;
  std::optional<std::filesystem::path> output_dir;
};

/// Everything a CLI run needs; loaded from YAML, then overridden by flags.
struct RunConfig {
  int schema_version = kRunConfigSchemaVersion;
  TrainConfig train;
  /// Backend name per role; "stub" selects the deterministic stub.
  std::map<EncoderRole, std::string> backends;
  StubDims stub_dims;
  int max_tokens = kDefaultMaxTokens;
  RunPaths paths;
  std::string translator = "identity";
  std::vector<ReportFormat> report_formats{ReportFormat::json, ReportFormat::csv};

  RunConfig();
  void validate() const;
};

RunConfig parse_run_config(std::string_view yaml_text);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& c);

/// Builds every role's backend. Only the stub is compiled into this build;
/// any other name is a ConfigError naming the role.
BackendSet make_backends(const RunConfig& config);

/// "identity" or "lookup:<path to JSON table>".
std::unique_ptr<Translator> make_translator(std::string_view spec);

}  // namespace mmfnd
