#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "saod/calibration.hpp"
#include "saod/matching.hpp"
#include "saod/self_aware.hpp"
#include "saod/uncertainty.hpp"

namespace saod::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitConfig = 3;

struct RunConfig {
  std::filesystem::path gt;
  std::filesystem::path dets;
  std::filesystem::path dets_corrupt;
  std::filesystem::path dets_ood;
  std::filesystem::path uncertainty;  // optional image-uncertainty dump
  std::filesystem::path self_aware;   // SelfAwareConfig JSON
  std::filesystem::path out = ".";
  double tau = kDefaultTau;
  int bins = kDefaultBins;
  AggregationStrategy aggregation = AggregationStrategy::top(3);
  CalibratorKind calibrator = CalibratorKind::LinearRegression;
  ImageThresholdMethod threshold_method = ImageThresholdMethod::PseudoOod;
  std::optional<std::uint64_t> seed;
  std::map<std::string, std::string> extra;  // command-specific keys (synth sizes etc.)
};

/// Flat `key = value` text; blank lines and lines starting with # are skipped.
std::map<std::string, std::string> parse_config_text(const std::string& text);

/// Applies one key to the config. Unknown keys land in `extra`.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

// Each command writes its files under config.out and returns an exit code.
int cmd_evaluate(const RunConfig& config, std::ostream& out);
int cmd_calibrate(const RunConfig& config, std::ostream& out);
int cmd_threshold(const RunConfig& config, std::ostream& out);
int cmd_uncertainty(const RunConfig& config, std::ostream& out);
int cmd_make_self_aware(const RunConfig& config, std::ostream& out);
int cmd_saod(const RunConfig& config, std::ostream& out);
int cmd_synth(const RunConfig& config, std::ostream& out);

/// Exit code for a library error: 3 for configuration problems, 2 otherwise.
int exit_code_for(ErrorCode code);

/// Full command line entry point. Errors are reported on `err` as
/// `error code=<Code> message=<text>`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace saod::cli
