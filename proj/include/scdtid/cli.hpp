#pragma once

// Batch front end: simulate, dataset, transform, train, eval, curve.
//
// Configuration is a flat JSON object with dotted keys (see default_config).
// Precedence: built-in defaults < --config file < command-line flags. A run
// summary written by any command can itself be passed as --config.

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace scdtid::cli {

using json = nlohmann::json;

/// Every recognised key with its default value.
json default_config();

/// Overlays `overrides` on `base`; unknown keys are rejected.
json merge_config(json base, const json& overrides);

/// Hash of the keys that influence results (jobs and out are excluded).
std::string config_hash(const json& config);

/// Build-time `git describe` string.
std::string provenance();

/// Exit codes: 0 success, 1 usage or I/O error, 2 simulator error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace scdtid::cli
