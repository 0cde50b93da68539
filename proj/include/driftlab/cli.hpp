#pragma once

#include <string>
#include <vector>

#include "driftlab/config.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/estimates.hpp"

namespace driftlab {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime = 3;
inline constexpr int kExitViolated = 4;

inline constexpr const char* kVersion = "0.1.0";

/// Validation-type errors map to 2, everything else to 3.
int exit_code_for(ErrorKind kind) noexcept;

struct RunOptions {
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    int workers = 1;
    bool plots = false;
};

struct RunResult {
    int exit_code = kExitOk;
    std::vector<EstimateReport> reports;
    std::vector<std::string> outputs;
};

/// Runs one experiment of the given kind (norm | mollify | simulate | verify | scan)
/// and writes its outputs, the config echo and the manifest into opt.out_dir.
RunResult run_experiment(const std::string& kind, Config cfg, const RunOptions& opt);

/// Reruns the config echoed in `dir` into `out_dir` and compares every report
/// JSON byte for byte. Returns true when all are identical.
bool replay(const std::string& dir, const RunOptions& opt, std::vector<std::string>* differences = nullptr);

/// Plots suited to a report kind as (file stem suffix, SVG text).
std::vector<std::pair<std::string, std::string>> plots_for(const EstimateReport& r);

int cli_main(int argc, char** argv);

}  // namespace driftlab
