#pragma once

#include <cstdint>
#include <string>

namespace dmw::cli {

enum class Format { json, csv };

struct RunConfig {
    std::string command;
    std::string instance_path;
    std::uint64_t seed = 1;
    std::size_t samples = 100'000;
    std::string out;
    Format format = Format::json;

    // command-specific
    std::string target;          // reproduce
    std::string taus_path;       // table4
    int n_max = 44;              // table4
    std::string axis;            // sweep
    std::string range;           // sweep, "lo:hi:step"
    int s = 1;                   // contract-robust
    int ell = 1;                 // contract-robust
    std::string regime = "regular_design_for_ell";
    std::string mechanism = "vwm";  // simulate
    std::string mode = "auto";      // contract-optimize
    double alpha = -1.0;            // simulate; negative selects the optimal linear contract
    std::string contract;           // simulate, comma-separated t
    std::string z_points;           // dist-analyze, comma-separated
};

// Runs one command and returns the process exit status.
int run(const RunConfig& config);

}  // namespace dmw::cli
