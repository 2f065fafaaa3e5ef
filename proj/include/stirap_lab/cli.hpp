#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

namespace stirap_lab {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A resolved experiment: one command, its flat key-value parameters, an
/// optional RNG seed and the output path.
struct ExperimentConfig {
  std::string command;
  std::map<std::string, std::string> parameters;
  std::optional<std::uint64_t> seed;
  std::string output_path;
};

/// Parse a flat key = value config file (# comments allowed).
std::map<std::string, std::string> parse_config_file(const std::string& path);

/// Execute one experiment; writes the output CSV(s).  Throws ConfigError
/// for validation problems and runtime errors for numerical failures.
void run(const ExperimentConfig& config);

/// Regenerate the bundled demo recipe named by figure_id (fig2b, fig3a,
/// fig3b, fig4, fig5c, fig6), writing to output_path (a .csv path; recipes
/// with several outputs replace the extension by _n0.csv / _n2.csv).
void reproduce(const std::string& figure_id, const std::string& output_path,
               std::optional<std::uint64_t> seed);

/// Full command-line entry point; returns the process exit code
/// (0 success, 1 configuration error, 2 numerical failure).
int run_cli(int argc, const char* const* argv);

}  // namespace stirap_lab
