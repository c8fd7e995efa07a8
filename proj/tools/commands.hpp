#pragma once

#include "config.hpp"

#include "spinbridge/dynamics.hpp"
#include "spinbridge/validation.hpp"

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace spinbridge::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitBadConfig = 2,
  kExitIntegration = 3,
};

// Reported rates are multiplied by `rate`. "G" keeps dimensionless units;
// "MHz" reports angular rates in rad/us for G = 2 pi x 1 MHz.
struct UnitScale {
  double rate = 1.0;
  std::string label = "G";
};
UnitScale parse_unit_scale(const std::string& name);

inline constexpr const char* kSeriesHeader = "tau,n_a1,n_b,n_a2,G1,G2,theta,n_dark,fidelity";
inline constexpr const char* kSummaryHeader = "gamma_s,peak_fidelity,peak_tau";

std::string format_number(double v);  // %.9g

void write_series_csv(std::ostream& out, const SimResult& run, const UnitScale& scale);
void write_summary_csv(std::ostream& out, const std::vector<double>& gammas,
                       const std::vector<SimResult>& runs, const UnitScale& scale);

std::string run_file_name(const RunConfig& config);
std::string sweep_file_name(double gamma_s);

int run_command(const RunConfig& config, const std::filesystem::path& out_dir,
                const UnitScale& scale, std::ostream& out);
int sweep_command(const RunConfig& config, const std::vector<double>& gammas,
                  const std::filesystem::path& out_dir, const UnitScale& scale,
                  std::ostream& out);
int validate_command(const validation::ValidationOptions& options, std::ostream& out);
// Every protocol, initial state and loss setting plus the spin decay sweep.
int figure_data_command(const IntegratorOptions& integrator, const std::filesystem::path& out_dir,
                        std::ostream& out);

// Parses arguments, dispatches and maps exceptions to exit codes.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace spinbridge::cli
