#pragma once

#include "spinbridge/dynamics.hpp"
#include "spinbridge/protocols.hpp"

#include <array>
#include <optional>
#include <stdexcept>
#include <string>

namespace spinbridge::cli {

// Malformed or invalid configuration; the message names the line or field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  ProtocolKind protocol = ProtocolKind::DoubleSwap;
  InitialKind initial = Fock1{};
  std::optional<std::array<int, 3>> dims;  // default depends on the initial state

  double swap_g1 = 1.0;
  double swap_g2 = 1.0;
  DarkStatePulses pulses;
  TimeSpan dark_window = kDarkStateWindow;

  DecayRates decay = DecayRates::lossy_defaults();
  IntegratorOptions integrator;
  int samples = kDefaultSamples;
  bool phase_correction = true;

  ModeLayout layout() const;
  ProtocolSpec spec() const;
  // Throws ConfigError when any value is out of range.
  void validate() const;
};

// Overlays a JSON document on `base`. Unknown sections or keys are errors so
// that typos never pass silently. `source` names the document in messages.
RunConfig apply_config_text(const RunConfig& base, const std::string& text,
                            const std::string& source);
RunConfig apply_config_file(const RunConfig& base, const std::string& path);

ProtocolKind parse_protocol(const std::string& name);
std::string protocol_name(ProtocolKind kind);
InitialKind parse_initial(const std::string& name, double alpha = 1.0);

}  // namespace spinbridge::cli
