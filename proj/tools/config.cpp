#include "config.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace spinbridge::cli {

using nlohmann::json;

namespace {

std::string type_name(const json& v) { return v.type_name(); }

// Reads the keys of one section and reports anything it did not consume.
class Section {
 public:
  Section(const json& root, const std::string& name, const std::string& source)
      : name_(name), source_(source) {
    if (!root.contains(name)) return;
    node_ = &root.at(name);
    if (!node_->is_object()) fail("", "expected an object, got " + type_name(*node_));
  }

  double number(const std::string& key, double current) {
    const json* v = find(key);
    if (!v) return current;
    if (!v->is_number()) fail(key, "expected a number, got " + type_name(*v));
    const double x = v->get<double>();
    if (!std::isfinite(x)) fail(key, "must be finite");
    return x;
  }

  int integer(const std::string& key, int current) {
    const json* v = find(key);
    if (!v) return current;
    if (!v->is_number_integer()) fail(key, "expected an integer, got " + type_name(*v));
    return v->get<int>();
  }

  bool boolean(const std::string& key, bool current) {
    const json* v = find(key);
    if (!v) return current;
    if (!v->is_boolean()) fail(key, "expected true or false, got " + type_name(*v));
    return v->get<bool>();
  }

  std::optional<std::string> text(const std::string& key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_string()) fail(key, "expected a string, got " + type_name(*v));
    return v->get<std::string>();
  }

  template <std::size_t N, typename T>
  std::optional<std::array<T, N>> fixed_array(const std::string& key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_array() || v->size() != N) {
      fail(key, "expected an array of " + std::to_string(N) + " numbers");
    }
    std::array<T, N> out{};
    for (std::size_t i = 0; i < N; ++i) {
      const json& e = (*v)[i];
      if constexpr (std::is_integral_v<T>) {
        if (!e.is_number_integer()) fail(key, "entries must be integers");
      } else {
        if (!e.is_number()) fail(key, "entries must be numbers");
      }
      out[i] = e.get<T>();
    }
    return out;
  }

  void finish() const {
    if (!node_) return;
    for (const auto& item : node_->items()) {
      if (!used_.count(item.key())) fail(item.key(), "unknown key");
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& why) const {
    std::string field = key.empty() ? name_ : name_ + "." + key;
    throw ConfigError(source_ + ": field '" + field + "': " + why);
  }

 private:
  const json* find(const std::string& key) {
    used_.insert(key);
    if (!node_ || !node_->contains(key)) return nullptr;
    return &node_->at(key);
  }

  const json* node_ = nullptr;
  std::string name_;
  std::string source_;
  std::set<std::string> used_;
};

int line_of(const std::string& text, std::size_t byte) {
  const auto end = text.begin() + static_cast<std::ptrdiff_t>(std::min(byte, text.size()));
  return 1 + static_cast<int>(std::count(text.begin(), end, '\n'));
}

}  // namespace

ProtocolKind parse_protocol(const std::string& name) {
  if (name == "double-swap") return ProtocolKind::DoubleSwap;
  if (name == "dark-state") return ProtocolKind::DarkState;
  throw ConfigError("unknown protocol '" + name + "' (expected double-swap or dark-state)");
}

std::string protocol_name(ProtocolKind kind) {
  return kind == ProtocolKind::DoubleSwap ? "double-swap" : "dark-state";
}

InitialKind parse_initial(const std::string& name, double alpha) {
  if (name == "fock1") return Fock1{};
  if (name == "superposition") return Superposition{};
  if (name == "coherent") return Coherent{Complex(alpha, 0.0)};
  throw ConfigError("unknown initial state '" + name +
                    "' (expected fock1, superposition or coherent)");
}

ModeLayout RunConfig::layout() const {
  if (dims) return ModeLayout((*dims)[0], (*dims)[1], (*dims)[2]);
  return default_layout(initial);
}

ProtocolSpec RunConfig::spec() const {
  if (protocol == ProtocolKind::DoubleSwap) {
    const auto sw = double_swap_schedule(swap_g1, swap_g2);
    return {protocol, sw.schedule, sw.window, initial, decay, phase_correction};
  }
  return {protocol, dark_state_schedule(pulses), dark_window, initial, decay, phase_correction};
}

void RunConfig::validate() const {
  try {
    if (dims) layout();
    if (samples < 2) throw ConfigError("protocol.samples must be >= 2");
    if (decay.kappa1 < 0.0 || decay.gamma_s < 0.0 || decay.kappa2 < 0.0) {
      throw ConfigError("decay rates must be >= 0");
    }
    integrator.validate();
    spec().validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

RunConfig apply_config_text(const RunConfig& base, const std::string& text,
                            const std::string& source) {
  json root;
  try {
    root = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    std::ostringstream msg;
    msg << source << ":" << line_of(text, e.byte) << ": " << e.what();
    throw ConfigError(msg.str());
  }
  if (!root.is_object()) throw ConfigError(source + ": top level must be an object");
  static const std::set<std::string> kSections = {"protocol", "layout", "schedule", "decay",
                                                  "integrator"};
  for (const auto& item : root.items()) {
    if (!kSections.count(item.key())) {
      throw ConfigError(source + ": field '" + item.key() + "': unknown section");
    }
  }

  RunConfig cfg = base;

  Section protocol(root, "protocol", source);
  if (auto name = protocol.text("name")) {
    try {
      cfg.protocol = parse_protocol(*name);
    } catch (const ConfigError& e) {
      protocol.fail("name", e.what());
    }
  }
  const double alpha = protocol.number("alpha", 1.0);
  if (auto name = protocol.text("initial")) {
    try {
      cfg.initial = parse_initial(*name, alpha);
    } catch (const ConfigError& e) {
      protocol.fail("initial", e.what());
    }
  } else if (std::holds_alternative<Coherent>(cfg.initial)) {
    cfg.initial = Coherent{Complex(alpha, 0.0)};
  }
  cfg.samples = protocol.integer("samples", cfg.samples);
  cfg.phase_correction = protocol.boolean("phase_correction", cfg.phase_correction);
  protocol.finish();

  Section layout(root, "layout", source);
  if (auto dims = layout.fixed_array<3, int>("dims")) cfg.dims = *dims;
  layout.finish();

  Section schedule(root, "schedule", source);
  cfg.swap_g1 = schedule.number("g1", cfg.swap_g1);
  cfg.swap_g2 = schedule.number("g2", cfg.swap_g2);
  auto& p = cfg.pulses;
  p.amplitude1 = schedule.number("amplitude1", p.amplitude1);
  p.center1 = schedule.number("center1", p.center1);
  p.width1 = schedule.number("width1", p.width1);
  p.amplitude2 = schedule.number("amplitude2", p.amplitude2);
  p.center2 = schedule.number("center2", p.center2);
  p.width2 = schedule.number("width2", p.width2);
  if (auto w = schedule.fixed_array<2, double>("window")) cfg.dark_window = {(*w)[0], (*w)[1]};
  schedule.finish();

  Section decay(root, "decay", source);
  cfg.decay.kappa1 = decay.number("kappa1", cfg.decay.kappa1);
  cfg.decay.gamma_s = decay.number("gamma_s", cfg.decay.gamma_s);
  cfg.decay.kappa2 = decay.number("kappa2", cfg.decay.kappa2);
  decay.finish();

  Section integ(root, "integrator", source);
  if (auto method = integ.text("method")) {
    if (*method == "rk4") {
      cfg.integrator.method = IntegratorMethod::RungeKutta4;
    } else if (*method == "dopri45") {
      cfg.integrator.method = IntegratorMethod::DormandPrince45;
    } else {
      integ.fail("method", "expected rk4 or dopri45, got '" + *method + "'");
    }
  }
  cfg.integrator.dt_max = integ.number("dt", cfg.integrator.dt_max);
  cfg.integrator.rel_tol = integ.number("rel_tol", cfg.integrator.rel_tol);
  cfg.integrator.abs_tol = integ.number("abs_tol", cfg.integrator.abs_tol);
  cfg.integrator.dt_min = std::min(cfg.integrator.dt_min, cfg.integrator.dt_max);
  integ.finish();

  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return cfg;
}

RunConfig apply_config_file(const RunConfig& base, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::ostringstream text;
  text << in.rdbuf();
  return apply_config_text(base, text.str(), path);
}

}  // namespace spinbridge::cli
