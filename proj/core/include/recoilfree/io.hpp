#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "recoilfree/hilbert.hpp"
#include "recoilfree/pepr.hpp"
#include "recoilfree/protocols.hpp"

namespace recoilfree {

/// Numbers in every emitted file carry 12 significant digits.
inline constexpr int kOutputDigits = 12;
std::string format_number(double value);

/// {"t_f", "n_omega", "n_f", "theta_x", "theta_y", "theta_f"}. Doubles are
/// written with round-trip precision so a reloaded protocol is bit-identical.
std::string protocol_to_json(const SineModeProtocol& protocol);
SineModeProtocol protocol_from_json(const std::string& text);

/// Columns t, abs_omega, arg_omega, f_tw on `count` uniform points.
void write_protocol_timeseries_csv(std::ostream& out, const Schedule& schedule, int count);

/// Model configuration with explicit units in key names, e.g.
/// {"eta": 0.505, "omega_max_over_omega0": 20, "gamma_z_over_omega0_div_2pi": 0,
///  "n_max": 3, "v_max_over_omega0_sq": 32731.4}
/// A "physical" block ({"mass_u", "omega0_over_2pi_hz", "wavelength_nm",
/// "v_max_m_per_s"}) may replace eta and the velocity bound.
ModelConfig model_config_from_json(const std::string& text);
std::string model_config_to_json(const ModelConfig& config);

OptimizerHyperparams hyperparams_from_json(const std::string& text,
                                           OptimizerHyperparams defaults = {});
std::string hyperparams_to_json(const OptimizerHyperparams& hyper);

std::string read_text_file(const std::filesystem::path& path);
/// Writes through a temporary sibling and renames, so readers never observe a
/// partially written file.
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Minimal CSV writer: header once, then rows of numbers.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const std::vector<std::string>& header);
  void row(const std::vector<double>& values);

 private:
  std::ostream& out_;
  std::size_t columns_;
};

/// Version string embedded in provenance records.
std::string build_provenance();

}  // namespace recoilfree
