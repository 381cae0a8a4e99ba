#include "recoilfree/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

namespace recoilfree {

namespace {

using nlohmann::json;

json parse_or_throw(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& error) {
    throw ConfigError(std::string("malformed ") + what + ": " + error.what());
  }
}

std::vector<double> read_vector(const json& document, const char* key) {
  const auto& node = document.at(key);
  if (!node.is_array()) throw ConfigError(std::string(key) + " must be an array");
  std::vector<double> values;
  for (const auto& value : node) {
    if (!value.is_number()) throw ConfigError(std::string(key) + " must hold numbers");
    values.push_back(value.get<double>());
  }
  return values;
}

}  // namespace

std::string format_number(double value) {
  std::ostringstream out;
  out << std::setprecision(kOutputDigits) << value;
  return out.str();
}

std::string protocol_to_json(const SineModeProtocol& protocol) {
  json document{{"t_f", protocol.t_f},
                {"n_omega", protocol.n_omega()},
                {"n_f", protocol.n_f()},
                {"theta_x", protocol.theta_x},
                {"theta_y", protocol.theta_y},
                {"theta_f", protocol.theta_f}};
  return document.dump(2);
}

SineModeProtocol protocol_from_json(const std::string& text) {
  const json document = parse_or_throw(text, "protocol");
  SineModeProtocol protocol;
  try {
    protocol.t_f = document.at("t_f").get<double>();
    protocol.theta_x = read_vector(document, "theta_x");
    protocol.theta_y = read_vector(document, "theta_y");
    protocol.theta_f = read_vector(document, "theta_f");
    if (document.contains("n_omega") &&
        document.at("n_omega").get<int>() != protocol.n_omega()) {
      throw ConfigError("n_omega does not match theta_x");
    }
    if (document.contains("n_f") && document.at("n_f").get<int>() != protocol.n_f()) {
      throw ConfigError("n_f does not match theta_f");
    }
  } catch (const json::exception& error) {
    throw ConfigError(std::string("malformed protocol: ") + error.what());
  }
  protocol.validate();
  return protocol;
}

void write_protocol_timeseries_csv(std::ostream& out, const Schedule& schedule, int count) {
  if (count < 2) throw ConfigError("time series needs at least two points");
  CsvWriter csv(out, {"t", "abs_omega", "arg_omega", "f_tw"});
  for (int k = 0; k < count; ++k) {
    const double t = schedule.duration() * static_cast<double>(k) / static_cast<double>(count - 1);
    const auto sample = schedule.at(t);
    const std::complex<double> omega{sample.h_x, sample.h_y};
    csv.row({t, std::abs(omega), std::arg(omega), sample.f_tw});
  }
}

ModelConfig model_config_from_json(const std::string& text) {
  const json document = parse_or_throw(text, "model configuration");
  const json& model = document.contains("model") ? document.at("model") : document;
  try {
    const double omega_max = model.at("omega_max_over_omega0").get<double>();
    const double gamma_z = model.value("gamma_z_over_omega0_div_2pi", 0.0);
    const int n_max = model.value("n_max", 3);
    ModelConfig config;
    if (model.contains("physical")) {
      const auto& lab = model.at("physical");
      PhysicalUnits units;
      units.mass_kg = lab.at("mass_u").get<double>() * 1.66053906660e-27;
      units.omega0_rad_per_s = 2.0 * std::numbers::pi * lab.at("omega0_over_2pi_hz").get<double>();
      units.v_max_m_per_s = lab.at("v_max_m_per_s").get<double>();
      if (lab.contains("wavelength_nm")) {
        units.k_per_m = 2.0 * std::numbers::pi / (lab.at("wavelength_nm").get<double>() * 1e-9);
      }
      std::optional<double> eta;
      if (model.contains("eta")) eta = model.at("eta").get<double>();
      config = ModelConfig::from_physical(units, omega_max, gamma_z, n_max, eta);
    } else {
      config.eta = model.value("eta", config.eta);
      config.omega_max = omega_max;
      config.gamma_z = gamma_z;
      config.n_max = n_max;
      config.v_max_dimless = model.value("v_max_over_omega0_sq", config.v_max_dimless);
    }
    config.validate();
    return config;
  } catch (const json::exception& error) {
    throw ConfigError(std::string("malformed model configuration: ") + error.what());
  }
}

std::string model_config_to_json(const ModelConfig& config) {
  json document{{"eta", config.eta},
                {"omega_max_over_omega0", config.omega_max},
                {"gamma_z_over_omega0_div_2pi", config.gamma_z},
                {"n_max", config.n_max},
                {"v_max_over_omega0_sq", config.v_max_dimless}};
  return document.dump(2);
}

OptimizerHyperparams hyperparams_from_json(const std::string& text, OptimizerHyperparams defaults) {
  const json document = parse_or_throw(text, "optimizer configuration");
  if (!document.contains("optimizer")) return defaults;
  const json& node = document.at("optimizer");
  OptimizerHyperparams hyper = defaults;
  try {
    hyper.alpha_dr = node.value("alpha_dr", hyper.alpha_dr);
    hyper.alpha_tw = node.value("alpha_tw", hyper.alpha_tw);
    hyper.n_it = node.value("n_it", hyper.n_it);
    hyper.n_omega = node.value("n_omega", hyper.n_omega);
    hyper.n_f = node.value("n_f", hyper.n_f);
    hyper.seed = node.value("seed", hyper.seed);
    hyper.eval_stride = node.value("eval_stride", hyper.eval_stride);
    hyper.stall_window = node.value("stall_window", hyper.stall_window);
    hyper.propagation.substeps_per_period =
        node.value("substeps_per_period", hyper.propagation.substeps_per_period);
  } catch (const json::exception& error) {
    throw ConfigError(std::string("malformed optimizer configuration: ") + error.what());
  }
  hyper.validate();
  return hyper;
}

std::string hyperparams_to_json(const OptimizerHyperparams& hyper) {
  json document{{"alpha_dr", hyper.alpha_dr},
                {"alpha_tw", hyper.alpha_tw},
                {"n_it", hyper.n_it},
                {"n_omega", hyper.n_omega},
                {"n_f", hyper.n_f},
                {"seed", hyper.seed},
                {"eval_stride", hyper.eval_stride},
                {"stall_window", hyper.stall_window},
                {"substeps_per_period", hyper.propagation.substeps_per_period}};
  return document.dump(2);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto temporary = path;
  temporary += ".tmp";
  {
    std::ofstream out(temporary, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + temporary.string());
    out << text;
    if (!out) throw std::runtime_error("failed writing " + temporary.string());
  }
  std::filesystem::rename(temporary, path);
}

CsvWriter::CsvWriter(std::ostream& out, const std::vector<std::string>& header)
    : out_(out), columns_(header.size()) {
  for (std::size_t k = 0; k < header.size(); ++k) out_ << (k ? "," : "") << header[k];
  out_ << '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != columns_) throw std::logic_error("CSV row width mismatch");
  for (std::size_t k = 0; k < values.size(); ++k) out_ << (k ? "," : "") << format_number(values[k]);
  out_ << '\n';
}

std::string build_provenance() {
  return std::string("recoilfree ") + RECOILFREE_VERSION + " (" + RECOILFREE_GIT_DESCRIBE + ")";
}

}  // namespace recoilfree
