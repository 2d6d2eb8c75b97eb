#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "revmix/core.hpp"
#include "revmix/global_maps.hpp"
#include "revmix/return_maps.hpp"
#include "revmix/saddle_local.hpp"

namespace revmix {

/// Flat key = value run configuration ('#' starts a comment). Unknown keys are
/// rejected. Every key has a reference-model default.
struct RunConfig {
  double lambda = 0.5;
  double h0 = 0.1;
  double saddle_radius = 1.25;
  double a = 0.2, b = 1.0, c = -0.5, d = 1.0;
  double mu = 0.0;
  double alpha1 = 1.0, alpha2 = 1.0;
  Configuration configuration = Configuration::figure8;
  Orientation orientation = Orientation::orientable;
  double pi_radius = 0.1;
  int threads = 0;

  HomoclinicModel model() const {
    return {SaddleNormalForm::with_h0(lambda, h0, saddle_radius),
            GlobalMapParams(a, b, c, d, mu, alpha1, alpha2, configuration, orientation,
                            pi_radius)};
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double out;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad numeric value for " + key + ": '" + v + "'");
  }
  if (pos != v.size())
    throw std::invalid_argument("config: bad numeric value for " + key + ": '" + v + "'");
  return out;
}

}  // namespace detail

inline RunConfig parse_run_config(std::istream& in) {
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    if (key == "lambda") cfg.lambda = detail::parse_double(key, val);
    else if (key == "h0") cfg.h0 = detail::parse_double(key, val);
    else if (key == "saddle_radius") cfg.saddle_radius = detail::parse_double(key, val);
    else if (key == "a") cfg.a = detail::parse_double(key, val);
    else if (key == "b") cfg.b = detail::parse_double(key, val);
    else if (key == "c") cfg.c = detail::parse_double(key, val);
    else if (key == "d") cfg.d = detail::parse_double(key, val);
    else if (key == "mu") cfg.mu = detail::parse_double(key, val);
    else if (key == "alpha1") cfg.alpha1 = detail::parse_double(key, val);
    else if (key == "alpha2") cfg.alpha2 = detail::parse_double(key, val);
    else if (key == "pi_radius") cfg.pi_radius = detail::parse_double(key, val);
    else if (key == "threads") cfg.threads = static_cast<int>(detail::parse_double(key, val));
    else if (key == "configuration") {
      if (val == "figure8") cfg.configuration = Configuration::figure8;
      else if (val == "figureFish") cfg.configuration = Configuration::figure_fish;
      else throw std::invalid_argument("config: unknown configuration '" + val + "'");
    } else if (key == "orientation") {
      if (val == "orientable") cfg.orientation = Orientation::orientable;
      else if (val == "nonorientable") cfg.orientation = Orientation::nonorientable;
      else throw std::invalid_argument("config: unknown orientation '" + val + "'");
    } else {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  return parse_run_config(in);
}

}  // namespace revmix
