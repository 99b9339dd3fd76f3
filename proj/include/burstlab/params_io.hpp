#pragma once

// Flat `name = value` text format for ModelParams. Values are written in the
// shortest form that parses back to the identical double.

#include <array>
#include <charconv>
#include <cstdlib>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>

#include "burstlab/error.hpp"
#include "burstlab/model.hpp"

namespace burstlab {

struct ParamField {
  std::string_view name;
  double ModelParams::*member;
};

/// Serialization order and names.
inline constexpr std::array<ParamField, 34> kParamFields{{
    {"g_L", &ModelParams::g_L},
    {"g_Na", &ModelParams::g_Na},
    {"g_K", &ModelParams::g_K},
    {"g_syn", &ModelParams::g_syn},
    {"g_CAN", &ModelParams::g_CAN},
    {"E_L", &ModelParams::E_L},
    {"E_Na", &ModelParams::E_Na},
    {"E_K", &ModelParams::E_K},
    {"E_syn", &ModelParams::E_syn},
    {"E_CAN", &ModelParams::E_CAN},
    {"theta_h", &ModelParams::theta_h},
    {"theta_m", &ModelParams::theta_m},
    {"theta_n", &ModelParams::theta_n},
    {"theta_s", &ModelParams::theta_s},
    {"k_CAN", &ModelParams::k_CAN},
    {"sigma_h", &ModelParams::sigma_h},
    {"sigma_m", &ModelParams::sigma_m},
    {"sigma_n", &ModelParams::sigma_n},
    {"sigma_s", &ModelParams::sigma_s},
    {"sigma_CAN", &ModelParams::sigma_CAN},
    {"t_h", &ModelParams::t_h},
    {"t_m", &ModelParams::t_m},
    {"t_n", &ModelParams::t_n},
    {"tau_s", &ModelParams::tau_s},
    {"k_Na", &ModelParams::k_Na},
    {"Na_b", &ModelParams::Na_b},
    {"k_Ca", &ModelParams::k_Ca},
    {"Ca_b", &ModelParams::Ca_b},
    {"k_IP3", &ModelParams::k_IP3},
    {"C", &ModelParams::C},
    {"k", &ModelParams::k},
    {"r_pump", &ModelParams::r_pump},
    {"epsilon", &ModelParams::epsilon},
    {"alpha", &ModelParams::alpha},
}};

inline std::string format_shortest(double x) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc{}) throw Error("format_shortest: conversion failed");
  return std::string(buf.data(), ptr);
}

inline double parse_double(std::string_view text, std::string_view context) {
  std::string s(text);
  const char* begin = s.c_str();
  char* end = nullptr;
  const double value = std::strtod(begin, &end);
  if (end == begin || *end != '\0') {
    throw UsageError("cannot parse number '" + s + "' for " + std::string(context));
  }
  return value;
}

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

/// Looks up a parameter by name; nullopt for unknown names.
inline std::optional<double ModelParams::*> param_member(std::string_view name) {
  for (const auto& f : kParamFields) {
    if (f.name == name) return f.member;
  }
  return std::nullopt;
}

inline void write_params(std::ostream& os, const ModelParams& p) {
  for (const auto& f : kParamFields) {
    os << f.name << " = " << format_shortest(p.*(f.member)) << '\n';
  }
}

inline std::string params_to_text(const ModelParams& p) {
  std::ostringstream os;
  write_params(os, p);
  return os.str();
}

/// Parses the flat format starting from `base`; every listed name overrides
/// the corresponding field. Blank lines and `#` comments are ignored.
inline ModelParams read_params(std::istream& is, ModelParams base = ModelParams{}) {
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '#') continue;
    const auto eq = sv.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError("parameter line " + std::to_string(lineno) + ": expected 'name = value'");
    }
    const auto name = trim(sv.substr(0, eq));
    const auto value = trim(sv.substr(eq + 1));
    const auto member = param_member(name);
    if (!member) throw UsageError("unknown parameter '" + std::string(name) + "'");
    base.*(*member) = parse_double(value, name);
  }
  return base;
}

inline ModelParams params_from_text(const std::string& text, ModelParams base = ModelParams{}) {
  std::istringstream is(text);
  return read_params(is, base);
}

}  // namespace burstlab
