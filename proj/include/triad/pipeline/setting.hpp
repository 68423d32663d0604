#pragma once

#include <string>
#include <string_view>

#include "triad/error.hpp"

namespace triad::pipeline {

enum class Setting { A, B, C };

inline std::string_view to_string(Setting s) {
  switch (s) {
    case Setting::A: return "A";
    case Setting::B: return "B";
    case Setting::C: return "C";
  }
  return "C";
}

inline Setting parse_setting(std::string_view s) {
  if (s == "A" || s == "a") return Setting::A;
  if (s == "B" || s == "b") return Setting::B;
  if (s == "C" || s == "c") return Setting::C;
  throw DomainError("setting must be A, B or C, got '" + std::string(s) + "'");
}

}  // namespace triad::pipeline
