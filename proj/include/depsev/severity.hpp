#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace depsev {

// Enumerators are declared in band order, so comparing the underlying values
// compares severity.
enum class SeverityLabel : std::uint8_t {
  Normal,
  Mild,
  Borderline,
  Moderate,
  Severe,
  Extreme,
};

inline constexpr std::array<SeverityLabel, 6> kAllSeverities = {
    SeverityLabel::Normal,   SeverityLabel::Mild,   SeverityLabel::Borderline,
    SeverityLabel::Moderate, SeverityLabel::Severe, SeverityLabel::Extreme};

// Four-class scheme used once rare classes are merged.
enum class CoarseLabel : std::uint8_t {
  Normal,
  Mild,
  Moderate,
  Severe,
};

inline constexpr std::array<CoarseLabel, 4> kAllCoarse = {
    CoarseLabel::Normal, CoarseLabel::Mild, CoarseLabel::Moderate,
    CoarseLabel::Severe};

constexpr int rank(SeverityLabel s) { return static_cast<int>(s); }
constexpr int rank(CoarseLabel c) { return static_cast<int>(c); }

std::string_view to_string(SeverityLabel label);
std::string_view to_string(CoarseLabel label);

/// Case-insensitive lookup of a label name.
std::optional<SeverityLabel> parse_severity(std::string_view name);
std::optional<CoarseLabel> parse_coarse(std::string_view name);

/// Throwing variants; the message lists the allowed names.
SeverityLabel severity_from_string(std::string_view name);
CoarseLabel coarse_from_string(std::string_view name);

/// Comma-separated list of the six severity names.
std::string allowed_severity_names();

SeverityLabel as_severity(CoarseLabel label);

}  // namespace depsev
