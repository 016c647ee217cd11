#include "depsev/severity.hpp"

#include <algorithm>
#include <cctype>

#include "depsev/error.hpp"

namespace depsev {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io: return "io";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::NotFound: return "not_found";
    case ErrorKind::Network: return "network";
    case ErrorKind::Protocol: return "protocol";
    case ErrorKind::Version: return "version";
    case ErrorKind::Corrupt: return "corrupt";
    case ErrorKind::Config: return "config";
  }
  return "unknown";
}

std::string_view to_string(SeverityLabel label) {
  switch (label) {
    case SeverityLabel::Normal: return "Normal";
    case SeverityLabel::Mild: return "Mild";
    case SeverityLabel::Borderline: return "Borderline";
    case SeverityLabel::Moderate: return "Moderate";
    case SeverityLabel::Severe: return "Severe";
    case SeverityLabel::Extreme: return "Extreme";
  }
  return "?";
}

std::string_view to_string(CoarseLabel label) {
  return to_string(as_severity(label));
}

namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

}  // namespace

std::optional<SeverityLabel> parse_severity(std::string_view name) {
  for (auto s : kAllSeverities) {
    if (iequals(name, to_string(s))) return s;
  }
  return std::nullopt;
}

std::optional<CoarseLabel> parse_coarse(std::string_view name) {
  for (auto c : kAllCoarse) {
    if (iequals(name, to_string(c))) return c;
  }
  return std::nullopt;
}

std::string allowed_severity_names() {
  std::string out;
  for (auto s : kAllSeverities) {
    if (!out.empty()) out += ", ";
    out += to_string(s);
  }
  return out;
}

SeverityLabel severity_from_string(std::string_view name) {
  if (auto s = parse_severity(name)) return *s;
  throw Error(ErrorKind::Validation, "invalid severity label '" +
                                         std::string(name) + "' (allowed: " +
                                         allowed_severity_names() + ")");
}

CoarseLabel coarse_from_string(std::string_view name) {
  if (auto c = parse_coarse(name)) return *c;
  throw Error(ErrorKind::Validation,
              "invalid class label '" + std::string(name) +
                  "' (allowed: Normal, Mild, Moderate, Severe)");
}

SeverityLabel as_severity(CoarseLabel label) {
  switch (label) {
    case CoarseLabel::Normal: return SeverityLabel::Normal;
    case CoarseLabel::Mild: return SeverityLabel::Mild;
    case CoarseLabel::Moderate: return SeverityLabel::Moderate;
    case CoarseLabel::Severe: return SeverityLabel::Severe;
  }
  return SeverityLabel::Normal;
}

}  // namespace depsev
