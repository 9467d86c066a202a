#pragma once

#include <map>
#include <string>

#include <json.hpp>

#include "goaltime/domain.hpp"

namespace goaltime {

inline constexpr const char* kToolName = "goaltime";
inline constexpr const char* kToolVersion = "0.1.0";

/// FNV-1a 64-bit digest of a byte string, hex encoded.
std::string fnv1a_hex(const std::string& bytes);

/// "tool version inputs=name:digest,..." line for output provenance.
std::string provenance_line(const std::map<std::string, std::string>& input_digests);

std::string ties_name(Ties t);
Ties ties_from_name(const std::string& s);
std::string transform_name(TimeTransform t);
TimeTransform transform_from_name(const std::string& s);

/// FitResult <-> JSON with the paper-style per-term columns (coef,
/// exp_coef, se, z, p), logliks, covariance, and the frailty block when
/// present. meta carries tool version and input digests.
nlohmann::ordered_json fit_to_json(const FitResult& fit,
                                   const std::map<std::string, std::string>& input_digests = {});
FitResult fit_from_json(const nlohmann::ordered_json& j);

}  // namespace goaltime
