#pragma once

// Serialization of results: region curves as CSV, everything else as JSON, plus
// atomic file writes and SourceSpec ingestion.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rdp/coding_sim.hpp"
#include "rdp/gaussian_model.hpp"
#include "rdp/region_solver.hpp"

namespace rdp {

inline constexpr const char* kToolVersion = "0.1.0";

struct CurveRow {
  double delta = 0.0;
  double rate = 0.0;
  double rc_sum = 0.0;  // clipped at 0
  double realism_gap = 0.0;
  std::size_t v_size = 0;
  bool feasible = false;

  friend bool operator==(const CurveRow&, const CurveRow&) = default;
};

inline const char* kCurveHeader = "delta,rate,rc_sum,realism_gap,v_size,feasible";

CurveRow curve_row(const SolveResult& r);

/// Rows sorted by delta, floats at 12 significant digits.
std::string format_curve(std::vector<CurveRow> rows);
std::vector<CurveRow> parse_curve(const std::string& csv);

/// Writes `contents` to a sibling temp file, then renames it over `path`.
/// Throws CapacityError when the destination is not writable.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

void emit_curve(const std::vector<CurveRow>& rows, const std::filesystem::path& path);

/// {"pxz": <pmf over X,Z>, "distortion": [[...]] | "hamming"}; a "dsbs" number or
/// {"independent": {"px": [...], "pz": [...]}} are accepted as shorthands.
SourceSpec source_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SourceSpec& s);

nlohmann::json to_json(const SolveResult& r);
nlohmann::json to_json(const gaussian::McStats& s);
nlohmann::json to_json(const coding::RatePlan& p);
nlohmann::json to_json(const coding::SimReport& r);
nlohmann::json to_json(const coding::SweepCell& c);

/// Fixed-precision CSV number (12 significant digits).
std::string csv_number(double v);

}  // namespace rdp
