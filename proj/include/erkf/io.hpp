#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "erkf/models.hpp"
#include "erkf/nav.hpp"
#include "erkf/synthetic.hpp"

namespace erkf::io {

namespace fs = std::filesystem;

inline constexpr const char* kImuHeader = "t,gx,gy,gz,ax,ay,az,phi,theta,psi";
inline constexpr const char* kGpsHeader = "t,lat,lon,alt,yaw";
inline constexpr const char* kEstimateHeader = "t,phi,theta,psi,lat,lon,alt,vn,ve,vd,source";
inline constexpr const char* kComparisonHeader =
    "t,system,smax_givens,smax_inv,smin_givens,smin_inv,dmax,dmin";
inline constexpr const char* kTruthHeader = "t,phi,theta,psi,lat,lon,alt,vn,ve,vd";

/// Shortest-roundtrip is not required; 17 significant digits always
/// reproduce the double exactly.
std::string format_real(double v);

/// Writes `contents` to a sibling temporary file and renames it over `path`.
void write_atomic(const fs::path& path, const std::string& contents);

std::string imu_csv(const std::vector<models::ImuSample>& samples);
std::string gps_csv(const std::vector<models::GpsSample>& samples);
std::string truth_csv(const std::vector<sim::TruthSample>& samples);
std::string estimates_csv(const std::vector<nav::EstimateRecord>& records);

/// Parsers check the header exactly, the field count, numeric syntax and
/// strictly increasing t. Errors carry the 1-based line number.
std::vector<models::ImuSample> parse_imu_csv(const std::string& text);
std::vector<models::GpsSample> parse_gps_csv(const std::string& text);
std::vector<sim::TruthSample> parse_truth_csv(const std::string& text);

std::string read_file(const fs::path& path);

/// Flat key=value file; keys are ModelConfig field names. Matrix values are
/// comma or space separated: k entries give a diagonal, k*k a full matrix in
/// row-major order. '#' starts a comment. Unknown keys are errors.
models::ModelConfig parse_config(const std::string& text);

}  // namespace erkf::io
