#include "erkf/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>

namespace erkf::io {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

double parse_real(std::string_view field, std::size_t line) {
  const std::string f = trim(field);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (f.empty() || ec != std::errc() || ptr != f.data() + f.size()) {
    throw ParseError("not a number: '" + f + "'", line);
  }
  if (!std::isfinite(v)) throw ParseError("non-finite value '" + f + "'", line);
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// Yields (line number, numeric fields) for every data row after checking the
// header and the t column ordering.
template <typename Fn>
void for_each_row(const std::string& text, const char* header, std::size_t fields, Fn&& fn) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool seen_header = false;
  double last_t = -INFINITY;
  std::vector<double> values(fields);
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!seen_header) {
      if (line != header) throw ParseError("expected header '" + std::string(header) + "'", lineno);
      seen_header = true;
      continue;
    }
    if (line.empty()) continue;
    const auto parts = split(line, ',');
    if (parts.size() != fields) {
      throw ParseError("expected " + std::to_string(fields) + " fields, got " +
                           std::to_string(parts.size()),
                       lineno);
    }
    for (std::size_t i = 0; i < fields; ++i) values[i] = parse_real(parts[i], lineno);
    if (!(values[0] > last_t)) {
      throw SchedulerError("timestamps must increase strictly (line " + std::to_string(lineno) +
                           ")");
    }
    last_t = values[0];
    fn(values);
  }
}

void append_row(std::string& out, std::initializer_list<double> values) {
  bool first = true;
  for (double v : values) {
    if (!first) out += ',';
    out += format_real(v);
    first = false;
  }
}

}  // namespace

std::string format_real(double v) {
  char buf[40];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(len));
}

void write_atomic(const fs::path& path, const std::string& contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out << contents;
    if (!out.flush()) throw Error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string imu_csv(const std::vector<models::ImuSample>& samples) {
  std::string out = std::string(kImuHeader) + "\n";
  for (const auto& s : samples) {
    append_row(out, {s.t, s.gyro(0), s.gyro(1), s.gyro(2), s.accel(0), s.accel(1), s.accel(2),
                     s.angles(0), s.angles(1), s.angles(2)});
    out += '\n';
  }
  return out;
}

std::string gps_csv(const std::vector<models::GpsSample>& samples) {
  std::string out = std::string(kGpsHeader) + "\n";
  for (const auto& s : samples) {
    append_row(out, {s.t, s.pos_lla(0), s.pos_lla(1), s.pos_lla(2), s.yaw});
    out += '\n';
  }
  return out;
}

std::string truth_csv(const std::vector<sim::TruthSample>& samples) {
  std::string out = std::string(kTruthHeader) + "\n";
  for (const auto& s : samples) {
    append_row(out, {s.t, s.attitude(0), s.attitude(1), s.attitude(2), s.pos_lla(0),
                     s.pos_lla(1), s.pos_lla(2), s.vel_ned(0), s.vel_ned(1), s.vel_ned(2)});
    out += '\n';
  }
  return out;
}

std::string estimates_csv(const std::vector<nav::EstimateRecord>& records) {
  std::string out = std::string(kEstimateHeader) + "\n";
  for (const auto& r : records) {
    append_row(out, {r.t, r.attitude(0), r.attitude(1), r.attitude(2), r.position(0),
                     r.position(1), r.position(2), r.velocity(0), r.velocity(1), r.velocity(2)});
    out += ',';
    out += nav::to_string(r.source);
    out += '\n';
  }
  return out;
}

std::vector<models::ImuSample> parse_imu_csv(const std::string& text) {
  std::vector<models::ImuSample> out;
  for_each_row(text, kImuHeader, 10, [&](const std::vector<double>& v) {
    models::ImuSample s;
    s.t = v[0];
    s.gyro << v[1], v[2], v[3];
    s.accel << v[4], v[5], v[6];
    s.angles << v[7], v[8], v[9];
    out.push_back(s);
  });
  return out;
}

std::vector<models::GpsSample> parse_gps_csv(const std::string& text) {
  std::vector<models::GpsSample> out;
  if (text.empty()) return out;  // an empty file is a run without GPS
  for_each_row(text, kGpsHeader, 5, [&](const std::vector<double>& v) {
    models::GpsSample s;
    s.t = v[0];
    s.pos_lla << v[1], v[2], v[3];
    s.yaw = v[4];
    out.push_back(s);
  });
  return out;
}

std::vector<sim::TruthSample> parse_truth_csv(const std::string& text) {
  std::vector<sim::TruthSample> out;
  for_each_row(text, kTruthHeader, 10, [&](const std::vector<double>& v) {
    sim::TruthSample s;
    s.t = v[0];
    s.attitude << v[1], v[2], v[3];
    s.pos_lla << v[4], v[5], v[6];
    s.vel_ned << v[7], v[8], v[9];
    out.push_back(s);
  });
  return out;
}

models::ModelConfig parse_config(const std::string& text) {
  models::ModelConfig cfg = models::ModelConfig::defaults();
  const std::map<std::string, double*> scalars = {
      {"T", &cfg.T},           {"tau_g", &cfg.tau_g},     {"tau_a", &cfg.tau_a},
      {"gravity", &cfg.gravity}, {"n_scale", &cfg.n_scale}};
  const std::map<std::string, std::pair<Mat*, Index>> matrices = {
      {"Q_a", {&cfg.Q_a, 6}}, {"R_a", {&cfg.R_a, 3}},     {"Q_p", {&cfg.Q_p, 6}},
      {"R_p", {&cfg.R_p, 3}}, {"pi0_a", {&cfg.pi0_a, 6}}, {"pi0_p", {&cfg.pi0_p, 9}}};

  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw.substr(0, raw.find('#'));
    line = trim(line);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value", lineno);
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (auto it = scalars.find(key); it != scalars.end()) {
      *it->second = parse_real(value, lineno);
      continue;
    }
    auto it = matrices.find(key);
    if (it == matrices.end()) throw ParseError("unknown config key '" + key + "'", lineno);
    std::string normalized = value;
    for (char& c : normalized)
      if (c == ',' || c == '\t') c = ' ';
    std::vector<double> entries;
    for (auto part : split(normalized, ' ')) {
      if (trim(part).empty()) continue;
      entries.push_back(parse_real(part, lineno));
    }
    const Index k = it->second.second;
    Mat& m = *it->second.first;
    if (static_cast<Index>(entries.size()) == k) {
      m = Mat::Zero(k, k);
      for (Index i = 0; i < k; ++i) m(i, i) = entries[static_cast<std::size_t>(i)];
    } else if (static_cast<Index>(entries.size()) == k * k) {
      m = Eigen::Map<const Mat>(entries.data(), k, k);
    } else {
      throw ParseError(key + " needs " + std::to_string(k) + " (diagonal) or " +
                           std::to_string(k * k) + " (full) entries",
                       lineno);
    }
  }
  cfg.validate();
  return cfg;
}

}  // namespace erkf::io
