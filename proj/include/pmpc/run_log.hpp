#pragma once

// Run-log persistence: columnar text with '# key: value' metadata lines, and a binary mirror
// holding the same metadata block followed by raw little-endian doubles.

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pmpc/closed_loop.hpp"

namespace pmpc {

class LogFormatError : public Error {
 public:
  using Error::Error;
};

namespace log_detail {

inline const char* const kBodies[] = {"r0", "r1", "pl"};
inline const char* const kStateNames[] = {"px", "py", "pz", "roll", "pitch", "yaw",
                                          "vx", "vy", "vz", "wx", "wy", "wz"};
inline const char* const kFeet[] = {"FL", "FR", "RL", "RR"};
inline const char* const kWrench[] = {"fx", "fy", "fz", "tx", "ty"};
constexpr char kBinaryMagic[8] = {'P', 'M', 'P', 'C', 'L', 'O', 'G', '1'};

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline SolveStatus status_from_code(int c) {
  if (c == 0) return SolveStatus::kConverged;
  if (c == 1) return SolveStatus::kMaxIterations;
  return SolveStatus::kInfeasibleFallback;
}

inline int status_code(SolveStatus s) { return static_cast<int>(s); }

}  // namespace log_detail

inline std::vector<std::string> log_columns(int num_obstacles) {
  using namespace log_detail;
  std::vector<std::string> c{"t"};
  for (const char* prefix : {"", "ref_"}) {
    for (int b = 0; b < 3; ++b) {
      for (const char* s : kStateNames) c.push_back(std::string(prefix) + kBodies[b] + "_" + s);
    }
  }
  for (int r = 0; r < 2; ++r) {
    for (const char* f : kFeet) {
      for (const char* a : {"fx", "fy", "fz"}) c.push_back(std::string("grf_") + kBodies[r] + "_" + f + "_" + a);
    }
  }
  for (const char* src : {"lam_plant_", "lam_ctrl_"}) {
    for (int e = 0; e < 2; ++e) {
      for (const char* w : kWrench) c.push_back(std::string(src) + "e" + std::to_string(e) + "_" + w);
    }
  }
  c.push_back("phi_e0");
  c.push_back("phi_e1");
  for (int b = 0; b < 3; ++b) {
    for (int l = 0; l < num_obstacles; ++l) c.push_back(std::string("h_") + kBodies[b] + "_o" + std::to_string(l));
  }
  for (const char* s : {"iterations", "status", "kkt_stationarity", "kkt_equality", "slack", "cost", "kkt_certified",
                        "solve_ms", "disturbance"}) {
    c.push_back(s);
  }
  return c;
}

inline std::vector<double> row_values(const LogRow& r) {
  std::vector<double> v{r.t};
  auto add = [&](const auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) v.push_back(m(i));
  };
  add(r.x);
  add(r.ref);
  add(r.grf);
  add(r.plant_lambda);
  add(r.ctrl_lambda);
  add(r.phi);
  v.insert(v.end(), r.h.begin(), r.h.end());
  for (double s : {static_cast<double>(r.iterations), static_cast<double>(log_detail::status_code(r.status)),
                   r.kkt_stationarity, r.kkt_equality, r.slack, r.cost, static_cast<double>(r.kkt_certified),
                   r.solve_ms, r.disturbance ? 1.0 : 0.0}) {
    v.push_back(s);
  }
  return v;
}

inline LogRow row_from_values(const std::vector<double>& v, int num_obstacles) {
  LogRow r;
  size_t i = 0;
  auto take = [&](auto& m) {
    for (Eigen::Index j = 0; j < m.size(); ++j) m(j) = v[i++];
  };
  r.t = v[i++];
  take(r.x);
  take(r.ref);
  take(r.grf);
  take(r.plant_lambda);
  take(r.ctrl_lambda);
  take(r.phi);
  r.h.assign(v.begin() + i, v.begin() + i + 3 * num_obstacles);
  i += 3 * num_obstacles;
  r.iterations = static_cast<int>(v[i++]);
  r.status = log_detail::status_from_code(static_cast<int>(v[i++]));
  r.kkt_stationarity = v[i++];
  r.kkt_equality = v[i++];
  r.slack = v[i++];
  r.cost = v[i++];
  r.kkt_certified = static_cast<int>(v[i++]);
  r.solve_ms = v[i++];
  r.disturbance = v[i++] != 0.0;
  return r;
}

inline std::string meta_block(const RunMeta& m) {
  using log_detail::fmt;
  std::ostringstream os;
  os << "# scenario: " << m.scenario << "\n";
  os << "# horizon: " << m.horizon << "\n";
  os << "# ts_s: " << fmt(m.ts) << "\n";
  os << "# safety: " << (m.safety ? "true" : "false") << "\n";
  os << "# d_th_m: " << fmt(m.hocbf.d_th) << "\n";
  os << "# alpha1: " << fmt(m.hocbf.alpha1_gain) << "\n";
  os << "# alpha2: " << fmt(m.hocbf.alpha2_gain) << "\n";
  os << "# obstacles_m:";
  for (const auto& o : m.obstacles) os << " " << fmt(o.position.x()) << "," << fmt(o.position.y());
  os << "\n";
  os << "# obstacle_clearance_m: " << fmt(m.analysis.obstacle_clearance) << "\n";
  os << "# settle_time_s: " << fmt(m.analysis.settle_time) << "\n";
  os << "# transient_limit_s: " << fmt(m.analysis.transient_limit) << "\n";
  os << "# termination: " << m.termination << "\n";
  std::string msg = m.message;
  std::replace(msg.begin(), msg.end(), '\n', ' ');
  os << "# message: " << msg << "\n";
  return os.str();
}

inline RunMeta parse_meta(const std::map<std::string, std::string>& kv) {
  auto get = [&](const std::string& k) {
    auto it = kv.find(k);
    if (it == kv.end()) throw LogFormatError("log metadata lacks '" + k + "'");
    return it->second;
  };
  RunMeta m;
  try {
    m.scenario = get("scenario");
    m.horizon = std::stoi(get("horizon"));
    m.ts = std::stod(get("ts_s"));
    m.safety = get("safety") == "true";
    m.hocbf.d_th = std::stod(get("d_th_m"));
    m.hocbf.alpha1_gain = std::stod(get("alpha1"));
    m.hocbf.alpha2_gain = std::stod(get("alpha2"));
    std::istringstream obs(get("obstacles_m"));
    std::string tok;
    int id = 0;
    while (obs >> tok) {
      const auto comma = tok.find(',');
      if (comma == std::string::npos) throw LogFormatError("bad obstacle entry '" + tok + "'");
      m.obstacles.push_back({Eigen::Vector2d(std::stod(tok.substr(0, comma)), std::stod(tok.substr(comma + 1))), id++});
    }
    m.analysis.obstacle_clearance = std::stod(get("obstacle_clearance_m"));
    m.analysis.settle_time = std::stod(get("settle_time_s"));
    m.analysis.transient_limit = std::stod(get("transient_limit_s"));
    m.termination = get("termination");
    m.message = get("message");
  } catch (const std::logic_error&) {
    throw LogFormatError("malformed log metadata");
  }
  return m;
}

inline void write_log_csv(const RunLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << meta_block(log.meta);
  const auto cols = log_columns(log.num_obstacles());
  for (size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << "\n";
  for (const auto& r : log.rows) {
    const auto v = row_values(r);
    for (size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << log_detail::fmt(v[i]);
    out << "\n";
  }
}

inline void write_log_binary(const RunLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  const std::string meta = meta_block(log.meta);
  const auto cols = log_columns(log.num_obstacles());
  const std::uint64_t meta_len = meta.size(), n_cols = cols.size(), n_rows = log.rows.size();
  out.write(log_detail::kBinaryMagic, 8);
  out.write(reinterpret_cast<const char*>(&meta_len), 8);
  out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
  out.write(reinterpret_cast<const char*>(&n_cols), 8);
  out.write(reinterpret_cast<const char*>(&n_rows), 8);
  for (const auto& r : log.rows) {
    const auto v = row_values(r);
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
}

inline std::map<std::string, std::string> parse_meta_lines(std::istream& in, std::string* first_data_line) {
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) != 0) {
      if (first_data_line) *first_data_line = line;
      break;
    }
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw LogFormatError("bad metadata line '" + line + "'");
    std::string value = line.substr(colon + 1);
    if (!value.empty() && value[0] == ' ') value.erase(0, 1);
    kv[line.substr(2, colon - 2)] = value;
  }
  return kv;
}

inline RunLog read_log_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LogFormatError("cannot open log '" + path + "'");
  std::string header;
  RunLog log;
  log.meta = parse_meta(parse_meta_lines(in, &header));
  const auto cols = log_columns(log.num_obstacles());
  std::string expected;
  for (size_t i = 0; i < cols.size(); ++i) expected += (i ? "," : "") + cols[i];
  if (header != expected) throw LogFormatError("log column header does not match its metadata");
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> v;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      v.push_back(std::strtod(cell.c_str(), &end));
      if (end == cell.c_str()) throw LogFormatError("non-numeric log cell '" + cell + "'");
    }
    if (v.size() != cols.size()) throw LogFormatError("log row has " + std::to_string(v.size()) + " cells");
    log.rows.push_back(row_from_values(v, log.num_obstacles()));
  }
  return log;
}

inline RunLog read_log_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LogFormatError("cannot open log '" + path + "'");
  char magic[8];
  std::uint64_t meta_len = 0, n_cols = 0, n_rows = 0;
  in.read(magic, 8);
  if (!in || std::memcmp(magic, log_detail::kBinaryMagic, 8) != 0) throw LogFormatError("not a binary run log");
  in.read(reinterpret_cast<char*>(&meta_len), 8);
  std::string meta(meta_len, '\0');
  in.read(meta.data(), static_cast<std::streamsize>(meta_len));
  std::istringstream ms(meta);
  RunLog log;
  log.meta = parse_meta(parse_meta_lines(ms, nullptr));
  in.read(reinterpret_cast<char*>(&n_cols), 8);
  in.read(reinterpret_cast<char*>(&n_rows), 8);
  if (!in || n_cols != log_columns(log.num_obstacles()).size()) throw LogFormatError("binary log header mismatch");
  std::vector<double> v(n_cols);
  for (std::uint64_t r = 0; r < n_rows; ++r) {
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n_cols * sizeof(double)));
    if (!in) throw LogFormatError("binary log truncated");
    log.rows.push_back(row_from_values(v, log.num_obstacles()));
  }
  return log;
}

/// Reads either format, chosen by the file's leading bytes.
inline RunLog read_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  char magic[8] = {};
  in.read(magic, 8);
  if (in && std::memcmp(magic, log_detail::kBinaryMagic, 8) == 0) return read_log_binary(path);
  return read_log_csv(path);
}

}  // namespace pmpc
