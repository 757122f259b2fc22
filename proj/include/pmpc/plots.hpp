#pragma once

// Plot-data export: one columnar file per figure type, derived from a run log.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "pmpc/run_log.hpp"

namespace pmpc {

struct PlotFiles {
  std::string velocities;
  std::string wrenches;
  std::string barriers;
  std::string traces;
};

namespace plot_detail {

inline void write_row(std::ofstream& out, const std::vector<double>& v) {
  for (size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << log_detail::fmt(v[i]);
  out << "\n";
}

inline void write_header(std::ofstream& out, const std::vector<std::string>& cols) {
  for (size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << "\n";
}

inline std::ofstream open(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  return out;
}

}  // namespace plot_detail

/// Writes <stem>_velocity.csv, <stem>_wrench.csv, <stem>_barrier.csv and <stem>_xy.csv into `dir`.
inline PlotFiles export_plots(const RunLog& log, const std::string& dir, const std::string& stem) {
  using namespace plot_detail;
  using log_detail::kBodies;
  std::filesystem::create_directories(dir);
  PlotFiles files{dir + "/" + stem + "_velocity.csv", dir + "/" + stem + "_wrench.csv",
                  dir + "/" + stem + "_barrier.csv", dir + "/" + stem + "_xy.csv"};
  const int n_obs = log.num_obstacles();

  {
    auto out = open(files.velocities);
    std::vector<std::string> cols{"t"};
    for (int b = 0; b < 3; ++b) {
      for (const char* a : {"vx", "vy"}) {
        cols.push_back(std::string(kBodies[b]) + "_" + a);
        cols.push_back(std::string("ref_") + kBodies[b] + "_" + a);
      }
    }
    cols.push_back("pl_yaw");
    cols.push_back("ref_pl_yaw");
    write_header(out, cols);
    for (const auto& r : log.rows) {
      std::vector<double> v{r.t};
      for (int b = 0; b < 3; ++b) {
        for (int a = 0; a < 2; ++a) {
          v.push_back(r.x(12 * b + idx::kVel + a));
          v.push_back(r.ref(12 * b + idx::kVel + a));
        }
      }
      v.push_back(r.x(24 + idx::kEuler + 2));
      v.push_back(r.ref(24 + idx::kEuler + 2));
      write_row(out, v);
    }
  }
  {
    auto out = open(files.wrenches);
    const auto all = log_columns(n_obs);
    std::vector<std::string> cols{"t"};
    for (const auto& c : all) {
      if (c.rfind("grf_", 0) == 0 || c.rfind("lam_", 0) == 0) cols.push_back(c);
    }
    write_header(out, cols);
    for (const auto& r : log.rows) {
      std::vector<double> v{r.t};
      for (Eigen::Index i = 0; i < r.grf.size(); ++i) v.push_back(r.grf(i));
      for (Eigen::Index i = 0; i < 10; ++i) v.push_back(r.plant_lambda(i));
      for (Eigen::Index i = 0; i < 10; ++i) v.push_back(r.ctrl_lambda(i));
      write_row(out, v);
    }
  }
  {
    auto out = open(files.barriers);
    std::vector<std::string> cols{"t"};
    for (int b = 0; b < 3; ++b) {
      for (int l = 0; l < n_obs; ++l) cols.push_back(std::string("h_") + kBodies[b] + "_o" + std::to_string(l));
    }
    write_header(out, cols);
    for (const auto& r : log.rows) {
      std::vector<double> v{r.t};
      v.insert(v.end(), r.h.begin(), r.h.end());
      write_row(out, v);
    }
  }
  {
    auto out = open(files.traces);
    out << "# obstacles_m:";
    for (const auto& o : log.meta.obstacles) out << " " << log_detail::fmt(o.position.x()) << "," << log_detail::fmt(o.position.y());
    out << "\n# d_th_m: " << log_detail::fmt(log.meta.hocbf.d_th) << "\n";
    std::vector<std::string> cols{"t"};
    for (int b = 0; b < 3; ++b) {
      for (const char* a : {"x", "y"}) {
        cols.push_back(std::string(kBodies[b]) + "_" + a);
        cols.push_back(std::string("ref_") + kBodies[b] + "_" + a);
      }
    }
    write_header(out, cols);
    for (const auto& r : log.rows) {
      std::vector<double> v{r.t};
      for (int b = 0; b < 3; ++b) {
        for (int a = 0; a < 2; ++a) {
          v.push_back(r.x(12 * b + a));
          v.push_back(r.ref(12 * b + a));
        }
      }
      write_row(out, v);
    }
  }
  return files;
}

}  // namespace pmpc
