// Copyright 2026 The swingup Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

#include "swingup/control.hpp"
#include "swingup/learn.hpp"
#include "swingup/model.hpp"

namespace swingup {

/// Shortest lossless decimal form used in all file output.
inline std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

/// Whole-file artifacts go through a temp file plus rename so interrupted
/// runs never leave truncated JSON/CSV behind.
inline void atomic_write_text(const std::filesystem::path& path,
                              const std::string& content) {
  std::filesystem::create_directories(path.parent_path().empty()
                                          ? "."
                                          : path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void atomic_write_json(const std::filesystem::path& path,
                              const nlohmann::ordered_json& j) {
  atomic_write_text(path, j.dump(2) + "\n");
}

/// One physics-rate log record of the closed loop.
struct TrajectoryRow {
  SimState state;
  TaskReference ref;
  Eigen::VectorXd u;
  Wrench achieved;
  double reward = 0.0;
  bool saturated = false;
};

inline std::string trajectory_csv_header(int num_rotors) {
  std::string h = "t,alpha,beta,alpha_dot,beta_dot,qw,qx,qy,qz,wx,wy,wz,"
                  "alpha_ref,beta_ref";
  for (int i = 0; i < num_rotors; ++i) h += ",u_" + std::to_string(i);
  h += ",F_x,F_y,F_z,tau_x,tau_y,tau_z,reward,saturated";
  return h;
}

inline std::string trajectory_csv_row(const TrajectoryRow& r) {
  std::string line;
  const auto add = [&](double v) {
    if (!line.empty()) line += ',';
    line += format_g17(v);
  };
  add(r.state.t);
  add(r.state.alpha);
  add(r.state.beta);
  add(r.state.alpha_dot);
  add(r.state.beta_dot);
  add(r.state.q_WB.w());
  add(r.state.q_WB.x());
  add(r.state.q_WB.y());
  add(r.state.q_WB.z());
  add(r.state.omega.x());
  add(r.state.omega.y());
  add(r.state.omega.z());
  add(r.ref.alpha_ref);
  add(r.ref.beta_ref);
  for (int i = 0; i < r.u.size(); ++i) add(r.u[i]);
  add(r.achieved.force.x());
  add(r.achieved.force.y());
  add(r.achieved.force.z());
  add(r.achieved.torque.x());
  add(r.achieved.torque.y());
  add(r.achieved.torque.z());
  add(r.reward);
  line += r.saturated ? ",1" : ",0";
  return line;
}

/// Buffers rows and lands the whole file atomically.
class TrajectoryWriter {
 public:
  explicit TrajectoryWriter(int num_rotors) : num_rotors_(num_rotors) {}

  void add(const TrajectoryRow& row) { rows_.push_back(row); }
  void clear() { rows_.clear(); }
  size_t size() const { return rows_.size(); }

  std::string to_csv() const {
    std::string out = trajectory_csv_header(num_rotors_) + "\n";
    for (const TrajectoryRow& r : rows_) out += trajectory_csv_row(r) + "\n";
    return out;
  }

  void write(const std::filesystem::path& path) const {
    atomic_write_text(path, to_csv());
  }

 private:
  int num_rotors_;
  std::vector<TrajectoryRow> rows_;
};

/// Fixed-key line-delimited JSON metrics. wall_s is zeroed in file output so
/// the stream is a pure function of (config, seed); live timing goes to the
/// console instead.
inline nlohmann::ordered_json metrics_to_json(const MetricsRecord& r,
                                              bool deterministic_wall) {
  nlohmann::ordered_json j;
  j["step"] = r.step;
  j["mean_return"] = r.mean_return;
  j["success_rate"] = r.success_rate;
  j["policy_loss"] = r.policy_loss;
  j["value_loss"] = r.value_loss;
  j["entropy"] = r.entropy;
  j["explained_var"] = r.explained_var;
  j["wall_s"] = deterministic_wall ? 0.0 : r.wall_s;
  return j;
}

/// Appends one record per line and flushes, so an interrupted run keeps
/// every completed update.
class JsonlMetricsSink : public MetricsSink {
 public:
  explicit JsonlMetricsSink(const std::filesystem::path& path,
                            bool append = false)
      : out_(path, append ? (std::ios::out | std::ios::app)
                          : (std::ios::out | std::ios::trunc)) {
    if (!out_) throw std::runtime_error("cannot open " + path.string());
  }

  void emit(const MetricsRecord& r) override {
    out_ << metrics_to_json(r, /*deterministic_wall=*/true).dump() << "\n";
    out_.flush();
  }

 private:
  std::ofstream out_;
};

}  // namespace swingup
