#pragma once

// Trajectory records and their line-delimited JSON / CSV encodings.
//
// JSON lines: one object per record with keys
//   t, upsilon, lyapunov, f_norm, u_norm, alpha, routes
// plus optional jump (baseline runs) and wall_time (when timing is enabled).
//
// CSV: header row, then columns
//   t, lyapunov, f_norm, u_norm, alpha, [jump], [wall_time], upsilon_0..upsilon_{P-1}, route_0..route_{K-1}
// where each route cell is the hop chain joined by '>'.

#include <parasdm/model.hpp>
#include <parasdm/policy_system.hpp>

#include <json.hpp>

#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace parasdm {

struct TrajectoryRecord {
  double t = 0.0;
  std::vector<double> upsilon;
  double lyapunov = 0.0;
  double f_norm = 0.0;
  double u_norm = 0.0;
  double alpha = 0.0;
  /// Per source: greedy chain of states (source first) following the most likely action.
  std::vector<std::vector<Index>> routes;
  std::optional<double> jump;
  std::optional<double> wall_time;

  friend bool operator==(const TrajectoryRecord&, const TrajectoryRecord&) = default;
};

/// Follows the most likely action from each source, moving to that action's
/// most likely successor. States already on the chain are skipped, since a soft
/// policy's argmax can cycle; the chain stops at the terminal or when every
/// successor has been visited.
inline std::vector<std::vector<Index>> greedy_routes(const ModelSpec& model, const SoftPolicy& policy,
                                                     const std::vector<Index>& sources) {
  std::vector<std::vector<Index>> out;
  for (Index src : sources) {
    std::vector<Index> chain{src};
    std::vector<bool> seen(model.n_states(), false);
    seen[src] = true;
    Index s = src;
    while (s != model.terminal()) {
      double best_mu = -1.0;
      Index best_next = s;
      for (std::size_t k = model.pair_begin(s); k < model.pair_end(s); ++k) {
        const auto row = model.transitions(s, model.pair_action(k));
        if (row.empty() || policy.mu[k] <= best_mu) continue;
        const Transition* likely = &row[0];
        for (const auto& tr : row)
          if (tr.probability > likely->probability) likely = &tr;
        if (seen[likely->next]) continue;
        best_mu = policy.mu[k];
        best_next = likely->next;
      }
      if (best_next == s) break;
      s = best_next;
      seen[s] = true;
      chain.push_back(s);
    }
    out.push_back(std::move(chain));
  }
  return out;
}

inline nlohmann::json to_json(const TrajectoryRecord& r, bool include_timing) {
  nlohmann::json j;
  j["t"] = r.t;
  j["upsilon"] = r.upsilon;
  j["lyapunov"] = r.lyapunov;
  j["f_norm"] = r.f_norm;
  j["u_norm"] = r.u_norm;
  j["alpha"] = r.alpha;
  j["routes"] = r.routes;
  if (r.jump) j["jump"] = *r.jump;
  if (include_timing && r.wall_time) j["wall_time"] = *r.wall_time;
  return j;
}

inline TrajectoryRecord record_from_json(const nlohmann::json& j) {
  TrajectoryRecord r;
  r.t = j.at("t").get<double>();
  r.upsilon = j.at("upsilon").get<std::vector<double>>();
  r.lyapunov = j.at("lyapunov").get<double>();
  r.f_norm = j.at("f_norm").get<double>();
  r.u_norm = j.at("u_norm").get<double>();
  r.alpha = j.at("alpha").get<double>();
  r.routes = j.at("routes").get<std::vector<std::vector<Index>>>();
  if (j.contains("jump")) r.jump = j.at("jump").get<double>();
  if (j.contains("wall_time")) r.wall_time = j.at("wall_time").get<double>();
  return r;
}

inline void write_jsonl(std::ostream& os, const TrajectoryRecord& r, bool include_timing) {
  os << to_json(r, include_timing).dump() << '\n';
}

inline std::vector<TrajectoryRecord> read_jsonl(std::istream& is) {
  std::vector<TrajectoryRecord> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    out.push_back(record_from_json(nlohmann::json::parse(line)));
  }
  return out;
}

inline std::vector<TrajectoryRecord> read_jsonl_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open trajectory file " + path);
  return read_jsonl(in);
}

inline void write_csv_header(std::ostream& os, const TrajectoryRecord& first, bool include_timing) {
  os << "t,lyapunov,f_norm,u_norm,alpha";
  if (first.jump) os << ",jump";
  if (include_timing && first.wall_time) os << ",wall_time";
  for (std::size_t i = 0; i < first.upsilon.size(); ++i) os << ",upsilon_" << i;
  for (std::size_t i = 0; i < first.routes.size(); ++i) os << ",route_" << i;
  os << '\n';
}

inline void write_csv_row(std::ostream& os, const TrajectoryRecord& r, bool include_timing) {
  std::ostringstream line;
  line.precision(17);
  line << r.t << ',' << r.lyapunov << ',' << r.f_norm << ',' << r.u_norm << ',' << r.alpha;
  if (r.jump) line << ',' << *r.jump;
  if (include_timing && r.wall_time) line << ',' << *r.wall_time;
  for (double x : r.upsilon) line << ',' << x;
  for (const auto& route : r.routes) {
    line << ',';
    for (std::size_t k = 0; k < route.size(); ++k) line << (k ? ">" : "") << route[k];
  }
  os << line.str() << '\n';
}

/// Streams records to a file as JSON lines or CSV, flushing after every record
/// so a failed run leaves its partial trajectory behind.
class TrajectoryWriter {
 public:
  TrajectoryWriter(const std::string& path, bool csv, bool include_timing)
      : out_(path, std::ios::out | std::ios::trunc), csv_(csv), timing_(include_timing) {
    if (!out_) throw Error("cannot open output file " + path);
  }

  void write(const TrajectoryRecord& r) {
    if (csv_) {
      if (!header_written_) {
        write_csv_header(out_, r, timing_);
        header_written_ = true;
      }
      write_csv_row(out_, r, timing_);
    } else {
      write_jsonl(out_, r, timing_);
    }
    out_.flush();
    if (!out_) throw Error("write to trajectory file failed");
  }

 private:
  std::ofstream out_;
  bool csv_;
  bool timing_;
  bool header_written_ = false;
};

}  // namespace parasdm
