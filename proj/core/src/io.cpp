#include "pdmp/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pdmp/error.hpp"

namespace pdmp {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  if (ec != std::errc()) throw Error(ErrorKind::IoError, "cannot format floating-point value");
  return std::string(buf, ptr);
}

void write_trajectory_header(std::ostream& os, std::size_t dimension) {
  os << "path_id,t,event_kind,regime_pre,regime_post";
  for (std::size_t i = 0; i < dimension; ++i) os << ",pre_" << i;
  for (std::size_t i = 0; i < dimension; ++i) os << ",post_" << i;
  os << '\n';
}

namespace {

void write_state(std::ostream& os, const State& s) {
  for (double v : s) os << ',' << format_double(v);
}

}  // namespace

void write_trajectory_rows(std::ostream& os, std::size_t path_id, const Trajectory& traj,
                           const State& initial_state, int initial_regime) {
  os << path_id << ",0,start," << initial_regime << ',' << initial_regime;
  write_state(os, initial_state);
  write_state(os, initial_state);
  os << '\n';
  for (const auto& j : traj.jumps) {
    os << path_id << ',' << format_double(j.t) << ',' << j.kind << ',' << j.regime_pre << ',' << j.regime_post;
    write_state(os, j.pre);
    write_state(os, j.post);
    os << '\n';
  }
  os << path_id << ',' << format_double(traj.horizon) << ",horizon," << traj.final_regime << ','
     << traj.final_regime;
  write_state(os, traj.final_state);
  write_state(os, traj.final_state);
  os << '\n';
}

void write_snapshot_header(std::ostream& os, std::size_t dimension) {
  os << "path_id,t_snap,regime";
  for (std::size_t i = 0; i < dimension; ++i) os << ",x_" << i;
  os << '\n';
}

void write_snapshot_rows(std::ostream& os, std::size_t path_id, const std::vector<Snapshot>& snaps) {
  for (const auto& s : snaps) {
    os << path_id << ',' << format_double(s.t) << ',' << s.regime;
    write_state(os, s.x);
    os << '\n';
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
  f << content;
  if (!f) throw Error(ErrorKind::IoError, "failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace pdmp
