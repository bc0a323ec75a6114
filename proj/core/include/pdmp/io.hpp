#pragma once

#include <cstddef>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "pdmp/process.hpp"

namespace pdmp {

/// 17 significant digits ("%.17g" style), so values round-trip exactly.
/// Non-finite values print as nan / inf / -inf.
std::string format_double(double v);

/// Header: path_id,t,event_kind,regime_pre,regime_post,pre_0..,post_0..
void write_trajectory_header(std::ostream& os, std::size_t dimension);
/// One "start" row at t = 0, one row per jump, one "horizon" row at the end.
void write_trajectory_rows(std::ostream& os, std::size_t path_id, const Trajectory& traj,
                           const State& initial_state, int initial_regime);

/// Header: path_id,t_snap,regime,x_0..
void write_snapshot_header(std::ostream& os, std::size_t dimension);
void write_snapshot_rows(std::ostream& os, std::size_t path_id, const std::vector<Snapshot>& snaps);

/// Writes `content` to `path`, creating parent directories. Throws IoError.
void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace pdmp
