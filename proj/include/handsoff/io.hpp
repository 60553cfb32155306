#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "handsoff/model.hpp"

namespace handsoff {

/// Parses a problem document
///   {"A": [[...]], "B": [[...]], "x0": [...], "T": number, "N": integer,
///    "weights": [...]}
/// ("weights" optional, default all ones) and validates it. Parse failures
/// throw Error(kParseError) whose field() names the key or "line:col".
Problem read_problem(std::string_view text);
Problem read_problem_file(const std::filesystem::path& path);

/// Inverse of read_problem; numbers are written in shortest round-trip form.
std::string write_problem(const Problem& p);

/// Plot-ready CSV: header "t,u1,...,um,x1,...,xn", one row per grid point
/// t_k = k h, k = 0..N. The row at t_N repeats u[N-1]. %.17g formatting.
std::string write_signal(const Signal& s, const Trajectory& traj);

/// Fine-grained variant for trajectories sampled `substeps` times per
/// interval; traj has N*substeps + 1 columns.
std::string write_fine_signal(const Signal& s, const Trajectory& traj, int substeps);

std::string format_double(double v);

void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace handsoff
