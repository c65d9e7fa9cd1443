#pragma once

#include "sdelab/ensemble.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace sdelab {

// States with more coordinates than this are persisted loss-only.
inline constexpr std::size_t kMaxPersistedDim = 16;

// Column order: experiment_id, engine, step, time, loss_mean, loss_std, n_alive,
// mean_0 .. mean_{d-1}, cov_0_0 .. cov_{d-1}_{d-1}.
// Numbers use the shortest representation that round-trips exactly.
std::vector<std::string> statsColumns(std::size_t dim);
void writeStatsCsv(std::ostream& os, const EnsembleStats& stats);
void writeStatsCsv(const std::string& path, const EnsembleStats& stats);

// Parses one experiment/engine block. Fields not in the schema (runs, divergedCount,
// phase histograms, paths) are left at their defaults, except runs = n_alive.
EnsembleStats readStatsCsv(std::istream& is);
EnsembleStats readStatsCsv(const std::string& path);

// Columns: observable, step, gap, mc_stderr.
void writeWeakErrorCsv(std::ostream& os, const WeakErrorReport& report);
void writeWeakErrorCsv(const std::string& path, const WeakErrorReport& report);

std::string formatDouble(double v);
double parseDouble(const std::string& text);

} // namespace sdelab
