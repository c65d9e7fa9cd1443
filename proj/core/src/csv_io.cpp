#include "sdelab/csv_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace sdelab {

std::string formatDouble(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parseDouble(const std::string& text) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) throw std::invalid_argument("not a number: '" + text + "'");
  return v;
}

namespace {

std::uint64_t parseUnsigned(const std::string& text) {
  std::uint64_t v = 0;
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) throw std::invalid_argument("not an integer: '" + text + "'");
  return v;
}

std::vector<std::string> splitLine(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::ofstream openOut(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  return f;
}

} // namespace

std::vector<std::string> statsColumns(std::size_t dim) {
  std::vector<std::string> cols{"experiment_id", "engine", "step", "time", "loss_mean", "loss_std", "n_alive"};
  if (dim > kMaxPersistedDim) return cols;
  for (std::size_t i = 0; i < dim; ++i) cols.push_back("mean_" + std::to_string(i));
  for (std::size_t i = 0; i < dim; ++i) cols.push_back("cov_" + std::to_string(i) + "_" + std::to_string(i));
  return cols;
}

void writeStatsCsv(std::ostream& os, const EnsembleStats& s) {
  if (s.experimentId.find(',') != std::string::npos) throw std::invalid_argument("experiment id contains a comma");
  const auto cols = statsColumns(s.dim);
  for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << cols[c];
  os << '\n';
  const bool withState = s.dim <= kMaxPersistedDim;
  const std::string engine = toString(s.engine);
  for (std::size_t r = 0; r < s.records(); ++r) {
    os << s.experimentId << ',' << engine << ',' << s.stepIndex[r] << ',' << formatDouble(s.time[r]) << ','
       << formatDouble(s.lossMean[r]) << ',' << formatDouble(s.lossStd[r]) << ',' << s.nAlive;
    if (withState) {
      for (std::size_t i = 0; i < s.dim; ++i) os << ',' << formatDouble(s.stateMean[r][i]);
      for (std::size_t i = 0; i < s.dim; ++i) os << ',' << formatDouble(s.stateCov[r][i]);
    }
    os << '\n';
  }
}

void writeStatsCsv(const std::string& path, const EnsembleStats& stats) {
  auto f = openOut(path);
  writeStatsCsv(f, stats);
  if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

EnsembleStats readStatsCsv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.empty()) throw std::runtime_error("stats CSV: missing header");
  const auto header = splitLine(line);
  const auto base = statsColumns(0);
  if (header.size() < base.size()) throw std::runtime_error("stats CSV: header too short");
  for (std::size_t c = 0; c < base.size(); ++c)
    if (header[c] != base[c]) throw std::runtime_error("stats CSV: expected column '" + base[c] + "'");
  const std::size_t extra = header.size() - base.size();
  if (extra % 2 != 0) throw std::runtime_error("stats CSV: unbalanced mean/cov columns");
  const std::size_t dim = extra / 2;
  const auto expected = statsColumns(dim);
  for (std::size_t c = 0; c < expected.size(); ++c)
    if (header[c] != expected[c]) throw std::runtime_error("stats CSV: expected column '" + expected[c] + "'");

  EnsembleStats s;
  s.dim = dim;
  std::size_t lineNo = 1;
  bool first = true;
  while (std::getline(is, line)) {
    ++lineNo;
    if (line.empty()) continue;
    const auto cells = splitLine(line);
    if (cells.size() != header.size())
      throw std::runtime_error("stats CSV line " + std::to_string(lineNo) + ": wrong number of cells");
    const Engine engine = parseEngine(cells[1]);
    const std::size_t alive = parseUnsigned(cells[6]);
    if (first) {
      s.experimentId = cells[0];
      s.engine = engine;
      s.nAlive = alive;
      s.runs = alive;
      first = false;
    } else if (cells[0] != s.experimentId || engine != s.engine) {
      throw std::runtime_error("stats CSV line " + std::to_string(lineNo) + ": mixed experiments or engines");
    }
    s.stepIndex.push_back(parseUnsigned(cells[2]));
    s.time.push_back(parseDouble(cells[3]));
    s.lossMean.push_back(parseDouble(cells[4]));
    s.lossStd.push_back(parseDouble(cells[5]));
    Vec mean(dim), cov(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      mean[i] = parseDouble(cells[7 + i]);
      cov[i] = parseDouble(cells[7 + dim + i]);
    }
    s.stateMean.push_back(std::move(mean));
    s.stateCov.push_back(std::move(cov));
  }
  if (first) throw std::runtime_error("stats CSV: no data rows");
  return s;
}

EnsembleStats readStatsCsv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "'");
  return readStatsCsv(f);
}

void writeWeakErrorCsv(std::ostream& os, const WeakErrorReport& rep) {
  os << "observable,step,gap,mc_stderr\n";
  for (std::size_t r = 0; r < rep.perStepGap.size(); ++r)
    os << rep.observable << ',' << rep.stepIndex[r] << ',' << formatDouble(rep.perStepGap[r]) << ','
       << formatDouble(rep.perStepStdErr[r]) << '\n';
}

void writeWeakErrorCsv(const std::string& path, const WeakErrorReport& rep) {
  auto f = openOut(path);
  writeWeakErrorCsv(f, rep);
  if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

} // namespace sdelab
