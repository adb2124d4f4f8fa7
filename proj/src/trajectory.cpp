#include "tscale/trajectory.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace tscale {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, std::size_t line_no) {
  std::size_t b = s.find_first_not_of(" \t\r");
  std::size_t e = s.find_last_not_of(" \t\r");
  double v = 0.0;
  if (b != std::string::npos) {
    auto res = std::from_chars(s.data() + b, s.data() + e + 1, v);
    if (res.ec == std::errc() && res.ptr == s.data() + e + 1) return v;
  }
  throw Error(ErrorCode::ParseError, "trajectory CSV line " + std::to_string(line_no) + ": bad number '" + s + "'");
}

}  // namespace

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "t";
  for (std::size_t i = 1; i <= traj.dim(); ++i) os << ",y" << i;
  os << '\n';
  const auto old = os.precision(17);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    os << traj.grid[k];
    for (double y : traj.states[k]) os << ',' << y;
    os << '\n';
  }
  os.precision(old);
}

Trajectory read_trajectory_csv(std::istream& is, Mode mode) {
  Trajectory traj;
  traj.mode = mode;
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::ParseError, "trajectory CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line);
  if (header.size() < 2 || header[0] != "t")
    throw Error(ErrorCode::ParseError, "trajectory CSV header must be t,y1,...,yn");
  for (std::size_t i = 1; i < header.size(); ++i)
    if (header[i] != "y" + std::to_string(i))
      throw Error(ErrorCode::ParseError, "trajectory CSV header column " + std::to_string(i + 1) + " must be y" +
                                             std::to_string(i));
  const std::size_t n = header.size() - 1;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line);
    if (fields.size() != n + 1)
      throw Error(ErrorCode::ParseError, "trajectory CSV line " + std::to_string(line_no) + ": expected " +
                                             std::to_string(n + 1) + " fields");
    const double t = parse_number(fields[0], line_no);
    if (!traj.grid.empty() && !(t > traj.grid.back()))
      throw Error(ErrorCode::ParseError, "trajectory CSV line " + std::to_string(line_no) + ": time not increasing");
    traj.grid.push_back(t);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = parse_number(fields[i + 1], line_no);
    traj.states.push_back(std::move(y));
  }
  if (traj.grid.empty()) throw Error(ErrorCode::ParseError, "trajectory CSV has no rows");
  return traj;
}

}  // namespace tscale
