#pragma once

#include <Eigen/Dense>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "deepc/num_io.hpp"

namespace deepc {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Offline input/output record used to build Hankel trajectory libraries.
///
/// Rows are samples: u is T x m (charging current, A/m^2), y is T x r with
/// output channels ordered [voltage V, temperature degC, SOC fraction].
/// segment_starts lists the 0-based first sample of each independent
/// sub-trajectory; a single continuous record is {0}.
struct TrajectoryDataset {
  Mat u;
  Mat y;
  double dt = 0.0;
  std::vector<long> segment_starts{0};

  long samples() const { return u.rows(); }
  long input_dim() const { return u.cols(); }
  long output_dim() const { return y.cols(); }
  long segment_count() const { return static_cast<long>(segment_starts.size()); }

  long segment_begin(long s) const { return segment_starts[static_cast<size_t>(s)]; }
  long segment_end(long s) const {
    return s + 1 < segment_count() ? segment_starts[static_cast<size_t>(s + 1)] : samples();
  }
  long segment_length(long s) const { return segment_end(s) - segment_begin(s); }

  void validate() const {
    if (u.rows() < 1) throw std::invalid_argument("TrajectoryDataset: empty input record");
    if (u.rows() != y.rows())
      throw std::invalid_argument("TrajectoryDataset: u has " + std::to_string(u.rows()) +
                                  " samples but y has " + std::to_string(y.rows()));
    if (!(dt > 0.0)) throw std::invalid_argument("TrajectoryDataset: dt must be > 0");
    if (segment_starts.empty() || segment_starts.front() != 0)
      throw std::invalid_argument("TrajectoryDataset: first segment must start at sample 0");
    for (size_t i = 1; i < segment_starts.size(); ++i) {
      if (segment_starts[i] <= segment_starts[i - 1] || segment_starts[i] >= samples())
        throw std::invalid_argument(
            "TrajectoryDataset: segment starts must be strictly increasing and within the record");
    }
  }
};

/// Writes the dataset as a delimited text table, one line per sample:
///   t, u_1..u_m, y_1..y_r, segment_id
/// Values are printed in round-trip form, so load(save(d)) == d bit-exactly.
inline void save_dataset(const TrajectoryDataset& data, const std::string& path) {
  data.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_dataset: cannot open '" + path + "' for writing");
  const long m = data.input_dim();
  const long r = data.output_dim();
  out << "t";
  for (long j = 0; j < m; ++j) out << ",u_" << (j + 1);
  for (long j = 0; j < r; ++j) out << ",y_" << (j + 1);
  out << ",segment_id\n";
  long seg = 0;
  for (long i = 0; i < data.samples(); ++i) {
    while (seg + 1 < data.segment_count() && i >= data.segment_begin(seg + 1)) ++seg;
    out << format_double(static_cast<double>(i) * data.dt);
    for (long j = 0; j < m; ++j) out << ',' << format_double(data.u(i, j));
    for (long j = 0; j < r; ++j) out << ',' << format_double(data.y(i, j));
    out << ',' << seg << '\n';
  }
  if (!out) throw std::runtime_error("save_dataset: write to '" + path + "' failed");
}

inline TrajectoryDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_dataset: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_dataset: '" + path + "' is empty");

  std::vector<std::string_view> fields;
  split_fields(line, ',', fields);
  long m = 0, r = 0;
  for (const auto& f : fields) {
    if (f.rfind("u_", 0) == 0) ++m;
    if (f.rfind("y_", 0) == 0) ++r;
  }
  if (fields.size() < 3 || fields.front() != "t" || fields.back() != "segment_id" || m < 1 || r < 1)
    throw std::runtime_error("load_dataset: malformed header in '" + path +
                             "' (expected t,u_1..u_m,y_1..y_r,segment_id)");
  const size_t ncols = static_cast<size_t>(2 + m + r);

  std::vector<double> times, uvals, yvals;
  std::vector<long> segs;
  long row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    split_fields(line, ',', fields);
    if (fields.size() != ncols)
      throw std::runtime_error("load_dataset: row " + std::to_string(row) + " has " +
                               std::to_string(fields.size()) + " fields, expected " +
                               std::to_string(ncols));
    double v;
    if (!parse_double(fields[0], v))
      throw std::runtime_error("load_dataset: row " + std::to_string(row) +
                               ", column 1 (t): not a number: '" + std::string(fields[0]) + "'");
    times.push_back(v);
    for (long j = 0; j < m + r; ++j) {
      if (!parse_double(fields[static_cast<size_t>(1 + j)], v))
        throw std::runtime_error("load_dataset: row " + std::to_string(row) + ", column " +
                                 std::to_string(2 + j) + ": not a number: '" +
                                 std::string(fields[static_cast<size_t>(1 + j)]) + "'");
      (j < m ? uvals : yvals).push_back(v);
    }
    long s;
    if (!parse_long(fields.back(), s))
      throw std::runtime_error("load_dataset: row " + std::to_string(row) +
                               ": segment_id is not an integer: '" + std::string(fields.back()) +
                               "'");
    segs.push_back(s);
  }
  const long T = row > 0 ? static_cast<long>(times.size()) : 0;
  if (T < 1) throw std::runtime_error("load_dataset: '" + path + "' has no samples");

  TrajectoryDataset data;
  data.u.resize(T, m);
  data.y.resize(T, r);
  for (long i = 0; i < T; ++i) {
    for (long j = 0; j < m; ++j) data.u(i, j) = uvals[static_cast<size_t>(i * m + j)];
    for (long j = 0; j < r; ++j) data.y(i, j) = yvals[static_cast<size_t>(i * r + j)];
  }
  data.dt = T > 1 ? times[1] - times[0] : 1.0;
  data.segment_starts.clear();
  for (long i = 0; i < T; ++i) {
    if (i == 0 || segs[static_cast<size_t>(i)] != segs[static_cast<size_t>(i - 1)])
      data.segment_starts.push_back(i);
  }
  data.validate();
  return data;
}

}  // namespace deepc
