#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <stdexcept>
#include <string>

#include "deepc/dataset.hpp"

namespace deepc {

/// Block Hankel matrix of a vector time series.
///
/// series is T x k (rows are samples); the result is (k*L) x (T-L+1) with
/// block (i, j) equal to sample i+j (0-based), so column j is the flattened
/// window series[j .. j+L-1].
inline Mat build_hankel(const Mat& series, long window) {
  const long T = series.rows();
  const long k = series.cols();
  if (window < 1) throw std::invalid_argument("build_hankel: window length must be >= 1");
  if (T < window)
    throw std::invalid_argument("build_hankel: series length " + std::to_string(T) +
                                " is shorter than window length " + std::to_string(window));
  Mat h(k * window, T - window + 1);
  for (long j = 0; j <= T - window; ++j)
    for (long i = 0; i < window; ++i)
      h.block(i * k, j, k, 1) = series.row(i + j).transpose();
  return h;
}

/// The partitioned trajectory library: past/future blocks of the input and
/// output Hankel matrices. For multiple segments the per-segment matrices are
/// concatenated column-wise (mosaic form).
struct HankelBlocks {
  Mat up;  // m*t_ini x q
  Mat yp;  // r*t_ini x q
  Mat uf;  // m*horizon x q
  Mat yf;  // r*horizon x q
  long t_ini = 0;
  long horizon = 0;

  long cols() const { return up.cols(); }
  long input_dim() const { return t_ini > 0 ? up.rows() / t_ini : 0; }
  long output_dim() const { return t_ini > 0 ? yp.rows() / t_ini : 0; }

  /// Stacked data matrix [Up; Yp; Uf; Yf], the left-hand side of the
  /// trajectory-consistency equation.
  Mat stacked() const {
    Mat a(up.rows() + yp.rows() + uf.rows() + yf.rows(), cols());
    a << up, yp, uf, yf;
    return a;
  }
};

inline HankelBlocks build_blocks(const TrajectoryDataset& data, long t_ini, long horizon) {
  data.validate();
  if (t_ini < 1 || horizon < 1)
    throw std::invalid_argument("build_blocks: t_ini and horizon must be >= 1");
  const long window = t_ini + horizon;
  const long m = data.input_dim();
  const long r = data.output_dim();

  long q = 0;
  for (long s = 0; s < data.segment_count(); ++s) {
    const long len = data.segment_length(s);
    if (len < window)
      throw std::invalid_argument("build_blocks: segment " + std::to_string(s) + " has length " +
                                  std::to_string(len) + " < t_ini + horizon = " +
                                  std::to_string(window));
    q += len - window + 1;
  }

  HankelBlocks b;
  b.t_ini = t_ini;
  b.horizon = horizon;
  b.up.resize(m * t_ini, q);
  b.yp.resize(r * t_ini, q);
  b.uf.resize(m * horizon, q);
  b.yf.resize(r * horizon, q);
  long col = 0;
  for (long s = 0; s < data.segment_count(); ++s) {
    const long begin = data.segment_begin(s);
    const long len = data.segment_length(s);
    const Mat hu = build_hankel(data.u.middleRows(begin, len), window);
    const Mat hy = build_hankel(data.y.middleRows(begin, len), window);
    const long qs = hu.cols();
    b.up.middleCols(col, qs) = hu.topRows(m * t_ini);
    b.uf.middleCols(col, qs) = hu.bottomRows(m * horizon);
    b.yp.middleCols(col, qs) = hy.topRows(r * t_ini);
    b.yf.middleCols(col, qs) = hy.bottomRows(r * horizon);
    col += qs;
  }
  return b;
}

/// True iff the order-L (possibly mosaic) Hankel matrix of the input series
/// has full row rank, judged by singular values above
/// rank_tolerance * sigma_max. A record too short for the window (or for full
/// rank to be possible at all) returns false rather than erroring.
inline bool check_persistent_excitation(const Mat& u_series, long order,
                                        double rank_tolerance = 1e-9) {
  if (order < 1) throw std::invalid_argument("check_persistent_excitation: order must be >= 1");
  if (u_series.rows() < order) return false;
  const Mat h = build_hankel(u_series, order);
  if (h.cols() < h.rows()) return false;
  Eigen::JacobiSVD<Mat> svd(h);
  const Vec& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= 0.0) return false;
  return sv(sv.size() - 1) > rank_tolerance * sv(0);
}

/// Mosaic variant: the collective excitation condition over all segments.
inline bool check_persistent_excitation(const TrajectoryDataset& data, long order,
                                        double rank_tolerance = 1e-9) {
  if (order < 1) throw std::invalid_argument("check_persistent_excitation: order must be >= 1");
  const long m = data.input_dim();
  long q = 0;
  for (long s = 0; s < data.segment_count(); ++s) {
    if (data.segment_length(s) < order) return false;
    q += data.segment_length(s) - order + 1;
  }
  Mat h(m * order, q);
  long col = 0;
  for (long s = 0; s < data.segment_count(); ++s) {
    const Mat hs = build_hankel(data.u.middleRows(data.segment_begin(s), data.segment_length(s)),
                                order);
    h.middleCols(col, hs.cols()) = hs;
    col += hs.cols();
  }
  if (h.cols() < h.rows()) return false;
  Eigen::JacobiSVD<Mat> svd(h);
  const Vec& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= 0.0) return false;
  return sv(sv.size() - 1) > rank_tolerance * sv(0);
}

}  // namespace deepc
