// Copyright 2026 The relsdqn Authors.
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

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <zlib.h>

#include "rels/env.hpp"
#include "rels/errors.hpp"
#include "rels/rng.hpp"

namespace rels {

// Weights of the element-wise Q-network (no biases):
//   mu_e   = relu(theta2 relu(theta1 x_e))
//   pooled = relu(theta3 mean_u mu_u)
//   Q_e    = theta4 . [pooled, mu_e]
struct QParams {
  Eigen::MatrixXd theta1;  // m x 5
  Eigen::MatrixXd theta2;  // m x m
  Eigen::MatrixXd theta3;  // m x m
  Eigen::VectorXd theta4;  // 2m; head multiplies pooled, tail multiplies mu_e

  static QParams zeros(std::size_t m) {
    const auto w = static_cast<Eigen::Index>(m);
    return {Eigen::MatrixXd::Zero(w, kFeatureDim), Eigen::MatrixXd::Zero(w, w),
            Eigen::MatrixXd::Zero(w, w), Eigen::VectorXd::Zero(2 * w)};
  }

  std::size_t width() const noexcept { return static_cast<std::size_t>(theta1.rows()); }

  std::size_t parameter_count() const noexcept {
    return static_cast<std::size_t>(theta1.size() + theta2.size() + theta3.size() +
                                    theta4.size());
  }

  bool all_finite() const {
    return theta1.allFinite() && theta2.allFinite() && theta3.allFinite() &&
           theta4.allFinite();
  }

  bool same_shape(const QParams& o) const {
    return theta1.rows() == o.theta1.rows() && theta1.cols() == o.theta1.cols() &&
           theta2.rows() == o.theta2.rows() && theta2.cols() == o.theta2.cols() &&
           theta3.rows() == o.theta3.rows() && theta3.cols() == o.theta3.cols() &&
           theta4.size() == o.theta4.size();
  }

  // Mutable views of the four blocks as flat column-major arrays.
  std::array<Eigen::Map<Eigen::VectorXd>, 4> blocks() {
    return {Eigen::Map<Eigen::VectorXd>(theta1.data(), theta1.size()),
            Eigen::Map<Eigen::VectorXd>(theta2.data(), theta2.size()),
            Eigen::Map<Eigen::VectorXd>(theta3.data(), theta3.size()),
            Eigen::Map<Eigen::VectorXd>(theta4.data(), theta4.size())};
  }

  friend bool operator==(const QParams& a, const QParams& b) {
    return a.same_shape(b) && a.theta1 == b.theta1 && a.theta2 == b.theta2 &&
           a.theta3 == b.theta3 && a.theta4 == b.theta4;
  }
};

using Gradients = QParams;

// Hidden width m. 32 matches 64 in solution quality on 40-node training and
// halves inference cost.
inline constexpr std::size_t kDefaultWidth = 32;

// Glorot-uniform: U(-l, l), l = sqrt(6 / (fan_in + fan_out)). theta4 is a
// 2m -> 1 readout.
inline QParams init_params(std::size_t m, std::uint64_t seed) {
  if (m == 0) throw ValidationError("init_params: width must be >= 1");
  QParams p = QParams::zeros(m);
  Rng rng(seed);
  const auto fill = [&](auto& mat, double fan_in, double fan_out) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (Eigen::Index r = 0; r < mat.rows(); ++r) {
      for (Eigen::Index c = 0; c < mat.cols(); ++c) {
        mat(r, c) = rng.uniform(-limit, limit);
      }
    }
  };
  const double w = static_cast<double>(m);
  fill(p.theta1, kFeatureDim, w);
  fill(p.theta2, w, w);
  fill(p.theta3, w, w);
  fill(p.theta4, 2.0 * w, 1.0);
  return p;
}

namespace detail {

inline Eigen::MatrixXd relu(const Eigen::MatrixXd& z) { return z.cwiseMax(0.0); }

inline void check_features(const QParams& p, const FeatureMatrix& x) {
  if (x.rows() == 0) throw ValidationError("forward: empty feature matrix");
  if (p.theta1.cols() != kFeatureDim || p.theta2.rows() != p.theta1.rows() ||
      p.theta3.rows() != p.theta1.rows() || p.theta4.size() != 2 * p.theta1.rows()) {
    throw ValidationError("forward: inconsistent parameter shapes");
  }
}

// Distinct feature rows in lexicographic order, with multiplicities and the
// group of every input row. Depends only on the multiset of rows.
struct RowGroups {
  FeatureMatrix unique;
  Eigen::VectorXd counts;
  std::vector<Eigen::Index> group;
};

inline RowGroups group_rows(const FeatureMatrix& x) {
  const auto less = [&](Eigen::Index a, Eigen::Index b) {
    for (int c = 0; c < kFeatureDim; ++c) {
      if (x(a, c) != x(b, c)) return x(a, c) < x(b, c);
    }
    return false;
  };
  std::vector<Eigen::Index> order(static_cast<std::size_t>(x.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), less);
  RowGroups g;
  g.group.resize(order.size());
  std::vector<Eigen::Index> firsts;
  std::vector<double> counts;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i == 0 || less(order[i - 1], order[i])) {
      firsts.push_back(order[i]);
      counts.push_back(0.0);
    }
    counts.back() += 1.0;
    g.group[static_cast<std::size_t>(order[i])] = static_cast<Eigen::Index>(firsts.size() - 1);
  }
  g.unique = x(firsts, Eigen::all);
  g.counts = Eigen::Map<const Eigen::VectorXd>(counts.data(), static_cast<Eigen::Index>(counts.size()));
  return g;
}

}  // namespace detail

// Evaluated once per distinct feature row in canonical order, so relabelling
// the ground set permutes the output bit for bit and equal rows score equally.
inline Eigen::VectorXd forward(const QParams& p, const FeatureMatrix& x) {
  detail::check_features(p, x);
  const Eigen::Index m = p.theta1.rows();
  const detail::RowGroups g = detail::group_rows(x);
  const Eigen::MatrixXd h1 = (g.unique * p.theta1.transpose()).cwiseMax(0.0);
  const Eigen::MatrixXd h2 = (h1 * p.theta2.transpose()).cwiseMax(0.0);
  const Eigen::VectorXd mean = (h2.transpose() * g.counts) / static_cast<double>(x.rows());
  const Eigen::VectorXd pooled = (p.theta3 * mean).cwiseMax(0.0);
  const double shared = p.theta4.head(m).dot(pooled);
  const Eigen::VectorXd qs = (h2 * p.theta4.tail(m)).array() + shared;
  Eigen::VectorXd q(x.rows());
  for (std::size_t i = 0; i < g.group.size(); ++i) q[static_cast<Eigen::Index>(i)] = qs[g.group[i]];
  return q;
}

// Highest entry, lowest index on ties.
inline Node argmax_lowest(const Eigen::VectorXd& q) {
  Node best = 0;
  for (Eigen::Index i = 1; i < q.size(); ++i) {
    if (q[i] > q[best]) best = static_cast<Node>(i);
  }
  return best;
}

struct TrainingSample {
  const FeatureMatrix* features = nullptr;
  std::size_t action = 0;
  double target = 0.0;
};

struct LossAndGrad {
  double loss = 0.0;
  Gradients grad;
};

// Mean squared error of Q_action against target over the batch, with the
// exact gradient. All samples are stacked so each layer is one matrix product.
inline LossAndGrad loss_and_grad(const QParams& p, std::span<const TrainingSample> batch) {
  if (batch.empty()) throw ValidationError("loss_and_grad: empty batch");
  const Eigen::Index m = p.theta1.rows();
  Eigen::Index rows = 0;
  for (const auto& s : batch) {
    detail::check_features(p, *s.features);
    if (s.action >= static_cast<std::size_t>(s.features->rows())) {
      throw std::out_of_range("loss_and_grad: action out of range");
    }
    if (!std::isfinite(s.target)) throw ValidationError("loss_and_grad: non-finite target");
    rows += s.features->rows();
  }

  Eigen::MatrixXd x(rows, kFeatureDim);
  {
    Eigen::Index offset = 0;
    for (const auto& s : batch) {
      x.middleRows(offset, s.features->rows()) = *s.features;
      offset += s.features->rows();
    }
  }
  const Eigen::MatrixXd z1 = x * p.theta1.transpose();
  const Eigen::MatrixXd h1 = z1.cwiseMax(0.0);
  const Eigen::MatrixXd z2 = h1 * p.theta2.transpose();
  const Eigen::MatrixXd h2 = z2.cwiseMax(0.0);

  LossAndGrad out{0.0, Gradients::zeros(static_cast<std::size_t>(m))};
  Gradients& g = out.grad;
  Eigen::MatrixXd d_h2 = Eigen::MatrixXd::Zero(rows, m);
  const auto head = p.theta4.head(m);
  const auto tail = p.theta4.tail(m);
  const double scale = 2.0 / static_cast<double>(batch.size());

  Eigen::Index offset = 0;
  for (const auto& s : batch) {
    const Eigen::Index n = s.features->rows();
    const auto block = h2.middleRows(offset, n);
    const Eigen::VectorXd mean = block.colwise().mean().transpose();
    const Eigen::VectorXd z3 = p.theta3 * mean;
    const Eigen::VectorXd pooled = z3.cwiseMax(0.0);
    const Eigen::Index row = offset + static_cast<Eigen::Index>(s.action);
    const double q = head.dot(pooled) + tail.dot(h2.row(row));
    const double residual = q - s.target;
    out.loss += residual * residual;

    const double dq = scale * residual;
    g.theta4.head(m) += dq * pooled;
    g.theta4.tail(m) += dq * h2.row(row).transpose();
    const Eigen::VectorXd d_z3 =
        (dq * head.array() * (z3.array() > 0.0).cast<double>()).matrix();
    g.theta3.noalias() += d_z3 * mean.transpose();
    const Eigen::RowVectorXd d_mean =
        (p.theta3.transpose() * d_z3).transpose() / static_cast<double>(n);
    d_h2.middleRows(offset, n).rowwise() += d_mean;
    d_h2.row(row) += dq * tail.transpose();
    offset += n;
  }
  out.loss /= static_cast<double>(batch.size());

  const Eigen::MatrixXd d_z2 = d_h2.cwiseProduct((z2.array() > 0.0).cast<double>().matrix());
  g.theta2.noalias() = d_z2.transpose() * h1;
  const Eigen::MatrixXd d_z1 =
      (d_z2 * p.theta2).cwiseProduct((z1.array() > 0.0).cast<double>().matrix());
  g.theta1.noalias() = d_z1.transpose() * x;
  return out;
}

inline double global_norm(QParams& g) {
  double sq = 0.0;
  for (auto& b : g.blocks()) sq += b.squaredNorm();
  return std::sqrt(sq);
}

// Rescales g in place so its global L2 norm is at most max_norm. Returns the
// norm before clipping.
inline double clip_global_norm(Gradients& g, double max_norm) {
  const double norm = global_norm(g);
  if (norm > max_norm && norm > 0.0) {
    const double f = max_norm / norm;
    for (auto& b : g.blocks()) b *= f;
  }
  return norm;
}

struct AdamState {
  QParams first;
  QParams second;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_params(const QParams& p) {
    return {QParams::zeros(p.width()), QParams::zeros(p.width())};
  }
};

// Global-norm clipping followed by a bias-corrected Adam update.
inline double adam_step(QParams& p, Gradients g, AdamState& s, double lr,
                        double max_norm = 1.0) {
  if (!p.same_shape(g) || !p.same_shape(s.first)) {
    throw ValidationError("adam_step: shape mismatch");
  }
  const double norm = clip_global_norm(g, max_norm);
  ++s.step;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  auto pb = p.blocks();
  auto gb = g.blocks();
  auto mb = s.first.blocks();
  auto vb = s.second.blocks();
  for (std::size_t i = 0; i < pb.size(); ++i) {
    mb[i] = s.beta1 * mb[i] + (1.0 - s.beta1) * gb[i];
    vb[i] = s.beta2 * vb[i] + (1.0 - s.beta2) * gb[i].cwiseAbs2();
    pb[i].array() -=
        lr * (mb[i].array() / c1) / ((vb[i].array() / c2).sqrt() + s.epsilon);
  }
  return norm;
}

// Checkpoint layout, little-endian:
//   "RELSDQN1" | u32 version | u32 m | u32 feature_dim |
//   theta1, theta2, theta3, theta4 as row-major f64 | u32 CRC32
// The CRC covers every byte between the magic and the CRC itself.
inline constexpr char kCheckpointMagic[8] = {'R', 'E', 'L', 'S', 'D', 'Q', 'N', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::size_t kCheckpointHeaderBytes = 8 + 3 * 4;

inline std::size_t checkpoint_size(std::size_t m) {
  return kCheckpointHeaderBytes + 8 * (m * kFeatureDim + 2 * m * m + 2 * m) + 4;
}

namespace detail {

inline void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& buf, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

inline double get_f64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

inline std::uint32_t crc32_of(std::string_view bytes) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()),
              static_cast<uInt>(bytes.size())));
}

template <typename M>
void put_matrix(std::string& buf, const M& mat) {
  for (Eigen::Index r = 0; r < mat.rows(); ++r) {
    for (Eigen::Index c = 0; c < mat.cols(); ++c) put_f64(buf, mat(r, c));
  }
}

template <typename M>
void get_matrix(const unsigned char*& p, M& mat) {
  for (Eigen::Index r = 0; r < mat.rows(); ++r) {
    for (Eigen::Index c = 0; c < mat.cols(); ++c) {
      mat(r, c) = get_f64(p);
      p += 8;
    }
  }
}

}  // namespace detail

inline std::string serialize_params(const QParams& p) {
  std::string buf(kCheckpointMagic, sizeof kCheckpointMagic);
  detail::put_u32(buf, kCheckpointVersion);
  detail::put_u32(buf, static_cast<std::uint32_t>(p.width()));
  detail::put_u32(buf, kFeatureDim);
  detail::put_matrix(buf, p.theta1);
  detail::put_matrix(buf, p.theta2);
  detail::put_matrix(buf, p.theta3);
  detail::put_matrix(buf, p.theta4);
  const auto crc = detail::crc32_of(std::string_view(buf).substr(sizeof kCheckpointMagic));
  detail::put_u32(buf, crc);
  return buf;
}

inline QParams deserialize_params(std::string_view bytes) {
  if (bytes.size() < kCheckpointHeaderBytes + 4) {
    throw FormatError("checkpoint: truncated header");
  }
  if (std::memcmp(bytes.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0) {
    throw FormatError("checkpoint: bad magic (not a RELSDQN1 file)");
  }
  const auto* base = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t version = detail::get_u32(base + 8);
  const std::uint32_t m = detail::get_u32(base + 12);
  const std::uint32_t dim = detail::get_u32(base + 16);
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  if (dim != kFeatureDim) {
    throw FormatError("checkpoint: feature dimension " + std::to_string(dim) +
                      " does not match " + std::to_string(kFeatureDim));
  }
  if (m == 0 || m > 65536) throw FormatError("checkpoint: implausible width");
  if (bytes.size() != checkpoint_size(m)) {
    throw FormatError("checkpoint: expected " + std::to_string(checkpoint_size(m)) +
                      " bytes, found " + std::to_string(bytes.size()));
  }
  const std::size_t payload = bytes.size() - 4 - sizeof kCheckpointMagic;
  const auto crc = detail::crc32_of(bytes.substr(sizeof kCheckpointMagic, payload));
  if (crc != detail::get_u32(base + bytes.size() - 4)) {
    throw FormatError("checkpoint: CRC mismatch");
  }
  QParams p = QParams::zeros(m);
  const unsigned char* cursor = base + kCheckpointHeaderBytes;
  detail::get_matrix(cursor, p.theta1);
  detail::get_matrix(cursor, p.theta2);
  detail::get_matrix(cursor, p.theta3);
  detail::get_matrix(cursor, p.theta4);
  return p;
}

inline void save_params(const QParams& p, const std::string& path) {
  const std::string bytes = serialize_params(p);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for checkpoint '" + path + "'");
}

inline QParams load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_params(ss.str());
}

}  // namespace rels
