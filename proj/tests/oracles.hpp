// Copyright (c) 2026 The semix Authors. All Rights Reserved.
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

// Independent reference implementations used as test oracles. None of
// these call into the library code they check.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

/// p[y] minus the largest other entry, by explicit scan.
inline double difficulty(const std::vector<double>& p, int y) {
  double best_other = -1e300;
  for (std::size_t j = 0; j < p.size(); ++j)
    if (static_cast<int>(j) != y && p[j] > best_other) best_other = p[j];
  return p[static_cast<std::size_t>(y)] - best_other;
}

struct Partition {
  std::vector<std::size_t> easy, hard;
  double threshold = 0;
};

/// Sort, take the middle (mean of the central pair for even n), ties to easy.
inline Partition median_partition(const std::vector<std::pair<std::size_t, double>>& scores) {
  std::vector<double> d;
  for (const auto& s : scores) d.push_back(s.second);
  std::sort(d.begin(), d.end());
  const std::size_t n = d.size();
  Partition p;
  p.threshold = n % 2 == 1 ? d[n / 2] : 0.5 * (d[n / 2 - 1] + d[n / 2]);
  for (const auto& [id, v] : scores) (v >= p.threshold ? p.easy : p.hard).push_back(id);
  std::sort(p.easy.begin(), p.easy.end());
  std::sort(p.hard.begin(), p.hard.end());
  return p;
}

inline double cosine(const std::vector<double>& u, const std::vector<double>& v) {
  double dot = 0, nu = 0, nv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0 || nv == 0) return 0;
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

/// Exhaustive scan; strict improvement only, candidates visited in id order.
inline std::size_t nearest(std::size_t anchor, std::vector<std::size_t> subset,
                           const std::map<std::size_t, std::vector<double>>& reprs) {
  std::sort(subset.begin(), subset.end());
  std::size_t best = static_cast<std::size_t>(-1);
  double best_sim = -2;
  for (std::size_t c : subset) {
    if (c == anchor) continue;
    const double s = cosine(reprs.at(anchor), reprs.at(c));
    if (s > best_sim) {
      best_sim = s;
      best = c;
    }
  }
  return best;
}

/// lambda ((1 - a) y_i + a r_i) + (1 - lambda) ((1 - a) y_j + a r_j)
inline std::vector<double> mixed_smoothed(const std::vector<double>& yi, const std::vector<double>& ri,
                                          const std::vector<double>& yj, const std::vector<double>& rj, double lambda,
                                          double alpha) {
  std::vector<double> out(yi.size());
  for (std::size_t c = 0; c < yi.size(); ++c)
    out[c] = lambda * ((1 - alpha) * yi[c] + alpha * ri[c]) + (1 - lambda) * ((1 - alpha) * yj[c] + alpha * rj[c]);
  return out;
}

/// E[max(X, 1 - X)] for X ~ Beta(a, a), by quadrature. Substituting
/// x = 1 - u and u = t^(1/a) removes the endpoint singularity:
///   2 / (a B(a, a)) * integral_0^{0.5^a} (1 - t^(1/a))^a dt.
inline double folded_beta_mean(double a) {
  const double log_b = 2 * std::lgamma(a) - std::lgamma(2 * a);
  const double upper = std::pow(0.5, a);
  const int n = 200000;  // composite Simpson
  const double h = upper / n;
  auto f = [&](double t) {
    const double u = std::pow(t, 1.0 / a);
    return (1 - u) * std::pow(1 - u, a - 1);
  };
  double s = f(0) + f(upper);
  for (int k = 1; k < n; ++k) s += f(k * h) * (k % 2 == 1 ? 4 : 2);
  const double integral = s * h / 3;
  return 2.0 * integral / (a * std::exp(log_b));
}

/// Plain-Eigen forward pass of the classifier in double precision.
struct Forward {
  Eigen::RowVectorXd pooled;
  Eigen::RowVectorXd probs;
};

inline Forward classifier(const Eigen::MatrixXd& embedding, const std::vector<Eigen::MatrixXd>& w,
                          const std::vector<Eigen::RowVectorXd>& b, const Eigen::MatrixXd& head_w,
                          const Eigen::RowVectorXd& head_b, const std::vector<int>& ids) {
  std::vector<int> active;
  for (int id : ids)
    if (id != 0) active.push_back(id);
  Eigen::MatrixXd h(active.size(), embedding.cols());
  for (std::size_t t = 0; t < active.size(); ++t) h.row(static_cast<Eigen::Index>(t)) = embedding.row(active[t]);
  for (std::size_t l = 0; l < w.size(); ++l) {
    Eigen::MatrixXd pre = h * w[l];
    pre.rowwise() += b[l];
    h = h + pre.array().tanh().matrix();
  }
  Forward f;
  f.pooled = h.colwise().mean();
  Eigen::RowVectorXd logits = f.pooled * head_w + head_b;
  const double m = logits.maxCoeff();
  Eigen::RowVectorXd e = (logits.array() - m).exp().matrix();
  f.probs = e / e.sum();
  return f;
}

/// One AdamW step on a scalar, written out term by term.
inline double adamw_scalar(double theta, double g, double m0, double v0, int t, double lr, double wd) {
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const double m = b1 * m0 + (1 - b1) * g;
  const double v = b2 * v0 + (1 - b2) * g * g;
  const double mhat = m / (1 - std::pow(b1, t));
  const double vhat = v / (1 - std::pow(b2, t));
  theta = theta - lr * wd * theta;
  return theta - lr * mhat / (std::sqrt(vhat) + eps);
}

}  // namespace oracle
