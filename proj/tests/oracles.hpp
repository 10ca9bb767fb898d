#pragma once

// Independent reference implementations used by the tests. Everything here
// is written with plain loops over std::vector so it shares no code path
// with the library under test.

#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace oracle {

using Mat = std::vector<std::vector<double>>;

inline Mat random_matrix(std::size_t r, std::size_t c, std::mt19937_64& g, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Mat m(r, std::vector<double>(c));
  for (auto& row : m)
    for (auto& v : row) v = u(g);
  return m;
}

inline Mat matmul(const Mat& a, const Mat& b) {
  const std::size_t m = a.size(), k = b.size(), n = b[0].size();
  Mat out(m, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0;
      for (std::size_t p = 0; p < k; ++p) s += a[i][p] * b[p][j];
      out[i][j] = s;
    }
  return out;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// One LSTM step with packed [i, f, g, o] rows: W is 4H x in, U is 4H x H.
inline void lstm_step(const std::vector<double>& x, std::vector<double>& h, std::vector<double>& c, const Mat& W,
                      const Mat& U, const std::vector<double>& b) {
  const std::size_t H = h.size();
  std::vector<double> z(4 * H);
  for (std::size_t r = 0; r < 4 * H; ++r) {
    double s = b[r];
    for (std::size_t j = 0; j < x.size(); ++j) s += W[r][j] * x[j];
    for (std::size_t j = 0; j < H; ++j) s += U[r][j] * h[j];
    z[r] = s;
  }
  std::vector<double> hn(H), cn(H);
  for (std::size_t j = 0; j < H; ++j) {
    const double i = sigmoid(z[j]);
    const double f = sigmoid(z[H + j]);
    const double g = std::tanh(z[2 * H + j]);
    const double o = sigmoid(z[3 * H + j]);
    cn[j] = f * c[j] + i * g;
    hn[j] = o * std::tanh(cn[j]);
  }
  h = hn;
  c = cn;
}

inline double mse(const Mat& s, const Mat& t) {
  double sum = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s[i].size(); ++j, ++n) sum += (s[i][j] - t[i][j]) * (s[i][j] - t[i][j]);
  return sum / static_cast<double>(n);
}

inline double cross_entropy(const Mat& p, const std::vector<std::size_t>& labels) {
  double sum = 0;
  for (std::size_t i = 0; i < p.size(); ++i) sum -= std::log(std::max(p[i][labels[i]], 1e-12));
  return sum / static_cast<double>(p.size());
}

/// Dense layer y = act(W x + b) with act in {relu, sigmoid, none}.
inline std::vector<double> dense(const std::vector<double>& x, const Mat& W, const std::vector<double>& b, char act) {
  std::vector<double> y(W.size());
  for (std::size_t r = 0; r < W.size(); ++r) {
    double s = b[r];
    for (std::size_t j = 0; j < x.size(); ++j) s += W[r][j] * x[j];
    if (act == 'r') s = s > 0 ? s : 0;
    if (act == 's') s = sigmoid(s);
    y[r] = s;
  }
  return y;
}

/// Scalar Adam with bias correction and eps added to sqrt(v_hat).
struct ScalarAdam {
  double lr, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double m = 0, v = 0;
  int t = 0;
  double step(double w, double g) {
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    return w - lr * mh / (std::sqrt(vh) + eps);
  }
};

struct GradCheck {
  std::size_t total = 0;
  std::size_t checked = 0;  // total minus coordinates whose probe crossed a ReLU kink
  std::size_t passed = 0;
  std::size_t raw_passed = 0;  // over all coordinates, kinks included
  double worst = 0;
  double pass_fraction() const { return checked ? static_cast<double>(passed) / static_cast<double>(checked) : 1.0; }
  double raw_pass_fraction() const { return total ? static_cast<double>(raw_passed) / static_cast<double>(total) : 1.0; }
};

/// Loss at the current parameters plus the on/off pattern of every ReLU unit.
struct Probe {
  double loss = 0;
  std::vector<bool> relu_on;
};

/// Central differences over every coordinate of `params`. A coordinate passes
/// when |a - n| / max(|a|, |n|, floor) < rel_tol. When the +h or -h probe
/// switches a ReLU unit relative to the unperturbed pattern the loss is not
/// differentiable across the interval and the coordinate is left out of
/// `checked`.
inline GradCheck finite_difference(std::vector<std::span<double>> params, std::vector<std::span<const double>> analytic,
                                   const std::function<Probe()>& probe, double h = 1e-3, double rel_tol = 1e-3,
                                   double floor = 1e-6) {
  GradCheck out;
  const auto base = probe().relu_on;
  for (std::size_t t = 0; t < params.size(); ++t)
    for (std::size_t i = 0; i < params[t].size(); ++i) {
      double& w = params[t][i];
      const double w0 = w;
      w = w0 + h;
      const Probe up = probe();
      w = w0 - h;
      const Probe down = probe();
      w = w0;
      const double numeric = (up.loss - down.loss) / (2 * h);
      const double a = analytic[t][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      const double rel = std::abs(a - numeric) / denom;
      const bool ok = rel < rel_tol;
      ++out.total;
      out.raw_passed += ok ? 1 : 0;
      if (up.relu_on != base || down.relu_on != base) continue;
      ++out.checked;
      out.passed += ok ? 1 : 0;
      out.worst = std::max(out.worst, rel);
    }
  return out;
}

}  // namespace oracle
