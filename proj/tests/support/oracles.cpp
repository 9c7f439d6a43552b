#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oracle {

std::vector<double> conv2d(const std::vector<double>& in, int h, int w, int cin, const std::vector<double>& k,
                           int kh, int kw, int cout, const std::vector<double>& bias, int stride) {
  const int oh = (h - kh) / stride + 1, ow = (w - kw) / stride + 1;
  std::vector<double> out(static_cast<std::size_t>(oh * ow * cout));
  for (int oy = 0; oy < oh; ++oy)
    for (int ox = 0; ox < ow; ++ox)
      for (int co = 0; co < cout; ++co) {
        long double acc = bias[co];
        for (int ky = 0; ky < kh; ++ky)
          for (int kx = 0; kx < kw; ++kx)
            for (int ci = 0; ci < cin; ++ci) {
              const int iy = oy * stride + ky, ix = ox * stride + kx;
              acc += static_cast<long double>(in[(iy * w + ix) * cin + ci]) *
                     k[((ky * kw + kx) * cin + ci) * cout + co];
            }
        out[(oy * ow + ox) * cout + co] = static_cast<double>(acc);
      }
  return out;
}

std::vector<double> maxpool(const std::vector<double>& in, int h, int w, int c, int window) {
  const int oh = h / window, ow = w / window;
  std::vector<double> out(static_cast<std::size_t>(oh * ow * c));
  for (int oy = 0; oy < oh; ++oy)
    for (int ox = 0; ox < ow; ++ox)
      for (int ch = 0; ch < c; ++ch) {
        double best = -INFINITY;
        for (int dy = 0; dy < window; ++dy)
          for (int dx = 0; dx < window; ++dx)
            best = std::max(best, in[((oy * window + dy) * w + ox * window + dx) * c + ch]);
        out[(oy * ow + ox) * c + ch] = best;
      }
  return out;
}

std::vector<double> dense(const std::vector<double>& in, const std::vector<double>& weights,
                          const std::vector<double>& bias) {
  const std::size_t m = bias.size(), n = in.size();
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    long double acc = bias[i];
    for (std::size_t j = 0; j < n; ++j) acc += static_cast<long double>(weights[i * n + j]) * in[j];
    out[i] = static_cast<double>(acc);
  }
  return out;
}

long double sigmoid(long double z) { return 1.0L / (1.0L + std::exp(-z)); }

Box min_max_box(const std::vector<owl::Point>& points) {
  Box b{points.at(0).x, points[0].y, points[0].x, points[0].y};
  for (const auto& p : points) {
    if (p.x < b.x0) b.x0 = p.x;
    if (p.y < b.y0) b.y0 = p.y;
    if (p.x > b.x1) b.x1 = p.x;
    if (p.y > b.y1) b.y1 = p.y;
  }
  return b;
}

double bilinear(const std::vector<double>& img, int h, int w, int c, int out_h, int out_w, int oy, int ox, int ch) {
  const double sy = oy * (h - 1.0) / (out_h - 1.0);
  const double sx = ox * (w - 1.0) / (out_w - 1.0);
  const int y0 = static_cast<int>(std::floor(sy)), x0 = static_cast<int>(std::floor(sx));
  const int y1 = std::min(y0 + 1, h - 1), x1 = std::min(x0 + 1, w - 1);
  const double fy = sy - y0, fx = sx - x0;
  auto v = [&](int y, int x) { return img[(y * w + x) * c + ch]; };
  return (1 - fy) * ((1 - fx) * v(y0, x0) + fx * v(y0, x1)) + fy * ((1 - fx) * v(y1, x0) + fx * v(y1, x1));
}

double nearest_centroid_accuracy(const std::vector<std::vector<double>>& train_x, const std::vector<int>& train_y,
                                 const std::vector<std::vector<double>>& test_x, const std::vector<int>& test_y,
                                 int classes) {
  const std::size_t d = train_x.at(0).size();
  // Standardise features with the training statistics so no single one dominates.
  std::vector<double> mean(d, 0.0), sd(d, 0.0);
  for (const auto& x : train_x)
    for (std::size_t j = 0; j < d; ++j) mean[j] += x[j] / train_x.size();
  for (const auto& x : train_x)
    for (std::size_t j = 0; j < d; ++j) sd[j] += (x[j] - mean[j]) * (x[j] - mean[j]) / train_x.size();
  for (auto& s : sd) s = std::sqrt(s) + 1e-9;

  std::vector<std::vector<double>> centroid(classes, std::vector<double>(d, 0.0));
  std::vector<int> count(classes, 0);
  for (std::size_t i = 0; i < train_x.size(); ++i) {
    ++count[train_y[i]];
    for (std::size_t j = 0; j < d; ++j) centroid[train_y[i]][j] += (train_x[i][j] - mean[j]) / sd[j];
  }
  for (int c = 0; c < classes; ++c)
    for (auto& v : centroid[c]) v /= std::max(1, count[c]);

  int correct = 0;
  for (std::size_t i = 0; i < test_x.size(); ++i) {
    int best = -1;
    double best_d = INFINITY;
    for (int c = 0; c < classes; ++c) {
      if (!count[c]) continue;
      double dist = 0;
      for (std::size_t j = 0; j < d; ++j) {
        const double z = (test_x[i][j] - mean[j]) / sd[j] - centroid[c][j];
        dist += z * z;
      }
      if (dist < best_d) best_d = dist, best = c;
    }
    correct += best == test_y[i];
  }
  return static_cast<double>(correct) / static_cast<double>(test_x.size());
}

std::vector<double> pixel_features(const owl::Tensor& crop) {
  const int n = 64;
  double mean[3] = {0, 0, 0}, sq[3] = {0, 0, 0}, centre[3] = {0, 0, 0}, border[3] = {0, 0, 0};
  int nc = 0, nb = 0;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const bool in_centre = std::abs(y - 31.5) < 16 && std::abs(x - 31.5) < 16;
      for (int c = 0; c < 3; ++c) {
        const double v = crop.at(y, x, c);
        mean[c] += v, sq[c] += v * v;
        (in_centre ? centre[c] : border[c]) += v;
      }
      (in_centre ? nc : nb) += 1;
    }
  std::vector<double> f;
  for (int c = 0; c < 3; ++c) {
    const double m = mean[c] / (n * n);
    f.push_back(m);
    f.push_back(std::sqrt(std::max(0.0, sq[c] / (n * n) - m * m)));
    f.push_back(centre[c] / nc - border[c] / nb);
  }
  // Row and column profiles of saturation, 8 bands each.
  for (int axis = 0; axis < 2; ++axis)
    for (int band = 0; band < 8; ++band) {
      double acc = 0;
      for (int a = band * 8; a < band * 8 + 8; ++a)
        for (int b = 0; b < n; ++b) {
          const int y = axis ? b : a, x = axis ? a : b;
          const double r = crop.at(y, x, 0), g = crop.at(y, x, 1), bl = crop.at(y, x, 2);
          acc += std::max({r, g, bl}) - std::min({r, g, bl});
        }
      f.push_back(acc / (8 * n));
    }
  return f;
}

namespace {

std::vector<double> posteriors(const std::vector<double>& w, const std::vector<double>& x, int k) {
  const std::size_t d = x.size() + 1;
  std::vector<double> z(k);
  for (int c = 0; c < k; ++c) {
    double s = w[c * d + x.size()];
    for (std::size_t j = 0; j < x.size(); ++j) s += w[c * d + j] * x[j];
    z[c] = s;
  }
  const double m = *std::max_element(z.begin(), z.end());
  double total = 0;
  for (auto& v : z) total += (v = std::exp(v - m));
  for (auto& v : z) v /= total;
  return z;
}

// Solves A x = b in place by Gaussian elimination with partial pivoting.
std::vector<double> solve(std::vector<double> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
    if (std::abs(a[piv * n + col]) < 1e-300) throw std::runtime_error("singular Hessian");
    for (std::size_t j = 0; j < n; ++j) std::swap(a[col * n + j], a[piv * n + j]);
    std::swap(b[col], b[piv]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] / a[col * n + col];
      for (std::size_t j = col; j < n; ++j) a[r * n + j] -= f * a[col * n + j];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a[i * n + j] * x[j];
    x[i] = s / a[i * n + i];
  }
  return x;
}

}  // namespace

double logreg_objective(const std::vector<double>& weights, const std::vector<std::vector<double>>& x,
                        const std::vector<int>& y, int classes, double lambda) {
  double nll = 0;
  for (std::size_t i = 0; i < x.size(); ++i) nll -= std::log(std::max(1e-300, posteriors(weights, x[i], classes)[y[i]]));
  double reg = 0;
  for (double v : weights) reg += v * v;
  return nll / static_cast<double>(x.size()) + 0.5 * lambda * reg;
}

std::pair<std::vector<double>, double> newton_logreg(const std::vector<std::vector<double>>& x,
                                                     const std::vector<int>& y, int classes, double lambda,
                                                     int iterations) {
  const std::size_t d = x.at(0).size() + 1, p = classes * d;
  const double inv_n = 1.0 / static_cast<double>(x.size());
  std::vector<double> w(p, 0.0);
  for (int it = 0; it < iterations; ++it) {
    std::vector<double> g(p, 0.0), hess(p * p, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      std::vector<double> xi = x[i];
      xi.push_back(1.0);
      const auto pr = posteriors(w, x[i], classes);
      for (int a = 0; a < classes; ++a) {
        const double ra = pr[a] - (y[i] == a ? 1.0 : 0.0);
        for (std::size_t j = 0; j < d; ++j) g[a * d + j] += ra * xi[j] * inv_n;
        for (int b = 0; b < classes; ++b) {
          const double s = pr[a] * ((a == b ? 1.0 : 0.0) - pr[b]) * inv_n;
          for (std::size_t j = 0; j < d; ++j)
            for (std::size_t l = 0; l < d; ++l) hess[(a * d + j) * p + b * d + l] += s * xi[j] * xi[l];
        }
      }
    }
    for (std::size_t j = 0; j < p; ++j) {
      g[j] += lambda * w[j];
      hess[j * p + j] += lambda;
    }
    const auto step = solve(hess, g);
    // Damped step: halve until the objective does not increase.
    const double f0 = logreg_objective(w, x, y, classes, lambda);
    double t = 1.0;
    std::vector<double> cand(p);
    for (int k = 0; k < 40; ++k, t *= 0.5) {
      for (std::size_t j = 0; j < p; ++j) cand[j] = w[j] - t * step[j];
      if (logreg_objective(cand, x, y, classes, lambda) <= f0) break;
    }
    w = cand;
  }
  return {w, logreg_objective(w, x, y, classes, lambda)};
}

}  // namespace oracle
