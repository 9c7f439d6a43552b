#include "owl/meta_model.hpp"

#include <algorithm>
#include <cmath>

#include "owl/binary_io.hpp"
#include "owl/error.hpp"

namespace owl {

namespace {

void softmax_in_place(std::vector<double>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  double total = 0;
  for (auto& v : z) total += (v = std::exp(v - m));
  for (auto& v : z) v /= total;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

std::vector<double> MetaModel::posteriors(std::span<const double> features) const {
  const std::size_t d = feature_width();
  if (features.size() + 1 != d) {
    throw DimensionError("meta model expects " + std::to_string(d - 1) + " features, got " +
                         std::to_string(features.size()));
  }
  std::vector<double> z(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    const double* w = &weights[c * d];
    double s = w[d - 1];
    for (std::size_t j = 0; j + 1 < d; ++j) s += w[j] * features[j];
    z[c] = s;
  }
  softmax_in_place(z);
  return z;
}

double meta_objective(const MetaModel& model, const std::vector<std::vector<double>>& features,
                      const std::vector<std::size_t>& labels, double lambda, std::vector<double>* gradient) {
  const std::size_t d = model.feature_width(), k = model.classes;
  if (gradient) gradient->assign(model.weights.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(features.size());
  double nll = 0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto p = model.posteriors(features[i]);
    nll -= std::log(std::max(p[labels[i]], 1e-300));
    if (!gradient) continue;
    for (std::size_t c = 0; c < k; ++c) {
      const double r = (p[c] - (labels[i] == c ? 1.0 : 0.0)) * inv_n;
      double* g = &(*gradient)[c * d];
      for (std::size_t j = 0; j + 1 < d; ++j) g[j] += r * features[i][j];
      g[d - 1] += r;
    }
  }
  double reg = 0;
  for (std::size_t j = 0; j < model.weights.size(); ++j) {
    reg += model.weights[j] * model.weights[j];
    if (gradient) (*gradient)[j] += lambda * model.weights[j];
  }
  return nll * inv_n + 0.5 * lambda * reg;
}

MetaModel fit_meta(const std::vector<std::vector<double>>& features, const std::vector<std::size_t>& labels,
                   std::size_t classes, std::size_t members, const MetaFitOptions& options,
                   const std::vector<std::string>& class_names) {
  if (classes < 1 || members < 1) throw ParameterError("fit_meta: need at least one class and one member");
  if (features.size() != labels.size()) throw DimensionError("fit_meta: feature and label counts differ");
  if (features.empty()) throw ParameterError("fit_meta: empty stacking split");
  if (!(options.lambda >= 0)) throw ParameterError("fit_meta: lambda must be >= 0");
  std::vector<std::size_t> count(classes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= classes) throw ParameterError("fit_meta: label id " + std::to_string(labels[i]) + " out of range");
    if (features[i].size() != members * classes) throw DimensionError("fit_meta: feature width mismatch");
    ++count[labels[i]];
  }
  for (std::size_t c = 0; c < classes; ++c) {
    if (count[c] == 0) {
      const std::string name = c < class_names.size() ? class_names[c] : "#" + std::to_string(c);
      throw ParameterError("fit_meta: class '" + name + "' has no samples in the stacking split");
    }
  }

  MetaModel m;
  m.classes = classes;
  m.members = members;
  m.weights.assign(classes * m.feature_width(), 0.0);

  std::vector<double> g, g_new;
  double f = meta_objective(m, features, labels, options.lambda, &g);
  m.loss_history.push_back(f);
  double step = 1.0;
  std::vector<double> prev_w, prev_g;
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    const double gnorm2 = dot(g, g);
    m.gradient_norm = std::sqrt(gnorm2);
    if (m.gradient_norm < options.tolerance) break;
    if (!prev_w.empty()) {
      // Barzilai-Borwein proposal s's / s'y, kept inside a sane range.
      std::vector<double> s(g.size()), y(g.size());
      for (std::size_t j = 0; j < g.size(); ++j) s[j] = m.weights[j] - prev_w[j], y[j] = g[j] - prev_g[j];
      const double sy = dot(s, y);
      step = sy > 0 ? std::clamp(dot(s, s) / sy, 1e-6, 1e6) : 1.0;
    }
    MetaModel trial = m;
    double f_trial = f;
    bool accepted = false;
    for (int back = 0; back < 60; ++back, step *= 0.5) {
      for (std::size_t j = 0; j < g.size(); ++j) trial.weights[j] = m.weights[j] - step * g[j];
      f_trial = meta_objective(trial, features, labels, options.lambda, &g_new);
      if (f_trial <= f - 1e-4 * step * gnorm2) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;  // no representable decrease left
    prev_w = m.weights;
    prev_g = g;
    m.weights = std::move(trial.weights);
    g = g_new;
    f = f_trial;
    m.loss_history.push_back(f);
  }
  m.gradient_norm = std::sqrt(dot(g, g));
  for (double w : m.weights)
    if (!std::isfinite(w)) throw TrainingError("fit_meta: non-finite weights");
  return m;
}

std::vector<std::uint8_t> serialize_meta(const MetaModel& model) {
  if (model.weights.size() != model.classes * model.feature_width()) {
    throw DimensionError("meta model weight count does not match K x (N*K + 1)");
  }
  ByteWriter w;
  w.magic("OWLR");
  w.u16(kMetaFormatVersion);
  w.u32(static_cast<std::uint32_t>(model.classes));
  w.u32(static_cast<std::uint32_t>(model.members));
  for (double v : model.weights) w.f64(v);
  return w.take();
}

MetaModel deserialize_meta(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes, "meta model");
  r.expect_magic("OWLR");
  if (const auto v = r.u16(); v != kMetaFormatVersion) {
    throw FormatError("meta model: unsupported version " + std::to_string(v));
  }
  MetaModel m;
  m.classes = r.u32();
  m.members = r.u32();
  if (m.classes < 1 || m.members < 1 || m.classes > 4096 || m.members > 4096) {
    throw FormatError("meta model: implausible K or N");
  }
  const std::size_t n = m.classes * m.feature_width();
  if (r.remaining() != n * 8) throw FormatError("meta model: payload size does not match K and N");
  m.weights.resize(n);
  for (auto& v : m.weights) v = r.f64();
  r.expect_end();
  return m;
}

void save_meta(const MetaModel& model, const std::string& path) { write_file_bytes(path, serialize_meta(model)); }

MetaModel load_meta(const std::string& path) { return deserialize_meta(read_file_bytes(path)); }

}  // namespace owl
