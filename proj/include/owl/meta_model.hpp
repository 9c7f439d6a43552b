#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace owl {

// Multinomial logistic regression over the concatenated member scores.
// Weights are K x (N*K + 1), row-major, the last column being the bias.
struct MetaModel {
  std::size_t classes = 0;  // K
  std::size_t members = 0;  // N
  std::vector<double> weights;

  // Fit diagnostics; not serialized.
  std::vector<double> loss_history;
  double gradient_norm = 0.0;

  std::size_t feature_width() const { return members * classes + 1; }

  // Softmax posteriors for one feature vector of length N*K (bias implied).
  std::vector<double> posteriors(std::span<const double> features) const;
};

struct MetaFitOptions {
  double lambda = 1e-4;
  std::size_t max_iterations = 500;
  double tolerance = 1e-6;  // on the gradient norm
};

// Regularised mean negative log-likelihood:
//   (1/n) sum_i -log p(y_i | x_i) + (lambda / 2) ||W||^2
// with the L2 term over every weight including the biases.
double meta_objective(const MetaModel& model, const std::vector<std::vector<double>>& features,
                      const std::vector<std::size_t>& labels, double lambda, std::vector<double>* gradient = nullptr);

// Full-batch gradient descent from zero weights. Each iteration proposes a
// Barzilai-Borwein step and backtracks until the Armijo condition holds, so
// the objective never increases. Every member's block of features is treated
// identically. `class_names` is used for error messages; a class without any
// sample throws ParameterError naming it.
MetaModel fit_meta(const std::vector<std::vector<double>>& features, const std::vector<std::size_t>& labels,
                   std::size_t classes, std::size_t members, const MetaFitOptions& options = {},
                   const std::vector<std::string>& class_names = {});

// Meta-model file layout (little-endian):
//   "OWLR"  u16 version  u32 K  u32 N  f64 weights[K * (N*K + 1)]
inline constexpr std::uint16_t kMetaFormatVersion = 1;

std::vector<std::uint8_t> serialize_meta(const MetaModel& model);
MetaModel deserialize_meta(const std::vector<std::uint8_t>& bytes);
void save_meta(const MetaModel& model, const std::string& path);
MetaModel load_meta(const std::string& path);

}  // namespace owl
