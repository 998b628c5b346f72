#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <random>

#include "dpwfl/hyperparams.hpp"

namespace dpwfl {

// A differentiable task over n equally sized per-device datasets, with the
// smoothness / variance / dissimilarity constants the convergence bound
// consumes. Immutable after construction; per-sample gradient evaluation is
// reentrant.
//
// Sample (i, j) lives in row i*samples_per_device + j of features().
class LossModel {
 public:
  enum class Kind { Quadratic, Logistic };

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  int devices() const { return devices_; }
  int samples_per_device() const { return samples_per_device_; }

  double smoothness() const { return smoothness_; }    // L
  double sigma_l() const { return sigma_l_; }          // per-sample variance bound
  double sigma_g() const { return sigma_g_; }          // device dissimilarity bound
  double f_star() const { return f_star_; }            // analytic for Quadratic,
                                                       // capped-GD estimate for Logistic

  Eigen::VectorXd sample_gradient(const Eigen::VectorXd& theta, int device, int sample) const;
  double sample_loss(const Eigen::VectorXd& theta, int device, int sample) const;

  Eigen::VectorXd device_gradient(const Eigen::VectorXd& theta, int device) const;  // grad f_i
  double device_loss(const Eigen::VectorXd& theta, int device) const;               // f_i

  Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const;  // grad f = mean_i grad f_i
  double loss(const Eigen::VectorXd& theta) const;               // f = mean_i f_i

  // Recompute sigma_l / sigma_g exactly over the dataset at the given point.
  // Quadratic gradients are affine in theta, so its values never change;
  // Logistic constants are plug-in values tied to the evaluation point.
  void refresh_sigma_estimates(const Eigen::VectorXd& at);

  const Eigen::MatrixXd& features() const { return features_; }  // anchors for Quadratic
  const Eigen::VectorXd& labels() const { return labels_; }      // +-1 for Logistic, 0 otherwise
  double feature_radius() const { return feature_radius_; }

 private:
  friend LossModel make_quadratic(int, int, int, const struct QuadraticSpread&, std::mt19937_64&);
  friend LossModel make_logistic(int, int, int, double, std::mt19937_64&, double);
  friend LossModel import_dataset_csv(std::istream&);

  LossModel() = default;
  void finalize();  // derive constants from the populated data

  Kind kind_ = Kind::Quadratic;
  int dim_ = 0, devices_ = 0, samples_per_device_ = 0;
  double smoothness_ = 0.0, sigma_l_ = 0.0, sigma_g_ = 0.0, f_star_ = 0.0;
  double feature_radius_ = 0.0;
  Eigen::MatrixXd features_;  // (devices * samples_per_device) x dim
  Eigen::VectorXd labels_;
};

// Anchor layout for the quadratic task: anchor(i,j) = device offset + sample
// offset, offsets Gaussian with the given scales. heavy_tail > 0 multiplies
// each sample offset by exp(heavy_tail * |z|), z ~ N(0,1), to inject
// occasional large sample gradients.
struct QuadraticSpread {
  double device_sigma = 1.0;
  double sample_sigma = 0.5;
  double heavy_tail = 0.0;
};

// Per-sample loss 0.5 * |theta - a|^2. L = 1 exactly; f*, sigma_l, sigma_g in
// closed form from the anchor set.
LossModel make_quadratic(int dim, int devices, int samples_per_device,
                         const QuadraticSpread& spread, std::mt19937_64& rng);

// Binary logistic loss on synthetic Gaussian features capped at norm
// feature_radius R; L = R^2 / 4. sigma_l / sigma_g evaluated over the dataset
// at theta = 0; f* estimated by capped full-batch gradient descent.
// feature_scale = 0 produces the degenerate all-zero-feature dataset.
LossModel make_logistic(int dim, int devices, int samples_per_device, double feature_radius,
                        std::mt19937_64& rng, double feature_scale = 1.0);

// One row per sample: device, label, features; model metadata in '#' comment
// lines so a round trip rebuilds an identical model.
void export_dataset_csv(const LossModel& model, std::ostream& out);
LossModel import_dataset_csv(std::istream& in);

}  // namespace dpwfl
