#include "dpwfl/losses.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpwfl/csv.hpp"

namespace dpwfl {

namespace {

int row_of(const LossModel& m, int device, int sample) {
  if (device < 0 || device >= m.devices())
    throw std::out_of_range("LossModel: device index out of range");
  if (sample < 0 || sample >= m.samples_per_device())
    throw std::out_of_range("LossModel: sample index out of range");
  return device * m.samples_per_device() + sample;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

Eigen::VectorXd LossModel::sample_gradient(const Eigen::VectorXd& theta, int device,
                                           int sample) const {
  if (theta.size() != dim_) throw std::invalid_argument("LossModel: theta dimension mismatch");
  const int r = row_of(*this, device, sample);
  switch (kind_) {
    case Kind::Quadratic:
      return theta - features_.row(r).transpose();
    case Kind::Logistic: {
      const double y = labels_[r];
      const double z = y * features_.row(r).dot(theta);
      return (-y * sigmoid(-z)) * features_.row(r).transpose();
    }
  }
  throw std::logic_error("LossModel: unknown kind");
}

double LossModel::sample_loss(const Eigen::VectorXd& theta, int device, int sample) const {
  if (theta.size() != dim_) throw std::invalid_argument("LossModel: theta dimension mismatch");
  const int r = row_of(*this, device, sample);
  switch (kind_) {
    case Kind::Quadratic:
      return 0.5 * (theta - features_.row(r).transpose()).squaredNorm();
    case Kind::Logistic: {
      const double z = labels_[r] * features_.row(r).dot(theta);
      // log(1 + exp(-z)) without overflow for large |z|
      return z > 0.0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
    }
  }
  throw std::logic_error("LossModel: unknown kind");
}

Eigen::VectorXd LossModel::device_gradient(const Eigen::VectorXd& theta, int device) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dim_);
  for (int s = 0; s < samples_per_device_; ++s) g += sample_gradient(theta, device, s);
  return g / samples_per_device_;
}

double LossModel::device_loss(const Eigen::VectorXd& theta, int device) const {
  double v = 0.0;
  for (int s = 0; s < samples_per_device_; ++s) v += sample_loss(theta, device, s);
  return v / samples_per_device_;
}

Eigen::VectorXd LossModel::gradient(const Eigen::VectorXd& theta) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dim_);
  for (int i = 0; i < devices_; ++i) g += device_gradient(theta, i);
  return g / devices_;
}

double LossModel::loss(const Eigen::VectorXd& theta) const {
  double v = 0.0;
  for (int i = 0; i < devices_; ++i) v += device_loss(theta, i);
  return v / devices_;
}

void LossModel::refresh_sigma_estimates(const Eigen::VectorXd& at) {
  // Uniform bounds over devices, computed exactly over the finite datasets:
  //   sigma_l^2 >= mean_xi |grad l(theta;xi) - grad f_i(theta)|^2   for all i
  //   sigma_g^2 >= |grad f_i(theta) - grad f(theta)|^2              for all i
  const Eigen::VectorXd global = gradient(at);
  double sl2 = 0.0, sg2 = 0.0;
  for (int i = 0; i < devices_; ++i) {
    const Eigen::VectorXd gi = device_gradient(at, i);
    double within = 0.0;
    for (int s = 0; s < samples_per_device_; ++s)
      within += (sample_gradient(at, i, s) - gi).squaredNorm();
    sl2 = std::max(sl2, within / samples_per_device_);
    sg2 = std::max(sg2, (gi - global).squaredNorm());
  }
  sigma_l_ = std::sqrt(sl2);
  sigma_g_ = std::sqrt(sg2);
}

void LossModel::finalize() {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(dim_);
  refresh_sigma_estimates(zero);
  switch (kind_) {
    case Kind::Quadratic: {
      // f(theta) = 0.5 |theta - abar|^2 + 0.5 mean_xi |a_xi - abar|^2,
      // minimized at the global anchor mean.
      smoothness_ = 1.0;
      const Eigen::RowVectorXd abar = features_.colwise().mean();
      f_star_ = 0.5 * (features_.rowwise() - abar).rowwise().squaredNorm().mean();
      break;
    }
    case Kind::Logistic: {
      smoothness_ = feature_radius_ * feature_radius_ / 4.0;
      // Convex objective: capped full-batch GD at step 1/L lands within
      // ~1e-10 gradient norm for these dataset sizes.
      Eigen::VectorXd theta = zero;
      const double step = smoothness_ > 0.0 ? 1.0 / smoothness_ : 1.0;
      for (int it = 0; it < 50000; ++it) {
        const Eigen::VectorXd g = gradient(theta);
        if (g.norm() < 1e-10) break;
        theta -= step * g;
      }
      f_star_ = loss(theta);
      break;
    }
  }
}

LossModel make_quadratic(int dim, int devices, int samples_per_device,
                         const QuadraticSpread& spread, std::mt19937_64& rng) {
  if (dim < 1) throw std::invalid_argument("make_quadratic: dim must be >= 1");
  if (devices < 1 || samples_per_device < 1)
    throw std::invalid_argument("make_quadratic: devices and samples_per_device must be >= 1");

  LossModel m;
  m.kind_ = LossModel::Kind::Quadratic;
  m.dim_ = dim;
  m.devices_ = devices;
  m.samples_per_device_ = samples_per_device;
  m.features_.resize(devices * samples_per_device, dim);
  m.labels_ = Eigen::VectorXd::Zero(devices * samples_per_device);

  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < devices; ++i) {
    Eigen::RowVectorXd center(dim);
    for (int k = 0; k < dim; ++k) center[k] = spread.device_sigma * normal(rng);
    for (int s = 0; s < samples_per_device; ++s) {
      Eigen::RowVectorXd offset(dim);
      for (int k = 0; k < dim; ++k) offset[k] = spread.sample_sigma * normal(rng);
      if (spread.heavy_tail > 0.0) offset *= std::exp(spread.heavy_tail * std::abs(normal(rng)));
      m.features_.row(i * samples_per_device + s) = center + offset;
    }
  }
  m.finalize();
  return m;
}

LossModel make_logistic(int dim, int devices, int samples_per_device, double feature_radius,
                        std::mt19937_64& rng, double feature_scale) {
  if (dim < 1) throw std::invalid_argument("make_logistic: dim must be >= 1");
  if (devices < 1 || samples_per_device < 1)
    throw std::invalid_argument("make_logistic: devices and samples_per_device must be >= 1");
  if (!(feature_radius > 0.0))
    throw std::invalid_argument("make_logistic: feature_radius must be positive");
  if (feature_scale < 0.0)
    throw std::invalid_argument("make_logistic: feature_scale must be non-negative");

  LossModel m;
  m.kind_ = LossModel::Kind::Logistic;
  m.dim_ = dim;
  m.devices_ = devices;
  m.samples_per_device_ = samples_per_device;
  m.feature_radius_ = feature_radius;
  const int total = devices * samples_per_device;
  m.features_.resize(total, dim);
  m.labels_.resize(total);

  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  // Shared generating model across devices (i.i.d. data).
  Eigen::VectorXd truth(dim);
  for (int k = 0; k < dim; ++k) truth[k] = normal(rng);
  if (truth.norm() > 0.0) truth *= 2.0 / truth.norm();

  for (int r = 0; r < total; ++r) {
    Eigen::RowVectorXd x(dim);
    for (int k = 0; k < dim; ++k) x[k] = feature_scale * normal(rng);
    const double nx = x.norm();
    if (nx > feature_radius) x *= feature_radius / nx;
    m.features_.row(r) = x;
    m.labels_[r] = unif(rng) < sigmoid(x.dot(truth.transpose())) ? 1.0 : -1.0;
  }
  m.finalize();
  return m;
}

void export_dataset_csv(const LossModel& model, std::ostream& out) {
  CsvWriter w(out);
  w.comment("kind = " + std::string(model.kind() == LossModel::Kind::Quadratic ? "quadratic"
                                                                                : "logistic"));
  w.comment("devices = " + std::to_string(model.devices()));
  w.comment("samples_per_device = " + std::to_string(model.samples_per_device()));
  w.comment("dim = " + std::to_string(model.dim()));
  w.comment("feature_radius = " + format_double(model.feature_radius()));

  std::vector<std::string> header = {"device", "label"};
  for (int k = 0; k < model.dim(); ++k) header.push_back("f" + std::to_string(k));
  w.header(header);

  for (int i = 0; i < model.devices(); ++i)
    for (int s = 0; s < model.samples_per_device(); ++s) {
      const int r = i * model.samples_per_device() + s;
      std::vector<std::string> cells = {std::to_string(i), format_double(model.labels()[r])};
      for (int k = 0; k < model.dim(); ++k) cells.push_back(format_double(model.features()(r, k)));
      w.row(cells);
    }
}

LossModel import_dataset_csv(std::istream& in) {
  const CsvTable table = read_csv(in);

  std::string kind;
  int devices = -1, samples = -1, dim = -1;
  double radius = 0.0;
  for (const auto& c : table.comments) {
    const auto eq = c.find('=');
    if (eq == std::string::npos) continue;
    std::string key = c.substr(0, eq), val = c.substr(eq + 1);
    auto trim = [](std::string& s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t") + 1);
    };
    trim(key);
    trim(val);
    if (key == "kind") kind = val;
    else if (key == "devices") devices = std::stoi(val);
    else if (key == "samples_per_device") samples = std::stoi(val);
    else if (key == "dim") dim = std::stoi(val);
    else if (key == "feature_radius") radius = parse_double(val);
  }
  if (kind.empty() || devices < 1 || samples < 1 || dim < 1)
    throw std::invalid_argument("import_dataset_csv: missing or invalid metadata comments");
  if (table.rows.size() != static_cast<std::size_t>(devices) * samples)
    throw std::invalid_argument("import_dataset_csv: row count does not match metadata");

  LossModel m;
  m.kind_ = kind == "quadratic" ? LossModel::Kind::Quadratic : LossModel::Kind::Logistic;
  m.dim_ = dim;
  m.devices_ = devices;
  m.samples_per_device_ = samples;
  m.feature_radius_ = radius;
  m.features_.resize(devices * samples, dim);
  m.labels_.resize(devices * samples);

  const int label_col = table.column("label");
  std::vector<int> fcols(dim);
  for (int k = 0; k < dim; ++k) fcols[k] = table.column("f" + std::to_string(k));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    m.labels_[static_cast<Eigen::Index>(r)] = table.number(r, label_col);
    for (int k = 0; k < dim; ++k)
      m.features_(static_cast<Eigen::Index>(r), k) = table.number(r, fcols[k]);
  }
  m.finalize();
  return m;
}

}  // namespace dpwfl
