#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "dpwfl/accountant.hpp"
#include "dpwfl/csv.hpp"
#include "dpwfl/simulator.hpp"
#include "support/oracles.hpp"

using namespace dpwfl;

namespace {

// quadratic model with anchors pinned to exact values via the CSV importer
LossModel anchored_quadratic(const Eigen::MatrixXd& anchors, int devices, int samples) {
  std::ostringstream csv;
  csv << "# kind = quadratic\n# devices = " << devices << "\n# samples_per_device = " << samples
      << "\n# dim = " << anchors.cols() << "\n# feature_radius = 0\n";
  csv << "device,label";
  for (int k = 0; k < anchors.cols(); ++k) csv << ",f" << k;
  csv << "\n";
  for (int i = 0; i < devices; ++i)
    for (int s = 0; s < samples; ++s) {
      csv << i << ",0";
      for (int k = 0; k < anchors.cols(); ++k)
        csv << "," << format_double(anchors(i * samples + s, k));
      csv << "\n";
    }
  std::istringstream in(csv.str());
  return import_dataset_csv(in);
}

ChannelRound unit_channel(const std::vector<int>& active, double gamma, double sigma) {
  ChannelRound round;
  round.devices = active;
  round.gamma = gamma;
  round.noise_sigma = sigma;
  round.gains = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(active.size()));
  round.scalings = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(active.size()), gamma);
  return round;
}

}  // namespace

TEST_CASE("clip matches the formula") {
  Eigen::VectorXd g(2);
  g << 3.0, 4.0;
  const Eigen::VectorXd clipped = clip(g, 2.0);
  CHECK(clipped[0] == doctest::Approx(1.2).epsilon(1e-15));
  CHECK(clipped[1] == doctest::Approx(1.6).epsilon(1e-15));

  Eigen::VectorXd inside(2);
  inside << 1.0, 0.0;
  CHECK((clip(inside, 2.0) == inside));  // untouched, bit for bit

  CHECK(clip(Eigen::VectorXd::Zero(3), 2.0).isZero());

  std::mt19937_64 rng(211);
  std::normal_distribution<double> normal(0.0, 5.0);
  for (int i = 0; i < 200; ++i) {
    Eigen::VectorXd v(4);
    for (int k = 0; k < 4; ++k) v[k] = normal(rng);
    CHECK(clip(v, 2.0).norm() <= 2.0 * (1.0 + 1e-12));
    CHECK((clip(v, 1e9) == v));
  }
}

TEST_CASE("device selection is uniform without replacement") {
  HyperParams params;
  std::mt19937_64 rng(223);

  SUBCASE("p = 1 selects everyone") {
    const auto all = select_devices(rng, params);
    REQUIRE(all.size() == 10);
    for (int i = 0; i < 10; ++i) CHECK(all[static_cast<std::size_t>(i)] == i);
  }

  SUBCASE("n = 1 selects the only device") {
    HyperParams solo = params;
    solo.n = 1;
    CHECK(select_devices(rng, solo) == std::vector<int>{0});
  }

  SUBCASE("inclusion frequency concentrates at p") {
    HyperParams half = params;
    half.p = 0.5;
    const int rounds = 100000;
    std::vector<int> hits(10, 0);
    for (int t = 0; t < rounds; ++t) {
      const auto active = select_devices(rng, half);
      REQUIRE(active.size() == 5);
      for (int id : active) ++hits[static_cast<std::size_t>(id)];
    }
    for (int count : hits) {
      const double freq = static_cast<double>(count) / rounds;
      CHECK(freq > 0.49);
      CHECK(freq < 0.51);
    }
  }
}

TEST_CASE("batch sampling is uniform without replacement") {
  HyperParams params;  // dataset_size = 8
  std::mt19937_64 rng(227);

  SUBCASE("q = 1 returns the whole dataset") {
    const auto batch = sample_batch(rng, params);
    REQUIRE(batch.size() == 8);
    for (int s = 0; s < 8; ++s) CHECK(batch[static_cast<std::size_t>(s)] == s);
  }

  SUBCASE("rounding floors at one sample") {
    HyperParams tiny = params;
    tiny.q = 0.1;  // round(0.8) = 1
    CHECK(sample_batch(rng, tiny).size() == 1);
  }

  SUBCASE("inclusion frequency concentrates at q") {
    HyperParams half = params;
    half.q = 0.5;
    const int rounds = 100000;
    std::vector<int> hits(8, 0);
    for (int t = 0; t < rounds; ++t) {
      const auto batch = sample_batch(rng, half);
      REQUIRE(batch.size() == 4);
      for (int s : batch) ++hits[static_cast<std::size_t>(s)];
    }
    for (int count : hits) {
      const double freq = static_cast<double>(count) / rounds;
      CHECK(freq > 0.49);
      CHECK(freq < 0.51);
    }
  }
}

TEST_CASE("noiseless update agrees with the straight-line reference") {
  std::mt19937_64 rng(229);
  std::normal_distribution<double> normal(0.0, 2.0);
  HyperParams params;
  params.n = 4;
  params.dataset_size = 3;
  params.dim = 5;
  params.sigma = 0.0;
  params.c = 1.5;  // low enough that clipping actually fires

  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd anchors(params.n * params.dataset_size, params.dim);
    for (Eigen::Index i = 0; i < anchors.rows(); ++i)
      for (Eigen::Index j = 0; j < anchors.cols(); ++j) anchors(i, j) = normal(rng);
    const LossModel loss = anchored_quadratic(anchors, params.n, params.dataset_size);

    Eigen::VectorXd theta(params.dim);
    for (int k = 0; k < params.dim; ++k) theta[k] = normal(rng);

    const std::vector<int> active = {0, 1, 2, 3};
    const std::vector<std::vector<int>> batches(active.size(), {0, 1, 2});

    std::mt19937_64 noise_rng(1);
    const auto [next, record] = run_round({theta, 0}, params, loss,
                                          unit_channel(active, 1.0, 0.0), active, batches,
                                          noise_rng);

    std::vector<std::vector<Eigen::VectorXd>> grads;
    for (std::size_t k = 0; k < active.size(); ++k) {
      grads.emplace_back();
      for (int s : batches[k])
        grads.back().push_back(loss.sample_gradient(theta, active[k], s));
    }
    const Eigen::VectorXd expected = oracles::reference_update(
        theta, params.eta, params.p * params.q * params.n, params.c, 1.0, grads,
        Eigen::VectorXd::Zero(params.dim));
    CHECK((next.theta - expected).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("noiseless wide-clip run is exact gradient descent") {
  HyperParams params;
  params.n = 10;
  params.dataset_size = 1;
  params.dim = 2;
  params.sigma = 0.0;
  params.c = 1e9;

  const LossModel loss =
      anchored_quadratic(Eigen::MatrixXd::Zero(params.n, params.dim), params.n, 1);

  TrainOptions options;
  options.rounds = 50;
  options.seed = 5;
  options.fading.kind = FadingSpec::Kind::Constant;
  options.theta0 = Eigen::VectorXd::Zero(params.dim);
  options.theta0[0] = 1.0;

  const auto [trace, ledger] = run_training(params, loss, options);
  double expected = 1.0;
  for (const auto& record : trace.rounds) {
    CHECK(record.loss == doctest::Approx(0.5 * expected * expected).epsilon(1e-10));
    CHECK(record.clipped_count == 0);
    expected *= 0.9;  // theta <- (1 - eta) theta
  }
  CHECK(trace.theta_final[0] == doctest::Approx(std::pow(0.9, 50)).epsilon(1e-10));
  CHECK(trace.theta_final[1] == 0.0);
}

TEST_CASE("a sample gradient at twice the clip norm contributes norm c") {
  HyperParams params;
  params.n = 1;
  params.dataset_size = 1;
  params.dim = 2;
  params.sigma = 0.0;

  Eigen::MatrixXd anchor(1, 2);
  anchor << 2.0 * params.c, 0.0;  // gradient at the origin has norm 2c
  const LossModel loss = anchored_quadratic(anchor, 1, 1);

  std::mt19937_64 noise_rng(2);
  const Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(2);
  const auto [next, record] = run_round({theta0, 0}, params, loss, unit_channel({0}, 1.0, 0.0),
                                        {0}, {{0}}, noise_rng);
  CHECK(record.clipped_count == 1);
  // direction preserved, length eta * c
  CHECK(next.theta[0] == doctest::Approx(params.eta * params.c).epsilon(1e-12));
  CHECK(next.theta[1] == 0.0);
}

TEST_CASE("channel noise is unbiased in the update") {
  HyperParams params;
  params.n = 2;
  params.dataset_size = 1;
  params.dim = 2;
  params.sigma = 5.0;

  std::mt19937_64 rng(233);
  Eigen::MatrixXd anchors(2, 2);
  anchors << 1.0, 0.5, -0.5, 2.0;
  const LossModel loss = anchored_quadratic(anchors, 2, 1);
  Eigen::VectorXd theta(2);
  theta << 0.3, -0.7;

  HyperParams noiseless = params;
  noiseless.sigma = 0.0;
  std::mt19937_64 quiet_rng(3);
  const auto [clean, clean_record] =
      run_round({theta, 0}, noiseless, loss, unit_channel({0, 1}, 1.0, 0.0), {0, 1}, {{0}, {0}},
                quiet_rng);

  const int reps = 10000;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
  for (int r = 0; r < reps; ++r) {
    const auto [noisy, record] = run_round({theta, 0}, params, loss,
                                           unit_channel({0, 1}, 1.0, params.sigma), {0, 1},
                                           {{0}, {0}}, rng);
    mean += noisy.theta;
  }
  mean /= reps;

  // per-coordinate noise std in theta' is eta * sigma / (pqn * gamma)
  const double se = params.eta * params.sigma / (params.p * params.q * params.n) /
                    std::sqrt(static_cast<double>(reps));
  CHECK(std::abs(mean[0] - clean.theta[0]) < 3.0 * se);
  CHECK(std::abs(mean[1] - clean.theta[1]) < 3.0 * se);
}

TEST_CASE("training rejects T < 1 and replays byte for byte") {
  HyperParams params;
  params.dim = 2;
  std::mt19937_64 rng(239);
  const LossModel loss = make_quadratic(params.dim, params.n, params.dataset_size, {}, rng);

  TrainOptions options;
  options.rounds = 0;
  CHECK_THROWS_WITH_AS(run_training(params, loss, options), "run_training: T >= 1 required",
                       std::invalid_argument);

  options.rounds = 25;
  options.seed = 99;
  options.policy.kind = GammaPolicy::Kind::PowerLimited;
  options.policy.power_budget = 400.0;
  const auto [trace_a, ledger_a] = run_training(params, loss, options);
  const auto [trace_b, ledger_b] = run_training(params, loss, options);

  REQUIRE(trace_a.rounds.size() == trace_b.rounds.size());
  CHECK((trace_a.theta_final == trace_b.theta_final));
  for (std::size_t t = 0; t < trace_a.rounds.size(); ++t) {
    CHECK(trace_a.rounds[t].loss == trace_b.rounds[t].loss);
    CHECK(trace_a.rounds[t].gamma == trace_b.rounds[t].gamma);
    CHECK(trace_a.rounds[t].active == trace_b.rounds[t].active);
    CHECK(trace_a.rounds[t].batches == trace_b.rounds[t].batches);
  }

  SUBCASE("ledger records one gamma per executed round, in order") {
    REQUIRE(ledger_a.rounds() == 25);
    for (std::size_t t = 0; t < 25; ++t)
      CHECK(ledger_a.gammas()[t] == trace_a.rounds[t].gamma);
  }

  SUBCASE("accounting replay from the serialized ledger matches the live value") {
    const double live = dp_epsilon(params, ledger_a);
    PrivacyLedger replayed;
    for (double g : ledger_a.gammas()) replayed.append(parse_double(format_double(g)));
    CHECK(dp_epsilon(params, replayed) == doctest::Approx(live).epsilon(1e-12));
  }
}

TEST_CASE("round and batch sizes match the sampling rates") {
  HyperParams params;
  params.p = 0.5;
  params.q = 0.5;
  params.dim = 2;
  std::mt19937_64 rng(241);
  const LossModel loss = make_quadratic(params.dim, params.n, params.dataset_size, {}, rng);
  TrainOptions options;
  options.rounds = 10;
  const auto [trace, ledger] = run_training(params, loss, options);
  for (const auto& record : trace.rounds) {
    CHECK(record.active.size() == 5);
    for (const auto& batch : record.batches) CHECK(batch.size() == 4);
  }
}

TEST_CASE("domain projection keeps iterates inside the ball") {
  HyperParams params;
  params.dim = 2;
  params.sigma = 50.0;  // violent noise so projection actually engages
  params.D = 0.5;
  std::mt19937_64 rng(251);
  const LossModel loss = make_quadratic(params.dim, params.n, params.dataset_size, {}, rng);

  const Eigen::VectorXd center = Eigen::VectorXd::Constant(params.dim, 1.0);
  Projection projection{true, center, params.D};
  ModelState state{center, 0};
  std::mt19937_64 noise_rng(7);
  std::vector<int> active(params.n);
  for (int i = 0; i < params.n; ++i) active[i] = i;
  std::vector<std::vector<int>> batches(active.size());
  for (auto& b : batches)
    for (int s = 0; s < params.dataset_size; ++s) b.push_back(s);

  for (int t = 0; t < 50; ++t) {
    auto [next, record] = run_round(state, params, loss, unit_channel(active, 1.0, params.sigma),
                                    active, batches, noise_rng, Normalization::PaperSum,
                                    projection);
    state = std::move(next);
    CHECK((state.theta - center).norm() <= params.D / 2.0 + 1e-12);
  }

  // and through the training loop switch: every recorded iterate stays inside
  TrainOptions options;
  options.rounds = 30;
  options.project = true;
  options.theta0 = center;
  const auto [trace, ledger] = run_training(params, loss, options);
  REQUIRE(trace.thetas.size() == 30);
  for (const auto& iterate : trace.thetas)
    CHECK((iterate - center).norm() <= params.D / 2.0 + 1e-12);
  CHECK((trace.theta_final == trace.thetas.back()));
}

TEST_CASE("clipped_count counts every clipped sample") {
  HyperParams params;
  params.dim = 2;
  params.c = 1e-6;  // everything clips
  params.sigma = 0.0;
  std::mt19937_64 rng(257);
  QuadraticSpread spread;
  spread.device_sigma = 2.0;
  const LossModel loss = make_quadratic(params.dim, params.n, params.dataset_size, spread, rng);
  TrainOptions options;
  options.rounds = 3;
  options.theta0 = Eigen::VectorXd::Constant(params.dim, 5.0);
  const auto [trace, ledger] = run_training(params, loss, options);
  for (const auto& record : trace.rounds)
    CHECK(record.clipped_count == params.n * params.dataset_size);
}

TEST_CASE("with an inactive clip the update coincides with plain SGD") {
  HyperParams params;
  params.n = 3;
  params.dataset_size = 2;
  params.dim = 3;
  params.sigma = 0.0;
  params.c = 1e9;

  std::mt19937_64 rng(263);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd anchors(6, 3);
  for (Eigen::Index i = 0; i < anchors.size(); ++i) anchors(i) = normal(rng);
  const LossModel loss = anchored_quadratic(anchors, 3, 2);

  Eigen::VectorXd theta(3);
  theta << 0.2, -0.4, 0.9;
  const std::vector<int> active = {0, 1, 2};
  const std::vector<std::vector<int>> batches(3, {0, 1});

  std::mt19937_64 noise_rng(4);
  const auto [next, record] = run_round({theta, 0}, params, loss, unit_channel(active, 1.0, 0.0),
                                        active, batches, noise_rng);

  // mirror of the implementation's arithmetic with the clip removed
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(3);
  for (std::size_t k = 0; k < active.size(); ++k)
    for (int s : batches[k]) sum += loss.sample_gradient(theta, active[k], s);
  const Eigen::VectorXd estimate =
      (sum + Eigen::VectorXd::Zero(3) / 1.0) / (params.p * params.q * params.n);
  const Eigen::VectorXd expected = theta - params.eta * estimate;
  CHECK((next.theta == expected));
  CHECK(record.clipped_count == 0);
}

TEST_CASE("sample-mean normalization divides by the dataset size as well") {
  HyperParams params;
  params.n = 2;
  params.dataset_size = 4;
  params.dim = 1;
  params.sigma = 0.0;
  params.c = 1e9;

  const LossModel loss = anchored_quadratic(Eigen::MatrixXd::Zero(8, 1), 2, 4);
  const Eigen::VectorXd theta = Eigen::VectorXd::Constant(1, 1.0);
  const std::vector<int> active = {0, 1};
  const std::vector<std::vector<int>> batches(2, {0, 1, 2, 3});

  std::mt19937_64 noise_rng(5);
  const auto [paper, r1] = run_round({theta, 0}, params, loss, unit_channel(active, 1.0, 0.0),
                                     active, batches, noise_rng, Normalization::PaperSum);
  const auto [mean, r2] = run_round({theta, 0}, params, loss, unit_channel(active, 1.0, 0.0),
                                    active, batches, noise_rng, Normalization::SampleMean);
  // sum of 8 gradients of value 1: paper rule steps eta * m, mean rule steps eta
  CHECK(paper.theta[0] == doctest::Approx(1.0 - params.eta * 4.0).epsilon(1e-12));
  CHECK(mean.theta[0] == doctest::Approx(1.0 - params.eta).epsilon(1e-12));
}
