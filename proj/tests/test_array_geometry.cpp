#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "beamtrack/array_geometry.hpp"
#include "beamtrack/channel.hpp"
#include "oracles.hpp"

using namespace beamtrack;

TEST_CASE("steering vector zero angle is uniform") {
  const ArrayConfig cfg{32, 0.5};
  const Eigen::VectorXcd a = steering_vector(cfg, 0.0);
  const double expected = 1.0 / std::sqrt(32.0);
  for (int k = 0; k < 32; ++k) {
    CHECK(a[k].real() == doctest::Approx(expected).epsilon(1e-15));
    CHECK(a[k].imag() == doctest::Approx(0.0).epsilon(1e-15));
  }
}

TEST_CASE("steering vector at theta = 1 alternates sign for two elements") {
  const ArrayConfig cfg{2, 0.5};
  const Eigen::VectorXcd a = steering_vector(cfg, 1.0);
  const double s = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(a[0] - std::complex<double>(s, 0.0)) < 1e-15);
  CHECK(std::abs(a[1] - std::complex<double>(-s, 0.0)) < 1e-12);
}

TEST_CASE("steering vector matches the scalar-loop oracle off grid") {
  const ArrayConfig cfg{32, 0.5};
  const double theta = 0.37;
  const Eigen::VectorXcd a = steering_vector(cfg, theta);
  const auto ref = oracles::scalar_steering(32, 0.5, theta);
  for (int k = 0; k < 32; ++k) CHECK(std::abs(a[k] - ref[static_cast<std::size_t>(k)]) < 1e-14);
}

TEST_CASE("steering vector rejects out-of-range angles") {
  const ArrayConfig cfg{8, 0.5};
  CHECK_THROWS_AS(steering_vector(cfg, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(steering_vector(cfg, -1.0001), std::invalid_argument);
  CHECK_THROWS_AS(steering_derivative(cfg, 2.0), std::invalid_argument);
}

TEST_CASE("steering vector is unit norm across the grid") {
  const ArrayConfig cfg{32, 0.5};
  for (int k = 0; k < 192; ++k) {
    const double theta = grid_angle(192, k);
    CHECK(std::abs(steering_vector(cfg, theta).norm() - 1.0) < 1e-12);
  }
}

TEST_CASE("cross-correlation magnitude never exceeds one") {
  const ArrayConfig cfg{16, 0.5};
  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    const double t1 = -1.0 + 2.0 * rng.uniform();
    const double t2 = -1.0 + 2.0 * rng.uniform();
    const auto c = steering_vector(cfg, t1).dot(steering_vector(cfg, t2));
    CHECK(std::abs(c) <= 1.0 + 1e-12);
  }
}

TEST_CASE("steering derivative element zero vanishes") {
  const ArrayConfig cfg{16, 0.5};
  CHECK(std::abs(steering_derivative(cfg, 0.43)[0]) == 0.0);
}

TEST_CASE("steering derivative matches central finite differences") {
  const ArrayConfig cfg{8, 0.5};
  const double h = 1e-6;
  SUBCASE("single angle from the contract") {
    const double theta = 0.2;
    const Eigen::VectorXcd d = steering_derivative(cfg, theta);
    const Eigen::VectorXcd fd =
        (steering_vector(cfg, theta + h) - steering_vector(cfg, theta - h)) / (2.0 * h);
    for (int k = 0; k < 8; ++k) CHECK(std::abs(d[k] - fd[k]) < 1e-6);
  }
  SUBCASE("100 random angles") {
    Rng rng(11);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const double theta = -0.99 + 1.98 * rng.uniform();
      const Eigen::VectorXcd d = steering_derivative(cfg, theta);
      const Eigen::VectorXcd fd =
          (steering_vector(cfg, theta + h) - steering_vector(cfg, theta - h)) / (2.0 * h);
      worst = std::max(worst, (d - fd).cwiseAbs().maxCoeff());
    }
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("conjugation commutes with the angle derivative") {
  const ArrayConfig cfg{8, 0.5};
  const double theta = -0.31;
  const double h = 1e-6;
  const Eigen::VectorXcd lhs = steering_derivative(cfg, theta).conjugate();
  const Eigen::VectorXcd rhs =
      (steering_vector(cfg, theta + h).conjugate() - steering_vector(cfg, theta - h).conjugate()) /
      (2.0 * h);
  for (int k = 0; k < 8; ++k) CHECK(std::abs(lhs[k] - rhs[k]) < 1e-6);
}

TEST_CASE("float instantiation stays consistent with double") {
  const ArrayConfig cfg{8, 0.5};
  const auto af = steering_vector<float>(cfg, 0.25f);
  const auto ad = steering_vector<double>(cfg, 0.25);
  for (int k = 0; k < 8; ++k)
    CHECK(std::abs(std::complex<double>(af[k]) - ad[k]) < 1e-6);
}

TEST_CASE("codebook layout and normalization") {
  const ArrayConfig cfg{32, 0.5};
  const Codebook cb = build_codebook(cfg, 192);

  CHECK(cb.num_entries() == 384);
  for (const BeamVector& b : cb.entries) CHECK(std::abs(b.coefficients.norm() - 1.0) < 1e-12);

  SUBCASE("steer angles form the uniform grid in each class") {
    for (int k = 0; k < 192; ++k) {
      CHECK(cb.at(Aperture::Full, k).steer_angle == grid_angle(192, k));
      CHECK(cb.at(Aperture::Half, k).steer_angle == grid_angle(192, k));
    }
  }

  SUBCASE("half-aperture entries zero the back half of the array") {
    for (int k = 0; k < 192; k += 17) {
      const BeamVector& b = cb.at(Aperture::Half, k);
      int zeros = 0;
      for (int i = 0; i < 32; ++i)
        if (b.coefficients[i] == std::complex<double>(0.0, 0.0)) ++zeros;
      CHECK(zeros == 16);
      CHECK(b.coefficients.tail(16).norm() == 0.0);
    }
  }

  SUBCASE("index mapping round-trips") {
    for (int e = 0; e < cb.num_entries(); ++e) {
      const BeamVector& b = cb.entries[static_cast<std::size_t>(e)];
      CHECK(b.index == e);
      CHECK(cb.entry_index(b.aperture, e % 192) == e);
    }
  }
}

TEST_CASE("half-aperture mainlobe is strictly wider at broadside") {
  const ArrayConfig cfg{32, 0.5};
  const Codebook cb = build_codebook(cfg, 192);
  const int center = nearest_bin(192, 0.0);

  // -3 dB width from a dense sweep of |a(theta)^H f|.
  auto width_3db = [&](const BeamVector& beam) {
    const int n_points = 8193;
    const Eigen::VectorXd pattern = beam_pattern(cfg, beam, n_points);
    int peak = 0;
    for (int i = 1; i < n_points; ++i)
      if (pattern[i] > pattern[peak]) peak = i;
    const double cutoff = pattern[peak] / std::numbers::sqrt2;
    int lo = peak, hi = peak;
    while (lo > 0 && pattern[lo - 1] >= cutoff) --lo;
    while (hi + 1 < n_points && pattern[hi + 1] >= cutoff) ++hi;
    return (hi - lo) * 2.0 / (n_points - 1.0);
  };

  const double full = width_3db(cb.at(Aperture::Full, center));
  const double half = width_3db(cb.at(Aperture::Half, center));
  CHECK(half > full);
}

TEST_CASE("codebook construction is deterministic") {
  const ArrayConfig cfg{32, 0.5};
  const Codebook a = build_codebook(cfg, 192);
  const Codebook b = build_codebook(cfg, 192);
  for (int e = 0; e < a.num_entries(); ++e) {
    const auto& ea = a.entries[static_cast<std::size_t>(e)];
    const auto& eb = b.entries[static_cast<std::size_t>(e)];
    CHECK(ea.coefficients == eb.coefficients);
    CHECK(ea.steer_angle == eb.steer_angle);
  }
}

TEST_CASE("odd antenna counts cannot build the half-aperture class") {
  CHECK_THROWS_AS(build_codebook(ArrayConfig{15, 0.5}, 24), std::invalid_argument);
  CHECK_THROWS_AS(build_codebook(ArrayConfig{16, 0.5}, 1), std::invalid_argument);
}

TEST_CASE("grid helpers snap and clamp") {
  CHECK(grid_angle(192, 96) == 0.0);
  CHECK(nearest_bin(192, 0.0) == 96);
  CHECK(nearest_bin(192, 0.999) == 191);
  CHECK(nearest_bin(192, -1.0) == 0);
  CHECK(floor_bin(192, grid_angle(192, 10)) == 10);
  CHECK(floor_bin(192, grid_angle(192, 10) + 1e-9) == 10);
  CHECK(floor_bin(192, 0.9999) == 191);
}
