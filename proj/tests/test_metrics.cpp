#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "hsisr/core/error.hpp"
#include "hsisr/metrics/metrics.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace hsisr;
using namespace hsisr::metrics;
using namespace hsisr::oracle;

TEST_CASE("all six indices match naive references on random pairs") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const Cube a = test::random_cube(8, 8, 4, rng());
    const Cube b = test::random_cube(8, 8, 4, rng());
    const int scale = 2 + trial % 3;
    CHECK(mpsnr(a, b) == doctest::Approx(ref_mpsnr(a, b)).epsilon(1e-6));
    CHECK(mssim(a, b) == doctest::Approx(ref_mssim(a, b)).epsilon(1e-6).scale(1e-3));
    CHECK(sam_deg(a, b) == doctest::Approx(ref_sam(a, b)).epsilon(1e-6));
    CHECK(cc(a, b) == doctest::Approx(ref_cc(a, b)).epsilon(1e-6).scale(1e-3));
    CHECK(rmse(a, b) == doctest::Approx(ref_rmse(a, b)).epsilon(1e-6));
    CHECK(ergas(a, b, scale) == doctest::Approx(ref_ergas(a, b, scale)).epsilon(1e-6));
    const MetricsReport r = evaluate(a, b, scale);
    CHECK(r.mpsnr == mpsnr(a, b));
    CHECK(r.ergas == ergas(a, b, scale));
    CHECK(r.scale == scale);
  }
}

TEST_CASE("identical cubes give the best values") {
  const Cube a = test::random_cube(8, 8, 4, 1);
  const MetricsReport r = evaluate(a, a, 4);
  CHECK(std::isinf(r.mpsnr));
  CHECK(r.mpsnr > 0);
  CHECK(r.mssim == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.sam == 0.0);
  CHECK(r.cc == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.rmse == 0.0);
  CHECK(r.ergas == 0.0);
  CHECK(sam_deg(Cube(4, 4, 3), Cube(4, 4, 3)) == 0.0);
}

TEST_CASE("constant offset example") {
  const Cube ref = test::random_cube(8, 8, 5, 2, 0.0f, 0.8f);
  Cube cand = ref;
  for (float& v : cand.values()) v += 0.1f;
  CHECK(rmse(ref, cand) == doctest::Approx(0.1).epsilon(1e-5));
  CHECK(mpsnr(ref, cand) == doctest::Approx(20.0).epsilon(1e-5));
  CHECK(sam_deg(ref, cand) == doctest::Approx(ref_sam(ref, cand)).epsilon(1e-6));
  CHECK(sam_deg(ref, cand) > 0.0);
}

TEST_CASE("symmetry, scale invariance and monotonicity") {
  const Cube a = test::random_cube(8, 8, 4, 3);
  const Cube b = test::random_cube(8, 8, 4, 4);
  CHECK(rmse(a, b) == doctest::Approx(rmse(b, a)).epsilon(1e-12));
  CHECK(sam_deg(a, b) == doctest::Approx(sam_deg(b, a)).epsilon(1e-12));
  CHECK(cc(a, b) == doctest::Approx(cc(b, a)).epsilon(1e-12));

  Cube scaled = b;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> u(0.1f, 10.0f);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      const float s = u(rng);
      for (int c = 0; c < 4; ++c) scaled.at(y, x, c) *= s;
    }
  CHECK(sam_deg(a, scaled) == doctest::Approx(sam_deg(a, b)).epsilon(1e-6));

  const Cube clean = test::random_cube(16, 16, 4, 6, 0.2f, 0.8f);
  const Cube noise = test::random_cube(16, 16, 4, 7, -1.0f, 1.0f);
  double last = std::numeric_limits<double>::infinity();
  for (float amp : {0.01f, 0.05f, 0.1f}) {
    Cube noisy = clean;
    for (std::size_t i = 0; i < noisy.size(); ++i) noisy.values()[i] += amp * noise.values()[i];
    const double p = mpsnr(clean, noisy);
    CHECK(p < last);
    last = p;
  }
}

TEST_CASE("metric errors") {
  const Cube a = test::random_cube(8, 8, 4, 8);
  CHECK_THROWS_AS(rmse(a, Cube(8, 8, 3)), ShapeError);
  Cube flat = a;
  for (float& v : flat.band(2)) v = 0.5f;
  CHECK_THROWS_WITH_AS(cc(a, flat), doctest::Contains("zero variance band 2"), Error);
  CHECK_THROWS_AS(ergas(a, a, 0), ConfigError);
  // Near-zero band means are guarded rather than dividing by zero.
  CHECK(std::isfinite(ergas(Cube(8, 8, 2), a.slice_bands(0, 2), 2)));
}

TEST_CASE("serialization round-trips and formats infinity") {
  const Cube a = test::random_cube(8, 8, 4, 9);
  const Cube b = test::random_cube(8, 8, 4, 10);
  const MetricsReport r = evaluate(a, b, 3);
  const MetricsReport back = parse_key_value(to_key_value(r));
  CHECK(back.mpsnr == r.mpsnr);
  CHECK(back.mssim == r.mssim);
  CHECK(back.sam == r.sam);
  CHECK(back.cc == r.cc);
  CHECK(back.rmse == r.rmse);
  CHECK(back.ergas == r.ergas);
  CHECK(back.scale == 3);

  const MetricsReport best = evaluate(a, a, 2);
  CHECK(format_metric(best.mpsnr) == "inf");
  CHECK(to_key_value(best).find("mpsnr=inf") != std::string::npos);
  CHECK(std::isinf(parse_key_value(to_key_value(best)).mpsnr));
  CHECK(format_metric(0.5) == "0.5");

  CHECK(csv_header() == "label,mpsnr,mssim,sam,cc,rmse,ergas,scale");
  const std::string row = csv_row("x", r);
  CHECK(row.rfind("x,", 0) == 0);
  CHECK(std::count(row.begin(), row.end(), ',') == 7);
  const std::string human = to_human(r);
  CHECK(human.find("MPSNR") != std::string::npos);
  CHECK_THROWS(parse_key_value("mpsnr=abc\n"));
}

TEST_CASE("spectral curves and error maps") {
  const Cube a = test::random_cube(6, 7, 5, 11);
  const auto curve = spectral_curve(a, 3, 2);
  REQUIRE(curve.size() == 5);
  for (int c = 0; c < 5; ++c) CHECK(curve[c] == a.at(2, 3, c));
  for (float v : spectral_curve(Cube(4, 4, 6, 0.3f), 1, 1)) CHECK(v == 0.3f);
  CHECK_THROWS_AS(spectral_curve(a, 7, 0), ShapeError);
  CHECK_THROWS_AS(spectral_curve(a, 0, -1), ShapeError);

  const ErrorMap zero = error_map(a, a, {0, 2, 4});
  CHECK(zero.height == 6);
  CHECK(zero.width == 7);
  for (float v : zero.values) CHECK(v == 0.0f);

  const Cube b = test::random_cube(6, 7, 5, 12);
  const ErrorMap m = error_map(a, b, {0, 2, 4});
  const float expect =
      (std::abs(a.at(4, 5, 0) - b.at(4, 5, 0)) + std::abs(a.at(4, 5, 2) - b.at(4, 5, 2)) +
       std::abs(a.at(4, 5, 4) - b.at(4, 5, 4))) / 3.0f;
  CHECK(m.values[4 * 7 + 5] == doctest::Approx(expect).epsilon(1e-6));
  const RgbImage img = render_error_map(m);
  CHECK(img.width == 7);
  CHECK(img.height == 6);
  CHECK_THROWS(error_map(a, b, {0, 2, 5}));
}
