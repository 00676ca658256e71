#include <doctest.h>

#include <random>
#include <set>

#include "hgs/renderer.hpp"
#include "hgs/sampler.hpp"
#include "support/oracles.hpp"

using namespace hgs;

TEST_CASE("build_distribution: normalization, masking, empty support") {
  RasterGrid imp(2, 2, 1);
  imp.data = {2.0, 1.0, 1.0, 0.0};
  RasterGrid mask(2, 2, 1, 1.0);
  const SampleDistribution d = build_distribution(imp, mask);
  CHECK(d.support_size == 3);
  CHECK(d.probs.data[0] == doctest::Approx(0.5));
  CHECK(d.probs.data[1] == doctest::Approx(0.25));
  CHECK(d.probs.data[2] == doctest::Approx(0.25));
  CHECK(d.probs.data[3] == 0.0);
  double sum = 0;
  for (double v : d.probs.data) sum += v;
  CHECK(std::abs(sum - 1.0) <= 1e-9);

  // Uniform importance over a k-pixel mask gives 1/k each.
  RasterGrid uimp(4, 1, 1, 1.0);
  RasterGrid umask(4, 1, 1);
  umask.data = {1, 0, 1, 0};
  const SampleDistribution u = build_distribution(uimp, umask);
  CHECK(u.support_size == 2);
  CHECK(u.probs.data[0] == doctest::Approx(0.5));
  CHECK(u.probs.data[2] == doctest::Approx(0.5));

  RasterGrid zmask(2, 2, 1, 0.0);
  const SampleDistribution z = build_distribution(imp, zmask);
  CHECK(z.support_size == 0);
  for (double v : z.probs.data) CHECK(v == 0.0);
}

TEST_CASE("draw_pixels: point mass, determinism, empty-support error") {
  RasterGrid imp(3, 3, 1, 0.0);
  imp.at(1, 2) = 5.0;
  RasterGrid mask(3, 3, 1, 1.0);
  const SampleDistribution d = build_distribution(imp, mask);
  const auto picks = draw_pixels(d, 20, 99);
  for (const auto& p : picks) {
    CHECK(p.x == 1);
    CHECK(p.y == 2);
  }

  const auto again = draw_pixels(d, 20, 99);
  REQUIRE(again.size() == picks.size());
  for (size_t i = 0; i < picks.size(); ++i) {
    CHECK(again[i].x == picks[i].x);
    CHECK(again[i].y == picks[i].y);
  }

  SampleDistribution empty;
  CHECK_THROWS_AS(draw_pixels(empty, 1, 0), std::logic_error);
}

TEST_CASE("draw_pixels: Monte-Carlo frequencies approach the distribution") {
  RasterGrid imp(2, 2, 1);
  imp.data = {2.0, 1.0, 1.0, 0.0};
  RasterGrid mask(2, 2, 1, 1.0);
  const SampleDistribution d = build_distribution(imp, mask);
  const int n = 1'000'000;
  const auto picks = draw_pixels(d, n, 1234);
  std::vector<double> freq(4, 0.0);
  for (const auto& p : picks) freq[p.y * 2 + p.x] += 1.0 / n;
  double tv = 0.0;
  for (int i = 0; i < 4; ++i) tv += std::abs(freq[i] - d.probs.data[i]);
  CHECK(tv / 2.0 <= 0.01);
  CHECK(freq[3] == 0.0);
}

TEST_CASE("draws never land outside the reliability mask") {
  std::mt19937_64 rng(31);
  RasterGrid imp = test::random_image(rng, 16, 16, 1);
  RasterGrid mask(16, 16, 1, 0.0);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 8; ++x) mask.at(x, y) = 1.0;  // left half only
  const SampleDistribution d = build_distribution(imp, mask);
  const auto picks = draw_pixels(d, 200000, 777);
  for (const auto& p : picks) CHECK(p.x < 8);
}

TEST_CASE("top_k_pixels: deterministic selection of the heaviest pixels") {
  RasterGrid imp(4, 1, 1);
  imp.data = {2.0, 1.0, 1.0, 0.0};
  RasterGrid mask(4, 1, 1, 1.0);
  const SampleDistribution d = build_distribution(imp, mask);
  const auto top = top_k_pixels(d, 2);
  REQUIRE(top.size() == 2);
  CHECK(top[0].x == 0);  // heaviest
  CHECK(top[1].x == 1);  // tie with pixel 2 broken by flat index
}

TEST_CASE("back_project: hand examples and projection round trip") {
  Camera ident;
  ident.K = Mat3::Identity();
  ident.width = ident.height = 4;
  CHECK((back_project(Vec2(0, 0), 2.0, ident) - Vec3(0, 0, 2)).norm() < 1e-15);

  Camera translated = ident;
  translated.t = Vec3(1, 0, 0);
  CHECK((back_project(Vec2(0, 0), 1.0, translated) - Vec3(-1, 0, 1)).norm() < 1e-15);

  CHECK_THROWS(back_project(Vec2(0, 0), -0.5, ident));

  // project(back_project(.)) is the identity on depth-valid pixels.
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    Camera cam = test::test_camera(48, 36);
    // random orthonormal pose
    const Vec4 q = quat_normalized(
        Vec4(uni(rng) * 2 - 1, uni(rng) * 2 - 1, uni(rng) * 2 - 1, uni(rng) * 2 - 1));
    cam.R = quat_to_matrix(q);
    cam.t = Vec3(uni(rng) - 0.5, uni(rng) - 0.5, uni(rng) - 0.5);
    const Vec2 pixel(uni(rng) * 48.0, uni(rng) * 36.0);
    const double depth = 0.3 + 3.0 * uni(rng);
    const Vec3 p_w = back_project(pixel, depth, cam);

    const Vec3 x_cam = cam.R * p_w + cam.t;
    CHECK(x_cam.z() == doctest::Approx(depth).epsilon(1e-12));
    const Vec2 reproj(cam.fx() * x_cam.x() / x_cam.z() + cam.cx(),
                      cam.fy() * x_cam.y() / x_cam.z() + cam.cy());
    CHECK((reproj - pixel).norm() <= 1e-9);
  }
}

TEST_CASE("spawn_fine: construction invariants and ledger entry") {
  TrainConfig cfg;
  cfg.fine_init_scale = 0.02;
  cfg.alpha_init = 0.1;
  cfg.t_protect = 500;
  RetentionLedger ledger;
  RasterGrid gt(4, 4, 3, 0.0);
  gt.at(2, 1, 0) = 0.9;
  gt.at(2, 1, 1) = 0.4;
  gt.at(2, 1, 2) = 0.2;

  const Gaussian g =
      spawn_fine(Vec3(1, 2, 3), {2, 1}, gt, cfg, 100, ledger);
  CHECK(g.level == Level::Fine);
  CHECK(g.mu == Vec3(1, 2, 3));
  CHECK(g.birth_iter == 100);
  CHECK(g.alpha() == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(g.color == Vec3(0.9, 0.4, 0.2));
  const Mat3 cov = covariance(g);
  CHECK((cov - 0.02 * 0.02 * Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-15);
  REQUIRE(ledger.entries.size() == 1);
  CHECK(ledger.entries[0].birth_iter == 100);
  CHECK(ledger.entries[0].protected_until == 600);
}

TEST_CASE("effective_opacity: floor inside the window, raw at the boundary") {
  TrainConfig cfg;
  Gaussian g;
  g.level = Level::Fine;
  g.opacity_logit = logit(0.001);
  LedgerEntry e{1, 100, 600};
  CHECK(effective_opacity(g, e, 300, 0.01) == doctest::Approx(0.01));
  g.opacity_logit = logit(0.5);
  CHECK(effective_opacity(g, e, 300, 0.01) == doctest::Approx(0.5));
  g.opacity_logit = logit(0.001);
  // iter == protected_until: window is over (strictly t < T_protect).
  CHECK(effective_opacity(g, e, 600, 0.01) == doctest::Approx(0.001));
}

TEST_CASE("prune: protection, thresholds and coarse immunity") {
  Scene scene;
  RetentionLedger ledger;
  TrainConfig cfg;

  Gaussian coarse;
  coarse.level = Level::Coarse;
  coarse.opacity_logit = -40.0;  // alpha ~ 0
  scene.coarse.push_back(coarse);

  auto add_fine = [&](double alpha, int birth, int until) {
    Gaussian g;
    g.level = Level::Fine;
    g.opacity_logit = logit(alpha);
    g.birth_iter = birth;
    scene.fine.push_back(g);
    ledger.entries.push_back({ledger.next_serial++, birth, until});
  };
  add_fine(1e-5, 0, 1000);   // protected low alpha: must stay
  add_fine(1e-5, 0, 50);     // expired low alpha: must go
  add_fine(0.5, 0, 50);      // expired high alpha: stays

  const auto removed = prune(scene, ledger, 100, 0.005, 0.01);
  REQUIRE(removed.size() == 1);
  CHECK(removed[0] == 2);
  CHECK(scene.coarse.size() == 1);  // coarse never pruned
  REQUIRE(scene.fine.size() == 2);
  CHECK(ledger.consistent_with(scene));
  CHECK(ledger.entries[0].serial == 1);
  CHECK(ledger.entries[1].serial == 3);
}

TEST_CASE("prune honors the protection floor when it exceeds the threshold") {
  // Effective opacity inside the window is max(alpha, alpha_minimum), which
  // can sit above epsilon_prune; after expiry the raw alpha decides.
  Scene scene;
  RetentionLedger ledger;
  Gaussian g;
  g.level = Level::Fine;
  g.opacity_logit = logit(1e-4);
  scene.fine.push_back(g);
  ledger.entries.push_back({ledger.next_serial++, 0, 10});

  CHECK(prune(scene, ledger, 5, 0.005, 0.05).empty());   // protected
  CHECK(prune(scene, ledger, 10, 0.005, 0.05).size() == 1);  // expired
}
