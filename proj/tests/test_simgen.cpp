#include <cmath>
#include <limits>
#include <set>

#include "doctest.h"

#include "arealmix/car.hpp"
#include "arealmix/error.hpp"
#include "arealmix/simgen.hpp"
#include "oracles.hpp"

using namespace arealmix;

namespace {

StudyConfig small_config(Protocol p) {
  StudyConfig c = default_study_config(p);
  c.replicates = 4;
  c.lattice_rows = 6;
  c.lattice_cols = 6;
  c.seed = 123;
  return c;
}

SimulatedStudy simulate(const StudyConfig& c) {
  const auto g = study_graph(c);
  return generate_study(c, g, study_design(c, g.size()));
}

}  // namespace

TEST_CASE("protocol names and defaults") {
  for (auto p : {Protocol::contaminated_pcar, Protocol::from_bym2_gamma, Protocol::from_bym2_logcar,
                 Protocol::no_outliers})
    CHECK(parse_protocol(protocol_name(p)) == p);
  CHECK_THROWS_AS(parse_protocol("PCAR"), InputError);

  const auto c = default_study_config(Protocol::contaminated_pcar);
  CHECK(c.generator.sigma_b == doctest::Approx(std::sqrt(0.7)));
  CHECK(c.generator.alpha == 0.7);
  CHECK(c.generator.beta0 == -0.1);
  CHECK(c.generator.beta == std::vector<double>{-4.0});
  CHECK(c.replicates == 100);
  CHECK(c.sampler.iterations == 20000);
  CHECK(c.sampler.warmup == 10000);
  CHECK(c.sampler.thin == 10);
  CHECK(c.sampler.chains == 2);
  const auto e = default_study_config(Protocol::no_outliers);
  CHECK(e.generator.sigma_b == doctest::Approx(std::sqrt(0.2)));
  CHECK(e.generator.beta.empty());
  const auto gam = default_study_config(Protocol::from_bym2_gamma);
  CHECK(gam.generator.nu == 4.0);
  CHECK(gam.generator.lambda == 0.8);
  CHECK(gam.generator.sigma == 0.3);
  CHECK(default_study_config(Protocol::from_bym2_logcar).generator.nu_kappa == 0.3);
}

TEST_CASE("study config files") {
  SUBCASE("overrides apply on top of protocol defaults") {
    const auto c = parse_study_config(
        "[study]\nprotocol = FROM_BYM2_GAMMA\nreplicates = 3\nmodels = bym2-gamma\n"
        "[generator]\nnu = 6\n[sampler]\niterations = 400\nwarmup = 200\nthin = 2\n");
    CHECK(c.protocol == Protocol::from_bym2_gamma);
    CHECK(c.replicates == 3);
    CHECK(c.models == std::vector<ModelKind>{ModelKind::bym2_gamma});
    CHECK(c.generator.nu == 6.0);
    CHECK(c.generator.lambda == 0.8);
    CHECK(c.sampler.kept_draws() == 100);
  }
  SUBCASE("round trip through the resolved form") {
    auto c = small_config(Protocol::contaminated_pcar);
    c.contamination.nodes = {"3", "17"};
    c.contamination.sign = -1;
    c.generator.beta = {-4.0, 0.25};
    const auto back = parse_study_config(c.to_ini());
    CHECK(back.to_ini() == c.to_ini());
    CHECK(back.contamination.nodes == c.contamination.nodes);
    CHECK(back.generator.beta == c.generator.beta);
  }
  SUBCASE("errors name the field") {
    auto message = [](const char* text) {
      try {
        parse_study_config(text);
      } catch (const InputError& e) {
        return std::string(e.what());
      }
      return std::string();
    };
    CHECK(message("[study]\nreplicates = 2\n").find("protocol") != std::string::npos);
    CHECK(message("[study]\nprotocol = NO_OUTLIERS\nreplicates = 0\n").find("replicates") != std::string::npos);
    CHECK(message("[study]\nprotocol = NO_OUTLIERS\ncolour = red\n").find("colour") != std::string::npos);
    CHECK(message("[study]\nprotocol = NO_OUTLIERS\n[extras]\na = 1\n").find("extras") != std::string::npos);
    CHECK(message("[study]\nprotocol = NO_OUTLIERS\n[sampler]\nwarmup = 30000\n").find("warmup") !=
          std::string::npos);
    CHECK(message("[study]\nprotocol = NO_OUTLIERS\nmodels = bym3\n").find("bym3") != std::string::npos);
  }
}

TEST_CASE("synthetic design") {
  auto c = small_config(Protocol::contaminated_pcar);
  Rng rng = make_stream(1);
  const auto d = synthetic_design(500, 2, c, rng);
  CHECK(d.offset.size() == 500);
  CHECK(d.covariates.cols() == 2);
  CHECK(d.offset.minCoeff() >= 50.0);
  CHECK(d.offset.maxCoeff() <= 500.0);
  for (Eigen::Index i = 0; i < d.offset.size(); ++i) CHECK(d.offset[i] == std::round(d.offset[i]));
  CHECK(d.covariates.minCoeff() >= 0.3);
  CHECK(d.covariates.maxCoeff() <= 0.8);
}

TEST_CASE("contaminated protocol") {
  auto c = small_config(Protocol::contaminated_pcar);
  c.contamination.nodes = {"2", "20", "35"};
  const auto s = simulate(c);
  CHECK(s.y.size() == 4);
  CHECK(s.truth.contaminated == std::vector<int>{1, 19, 34});
  for (int i = 0; i < 36; ++i) {
    const double shift = s.truth.b[i] - s.truth.b_initial[i];
    if (i == 1 || i == 19 || i == 34) {
      CHECK(s.truth.b[i] > s.truth.b_initial[i]);
      CHECK(shift >= 1.0);
      CHECK(shift <= 2.0);
      CHECK(std::exp(shift) > std::exp(1.0));
    } else {
      CHECK(shift == 0.0);
    }
  }
  SUBCASE("unknown node") {
    c.contamination.nodes = {"1", "500"};
    CHECK_THROWS_WITH_AS(simulate(c), doctest::Contains("500"), InputError);
  }
  SUBCASE("negative sign lowers the effects") {
    c.contamination.sign = -1;
    const auto neg = simulate(c);
    CHECK(neg.truth.b[1] < neg.truth.b_initial[1]);
  }
  SUBCASE("empty list warns and matches the no-outlier generator") {
    c.contamination.nodes.clear();
    const auto empty = simulate(c);
    CHECK_FALSE(empty.warnings.empty());
    CHECK(empty.truth.b == empty.truth.b_initial);
  }
  SUBCASE("no-outlier parameters give finite positive mean counts") {
    const auto e = simulate(small_config(Protocol::no_outliers));
    for (const auto& y : e.y) {
      double total = 0;
      for (int v : y) total += v;
      CHECK(total > 0);
      CHECK(std::isfinite(total / 36));
    }
  }
}

TEST_CASE("shared effects and replicate determinism") {
  for (auto p : {Protocol::contaminated_pcar, Protocol::from_bym2_gamma, Protocol::from_bym2_logcar}) {
    auto c = small_config(p);
    if (p == Protocol::contaminated_pcar) c.contamination.nodes = {"5"};
    const auto a = simulate(c);
    auto more = c;
    more.replicates = 7;
    const auto b = simulate(more);
    CHECK(a.truth.b == b.truth.b);
    for (int r = 0; r < 4; ++r) CHECK(a.y[static_cast<std::size_t>(r)] == b.y[static_cast<std::size_t>(r)]);
    CHECK(a.y[0] != a.y[1]);
    // Replicate r rebuilt alone from its own stream.
    Rng rng = make_stream(c.seed, {2, 2});
    CHECK(poisson_counts(a.design, a.truth.beta0, a.truth.beta, a.truth.b, rng) == a.y[2]);
    auto other = c;
    other.seed = 124;
    CHECK(simulate(other).truth.b != a.truth.b);
  }
}

TEST_CASE("Poisson means beyond the integer range are rejected") {
  const auto c = small_config(Protocol::no_outliers);
  const auto s = simulate(c);
  Rng rng = make_stream(1);
  CHECK_THROWS_WITH_AS(poisson_counts(s.design, 40.0, s.truth.beta, s.truth.b, rng), doctest::Contains("too large"),
                       InputError);
  Eigen::VectorXd b = s.truth.b;
  b[3] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_WITH_AS(poisson_counts(s.design, 0.0, s.truth.beta, b, rng), doctest::Contains("node 4"), InputError);
}

TEST_CASE("BYM2-Gamma generator") {
  auto c = small_config(Protocol::from_bym2_gamma);
  c.lattice_rows = c.lattice_cols = 10;
  const auto s = simulate(c);
  CHECK(std::abs(s.truth.u_star.sum()) < 1e-10);
  CHECK(s.truth.kappa.mean() == doctest::Approx(1.0).epsilon(0.10));
  const Eigen::VectorXd b = latent_effects(
      {.sigma = 0.3, .lambda = 0.8, .theta = s.truth.theta, .u_star = s.truth.u_star, .kappa = s.truth.kappa},
      default_model_spec(ModelKind::bym2_gamma));
  CHECK((b - s.truth.b).cwiseAbs().maxCoeff() < 1e-14);

  SUBCASE("prior sd of b is close to sigma / sqrt(kappa)") {
    const auto g = lattice_graph(10, 10);
    const IcarSampler icar(g);
    const double h = scaling_factor(icar.spectrum());
    Rng rng = make_stream(3);
    std::normal_distribution<double> normal;
    const int draws = 1000;
    Eigen::VectorXd sum2 = Eigen::VectorXd::Zero(100);
    ParameterState st{.sigma = 0.3, .lambda = 0.8, .kappa = s.truth.kappa};
    for (int k = 0; k < draws; ++k) {
      st.theta = Eigen::VectorXd::NullaryExpr(100, [&] { return normal(rng); });
      st.u_star = icar.sample(h, rng);
      sum2 += latent_effects(st, default_model_spec(ModelKind::bym2_gamma)).cwiseAbs2();
    }
    const Eigen::ArrayXd sd = (sum2 / draws).array().sqrt();
    const Eigen::ArrayXd target = 0.3 / s.truth.kappa.array().sqrt();
    CHECK((sd / target).mean() == doctest::Approx(1.0).epsilon(0.15));
  }
}

TEST_CASE("BYM2-logCAR generator") {
  auto c = small_config(Protocol::from_bym2_logcar);
  const auto s = simulate(c);
  CHECK(std::abs(s.truth.z.sum()) < 1e-10);
  CHECK((logcar_kappa(s.truth.z, 0.3) - s.truth.kappa).cwiseAbs().maxCoeff() < 1e-14);
  c.generator.nu_kappa = 1e-300;
  const auto flat = simulate(c);
  CHECK((flat.truth.kappa.array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("study run") {
  auto c = small_config(Protocol::from_bym2_gamma);
  c.replicates = 1;
  c.lattice_rows = 3;
  c.lattice_cols = 3;
  c.models = {ModelKind::bym2_gamma, ModelKind::bym2};
  c.sampler.iterations = 400;
  c.sampler.warmup = 200;
  c.sampler.thin = 2;
  const auto report = run_study(c, Execution::parallel);
  REQUIRE(report.fits.size() == 2);
  CHECK(report.fits[0].model == ModelKind::bym2_gamma);
  CHECK(report.fits[0].ok);
  CHECK(std::isfinite(report.fits[0].waic.waic));
  CHECK(report.fits[0].flagged.size() == 9);
  CHECK(report.fits[1].flagged.empty());
  CHECK(report.detection_frequency(ModelKind::bym2_gamma).size() == 9);
  CHECK(report.detection_frequency(ModelKind::bym2).empty());
  CHECK(report.successful_fits(ModelKind::bym2_gamma) == 1);

  std::set<std::string> params;
  for (const auto& row : report.coverage)
    if (row.model == ModelKind::bym2_gamma) params.insert(row.parameter);
  CHECK(params == std::set<std::string>{"beta0", "lambda", "sigma", "nu"});
  for (const auto& row : report.coverage)
    if (row.model == ModelKind::bym2) CHECK(row.parameter == "beta0");

  const auto serial = run_study(c, Execution::serial);
  CHECK(serial.fits[0].waic.waic == report.fits[0].waic.waic);
  CHECK(serial.fits[1].waic.waic == report.fits[1].waic.waic);
  CHECK(fit_seed(1, 0, 0) != fit_seed(1, 0, 1));
  CHECK(fit_seed(1, 0, 1) != fit_seed(1, 1, 0));
}
