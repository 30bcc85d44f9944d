#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fixtures.hpp"
#include "hilma/errors.hpp"
#include "hilma/hlik.hpp"
#include "hilma/models.hpp"
#include "hilma/numdiff.hpp"
#include "optimize.hpp"

using namespace hilma;
using testsupport::grouped;
using testsupport::nelder_mead_maximize;
using testsupport::response_only;
using testsupport::with_covariate;

namespace {

Vector vec1(double a) {
  Vector v(1);
  v << a;
  return v;
}

// The canonical function must be the stationary point of h over v at fixed
// psi: check that the v-gradient vanishes there.
void check_canonical_is_mode(const ModelSpec& m, const Vector& psi,
                             const Dataset& d, double tol = 1e-8) {
  REQUIRE(m.canonical_function);
  const Vector y_mode = m.canonical_function(psi, d);
  const Vector v_mode = m.scale.forward(psi, d, y_mode);
  const Vector g = detail::hlik_grad_v(m, psi, v_mode, d);
  for (int i = 0; i < g.size(); ++i) {
    CHECK(std::abs(g[i]) < tol);
  }
}

// Fixed point of the EM map, from a deliberately poor start.
Vector em_fixed_point(const ModelSpec& m, const Dataset& d, Vector psi) {
  for (int it = 0; it < 20000; ++it) {
    Vector next = m.em_step(psi, d);
    const double change = (next - psi).cwiseAbs().maxCoeff();
    psi = next;
    if (change < 1e-13) break;
  }
  return psi;
}

}  // namespace

TEST_CASE("tag registry resolves every bundled model") {
  const std::vector<std::string> tags = models::known_tags();
  CHECK(tags == std::vector<std::string>{"exp_mean", "mixed_oneway",
                                         "censored_exp", "normal_reg",
                                         "exp_reg", "tobit"});
  for (const auto& t : tags) {
    ModelSpec m = models::by_tag(t);
    CHECK(m.tag == t);
    CHECK(m.param_dim >= 1);
    CHECK(m.extended_loglik);
    CHECK(m.simulate);
    CHECK(m.true_eta);
  }
  CHECK_THROWS_AS(models::by_tag("no_such_model"), UsageError);

  models::TagOptions opt;
  opt.censor = 2.5;
  ModelSpec m = models::by_tag("censored_exp", opt);
  Dataset bad = response_only({2.7}, 1);  // observed value above threshold
  CHECK_THROWS_AS(m.validate_data(bad), DataError);
}

TEST_CASE("exponential mean model") {
  ModelSpec m = models::exponential_mean();
  Dataset d = response_only({1.0, 2.0, 3.0, 0.5}, 2);
  const double theta_hat = m.mle_oracle(d)[0];
  CHECK(theta_hat == doctest::Approx(6.5 / 4).epsilon(1e-15));

  check_canonical_is_mode(m, vec1(1.3), d);
  CHECK(m.canonical_function(vec1(1.3), d)[1] == doctest::Approx(1.3));

  // EM fixed point is the closed-form MLE.
  const Vector fp = em_fixed_point(m, d, vec1(10.0));
  CHECK(fp[0] == doctest::Approx(theta_hat).epsilon(1e-10));

  CHECK(m.true_eta(vec1(2.5), 100) == 2.5);
  CHECK_THROWS_AS(m.validate_data(response_only({-0.5}, 0)), DataError);
  CHECK_THROWS_AS(check_params(m, vec1(0.0)), DomainError);
}

TEST_CASE("censored exponential model") {
  const double c = 3.0;
  ModelSpec m = models::censored_exponential(c);
  CHECK_THROWS_AS(models::censored_exponential(-1.0), UsageError);

  Dataset d = response_only({1.0, 2.5, 0.4, 2.9}, 3);
  const double s = 1.0 + 2.5 + 0.4 + 2.9;
  const double oracle = (s + 3 * c) / 4.0;
  CHECK(m.mle_oracle(d)[0] == doctest::Approx(oracle).epsilon(1e-15));

  check_canonical_is_mode(m, vec1(2.0), d);
  CHECK(m.canonical_function(vec1(2.0), d)[0] == doctest::Approx(2.0 + c));

  const Vector fp = em_fixed_point(m, d, vec1(0.3));
  CHECK(fp[0] == doctest::Approx(oracle).epsilon(1e-10));

  // marginal likelihood stationary exactly at the oracle
  auto lm = [&](const Vector& p) { return m.closed_marginal_loglik(p, d); };
  const Vector g = numdiff::gradient_central4(lm, vec1(oracle));
  CHECK(std::abs(g[0]) < 1e-10);

  CHECK_THROWS_AS(m.validate_data(response_only({3.2}, 1)), DataError);

  // Raw variant: no transformation, v-gradient is strictly negative, so the
  // inner maximizer sits on the support boundary c (the nonsense answer).
  ModelSpec raw = models::censored_exponential_raw(c);
  CHECK(raw.scale.kind == ScaleKind::raw);
  Vector lo(3), hi(3);
  raw.v_bounds(vec1(2.0), d, lo, hi);
  CHECK(lo[0] == c);
  CHECK(hi[2] == std::numeric_limits<double>::infinity());
  const Vector g_raw =
      detail::hlik_grad_v(raw, vec1(2.0), Vector::Constant(3, c + 0.5), d);
  CHECK(g_raw.maxCoeff() < 0.0);
  CHECK_FALSE(static_cast<bool>(raw.closed_marginal_loglik));
}

TEST_CASE("normal regression model") {
  ModelSpec m = models::normal_regression();
  Dataset d = with_covariate({-0.9, -0.3, 0.2, 0.6, 1.0},
                             {0.1, 0.5, 0.9, 1.4, 2.1}, {0.0, 0.5});
  const Vector psi_hat = m.mle_oracle(d);

  // Oracle equals the observed-data OLS solution with the n_obs denominator.
  Matrix X(5, 2);
  Vector yo(5);
  for (int i = 0; i < 5; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = d.covariate(i);
    yo[i] = d.response()[i];
  }
  const Vector beta = (X.transpose() * X).ldlt().solve(X.transpose() * yo);
  const double rss = (yo - X * beta).squaredNorm();
  CHECK(psi_hat[0] == doctest::Approx(beta[0]).epsilon(1e-12));
  CHECK(psi_hat[1] == doctest::Approx(beta[1]).epsilon(1e-12));
  CHECK(psi_hat[2] == doctest::Approx(rss / 5).epsilon(1e-12));

  // Cross-check against a derivative-free maximizer of the closed marginal.
  auto lm = [&](const Vector& p) {
    if (p[2] <= 1e-8) return -1e100;
    return m.closed_marginal_loglik(p, d);
  };
  Vector start(3);
  start << 0.0, 0.0, 1.0;
  auto nm = nelder_mead_maximize(lm, start);
  REQUIRE(nm.converged);
  for (int j = 0; j < 3; ++j) {
    CHECK(nm.x[j] == doctest::Approx(psi_hat[j]).epsilon(5e-6).scale(1.0));
  }

  check_canonical_is_mode(m, psi_hat, d);
  Vector modes = m.canonical_function(psi_hat, d);
  CHECK(modes[0] == doctest::Approx(psi_hat[0] + psi_hat[1] * 0.0));
  CHECK(modes[1] == doctest::Approx(psi_hat[0] + psi_hat[1] * 0.5));

  Vector fp_start(3);
  fp_start << 1.0, -1.0, 4.0;
  const Vector fp = em_fixed_point(m, d, fp_start);
  for (int j = 0; j < 3; ++j) {
    CHECK(fp[j] == doctest::Approx(psi_hat[j]).epsilon(1e-9).scale(1.0));
  }

  // Raw variant keeps the coefficients but shrinks the variance: its joint
  // stationary point in psi at v = fitted means gives RSS_obs / n.
  ModelSpec raw = models::normal_regression_raw();
  const Vector v_fill = raw.default_v_init(psi_hat, d);
  REQUIRE(v_fill.size() == 2);
  CHECK(v_fill[0] == doctest::Approx(psi_hat[0]).epsilon(1e-12));
  CHECK(v_fill[1] == doctest::Approx(psi_hat[0] + 0.5 * psi_hat[1]).epsilon(1e-12));
  CHECK(raw.scale.kind == ScaleKind::raw);
  CHECK_FALSE(static_cast<bool>(raw.closed_marginal_loglik));

  // Mechanism-carrying variant: extended likelihood adds the logistic term.
  ModelSpec mech = models::normal_regression_with_mechanism();
  CHECK(mech.param_dim == 6);
  Vector psi6(6);
  psi6 << psi_hat[0], psi_hat[1], psi_hat[2], 0.4, -0.3, 0.1;
  Vector ymis(2);
  ymis << 0.8, 1.2;
  double base_ll = m.extended_loglik(psi_hat, ymis, d);
  double mech_ll = mech.extended_loglik(psi6, ymis, d);
  double logistic = 0.0;
  for (int i = 0; i < d.n(); ++i) {
    const double x = d.covariate(i);
    const double eta = 0.4 - 0.3 * x + 0.1 * x * x;
    const double logp = eta < 0 ? eta - std::log1p(std::exp(eta))
                                : -std::log1p(std::exp(-eta));
    logistic += d.observed(i) ? logp : logp - eta;
  }
  CHECK(mech_ll == doctest::Approx(base_ll + logistic).epsilon(1e-12));
}

TEST_CASE("exponential regression model") {
  ModelSpec m = models::exponential_regression();
  Dataset d = with_covariate({-0.8, -0.1, 0.4, 0.9}, {0.7, 1.1, 2.6, 3.9},
                             {0.0, 0.6});

  // No closed-form MLE; the EM fixed point must be stationary for the closed
  // marginal likelihood, and must agree with a derivative-free maximizer.
  Vector start(2);
  start << 0.0, 0.0;
  const Vector fp = em_fixed_point(m, d, start);
  auto lm = [&](const Vector& p) { return m.closed_marginal_loglik(p, d); };
  const Vector g = numdiff::gradient_central4(lm, fp);
  CHECK(std::abs(g[0]) < 1e-9);
  CHECK(std::abs(g[1]) < 1e-9);

  auto nm = nelder_mead_maximize(lm, m.complete_case_init(d));
  REQUIRE(nm.converged);
  CHECK(nm.x[0] == doctest::Approx(fp[0]).epsilon(1e-5).scale(1.0));
  CHECK(nm.x[1] == doctest::Approx(fp[1]).epsilon(1e-5).scale(1.0));

  Vector psi(2);
  psi << 0.3, 0.8;
  check_canonical_is_mode(m, psi, d);
  CHECK(m.canonical_function(psi, d)[1] ==
        doctest::Approx(std::exp(0.3 + 0.8 * 0.6)));

  CHECK(m.true_eta(psi, 50) ==
        doctest::Approx(std::exp(0.3) * std::sinh(0.8) / 0.8).epsilon(1e-14));
  Vector flat(2);
  flat << 0.3, 0.0;
  CHECK(m.true_eta(flat, 50) == doctest::Approx(std::exp(0.3)).epsilon(1e-14));

  CHECK_THROWS_AS(m.validate_data(with_covariate({0.1}, {-1.0}, {})), DataError);
}

TEST_CASE("one-way random effects model") {
  ModelSpec m = models::one_way_mixed(4, 3);
  CHECK_THROWS_AS(models::one_way_mixed(1, 3), UsageError);

  // Data with visible between-group spread so the ML estimate is interior.
  Dataset d = grouped({{0.2, 0.5, 0.1},
                       {2.1, 2.6, 2.2},
                       {-1.0, -0.7, -1.3},
                       {0.9, 1.2, 1.1}});

  const Vector psi_hat = m.mle_oracle(d);

  // Closed-form ANOVA solution recomputed from scratch.
  const double mu = (0.2 + 0.5 + 0.1 + 2.1 + 2.6 + 2.2 - 1.0 - 0.7 - 1.3 + 0.9 +
                     1.2 + 1.1) / 12.0;
  std::vector<double> gm = {(0.2 + 0.5 + 0.1) / 3, (2.1 + 2.6 + 2.2) / 3,
                            (-1.0 - 0.7 - 1.3) / 3, (0.9 + 1.2 + 1.1) / 3};
  double ssw = 0.0, ssb = 0.0;
  const std::vector<std::vector<double>> rows = {{0.2, 0.5, 0.1},
                                                 {2.1, 2.6, 2.2},
                                                 {-1.0, -0.7, -1.3},
                                                 {0.9, 1.2, 1.1}};
  for (int g = 0; g < 4; ++g) {
    for (double y : rows[g]) ssw += (y - gm[g]) * (y - gm[g]);
    ssb += 3 * (gm[g] - mu) * (gm[g] - mu);
  }
  const double sigma2 = ssw / (12 - 4);
  const double lambda2 = (ssb / 4 - sigma2) / 3;
  REQUIRE(lambda2 > 0);
  CHECK(psi_hat[0] == doctest::Approx(mu).epsilon(1e-12));
  CHECK(psi_hat[1] == doctest::Approx(sigma2).epsilon(1e-12));
  CHECK(psi_hat[2] == doctest::Approx(lambda2).epsilon(1e-12));

  // Derivative-free cross-check on the closed marginal.
  auto lm = [&](const Vector& p) {
    if (p[1] <= 1e-8 || p[2] <= 1e-8) return -1e100;
    return m.closed_marginal_loglik(p, d);
  };
  Vector start(3);
  start << 0.0, 1.0, 1.0;
  auto nm = nelder_mead_maximize(lm, start);
  REQUIRE(nm.converged);
  for (int j = 0; j < 3; ++j) {
    CHECK(nm.x[j] == doctest::Approx(psi_hat[j]).epsilon(5e-6).scale(1.0));
  }

  // Canonical function = shrinkage predictors.
  Vector psi(3);
  psi << mu, sigma2, lambda2;
  const Vector u_tilde = m.canonical_function(psi, d);
  const double w = 3 * lambda2 / (sigma2 + 3 * lambda2);
  for (int g = 0; g < 4; ++g) {
    CHECK(u_tilde[g] == doctest::Approx(w * (gm[g] - mu)).epsilon(1e-12));
  }
  check_canonical_is_mode(m, psi, d);

  // h at the canonical mode differs from the marginal by a psi-free constant.
  const int q = 4;
  for (double mu_try : {mu - 0.5, mu, mu + 0.3}) {
    Vector p(3);
    p << mu_try, sigma2 * 1.2, lambda2 * 0.7;
    const Vector vmode = m.scale.forward(p, d, m.canonical_function(p, d));
    const double h = hlik(m, p, vmode, d).value;
    const double diff = h - m.closed_marginal_loglik(p, d);
    CHECK(diff == doctest::Approx(-q * 0.5 * std::log(2 * M_PI)).epsilon(1e-10));
  }

  // Degenerate layouts are rejected.
  CHECK_THROWS_AS(m.validate_data(grouped({{0.1, 0.2}, {0.3}})), DataError);
  CHECK_THROWS_AS(m.mle_oracle(grouped({{0.1, 0.2}, {0.11, 0.21}})),
                  BoundaryError);

  // Raw variant: shrinkage u survives but no marginal closed form is claimed.
  ModelSpec raw = models::one_way_mixed_raw(4, 3);
  CHECK(raw.scale.kind == ScaleKind::raw);
  CHECK_FALSE(static_cast<bool>(raw.closed_marginal_loglik));
  CHECK_FALSE(static_cast<bool>(raw.mle_oracle));
}

TEST_CASE("thresholded gaussian regression model") {
  const double c = 3.0;
  ModelSpec m = models::tobit(c);
  Dataset d = with_covariate({-0.8, -0.2, 0.3, 0.9}, {1.1, 2.0, 2.6, 2.9},
                             {0.5, 1.0});
  Vector psi(3);
  psi << 1.5, 1.0, 0.7;

  check_canonical_is_mode(m, psi, d, 1e-7);

  // Canonical point exceeds the threshold and solves t(t - m) = sigma2 with
  // m the centered fitted mean.
  const Vector y_tilde = m.canonical_function(psi, d);
  for (int i = 0; i < 2; ++i) {
    const double x = d.covariate(4 + i);
    const double mctr = 1.5 + 1.0 * x - c;
    const double t = y_tilde[i] - c;
    CHECK(t > 0);
    CHECK(t * (t - mctr) == doctest::Approx(0.7).epsilon(1e-10));
  }

  // h at the mode equals the closed marginal exactly, for every psi.
  for (double b0 : {1.2, 1.5, 1.9}) {
    Vector p(3);
    p << b0, 0.8, 0.5;
    const Vector vmode = m.scale.forward(p, d, m.canonical_function(p, d));
    const double h = hlik(m, p, vmode, d).value;
    CHECK(h == doctest::Approx(m.closed_marginal_loglik(p, d)).epsilon(1e-12));
  }

  CHECK_THROWS_AS(m.validate_data(with_covariate({0.1}, {3.4}, {})), DataError);
  CHECK(m.true_eta(psi, 10) == doctest::Approx(1.5 + 1.0 / 10).epsilon(1e-14));
}

TEST_CASE("simulation protocols are deterministic and respect mechanisms") {
  struct Case {
    ModelSpec model;
    Vector params;
  };
  std::vector<Case> cases;
  cases.push_back({models::exponential_mean(), vec1(2.0)});
  cases.push_back({models::censored_exponential(3.0), vec1(2.0)});
  {
    Vector p(3);
    p << 0.0, 1.0, 1.0;
    cases.push_back({models::normal_regression(), p});
  }
  {
    Vector p(2);
    p << 0.0, 1.0;
    cases.push_back({models::exponential_regression(), p});
  }
  {
    Vector p(3);
    p << 1.0, 2.0, 1.0;
    cases.push_back({models::tobit(3.0), p});
  }
  {
    Vector p(3);
    p << 0.5, 1.0, 0.5;
    cases.push_back({models::one_way_mixed(5, 4), p});
  }

  for (auto& c : cases) {
    CAPTURE(c.model.tag);
    const int n = c.model.tag == "mixed_oneway" ? 20 : 40;
    SimulatedData a = c.model.simulate(c.params, c.model.default_mechanism, n, 77);
    SimulatedData b = c.model.simulate(c.params, c.model.default_mechanism, n, 77);
    SimulatedData other =
        c.model.simulate(c.params, c.model.default_mechanism, n, 78);

    CHECK(a.data.n() == n);
    CHECK(a.data.response().head(a.data.n_obs()) ==
          b.data.response().head(b.data.n_obs()));
    CHECK(a.y_mis_true == b.y_mis_true);
    CHECK(a.complete_mean == b.complete_mean);
    bool differs = a.data.n_obs() != other.data.n_obs();
    if (!differs && a.data.n_obs() > 0) {
      differs = a.data.response()[0] != other.data.response()[0];
    }
    CHECK(differs);

    // The hidden truth has the right shape and the data validate.
    CHECK(a.y_mis_true.size() == a.data.n_mis());
    c.model.validate_data(a.data);

    // Scoring identity: complete mean = (sum observed + sum hidden) / n.
    const double recon = (a.data.sum_observed() + a.y_mis_true.sum()) / n;
    CHECK(recon == doctest::Approx(a.complete_mean).epsilon(1e-12));
  }

  // Threshold censoring: every observed value is below c, every hidden one
  // above.
  ModelSpec cm = models::censored_exponential(3.0);
  SimulatedData s = cm.simulate(vec1(2.0), cm.default_mechanism, 200, 5);
  CHECK(s.data.observed_response().maxCoeff() <= 3.0);
  CHECK(s.y_mis_true.minCoeff() > 3.0);
  CHECK(s.data.n_mis() > 0);

  // Logistic mechanism: missingness depends on x only; both groups non-empty
  // at this size.
  ModelSpec nr = models::normal_regression();
  Vector p3(3);
  p3 << 0.0, 1.0, 1.0;
  SimulatedData sn = nr.simulate(p3, nr.default_mechanism, 300, 11);
  CHECK(sn.data.n_mis() > 10);
  CHECK(sn.data.n_obs() > 150);

  // Mixed model records the realized random effects.
  ModelSpec mm = models::one_way_mixed(5, 4);
  Vector pm(3);
  pm << 0.5, 1.0, 0.5;
  SimulatedData sm = mm.simulate(pm, mm.default_mechanism, 20, 3);
  CHECK(sm.random_true.size() == 5);
  CHECK(sm.data.n_mis() == 0);

  // Fixed grid for the thresholded regression: x_i = -1 + 2 i / n.
  ModelSpec tb = models::tobit(3.0);
  Vector pt(3);
  pt << 1.0, 2.0, 1.0;
  SimulatedData st = tb.simulate(pt, tb.default_mechanism, 10, 9);
  // Rows are reordered observed-first; the multiset of covariates is the grid.
  std::vector<double> xs;
  for (int i = 0; i < 10; ++i) xs.push_back(st.data.covariate(i));
  std::sort(xs.begin(), xs.end());
  for (int i = 0; i < 10; ++i) {
    CHECK(xs[i] == doctest::Approx(-1.0 + 2.0 * (i + 1) / 10).epsilon(1e-14));
  }
}

TEST_CASE("full support scales for the laplace construction") {
  CHECK(models::default_b_scale(models::exponential_mean()).name ==
        ScaleTransform::log_scale().name);
  ModelSpec tb = models::tobit(2.0);
  const ScaleTransform b = models::default_b_scale(tb);
  Dataset d = with_covariate({0.0}, {1.0}, {0.5});
  Vector y(1);
  y << 2.5;
  CHECK(b.forward(Vector::Zero(3), d, y)[0] == doctest::Approx(std::log(0.5)));
  ModelSpec mixed = models::one_way_mixed();
  // Gaussian random effects already live on the whole line.
  CHECK(models::default_b_scale(mixed).log_jacobian(Vector::Zero(3), d, y) == 0.0);
}
