#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "hilma/errors.hpp"
#include "hilma/models.hpp"
#include "hilma/rng.hpp"
#include "hilma/stats.hpp"
#include "model_internal.hpp"

namespace hilma {
namespace models {

namespace {

// Balanced layout read off the data: covariate 0 holds the group id.
struct Layout {
  int q = 0;
  int n_per = 0;
  Vector group_sum;   // per-group response totals
  Vector group_mean;
  double grand_mean = 0;
  double ssw = 0;     // within-group sum of squares
};

Layout layout_of(const Dataset& data) {
  detail::require_covariate(data, "mixed_oneway");
  if (data.n_mis() != 0) {
    throw DataError("mixed_oneway expects a fully observed response; the "
                    "random parameters are the group effects, not missing "
                    "responses");
  }
  int q = 0;
  for (int i = 0; i < data.n(); ++i) {
    const double g = data.covariate(i, 0);
    if (g != std::floor(g) || g < 0) {
      throw DataError("row " + std::to_string(i) + ": group id " +
                      std::to_string(g) + " is not a nonnegative integer");
    }
    q = std::max(q, static_cast<int>(g) + 1);
  }
  std::vector<int> count(static_cast<std::size_t>(q), 0);
  Layout lay;
  lay.q = q;
  lay.group_sum = Vector::Zero(q);
  for (int i = 0; i < data.n(); ++i) {
    const int g = static_cast<int>(data.covariate(i, 0));
    ++count[static_cast<std::size_t>(g)];
    lay.group_sum[g] += data.response()[i];
  }
  for (int g = 0; g < q; ++g) {
    if (count[static_cast<std::size_t>(g)] == 0) {
      throw DataError("group " + std::to_string(g) + " has no rows; group ids "
                      "must be contiguous 0..q-1");
    }
    if (count[static_cast<std::size_t>(g)] != count[0]) {
      throw DataError("unbalanced layout: group 0 has " +
                      std::to_string(count[0]) + " rows but group " +
                      std::to_string(g) + " has " +
                      std::to_string(count[static_cast<std::size_t>(g)]));
    }
  }
  lay.n_per = count[0];
  if (lay.q < 2 || lay.n_per < 2) {
    throw DataError("variance components are not identifiable: need at least "
                    "2 groups and 2 replicates per group, got q=" +
                    std::to_string(lay.q) + ", n_per=" +
                    std::to_string(lay.n_per));
  }
  lay.group_mean = lay.group_sum / lay.n_per;
  lay.grand_mean = lay.group_sum.sum() / data.n();
  for (int i = 0; i < data.n(); ++i) {
    const int g = static_cast<int>(data.covariate(i, 0));
    const double r = data.response()[i] - lay.group_mean[g];
    lay.ssw += r * r;
  }
  return lay;
}

// sqrt((sigma2 + n lambda2) / (sigma2 lambda2)): the scaling that makes the
// joint maximizer match maximum likelihood.
double scale_factor(const Vector& psi, int n_per) {
  const double s = psi[1], l = psi[2];
  return std::sqrt((s + n_per * l) / (s * l));
}

double joint_loglik(const Vector& psi, const Vector& u, const Dataset& data) {
  const double mu = psi[0], s = psi[1], l = psi[2];
  const int q = static_cast<int>(u.size());
  double quad = 0;
  for (int i = 0; i < data.n(); ++i) {
    const int g = static_cast<int>(data.covariate(i, 0));
    if (g >= q) {
      throw UsageError("random-effect vector has dimension " +
                       std::to_string(q) + " but the data references group " +
                       std::to_string(g));
    }
    const double r = data.response()[i] - mu - u[g];
    quad += r * r;
  }
  return -data.n() * (kLogSqrt2Pi + 0.5 * std::log(s)) - quad / (2.0 * s) -
         q * (kLogSqrt2Pi + 0.5 * std::log(l)) - u.squaredNorm() / (2.0 * l);
}

Vector shrinkage_mode(const Vector& psi, const Dataset& data) {
  const Layout lay = layout_of(data);
  const double mu = psi[0], s = psi[1], l = psi[2];
  const double w = lay.n_per * l / (s + lay.n_per * l);
  return (w * (lay.group_mean.array() - mu)).matrix();
}

// Pieces shared by the analytic h-gradients of both scale variants:
// derivatives of the extended log-likelihood in (theta, u).
struct ExtendedGrad {
  Vector d_u;      // per-group score in u
  double d_mu = 0;
  double d_s2 = 0;
  double d_l2 = 0;
};

ExtendedGrad extended_grad(const Vector& psi, const Vector& u, const Layout& lay,
                           int n_rows) {
  const double mu = psi[0], s = psi[1], l = psi[2];
  ExtendedGrad g;
  g.d_u.resize(lay.q);
  double rss = lay.ssw;
  for (int i = 0; i < lay.q; ++i) {
    const double d = lay.group_mean[i] - mu - u[i];
    g.d_u[i] = lay.n_per * d / s - u[i] / l;
    g.d_mu += lay.n_per * d / s;
    rss += lay.n_per * d * d;
  }
  g.d_s2 = -0.5 * n_rows / s + rss / (2.0 * s * s);
  g.d_l2 = -0.5 * lay.q / l + u.squaredNorm() / (2.0 * l * l);
  return g;
}

Vector moment_init(const Dataset& data) {
  const Layout lay = layout_of(data);
  const int n_rows = data.n();
  double ssb = 0;
  for (int g = 0; g < lay.q; ++g) {
    const double d = lay.group_mean[g] - lay.grand_mean;
    ssb += lay.n_per * d * d;
  }
  const double sigma2 = std::max(lay.ssw / (n_rows - lay.q), 1e-8);
  const double lambda2 = std::max((ssb / lay.q - sigma2) / lay.n_per,
                                  1e-3 * sigma2);
  Vector psi(3);
  psi << lay.grand_mean, sigma2, lambda2;
  return psi;
}

ModelSpec mixed_base(int groups, int per_group) {
  if (groups < 2 || per_group < 2) {
    throw UsageError("variance components are not identifiable: need at least "
                     "2 groups and 2 replicates per group, got q=" +
                     std::to_string(groups) + ", n_per=" +
                     std::to_string(per_group));
  }
  ModelSpec m;
  m.tag = "mixed_oneway";
  m.param_dim = 3;
  m.param_domain = {ParamDomain::real_line, ParamDomain::positive,
                    ParamDomain::positive};
  m.param_names = {"mu", "sigma2", "lambda2"};
  m.vv_structure = VvStructure::diagonal;

  m.extended_loglik = joint_loglik;
  m.random_dim = [](const Dataset& data) { return layout_of(data).q; };

  m.grad_y = [](const Vector& psi, const Vector& u, const Dataset& data) {
    const Layout lay = layout_of(data);
    const double mu = psi[0], s = psi[1], l = psi[2];
    Vector g(u.size());
    for (int i = 0; i < lay.q; ++i) {
      g[i] = (lay.group_sum[i] - lay.n_per * (mu + u[i])) / s - u[i] / l;
    }
    return g;
  };
  m.hess_y_diag = [](const Vector& psi, const Vector& u, const Dataset& data) {
    const Layout lay = layout_of(data);
    return Vector::Constant(u.size(), -(lay.n_per / psi[1] + 1.0 / psi[2]))
        .eval();
  };

  m.canonical_function = shrinkage_mode;
  m.complete_case_init = moment_init;
  m.validate_data = [](const Dataset& data) { layout_of(data); };
  m.default_mechanism = MissingnessMechanism::none_observed_all();
  m.full_support_scale = ScaleTransform::raw_scale();

  const int q_default = groups, n_default = per_group;
  m.simulate = [q_default, n_default](const Vector& params,
                                      const MissingnessMechanism& mech, int n,
                                      std::uint64_t seed) {
    if (mech.kind != MissingnessMechanism::Kind::none) {
      throw UsageError("the one-way layout is fully observed; no missingness "
                       "mechanism applies");
    }
    int n_per = n_default;
    int q = q_default;
    if (n != q_default * n_default) {
      if (n % n_default != 0 || n / n_default < 2) {
        throw UsageError("simulation size " + std::to_string(n) +
                         " is not a multiple of the per-group size " +
                         std::to_string(n_default));
      }
      q = n / n_default;
    }
    const double mu = params[0];
    const double sigma = std::sqrt(params[1]);
    const double lambda = std::sqrt(params[2]);
    Rng rng(seed);
    const int total = q * n_per;
    Matrix x(total, 1);
    Vector y(total);
    Vector u(q);
    int row = 0;
    for (int g = 0; g < q; ++g) {
      u[g] = lambda * rng.normal();
      for (int j = 0; j < n_per; ++j, ++row) {
        x(row, 0) = g;
        y[row] = mu + u[g] + sigma * rng.normal();
      }
    }
    auto sim = detail::assemble_simulated(
        x, y, std::vector<std::uint8_t>(static_cast<std::size_t>(total), 1));
    sim.random_true = u;
    return sim;
  };

  m.true_eta = [](const Vector& params, int) { return params[0]; };
  return m;
}

}  // namespace

ModelSpec one_way_mixed(int groups, int per_group) {
  ModelSpec m = mixed_base(groups, per_group);

  // v = a(psi) u with a = sqrt((sigma2 + n lambda2)/(sigma2 lambda2)). The
  // per-coordinate Jacobian du/dv = 1/a is constant in v but moves with psi.
  ScaleTransform s;
  s.kind = ScaleKind::canonical;
  s.name = "scaled_random_effect";
  s.forward = [](const Vector& psi, const Dataset& data, const Vector& u) {
    return (scale_factor(psi, layout_of(data).n_per) * u).eval();
  };
  s.inverse = [](const Vector& psi, const Dataset& data, const Vector& v) {
    return (v / scale_factor(psi, layout_of(data).n_per)).eval();
  };
  s.log_jacobian = [](const Vector& psi, const Dataset& data, const Vector& u) {
    return -static_cast<double>(u.size()) *
           std::log(scale_factor(psi, layout_of(data).n_per));
  };
  s.dy_dv = [](const Vector& psi, const Dataset& data, const Vector& v) {
    return Vector::Constant(v.size(),
                            1.0 / scale_factor(psi, layout_of(data).n_per))
        .eval();
  };
  s.d2y_dv2 = [](const Vector&, const Dataset&, const Vector& v) {
    return Vector::Zero(v.size()).eval();
  };
  s.dlogjac_dv = [](const Vector&, const Dataset&, const Vector& v) {
    return Vector::Zero(v.size()).eval();
  };
  s.d2logjac_dv2 = [](const Vector&, const Dataset&, const Vector& v) {
    return Vector::Zero(v.size()).eval();
  };
  m.scale = s;

  // h(theta, v) = l_e(theta, v/a) - q log a with a = a(theta): holding v fixed
  // drags u = v/a along, and the Jacobian term moves too. Both effects enter
  // the theta-gradient through dlog a/dtheta.
  m.h_gradient = [](const Vector& psi, const Vector& v, const Dataset& data,
                    Vector& g_psi, Vector& g_v) {
    const Layout lay = layout_of(data);
    const double s = psi[1], l = psi[2];
    const double a = scale_factor(psi, lay.n_per);
    const Vector u = v / a;
    const ExtendedGrad eg = extended_grad(psi, u, lay, data.n());
    g_v = eg.d_u / a;
    const double tau = s + lay.n_per * l;
    const double dloga_ds = 0.5 * (1.0 / tau - 1.0 / s);
    const double dloga_dl = 0.5 * (lay.n_per / tau - 1.0 / l);
    const double drag = u.dot(eg.d_u) + lay.q;
    g_psi.resize(3);
    g_psi << eg.d_mu, eg.d_s2 - dloga_ds * drag, eg.d_l2 - dloga_dl * drag;
  };

  m.closed_marginal_loglik = [](const Vector& psi, const Dataset& data) {
    const Layout lay = layout_of(data);
    const double mu = psi[0], s2 = psi[1], l2 = psi[2];
    const double tau = s2 + lay.n_per * l2;
    double total = -data.n() * kLogSqrt2Pi -
                   0.5 * (data.n() - lay.q) * std::log(s2) -
                   0.5 * lay.q * std::log(tau) - lay.ssw / (2.0 * s2);
    for (int g = 0; g < lay.q; ++g) {
      const double d = lay.group_mean[g] - mu;
      total -= lay.n_per * d * d / (2.0 * tau);
    }
    return total;
  };

  m.mle_oracle = [](const Dataset& data) {
    const Layout lay = layout_of(data);
    double ssb = 0;
    for (int g = 0; g < lay.q; ++g) {
      const double d = lay.group_mean[g] - lay.grand_mean;
      ssb += lay.n_per * d * d;
    }
    const double sigma2 = lay.ssw / (data.n() - lay.q);
    const double lambda2 = (ssb / lay.q - sigma2) / lay.n_per;
    if (lambda2 <= 0) {
      throw BoundaryError("the ML estimate of the group variance is on the "
                          "boundary lambda2 = 0; no interior maximum exists");
    }
    Vector psi(3);
    psi << lay.grand_mean, sigma2, lambda2;
    return psi;
  };

  m.normalizing = ModelSpec::Normalizing{
      true, "reports are on the random-effect scale itself"};
  return m;
}

ModelSpec one_way_mixed_raw(int groups, int per_group) {
  ModelSpec m = mixed_base(groups, per_group);
  m.tag = "mixed_oneway_raw";
  m.scale = ScaleTransform::raw_scale();
  // The u-mode at fixed psi is the same shrinkage predictor; what changes is
  // the profile in (sigma2, lambda2), which lacks the Jacobian correction and
  // therefore does not maximize the marginal likelihood.
  m.h_gradient = [](const Vector& psi, const Vector& u, const Dataset& data,
                    Vector& g_psi, Vector& g_v) {
    const Layout lay = layout_of(data);
    const ExtendedGrad eg = extended_grad(psi, u, lay, data.n());
    g_v = eg.d_u;
    g_psi.resize(3);
    g_psi << eg.d_mu, eg.d_s2, eg.d_l2;
  };
  return m;
}

}  // namespace models
}  // namespace hilma
