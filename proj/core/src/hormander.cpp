#include "pdmp/hormander.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include <Eigen/Dense>

#include "pdmp/error.hpp"

namespace pdmp::hormander {

namespace {

/// A vector field with a way to get its Jacobian at a point.
struct Field {
  std::function<void(std::span<const double>, std::span<double>)> value;
  std::function<void(std::span<const double>, std::span<double>)> jacobian;
  std::string label;
};

void check_finite(std::span<const double> v, const std::string& what) {
  for (double a : v) {
    if (!std::isfinite(a)) throw Error(ErrorKind::NonFinite, "non-finite value in " + what);
  }
}

Field bracket(std::shared_ptr<const Field> a, std::shared_ptr<const Field> b, std::size_t d) {
  Field out;
  out.label = "[" + a->label + "," + b->label + "]";
  out.value = [a, b, d](std::span<const double> x, std::span<double> res) {
    State va(d), vb(d), ja(d * d), jb(d * d);
    a->value(x, va);
    b->value(x, vb);
    a->jacobian(x, ja);
    b->jacobian(x, jb);
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += va[k] * jb[j * d + k] - vb[k] * ja[j * d + k];
      res[j] = s;
    }
  };
  auto value = out.value;
  out.jacobian = [value, d](std::span<const double> x, std::span<double> jac) {
    State xp(x.begin(), x.end()), xm(x.begin(), x.end()), fp(d), fm(d);
    for (std::size_t k = 0; k < d; ++k) {
      const double h = 1e-4 * (1.0 + std::abs(x[k]));
      xp[k] = x[k] + h;
      xm[k] = x[k] - h;
      value(xp, fp);
      value(xm, fm);
      for (std::size_t i = 0; i < d; ++i) jac[i * d + k] = (fp[i] - fm[i]) / (2.0 * h);
      xp[k] = x[k];
      xm[k] = x[k];
    }
  };
  return out;
}

}  // namespace

std::size_t numerical_rank(const std::vector<State>& vectors, std::size_t dimension, double tol,
                           std::vector<double>* singular_values) {
  if (vectors.empty() || dimension == 0) {
    if (singular_values) singular_values->clear();
    return 0;
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(dimension), static_cast<Eigen::Index>(vectors.size()));
  double scale = 0.0;
  for (std::size_t c = 0; c < vectors.size(); ++c) {
    for (std::size_t r = 0; r < dimension; ++r) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = vectors[c][r];
      scale = std::max(scale, std::abs(vectors[c][r]));
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const Eigen::VectorXd s = svd.singularValues();
  if (singular_values) singular_values->assign(s.data(), s.data() + s.size());
  if (s.size() == 0 || s(0) == 0.0) return 0;
  // Relative threshold plus a floor that treats roundoff-level columns as zero.
  const double threshold = std::max(tol * s(0), 1e-13 * std::max(1.0, scale));
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > threshold) ++rank;
  }
  return rank;
}

HormanderResult hormander_check(const std::vector<Flow>& fields, std::span<const double> x, int depth,
                                double tol) {
  if (fields.empty()) throw Error(ErrorKind::InvalidParam, "hormander_check needs at least one field");
  if (depth < 1) throw Error(ErrorKind::InvalidParam, "bracket depth must be at least 1");
  const std::size_t d = fields.front().dimension();
  for (const auto& f : fields) {
    if (f.dimension() != d) throw Error(ErrorKind::InvalidParam, "fields must share one dimension");
  }
  if (x.size() != d) throw Error(ErrorKind::InvalidParam, "point dimension does not match the fields");

  std::vector<std::shared_ptr<const Field>> base;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const Flow* flow = &fields[i];
    Field f;
    f.label = "g" + std::to_string(i + 1);
    f.value = [flow](std::span<const double> p, std::span<double> out) { flow->rhs(p, out); };
    f.jacobian = [flow](std::span<const double> p, std::span<double> jac) { flow->jacobian(p, jac); };
    base.push_back(std::make_shared<const Field>(std::move(f)));
  }

  HormanderResult res;
  res.dimension = d;
  auto emit = [&](const Field& f) {
    State v(d);
    f.value(x, v);
    check_finite(v, f.label);
    res.directions.push_back(std::move(v));
    res.labels.push_back(f.label);
  };

  State g1(d), gi(d);
  base[0]->value(x, g1);
  check_finite(g1, "g1");
  for (std::size_t i = 1; i < base.size(); ++i) {
    base[i]->value(x, gi);
    check_finite(gi, base[i]->label);
    State diff(d);
    for (std::size_t k = 0; k < d; ++k) diff[k] = gi[k] - g1[k];
    res.directions.push_back(std::move(diff));
    res.labels.push_back(base[i]->label + "-g1");
  }

  std::vector<std::shared_ptr<const Field>> level;
  if (depth >= 2) {
    for (std::size_t i = 0; i < base.size(); ++i) {
      for (std::size_t j = i + 1; j < base.size(); ++j) {
        auto b = std::make_shared<const Field>(bracket(base[i], base[j], d));
        emit(*b);
        level.push_back(std::move(b));
      }
    }
  }
  for (int lev = 3; lev <= depth; ++lev) {
    std::vector<std::shared_ptr<const Field>> next;
    for (const auto& g : base) {
      for (const auto& inner : level) {
        auto b = std::make_shared<const Field>(bracket(g, inner, d));
        emit(*b);
        next.push_back(std::move(b));
      }
    }
    level = std::move(next);
  }

  res.rank = numerical_rank(res.directions, d, tol, &res.singular_values);
  res.holds = res.rank == d;
  return res;
}

PositivityReport intensity_positivity_check(const std::vector<std::vector<ScalarField>>& q,
                                            const std::function<State(Rng&)>& region, std::size_t n,
                                            std::uint64_t seed) {
  if (!region) throw Error(ErrorKind::InvalidParam, "positivity check needs a region sampler");
  PositivityReport rep;
  rep.minimum = std::numeric_limits<double>::infinity();
  Rng rng(seed);
  for (std::size_t s = 0; s < n; ++s) {
    const State x = region(rng);
    for (std::size_t i = 0; i < q.size(); ++i) {
      for (std::size_t j = 0; j < q[i].size(); ++j) {
        if (i == j || !q[i][j]) continue;
        const double v = q[i][j](x);
        if (v < rep.minimum || std::isnan(v)) {
          rep.minimum = v;
          rep.argmin = x;
        }
      }
    }
  }
  rep.samples = n;
  rep.positive = n > 0 && rep.minimum > 0.0;
  return rep;
}

}  // namespace pdmp::hormander
