#include "pdmp/catalog.hpp"

#include <cmath>
#include <set>

#include "pdmp/error.hpp"

namespace pdmp::catalog {

namespace {

/// Reads typed values out of a record and rejects whatever is left over.
class Reader {
 public:
  Reader(std::string model, const ParamRecord& r) : model_(std::move(model)), r_(r) {}

  double number(const std::string& key, double fallback) {
    auto it = find(key);
    if (it == r_.end()) return fallback;
    if (const double* v = std::get_if<double>(&it->second)) return *v;
    throw Error(ErrorKind::ConfigError, model_ + ": parameter '" + key + "' must be a number", key);
  }

  std::size_t count(const std::string& key, std::size_t fallback) {
    const double v = number(key, static_cast<double>(fallback));
    if (!(v >= 1.0) || v != std::floor(v) || v > 9.0e15) {
      throw Error(ErrorKind::ConfigError, model_ + ": parameter '" + key + "' must be a positive integer", key);
    }
    return static_cast<std::size_t>(v);
  }

  ScalarFunction function(const std::string& key, const ScalarFunction& fallback) {
    auto it = find(key);
    if (it == r_.end()) return fallback;
    if (const double* v = std::get_if<double>(&it->second)) return ScalarFunction(*v);
    try {
      return ScalarFunction::parse(std::get<std::string>(it->second));
    } catch (const Error& e) {
      throw Error(ErrorKind::ConfigError, model_ + ": parameter '" + key + "': " + e.what(), key);
    }
  }

  std::string text(const std::string& key, const std::string& fallback) {
    auto it = find(key);
    if (it == r_.end()) return fallback;
    if (const std::string* v = std::get_if<std::string>(&it->second)) return *v;
    throw Error(ErrorKind::ConfigError, model_ + ": parameter '" + key + "' must be a string", key);
  }

  /// Throws for the first key that was never read.
  void finish() const {
    for (const auto& [k, v] : r_) {
      if (!used_.count(k)) throw Error(ErrorKind::ConfigError, model_ + ": unknown parameter '" + k + "'", k);
    }
  }

 private:
  ParamRecord::const_iterator find(const std::string& key) {
    used_.insert(key);
    return r_.find(key);
  }

  std::string model_;
  const ParamRecord& r_;
  std::set<std::string> used_;
};

}  // namespace

const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names{"grasshopper", "telegraph", "cell_cycle_1p", "rubinow",
                                              "cell_cycle_2p", "gene_expression", "stein", "allee",
                                              "birth_switch", "population"};
  return names;
}

models::GrasshopperParams grasshopper_params(const ParamRecord& r) {
  Reader rd("grasshopper", r);
  models::GrasshopperParams p;
  p.lambda = rd.number("lambda", p.lambda);
  const std::string kind = rd.text("jump", "zero");
  using K = models::JumpLaw::Kind;
  if (kind == "zero") {
    p.jump.kind = K::Zero;
  } else if (kind == "two_point") {
    p.jump.kind = K::TwoPoint;
    p.jump.a = rd.number("jump_size", 1.0);
  } else if (kind == "normal") {
    p.jump.kind = K::Normal;
    p.jump.a = rd.number("jump_mean", 0.0);
    p.jump.b = rd.number("jump_sd", 1.0);
  } else if (kind == "uniform") {
    p.jump.kind = K::Uniform;
    p.jump.a = rd.number("jump_lo", -1.0);
    p.jump.b = rd.number("jump_hi", 1.0);
  } else {
    throw Error(ErrorKind::ConfigError, "grasshopper: jump must be zero, two_point, normal or uniform", "jump");
  }
  rd.finish();
  return p;
}

models::TelegraphParams telegraph_params(const ParamRecord& r) {
  Reader rd("telegraph", r);
  models::TelegraphParams p;
  p.lambda = rd.number("lambda", p.lambda);
  p.c = rd.number("c", p.c);
  rd.finish();
  return p;
}

models::OnePhaseCellCycleParams cell_cycle_1p_params(const ParamRecord& r) {
  Reader rd("cell_cycle_1p", r);
  models::OnePhaseCellCycleParams p;
  p.g = rd.function("g", p.g);
  p.phi = rd.function("phi", p.phi);
  rd.finish();
  return p;
}

models::RubinowParams rubinow_params(const ParamRecord& r) {
  Reader rd("rubinow", r);
  models::RubinowParams p;
  p.g = rd.function("g", p.g);
  p.m = rd.number("m", p.m);
  rd.finish();
  return p;
}

models::TwoPhaseCellCycleParams cell_cycle_2p_params(const ParamRecord& r) {
  Reader rd("cell_cycle_2p", r);
  models::TwoPhaseCellCycleParams p;
  p.g = rd.function("g", p.g);
  p.phi = rd.function("phi", p.phi);
  p.t_B = rd.number("t_B", p.t_B);
  rd.finish();
  return p;
}

models::GeneExpressionParams gene_params(const ParamRecord& r) {
  Reader rd("gene_expression", r);
  models::GeneExpressionParams p;
  p.P = rd.number("P", p.P);
  p.mu = rd.number("mu", p.mu);
  p.q0 = rd.function("q0", p.q0);
  p.q1 = rd.function("q1", p.q1);
  rd.finish();
  return p;
}

models::SteinParams stein_params(const ParamRecord& r) {
  Reader rd("stein", r);
  models::SteinParams p;
  p.alpha = rd.number("alpha", p.alpha);
  p.a_E = rd.number("a_E", p.a_E);
  p.a_I = rd.number("a_I", p.a_I);
  p.lambda_E = rd.number("lambda_E", p.lambda_E);
  p.lambda_I = rd.number("lambda_I", p.lambda_I);
  p.theta = rd.number("theta", p.theta);
  p.t_R = rd.number("t_R", p.t_R);
  rd.finish();
  return p;
}

models::AlleeParams allee_params(const ParamRecord& r) {
  Reader rd("allee", r);
  models::AlleeParams p;
  p.lambda = rd.number("lambda", p.lambda);
  p.K = rd.number("K", p.K);
  p.A = rd.number("A", p.A);
  p.B = rd.number("B", p.B);
  p.q01 = rd.function("q01", p.q01);
  p.q10 = rd.function("q10", p.q10);
  rd.finish();
  return p;
}

models::BirthSwitchParams birth_switch_params(const ParamRecord& r) {
  Reader rd("birth_switch", r);
  models::BirthSwitchParams p;
  p.b0 = rd.number("b0", p.b0);
  p.b1 = rd.number("b1", p.b1);
  p.c = rd.number("c", p.c);
  p.mu = rd.number("mu", p.mu);
  p.q0 = rd.function("q0", p.q0);
  p.q1 = rd.function("q1", p.q1);
  rd.finish();
  return p;
}

models::PopulationParams population_params(const ParamRecord& r) {
  Reader rd("population", r);
  models::PopulationParams p;
  p.g = rd.function("g", p.g);
  p.b = rd.function("b", p.b);
  p.d = rd.function("d", p.d);
  p.max_cells = rd.count("max_cells", p.max_cells);
  rd.finish();
  return p;
}

PdmpModel build_model(const std::string& name, const ParamRecord& params) {
  if (name == "grasshopper") return models::make_grasshopper(grasshopper_params(params));
  if (name == "telegraph") return models::make_telegraph(telegraph_params(params));
  if (name == "cell_cycle_1p") return models::make_cell_cycle_one_phase(cell_cycle_1p_params(params));
  if (name == "rubinow") return models::make_rubinow(rubinow_params(params));
  if (name == "cell_cycle_2p") return models::make_two_phase_cell_cycle(cell_cycle_2p_params(params));
  if (name == "gene_expression") return models::make_gene_expression(gene_params(params));
  if (name == "stein") return models::make_stein(stein_params(params));
  if (name == "allee") return models::make_allee(allee_params(params));
  if (name == "birth_switch") return models::make_birth_switch(birth_switch_params(params));
  if (name == "population") {
    throw Error(ErrorKind::ConfigError, "population runs through the population command, not as a PDMP", "model");
  }
  throw Error(ErrorKind::ConfigError, "unknown model '" + name + "'", "model");
}

ProcessState default_initial_state(const std::string& name, const ParamRecord& params) {
  if (name == "grasshopper") return {{0.0}, 0, 0.0};
  if (name == "telegraph") return {{0.0, telegraph_params(params).c}, 0, 0.0};
  if (name == "cell_cycle_1p") return {{1.0}, 0, 0.0};
  if (name == "rubinow") return {{rubinow_params(params).m}, 0, 0.0};
  if (name == "cell_cycle_2p") return {{1.0, 0.0}, 0, 0.0};
  if (name == "gene_expression") return {{0.0}, 0, 0.0};
  if (name == "stein") return {{0.0, 0.0}, 0, 0.0};
  if (name == "allee") {
    const auto p = allee_params(params);
    return {{0.5 * (models::allee_equilibria(p).second + p.K)}, 0, 0.0};
  }
  if (name == "birth_switch") {
    const auto p = birth_switch_params(params);
    return {{0.5 * (p.b1 - p.mu) / p.c}, 0, 0.0};
  }
  throw Error(ErrorKind::ConfigError, "unknown model '" + name + "'", "model");
}

std::optional<switching::SwitchingSystem1D> switching_system(const std::string& name, const ParamRecord& params) {
  if (name == "gene_expression") {
    const auto p = gene_params(params);
    (void)models::make_gene_expression(p);  // validates
    return models::switching_system(p);
  }
  if (name == "birth_switch") {
    const auto p = birth_switch_params(params);
    (void)models::make_birth_switch(p);
    return models::switching_system(p);
  }
  if (name == "allee") {
    const auto p = allee_params(params);
    (void)models::make_allee(p);
    return models::switching_system(p);
  }
  return std::nullopt;
}

std::optional<switching::Derivatives> switching_derivatives(const std::string& name, const ParamRecord& params) {
  if (name == "birth_switch") return models::switching_derivatives(birth_switch_params(params));
  if (name == "gene_expression") {
    const double mu = gene_params(params).mu;
    return switching::Derivatives{-mu, -mu, -mu, -mu};
  }
  return std::nullopt;
}

}  // namespace pdmp::catalog
