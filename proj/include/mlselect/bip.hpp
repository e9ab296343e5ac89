#ifndef MLSELECT_BIP_HPP
#define MLSELECT_BIP_HPP

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlselect/util.hpp"

namespace mlselect::bip {

// Exact arithmetic for objective and constraint evaluation. Doubles convert
// losslessly (every finite double is a binary rational), so feasibility and
// optimality decisions never depend on floating-point rounding.
using Rational = boost::multiprecision::cpp_rational;

inline Rational to_rational(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("coefficient must be finite");
  return Rational(v);
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

enum class Sense { minimize, maximize };
enum class Relation { le, ge, eq };

struct Term {
  int var = 0;
  Rational coeff;
};

struct LinearConstraint {
  std::vector<Term> terms;
  Relation rel = Relation::le;
  Rational rhs;
};

/// A 0/1 integer program: optimize objective . x subject to linear
/// constraints, x binary.
struct BooleanProgram {
  int num_vars = 0;
  Sense sense = Sense::minimize;
  std::vector<Rational> objective;  // one coefficient per variable
  std::vector<LinearConstraint> constraints;

  void validate() const {
    if (num_vars < 0) throw std::invalid_argument("num_vars must be >= 0");
    if (static_cast<int>(objective.size()) != num_vars)
      throw std::invalid_argument("objective length must equal num_vars");
    std::vector<int> stamp(static_cast<std::size_t>(num_vars), -1);
    for (std::size_t c = 0; c < constraints.size(); ++c) {
      for (const Term& t : constraints[c].terms) {
        if (t.var < 0 || t.var >= num_vars)
          throw std::invalid_argument("constraint " + std::to_string(c) +
                                      ": variable index out of range");
        if (stamp[static_cast<std::size_t>(t.var)] == static_cast<int>(c))
          throw std::invalid_argument("constraint " + std::to_string(c) +
                                      ": duplicate variable index");
        stamp[static_cast<std::size_t>(t.var)] = static_cast<int>(c);
      }
    }
  }
};

enum class SolveStatus { optimal, infeasible };

struct BipSolution {
  SolveStatus status = SolveStatus::infeasible;
  std::vector<std::uint8_t> assignment;  // empty unless optimal
  Rational objective_value = 0;

  double objective_as_double() const { return to_double(objective_value); }
};

/// Exact check that an assignment satisfies every constraint as stated.
inline bool satisfies(const BooleanProgram& program, const std::vector<std::uint8_t>& x) {
  if (static_cast<int>(x.size()) != program.num_vars) return false;
  for (const LinearConstraint& c : program.constraints) {
    Rational lhs = 0;
    for (const Term& t : c.terms)
      if (x[static_cast<std::size_t>(t.var)]) lhs += t.coeff;
    switch (c.rel) {
      case Relation::le: if (lhs > c.rhs) return false; break;
      case Relation::ge: if (lhs < c.rhs) return false; break;
      case Relation::eq: if (lhs != c.rhs) return false; break;
    }
  }
  return true;
}

inline Rational objective_value(const BooleanProgram& program, const std::vector<std::uint8_t>& x) {
  Rational v = 0;
  for (int i = 0; i < program.num_vars; ++i)
    if (x[static_cast<std::size_t>(i)]) v += program.objective[static_cast<std::size_t>(i)];
  return v;
}

namespace detail {

// Branch-and-bound over a minimize-form objective. Branching is on the
// lowest-index undecided variable, value 1 first; the first optimum found is
// kept, which pins the returned assignment for reproducible reports.
class BnbSolver {
 public:
  BnbSolver(const BooleanProgram& program, std::vector<Rational> min_objective)
      : prog_(program), obj_(std::move(min_objective)) {}

  bool run(std::vector<std::uint8_t>& best_out, Rational& value_out) {
    std::vector<std::int8_t> value(static_cast<std::size_t>(prog_.num_vars), -1);
    dfs(std::move(value));
    if (!have_best_) return false;
    best_out = best_;
    value_out = best_obj_;
    return true;
  }

 private:
  enum class PropResult { ok, dead };

  // Interval propagation to fixpoint: prune branches whose constraints cannot
  // be met and fix variables forced by a single constraint.
  PropResult propagate(std::vector<std::int8_t>& v) const {
    bool changed = true;
    while (changed) {
      changed = false;
      for (const LinearConstraint& c : prog_.constraints) {
        Rational lo = 0, hi = 0;
        for (const Term& t : c.terms) {
          const std::int8_t s = v[static_cast<std::size_t>(t.var)];
          if (s == 1) {
            lo += t.coeff;
            hi += t.coeff;
          } else if (s == -1) {
            if (t.coeff < 0) lo += t.coeff; else hi += t.coeff;
          }
        }
        const bool upper = c.rel != Relation::ge;  // le or eq
        const bool lower = c.rel != Relation::le;  // ge or eq
        if (upper && lo > c.rhs) return PropResult::dead;
        if (lower && hi < c.rhs) return PropResult::dead;
        for (const Term& t : c.terms) {
          std::int8_t& s = v[static_cast<std::size_t>(t.var)];
          if (s != -1) continue;
          int forced = -1;
          if (upper) {
            if (t.coeff > 0 && lo + t.coeff > c.rhs) forced = 0;
            else if (t.coeff < 0 && lo - t.coeff > c.rhs) forced = 1;
          }
          if (forced == -1 && lower) {
            if (t.coeff > 0 && hi - t.coeff < c.rhs) forced = 1;
            else if (t.coeff < 0 && hi + t.coeff < c.rhs) forced = 0;
          }
          if (forced != -1) {
            s = static_cast<std::int8_t>(forced);
            changed = true;
            break;  // bounds are stale; restart the scan
          }
        }
        if (changed) break;
      }
    }
    return PropResult::ok;
  }

  void dfs(std::vector<std::int8_t> v) {
    if (propagate(v) == PropResult::dead) return;

    // Admissible bound: fixed contribution plus the best case of every free
    // variable, ignoring constraints.
    Rational bound = 0;
    int branch_var = -1;
    for (int i = 0; i < prog_.num_vars; ++i) {
      const std::int8_t s = v[static_cast<std::size_t>(i)];
      const Rational& c = obj_[static_cast<std::size_t>(i)];
      if (s == 1) bound += c;
      else if (s == -1) {
        if (c < 0) bound += c;
        if (branch_var == -1) branch_var = i;
      }
    }
    if (have_best_ && bound >= best_obj_) return;

    if (branch_var == -1) {
      // Complete assignment; propagate() verified every constraint exactly.
      best_.assign(v.begin(), v.end());
      best_obj_ = bound;
      have_best_ = true;
      return;
    }

    std::vector<std::int8_t> one = v;
    one[static_cast<std::size_t>(branch_var)] = 1;
    dfs(std::move(one));
    v[static_cast<std::size_t>(branch_var)] = 0;
    dfs(std::move(v));
  }

  const BooleanProgram& prog_;
  std::vector<Rational> obj_;
  std::vector<std::uint8_t> best_;
  Rational best_obj_ = 0;
  bool have_best_ = false;
};

}  // namespace detail

/// Solve a 0/1 program exactly. Deterministic: identical programs yield
/// identical assignments.
inline BipSolution solve_bip(const BooleanProgram& program) {
  program.validate();
  std::vector<Rational> min_obj = program.objective;
  if (program.sense == Sense::maximize)
    for (Rational& c : min_obj) c = -c;

  detail::BnbSolver solver(program, std::move(min_obj));
  BipSolution sol;
  Rational value;
  if (!solver.run(sol.assignment, value)) {
    sol.status = SolveStatus::infeasible;
    sol.assignment.clear();
    return sol;
  }
  sol.status = SolveStatus::optimal;
  sol.objective_value = program.sense == Sense::maximize ? -value : value;
  return sol;
}

inline Relation relation_from_string(const std::string& s) {
  if (s == "<=" || s == "le") return Relation::le;
  if (s == ">=" || s == "ge") return Relation::ge;
  if (s == "=" || s == "==" || s == "eq") return Relation::eq;
  throw std::invalid_argument("unknown relation '" + s + "'");
}

inline std::string relation_to_string(Relation r) {
  switch (r) {
    case Relation::le: return "<=";
    case Relation::ge: return ">=";
    case Relation::eq: return "=";
  }
  return "<=";
}

// JSON program format, for debugging and test fixtures:
// {num_vars, sense, objective:[...], constraints:[{terms:[[i,c],...], rel, rhs}]}
inline BooleanProgram program_from_json(const nlohmann::json& j) {
  BooleanProgram p;
  p.num_vars = j.at("num_vars").get<int>();
  const std::string sense = j.value("sense", std::string("minimize"));
  if (sense == "minimize") p.sense = Sense::minimize;
  else if (sense == "maximize") p.sense = Sense::maximize;
  else throw std::invalid_argument("unknown sense '" + sense + "'");
  for (const auto& c : j.at("objective")) p.objective.push_back(to_rational(c.get<double>()));
  if (j.contains("constraints")) {
    for (const auto& jc : j.at("constraints")) {
      LinearConstraint c;
      for (const auto& t : jc.at("terms"))
        c.terms.push_back({t.at(0).get<int>(), to_rational(t.at(1).get<double>())});
      c.rel = relation_from_string(jc.at("rel").get<std::string>());
      c.rhs = to_rational(jc.at("rhs").get<double>());
      p.constraints.push_back(std::move(c));
    }
  }
  p.validate();
  return p;
}

inline nlohmann::json program_to_json(const BooleanProgram& p) {
  nlohmann::json j;
  j["num_vars"] = p.num_vars;
  j["sense"] = p.sense == Sense::minimize ? "minimize" : "maximize";
  auto obj = nlohmann::json::array();
  for (const Rational& c : p.objective) obj.push_back(to_double(c));
  j["objective"] = std::move(obj);
  auto cons = nlohmann::json::array();
  for (const LinearConstraint& c : p.constraints) {
    nlohmann::json jc;
    auto terms = nlohmann::json::array();
    for (const Term& t : c.terms) terms.push_back({t.var, to_double(t.coeff)});
    jc["terms"] = std::move(terms);
    jc["rel"] = relation_to_string(c.rel);
    jc["rhs"] = to_double(c.rhs);
    cons.push_back(std::move(jc));
  }
  j["constraints"] = std::move(cons);
  return j;
}

}  // namespace mlselect::bip

#endif  // MLSELECT_BIP_HPP
