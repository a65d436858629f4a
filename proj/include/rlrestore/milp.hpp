#pragma once

#include <Eigen/Dense>

#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace rlr::milp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarKind { Continuous, Binary };
enum class Sense { LessEqual, GreaterEqual, Equal };
enum class Direction { Maximize, Minimize };

struct Variable {
    double lower = 0.0;
    double upper = kInf;
    VarKind kind = VarKind::Continuous;
    std::string name;
};

struct Constraint {
    std::vector<std::pair<int, double>> coefficients;  // (variable index, value)
    Sense sense = Sense::LessEqual;
    double rhs = 0.0;
    std::string name;
};

struct Objective {
    std::vector<std::pair<int, double>> coefficients;
    Direction direction = Direction::Maximize;
};

struct MilpModel {
    std::vector<Variable> variables;
    std::vector<Constraint> constraints;
    Objective objective;

    int add_variable(double lower, double upper, VarKind kind, std::string name = {});
    int add_binary(std::string name = {});
    void add_constraint(std::vector<std::pair<int, double>> coefficients, Sense sense, double rhs,
                        std::string name = {});
    // Throws std::invalid_argument on malformed models (bad indices,
    // non-finite coefficients, binary bounds outside [0,1]).
    void validate() const;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, GapLimit, SolverFailure };

struct MilpSolution {
    SolveStatus status = SolveStatus::SolverFailure;
    Eigen::VectorXd values;  // one entry per model variable
    double objective = 0.0;
    double gap = 0.0;
    long node_count = 0;
    long iterations = 0;       // simplex pivots across all nodes
    double root_bound = 0.0;   // objective of the root relaxation
    long bound_violations = 0; // child relaxations above their parent bound (should stay 0)
};

struct MilpOptions {
    double abs_gap = 1e-6;
    long node_limit = 500000;
    double feas_tol = 1e-7;
    double int_tol = 1e-6;
};

// Primal simplex on the relaxation (integrality dropped). Deterministic
// pivoting: largest reduced cost, lowest index on ties, Bland's rule after a
// run of degenerate steps.
MilpSolution solve_lp(const MilpModel& model, const MilpOptions& options = {});

// Best-bound branch and bound on the binary variables; branches on the most
// fractional binary. Deterministic for a given model.
MilpSolution solve_milp(const MilpModel& model, const MilpOptions& options = {});

// CPLEX-style LP text format, one constraint per line.
std::string to_lp_format(const MilpModel& model);

}  // namespace rlr::milp
