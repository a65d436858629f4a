#include "rlrestore/milp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace rlr::milp {

int MilpModel::add_variable(double lower, double upper, VarKind kind, std::string name) {
    variables.push_back({lower, upper, kind, std::move(name)});
    return static_cast<int>(variables.size()) - 1;
}

int MilpModel::add_binary(std::string name) {
    return add_variable(0.0, 1.0, VarKind::Binary, std::move(name));
}

void MilpModel::add_constraint(std::vector<std::pair<int, double>> coefficients, Sense sense,
                               double rhs, std::string name) {
    constraints.push_back({std::move(coefficients), sense, rhs, std::move(name)});
}

void MilpModel::validate() const {
    const int n = static_cast<int>(variables.size());
    if (n == 0) throw std::invalid_argument("model has no variables");
    for (int j = 0; j < n; ++j) {
        const auto& v = variables[j];
        if (std::isnan(v.lower) || std::isnan(v.upper)) {
            throw std::invalid_argument("variable " + std::to_string(j) + " has NaN bounds");
        }
        if (v.kind == VarKind::Binary) {
            if (v.lower < -1e-9 || v.upper > 1.0 + 1e-9) {
                throw std::invalid_argument("binary variable " + std::to_string(j) +
                                            " has bounds outside [0,1]");
            }
        }
    }
    auto check_coeffs = [n](const std::vector<std::pair<int, double>>& coeffs,
                            const std::string& where) {
        for (const auto& [idx, val] : coeffs) {
            if (idx < 0 || idx >= n) {
                throw std::invalid_argument(where + ": variable index " + std::to_string(idx) +
                                            " out of range");
            }
            if (!std::isfinite(val)) {
                throw std::invalid_argument(where + ": non-finite coefficient");
            }
        }
    };
    for (std::size_t i = 0; i < constraints.size(); ++i) {
        check_coeffs(constraints[i].coefficients, "constraint " + std::to_string(i));
        if (!std::isfinite(constraints[i].rhs)) {
            throw std::invalid_argument("constraint " + std::to_string(i) + ": non-finite rhs");
        }
    }
    check_coeffs(objective.coefficients, "objective");
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kPivTol = 1e-8;
constexpr double kDualTol = 1e-9;
constexpr double kZeroTol = 1e-11;

enum class VStat : std::uint8_t { Basic, AtLower, AtUpper, Free };

struct BasisSnapshot {
    std::vector<int> basis;
    std::vector<VStat> stat;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, Stalled };

struct LpResult {
    LpStatus status = LpStatus::Stalled;
    double objective = 0.0;  // canonical maximize, unscaled
    VectorXd x;              // structural, unscaled
    VectorXd reduced_costs;  // structural, unscaled, canonical maximize
    long pivots = 0;
};

double nearest_pow2(double v) {
    if (!(v > 0.0)) return 1.0;
    return std::exp2(std::round(std::log2(v)));
}

// Bounded-variable two-phase primal simplex plus a dual simplex for
// warm-started re-solves after bound changes. Dense explicit basis inverse,
// refactorized periodically. Internally everything is scaled and canonical
// maximize. Columns: [0,n) structural, [n,n+m) slack, [n+m,n+2m) positive
// artificial (+e_i), [n+2m,n+3m) negative artificial (-e_i); artificials
// never price into the basis.
class SimplexWorkspace {
public:
    SimplexWorkspace(const MilpModel& model, const MilpOptions& opt) : opt_(opt) {
        n_ = static_cast<int>(model.variables.size());
        m_ = static_cast<int>(model.constraints.size());
        total_ = n_ + 3 * m_;

        a_.setZero(m_, n_ + m_);
        b_.setZero(m_);
        sense_.resize(m_);
        for (int i = 0; i < m_; ++i) {
            for (const auto& [j, v] : model.constraints[i].coefficients) a_(i, j) += v;
            b_[i] = model.constraints[i].rhs;
            sense_[i] = model.constraints[i].sense;
        }

        const double dir_sign = model.objective.direction == Direction::Maximize ? 1.0 : -1.0;
        c_.setZero(n_ + m_);
        for (const auto& [j, v] : model.objective.coefficients) c_[j] += dir_sign * v;
        c_unscaled_ = c_.head(n_).eval();

        // Equilibrate rows then columns by powers of two.
        row_scale_.setOnes(m_);
        col_scale_.setOnes(n_);
        if (m_ > 0 && n_ > 0) {
            for (int i = 0; i < m_; ++i) {
                const double mx = a_.row(i).head(n_).cwiseAbs().maxCoeff();
                row_scale_[i] = 1.0 / nearest_pow2(mx);
                a_.row(i).head(n_) *= row_scale_[i];
                b_[i] *= row_scale_[i];
            }
            for (int j = 0; j < n_; ++j) {
                const double mx = a_.col(j).cwiseAbs().maxCoeff();
                col_scale_[j] = 1.0 / nearest_pow2(mx);
                a_.col(j) *= col_scale_[j];
                c_[j] *= col_scale_[j];
            }
        }
        for (int i = 0; i < m_; ++i) a_(i, n_ + i) = 1.0;  // slack columns

        slack_lb_.resize(m_);
        slack_ub_.resize(m_);
        for (int i = 0; i < m_; ++i) {
            switch (sense_[i]) {
                case Sense::LessEqual:
                    slack_lb_[i] = 0.0;
                    slack_ub_[i] = kInf;
                    break;
                case Sense::GreaterEqual:
                    slack_lb_[i] = -kInf;
                    slack_ub_[i] = 0.0;
                    break;
                case Sense::Equal:
                    slack_lb_[i] = 0.0;
                    slack_ub_[i] = 0.0;
                    break;
            }
        }
        bscale_ = 1.0 + (m_ > 0 ? b_.cwiseAbs().maxCoeff() : 0.0);
    }

    LpResult solve(const VectorXd& lb_struct, const VectorXd& ub_struct,
                   const BasisSnapshot* warm) {
        pivots_ = 0;
        for (int j = 0; j < n_; ++j) {
            if (lb_struct[j] > ub_struct[j] + opt_.feas_tol) {
                LpResult crossed;
                crossed.status = LpStatus::Infeasible;
                crossed.x = VectorXd::Zero(n_);
                return crossed;
            }
        }
        load_bounds(lb_struct, ub_struct);

        if (warm != nullptr && warm_start(*warm)) {
            const LpStatus dual = dual_loop();
            if (dual == LpStatus::Infeasible) return finish(LpStatus::Infeasible);
            if (dual == LpStatus::Optimal) {
                const LpStatus polish = primal_loop(false);
                if (polish != LpStatus::Stalled) {
                    LpResult res = finish(polish);
                    if (res.status != LpStatus::Stalled) return res;
                }
            }
            // numerical trouble: fall through to a clean primal solve
        }

        crash_basis();
        if (need_phase1_) {
            cwork_.setZero(total_);
            cwork_.segment(n_ + m_, 2 * m_).setConstant(-1.0);
            const LpStatus p1 = primal_loop(true);
            if (p1 == LpStatus::Stalled) return finish(LpStatus::Stalled);
            double infeasibility = 0.0;
            for (int j = n_ + m_; j < total_; ++j) infeasibility += x_[j];
            if (infeasibility > opt_.feas_tol * bscale_ * 10.0) {
                return finish(LpStatus::Infeasible);
            }
            expel_artificials();
        }
        lb_.segment(n_ + m_, 2 * m_).setZero();
        ub_.segment(n_ + m_, 2 * m_).setZero();
        cwork_.setZero(total_);
        cwork_.head(n_ + m_) = c_;
        return finish(primal_loop(false));
    }

    BasisSnapshot snapshot() const { return {basis_, stat_}; }

private:
    MilpOptions opt_;
    int n_ = 0, m_ = 0, total_ = 0;
    MatrixXd a_;
    VectorXd b_, c_, c_unscaled_;
    VectorXd row_scale_, col_scale_;
    std::vector<Sense> sense_;
    VectorXd slack_lb_, slack_ub_;
    double bscale_ = 1.0;

    VectorXd lb_, ub_, x_, cwork_;
    std::vector<int> basis_;
    std::vector<VStat> stat_;
    MatrixXd binv_;
    long pivots_ = 0;
    long degenerate_run_ = 0;
    bool bland_ = false;
    bool need_phase1_ = false;

    bool is_artificial(int j) const { return j >= n_ + m_; }
    double art_sign(int j) const { return j < n_ + 2 * m_ ? 1.0 : -1.0; }
    int art_row(int j) const { return j < n_ + 2 * m_ ? j - n_ - m_ : j - n_ - 2 * m_; }

    VectorXd column(int j) const {
        if (j < n_ + m_) return a_.col(j);
        VectorXd e = VectorXd::Zero(m_);
        e[art_row(j)] = art_sign(j);
        return e;
    }

    void load_bounds(const VectorXd& lb_struct, const VectorXd& ub_struct) {
        lb_.resize(total_);
        ub_.resize(total_);
        for (int j = 0; j < n_; ++j) {
            lb_[j] = lb_struct[j] / col_scale_[j];
            ub_[j] = ub_struct[j] / col_scale_[j];
        }
        lb_.segment(n_, m_) = slack_lb_;
        ub_.segment(n_, m_) = slack_ub_;
        lb_.segment(n_ + m_, 2 * m_).setZero();
        ub_.segment(n_ + m_, 2 * m_).setZero();  // opened up by the crash
    }

    void set_nonbasic_to_bound(int j) {
        switch (stat_[j]) {
            case VStat::AtLower: x_[j] = lb_[j]; break;
            case VStat::AtUpper: x_[j] = ub_[j]; break;
            case VStat::Free: x_[j] = 0.0; break;
            case VStat::Basic: break;
        }
    }

    VStat initial_stat(int j) const {
        if (std::isfinite(lb_[j])) return VStat::AtLower;
        if (std::isfinite(ub_[j])) return VStat::AtUpper;
        return VStat::Free;
    }

    void crash_basis() {
        stat_.assign(total_, VStat::AtLower);
        x_.setZero(total_);
        for (int j = 0; j < n_ + m_; ++j) {
            stat_[j] = initial_stat(j);
            set_nonbasic_to_bound(j);
        }
        const VectorXd residual = b_ - a_ * x_.head(n_ + m_);
        basis_.resize(m_);
        binv_.setZero(m_, m_);
        need_phase1_ = false;
        for (int i = 0; i < m_; ++i) {
            const double implied = x_[n_ + i] + residual[i];
            if (std::isfinite(implied) && implied >= lb_[n_ + i] - opt_.feas_tol &&
                implied <= ub_[n_ + i] + opt_.feas_tol) {
                basis_[i] = n_ + i;
                stat_[n_ + i] = VStat::Basic;
                x_[n_ + i] = implied;
                binv_(i, i) = 1.0;
            } else {
                const int art = residual[i] >= 0.0 ? n_ + m_ + i : n_ + 2 * m_ + i;
                ub_[art] = kInf;
                basis_[i] = art;
                stat_[art] = VStat::Basic;
                x_[art] = std::abs(residual[i]);
                binv_(i, i) = art_sign(art);
                need_phase1_ = true;
            }
        }
        bland_ = false;
        degenerate_run_ = 0;
    }

    bool warm_start(const BasisSnapshot& snap) {
        if (static_cast<int>(snap.basis.size()) != m_ ||
            static_cast<int>(snap.stat.size()) != total_) {
            return false;
        }
        // consecutive dives keep the basis: the inverse is still valid
        const bool same_basis = binv_.rows() == m_ && basis_ == snap.basis;
        basis_ = snap.basis;
        stat_ = snap.stat;
        x_.setZero(total_);
        for (int j = 0; j < total_; ++j) {
            if (stat_[j] == VStat::Basic) continue;
            if (stat_[j] == VStat::AtLower && !std::isfinite(lb_[j])) stat_[j] = VStat::Free;
            if (stat_[j] == VStat::AtUpper && !std::isfinite(ub_[j])) stat_[j] = VStat::Free;
            set_nonbasic_to_bound(j);
        }
        cwork_.setZero(total_);
        cwork_.head(n_ + m_) = c_;
        if (!same_basis && !refactorize()) return false;
        compute_basic_values();
        bland_ = false;
        degenerate_run_ = 0;
        return true;
    }

    bool refactorize() {
        MatrixXd basis_cols(m_, m_);
        for (int i = 0; i < m_; ++i) basis_cols.col(i) = column(basis_[i]);
        Eigen::FullPivLU<MatrixXd> lu(basis_cols);
        if (!lu.isInvertible()) return false;
        binv_ = lu.inverse();
        return true;
    }

    void compute_basic_values() {
        VectorXd shadow = x_.head(n_ + m_);
        for (int i = 0; i < m_; ++i) {
            if (basis_[i] < n_ + m_) shadow[basis_[i]] = 0.0;
        }
        const VectorXd residual = b_ - a_ * shadow;
        const VectorXd xb = binv_ * residual;
        for (int i = 0; i < m_; ++i) x_[basis_[i]] = xb[i];
    }

    void update_binv(const VectorXd& w, int r) {
        const double piv = w[r];
        const Eigen::RowVectorXd row_r = binv_.row(r) / piv;
        for (int i = 0; i < m_; ++i) {
            if (i == r) continue;
            const double wi = w[i];
            if (wi != 0.0) binv_.row(i).noalias() -= wi * row_r;
        }
        binv_.row(r) = row_r;
    }

    long pivot_cap() const { return 2000 + 60L * (m_ + n_); }

    LpStatus primal_loop(bool phase1) {
        long local_pivots = 0;
        int stall_retries = 0;
        while (true) {
            if (local_pivots++ > pivot_cap()) return LpStatus::Stalled;
            if (pivots_ % 128 == 127) {
                if (!refactorize()) return LpStatus::Stalled;
                compute_basic_values();
            }

            VectorXd cb(m_);
            for (int i = 0; i < m_; ++i) cb[i] = cwork_[basis_[i]];
            const VectorXd y = binv_.transpose() * cb;
            const VectorXd d = cwork_.head(n_ + m_) - a_.transpose() * y;

            int enter = -1;
            double best_score = kDualTol;
            for (int j = 0; j < n_ + m_; ++j) {
                if (stat_[j] == VStat::Basic) continue;
                if (ub_[j] - lb_[j] < kZeroTol) continue;  // fixed
                const double dj = d[j];
                bool eligible = false;
                if (stat_[j] == VStat::AtLower && dj > kDualTol) eligible = true;
                if (stat_[j] == VStat::AtUpper && dj < -kDualTol) eligible = true;
                if (stat_[j] == VStat::Free && std::abs(dj) > kDualTol) eligible = true;
                if (!eligible) continue;
                if (bland_) {
                    enter = j;
                    break;
                }
                if (std::abs(dj) > best_score) {
                    best_score = std::abs(dj);
                    enter = j;
                }
            }
            if (enter < 0) return LpStatus::Optimal;

            const double dir =
                (stat_[enter] == VStat::AtUpper) ? -1.0 : (d[enter] > 0.0 ? 1.0 : -1.0);
            const VectorXd w = binv_ * column(enter);

            double best_t = ub_[enter] - lb_[enter];  // bound-flip distance
            int leave_row = -1;
            double leave_piv = 0.0;
            VStat leave_stat = VStat::AtLower;
            for (int i = 0; i < m_; ++i) {
                const double rate = -dir * w[i];
                if (std::abs(rate) <= kPivTol) continue;
                const int bj = basis_[i];
                double t;
                VStat target;
                if (rate > 0.0) {
                    if (!std::isfinite(ub_[bj])) continue;
                    t = std::max(0.0, ub_[bj] - x_[bj]) / rate;
                    target = VStat::AtUpper;
                } else {
                    if (!std::isfinite(lb_[bj])) continue;
                    t = std::max(0.0, x_[bj] - lb_[bj]) / (-rate);
                    target = VStat::AtLower;
                }
                bool take = false;
                if (t < best_t - 1e-12) {
                    take = true;
                } else if (t <= best_t + 1e-12) {
                    if (leave_row < 0) {
                        take = t <= best_t;
                    } else if (bland_) {
                        take = bj < basis_[leave_row];
                    } else {
                        take = std::abs(w[i]) > std::abs(leave_piv);
                    }
                }
                if (take) {
                    best_t = std::min(best_t, t);
                    leave_row = i;
                    leave_piv = w[i];
                    leave_stat = target;
                }
            }

            if (!std::isfinite(best_t)) {
                return phase1 ? LpStatus::Stalled : LpStatus::Unbounded;
            }
            if (leave_row >= 0 && std::abs(leave_piv) <= kPivTol) {
                if (++stall_retries > 4) return LpStatus::Stalled;
                if (!refactorize()) return LpStatus::Stalled;
                compute_basic_values();
                continue;
            }

            x_[enter] += dir * best_t;
            for (int i = 0; i < m_; ++i) x_[basis_[i]] -= dir * w[i] * best_t;

            if (best_t <= 1e-10) {
                if (++degenerate_run_ > 3L * (m_ + n_)) bland_ = true;
            } else {
                degenerate_run_ = 0;
                bland_ = false;
            }

            if (leave_row < 0) {
                stat_[enter] = dir > 0.0 ? VStat::AtUpper : VStat::AtLower;
                set_nonbasic_to_bound(enter);
            } else {
                const int leaving = basis_[leave_row];
                stat_[leaving] = leave_stat;
                set_nonbasic_to_bound(leaving);
                basis_[leave_row] = enter;
                stat_[enter] = VStat::Basic;
                update_binv(w, leave_row);
            }
            ++pivots_;
        }
    }

    // Pivot zero-valued basic artificials out where the row allows it; rows
    // with no usable pivot are redundant and keep their fixed artificial.
    void expel_artificials() {
        for (int i = 0; i < m_; ++i) {
            if (!is_artificial(basis_[i])) continue;
            const Eigen::RowVectorXd rho = binv_.row(i) * a_;
            int enter = -1;
            double best = kPivTol * 10.0;
            for (int j = 0; j < n_ + m_; ++j) {
                if (stat_[j] == VStat::Basic) continue;
                if (std::abs(rho[j]) > best) {
                    best = std::abs(rho[j]);
                    enter = j;
                }
            }
            if (enter < 0) continue;
            const VectorXd w = binv_ * column(enter);
            const int art = basis_[i];
            stat_[art] = VStat::AtLower;
            x_[art] = 0.0;
            basis_[i] = enter;
            stat_[enter] = VStat::Basic;
            update_binv(w, i);
            compute_basic_values();
        }
    }

    LpStatus dual_loop() {
        const long cap = 600 + 15L * m_;
        VectorXd cb(m_);
        for (long iter = 0; iter < cap; ++iter) {
            if (iter > 0 && iter % 96 == 0) {
                if (!refactorize()) return LpStatus::Stalled;
                compute_basic_values();
            }
            int leave_row = -1;
            double worst = opt_.feas_tol;
            bool below = false;
            for (int i = 0; i < m_; ++i) {
                const int bj = basis_[i];
                const double lo = lb_[bj] - x_[bj];
                const double hi = x_[bj] - ub_[bj];
                if (lo > worst) {
                    worst = lo;
                    leave_row = i;
                    below = true;
                }
                if (hi > worst) {
                    worst = hi;
                    leave_row = i;
                    below = false;
                }
            }
            if (leave_row < 0) return LpStatus::Optimal;

            for (int i = 0; i < m_; ++i) cb[i] = cwork_[basis_[i]];
            const VectorXd y = binv_.transpose() * cb;
            const VectorXd d = cwork_.head(n_ + m_) - a_.transpose() * y;
            const Eigen::RowVectorXd rho = binv_.row(leave_row) * a_;

            // x_B[r] moves by -alpha_j * delta_j when the entering j moves
            int enter = -1;
            double best_ratio = kInf;
            double enter_alpha = 0.0;
            for (int j = 0; j < n_ + m_; ++j) {
                if (stat_[j] == VStat::Basic) continue;
                if (ub_[j] - lb_[j] < kZeroTol) continue;
                const double alpha = rho[j];
                if (std::abs(alpha) <= kPivTol) continue;
                bool eligible;
                if (below) {
                    eligible = (stat_[j] == VStat::AtLower && alpha < 0.0) ||
                               (stat_[j] == VStat::AtUpper && alpha > 0.0) ||
                               stat_[j] == VStat::Free;
                } else {
                    eligible = (stat_[j] == VStat::AtLower && alpha > 0.0) ||
                               (stat_[j] == VStat::AtUpper && alpha < 0.0) ||
                               stat_[j] == VStat::Free;
                }
                if (!eligible) continue;
                const double ratio = std::abs(d[j]) / std::abs(alpha);
                bool take = ratio < best_ratio - 1e-12;
                if (!take && ratio <= best_ratio + 1e-12 && enter >= 0) {
                    take = std::abs(alpha) > std::abs(enter_alpha);
                }
                if (take || enter < 0) {
                    if (ratio < best_ratio || take) {
                        best_ratio = std::min(best_ratio, ratio);
                        enter = j;
                        enter_alpha = alpha;
                    }
                }
            }
            if (enter < 0) return LpStatus::Infeasible;

            const int leaving = basis_[leave_row];
            const double target = below ? lb_[leaving] : ub_[leaving];
            const double delta = (target - x_[leaving]) / (-enter_alpha);
            const VectorXd w = binv_ * column(enter);

            x_[enter] += delta;
            for (int i = 0; i < m_; ++i) x_[basis_[i]] -= delta * w[i];
            x_[leaving] = target;

            stat_[leaving] = below ? VStat::AtLower : VStat::AtUpper;
            basis_[leave_row] = enter;
            stat_[enter] = VStat::Basic;
            update_binv(w, leave_row);
            ++pivots_;
        }
        return LpStatus::Stalled;
    }

    LpResult finish(LpStatus status) {
        LpResult res;
        res.status = status;
        res.pivots = pivots_;
        res.x = VectorXd::Zero(n_);
        if (status != LpStatus::Optimal) return res;
        for (int j = 0; j < n_; ++j) res.x[j] = x_[j] * col_scale_[j];
        res.objective = c_unscaled_.dot(res.x);

        VectorXd cb(m_);
        for (int i = 0; i < m_; ++i) cb[i] = cwork_[basis_[i]];
        const VectorXd y = binv_.transpose() * cb;
        const VectorXd d = cwork_.head(n_ + m_) - a_.transpose() * y;
        res.reduced_costs.resize(n_);
        for (int j = 0; j < n_; ++j) {
            res.reduced_costs[j] = stat_[j] == VStat::Basic ? 0.0 : d[j] / col_scale_[j];
        }

        // final feasibility audit in the scaled system
        VectorXd lhs = a_ * x_.head(n_ + m_);
        for (int i = 0; i < m_; ++i) {
            const int bj = basis_[i];
            if (is_artificial(bj)) lhs[art_row(bj)] += art_sign(bj) * x_[bj];
        }
        const double row_err = (lhs - b_).cwiseAbs().maxCoeff();
        double bound_err = 0.0;
        for (int j = 0; j < total_; ++j) {
            if (std::isfinite(lb_[j])) bound_err = std::max(bound_err, lb_[j] - x_[j]);
            if (std::isfinite(ub_[j])) bound_err = std::max(bound_err, x_[j] - ub_[j]);
        }
        if (row_err > 1e-5 * bscale_ || bound_err > 1e-5 * bscale_) {
            res.status = LpStatus::Stalled;
        }
        return res;
    }
};

struct BnbNode {
    double estimate = 0.0;  // parent relaxation objective (canonical max)
    long seq = 0;
    int parent = -1;
    int branch_var = -1;
    double branch_lb = 0.0;
    double branch_ub = 0.0;
    BasisSnapshot basis;  // parent's optimal basis; cleared once expanded
};

MilpSolution make_solution(const MilpModel& model, SolveStatus status, double canon_obj,
                           const VectorXd& x) {
    MilpSolution sol;
    sol.status = status;
    sol.values = x;
    const double sign = model.objective.direction == Direction::Maximize ? 1.0 : -1.0;
    sol.objective = sign * canon_obj;
    return sol;
}

}  // namespace

MilpSolution solve_lp(const MilpModel& model, const MilpOptions& options) {
    model.validate();
    SimplexWorkspace ws(model, options);
    const int n = static_cast<int>(model.variables.size());
    VectorXd lb(n), ub(n);
    for (int j = 0; j < n; ++j) {
        lb[j] = model.variables[j].lower;
        ub[j] = model.variables[j].upper;
    }
    const LpResult res = ws.solve(lb, ub, nullptr);
    SolveStatus status;
    switch (res.status) {
        case LpStatus::Optimal: status = SolveStatus::Optimal; break;
        case LpStatus::Infeasible: status = SolveStatus::Infeasible; break;
        case LpStatus::Unbounded: status = SolveStatus::Unbounded; break;
        default: status = SolveStatus::SolverFailure; break;
    }
    MilpSolution sol = make_solution(model, status, res.objective, res.x);
    sol.iterations = res.pivots;
    sol.root_bound = sol.objective;
    sol.node_count = 0;
    return sol;
}

MilpSolution solve_milp(const MilpModel& model, const MilpOptions& options) {
    model.validate();
    const int n = static_cast<int>(model.variables.size());
    std::vector<int> binaries;
    for (int j = 0; j < n; ++j) {
        if (model.variables[j].kind == VarKind::Binary) binaries.push_back(j);
    }
    if (binaries.empty()) return solve_lp(model, options);

    const double sign = model.objective.direction == Direction::Maximize ? 1.0 : -1.0;

    // When the objective lives on the binaries with integral coefficients,
    // every feasible objective is an integer and bounds can be floored.
    bool lattice = true;
    {
        std::vector<double> obj(n, 0.0);
        for (const auto& [j, v] : model.objective.coefficients) obj[j] += sign * v;
        for (int j = 0; j < n; ++j) {
            const bool is_bin = model.variables[j].kind == VarKind::Binary;
            if (!is_bin && obj[j] != 0.0) lattice = false;
            if (is_bin && std::abs(obj[j] - std::round(obj[j])) > 1e-12) lattice = false;
        }
    }

    SimplexWorkspace ws(model, options);
    VectorXd lb0(n), ub0(n);
    for (int j = 0; j < n; ++j) {
        lb0[j] = model.variables[j].lower;
        ub0[j] = model.variables[j].upper;
    }

    const LpResult root = ws.solve(lb0, ub0, nullptr);
    long node_count = 1;
    long iterations = root.pivots;
    if (root.status == LpStatus::Infeasible) {
        return make_solution(model, SolveStatus::Infeasible, 0.0, VectorXd::Zero(n));
    }
    if (root.status == LpStatus::Unbounded) {
        return make_solution(model, SolveStatus::Unbounded, 0.0, VectorXd::Zero(n));
    }
    if (root.status == LpStatus::Stalled) {
        return make_solution(model, SolveStatus::SolverFailure, 0.0, VectorXd::Zero(n));
    }
    const double root_bound_canon = root.objective;

    std::vector<BnbNode> nodes;
    nodes.reserve(256);
    auto cmp = [&nodes](int a, int b) {
        if (nodes[a].estimate != nodes[b].estimate) return nodes[a].estimate < nodes[b].estimate;
        return nodes[a].seq > nodes[b].seq;
    };
    std::priority_queue<int, std::vector<int>, decltype(cmp)> open(cmp);

    double incumbent_obj = -kInf;
    VectorXd incumbent_x;
    long seq = 0;
    long processed = 0;
    long bound_violations = 0;

    auto integral = [&](const VectorXd& x) {
        for (int j : binaries) {
            if (std::abs(x[j] - std::round(x[j])) > options.int_tol) return false;
        }
        return true;
    };
    std::vector<double> obj_coef(n, 0.0);
    for (const auto& [j, v] : model.objective.coefficients) obj_coef[j] += sign * v;
    // Full feasibility audit of a candidate point against the original
    // rows and bounds; the heuristics below only keep candidates that pass.
    auto feasible_point = [&](const VectorXd& x) {
        for (int j = 0; j < n; ++j) {
            if (x[j] < model.variables[j].lower - 1e-7 ||
                x[j] > model.variables[j].upper + 1e-7) {
                return false;
            }
        }
        for (const auto& con : model.constraints) {
            double lhs = 0.0;
            for (const auto& [j, v] : con.coefficients) lhs += v * x[j];
            const double slack = con.rhs - lhs;
            const double tol = 1e-7 * (1.0 + std::abs(con.rhs));
            if (con.sense == Sense::LessEqual && slack < -tol) return false;
            if (con.sense == Sense::GreaterEqual && slack > tol) return false;
            if (con.sense == Sense::Equal && std::abs(slack) > tol) return false;
        }
        return true;
    };
    // Root reduced-cost fixing: a binary nonbasic at a root bound whose
    // reduced cost already eats the whole headroom over the incumbent can
    // never flip in a strictly better solution, so its root bound becomes
    // global. Re-applied whenever the incumbent improves.
    auto apply_root_fixing = [&]() {
        if (!std::isfinite(incumbent_obj) || root.reduced_costs.size() != n) return;
        const double margin = lattice ? 1.0 - 1e-9 : options.abs_gap;
        for (int j : binaries) {
            if (ub0[j] - lb0[j] < 0.5) continue;
            const double head = root_bound_canon - std::abs(root.reduced_costs[j]);
            if (head >= incumbent_obj + margin) continue;
            if (std::abs(root.x[j]) <= options.int_tol) {
                ub0[j] = 0.0;
            } else if (std::abs(root.x[j] - 1.0) <= options.int_tol) {
                lb0[j] = 1.0;
            }
        }
    };
    // Bounded deterministic polish: flip profitable binaries on, then swap a
    // cheap served binary for a better unserved one, first improvement wins.
    auto polish_incumbent = [&](VectorXd& x, double& obj) {
        std::vector<int> carriers;
        for (int j : binaries) {
            if (obj_coef[j] > 0.0) carriers.push_back(j);
        }
        std::sort(carriers.begin(), carriers.end(), [&](int a, int b) {
            if (obj_coef[a] != obj_coef[b]) return obj_coef[a] > obj_coef[b];
            return a < b;
        });
        for (int round = 0; round < 4; ++round) {
            bool improved = false;
            for (int a : carriers) {
                if (x[a] > 0.5 || ub0[a] < 0.5) continue;
                x[a] = 1.0;
                if (feasible_point(x)) {
                    obj += obj_coef[a];
                    improved = true;
                } else {
                    x[a] = 0.0;
                }
            }
            int checks = 0;
            for (int a : carriers) {
                if (x[a] > 0.5 || ub0[a] < 0.5) continue;
                for (auto it = carriers.rbegin(); it != carriers.rend(); ++it) {
                    const int b = *it;
                    if (x[b] < 0.5 || lb0[b] > 0.5) continue;
                    if (obj_coef[b] >= obj_coef[a]) break;
                    if (++checks > 4096) break;
                    x[a] = 1.0;
                    x[b] = 0.0;
                    if (feasible_point(x)) {
                        obj += obj_coef[a] - obj_coef[b];
                        improved = true;
                        break;
                    }
                    x[a] = 0.0;
                    x[b] = 1.0;
                }
                if (checks > 4096) break;
            }
            if (!improved) break;
        }
    };
    auto accept_incumbent = [&](const VectorXd& x) {
        VectorXd rounded = x;
        for (int j : binaries) rounded[j] = std::round(rounded[j]);
        double obj = 0.0;
        for (const auto& [j, v] : model.objective.coefficients) obj += sign * v * rounded[j];
        if (obj > incumbent_obj + 1e-12) {
            polish_incumbent(rounded, obj);
            incumbent_obj = obj;
            incumbent_x = rounded;
            apply_root_fixing();
        }
    };
    auto try_rounding = [&](const VectorXd& x, const VectorXd& lb, const VectorXd& ub) {
        // pass 0: nearest; pass 1: ceil everything fractional; pass 2: floor
        // the objective carriers, ceil the zero-cost indicators
        for (int pass = 0; pass < 3; ++pass) {
            VectorXd cand = x;
            bool changed = false;
            for (int j : binaries) {
                const double frac = cand[j] - std::floor(cand[j]);
                double v;
                if (frac <= options.int_tol || frac >= 1.0 - options.int_tol) {
                    v = std::round(cand[j]);
                } else {
                    changed = true;
                    switch (pass) {
                        case 0: v = std::round(cand[j]); break;
                        case 1: v = std::ceil(cand[j]); break;
                        default:
                            v = obj_coef[j] > 0.0 ? std::floor(cand[j]) : std::ceil(cand[j]);
                            break;
                    }
                }
                v = std::min(std::max(v, lb[j]), ub[j]);
                cand[j] = v;
            }
            if (pass > 0 && !changed) return;
            if (feasible_point(cand)) accept_incumbent(cand);
        }
    };
    auto prunable = [&](double bound) {
        if (!std::isfinite(incumbent_obj)) return false;
        if (bound <= incumbent_obj + options.abs_gap) return true;
        if (lattice && std::floor(bound + 1e-9) <= incumbent_obj + 1e-9) return true;
        return false;
    };
    // Splits on the most fractional binary. While diving, the child on the
    // side the relaxation leans toward is returned for immediate processing
    // and only its sibling joins the queue; -2 means nothing to branch on.
    auto branch = [&](const VectorXd& x, double bound, int parent_index, bool diving) {
        int var = -1;
        double best = 2.0;
        for (int j : binaries) {
            const double frac = x[j] - std::floor(x[j]);
            if (frac < options.int_tol || frac > 1.0 - options.int_tol) continue;
            const double score = std::abs(frac - 0.5);
            if (score < best - 1e-15) {
                best = score;
                var = j;
            }
        }
        if (var < 0) return -2;
        const BasisSnapshot snap = ws.snapshot();
        const int preferred_side = x[var] - std::floor(x[var]) >= 0.5 ? 1 : 0;
        int preferred_id = -1;
        for (int side = 0; side < 2; ++side) {
            BnbNode child;
            child.estimate = bound;
            child.seq = ++seq;
            child.parent = parent_index;
            child.branch_var = var;
            child.branch_lb = side == 0 ? 0.0 : 1.0;
            child.branch_ub = side == 0 ? 0.0 : 1.0;
            child.basis = snap;
            nodes.push_back(std::move(child));
            const int id = static_cast<int>(nodes.size()) - 1;
            if (diving && side == preferred_side) {
                preferred_id = id;
            } else {
                open.push(id);
            }
        }
        return preferred_id;
    };

    long dive_steps = 0;
    const long dive_cap = 3L * static_cast<long>(binaries.size()) + 16;
    long plunge_budget = 0;  // bounded dives after each best-bound pop
    int pending = -1;
    if (integral(root.x)) {
        accept_incumbent(root.x);
    } else {
        try_rounding(root.x, lb0, ub0);
        BnbNode sentinel;
        sentinel.estimate = root_bound_canon;
        nodes.push_back(std::move(sentinel));
        const bool diving = !std::isfinite(incumbent_obj);
        const int next = branch(root.x, root_bound_canon, 0, diving);
        if (next >= 0) {
            pending = next;
            ++dive_steps;
        }
    }

    SolveStatus final_status = SolveStatus::Optimal;
    double best_open = -kInf;
    while (pending >= 0 || !open.empty()) {
        if (processed >= options.node_limit) {
            if (pending >= 0) open.push(pending);
            final_status = SolveStatus::GapLimit;
            break;
        }
        int id;
        if (pending >= 0) {
            id = pending;
            pending = -1;
        } else {
            best_open = nodes[open.top()].estimate;
            if (std::isfinite(incumbent_obj)) {
                const double global_bound = std::max(incumbent_obj, best_open);
                if (global_bound - incumbent_obj <= options.abs_gap) break;
                if (lattice && std::floor(global_bound + 1e-9) <= incumbent_obj + 1e-9) break;
            }
            id = open.top();
            open.pop();
            if (prunable(nodes[id].estimate)) continue;
            plunge_budget = 8;
        }

        VectorXd lb = lb0, ub = ub0;
        for (int walk = id; walk > 0; walk = nodes[walk].parent) {
            const int v = nodes[walk].branch_var;
            if (v < 0) continue;
            lb[v] = std::max(lb[v], nodes[walk].branch_lb);
            ub[v] = std::min(ub[v], nodes[walk].branch_ub);
        }

        const BasisSnapshot warm = std::move(nodes[id].basis);
        nodes[id].basis = BasisSnapshot{};
        const LpResult res = ws.solve(lb, ub, &warm);
        ++processed;
        ++node_count;
        iterations += res.pivots;
        if (res.status == LpStatus::Infeasible) continue;
        if (res.status != LpStatus::Optimal) {
            final_status = SolveStatus::SolverFailure;
            break;
        }
        if (res.objective > nodes[id].estimate + 1e-6 * (1.0 + std::abs(nodes[id].estimate))) {
            ++bound_violations;
        }
        if (prunable(res.objective)) continue;
        if (integral(res.x)) {
            accept_incumbent(res.x);
            continue;
        }
        try_rounding(res.x, lb, ub);
        if (prunable(res.objective)) continue;
        const bool first_dive = !std::isfinite(incumbent_obj) && dive_steps < dive_cap;
        const bool plunging = std::isfinite(incumbent_obj) && plunge_budget > 0;
        const int next = branch(res.x, res.objective, id, first_dive || plunging);
        if (next == -2) {
            accept_incumbent(res.x);
        } else if (next >= 0) {
            pending = next;
            if (first_dive) ++dive_steps;
            if (plunging) --plunge_budget;
        }
    }

    if (!std::isfinite(incumbent_obj)) {
        if (final_status == SolveStatus::GapLimit) {
            // no incumbent: empty values signal that there is no plan to read
            MilpSolution out = make_solution(model, SolveStatus::GapLimit, 0.0, VectorXd());
            out.gap = kInf;
            out.node_count = node_count;
            out.iterations = iterations;
            out.root_bound = sign * root_bound_canon;
            return out;
        }
        if (final_status == SolveStatus::SolverFailure) {
            return make_solution(model, SolveStatus::SolverFailure, 0.0, VectorXd::Zero(n));
        }
        return make_solution(model, SolveStatus::Infeasible, 0.0, VectorXd::Zero(n));
    }

    double remaining = incumbent_obj;
    if (!open.empty()) remaining = std::max(incumbent_obj, best_open);
    MilpSolution out = make_solution(model, final_status, incumbent_obj, incumbent_x);
    out.gap = std::max(0.0, remaining - incumbent_obj);
    out.node_count = node_count;
    out.iterations = iterations;
    out.root_bound = sign * root_bound_canon;
    out.bound_violations = bound_violations;
    return out;
}

std::string to_lp_format(const MilpModel& model) {
    model.validate();
    const int n = static_cast<int>(model.variables.size());
    auto var_name = [&](int j) {
        return model.variables[j].name.empty() ? "x" + std::to_string(j)
                                               : model.variables[j].name;
    };
    auto write_terms = [&](std::ostringstream& os,
                           const std::vector<std::pair<int, double>>& terms) {
        if (terms.empty()) {
            os << " 0 " << var_name(0);
            return;
        }
        for (const auto& [j, v] : terms) {
            os << (v < 0 ? " - " : " + ") << std::abs(v) << " " << var_name(j);
        }
    };

    std::ostringstream os;
    os.precision(17);
    os << (model.objective.direction == Direction::Maximize ? "Maximize" : "Minimize") << "\n";
    os << " obj:";
    write_terms(os, model.objective.coefficients);
    os << "\nSubject To\n";
    for (std::size_t i = 0; i < model.constraints.size(); ++i) {
        const auto& con = model.constraints[i];
        os << " " << (con.name.empty() ? "c" + std::to_string(i) : con.name) << ":";
        write_terms(os, con.coefficients);
        switch (con.sense) {
            case Sense::LessEqual: os << " <= "; break;
            case Sense::GreaterEqual: os << " >= "; break;
            case Sense::Equal: os << " = "; break;
        }
        os << con.rhs << "\n";
    }
    os << "Bounds\n";
    for (int j = 0; j < n; ++j) {
        const auto& v = model.variables[j];
        if (!std::isfinite(v.lower) && !std::isfinite(v.upper)) {
            os << " " << var_name(j) << " free\n";
        } else if (!std::isfinite(v.upper)) {
            os << " " << var_name(j) << " >= " << v.lower << "\n";
        } else if (!std::isfinite(v.lower)) {
            os << " " << var_name(j) << " <= " << v.upper << "\n";
        } else {
            os << " " << v.lower << " <= " << var_name(j) << " <= " << v.upper << "\n";
        }
    }
    bool any_binary = false;
    for (int j = 0; j < n; ++j) {
        if (model.variables[j].kind == VarKind::Binary) {
            if (!any_binary) {
                os << "Binaries\n";
                any_binary = true;
            }
            os << " " << var_name(j) << "\n";
        }
    }
    os << "End\n";
    return os.str();
}

}  // namespace rlr::milp
