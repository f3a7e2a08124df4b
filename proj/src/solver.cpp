#include "singarc/solver.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <vector>

namespace singarc {

namespace {

constexpr double kInfBound = 1e18;  // bounds at or beyond this count as absent

using Eigen::Index;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Triplet = Eigen::Triplet<double>;

struct Bounds {
  std::vector<bool> fixed, has_lo, has_up;
  int n_fixed = 0;
};

Bounds classify_bounds(const NlpProblem& nlp) {
  Bounds b;
  const Index d = nlp.dim;
  b.fixed.assign(d, false);
  b.has_lo.assign(d, false);
  b.has_up.assign(d, false);
  for (Index i = 0; i < d; ++i) {
    const double lo = nlp.lower[i], up = nlp.upper[i];
    if (lo == up) {
      b.fixed[i] = true;
      ++b.n_fixed;
      continue;
    }
    if (lo > -kInfBound) b.has_lo[i] = true;
    if (up < kInfBound) b.has_up[i] = true;
  }
  return b;
}

// Clip into the box, then push strictly inside by min(1e-3 * range, 1e-3).
Eigen::VectorXd interiorize(const NlpProblem& nlp, const Bounds& b, Eigen::VectorXd w) {
  for (Index i = 0; i < nlp.dim; ++i) {
    if (b.fixed[i]) {
      w[i] = nlp.lower[i];
      continue;
    }
    const double lo = nlp.lower[i], up = nlp.upper[i];
    w[i] = std::min(std::max(w[i], lo), up);
    double push = 1e-3;
    if (b.has_lo[i] && b.has_up[i]) push = std::min(1e-3 * (up - lo), 1e-3);
    if (b.has_lo[i] && w[i] < lo + push) w[i] = lo + push;
    if (b.has_up[i] && w[i] > up - push) w[i] = up - push;
  }
  return w;
}

// Distance-2 greedy coloring of the Hessian columns: two columns sharing a
// pattern row must differ so each entry can be recovered from one colored
// finite-difference pass.
std::vector<int> color_columns(Index dim, const std::vector<std::pair<int, int>>& pattern,
                               int& n_colors) {
  std::vector<std::vector<int>> nbr(dim);
  for (const auto& [a, b] : pattern) {
    nbr[a].push_back(b);
    if (a != b) nbr[b].push_back(a);
  }
  std::vector<std::vector<int>> conflict(dim);
  for (Index i = 0; i < dim; ++i) {
    const auto& cols = nbr[i];
    for (size_t a = 0; a < cols.size(); ++a)
      for (size_t c = a + 1; c < cols.size(); ++c) {
        conflict[cols[a]].push_back(cols[c]);
        conflict[cols[c]].push_back(cols[a]);
      }
  }
  std::vector<int> color(dim, -1);
  std::vector<char> used;
  n_colors = 0;
  for (Index j = 0; j < dim; ++j) {
    if (nbr[j].empty()) continue;  // variable absent from the Hessian
    used.assign(n_colors + 1, 0);
    for (int c : conflict[j])
      if (color[c] >= 0) used[color[c]] = 1;
    for (int c : nbr[j])
      if (c != j && color[c] >= 0) used[color[c]] = 1;
    int pick = 0;
    while (pick < static_cast<int>(used.size()) && used[pick]) ++pick;
    color[j] = pick;
    n_colors = std::max(n_colors, pick + 1);
  }
  return color;
}

// Lagrangian Hessian by colored central differences of the exact gradient
// grad f + J^T y. Returns one averaged value per pattern entry.
class FdHessian {
 public:
  FdHessian(const NlpProblem& nlp, std::vector<std::pair<int, int>> pattern)
      : nlp_(nlp), pattern_(std::move(pattern)) {
    if (pattern_.empty())
      for (int i = 0; i < nlp_.dim; ++i)
        for (int j = i; j < nlp_.dim; ++j) pattern_.emplace_back(i, j);
    color_ = color_columns(nlp_.dim, pattern_, n_colors_);
    entries_of_.resize(nlp_.dim);
    for (size_t e = 0; e < pattern_.size(); ++e) {
      const auto& [a, b] = pattern_[e];
      entries_of_[b].push_back({static_cast<int>(e), a});
      if (a != b) entries_of_[a].push_back({static_cast<int>(e), b});
    }
  }

  const std::vector<std::pair<int, int>>& pattern() const { return pattern_; }

  Eigen::VectorXd evaluate(const Eigen::VectorXd& w, const Eigen::VectorXd& y) const {
    auto grad_L = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
      Eigen::VectorXd g = nlp_.objective_gradient(v);
      if (nlp_.n_eq > 0) g += nlp_.eq_jacobian(v).transpose() * y;
      return g;
    };
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(pattern_.size());
    Eigen::VectorXd cnt = Eigen::VectorXd::Zero(pattern_.size());
    Eigen::VectorXd step(nlp_.dim);
    for (Index j = 0; j < nlp_.dim; ++j) step[j] = 6e-6 * std::max(1.0, std::abs(w[j]));
    for (int c = 0; c < n_colors_; ++c) {
      Eigen::VectorXd wp = w, wm = w;
      bool any = false;
      for (Index j = 0; j < nlp_.dim; ++j)
        if (color_[j] == c) {
          wp[j] += step[j];
          wm[j] -= step[j];
          any = true;
        }
      if (!any) continue;
      const Eigen::VectorXd gp = grad_L(wp), gm = grad_L(wm);
      for (Index j = 0; j < nlp_.dim; ++j) {
        if (color_[j] != c) continue;
        for (const auto& [e, row] : entries_of_[j]) {
          sum[e] += (gp[row] - gm[row]) / (2.0 * step[j]);
          cnt[e] += 1.0;
        }
      }
    }
    for (Index e = 0; e < sum.size(); ++e)
      if (cnt[e] > 0) sum[e] /= cnt[e];
    return sum;
  }

 private:
  const NlpProblem& nlp_;
  std::vector<std::pair<int, int>> pattern_;
  std::vector<int> color_;
  int n_colors_ = 0;
  std::vector<std::vector<std::pair<int, int>>> entries_of_;  // var -> (entry, other end)
};

// Unpivoted dense LDL^T; fine for the quasi-definite systems assembled
// here. Returns false on a vanishing pivot.
bool dense_ldlt(Mat& A, Vec& D) {
  const Index N = A.rows();
  D.resize(N);
  for (Index k = 0; k < N; ++k) {
    double d = A(k, k);
    for (Index j = 0; j < k; ++j) d -= A(k, j) * A(k, j) * D[j];
    if (std::abs(d) < 1e-300 || !std::isfinite(d)) return false;
    D[k] = d;
    for (Index i = k + 1; i < N; ++i) {
      double v = A(i, k);
      for (Index j = 0; j < k; ++j) v -= A(i, j) * A(k, j) * D[j];
      A(i, k) = v / d;
    }
  }
  return true;
}

void dense_ldlt_solve(const Mat& L, const Vec& D, Vec& x) {
  const Index N = L.rows();
  for (Index i = 0; i < N; ++i)
    for (Index j = 0; j < i; ++j) x[i] -= L(i, j) * x[j];
  for (Index i = 0; i < N; ++i) x[i] /= D[i];
  for (Index i = N - 1; i >= 0; --i)
    for (Index j = i + 1; j < N; ++j) x[i] -= L(j, i) * x[j];
}

struct KktSolver {
  bool dense = false;
  Eigen::SimplicialLDLT<SpMat> sparse_ldlt;
  bool analyzed = false;
  Mat dense_L;
  Vec dense_D;
  Index N = 0;

  // Returns true when the factorization succeeded with the saddle-point
  // inertia (dim positive, p negative pivots).
  bool factor(const std::vector<Triplet>& trips, Index dim, Index p, bool use_dense) {
    N = dim + p;
    dense = use_dense;
    if (dense) {
      Mat A = Mat::Zero(N, N);
      for (const auto& t : trips) A(t.row(), t.col()) += t.value();
      dense_L = A;
      if (!dense_ldlt(dense_L, dense_D)) return false;
      Index pos = 0, neg = 0;
      for (Index i = 0; i < N; ++i) (dense_D[i] > 0 ? pos : neg)++;
      return pos == dim && neg == p;
    }
    SpMat K(N, N);
    K.setFromTriplets(trips.begin(), trips.end());
    if (!analyzed) {
      sparse_ldlt.analyzePattern(K);
      analyzed = true;
    }
    sparse_ldlt.factorize(K);
    if (sparse_ldlt.info() != Eigen::Success) return false;
    const Vec& D = sparse_ldlt.vectorD();
    Index pos = 0, neg = 0;
    for (Index i = 0; i < N; ++i) {
      if (!std::isfinite(D[i]) || D[i] == 0.0) return false;
      (D[i] > 0 ? pos : neg)++;
    }
    return pos == dim && neg == p;
  }

  Vec solve(const Vec& rhs) const {
    if (dense) {
      Vec x = rhs;
      dense_ldlt_solve(dense_L, dense_D, x);
      return x;
    }
    return sparse_ldlt.solve(rhs);
  }
};

}  // namespace

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::max_iter: return "max_iter";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::numerical_failure: return "numerical_failure";
  }
  return "?";
}

SolveResult solve(const NlpProblem& nlp, const Eigen::VectorXd& w0, const SolverOptions& opts,
                  const std::optional<Eigen::VectorXd>& warm_y) {
  nlp.validate();
  if (w0.size() != nlp.dim) throw std::invalid_argument("solve: start vector size mismatch");

  const Index dim = nlp.dim, p = nlp.n_eq;
  const Bounds bnd = classify_bounds(nlp);
  const double tau = opts.fraction_to_boundary;
  const double mu_min = opts.tol_kkt / 10.0;

  Vec w = interiorize(nlp, bnd, w0);
  Vec zL = Vec::Zero(dim), zU = Vec::Zero(dim);
  double mu = opts.barrier_init;
  for (Index i = 0; i < dim; ++i) {
    if (bnd.has_lo[i]) zL[i] = std::clamp(mu / (w[i] - nlp.lower[i]), 1e-6, 1e6);
    if (bnd.has_up[i]) zU[i] = std::clamp(mu / (nlp.upper[i] - w[i]), 1e-6, 1e6);
  }

  const FdHessian hess(nlp, nlp.hessian_pattern);
  const bool use_dense = dim < opts.dense_threshold;
  KktSolver kkt;

  auto eval_c = [&](const Vec& v) -> Vec { return p > 0 ? nlp.eq_constraints(v) : Vec(0); };
  auto eval_J = [&](const Vec& v) -> SpMat { return p > 0 ? nlp.eq_jacobian(v) : SpMat(0, dim); };

  double f = nlp.objective(w);
  Vec g = nlp.objective_gradient(w);
  Vec c = eval_c(w);
  SpMat J = eval_J(w);

  Vec y(p);
  if (warm_y && warm_y->size() == p && p > 0) {
    y = *warm_y;
  } else if (p > 0) {
    // Least-squares multipliers: argmin over y of |g - zL + zU + J^T y|.
    std::vector<Triplet> trips;
    trips.reserve(static_cast<size_t>(dim) + 2 * J.nonZeros() + p);
    for (Index i = 0; i < dim; ++i) trips.emplace_back(i, i, 1.0);
    for (int k = 0; k < J.outerSize(); ++k)
      for (SpMat::InnerIterator it(J, k); it; ++it) {
        trips.emplace_back(dim + it.row(), it.col(), it.value());
        trips.emplace_back(it.col(), dim + it.row(), it.value());
      }
    for (Index r = 0; r < p; ++r) trips.emplace_back(dim + r, dim + r, -1e-8);
    KktSolver init;
    Vec rhs = Vec::Zero(dim + p);
    rhs.head(dim) = -(g - zL + zU);
    if (init.factor(trips, dim, p, use_dense)) {
      y = init.solve(rhs).tail(p);
      if (!y.allFinite() || y.lpNorm<Eigen::Infinity>() > 1e8) y.setZero();
    } else {
      y.setZero();
    }
  }

  auto slacks = [&](const Vec& v, Vec& sL, Vec& sU) {
    sL = Vec::Ones(dim);
    sU = Vec::Ones(dim);
    for (Index i = 0; i < dim; ++i) {
      if (bnd.has_lo[i] && !bnd.fixed[i]) sL[i] = v[i] - nlp.lower[i];
      if (bnd.has_up[i] && !bnd.fixed[i]) sU[i] = nlp.upper[i] - v[i];
    }
  };

  auto kkt_error = [&](const Vec& sL, const Vec& sU, double mu_target) {
    Vec rd = g;
    if (p > 0) rd += J.transpose() * y;
    double e = 0.0;
    for (Index i = 0; i < dim; ++i) {
      if (bnd.fixed[i]) continue;  // pinned variables carry no stationarity row
      double ri = rd[i];
      if (bnd.has_lo[i]) ri -= zL[i];
      if (bnd.has_up[i]) ri += zU[i];
      e = std::max(e, std::abs(ri));
      if (bnd.has_lo[i]) e = std::max(e, std::abs(sL[i] * zL[i] - mu_target));
      if (bnd.has_up[i]) e = std::max(e, std::abs(sU[i] * zU[i] - mu_target));
    }
    if (p > 0) e = std::max(e, c.lpNorm<Eigen::Infinity>());
    return e;
  };

  auto barrier_value = [&](const Vec& v, double fv) {
    double phi = fv;
    for (Index i = 0; i < dim; ++i) {
      if (bnd.fixed[i]) continue;
      if (bnd.has_lo[i]) phi -= mu * std::log(v[i] - nlp.lower[i]);
      if (bnd.has_up[i]) phi -= mu * std::log(nlp.upper[i] - v[i]);
    }
    return phi;
  };

  SolveResult res;
  double delta_last = 0.0;
  // Per-row l1 penalty weights.  Exactness only needs nu[r] > |y*[r]| for each
  // row individually; a shared scalar weight sized for the stiffest rows makes
  // the merit reject any step that perturbs a row whose true multiplier is
  // orders of magnitude smaller (a tightly scaled residual budget, say), and
  // the search collapses to tiny steps.  Each weight tracks its own
  // multiplier estimate and is allowed to decay geometrically toward it.
  Vec nu = Vec::Zero(p);
  for (Index r = 0; r < p; ++r) nu[r] = 1.2 * std::abs(y[r]) + 1e-3;
  auto weighted_theta = [&](const Vec& cv) { return nu.dot(cv.cwiseAbs()); };
  int bad_steps = 0;

  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    Vec sL, sU;
    slacks(w, sL, sU);

    const double err0 = kkt_error(sL, sU, 0.0);
    if (opts.verbose)
      std::fprintf(stderr, "ipm iter %3d  f %+.12e  kkt %.3e  mu %.1e  |c| %.3e\n", iter, f, err0,
                   mu, p > 0 ? c.lpNorm<Eigen::Infinity>() : 0.0);
    if (err0 <= opts.tol_kkt) {
      res.status = SolveStatus::optimal;
      break;
    }
    while (mu > mu_min && kkt_error(sL, sU, mu) <= 10.0 * mu)
      mu = std::max(mu_min, mu * opts.barrier_reduction);

    // Assemble and factor the regularized primal-dual system.
    const Vec hvals = hess.evaluate(w, y);
    const auto& pattern = hess.pattern();
    std::vector<Triplet> trips;
    trips.reserve(2 * pattern.size() + static_cast<size_t>(dim) + 2 * J.nonZeros() + p);

    bool accepted = false;
    Vec dw(dim), dy(p);
    double delta = (delta_last > 0.0) ? std::max(opts.reg_min, delta_last / 3.0) : 0.0;
    for (int attempt = 0; attempt < 40; ++attempt) {
      trips.clear();
      for (size_t e = 0; e < pattern.size(); ++e) {
        const auto& [a, b] = pattern[e];
        if (bnd.fixed[a] || bnd.fixed[b]) continue;
        trips.emplace_back(a, b, hvals[e]);
        if (a != b) trips.emplace_back(b, a, hvals[e]);
      }
      for (Index i = 0; i < dim; ++i) {
        if (bnd.fixed[i]) {
          trips.emplace_back(i, i, 1.0);
          continue;
        }
        double d = delta;
        if (bnd.has_lo[i]) d += zL[i] / sL[i];
        if (bnd.has_up[i]) d += zU[i] / sU[i];
        trips.emplace_back(i, i, d);
      }
      for (int k = 0; k < J.outerSize(); ++k)
        for (SpMat::InnerIterator it(J, k); it; ++it) {
          if (bnd.fixed[it.col()]) continue;
          trips.emplace_back(dim + it.row(), it.col(), it.value());
          trips.emplace_back(it.col(), dim + it.row(), it.value());
        }
      for (Index r = 0; r < p; ++r) trips.emplace_back(dim + r, dim + r, -1e-12);

      if (kkt.factor(trips, dim, p, use_dense)) {
        Vec rhs(dim + p);
        for (Index i = 0; i < dim; ++i) {
          if (bnd.fixed[i]) {
            rhs[i] = 0.0;
            continue;
          }
          double ri = g[i];
          if (bnd.has_lo[i]) ri -= mu / sL[i];
          if (bnd.has_up[i]) ri += mu / sU[i];
          rhs[i] = -ri;
        }
        if (p > 0) {
          rhs.head(dim) -= J.transpose() * y;
          rhs.tail(p) = -c;
        }
        const Vec sol = kkt.solve(rhs);
        if (sol.allFinite()) {
          dw = sol.head(dim);
          dy = sol.tail(p);
          accepted = true;
          delta_last = delta;
          break;
        }
      }
      delta = (delta == 0.0) ? std::max(opts.reg_min, opts.reg_init * std::max(mu, 1e-6))
                             : delta * 10.0;
      if (delta > opts.reg_max) break;
    }
    if (!accepted) {
      res.status = SolveStatus::numerical_failure;
      break;
    }
    for (Index i = 0; i < dim; ++i)
      if (bnd.fixed[i]) dw[i] = 0.0;

    // Dual directions recovered from the eliminated bound rows.
    Vec dzL = Vec::Zero(dim), dzU = Vec::Zero(dim);
    for (Index i = 0; i < dim; ++i) {
      if (bnd.fixed[i]) continue;
      if (bnd.has_lo[i]) dzL[i] = mu / sL[i] - zL[i] - zL[i] / sL[i] * dw[i];
      if (bnd.has_up[i]) dzU[i] = mu / sU[i] - zU[i] + zU[i] / sU[i] * dw[i];
    }

    // Fraction-to-boundary caps.
    double a_pr = 1.0, a_du = 1.0;
    for (Index i = 0; i < dim; ++i) {
      if (bnd.fixed[i]) continue;
      if (bnd.has_lo[i] && dw[i] < 0) a_pr = std::min(a_pr, -tau * sL[i] / dw[i]);
      if (bnd.has_up[i] && dw[i] > 0) a_pr = std::min(a_pr, tau * sU[i] / dw[i]);
      if (bnd.has_lo[i] && dzL[i] < 0) a_du = std::min(a_du, -tau * zL[i] / dzL[i]);
      if (bnd.has_up[i] && dzU[i] < 0) a_du = std::min(a_du, -tau * zU[i] / dzU[i]);
    }

    // Backtracking line search on the l1 exact-penalty merit function.
    for (Index r = 0; r < p; ++r) {
      const double req = 1.2 * std::abs(y[r] + dy[r]) + 1e-8;
      nu[r] = (req > nu[r]) ? req : std::max(req, 0.2 * nu[r]);
    }
    const double theta0 = p > 0 ? weighted_theta(c) : 0.0;
    Vec gbar = g;
    for (Index i = 0; i < dim; ++i) {
      if (bnd.fixed[i]) continue;
      if (bnd.has_lo[i]) gbar[i] -= mu / sL[i];
      if (bnd.has_up[i]) gbar[i] += mu / sU[i];
    }
    const double ddir = gbar.dot(dw) - theta0;
    const double phi0 = barrier_value(w, f) + theta0;

    double alpha = a_pr;
    bool ls_ok = false;
    Vec w_trial;
    double f_trial = 0.0;
    Vec c_trial;
    for (int bt = 0; bt < 40; ++bt) {
      w_trial = w + alpha * dw;
      bool interior = true;
      for (Index i = 0; i < dim && interior; ++i) {
        if (bnd.fixed[i]) continue;
        if (bnd.has_lo[i] && w_trial[i] <= nlp.lower[i]) interior = false;
        if (bnd.has_up[i] && w_trial[i] >= nlp.upper[i]) interior = false;
      }
      if (interior) {
        f_trial = nlp.objective(w_trial);
        c_trial = eval_c(w_trial);
        const double theta_t = p > 0 ? weighted_theta(c_trial) : 0.0;
        const double phi_t = barrier_value(w_trial, f_trial) + theta_t;
        const double armijo =
            (ddir < 0) ? phi0 + 1e-4 * alpha * ddir : phi0 + 1e-12 * std::abs(phi0) + 1e-12;
        if (std::isfinite(phi_t) && phi_t <= armijo) {
          ls_ok = true;
          break;
        }
        if (bt == 0 && p > 0) {
          // Second-order corrections: when the full step fails because the
          // constraints curve away from their linearization (for instance a
          // tightly budgeted residual row), restore them at the trial point
          // with the already-factored system instead of shrinking alpha.
          Vec w_s = w_trial, c_s = c_trial;
          for (int so = 0; so < 3; ++so) {
            Vec rhs_soc = Vec::Zero(dim + p);
            rhs_soc.tail(p) = -c_s;
            const Vec sol_soc = kkt.solve(rhs_soc);
            if (!sol_soc.allFinite()) break;
            Vec dcor = sol_soc.head(dim);
            for (Index i = 0; i < dim; ++i)
              if (bnd.fixed[i]) dcor[i] = 0.0;
            double a_c = 1.0;
            for (Index i = 0; i < dim; ++i) {
              if (bnd.fixed[i]) continue;
              if (bnd.has_lo[i] && dcor[i] < 0)
                a_c = std::min(a_c, -tau * (w_s[i] - nlp.lower[i]) / dcor[i]);
              if (bnd.has_up[i] && dcor[i] > 0)
                a_c = std::min(a_c, tau * (nlp.upper[i] - w_s[i]) / dcor[i]);
            }
            Vec w_c = w_s + a_c * dcor;
            const double f_c = nlp.objective(w_c);
            Vec c_c = eval_c(w_c);
            const double phi_c = barrier_value(w_c, f_c) + weighted_theta(c_c);
            if (std::isfinite(phi_c) && phi_c <= armijo) {
              w_trial = std::move(w_c);
              f_trial = f_c;
              c_trial = std::move(c_c);
              ls_ok = true;
              break;
            }
            if (!std::isfinite(phi_c) || weighted_theta(c_c) >= 0.99 * weighted_theta(c_s)) break;
            w_s = std::move(w_c);
            c_s = std::move(c_c);
          }
          if (ls_ok) break;
        }
      }
      alpha *= 0.5;
    }
    if (!ls_ok) {
      if (++bad_steps >= 8) {
        const double cv = p > 0 ? c.lpNorm<Eigen::Infinity>() : 0.0;
        const double nu_max = p > 0 ? nu.maxCoeff() : 0.0;
        res.status = (nu_max > 1e9 && cv > std::sqrt(opts.tol_kkt)) ? SolveStatus::infeasible
                                                                    : SolveStatus::numerical_failure;
        break;
      }
      // Take the guarded step anyway; the next factorization gets a
      // larger inertia shift through delta_last.
      delta_last = std::max(delta_last, opts.reg_init);
      w_trial = w + (a_pr * 1e-4) * dw;
      f_trial = nlp.objective(w_trial);
      c_trial = eval_c(w_trial);
      alpha = a_pr * 1e-4;
    } else {
      bad_steps = 0;
    }

    w = w_trial;
    f = f_trial;
    if (p > 0) {
      y += alpha * dy;
      c = std::move(c_trial);
    }
    zL += a_du * dzL;
    zU += a_du * dzU;
    g = nlp.objective_gradient(w);
    J = eval_J(w);

    // Keep bound duals compatible with the barrier (sigma safeguard).
    Vec sL2, sU2;
    slacks(w, sL2, sU2);
    constexpr double kSig = 1e10;
    for (Index i = 0; i < dim; ++i) {
      if (bnd.fixed[i]) continue;
      if (bnd.has_lo[i])
        zL[i] = std::clamp(zL[i], mu / (kSig * sL2[i]), kSig * std::max(mu, mu_min) / sL2[i]);
      if (bnd.has_up[i])
        zU[i] = std::clamp(zU[i], mu / (kSig * sU2[i]), kSig * std::max(mu, mu_min) / sU2[i]);
    }
  }

  if (iter >= opts.max_iter) res.status = SolveStatus::max_iter;

  res.w = w;
  res.y = y;
  res.z_lower = zL;
  res.z_upper = zU;
  res.objective = nlp.objective(w);
  res.iterations = iter;
  {
    Vec sL, sU;
    slacks(w, sL, sU);
    f = res.objective;
    g = nlp.objective_gradient(w);
    c = eval_c(w);
    J = eval_J(w);
    res.kkt_residual = kkt_error(sL, sU, 0.0);
    res.constraint_violation = p > 0 ? c.lpNorm<Eigen::Infinity>() : 0.0;
  }
  return res;
}

NlpDerivativeCheck check_derivatives(const NlpProblem& nlp, const Eigen::VectorXd& w_in,
                                     int extra_points, unsigned seed) {
  nlp.validate();
  const Bounds bnd = classify_bounds(nlp);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  NlpDerivativeCheck out;
  auto note = [&](const std::string& which, double analytic, double numeric, bool grad) {
    const double e =
        std::abs(analytic - numeric) / std::max({1.0, std::abs(analytic), std::abs(numeric)});
    double& slot = grad ? out.max_rel_error_gradient : out.max_rel_error_jacobian;
    if (e > slot) {
      slot = e;
      if (e >= out.max_rel_error()) out.worst = which;
    }
  };

  for (int pt = 0; pt <= extra_points; ++pt) {
    Vec w = w_in;
    if (pt > 0)
      for (Index i = 0; i < nlp.dim; ++i) w[i] += 0.05 * unit(rng) * std::max(1.0, std::abs(w[i]));
    w = interiorize(nlp, bnd, w);

    const Vec g = nlp.objective_gradient(w);
    Mat Jd;
    if (nlp.n_eq > 0) Jd = Mat(nlp.eq_jacobian(w));
    for (Index j = 0; j < nlp.dim; ++j) {
      if (bnd.fixed[j]) continue;
      const double h = 1e-6 * std::max(1.0, std::abs(w[j]));
      Vec wp = w, wm = w;
      wp[j] += h;
      wm[j] -= h;
      note("gradient[" + std::to_string(j) + "]", g[j],
           (nlp.objective(wp) - nlp.objective(wm)) / (2 * h), true);
      if (nlp.n_eq > 0) {
        const Vec dc = (nlp.eq_constraints(wp) - nlp.eq_constraints(wm)) / (2 * h);
        for (Index r = 0; r < nlp.n_eq; ++r)
          note("jacobian(" + std::to_string(r) + "," + std::to_string(j) + ")", Jd(r, j), dc[r],
               false);
      }
    }
  }
  return out;
}

}  // namespace singarc
