#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "spike/mesh.hpp"
#include "spike/profile.hpp"

namespace spike {

/// <u,v>_eps = eps^-n (eps^2 v^T K u + sum_i w_i u_i v_i), n = 2.
double discrete_inner(const DiscreteDomain& d, const Eigen::VectorXd& u, const Eigen::VectorXd& v, double eps);
double discrete_norm(const DiscreteDomain& d, const Eigen::VectorXd& u, double eps);
/// |v|_{q,eps} = (eps^-n sum_i w_i |v_i|^q)^(1/q).
double lebesgue_norm(const DiscreteDomain& d, const Eigen::VectorXd& v, double q, double eps);

/// Factorised i*_eps: u solves (eps^2 K + M) u = M v, i.e. (-eps^2 Lap_h + I) u = v.
class IStar {
 public:
  IStar(const DiscreteDomain& d, double eps);
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const;
  double eps() const { return eps_; }

 private:
  const DiscreteDomain* d_;
  double eps_;
  std::shared_ptr<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>> llt_;
};

Eigen::VectorXd apply_istar(const DiscreteDomain& d, double eps, const Eigen::VectorXd& v);

/// |<u,phi>_eps - eps^-n sum w v phi| relative to the larger of the two terms.
double weak_identity_residual(const DiscreteDomain& d, double eps, const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                              const Eigen::VectorXd& phi);

/// Nodal samples of W_{eps,xi} and of Z^1_{eps,xi}.
Eigen::VectorXd sample_ansatz(const DiscreteDomain& d, const GroundStateProfile& prof, double eps,
                              const BoundaryPoint& xi, double R_cut);
Eigen::VectorXd sample_basis(const DiscreteDomain& d, const GroundStateProfile& prof, double eps,
                             const BoundaryPoint& xi, double R_cut);

struct RemainderReport {
  double eps = 0;
  double norm = 0;                  ///< |Pi_perp r|_eps
  double raw_norm = 0;              ///< |r|_eps before projection
  double projection_residual = 0;   ///< max_i |<Pi_perp r, Z^i>_eps| / (|r|_eps |Z^i|_eps)
  double gram_condition = 0;        ///< smallest/largest eigenvalue of the normalised Gram matrix
  std::size_t nodes = 0;
};

/// r = i*_eps(f(W)) - W with the span of Z^i projected out in <.,.>_eps.
RemainderReport remainder_norm(const DiscreteDomain& d, double eps, const BoundaryPoint& xi,
                               const GroundStateProfile& prof, double R_cut);

struct RemainderStudy {
  std::vector<RemainderReport> rows;
  double slope = 0;      ///< least squares slope of log norm against log eps
  double predicted = 0;  ///< 1 + n/p'
};

/// One locally refined mesh per eps (spike_mesh_options), far-field size h_mesh.
RemainderStudy remainder_study(const BoundaryManifold& m, const GroundStateProfile& prof, const BoundaryPoint& xi,
                               const std::vector<double>& eps_list, double h_mesh, double R_cut);

/// J_eps(u) = eps^-n (eps^2/2 u^T K u + 1/2 sum w u^2 - 1/p sum w (u+)^p).
double discrete_energy(const DiscreteDomain& d, const Eigen::VectorXd& u, double eps, double p);

struct NewtonOptions {
  double tol = 1e-9;  ///< max-norm of -eps^2 Lap_h u + u - (u+)^(p-1)
  int max_iter = 50;
  /// Called after every accepted step with (iteration, residual, step length).
  std::function<void(int, double, double)> monitor;
};

struct SolveReport {
  double eps = 0;
  bool converged = false;
  int iterations = 0;
  double residual = 0;
  double min_u = 0, max_u = 0;
  std::size_t peak_node = 0;
  Vec2 peak_x = Vec2::Zero();
  BoundaryPoint foot;          ///< boundary foot of the peak, parabolic between boundary nodes
  Vec2 foot_x = Vec2::Zero();
  BoundaryPoint nearest_critical;
  double critical_distance = 0;  ///< |foot - nearest critical point of H|, NaN if H is constant
  double energy = 0;
  std::size_t nodes = 0;
};

/// Damped Newton for F(u) = -eps^2 Lap_h u + u - (u+)^(p-1). Throws Diverged when the line
/// search is exhausted and ConvergedToTrivial when the limit has max-norm below 1e-6.
SolveReport newton_solve(const DiscreteDomain& d, double eps, double p, Eigen::VectorXd& u,
                         const NewtonOptions& opt = {});

struct LocalizeReport {
  BoundaryPoint xi;        ///< zero of the reduced equation
  double c = 0;            ///< Z-coefficient at xi
  int evaluations = 0;     ///< bordered solves
  std::vector<double> t_history, c_history;
};

/// Lyapunov-Schmidt localisation: for fixed xi solves F(u) = c M Z^1 with <u - W, Z^1>_eps = 0
/// (bordered Newton), then marches xi downhill in J(u_xi) until c changes sign and closes the
/// bracket by Illinois regula falsi on c.
/// On return u holds the constrained solution at the final xi.
LocalizeReport localize_spike(const DiscreteDomain& d, const GroundStateProfile& prof, double eps,
                              const BoundaryPoint& xi0, double R_cut, Eigen::VectorXd& u,
                              const NewtonOptions& opt = {});

struct ContinuationOptions {
  double h_mesh = 0.01;
  double R_cut = 0.0;  ///< 0 selects the default Fermi chart radius
  NewtonOptions newton;
};

struct ContinuationStage {
  SolveReport report;
  double energy_ansatz = 0;  ///< discrete J_eps(W_{eps, foot})
  double energy_gap = 0;     ///< |J_eps(u) - J_eps(W_{eps,foot})| / eps
};

struct ContinuationResult {
  std::vector<ContinuationStage> stages;
  bool complete = false;
  std::string failure;  ///< error of the first failed stage
  std::shared_ptr<DiscreteDomain> last_domain;
  Eigen::VectorXd last_solution;
};

/// Each stage remeshes around the current centre (xi, then the previous peak foot), localises the
/// spike there and finishes with newton_solve. On a constant-curvature boundary localisation is
/// skipped and Newton starts from W_{eps,centre}.
ContinuationResult continuation(const BoundaryManifold& m, const GroundStateProfile& prof,
                                const std::vector<double>& eps_list, const BoundaryPoint& xi,
                                const ContinuationOptions& opt = {});

}  // namespace spike
