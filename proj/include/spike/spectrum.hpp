#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <string>
#include <vector>

#include "spike/parallel.hpp"
#include "spike/profile.hpp"

namespace spike {

/// Nodes of [-L,L]^(n-1) x [0,L] with step h. The tangential axes carry 2M-1 nodes
/// (the Dirichlet faces |z_i| = L are not unknowns), the normal axis M nodes starting on the
/// Neumann face z_n = 0. Linear index: ((i1 * nt + i2) * nn + j), i2 absent for n = 2.
struct HalfBoxGrid {
  int n = 2;
  double L = 14.0;
  double h = 0.1;
  int nt = 0;  ///< nodes per tangential axis
  int nn = 0;  ///< nodes on the normal axis

  /// Throws InvalidArgument unless n in {2,3}, L >= 12 and h <= L/60.
  static HalfBoxGrid make(int n, double L, double h);

  std::size_t size() const;
  double tangential(int i) const { return (i - (nt - 1) / 2) * h; }
  double normal(int j) const { return j * h; }
  /// Coordinates (z_1, ..., z_n) of node idx; entries beyond n are zero.
  void coords(std::size_t idx, double z[3]) const;
};

/// Symmetrised discretisation S = B^(1/2) A B^(-1/2) of -Lap + 1 - (p-1) U^(p-2) on the half
/// box, with A the fourth-order five-point-per-axis stencil, even reflection at z_n = 0,
/// homogeneous Dirichlet data beyond the outer faces, and B the trapezoid weight (1/2 on the face).
class LinearizedOperator {
 public:
  LinearizedOperator(const GroundStateProfile& prof, const HalfBoxGrid& grid);

  const HalfBoxGrid& grid() const { return grid_; }
  const GroundStateProfile& profile() const { return *prof_; }
  std::size_t size() const { return grid_.size(); }

  /// y = S x, matrix-free.
  void apply(const double* x, double* y, Exec exec) const;
  Eigen::MatrixXd apply(const Eigen::MatrixXd& X, Exec exec) const;
  /// y = A u (the unsymmetrised difference operator acting on nodal values).
  Eigen::VectorXd apply_unsymmetrized(const Eigen::VectorXd& u, Exec exec = Exec::Serial) const;
  /// Assembled S, the serial reference for apply().
  Eigen::SparseMatrix<double> to_sparse() const;
  /// max |S_ij - S_ji| of the assembled matrix.
  double symmetry_defect() const;

  /// Diagonal 1 - (p-1) U^(p-2) at the nodes.
  const Eigen::VectorXd& potential() const { return pot_; }
  /// B^(1/2) u, maps nodal values to the symmetric representation; from_symmetric inverts it.
  Eigen::VectorXd to_symmetric(const Eigen::VectorXd& u) const;
  Eigen::VectorXd from_symmetric(const Eigen::VectorXd& v) const;

  /// W = (S0)^(-1) R with S0 the free operator -Lap_h + I (exact, separable).
  Eigen::MatrixXd precondition(const Eigen::MatrixXd& R, Exec exec) const;

  /// Nodal samples of dU/dz_i (i = 0..n-1, i = n-1 is the normal direction).
  Eigen::VectorXd sample_derivative(int i) const;

 private:
  struct Row {
    int col[5];
    double coef[5];
    int count = 0;
  };
  double tangential_coef(int offset) const;

  const GroundStateProfile* prof_;
  HalfBoxGrid grid_;
  Eigen::VectorXd pot_;
  Eigen::VectorXd sqrt_w_;
  std::vector<Row> normal_rows_;  ///< symmetrised normal-axis stencil rows
  Eigen::MatrixXd qt_, qn_;        ///< eigenvectors of the 1-D axis operators
  Eigen::VectorXd lt_, ln_;
};

LinearizedOperator assemble_linearized(const GroundStateProfile& prof, const HalfBoxGrid& grid);

struct EigenOptions {
  int max_iter = 500;
  double tol = 1e-7;  ///< residual norm of unit eigenvectors
  int guard = 4;      ///< extra block vectors beyond the requested count
  Exec exec = Exec::Parallel;
};

struct EigenResult {
  Eigen::VectorXd values;   ///< ascending
  Eigen::MatrixXd vectors;  ///< orthonormal columns in the symmetric representation
  Eigen::VectorXd residuals;
  int iterations = 0;
};

/// Lowest k eigenpairs of S by preconditioned block iteration (LOBPCG). The starting block
/// is a fixed hash of the node index. Columns of `constraints` (orthonormal) are projected out.
EigenResult lowest_eigenpairs(const LinearizedOperator& op, int k, const Eigen::MatrixXd& constraints = {},
                              const EigenOptions& opt = {});

/// 5e-3 at (h = 0.1, L = 14), scaled with h^2 + e^(-L).
double default_kernel_tol(const HalfBoxGrid& g);

struct SpectrumReport {
  HalfBoxGrid grid;
  std::vector<double> eigenvalues;  ///< lowest k, ascending
  std::vector<double> residuals;
  double kernel_tol = 0;
  std::vector<int> kernel_indices;
  /// Cosines of each eigenvector with dU/dz_i (tangential, per i) and with dU/dz_n.
  std::vector<std::vector<double>> overlap_tangential;
  std::vector<double> overlap_normal;
  /// Kernel cluster rotated onto the tangential derivatives: per-vector cosine and parity.
  std::vector<double> kernel_overlap;
  double kernel_overlap_normal = 0;  ///< largest cosine of the cluster span with dU/dz_n
  std::vector<std::string> parity;   ///< e.g. "odd-z1,even-z2,even-zn"
  double gap = 0;                    ///< smallest |lambda| outside the cluster
  Eigen::MatrixXd kernel_vectors;    ///< symmetric representation, rotated
  int iterations = 0;
};

/// Requires k >= n+1. kernel_tol <= 0 selects default_kernel_tol.
SpectrumReport kernel_report(const LinearizedOperator& op, int k, double kernel_tol = 0.0, const EigenOptions& opt = {});

/// Smallest |lambda| of S restricted to the orthogonal complement of `kernel_vectors`
/// (symmetric representation), computed by a separate constrained solve.
double coercivity_gap(const LinearizedOperator& op, const Eigen::MatrixXd& kernel_vectors, const EigenOptions& opt = {});

}  // namespace spike
