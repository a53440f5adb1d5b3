#include "radloc/small_qp.hpp"

#include <cassert>
#include <vector>

namespace radloc::init {

namespace {

bool NextCombination(std::vector<int>& idx, int m) {
  const int k = static_cast<int>(idx.size());
  int i = k - 1;
  while (i >= 0 && idx[i] == m - k + i) --i;
  if (i < 0) return false;
  ++idx[i];
  for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  return true;
}

}  // namespace

std::optional<Eigen::VectorXd> solve_small_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& g,
                                              const Eigen::MatrixXd& A, const Eigen::VectorXd& c,
                                              double feasibility_tol) {
  const int n = static_cast<int>(H.rows());
  const int m = static_cast<int>(A.rows());
  assert(n <= 3 && A.cols() == n && c.size() == m);

  const Eigen::LLT<Eigen::MatrixXd> chol(H);
  if (chol.info() != Eigen::Success) return std::nullopt;
  const Eigen::VectorXd hinv_g = chol.solve(g);
  const Eigen::MatrixXd hinv_at = chol.solve(A.transpose());  // n x m

  auto feasible = [&](const Eigen::VectorXd& x) {
    for (int j = 0; j < m; ++j) {
      const double scale = 1.0 + std::abs(c(j)) + A.row(j).norm() * x.norm();
      if (A.row(j).dot(x) < c(j) - feasibility_tol * scale) return false;
    }
    return true;
  };

  {
    const Eigen::VectorXd x = -hinv_g;
    if (feasible(x)) return x;
  }

  for (int k = 1; k <= std::min(n, m); ++k) {
    std::vector<int> w(k);
    for (int i = 0; i < k; ++i) w[i] = i;
    do {
      Eigen::MatrixXd M(k, k);
      Eigen::VectorXd rhs(k);
      for (int a = 0; a < k; ++a) {
        for (int b = 0; b < k; ++b) M(a, b) = A.row(w[a]).dot(hinv_at.col(w[b]));
        rhs(a) = c(w[a]) + A.row(w[a]).dot(hinv_g);
      }
      const Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
      if (lu.rank() < k) continue;
      const Eigen::VectorXd lambda = lu.solve(rhs);
      if ((lambda.array() < -1e-12 * (1.0 + lambda.cwiseAbs().maxCoeff())).any()) continue;
      Eigen::VectorXd x = -hinv_g;
      for (int a = 0; a < k; ++a) x += hinv_at.col(w[a]) * lambda(a);
      if (feasible(x)) return x;
    } while (NextCombination(w, m));
  }
  return std::nullopt;
}

}  // namespace radloc::init
