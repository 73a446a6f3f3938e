#include "steep/linalg.hpp"

#include <Eigen/Dense>
#include <stdexcept>

namespace steep {

bool rank_deficient(const std::vector<std::vector<double>>& vectors, double threshold) {
  if (vectors.empty()) throw std::invalid_argument("need at least one vector");
  int n = static_cast<int>(vectors[0].size());
  int k = static_cast<int>(vectors.size());
  Eigen::MatrixXd m(n, k);
  for (int j = 0; j < k; ++j) {
    if (static_cast<int>(vectors[j].size()) != n)
      throw std::invalid_argument("vector dimension mismatch");
    for (int i = 0; i < n; ++i) m(i, j) = vectors[j][i];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  double smax = s(0);
  double smin = s(s.size() - 1);
  if (k > n) return true;
  if (smax == 0.0) return true;
  return smin <= threshold * smax;
}

std::vector<std::vector<double>> orthonormal_complement(const std::vector<double>& g) {
  int n = static_cast<int>(g.size());
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = g[i];
  double norm = v.norm();
  if (norm == 0.0) throw std::invalid_argument("zero vector has no well-defined complement");
  // Householder reflector mapping e1 to g/|g|; remaining columns span g-perp.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  a.col(0) = v / norm;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ();
  // Ensure the first column is parallel to g (QR may flip sign).
  if (q.col(0).dot(v) < 0) q = -q;
  std::vector<std::vector<double>> out;
  out.reserve(n - 1);
  for (int j = 1; j < n; ++j) {
    std::vector<double> col(n);
    for (int i = 0; i < n; ++i) col[i] = q(i, j);
    out.push_back(std::move(col));
  }
  return out;
}

std::vector<double> symmetric_eigenvalues(const std::vector<std::vector<double>>& m) {
  int n = static_cast<int>(m.size());
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = m[i][j];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = es.eigenvalues()(i);
  return out;
}

double smallest_singular_value(const std::vector<std::vector<double>>& rows) {
  int r = static_cast<int>(rows.size());
  int c = rows.empty() ? 0 : static_cast<int>(rows[0].size());
  Eigen::MatrixXd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rows[i][j];
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

}  // namespace steep
