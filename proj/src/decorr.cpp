#include "diffplan/decorr.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>

#include "diffplan/error.hpp"

namespace diffplan::decorr {

using grad::RowMatrix;
using grad::Tensor;
using grad::Var;

namespace {

void check_batch(const Tensor& m) {
  if (m.rank() != 2 || m.rows() < 2 || m.cols() < 2) {
    throw DegenerateBatch("decorrelation needs at least 2 samples and 2 features, got " +
                          grad::shape_string(m.shape()));
  }
}

// Centred columns and the per-column 1/sqrt(eps + var).
struct Normalized {
  RowMatrix centered;
  Eigen::RowVectorXd inv_std;
  RowMatrix n;
};

Normalized normalize(const Tensor& m, double eps) {
  const auto x = m.mat();
  const double B = static_cast<double>(x.rows());
  Normalized r;
  r.centered = x.rowwise() - x.colwise().mean();
  const Eigen::RowVectorXd var = r.centered.array().square().colwise().sum() / B;
  r.inv_std = (var.array() + eps).rsqrt();
  r.n = r.centered.array().rowwise() * r.inv_std.array();
  return r;
}

RowMatrix gram(const RowMatrix& n) {
  RowMatrix c = RowMatrix::Zero(n.cols(), n.cols());
  c.selfadjointView<Eigen::Lower>().rankUpdate(n.transpose());
  c.triangularView<Eigen::StrictlyUpper>() = c.transpose();
  return c;
}

double offdiag_loss(const RowMatrix& corr, double batch) {
  const double d = static_cast<double>(corr.rows());
  const double off = corr.squaredNorm() - corr.diagonal().squaredNorm();
  return off / (d * (d - 1.0)) / batch;
}

}  // namespace

Tensor normalize_columns(const Tensor& m, double eps) {
  check_batch(m);
  Tensor out(m.shape());
  out.mat() = normalize(m, eps).n;
  return out;
}

Tensor corr_matrix(const Tensor& m, double eps) {
  check_batch(m);
  Tensor out({m.cols(), m.cols()});
  out.mat() = gram(normalize(m, eps).n);
  return out;
}

double decorr_loss_value(const Tensor& m, double eps) {
  check_batch(m);
  return offdiag_loss(gram(normalize(m, eps).n), static_cast<double>(m.rows()));
}

Var decorr_loss(Var m, double eps) {
  const Tensor& x = m.value();
  check_batch(x);
  auto norm = std::make_shared<Normalized>(normalize(x, eps));
  auto corr = std::make_shared<RowMatrix>(gram(norm->n));
  const double B = static_cast<double>(x.rows());
  const double loss = offdiag_loss(*corr, B);
  return m.graph->record(Tensor::scalar(loss), {m}, [m = m.id, norm, corr, B](grad::Graph& g, std::size_t self) {
    const double go = g.grad(self)[0];
    const double d = static_cast<double>(corr->rows());
    RowMatrix G = (2.0 * go / (B * d * (d - 1.0))) * *corr;
    G.diagonal().setZero();
    const RowMatrix dn = 2.0 * norm->n * G;
    // Through the per-column scale s = (eps + var)^(-1/2), var = mean(C^2).
    const Eigen::RowVectorXd ds = (dn.array() * norm->centered.array()).colwise().sum();
    const Eigen::RowVectorXd dvar = -0.5 * ds.array() * norm->inv_std.array().cube();
    RowMatrix dc = dn.array().rowwise() * norm->inv_std.array();
    dc.array() += (2.0 / B) * (norm->centered.array().rowwise() * dvar.array());
    g.grad(m).mat() += dc.rowwise() - dc.colwise().mean();
  });
}

double combined_loss(double l_diff, double l_rep, double beta) { return l_diff + beta * l_rep; }

Var combined_loss(Var l_diff, Var l_rep, double beta) { return grad::add(l_diff, grad::scale(l_rep, beta)); }

std::vector<double> singular_spectrum(const Tensor& corr, std::size_t k) {
  if (corr.rank() != 2 || corr.rows() != corr.cols()) throw ShapeMismatch("correlation matrix must be square");
  if (k > corr.rows()) throw ShapeMismatch("asked for more singular values than the matrix has");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(Eigen::MatrixXd(corr.mat()), Eigen::EigenvaluesOnly);
  std::vector<double> s(static_cast<std::size_t>(solver.eigenvalues().size()));
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::abs(solver.eigenvalues()[static_cast<Eigen::Index>(i)]);
  std::sort(s.begin(), s.end(), std::greater<>());
  s.resize(k);
  return s;
}

double mean_abs_offdiag_correlation(const Tensor& m, double eps) {
  check_batch(m);
  const RowMatrix corr = gram(normalize(m, eps).n);
  const double d = static_cast<double>(corr.rows());
  const double off = corr.cwiseAbs().sum() - corr.diagonal().cwiseAbs().sum();
  return off / (d * (d - 1.0)) / static_cast<double>(m.rows());
}

}  // namespace diffplan::decorr
