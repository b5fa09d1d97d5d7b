#include "pkg/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pkg/error.hpp"

namespace pkg {

namespace {

[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b) {
  std::ostringstream os;
  os << op << ": incompatible shapes " << a.rows() << "x" << a.cols() << " and "
     << b.rows() << "x" << b.cols();
  raise(ErrorCode::Shape, os.str());
}

}  // namespace

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(rows.size(), rows.size() ? rows.begin()->size() : 0);
  size_t r = 0;
  for (const auto& row : rows) {
    if (row.size() != m.cols()) {
      raise(ErrorCode::Shape, "from_rows: ragged initializer");
    }
    size_t c = 0;
    for (double v : row) m.at(r, c++) = v;
    ++r;
  }
  return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) shape_error("matmul", a, b);
  Matrix out(a.rows(), b.cols());
  for (size_t i = 0; i < a.rows(); ++i) {
    const double* arow = a.row(i);
    double* orow = out.row(i);
    for (size_t k = 0; k < a.cols(); ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = b.row(k);
      for (size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) shape_error("add", a, b);
  Matrix out = a;
  for (size_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
  return out;
}

Matrix scale(const Matrix& a, double s) {
  Matrix out = a;
  for (double& v : out.data()) v *= s;
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (size_t i = 0; i < a.rows(); ++i)
    for (size_t j = 0; j < a.cols(); ++j) out.at(j, i) = a.at(i, j);
  return out;
}

Matrix concat_cols(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) shape_error("concat_cols", a, b);
  Matrix out(a.rows(), a.cols() + b.cols());
  for (size_t i = 0; i < a.rows(); ++i) {
    std::copy(a.row(i), a.row(i) + a.cols(), out.row(i));
    std::copy(b.row(i), b.row(i) + b.cols(), out.row(i) + a.cols());
  }
  return out;
}

Matrix row_mean(const Matrix& m, std::span<const int> rows) {
  Matrix out(1, m.cols());
  if (rows.empty()) return out;
  for (int r : rows) {
    if (r < 0 || static_cast<size_t>(r) >= m.rows()) {
      raise(ErrorCode::Shape, "row_mean: row index out of range");
    }
    const double* src = m.row(static_cast<size_t>(r));
    for (size_t j = 0; j < m.cols(); ++j) out.data()[j] += src[j];
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  for (double& v : out.data()) v *= inv;
  return out;
}

Matrix relu(const Matrix& x) {
  Matrix out = x;
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return out;
}

Matrix relu_backward(const Matrix& x, const Matrix& upstream) {
  if (!x.same_shape(upstream)) shape_error("relu_backward", x, upstream);
  Matrix out = upstream;
  for (size_t i = 0; i < out.size(); ++i) {
    if (x.data()[i] <= 0.0) out.data()[i] = 0.0;
  }
  return out;
}

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double sigmoid_backward(double x, double upstream) {
  const double s = sigmoid(x);
  return upstream * s * (1.0 - s);
}

double clamp_prob(double p) {
  return std::clamp(p, kProbClamp, 1.0 - kProbClamp);
}

BceResult bce_loss(double p, int label, double weight) {
  const double pc = clamp_prob(p);
  const double loss =
      label ? -std::log(pc) : -std::log(1.0 - pc);
  return {weight * loss, weight * (p - static_cast<double>(label))};
}

void Param::zero_grad() {
  std::fill(grad.data().begin(), grad.data().end(), 0.0);
}

void adam_step(Param& p, const AdamConfig& cfg) {
  for (double g : p.grad.data()) {
    if (!std::isfinite(g)) {
      raise(ErrorCode::Numeric, "adam_step: non-finite gradient");
    }
  }
  p.step_count += 1;
  const double b1t = std::pow(cfg.beta1, static_cast<double>(p.step_count));
  const double b2t = std::pow(cfg.beta2, static_cast<double>(p.step_count));
  auto& m = p.adam_m.data();
  auto& v = p.adam_v.data();
  auto& x = p.value.data();
  const auto& g = p.grad.data();
  for (size_t i = 0; i < x.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    const double mhat = m[i] / (1.0 - b1t);
    const double vhat = v[i] / (1.0 - b2t);
    x[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
  p.zero_grad();
}

double finite_diff_check(const std::function<double()>& loss, Param& p, double h) {
  const std::vector<double> analytic = p.grad.data();
  auto& x = p.value.data();
  double max_rel = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double fp = loss();
    x[i] = saved - h;
    const double fm = loss();
    x[i] = saved;
    const double numeric = (fp - fm) / (2.0 * h);
    const double denom = std::max({std::fabs(numeric), std::fabs(analytic[i]), 1e-8});
    max_rel = std::max(max_rel, std::fabs(numeric - analytic[i]) / denom);
  }
  return max_rel;
}

}  // namespace pkg
