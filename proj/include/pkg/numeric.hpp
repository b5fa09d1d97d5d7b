#pragma once

#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

namespace pkg {

/// Dense row-major matrix of 64-bit floats.
class Matrix {
 public:
  Matrix() = default;
  Matrix(size_t rows, size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  size_t size() const { return data_.size(); }

  double& at(size_t r, size_t c) { return data_[r * cols_ + c]; }
  double at(size_t r, size_t c) const { return data_[r * cols_ + c]; }
  double* row(size_t r) { return data_.data() + r * cols_; }
  const double* row(size_t r) const { return data_.data() + r * cols_; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }
  bool operator==(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

 private:
  size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix add(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
Matrix transpose(const Matrix& a);
Matrix concat_cols(const Matrix& a, const Matrix& b);

/// Mean of the selected rows as a 1 x cols matrix.
/// Empty selection yields the zero vector (isolated-node convention).
Matrix row_mean(const Matrix& m, std::span<const int> rows);

Matrix relu(const Matrix& x);
/// dL/dx given the pre-activation x and dL/dy.
Matrix relu_backward(const Matrix& x, const Matrix& upstream);

double sigmoid(double x);
double sigmoid_backward(double x, double upstream);

inline constexpr double kProbClamp = 1e-12;
double clamp_prob(double p);

struct BceResult {
  double loss;
  double dlogit;  // dL/dlogit where p = sigmoid(logit)
};
/// Binary cross-entropy; p is clamped to [1e-12, 1-1e-12] before the logs.
/// weight scales both the loss and the gradient.
BceResult bce_loss(double p, int label, double weight = 1.0);

/// Trainable tensor with its gradient and Adam state.
struct Param {
  Matrix value, grad, adam_m, adam_v;
  int64_t step_count = 0;

  Param() = default;
  explicit Param(Matrix v)
      : value(std::move(v)),
        grad(value.rows(), value.cols()),
        adam_m(value.rows(), value.cols()),
        adam_v(value.rows(), value.cols()) {}
  void zero_grad();
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam update; zeroes the gradient afterwards.
/// Non-finite gradient entries raise NumericError.
void adam_step(Param& p, const AdamConfig& cfg);

/// Central-difference check of p.grad against loss(); returns the max
/// relative error over coordinates. loss() must be a pure function of
/// p.value and p.grad must already hold the analytic gradient.
double finite_diff_check(const std::function<double()>& loss, Param& p,
                         double h = 1e-5);

}  // namespace pkg
