#include "crowdsense/norms.hpp"

#include <Eigen/SVD>

namespace crowdsense {

double vector_norm(const Eigen::VectorXd& v, Norm norm) {
  switch (norm) {
    case Norm::one:
      return v.lpNorm<1>();
    case Norm::two:
      return v.norm();
    case Norm::max:
      return v.lpNorm<Eigen::Infinity>();
  }
  return v.norm();
}

double operator_norm(const Eigen::MatrixXd& a, Norm norm) {
  switch (norm) {
    case Norm::one:
      return a.cwiseAbs().colwise().sum().maxCoeff();
    case Norm::two: {
      if (a.rows() == 1 && a.cols() == 1) return std::abs(a(0, 0));
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
      return svd.singularValues()(0);
    }
    case Norm::max:
      return a.cwiseAbs().rowwise().sum().maxCoeff();
  }
  return 0.0;
}

const char* norm_name(Norm norm) {
  switch (norm) {
    case Norm::one:
      return "1";
    case Norm::two:
      return "2";
    case Norm::max:
      return "max";
  }
  return "?";
}

}  // namespace crowdsense
