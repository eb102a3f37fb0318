#pragma once

#include <Eigen/Core>

namespace crowdsense {

// Norm used for state distances and their induced operator norms. Everything
// that measures distances between states (coupling, transport ground metric,
// contraction estimates) takes one of these; Euclidean is the default.
enum class Norm { one, two, max };

double vector_norm(const Eigen::VectorXd& v, Norm norm = Norm::two);

// Induced operator norm: max column sum (one), largest singular value (two),
// max row sum (max).
double operator_norm(const Eigen::MatrixXd& a, Norm norm = Norm::two);

const char* norm_name(Norm norm);

}  // namespace crowdsense
