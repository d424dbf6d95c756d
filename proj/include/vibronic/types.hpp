#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace vibronic {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

/// Raised when propagation produces non-finite or runaway auxiliary operators.
class NumericalInstability : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Largest |M - M^dagger| element.
inline double hermiticity_deviation(const CMatrix& m) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

}  // namespace vibronic
